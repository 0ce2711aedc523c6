//! Criterion benchmarks for the screenwave crate live under `benches/`.
