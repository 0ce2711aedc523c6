//! One pipeline per command. Each writes its tables and returns the checks
//! it ran.

use crate::config::{Command, ExpectedNullity, OperatorSpec, ProblemSpec, RunConfig};
use crate::output::{complex_cells, coord_names, sweep_table, Cell, Table, Writer};
use crate::CliError;
use screenwave::diagnostics::{
    coercivity_scan_S, coercivity_scan_T, continuity_sweep, far_field_directions, nullity_advisor, prefractal_convergence, sharpness_S,
    sharpness_T, Nullity, SweepResult, Verdict, COERCIVITY_SLACK, S_COERCIVITY,
};
use screenwave::operators::{
    assemble_hypersingular, assemble_single_layer, kernel_oracle_single_layer, maue_oracle_hypersingular, OperatorKind,
};
use screenwave::sobolev::WaveContext;
use screenwave::solver::{eval_field, far_field, solve_aperture_H, solve_aperture_I, solve_problem_S, solve_problem_T, Solution};
use screenwave::trace::TraceData;
use screenwave::{build_mesh, BasisKind};

/// Relative algebraic residual above which a solve is reported as failed.
const ALGEBRAIC_RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, verdict: Verdict, detail: String) -> Check {
        Check { name: name.into(), verdict, detail }
    }
}

pub fn run(cmd: Command, cfg: &RunConfig, out: &mut Writer) -> Result<Vec<Check>, CliError> {
    match cmd {
        Command::Solve => solve(cmd, cfg, out, false),
        Command::Aperture => solve(cmd, cfg, out, true),
        Command::Ksweep => ksweep(cmd, cfg, out),
        Command::Coercivity => coercivity(cmd, cfg, out),
        Command::Sharpness => sharpness(cmd, cfg, out),
        Command::Nullity => nullity(cmd, cfg, out),
        Command::OracleCheck => oracle_check(cmd, cfg, out),
        Command::Prefractal => prefractal(cmd, cfg, out),
    }
}

fn solve(cmd: Command, cfg: &RunConfig, out: &mut Writer, aperture: bool) -> Result<Vec<Check>, CliError> {
    let problem = cfg.problem.unwrap_or(if aperture { ProblemSpec::ApertureH } else { ProblemSpec::SoundSoft });
    if aperture != matches!(problem, ProblemSpec::ApertureH | ProblemSpec::ApertureI) {
        let allowed = if aperture { "aperture_h or aperture_i" } else { "sound_soft or sound_hard" };
        return Err(CliError::Config(format!("`problem` must be {allowed} for `{}`", cmd.name())));
    }
    let screen = cfg.screen(cmd)?;
    let k = cfg.k(cmd)?;
    let ctx = WaveContext::new(k)?;
    let inc = cfg.incident(cmd)?;
    let h = cfg.h(k);
    let sol = match problem {
        ProblemSpec::SoundSoft => solve_problem_S(&screen, ctx, &TraceData::sound_soft(inc), h, cfg.tol)?,
        ProblemSpec::SoundHard => solve_problem_T(&screen, ctx, &TraceData::sound_hard(inc), h, cfg.tol)?,
        ProblemSpec::ApertureH => solve_aperture_H(&screen, ctx, &TraceData::aperture_h(inc), h, cfg.tol)?,
        ProblemSpec::ApertureI => solve_aperture_I(&screen, ctx, &TraceData::aperture_i(inc), h, cfg.tol)?,
    };
    emit_solution(&sol, cfg, out)?;
    let r = sol.algebraic_residual();
    Ok(vec![Check::new(
        "algebraic_residual",
        Verdict::from_bool(r <= ALGEBRAIC_RESIDUAL_LIMIT),
        format!("{} dofs, h = {h:.4e}, relative residual {r:.3e} (≤ {ALGEBRAIC_RESIDUAL_LIMIT:.0e})", sol.mesh().len()),
    )])
}

fn emit_solution(sol: &Solution, cfg: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let dim = sol.mesh().dim();
    let mut header = vec!["index".to_string()];
    header.extend(coord_names("y", dim - 1));
    header.extend(["re".to_string(), "im".to_string()]);
    let mut density = Table::new(&header);
    for (i, (b, c)) in sol.mesh().dofs().iter().zip(sol.density().coefficients().iter()).enumerate() {
        let mut row = vec![Cell::Int(i as u64)];
        row.extend(b.center().into_iter().map(Cell::Float));
        row.extend(complex_cells(*c));
        density.push(row);
    }
    out.emit("density.csv", &density)?;

    let mut header = coord_names("x", dim);
    header.extend(["re".to_string(), "im".to_string()]);
    let mut field = Table::new(&header);
    for (x, u) in cfg.field_points.iter().zip(eval_field(sol, &cfg.field_points)?) {
        let mut row: Vec<Cell> = x.iter().map(|&v| Cell::Float(v)).collect();
        row.extend(complex_cells(u));
        field.push(row);
    }
    out.emit("field.csv", &field)?;

    let (dirs, _) = far_field_directions(dim, cfg.far_field_directions);
    let mut header = coord_names("d", dim);
    header.extend(["re".to_string(), "im".to_string()]);
    let mut ff = Table::new(&header);
    for (d, u) in dirs.iter().zip(far_field(sol, &dirs)?) {
        let mut row: Vec<Cell> = d.iter().map(|&v| Cell::Float(v)).collect();
        row.extend(complex_cells(u));
        ff.push(row);
    }
    out.emit("farfield.csv", &ff)
}

fn operator_kind(op: OperatorSpec) -> OperatorKind {
    match op {
        OperatorSpec::SingleLayer => OperatorKind::SingleLayer,
        OperatorSpec::Hypersingular => OperatorKind::Hypersingular,
    }
}

fn sweep_check(r: &SweepResult) -> Check {
    let mut parts: Vec<String> = r.summary.iter().map(|(n, v)| format!("{n} = {v:.6}")).collect();
    if let Some(f) = r.fit {
        parts.push(format!("fit slope {:.4}, R² {:.4}", f.slope, f.r_squared));
    }
    let failed = r.points.iter().filter(|p| !p.pass).count();
    parts.push(format!("{} points, {failed} failing", r.points.len()));
    Check::new(r.name.clone(), r.verdict, parts.join(", "))
}

fn ksweep(cmd: Command, cfg: &RunConfig, out: &mut Writer) -> Result<Vec<Check>, CliError> {
    let screen = cfg.screen(cmd)?;
    let r = continuity_sweep(&screen, operator_kind(cfg.operator(cmd)?), &cfg.k_grid(cmd)?, cfg.mesh_rule(), cfg.tol)?;
    out.emit("ksweep.csv", &sweep_table(&r))?;
    Ok(vec![sweep_check(&r)])
}

fn coercivity(cmd: Command, cfg: &RunConfig, out: &mut Writer) -> Result<Vec<Check>, CliError> {
    let screen = cfg.screen(cmd)?;
    let ks = cfg.k_grid(cmd)?;
    match cfg.operator.unwrap_or(OperatorSpec::SingleLayer) {
        OperatorSpec::SingleLayer => {
            let line = cfg.pass_line.unwrap_or(S_COERCIVITY - COERCIVITY_SLACK);
            let mut table = Table::new(&["k", "sample", "family", "quotient", "pass"]);
            let mut checks = Vec::new();
            for &k in &ks {
                let mesh = build_mesh(&screen, cfg.h(k), BasisKind::P0)?;
                let sys = assemble_single_layer(&mesh, WaveContext::new(k)?, cfg.tol)?;
                let r = coercivity_scan_S(&sys, cfg.samples, cfg.seed)?;
                let mut min = f64::INFINITY;
                for p in &r.points {
                    let q = p.values[0];
                    min = min.min(q);
                    let fam = ["pencil", "bump", "random"][p.values[1] as usize];
                    table.push(vec![
                        Cell::Float(k),
                        Cell::Int(p.params[0] as u64),
                        Cell::Text(fam.into()),
                        Cell::Float(q),
                        Cell::Int((q >= line) as u64),
                    ]);
                }
                checks.push(Check::new(
                    format!("coercivity_S k={k}"),
                    Verdict::from_bool(min >= line),
                    format!("{} dofs, {} samples, min quotient {min:.6} (pass line {line:.6})", mesh.len(), r.points.len()),
                ));
            }
            out.emit("coercivity.csv", &table)?;
            Ok(checks)
        }
        OperatorSpec::Hypersingular => {
            let r = coercivity_scan_T(&screen, &ks, cfg.samples, cfg.seed, cfg.mesh_rule(), cfg.tol)?;
            out.emit("coercivity.csv", &sweep_table(&r))?;
            Ok(vec![sweep_check(&r)])
        }
    }
}

fn sharpness(cmd: Command, cfg: &RunConfig, out: &mut Writer) -> Result<Vec<Check>, CliError> {
    let screen = cfg.screen(cmd)?;
    let ks = cfg.k_grid(cmd)?;
    let r = match cfg.operator(cmd)? {
        OperatorSpec::SingleLayer => {
            let mut dir = vec![0.0; screen.dim() - 1];
            dir[0] = 1.0;
            sharpness_S(&screen, &ks, cfg.modulation.as_deref().unwrap_or(&dir), cfg.mesh_rule(), cfg.tol)?
        }
        OperatorSpec::Hypersingular => sharpness_T(&screen, &ks, cfg.k_asymptotic, cfg.mesh_rule(), cfg.tol)?,
    };
    out.emit("sharpness.csv", &sweep_table(&r))?;
    Ok(vec![sweep_check(&r)])
}

fn nullity_name(n: Nullity) -> &'static str {
    match n {
        Nullity::Null => "null",
        Nullity::NotNull => "not_null",
        Nullity::Undecided => "undecided",
    }
}

fn nullity(cmd: Command, cfg: &RunConfig, out: &mut Writer) -> Result<Vec<Check>, CliError> {
    let spec = cfg.nullity(cmd)?;
    if let Some(e) = &spec.expected {
        if e.len() != spec.s.len() {
            return Err(CliError::Config("`nullity.expected` must have one entry per value of `nullity.s`".into()));
        }
    }
    let mut table = Table::new(&["s", "verdict", "rule"]);
    let mut checks = Vec::new();
    for (i, &s) in spec.s.iter().enumerate() {
        let v = nullity_advisor(spec.set.descriptor(), s)?;
        table.push(vec![Cell::Float(s), Cell::Text(nullity_name(v.verdict).into()), Cell::Text(format!("{:?}", v.rule))]);
        let (verdict, expect) = match spec.expected.as_ref().map(|e| e[i]) {
            Some(e) => {
                let want = match e {
                    ExpectedNullity::Null => Nullity::Null,
                    ExpectedNullity::NotNull => Nullity::NotNull,
                    ExpectedNullity::Undecided => Nullity::Undecided,
                };
                (Verdict::from_bool(want == v.verdict), format!(", expected {}", nullity_name(want)))
            }
            None => (Verdict::Pass, String::new()),
        };
        checks.push(Check::new(format!("nullity s={s}"), verdict, format!("{} by {:?}{expect}", nullity_name(v.verdict), v.rule)));
    }
    out.emit("nullity.csv", &table)?;
    Ok(checks)
}

fn oracle_check(cmd: Command, cfg: &RunConfig, out: &mut Writer) -> Result<Vec<Check>, CliError> {
    let screen = cfg.screen(cmd)?;
    let op = cfg.operator(cmd)?;
    let threshold = cfg.threshold.unwrap_or(match op {
        OperatorSpec::SingleLayer => 1e-6,
        OperatorSpec::Hypersingular => 1e-8,
    });
    let mut table = Table::new(&["k", "h", "dofs", "max_relative_difference", "pass"]);
    let mut worst: f64 = 0.0;
    let ks = cfg.k_grid(cmd)?;
    for &k in &ks {
        let ctx = WaveContext::new(k)?;
        let h = cfg.h(k);
        // Single layer: entrywise relative difference. Hypersingular: relative
        // to the largest entry, since the Maue form has near-cancelling entries.
        let (diff, dofs) = match op {
            OperatorSpec::SingleLayer => {
                let mesh = build_mesh(&screen, h, BasisKind::P0)?;
                let a = assemble_single_layer(&mesh, ctx, cfg.tol)?;
                let o = kernel_oracle_single_layer(&mesh, ctx, cfg.tol)?;
                (a.matrix().iter().zip(o.iter()).map(|(x, y)| (x - y).norm() / y.norm()).fold(0.0, f64::max), mesh.len())
            }
            OperatorSpec::Hypersingular => {
                let mesh = build_mesh(&screen, h, BasisKind::P1)?;
                let b = assemble_hypersingular(&mesh, ctx, cfg.tol)?;
                let o = maue_oracle_hypersingular(&mesh, ctx, cfg.tol)?;
                let scale = b.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
                ((b.matrix() - &o).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale, mesh.len())
            }
        };
        worst = worst.max(diff);
        table.push(vec![Cell::Float(k), Cell::Float(h), Cell::Int(dofs as u64), Cell::Float(diff), Cell::Int((diff <= threshold) as u64)]);
    }
    out.emit("oracle.csv", &table)?;
    Ok(vec![Check::new(
        "oracle_equivalence",
        Verdict::from_bool(worst <= threshold),
        format!("{} wavenumbers, max relative difference {worst:.3e} (≤ {threshold:.0e})", ks.len()),
    )])
}

fn prefractal(cmd: Command, cfg: &RunConfig, out: &mut Writer) -> Result<Vec<Check>, CliError> {
    let spec = cfg.prefractal(cmd)?;
    let ctx = WaveContext::new(cfg.k(cmd)?)?;
    let data = TraceData::sound_soft(cfg.incident(cmd)?);
    let r = prefractal_convergence(
        spec.dim,
        spec.ratio,
        &spec.levels,
        ctx,
        &data,
        &spec.observable.observable(),
        spec.elements_per_feature,
        cfg.tol,
    )?;
    out.emit("prefractal.csv", &sweep_table(&r))?;
    Ok(vec![sweep_check(&r)])
}
