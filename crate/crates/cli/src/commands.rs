//! Command implementations. Every command writes its artifacts into the
//! run directory and reports verdicts for the manifest; numeric CSV output
//! is byte-deterministic for a fixed (config, seed).

use crate::config::RunConfig;
use crate::manifest::write_atomic;
use anyhow::{anyhow, bail, Context, Result};
use btlab::criteria::{
    bc_verify, main_theorem_hypothesis_check, perturbation_bound_check, theta_derivative_bound,
};
use btlab::dynamics::{
    classical_flow, completeness_experiment, ClassicalState, EvolutionConfig, FlowDirection,
    Integrator,
};
use btlab::fock::{CoefficientVector, TruncationSpec};
use btlab::heat::{heat_transform, semigroup_identity_check, HeatParams};
use btlab::linalg::CMatrix;
use btlab::phase::{PhasePoint, QuantizationContext};
use btlab::symbol::Symbol;
use btlab::toeplitz::{
    assemble_toeplitz, covariance_check, export_operator, form_derivative, integral_representation_check,
    interior_dim, rotation_covariance_check, weyl_matrix, weyl_relation_check, QuadratureSpec,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

pub struct Outcome {
    pub verdicts: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub exit: i32,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            verdicts: BTreeMap::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            exit: 0,
        }
    }

    fn emit(&mut self, out: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&out.join(name), bytes)?;
        self.outputs.push(name.to_string());
        Ok(())
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

fn context(cfg: &RunConfig) -> Result<QuantizationContext<f64>> {
    Ok(QuantizationContext::new(cfg.ctx.n, cfg.ctx.t, cfg.ctx.d)?)
}

fn build_symbol(cfg: &RunConfig) -> Result<Symbol<f64>> {
    let ctx = context(cfg)?;
    let value = cfg
        .symbol
        .as_ref()
        .ok_or_else(|| anyhow!("command {:?} needs a symbol", cfg.command))?;
    let resolved;
    let value = if let Some(path) = value.get("file").and_then(|v| v.as_str()) {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading symbol file {path}"))?;
        resolved = serde_json::from_str(&text)?;
        &resolved
    } else {
        value
    };
    Ok(Symbol::from_json(ctx, value)?)
}

fn quad(cfg: &RunConfig) -> QuadratureSpec<f64> {
    let mut q = QuadratureSpec::default();
    q.radial = cfg.quadrature.radial;
    q.angular = cfg.quadrature.angular;
    q.tol = cfg.quadrature.tol;
    q
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn sample_ball(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> PhasePoint<f64> {
    let mut v: Vec<f64> = (0..2 * n).map(|_| normal(rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let r = radius * rng.gen_range(0.0..1.0f64).powf(1.0 / (2.0 * n as f64));
    for x in v.iter_mut() {
        *x = *x / norm * r;
    }
    PhasePoint::new((0..n).map(|j| Complex64::new(v[j], v[n + j])).collect())
}

fn axis_point(ctx: &QuantizationContext<f64>, value: f64) -> PhasePoint<f64> {
    let mut v = vec![Complex64::new(0.0, 0.0); ctx.n];
    v[0] = Complex64::new(value, 0.0);
    PhasePoint::new(v)
}

pub fn run(cfg: &RunConfig, out: &Path, seed: u64) -> Result<Outcome> {
    match cfg.command.as_str() {
        "quantize" => cmd_quantize(cfg, out, true),
        "spectrum" => cmd_quantize(cfg, out, false),
        "heat" => cmd_heat(cfg, out),
        "check" => cmd_check(cfg, out),
        "bcverify" => cmd_bcverify(cfg, out),
        "identities" => cmd_identities(cfg, out, seed),
        "dynamics" => cmd_dynamics(cfg, out),
        "report" => cmd_report(cfg, out),
        other => bail!("unknown command {other:?}"),
    }
}

fn cmd_quantize(cfg: &RunConfig, out: &Path, export: bool) -> Result<Outcome> {
    let mut oc = Outcome::new();
    let f = build_symbol(cfg)?;
    let spec = TruncationSpec::new(f.ctx, cfg.cutoff);
    let op = assemble_toeplitz(&f, &spec, &quad(cfg))?;
    if export {
        let mut buf = Vec::new();
        export_operator(&op, &mut buf)?;
        oc.emit(out, "operator.json", &buf)?;
    }
    oc.verdicts.insert(
        "hermitian_deviation".into(),
        fmt(op.provenance.hermitian_deviation),
    );
    oc.verdicts.insert("operator_norm".into(), fmt(op.operator_norm()));
    if op.hermitian {
        let eigs = op.eigenvalues()?;
        let mut csv = String::from("index,eigenvalue\n");
        for (i, e) in eigs.iter().enumerate() {
            writeln!(csv, "{i},{}", fmt(*e))?;
        }
        oc.emit(out, "spectrum.csv", csv.as_bytes())?;
        oc.verdicts.insert("min_eigenvalue".into(), fmt(eigs[0]));
        oc.verdicts.insert("max_eigenvalue".into(), fmt(*eigs.last().unwrap()));
    } else {
        oc.warnings.push("symbol not hermitian; spectrum omitted".into());
    }
    Ok(oc)
}

fn cmd_heat(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut oc = Outcome::new();
    let f = build_symbol(cfg)?;
    let s = cfg.params.s.ok_or_else(|| anyhow!("heat needs params.s"))?;
    let g = heat_transform(&f, &HeatParams::new(s)?)?;
    if let Ok(v) = g.to_json() {
        oc.emit(out, "heated_symbol.json", serde_json::to_vec_pretty(&v)?.as_slice())?;
    } else {
        oc.warnings.push("heated symbol has no closed form; samples only".into());
    }
    // deterministic polar sample grid
    let radius = cfg.radius();
    let ctx = f.ctx;
    let d = ctx.d;
    let mut csv = String::new();
    for j in 0..ctx.n {
        write!(csv, "x{j},xi{j},")?;
    }
    for i in 0..d {
        for j in 0..d {
            write!(csv, "re{i}{j},im{i}{j},")?;
        }
    }
    csv.pop();
    csv.push('\n');
    for k in 0..=8usize {
        let r = radius * k as f64 / 8.0;
        for a in 0..16usize {
            let th = 2.0 * std::f64::consts::PI * a as f64 / 16.0;
            let z = PhasePoint::new(
                (0..ctx.n)
                    .map(|j| Complex64::from_polar(r, th + 0.71 * j as f64))
                    .collect(),
            );
            let m = g.eval(&z)?;
            for c in &z.0 {
                write!(csv, "{},{},", fmt(c.re), fmt(c.im))?;
            }
            for i in 0..d {
                for j in 0..d {
                    write!(csv, "{},{},", fmt(m[(i, j)].re), fmt(m[(i, j)].im))?;
                }
            }
            csv.pop();
            csv.push('\n');
        }
    }
    oc.emit(out, "samples.csv", csv.as_bytes())?;
    oc.verdicts.insert("s".into(), fmt(s));
    Ok(oc)
}

fn cmd_check(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut oc = Outcome::new();
    let f = build_symbol(cfg)?;
    let s = cfg.params.s.unwrap_or(0.0);
    let radius = cfg.radius().max(2.0);
    let resolution = cfg.params.resolution.unwrap_or(6);
    let hyp = main_theorem_hypothesis_check(&f, s, radius, resolution)?;
    let theta = match theta_derivative_bound(&f, radius) {
        Ok(r) => Some(r),
        Err(e) => {
            oc.warnings.push(format!("theta derivative bound not fitted: {e}"));
            None
        }
    };
    let report = json!({
        "hypothesis": hyp.to_json(),
        "theta": theta.as_ref().map(|r| r.to_json()),
    });
    oc.emit(out, "check.json", serde_json::to_vec_pretty(&report)?.as_slice())?;
    // stdout table
    println!("derivative  sup        linear-fit  stable");
    for (k, r) in hyp.derivative_reports.iter().enumerate() {
        println!(
            "{k:>10}  {:<9.3e}  {:<10.3e}  {}",
            r.sup_statistic, r.linear_fit_constant, r.verdict
        );
    }
    let verdict = if hyp.verdict { "PASS".to_string() } else {
        match hyp.first_failure() {
            Some(k) => format!("FAIL (derivative {k} oscillation unbounded)"),
            None => "FAIL".into(),
        }
    };
    println!("main hypothesis: {verdict}");
    oc.verdicts.insert("main_hypothesis".into(), verdict);
    if let Some(tb) = &theta {
        oc.verdicts.insert(
            "theta_bound".into(),
            if tb.verdict { "PASS".into() } else { "FAIL".into() },
        );
    }
    if !hyp.verdict {
        oc.exit = 2;
    }
    Ok(oc)
}

fn cmd_bcverify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut oc = Outcome::new();
    let f = build_symbol(cfg)?;
    let t = f.ctx.t;
    let s = cfg.params.s.unwrap_or(t / 4.0);
    let spec = TruncationSpec::new(f.ctx, cfg.cutoff);
    let radius = cfg.radius();
    let bc = bc_verify(&f, s, &spec, radius)?;
    let pb = perturbation_bound_check(&f, s, &spec, radius)?;
    let mut csv = String::from("check,lhs,rhs,constant,sup_norm,slack,holds\n");
    for (name, r) in [("berger_coburn", &bc), ("perturbation_bound", &pb)] {
        writeln!(
            csv,
            "{name},{},{},{},{},{},{}",
            fmt(r.lhs), fmt(r.rhs), fmt(r.constant), fmt(r.sup_norm), fmt(r.slack), r.holds
        )?;
    }
    oc.emit(out, "bcverify.csv", csv.as_bytes())?;
    let report = json!({
        "berger_coburn": bc.to_json("berger_coburn"),
        "perturbation_bound": pb.to_json("perturbation_bound"),
    });
    oc.emit(out, "bcverify.json", serde_json::to_vec_pretty(&report)?.as_slice())?;
    println!("berger-coburn: lhs {:.6e} ≤ rhs {:.6e} (slack {:.3e})", bc.lhs, bc.rhs, bc.slack);
    oc.verdicts.insert("berger_coburn".into(), if bc.holds { "PASS".into() } else { "FAIL".into() });
    oc.verdicts.insert(
        "perturbation_bound".into(),
        if pb.holds { "PASS".into() } else { "FAIL".into() },
    );
    if !(bc.holds && pb.holds) {
        oc.exit = 2;
    }
    Ok(oc)
}

struct IdentityRow {
    check: &'static str,
    label: String,
    residual: f64,
    tolerance: f64,
}

fn cmd_identities(cfg: &RunConfig, out: &Path, seed: u64) -> Result<Outcome> {
    let mut oc = Outcome::new();
    let f = build_symbol(cfg)?;
    let ctx = f.ctx;
    let t = ctx.t;
    let q = quad(cfg);
    let spec = TruncationSpec::new(ctx, cfg.cutoff);
    let pairs = cfg.params.pairs.unwrap_or(5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<IdentityRow> = Vec::new();

    // Berezin transform equals the heat transform at s = t
    {
        let op = assemble_toeplitz(&f, &spec, &q)?;
        let g = heat_transform(&f, &HeatParams::new(t)?)?;
        for k in 0..pairs {
            let z = sample_ball(&mut rng, ctx.n, 1.0);
            let b = btlab::toeplitz::berezin_transform(&op, &z)?;
            let resid = b.value.sub(&g.eval(&z)?).max_abs();
            rows.push(IdentityRow {
                check: "berezin_heat",
                label: format!("point{k}"),
                residual: resid,
                tolerance: 1e-6,
            });
            if b.tail_warning {
                oc.warnings.push(format!("berezin tail mass {:.2e} at point{k}", b.tail_mass));
            }
        }
    }
    // semigroup identity at s = t/4
    for k in 0..pairs {
        let z = sample_ball(&mut rng, ctx.n, 2.0);
        let w = sample_ball(&mut rng, ctx.n, 2.0);
        let resid = semigroup_identity_check(&f, &ctx, t / 4.0, &z, &w)?;
        rows.push(IdentityRow {
            check: "semigroup",
            label: format!("pair{k}"),
            residual: resid,
            tolerance: 1e-6,
        });
    }
    // Weyl relations and unitarity (symbol-independent; needs a deep
    // truncation for coherent-state accuracy)
    {
        let wspec = TruncationSpec::new(ctx, cfg.cutoff.max(60));
        for k in 0..pairs {
            let w = sample_ball(&mut rng, ctx.n, 0.5);
            let z = sample_ball(&mut rng, ctx.n, 0.5);
            let resid = weyl_relation_check(&wspec, &w, &z)?;
            rows.push(IdentityRow {
                check: "weyl_relation",
                label: format!("pair{k}"),
                residual: resid,
                tolerance: 1e-6,
            });
        }
        let wop = weyl_matrix(&wspec, &axis_point(&ctx, 0.3))?;
        let dim = wop.dim();
        let resid = wop
            .matrix
            .adjoint()
            .matmul(&wop.matrix)
            .sub(&CMatrix::identity(dim))
            .max_abs();
        rows.push(IdentityRow {
            check: "weyl_unitarity",
            label: "w=0.3".into(),
            residual: resid,
            tolerance: 1e-10,
        });
    }
    // polynomial-only identities
    if let Some(p) = f.as_polynomial() {
        let wspec = TruncationSpec::new(ctx, cfg.cutoff.max(60));
        let resid = covariance_check(&f, &wspec, &axis_point(&ctx, 1.0))?;
        rows.push(IdentityRow {
            check: "covariance",
            label: "z=1".into(),
            residual: resid,
            tolerance: 1e-6,
        });
        let theta = cfg.params.theta.unwrap_or(std::f64::consts::PI / 3.0);
        let resid = rotation_covariance_check(&f, &spec, theta)?;
        rows.push(IdentityRow {
            check: "rotation_covariance",
            label: format!("theta={theta}"),
            residual: resid,
            tolerance: 1e-10,
        });
        // form derivative ∂_0 T_f = T_{∂_0 f} on the uncontaminated block
        let deg = p.degree();
        if cfg.cutoff > deg + 1 {
            let a = assemble_toeplitz(&f, &spec, &q)?;
            let da = form_derivative(&a, 0, false)?;
            let df = Symbol::polynomial(ctx, p.wirtinger_derivative(0, false))?;
            let rhs = assemble_toeplitz(&df, &spec, &q)?;
            let k = interior_dim(&spec, cfg.cutoff - deg - 1);
            let resid = da
                .matrix
                .leading_block(k)
                .sub(&rhs.matrix.leading_block(k))
                .max_abs();
            rows.push(IdentityRow {
                check: "form_derivative",
                label: "d0".into(),
                residual: resid,
                tolerance: 1e-8,
            });
        }
        // closed-form assembly vs the quadrature path
        let closed = assemble_toeplitz(&f, &spec, &q)?;
        let wrapped = Symbol::callable(
            ctx,
            Arc::new(move |z: &PhasePoint<f64>| Ok(p.eval(z))),
        );
        let quadop = assemble_toeplitz(&wrapped, &spec, &q)?;
        let resid = closed.matrix.sub(&quadop.matrix).max_abs();
        rows.push(IdentityRow {
            check: "closed_vs_quadrature",
            label: "full".into(),
            residual: resid,
            tolerance: 1e-9,
        });
    } else {
        oc.warnings.push("symbol has no polynomial form; covariance/derivative identities skipped".into());
    }
    // integral representation at one interior point
    {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); spec.basis_len()];
        coeffs[0] = Complex64::new(1.0, 0.0);
        let g0 = CoefficientVector { coeffs, tail_mass: None };
        let resid =
            integral_representation_check(&f, &spec, &g0, &axis_point(&ctx, 0.3), &q)?;
        rows.push(IdentityRow {
            check: "integral_representation",
            label: "g=e0,z=0.3".into(),
            residual: resid,
            tolerance: 1e-5,
        });
    }

    let mut csv = String::from("check,label,residual,tolerance,pass\n");
    let mut all_pass = true;
    for r in &rows {
        let pass = r.residual <= r.tolerance;
        all_pass &= pass;
        writeln!(csv, "{},{},{},{},{}", r.check, r.label, fmt(r.residual), fmt(r.tolerance), pass)?;
    }
    oc.emit(out, "identities.csv", csv.as_bytes())?;
    let report = json!({
        "schema": btlab::criteria::REPORT_SCHEMA,
        "kind": "identities",
        "all_pass": all_pass,
        "rows": rows.iter().map(|r| json!({
            "check": r.check, "label": r.label,
            "residual": r.residual, "tolerance": r.tolerance,
            "pass": r.residual <= r.tolerance,
        })).collect::<Vec<_>>(),
    });
    oc.emit(out, "identities.json", serde_json::to_vec_pretty(&report)?.as_slice())?;
    for r in &rows {
        println!(
            "{:<24} {:<12} residual {:.3e} (tol {:.0e}) {}",
            r.check,
            r.label,
            r.residual,
            r.tolerance,
            if r.residual <= r.tolerance { "pass" } else { "FAIL" }
        );
    }
    oc.verdicts.insert(
        "identities".into(),
        if all_pass { "PASS".into() } else { "FAIL".into() },
    );
    if !all_pass {
        oc.exit = 2;
    }
    Ok(oc)
}

fn cmd_dynamics(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut oc = Outcome::new();
    let f = build_symbol(cfg)?;
    let dc = cfg
        .params
        .dynamics
        .as_ref()
        .ok_or_else(|| anyhow!("dynamics needs params.dynamics"))?;
    if cfg.params.cutoffs.is_empty() {
        bail!("dynamics needs params.cutoffs (the quantum ladder)");
    }
    let mut ecfg = EvolutionConfig::new(dc.total_time, dc.step)?;
    ecfg.blow_up = dc.blow_up;
    ecfg.integrator = match dc.integrator.as_str() {
        "adaptive-rk" => Integrator::AdaptiveRk,
        _ => Integrator::ImplicitMidpoint,
    };
    ecfg.direction = match dc.direction.as_str() {
        "standard" => FlowDirection::Standard,
        _ => FlowDirection::Paper,
    };
    ecfg.cutoffs = cfg.params.cutoffs.clone();
    let z0 = ClassicalState::new(dc.x.clone(), dc.xi.clone())?;
    let traj = classical_flow(&f, &z0, &ecfg)?;
    let mut csv = String::from("time");
    for j in 0..f.ctx.n {
        write!(csv, ",x{j}")?;
    }
    for j in 0..f.ctx.n {
        write!(csv, ",xi{j}")?;
    }
    csv.push('\n');
    for (tt, s) in traj.times.iter().zip(&traj.states) {
        write!(csv, "{}", fmt(*tt))?;
        for v in s.x.iter().chain(&s.xi) {
            write!(csv, ",{}", fmt(*v))?;
        }
        csv.push('\n');
    }
    oc.emit(out, "classical.csv", csv.as_bytes())?;
    let rep = completeness_experiment(&f, &z0, &ecfg)?;
    for curve in &rep.curves {
        let mut csv = String::from("time,leakage\n");
        for (tt, l) in curve.times.iter().zip(&curve.leakage) {
            writeln!(csv, "{},{}", fmt(*tt), fmt(*l))?;
        }
        oc.emit(out, &format!("leakage_{}.csv", curve.cutoff), csv.as_bytes())?;
    }
    oc.emit(out, "dynamics.json", serde_json::to_vec_pretty(&rep.to_json())?.as_slice())?;
    println!("{}", rep.summary);
    oc.verdicts.insert(
        "classical_escape".into(),
        match &rep.classical_escape {
            Some(e) => format!("[{:.6}, {:.6}]", e.lower, e.upper),
            None => "none".into(),
        },
    );
    for curve in &rep.curves {
        oc.verdicts.insert(
            format!("leakage_onset_M{}", curve.cutoff),
            match curve.onset {
                Some(t) => format!("{t:.6}"),
                None => "none".into(),
            },
        );
    }
    Ok(oc)
}

fn cmd_report(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut oc = Outcome::new();
    let dir = cfg
        .params
        .run_dir
        .as_ref()
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| out.to_path_buf());
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path)
        .with_context(|| format!("reading {}", manifest_path.display()))?;
    let m: serde_json::Value = serde_json::from_str(&text)?;
    let mut md = String::new();
    writeln!(md, "# Run report\n")?;
    writeln!(md, "- command: `{}`", m["command"].as_str().unwrap_or("?"))?;
    writeln!(md, "- tool version: {}", m["tool_version"].as_str().unwrap_or("?"))?;
    writeln!(md, "- seed: {}", m["seed"])?;
    writeln!(md, "\n## Verdicts\n\n| check | result |\n|---|---|")?;
    if let Some(v) = m["verdicts"].as_object() {
        for (k, val) in v {
            writeln!(md, "| {k} | {} |", val.as_str().unwrap_or("?"))?;
        }
    }
    writeln!(md, "\n## Outputs\n")?;
    if let Some(outs) = m["outputs"].as_array() {
        for o in outs {
            writeln!(md, "- {}", o.as_str().unwrap_or("?"))?;
        }
    }
    if let Some(warns) = m["warnings"].as_array() {
        if !warns.is_empty() {
            writeln!(md, "\n## Warnings\n")?;
            for w in warns {
                writeln!(md, "- {}", w.as_str().unwrap_or("?"))?;
            }
        }
    }
    write_atomic(&dir.join("report.md"), md.as_bytes())?;
    oc.outputs.push("report.md".into());
    println!("{md}");
    Ok(oc)
}
