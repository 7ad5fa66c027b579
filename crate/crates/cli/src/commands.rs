use std::path::Path;

use bucketing::codes::{
    classical_code, full_space_code, shell_analytics, shell_code, tensor_power, typeclass_code,
    BucketingCode,
};
use bucketing::information::{
    certified_frontier, conjecture_scan, direct_lower_bound, info_closed_form_result,
    info_numeric_with, is_subconjugate, work_lower_bound, InfoQuery, InfoResult, Method,
    NumericSettings,
};
use bucketing::probmodel::{NonnegMatrix, ProbabilityMatrix};
use bucketing::rng::derive_seed;
use bucketing::simharness::{
    baseline_exponents, cauchy_baseline, exponent_table, run_experiment, sparse_hash_experiment,
};
use bucketing::Execution;

use crate::grid::Grid;
use crate::report::Report;
use crate::{
    BaselineArgs, BaselineKind, BoundArgs, CliError, CodeKind, Command, CommonArgs, ConjectureArgs,
    InfoArgs, InfoMethod, MatrixArgs, SimulateArgs, SubconjArgs, SweepArgs,
};

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(command: Command) -> Result<()> {
    let (report, common) = match command {
        Command::Info(a) => (info(&a)?, a.common),
        Command::Subconj(a) => (subconj(&a)?, a.common),
        Command::Bound(a) => (bound(&a)?, a.common),
        Command::Conjecture(a) => (conjecture(&a)?, a.common),
        Command::Simulate(a) => (simulate(&a)?, a.common),
        Command::Sweep(a) => (sweep(&a)?, a.common),
        Command::Baseline(a) => (baseline(&a)?, a.common),
    };
    let text = report.render(common.format);
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Caps the rayon pool; must run before any parallel work.
fn configure_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

/// Echoes the shared flags last so every replay line ends the same way.
fn finish(report: &mut Report, common: &CommonArgs) -> Result<()> {
    report.set("seed", common.seed);
    report.set("threads", common.threads);
    report.set("format", common.format);
    Ok(())
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))
}

fn load_matrix(args: &MatrixArgs, report: &mut Report) -> Result<ProbabilityMatrix> {
    match (args.p, &args.matrix) {
        (Some(p), None) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(usage(format!("--p must lie in [0, 1], got {p}")));
            }
            report.set_float("p", p);
            Ok(ProbabilityMatrix::bernoulli(p)?)
        }
        (None, Some(path)) => {
            report.set("matrix", path.display());
            Ok(ProbabilityMatrix::from_json(&read_file(path)?)?)
        }
        _ => Err(usage("exactly one of --p or --matrix is required")),
    }
}

fn nonnegative(flag: &str, grid: &Grid) -> Result<()> {
    if grid.values().iter().any(|&v| v < 0.0) {
        return Err(usage(format!("--{flag} values must be nonnegative")));
    }
    Ok(())
}

fn integers(flag: &str, grid: &Grid, min: f64) -> Result<Vec<usize>> {
    grid.values()
        .iter()
        .map(|&v| {
            if v.fract() != 0.0 || v < min || !v.is_finite() {
                Err(usage(format!("--{flag} values must be integers >= {min}, got {v}")))
            } else {
                Ok(v as usize)
            }
        })
        .collect()
}

fn info(a: &InfoArgs) -> Result<Report> {
    configure_threads(a.common.threads)?;
    let mut r = Report::new("info", &["lambda0", "lambda1", "mu", "value", "method", "converged"]);
    let p = load_matrix(&a.matrix, &mut r)?;
    for (flag, grid) in [("lambda0", &a.lambda0), ("lambda1", &a.lambda1), ("mu", &a.mu)] {
        nonnegative(flag, grid)?;
        r.set(flag, grid);
    }
    if a.lambda0.values().iter().chain(a.lambda1.values()).any(|v| !v.is_finite()) {
        return Err(usage("--lambda0 and --lambda1 must be finite"));
    }
    r.set("method", format!("{:?}", a.method).to_lowercase());
    finish(&mut r, &a.common)?;
    let settings = NumericSettings { seed: a.common.seed, ..NumericSettings::default() };
    for &l0 in a.lambda0.values() {
        for &l1 in a.lambda1.values() {
            for &mu in a.mu.values() {
                let unit = l0 == 1.0 && l1 == 1.0;
                let result: InfoResult = match a.method {
                    InfoMethod::Closed if !unit => {
                        return Err(usage("--method closed needs --lambda0 1 --lambda1 1"));
                    }
                    InfoMethod::Closed => info_closed_form_result(&p, mu),
                    InfoMethod::Auto if unit => info_closed_form_result(&p, mu),
                    _ => info_numeric_with(Execution::default(), &p, InfoQuery::new(l0, l1, mu), &settings),
                };
                let method = match result.method {
                    Method::ClosedForm => "closed_form",
                    Method::Optimizer => "optimizer",
                };
                r.push(vec![l0.into(), l1.into(), mu.into(), result.value.into(), method.into(), result.converged.into()]);
            }
        }
    }
    Ok(r)
}

fn subconj(a: &SubconjArgs) -> Result<Report> {
    configure_threads(a.common.threads)?;
    let columns: &[&str] = if a.frontier {
        &["direction", "lambda0", "lambda1"]
    } else {
        &["lambda0", "lambda1", "subconjugate", "ratio_sup", "gap"]
    };
    let mut r = Report::new("subconj", columns);
    let p = load_matrix(&a.matrix, &mut r)?;
    if a.frontier {
        r.set("frontier", true);
        finish(&mut r, &a.common)?;
        for (i, (l0, l1)) in certified_frontier(&p).into_iter().enumerate() {
            r.push(vec![i.into(), l0.into(), l1.into()]);
        }
        return Ok(r);
    }
    if a.tol.is_nan() || a.tol < 0.0 {
        return Err(usage("--tol must be nonnegative"));
    }
    r.set("lambda0", &a.lambda0);
    r.set("lambda1", &a.lambda1);
    r.set_float("tol", a.tol);
    finish(&mut r, &a.common)?;
    const EDGE: f64 = 1e-12;
    let mut skipped = 0usize;
    for &l0 in a.lambda0.values() {
        for &l1 in a.lambda1.values() {
            if l0 > 1.0 + EDGE || l1 > 1.0 + EDGE || l0 + l1 < 1.0 - EDGE {
                skipped += 1;
                continue;
            }
            let c = is_subconjugate(&p, l0, l1, a.tol)?;
            r.push(vec![l0.into(), l1.into(), c.subconjugate.into(), c.ratio_sup.into(), c.gap.into()]);
        }
    }
    r.note("skipped_outside_domain", skipped);
    Ok(r)
}

fn bound(a: &BoundArgs) -> Result<Report> {
    configure_threads(a.common.threads)?;
    let mut r = Report::new("bound", &["bound", "value", "ln_value", "lambda0", "lambda1", "mu"]);
    let p = load_matrix(&a.matrix, &mut r)?;
    if !(a.n0 >= 1.0 && a.n1 >= 1.0 && a.n0.is_finite() && a.n1.is_finite()) {
        return Err(usage("--n0 and --n1 must be finite and at least 1"));
    }
    if !(a.success > 0.0 && a.success <= 1.0) {
        return Err(usage("--success must lie in (0, 1]"));
    }
    if a.copies == 0 {
        return Err(usage("--copies must be at least 1"));
    }
    r.set_float("n0", a.n0);
    r.set_float("n1", a.n1);
    r.set_float("success", a.success);
    r.set("copies", a.copies);
    finish(&mut r, &a.common)?;
    // Sub-conjugacy is closed under tensor products, so the frontier of P
    // certifies the direct bound for every number of copies.
    let direct = direct_lower_bound(&p, a.n0, a.n1, a.success);
    r.push(vec![
        "direct".into(),
        direct.value.into(),
        direct.ln_value.into(),
        direct.lambda0.into(),
        direct.lambda1.into(),
        "".into(),
    ]);
    let work = work_lower_bound(&vec![p; a.copies], a.n0, a.n1, a.success);
    r.push(vec![
        "work".into(),
        work.ln_w_bound.exp().into(),
        work.ln_w_bound.into(),
        work.lambda0.into(),
        work.lambda1.into(),
        work.mu.into(),
    ]);
    Ok(r)
}

fn conjecture(a: &ConjectureArgs) -> Result<Report> {
    configure_threads(a.common.threads)?;
    let mut r = Report::new(
        "conjecture",
        &["p", "points", "worst_margin", "q00", "q01", "q10", "q11", "violations"],
    );
    if a.p_grid.values().iter().any(|&p| !(p > 0.5 && p < 1.0)) {
        return Err(usage("--p-grid values must lie in (1/2, 1)"));
    }
    if a.resolution < 10 {
        return Err(usage("--resolution must be at least 10"));
    }
    if a.slack.is_nan() || a.slack < 0.0 {
        return Err(usage("--slack must be nonnegative"));
    }
    r.set("p-grid", &a.p_grid);
    r.set("resolution", a.resolution);
    r.set_float("slack", a.slack);
    finish(&mut r, &a.common)?;
    let (mut points, mut violations) = (0usize, 0usize);
    for &p in a.p_grid.values() {
        let s = conjecture_scan(&[p], a.resolution, a.slack);
        let q = s.worst.q;
        r.push(vec![
            p.into(),
            s.points.into(),
            s.worst.margin.into(),
            q[0].into(),
            q[1].into(),
            q[2].into(),
            q[3].into(),
            s.violations.into(),
        ]);
        points += s.points;
        violations += s.violations;
    }
    r.note("points", points);
    r.note("violations", violations);
    Ok(r)
}

fn read_blocks(path: &Path) -> Result<Vec<NonnegMatrix>> {
    let grids: Vec<Vec<Vec<f64>>> = serde_json::from_str(&read_file(path)?)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(grids.into_iter().map(NonnegMatrix::new).collect::<bucketing::Result<_>>()?)
}

fn simulate(a: &SimulateArgs) -> Result<Report> {
    configure_threads(a.common.threads)?;
    let mut r = Report::new(
        "simulate",
        &[
            "experiment_id", "kind", "d", "d0", "p", "n0", "n1", "T", "trials", "empirical_S", "ci",
            "predicted_S", "mean_comparisons", "predicted_W", "seed",
        ],
    );
    r.set("code", format!("{:?}", a.code).to_lowercase());
    let p = load_matrix(&a.matrix, &mut r)?;
    if a.d == 0 || a.power == 0 || a.trials == 0 {
        return Err(usage("--d, --power and --trials must be at least 1"));
    }
    if !(a.eps > 0.0 && a.eps < 1.0) {
        return Err(usage("--eps must lie in (0, 1)"));
    }
    let code_seed = derive_seed(a.common.seed, "code", 0);
    let (base, t, default_n): (BucketingCode, Option<u64>, f64) = match a.code {
        CodeKind::Shell => {
            let d0 = a.d0.ok_or_else(|| usage("--code shell needs --d0"))?;
            let (t, n) = match (a.t, a.matrix.p) {
                (Some(t), Some(pv)) => (t, shell_analytics(a.d, d0, pv, a.eps)?.n),
                (Some(t), None) => (t, 64.0),
                (None, Some(pv)) => {
                    let an = shell_analytics(a.d, d0, pv, a.eps)?;
                    if an.t > u64::MAX as f64 / 2.0 {
                        return Err(CliError::Runtime(format!("T = e^{} is too large to simulate", an.ln_t)));
                    }
                    (an.t as u64, an.n)
                }
                (None, None) => return Err(usage("--code shell needs --t or --p")),
            };
            (shell_code(a.d, d0, t, code_seed)?, Some(t), n)
        }
        CodeKind::Classical => {
            let k = a.k.ok_or_else(|| usage("--code classical needs --k"))?;
            (classical_code(a.d, k, a.draws, code_seed)?, None, 2f64.powi(k.min(62) as i32))
        }
        CodeKind::Full => (full_space_code(a.d, p.rows(), p.cols()), None, 64.0),
        CodeKind::Typeclass => {
            let blocks = match &a.blocks {
                Some(path) => read_blocks(path)?,
                None => vec![NonnegMatrix::new(p.to_grid())?],
            };
            (typeclass_code(&p, a.d, &blocks, code_seed, a.t)?.code, a.t, 64.0)
        }
    };
    let code = if a.power > 1 { tensor_power(&base, a.power)? } else { base };
    let default_n = default_n.powi(a.power as i32).clamp(2.0, 1e6) as usize;
    let n0 = a.n0.unwrap_or(default_n);
    let n1 = a.n1.unwrap_or(default_n);

    r.set("d", a.d);
    if let Some(d0) = a.d0 {
        r.set("d0", d0);
    }
    if let Some(k) = a.k {
        r.set("k", k);
    }
    r.set("draws", a.draws);
    if let Some(t) = t {
        r.set("t", t);
    }
    r.set_float("eps", a.eps);
    if let Some(path) = &a.blocks {
        r.set("blocks", path.display());
    }
    r.set("power", a.power);
    r.set("n0", n0);
    r.set("n1", n1);
    r.set("trials", a.trials);
    r.set("experiment-id", &a.experiment_id);
    finish(&mut r, &a.common)?;

    let result = run_experiment(&code, &p, code.d(), n0, n1, a.trials, a.common.seed)?;
    let rec = result.record(&a.experiment_id, a.d0.filter(|_| a.code == CodeKind::Shell), a.matrix.p.unwrap_or(f64::NAN));
    r.push(vec![
        rec.experiment_id.into(),
        rec.kind.into(),
        rec.d.into(),
        rec.d0.into(),
        rec.p.into(),
        rec.n0.into(),
        rec.n1.into(),
        rec.t.into(),
        rec.trials.into(),
        rec.empirical_s.into(),
        rec.ci.into(),
        rec.predicted_s.into(),
        rec.mean_comparisons.into(),
        rec.predicted_w.into(),
        rec.seed.into(),
    ]);
    r.note("mean_operations", result.mean_operations);
    r.note("operations_cap", (n0 + n1) as f64 + 3.0 * result.predicted_w);
    Ok(r)
}

fn sweep(a: &SweepArgs) -> Result<Report> {
    configure_threads(a.common.threads)?;
    let mut r = Report::new(
        "sweep",
        &["rho_target", "d", "d0", "rho", "ln_n_over_d", "ln_t_over_d", "ratio", "limit_ratio"],
    );
    if !(a.p > 0.5 && a.p < 1.0) {
        return Err(usage("--p must lie in (1/2, 1)"));
    }
    let ds = integers("d-grid", &a.d_grid, 1.0)?;
    r.set_float("p", a.p);
    r.set("rho-grid", &a.rho_grid);
    r.set("d-grid", &a.d_grid);
    finish(&mut r, &a.common)?;
    let mut best: Option<(f64, usize, f64)> = None;
    for &rho in a.rho_grid.values() {
        for row in exponent_table(a.p, &ds, rho)? {
            if best.is_none_or(|b| row.ratio < b.0) {
                best = Some((row.ratio, row.d, rho));
            }
            r.push(vec![
                rho.into(),
                row.d.into(),
                row.d0.into(),
                row.rho.into(),
                row.ln_n_over_d.into(),
                row.ln_t_over_d.into(),
                row.ratio.into(),
                row.limit_ratio.into(),
            ]);
        }
    }
    let b = baseline_exponents(a.p)?;
    if let Some((ratio, d, rho)) = best {
        r.note("min_ratio", ratio);
        r.note("min_ratio_d", d);
        r.note("min_ratio_rho", rho);
    }
    r.note("classical_exponent", b.classical);
    r.note("improved_exponent", b.improved);
    Ok(r)
}

fn baseline(a: &BaselineArgs) -> Result<Report> {
    configure_threads(a.common.threads)?;
    let mut r = match a.kind {
        BaselineKind::Exponents => Report::new("baseline", &["p", "classical", "improved", "indyk_motwani", "mnp_lower"]),
        BaselineKind::Cauchy => Report::new("baseline", &["samples", "agreement", "independent"]),
        BaselineKind::Sparse => Report::new(
            "baseline",
            &["method", "k", "n", "d", "trials", "success_rate", "mean_comparisons", "work_exponent", "predicted_exponent"],
        ),
    };
    r.set("kind", format!("{:?}", a.kind).to_lowercase());
    match a.kind {
        BaselineKind::Exponents => {
            r.set("p-grid", &a.p_grid);
            finish(&mut r, &a.common)?;
            for &p in a.p_grid.values() {
                let b = baseline_exponents(p).map_err(|e| usage(format!("--p-grid: {e}")))?;
                r.push(vec![p.into(), b.classical.into(), b.improved.into(), b.indyk_motwani.into(), b.mnp_lower.into()]);
            }
        }
        BaselineKind::Cauchy => {
            r.set("samples", a.samples);
            finish(&mut r, &a.common)?;
            let c = cauchy_baseline(a.samples, a.common.seed).map_err(|e| usage(format!("--samples: {e}")))?;
            r.push(vec![c.samples.into(), c.agreement.into(), c.independent.into()]);
        }
        BaselineKind::Sparse => {
            let ks = integers("k-grid", &a.k_grid, 1.0)?;
            if ks.iter().any(|&k| k > 16) {
                return Err(usage("--k-grid values must be at most 16 (n = 2^k)"));
            }
            r.set_float("eps", a.eps);
            r.set("k-grid", &a.k_grid);
            r.set("trials", a.trials);
            finish(&mut r, &a.common)?;
            for k in ks {
                let n = 1usize << k;
                let rep = sparse_hash_experiment(a.eps, k, n, a.trials, a.common.seed)?;
                for m in [&rep.first_ones, &rep.cauchy] {
                    r.push(vec![
                        m.method.clone().into(),
                        k.into(),
                        n.into(),
                        rep.d.into(),
                        m.trials.into(),
                        m.success_rate.into(),
                        m.mean_comparisons.into(),
                        m.work_exponent.into(),
                        m.predicted_exponent.into(),
                    ]);
                }
            }
        }
    }
    Ok(r)
}

