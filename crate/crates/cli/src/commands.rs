//! Command execution: each command turns the parsed config into solver
//! calls and a column-schema report.

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use circstab::critical_layer::{self, CriticalLayerConfig};
use circstab::dispersion::{self, OracleCase};
use circstab::error::Error as CoreError;
use circstab::mode_search;
use circstab::profiles::ProblemSetup;
use circstab::rayleigh::Mode;
use circstab::semicircle;

use crate::config::{default_region, ConfigError, EffectiveTolerances, RunConfig, SetupSpec};
use crate::output::{Report, Row};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments: exit code 2.
    Validation(String),
    /// Numerical failure: exit code 3.
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// Classify solver errors: contract violations are configuration issues,
/// the rest are numerical failures.
fn classify(e: CoreError) -> CliError {
    match e {
        CoreError::BadProfile(_)
        | CoreError::BadSetup(_)
        | CoreError::BadParams(_)
        | CoreError::BadRegion(_)
        | CoreError::OutOfDomain { .. } => CliError::Validation(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

pub struct CommandOutcome {
    pub report: Report,
    /// Set when the report was produced but the run must exit nonzero.
    pub failure: Option<String>,
}

pub fn execute(
    command: &str,
    cfg: &RunConfig,
    config_text: &str,
    tol: EffectiveTolerances,
    strict: bool,
) -> Result<CommandOutcome, CliError> {
    match command {
        "solve-mode" => solve_mode(cfg, config_text, tol),
        "find-modes" => find_modes(cfg, config_text, tol),
        "semicircle" => semicircle_cmd(cfg, config_text, tol),
        "verify-oracles" => verify_oracles(cfg, config_text, tol),
        "critical-layer" => critical_layer_cmd(cfg, config_text, tol),
        "epsilon-scaling" => epsilon_scaling(cfg, config_text, tol),
        "sweep" => sweep(cfg, config_text, tol, strict),
        other => Err(CliError::Validation(format!(
            "unknown command '{other}' (expected solve-mode, find-modes, semicircle, verify-oracles, critical-layer, epsilon-scaling, or sweep)"
        ))),
    }
}

fn need_setup(cfg: &RunConfig) -> Result<ProblemSetup, CliError> {
    let spec = cfg.setup.as_ref().ok_or_else(|| CliError::Validation("missing [setup] section".into()))?;
    Ok(spec.build()?)
}

fn bound_row(setup: &ProblemSetup, k: i32) -> Result<(f64, f64, bool, f64, f64), CliError> {
    let rep = semicircle::bound(setup, k).map_err(classify)?;
    Ok((rep.m, rep.big_m, rep.condition_strict, rep.center, rep.radius))
}

fn solve_mode(cfg: &RunConfig, text: &str, tol: EffectiveTolerances) -> Result<CommandOutcome, CliError> {
    let setup = need_setup(cfg)?;
    let mode_spec = cfg.mode.as_ref().ok_or_else(|| CliError::Validation("missing [mode] section".into()))?;
    let ks = mode_spec.wave_numbers()?;
    if ks.len() != 1 {
        return Err(CliError::Validation("solve-mode needs a single mode.k".into()));
    }
    let c0 = mode_spec
        .c0
        .ok_or_else(|| CliError::Validation("solve-mode needs mode.c0 = [re, im]".into()))?;
    let k = ks[0];
    let root = mode_search::polish_mode(&setup, k, Complex64::new(c0[0], c0[1])).map_err(classify)?;
    let (m, big_m, condition, ..) = bound_row(&setup, k)?;
    let rows = vec![Row {
        k: Some(k),
        re_c: Some(root.c.re),
        im_c: Some(root.c.im),
        residual: Some(root.residual_abs),
        count: Some(1),
        m: Some(m),
        big_m: Some(big_m),
        condition: Some(condition),
        notes: format!("newton_iterations={}", root.newton_iterations),
    }];
    Ok(CommandOutcome { report: Report::new("solve-mode", text, tol, rows), failure: None })
}

fn find_modes(cfg: &RunConfig, text: &str, tol: EffectiveTolerances) -> Result<CommandOutcome, CliError> {
    let setup = need_setup(cfg)?;
    let mode_spec = cfg.mode.as_ref().ok_or_else(|| CliError::Validation("missing [mode] section".into()))?;
    let mut rows = Vec::new();
    for k in mode_spec.wave_numbers()? {
        let region = match &cfg.region {
            Some(r) => r.build()?,
            None => default_region(&setup, k)?,
        };
        let catalog = mode_search::find_modes(&setup, k, &region).map_err(classify)?;
        let (m, big_m, condition, ..) = bound_row(&setup, k)?;
        if catalog.roots.is_empty() {
            rows.push(Row {
                k: Some(k),
                count: Some(0),
                m: Some(m),
                big_m: Some(big_m),
                condition: Some(condition),
                ..Default::default()
            });
        }
        for root in &catalog.roots {
            rows.push(Row {
                k: Some(k),
                re_c: Some(root.c.re),
                im_c: Some(root.c.im),
                residual: Some(root.residual_abs),
                count: Some(catalog.counted),
                m: Some(m),
                big_m: Some(big_m),
                condition: Some(condition),
                notes: format!("multiplicity={}", root.multiplicity),
            });
        }
    }
    Ok(CommandOutcome { report: Report::new("find-modes", text, tol, rows), failure: None })
}

fn semicircle_cmd(cfg: &RunConfig, text: &str, tol: EffectiveTolerances) -> Result<CommandOutcome, CliError> {
    let setup = need_setup(cfg)?;
    let mode_spec = cfg.mode.as_ref().ok_or_else(|| CliError::Validation("missing [mode] section".into()))?;
    let mut rows = Vec::new();
    for k in mode_spec.wave_numbers()? {
        let (m, big_m, condition, center, radius) = bound_row(&setup, k)?;
        rows.push(Row {
            k: Some(k),
            m: Some(m),
            big_m: Some(big_m),
            condition: Some(condition),
            notes: format!("center={center};radius={radius}"),
            ..Default::default()
        });
    }
    Ok(CommandOutcome { report: Report::new("semicircle", text, tol, rows), failure: None })
}

/// Deterministic self-test of the assembled residual against every
/// closed-form dispersion relation.
fn verify_oracles(_cfg: &RunConfig, text: &str, tol: EffectiveTolerances) -> Result<CommandOutcome, CliError> {
    use circstab::profiles::{AngularProfile, Domain};

    let opts = tol.solve_options();
    let c_grid: Vec<Complex64> = [-1.3, -0.4, 0.6, 1.7]
        .iter()
        .flat_map(|&re| [0.35, 1.1].iter().map(move |&im| Complex64::new(re, im)))
        .collect();
    let mut rows = Vec::new();
    let mut worst_overall = 0.0_f64;

    let mut record = |case: &str, dev: f64| {
        worst_overall = worst_overall.max(dev);
        rows.push(Row { residual: Some(dev), notes: format!("case={case}"), ..Default::default() });
    };

    // Constant vortex: D = -rho+ |k| O.
    let mut dev = 0.0_f64;
    for k in [2, 3, 5, 8] {
        let plus = AngularProfile::constant(1.0, Domain { lo: f64::NEG_INFINITY, hi: 0.0 });
        let minus = AngularProfile::constant(0.0, Domain::new(0.0, 1.0).map_err(classify)?);
        let setup = ProblemSetup::new(1.0, 0.0, 0.0, 0.0, 1.0_f64.exp(), plus, minus).map_err(classify)?;
        for &c in &c_grid {
            let d = dispersion::residual(&setup, Mode::new(k, c), &opts).map_err(classify)?.value;
            let o = dispersion::oracle_dispersion(&OracleCase::ConstantVortex { k }, c).map_err(classify)?;
            dev = dev.max((d + (k.abs() as f64) * o).norm() / (1.0 + d.norm()));
        }
    }
    record("constant-vortex", dev);

    // Capillary constant: same prefactor with surface tension.
    let mut dev = 0.0_f64;
    for (alpha, b, k) in [(0.5, 1.0, 2), (1.0, -0.8, 3), (0.2, 0.3, 5)] {
        let plus = AngularProfile::constant(b, Domain { lo: f64::NEG_INFINITY, hi: 0.0 });
        let minus = AngularProfile::constant(0.0, Domain::new(0.0, 1.0).map_err(classify)?);
        let setup = ProblemSetup::new(1.0, 0.0, alpha, 0.0, 1.0_f64.exp(), plus, minus).map_err(classify)?;
        for &c in &c_grid {
            let d = dispersion::residual(&setup, Mode::new(k, c), &opts).map_err(classify)?.value;
            let case = OracleCase::CapillaryConstant { alpha, rho_plus: 1.0, big_b: b, k };
            let o = dispersion::oracle_dispersion(&case, c).map_err(classify)?;
            dev = dev.max((d + (k.abs() as f64) * o).norm() / (1.0 + d.norm()));
        }
    }
    record("capillary-constant", dev);

    // Taylor-Couette water wave: D = -rho+ O.
    let mut dev = 0.0_f64;
    for (a, b, r_in, alpha, k) in [(0.7, -0.3, 0.5_f64, 0.4, 2), (-0.4, 0.6, 0.3, 0.0, 4)] {
        let plus =
            AngularProfile::taylor_couette(a, b, Domain::new(r_in.ln(), 0.0).map_err(classify)?).map_err(classify)?;
        let minus = AngularProfile::constant(0.0, Domain::new(0.0, 1.0).map_err(classify)?);
        let setup = ProblemSetup::new(1.0, 0.0, alpha, r_in, 1.0_f64.exp(), plus, minus).map_err(classify)?;
        for &c in &c_grid {
            let d = dispersion::residual(&setup, Mode::new(k, c), &opts).map_err(classify)?.value;
            let case = OracleCase::TCWaterWave { alpha, rho_plus: 1.0, a, b, r_in, k };
            let o = dispersion::oracle_dispersion(&case, c).map_err(classify)?;
            dev = dev.max((d + o).norm() / (1.0 + d.norm()));
        }
    }
    record("tc-water-wave", dev);

    // Two-phase Taylor-Couette.
    let mut dev = 0.0_f64;
    for (eps, a_in, b_in, a_out, b_out, k) in
        [(0.2, 0.4, 0.3, -0.2, 0.5, 2), (0.7, -0.3, 0.8, 0.1, -0.6, 3)]
    {
        let (r_in, r_out, alpha) = (0.45_f64, 2.2_f64, 0.3);
        let plus =
            AngularProfile::taylor_couette(a_in, b_in, Domain::new(r_in.ln(), 0.0).map_err(classify)?)
                .map_err(classify)?;
        let minus =
            AngularProfile::taylor_couette(a_out, b_out, Domain::new(0.0, r_out.ln()).map_err(classify)?)
                .map_err(classify)?;
        let setup = ProblemSetup::new(1.0, eps, alpha, r_in, r_out, plus, minus).map_err(classify)?;
        for &c in &c_grid {
            let d = dispersion::residual(&setup, Mode::new(k, c), &opts).map_err(classify)?.value;
            let case = OracleCase::TwoPhaseTC {
                alpha,
                rho_plus: 1.0,
                eps,
                a_in,
                b_in,
                a_out,
                b_out,
                r_in,
                r_out,
                k,
            };
            let o = dispersion::oracle_dispersion(&case, c).map_err(classify)?;
            dev = dev.max((d + o).norm() / (1.0 + d.norm()));
        }
    }
    record("two-phase-tc", dev);

    // Piecewise outer profile: the solve applies the vorticity jump; the
    // printed relation carries the rational interface derivative.
    let mut dev = 0.0_f64;
    {
        let (lp, _) = dispersion::lambda_pm(2, 0.0, 1.0, 1.0).map_err(classify)?;
        let s_star = dispersion::calibrate_sstar(3.0, 0.0, 2, lp, 6.0).map_err(classify)?;
        let params = dispersion::LipschitzParams {
            omega_star: 3.0,
            b: 0.0,
            s_star,
            big_b: 0.0,
            alpha: 1.0,
            rho_plus: 1.0,
            k: 2,
        };
        let eps = 1e-3;
        let plus = AngularProfile::constant(0.0, Domain { lo: f64::NEG_INFINITY, hi: 0.0 });
        let minus = AngularProfile::piecewise_outer(3.0, 0.0, s_star, Domain::new(0.0, f64::INFINITY).map_err(classify)?)
            .map_err(classify)?;
        let setup = ProblemSetup::new(1.0, eps, 1.0, 0.0, f64::INFINITY, plus, minus).map_err(classify)?;
        for &c in &c_grid {
            let d = dispersion::residual(&setup, Mode::new(2, c), &opts).map_err(classify)?.value;
            let case = OracleCase::LipschitzOuter { params, eps };
            let o = dispersion::oracle_dispersion(&case, c).map_err(classify)?;
            dev = dev.max((d + o).norm() / (1.0 + d.norm()));
        }
        // The cubic roots solve the printed relation.
        let (upper, lower) = dispersion::lipschitz_case_roots(&params, eps).map_err(classify)?;
        for root in [upper, lower] {
            let o = dispersion::oracle_dispersion(&OracleCase::LipschitzOuter { params, eps }, root)
                .map_err(classify)?;
            dev = dev.max(o.norm());
        }
    }
    record("lipschitz-outer", dev);

    let failure = if worst_overall > 1e-8 {
        Some(format!("oracle deviation {worst_overall:e} exceeds 1e-8"))
    } else {
        None
    };
    let report = Report::new("verify-oracles", text, tol, rows)
        .with_diagnostics(json!({ "max_deviation": worst_overall, "threshold": 1e-8 }));
    Ok(CommandOutcome { report, failure })
}

fn critical_layer_cmd(cfg: &RunConfig, text: &str, tol: EffectiveTolerances) -> Result<CommandOutcome, CliError> {
    let setup = need_setup(cfg)?;
    let spec = cfg
        .critical_layer
        .as_ref()
        .ok_or_else(|| CliError::Validation("missing [critical_layer] section".into()))?;
    let mode_spec = cfg.mode.as_ref().ok_or_else(|| CliError::Validation("missing [mode] section".into()))?;
    let ks = mode_spec.wave_numbers()?;
    if ks.len() != 1 {
        return Err(CliError::Validation("critical-layer needs a single mode.k".into()));
    }
    let k = ks[0];
    let branch = spec.branch()?;
    let mut cl_cfg = CriticalLayerConfig::default();
    if let Some(grid) = &spec.eta_grid {
        cl_cfg.eta_grid = grid.clone();
    }
    let pred = critical_layer::predict_bifurcation(&setup, k, branch, &cl_cfg).map_err(classify)?;
    let solve = critical_layer::solve_unstable_mode(&setup, k, branch, spec.epsilon, &cl_cfg).map_err(classify)?;
    let study = critical_layer::limit_convergence_study(&setup, k, pred.c_k, &cl_cfg).map_err(classify)?;
    let (m, big_m, condition, ..) = bound_row(&setup, k)?;
    let rows = vec![Row {
        k: Some(k),
        re_c: Some(solve.c_final.re),
        im_c: Some(solve.c_final.im),
        residual: Some(solve.lambda_residuals.0.max(solve.lambda_residuals.1)),
        count: Some(1),
        m: Some(m),
        big_m: Some(big_m),
        condition: Some(condition),
        notes: format!("c_sharp={};c_k={};rate={}", solve.c_sharp, solve.c_k, study.rate),
    }];
    let diagnostics = json!({
        "c_k": solve.c_k,
        "c_sharp": solve.c_sharp,
        "h_i0": pred.h_i0,
        "epsilon": spec.epsilon,
        "nu": [solve.nu1, solve.nu2],
        "newton_iterations": solve.newton_iterations,
        "convergence_rate": study.rate,
        "convergence_points": study.points,
        "crossings": pred.crossings.iter().map(|c| json!({
            "sigma": c.sigma, "w_dot": c.w_dot, "varpi_dot": c.varpi_dot,
        })).collect::<Vec<_>>(),
    });
    let report = Report::new("critical-layer", text, tol, rows).with_diagnostics(diagnostics);
    Ok(CommandOutcome { report, failure: None })
}

fn epsilon_scaling(cfg: &RunConfig, text: &str, tol: EffectiveTolerances) -> Result<CommandOutcome, CliError> {
    let spec = cfg.scaling.as_ref().ok_or_else(|| CliError::Validation("missing [scaling] section".into()))?;
    let (lp, _) = dispersion::lambda_pm(spec.k, spec.big_b, spec.alpha, spec.rho_plus).map_err(classify)?;
    let s_star = match spec.s_star {
        Some(s) => s,
        None => dispersion::calibrate_sstar(spec.omega_star, spec.b, spec.k, lp, 8.0).map_err(classify)?,
    };
    let params = dispersion::LipschitzParams {
        omega_star: spec.omega_star,
        b: spec.b,
        s_star,
        big_b: spec.big_b,
        alpha: spec.alpha,
        rho_plus: spec.rho_plus,
        k: spec.k,
    };
    if !(spec.eps_min > 0.0 && spec.eps_max > spec.eps_min) {
        return Err(CliError::Validation("need 0 < eps_min < eps_max".into()));
    }
    let per_decade = spec.points_per_decade.unwrap_or(3).max(1);
    let decades = (spec.eps_max / spec.eps_min).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    let ladder: Vec<f64> =
        (0..=n).map(|i| spec.eps_min * 10f64.powf(decades * i as f64 / n as f64)).collect();
    let study = critical_layer::epsilon_scaling_study(&params, &ladder).map_err(classify)?;
    let mut rows = Vec::new();
    for p in &study.points {
        rows.push(Row {
            k: Some(spec.k),
            re_c: Some(p.lambda_r),
            im_c: Some(p.lambda_i),
            notes: format!("eps={};layer_separation={}", p.eps, p.layer_separation),
            ..Default::default()
        });
    }
    let diagnostics = json!({
        "slope": study.slope,
        "lambda_plus": study.lambda_plus,
        "lambda_minus": study.lambda_minus,
        "r_slope": study.r_slope,
        "s_star": s_star,
    });
    let report = Report::new("epsilon-scaling", text, tol, rows).with_diagnostics(diagnostics);
    Ok(CommandOutcome { report, failure: None })
}

fn set_profile_field(spec: &mut SetupSpec, side: &str, field: &str, value: f64) -> Result<(), CliError> {
    let profile = if side == "plus" { &mut spec.profile_plus } else { &mut spec.profile_minus };
    let slot = match (profile.kind.as_str(), field) {
        ("taylor-couette", "a") => &mut profile.a,
        ("taylor-couette", "b") | ("constant", "b") | ("piecewise-outer", "b") => &mut profile.b,
        ("piecewise-outer", "omega_star") => &mut profile.omega_star,
        ("piecewise-outer", "s_star") => &mut profile.s_star,
        (kind, field) => {
            return Err(CliError::Validation(format!(
                "sweep parameter {side}.{field} does not apply to profile kind '{kind}'"
            )))
        }
    };
    *slot = Some(value);
    Ok(())
}

fn sweep(cfg: &RunConfig, text: &str, tol: EffectiveTolerances, strict: bool) -> Result<CommandOutcome, CliError> {
    let base = cfg.setup.as_ref().ok_or_else(|| CliError::Validation("missing [setup] section".into()))?;
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Validation("missing [sweep] section".into()))?;
    let base_k = cfg.mode.as_ref().and_then(|m| m.k);
    let has_k_axis = sweep.axes.iter().any(|a| a.param == "k");
    if base_k.is_none() && !has_k_axis && !sweep.axes.is_empty() {
        return Err(CliError::Validation("sweep needs mode.k or a k axis".into()));
    }
    for axis in &sweep.axes {
        let known = [
            "k",
            "eps",
            "alpha",
            "plus.a",
            "plus.b",
            "minus.a",
            "minus.b",
            "minus.omega_star",
            "minus.s_star",
        ];
        if !known.contains(&axis.param.as_str()) {
            return Err(CliError::Validation(format!(
                "unknown sweep parameter '{}' (expected one of {known:?})",
                axis.param
            )));
        }
    }

    // Lexicographic grid in axis order, first axis outermost.
    let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for axis in &sweep.axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for p in &points {
            for &v in &axis.values {
                let mut q = p.clone();
                q.push((axis.param.clone(), v));
                next.push(q);
            }
        }
        points = next;
    }
    if sweep.axes.is_empty() {
        points.clear();
    }

    let run_point = |assignment: &Vec<(String, f64)>| -> Result<Row, CliError> {
        let mut spec = base.clone();
        let mut k = base_k.unwrap_or(0);
        for (param, value) in assignment {
            match param.as_str() {
                "k" => {
                    k = *value as i32;
                    if k as f64 != *value || k == 0 {
                        return Err(CliError::Validation(format!("k axis value {value} is not a nonzero integer")));
                    }
                }
                "eps" => spec.rho_minus = value * spec.rho_plus,
                "alpha" => spec.alpha = *value,
                other => {
                    let (side, field) = other.split_once('.').expect("validated sweep parameter");
                    set_profile_field(&mut spec, side, field, *value)?;
                }
            }
        }
        let setup = spec.build()?;
        let region = match &cfg.region {
            Some(r) => r.build()?,
            None => default_region(&setup, k)?,
        };
        let catalog = mode_search::find_modes(&setup, k, &region).map_err(classify)?;
        let rep = semicircle::bound(&setup, k).map_err(classify)?;
        let top = catalog.most_unstable();
        let notes = assignment
            .iter()
            .map(|(p, v)| format!("{p}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        Ok(Row {
            k: Some(k),
            re_c: top.map(|r| r.c.re),
            im_c: top.map(|r| r.c.im),
            residual: top.map(|r| r.residual_abs),
            count: Some(catalog.counted),
            m: Some(rep.m),
            big_m: Some(rep.big_m),
            condition: Some(rep.condition_strict),
            notes,
        })
    };

    let results: Vec<(usize, Result<Row, CliError>)> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| (i, run_point(p)))
        .collect();
    let mut indexed: Vec<(usize, Result<Row, CliError>)> = results;
    indexed.sort_by_key(|(i, _)| *i);

    let mut rows = Vec::with_capacity(indexed.len());
    for ((_, result), assignment) in indexed.into_iter().zip(points.iter()) {
        match result {
            Ok(row) => rows.push(row),
            Err(CliError::Validation(m)) => return Err(CliError::Validation(m)),
            Err(CliError::Numerical(m)) => {
                if strict {
                    return Err(CliError::Numerical(m));
                }
                let notes = assignment
                    .iter()
                    .map(|(p, v)| format!("{p}={v}"))
                    .collect::<Vec<_>>()
                    .join(";");
                rows.push(Row { notes: format!("{notes};error={m}"), ..Default::default() });
            }
        }
    }
    Ok(CommandOutcome { report: Report::new("sweep", text, tol, rows), failure: None })
}
