//! Critical-layer formulation and the small-density bifurcation solver.
//!
//! On the outer side the quadratic quantities
//!
//! ```text
//! xi1 = |zeta|^2,  xi2 = Re(zeta' conj zeta),  xi3 = |zeta'|^2,
//! Phi = -Im(zeta conj zeta')
//! ```
//!
//! satisfy a real linear 4-vector system whose coefficients stay bounded
//! for `Im c != 0` and concentrate into Dirac masses at the critical
//! points `w(s) = Re c` as `Im c -> 0`. The singular limit is integrated
//! off those points, with the prescribed jumps of `Phi` and `xi3` applied
//! there; the connection across each point uses the local Frobenius basis
//! of the underlying scalar equation, which carries the logarithmic parts
//! through the window exactly.

use num_complex::Complex64;

use crate::dispersion::{self, Branch};
use crate::error::{Error, Result};
use crate::ode::{self, IvpOptions};
use crate::profiles::{CriticalPoint, CriticalPointOptions, ProblemSetup, Side};
use crate::rayleigh::Mode;

/// Tuning knobs for the singular-limit machinery.
#[derive(Debug, Clone)]
pub struct CriticalLayerConfig {
    /// Error-gauge exponent of the limit estimates, in (0, 1).
    pub mu: f64,
    /// Half-width of the singular windows; `None` selects a quarter of the
    /// minimal gap between critical points, Dirac points, and the ends.
    pub delta0: Option<f64>,
    /// Imaginary parts for convergence studies toward the limit system.
    pub eta_grid: Vec<f64>,
    pub ivp_rtol: f64,
    pub ivp_atol: f64,
}

impl Default for CriticalLayerConfig {
    fn default() -> Self {
        Self { mu: 0.9, delta0: None, eta_grid: vec![1e-2, 1e-3, 1e-4], ivp_rtol: 1e-11, ivp_atol: 1e-13 }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Variant {
    Full { c: Complex64 },
    Limit { r: f64, sign_i: i8 },
}

/// Data recorded at one critical point of the limit system.
#[derive(Debug, Clone, Copy)]
pub struct CrossingRecord {
    pub sigma: f64,
    pub w_dot: f64,
    pub varpi_dot: f64,
    /// `xi1` at the point (continuous across it), terminal-anchored scale.
    pub xi1: f64,
    /// Applied jump of `Phi` (value right of the point minus value left).
    pub phi_jump: f64,
    /// Applied jump of `xi3`.
    pub xi3_jump: f64,
}

/// Solved trace of the 4-vector system, anchored at the far boundary.
#[derive(Debug, Clone)]
pub struct CriticalLayerState {
    pub variant: Variant,
    pub k: i32,
    /// `(s, [xi1, xi2, xi3, Phi])`, ascending in `s`.
    pub samples: Vec<(f64, [f64; 4])>,
    /// State at the interface `s = 0` (before any normalization).
    pub interface: [f64; 4],
    /// Max of `|xi2^2 + Phi^2 - xi1 xi3| / (1 + xi1 xi3)` along the trace
    /// (meaningful for the full variant, where it is conserved).
    pub pythagorean_defect: f64,
    pub crossings: Vec<CrossingRecord>,
}

impl CriticalLayerState {
    /// `zeta'(0)` under the interface normalization `xi1(0) = 1`.
    pub fn zeta_prime_minus(&self) -> Complex64 {
        Complex64::new(self.interface[1] / self.interface[0], self.interface[3] / self.interface[0])
    }

    /// `Phi(0)` on the terminal-anchored scale.
    pub fn phi_at_interface(&self) -> f64 {
        self.interface[3]
    }

    /// Closed-sum value of `Phi(0)` implied by the recorded jumps (the
    /// limit `Phi` is piecewise constant and vanishes at the far end).
    pub fn phi_interface_from_jumps(&self) -> f64 {
        -self.crossings.iter().map(|c| c.phi_jump).sum::<f64>()
    }
}

/// Far-boundary start of the outer integration: position and state.
///
/// A finite wall carries Dirichlet data `zeta = 0, zeta' = 1`; an exterior
/// region starts on the last Dirac point with the exact decaying branch
/// `zeta ~ e^{-|k| s}` (the pointwise coefficient is exactly `k^2` beyond).
fn outer_start(setup: &ProblemSetup, k: i32) -> Result<(f64, [f64; 4])> {
    let ka = (k.abs() as f64).max(1.0);
    let d = setup.profile(Side::Minus).domain();
    if d.hi.is_finite() {
        Ok((d.hi, [0.0, 0.0, 1.0, 0.0]))
    } else {
        let diracs = setup.profile(Side::Minus).dirac_points();
        let s_b = diracs.iter().map(|p| p.s).fold(12.0 / ka, f64::max);
        Ok((s_b, [1.0, -ka, ka * ka, 0.0]))
    }
}

/// Exact update of the quadratic quantities across a Dirac mass of
/// `varpi'`, moving leftward: `zeta'` jumps by `-beta zeta` with
/// `beta = jump / (w(s) - c)`.
fn apply_dirac_jump_leftward(y: &mut [f64; 4], beta: Complex64) {
    let (xi1, xi2, xi3, phi) = (y[0], y[1], y[2], y[3]);
    y[1] = xi2 - beta.re * xi1;
    y[3] = phi - beta.im * xi1;
    y[2] = xi3 - 2.0 * (beta.re * xi2 + beta.im * phi) + beta.norm_sqr() * xi1;
}

/// Integrate the full 4-vector system from the far boundary to `s = 0`.
pub fn integrate_full(setup: &ProblemSetup, mode: Mode, cfg: &CriticalLayerConfig) -> Result<CriticalLayerState> {
    if mode.c.im == 0.0 {
        return Err(Error::BadParams("the full critical-layer system needs Im c != 0".into()));
    }
    let profile = setup.profile(Side::Minus);
    let (r, i) = (mode.c.re, mode.c.im);
    let ksq = (mode.k as f64) * (mode.k as f64);
    let rhs = move |s: f64, y: &[f64; 4]| -> [f64; 4] {
        let j = profile.jet_clamped(s);
        let vd = 2.0 * j.w1 + j.w2;
        let dr = j.w - r;
        let den = dr * dr + i * i;
        let rr = vd * dr / den;
        let tt = i * vd / den;
        [
            2.0 * y[1],
            (ksq + rr) * y[0] + y[2],
            2.0 * (ksq + rr) * y[1] + 2.0 * tt * y[3],
            tt * y[0],
        ]
    };
    let singular_possible = !profile.pointwise_varpi_dot_vanishes();
    let step_cap = move |s: f64, _y: &[f64; 4]| -> f64 {
        if !singular_possible {
            return f64::INFINITY;
        }
        let j = profile.jet_clamped(s);
        let dist = ((j.w - r) * (j.w - r) + i * i).sqrt();
        if dist < 1e-2 {
            1e-2 * dist / j.w1.abs().max(1.0)
        } else {
            f64::INFINITY
        }
    };

    let (start, y0) = outer_start(setup, mode.k)?;
    let ivp = IvpOptions { rtol: cfg.ivp_rtol, atol: cfg.ivp_atol, ..Default::default() };
    let mut samples: Vec<(f64, [f64; 4])> = Vec::new();
    let mut y = y0;
    let mut s_cur = start;
    // Dirac points: apply the quadratic jump when crossing leftward.
    let mut breaks: Vec<f64> =
        profile.dirac_points().iter().map(|p| p.s).filter(|&s| s < start - 1e-14 && s > 1e-14).collect();
    breaks.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for p in profile.dirac_points() {
        if (p.s - start).abs() <= 1e-14 {
            let w_star = profile.w_continuous(p.s)?;
            let beta = p.varpi_jump / (Complex64::new(w_star, 0.0) - mode.c);
            apply_dirac_jump_leftward(&mut y, beta);
        }
    }
    let mut segments = breaks.clone();
    segments.push(0.0);
    for (idx, &s_next) in segments.iter().enumerate() {
        if !samples.is_empty() {
            samples.pop();
        }
        let mut observer = |s: f64, v: &[f64; 4]| samples.push((s, *v));
        y = ode::integrate(&rhs, s_cur, s_next, y, &ivp, &step_cap, &mut observer)?;
        s_cur = s_next;
        if idx < breaks.len() {
            let p = profile
                .dirac_points()
                .into_iter()
                .find(|p| (p.s - s_next).abs() <= 1e-14)
                .expect("break is a Dirac point");
            let w_star = profile.w_continuous(p.s)?;
            let beta = p.varpi_jump / (Complex64::new(w_star, 0.0) - mode.c);
            apply_dirac_jump_leftward(&mut y, beta);
            if let Some(last) = samples.last_mut() {
                last.1 = y;
            }
        }
    }
    samples.reverse();

    let mut defect = 0.0_f64;
    for (_, v) in &samples {
        let p = v[1] * v[1] + v[3] * v[3] - v[0] * v[2];
        defect = defect.max(p.abs() / (1.0 + v[0] * v[2]));
    }
    if defect > 1e-6 {
        return Err(Error::IdentityDrift { defect, tol: 1e-6 });
    }
    Ok(CriticalLayerState {
        variant: Variant::Full { c: mode.c },
        k: mode.k,
        samples,
        interface: y,
        pythagorean_defect: defect,
        crossings: Vec::new(),
    })
}

/// Frobenius data of the scalar limit equation at a regular critical point.
struct WindowBasis {
    gamma: f64,
    a2: f64,
    a3: f64,
    a4: f64,
    b2: f64,
    b3: f64,
}

impl WindowBasis {
    /// Local series of `u'' = (k^2 + varpi'/(w - R)) u` around `sigma`,
    /// where `w(sigma) = R` and `w'(sigma) != 0`: exponents 1 and 0, with
    /// the exponent-0 solution carrying `gamma u1 ln|t|`.
    fn at(profile_jet: crate::profiles::Jet, ksq: f64) -> Self {
        let (w1, w2, w3, w4) = (profile_jet.w1, profile_jet.w2, profile_jet.w3, profile_jet.w4);
        let p0 = 2.0 * w1 + w2;
        let p1 = 2.0 * w2 + w3;
        let p2 = 2.0 * w3 + w4;
        let gamma = p0 / w1;
        let q0 = ksq + (p1 - p0 * w2 / (2.0 * w1)) / w1;
        let q1 = (p2 / 2.0 - p1 * w2 / (2.0 * w1) + p0 * (w2 * w2 / (4.0 * w1 * w1) - w3 / (6.0 * w1))) / w1;
        let a2 = gamma / 2.0;
        let a3 = (gamma * a2 + q0) / 6.0;
        let a4 = (gamma * a3 + q0 * a2 + q1) / 12.0;
        let b2 = (q0 - 3.0 * gamma * a2) / 2.0;
        let b3 = (gamma * b2 + q1 - 5.0 * gamma * a3) / 6.0;
        Self { gamma, a2, a3, a4, b2, b3 }
    }

    /// `(u1, u1', u2, u2')` at offset `t` from the critical point.
    fn eval(&self, t: f64) -> (f64, f64, f64, f64) {
        let l = t.abs().ln();
        let u1 = t + self.a2 * t * t + self.a3 * t * t * t + self.a4 * t * t * t * t;
        let du1 = 1.0 + 2.0 * self.a2 * t + 3.0 * self.a3 * t * t + 4.0 * self.a4 * t * t * t;
        let v = 1.0 + self.b2 * t * t + self.b3 * t * t * t;
        let dv = 2.0 * self.b2 * t + 3.0 * self.b3 * t * t;
        let u2 = v + self.gamma * u1 * l;
        let du2 = dv + self.gamma * (du1 * l + u1 / t);
        (u1, du1, u2, du2)
    }

    /// Symmetric-square basis columns `(S22, S12, S11)` at offset `t`.
    fn quadratic_columns(&self, t: f64) -> [[f64; 3]; 3] {
        let (u1, du1, u2, du2) = self.eval(t);
        [
            [u2 * u2, u2 * du2, du2 * du2],
            [u1 * u2, 0.5 * (du1 * u2 + u1 * du2), du1 * du2],
            [u1 * u1, u1 * du1, du1 * du1],
        ]
    }
}

/// Solve a 3x3 linear system by Gaussian elimination with partial pivoting.
fn solve3(cols: &[[f64; 3]; 3], rhs: &[f64; 3]) -> Result<[f64; 3]> {
    // Assemble row-major A with A[r][c] = cols[c][r].
    let mut a = [[0.0; 4]; 3];
    for r in 0..3 {
        for c in 0..3 {
            a[r][c] = cols[c][r];
        }
        a[r][3] = rhs[r];
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::IntegratorFailure { s: f64::NAN, reason: "singular window basis".into() });
        }
        a.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let mut v = a[r][3];
        for c in r + 1..3 {
            v -= a[r][c] * x[c];
        }
        x[r] = v / a[r][r];
    }
    Ok(x)
}

/// Integrate the singular-limit system from the far boundary to `s = 0`,
/// applying the printed jump conditions at every critical point of
/// `w(s) = r`.
pub fn integrate_limit(
    setup: &ProblemSetup,
    k: i32,
    r: f64,
    sign_i: i8,
    cfg: &CriticalLayerConfig,
) -> Result<CriticalLayerState> {
    let profile = setup.profile(Side::Minus);
    let sgn = if sign_i >= 0 { 1.0 } else { -1.0 };
    let cps = profile.critical_points(r, &CriticalPointOptions::default())?;
    let (start, mut y) = outer_start(setup, k)?;

    // Window half-width: a quarter of the smallest gap between critical
    // points, Dirac points, and the interval ends.
    let mut marks: Vec<f64> = vec![0.0, start];
    marks.extend(cps.points.iter().map(|p| p.sigma));
    marks.extend(profile.dirac_points().iter().map(|p| p.s).filter(|&s| s <= start));
    marks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min_gap = marks.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let delta0 = match cfg.delta0 {
        Some(d) => d,
        None => min_gap / 4.0,
    };
    if !cps.points.is_empty() {
        let first = cps.points.first().unwrap().sigma;
        let last = cps.points.last().unwrap().sigma;
        let pairwise_ok = cps.points.windows(2).all(|w| w[0].sigma + delta0 < w[1].sigma - delta0);
        if !(first - delta0 > 0.0 && last + delta0 < start && pairwise_ok) {
            return Err(Error::BadParams(format!(
                "singular windows of half-width {delta0} are not disjoint and interior"
            )));
        }
    }
    let delta_t = (3e-3_f64).min(delta0 / 4.0).min(1e-1);

    let ksq = (k as f64) * (k as f64);
    let rhs = move |s: f64, yv: &[f64; 4]| -> [f64; 4] {
        let j = profile.jet_clamped(s);
        let vd = 2.0 * j.w1 + j.w2;
        let q = ksq + vd / (j.w - r);
        [2.0 * yv[1], q * yv[0] + yv[2], 2.0 * q * yv[1], 0.0]
    };
    let step_cap = move |s: f64, _yv: &[f64; 4]| -> f64 {
        let j = profile.jet_clamped(s);
        if j.w2 == 0.0 && j.w1 == 0.0 {
            return f64::INFINITY;
        }
        let dist = (j.w - r).abs();
        if dist < 1e-2 {
            (1e-2 * dist / j.w1.abs().max(1.0)).max(1e-9)
        } else {
            f64::INFINITY
        }
    };
    let ivp = IvpOptions { rtol: cfg.ivp_rtol, atol: cfg.ivp_atol, ..Default::default() };

    // Events encountered while integrating right -> left.
    enum Event {
        Window(CriticalPoint),
        Dirac(f64, f64),
    }
    let mut events: Vec<Event> = Vec::new();
    for p in &cps.points {
        if p.sigma < start {
            events.push(Event::Window(*p));
        }
    }
    for p in profile.dirac_points() {
        if p.s <= start && p.s > 0.0 {
            events.push(Event::Dirac(p.s, p.varpi_jump));
        }
    }
    events.sort_by(|a, b| {
        let sa = match a {
            Event::Window(p) => p.sigma,
            Event::Dirac(s, _) => *s,
        };
        let sb = match b {
            Event::Window(p) => p.sigma,
            Event::Dirac(s, _) => *s,
        };
        sb.partial_cmp(&sa).unwrap()
    });

    let mut samples: Vec<(f64, [f64; 4])> = Vec::new();
    let mut crossings: Vec<CrossingRecord> = Vec::new();
    let mut s_cur = start;
    // Dirac point exactly at the start (exterior profiles).
    for p in profile.dirac_points() {
        if (p.s - start).abs() <= 1e-14 {
            let w_star = profile.w_continuous(p.s)?;
            if (w_star - r).abs() < 1e-8 {
                return Err(Error::SingularCoefficient { c: Complex64::new(r, 0.0), margin: (w_star - r).abs() });
            }
            let beta = Complex64::new(p.varpi_jump / (w_star - r), 0.0);
            apply_dirac_jump_leftward(&mut y, beta);
        }
    }

    let run_segment = |s_from: f64, s_to: f64, y_in: [f64; 4], samples: &mut Vec<(f64, [f64; 4])>| -> Result<[f64; 4]> {
        if !samples.is_empty() {
            samples.pop();
        }
        let mut observer = |s: f64, v: &[f64; 4]| samples.push((s, *v));
        ode::integrate(&rhs, s_from, s_to, y_in, &ivp, &step_cap, &mut observer)
    };

    for ev in events {
        match ev {
            Event::Window(cp) => {
                y = run_segment(s_cur, cp.sigma + delta_t, y, &mut samples)?;
                let jet = profile.jet(cp.sigma)?;
                let basis = WindowBasis::at(jet, ksq);
                let cols_r = basis.quadratic_columns(delta_t);
                // Coefficients (p, q, r) of the symmetric-square basis
                // (S22, S12, S11); at the point itself u2 = 1 and u1 = 0,
                // so xi1(sigma) = p and the xi3 jump acts on r alone.
                let mut pqr = solve3(&cols_r, &[y[0], y[1], y[2]])?;
                let xi1_sigma = pqr[0];
                let p0 = cp.varpi_dot;
                let phi_right = y[3];
                let phi_jump = sgn * std::f64::consts::PI * p0 * xi1_sigma / cp.w_dot.abs();
                let phi_left = phi_right - phi_jump;
                let xi3_jump = sgn * std::f64::consts::PI * p0 / cp.w_dot.abs() * (phi_right + phi_left);
                pqr[2] -= xi3_jump;
                let cols_l = basis.quadratic_columns(-delta_t);
                let cont = |comp: usize| -> f64 {
                    pqr[0] * cols_l[0][comp] + pqr[1] * cols_l[1][comp] + pqr[2] * cols_l[2][comp]
                };
                y = [cont(0), cont(1), cont(2), phi_left];
                crossings.push(CrossingRecord {
                    sigma: cp.sigma,
                    w_dot: cp.w_dot,
                    varpi_dot: p0,
                    xi1: xi1_sigma,
                    phi_jump,
                    xi3_jump,
                });
                samples.push((cp.sigma - delta_t, y));
                s_cur = cp.sigma - delta_t;
            }
            Event::Dirac(s_d, jump) => {
                y = run_segment(s_cur, s_d, y, &mut samples)?;
                let w_star = profile.w_continuous(s_d)?;
                if (w_star - r).abs() < 1e-8 {
                    return Err(Error::SingularCoefficient {
                        c: Complex64::new(r, 0.0),
                        margin: (w_star - r).abs(),
                    });
                }
                apply_dirac_jump_leftward(&mut y, Complex64::new(jump / (w_star - r), 0.0));
                if let Some(last) = samples.last_mut() {
                    last.1 = y;
                }
                s_cur = s_d;
            }
        }
    }
    y = run_segment(s_cur, 0.0, y, &mut samples)?;
    samples.reverse();
    crossings.reverse();

    Ok(CriticalLayerState {
        variant: Variant::Limit { r, sign_i },
        k,
        samples,
        interface: y,
        pythagorean_defect: 0.0,
        crossings,
    })
}

/// Convergence of the full system toward the limit system at `s = 0`.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    /// `(eta, |Phi_full(0) - Phi_limit(0)|)` per grid point.
    pub points: Vec<(f64, f64)>,
    /// Fitted exponent of the decay in `eta`.
    pub rate: f64,
}

/// Run `integrate_full` along the `eta` ladder and fit the decay rate of
/// the interface gap to the limit solution.
pub fn limit_convergence_study(
    setup: &ProblemSetup,
    k: i32,
    r: f64,
    cfg: &CriticalLayerConfig,
) -> Result<ConvergenceStudy> {
    let limit = integrate_limit(setup, k, r, 1, cfg)?;
    let phi_hat = limit.phi_at_interface();
    let mut points = Vec::new();
    for &eta in &cfg.eta_grid {
        let full = integrate_full(setup, Mode { k, c: Complex64::new(r, eta) }, cfg)?;
        points.push((eta, (full.phi_at_interface() - phi_hat).abs()));
    }
    let rate = fit_slope(points.iter().map(|(e, d)| (e.ln(), d.max(1e-300).ln())));
    Ok(ConvergenceStudy { points, rate })
}

fn fit_slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points.collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Prediction data for the wind-induced bifurcation off one branch.
#[derive(Debug, Clone)]
pub struct BifurcationPrediction {
    pub branch: Branch,
    pub c_k: f64,
    pub h_i0: f64,
    pub c_sharp: f64,
    pub crossings: Vec<CriticalPoint>,
    /// `xi1` at the crossings under the interface normalization.
    pub xi1_normalized: Vec<f64>,
}

/// Check the sign hypotheses at `c^(k)` and assemble the bifurcation
/// coefficient `c# = -pi h_I(0) sum varpi'(s_j) xi1(s_j) / |w'(s_j)|`.
pub fn predict_bifurcation(
    setup: &ProblemSetup,
    k: i32,
    branch: Branch,
    cfg: &CriticalLayerConfig,
) -> Result<BifurcationPrediction> {
    let sde = dispersion::small_density_expansion(setup, k)?;
    let c_k = sde.speed(branch);
    let h_i0 = sde.h_i0(branch);
    let profile = setup.profile(Side::Minus);
    let cps = profile.critical_points(c_k, &CriticalPointOptions::default())?;
    if cps.points.is_empty() {
        return Err(Error::HypothesisViolated(format!(
            "the unperturbed speed {c_k} has no critical layer in the wind range"
        )));
    }
    let scale = 1.0 + c_k.abs() * cps.points.iter().map(|p| p.varpi_dot.abs()).fold(0.0, f64::max);
    let tol = 1e-12 * scale;
    for p in &cps.points {
        if c_k * p.varpi_dot > tol {
            return Err(Error::HypothesisViolated(format!(
                "c^(k) varpi'(s_j) = {} > 0 at s_j = {}",
                c_k * p.varpi_dot,
                p.sigma
            )));
        }
    }
    let n = cps.points.len();
    let strict = (n >= 1 && c_k * cps.points[n - 1].varpi_dot < -tol)
        || (n >= 2 && c_k * cps.points[n - 2].varpi_dot < -tol);
    if !strict {
        return Err(Error::HypothesisViolated(
            "c^(k) varpi'(s_l) < 0 fails at both of the last two critical points".into(),
        ));
    }

    let limit = integrate_limit(setup, k, c_k, 1, cfg)?;
    let xi1_0 = limit.interface[0];
    if !(xi1_0 > 0.0) {
        return Err(Error::HypothesisViolated(format!("limit solution has xi1(0) = {xi1_0} <= 0")));
    }
    let xi1_normalized: Vec<f64> = limit.crossings.iter().map(|c| c.xi1 / xi1_0).collect();
    let sum: f64 = limit
        .crossings
        .iter()
        .zip(&xi1_normalized)
        .map(|(c, &x)| c.varpi_dot * x / c.w_dot.abs())
        .sum();
    let c_sharp = -std::f64::consts::PI * h_i0 * sum;
    if c_sharp <= 1e-12 {
        return Err(Error::ZeroPrediction { c_sharp });
    }
    Ok(BifurcationPrediction { branch, c_k, h_i0, c_sharp, crossings: cps.points, xi1_normalized })
}

/// Result of the two-parameter correction solve.
#[derive(Debug, Clone)]
pub struct BifurcationSolve {
    pub branch: Branch,
    pub c_k: f64,
    pub c_sharp: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub c_final: Complex64,
    pub lambda_residuals: (f64, f64),
    pub newton_iterations: usize,
}

/// Root of the algebraic (quadratic in `c`) dispersion relation for a
/// Taylor-Couette inner flow, with the outer side entering through
/// `eps zeta'-(0)`; the branch is resolved by continuity from `center`.
pub fn algebraic_phase_velocity(
    setup: &ProblemSetup,
    k: i32,
    eps: f64,
    zeta_prime_minus: Complex64,
    center_hint: f64,
) -> Result<Complex64> {
    let (a, b) = setup
        .profile(Side::Plus)
        .as_taylor_couette()
        .ok_or_else(|| Error::BadParams("algebraic dispersion needs a Taylor-Couette inner profile".into()))?;
    let p = dispersion::wall_factor_inner(setup.r_in, k);
    let f = 1.0 / p;
    let kappa = a + b - f * b;
    let (wm0, vm0) = setup.interface_values(Side::Minus)?;
    let z = zeta_prime_minus;
    let ksq = (k as f64) * (k as f64);
    let qa = Complex64::new(p, 0.0) - eps * z;
    let qb = Complex64::new(-2.0 * p * kappa - eps * vm0, 0.0) + 2.0 * eps * z * wm0;
    let qc = Complex64::new(
        p * kappa * kappa + eps * (wm0 * vm0 - wm0 * wm0) - f * b * b + (a + b) * (a + b)
            - setup.alpha / setup.rho_plus * (ksq - 1.0),
        0.0,
    ) - eps * z * wm0 * wm0;
    let disc = qb * qb - 4.0 * qa * qc;
    let sq = disc.sqrt();
    let r1 = (-qb + sq) / (2.0 * qa);
    let r2 = (-qb - sq) / (2.0 * qa);
    Ok(if (r1.re - center_hint).abs() <= (r2.re - center_hint).abs() { r1 } else { r2 })
}

/// Two-parameter Newton solve for a genuine unstable mode at density
/// ratio `eps`, using the ansatz `c = (c_k + nu1) + i eps (c# + nu2)`.
pub fn solve_unstable_mode(
    setup: &ProblemSetup,
    k: i32,
    branch: Branch,
    eps: f64,
    cfg: &CriticalLayerConfig,
) -> Result<BifurcationSolve> {
    let pred = predict_bifurcation(setup, k, branch, cfg)?;
    if !(0.0..=1e-2).contains(&eps) {
        return Err(Error::BadParams(format!("eps = {eps} outside the supported range [0, 1e-2]")));
    }
    if eps == 0.0 {
        return Ok(BifurcationSolve {
            branch,
            c_k: pred.c_k,
            c_sharp: pred.c_sharp,
            nu1: 0.0,
            nu2: 0.0,
            c_final: Complex64::new(pred.c_k, 0.0),
            lambda_residuals: (0.0, 0.0),
            newton_iterations: 0,
        });
    }

    let lambda = |nu1: f64, nu2: f64| -> Result<(f64, f64)> {
        let im = eps * (pred.c_sharp + nu2);
        if im <= 0.0 {
            return Err(Error::LeftHalfPlane { im_c: im });
        }
        let c = Complex64::new(pred.c_k + nu1, im);
        let full = integrate_full(setup, Mode { k, c }, cfg)?;
        let z = full.zeta_prime_minus();
        let c_alg = algebraic_phase_velocity(setup, k, eps, z, pred.c_k)?;
        Ok(((pred.c_k + nu1) - c_alg.re, (pred.c_sharp + nu2) - c_alg.im / eps))
    };

    let mut nu = [0.0_f64, 0.0_f64];
    let mut lam = lambda(nu[0], nu[1])?;
    let mut norm = lam.0.abs().max(lam.1.abs());
    let tol = 1e-9;
    let mut iterations = 0;
    while norm > tol {
        iterations += 1;
        if iterations > 50 {
            return Err(Error::NewtonDiverged { iterations, r1: lam.0.abs(), r2: lam.1.abs() });
        }
        let h1 = 1e-7 * (1.0 + nu[0].abs());
        let h2 = 1e-7 * (1.0 + nu[1].abs());
        let l10 = lambda(nu[0] + h1, nu[1])?;
        let l01 = lambda(nu[0], nu[1] + h2)?;
        let j = [
            [(l10.0 - lam.0) / h1, (l01.0 - lam.0) / h2],
            [(l10.1 - lam.1) / h1, (l01.1 - lam.1) / h2],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return Err(Error::NewtonDiverged { iterations, r1: lam.0.abs(), r2: lam.1.abs() });
        }
        let mut step = [
            (j[1][1] * lam.0 - j[0][1] * lam.1) / det,
            (-j[1][0] * lam.0 + j[0][0] * lam.1) / det,
        ];
        let mut accepted = false;
        for _ in 0..20 {
            let cand = [nu[0] - step[0], nu[1] - step[1]];
            if eps * (pred.c_sharp + cand[1]) > 0.0 {
                if let Ok(l_new) = lambda(cand[0], cand[1]) {
                    let n_new = l_new.0.abs().max(l_new.1.abs());
                    if n_new < norm {
                        nu = cand;
                        lam = l_new;
                        norm = n_new;
                        accepted = true;
                        break;
                    }
                }
            }
            step[0] *= 0.5;
            step[1] *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDiverged { iterations, r1: lam.0.abs(), r2: lam.1.abs() });
        }
    }
    let im_final = pred.c_sharp + nu[1];
    if im_final <= 0.0 {
        return Err(Error::LeftHalfPlane { im_c: eps * im_final });
    }
    Ok(BifurcationSolve {
        branch,
        c_k: pred.c_k,
        c_sharp: pred.c_sharp,
        nu1: nu[0],
        nu2: nu[1],
        c_final: Complex64::new(pred.c_k + nu[0], eps * im_final),
        lambda_residuals: (lam.0.abs(), lam.1.abs()),
        newton_iterations: iterations,
    })
}

/// One point of the square-root-scaling study.
#[derive(Debug, Clone, Copy)]
pub struct ScalingPoint {
    pub eps: f64,
    pub lambda_r: f64,
    pub lambda_i: f64,
    /// Distance of the nearest critical layer to the vorticity kink.
    pub layer_separation: f64,
}

/// Fitted scaling of the piecewise-outer instability in the density ratio.
#[derive(Debug, Clone)]
pub struct ScalingStudy {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Fitted slope of `log lambda_I` against `log eps`.
    pub slope: f64,
    /// Fitted slope of `log |lambda_R - lambda_plus|` against `log eps`.
    pub r_slope: f64,
    pub points: Vec<ScalingPoint>,
}

/// Scan the density-ratio ladder for the calibrated piecewise-outer
/// profile, fitting the growth of the unstable imaginary part.
pub fn epsilon_scaling_study(params: &dispersion::LipschitzParams, ladder: &[f64]) -> Result<ScalingStudy> {
    if ladder.len() < 3 {
        return Err(Error::BadParams("the eps ladder needs at least 3 points".into()));
    }
    let lo = ladder.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ladder.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 1e3 {
        return Err(Error::BadParams("the eps ladder must span at least three decades".into()));
    }
    let (lp, lm) = dispersion::lambda_pm(params.k, params.big_b, params.alpha, params.rho_plus)?;
    let profile = crate::profiles::AngularProfile::piecewise_outer(
        params.omega_star,
        params.b,
        params.s_star,
        crate::profiles::Domain::new(0.0, f64::INFINITY)?,
    )?;
    let mut points = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let (upper, _) = dispersion::lipschitz_case_roots(params, eps)?;
        let cps = profile.critical_points(upper.re, &CriticalPointOptions::default())?;
        let separation = cps
            .points
            .iter()
            .map(|p| (p.sigma - params.s_star).abs())
            .fold(f64::INFINITY, f64::min);
        points.push(ScalingPoint { eps, lambda_r: upper.re, lambda_i: upper.im, layer_separation: separation });
    }
    let slope = fit_slope(points.iter().map(|p| (p.eps.ln(), p.lambda_i.max(1e-300).ln())));
    let r_slope = fit_slope(points.iter().map(|p| (p.eps.ln(), (p.lambda_r - lp).abs().max(1e-300).ln())));
    Ok(ScalingStudy { lambda_plus: lp, lambda_minus: lm, slope, r_slope, points })
}
