//! The interface dispersion relation and its closed-form special cases.
//!
//! The residual `D(c)` couples the two side solves through
//!
//! ```text
//! D(c) = [alpha (k^2 - 1) - rho+ w+(0)^2 + rho- w-(0)^2]
//!      - { rho+ [zeta'+(0) (w+(0) - c)^2 - varpi+(0) (w+(0) - c)]
//!        - rho- [zeta'-(0) (w-(0) - c)^2 - varpi-(0) (w-(0) - c)] }
//! ```
//!
//! and a pair `(c, k)` is a mode exactly when `D(c) = 0`. Closed-form
//! rearrangements exist for constant vortices, capillary constant flows,
//! Taylor-Couette water waves, two-phase Taylor-Couette flows, and the
//! piecewise-exponential outer profile; they serve as independent oracles.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profiles::{ProblemSetup, Side};
use crate::rayleigh::{solve_side, Mode, SolveOptions};

/// Relative acceptance threshold: a mode is accepted when
/// `|D(c)| <= ACCEPTANCE_REL * acceptance_scale(setup, k)`.
pub const ACCEPTANCE_REL: f64 = 1e-9;

/// Natural magnitude of the dispersion terms for the given setup.
pub fn acceptance_scale(setup: &ProblemSetup, k: i32) -> f64 {
    let wp0 = setup.profile(Side::Plus).w_continuous(0.0).unwrap_or(0.0);
    let wm0 = setup.profile(Side::Minus).w_continuous(0.0).unwrap_or(0.0);
    setup.alpha.abs() * (k as f64) * (k as f64)
        + setup.rho_plus * (1.0 + wp0 * wp0)
        + setup.rho_minus * (1.0 + wm0 * wm0)
}

/// Assembled dispersion data at one trial mode.
#[derive(Debug, Clone)]
pub struct DispersionResidual {
    pub mode: Mode,
    pub value: Complex64,
    pub zeta_prime_plus: Complex64,
    pub zeta_prime_minus: Complex64,
    pub derivative_estimate: Option<Complex64>,
    pub scale: f64,
}

impl DispersionResidual {
    pub fn accepted(&self) -> bool {
        self.value.norm() <= ACCEPTANCE_REL * self.scale
    }
}

/// Evaluate `D(c)` by solving both side problems.
///
/// A vacuous outer fluid (`rho_minus = 0`) skips the outer solve entirely;
/// every outer term carries the factor `rho_minus`.
pub fn residual(setup: &ProblemSetup, mode: Mode, opts: &SolveOptions) -> Result<DispersionResidual> {
    let sol_plus = solve_side(setup, Side::Plus, mode, opts)?;
    let zp = sol_plus.zeta_prime_at_0;
    let zm = if setup.rho_minus > 0.0 {
        solve_side(setup, Side::Minus, mode, opts)?.zeta_prime_at_0
    } else {
        Complex64::new(0.0, 0.0)
    };
    let value = assemble(setup, mode, zp, zm)?;
    Ok(DispersionResidual {
        mode,
        value,
        zeta_prime_plus: zp,
        zeta_prime_minus: zm,
        derivative_estimate: None,
        scale: acceptance_scale(setup, mode.k),
    })
}

/// Like [`residual`] but also estimates `dD/dc` by central differences
/// with step `1e-6 (1 + |c|)`.
pub fn residual_with_derivative(
    setup: &ProblemSetup,
    mode: Mode,
    opts: &SolveOptions,
) -> Result<DispersionResidual> {
    let mut r = residual(setup, mode, opts)?;
    let h = 1e-6 * (1.0 + mode.c.norm());
    let rp = residual(setup, Mode { k: mode.k, c: mode.c + h }, opts)?;
    let rm = residual(setup, Mode { k: mode.k, c: mode.c - h }, opts)?;
    r.derivative_estimate = Some((rp.value - rm.value) / (2.0 * h));
    Ok(r)
}

/// Combine side data into `D(c)` without re-solving.
pub fn assemble(
    setup: &ProblemSetup,
    mode: Mode,
    zeta_prime_plus: Complex64,
    zeta_prime_minus: Complex64,
) -> Result<Complex64> {
    let k = mode.k as f64;
    let c = mode.c;
    let (wp0, vp0) = setup.interface_values(Side::Plus)?;
    let (wm0, vm0) = setup.interface_values(Side::Minus)?;
    let lhs = Complex64::new(
        setup.alpha * (k * k - 1.0) - setup.rho_plus * wp0 * wp0 + setup.rho_minus * wm0 * wm0,
        0.0,
    );
    let dp = Complex64::new(wp0, 0.0) - c;
    let dm = Complex64::new(wm0, 0.0) - c;
    let plus_terms = setup.rho_plus * (zeta_prime_plus * dp * dp - vp0 * dp);
    let minus_terms = setup.rho_minus * (zeta_prime_minus * dm * dm - vm0 * dm);
    Ok(lhs - (plus_terms - minus_terms))
}

// ---------------------------------------------------------------------------
// Closed-form oracle relations
// ---------------------------------------------------------------------------

/// Wall factor of the inner region: `|k| (1 + Rin^{2|k|}) / (1 - Rin^{2|k|})`,
/// reducing to `|k|` for the disk.
pub fn wall_factor_inner(r_in: f64, k: i32) -> f64 {
    let ka = k.abs() as f64;
    if r_in == 0.0 {
        ka
    } else {
        let t = r_in.powi(2 * k.abs());
        ka * (1.0 + t) / (1.0 - t)
    }
}

/// Wall factor of the outer region: `|k| (1 + Rout^{2|k|}) / (Rout^{2|k|} - 1)`,
/// reducing to `|k|` for the exterior plane. The actual interface derivative
/// of the outer solve is the negative of this.
pub fn wall_factor_outer(r_out: f64, k: i32) -> f64 {
    let ka = k.abs() as f64;
    if r_out == f64::INFINITY {
        ka
    } else {
        let t = r_out.powi(2 * k.abs());
        ka * (1.0 + t) / (t - 1.0)
    }
}

/// Parameters of the piecewise-exponential outer profile example.
#[derive(Debug, Clone, Copy)]
pub struct LipschitzParams {
    pub omega_star: f64,
    pub b: f64,
    pub s_star: f64,
    /// Constant inner angular velocity.
    pub big_b: f64,
    pub alpha: f64,
    pub rho_plus: f64,
    pub k: i32,
}

impl LipschitzParams {
    /// Outer angular velocity at the vorticity kink.
    pub fn w_at_star(&self) -> f64 {
        let e = (-2.0 * self.s_star).exp();
        self.omega_star * (1.0 - e) + self.b * e
    }

    /// The two poles/zeros of the outer interface derivative,
    /// `zeta'-(0) = -|k| (c - gamma1) / (c - gamma2)`.
    pub fn gammas(&self) -> (f64, f64) {
        let ka = self.k.abs() as f64;
        let ek = (-2.0 * ka * self.s_star).exp();
        let w_star = self.w_at_star();
        let g1 = w_star - self.omega_star / ka * (1.0 + ek);
        let g2 = w_star - self.omega_star / ka * (1.0 - ek);
        (g1, g2)
    }
}

/// Unperturbed phase speeds of the constant-vortex capillary problem,
/// `lambda_pm = (1 - 1/|k|) B +- sqrt(((|k|-1)/k^2) [ (alpha/rho+) |k|(|k|+1) - B^2 ])`.
pub fn lambda_pm(k: i32, big_b: f64, alpha: f64, rho_plus: f64) -> Result<(f64, f64)> {
    if k.abs() < 2 {
        return Err(Error::BadParams(format!("|k| >= 2 required, got k = {k}")));
    }
    if !(rho_plus > 0.0) {
        return Err(Error::BadParams("rho_plus must be positive".into()));
    }
    let ka = k.abs() as f64;
    let rad = (ka - 1.0) / (ka * ka) * (alpha / rho_plus * ka * (ka + 1.0) - big_b * big_b);
    if rad <= 0.0 {
        return Err(Error::BadParams(format!(
            "B^2 = {} must stay below (alpha/rho+) |k|(|k|+1) = {}",
            big_b * big_b,
            alpha / rho_plus * ka * (ka + 1.0)
        )));
    }
    let center = (1.0 - 1.0 / ka) * big_b;
    Ok((center + rad.sqrt(), center - rad.sqrt()))
}

/// Closed-form dispersion relations, evaluated as (LHS - RHS) of the
/// printed algebraic identity.
#[derive(Debug, Clone)]
pub enum OracleCase {
    ConstantVortex { k: i32 },
    CapillaryConstant { alpha: f64, rho_plus: f64, big_b: f64, k: i32 },
    TCWaterWave { alpha: f64, rho_plus: f64, a: f64, b: f64, r_in: f64, k: i32 },
    TwoPhaseTC {
        alpha: f64,
        rho_plus: f64,
        eps: f64,
        a_in: f64,
        b_in: f64,
        a_out: f64,
        b_out: f64,
        r_in: f64,
        r_out: f64,
        k: i32,
    },
    LipschitzOuter { params: LipschitzParams, eps: f64 },
}

/// Center and right-hand side of the two-phase Taylor-Couette relation,
/// returned as `(s_factor, center, rhs)` with LHS = `s_factor (c - center)^2`.
pub(crate) fn two_phase_tc_parts(
    alpha: f64,
    rho_plus: f64,
    eps: f64,
    a_in: f64,
    b_in: f64,
    a_out: f64,
    b_out: f64,
    r_in: f64,
    r_out: f64,
    k: i32,
) -> (f64, f64, f64) {
    let p = wall_factor_inner(r_in, k);
    let q = wall_factor_outer(r_out, k);
    let s = p + eps * q;
    let n = p * (a_in + b_in) - b_in + eps * q * (a_out + b_out) + eps * b_out;
    let ksq = (k as f64) * (k as f64);
    let rhs = alpha / rho_plus * (ksq - 1.0) + n * n / s + (b_in * b_in - a_in * a_in)
        - p * (a_in + b_in) * (a_in + b_in)
        + eps * (a_out * a_out - b_out * b_out)
        - eps * q * (a_out + b_out) * (a_out + b_out);
    (s, n / s, rhs)
}

/// Evaluate the printed closed-form relation at `c`.
pub fn oracle_dispersion(case: &OracleCase, c: Complex64) -> Result<Complex64> {
    match case {
        OracleCase::ConstantVortex { k } => {
            if *k == 0 {
                return Err(Error::BadParams("k must be nonzero".into()));
            }
            let ka = k.abs() as f64;
            let center = 1.0 - 1.0 / ka;
            Ok((c - center) * (c - center) + (1.0 / ka) * (1.0 - 1.0 / ka))
        }
        OracleCase::CapillaryConstant { alpha, rho_plus, big_b, k } => {
            if *k == 0 || !(*rho_plus > 0.0) || !(*alpha >= 0.0) {
                return Err(Error::BadParams("need k != 0, rho_plus > 0, alpha >= 0".into()));
            }
            let ka = k.abs() as f64;
            let center = big_b * (1.0 - 1.0 / ka);
            let rhs = (ka - 1.0) / (ka * ka) * (alpha / rho_plus * ka * (ka + 1.0) - big_b * big_b);
            Ok((c - center) * (c - center) - rhs)
        }
        OracleCase::TCWaterWave { alpha, rho_plus, a, b, r_in, k } => {
            if *k == 0 || !(*rho_plus > 0.0) || !(0.0..1.0).contains(r_in) {
                return Err(Error::BadParams("need k != 0, rho_plus > 0, r_in in [0,1)".into()));
            }
            let p = wall_factor_inner(*r_in, *k);
            let f = 1.0 / p;
            let center = a + b - f * b;
            let ksq = (*k as f64) * (*k as f64);
            let rhs = alpha / rho_plus * (ksq - 1.0) + f * b * b - (a + b) * (a + b);
            Ok(p * (c - center) * (c - center) - rhs)
        }
        OracleCase::TwoPhaseTC {
            alpha,
            rho_plus,
            eps,
            a_in,
            b_in,
            a_out,
            b_out,
            r_in,
            r_out,
            k,
        } => {
            if *k == 0 || !(*rho_plus > 0.0) || !(*eps >= 0.0) || !(0.0..1.0).contains(r_in) || !(*r_out > 1.0) {
                return Err(Error::BadParams("invalid two-phase Taylor-Couette parameters".into()));
            }
            let (s, center, rhs) =
                two_phase_tc_parts(*alpha, *rho_plus, *eps, *a_in, *b_in, *a_out, *b_out, *r_in, *r_out, *k);
            Ok(s * (c - center) * (c - center) - rhs)
        }
        OracleCase::LipschitzOuter { params, eps } => {
            if params.k.abs() < 1 || !(params.rho_plus > 0.0) || !(params.s_star > 0.0) {
                return Err(Error::BadParams("invalid piecewise-outer parameters".into()));
            }
            let ka = params.k.abs() as f64;
            let (g1, g2) = params.gammas();
            let b = params.b;
            let big_b = params.big_b;
            let plus_part = ka * (c - (1.0 - 1.0 / ka) * big_b).powu(2)
                - (1.0 - 1.0 / ka)
                    * (params.alpha / params.rho_plus * ka * (ka + 1.0) - big_b * big_b);
            let minus_part = ka * (c - g1) / (c - g2) * (c - b) * (c - b)
                - 2.0 * params.omega_star * (c - b)
                - b * b;
            Ok(plus_part + eps * minus_part)
        }
    }
}

// ---------------------------------------------------------------------------
// Small-density expansion
// ---------------------------------------------------------------------------

/// Water-vacuum phase speeds and the leading implicit-function data of the
/// density-ratio expansion.
#[derive(Debug, Clone, Copy)]
pub struct SmallDensityExpansion {
    pub k: i32,
    pub c_plus: f64,
    pub c_minus: f64,
    /// `h_R(0)` on the two branches (equal to the unperturbed speeds).
    pub h_r0: (f64, f64),
    /// `h_I(0)` on the two branches; positive on `+`, negative on `-`.
    pub h_i0: (f64, f64),
    /// Radicand of the square root in the unperturbed speeds.
    pub discriminant: f64,
}

/// Which of the two unperturbed speeds a bifurcation tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl SmallDensityExpansion {
    pub fn speed(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.c_plus,
            Branch::Minus => self.c_minus,
        }
    }

    pub fn h_i0(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.h_i0.0,
            Branch::Minus => self.h_i0.1,
        }
    }
}

/// Compute the expansion for a Taylor-Couette (or constant) inner profile.
pub fn small_density_expansion(setup: &ProblemSetup, k: i32) -> Result<SmallDensityExpansion> {
    let (a, b) = setup
        .profile(Side::Plus)
        .as_taylor_couette()
        .ok_or_else(|| Error::BadParams("small-density expansion needs a Taylor-Couette inner profile".into()))?;
    if k == 0 {
        return Err(Error::BadParams("k must be nonzero".into()));
    }
    let p = wall_factor_inner(setup.r_in, k);
    let f = 1.0 / p;
    let ksq = (k as f64) * (k as f64);
    let inner = setup.alpha / setup.rho_plus * (ksq - 1.0) + f * b * b - (a + b) * (a + b);
    let discriminant = f * inner;
    if discriminant <= 0.0 {
        return Err(Error::StableBranchMissing { discriminant });
    }
    let center = a + b - f * b;
    let root = discriminant.sqrt();
    let (c_plus, c_minus) = (center + root, center - root);
    let wm0 = setup.profile(Side::Minus).w_continuous(0.0)?;
    // h_I(0) = (c - w-(0))^2 / ( (2/f) (c - center) )
    let h_i = |cb: f64| -> f64 { (cb - wm0) * (cb - wm0) * f / (2.0 * (cb - center)) };
    Ok(SmallDensityExpansion {
        k,
        c_plus,
        c_minus,
        h_r0: (c_plus, c_minus),
        h_i0: (h_i(c_plus), h_i(c_minus)),
        discriminant,
    })
}

// ---------------------------------------------------------------------------
// Lipschitz outer profile: calibration and cubic roots
// ---------------------------------------------------------------------------

/// Solve `gamma2(s*) = lambda_target` by bisection on `(0, s_max]`.
pub fn calibrate_sstar(
    omega_star: f64,
    b: f64,
    k: i32,
    lambda_target: f64,
    s_max: f64,
) -> Result<f64> {
    if (b - lambda_target).abs() <= 1e-12 * (1.0 + lambda_target.abs()) {
        return Err(Error::BadParams(
            "b equals the target speed; the leading epsilon coefficient (lambda - b)^2 vanishes".into(),
        ));
    }
    let ka = k.abs() as f64;
    let g2 = |s: f64| {
        let e = (-2.0 * s).exp();
        let ek = (-2.0 * ka * s).exp();
        omega_star * (1.0 - e) + b * e - omega_star / ka * (1.0 - ek)
    };
    let target = |s: f64| g2(s) - lambda_target;
    // Scan for a sign change, then bisect to 1e-12.
    let n = 4096;
    let mut prev_s = s_max * 1e-9;
    let mut prev_v = target(prev_s);
    let mut bracket = None;
    for i in 1..=n {
        let s = s_max * i as f64 / n as f64;
        let v = target(s);
        if prev_v == 0.0 {
            bracket = Some((prev_s, prev_s));
            break;
        }
        if prev_v * v < 0.0 {
            bracket = Some((prev_s, s));
            break;
        }
        prev_s = s;
        prev_v = v;
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::NoSolution { s_max })?;
    let mut f_lo = target(lo);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let fm = target(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if f_lo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All three roots of the cubic `F(c, eps) = 0` of the calibrated
/// piecewise-outer example.
pub fn lipschitz_cubic_roots(params: &LipschitzParams, eps: f64) -> Result<[Complex64; 3]> {
    let (lp, lm) = lambda_pm(params.k, params.big_b, params.alpha, params.rho_plus)?;
    let (g1, g2) = params.gammas();
    if (g2 - lp).abs() > 1e-6 * (1.0 + lp.abs()) {
        return Err(Error::BadParams(format!(
            "s_star is not calibrated: gamma2 = {g2} vs lambda_plus = {lp}"
        )));
    }
    if eps == 0.0 {
        // F(c, 0) = (c - lm)(c - lp)^2 exactly.
        return Ok([Complex64::new(lm, 0.0), Complex64::new(lp, 0.0), Complex64::new(lp, 0.0)]);
    }
    let ka = params.k.abs() as f64;
    let b = params.b;
    let om = params.omega_star;
    // F = (c - lm)(c - lp)^2
    //   + eps [ (c - g1)(c - b)^2 - (2 om / |k|)(c - b)(c - lp) - (b^2/|k|)(c - lp) ]
    let c3 = 1.0 + eps;
    let c2 = -(lm + 2.0 * lp) + eps * (-(g1 + 2.0 * b) - 2.0 * om / ka);
    let c1 = 2.0 * lm * lp + lp * lp
        + eps * (2.0 * g1 * b + b * b + 2.0 * om / ka * (b + lp) - b * b / ka);
    let c0 = -lm * lp * lp + eps * (-g1 * b * b - 2.0 * om / ka * b * lp + b * b / ka * lp);
    Ok(cubic_roots_monicized(c3, c2, c1, c0))
}

/// Conjugate nonreal root pair near `lambda_plus`, upper root first.
pub fn lipschitz_case_roots(params: &LipschitzParams, eps: f64) -> Result<(Complex64, Complex64)> {
    let roots = lipschitz_cubic_roots(params, eps)?;
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let mut upper: Option<Complex64> = None;
    for r in roots {
        if r.im > 1e-12 * scale && upper.map_or(true, |u| r.im > u.im) {
            upper = Some(r);
        }
    }
    match upper {
        Some(u) => Ok((u, u.conj())),
        None => {
            let min_im = roots.iter().map(|r| r.im.abs()).fold(f64::INFINITY, f64::min);
            Err(Error::NoComplexPair { min_im })
        }
    }
}

/// Durand-Kerner iteration on a cubic with real coefficients
/// `c3 x^3 + c2 x^2 + c1 x + c0`.
fn cubic_roots_monicized(c3: f64, c2: f64, c1: f64, c0: f64) -> [Complex64; 3] {
    let a = [c0 / c3, c1 / c3, c2 / c3]; // monic: x^3 + a2 x^2 + a1 x + a0
    let p = |x: Complex64| ((x + a[2]) * x + a[1]) * x + a[0];
    let radius = 1.0 + a.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut r = [seed * radius, seed * seed * radius, seed * seed * seed * radius];
    for _ in 0..200 {
        let mut delta = 0.0_f64;
        for i in 0..3 {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..3 {
                if i != j {
                    denom *= r[i] - r[j];
                }
            }
            let step = p(r[i]) / denom;
            r[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * radius {
            break;
        }
    }
    // Real-coefficient polish: snap conjugate-pair asymmetries.
    r.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
    r
}
