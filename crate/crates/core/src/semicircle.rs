//! Howard-type bound on unstable phase velocities and the integral
//! identities that certify it at a computed mode.
//!
//! With `m` and `M` the combined infimum and supremum of both angular
//! velocities, any unstable mode under the condition
//! `alpha (k^2 - 1) > m M (rho+ - rho-)` satisfies
//!
//! ```text
//! (Re c - (m + M)/2)^2 + (Im c)^2 < ((M - m)/2)^2.
//! ```
//!
//! The certification rewrites each side solution as
//! `chi = (w(0) - c) / (w(s) - c) * zeta` and checks the imaginary- and
//! real-part integral identities that the proof extracts from the
//! weighted Rayleigh form.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profiles::{ProblemSetup, Side};
use crate::rayleigh::{BvpSolution, Mode};

/// Relative quadrature defects of the two integral identities.
#[derive(Debug, Clone, Copy)]
pub struct IdentityDefects {
    /// Defect of the imaginary-part identity.
    pub imaginary: f64,
    /// Defect of the real-part identity.
    pub real: f64,
}

impl IdentityDefects {
    pub fn max(&self) -> f64 {
        self.imaginary.max(self.real)
    }
}

/// Bound data for one setup and wave number.
#[derive(Debug, Clone)]
pub struct SemicircleReport {
    pub m: f64,
    pub big_m: f64,
    /// `alpha (k^2 - 1) > m M (rho+ - rho-)`, evaluated exactly.
    pub condition_strict: bool,
    pub center: f64,
    pub radius: f64,
    pub identity_defects: Option<IdentityDefects>,
}

impl SemicircleReport {
    /// Strict containment of `c` in the open disk, with `slack` subtracted
    /// from the squared radius.
    pub fn contains_strictly(&self, c: Complex64, slack: f64) -> bool {
        let dr = c.re - self.center;
        dr * dr + c.im * c.im < self.radius * self.radius - slack
    }
}

/// Compute the combined range extremes and the bound condition.
pub fn bound(setup: &ProblemSetup, k: i32) -> Result<SemicircleReport> {
    if !(setup.rho_plus >= setup.rho_minus) {
        return Err(Error::BadSetup(format!(
            "semicircle bound requires rho_plus >= rho_minus, got {} < {}",
            setup.rho_plus, setup.rho_minus
        )));
    }
    let (m_p, big_p) = setup.profile(Side::Plus).range()?;
    let (m_m, big_mm) = setup.profile(Side::Minus).range()?;
    let m = m_p.min(m_m);
    let big_m = big_p.max(big_mm);
    let ksq = (k as f64) * (k as f64);
    let condition_strict = setup.alpha * (ksq - 1.0) > m * big_m * (setup.rho_plus - setup.rho_minus);
    Ok(SemicircleReport {
        m,
        big_m,
        condition_strict,
        center: 0.5 * (m + big_m),
        radius: 0.5 * (big_m - m),
        identity_defects: None,
    })
}

/// Minimum trace samples per side for the quadrature.
pub const MIN_TRACE_SAMPLES: usize = 512;

/// Quadrature check of the two integral identities at an unstable mode.
///
/// `sol_minus` may be `None` exactly when `rho_minus = 0` (the outer
/// integrals carry that factor). Composite trapezoid on the trace grid; a
/// coarsened (every-other-sample) pass supplies a Richardson error
/// estimate which is folded into the reported defects.
pub fn verify_identities(
    setup: &ProblemSetup,
    mode: &Mode,
    sol_plus: &BvpSolution,
    sol_minus: Option<&BvpSolution>,
) -> Result<IdentityDefects> {
    if mode.c.im == 0.0 {
        return Err(Error::BadParams("identity verification needs Im c != 0".into()));
    }
    if setup.rho_minus > 0.0 && sol_minus.is_none() {
        return Err(Error::BadParams("rho_minus > 0 requires the outer solution".into()));
    }

    let mut im_lhs = 0.0;
    let mut re_lhs = 0.0;
    let mut im_coarse = 0.0;
    let mut re_coarse = 0.0;
    let mut magnitude = 0.0;

    let mut add_side = |side: Side, sol: &BvpSolution| -> Result<()> {
        let rho = setup.density(side);
        let (im_f, re_f) = side_integrals(setup, side, mode, sol, 1)?;
        let (im_c, re_c) = side_integrals(setup, side, mode, sol, 2)?;
        im_lhs += rho * im_f;
        re_lhs += rho * re_f;
        im_coarse += rho * im_c;
        re_coarse += rho * re_c;
        magnitude += rho * (im_f.abs() + re_f.abs());
        Ok(())
    };

    add_side(Side::Plus, sol_plus)?;
    if setup.rho_minus > 0.0 {
        add_side(Side::Minus, sol_minus.unwrap())?;
    }

    let (r, i) = (mode.c.re, mode.c.im);
    let drho = setup.rho_minus - setup.rho_plus;
    let im_rhs = r * drho;
    let ksq = (mode.k as f64) * (mode.k as f64);
    let re_rhs = setup.alpha * (ksq - 1.0) + drho * (r * r - i * i);

    let im_scale = 1.0 + magnitude + im_rhs.abs();
    let re_scale = 1.0 + magnitude + re_rhs.abs();
    // Richardson estimate of the trapezoid error on the fine grid.
    let im_quad_err = (im_lhs - im_coarse).abs() / 3.0;
    let re_quad_err = (re_lhs - re_coarse).abs() / 3.0;
    Ok(IdentityDefects {
        imaginary: ((im_lhs - im_rhs).abs() + im_quad_err) / im_scale,
        real: ((re_lhs - re_rhs).abs() + re_quad_err) / re_scale,
    })
}

/// Trapezoid integrals of `(R - w) X` and `((w - R)^2 - I^2) X` over one
/// side's trace, taking every `stride`-th sample.
fn side_integrals(
    setup: &ProblemSetup,
    side: Side,
    mode: &Mode,
    sol: &BvpSolution,
    stride: usize,
) -> Result<(f64, f64)> {
    let n = sol.trace.len();
    // The coarsened Richardson pass halves the requirement.
    let need = MIN_TRACE_SAMPLES / stride;
    if n / stride < need {
        return Err(Error::InsufficientTrace { side: side.name(), got: n / stride, need });
    }
    let profile = setup.profile(side);
    let w0 = profile.w_continuous(0.0)?;
    let c = mode.c;
    let (r, i) = (c.re, c.im);
    let ksq = (mode.k as f64) * (mode.k as f64);

    let mut prev: Option<(f64, f64, f64)> = None; // (s, im integrand, re integrand)
    let mut im_sum = 0.0;
    let mut re_sum = 0.0;
    let mut idx = 0;
    while idx < n {
        let t = &sol.trace[idx];
        let j = profile.jet_clamped(t.s);
        let wc = Complex64::new(j.w, 0.0) - c;
        let pref = Complex64::new(w0, 0.0) - c;
        let chi = pref / wc * t.zeta;
        let chi_dot = pref * (t.zeta_dot / wc - t.zeta * j.w1 / (wc * wc));
        let x = ksq * chi.norm_sqr() + chi_dot.norm_sqr() - 2.0 * (chi * chi_dot.conj()).re;
        // X >= (k^2 - 1)|chi|^2 >= 0 analytically; allow rounding headroom.
        debug_assert!(
            x >= -1e-12 * (1.0 + ksq * chi.norm_sqr() + chi_dot.norm_sqr()),
            "negative quadratic form X = {x} at s = {}",
            t.s
        );
        let im_integrand = (r - j.w) * x;
        let re_integrand = ((j.w - r) * (j.w - r) - i * i) * x;
        if let Some((s_prev, im_prev, re_prev)) = prev {
            let h = t.s - s_prev;
            im_sum += 0.5 * h * (im_prev + im_integrand);
            re_sum += 0.5 * h * (re_prev + re_integrand);
        }
        prev = Some((t.s, im_integrand, re_integrand));
        if idx == n - 1 {
            break;
        }
        idx = (idx + stride).min(n - 1);
    }
    Ok((im_sum, re_sum))
}

/// Pointwise minimum of the (normalized) quadratic form `X` on a trace.
pub fn min_quadratic_form(setup: &ProblemSetup, side: Side, mode: &Mode, sol: &BvpSolution) -> Result<f64> {
    let profile = setup.profile(side);
    let w0 = profile.w_continuous(0.0)?;
    let c = mode.c;
    let ksq = (mode.k as f64) * (mode.k as f64);
    let mut min_rel = f64::INFINITY;
    for t in &sol.trace {
        let j = profile.jet_clamped(t.s);
        let wc = Complex64::new(j.w, 0.0) - c;
        let pref = Complex64::new(w0, 0.0) - c;
        let chi = pref / wc * t.zeta;
        let chi_dot = pref * (t.zeta_dot / wc - t.zeta * j.w1 / (wc * wc));
        let x = ksq * chi.norm_sqr() + chi_dot.norm_sqr() - 2.0 * (chi * chi_dot.conj()).re;
        min_rel = min_rel.min(x / (1.0 + ksq * chi.norm_sqr() + chi_dot.norm_sqr()));
    }
    Ok(min_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{AngularProfile, Domain};
    use crate::rayleigh::{solve_side, SolveOptions};

    fn tabulated_on(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> AngularProfile {
        let nodes: Vec<(f64, f64)> = (0..=400)
            .map(|i| {
                let s = lo + (hi - lo) * i as f64 / 400.0;
                (s, f(s))
            })
            .collect();
        AngularProfile::tabulated(&nodes).unwrap()
    }

    #[test]
    fn bound_combines_ranges() {
        // w+ spans [0, 1], w- spans [0.2, 0.8].
        let plus = tabulated_on(-1.0, 0.0, |s| -s);
        let minus = tabulated_on(0.0, 1.0, |s| 0.2 + 0.6 * s);
        let setup =
            ProblemSetup::new(1.0, 0.5, 0.1, (-1.0_f64).exp(), 1.0_f64.exp(), plus, minus).unwrap();
        let rep = bound(&setup, 2).unwrap();
        assert!(rep.m.abs() < 1e-9 && (rep.big_m - 1.0).abs() < 1e-9);
        assert!((rep.center - 0.5).abs() < 1e-9 && (rep.radius - 0.5).abs() < 1e-9);
        // m M (rho+ - rho-) = 0, so the condition reduces to alpha (k^2-1) > 0.
        assert!(rep.condition_strict);
    }

    #[test]
    fn bound_condition_edge_cases() {
        let plus = AngularProfile::constant(1.0, Domain { lo: f64::NEG_INFINITY, hi: 0.0 });
        let minus = AngularProfile::constant(2.0, Domain::new(0.0, 1.0).unwrap());
        // Equal densities: the condition is alpha (k^2 - 1) > 0.
        let setup =
            ProblemSetup::new(1.0, 1.0, 0.0, 0.0, 1.0_f64.exp(), plus.clone(), minus.clone()).unwrap();
        assert!(!bound(&setup, 2).unwrap().condition_strict);
        let setup =
            ProblemSetup::new(1.0, 1.0, 0.3, 0.0, 1.0_f64.exp(), plus.clone(), minus.clone()).unwrap();
        assert!(bound(&setup, 2).unwrap().condition_strict);
        // |k| = 1 with alpha > 0: alpha (k^2 - 1) = 0 while m M > 0.
        let setup = ProblemSetup::new(1.0, 0.5, 0.3, 0.0, 1.0_f64.exp(), plus, minus).unwrap();
        assert!(!bound(&setup, 1).unwrap().condition_strict);
    }

    #[test]
    fn rho_ordering_is_required() {
        let plus = AngularProfile::constant(1.0, Domain { lo: f64::NEG_INFINITY, hi: 0.0 });
        let minus = AngularProfile::constant(0.0, Domain::new(0.0, 1.0).unwrap());
        let setup = ProblemSetup::new(1.0, 2.0, 0.0, 0.0, 1.0_f64.exp(), plus, minus).unwrap();
        assert!(bound(&setup, 2).is_err());
    }

    #[test]
    fn identities_hold_at_constant_vortex_mode() {
        let plus = AngularProfile::constant(1.0, Domain { lo: f64::NEG_INFINITY, hi: 0.0 });
        let minus = AngularProfile::constant(0.0, Domain::new(0.0, 1.0).unwrap());
        let setup = ProblemSetup::new(1.0, 0.0, 0.0, 0.0, 1.0_f64.exp(), plus, minus).unwrap();
        let mode = Mode::new(2, Complex64::new(0.5, 0.5));
        let sol = solve_side(&setup, Side::Plus, mode, &SolveOptions::dense()).unwrap();
        let defects = verify_identities(&setup, &mode, &sol, None).unwrap();
        assert!(defects.max() <= 1e-6, "defects {defects:?}");
        // X stays pointwise nonnegative.
        let min_x = min_quadratic_form(&setup, Side::Plus, &mode, &sol).unwrap();
        assert!(min_x >= -1e-12, "min X = {min_x}");

        // Negative control: a non-mode c violates the identities badly.
        let off = Mode::new(2, Complex64::new(0.3, 0.5));
        let sol_off = solve_side(&setup, Side::Plus, off, &SolveOptions::dense()).unwrap();
        let bad = verify_identities(&setup, &off, &sol_off, None).unwrap();
        assert!(bad.max() > 1e-3, "non-mode defects unexpectedly small: {bad:?}");
    }

    #[test]
    fn nontrivial_chi_forces_positive_integral() {
        // For |k| >= 2, X = 0 can only happen with chi = 0; on a solved
        // trace chi(0) = 1, so the integral of X must be positive.
        let plus = AngularProfile::taylor_couette(0.6, 0.1, Domain::new(0.4_f64.ln(), 0.0).unwrap()).unwrap();
        let minus = AngularProfile::constant(0.0, Domain::new(0.0, 1.0).unwrap());
        let setup = ProblemSetup::new(1.0, 0.0, 0.2, 0.4, 1.0_f64.exp(), plus, minus).unwrap();
        let mode = Mode::new(2, Complex64::new(0.3, 0.4));
        let sol = solve_side(&setup, Side::Plus, mode, &SolveOptions::dense()).unwrap();
        let mut integral = 0.0;
        let profile = setup.profile(Side::Plus);
        let w0 = profile.w_continuous(0.0).unwrap();
        for pair in sol.trace.windows(2) {
            let mut vals = [0.0; 2];
            for (slot, t) in pair.iter().enumerate() {
                let j = profile.jet_clamped(t.s);
                let wc = Complex64::new(j.w, 0.0) - mode.c;
                let pref = Complex64::new(w0, 0.0) - mode.c;
                let chi = pref / wc * t.zeta;
                let chi_dot = pref * (t.zeta_dot / wc - t.zeta * j.w1 / (wc * wc));
                vals[slot] = 4.0 * chi.norm_sqr() + chi_dot.norm_sqr() - 2.0 * (chi * chi_dot.conj()).re;
            }
            integral += 0.5 * (pair[1].s - pair[0].s) * (vals[0] + vals[1]);
        }
        assert!(integral > 1e-3, "integral of X = {integral}");
    }

    #[test]
    fn insufficient_trace_is_reported() {
        let plus = AngularProfile::constant(1.0, Domain { lo: f64::NEG_INFINITY, hi: 0.0 });
        let minus = AngularProfile::constant(0.0, Domain::new(0.0, 1.0).unwrap());
        let setup = ProblemSetup::new(1.0, 0.0, 0.0, 0.0, 1.0_f64.exp(), plus, minus).unwrap();
        let mode = Mode::new(2, Complex64::new(0.5, 0.5));
        let sol = solve_side(&setup, Side::Plus, mode, &SolveOptions::default()).unwrap();
        if sol.trace.len() < MIN_TRACE_SAMPLES {
            assert!(matches!(
                verify_identities(&setup, &mode, &sol, None),
                Err(Error::InsufficientTrace { .. })
            ));
        }
    }
}
