//! Angular-velocity profiles of circular background flows.
//!
//! Everything is expressed in the log-radius coordinate `s = log r`, with
//! the interface at `s = 0` (radius normalized to 1). A profile exposes the
//! angular velocity `w(s)`, its derivative `w'(s)`, the vorticity
//! `varpi = 2 w + w'`, and the vorticity derivative `varpi' = 2 w' + w''`.

use crate::error::{Error, Result};
use crate::spline::CubicSpline;

/// Closed interval in `s`, possibly unbounded on either end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::BadProfile(format!("empty domain [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.lo && s <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// Which fluid region a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Inner region (disk or annulus), `s <= 0`.
    Plus,
    /// Outer region, `s >= 0`.
    Minus,
}

impl Side {
    pub fn name(&self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }
}

#[derive(Debug, Clone)]
enum ProfileKind {
    /// `w(s) = b`.
    Constant { b: f64 },
    /// `w(s) = a e^{-2s} + b` (Taylor-Couette in physical coordinates).
    TaylorCouette { a: f64, b: f64 },
    /// Two exponential branches joined at `s_star`; the vorticity jumps
    /// there, so `varpi'` carries a Dirac mass of weight `-2 omega_star`.
    PiecewiseOuter { omega_star: f64, b: f64, s_star: f64 },
    /// C2 interpolation through sample nodes.
    Tabulated { spline: CubicSpline },
}

/// Pointwise profile data at one location.
#[derive(Debug, Clone, Copy)]
pub struct PointEval {
    pub w: f64,
    pub w_dot: f64,
    pub varpi: f64,
    pub varpi_dot: f64,
}

/// Value and first four derivatives of `w`, for local series expansions.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub w: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

/// A Dirac mass in `varpi'`.
#[derive(Debug, Clone, Copy)]
pub struct DiracPoint {
    pub s: f64,
    /// Jump of `varpi` across `s` (mass of the Dirac contribution).
    pub varpi_jump: f64,
}

/// One preimage point of a regular value.
#[derive(Debug, Clone, Copy)]
pub struct CriticalPoint {
    pub sigma: f64,
    pub w_dot: f64,
    pub varpi_dot: f64,
}

/// Complete ordered preimage of a regular value under `w`.
#[derive(Debug, Clone)]
pub struct CriticalPointSet {
    pub value: f64,
    pub points: Vec<CriticalPoint>,
}

/// Tolerance knobs for critical-point location.
#[derive(Debug, Clone, Copy)]
pub struct CriticalPointOptions {
    /// Minimum admissible |w'| at a preimage point.
    pub regularity_floor: f64,
    /// Bisection tolerance on the location.
    pub location_tol: f64,
    /// Base bracketing resolution in intervals per unit length of s.
    pub grid_per_unit: usize,
}

impl Default for CriticalPointOptions {
    fn default() -> Self {
        Self { regularity_floor: 1e-6, location_tol: 1e-12, grid_per_unit: 2048 }
    }
}

/// One side's angular-velocity profile together with its domain.
#[derive(Debug, Clone)]
pub struct AngularProfile {
    kind: ProfileKind,
    domain: Domain,
}

impl AngularProfile {
    pub fn constant(b: f64, domain: Domain) -> Self {
        Self { kind: ProfileKind::Constant { b }, domain }
    }

    pub fn taylor_couette(a: f64, b: f64, domain: Domain) -> Result<Self> {
        if domain.lo == f64::NEG_INFINITY && a != 0.0 {
            return Err(Error::BadProfile(
                "Taylor-Couette profile with a != 0 diverges as s -> -inf; a disk-side profile requires a = 0".into(),
            ));
        }
        Ok(Self { kind: ProfileKind::TaylorCouette { a, b }, domain })
    }

    pub fn piecewise_outer(omega_star: f64, b: f64, s_star: f64, domain: Domain) -> Result<Self> {
        if domain.lo < 0.0 || s_star <= domain.lo || s_star >= domain.hi {
            return Err(Error::BadProfile(format!(
                "piecewise outer profile needs 0 <= lo < s_star < hi, got lo = {}, s_star = {s_star}, hi = {}",
                domain.lo, domain.hi
            )));
        }
        Ok(Self { kind: ProfileKind::PiecewiseOuter { omega_star, b, s_star }, domain })
    }

    /// Tabulated profile on the node span.
    pub fn tabulated(nodes: &[(f64, f64)]) -> Result<Self> {
        let spline = CubicSpline::natural(nodes)?;
        let domain = Domain::new(spline.lo(), spline.hi())?;
        Ok(Self { kind: ProfileKind::Tabulated { spline }, domain })
    }

    /// Tabulated disk-side profile: constant continuation below the first
    /// node (the spline is clamped to zero slope there, so `w` stays C1 and
    /// bounded with `w' -> 0` as `s -> -inf`).
    pub fn tabulated_disk(nodes: &[(f64, f64)]) -> Result<Self> {
        let spline = CubicSpline::clamped_left(nodes, 0.0)?;
        let domain = Domain { lo: f64::NEG_INFINITY, hi: spline.hi() };
        Ok(Self { kind: ProfileKind::Tabulated { spline }, domain })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Dirac masses contained in `varpi'`.
    pub fn dirac_points(&self) -> Vec<DiracPoint> {
        match &self.kind {
            ProfileKind::PiecewiseOuter { omega_star, s_star, .. } => {
                vec![DiracPoint { s: *s_star, varpi_jump: -2.0 * omega_star }]
            }
            _ => Vec::new(),
        }
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        if !self.domain.contains(s) {
            return Err(Error::OutOfDomain { s, lo: self.domain.lo, hi: self.domain.hi });
        }
        Ok(())
    }

    /// Pointwise `(w, w', varpi, varpi')`.
    pub fn eval(&self, s: f64) -> Result<PointEval> {
        self.check_domain(s)?;
        for d in self.dirac_points() {
            if (s - d.s).abs() < 1e-12 {
                return Err(Error::DistributionalPoint { s: d.s });
            }
        }
        let j = self.jet_unchecked(s);
        Ok(PointEval { w: j.w, w_dot: j.w1, varpi: 2.0 * j.w + j.w1, varpi_dot: 2.0 * j.w1 + j.w2 })
    }

    /// Like [`eval`](Self::eval) but also returns higher derivatives.
    pub fn jet(&self, s: f64) -> Result<Jet> {
        self.check_domain(s)?;
        for d in self.dirac_points() {
            if (s - d.s).abs() < 1e-12 {
                return Err(Error::DistributionalPoint { s: d.s });
            }
        }
        Ok(self.jet_unchecked(s))
    }

    fn jet_unchecked(&self, s: f64) -> Jet {
        match &self.kind {
            ProfileKind::Constant { b } => Jet { w: *b, w1: 0.0, w2: 0.0, w3: 0.0, w4: 0.0 },
            ProfileKind::TaylorCouette { a, b } => {
                let e = a * (-2.0 * s).exp();
                Jet { w: e + b, w1: -2.0 * e, w2: 4.0 * e, w3: -8.0 * e, w4: 16.0 * e }
            }
            ProfileKind::PiecewiseOuter { omega_star, b, s_star } => {
                if s < *s_star {
                    // w = omega_star + (b - omega_star) e^{-2s}
                    let e = (b - omega_star) * (-2.0 * s).exp();
                    Jet { w: omega_star + e, w1: -2.0 * e, w2: 4.0 * e, w3: -8.0 * e, w4: 16.0 * e }
                } else {
                    let c = omega_star * ((2.0 * s_star).exp() - 1.0) + b;
                    let e = c * (-2.0 * s).exp();
                    Jet { w: e, w1: -2.0 * e, w2: 4.0 * e, w3: -8.0 * e, w4: 16.0 * e }
                }
            }
            ProfileKind::Tabulated { spline } => {
                if s < spline.lo() {
                    // Constant continuation for disk-side profiles.
                    let (v, _, _, _) = spline.eval3(spline.lo());
                    Jet { w: v, w1: 0.0, w2: 0.0, w3: 0.0, w4: 0.0 }
                } else {
                    let (v, d1, d2, d3) = spline.eval3(s);
                    Jet { w: v, w1: d1, w2: d2, w3: d3, w4: 0.0 }
                }
            }
        }
    }

    /// `(inf w, sup w)` over the domain.
    pub fn range(&self) -> Result<(f64, f64)> {
        match &self.kind {
            ProfileKind::Constant { b } => Ok((*b, *b)),
            ProfileKind::TaylorCouette { a, b } => {
                if *a == 0.0 {
                    return Ok((*b, *b));
                }
                if self.domain.lo == f64::NEG_INFINITY {
                    return Err(Error::Unbounded);
                }
                // Monotone in s, so the extremes sit at the (possibly
                // limiting) endpoints.
                let at = |s: f64| if s == f64::INFINITY { *b } else { a * (-2.0 * s).exp() + b };
                let (v0, v1) = (at(self.domain.lo), at(self.domain.hi));
                Ok((v0.min(v1), v0.max(v1)))
            }
            ProfileKind::PiecewiseOuter { omega_star, b, s_star } => {
                let at = |s: f64| self.jet_unchecked(s).w;
                let mut vals = vec![at(self.domain.lo), at(*s_star)];
                if self.domain.hi == f64::INFINITY {
                    vals.push(0.0);
                } else {
                    vals.push(at(self.domain.hi));
                }
                let _ = omega_star;
                let _ = b;
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Ok((lo, hi))
            }
            ProfileKind::Tabulated { spline } => Ok(spline.range()),
        }
    }

    /// Infallible jet with `s` clamped into the domain, for integrator
    /// right-hand sides whose stage points may overshoot a segment end by
    /// rounding. At a Dirac point the right branch is used; `w` is
    /// continuous there, and the pointwise vorticity derivative vanishes on
    /// both branches of the kinds that carry Dirac masses.
    pub(crate) fn jet_clamped(&self, s: f64) -> Jet {
        let s = s.clamp(self.domain.lo, self.domain.hi);
        self.jet_unchecked(s)
    }

    /// Value of `w` at `s`, defined everywhere in the domain (`w` is
    /// continuous across Dirac points of `varpi'`).
    pub fn w_continuous(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(self.jet_unchecked(s).w)
    }

    /// `(a, b)` of `w(s) = a e^{-2s} + b` if the profile is of that family
    /// (a constant profile reports `a = 0`).
    pub fn as_taylor_couette(&self) -> Option<(f64, f64)> {
        match &self.kind {
            ProfileKind::Constant { b } => Some((0.0, *b)),
            ProfileKind::TaylorCouette { a, b } => Some((*a, *b)),
            _ => None,
        }
    }

    /// Whether the pointwise part of `varpi'` vanishes identically, making
    /// the Rayleigh coefficient `k^2` away from Dirac points.
    pub fn pointwise_varpi_dot_vanishes(&self) -> bool {
        match &self.kind {
            ProfileKind::Constant { .. } | ProfileKind::TaylorCouette { .. } | ProfileKind::PiecewiseOuter { .. } => true,
            ProfileKind::Tabulated { .. } => false,
        }
    }

    /// Bounded interval on which all structure of the profile lives; used
    /// to truncate grid searches over unbounded domains.
    fn effective_bounds(&self) -> (f64, f64) {
        let lo = if self.domain.lo.is_finite() {
            self.domain.lo
        } else {
            match &self.kind {
                ProfileKind::Tabulated { spline } => spline.lo(),
                _ => self.domain.hi - 1.0,
            }
        };
        let hi = if self.domain.hi.is_finite() {
            self.domain.hi
        } else {
            match &self.kind {
                // Beyond s* the branch decays like e^{-2s}; 18 units leaves
                // a tail below 2e-16 of the branch amplitude.
                ProfileKind::PiecewiseOuter { s_star, .. } => s_star + 18.0,
                ProfileKind::Tabulated { spline } => spline.hi(),
                _ => lo + 1.0,
            }
        };
        (lo, hi)
    }

    /// Complete ordered preimage of `value` under `w`.
    ///
    /// Sign-change bracketing on a dense grid (resolution doubled until the
    /// count stabilizes twice) followed by bisection.
    pub fn critical_points(&self, value: f64, opts: &CriticalPointOptions) -> Result<CriticalPointSet> {
        let (lo, hi) = self.effective_bounds();
        let len = hi - lo;
        let scale = 1.0 + value.abs();

        // Regularity pre-scan: a point of the preimage (or a plateau) where
        // the slope sits below the floor disqualifies the value outright.
        let m = ((len * 4096.0).ceil() as usize).max(256);
        for i in 0..=m {
            let s = lo + len * i as f64 / m as f64;
            let j = self.jet_unchecked(s);
            if (j.w - value).abs() < 1e-9 * scale && j.w1.abs() < opts.regularity_floor {
                return Err(Error::NotRegularValue {
                    value,
                    s,
                    w_dot_abs: j.w1.abs(),
                    floor: opts.regularity_floor,
                });
            }
        }

        let mut n = ((len * opts.grid_per_unit as f64).ceil() as usize).max(64);
        let mut stable = 0u32;
        let mut last: Option<Vec<f64>> = None;
        let mut roots: Vec<f64> = Vec::new();
        for _ in 0..8 {
            roots = self.bracket_and_bisect(value, lo, hi, n, opts)?;
            if let Some(prev) = &last {
                if prev.len() == roots.len() {
                    stable += 1;
                    if stable >= 2 {
                        break;
                    }
                } else {
                    stable = 0;
                }
            }
            last = Some(roots.clone());
            n *= 2;
        }
        if stable < 2 {
            return Err(Error::TangencySuspected {
                s: roots.first().copied().unwrap_or(f64::NAN),
                defect: f64::NAN,
            });
        }

        // Tangency screen: a near-zero residual far from any bracketed root
        // means the grid saw a touch without a sign change.
        for i in 0..=m {
            let s = lo + len * i as f64 / m as f64;
            let w = self.jet_unchecked(s).w;
            if (w - value).abs() < 1e-9 * scale && !roots.iter().any(|r| (r - s).abs() < 2.0 * len / m as f64) {
                return Err(Error::TangencySuspected { s, defect: (w - value).abs() });
            }
        }

        let mut points = Vec::with_capacity(roots.len());
        for sigma in roots {
            for d in self.dirac_points() {
                if (sigma - d.s).abs() < 1e-9 {
                    return Err(Error::DistributionalPoint { s: d.s });
                }
            }
            let j = self.jet_unchecked(sigma);
            if j.w1.abs() < opts.regularity_floor {
                return Err(Error::NotRegularValue {
                    value,
                    s: sigma,
                    w_dot_abs: j.w1.abs(),
                    floor: opts.regularity_floor,
                });
            }
            points.push(CriticalPoint { sigma, w_dot: j.w1, varpi_dot: 2.0 * j.w1 + j.w2 });
        }
        Ok(CriticalPointSet { value, points })
    }

    fn bracket_and_bisect(
        &self,
        value: f64,
        lo: f64,
        hi: f64,
        n: usize,
        opts: &CriticalPointOptions,
    ) -> Result<Vec<f64>> {
        let g = |s: f64| self.jet_unchecked(s).w - value;
        let mut roots = Vec::new();
        let h = (hi - lo) / n as f64;
        let mut prev_s = lo;
        let mut prev_g = g(lo);
        for i in 1..=n {
            let s = if i == n { hi } else { lo + h * i as f64 };
            let gs = g(s);
            if prev_g == 0.0 {
                roots.push(prev_s);
            } else if prev_g * gs < 0.0 {
                let (mut a, mut b) = (prev_s, s);
                let mut ga = prev_g;
                while b - a > opts.location_tol {
                    let mid = 0.5 * (a + b);
                    let gm = g(mid);
                    if gm == 0.0 {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if ga * gm < 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                        ga = gm;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev_s = s;
            prev_g = gs;
        }
        if prev_g == 0.0 {
            roots.push(hi);
        }
        roots.dedup_by(|a, b| (*a - *b).abs() < 10.0 * opts.location_tol);
        Ok(roots)
    }
}

/// Geometry, densities, surface tension, and the two profiles.
#[derive(Debug, Clone)]
pub struct ProblemSetup {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub alpha: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub profile_plus: AngularProfile,
    pub profile_minus: AngularProfile,
}

impl ProblemSetup {
    pub fn new(
        rho_plus: f64,
        rho_minus: f64,
        alpha: f64,
        r_in: f64,
        r_out: f64,
        profile_plus: AngularProfile,
        profile_minus: AngularProfile,
    ) -> Result<Self> {
        if !(rho_plus > 0.0) || !rho_plus.is_finite() {
            return Err(Error::BadSetup(format!("rho_plus must be positive and finite, got {rho_plus}")));
        }
        if !(rho_minus >= 0.0) || !rho_minus.is_finite() {
            return Err(Error::BadSetup(format!("rho_minus must be nonnegative and finite, got {rho_minus}")));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::BadSetup(format!("alpha must be nonnegative and finite, got {alpha}")));
        }
        if !(0.0..1.0).contains(&r_in) {
            return Err(Error::BadSetup(format!("r_in must lie in [0, 1), got {r_in}")));
        }
        if !(r_out > 1.0) {
            return Err(Error::BadSetup(format!("r_out must exceed 1 (inf allowed), got {r_out}")));
        }
        let s_in = if r_in == 0.0 { f64::NEG_INFINITY } else { r_in.ln() };
        let s_out = if r_out == f64::INFINITY { f64::INFINITY } else { r_out.ln() };
        let close = |a: f64, b: f64| a == b || (a - b).abs() <= 1e-9 * (1.0 + a.abs().min(b.abs()));
        let dp = profile_plus.domain();
        if !close(dp.lo, s_in) || !close(dp.hi, 0.0) {
            return Err(Error::BadSetup(format!(
                "profile_plus domain [{}, {}] must equal [log r_in, 0] = [{s_in}, 0]",
                dp.lo, dp.hi
            )));
        }
        let dm = profile_minus.domain();
        if !close(dm.lo, 0.0) || !close(dm.hi, s_out) {
            return Err(Error::BadSetup(format!(
                "profile_minus domain [{}, {}] must equal [0, log r_out] = [0, {s_out}]",
                dm.lo, dm.hi
            )));
        }
        Ok(Self { rho_plus, rho_minus, alpha, r_in, r_out, profile_plus, profile_minus })
    }

    /// Density ratio `rho_minus / rho_plus`.
    pub fn epsilon(&self) -> f64 {
        self.rho_minus / self.rho_plus
    }

    pub fn profile(&self, side: Side) -> &AngularProfile {
        match side {
            Side::Plus => &self.profile_plus,
            Side::Minus => &self.profile_minus,
        }
    }

    pub fn density(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.rho_plus,
            Side::Minus => self.rho_minus,
        }
    }

    /// Interface values `(w(0), varpi(0))` for one side.
    pub fn interface_values(&self, side: Side) -> Result<(f64, f64)> {
        let e = self.profile(side).eval(0.0)?;
        Ok((e.w, e.varpi))
    }
}
