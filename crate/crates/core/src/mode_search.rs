//! Root location for the dispersion residual over complex regions.
//!
//! `D(c)` is analytic off the real axis, so the number of modes inside a
//! rectangle follows from the argument principle: the winding number of
//! `D` around the boundary. Regions always keep `Im c >= ETA_FLOOR`, which
//! keeps the contour away from the singular set. Roots are isolated by
//! recursive quadrisection and polished by a damped Newton iteration with
//! finite-difference derivatives.

use num_complex::Complex64;

use crate::dispersion::{self, ACCEPTANCE_REL};
use crate::error::{Error, Result};
use crate::profiles::{ProblemSetup, Side};
use crate::rayleigh::{solve_side, Mode, SolveOptions};
use crate::semicircle;

/// Lower bound on `Im c` for any search region.
pub const ETA_FLOOR: f64 = 1e-6;

/// Deflation radius: roots closer than `1e-8 (1 + |c|)` are identified.
pub const DEFLATION_REL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionSource {
    SemicircleBound,
    UserSpecified,
}

/// Axis-aligned search rectangle in the upper half plane.
#[derive(Debug, Clone, Copy)]
pub struct SearchRegion {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
    pub source: RegionSource,
}

impl SearchRegion {
    pub fn user(re: (f64, f64), im: (f64, f64)) -> Result<Self> {
        if !(re.0 <= re.1) || !(im.0 <= im.1) {
            return Err(Error::BadRegion(format!("degenerate bounds re={re:?} im={im:?}")));
        }
        if im.0 < ETA_FLOOR {
            return Err(Error::BadRegion(format!(
                "im lower bound {} must respect the floor {ETA_FLOOR:e}",
                im.0
            )));
        }
        Ok(Self { re_lo: re.0, re_hi: re.1, im_lo: im.0, im_hi: im.1, source: RegionSource::UserSpecified })
    }

    /// Bounding box of the upper half of the semicircle disk, clamped off
    /// the real axis. Degenerate (radius below the floor) regions are
    /// valid and contain no roots.
    pub fn from_semicircle(setup: &ProblemSetup, k: i32) -> Result<Self> {
        let rep = semicircle::bound(setup, k)?;
        Ok(Self {
            re_lo: rep.m,
            re_hi: rep.big_m,
            im_lo: ETA_FLOOR,
            im_hi: rep.radius.max(ETA_FLOOR),
            source: RegionSource::SemicircleBound,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.re_hi - self.re_lo <= 0.0 || self.im_hi - self.im_lo <= 0.0
    }

    /// Scale the rectangle about its center, clamping `im_lo` to the floor.
    pub fn inflate(&self, factor: f64) -> Self {
        let (cx, cy) = (0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi));
        let (hx, hy) = (0.5 * (self.re_hi - self.re_lo) * factor, 0.5 * (self.im_hi - self.im_lo) * factor);
        Self {
            re_lo: cx - hx,
            re_hi: cx + hx,
            im_lo: (cy - hy).max(ETA_FLOOR),
            im_hi: cy + hy,
            source: self.source,
        }
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_lo, self.im_lo),
            Complex64::new(self.re_hi, self.im_lo),
            Complex64::new(self.re_hi, self.im_hi),
            Complex64::new(self.re_lo, self.im_hi),
        ]
    }
}

/// One polished root of the dispersion residual.
#[derive(Debug, Clone, Copy)]
pub struct FoundRoot {
    pub c: Complex64,
    pub residual_abs: f64,
    pub multiplicity: usize,
    pub newton_iterations: usize,
}

/// All roots found in a region, together with the contour count.
#[derive(Debug, Clone)]
pub struct ModeCatalog {
    pub k: i32,
    pub roots: Vec<FoundRoot>,
    pub counted: usize,
}

impl ModeCatalog {
    pub fn most_unstable(&self) -> Option<&FoundRoot> {
        self.roots.iter().max_by(|a, b| a.c.im.partial_cmp(&b.c.im).unwrap())
    }
}

/// Outcome of the absence check around an unperturbed phase speed.
#[derive(Debug, Clone, Copy)]
pub enum AbsenceCheck {
    ConfirmedAbsent,
    Found(Mode),
}

fn eval_d(setup: &ProblemSetup, k: i32, c: Complex64, opts: &SolveOptions) -> Result<Complex64> {
    Ok(dispersion::residual(setup, Mode { k, c }, opts)?.value)
}

/// Winding number of `D` around the region boundary.
///
/// Each edge is sampled adaptively until consecutive phase increments drop
/// below pi/2; the count is the accumulated argument change over 2 pi.
pub fn count_roots(setup: &ProblemSetup, k: i32, region: &SearchRegion) -> Result<usize> {
    if region.is_empty() {
        return Ok(0);
    }
    let opts = SolveOptions::default();
    let scale = dispersion::acceptance_scale(setup, k);
    let near_zero = 10.0 * ACCEPTANCE_REL * scale;
    let extent = (region.re_hi - region.re_lo).hypot(region.im_hi - region.im_lo);

    let corners = region.corners();
    let mut total_arg = 0.0_f64;
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        let da = eval_d(setup, k, a, &opts)?;
        let db = eval_d(setup, k, b, &opts)?;
        total_arg += edge_argument_change(setup, k, a, da, b, db, &opts, near_zero, extent, 0)?;
    }
    let winding = (total_arg / (2.0 * std::f64::consts::PI)).round();
    if (total_arg / (2.0 * std::f64::consts::PI) - winding).abs() > 0.25 || winding < 0.0 {
        return Err(Error::NonConvergence {
            re_lo: region.re_lo,
            re_hi: region.re_hi,
            im_lo: region.im_lo,
            im_hi: region.im_hi,
            reason: format!("inconsistent winding sum {total_arg}"),
        });
    }
    Ok(winding as usize)
}

/// A segment of the contour is resolved when the phase increment stays
/// below pi/2 and the modulus varies by less than a factor of 3: a zero
/// just off the contour announces itself by a modulus dip long before the
/// principal phase increment can alias.
fn segment_resolved(da: Complex64, db: Complex64) -> bool {
    let ratio = db.norm() / da.norm();
    (db / da).arg().abs() < std::f64::consts::FRAC_PI_2 && ratio < 3.0 && ratio > 1.0 / 3.0
}

#[allow(clippy::too_many_arguments)]
fn edge_argument_change(
    setup: &ProblemSetup,
    k: i32,
    a: Complex64,
    da: Complex64,
    b: Complex64,
    db: Complex64,
    opts: &SolveOptions,
    near_zero: f64,
    extent: f64,
    depth: usize,
) -> Result<f64> {
    if da.norm() < near_zero {
        return Err(Error::BoundaryRootSuspected { c: a, d_abs: da.norm() });
    }
    if db.norm() < near_zero {
        return Err(Error::BoundaryRootSuspected { c: b, d_abs: db.norm() });
    }
    let dphi = (db / da).arg();
    if (b - a).norm() < 1e-10 * extent || depth > 48 {
        if dphi.abs() < std::f64::consts::FRAC_PI_2 {
            return Ok(dphi);
        }
        // A phase jump that refuses to resolve means a zero sits on (or
        // numerically on) the contour.
        return Err(Error::BoundaryRootSuspected { c: 0.5 * (a + b), d_abs: da.norm().min(db.norm()) });
    }
    let mid = 0.5 * (a + b);
    let dm = eval_d(setup, k, mid, opts)?;
    if dm.norm() < near_zero {
        return Err(Error::BoundaryRootSuspected { c: mid, d_abs: dm.norm() });
    }
    // Accept only when both halves independently pass the phase and
    // modulus screens; the midpoint sample defeats symmetric aliasing
    // where a pair of near-contour zeros balances the endpoint data.
    if depth >= 3 && segment_resolved(da, dm) && segment_resolved(dm, db) {
        return Ok((dm / da).arg() + (db / dm).arg());
    }
    Ok(edge_argument_change(setup, k, a, da, mid, dm, opts, near_zero, extent, depth + 1)?
        + edge_argument_change(setup, k, mid, dm, b, db, opts, near_zero, extent, depth + 1)?)
}

/// `count_roots` with the retry-on-boundary-root policy: the region is
/// jittered outward by `1e-5` of its extent, and the bottom edge doubles
/// its distance to the real axis (real neutral roots sit just below it
/// and are out of search scope by construction).
fn count_roots_with_retry(setup: &ProblemSetup, k: i32, region: &SearchRegion) -> Result<(usize, SearchRegion)> {
    let mut r = *region;
    let mut last_err = None;
    for attempt in 0..9 {
        match count_roots(setup, k, &r) {
            Ok(n) => return Ok((n, r)),
            Err(Error::BoundaryRootSuspected { c, d_abs }) => {
                last_err = Some(Error::BoundaryRootSuspected { c, d_abs });
                let bump = 1e-5 * (1.0 + attempt as f64);
                let hx = (r.re_hi - r.re_lo).max(1e-3);
                let hy = (r.im_hi - r.im_lo).max(1e-3);
                let near_bottom = (c.im - r.im_lo).abs() < 0.25 * hy;
                r = SearchRegion {
                    re_lo: r.re_lo - bump * hx,
                    re_hi: r.re_hi + bump * hx,
                    im_lo: if near_bottom { 2.0 * r.im_lo } else { r.im_lo },
                    im_hi: r.im_hi + bump * hy,
                    source: r.source,
                };
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

/// Locate every root of `D` in the region: count, quadrisect to isolation,
/// Newton-polish, deflate, and re-verify the total.
pub fn find_modes(setup: &ProblemSetup, k: i32, region: &SearchRegion) -> Result<ModeCatalog> {
    let (counted, region) = count_roots_with_retry(setup, k, region)?;
    let mut catalog = ModeCatalog { k, roots: Vec::new(), counted };
    if counted == 0 {
        return Ok(catalog);
    }
    let mut cells = vec![(region, counted, 0usize)];
    while let Some((cell, count, depth)) = cells.pop() {
        if count == 0 {
            continue;
        }
        let tiny = (cell.re_hi - cell.re_lo).max(cell.im_hi - cell.im_lo)
            < 1e-10 * (1.0 + cell.re_hi.abs() + cell.im_hi.abs());
        if count == 1 || tiny {
            // Multiple roots that never separate under subdivision are
            // reported with the cell's winding count as multiplicity.
            let center = Complex64::new(0.5 * (cell.re_lo + cell.re_hi), 0.5 * (cell.im_lo + cell.im_hi));
            let (c, residual_abs, iters) = newton_polish(setup, k, center, &cell, true)?;
            push_deflated(&mut catalog.roots, FoundRoot { c, residual_abs, multiplicity: count, newton_iterations: iters });
            continue;
        }
        if depth > 40 {
            return Err(Error::NonConvergence {
                re_lo: cell.re_lo,
                re_hi: cell.re_hi,
                im_lo: cell.im_lo,
                im_hi: cell.im_hi,
                reason: format!("quadrisection depth exhausted with {count} roots in cell"),
            });
        }
        // Quadrisect; shift the split point if a root sits on a cut line.
        let mut done = false;
        'fraction: for frac in [0.5, 0.503, 0.497, 0.51, 0.49] {
            let xm = cell.re_lo + frac * (cell.re_hi - cell.re_lo);
            let ym = cell.im_lo + frac * (cell.im_hi - cell.im_lo);
            let quads = [
                SearchRegion { re_lo: cell.re_lo, re_hi: xm, im_lo: cell.im_lo, im_hi: ym, source: cell.source },
                SearchRegion { re_lo: xm, re_hi: cell.re_hi, im_lo: cell.im_lo, im_hi: ym, source: cell.source },
                SearchRegion { re_lo: cell.re_lo, re_hi: xm, im_lo: ym, im_hi: cell.im_hi, source: cell.source },
                SearchRegion { re_lo: xm, re_hi: cell.re_hi, im_lo: ym, im_hi: cell.im_hi, source: cell.source },
            ];
            let mut counts = [0usize; 4];
            for (i, q) in quads.iter().enumerate() {
                match count_roots(setup, k, q) {
                    Ok(n) => counts[i] = n,
                    Err(Error::BoundaryRootSuspected { .. }) => continue 'fraction,
                    Err(e) => return Err(e),
                }
            }
            if counts.iter().sum::<usize>() != count {
                // A root straddles a cut; try the next split fraction.
                continue 'fraction;
            }
            for (q, n) in quads.into_iter().zip(counts) {
                cells.push((q, n, depth + 1));
            }
            done = true;
            break;
        }
        if !done {
            return Err(Error::NonConvergence {
                re_lo: cell.re_lo,
                re_hi: cell.re_hi,
                im_lo: cell.im_lo,
                im_hi: cell.im_hi,
                reason: "no admissible quadrisection cut".into(),
            });
        }
    }

    let found: usize = catalog.roots.iter().map(|r| r.multiplicity).sum();
    if found != counted {
        return Err(Error::NonConvergence {
            re_lo: region.re_lo,
            re_hi: region.re_hi,
            im_lo: region.im_lo,
            im_hi: region.im_hi,
            reason: format!("contour counted {counted} roots but polishing recovered {found}"),
        });
    }
    catalog.roots.sort_by(|a, b| (a.c.re, a.c.im).partial_cmp(&(b.c.re, b.c.im)).unwrap());

    // Post-acceptance gate: every catalogued unstable mode must satisfy
    // the semicircle integral identities at quadrature accuracy.
    for root in &catalog.roots {
        let mode = Mode { k, c: root.c };
        let dense = SolveOptions::dense();
        let sol_plus = solve_side(setup, Side::Plus, mode, &dense)?;
        let sol_minus = if setup.rho_minus > 0.0 {
            Some(solve_side(setup, Side::Minus, mode, &dense)?)
        } else {
            None
        };
        let defects = semicircle::verify_identities(setup, &mode, &sol_plus, sol_minus.as_ref())?;
        if defects.max() > 1e-6 {
            return Err(Error::IdentityDrift { defect: defects.max(), tol: 1e-6 });
        }
    }
    Ok(catalog)
}

fn push_deflated(roots: &mut Vec<FoundRoot>, root: FoundRoot) {
    for existing in roots.iter_mut() {
        if (existing.c - root.c).norm() <= DEFLATION_REL * (1.0 + root.c.norm()) {
            existing.multiplicity += root.multiplicity;
            existing.residual_abs = existing.residual_abs.min(root.residual_abs);
            return;
        }
    }
    roots.push(root);
}

/// Newton-polish a user-supplied starting guess into an accepted mode.
/// Unlike the search path, the iterate may cross into the lower half
/// plane when the profiles admit evaluation there.
pub fn polish_mode(setup: &ProblemSetup, k: i32, c0: Complex64) -> Result<FoundRoot> {
    let cell = SearchRegion {
        re_lo: c0.re - 1.0,
        re_hi: c0.re + 1.0,
        im_lo: ETA_FLOOR,
        im_hi: c0.im.abs() + 1.0,
        source: RegionSource::UserSpecified,
    };
    let (c, residual_abs, newton_iterations) = newton_polish(setup, k, c0, &cell, false)?;
    Ok(FoundRoot { c, residual_abs, multiplicity: 1, newton_iterations })
}

/// Damped Newton iteration from `start`, converging to
/// `|D| <= ACCEPTANCE_REL * scale`.
fn newton_polish(
    setup: &ProblemSetup,
    k: i32,
    start: Complex64,
    cell: &SearchRegion,
    require_upper: bool,
) -> Result<(Complex64, f64, usize)> {
    let opts = SolveOptions::default();
    let scale = dispersion::acceptance_scale(setup, k);
    let tol = ACCEPTANCE_REL * scale;
    let cell_extent = (cell.re_hi - cell.re_lo) + (cell.im_hi - cell.im_lo);
    let mut c = start;
    let mut d = eval_d(setup, k, c, &opts)?;
    for iter in 0..60 {
        if d.norm() <= tol {
            return Ok((c, d.norm(), iter));
        }
        let h = 1e-6 * (1.0 + c.norm());
        let dp = eval_d(setup, k, c + h, &opts)?;
        let dm = eval_d(setup, k, c - h, &opts)?;
        let deriv = (dp - dm) / (2.0 * h);
        if deriv.norm() == 0.0 {
            break;
        }
        let mut step = d / deriv;
        let mut accepted = false;
        for _ in 0..12 {
            let cand = c - step;
            let admissible = (!require_upper || cand.im > 0.0) && (cand - start).norm() <= 8.0 * cell_extent + 1.0;
            if admissible {
                match eval_d(setup, k, cand, &opts) {
                    Ok(dn) if dn.norm() < d.norm() => {
                        c = cand;
                        d = dn;
                        accepted = true;
                        break;
                    }
                    _ => {}
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if d.norm() <= tol {
        return Ok((c, d.norm(), 60));
    }
    Err(Error::NonConvergence {
        re_lo: cell.re_lo,
        re_hi: cell.re_hi,
        im_lo: cell.im_lo,
        im_hi: cell.im_hi,
        reason: format!("Newton stagnated at |D| = {:e} (tol {:e})", d.norm(), tol),
    })
}

/// Absence check: count roots over the half-disk
/// `{ |c - center| <= radius, Im c >= ETA_FLOOR }` via its bounding box.
///
/// When `center` lies outside the outer angular-velocity range at distance
/// `l`, the necessity statement concerns `radius = l/2`, and a radius
/// reaching the range is rejected. A center inside the range is allowed
/// as an exploratory check (the contour stays off the real axis either
/// way) and is how a critical-layer-induced mode shows up as `Found`.
pub fn verify_no_unstable_near(
    setup: &ProblemSetup,
    k: i32,
    center: f64,
    radius: f64,
) -> Result<AbsenceCheck> {
    if !(radius > 0.0) {
        return Err(Error::BadParams(format!("radius must be positive, got {radius}")));
    }
    let (m, big_m) = setup.profile(Side::Minus).range()?;
    let dist = if center < m {
        m - center
    } else if center > big_m {
        center - big_m
    } else {
        0.0
    };
    if dist > 0.0 && radius >= dist {
        return Err(Error::BadParams(format!(
            "radius {radius} reaches the outer angular-velocity range (distance {dist})"
        )));
    }
    let region = SearchRegion {
        re_lo: center - radius,
        re_hi: center + radius,
        im_lo: ETA_FLOOR,
        im_hi: radius.max(2.0 * ETA_FLOOR),
        source: RegionSource::UserSpecified,
    };
    let (count, region) = count_roots_with_retry(setup, k, &region)?;
    if count == 0 {
        return Ok(AbsenceCheck::ConfirmedAbsent);
    }
    let catalog = find_modes(setup, k, &region)?;
    for root in &catalog.roots {
        let d = Complex64::new(root.c.re - center, root.c.im);
        if d.norm() <= radius {
            return Ok(AbsenceCheck::Found(Mode { k, c: root.c }));
        }
    }
    Ok(AbsenceCheck::ConfirmedAbsent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{AngularProfile, Domain};

    fn disk_setup(w_plus: f64, alpha: f64) -> ProblemSetup {
        let plus = AngularProfile::constant(w_plus, Domain { lo: f64::NEG_INFINITY, hi: 0.0 });
        let minus = AngularProfile::constant(0.0, Domain::new(0.0, 1.0).unwrap());
        ProblemSetup::new(1.0, 0.0, alpha, 0.0, 1.0_f64.exp(), plus, minus).unwrap()
    }

    #[test]
    fn counts_constant_vortex_root() {
        let setup = disk_setup(1.0, 0.0);
        let region = SearchRegion::user((-0.5, 1.5), (ETA_FLOOR, 1.0)).unwrap();
        assert_eq!(count_roots(&setup, 2, &region).unwrap(), 1);
        // Count is stable under 10% inflation.
        assert_eq!(count_roots(&setup, 2, &region.inflate(1.1)).unwrap(), 1);
    }

    #[test]
    fn empty_region_counts_zero() {
        let setup = disk_setup(1.0, 0.0);
        let region = SearchRegion::user((0.5, 0.5), (ETA_FLOOR, 1.0)).unwrap();
        assert_eq!(count_roots(&setup, 2, &region).unwrap(), 0);
    }

    #[test]
    fn capillary_stabilized_region_is_empty() {
        // 6 alpha >= B^2 stabilizes every |k| >= 2.
        let setup = disk_setup(1.0, 0.5);
        let region = SearchRegion::user((-1.0, 2.0), (ETA_FLOOR, 1.5)).unwrap();
        assert_eq!(count_roots(&setup, 2, &region).unwrap(), 0);
        assert_eq!(count_roots(&setup, 5, &region).unwrap(), 0);
    }

    #[test]
    fn finds_constant_vortex_modes() {
        let setup = disk_setup(1.0, 0.0);
        let region = SearchRegion::user((-0.5, 1.5), (ETA_FLOOR, 1.0)).unwrap();
        for k in [2, 5] {
            let ka = k as f64;
            let catalog = find_modes(&setup, k, &region).unwrap();
            assert_eq!(catalog.counted, 1);
            assert_eq!(catalog.roots.len(), 1);
            let expect = Complex64::new(1.0 - 1.0 / ka, (1.0 / ka * (1.0 - 1.0 / ka)).sqrt());
            let got = catalog.roots[0].c;
            assert!((got - expect).norm() < 1e-8, "k={k}: {got} vs {expect}");
            assert_eq!(catalog.roots[0].multiplicity, 1);
        }
    }

    #[test]
    fn stable_setup_yields_empty_catalog() {
        let setup = disk_setup(1.0, 0.5);
        let region = SearchRegion::user((-1.0, 2.0), (ETA_FLOOR, 1.5)).unwrap();
        let catalog = find_modes(&setup, 3, &region).unwrap();
        assert_eq!(catalog.counted, 0);
        assert!(catalog.roots.is_empty());
    }

    #[test]
    fn region_validation() {
        assert!(SearchRegion::user((0.0, 1.0), (0.0, 1.0)).is_err());
        assert!(SearchRegion::user((1.0, 0.0), (ETA_FLOOR, 1.0)).is_err());
        assert!(SearchRegion::user((0.0, 1.0), (ETA_FLOOR, 1.0)).is_ok());
    }

    #[test]
    fn semicircle_region_for_degenerate_range() {
        // Constant profiles on both sides: m = M, radius 0, no roots.
        let setup = disk_setup(1.0, 0.3);
        let region = SearchRegion::from_semicircle(&setup, 2).unwrap();
        assert_eq!(count_roots(&setup, 2, &region).unwrap(), 0);
    }

    #[test]
    fn absence_check_validates_radius() {
        let setup = disk_setup(1.0, 1.0);
        // A radius reaching the wind range defeats the necessity reading.
        assert!(verify_no_unstable_near(&setup, 2, 5.0, 5.5).is_err());
        assert!(verify_no_unstable_near(&setup, 2, 5.0, 0.0).is_err());
        // Far center with a modest radius confirms absence.
        match verify_no_unstable_near(&setup, 2, 5.0, 1.0).unwrap() {
            AbsenceCheck::ConfirmedAbsent => {}
            AbsenceCheck::Found(m) => panic!("unexpected mode {m:?}"),
        }
    }

    #[test]
    fn absence_check_trivial_at_zero_density_ratio() {
        // With a vacuous outer fluid the only candidate modes are the real
        // unperturbed speeds, which the off-axis search never counts.
        let setup = disk_setup(1.0, 1.0);
        let sde = crate::dispersion::small_density_expansion(&setup, 2).unwrap();
        for center in [sde.c_plus, sde.c_minus] {
            // The wind is identically zero, so the gap is |center|.
            let radius = center.abs() / 2.0;
            match verify_no_unstable_near(&setup, 2, center, radius).unwrap() {
                AbsenceCheck::ConfirmedAbsent => {}
                AbsenceCheck::Found(m) => panic!("unexpected mode {m:?}"),
            }
        }
    }

    #[test]
    fn absence_check_finds_wind_induced_mode() {
        // Wind crossing the unperturbed speed with destabilizing vorticity
        // gradient: the absence check must locate the bifurcated mode.
        let nodes: Vec<(f64, f64)> = (0..=200)
            .map(|i| {
                let s = i as f64 / 200.0;
                (s, 2.2 - 1.2 * s)
            })
            .collect();
        let wind = AngularProfile::tabulated(&nodes).unwrap();
        let plus = AngularProfile::constant(1.0, Domain { lo: f64::NEG_INFINITY, hi: 0.0 });
        let eps = 1e-3;
        let setup = ProblemSetup::new(1.0, eps, 1.0, 0.0, 1.0_f64.exp(), plus, wind).unwrap();
        let sde = crate::dispersion::small_density_expansion(&setup, 2).unwrap();
        let solve = crate::critical_layer::solve_unstable_mode(
            &setup,
            2,
            crate::dispersion::Branch::Plus,
            eps,
            &crate::critical_layer::CriticalLayerConfig::default(),
        )
        .unwrap();
        match verify_no_unstable_near(&setup, 2, sde.c_plus, 0.01).unwrap() {
            AbsenceCheck::Found(mode) => {
                assert!(
                    (mode.c - solve.c_final).norm() <= 1e-6,
                    "found {} vs bifurcation {}",
                    mode.c,
                    solve.c_final
                );
            }
            AbsenceCheck::ConfirmedAbsent => panic!("missed the wind-induced unstable mode"),
        }
    }
}
