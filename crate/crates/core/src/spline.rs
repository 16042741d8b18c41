//! Natural cubic spline interpolation with derivatives up to third order.

use crate::error::{Error, Result};

/// C2 cubic spline through strictly increasing nodes.
///
/// End conditions are natural (vanishing second derivative) unless a left
/// clamp slope is supplied at construction.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the nodes.
    m2: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(nodes: &[(f64, f64)]) -> Result<Self> {
        Self::build(nodes, None)
    }

    /// Spline with prescribed first derivative at the left end.
    pub fn clamped_left(nodes: &[(f64, f64)], left_slope: f64) -> Result<Self> {
        Self::build(nodes, Some(left_slope))
    }

    fn build(nodes: &[(f64, f64)], left_slope: Option<f64>) -> Result<Self> {
        let n = nodes.len();
        if n < 3 {
            return Err(Error::BadProfile(format!("tabulated profile needs at least 3 nodes, got {n}")));
        }
        let xs: Vec<f64> = nodes.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = nodes.iter().map(|p| p.1).collect();
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::BadProfile("tabulated nodes must be strictly increasing in s".into()));
            }
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::BadProfile("tabulated nodes must be finite".into()));
        }

        // Tridiagonal system for the nodal second derivatives (Thomas solve).
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let h = |i: usize| xs[i + 1] - xs[i];
        let slope = |i: usize| (ys[i + 1] - ys[i]) / h(i);

        match left_slope {
            None => {
                diag[0] = 1.0;
            }
            Some(s0) => {
                diag[0] = h(0) / 3.0;
                upper[0] = h(0) / 6.0;
                rhs[0] = slope(0) - s0;
            }
        }
        for i in 1..n - 1 {
            lower[i] = h(i - 1) / 6.0;
            diag[i] = (h(i - 1) + h(i)) / 3.0;
            upper[i] = h(i) / 6.0;
            rhs[i] = slope(i) - slope(i - 1);
        }
        diag[n - 1] = 1.0;

        for i in 1..n {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m2 = vec![0.0; n];
        m2[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m2[i] = (rhs[i] - upper[i] * m2[i + 1]) / diag[i];
        }

        Ok(Self { xs, ys, m2 })
    }

    pub fn lo(&self) -> f64 {
        self.xs[0]
    }

    pub fn hi(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn piece(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    /// Value and first three derivatives at `x` (inside the node span).
    pub fn eval3(&self, x: f64) -> (f64, f64, f64, f64) {
        let i = self.piece(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let (yi, yj, mi, mj) = (self.ys[i], self.ys[i + 1], self.m2[i], self.m2[i + 1]);
        let v = a * yi + b * yj + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
        let d1 = (yj - yi) / h - (3.0 * a * a - 1.0) * h * mi / 6.0 + (3.0 * b * b - 1.0) * h * mj / 6.0;
        let d2 = a * mi + b * mj;
        let d3 = (mj - mi) / h;
        (v, d1, d2, d3)
    }

    /// Exact extrema of the interpolant over the node span.
    ///
    /// Each piece is a cubic, so its stationary points solve a quadratic in
    /// closed form; node values are always included.
    pub fn range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &y in &self.ys {
            lo = lo.min(y);
            hi = hi.max(y);
        }
        for i in 0..self.xs.len() - 1 {
            let (x0, x1) = (self.xs[i], self.xs[i + 1]);
            let h = x1 - x0;
            // S'(x) written in t = x - x0: quadratic c2 t^2 + c1 t + c0.
            let (yi, yj, mi, mj) = (self.ys[i], self.ys[i + 1], self.m2[i], self.m2[i + 1]);
            let c0 = (yj - yi) / h - h * (2.0 * mi + mj) / 6.0;
            let c1 = mi;
            let c2 = (mj - mi) / (2.0 * h);
            let mut consider = |t: f64| {
                if t > 0.0 && t < h {
                    let (v, _, _, _) = self.eval3(x0 + t);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            };
            if c2.abs() < 1e-300 {
                if c1.abs() > 1e-300 {
                    consider(-c0 / c1);
                }
            } else {
                let disc = c1 * c1 - 4.0 * c2 * c0;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    consider((-c1 + sq) / (2.0 * c2));
                    consider((-c1 - sq) / (2.0 * c2));
                }
            }
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_exactly() {
        let nodes: Vec<(f64, f64)> = (0..20).map(|i| (i as f64 * 0.1, (i as f64 * 0.37).sin())).collect();
        let sp = CubicSpline::natural(&nodes).unwrap();
        for &(x, y) in &nodes {
            let (v, _, _, _) = sp.eval3(x);
            assert!((v - y).abs() < 1e-14, "node ({x}, {y}) reproduced as {v}");
        }
    }

    #[test]
    fn linear_data_is_reproduced_exactly() {
        let nodes: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        let sp = CubicSpline::natural(&nodes).unwrap();
        for k in 0..50 {
            let x = 0.05 + k as f64 * 0.18;
            let (v, d1, d2, d3) = sp.eval3(x);
            assert!((v - (3.0 - 2.0 * x)).abs() < 1e-12);
            assert!((d1 + 2.0).abs() < 1e-12);
            assert!(d2.abs() < 1e-12);
            assert!(d3.abs() < 1e-12);
        }
    }

    #[test]
    fn clamped_left_slope_holds() {
        let nodes: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 0.2, (i as f64 * 0.2).powi(2))).collect();
        let sp = CubicSpline::clamped_left(&nodes, 0.0).unwrap();
        let (_, d1, _, _) = sp.eval3(0.0);
        assert!(d1.abs() < 1e-12, "clamped slope is {d1}");
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(CubicSpline::natural(&[(0.0, 1.0), (0.0, 2.0), (1.0, 0.0)]).is_err());
        assert!(CubicSpline::natural(&[(0.0, 1.0), (1.0, 2.0)]).is_err());
    }
}
