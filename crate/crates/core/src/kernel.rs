//! Numerical primitives shared by the plant maps and the operator rules.
//!
//! Everything here is a pure function over small value types: cubic smooth
//! steps, boolean latches, rate limiters, clamped integrators and clamped
//! piecewise-linear tables in one and two dimensions.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Cubic smooth step from `(x0, h0)` to `(x1, h1)`.
///
/// The transition polynomial is `h0 + (h1 - h0) * (3u² - 2u³)` with
/// `u = (x - x0) / (x1 - x0)`, flat outside the knots. Value and slope are
/// continuous everywhere and the slope vanishes at both knots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothStep {
    pub x0: f64,
    pub h0: f64,
    pub x1: f64,
    pub h1: f64,
}

impl SmoothStep {
    pub fn new(x0: f64, h0: f64, x1: f64, h1: f64) -> Result<Self, ConfigError> {
        let s = Self { x0, h0, x1, h1 };
        s.validate("smooth_step")?;
        Ok(s)
    }

    pub fn validate(&self, path: &str) -> Result<(), ConfigError> {
        if ![self.x0, self.h0, self.x1, self.h1].iter().all(|v| v.is_finite()) {
            return Err(ConfigError::invalid(path, "smooth step values must be finite"));
        }
        if self.x0 >= self.x1 {
            return Err(ConfigError::invalid(
                path,
                format!("smooth step knots must satisfy x0 < x1 (got {} >= {})", self.x0, self.x1),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        step3(x, self)
    }
}

pub fn step3(x: f64, spec: &SmoothStep) -> f64 {
    if x <= spec.x0 {
        return spec.h0;
    }
    if x >= spec.x1 {
        return spec.h1;
    }
    let u = (x - spec.x0) / (spec.x1 - spec.x0);
    spec.h0 + (spec.h1 - spec.h0) * u * u * (3.0 - 2.0 * u)
}

/// Set/reset memory. Reset wins over a simultaneous set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Latch {
    pub state: bool,
}

impl Latch {
    pub fn is_set(self) -> bool {
        self.state
    }

    pub fn update(self, set: bool, reset: bool) -> Latch {
        latch_update(self, set, reset)
    }
}

pub fn latch_update(l: Latch, set: bool, reset: bool) -> Latch {
    if reset {
        Latch { state: false }
    } else if set {
        Latch { state: true }
    } else {
        l
    }
}

/// Moves `prev` toward `target` by at most `rate * dt`.
pub fn rate_limit(prev: f64, target: f64, rate: f64, dt: f64) -> f64 {
    let max_step = rate.max(0.0) * dt;
    let delta = target - prev;
    if delta.abs() <= max_step {
        target
    } else {
        prev + max_step.copysign(delta)
    }
}

pub fn clamped_integrate(acc: f64, input: f64, dt: f64, lo: f64, hi: f64) -> f64 {
    (acc + input * dt).clamp(lo, hi)
}

/// Piecewise-linear table over strictly increasing knots, clamped at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1D {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl Table1D {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, ConfigError> {
        let t = Self { knots, values };
        t.validate("table")?;
        Ok(t)
    }

    pub fn validate(&self, path: &str) -> Result<(), ConfigError> {
        if self.knots.len() < 2 {
            return Err(ConfigError::invalid(path, "table needs at least 2 knots"));
        }
        if self.knots.len() != self.values.len() {
            return Err(ConfigError::invalid(
                path,
                format!("{} knots but {} values", self.knots.len(), self.values.len()),
            ));
        }
        if !self.knots.iter().chain(&self.values).all(|v| v.is_finite()) {
            return Err(ConfigError::invalid(path, "table entries must be finite"));
        }
        if self.knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::invalid(path, "knots must be strictly increasing"));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        table_eval(self, x)
    }

    pub fn first_knot(&self) -> f64 {
        self.knots[0]
    }

    pub fn last_knot(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Table1D {
        Table1D {
            knots: self.knots.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Index `i` of the interval `[knots[i], knots[i+1]]` holding `x`, plus the
/// interpolation fraction within it. `x` must already be inside the range.
fn bracket(knots: &[f64], x: f64) -> (usize, f64) {
    let n = knots.len();
    let i = match knots.binary_search_by(|k| k.total_cmp(&x)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    };
    let frac = (x - knots[i]) / (knots[i + 1] - knots[i]);
    (i, frac)
}

pub fn table_eval(t: &Table1D, x: f64) -> f64 {
    if x <= t.first_knot() {
        return t.values[0];
    }
    if x >= t.last_knot() {
        return t.values[t.values.len() - 1];
    }
    let (i, f) = bracket(&t.knots, x);
    if f == 0.0 {
        return t.values[i];
    }
    t.values[i] + f * (t.values[i + 1] - t.values[i])
}

/// Bilinear table on a rectangular grid, clamped on every edge.
/// `values` is row-major: `values[i][j]` belongs to `(x_knots[i], y_knots[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table2D {
    pub x_knots: Vec<f64>,
    pub y_knots: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Table2D {
    pub fn validate(&self, path: &str) -> Result<(), ConfigError> {
        for (name, k) in [("x_knots", &self.x_knots), ("y_knots", &self.y_knots)] {
            if k.len() < 2 {
                return Err(ConfigError::invalid(format!("{path}.{name}"), "grid needs at least 2 knots"));
            }
            if !k.iter().all(|v| v.is_finite()) || k.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ConfigError::invalid(
                    format!("{path}.{name}"),
                    "grid knots must be finite and strictly increasing",
                ));
            }
        }
        if self.values.len() != self.x_knots.len()
            || self.values.iter().any(|row| row.len() != self.y_knots.len())
        {
            return Err(ConfigError::invalid(
                format!("{path}.values"),
                "grid values must be x_knots.len() rows of y_knots.len() entries",
            ));
        }
        if !self.values.iter().flatten().all(|v| v.is_finite()) {
            return Err(ConfigError::invalid(format!("{path}.values"), "grid values must be finite"));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let xc = x.clamp(self.x_knots[0], self.x_knots[self.x_knots.len() - 1]);
        let yc = y.clamp(self.y_knots[0], self.y_knots[self.y_knots.len() - 1]);
        let (i, fx) = bracket(&self.x_knots, xc);
        let (j, fy) = bracket(&self.y_knots, yc);
        let v00 = self.values[i][j];
        let v01 = self.values[i][j + 1];
        let v10 = self.values[i + 1][j];
        let v11 = self.values[i + 1][j + 1];
        let lo = v00 + fy * (v01 - v00);
        let hi = v10 + fy * (v11 - v10);
        lo + fx * (hi - lo)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit() -> SmoothStep {
        SmoothStep::new(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn step3_examples() {
        assert_eq!(step3(-1.0, &unit()), 0.0);
        assert_eq!(step3(0.5, &unit()), 0.5);
        // 3(0.25)^2 - 2(0.25)^3 = 0.1875 - 0.03125
        assert_relative_eq!(step3(0.25, &unit()), 0.15625, epsilon = 1e-15);
        assert_eq!(step3(2.0, &unit()), 1.0);
    }

    #[test]
    fn step3_rejects_unordered_knots() {
        assert!(SmoothStep::new(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(SmoothStep::new(2.0, 0.0, 1.0, 1.0).is_err());
        assert!(SmoothStep::new(0.0, f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn latch_examples() {
        let off = Latch { state: false };
        let on = Latch { state: true };
        assert!(latch_update(off, true, false).is_set());
        assert!(latch_update(on, false, false).is_set());
        assert!(!latch_update(on, true, true).is_set());
        assert!(!latch_update(off, false, true).is_set());
    }

    #[test]
    fn rate_limit_examples() {
        assert_relative_eq!(rate_limit(0.0, 1.0, 2.0, 0.1), 0.2);
        assert_eq!(rate_limit(0.95, 1.0, 2.0, 0.1), 1.0);
        assert_relative_eq!(rate_limit(1.0, 0.0, 2.0, 0.1), 0.8);
    }

    #[test]
    fn clamped_integrate_examples() {
        assert_relative_eq!(clamped_integrate(0.0, 0.5, 0.02, 0.0, 1.0), 0.01);
        assert_eq!(clamped_integrate(1.0, 5.0, 0.1, 0.0, 1.0), 1.0);
        assert_eq!(clamped_integrate(0.3, 0.0, 10.0, 0.0, 1.0), 0.3);
    }

    #[test]
    fn table_examples() {
        let t = Table1D::new(vec![0.0, 1.0], vec![0.0, 10.0]).unwrap();
        assert_eq!(t.eval(0.5), 5.0);
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(3.0), 10.0);
        let t = Table1D::new(vec![0.0, 0.3, 1.7, 2.0], vec![1.0, -2.0, 0.1, 7.0]).unwrap();
        for (k, v) in t.knots.iter().zip(&t.values) {
            assert_eq!(t.eval(*k), *v);
        }
    }

    #[test]
    fn table_rejects_bad_shapes() {
        assert!(Table1D::new(vec![0.0], vec![1.0]).is_err());
        assert!(Table1D::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(Table1D::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Table1D::new(vec![0.0, f64::INFINITY], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn bilinear_reproduces_corners_and_centre() {
        let t = Table2D {
            x_knots: vec![0.0, 2.0],
            y_knots: vec![0.0, 1.0],
            values: vec![vec![1.0, 3.0], vec![5.0, 11.0]],
        };
        t.validate("t").unwrap();
        assert_eq!(t.eval(0.0, 0.0), 1.0);
        assert_eq!(t.eval(2.0, 1.0), 11.0);
        assert_relative_eq!(t.eval(1.0, 0.5), (1.0 + 3.0 + 5.0 + 11.0) / 4.0);
        assert_eq!(t.eval(-5.0, 9.0), 3.0);
    }

    // Exhaustive small-case suite over a grid of step specs and inputs.
    #[test]
    fn step3_endpoint_midpoint_and_flat_derivative_grid() {
        let xs = [-3.0, -0.5, 0.0, 0.25, 1.0, 4.0];
        let widths = [0.01, 0.5, 1.0, 7.0];
        let heights = [(-2.0, 3.0), (1.0, 0.5), (0.0, 1.0), (5.0, -5.0)];
        for &x0 in &xs {
            for &w in &widths {
                for &(h0, h1) in &heights {
                    let s = SmoothStep::new(x0, h0, x0 + w, h1).unwrap();
                    assert_eq!(s.eval(x0), h0);
                    assert_eq!(s.eval(x0 + w), h1);
                    assert_eq!(s.eval(x0 - 1.0), h0);
                    assert_eq!(s.eval(x0 + w + 1.0), h1);
                    assert_relative_eq!(s.eval(x0 + 0.5 * w), 0.5 * (h0 + h1), epsilon = 1e-12);
                    let scale = ((h1 - h0) / w).abs();
                    let h = 1e-7 * w;
                    for knot in [x0, x0 + w] {
                        let d = (s.eval(knot + h) - s.eval(knot - h)) / (2.0 * h);
                        assert!(d.abs() <= 1e-6 * scale, "slope {d} at knot {knot} ({s:?})");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn step3_monotone_between_knots(x0 in -10.0..10.0f64, w in 0.01..10.0f64,
                                        h0 in -5.0..5.0f64, h1 in -5.0..5.0f64,
                                        a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let s = SmoothStep::new(x0, h0, x0 + w, h1).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (ya, yb) = (s.eval(x0 + lo * w), s.eval(x0 + hi * w));
            if h1 >= h0 {
                prop_assert!(yb >= ya - 1e-12);
            } else {
                prop_assert!(yb <= ya + 1e-12);
            }
        }

        #[test]
        fn rate_limit_never_overshoots(prev in -10.0..10.0f64, target in -10.0..10.0f64,
                                       rate in 0.0..50.0f64, dt in 1e-4..1.0f64) {
            let out = rate_limit(prev, target, rate, dt);
            prop_assert!((out - prev).abs() <= rate * dt + 1e-12);
            let (lo, hi) = if prev <= target { (prev, target) } else { (target, prev) };
            prop_assert!(out >= lo && out <= hi);
        }

        #[test]
        fn latch_idempotent(state: bool, set: bool, reset: bool) {
            let once = latch_update(Latch { state }, set, reset);
            prop_assert_eq!(latch_update(once, set, reset), once);
        }

        #[test]
        fn table_clamps_and_is_continuous(x in -5.0..5.0f64) {
            let t = Table1D::new(vec![-1.0, 0.0, 0.5, 2.0], vec![3.0, -1.0, 4.0, 4.5]).unwrap();
            let y = t.eval(x);
            prop_assert!((-1.0..=4.5).contains(&y));
            let eps = 1e-9;
            // Max slope on this table is 10 per unit x.
            prop_assert!((t.eval(x + eps) - y).abs() <= 10.0 * eps + 1e-12);
            if x < -1.0 { prop_assert_eq!(y, 3.0); }
            if x > 2.0 { prop_assert_eq!(y, 4.5); }
        }
    }
}
