//! Piecewise-linear interpolation over strictly increasing knots.
//!
//! Linear segments never overshoot their endpoints, so the interpolant is
//! monotone wherever the knot values are, and knots are reproduced exactly.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    /// True when `x` fell outside the knot range and was clamped.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Table(format!("need at least 2 knots, got {}", points.len())));
        }
        for (i, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::Table(format!("knot {i} is not finite: ({x}, {y})")));
            }
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::Table(format!(
                    "abscissae must be strictly increasing: knot {} ({}) <= knot {} ({})",
                    i + 1,
                    w[1].0,
                    i,
                    w[0].0
                )));
            }
        }
        Ok(Self { xs: points.iter().map(|p| p.0).collect(), ys: points.iter().map(|p| p.1).collect() })
    }

    pub fn knots(&self) -> impl DoubleEndedIterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Evaluates with clamping to the end values outside the knot range.
    pub fn sample(&self, x: f64) -> Sample {
        let n = self.xs.len();
        if x.is_nan() {
            return Sample { value: f64::NAN, clamped: true };
        }
        if x <= self.xs[0] {
            return Sample { value: self.ys[0], clamped: x < self.xs[0] };
        }
        if x >= self.xs[n - 1] {
            return Sample { value: self.ys[n - 1], clamped: x > self.xs[n - 1] };
        }
        // first index with xs[i] >= x; 1 <= i <= n-1 here
        let i = self.xs.partition_point(|&k| k < x);
        if self.xs[i] == x {
            return Sample { value: self.ys[i], clamped: false };
        }
        let (x0, x1, y0, y1) = (self.xs[i - 1], self.xs[i], self.ys[i - 1], self.ys[i]);
        let t = (x - x0) / (x1 - x0);
        Sample { value: y0 + t * (y1 - y0), clamped: false }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sample(x).value
    }

    /// Smallest `x >= from` (searching upward) or largest `x <= from`
    /// (searching downward) at which the interpolant reaches `target`.
    /// Returns the range endpoint with `clamped = true` when no segment in
    /// that direction crosses the target.
    pub fn solve_from(&self, target: f64, from: f64, upward: bool) -> Sample {
        let n = self.xs.len();
        let start = from.clamp(self.xs[0], self.xs[n - 1]);
        let y_start = self.eval(start);
        if y_start == target {
            return Sample { value: start, clamped: false };
        }
        // segment endpoints visited in search order, beginning at `start`
        let mut path: Vec<(f64, f64)> = vec![(start, y_start)];
        if upward {
            path.extend(self.knots().filter(|&(x, _)| x > start));
        } else {
            path.extend(self.knots().rev().filter(|&(x, _)| x < start));
        }
        for w in path.windows(2) {
            let ((xa, ya), (xb, yb)) = (w[0], w[1]);
            if yb == target {
                return Sample { value: xb, clamped: false };
            }
            if (ya - target) * (yb - target) < 0.0 {
                let t = (target - ya) / (yb - ya);
                return Sample { value: xa + t * (xb - xa), clamped: false };
            }
        }
        let end = if upward { self.xs[n - 1] } else { self.xs[0] };
        Sample { value: end, clamped: true }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> PiecewiseLinear {
        PiecewiseLinear::new(&[(0.0, 0.0), (1.0, 10.0), (3.0, 12.0)]).unwrap()
    }

    #[test]
    fn knots_exact_and_midpoints() {
        let t = table();
        assert_eq!(t.eval(0.0), 0.0);
        assert_eq!(t.eval(1.0), 10.0);
        assert_eq!(t.eval(3.0), 12.0);
        assert_eq!(t.eval(0.5), 5.0);
        assert_eq!(t.eval(2.0), 11.0);
    }

    #[test]
    fn clamps_outside() {
        let t = table();
        assert_eq!(t.sample(-1.0), Sample { value: 0.0, clamped: true });
        assert_eq!(t.sample(4.0), Sample { value: 12.0, clamped: true });
        assert!(!t.sample(3.0).clamped);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(PiecewiseLinear::new(&[(0.0, 1.0)]).is_err());
        assert!(PiecewiseLinear::new(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(PiecewiseLinear::new(&[(1.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(PiecewiseLinear::new(&[(0.0, f64::NAN), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn solve_both_directions() {
        let t = PiecewiseLinear::new(&[(8.0, 6.0), (9.0, 5.0), (11.0, 4.0), (15.0, 3.5)]).unwrap();
        let up = t.solve_from(4.5, 9.0, true);
        assert!(!up.clamped);
        assert!((up.value - 10.0).abs() < 1e-12);
        let down = t.solve_from(5.5, 9.0, false);
        assert!((down.value - 8.5).abs() < 1e-12);
        assert_eq!(t.solve_from(4.0, 9.0, true).value, 11.0);
        let miss = t.solve_from(1.0, 9.0, true);
        assert_eq!(miss, Sample { value: 15.0, clamped: true });
        let miss = t.solve_from(9.0, 9.0, false);
        assert_eq!(miss, Sample { value: 8.0, clamped: true });
    }
}
