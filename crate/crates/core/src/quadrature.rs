//! Composite Simpson rule on a uniform grid.

use crate::channel::Channel;
use crate::error::{Error, Result};

/// Default number of output-grid points.
pub const DEFAULT_POINTS: usize = 4097;
/// Smallest accepted grid.
pub const MIN_POINTS: usize = 129;
/// Margin, in noise standard deviations, added around the noiseless output range.
pub const SIGMA_MARGIN: f64 = 8.0;

/// Uniform grid `lo, lo + h, ..., hi` with an odd number of points,
/// integrated with composite Simpson weights `h/3 * (1, 4, 2, 4, ..., 4, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl QuadratureGrid {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!(
                "quadrature range must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n_points < MIN_POINTS || n_points.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "quadrature needs an odd number of points >= {MIN_POINTS}, got {n_points}"
            )));
        }
        Ok(QuadratureGrid { lo, hi, n: n_points })
    }

    /// Grid over `[lo - 8 sigma, hi + 8 sigma]`, where `[lo, hi]` is the range
    /// of noiseless channel outputs.
    pub fn covering(lo: f64, hi: f64, sigma: f64, n_points: usize) -> Result<Self> {
        Self::new(lo - SIGMA_MARGIN * sigma, hi + SIGMA_MARGIN * sigma, n_points)
    }

    /// Grid covering every possible output of a channel with bounded `a(.)`:
    /// `[-amax - 8 sigma, amax + 8 sigma]`.
    pub fn for_channel(channel: &Channel, n_points: usize) -> Result<Self> {
        let bound = channel.nonlinearity().output_bound().ok_or_else(|| {
            Error::InvalidInput(
                "channel output is unbounded; build the grid from the source instead".into(),
            )
        })?;
        Self::covering(-bound, bound, channel.sigma(), n_points)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    #[inline]
    pub fn point(&self, k: usize) -> f64 {
        if k + 1 == self.n {
            self.hi
        } else {
            self.lo + k as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.point(k)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        let h3 = self.step() / 3.0;
        (0..self.n)
            .map(|k| {
                if k == 0 || k + 1 == self.n {
                    h3
                } else if k % 2 == 1 {
                    4.0 * h3
                } else {
                    2.0 * h3
                }
            })
            .collect()
    }

    /// Simpson sum of samples taken at [`points`](Self::points).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.n, "sample count must match the grid");
        let mut odd = 0.0;
        let mut even = 0.0;
        for (k, v) in values.iter().enumerate().take(self.n - 1).skip(1) {
            if k % 2 == 1 {
                odd += v;
            } else {
                even += v;
            }
        }
        (values[0] + values[self.n - 1] + 4.0 * odd + 2.0 * even) * self.step() / 3.0
    }

    /// Same range with roughly half the points (used for the error estimate).
    pub fn coarsened(&self) -> Option<QuadratureGrid> {
        let mut m = self.n.div_ceil(2);
        if m.is_multiple_of(2) {
            m += 1;
        }
        QuadratureGrid::new(self.lo, self.hi, m).ok()
    }

    /// Same range with `2n - 1` points.
    pub fn refined(&self) -> QuadratureGrid {
        QuadratureGrid {
            n: 2 * self.n - 1,
            ..*self
        }
    }

    /// True when `[lo, hi]` lies inside the grid range.
    pub fn contains_range(&self, lo: f64, hi: f64) -> bool {
        lo >= self.lo && hi <= self.hi
    }
}

/// Appends composite Simpson nodes and weights on `[lo, hi]` (`2 * panels + 1`
/// nodes) to `out`. With `merge_first`, the first node's weight is folded into
/// the last node already in `out`, which must sit at `lo`.
pub(crate) fn push_simpson_nodes(
    lo: f64,
    hi: f64,
    panels: usize,
    out: &mut Vec<(f64, f64)>,
    merge_first: bool,
) {
    let n = 2 * panels + 1;
    let h = (hi - lo) / (n - 1) as f64;
    let h3 = h / 3.0;
    for k in 0..n {
        let x = if k + 1 == n { hi } else { lo + k as f64 * h };
        let w = if k == 0 || k + 1 == n {
            h3
        } else if k % 2 == 1 {
            4.0 * h3
        } else {
            2.0 * h3
        };
        if k == 0 && merge_first {
            if let Some(last) = out.last_mut() {
                last.1 += w;
                continue;
            }
        }
        out.push((x, w));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shape() {
        assert!(QuadratureGrid::new(0.0, 1.0, 128).is_err());
        assert!(QuadratureGrid::new(0.0, 1.0, 130).is_err());
        assert!(QuadratureGrid::new(1.0, 1.0, 129).is_err());
        assert!(QuadratureGrid::new(0.0, f64::INFINITY, 129).is_err());
        assert!(QuadratureGrid::new(0.0, 1.0, 129).is_ok());
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let g = QuadratureGrid::new(-1.0, 2.0, 129).unwrap();
        let v: Vec<f64> = g.points().iter().map(|x| x * x * x - 2.0 * x + 1.0).collect();
        // x^4/4 - x^2 + x on [-1, 2]
        let exact = (4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
        assert!((g.integrate(&v) - exact).abs() < 1e-12);
        let w = g.weights();
        let s: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((s - exact).abs() < 1e-12);
    }

    #[test]
    fn channel_grid_covers_margin() {
        let g = QuadratureGrid::for_channel(&Channel::default(), DEFAULT_POINTS).unwrap();
        assert_eq!(g.lo(), -18.0);
        assert_eq!(g.hi(), 18.0);
        assert_eq!(g.point(g.len() - 1), 18.0);
        assert!(QuadratureGrid::for_channel(&Channel::identity(1.0).unwrap(), 129).is_err());
        assert_eq!(g.coarsened().unwrap().len(), 2049);
        assert_eq!(g.refined().len(), 8193);
    }

    #[test]
    fn simpson_nodes_merge_segments() {
        let mut nodes = Vec::new();
        push_simpson_nodes(0.0, 1.0, 4, &mut nodes, false);
        push_simpson_nodes(1.0, 3.0, 3, &mut nodes, true);
        assert_eq!(nodes.len(), 9 + 6);
        let total: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((total - 3.0).abs() < 1e-14);
        let m2: f64 = nodes.iter().map(|(x, w)| w * x * x).sum();
        assert!((m2 - 9.0).abs() < 1e-13);
    }
}
