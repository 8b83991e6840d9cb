//! Objective and raw gradients for particle sources on a fixed output grid.

use std::f64::consts::LOG2_E;

use crate::channel::Channel;
use crate::entropy::{for_each_kernel, DENSITY_FLOOR};
use crate::quadrature::{QuadratureGrid, SIGMA_MARGIN};

/// Kernel rows `K_ik = f_{Y|X}(y_k | c_i)` for one set of positions.
#[derive(Debug, Clone)]
pub(crate) struct Kernels {
    rows: Vec<Vec<f64>>,
}

impl Kernels {
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }
}

pub(crate) struct Evaluator<'a> {
    channel: &'a Channel,
    grid: QuadratureGrid,
    points: Vec<f64>,
    quad_weights: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(channel: &'a Channel, grid: QuadratureGrid) -> Self {
        Evaluator {
            channel,
            points: grid.points(),
            quad_weights: grid.weights(),
            grid,
        }
    }

    pub(crate) fn channel(&self) -> &Channel {
        self.channel
    }

    /// False when some `a(c_i)` sits closer than 8 sigma to a grid edge.
    pub(crate) fn covers(&self, positions: &[f64]) -> bool {
        let nl = self.channel.nonlinearity();
        let margin = SIGMA_MARGIN * self.channel.sigma() * (1.0 - 1e-12);
        positions.iter().all(|&c| {
            let m = nl.apply(c);
            m - margin >= self.grid.lo() && m + margin <= self.grid.hi()
        })
    }

    pub(crate) fn kernels(&self, positions: &[f64]) -> Kernels {
        let nl = self.channel.nonlinearity();
        let sigma = self.channel.sigma();
        let rows = positions
            .iter()
            .map(|&c| {
                let mut row = vec![0.0; self.grid.len()];
                for_each_kernel(&self.grid, nl.apply(c), sigma, |k, g| row[k] = g);
                row
            })
            .collect();
        Kernels { rows }
    }

    pub(crate) fn density(&self, kernels: &Kernels, weights: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.grid.len()];
        for (row, &w) in kernels.rows.iter().zip(weights) {
            if w != 0.0 {
                for (dst, &k) in f.iter_mut().zip(row) {
                    *dst += w * k;
                }
            }
        }
        f
    }

    /// Density without materializing kernel rows.
    pub(crate) fn density_direct(&self, positions: &[f64], weights: &[f64]) -> Vec<f64> {
        let nl = self.channel.nonlinearity();
        let sigma = self.channel.sigma();
        let mut f = vec![0.0; self.grid.len()];
        for (&c, &w) in positions.iter().zip(weights) {
            if w != 0.0 {
                for_each_kernel(&self.grid, nl.apply(c), sigma, |k, g| f[k] += w * g);
            }
        }
        f
    }

    /// `h = -sum_k W_k f_k log2 f_k`.
    pub(crate) fn entropy(&self, density: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (&f, &w) in density.iter().zip(&self.quad_weights) {
            if f >= DENSITY_FLOOR {
                acc -= w * f * f.log2();
            }
        }
        acc
    }

    /// Entropy of `f + t * delta`.
    pub(crate) fn entropy_along(&self, density: &[f64], delta: &[f64], t: f64) -> f64 {
        let mut acc = 0.0;
        for ((&f, &d), &w) in density.iter().zip(delta).zip(&self.quad_weights) {
            let v = f + t * d;
            if v >= DENSITY_FLOOR {
                acc -= w * v * v.log2();
            }
        }
        acc
    }

    pub(crate) fn entropy_at(&self, positions: &[f64], weights: &[f64]) -> f64 {
        self.entropy(&self.density_direct(positions, weights))
    }

    /// `(dh/dw_i, dh/dc_i)` for the unnormalized mixture `sum_i w_i K_i`.
    ///
    /// `dh/dw_i = -sum_k W_k K_ik (log2 f_k + log2 e)` and
    /// `dh/dc_i = -w_i a'(c_i) sum_k W_k K_ik (y_k - a(c_i))/sigma^2 (log2 f_k + log2 e)`.
    pub(crate) fn raw_gradients(
        &self,
        positions: &[f64],
        weights: &[f64],
        kernels: &Kernels,
        density: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let nl = self.channel.nonlinearity();
        let inv_var = 1.0 / (self.channel.sigma() * self.channel.sigma());
        let score: Vec<f64> = density
            .iter()
            .zip(&self.quad_weights)
            .map(|(&f, &w)| if f >= DENSITY_FLOOR { w * (f.log2() + LOG2_E) } else { 0.0 })
            .collect();
        let mut gw = Vec::with_capacity(positions.len());
        let mut gc = Vec::with_capacity(positions.len());
        for (i, (&c, &w)) in positions.iter().zip(weights).enumerate() {
            let mu = nl.apply(c);
            let row = kernels.row(i);
            let mut sw = 0.0;
            let mut sc = 0.0;
            for ((&k, &s), &y) in row.iter().zip(&score).zip(&self.points) {
                let ks = k * s;
                sw += ks;
                sc += ks * (y - mu);
            }
            gw.push(-sw);
            gc.push(-w * nl.derivative(c) * inv_var * sc);
        }
        (gw, gc)
    }

    /// `sum_i d_i K_i`, the change of the density per unit weight step.
    pub(crate) fn weight_delta(&self, kernels: &Kernels, direction: &[f64]) -> Vec<f64> {
        self.density(kernels, direction)
    }
}
