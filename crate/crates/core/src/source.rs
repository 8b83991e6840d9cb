//! Channel input distributions: continuous pdfs rescaled to a given power,
//! equally spaced constellations, and free particle sources.

use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::quadrature::push_simpson_nodes;

/// Probability mass a continuous source may lose to truncation of its support.
pub const TRUNCATION_MASS: f64 = 1e-10;
/// Exponential sources are cut where the tail mass falls below this value.
pub const EXPONENTIAL_TAIL: f64 = 1e-12;
/// A user-supplied x-range may drop at most this much source mass.
pub const MAX_MISSING_MASS: f64 = 1e-6;

/// Panels per pdf length scale in the x-quadrature.
const PANELS_PER_SCALE: f64 = 64.0;
/// Output-space resolution of the x-quadrature, in noise standard deviations.
const OUTPUT_RESOLUTION: f64 = 1.0 / 16.0;

fn check_power(power: f64) -> Result<()> {
    if power.is_finite() && power > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidPower(power))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContinuousFamily {
    GaussianZeroMean,
    UniformZeroMean,
    ExponentialOneSided,
}

impl ContinuousFamily {
    pub const ALL: [ContinuousFamily; 3] = [
        ContinuousFamily::GaussianZeroMean,
        ContinuousFamily::UniformZeroMean,
        ContinuousFamily::ExponentialOneSided,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ContinuousFamily::GaussianZeroMean => "gaussian",
            ContinuousFamily::UniformZeroMean => "uniform",
            ContinuousFamily::ExponentialOneSided => "exponential",
        }
    }
}

impl fmt::Display for ContinuousFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContinuousFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gaussian_zero_mean" => Ok(ContinuousFamily::GaussianZeroMean),
            "uniform" | "uniform_zero_mean" => Ok(ContinuousFamily::UniformZeroMean),
            "exponential" | "exponential_one_sided" => Ok(ContinuousFamily::ExponentialOneSided),
            other => Err(Error::InvalidInput(format!("unknown source family '{other}'"))),
        }
    }
}

/// A unit-power base pdf `g` rescaled to power `P` as `f(x) = beta g(beta x)`,
/// `beta = 1/sqrt(P)`. Always evaluated analytically, never sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousSource {
    family: ContinuousFamily,
    power: f64,
}

impl ContinuousSource {
    pub fn new(family: ContinuousFamily, power: f64) -> Result<Self> {
        check_power(power)?;
        Ok(ContinuousSource { family, power })
    }

    pub fn family(&self) -> ContinuousFamily {
        self.family
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Analytic mean: 0 for the zero-mean families, `sqrt(P/2)` for the exponential.
    pub fn mean(&self) -> f64 {
        match self.family {
            ContinuousFamily::ExponentialOneSided => (self.power / 2.0).sqrt(),
            _ => 0.0,
        }
    }

    fn exp_rate(&self) -> f64 {
        (2.0 / self.power).sqrt()
    }

    fn uniform_half_width(&self) -> f64 {
        (3.0 * self.power).sqrt()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let p = self.power;
        match self.family {
            ContinuousFamily::GaussianZeroMean => crate::channel::std_normal_pdf(x / p.sqrt()) / p.sqrt(),
            ContinuousFamily::UniformZeroMean => {
                let l = self.uniform_half_width();
                if x.abs() <= l {
                    0.5 / l
                } else {
                    0.0
                }
            }
            ContinuousFamily::ExponentialOneSided => {
                if x >= 0.0 {
                    let r = self.exp_rate();
                    r * (-r * x).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Mass of the source outside `[lo, hi]`.
    pub fn mass_outside(&self, lo: f64, hi: f64) -> f64 {
        match self.family {
            ContinuousFamily::GaussianZeroMean => {
                let s = self.power.sqrt() * std::f64::consts::SQRT_2;
                0.5 * erfc(-lo / s) + 0.5 * erfc(hi / s)
            }
            ContinuousFamily::UniformZeroMean => {
                let l = self.uniform_half_width();
                let inside = (hi.min(l) - lo.max(-l)).max(0.0);
                1.0 - inside / (2.0 * l)
            }
            ContinuousFamily::ExponentialOneSided => {
                let r = self.exp_rate();
                let below = if lo > 0.0 { 1.0 - (-r * lo).exp() } else { 0.0 };
                let above = if hi > 0.0 { (-r * hi).exp() } else { 1.0 };
                (below + above).min(1.0)
            }
        }
    }

    /// Truncated support used for integration over x.
    pub fn support(&self) -> (f64, f64) {
        match self.family {
            ContinuousFamily::GaussianZeroMean => {
                let z = -Normal::standard().inverse_cdf(TRUNCATION_MASS / 2.0);
                let s = self.power.sqrt();
                (-z * s, z * s)
            }
            ContinuousFamily::UniformZeroMean => {
                let l = self.uniform_half_width();
                (-l, l)
            }
            ContinuousFamily::ExponentialOneSided => {
                (0.0, -(self.power / 2.0).sqrt() * EXPONENTIAL_TAIL.ln())
            }
        }
    }

    fn length_scale(&self) -> f64 {
        match self.family {
            ContinuousFamily::ExponentialOneSided => 1.0 / self.exp_rate(),
            _ => self.power.sqrt(),
        }
    }

    /// Quadrature nodes `(x_j, v_j)` with `v_j = simpson_weight_j * f_X(x_j)` so
    /// that `sum_j v_j phi(x_j)` approximates `E[phi(X)]`.
    ///
    /// With a channel, the node spacing also resolves `a(x)` to a sixteenth of
    /// the noise standard deviation, segment by segment, so that the
    /// marginalization over x stays accurate where `a` is steep and costs
    /// little where it is saturated.
    pub fn quadrature_nodes(&self, channel: Option<&Channel>) -> Vec<(f64, f64)> {
        let (lo, hi) = self.support();
        self.nodes_between(lo, hi, channel)
    }

    /// As [`quadrature_nodes`](Self::quadrature_nodes) on an explicit range.
    /// Fails with a coverage error when the range drops `>= 1e-6` of the mass.
    pub fn quadrature_nodes_on(
        &self,
        lo: f64,
        hi: f64,
        channel: Option<&Channel>,
    ) -> Result<Vec<(f64, f64)>> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!("bad x-range [{lo}, {hi}]")));
        }
        let missing = self.mass_outside(lo, hi);
        if missing >= MAX_MISSING_MASS {
            return Err(Error::Coverage { missing });
        }
        let (slo, shi) = self.support();
        Ok(self.nodes_between(lo.max(slo), hi.min(shi), channel))
    }

    fn nodes_between(&self, lo: f64, hi: f64, channel: Option<&Channel>) -> Vec<(f64, f64)> {
        let scale_step = self.length_scale() / PANELS_PER_SCALE;
        let mut breaks = vec![lo, hi];
        if let Some(knee) = channel.and_then(|c| c.nonlinearity().knee()) {
            if lo < 0.0 && hi > 0.0 {
                breaks.push(0.0);
            }
            let mut b = knee;
            while b < lo.abs().max(hi.abs()) {
                for cand in [b, -b] {
                    if cand > lo && cand < hi {
                        breaks.push(cand);
                    }
                }
                b *= 2.0;
            }
        }
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();

        let mut nodes: Vec<(f64, f64)> = Vec::new();
        for seg in breaks.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let mut step = scale_step;
            if let Some(ch) = channel {
                let nl = ch.nonlinearity();
                let slope = (0..=32)
                    .map(|k| nl.derivative(a + (b - a) * k as f64 / 32.0))
                    .fold(0.0, f64::max);
                if slope > 0.0 {
                    step = step.min(OUTPUT_RESOLUTION * ch.sigma() / slope);
                }
            }
            let panels = (((b - a) / (2.0 * step)).ceil() as usize).max(8);
            let merge = !nodes.is_empty();
            push_simpson_nodes(a, b, panels, &mut nodes, merge);
        }
        for node in nodes.iter_mut() {
            node.1 *= self.pdf(node.0);
        }
        nodes
    }
}

/// Discrete source `sum_i w_i delta(x - c_i)`.
///
/// Positions are kept sorted and pairwise distinct; weights are nonnegative
/// and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSource {
    positions: Vec<f64>,
    weights: Vec<f64>,
}

impl ParticleSource {
    /// Builds a source, merging positions closer than
    /// `1e-9 * max(1, max |c|)` and renormalizing the weights.
    pub fn new(positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let scale = positions.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        Self::with_merge_tolerance(positions, weights, 1e-9 * scale)
    }

    pub fn with_merge_tolerance(positions: Vec<f64>, weights: Vec<f64>, tol: f64) -> Result<Self> {
        if positions.is_empty() || positions.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "particle source needs matching nonempty vectors, got {} positions and {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if let Some(c) = positions.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("particle position {c} is not finite")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidInput(format!("particle weight {w} is not a probability")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("particle weights sum to {total}, not 1")));
        }

        let mut pairs: Vec<(f64, f64)> = positions.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (c, w) in pairs {
            match merged.last_mut() {
                Some(last) if (c - last.0).abs() <= tol => {
                    let sum = last.1 + w;
                    if sum > 0.0 {
                        // rounding must not push the average past the pair
                        last.0 = ((last.0 * last.1 + c * w) / sum).clamp(last.0, c);
                    }
                    last.1 = sum;
                }
                _ => merged.push((c, w)),
            }
        }
        let (positions, mut weights): (Vec<f64>, Vec<f64>) = merged.into_iter().unzip();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(ParticleSource { positions, weights })
    }

    /// A single particle at `x` (a point mass).
    pub fn point_mass(x: f64) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.positions.iter().zip(&self.weights).map(|(c, w)| c * w).sum()
    }

    /// `sum_i w_i c_i^2`.
    pub fn power(&self) -> f64 {
        self.positions.iter().zip(&self.weights).map(|(c, w)| w * c * c).sum()
    }

    /// Maps every position through `f`, keeping the weights.
    pub fn map_positions(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.positions.iter().map(|&c| f(c)).collect(), self.weights.clone())
    }

    /// Drops particles whose weight is at or below `threshold`.
    pub fn without_weights_below(&self, threshold: f64) -> Result<Self> {
        let (c, w): (Vec<f64>, Vec<f64>) = self
            .positions
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > threshold)
            .map(|(c, w)| (*c, *w))
            .unzip();
        let total: f64 = w.iter().sum();
        Self::new(c, w.into_iter().map(|x| x / total).collect())
    }
}

/// Equally spaced one-dimensional constellations with uniform probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constellation {
    /// On-off keying, `{0, sqrt(2P)}`.
    Ook,
    /// `{-sqrt(P), +sqrt(P)}`.
    Bpsk,
    /// Zero-mean symmetric grid of `M` points.
    Pam(usize),
}

impl Constellation {
    pub fn parse(name: &str, order: Option<usize>) -> Result<Self> {
        let c = match name.trim().to_ascii_lowercase().as_str() {
            "ook" => Constellation::Ook,
            "bpsk" => Constellation::Bpsk,
            "pam" => Constellation::Pam(order.ok_or_else(|| {
                Error::InvalidInput("pam constellation needs an order".into())
            })?),
            other => return Err(Error::InvalidInput(format!("unknown constellation '{other}'"))),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Constellation::Pam(m) if m < 2 => Err(Error::InvalidOrder(m)),
            _ => Ok(()),
        }
    }

    pub fn order(&self) -> usize {
        match *self {
            Constellation::Ook | Constellation::Bpsk => 2,
            Constellation::Pam(m) => m,
        }
    }

    /// Unscaled points: OOK `{0, 1}`, BPSK `{-1, 1}`, M-PAM `{-(M-1), ..., M-1}` in steps of 2.
    pub fn base_points(&self) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(match *self {
            Constellation::Ook => vec![0.0, 1.0],
            Constellation::Bpsk => vec![-1.0, 1.0],
            Constellation::Pam(m) => (0..m).map(|k| 2.0 * k as f64 - (m as f64 - 1.0)).collect(),
        })
    }

    /// Uniform constellation scaled to average power `power`.
    pub fn source(&self, power: f64) -> Result<ParticleSource> {
        check_power(power)?;
        let base = self.base_points()?;
        let m = base.len() as f64;
        let base_power = base.iter().map(|b| b * b).sum::<f64>() / m;
        let scale = (power / base_power).sqrt();
        let positions = base.iter().map(|b| b * scale).collect();
        ParticleSource::new(positions, vec![1.0 / m; base.len()])
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constellation::Ook => f.write_str("OOK"),
            Constellation::Bpsk => f.write_str("BPSK"),
            Constellation::Pam(m) => write!(f, "{m}-PAM"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Continuous(ContinuousSource),
    Particles(ParticleSource),
}

impl From<ContinuousSource> for Source {
    fn from(s: ContinuousSource) -> Self {
        Source::Continuous(s)
    }
}

impl From<ParticleSource> for Source {
    fn from(s: ParticleSource) -> Self {
        Source::Particles(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub power: f64,
}

/// Mean and second moment. Exact for particle sources, by quadrature over
/// the truncated support for continuous ones.
pub fn moments(source: &Source) -> Moments {
    match source {
        Source::Particles(p) => Moments {
            mean: p.mean(),
            power: p.power(),
        },
        Source::Continuous(c) => {
            let nodes = c.quadrature_nodes(None);
            let (mut mean, mut power) = (0.0, 0.0);
            for (x, v) in nodes {
                mean += v * x;
                power += v * x * x;
            }
            Moments { mean, power }
        }
    }
}
