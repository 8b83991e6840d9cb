//! Sweeps of the optimizer over a power grid.

use super::{optimize_from, ConstraintSpec, Schedule};
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureGrid;
use crate::source::{Constellation, ParticleSource};

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub power: f64,
    /// Optimized `I(X;Y)` in bits; `NaN` when the point failed.
    pub value_bits: f64,
    pub n_particles: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub seed: u64,
    pub source: Option<ParticleSource>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CapacityCurve {
    pub points: Vec<CurvePoint>,
}

impl CapacityCurve {
    pub fn powers(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.power).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value_bits).collect()
    }

    /// Point with the largest value.
    pub fn peak(&self) -> Option<&CurvePoint> {
        self.points
            .iter()
            .filter(|p| p.value_bits.is_finite())
            .max_by(|a, b| a.value_bits.total_cmp(&b.value_bits))
    }
}

/// `points_per_decade` log-spaced powers per decade from `p_min` through
/// `p_max` (both included).
pub fn log_power_grid(p_min: f64, p_max: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    if !(p_min.is_finite() && p_min > 0.0) {
        return Err(Error::InvalidPower(p_min));
    }
    if !(p_max.is_finite() && p_max >= p_min) {
        return Err(Error::InvalidPower(p_max));
    }
    if points_per_decade == 0 {
        return Err(Error::InvalidInput("points per decade must be positive".into()));
    }
    let decades = (p_max / p_min).log10();
    let steps = (decades * points_per_decade as f64 - 1e-9).ceil().max(0.0) as usize;
    if steps == 0 {
        return Ok(vec![p_min]);
    }
    let (a, b) = (p_min.log10(), p_max.log10());
    Ok((0..=steps)
        .map(|i| {
            if i == steps {
                p_max
            } else if i == 0 {
                p_min
            } else {
                10f64.powf(a + (b - a) * i as f64 / steps as f64)
            }
        })
        .collect())
}

/// Output grid for a power level: the channel's own grid when the output is
/// bounded, otherwise one covering a generous multiple of `sqrt(P)`.
pub fn grid_for_power(channel: &Channel, power: f64, n_points: usize) -> Result<QuadratureGrid> {
    match channel.nonlinearity().output_bound() {
        Some(_) => QuadratureGrid::for_channel(channel, n_points),
        None => {
            let reach = 8.0 * power.sqrt();
            QuadratureGrid::covering(-reach, reach, channel.sigma(), n_points)
        }
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the point at `index` in a sweep seeded with `seed`.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(index as u64))
}

/// Rescales the outer particles of `source` (those with `|c|` at least half
/// the largest) so the whole source carries `power`. Falls back to a uniform
/// rescale when the inner particles alone exceed `power`.
fn boost_outer(source: &ParticleSource, power: f64) -> Result<ParticleSource> {
    let reach = source.positions().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let (mut inner, mut outer) = (0.0, 0.0);
    for (c, w) in source.positions().iter().zip(source.weights()) {
        if c.abs() >= 0.5 * reach {
            outer += w * c * c;
        } else {
            inner += w * c * c;
        }
    }
    if outer > 0.0 && power > inner {
        let s = ((power - inner) / outer).sqrt();
        source.map_positions(|c| if c.abs() >= 0.5 * reach { c * s } else { c })
    } else {
        let s = (power / source.power()).sqrt();
        source.map_positions(|c| c * s)
    }
}

fn sweep(
    powers: &[f64],
    channel: &Channel,
    n_points: usize,
    schedule: &Schedule,
    spec_for: impl Fn(f64) -> Result<ConstraintSpec>,
) -> CapacityCurve {
    let mut points = Vec::with_capacity(powers.len());
    let mut previous: Option<ParticleSource> = None;
    for (i, &power) in powers.iter().enumerate() {
        let seed = point_seed(schedule.seed, i);
        let sched = Schedule {
            seed,
            ..schedule.clone()
        };
        let result = (|| {
            let spec = spec_for(power)?;
            let grid = grid_for_power(channel, power, n_points)?;
            let warm: Vec<ParticleSource> = match &previous {
                Some(prev) => vec![boost_outer(prev, power)?],
                None => Vec::new(),
            };
            optimize_from(&spec, channel, &grid, &sched, &warm)
        })();
        match result {
            Ok(out) => {
                previous = Some(out.source.clone());
                points.push(CurvePoint {
                    power,
                    value_bits: out.mutual_information,
                    n_particles: out.source.len(),
                    converged: out.converged,
                    restarts_used: out.restarts_used,
                    seed,
                    source: Some(out.source),
                    error: None,
                });
            }
            Err(e) => points.push(CurvePoint {
                power,
                value_bits: f64::NAN,
                n_particles: 0,
                converged: false,
                restarts_used: 0,
                seed,
                source: None,
                error: Some(e.to_string()),
            }),
        }
    }
    CapacityCurve { points }
}

/// Capacity `C(P)` at each power, warm-starting every point from the
/// previous optimum. Failed points carry their error and do not stop the
/// sweep.
pub fn capacity_curve(
    powers: &[f64],
    channel: &Channel,
    n_points: usize,
    schedule: &Schedule,
) -> CapacityCurve {
    sweep(powers, channel, n_points, schedule, ConstraintSpec::joint)
}

/// Best probabilistic shaping of `constellation` at each power.
pub fn shaping_curve(
    constellation: Constellation,
    powers: &[f64],
    channel: &Channel,
    n_points: usize,
    schedule: &Schedule,
) -> CapacityCurve {
    sweep(powers, channel, n_points, schedule, |p| ConstraintSpec::shaping(constellation, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints_and_density() {
        let g = log_power_grid(0.1, 1e5, 8).unwrap();
        assert_eq!(g.len(), 49);
        assert_eq!(g[0], 0.1);
        assert_eq!(*g.last().unwrap(), 1e5);
        assert!((g[8] - 1.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(log_power_grid(3.0, 3.0, 4).unwrap(), vec![3.0]);
        assert!(log_power_grid(0.0, 1.0, 4).is_err());
        assert!(log_power_grid(2.0, 1.0, 4).is_err());
    }

    #[test]
    fn point_seeds_differ() {
        let s: Vec<u64> = (0..50).map(|i| point_seed(7, i)).collect();
        let mut u = s.clone();
        u.sort();
        u.dedup();
        assert_eq!(u.len(), s.len());
        assert_eq!(point_seed(7, 3), point_seed(7, 3));
    }

    #[test]
    fn boosting_hits_the_power() {
        let s = ParticleSource::new(vec![-3.0, -0.5, 0.5, 3.0], vec![0.1, 0.4, 0.4, 0.1]).unwrap();
        let b = boost_outer(&s, 10.0).unwrap();
        assert!((b.power() - 10.0).abs() < 1e-12);
        assert_eq!(b.positions()[1], -0.5);
        let d = boost_outer(&s, 0.01).unwrap();
        assert!((d.power() - 0.01).abs() < 1e-12);
    }
}
