//! Starting points for the ascent runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{restore_constraints, ConstraintSpec, Mode, OptimizerState, Schedule};
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::source::ParticleSource;

/// Standard normal quantiles at `(i + 1/2) / n`.
fn normal_quantiles(n: usize) -> Vec<f64> {
    let normal = Normal::standard();
    (0..n).map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64)).collect()
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let gamma = Gamma::new(1.0, 1.0).expect("unit gamma");
    let mut w: Vec<f64> = (0..n).map(|_| f64::max(gamma.sample(rng), 1e-12)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Moves `weights` toward the smallest or largest `c^2` until
/// `sum w c^2 = power`. The spec must already have passed validation.
fn fix_power(positions: &[f64], weights: &mut [f64], power: f64) -> Result<()> {
    let used: f64 = positions.iter().zip(weights.iter()).map(|(c, w)| w * c * c).sum();
    if (used - power).abs() <= 1e-14 * power {
        return Ok(());
    }
    let squares = positions.iter().map(|c| c * c);
    let target = if used > power {
        squares.enumerate().min_by(|a, b| a.1.total_cmp(&b.1))
    } else {
        squares.enumerate().max_by(|a, b| a.1.total_cmp(&b.1))
    };
    let (k, edge) = target.ok_or_else(|| Error::InvalidInput("no positions".into()))?;
    if (used - edge).abs() == 0.0 {
        return Err(Error::Infeasible(format!("positions cannot reach power {power}")));
    }
    let theta = ((used - power) / (used - edge)).clamp(0.0, 1.0);
    weights.iter_mut().for_each(|w| *w *= 1.0 - theta);
    weights[k] += theta;
    Ok(())
}

/// A feasible state built from `start`. Shaping and fixed-position modes
/// take only the weights of `start`, and only when its size matches.
pub(super) fn feasible_state(start: &ParticleSource, spec: &ConstraintSpec) -> Result<OptimizerState> {
    let mut state = match &spec.mode {
        Mode::Joint => OptimizerState::new(start, spec.power),
        Mode::Shaping { base } => {
            let w = if start.len() == base.len() {
                start.weights().to_vec()
            } else {
                uniform(base.len())
            };
            OptimizerState::from_parts(base.clone(), w, spec.power)
        }
        Mode::FixedPositions { positions } => {
            let mut w = if start.len() == positions.len() {
                start.weights().to_vec()
            } else {
                uniform(positions.len())
            };
            fix_power(positions, &mut w, spec.power)?;
            OptimizerState::from_parts(positions.clone(), w, spec.power)
        }
    };
    if matches!(spec.mode, Mode::Joint) && state.power_used() == 0.0 {
        return Err(Error::Infeasible("a starting source at the origin cannot be scaled".into()));
    }
    restore_constraints(&mut state, spec);
    Ok(state)
}

/// Grid on `[-3, 3] sqrt(P)` with weights `exp(-alpha c^2)`, `alpha` chosen
/// by bisection to carry power `P`.
fn shaped_grid(n: usize, power: f64) -> (Vec<f64>, Vec<f64>) {
    let half = 3.0 * power.sqrt();
    let c: Vec<f64> = (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1).max(1) as f64)
        .collect();
    let weights_for = |alpha: f64| -> Vec<f64> {
        let mut w: Vec<f64> = c.iter().map(|x| (-alpha * x * x / power).exp()).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        w
    };
    let power_for = |alpha: f64| -> f64 {
        weights_for(alpha).iter().zip(&c).map(|(w, x)| w * x * x).sum()
    };
    let (mut lo, mut hi) = (0.0, 50.0);
    if power_for(lo) <= power {
        return (c.clone(), weights_for(0.0));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if power_for(mid) > power {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = weights_for(0.5 * (lo + hi));
    (c, w)
}

/// Gaussian-like inner part at the knee plus two outer particles that take
/// the remaining power.
fn booster_start(n: usize, power: f64, knee: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let inner_power = knee * knee / 4.0;
    if n < 4 || power <= 2.0 * inner_power {
        return None;
    }
    let inner = n - 2;
    let inner_mass = 0.8;
    let q = normal_quantiles(inner);
    let q_power: f64 = q.iter().map(|x| x * x).sum::<f64>() / inner as f64;
    let scale = (inner_power / q_power).sqrt();
    let outer = ((power - inner_mass * inner_power) / (1.0 - inner_mass)).sqrt();
    let mut c: Vec<f64> = q.iter().map(|x| x * scale).collect();
    let mut w = vec![inner_mass / inner as f64; inner];
    c.push(-outer);
    c.push(outer);
    w.push(0.5 * (1.0 - inner_mass));
    w.push(0.5 * (1.0 - inner_mass));
    Some((c, w))
}

fn jittered_quantiles(rng: &mut ChaCha8Rng, n: usize, power: f64) -> (Vec<f64>, Vec<f64>) {
    let q = normal_quantiles(n);
    let spread = 1.5 * power.sqrt();
    let c: Vec<f64> = q
        .iter()
        .map(|x| spread * (x + rng.random_range(-0.5..0.5) / n as f64 * 4.0))
        .collect();
    (c, dirichlet(rng, n))
}

fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// The default initialization followed by `schedule.restarts` others.
pub(super) fn starts(spec: &ConstraintSpec, channel: &Channel, schedule: &Schedule) -> Result<Vec<OptimizerState>> {
    let total = schedule.restarts + 1;
    let p = spec.power;
    let mut out: Vec<OptimizerState> = Vec::with_capacity(total);
    let push = |out: &mut Vec<OptimizerState>, c: Vec<f64>, w: Vec<f64>| -> Result<()> {
        let mut st = OptimizerState::from_parts(c, w, p);
        restore_constraints(&mut st, spec);
        out.push(st);
        Ok(())
    };
    match &spec.mode {
        Mode::Joint => {
            let n = schedule.initial_particles.max(2);
            let sp = p.sqrt();
            push(&mut out, normal_quantiles(n).iter().map(|x| x * sp).collect(), uniform(n))?;
            let mut extra: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
            extra.push(shaped_grid(n, p));
            if let Some(knee) = channel.nonlinearity().knee() {
                extra.extend(booster_start(n, p, knee));
            }
            let mut k = 0;
            while out.len() < total {
                let (c, w) = if k < extra.len() {
                    extra[k].clone()
                } else {
                    jittered_quantiles(&mut restart_rng(schedule.seed, k), n, p)
                };
                k += 1;
                push(&mut out, c, w)?;
            }
        }
        Mode::Shaping { base } => {
            push(&mut out, base.clone(), uniform(base.len()))?;
            for k in 1..total {
                let w = dirichlet(&mut restart_rng(schedule.seed, k), base.len());
                push(&mut out, base.clone(), w)?;
            }
        }
        Mode::FixedPositions { positions } => {
            for k in 0..total {
                let mut w = if k == 0 {
                    uniform(positions.len())
                } else {
                    dirichlet(&mut restart_rng(schedule.seed, k), positions.len())
                };
                fix_power(positions, &mut w, p)?;
                push(&mut out, positions.clone(), w)?;
            }
        }
    }
    Ok(out)
}

/// Splits the heaviest particles in two until there are `target` of them.
pub(super) fn split_heaviest(state: &OptimizerState, target: usize, sigma: f64) -> OptimizerState {
    let mut pairs: Vec<(f64, f64)> = state
        .positions
        .iter()
        .copied()
        .zip(state.weights.iter().copied())
        .collect();
    let offset = 0.05 * sigma;
    while pairs.len() < target {
        let (k, _) = pairs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
            .expect("nonempty");
        let (c, w) = pairs[k];
        pairs[k] = (c - offset, 0.5 * w);
        pairs.push((c + offset, 0.5 * w));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (c, w) = pairs.into_iter().unzip();
    OptimizerState::from_parts(c, w, state.power)
}
