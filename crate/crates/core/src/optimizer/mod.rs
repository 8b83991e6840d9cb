//! Capacity optimization over particle sources.
//!
//! The source is `sum_i w_i delta(x - c_i)`. Maximizing `I(X;Y)` is the same
//! as maximizing `h(Y)` because `h(Y|X)` does not depend on the source, so
//! the objective is the Lagrangian
//!
//! ```text
//! L(c, w, l1, l2) = h(Y) + l1 (sum w - 1) + l2 (sum w c^2 - P)
//! ```
//!
//! It is climbed by steepest ascent. Each iteration steps either the weights
//! or the positions (strictly alternating in joint mode), along the gradient
//! projected onto the constraint tangent space, with the step size chosen by
//! golden-section search. After every step the weights are renormalized and
//! the positions rescaled so the constraints hold to machine precision.

mod curve;
mod evaluator;
mod init;
pub mod line_search;
pub mod projection;

use rayon::prelude::*;

use crate::channel::Channel;
use crate::entropy::mutual_information;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureGrid;
use crate::source::{Constellation, ParticleSource, Source};

pub use curve::{
    capacity_curve, grid_for_power, log_power_grid, point_seed, shaping_curve, CapacityCurve,
    CurvePoint,
};
pub use line_search::{golden_section_search, LineSearchOutcome, GOLDEN_RATIO_CONJUGATE};
pub use projection::{project_gradient, Projection};

use evaluator::{Evaluator, Kernels};
use line_search::bracketed_search;

/// Which source parameters the optimizer may move.
#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    /// Positions and weights; the optimum is the channel capacity `C(P)`.
    Joint,
    /// Probabilistic shaping of a constellation: the weights are free and
    /// the points `base` are scaled by `sqrt(P / sum w b^2)` so the power is
    /// exactly `P` for every choice of weights.
    Shaping { base: Vec<f64> },
    /// Weights only, positions frozen; both constraints act on the weights.
    FixedPositions { positions: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Weights,
    Positions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub power: f64,
    pub mode: Mode,
    /// Optional bound on `|c_i|`.
    pub position_bound: Option<f64>,
}

impl ConstraintSpec {
    pub fn joint(power: f64) -> Result<Self> {
        let spec = ConstraintSpec {
            power,
            mode: Mode::Joint,
            position_bound: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn shaping(constellation: Constellation, power: f64) -> Result<Self> {
        let spec = ConstraintSpec {
            power,
            mode: Mode::Shaping {
                base: constellation.base_points()?,
            },
            position_bound: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn fixed_positions(positions: Vec<f64>, power: f64) -> Result<Self> {
        let spec = ConstraintSpec {
            power,
            mode: Mode::FixedPositions { positions },
            position_bound: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(Error::InvalidPower(self.power));
        }
        if let Some(b) = self.position_bound {
            if b.is_nan() || b <= 0.0 || b * b < self.power {
                return Err(Error::Infeasible(format!(
                    "position bound {b} cannot carry power {}",
                    self.power
                )));
            }
        }
        match &self.mode {
            Mode::Joint => Ok(()),
            Mode::Shaping { base } => {
                if base.is_empty() || base.iter().any(|b| !b.is_finite()) {
                    return Err(Error::InvalidInput("shaping needs finite base points".into()));
                }
                if base.iter().all(|&b| b == 0.0) {
                    return Err(Error::Infeasible("all constellation points are zero".into()));
                }
                Ok(())
            }
            Mode::FixedPositions { positions } => {
                if positions.is_empty() || positions.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidInput("fixed positions must be finite".into()));
                }
                let lo = positions.iter().map(|c| c * c).fold(f64::INFINITY, f64::min);
                let hi = positions.iter().map(|c| c * c).fold(0.0, f64::max);
                let slack = 1e-12 * self.power;
                if self.power < lo - slack || self.power > hi + slack {
                    return Err(Error::Infeasible(format!(
                        "fixed positions reach powers in [{lo}, {hi}], not {}",
                        self.power
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Iteration budget, growth rule and restarts of an optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Particles of the default initializations in joint mode.
    pub initial_particles: usize,
    /// Upper limit for particle-count doubling.
    pub max_particles: usize,
    /// Doubling stops when it gains less than this (bits).
    pub growth_tolerance: f64,
    /// Initializations run in addition to the default one.
    pub restarts: usize,
    /// Iteration budget of one ascent run.
    pub max_iterations: usize,
    pub stall_window: usize,
    /// A run has converged once the objective gains less than this over
    /// `stall_window` iterations.
    pub stall_tolerance: f64,
    pub prune_threshold: f64,
    pub prune_after: usize,
    /// Output-grid points used while searching; the final value is always
    /// evaluated on the caller's grid.
    pub search_points: usize,
    pub line_tolerance: f64,
    pub line_iterations: usize,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            initial_particles: 32,
            max_particles: 256,
            growth_tolerance: 5e-3,
            restarts: 2,
            max_iterations: 3000,
            stall_window: 25,
            stall_tolerance: 1e-6,
            prune_threshold: 1e-12,
            prune_after: 50,
            search_points: 513,
            line_tolerance: 1e-4,
            line_iterations: 40,
            seed: 0,
        }
    }
}

/// State of one ascent run. `objective` is `h(Y)` in bits on the search grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
    pub power: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub objective: f64,
    pub iteration: usize,
    pub last_step_kind: Option<StepKind>,
    pub last_step_size: f64,
}

impl OptimizerState {
    pub fn new(source: &ParticleSource, power: f64) -> Self {
        OptimizerState::from_parts(source.positions().to_vec(), source.weights().to_vec(), power)
    }

    /// A state from raw vectors; the constraints need not hold.
    pub fn from_parts(positions: Vec<f64>, weights: Vec<f64>, power: f64) -> Self {
        OptimizerState {
            positions,
            weights,
            power,
            lambda1: 0.0,
            lambda2: 0.0,
            objective: f64::NAN,
            iteration: 0,
            last_step_kind: None,
            last_step_size: 0.0,
        }
    }

    pub fn source(&self) -> Result<ParticleSource> {
        ParticleSource::new(self.positions.clone(), self.weights.clone())
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn power_used(&self) -> f64 {
        self.positions.iter().zip(&self.weights).map(|(c, w)| w * c * c).sum()
    }
}

fn check_state(state: &OptimizerState, grid: &QuadratureGrid, channel: &Channel) -> Result<()> {
    if state.positions.is_empty() || state.positions.len() != state.weights.len() {
        return Err(Error::InvalidInput("state needs matching nonempty vectors".into()));
    }
    if state.positions.iter().chain(&state.weights).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("state has non-finite entries".into()));
    }
    let ev = Evaluator::new(channel, *grid);
    if !ev.covers(&state.positions) {
        return Err(Error::Coverage { missing: f64::NAN });
    }
    Ok(())
}

/// `h(Y) + l1 (sum w - 1) + l2 (sum w c^2 - P)`, with `h(Y)` of the
/// (possibly unnormalized) mixture `sum_i w_i f_{Y|X}(y|c_i)`.
pub fn lagrangian(state: &OptimizerState, channel: &Channel, grid: &QuadratureGrid) -> Result<f64> {
    check_state(state, grid, channel)?;
    let ev = Evaluator::new(channel, *grid);
    let h = ev.entropy_at(&state.positions, &state.weights);
    Ok(h + state.lambda1 * (state.weight_sum() - 1.0)
        + state.lambda2 * (state.power_used() - state.power))
}

fn raw_gradients(
    state: &OptimizerState,
    channel: &Channel,
    grid: &QuadratureGrid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_state(state, grid, channel)?;
    let ev = Evaluator::new(channel, *grid);
    let kernels = ev.kernels(&state.positions);
    let density = ev.density(&kernels, &state.weights);
    Ok(ev.raw_gradients(&state.positions, &state.weights, &kernels, &density))
}

/// `dL/dw_i = -int f_{Y|X}(y|c_i) (log2 f_Y + log2 e) dy + l1 + l2 c_i^2`.
pub fn gradient_weights(
    state: &OptimizerState,
    channel: &Channel,
    grid: &QuadratureGrid,
) -> Result<Vec<f64>> {
    let (gw, _) = raw_gradients(state, channel, grid)?;
    Ok(gw
        .iter()
        .zip(&state.positions)
        .map(|(g, c)| g + state.lambda1 + state.lambda2 * c * c)
        .collect())
}

/// `dL/dc_i = -w_i a'(c_i) int (y - a(c_i))/sigma^2 f_{Y|X}(y|c_i) (log2 f_Y + log2 e) dy + 2 l2 w_i c_i`.
pub fn gradient_positions(
    state: &OptimizerState,
    channel: &Channel,
    grid: &QuadratureGrid,
) -> Result<Vec<f64>> {
    let (_, gc) = raw_gradients(state, channel, grid)?;
    Ok(gc
        .iter()
        .zip(state.positions.iter().zip(&state.weights))
        .map(|(g, (c, w))| g + 2.0 * state.lambda2 * w * c)
        .collect())
}

/// Result of a single ascent run from one initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentRun {
    pub state: OptimizerState,
    /// Objective after every iteration, starting with the initial value.
    pub trajectory: Vec<f64>,
    /// Stopped by the stall criterion rather than the iteration budget.
    pub converged: bool,
    /// Largest `|sum w - 1|` and `|sum w c^2 - P| / P` seen after any step.
    pub max_weight_drift: f64,
    pub max_power_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub source: ParticleSource,
    /// `I(X;Y)` of `source` on the caller's grid.
    pub mutual_information: f64,
    pub converged: bool,
    pub restarts_used: usize,
    pub iterations: usize,
    /// Spread (max - min, bits) of the per-initialization results.
    pub restart_spread: f64,
}

fn search_grid(grid: &QuadratureGrid, channel: &Channel, schedule: &Schedule) -> Result<QuadratureGrid> {
    let span = grid.hi() - grid.lo();
    let needed = (span / (channel.sigma() / 8.0)).ceil() as usize + 1;
    let mut n = schedule.search_points.max(needed).min(grid.len());
    if n.is_multiple_of(2) {
        n += 1;
    }
    QuadratureGrid::new(grid.lo(), grid.hi(), n.min(grid.len()))
}

/// Makes `state` satisfy the constraints of `spec` exactly.
fn restore_constraints(state: &mut OptimizerState, spec: &ConstraintSpec) {
    for w in state.weights.iter_mut() {
        if *w < 0.0 {
            *w = 0.0;
        }
    }
    let total: f64 = state.weights.iter().sum();
    state.weights.iter_mut().for_each(|w| *w /= total);
    match &spec.mode {
        Mode::Joint => {
            let used = state.power_used();
            if used > 0.0 && (used - spec.power).abs() > 1e-14 * spec.power {
                let s = (spec.power / used).sqrt();
                state.positions.iter_mut().for_each(|c| *c *= s);
            }
        }
        Mode::Shaping { base } => {
            state.positions = shaped_positions(base, &state.weights, spec.power);
        }
        Mode::FixedPositions { .. } => {}
    }
}

fn shaped_positions(base: &[f64], weights: &[f64], power: f64) -> Vec<f64> {
    let used: f64 = base.iter().zip(weights).map(|(b, w)| w * b * b).sum();
    let s = (power / used).sqrt();
    base.iter().map(|b| b * s).collect()
}

struct Ascent<'a, 'g> {
    ev: &'a Evaluator<'g>,
    spec: &'a ConstraintSpec,
    schedule: &'a Schedule,
    merge_tolerance: f64,
}

impl Ascent<'_, '_> {
    fn admissible(&self, positions: &[f64]) -> bool {
        if let Some(b) = self.spec.position_bound {
            if positions.iter().any(|c| c.abs() > b) {
                return false;
            }
        }
        self.ev.covers(positions)
    }

    fn run(&self, mut st: OptimizerState) -> Result<AscentRun> {
        let ev = self.ev;
        let sched = self.schedule;
        let power = self.spec.power;
        restore_constraints(&mut st, self.spec);
        if !self.admissible(&st.positions) {
            return Err(Error::Coverage { missing: f64::NAN });
        }
        let joint = matches!(self.spec.mode, Mode::Joint);
        let shaping = match &self.spec.mode {
            Mode::Shaping { base } => Some(base.clone()),
            _ => None,
        };

        let mut kernels = ev.kernels(&st.positions);
        let mut density = ev.density(&kernels, &st.weights);
        st.objective = ev.entropy(&density);
        let mut trajectory = vec![st.objective];
        let mut zero_streak = vec![0usize; st.weights.len()];
        let mut guess_w: Option<f64> = None;
        let mut guess_c: Option<f64> = None;
        let mut converged = false;
        let mut max_weight_drift: f64 = 0.0;
        let mut max_power_drift: f64 = 0.0;

        for it in 0..sched.max_iterations {
            let kind = if joint && it % 2 == 1 {
                StepKind::Positions
            } else {
                StepKind::Weights
            };
            let (gw, gc) = ev.raw_gradients(&st.positions, &st.weights, &kernels, &density);
            let proj = project_gradient(&gw, &gc, &st.positions, &st.weights, power, kind, &self.spec.mode);
            match kind {
                StepKind::Weights => {
                    st.lambda1 = proj.lambda1;
                    st.lambda2 = proj.lambda2;
                }
                StepKind::Positions => st.lambda2 = proj.lambda2,
            }
            let d = proj.direction;
            let dmax = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            st.last_step_kind = Some(kind);
            st.last_step_size = 0.0;

            if dmax > 0.0 {
                match kind {
                    StepKind::Weights => {
                        let cap = d
                            .iter()
                            .zip(&st.weights)
                            .filter(|(d, _)| **d < 0.0)
                            .map(|(d, w)| w / -d)
                            .fold(f64::INFINITY, f64::min);
                        let guess = guess_w.unwrap_or(0.5 * cap.min(1.0 / dmax)).min(cap);
                        let step_weights = |t: f64| -> Vec<f64> {
                            let mut w: Vec<f64> = st
                                .weights
                                .iter()
                                .zip(&d)
                                .map(|(w, d)| {
                                    let v = w + t * d;
                                    if v < 1e-15 { 0.0 } else { v }
                                })
                                .collect();
                            let total: f64 = w.iter().sum();
                            w.iter_mut().for_each(|x| *x /= total);
                            w
                        };
                        let outcome = if let Some(base) = &shaping {
                            bracketed_search(
                                |t| {
                                    let w = step_weights(t);
                                    let c = shaped_positions(base, &w, power);
                                    if !self.admissible(&c) {
                                        return f64::NEG_INFINITY;
                                    }
                                    ev.entropy_at(&c, &w)
                                },
                                st.objective,
                                guess,
                                cap,
                                sched.line_tolerance,
                                sched.line_iterations,
                            )
                        } else {
                            let delta = ev.weight_delta(&kernels, &d);
                            bracketed_search(
                                |t| ev.entropy_along(&density, &delta, t),
                                st.objective,
                                guess,
                                cap,
                                sched.line_tolerance,
                                sched.line_iterations,
                            )
                        };
                        if !outcome.stalled && outcome.value > st.objective {
                            let mut cand = st.clone();
                            cand.weights = step_weights(outcome.step);
                            let old_positions = cand.positions.clone();
                            restore_constraints(&mut cand, self.spec);
                            let cand_kernels = if cand.positions != old_positions {
                                ev.kernels(&cand.positions)
                            } else {
                                kernels.clone()
                            };
                            let cand_density = ev.density(&cand_kernels, &cand.weights);
                            let value = ev.entropy(&cand_density);
                            if value >= st.objective {
                                cand.objective = value;
                                cand.last_step_size = outcome.step;
                                st = cand;
                                kernels = cand_kernels;
                                density = cand_density;
                                guess_w = Some(2.0 * outcome.step);
                            }
                        } else if let Some(g) = guess_w.as_mut() {
                            *g *= 0.25;
                        }
                    }
                    StepKind::Positions => {
                        let retract = |t: f64| -> Vec<f64> {
                            let mut c: Vec<f64> =
                                st.positions.iter().zip(&d).map(|(c, d)| c + t * d).collect();
                            let used: f64 = c.iter().zip(&st.weights).map(|(c, w)| w * c * c).sum();
                            if used > 0.0 {
                                let s = (power / used).sqrt();
                                c.iter_mut().for_each(|x| *x *= s);
                            }
                            c
                        };
                        let scale = power.sqrt().max(ev.channel().sigma());
                        let cap = 1e3 * scale / dmax;
                        let guess = guess_c.unwrap_or(0.1 * ev.channel().sigma() / dmax).min(cap);
                        let outcome = bracketed_search(
                            |t| {
                                let c = retract(t);
                                if !self.admissible(&c) {
                                    return f64::NEG_INFINITY;
                                }
                                ev.entropy_at(&c, &st.weights)
                            },
                            st.objective,
                            guess,
                            cap,
                            sched.line_tolerance,
                            sched.line_iterations,
                        );
                        if !outcome.stalled && outcome.value > st.objective {
                            st.positions = retract(outcome.step);
                            st.last_step_size = outcome.step;
                            kernels = ev.kernels(&st.positions);
                            density = ev.density(&kernels, &st.weights);
                            st.objective = ev.entropy(&density);
                            guess_c = Some(2.0 * outcome.step);
                            if self.merge_collisions(&mut st, &mut zero_streak) {
                                kernels = ev.kernels(&st.positions);
                                density = ev.density(&kernels, &st.weights);
                                st.objective = ev.entropy(&density);
                            }
                        } else if let Some(g) = guess_c.as_mut() {
                            *g *= 0.25;
                        }
                    }
                }
            }

            if joint && self.prune(&mut st, &mut zero_streak, &mut kernels) {
                density = ev.density(&kernels, &st.weights);
                st.objective = ev.entropy(&density);
            }
            max_weight_drift = max_weight_drift.max((st.weight_sum() - 1.0).abs());
            max_power_drift = max_power_drift.max((st.power_used() - power).abs() / power);
            st.iteration = it + 1;
            trajectory.push(st.objective);
            if it + 1 >= sched.stall_window {
                let past = trajectory[it + 1 - sched.stall_window];
                if st.objective - past < sched.stall_tolerance {
                    converged = true;
                    break;
                }
            }
        }
        Ok(AscentRun {
            state: st,
            trajectory,
            converged,
            max_weight_drift,
            max_power_drift,
        })
    }

    /// Drops particles whose weight stayed below the threshold long enough.
    fn prune(&self, st: &mut OptimizerState, streak: &mut Vec<usize>, kernels: &mut Kernels) -> bool {
        for (s, &w) in streak.iter_mut().zip(&st.weights) {
            if w < self.schedule.prune_threshold {
                *s += 1;
            } else {
                *s = 0;
            }
        }
        let keep: Vec<bool> = streak.iter().map(|&s| s < self.schedule.prune_after).collect();
        if keep.iter().all(|&k| k) || !keep.iter().any(|&k| k) {
            return false;
        }
        let filter = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(&keep).filter(|(_, &k)| k).map(|(x, _)| *x).collect()
        };
        st.positions = filter(&st.positions);
        st.weights = filter(&st.weights);
        *streak = streak.iter().zip(&keep).filter(|(_, &k)| k).map(|(s, _)| *s).collect();
        restore_constraints(st, self.spec);
        *kernels = self.ev.kernels(&st.positions);
        true
    }

    /// Merges particles that collided. Returns true when something changed.
    fn merge_collisions(&self, st: &mut OptimizerState, streak: &mut Vec<usize>) -> bool {
        let mut order: Vec<usize> = (0..st.positions.len()).collect();
        order.sort_by(|&a, &b| st.positions[a].total_cmp(&st.positions[b]));
        let collide = order
            .windows(2)
            .any(|p| (st.positions[p[1]] - st.positions[p[0]]).abs() <= self.merge_tolerance);
        if !collide {
            return false;
        }
        let mut pos: Vec<f64> = Vec::new();
        let mut wts: Vec<f64> = Vec::new();
        let mut stk: Vec<usize> = Vec::new();
        for &i in &order {
            let (c, w) = (st.positions[i], st.weights[i]);
            match pos.last() {
                Some(&last) if (c - last).abs() <= self.merge_tolerance => {
                    let j = pos.len() - 1;
                    let total = wts[j] + w;
                    if total > 0.0 {
                        pos[j] = (pos[j] * wts[j] + c * w) / total;
                    }
                    wts[j] = total;
                    stk[j] = stk[j].min(streak[i]);
                }
                _ => {
                    pos.push(c);
                    wts.push(w);
                    stk.push(streak[i]);
                }
            }
        }
        st.positions = pos;
        st.weights = wts;
        *streak = stk;
        restore_constraints(st, self.spec);
        true
    }
}

/// Runs one steepest-ascent trajectory from `start` (made feasible first).
pub fn ascend(
    start: &ParticleSource,
    spec: &ConstraintSpec,
    channel: &Channel,
    grid: &QuadratureGrid,
    schedule: &Schedule,
) -> Result<AscentRun> {
    spec.validate()?;
    let ev = Evaluator::new(channel, *grid);
    let ascent = Ascent {
        ev: &ev,
        spec,
        schedule,
        merge_tolerance: merge_tolerance(channel),
    };
    let state = init::feasible_state(start, spec)?;
    ascent.run(state)
}

fn merge_tolerance(channel: &Channel) -> f64 {
    1e-9 * channel.nonlinearity().output_bound().unwrap_or(1.0).max(1.0)
}

/// Orders runs: higher objective first; within `1e-9` bits fewer particles,
/// then the lexicographically smaller sorted position vector.
fn better(a: &OptimizerState, b: &OptimizerState) -> bool {
    if (a.objective - b.objective).abs() >= 1e-9 {
        return a.objective > b.objective;
    }
    if a.positions.len() != b.positions.len() {
        return a.positions.len() < b.positions.len();
    }
    let mut pa = a.positions.clone();
    let mut pb = b.positions.clone();
    pa.sort_by(f64::total_cmp);
    pb.sort_by(f64::total_cmp);
    pa.iter()
        .zip(&pb)
        .find(|(x, y)| x != y)
        .map(|(x, y)| x < y)
        .unwrap_or(false)
}

/// Maximizes `I(X;Y)` under `spec`, starting from the schedule's
/// initializations.
pub fn optimize(
    spec: &ConstraintSpec,
    channel: &Channel,
    grid: &QuadratureGrid,
    schedule: &Schedule,
) -> Result<OptimizeOutcome> {
    optimize_from(spec, channel, grid, schedule, &[])
}

/// As [`optimize`], with extra starting sources (e.g. warm starts).
pub fn optimize_from(
    spec: &ConstraintSpec,
    channel: &Channel,
    grid: &QuadratureGrid,
    schedule: &Schedule,
    warm_starts: &[ParticleSource],
) -> Result<OptimizeOutcome> {
    spec.validate()?;
    let sgrid = search_grid(grid, channel, schedule)?;
    let ev = Evaluator::new(channel, sgrid);
    let ascent = Ascent {
        ev: &ev,
        spec,
        schedule,
        merge_tolerance: merge_tolerance(channel),
    };

    let mut starts = init::starts(spec, channel, schedule)?;
    let fresh = starts.len();
    for w in warm_starts {
        starts.push(init::feasible_state(w, spec)?);
    }
    let runs: Vec<Result<AscentRun>> = starts.into_par_iter().map(|s| ascent.run(s)).collect();
    let mut best: Option<AscentRun> = None;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(r) => {
                lo = lo.min(r.state.objective);
                hi = hi.max(r.state.objective);
                if best.as_ref().is_none_or(|b| better(&r.state, &b.state)) {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let mut best = match best {
        Some(b) => b,
        None => return Err(first_err.unwrap_or_else(|| Error::Numeric("no initialization".into()))),
    };
    let mut iterations = best.state.iteration;
    let mut growth_settled = !matches!(spec.mode, Mode::Joint);

    if matches!(spec.mode, Mode::Joint) {
        loop {
            let n = best.state.positions.len();
            let target = (2 * n).min(schedule.max_particles);
            if target <= n {
                break;
            }
            let grown = init::split_heaviest(&best.state, target, channel.sigma());
            let run = ascent.run(grown)?;
            iterations += run.state.iteration;
            let gain = run.state.objective - best.state.objective;
            let settled = gain < schedule.growth_tolerance;
            if run.state.objective > best.state.objective {
                best = run;
            }
            if settled {
                growth_settled = true;
                break;
            }
        }
    }

    let mut source = best.state.source()?;
    if matches!(spec.mode, Mode::Joint) {
        source = source.without_weights_below(0.0)?;
    }
    let mi = mutual_information(&Source::Particles(source.clone()), channel, grid)?;
    Ok(OptimizeOutcome {
        source,
        mutual_information: mi.mutual_information,
        converged: best.converged && growth_settled,
        restarts_used: fresh - 1 + warm_starts.len(),
        iterations,
        restart_spread: if hi >= lo { hi - lo } else { 0.0 },
    })
}
