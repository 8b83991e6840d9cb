//! Numerical checks of the structural results on `C(P)`: time sharing
//! between two power levels, monotonicity of the capacity curve, the
//! running-maximum characterization, and the relabeling of a peak-limited
//! input through an injective nonlinearity.

use crate::channel::Channel;
use crate::entropy::mutual_information;
use crate::error::{Error, Result};
use crate::optimizer::CapacityCurve;
use crate::quadrature::QuadratureGrid;
use crate::source::{ParticleSource, Source};

/// Capacity drops smaller than this are attributed to quadrature noise.
pub const DEFAULT_SLACK: f64 = 1e-3;
/// Largest MI change accepted from relabeling a source through `a`.
pub const REMAP_TOLERANCE: f64 = 1e-6;

/// One row of a validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub parameter: String,
    pub observed: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Mixing a base source at `P'` with a booster at `P'' = P' + (P - P')/eps`
/// with probabilities `1 - eps` and `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeShareSpec {
    base_power: f64,
    target_power: f64,
    epsilon: f64,
    booster: ParticleSource,
}

impl TimeShareSpec {
    /// Uses a single booster particle at `sqrt(P'')`.
    pub fn new(base_power: f64, target_power: f64, epsilon: f64) -> Result<Self> {
        let boost = Self::booster_power_for(base_power, target_power, epsilon)?;
        let booster = ParticleSource::point_mass(boost.sqrt())?;
        Ok(TimeShareSpec {
            base_power,
            target_power,
            epsilon,
            booster,
        })
    }

    /// Uses `booster`, which must carry power `P''`.
    pub fn with_booster(
        base_power: f64,
        target_power: f64,
        epsilon: f64,
        booster: ParticleSource,
    ) -> Result<Self> {
        let boost = Self::booster_power_for(base_power, target_power, epsilon)?;
        if (booster.power() - boost).abs() > 1e-9 * boost.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "booster carries power {}, expected {boost}",
                booster.power()
            )));
        }
        Ok(TimeShareSpec {
            base_power,
            target_power,
            epsilon,
            booster,
        })
    }

    fn booster_power_for(base: f64, target: f64, epsilon: f64) -> Result<f64> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        if !(base.is_finite() && base >= 0.0) {
            return Err(Error::InvalidPower(base));
        }
        if !(target.is_finite() && target >= base) {
            return Err(Error::InvalidPower(target));
        }
        Ok(base + (target - base) / epsilon)
    }

    pub fn base_power(&self) -> f64 {
        self.base_power
    }

    pub fn target_power(&self) -> f64 {
        self.target_power
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn booster_power(&self) -> f64 {
        self.base_power + (self.target_power - self.base_power) / self.epsilon
    }

    pub fn booster(&self) -> &ParticleSource {
        &self.booster
    }
}

/// `(1 - eps) base + eps booster` as a single particle source.
pub fn time_share_mixture(base: &ParticleSource, spec: &TimeShareSpec) -> Result<ParticleSource> {
    let eps = spec.epsilon;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    if (base.power() - spec.base_power).abs() > 1e-9 * spec.base_power.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "base source carries power {}, expected {}",
            base.power(),
            spec.base_power
        )));
    }
    if eps == 1.0 {
        return Ok(spec.booster.clone());
    }
    let mut c = base.positions().to_vec();
    let mut w: Vec<f64> = base.weights().iter().map(|w| (1.0 - eps) * w).collect();
    c.extend_from_slice(spec.booster.positions());
    w.extend(spec.booster.weights().iter().map(|w| eps * w));
    ParticleSource::new(c, w)
}

/// Checks `I(mixture) >= (1 - eps) I(base) - slack`.
pub fn time_sharing_check(
    base: &ParticleSource,
    spec: &TimeShareSpec,
    channel: &Channel,
    grid: &QuadratureGrid,
    slack: f64,
) -> Result<Check> {
    let mixture = time_share_mixture(base, spec)?;
    let mixed = mutual_information(&Source::Particles(mixture), channel, grid)?.mutual_information;
    let alone = mutual_information(&Source::Particles(base.clone()), channel, grid)?.mutual_information;
    let bound = (1.0 - spec.epsilon) * alone - slack;
    Ok(Check {
        name: "time_sharing".into(),
        parameter: format!(
            "P'={} P={} eps={}",
            spec.base_power, spec.target_power, spec.epsilon
        ),
        observed: mixed,
        bound,
        pass: mixed >= bound,
    })
}

/// Checks that the mixture power is `P` to `1e-12` relative.
pub fn power_bookkeeping_check(base: &ParticleSource, spec: &TimeShareSpec) -> Result<Check> {
    let mixture = time_share_mixture(base, spec)?;
    let rel = (mixture.power() - spec.target_power).abs() / spec.target_power.max(f64::MIN_POSITIVE);
    Ok(Check {
        name: "mixture_power".into(),
        parameter: format!(
            "P'={} P={} eps={}",
            spec.base_power, spec.target_power, spec.epsilon
        ),
        observed: rel,
        bound: 1e-12,
        pass: rel <= 1e-12,
    })
}

/// An adjacent pair of curve points whose value dropped by more than the
/// slack. On the true curve there are none, so each one is a convergence
/// failure of the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub from_power: f64,
    pub to_power: f64,
    pub drop_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub slack: f64,
    pub violations: Vec<Violation>,
    /// Largest drop between adjacent points (zero if none).
    pub max_drop: f64,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn monotonicity_report(curve: &CapacityCurve, slack: f64) -> MonotonicityReport {
    let mut violations = Vec::new();
    let mut max_drop: f64 = 0.0;
    for (i, pair) in curve.points.windows(2).enumerate() {
        let drop = pair[0].value_bits - pair[1].value_bits;
        if drop.is_nan() {
            continue;
        }
        max_drop = max_drop.max(drop);
        if drop > slack {
            violations.push(Violation {
                index: i,
                from_power: pair[0].power,
                to_power: pair[1].power,
                drop_bits: drop,
            });
        }
    }
    MonotonicityReport {
        slack,
        violations,
        max_drop,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostRelaxationReport {
    /// `C'(P) = max_{P1 <= P} C(P1)` along the curve.
    pub running_max: Vec<f64>,
    /// `max |C' - C|`.
    pub max_gap: f64,
    pub slack: f64,
}

impl CostRelaxationReport {
    pub fn passed(&self) -> bool {
        self.max_gap <= self.slack
    }
}

pub fn cost_relaxation_check(curve: &CapacityCurve, slack: f64) -> CostRelaxationReport {
    let mut running_max = Vec::with_capacity(curve.points.len());
    let mut best = f64::NEG_INFINITY;
    let mut max_gap: f64 = 0.0;
    for p in &curve.points {
        if p.value_bits.is_finite() {
            best = best.max(p.value_bits);
            max_gap = max_gap.max(best - p.value_bits);
        }
        running_max.push(best);
    }
    CostRelaxationReport {
        running_max,
        max_gap,
        slack,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemapReport {
    pub nonlinear_mi: f64,
    pub remapped_mi: f64,
    pub difference: f64,
    /// Positions `a(c_i)` fed to the identity channel.
    pub remapped: ParticleSource,
}

impl RemapReport {
    pub fn passed(&self) -> bool {
        self.difference <= REMAP_TOLERANCE
    }
}

/// Compares `I(X;Y)` on `channel` with `I(A;Y)` on the identity channel with
/// the same noise, where `A = a(X)`.
pub fn peak_power_remap_check(
    source: &ParticleSource,
    channel: &Channel,
    grid: &QuadratureGrid,
) -> Result<RemapReport> {
    let nl = channel.nonlinearity();
    let remapped = ParticleSource::new(
        source.positions().iter().map(|&c| nl.apply(c)).collect(),
        source.weights().to_vec(),
    )?;
    let awgn = channel.as_awgn();
    let nonlinear_mi = mutual_information(&Source::Particles(source.clone()), channel, grid)?.mutual_information;
    let remapped_mi = mutual_information(&Source::Particles(remapped.clone()), &awgn, grid)?.mutual_information;
    Ok(RemapReport {
        nonlinear_mi,
        remapped_mi,
        difference: (nonlinear_mi - remapped_mi).abs(),
        remapped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::CurvePoint;
    use proptest::prelude::*;

    fn curve(values: &[f64]) -> CapacityCurve {
        CapacityCurve {
            points: values
                .iter()
                .enumerate()
                .map(|(i, &v)| CurvePoint {
                    power: (i + 1) as f64,
                    value_bits: v,
                    n_particles: 1,
                    converged: true,
                    restarts_used: 0,
                    seed: 0,
                    source: None,
                    error: None,
                })
                .collect(),
        }
    }

    #[test]
    fn epsilon_one_returns_booster() {
        let base = ParticleSource::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let spec = TimeShareSpec::new(1.0, 4.0, 1.0).unwrap();
        let mix = time_share_mixture(&base, &spec).unwrap();
        assert_eq!(&mix, spec.booster());
        assert_eq!(mix.positions(), &[2.0]);
    }

    #[test]
    fn booster_power_example() {
        let spec = TimeShareSpec::new(100.0, 200.0, 0.01).unwrap();
        assert_eq!(spec.booster_power(), 10100.0);
        let base = ParticleSource::new(vec![-10.0, 10.0], vec![0.5, 0.5]).unwrap();
        let mix = time_share_mixture(&base, &spec).unwrap();
        assert!((mix.power() - 200.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_epsilon() {
        for eps in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(TimeShareSpec::new(1.0, 2.0, eps), Err(Error::InvalidEpsilon(_))));
        }
        assert!(matches!(TimeShareSpec::new(3.0, 2.0, 0.5), Err(Error::InvalidPower(_))));
    }

    #[test]
    fn custom_booster_must_carry_its_power() {
        let good = ParticleSource::new(vec![-4.0, 4.0], vec![0.5, 0.5]).unwrap();
        assert!(TimeShareSpec::with_booster(1.0, 8.5, 0.5, good).is_ok());
        let bad = ParticleSource::point_mass(1.0).unwrap();
        assert!(TimeShareSpec::with_booster(1.0, 8.5, 0.5, bad).is_err());
    }

    #[test]
    fn constant_curve_has_no_violations() {
        let r = monotonicity_report(&curve(&[1.0; 6]), DEFAULT_SLACK);
        assert!(r.passed());
        assert_eq!(r.max_drop, 0.0);
        let c = cost_relaxation_check(&curve(&[0.1, 0.5, 0.5, 0.9]), DEFAULT_SLACK);
        assert_eq!(c.running_max, vec![0.1, 0.5, 0.5, 0.9]);
        assert!(c.passed());
    }

    #[test]
    fn injected_drop_is_flagged_once() {
        let values = [0.2, 0.5, 0.8, 0.7, 0.9, 1.0];
        let r = monotonicity_report(&curve(&values), DEFAULT_SLACK);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].index, 2);
        assert!((r.violations[0].drop_bits - 0.1).abs() < 1e-12);
        let c = cost_relaxation_check(&curve(&values), DEFAULT_SLACK);
        let gaps: Vec<f64> = c.running_max.iter().zip(&values).map(|(m, v)| m - v).collect();
        assert!(gaps[3] > 0.09);
        assert!(gaps.iter().enumerate().all(|(i, g)| i == 3 || *g == 0.0));
        assert!(!c.passed());
    }

    #[test]
    fn remapping_keeps_information() {
        let ch = Channel::default();
        let grid = QuadratureGrid::for_channel(&ch, 2049).unwrap();
        let s = ParticleSource::new(vec![-30.0, -4.0, 0.0, 2.5, 11.0], vec![0.2, 0.2, 0.2, 0.2, 0.2]).unwrap();
        let r = peak_power_remap_check(&s, &ch, &grid).unwrap();
        assert!(r.passed(), "{}", r.difference);
        assert!(r.remapped.positions().iter().all(|a| a.abs() < 10.0));
    }

    proptest! {
        #[test]
        fn mixture_power_is_exact(
            base_power in 0.1f64..1e3,
            extra in 0.0f64..1e4,
            eps in 1e-4f64..=1.0,
        ) {
            let target = base_power + extra;
            let spec = TimeShareSpec::new(base_power, target, eps).unwrap();
            let lhs = (1.0 - eps) * base_power + eps * spec.booster_power();
            prop_assert!((lhs - target).abs() <= 1e-12 * target);
            let r = base_power.sqrt();
            let base = ParticleSource::new(vec![-r, r], vec![0.5, 0.5]).unwrap();
            let mix = time_share_mixture(&base, &spec).unwrap();
            prop_assert!((mix.power() - target).abs() <= 1e-12 * target * 4.0);
        }

        #[test]
        fn running_max_dominates(values in prop::collection::vec(0.0f64..3.0, 1..30)) {
            let c = cost_relaxation_check(&curve(&values), DEFAULT_SLACK);
            for (i, m) in c.running_max.iter().enumerate() {
                prop_assert!(*m >= values[i]);
                prop_assert!(values[..=i].iter().any(|v| v == m));
            }
            prop_assert!(c.running_max.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
