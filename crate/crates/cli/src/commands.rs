//! Subcommands. Each renders its artifacts to strings; writing them is left
//! to the caller.

use std::fmt::Write as _;

use anyhow::Result;
use nlcap_core::entropy::default_grid;
use nlcap_core::optimizer::{grid_for_power, optimize};
use nlcap_core::theory::{
    cost_relaxation_check, monotonicity_report, peak_power_remap_check, power_bookkeeping_check,
    time_share_mixture, time_sharing_check, Check, TimeShareSpec, REMAP_TOLERANCE,
};
use nlcap_core::{
    capacity_curve, mutual_information, shaping_curve, CapacityCurve, ConstraintSpec,
    ContinuousSource, ParticleSource, Source,
};

use crate::config::{ExperimentConfig, SweepSource};

/// Power pairs `(P', P)` and mixing probabilities tried by `validate`.
pub const TIME_SHARING_POWERS: [(f64, f64); 2] = [(10.0, 100.0), (100.0, 1e4)];
pub const TIME_SHARING_EPSILONS: [f64; 4] = [1e-3, 1e-2, 0.1, 0.5];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Artifacts {
    /// Main CSV, header comments included.
    pub csv: String,
    /// `P,position,weight` rows of the optimized sources, if any.
    pub distributions: Option<String>,
    /// Human-readable summary (validate only).
    pub report: Option<String>,
    pub failed_points: usize,
    pub total_points: usize,
    pub failed_checks: usize,
}

/// Shortest round-trip form, in exponent notation for very small or large
/// magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Provenance comment block that starts every output file.
pub fn header(cfg: &ExperimentConfig, command: &str) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# nlcap {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(h, "# command: {command}");
    let _ = writeln!(h, "# config_sha256: {}", cfg.hash());
    let _ = writeln!(h, "# seed: {}", cfg.schedule.seed);
    for line in cfg.canonical().lines() {
        let _ = writeln!(h, "# setting {line}");
    }
    h
}

pub fn mi_sweep(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let mut csv = header(cfg, "mi-sweep");
    csv.push_str("P,mi_bits,hy_bits,hyx_bits,err_est\n");
    let mut failures = Vec::new();
    for &p in &cfg.powers {
        let point = (|| {
            let source: Source = match cfg.source {
                SweepSource::Continuous(fam) => ContinuousSource::new(fam, p)?.into(),
                SweepSource::Discrete(c) => c.source(p)?.into(),
            };
            let grid = default_grid(&source, &cfg.channel, cfg.grid_points)?;
            mutual_information(&source, &cfg.channel, &grid)
        })();
        match point {
            Ok(r) => {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    num(p),
                    num(r.mutual_information),
                    num(r.output_entropy),
                    num(r.conditional_entropy),
                    num(r.quadrature_error_estimate)
                );
            }
            Err(e) => {
                let _ = writeln!(csv, "{},NaN,NaN,NaN,NaN", num(p));
                failures.push(format!("P={p}: {e}"));
            }
        }
    }
    for f in &failures {
        let _ = writeln!(csv, "# failed {f}");
    }
    Ok(Artifacts {
        csv,
        failed_points: failures.len(),
        total_points: cfg.powers.len(),
        ..Artifacts::default()
    })
}

fn curve_artifacts(cfg: &ExperimentConfig, command: &str, curve: &CapacityCurve) -> Artifacts {
    let mut csv = header(cfg, command);
    csv.push_str("P,capacity_bits,n_particles,converged,restarts_used,seed\n");
    let mut dist = header(cfg, command);
    dist.push_str("P,position,weight\n");
    let mut failed = 0;
    for pt in &curve.points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            num(pt.power),
            num(pt.value_bits),
            pt.n_particles,
            pt.converged,
            pt.restarts_used,
            pt.seed
        );
        if let Some(src) = &pt.source {
            for (c, w) in src.positions().iter().zip(src.weights()) {
                let _ = writeln!(dist, "{},{},{}", num(pt.power), num(*c), num(*w));
            }
        }
        if pt.error.is_some() {
            failed += 1;
        }
    }
    for pt in &curve.points {
        if let Some(e) = &pt.error {
            let _ = writeln!(csv, "# failed P={}: {e}", pt.power);
        }
    }
    Artifacts {
        csv,
        distributions: Some(dist),
        failed_points: failed,
        total_points: curve.points.len(),
        ..Artifacts::default()
    }
}

pub fn capacity_sweep(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let curve = capacity_curve(&cfg.powers, &cfg.channel, cfg.grid_points, &cfg.schedule);
    Ok(curve_artifacts(cfg, "capacity-sweep", &curve))
}

pub fn shaping_sweep(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let curve = shaping_curve(
        cfg.constellation,
        &cfg.powers,
        &cfg.channel,
        cfg.grid_points,
        &cfg.schedule,
    );
    Ok(curve_artifacts(cfg, "shaping-sweep", &curve))
}

/// Optimized source at `power`, taken from the curve when it has that point.
fn base_source(cfg: &ExperimentConfig, curve: &CapacityCurve, power: f64) -> Result<ParticleSource> {
    if let Some(src) = curve
        .points
        .iter()
        .find(|pt| (pt.power - power).abs() <= 1e-9 * power)
        .and_then(|pt| pt.source.clone())
    {
        return Ok(src);
    }
    let grid = grid_for_power(&cfg.channel, power, cfg.grid_points)?;
    let spec = ConstraintSpec::joint(power)?;
    Ok(optimize(&spec, &cfg.channel, &grid, &cfg.schedule)?.source)
}

/// Runs a capacity sweep and checks the structural properties of `C(P)`
/// on it.
pub fn validate(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let curve = capacity_curve(&cfg.powers, &cfg.channel, cfg.grid_points, &cfg.schedule);
    let mut checks: Vec<Check> = Vec::new();

    let mono = monotonicity_report(&curve, cfg.slack);
    checks.push(Check {
        name: "monotonicity".into(),
        parameter: format!("violations={}", mono.violations.len()),
        observed: mono.max_drop,
        bound: cfg.slack,
        pass: mono.passed(),
    });
    let relax = cost_relaxation_check(&curve, cfg.slack);
    checks.push(Check {
        name: "running_max".into(),
        parameter: format!("points={}", curve.points.len()),
        observed: relax.max_gap,
        bound: cfg.slack,
        pass: relax.passed(),
    });

    for (base_power, target) in TIME_SHARING_POWERS {
        let base = base_source(cfg, &curve, base_power)?;
        for eps in TIME_SHARING_EPSILONS {
            let spec = TimeShareSpec::new(base_power, target, eps)?;
            let mixture: Source = time_share_mixture(&base, &spec)?.into();
            let grid = default_grid(&mixture, &cfg.channel, cfg.grid_points)?;
            checks.push(power_bookkeeping_check(&base, &spec)?);
            checks.push(time_sharing_check(&base, &spec, &cfg.channel, &grid, cfg.slack)?);
        }
    }

    if let Some(last) = curve.points.iter().rev().find(|pt| pt.source.is_some()) {
        if cfg.channel.nonlinearity().output_bound().is_some() {
            let src = last.source.as_ref().expect("checked above");
            let grid = grid_for_power(&cfg.channel, last.power, cfg.grid_points)?;
            let remap = peak_power_remap_check(src, &cfg.channel, &grid)?;
            checks.push(Check {
                name: "peak_power_remap".into(),
                parameter: format!("P={}", last.power),
                observed: remap.difference,
                bound: REMAP_TOLERANCE,
                pass: remap.passed(),
            });
        }
    }

    let mut csv = header(cfg, "validate");
    csv.push_str("check,parameter,observed,bound,pass\n");
    for c in &checks {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            c.name,
            c.parameter,
            num(c.observed),
            num(c.bound),
            c.pass
        );
    }
    let failed_checks = checks.iter().filter(|c| !c.pass).count();

    let mut report = String::new();
    let _ = writeln!(
        report,
        "capacity sweep: {} powers from {} to {}, {} failed",
        curve.points.len(),
        cfg.powers.first().copied().unwrap_or(f64::NAN),
        cfg.powers.last().copied().unwrap_or(f64::NAN),
        curve.points.iter().filter(|p| p.error.is_some()).count()
    );
    if let Some(peak) = curve.peak() {
        let _ = writeln!(report, "largest capacity: {:.5} bits at P = {}", peak.value_bits, peak.power);
    }
    for v in &mono.violations {
        let _ = writeln!(
            report,
            "  convergence failure: C drops {:.2e} bits from P = {} to P = {}",
            v.drop_bits, v.from_power, v.to_power
        );
    }
    for c in &checks {
        let _ = writeln!(
            report,
            "[{}] {} ({}): observed {:.6e}, bound {:.6e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.parameter,
            c.observed,
            c.bound
        );
    }
    let _ = writeln!(report, "{} of {} checks passed", checks.len() - failed_checks, checks.len());

    Ok(Artifacts {
        csv,
        report: Some(report),
        failed_points: curve.points.iter().filter(|p| p.error.is_some()).count(),
        total_points: curve.points.len(),
        failed_checks,
        ..Artifacts::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Settings;

    fn small(extra: &str) -> ExperimentConfig {
        let mut s = Settings::default();
        s.apply_text(extra, "test").unwrap();
        s.validate().unwrap()
    }

    #[test]
    fn header_carries_provenance() {
        let cfg = small("seed = 5");
        let h = header(&cfg, "mi-sweep");
        assert!(h.starts_with("# nlcap "));
        assert!(h.contains(&format!("# config_sha256: {}", cfg.hash())));
        assert!(h.contains("# seed: 5\n"));
        assert!(h.contains("# setting amax = 10\n"));
        assert!(h.lines().all(|l| l.starts_with('#')));
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.5, 2.435033069949155, 2.6645352591003757e-15, 1e20, -3e-7, 1e-4] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(2.6645352591003757e-15), "2.6645352591003757e-15");
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn mi_sweep_rows() {
        let cfg = small("p_min = 1\np_max = 100\npoints_per_decade = 1\ngrid_points = 1025");
        let out = mi_sweep(&cfg).unwrap();
        let rows: Vec<&str> = out.csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "P,mi_bits,hy_bits,hyx_bits,err_est");
        assert_eq!(rows.len(), 4);
        let mi: f64 = rows[2].split(',').nth(1).unwrap().parse().unwrap();
        assert!(mi > 1.0 && mi < 2.0);
        assert_eq!(out.failed_points, 0);
    }

    #[test]
    fn shaping_sweep_writes_distributions() {
        let cfg = small("constellation = bpsk\np_min = 1\np_max = 10\npoints_per_decade = 1\ngrid_points = 1025");
        let out = shaping_sweep(&cfg).unwrap();
        let dist = out.distributions.unwrap();
        let rows: Vec<&str> = dist.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "P,position,weight");
        assert_eq!(rows.len(), 1 + 2 * 2);
    }
}
