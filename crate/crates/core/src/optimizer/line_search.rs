//! Golden-section line search along a feasible ascent direction.

/// `(sqrt(5) - 1) / 2`, the bracket shrink factor per iteration.
pub const GOLDEN_RATIO_CONJUGATE: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    /// Accepted step size, in `[0, max_step]`.
    pub step: f64,
    /// Objective at `step`.
    pub value: f64,
    pub iterations: usize,
    /// Width of the final bracket.
    pub bracket: f64,
    /// No probe improved on the starting point.
    pub stalled: bool,
}

/// Maximizes `objective` over `[0, max_step]` by golden-section search.
///
/// `objective(0)` is the baseline. The search stops when the bracket is
/// narrower than `tolerance` or after `max_iterations`; the best point
/// probed is returned (possibly `0`, which flags a stall). Infeasible probes
/// should return `f64::NEG_INFINITY`.
pub fn golden_section_search(
    mut objective: impl FnMut(f64) -> f64,
    max_step: f64,
    tolerance: f64,
    max_iterations: usize,
) -> LineSearchOutcome {
    let base = objective(0.0);
    let mut best = (0.0, base);
    if !(max_step.is_finite() && max_step > 0.0) {
        return LineSearchOutcome {
            step: 0.0,
            value: base,
            iterations: 0,
            bracket: 0.0,
            stalled: true,
        };
    }
    let rho = GOLDEN_RATIO_CONJUGATE;
    let (mut a, mut b) = (0.0, max_step);
    let mut x1 = b - rho * (b - a);
    let mut x2 = a + rho * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > best.1 {
            best = (x, f);
        }
    }
    let mut iterations = 0;
    while b - a > tolerance && iterations < max_iterations {
        iterations += 1;
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + rho * (b - a);
            f2 = objective(x2);
            if f2 > best.1 {
                best = (x2, f2);
            }
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - rho * (b - a);
            f1 = objective(x1);
            if f1 > best.1 {
                best = (x1, f1);
            }
        }
    }
    LineSearchOutcome {
        step: best.0,
        value: best.1,
        iterations,
        bracket: b - a,
        stalled: best.0 == 0.0,
    }
}

/// Finds a bracket `[0, hi]` around the first maximum along the ray, starting
/// from `guess` and never exceeding `cap`, then refines it with
/// [`golden_section_search`]. Returns the best probe overall.
pub(crate) fn bracketed_search(
    mut objective: impl FnMut(f64) -> f64,
    base: f64,
    guess: f64,
    cap: f64,
    relative_tolerance: f64,
    max_iterations: usize,
) -> LineSearchOutcome {
    let stalled = LineSearchOutcome {
        step: 0.0,
        value: base,
        iterations: 0,
        bracket: 0.0,
        stalled: true,
    };
    if cap.is_nan() || guess.is_nan() || cap <= 0.0 || guess <= 0.0 {
        return stalled;
    }
    let mut best = (0.0, base);
    let mut t = guess.min(cap);
    let mut ft = objective(t);
    let hi;
    if ft > base {
        best = (t, ft);
        loop {
            if t >= cap {
                hi = cap;
                break;
            }
            let t2 = (t * 4.0).min(cap);
            let f2 = objective(t2);
            if f2 > best.1 {
                best = (t2, f2);
            }
            if f2 <= ft {
                hi = t2;
                break;
            }
            t = t2;
            ft = f2;
        }
    } else {
        let mut found = None;
        for _ in 0..40 {
            t *= 0.25;
            ft = objective(t);
            if ft > base {
                best = (t, ft);
                found = Some(4.0 * t);
                break;
            }
        }
        match found {
            Some(h) => hi = h,
            None => return stalled,
        }
    }
    let mut g = golden_section_search(
        |s| if s == 0.0 { base } else { objective(s) },
        hi,
        relative_tolerance * hi,
        max_iterations,
    );
    if best.1 > g.value {
        g.step = best.0;
        g.value = best.1;
    }
    g.stalled = g.step == 0.0;
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let r = golden_section_search(|t| -(t - 0.3) * (t - 0.3), 1.0, 1e-6, 40);
        assert!((r.step - 0.3).abs() < 1e-6, "{}", r.step);
        assert!(r.iterations <= 40);
        assert!(!r.stalled);
    }

    #[test]
    fn bracket_shrinks_geometrically() {
        for k in [1usize, 5, 12, 20] {
            let r = golden_section_search(|t| -(t - 0.71) * (t - 0.71), 2.0, 0.0, k);
            assert_eq!(r.iterations, k);
            let want = 2.0 * GOLDEN_RATIO_CONJUGATE.powi(k as i32);
            assert!((r.bracket - want).abs() < 1e-12 * 2.0, "k={k}: {} vs {want}", r.bracket);
        }
    }

    #[test]
    fn zero_or_descent_direction_gives_zero_step() {
        let r = golden_section_search(|_| 1.0, 0.0, 1e-6, 40);
        assert_eq!(r.step, 0.0);
        assert!(r.stalled);
        let r = golden_section_search(|t| -t, 1.0, 1e-9, 60);
        assert_eq!(r.step, 0.0);
        assert!(r.stalled);
        let r = bracketed_search(|t| -t, 0.0, 1.0, 10.0, 1e-6, 40);
        assert!(r.stalled);
    }

    #[test]
    fn bracketing_expands_and_shrinks() {
        let f = |t: f64| -(t - 37.0) * (t - 37.0);
        let r = bracketed_search(f, f(0.0), 0.01, 1e6, 1e-9, 80);
        assert!((r.step - 37.0).abs() < 1e-4, "{}", r.step);
        let g = |t: f64| -(t - 1e-7) * (t - 1e-7);
        let r = bracketed_search(g, g(0.0), 1.0, 1e6, 1e-6, 80);
        assert!((r.step - 1e-7).abs() < 1e-10, "{}", r.step);
        let r = bracketed_search(f, f(0.0), 1.0, 5.0, 1e-9, 80);
        assert!((r.step - 5.0).abs() < 1e-6);
    }
}
