//! Tangent-space projection of the Lagrangian gradient.
//!
//! The multipliers are the least-squares coefficients that remove the
//! constraint-normal components from the raw gradient, so that
//! `grad h + lambda1 n1 + lambda2 n2` is the projected direction.

use super::{Mode, StepKind};

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Feasible ascent direction for the block being stepped.
    pub direction: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    /// The constraint normals were (numerically) parallel and only
    /// `sum w = 1` was enforced by the projection.
    pub degenerate: bool,
    /// Particles that take part in the step.
    pub active: Vec<bool>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn masked(v: &[f64], active: &[bool]) -> Vec<f64> {
    v.iter().zip(active).map(|(&x, &a)| if a { x } else { 0.0 }).collect()
}

/// Projects `g` off `span(n1, n2)` via two passes of Gram-Schmidt. Returns
/// `(direction, lambda1, lambda2, degenerate)`.
fn project_two(g: &[f64], n1: &[f64], n2: &[f64]) -> (Vec<f64>, f64, f64, bool) {
    let norm1 = dot(n1, n1).sqrt();
    if norm1 == 0.0 {
        return (vec![0.0; g.len()], 0.0, 0.0, true);
    }
    let e1: Vec<f64> = n1.iter().map(|x| x / norm1).collect();
    let n2e1 = dot(n2, &e1);
    let mut v: Vec<f64> = n2.iter().zip(&e1).map(|(a, e)| a - n2e1 * e).collect();
    let corr = dot(&v, &e1);
    v.iter_mut().zip(&e1).for_each(|(a, e)| *a -= corr * e);
    let vnorm = dot(&v, &v).sqrt();
    let n2norm = dot(n2, n2).sqrt();
    let degenerate = vnorm.is_nan() || vnorm <= 1e-9 * n2norm;

    let mut d = g.to_vec();
    let mut c1 = 0.0;
    let mut c2 = 0.0;
    for _ in 0..2 {
        let a1 = dot(&d, &e1);
        d.iter_mut().zip(&e1).for_each(|(x, e)| *x -= a1 * e);
        c1 += a1;
        if !degenerate {
            let a2 = dot(&d, &v) / vnorm;
            d.iter_mut().zip(&v).for_each(|(x, e)| *x -= a2 * e / vnorm);
            c2 += a2;
        }
    }
    // d = g - c1 e1 - c2 e2, e2 = (n2 - n2e1 e1) / |v|
    let (lambda1, lambda2) = if degenerate {
        (-c1 / norm1, 0.0)
    } else {
        let lambda2 = -c2 / vnorm;
        ((-c1 + c2 * n2e1 / vnorm) / norm1, lambda2)
    };
    (d, lambda1, lambda2, degenerate)
}

/// Projects the raw gradient of `h` for one step block.
///
/// * Weights, joint or fixed positions: off `span(1, c^2)` restricted to the
///   active set. Particles at `w = 0` whose direction component would be
///   negative are dropped from the active set and the projection repeated.
/// * Weights, shaping: the weights gradient of `h(c(w), w)` with
///   `c = sqrt(P / sum w b^2) b`, projected off `1` only.
/// * Positions: off `2 w c`.
pub fn project_gradient(
    raw_w_grad: &[f64],
    raw_c_grad: &[f64],
    positions: &[f64],
    weights: &[f64],
    power: f64,
    kind: StepKind,
    mode: &Mode,
) -> Projection {
    let n = weights.len();
    match kind {
        StepKind::Positions => {
            let normal: Vec<f64> = weights.iter().zip(positions).map(|(w, c)| 2.0 * w * c).collect();
            let active: Vec<bool> = weights.iter().map(|&w| w > 0.0).collect();
            let g = masked(raw_c_grad, &active);
            let nn = dot(&normal, &normal);
            if nn == 0.0 {
                return Projection {
                    direction: vec![0.0; n],
                    lambda1: 0.0,
                    lambda2: 0.0,
                    degenerate: true,
                    active,
                };
            }
            let mut d = g.clone();
            let mut lambda2 = 0.0;
            for _ in 0..2 {
                let a = dot(&d, &normal) / nn;
                d.iter_mut().zip(&normal).for_each(|(x, m)| *x -= a * m);
                lambda2 -= a;
            }
            Projection {
                direction: d,
                lambda1: 0.0,
                lambda2,
                degenerate: false,
                active,
            }
        }
        StepKind::Weights => {
            let g: Vec<f64> = match mode {
                Mode::Shaping { .. } => {
                    let pull: f64 = raw_c_grad.iter().zip(positions).map(|(g, c)| g * c).sum();
                    raw_w_grad
                        .iter()
                        .zip(positions)
                        .map(|(g, c)| g - c * c / (2.0 * power) * pull)
                        .collect()
                }
                _ => raw_w_grad.to_vec(),
            };
            let squares: Vec<f64> = positions.iter().map(|c| c * c).collect();
            let mut active = vec![true; n];
            loop {
                let gm = masked(&g, &active);
                let n1 = masked(&vec![1.0; n], &active);
                let (d, lambda1, lambda2, degenerate) = match mode {
                    Mode::Shaping { .. } => {
                        let (d, l1, _, _) = project_two(&gm, &n1, &vec![0.0; n]);
                        (d, l1, 0.0, false)
                    }
                    _ => project_two(&gm, &n1, &masked(&squares, &active)),
                };
                let mut changed = false;
                for i in 0..n {
                    if active[i] && weights[i] <= 0.0 && d[i] < 0.0 {
                        active[i] = false;
                        changed = true;
                    }
                }
                if !changed {
                    return Projection {
                        direction: masked(&d, &active),
                        lambda1,
                        lambda2,
                        degenerate,
                        active,
                    };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_direction_is_tangent() {
        let c = [-3.0, -1.0, 0.5, 2.0, 7.0];
        let w = [0.1, 0.3, 0.2, 0.25, 0.15];
        let g = [0.3, -1.2, 0.7, 2.0, -0.4];
        let p = project_gradient(&g, &[0.0; 5], &c, &w, 10.0, StepKind::Weights, &Mode::Joint);
        let ones = [1.0; 5];
        let sq: Vec<f64> = c.iter().map(|x| x * x).collect();
        assert!(dot(&p.direction, &ones).abs() < 1e-12);
        assert!(dot(&p.direction, &sq).abs() < 1e-12 * dot(&sq, &sq).sqrt());
        assert!(!p.degenerate);
        // multipliers reproduce the projected direction
        for i in 0..5 {
            let want = g[i] + p.lambda1 + p.lambda2 * sq[i];
            assert!((p.direction[i] - want).abs() < 1e-12);
        }
        assert!(dot(&p.direction, &g) > 0.0);
    }

    #[test]
    fn positions_direction_is_tangent() {
        let c = [-30.0, -1.0, 0.5, 2.0, 700.0];
        let w = [0.1, 0.3, 0.2, 0.25, 0.15];
        let g = [0.3, -1.2, 0.7, 2.0, -0.4];
        let p = project_gradient(&[0.0; 5], &g, &c, &w, 1.0, StepKind::Positions, &Mode::Joint);
        let normal: Vec<f64> = w.iter().zip(&c).map(|(w, c)| 2.0 * w * c).collect();
        assert!(dot(&p.direction, &normal).abs() < 1e-12 * dot(&normal, &normal).sqrt());
        for i in 0..5 {
            assert!((p.direction[i] - (g[i] + p.lambda2 * normal[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn two_particles_two_constraints_leave_no_freedom() {
        let c = [-1.0, 2.0];
        let w = [2.0 / 3.0, 1.0 / 3.0];
        let p = project_gradient(&[0.4, -0.9], &[0.0; 2], &c, &w, 2.0, StepKind::Weights, &Mode::Joint);
        assert!(p.direction.iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn bpsk_weights_only_is_degenerate_and_symmetric() {
        let c = [-3.0, 3.0];
        let w = [0.5, 0.5];
        let mode = Mode::FixedPositions { positions: c.to_vec() };
        let p = project_gradient(&[1.7, 1.7], &[0.0; 2], &c, &w, 9.0, StepKind::Weights, &mode);
        assert!(p.degenerate);
        assert!(p.direction.iter().all(|d| d.abs() < 1e-15));
        let q = project_gradient(&[1.0, 2.0], &[0.0; 2], &c, &w, 9.0, StepKind::Weights, &mode);
        assert!(q.degenerate);
        assert!((q.direction[0] + 0.5).abs() < 1e-15 && (q.direction[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_particle_has_no_direction() {
        let p = project_gradient(&[3.0], &[0.0], &[2.0], &[1.0], 4.0, StepKind::Weights, &Mode::Joint);
        assert_eq!(p.direction, vec![0.0]);
        let p = project_gradient(&[0.0], &[5.0], &[2.0], &[1.0], 4.0, StepKind::Positions, &Mode::Joint);
        assert!(p.direction[0].abs() < 1e-15);
    }

    #[test]
    fn zero_weights_stay_at_the_boundary() {
        let c = [-2.0, -1.0, 1.0, 2.0];
        let w = [0.0, 0.5, 0.5, 0.0];
        let g = [-5.0, 0.1, 0.1, 3.0];
        let p = project_gradient(&g, &[0.0; 4], &c, &w, 1.0, StepKind::Weights, &Mode::Joint);
        assert!(!p.active[0]);
        assert_eq!(p.direction[0], 0.0);
        assert!(p.direction.iter().zip(&w).all(|(d, w)| *w > 0.0 || *d >= 0.0));
        assert!(p.direction.iter().sum::<f64>().abs() < 1e-12);
    }
}
