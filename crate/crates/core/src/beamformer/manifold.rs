//! Product of complex circles `{X : |X_ij| = c}` and a backtracking
//! Riemannian gradient descent on it.
//!
//! The metric is the Euclidean one inherited from ℂ^{m×n} viewed as ℝ^{2mn}:
//! `⟨A, B⟩ = Re tr(A^H B)`. Tangent vectors at `X` satisfy `Re(conj(X_ij) ξ_ij) = 0`.

use num_complex::Complex64;
use rand::Rng;

use super::MoSettings;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, real_inner, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexCircle {
    pub modulus: f64,
}

impl ComplexCircle {
    pub fn new(modulus: f64) -> Self {
        Self { modulus }
    }

    /// Removes the radial component: `d − Re(d ∘ conj(x)) / |x|² ∘ x`.
    pub fn project_tangent(&self, x: &ComplexMatrix, d: &ComplexMatrix) -> ComplexMatrix {
        x.zip_map(d, |xi, di| {
            let r = (di * xi.conj()).re / xi.norm_sqr();
            di - xi * r
        })
    }

    /// Maps each entry back to modulus `c`; zero entries go to `c` on the real axis.
    pub fn retract(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let c = self.modulus;
        y.map(|z| {
            let n = z.norm();
            if n > 0.0 {
                z * (c / n)
            } else {
                Complex64::new(c, 0.0)
            }
        })
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            Complex64::from_polar(self.modulus, rng.random_range(0.0..std::f64::consts::TAU))
        })
    }

    pub fn random_tangent<R: Rng + ?Sized>(&self, x: &ComplexMatrix, rng: &mut R) -> ComplexMatrix {
        let d = ComplexMatrix::from_fn(x.nrows(), x.ncols(), |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        self.project_tangent(x, &d)
    }
}

/// A smooth cost on the circle manifold.
pub trait CircleObjective {
    fn value(&self, x: &ComplexMatrix) -> Result<f64>;
    /// Gradient `G` with `df = Re tr(G^H dX)`.
    fn euclidean_gradient(&self, x: &ComplexMatrix) -> Result<ComplexMatrix>;

    fn riemannian_gradient(&self, manifold: &ComplexCircle, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(manifold.project_tangent(x, &self.euclidean_gradient(x)?))
    }
}

#[derive(Debug, Clone)]
pub struct RgdOutcome {
    pub point: ComplexMatrix,
    pub value: f64,
    pub iterations: usize,
}

/// Backtracking (Armijo) Riemannian gradient descent from `x0`.
///
/// Runs at most `settings.max_manifold_iters` accepted steps and stops
/// early once the relative decrease of an accepted step falls below
/// `settings.rel_obj_tol`. Every accepted step strictly decreases the value.
pub fn minimize<O: CircleObjective>(
    objective: &O,
    manifold: &ComplexCircle,
    x0: ComplexMatrix,
    initial_step: f64,
    settings: &MoSettings,
) -> Result<RgdOutcome> {
    let mut x = x0;
    let mut f = objective.value(&x)?;
    if !f.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut step = initial_step;
    let mut iterations = 0;
    while iterations < settings.max_manifold_iters {
        let grad = objective.riemannian_gradient(manifold, &x)?;
        let gnorm2 = frobenius_sq(&grad);
        if !gnorm2.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        if gnorm2 <= f64::MIN_POSITIVE || f <= 0.0 {
            break;
        }
        let mut t = step;
        let mut backtracked = false;
        let accepted = loop {
            let trial = manifold.retract(&(&x - grad.scale(t)));
            match objective.value(&trial) {
                Ok(ft) if ft.is_finite() && ft <= f - settings.sufficient_decrease * t * gnorm2 => {
                    break Some((trial, ft));
                }
                Ok(ft) if ft.is_nan() => return Err(Error::NonFiniteObjective),
                // Rejected trial, including points where the cost is undefined.
                _ => {}
            }
            t *= settings.shrink;
            backtracked = true;
            if t * gnorm2.sqrt() < 1e-18 * manifold.modulus {
                break None;
            }
        };
        let Some((mut next, mut f_next)) = accepted else { break };
        // Shorter steps that do better are preferred; this breaks the +/- oscillation
        // an Armijo step can settle into when curvature differs across entries.
        loop {
            let shorter = manifold.retract(&(&x - grad.scale(t * settings.shrink)));
            match objective.value(&shorter) {
                Ok(fs) if fs.is_finite() && fs < f_next => {
                    next = shorter;
                    f_next = fs;
                    t *= settings.shrink;
                    backtracked = true;
                }
                _ => break,
            }
        }
        iterations += 1;
        let decrease = f - f_next;
        x = next;
        f = f_next;
        // Grow only after a first-try acceptance so the step does not sit at the stability edge.
        step = if backtracked { t } else { t / settings.shrink };
        if decrease <= settings.rel_obj_tol * (f + decrease) {
            break;
        }
    }
    Ok(RgdOutcome { point: x, value: f, iterations })
}

/// Central finite-difference directional derivative of `objective` along the
/// retraction curve `t ↦ R_x(t ξ)`.
pub fn directional_derivative_fd<O: CircleObjective>(
    objective: &O,
    manifold: &ComplexCircle,
    x: &ComplexMatrix,
    xi: &ComplexMatrix,
    h: f64,
) -> Result<f64> {
    let plus = objective.value(&manifold.retract(&(x + xi.scale(h))))?;
    let minus = objective.value(&manifold.retract(&(x - xi.scale(h))))?;
    Ok((plus - minus) / (2.0 * h))
}

/// Relative error between `⟨grad f(x), ξ⟩` and its finite-difference estimate.
pub fn gradient_agreement<O: CircleObjective>(
    objective: &O,
    manifold: &ComplexCircle,
    x: &ComplexMatrix,
    xi: &ComplexMatrix,
    h: f64,
) -> Result<f64> {
    let analytic = real_inner(&objective.riemannian_gradient(manifold, x)?, xi);
    let numeric = directional_derivative_fd(objective, manifold, x, xi, h)?;
    Ok((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12))
}
