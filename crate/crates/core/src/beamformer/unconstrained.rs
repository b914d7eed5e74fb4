use num_complex::Complex64;

use super::SystemDims;
use crate::error::{Error, Result};
use crate::linalg::{identity, solve_hpd, svd, ComplexMatrix};

/// Minimum `σ_{N_S}/σ_1` for a channel to carry `N_S` streams.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct UnconstrainedBeamformers {
    /// `N_T × N_S`, orthonormal columns.
    pub f_opt: ComplexMatrix,
    /// `N_RS × N_S`.
    pub w_opt: ComplexMatrix,
}

/// Rotates each column so its largest-magnitude entry is real and positive.
fn normalize_column_phases(m: &mut ComplexMatrix) {
    for mut col in m.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(Complex64::new(0.0, 0.0));
        if pivot.norm() > 0.0 {
            let rot = pivot.conj() / pivot.norm();
            col.iter_mut().for_each(|z| *z *= rot);
        }
    }
}

/// `F_opt` = leading `N_S` right singular vectors of `H_sub`; `W_opt` from the
/// closed form `((1/ρ)(F^H H^H H F + (N_S σ²/ρ) I)^{-1} F^H H^H)^H`.
pub fn unconstrained_beamformers(h_sub: &ComplexMatrix, dims: &SystemDims) -> Result<UnconstrainedBeamformers> {
    if h_sub.shape() != (dims.n_rs, dims.n_t) {
        return Err(Error::ShapeMismatch(format!(
            "channel is {:?}, expected ({}, {})",
            h_sub.shape(),
            dims.n_rs,
            dims.n_t
        )));
    }
    let n_s = dims.n_s;
    let dec = svd(h_sub);
    let s = &dec.singular_values;
    let ratio = if s.len() < n_s || s[0] <= 0.0 { 0.0 } else { s[n_s - 1] / s[0] };
    if ratio <= RANK_TOL {
        return Err(Error::RankDeficient { n_s, ratio });
    }
    let mut f_opt = dec.v.columns(0, n_s).into_owned();
    normalize_column_phases(&mut f_opt);

    let hf = h_sub * &f_opt;
    let gram = hf.adjoint() * &hf + identity(n_s).scale(n_s as f64 * dims.sigma_n2 / dims.rho);
    let w_h = solve_hpd(&gram, &hf.adjoint())
        .ok_or(Error::RankDeficient { n_s, ratio })?
        .scale(1.0 / dims.rho);
    Ok(UnconstrainedBeamformers { f_opt, w_opt: w_h.adjoint() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, frobenius, max_abs_diff};
    use crate::rng::{complex_normal, stream};

    fn random(r: usize, c: usize, seed: u64) -> ComplexMatrix {
        let mut rng = stream(seed, &[]);
        ComplexMatrix::from_fn(r, c, |_, _| complex_normal(&mut rng))
    }

    fn dims(n_rs: usize, n_t: usize, n_s: usize) -> SystemDims {
        SystemDims { n_t, n_r: n_rs, n_rs, n_s, n_rf_t: n_s, n_rf_r: n_s, rho: 1.0, sigma_n2: 1.0 }
    }

    #[test]
    fn diagonal_channel_picks_dominant_axis() {
        let h = ComplexMatrix::from_row_slice(2, 2, &[c64(2.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        let u = unconstrained_beamformers(&h, &dims(2, 2, 1)).unwrap();
        assert!((u.f_opt[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-12);
        assert!(u.f_opt[(1, 0)].norm() < 1e-12);
    }

    #[test]
    fn precoder_columns_are_orthonormal() {
        let h = random(4, 6, 1);
        let u = unconstrained_beamformers(&h, &dims(4, 6, 2)).unwrap();
        let g = u.f_opt.adjoint() * &u.f_opt;
        assert!(max_abs_diff(&g, &identity(2)) < 1e-10);
        assert_eq!(u.w_opt.shape(), (4, 2));
    }

    #[test]
    fn phase_normalization_is_deterministic_under_channel_rotation() {
        let h = random(4, 6, 2);
        let u1 = unconstrained_beamformers(&h, &dims(4, 6, 1)).unwrap();
        // A common receive-side phase rotation leaves V unchanged up to phase.
        let u2 = unconstrained_beamformers(&h.scale(1.0).map(|z| z * c64(0.6, 0.8)), &dims(4, 6, 1)).unwrap();
        assert!(max_abs_diff(&u1.f_opt, &u2.f_opt) < 1e-10);
        let pivot = u1.f_opt.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        assert!(pivot.im.abs() < 1e-14 && pivot.re > 0.0);
    }

    #[test]
    fn rank_deficient_channel_is_rejected() {
        let v = random(4, 1, 3);
        let w = random(1, 6, 4);
        let h = &v * &w;
        assert!(matches!(
            unconstrained_beamformers(&h, &dims(4, 6, 2)),
            Err(Error::RankDeficient { .. })
        ));
        assert!(unconstrained_beamformers(&h, &dims(4, 6, 1)).is_ok());
    }

    /// Expected MSE `E‖s − W^H(√ρ H F s + n)‖²` with `E{ss^H} = I/N_S`, and its gradient.
    fn mmse_cost(w: &ComplexMatrix, hf: &ComplexMatrix, rho: f64, sigma2: f64, n_s: usize) -> (f64, ComplexMatrix) {
        let ns = n_s as f64;
        let cov = (hf * hf.adjoint()).scale(rho / ns) + identity(hf.nrows()).scale(sigma2);
        let cross = hf.scale(rho.sqrt() / ns);
        let cost = 1.0 - 2.0 * (w.adjoint() * &cross).trace().re + (w.adjoint() * &cov * w).trace().re;
        let grad = (&cov * w - &cross).scale(2.0);
        (cost, grad)
    }

    fn gradient_descent_mmse(hf: &ComplexMatrix, rho: f64, sigma2: f64, n_s: usize) -> ComplexMatrix {
        let mut w = ComplexMatrix::zeros(hf.nrows(), n_s);
        let lipschitz = 2.0 * (frobenius(hf).powi(2) * rho / n_s as f64 + sigma2);
        let step = 1.0 / lipschitz;
        for _ in 0..200_000 {
            let (_, g) = mmse_cost(&w, hf, rho, sigma2, n_s);
            if frobenius(&g) < 1e-13 {
                break;
            }
            w -= g.scale(step);
        }
        w
    }

    #[test]
    fn combiner_matches_numerical_mmse_minimizer() {
        let h = random(4, 4, 5);
        for (rho, sigma2) in [(1.0, 0.5), (1.0, 2.0)] {
            let d = SystemDims { rho, sigma_n2: sigma2, ..dims(4, 4, 2) };
            let u = unconstrained_beamformers(&h, &d).unwrap();
            let hf = &h * &u.f_opt;
            let w_star = gradient_descent_mmse(&hf, rho, sigma2, 2);
            assert!(max_abs_diff(&w_star, &u.w_opt) < 1e-6, "rho {rho}");
        }
    }

    #[test]
    fn combiner_is_colinear_with_mmse_minimizer_for_any_power() {
        // The closed form carries 1/ρ where the MMSE minimizer carries 1/√ρ.
        let h = random(4, 4, 6);
        let d = SystemDims { rho: 4.0, sigma_n2: 1.0, ..dims(4, 4, 2) };
        let u = unconstrained_beamformers(&h, &d).unwrap();
        let w_star = gradient_descent_mmse(&(&h * &u.f_opt), 4.0, 1.0, 2);
        assert!(max_abs_diff(&w_star, &u.w_opt.scale(2.0)) < 1e-6);
    }
}
