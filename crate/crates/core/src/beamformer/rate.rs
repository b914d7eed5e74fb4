use super::{unconstrained_beamformers, HybridBeamformers, SystemDims};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_condition, hermitize, identity, ComplexMatrix, MAX_CONDITION};

/// `log₂|I + (ρ/N_S) Λ_n^{-1} W^H H F F^H H^H W|` with `Λ_n = σ² W^H W`,
/// for a precoder `F` and combiner `W` given as full products.
pub(crate) fn rate_of(h: &ComplexMatrix, f: &ComplexMatrix, w: &ComplexMatrix, dims: &SystemDims) -> Result<f64> {
    if h.nrows() != w.nrows() || h.ncols() != f.nrows() || f.ncols() != w.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "H {:?}, F {:?}, W {:?} are not conformable",
            h.shape(),
            f.shape(),
            w.shape()
        )));
    }
    let n_s = f.ncols();
    let ww = w.adjoint() * w;
    let cond = hermitian_condition(&ww);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularCombiner { cond });
    }
    let lambda = ww.scale(dims.sigma_n2);
    let chol = hermitize(&lambda).cholesky().ok_or(Error::SingularCombiner { cond })?;
    // Whitened effective channel K = L^{-1} W^H H F; the determinant becomes |I + (ρ/N_S) K K^H|.
    let a = w.adjoint() * h * f;
    let k = chol.l().solve_lower_triangular(&a).ok_or(Error::SingularCombiner { cond })?;
    let m = identity(n_s) + (&k * k.adjoint()).scale(dims.rho / n_s as f64);
    let c = hermitize(&m).cholesky().ok_or(Error::SingularCombiner { cond })?;
    let log_det: f64 = c.l().diagonal().iter().map(|d| 2.0 * d.re.log2()).sum();
    Ok(log_det.max(0.0))
}

/// Spectral efficiency (bits/s/Hz) of hybrid beamformers on `H_sub`; the same routine
/// evaluates the full array when passed full-array combiners.
pub fn spectral_efficiency(h_sub: &ComplexMatrix, bf: &HybridBeamformers, dims: &SystemDims) -> Result<f64> {
    rate_of(h_sub, &bf.precoder(), &bf.combiner(), dims)
}

/// Rate with `(F_opt, W_opt)` in place of the hybrid factors.
pub fn rate_with_unconstrained(h_sub: &ComplexMatrix, dims: &SystemDims) -> Result<f64> {
    let u = unconstrained_beamformers(h_sub, dims)?;
    rate_of(h_sub, &u.f_opt, &u.w_opt, dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, hermitian_eigenvalues};
    use crate::rng::{complex_normal, stream};

    fn random(r: usize, c: usize, rng: &mut crate::rng::SimRng) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, c, |_, _| complex_normal(rng))
    }

    fn scalar(z: f64) -> ComplexMatrix {
        ComplexMatrix::from_element(1, 1, c64(z, 0.0))
    }

    fn scalar_dims(rho: f64) -> SystemDims {
        SystemDims { n_t: 1, n_r: 1, n_rs: 1, n_s: 1, n_rf_t: 1, n_rf_r: 1, rho, sigma_n2: 1.0 }
    }

    #[test]
    fn scalar_channel_at_unit_snr_gives_one_bit() {
        let bf = HybridBeamformers { f_rf: scalar(1.0), f_bb: scalar(1.0), w_rf: scalar(1.0), w_bb: scalar(1.0) };
        let r = spectral_efficiency(&scalar(1.0), &bf, &scalar_dims(1.0)).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        assert!((rate_with_unconstrained(&scalar(1.0), &scalar_dims(3.0)).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_baseband_precoder_gives_zero_rate() {
        let mut rng = stream(1, &[]);
        let h = random(4, 6, &mut rng);
        let bf = HybridBeamformers {
            f_rf: random(6, 2, &mut rng),
            f_bb: ComplexMatrix::zeros(2, 2),
            w_rf: random(4, 2, &mut rng),
            w_bb: random(2, 2, &mut rng),
        };
        let dims = SystemDims { n_t: 6, n_r: 4, n_rs: 4, n_s: 2, n_rf_t: 2, n_rf_r: 2, rho: 10.0, sigma_n2: 1.0 };
        assert_eq!(spectral_efficiency(&h, &bf, &dims).unwrap(), 0.0);
    }

    #[test]
    fn matches_eigenvalue_determinant_oracle() {
        let mut rng = stream(2, &[]);
        let dims = SystemDims { n_t: 4, n_r: 4, n_rs: 4, n_s: 2, n_rf_t: 2, n_rf_r: 2, rho: 5.0, sigma_n2: 0.7 };
        for _ in 0..20 {
            let h = random(4, 4, &mut rng);
            let bf = HybridBeamformers {
                f_rf: random(4, 2, &mut rng),
                f_bb: random(2, 2, &mut rng),
                w_rf: random(4, 2, &mut rng),
                w_bb: random(2, 2, &mut rng),
            };
            let r = spectral_efficiency(&h, &bf, &dims).unwrap();
            // |I + Λ^{-1} M| = |Λ + M| / |Λ|, both Hermitian positive definite.
            let (f, w) = (bf.precoder(), bf.combiner());
            let lambda = (w.adjoint() * &w).scale(dims.sigma_n2);
            let a = w.adjoint() * &h * &f;
            let m = (&a * a.adjoint()).scale(dims.rho / 2.0);
            let num: f64 = hermitian_eigenvalues(&(&lambda + &m)).iter().map(|x| x.log2()).sum();
            let den: f64 = hermitian_eigenvalues(&lambda).iter().map(|x| x.log2()).sum();
            assert!((r - (num - den)).abs() < 1e-9, "{r} vs {}", num - den);
        }
    }

    #[test]
    fn rank_deficient_combiner_is_singular() {
        let mut rng = stream(3, &[]);
        let h = random(4, 4, &mut rng);
        let col = random(4, 1, &mut rng);
        let w_rf = ComplexMatrix::from_fn(4, 2, |i, _| col[(i, 0)]);
        let bf = HybridBeamformers {
            f_rf: random(4, 2, &mut rng),
            f_bb: random(2, 2, &mut rng),
            w_rf,
            w_bb: random(2, 2, &mut rng),
        };
        let dims = SystemDims { n_t: 4, n_r: 4, n_rs: 4, n_s: 2, n_rf_t: 2, n_rf_r: 2, rho: 5.0, sigma_n2: 1.0 };
        assert!(matches!(spectral_efficiency(&h, &bf, &dims), Err(Error::SingularCombiner { .. })));
    }

    #[test]
    fn unconstrained_rate_is_definitional_reduction() {
        let mut rng = stream(4, &[]);
        let dims = SystemDims { n_t: 6, n_r: 4, n_rs: 4, n_s: 2, n_rf_t: 2, n_rf_r: 2, rho: 3.0, sigma_n2: 1.0 };
        let h = random(4, 6, &mut rng);
        let u = unconstrained_beamformers(&h, &dims).unwrap();
        let bf = HybridBeamformers {
            f_rf: u.f_opt.clone(),
            f_bb: identity(2),
            w_rf: u.w_opt.clone(),
            w_bb: identity(2),
        };
        let a = spectral_efficiency(&h, &bf, &dims).unwrap();
        let b = rate_with_unconstrained(&h, &dims).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unconstrained_rate_is_monotone_in_power() {
        let mut rng = stream(5, &[]);
        for _ in 0..10 {
            let h = random(4, 6, &mut rng);
            let mut dims = SystemDims { n_t: 6, n_r: 4, n_rs: 4, n_s: 2, n_rf_t: 2, n_rf_r: 2, rho: 0.01, sigma_n2: 1.0 };
            let mut prev = 0.0;
            for _ in 0..12 {
                let r = rate_with_unconstrained(&h, &dims).unwrap();
                assert!(r >= prev - 1e-12);
                prev = r;
                dims.rho *= 2.0;
            }
        }
    }
}
