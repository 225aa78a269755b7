//! Rotating a dense covariance and parameter into the covariance eigenbasis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use w2s_core::Spectrum;

use crate::error::{LabError, Result};

/// Eigen-decomposition `covariance = U diag(spectrum) U^T`, with `beta_bar = U^T beta`.
#[derive(Debug, Clone)]
pub struct SpectralCoordinates {
    pub spectrum: Spectrum,
    pub beta_bar: Vec<f64>,
    /// Columns are eigenvectors, ordered like `spectrum`.
    pub basis: DMatrix<f64>,
}

impl SpectralCoordinates {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(self.spectrum.eigenvalues()));
        &self.basis * d * self.basis.transpose()
    }
}

pub fn to_spectral_coordinates(covariance: &DMatrix<f64>, beta: &[f64]) -> Result<SpectralCoordinates> {
    let (r, c) = covariance.shape();
    if r != c || r == 0 {
        return Err(LabError::Config(format!("covariance must be square and non-empty, got {r}x{c}")));
    }
    if beta.len() != r {
        return Err(w2s_core::Error::DimensionMismatch { expected: r, found: beta.len() }.into());
    }
    let scale = covariance.amax();
    let asym = (covariance - covariance.transpose()).amax();
    if asym.is_nan() || asym > 1e-12 * scale {
        return Err(LabError::Config("covariance is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(covariance.clone());
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if values.iter().any(|&l| l.is_nan() || l <= 0.0) {
        return Err(LabError::Config("covariance is not positive definite".into()));
    }
    let basis = DMatrix::from_fn(r, r, |i, j| eig.eigenvectors[(i, order[j])]);
    let beta_bar = (basis.transpose() * DVector::from_column_slice(beta)).as_slice().to_vec();
    Ok(SpectralCoordinates { spectrum: Spectrum::new(values)?, beta_bar, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use w2s_core::empirical_excess_risk;

    #[test]
    fn diagonal_sorted_input_is_fixed() {
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 0.5]));
        let sc = to_spectral_coordinates(&cov, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(sc.spectrum.eigenvalues(), &[3.0, 2.0, 0.5]);
        for (a, b) in sc.beta_bar.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a.abs() - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rotated_two_by_two() {
        let t = 0.3f64;
        let u = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        let cov = &u * DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.25])) * u.transpose();
        let beta = [0.7, -1.2];
        let sc = to_spectral_coordinates(&cov, &beta).unwrap();
        assert!((sc.spectrum.eigenvalues()[0] - 1.0).abs() < 1e-14);
        assert!((sc.spectrum.eigenvalues()[1] - 0.25).abs() < 1e-14);
        let want = u.transpose() * DVector::from_column_slice(&beta);
        for j in 0..2 {
            // eigenvectors are defined up to sign
            assert!((sc.beta_bar[j].abs() - want[j].abs()).abs() < 1e-12);
        }
        assert!((sc.reconstruct() - &cov).amax() < 1e-12);

        let hat = [0.1, 0.4];
        let hat_bar = (sc.basis.transpose() * DVector::from_column_slice(&hat)).as_slice().to_vec();
        let direct = {
            let e = DVector::from_column_slice(&hat) - DVector::from_column_slice(&beta);
            (e.transpose() * &cov * e)[0]
        };
        let rotated = empirical_excess_risk(&hat_bar, &sc.beta_bar, &sc.spectrum).unwrap();
        assert!((direct - rotated).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(to_spectral_coordinates(&cov, &[0.0, 0.0]).is_err());
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(to_spectral_coordinates(&cov, &[0.0, 0.0]).is_err());
    }
}
