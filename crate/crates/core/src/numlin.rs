//! Singular values, Schatten norms, symmetric eigenvalues, circulant spectra
//! and the pinching bound.
//!
//! Dense SVD is delegated to `faer`, symmetric eigendecomposition to `nalgebra`.
//! Every entry point rejects non-finite input up front.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Accuracy requested by the norm helpers, relative to `max(1, σ_max)`.
pub const DEFAULT_SVD_TOL: f64 = 1e-10;

/// Entrywise asymmetry accepted by [`min_eigenvalue_symmetric`].
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Max-entry reconstruction error `|U Σ Vᵀ − M|`.
    pub residual: f64,
}

impl SpectrumResult {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

pub fn ensure_finite(m: &DMatrix<f64>) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Thin SVD `m = U diag(σ) Vᵀ` with singular values sorted descending.
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

pub fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    ensure_finite(m)?;
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(m.nrows(), 0),
            singular_values: Vec::new(),
            v_t: DMatrix::zeros(0, m.ncols()),
        });
    }
    let dec = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
        .thin_svd()
        .map_err(|_| Error::SvdFailed)?;
    let (u, v) = (dec.U(), dec.V());
    let sv = dec.S().column_vector();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let singular_values = order.iter().map(|&i| sv[i].max(0.0)).collect();
    let u = DMatrix::from_fn(m.nrows(), k, |r, c| u[(r, order[c])]);
    let v_t = DMatrix::from_fn(k, m.ncols(), |r, c| v[(c, order[r])]);
    Ok(Svd { u, singular_values, v_t })
}

impl Svd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (c, s) in self.singular_values.iter().enumerate() {
            us.column_mut(c).scale_mut(*s);
        }
        us * &self.v_t
    }
}

/// All singular values of `m`, accurate to `tol · max(1, σ_max)` in the
/// backward sense.
pub fn singular_values(m: &DMatrix<f64>, tol: f64) -> Result<SpectrumResult> {
    let dec = svd(m)?;
    let residual = (dec.reconstruct() - m).amax();
    let scale = dec.singular_values.first().copied().unwrap_or(0.0).max(1.0);
    if residual > tol * scale {
        return Err(Error::Inaccurate { residual, tol: tol * scale });
    }
    Ok(SpectrumResult { values: dec.singular_values, residual })
}

/// Sum of singular values.
pub fn trace_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(m, DEFAULT_SVD_TOL)?.sum())
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(m, DEFAULT_SVD_TOL)?.max())
}

pub fn frobenius_norm(m: &DMatrix<f64>) -> Result<f64> {
    ensure_finite(m)?;
    Ok(m.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// `<A, B> = tr(A Bᵀ)`.
pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(a.iter().zip(b.iter()).map(|(u, v)| u * v).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub trace: f64,
    pub spectral: f64,
    pub frobenius: f64,
}

pub fn norms(m: &DMatrix<f64>) -> Result<Norms> {
    let spec = singular_values(m, DEFAULT_SVD_TOL)?;
    Ok(Norms { trace: spec.sum(), spectral: spec.max(), frobenius: frobenius_norm(m)? })
}

fn symmetric_spectrum(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    ensure_finite(m)?;
    if !m.is_square() {
        return Err(Error::Shape(format!("expected a square matrix, got {:?}", m.shape())));
    }
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric(asym));
    }
    if m.nrows() == 0 {
        return Err(Error::Empty("matrix"));
    }
    let sym = (m + m.transpose()) * 0.5;
    let mut values: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Smallest eigenvalue of a (numerically) symmetric matrix.
pub fn min_eigenvalue_symmetric(m: &DMatrix<f64>) -> Result<f64> {
    Ok(symmetric_spectrum(m)?[0])
}

/// Dense circulant whose first row is `first_row`: `M[a][b] = r[(b − a) mod d]`.
pub fn circulant_from_first_row(first_row: &[f64]) -> DMatrix<f64> {
    let d = first_row.len();
    DMatrix::from_fn(d, d, |a, b| first_row[(b + d - a) % d])
}

/// Eigenvalues of the circulant with the given first row, indexed by the
/// eigenvector `v_j = (1, ω_j, …, ω_j^{d−1})/√d` with `ω_j = exp(2πij/d)`:
/// `λ_j = Σ_k r_k ω_j^k`.
///
/// The first row of block `P_xy` is `P(1b|xy)`, so this reproduces the
/// per-index eigenvalue formula for the blocks of a circulant behaviour.
pub fn circulant_eigenvalues(first_row: &[f64]) -> Result<Vec<Complex64>> {
    let d = first_row.len();
    if d == 0 {
        return Err(Error::Empty("circulant row"));
    }
    if let Some(k) = first_row.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: 0, col: k });
    }
    Ok((0..d)
        .map(|j| {
            first_row
                .iter()
                .enumerate()
                .map(|(k, &r)| {
                    // (j·k) mod d keeps the phase argument small for large d
                    let phase = 2.0 * PI * ((j * k) % d) as f64 / d as f64;
                    Complex64::from_polar(r, phase)
                })
                .sum()
        })
        .collect())
}

/// Splits `n` into `k` equal consecutive block sizes.
pub fn uniform_blocks(n: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || n % k != 0 {
        return Err(Error::Partition(format!("cannot split {n} into {k} equal blocks")));
    }
    Ok(vec![n / k; k])
}

/// `Σ_k ‖M_kk‖₁` over the diagonal blocks induced by the given row and column
/// block sizes; never exceeds `‖M‖₁`.
pub fn pinching_lower_bound(m: &DMatrix<f64>, row_blocks: &[usize], col_blocks: &[usize]) -> Result<f64> {
    if row_blocks.is_empty() || row_blocks.len() != col_blocks.len() {
        return Err(Error::Partition(format!(
            "{} row blocks vs {} column blocks",
            row_blocks.len(),
            col_blocks.len()
        )));
    }
    if row_blocks.iter().sum::<usize>() != m.nrows() || col_blocks.iter().sum::<usize>() != m.ncols() {
        return Err(Error::Partition(format!(
            "block sizes {row_blocks:?} x {col_blocks:?} do not cover a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if row_blocks.iter().chain(col_blocks).any(|&s| s == 0) {
        return Err(Error::Partition("empty block".into()));
    }
    let (mut r0, mut c0) = (0, 0);
    let mut total = 0.0;
    for (&rs, &cs) in row_blocks.iter().zip(col_blocks) {
        total += trace_norm(&m.view((r0, c0), (rs, cs)).into_owned())?;
        r0 += rs;
        c0 += cs;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spectrum() {
        let s = singular_values(&DMatrix::identity(4, 4), 1e-12).unwrap();
        assert_eq!(s.values.len(), 4);
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn zero_matrix_norms() {
        let n = norms(&DMatrix::zeros(3, 5)).unwrap();
        assert_eq!((n.trace, n.spectral, n.frobenius), (0.0, 0.0, 0.0));
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(1, 0)] = f64::NAN;
        assert_eq!(trace_norm(&m), Err(Error::NonFinite { row: 1, col: 0 }));
        assert!(frobenius_norm(&m).is_err());
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert!((min_eigenvalue_symmetric(&DMatrix::identity(3, 3)).unwrap() - 1.0).abs() < 1e-12);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -2.0]));
        assert!((min_eigenvalue_symmetric(&d).unwrap() + 2.0).abs() < 1e-12);
        let r1 = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!(min_eigenvalue_symmetric(&r1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn asymmetric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(min_eigenvalue_symmetric(&m), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn circulant_constant_row() {
        let d = 5;
        let ev = circulant_eigenvalues(&vec![1.0 / d as f64; d]).unwrap();
        assert!((ev[0] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(ev[1..].iter().all(|z| z.norm() < 1e-14));
        assert!(circulant_eigenvalues(&[]).is_err());
    }

    #[test]
    fn circulant_eigenvectors_follow_convention() {
        let row = [0.3, -1.0, 2.5, 0.25];
        let m = circulant_from_first_row(&row);
        let ev = circulant_eigenvalues(&row).unwrap();
        let d = row.len();
        for (j, lam) in ev.iter().enumerate() {
            let v: Vec<Complex64> =
                (0..d).map(|k| Complex64::from_polar(1.0, 2.0 * PI * (j * k) as f64 / d as f64)).collect();
            for a in 0..d {
                let mv: Complex64 = (0..d).map(|b| v[b] * m[(a, b)]).sum();
                assert!((mv - lam * v[a]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pinching_tight_on_block_diagonal() {
        let mut m = DMatrix::zeros(5, 5);
        m.view_mut((0, 0), (2, 2)).copy_from(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]));
        m.view_mut((2, 2), (3, 3)).copy_from(&DMatrix::from_row_slice(
            3,
            3,
            &[0.2, 0.0, 1.0, -1.0, 4.0, 0.3, 0.0, 0.7, -2.0],
        ));
        let p = pinching_lower_bound(&m, &[2, 3], &[2, 3]).unwrap();
        assert!((p - trace_norm(&m).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn malformed_partitions() {
        let m = DMatrix::<f64>::zeros(4, 4);
        assert!(matches!(pinching_lower_bound(&m, &[2, 2], &[4]), Err(Error::Partition(_))));
        assert!(matches!(pinching_lower_bound(&m, &[2, 1], &[2, 2]), Err(Error::Partition(_))));
        assert!(matches!(pinching_lower_bound(&m, &[4, 0], &[2, 2]), Err(Error::Partition(_))));
        assert!(uniform_blocks(6, 4).is_err());
    }
}
