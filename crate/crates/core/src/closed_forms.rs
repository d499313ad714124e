//! Closed-form spectra of the maximally entangled family `P_d`.
//!
//! The blocks of `P_d = [[A, B], [C, A]]` are circulant. Their eigenvalues
//! (indexed by the common eigenvectors `v_j = (1, ω_j, …, ω_j^{d−1})/√d`) are
//! sums of the form
//!
//! ```text
//! S_θ(j) = Σ_k ω_j^k / sin²(π(k + θ)/d)
//!        = −4d e^{−2πijθ/d} (j + e^{−2πiθ}(d − j)) / (1 − e^{−2πiθ})²
//! ```
//!
//! scaled by `1/(2d³)`, with `θ = −1/4` for `A`, `+1/4` for `B` and `−3/4`
//! for `C`. Because `P_d` is normal, its singular values are
//! `|λ_j(A) ± √(λ_j(B) λ_j(C))|`, which collapse to `2j/d²` and `2(d−j)/d²`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Minimum distance of `θ` from the integers.
pub const POLE_GUARD: f64 = 1e-6;

fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() || (theta - theta.round()).abs() <= POLE_GUARD {
        return Err(Error::Pole(theta));
    }
    Ok(())
}

fn check_index(j: usize, d: usize) -> Result<()> {
    if d == 0 || j >= d {
        return Err(Error::OutOfRange(format!("need 0 <= j < d, got j={j}, d={d}")));
    }
    Ok(())
}

pub fn s_theta_closed(theta: f64, j: usize, d: usize) -> Result<Complex64> {
    check_theta(theta)?;
    check_index(j, d)?;
    let (jf, df) = (j as f64, d as f64);
    let e = Complex64::from_polar(1.0, -2.0 * PI * theta);
    let lead = Complex64::from_polar(1.0, -2.0 * PI * jf * theta / df);
    let denom = (Complex64::new(1.0, 0.0) - e).powi(2);
    Ok(-4.0 * df * lead * (jf + e * (df - jf)) / denom)
}

/// Term-by-term evaluation of `S_θ(j)`.
pub fn s_theta_direct(theta: f64, j: usize, d: usize) -> Result<Complex64> {
    check_theta(theta)?;
    check_index(j, d)?;
    let df = d as f64;
    Ok((0..d)
        .map(|k| {
            let w = Complex64::from_polar(1.0, 2.0 * PI * ((j * k) % d) as f64 / df);
            w / (PI * (k as f64 + theta) / df).sin().powi(2)
        })
        .sum())
}

/// `θ` of the summation formula belonging to each block of `P_d`.
pub const THETA_A: f64 = -0.25;
pub const THETA_B: f64 = 0.25;
pub const THETA_C: f64 = -0.75;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockEigenvalues {
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub c: Vec<Complex64>,
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("need d >= 2, got {d}")));
    }
    Ok(())
}

/// Block eigenvalues from their explicit closed forms:
///
/// ```text
/// λ_j(A) = −i e^{iπj/2d} (j + i(d−j)) / d²
/// λ_j(B) =  i e^{−iπj/2d} (j − i(d−j)) / d²
/// λ_j(C) =  i e^{3iπj/2d} (j − i(d−j)) / d²
/// ```
pub fn pd_block_eigs(d: usize) -> Result<BlockEigenvalues> {
    check_dim(d)?;
    let df = d as f64;
    let i = Complex64::i();
    let d2 = df * df;
    let mut out = BlockEigenvalues { a: Vec::with_capacity(d), b: Vec::with_capacity(d), c: Vec::with_capacity(d) };
    for j in 0..d {
        let jf = j as f64;
        let phase = PI * jf / (2.0 * df);
        out.a.push(-i * Complex64::from_polar(1.0, phase) * (jf + i * (df - jf)) / d2);
        out.b.push(i * Complex64::from_polar(1.0, -phase) * (jf - i * (df - jf)) / d2);
        out.c.push(i * Complex64::from_polar(1.0, 3.0 * phase) * (jf - i * (df - jf)) / d2);
    }
    Ok(out)
}

/// Block eigenvalues as `S_θ(j)/(2d³)` with the per-block `θ`.
pub fn pd_block_eigs_from_sums(d: usize) -> Result<BlockEigenvalues> {
    check_dim(d)?;
    let scale = 1.0 / (2.0 * (d as f64).powi(3));
    let block = |theta: f64| -> Result<Vec<Complex64>> {
        (0..d).map(|j| Ok(s_theta_closed(theta, j, d)? * scale)).collect()
    };
    Ok(BlockEigenvalues { a: block(THETA_A)?, b: block(THETA_B)?, c: block(THETA_C)? })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdSpectrum {
    pub d: usize,
    pub lambda_a: Vec<Complex64>,
    pub lambda_b: Vec<Complex64>,
    pub lambda_c: Vec<Complex64>,
    /// `2j/d²`.
    pub sigma_minus: Vec<f64>,
    /// `2(d−j)/d²`.
    pub sigma_plus: Vec<f64>,
}

impl PdSpectrum {
    /// `(|λ_j(A) − √(λ_j(B)λ_j(C))|, |λ_j(A) + √(λ_j(B)λ_j(C))|)` with the
    /// principal square root; compare per `j` as unordered pairs.
    pub fn branch_pairs(&self) -> Vec<(f64, f64)> {
        (0..self.d)
            .map(|j| {
                let root = (self.lambda_b[j] * self.lambda_c[j]).sqrt();
                ((self.lambda_a[j] - root).norm(), (self.lambda_a[j] + root).norm())
            })
            .collect()
    }

    /// All `2d` singular values, sorted descending.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.sigma_minus.iter().chain(&self.sigma_plus).copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn trace_norm(&self) -> f64 {
        self.sigma_minus.iter().chain(&self.sigma_plus).sum()
    }
}

pub fn pd_singular_values(d: usize) -> Result<PdSpectrum> {
    let eig = pd_block_eigs(d)?;
    let d2 = (d * d) as f64;
    Ok(PdSpectrum {
        d,
        lambda_a: eig.a,
        lambda_b: eig.b,
        lambda_c: eig.c,
        sigma_minus: (0..d).map(|j| 2.0 * j as f64 / d2).collect(),
        sigma_plus: (0..d).map(|j| 2.0 * (d - j) as f64 / d2).collect(),
    })
}

/// `Σ_j (σ_j⁺ + σ_j⁻)`, equal to 2 for every `d`.
pub fn pd_trace_norm_closed(d: usize) -> Result<f64> {
    Ok(pd_singular_values(d)?.trace_norm())
}
