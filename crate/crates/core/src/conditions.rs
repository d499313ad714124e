//! Necessary conditions for a behaviour to be quantum, and the explicit dual
//! points of the level-1 relaxation that prove the Bell-functional bounds.
//!
//! All conditions compare a measured quantity against an analytic bound and
//! report `margin = bound − measured`. Nothing here solves an SDP; the dual
//! certificates are closed-form points whose feasibility is checked
//! numerically.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bell::BellExpression;
use crate::error::{Error, Result};
use crate::model::{correlators, matrix_m, matrix_p, Behaviour, MarginalVectors, Scenario};
use crate::numlin::{frobenius_inner, min_eigenvalue_symmetric, spectral_norm, trace_norm};

pub const DEFAULT_CONDITION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ConditionId {
    /// `‖P‖₁ ≤ √(m_A m_B)`.
    #[serde(rename = "THM1")]
    Thm1,
    /// Marginal-corrected trace-norm bound on the centered matrix `M`.
    #[serde(rename = "THM2")]
    Thm2,
    /// `<P, G> ≤ ‖G‖_∞ √(m_A m_B)`.
    #[serde(rename = "INEQ2")]
    Ineq2,
    /// `<M, G>` against the marginal-corrected bound.
    #[serde(rename = "INEQ4")]
    Ineq4,
    /// `‖C‖₁ ≤ √(m_A m_B)` for the correlator matrix.
    #[serde(rename = "CORR_NORM")]
    CorrNorm,
    /// `Σ G_xy <A_x B_y> ≤ ‖G‖_∞ √(m_A m_B)`.
    #[serde(rename = "CORR_EPPING")]
    CorrEpping,
    /// Marginal-corrected trace-norm bound on `C'`.
    #[serde(rename = "THM8")]
    Thm8,
    /// `Σ G_xy C'_xy` against the marginal-corrected bound.
    #[serde(rename = "INEQ15")]
    Ineq15,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConditionId::Thm1 => "THM1",
            ConditionId::Thm2 => "THM2",
            ConditionId::Ineq2 => "INEQ2",
            ConditionId::Ineq4 => "INEQ4",
            ConditionId::CorrNorm => "CORR_NORM",
            ConditionId::CorrEpping => "CORR_EPPING",
            ConditionId::Thm8 => "THM8",
            ConditionId::Ineq15 => "INEQ15",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub satisfied: bool,
}

impl ConditionReport {
    pub fn new(condition: ConditionId, measured: f64, bound: f64, tol: f64) -> Self {
        let margin = bound - measured;
        ConditionReport { condition, expression: None, measured, bound, margin, satisfied: margin >= -tol }
    }

    fn with_expression(mut self, g: &BellExpression) -> Self {
        self.expression = g.name.clone();
        self
    }
}

/// `√(m_A m_B)(1 − Σ p_A²/2m_A − Σ p_B²/2m_B)` for arbitrary marginal-like vectors.
fn corrected_bound(s: Scenario, norm: f64, sum_sq_a: f64, sum_sq_b: f64) -> f64 {
    let (ma, mb) = (s.m_a as f64, s.m_b as f64);
    norm * (ma * mb).sqrt()
        - norm / 2.0 * (mb / ma).sqrt() * sum_sq_a
        - norm / 2.0 * (ma / mb).sqrt() * sum_sq_b
}

pub fn check_thm1(b: &Behaviour, tol: f64) -> Result<ConditionReport> {
    let measured = trace_norm(&matrix_p(b).data)?;
    Ok(ConditionReport::new(ConditionId::Thm1, measured, b.scenario().sqrt_inputs(), tol))
}

pub fn thm2_bound(s: Scenario, marginals: &MarginalVectors) -> f64 {
    corrected_bound(s, 1.0, marginals.sum_sq_a(), marginals.sum_sq_b())
}

pub fn check_thm2(b: &Behaviour, tol: f64) -> Result<ConditionReport> {
    let measured = trace_norm(&matrix_m(b).data)?;
    let bound = thm2_bound(b.scenario(), &b.marginals());
    Ok(ConditionReport::new(ConditionId::Thm2, measured, bound, tol))
}

fn ensure_same_scenario(b: &Behaviour, g: &BellExpression) -> Result<()> {
    if b.scenario() != g.scenario {
        return Err(Error::Shape(format!(
            "behaviour in {} but expression in {}",
            b.scenario(),
            g.scenario
        )));
    }
    Ok(())
}

/// Quantum upper bound `‖G‖_∞ √(m_A m_B)` on `<P, G>`.
pub fn bound_ineq2(g: &BellExpression) -> Result<f64> {
    Ok(spectral_norm(&g.g)? * g.scenario.sqrt_inputs())
}

pub fn check_ineq2(b: &Behaviour, g: &BellExpression, tol: f64) -> Result<ConditionReport> {
    ensure_same_scenario(b, g)?;
    let measured = frobenius_inner(&matrix_p(b).data, &g.g)?;
    Ok(ConditionReport::new(ConditionId::Ineq2, measured, bound_ineq2(g)?, tol).with_expression(g))
}

/// `<M, G>` against `‖G‖_∞√(m_A m_B) − (‖G‖_∞/2)√(m_B/m_A) Σ P(a|x)² − (‖G‖_∞/2)√(m_A/m_B) Σ P(b|y)²`.
pub fn bound_ineq4(b: &Behaviour, g: &BellExpression, tol: f64) -> Result<ConditionReport> {
    ensure_same_scenario(b, g)?;
    let measured = frobenius_inner(&matrix_m(b).data, &g.g)?;
    let marg = b.marginals();
    let bound = corrected_bound(b.scenario(), spectral_norm(&g.g)?, marg.sum_sq_a(), marg.sum_sq_b());
    Ok(ConditionReport::new(ConditionId::Ineq4, measured, bound, tol).with_expression(g))
}

pub fn check_corr_norm(b: &Behaviour, tol: f64) -> Result<ConditionReport> {
    let c = correlators(b)?;
    let measured = trace_norm(&c.c)?;
    Ok(ConditionReport::new(ConditionId::CorrNorm, measured, b.scenario().sqrt_inputs(), tol))
}

/// `‖G‖_∞ √(m_A m_B)` for an `m_A × m_B` correlator expression.
pub fn bound_corr_epping(g: &DMatrix<f64>) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::Empty("correlator expression"));
    }
    Ok(spectral_norm(g)? * ((g.nrows() * g.ncols()) as f64).sqrt())
}

fn ensure_correlator_shape(s: Scenario, g: &DMatrix<f64>) -> Result<()> {
    if g.shape() != (s.m_a, s.m_b) {
        return Err(Error::Shape(format!(
            "correlator expression is {:?}, scenario {s} needs ({}, {})",
            g.shape(),
            s.m_a,
            s.m_b
        )));
    }
    Ok(())
}

pub fn check_corr_epping(b: &Behaviour, g: &DMatrix<f64>, tol: f64) -> Result<ConditionReport> {
    ensure_correlator_shape(b.scenario(), g)?;
    let c = correlators(b)?;
    let measured = frobenius_inner(&c.c, g)?;
    Ok(ConditionReport::new(ConditionId::CorrEpping, measured, bound_corr_epping(g)?, tol))
}

pub fn check_thm8(b: &Behaviour, tol: f64) -> Result<ConditionReport> {
    let c = correlators(b)?;
    let measured = trace_norm(&c.c_centered)?;
    let bound = corrected_bound(
        b.scenario(),
        1.0,
        c.a_mean.norm_squared(),
        c.b_mean.norm_squared(),
    );
    Ok(ConditionReport::new(ConditionId::Thm8, measured, bound, tol))
}

pub fn bound_ineq15(b: &Behaviour, g: &DMatrix<f64>, tol: f64) -> Result<ConditionReport> {
    ensure_correlator_shape(b.scenario(), g)?;
    let c = correlators(b)?;
    let measured = frobenius_inner(&c.c_centered, g)?;
    let bound = corrected_bound(
        b.scenario(),
        spectral_norm(g)?,
        c.a_mean.norm_squared(),
        c.b_mean.norm_squared(),
    );
    Ok(ConditionReport::new(ConditionId::Ineq15, measured, bound, tol))
}

/// Both sides of `‖P‖₁ ≥ (√(m_A m_B) + ‖C‖₁)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop7Witness {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn prop7_witness(b: &Behaviour) -> Result<Prop7Witness> {
    let c = correlators(b)?;
    let lhs = trace_norm(&matrix_p(b).data)?;
    let rhs = (b.scenario().sqrt_inputs() + trace_norm(&c.c)?) / 2.0;
    Ok(Prop7Witness { lhs, rhs })
}

/// Behaviour-free checks applicable to `b`'s scenario; correlator checks are
/// included only for two-outcome scenarios.
pub fn check_all(b: &Behaviour, tol: f64) -> Result<Vec<ConditionReport>> {
    let mut out = vec![check_thm1(b, tol)?, check_thm2(b, tol)?];
    if b.scenario().is_two_outcome() {
        out.push(check_corr_norm(b, tol)?);
        out.push(check_thm8(b, tol)?);
    }
    Ok(out)
}

/// A dual point `x` for `max <Γ, W>/2` over the level-1 moment matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCertificate {
    #[serde(serialize_with = "serialize_dvector")]
    pub x: DVector<f64>,
    /// Smallest eigenvalue of `diag(x) − W/2`, by dense eigensolve.
    pub min_eig: f64,
    /// Smallest eigenvalue of the Schur complement
    /// `x_B·I − Gᵀ G /(4 x_A)`; an independent feasibility route.
    pub schur_min_eig: f64,
    /// `xᵀ(P_A; P_B)` or the centered variant.
    pub objective: f64,
    /// The closed-form bound the objective must reproduce.
    pub analytic_bound: f64,
}

fn serialize_dvector<S: serde::Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

impl DualCertificate {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.min_eig >= -tol
    }
}

struct DualPoint {
    x: DVector<f64>,
    x_a: f64,
    x_b: f64,
    min_eig: f64,
    schur_min_eig: f64,
    norm: f64,
}

/// `x = ‖G‖_∞/2 (√(m_B/m_A) 1_{n_A}, √(m_A/m_B) 1_{n_B})` and its feasibility.
fn canonical_dual_point(g: &BellExpression) -> Result<DualPoint> {
    let s = g.scenario;
    let (n_a, n_b) = (s.n_a(), s.n_b());
    let (ma, mb) = (s.m_a as f64, s.m_b as f64);
    let norm = spectral_norm(&g.g)?;
    let x_a = norm / 2.0 * (mb / ma).sqrt();
    let x_b = norm / 2.0 * (ma / mb).sqrt();
    let x = DVector::from_fn(n_a + n_b, |i, _| if i < n_a { x_a } else { x_b });

    // diag(x) − W/2 with W = [[0, G], [Gᵀ, 0]]
    let mut slack = DMatrix::from_diagonal(&x);
    slack.view_mut((0, n_a), (n_a, n_b)).copy_from(&(&g.g * -0.5));
    slack.view_mut((n_a, 0), (n_b, n_a)).copy_from(&(g.g.transpose() * -0.5));
    let min_eig = min_eigenvalue_symmetric(&slack)?;

    let schur_min_eig = if x_a > 0.0 {
        let gtg = g.g.transpose() * &g.g;
        let schur = DMatrix::identity(n_b, n_b) * x_b - gtg / (4.0 * x_a);
        min_eigenvalue_symmetric(&schur)?
    } else {
        // G = 0: slack is the zero matrix
        0.0
    };
    Ok(DualPoint { x, x_a, x_b, min_eig, schur_min_eig, norm })
}

/// Certificate for `<P, G> ≤ ‖G‖_∞ √(m_A m_B)`.
///
/// The objective `xᵀ(P_A; P_B)` only uses that each party's marginals sum to 1
/// per input, so it is evaluated on the uniform marginals.
pub fn dual_certificate_ineq2(g: &BellExpression) -> Result<DualCertificate> {
    let s = g.scenario;
    let pt = canonical_dual_point(g)?;
    let uniform = DVector::from_fn(s.n_a() + s.n_b(), |i, _| {
        if i < s.n_a() { 1.0 / s.d_a as f64 } else { 1.0 / s.d_b as f64 }
    });
    Ok(DualCertificate {
        objective: pt.x.dot(&uniform),
        analytic_bound: bound_ineq2(g)?,
        x: pt.x,
        min_eig: pt.min_eig,
        schur_min_eig: pt.schur_min_eig,
    })
}

/// Same dual point, objective `xᵀ(P_A − P_A²; P_B − P_B²)` on `b`'s marginals.
pub fn dual_certificate_ineq4(b: &Behaviour, g: &BellExpression) -> Result<DualCertificate> {
    ensure_same_scenario(b, g)?;
    let pt = canonical_dual_point(g)?;
    let m = b.marginals();
    let centered_a: f64 = m.p_a.iter().map(|p| p - p * p).sum();
    let centered_b: f64 = m.p_b.iter().map(|p| p - p * p).sum();
    let objective = pt.x_a * centered_a + pt.x_b * centered_b;
    let analytic_bound = corrected_bound(b.scenario(), pt.norm, m.sum_sq_a(), m.sum_sq_b());
    Ok(DualCertificate {
        x: pt.x,
        min_eig: pt.min_eig,
        schur_min_eig: pt.schur_min_eig,
        objective,
        analytic_bound,
    })
}
