//! Scenarios, behaviours and their matrix arrangements.
//!
//! A behaviour `P(ab|xy)` is stored as a flat array in `x, y, a, b` order with
//! 0-based indices. Documentation and file formats talk about 1-based labels;
//! the conversion happens only at the edges (reports and `Display`).

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default validation tolerance for probability constraints.
pub const DEFAULT_VALIDATION_TOL: f64 = 1e-9;

/// Input/output alphabet sizes of a bipartite Bell scenario `(m_A m_B d_A d_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(rename = "mA")]
    pub m_a: usize,
    #[serde(rename = "mB")]
    pub m_b: usize,
    #[serde(rename = "dA")]
    pub d_a: usize,
    #[serde(rename = "dB")]
    pub d_b: usize,
}

impl Scenario {
    pub fn new(m_a: usize, m_b: usize, d_a: usize, d_b: usize) -> Result<Self> {
        let s = Scenario { m_a, m_b, d_a, d_b };
        s.check()?;
        Ok(s)
    }

    /// Checks the positivity invariant; useful after deserialization.
    pub fn check(&self) -> Result<()> {
        if self.m_a == 0 || self.m_b == 0 || self.d_a == 0 || self.d_b == 0 {
            return Err(Error::InvalidScenario(format!(
                "all alphabet sizes must be positive, got {self}"
            )));
        }
        Ok(())
    }

    /// Rows of the input-major matrix, `m_A d_A`.
    pub fn n_a(&self) -> usize {
        self.m_a * self.d_a
    }

    /// Columns of the input-major matrix, `m_B d_B`.
    pub fn n_b(&self) -> usize {
        self.m_b * self.d_b
    }

    pub fn len(&self) -> usize {
        self.n_a() * self.n_b()
    }

    pub fn is_two_outcome(&self) -> bool {
        self.d_a == 2 && self.d_b == 2
    }

    pub fn is_symmetric(&self) -> bool {
        self.m_a == self.m_b && self.d_a == self.d_b
    }

    /// `sqrt(m_A m_B)`, the trace-norm bound shared by all quantum behaviours.
    pub fn sqrt_inputs(&self) -> f64 {
        ((self.m_a * self.m_b) as f64).sqrt()
    }

    pub fn swapped(&self) -> Scenario {
        Scenario { m_a: self.m_b, m_b: self.m_a, d_a: self.d_b, d_b: self.d_a }
    }

    #[inline]
    fn offset(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.m_b + y) * self.d_a + a) * self.d_b + b
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}{}{}{})", self.m_a, self.m_b, self.d_a, self.d_b)
    }
}

/// A conditional distribution `P(ab|xy)` on a fixed scenario.
///
/// Construction only checks shapes. Probability constraints are checked by
/// [`validate`], so behaviours outside the no-signaling polytope (as produced by
/// signed affine combinations) can still be arranged and measured.
#[derive(Debug, Clone, PartialEq)]
pub struct Behaviour {
    scenario: Scenario,
    p: Vec<f64>,
}

impl Behaviour {
    pub fn from_fn(
        scenario: Scenario,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        scenario.check()?;
        let mut p = Vec::with_capacity(scenario.len());
        for x in 0..scenario.m_a {
            for y in 0..scenario.m_b {
                for a in 0..scenario.d_a {
                    for b in 0..scenario.d_b {
                        p.push(f(x, y, a, b));
                    }
                }
            }
        }
        Ok(Behaviour { scenario, p })
    }

    /// Builds a behaviour from `p[x][y][a][b]` nesting, checking every level.
    pub fn from_nested(scenario: Scenario, nested: &[Vec<Vec<Vec<f64>>>]) -> Result<Self> {
        scenario.check()?;
        let s = scenario;
        if nested.len() != s.m_a {
            return Err(Error::Shape(format!("p has {} x-entries, expected {}", nested.len(), s.m_a)));
        }
        let mut p = Vec::with_capacity(s.len());
        for (x, px) in nested.iter().enumerate() {
            if px.len() != s.m_b {
                return Err(Error::Shape(format!(
                    "p[{}] has {} y-entries, expected {}",
                    x + 1,
                    px.len(),
                    s.m_b
                )));
            }
            for (y, pxy) in px.iter().enumerate() {
                if pxy.len() != s.d_a {
                    return Err(Error::Shape(format!(
                        "p[{}][{}] has {} a-entries, expected {}",
                        x + 1,
                        y + 1,
                        pxy.len(),
                        s.d_a
                    )));
                }
                for (a, row) in pxy.iter().enumerate() {
                    if row.len() != s.d_b {
                        return Err(Error::Shape(format!(
                            "p[{}][{}][{}] has {} b-entries, expected {}",
                            x + 1,
                            y + 1,
                            a + 1,
                            row.len(),
                            s.d_b
                        )));
                    }
                    p.extend_from_slice(row);
                }
            }
        }
        Ok(Behaviour { scenario, p })
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        let s = self.scenario;
        (0..s.m_a)
            .map(|x| {
                (0..s.m_b)
                    .map(|y| {
                        (0..s.d_a)
                            .map(|a| (0..s.d_b).map(|b| self.get(x, y, a, b)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// `P(ab|xy)` with 0-based indices.
    #[inline]
    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.p[self.scenario.offset(x, y, a, b)]
    }

    /// Flat storage in `x, y, a, b` order.
    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub(crate) fn from_raw(scenario: Scenario, p: Vec<f64>) -> Self {
        debug_assert_eq!(p.len(), scenario.len());
        Behaviour { scenario, p }
    }

    /// Alice's marginal `P(a|x)`, averaged over Bob's inputs (exact under no-signaling).
    pub fn marginal_a(&self, x: usize, a: usize) -> f64 {
        let s = self.scenario;
        let total: f64 = (0..s.m_b)
            .map(|y| (0..s.d_b).map(|b| self.get(x, y, a, b)).sum::<f64>())
            .sum();
        total / s.m_b as f64
    }

    /// Bob's marginal `P(b|y)`, averaged over Alice's inputs.
    pub fn marginal_b(&self, y: usize, b: usize) -> f64 {
        let s = self.scenario;
        let total: f64 = (0..s.m_a)
            .map(|x| (0..s.d_a).map(|a| self.get(x, y, a, b)).sum::<f64>())
            .sum();
        total / s.m_a as f64
    }

    pub fn marginals(&self) -> MarginalVectors {
        let s = self.scenario;
        let mut p_a = DVector::zeros(s.n_a());
        for x in 0..s.m_a {
            for a in 0..s.d_a {
                p_a[x * s.d_a + a] = self.marginal_a(x, a);
            }
        }
        let mut p_b = DVector::zeros(s.n_b());
        for y in 0..s.m_b {
            for b in 0..s.d_b {
                p_b[y * s.d_b + b] = self.marginal_b(y, b);
            }
        }
        MarginalVectors { p_a, p_b }
    }

    pub fn max_abs_diff(&self, other: &Behaviour) -> Option<f64> {
        if self.scenario != other.scenario {
            return None;
        }
        Some(
            self.p
                .iter()
                .zip(&other.p)
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max),
        )
    }
}

/// Marginals `P(a|x)` and `P(b|y)` in lexicographic `(x, a)` / `(y, b)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalVectors {
    pub p_a: DVector<f64>,
    pub p_b: DVector<f64>,
}

impl MarginalVectors {
    pub fn sum_sq_a(&self) -> f64 {
        self.p_a.iter().map(|v| v * v).sum()
    }

    pub fn sum_sq_b(&self) -> f64 {
        self.p_b.iter().map(|v| v * v).sum()
    }
}

/// One violated constraint. Indices are 0-based; `Display` prints them 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Negative { x: usize, y: usize, a: usize, b: usize, value: f64 },
    Normalization { x: usize, y: usize, deviation: f64 },
    /// Alice's marginal for `(a, x)` differs between Bob's inputs `y` and `y2`.
    SignalingAlice { x: usize, a: usize, y: usize, y2: usize, diff: f64 },
    /// Bob's marginal for `(b, y)` differs between Alice's inputs `x` and `x2`.
    SignalingBob { y: usize, b: usize, x: usize, x2: usize, diff: f64 },
}

impl Violation {
    pub fn magnitude(&self) -> f64 {
        match *self {
            Violation::Negative { value, .. } => -value,
            Violation::Normalization { deviation, .. } => deviation.abs(),
            Violation::SignalingAlice { diff, .. } | Violation::SignalingBob { diff, .. } => {
                diff.abs()
            }
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Negative { x, y, a, b, value } => write!(
                f,
                "negative probability P({}{}|{}{}) = {value:e}",
                a + 1,
                b + 1,
                x + 1,
                y + 1
            ),
            Violation::Normalization { x, y, deviation } => write!(
                f,
                "normalization off by {deviation:e} at (x,y)=({},{})",
                x + 1,
                y + 1
            ),
            Violation::SignalingAlice { x, a, y, y2, diff } => write!(
                f,
                "P({}|{}) differs by {diff:e} between y={} and y={}",
                a + 1,
                x + 1,
                y + 1,
                y2 + 1
            ),
            Violation::SignalingBob { y, b, x, x2, diff } => write!(
                f,
                "P({}|{}) differs by {diff:e} between x={} and x={}",
                b + 1,
                y + 1,
                x + 1,
                x2 + 1
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.violations.iter().map(Violation::magnitude).fold(0.0, f64::max)
    }
}

/// Checks nonnegativity, normalization and no-signaling within `tol`.
///
/// Signaling is reported against the first input of the other party, so each
/// offending pair appears once.
pub fn validate(b: &Behaviour, tol: f64) -> ValidationReport {
    let s = b.scenario;
    let mut violations = Vec::new();

    for x in 0..s.m_a {
        for y in 0..s.m_b {
            let mut total = 0.0;
            for a in 0..s.d_a {
                for bb in 0..s.d_b {
                    let v = b.get(x, y, a, bb);
                    total += v;
                    if v < -tol || !v.is_finite() {
                        violations.push(Violation::Negative { x, y, a, b: bb, value: v });
                    }
                }
            }
            let deviation = total - 1.0;
            if deviation.abs() > tol || !deviation.is_finite() {
                violations.push(Violation::Normalization { x, y, deviation });
            }
        }
    }

    let alice = |x: usize, y: usize, a: usize| (0..s.d_b).map(|bb| b.get(x, y, a, bb)).sum::<f64>();
    for x in 0..s.m_a {
        for a in 0..s.d_a {
            let reference = alice(x, 0, a);
            for y2 in 1..s.m_b {
                let diff = alice(x, y2, a) - reference;
                if diff.abs() > tol {
                    violations.push(Violation::SignalingAlice { x, a, y: 0, y2, diff });
                }
            }
        }
    }

    let bob = |x: usize, y: usize, bb: usize| (0..s.d_a).map(|a| b.get(x, y, a, bb)).sum::<f64>();
    for y in 0..s.m_b {
        for bb in 0..s.d_b {
            let reference = bob(0, y, bb);
            for x2 in 1..s.m_a {
                let diff = bob(x2, y, bb) - reference;
                if diff.abs() > tol {
                    violations.push(Violation::SignalingBob { y, b: bb, x: 0, x2, diff });
                }
            }
        }
    }

    ValidationReport { violations }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// Rows `(x, a)`, columns `(y, b)`: blocks `P_xy`.
    InputMajorP,
    /// Rows `(a, x)`, columns `(b, y)`: blocks `P'_ab`.
    OutputMajorPprime,
    /// Input-major layout of `P(ab|xy) - P(a|x) P(b|y)`.
    CenteredM,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviourMatrix {
    pub kind: MatrixKind,
    pub data: DMatrix<f64>,
    pub scenario: Scenario,
}

pub fn matrix_p(b: &Behaviour) -> BehaviourMatrix {
    let s = b.scenario;
    let data = DMatrix::from_fn(s.n_a(), s.n_b(), |r, c| {
        b.get(r / s.d_a, c / s.d_b, r % s.d_a, c % s.d_b)
    });
    BehaviourMatrix { kind: MatrixKind::InputMajorP, data, scenario: s }
}

pub fn matrix_p_prime(b: &Behaviour) -> BehaviourMatrix {
    let s = b.scenario;
    let data = DMatrix::from_fn(s.n_a(), s.n_b(), |r, c| {
        b.get(r % s.m_a, c % s.m_b, r / s.m_a, c / s.m_b)
    });
    BehaviourMatrix { kind: MatrixKind::OutputMajorPprime, data, scenario: s }
}

pub fn matrix_m(b: &Behaviour) -> BehaviourMatrix {
    let s = b.scenario;
    let m = b.marginals();
    let data = DMatrix::from_fn(s.n_a(), s.n_b(), |r, c| {
        b.get(r / s.d_a, c / s.d_b, r % s.d_a, c % s.d_b) - m.p_a[r] * m.p_b[c]
    });
    BehaviourMatrix { kind: MatrixKind::CenteredM, data, scenario: s }
}

pub fn arrange(b: &Behaviour, kind: MatrixKind) -> BehaviourMatrix {
    match kind {
        MatrixKind::InputMajorP => matrix_p(b),
        MatrixKind::OutputMajorPprime => matrix_p_prime(b),
        MatrixKind::CenteredM => matrix_m(b),
    }
}

/// Correlators of a two-outcome behaviour with outcome 1 ↦ +1 and outcome 2 ↦ −1.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorSummary {
    /// `C_xy = <A_x B_y>`.
    pub c: DMatrix<f64>,
    pub a_mean: DVector<f64>,
    pub b_mean: DVector<f64>,
    /// `C'_xy = <A_x B_y> - <A_x><B_y>`.
    pub c_centered: DMatrix<f64>,
}

const SIGN: [f64; 2] = [1.0, -1.0];

pub fn correlators(b: &Behaviour) -> Result<CorrelatorSummary> {
    let s = b.scenario;
    if !s.is_two_outcome() {
        return Err(Error::Unsupported(format!(
            "correlators need two outcomes per party, scenario is {s}"
        )));
    }
    let c = DMatrix::from_fn(s.m_a, s.m_b, |x, y| {
        let mut acc = 0.0;
        for a in 0..2 {
            for bb in 0..2 {
                acc += SIGN[a] * SIGN[bb] * b.get(x, y, a, bb);
            }
        }
        acc
    });
    let a_mean = DVector::from_fn(s.m_a, |x, _| b.marginal_a(x, 0) - b.marginal_a(x, 1));
    let b_mean = DVector::from_fn(s.m_b, |y, _| b.marginal_b(y, 0) - b.marginal_b(y, 1));
    let c_centered = DMatrix::from_fn(s.m_a, s.m_b, |x, y| c[(x, y)] - a_mean[x] * b_mean[y]);
    Ok(CorrelatorSummary { c, a_mean, b_mean, c_centered })
}

impl CorrelatorSummary {
    /// Rebuilds `P(ab|xy) = (1 + a<A_x> + b<B_y> + ab<A_x B_y>)/4`.
    pub fn reconstruct(&self) -> Behaviour {
        let s = Scenario { m_a: self.c.nrows(), m_b: self.c.ncols(), d_a: 2, d_b: 2 };
        Behaviour::from_fn(s, |x, y, a, b| {
            (1.0 + SIGN[a] * self.a_mean[x] + SIGN[b] * self.b_mean[y]
                + SIGN[a] * SIGN[b] * self.c[(x, y)])
                / 4.0
        })
        .expect("scenario built from nonempty matrix")
    }
}

/// On-disk behaviour document: `{"scenario": {...}, "p": [[[[..]]]]}` with `p[x][y][a][b]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviourDoc {
    pub scenario: Scenario,
    pub p: Vec<Vec<Vec<Vec<f64>>>>,
}

impl From<&Behaviour> for BehaviourDoc {
    fn from(b: &Behaviour) -> Self {
        BehaviourDoc { scenario: b.scenario, p: b.to_nested() }
    }
}

impl TryFrom<BehaviourDoc> for Behaviour {
    type Error = Error;

    fn try_from(doc: BehaviourDoc) -> Result<Self> {
        Behaviour::from_nested(doc.scenario, &doc.p)
    }
}

impl Behaviour {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&BehaviourDoc::from(self)).expect("behaviour serializes")
    }
}
