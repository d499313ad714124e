//! Bell expressions as coefficient matrices in the input-major layout.
//!
//! Provides evaluation, the local bound by vertex enumeration, quantum bounds
//! via block-constant offsets plus rescaling, and the SVD construction of an
//! expression attaining `‖P‖₁` on a given behaviour matrix.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::bound_ineq2;
use crate::error::{Error, Result};
use crate::generators::{ldb_assignment, ldb_count, LdbAssignment};
use crate::model::{matrix_p, Behaviour, BehaviourMatrix, Scenario};
use crate::numlin::{frobenius_inner, spectral_norm, svd};

#[derive(Debug, Clone, PartialEq)]
pub struct BellExpression {
    pub scenario: Scenario,
    /// `(m_A d_A) × (m_B d_B)`, entry `((x,a),(y,b))` multiplies `P(ab|xy)`.
    pub g: DMatrix<f64>,
    pub name: Option<String>,
}

impl BellExpression {
    pub fn new(scenario: Scenario, g: DMatrix<f64>, name: Option<String>) -> Result<Self> {
        scenario.check()?;
        if g.shape() != (scenario.n_a(), scenario.n_b()) {
            return Err(Error::Shape(format!(
                "expression is {:?}, scenario {scenario} needs ({}, {})",
                g.shape(),
                scenario.n_a(),
                scenario.n_b()
            )));
        }
        Ok(BellExpression { scenario, g, name })
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    /// `G(ab|xy)` with 0-based indices.
    pub fn coeff(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        let s = self.scenario;
        self.g[(x * s.d_a + a, y * s.d_b + b)]
    }

    pub fn sidecar(&self) -> ExpressionSidecar {
        ExpressionSidecar { scenario: self.scenario, name: self.name.clone() }
    }
}

/// JSON metadata stored next to an expression's CSV matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionSidecar {
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// `<P, G> = Σ P(ab|xy) G(ab|xy)`.
pub fn evaluate(g: &BellExpression, b: &Behaviour) -> Result<f64> {
    if g.scenario != b.scenario() {
        return Err(Error::Shape(format!(
            "expression in {} but behaviour in {}",
            g.scenario,
            b.scenario()
        )));
    }
    frobenius_inner(&matrix_p(b).data, &g.g)
}

/// Upper limit on `d_A^{m_A} d_B^{m_B}` accepted by [`local_bound`].
pub const LOCAL_ENUMERATION_GUARD: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOptimum {
    pub value: f64,
    pub assignment: LdbAssignment,
}

/// Maximum of `<D, G>` over local deterministic boxes.
///
/// Alice's output functions are enumerated; for each one Bob's best response
/// decouples over his inputs, so the search is exact.
pub fn local_optimum(g: &BellExpression) -> Result<LocalOptimum> {
    let s = g.scenario;
    let count = ldb_count(s);
    if count > LOCAL_ENUMERATION_GUARD {
        return Err(Error::EnumerationGuard(count));
    }
    let alice_count = (0..s.m_a).fold(1u128, |acc, _| acc * s.d_a as u128);
    let bob_radix = (0..s.m_b).fold(1u128, |acc, _| acc * s.d_b as u128);

    let best = (0..alice_count as u64)
        .into_par_iter()
        .map(|fi| {
            let f = ldb_assignment(s, fi as u128 * bob_radix).f;
            let mut value = 0.0;
            let mut gb = Vec::with_capacity(s.m_b);
            for y in 0..s.m_b {
                let (mut best_b, mut best_v) = (0, f64::NEG_INFINITY);
                for b in 0..s.d_b {
                    let v: f64 = (0..s.m_a).map(|x| g.coeff(x, y, f[x], b)).sum();
                    if v > best_v {
                        best_v = v;
                        best_b = b;
                    }
                }
                value += best_v;
                gb.push(best_b);
            }
            (value, fi, LdbAssignment { f, g: gb })
        })
        .reduce_with(|l, r| if r.0 > l.0 || (r.0 == l.0 && r.1 < l.1) { r } else { l })
        .expect("at least one local deterministic box");
    Ok(LocalOptimum { value: best.0, assignment: best.2 })
}

pub fn local_bound(g: &BellExpression) -> Result<f64> {
    Ok(local_optimum(g)?.value)
}

/// `G' = offset + s·G`, where input block `(x, y)` of the offset is `c_xy·J`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    /// `m_A × m_B`.
    pub block_offsets: DMatrix<f64>,
    pub scale: f64,
}

impl AffineForm {
    pub fn identity(s: Scenario) -> Self {
        AffineForm { block_offsets: DMatrix::zeros(s.m_a, s.m_b), scale: 1.0 }
    }

    pub fn offset_total(&self) -> f64 {
        self.block_offsets.sum()
    }
}

pub fn affine_apply(g: &BellExpression, form: &AffineForm) -> Result<BellExpression> {
    let s = g.scenario;
    if !(form.scale > 0.0) || !form.scale.is_finite() {
        return Err(Error::OutOfRange(format!("scale must be positive, got {}", form.scale)));
    }
    if form.block_offsets.shape() != (s.m_a, s.m_b) {
        return Err(Error::Shape(format!(
            "block offsets are {:?}, scenario {s} needs ({}, {})",
            form.block_offsets.shape(),
            s.m_a,
            s.m_b
        )));
    }
    let shifted = DMatrix::from_fn(s.n_a(), s.n_b(), |r, c| {
        form.block_offsets[(r / s.d_a, c / s.d_b)] + form.scale * g.g[(r, c)]
    });
    BellExpression::new(s, shifted, g.name.clone())
}

/// `(‖G'‖_∞ √(m_A m_B) − Σ c_xy)/s`: a quantum upper bound on `<P, G>`, valid
/// because `<P, G'> = Σ c_xy + s<P, G>` for every normalized behaviour.
pub fn tsirelson_bound_via(form: &AffineForm, g: &BellExpression) -> Result<f64> {
    let shifted = affine_apply(g, form)?;
    Ok((bound_ineq2(&shifted)? - form.offset_total()) / form.scale)
}

/// Search space for [`tsirelson_bound_search`].
///
/// Offsets are scanned over `offsets^(m_A m_B)` when that product is at most
/// `max_cells`, otherwise by cyclic coordinate descent from `c = 0`. For each
/// offset pattern the inverse scale `t = 1/s ∈ [0, t_max]` is optimized by
/// golden-section search; the objective `‖t·cJ + G‖_∞√(m_A m_B) − tΣc` is
/// convex in `t`, and `t = 0` is the unshifted bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub offsets: Vec<f64>,
    pub t_max: f64,
    pub golden_iters: usize,
    pub max_cells: usize,
}

impl Default for SearchGrid {
    fn default() -> Self {
        SearchGrid {
            offsets: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            t_max: 16.0,
            golden_iters: 100,
            max_cells: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub bound: f64,
    pub form: AffineForm,
    pub evaluations: usize,
}

fn shifted_bound(g: &BellExpression, c: &DMatrix<f64>, t: f64) -> f64 {
    let s = g.scenario;
    let m = DMatrix::from_fn(s.n_a(), s.n_b(), |r, col| t * c[(r / s.d_a, col / s.d_b)] + g.g[(r, col)]);
    // G is finite by construction, so the SVD only fails on pathological input
    let norm = spectral_norm(&m).unwrap_or(f64::INFINITY);
    norm * s.sqrt_inputs() - t * c.sum()
}

/// Golden-section minimum of a convex function on `[0, hi]`, endpoints included.
fn golden_min(f: impl Fn(f64) -> f64, hi: f64, iters: usize) -> (f64, f64, usize) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut up) = (0.0, hi);
    let mut a = up - phi * (up - lo);
    let mut b = lo + phi * (up - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    let mut evals = 2;
    for _ in 0..iters {
        if fa <= fb {
            up = b;
            b = a;
            fb = fa;
            a = up - phi * (up - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (up - lo);
            fb = f(b);
        }
        evals += 1;
    }
    let mid = if fa <= fb { (a, fa) } else { (b, fb) };
    let candidates = [(0.0, f(0.0)), (hi, f(hi)), mid];
    evals += 2;
    let best = candidates.into_iter().fold((0.0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    (best.0, best.1, evals)
}

fn form_from(c: DMatrix<f64>, t: f64, s: Scenario) -> AffineForm {
    if t > 0.0 {
        AffineForm { block_offsets: c, scale: 1.0 / t }
    } else {
        AffineForm::identity(s)
    }
}

/// Smallest bound of [`tsirelson_bound_via`] found over the searched forms.
/// Never exceeds the identity-form bound `‖G‖_∞ √(m_A m_B)`.
pub fn tsirelson_bound_search(g: &BellExpression, grid: &SearchGrid) -> Result<SearchResult> {
    if grid.offsets.is_empty() {
        return Err(Error::Empty("offset grid"));
    }
    if !(grid.t_max > 0.0) {
        return Err(Error::OutOfRange(format!("t_max must be positive, got {}", grid.t_max)));
    }
    let s = g.scenario;
    let cells = s.m_a * s.m_b;
    let k = grid.offsets.len();
    let line = |c: &DMatrix<f64>| golden_min(|t| shifted_bound(g, c, t), grid.t_max, grid.golden_iters);

    let identity = bound_ineq2(g)?;
    let mut best = (identity, DMatrix::zeros(s.m_a, s.m_b), 0.0);
    let mut evaluations = 1;

    let exhaustive = (k as f64).powi(cells as i32) <= grid.max_cells as f64;
    if exhaustive {
        let total = k.pow(cells as u32);
        let results: Vec<(f64, f64, usize, usize)> = (0..total)
            .into_par_iter()
            .map(|idx| {
                let c = offsets_for(idx, s, &grid.offsets);
                let (t, v, e) = line(&c);
                (v, t, e, idx)
            })
            .collect();
        for (v, t, e, idx) in results {
            evaluations += e;
            if v < best.0 {
                best = (v, offsets_for(idx, s, &grid.offsets), t);
            }
        }
    } else {
        let mut current = DMatrix::zeros(s.m_a, s.m_b);
        let mut current_val = identity;
        let mut improved = true;
        let mut sweeps = 0;
        while improved && sweeps < 32 {
            improved = false;
            sweeps += 1;
            for cell in 0..cells {
                let options: Vec<(f64, f64, usize, f64)> = grid
                    .offsets
                    .par_iter()
                    .map(|&o| {
                        let mut c = current.clone();
                        c[(cell / s.m_b, cell % s.m_b)] = o;
                        let (t, v, e) = line(&c);
                        (v, t, e, o)
                    })
                    .collect();
                for (v, t, e, o) in options {
                    evaluations += e;
                    if v < current_val - 1e-12 {
                        current_val = v;
                        current[(cell / s.m_b, cell % s.m_b)] = o;
                        improved = true;
                        if v < best.0 {
                            best = (v, current.clone(), t);
                        }
                    }
                }
            }
        }
    }

    let form = form_from(best.1, best.2, s);
    let bound = tsirelson_bound_via(&form, g)?.min(identity);
    Ok(SearchResult { bound, form, evaluations })
}

fn offsets_for(mut idx: usize, s: Scenario, values: &[f64]) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(s.m_a, s.m_b);
    for cell in 0..s.m_a * s.m_b {
        c[(cell / s.m_b, cell % s.m_b)] = values[idx % values.len()];
        idx /= values.len();
    }
    c
}

/// Relative cutoff below which singular values are treated as zero.
pub const RANK_TOL: f64 = 1e-12;

/// `G = U_r V_rᵀ` from the reduced SVD of `p`, so `<P, G> = ‖P‖₁` and `‖G‖_∞ = 1`.
pub fn extremal_matrix(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dec = svd(p)?;
    let top = dec.singular_values.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Err(Error::OutOfRange("extremal expression of the zero matrix is undefined".into()));
    }
    let rank = dec.singular_values.iter().take_while(|&&s| s > RANK_TOL * top).count();
    let u = dec.u.columns(0, rank);
    let v_t = dec.v_t.rows(0, rank);
    Ok(u * v_t)
}

pub fn extremal_bell_from(p: &BehaviourMatrix) -> Result<BellExpression> {
    BellExpression::new(p.scenario, extremal_matrix(&p.data)?, None)
}

/// The named expressions shipped with the crate.
#[derive(Debug, Clone)]
pub struct Catalog {
    /// CHSH: blocks `G_11 = G_12 = G_21 = −G_22 = [[1, −1], [−1, 1]]`.
    pub chsh: BellExpression,
    /// `½ diag(J₂, J₂) + G_CHSH/(2√2)`, with unit spectral norm.
    pub chsh_shifted: BellExpression,
    /// `(22 33)` expression maximized in the quantum set by the qutrit
    /// maximally entangled behaviour.
    pub phi3: BellExpression,
}

impl Catalog {
    pub const NAMES: [&'static str; 3] = ["g_chsh", "g_chsh_shifted", "g_phi3"];

    pub fn by_name(&self, name: &str) -> Option<&BellExpression> {
        match name {
            "g_chsh" => Some(&self.chsh),
            "g_chsh_shifted" => Some(&self.chsh_shifted),
            "g_phi3" => Some(&self.phi3),
            _ => None,
        }
    }

    /// CHSH offsets and scale that turn `G_CHSH` into `G'_CHSH`.
    pub fn chsh_shift_form() -> AffineForm {
        AffineForm {
            block_offsets: DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]),
            scale: 1.0 / (2.0 * std::f64::consts::SQRT_2),
        }
    }
}

pub fn catalog() -> Catalog {
    let s2 = Scenario { m_a: 2, m_b: 2, d_a: 2, d_b: 2 };
    let h = [[1.0, -1.0], [-1.0, 1.0]];
    let chsh_m = DMatrix::from_fn(4, 4, |r, c| {
        let sign = if r >= 2 && c >= 2 { -1.0 } else { 1.0 };
        sign * h[r % 2][c % 2]
    });
    let chsh = BellExpression { scenario: s2, g: chsh_m, name: Some("g_chsh".into()) };
    let chsh_shifted = affine_apply(&chsh, &Catalog::chsh_shift_form())
        .expect("CHSH shift form is valid")
        .named("g_chsh_shifted");

    let r3 = 3f64.sqrt();
    let p = (2.0 + r3) / 6.0;
    let q = (2.0 - r3) / 6.0;
    let n = -1.0 / 6.0;
    // Bob's input blocks appear exchanged relative to the labelling of the
    // maximally entangled family, so columns 1-3 and 4-6 are swapped here.
    let rows = [
        [p, q, n, p, n, q],
        [n, p, q, q, p, n],
        [q, n, p, n, q, p],
        [p, n, q, n, p, q],
        [q, p, n, q, n, p],
        [n, q, p, p, q, n],
    ];
    let phi3_m = DMatrix::from_fn(6, 6, |r, c| rows[r][(c + 3) % 6]);
    let phi3 = BellExpression {
        scenario: Scenario { m_a: 2, m_b: 2, d_a: 3, d_b: 3 },
        g: phi3_m,
        name: Some("g_phi3".into()),
    };
    Catalog { chsh, chsh_shifted, phi3 }
}
