//! Behaviour families: local deterministic boxes, PR boxes, the maximally
//! entangled family, mixtures and relabelings.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Behaviour, Scenario};

/// Output functions `f: x ↦ a` and `g: y ↦ b` (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LdbAssignment {
    pub f: Vec<usize>,
    pub g: Vec<usize>,
}

impl LdbAssignment {
    pub fn constant(s: Scenario, a: usize, b: usize) -> Self {
        LdbAssignment { f: vec![a; s.m_a], g: vec![b; s.m_b] }
    }

    fn check(&self, s: Scenario) -> Result<()> {
        if self.f.len() != s.m_a || self.g.len() != s.m_b {
            return Err(Error::Shape(format!(
                "assignment covers {}x{} inputs, scenario has {}x{}",
                self.f.len(),
                self.g.len(),
                s.m_a,
                s.m_b
            )));
        }
        if let Some(x) = self.f.iter().position(|&a| a >= s.d_a) {
            return Err(Error::OutOfRange(format!("f({}) = {} > d_A", x + 1, self.f[x] + 1)));
        }
        if let Some(y) = self.g.iter().position(|&b| b >= s.d_b) {
            return Err(Error::OutOfRange(format!("g({}) = {} > d_B", y + 1, self.g[y] + 1)));
        }
        Ok(())
    }
}

/// `D(ab|xy) = δ_{a,f(x)} δ_{b,g(y)}`.
pub fn ldb(s: Scenario, asg: &LdbAssignment) -> Result<Behaviour> {
    s.check()?;
    asg.check(s)?;
    Behaviour::from_fn(s, |x, y, a, b| if asg.f[x] == a && asg.g[y] == b { 1.0 } else { 0.0 })
}

/// Number of local deterministic boxes, `d_A^{m_A} d_B^{m_B}`, saturating.
pub fn ldb_count(s: Scenario) -> u128 {
    let pow = |base: usize, exp: usize| -> u128 {
        (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
    };
    pow(s.d_a, s.m_a).saturating_mul(pow(s.d_b, s.m_b))
}

/// Mixed-radix decoding of an LDB index; Alice's digits are the slow ones.
pub fn ldb_assignment(s: Scenario, mut index: u128) -> LdbAssignment {
    let mut g = vec![0; s.m_b];
    for slot in g.iter_mut().rev() {
        *slot = (index % s.d_b as u128) as usize;
        index /= s.d_b as u128;
    }
    let mut f = vec![0; s.m_a];
    for slot in f.iter_mut().rev() {
        *slot = (index % s.d_a as u128) as usize;
        index /= s.d_a as u128;
    }
    LdbAssignment { f, g }
}

/// Restartable enumeration of all LDBs. `with_range` lets workers take
/// disjoint index ranges.
#[derive(Debug, Clone)]
pub struct LdbIter {
    scenario: Scenario,
    next: u128,
    end: u128,
}

impl LdbIter {
    pub fn with_range(scenario: Scenario, start: u128, end: u128) -> Self {
        let end = end.min(ldb_count(scenario));
        LdbIter { scenario, next: start.min(end), end }
    }
}

impl Iterator for LdbIter {
    type Item = (LdbAssignment, Behaviour);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let asg = ldb_assignment(self.scenario, self.next);
        self.next += 1;
        let b = ldb(self.scenario, &asg).expect("decoded assignment is in range");
        Some((asg, b))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next).min(usize::MAX as u128) as usize;
        (n, Some(n))
    }

    fn nth(&mut self, n: usize) -> Option<Self::Item> {
        self.next = self.next.saturating_add(n as u128).min(self.end);
        self.next()
    }
}

impl ExactSizeIterator for LdbIter {}

pub fn enumerate_ldbs(s: Scenario) -> LdbIter {
    LdbIter::with_range(s, 0, u128::MAX)
}

/// The two-input PR box with `d` effective outputs, zero-padded to the
/// scenario's alphabets. `A_d` has `(a, b) = 1` iff `a = (b mod d) + 1` in
/// 1-based labels.
pub fn pr_box_2d(d: usize, s: Scenario) -> Result<Behaviour> {
    s.check()?;
    if s.m_a != 2 || s.m_b != 2 {
        return Err(Error::Unsupported(format!("PR(2,d) needs two inputs per party, got {s}")));
    }
    if d < 2 || d > s.d_a.min(s.d_b) {
        return Err(Error::OutOfRange(format!("PR(2,d) needs 2 <= d <= min(dA,dB), got d={d} in {s}")));
    }
    let w = 1.0 / d as f64;
    Behaviour::from_fn(s, |x, y, a, b| {
        if a >= d || b >= d {
            return 0.0;
        }
        let hit = if x == 1 && y == 1 { a == (b + 1) % d } else { a == b };
        if hit { w } else { 0.0 }
    })
}

/// PR(2,d) in its minimal scenario `(22dd)`.
pub fn pr_box(d: usize) -> Result<Behaviour> {
    pr_box_2d(d, Scenario::new(2, 2, d.max(1), d.max(1))?)
}

/// `(mm22)` box: inputs 1 and 2 on both sides realize PR(2,2); every further
/// input deterministically outputs 1.
pub fn pr_box_mm22_lift(m: usize) -> Result<Behaviour> {
    if m < 2 {
        return Err(Error::OutOfRange(format!("lifted PR box needs m >= 2, got {m}")));
    }
    let s = Scenario::new(m, m, 2, 2)?;
    Behaviour::from_fn(s, |x, y, a, b| match (x < 2, y < 2) {
        (true, true) => {
            let hit = if x == 1 && y == 1 { a != b } else { a == b };
            if hit { 0.5 } else { 0.0 }
        }
        (true, false) => if b == 0 { 0.5 } else { 0.0 },
        (false, true) => if a == 0 { 0.5 } else { 0.0 },
        (false, false) => if a == 0 && b == 0 { 1.0 } else { 0.0 },
    })
}

/// `(22dd)` behaviour of the maximally entangled state `|Φ⁺_d⟩`:
/// `P_d(ab|xy) = 1 / (2 d³ sin²[π(a − b + α(x) + β(y))/d])` with
/// `α = (0, 1/2)` and `β = (1/4, −1/4)`.
pub fn max_ent_behaviour(d: usize) -> Result<Behaviour> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("maximally entangled family needs d >= 2, got {d}")));
    }
    const ALPHA: [f64; 2] = [0.0, 0.5];
    const BETA: [f64; 2] = [0.25, -0.25];
    let df = d as f64;
    let s = Scenario::new(2, 2, d, d)?;
    Behaviour::from_fn(s, |x, y, a, b| {
        let arg = PI * (a as f64 - b as f64 + ALPHA[x] + BETA[y]) / df;
        1.0 / (2.0 * df.powi(3) * arg.sin().powi(2))
    })
}

pub fn fully_mixed(s: Scenario) -> Result<Behaviour> {
    let w = 1.0 / (s.d_a * s.d_b) as f64;
    Behaviour::from_fn(s, |_, _, _, _| w)
}

/// Whether [`mix`] accepts negative weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Combination {
    #[default]
    Convex,
    /// Signed affine combination, for scans that leave the polytope.
    Affine,
}

pub const WEIGHT_SUM_TOL: f64 = 1e-12;

pub fn mix(weights: &[f64], behaviours: &[Behaviour], mode: Combination) -> Result<Behaviour> {
    if weights.is_empty() {
        return Err(Error::Empty("mixture"));
    }
    if weights.len() != behaviours.len() {
        return Err(Error::Weights(format!(
            "{} weights for {} behaviours",
            weights.len(),
            behaviours.len()
        )));
    }
    let s = behaviours[0].scenario();
    if let Some(i) = behaviours.iter().position(|b| b.scenario() != s) {
        return Err(Error::Shape(format!(
            "behaviour {} lives in {}, expected {s}",
            i + 1,
            behaviours[i].scenario()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Weights("non-finite weight".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::Weights(format!("weights sum to {total}, expected 1")));
    }
    if mode == Combination::Convex && weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Weights("negative weight in a convex mixture".into()));
    }
    let mut p = vec![0.0; s.len()];
    for (w, b) in weights.iter().zip(behaviours) {
        for (acc, v) in p.iter_mut().zip(b.as_slice()) {
            *acc += w * v;
        }
    }
    Ok(Behaviour::from_raw(s, p))
}

/// `v·PR(2,d) + (1 − v)·P_n` in `(22dd)`.
pub fn isotropic(d: usize, v: f64) -> Result<Behaviour> {
    let pr = pr_box(d)?;
    let n = fully_mixed(pr.scenario())?;
    let mode = if (0.0..=1.0).contains(&v) { Combination::Convex } else { Combination::Affine };
    mix(&[v, 1.0 - v], &[pr, n], mode)
}

/// Input and output permutations, plus an optional exchange of the parties.
///
/// Applying it maps `P(ab|xy)` to the entry at
/// `(perm_a[x][a], perm_b[y][b] | perm_x[x], perm_y[y])`, then transposes the
/// parties if `swap_parties` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relabeling {
    pub perm_x: Vec<usize>,
    pub perm_y: Vec<usize>,
    pub perm_a: Vec<Vec<usize>>,
    pub perm_b: Vec<Vec<usize>>,
    pub swap_parties: bool,
}

fn is_permutation(p: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    p.len() == n && p.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

impl Relabeling {
    pub fn identity(s: Scenario) -> Self {
        Relabeling {
            perm_x: (0..s.m_a).collect(),
            perm_y: (0..s.m_b).collect(),
            perm_a: vec![(0..s.d_a).collect(); s.m_a],
            perm_b: vec![(0..s.d_b).collect(); s.m_b],
            swap_parties: false,
        }
    }

    /// Uniformly random permutations; parties are swapped with probability 1/2
    /// when the scenario is symmetric.
    pub fn random<R: Rng + ?Sized>(s: Scenario, rng: &mut R) -> Self {
        let mut r = Relabeling::identity(s);
        r.perm_x.shuffle(rng);
        r.perm_y.shuffle(rng);
        r.perm_a.iter_mut().for_each(|p| p.shuffle(rng));
        r.perm_b.iter_mut().for_each(|p| p.shuffle(rng));
        r.swap_parties = s.is_symmetric() && rng.gen_bool(0.5);
        r
    }

    fn check(&self, s: Scenario) -> Result<()> {
        if !is_permutation(&self.perm_x, s.m_a) {
            return Err(Error::Permutation(format!("perm_x {:?}", self.perm_x)));
        }
        if !is_permutation(&self.perm_y, s.m_b) {
            return Err(Error::Permutation(format!("perm_y {:?}", self.perm_y)));
        }
        if self.perm_a.len() != s.m_a || !self.perm_a.iter().all(|p| is_permutation(p, s.d_a)) {
            return Err(Error::Permutation(format!("perm_a {:?}", self.perm_a)));
        }
        if self.perm_b.len() != s.m_b || !self.perm_b.iter().all(|p| is_permutation(p, s.d_b)) {
            return Err(Error::Permutation(format!("perm_b {:?}", self.perm_b)));
        }
        if self.swap_parties && !s.is_symmetric() {
            return Err(Error::Permutation(format!("cannot swap parties in asymmetric scenario {s}")));
        }
        Ok(())
    }
}

pub fn relabel(b: &Behaviour, r: &Relabeling) -> Result<Behaviour> {
    let s = b.scenario();
    r.check(s)?;
    let mut out = vec![0.0; s.len()];
    let idx = |x: usize, y: usize, a: usize, bb: usize| ((x * s.m_b + y) * s.d_a + a) * s.d_b + bb;
    for x in 0..s.m_a {
        for y in 0..s.m_b {
            for a in 0..s.d_a {
                for bb in 0..s.d_b {
                    let (x2, y2) = (r.perm_x[x], r.perm_y[y]);
                    let (a2, b2) = (r.perm_a[x][a], r.perm_b[y][bb]);
                    let slot = if r.swap_parties { idx(y2, x2, b2, a2) } else { idx(x2, y2, a2, b2) };
                    out[slot] = b.get(x, y, a, bb);
                }
            }
        }
    }
    Ok(Behaviour::from_raw(s, out))
}

/// Embeds `b` in a scenario with more outputs; new (highest) outputs get probability 0.
pub fn pad_outputs(b: &Behaviour, new_d_a: usize, new_d_b: usize) -> Result<Behaviour> {
    let s = b.scenario();
    if new_d_a < s.d_a || new_d_b < s.d_b {
        return Err(Error::OutOfRange(format!(
            "cannot pad {s} down to {new_d_a} x {new_d_b} outputs"
        )));
    }
    let t = Scenario::new(s.m_a, s.m_b, new_d_a, new_d_b)?;
    Behaviour::from_fn(t, |x, y, a, bb| if a < s.d_a && bb < s.d_b { b.get(x, y, a, bb) } else { 0.0 })
}

/// A nonlocal no-signaling vertex native to `s`, if the generators know one:
/// lifted PR boxes in `(mm22)`, PR(2, min(d_A, d_B)) in `(22 d_A d_B)`.
pub fn catalog_pr_vertex(s: Scenario) -> Option<Behaviour> {
    if s.is_two_outcome() && s.m_a == s.m_b && s.m_a >= 2 {
        return pr_box_mm22_lift(s.m_a).ok();
    }
    if s.m_a == 2 && s.m_b == 2 && s.d_a.min(s.d_b) >= 2 {
        return pr_box_2d(s.d_a.min(s.d_b), s).ok();
    }
    None
}

/// Random convex mixture of `terms` vertices, each a random LDB or (when
/// available) a randomly relabeled PR vertex. Always no-signaling.
pub fn random_ns_mixture<R: Rng + ?Sized>(s: Scenario, terms: usize, rng: &mut R) -> Result<Behaviour> {
    if terms == 0 {
        return Err(Error::Empty("mixture"));
    }
    let pr = catalog_pr_vertex(s);
    let count = ldb_count(s);
    let mut parts = Vec::with_capacity(terms);
    for _ in 0..terms {
        let vertex = match &pr {
            Some(p) if rng.gen_bool(0.5) => relabel(p, &Relabeling::random(s, rng))?,
            _ => {
                let idx = rng.gen_range(0..count.min(u64::MAX as u128) as u64) as u128;
                ldb(s, &ldb_assignment(s, idx))?
            }
        };
        parts.push(vertex);
    }
    let raw: Vec<f64> = (0..terms).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    // absorb rounding so the sum check cannot trip
    let drift: f64 = 1.0 - weights.iter().sum::<f64>();
    weights[0] += drift;
    mix(&weights, &parts, Combination::Affine)
}
