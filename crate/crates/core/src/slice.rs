//! Two-parameter slices `q·P1 + p·P2 + (1 − p − q)·base` through behaviour
//! space, evaluated on a grid, with the verdict boundary extracted by marching
//! squares.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::bell::{evaluate, BellExpression};
use crate::conditions::{check_corr_norm, check_thm1, check_thm2, check_thm8, ConditionId};
use crate::error::{Error, Result};
use crate::generators::{mix, Combination};
use crate::model::{validate, Behaviour};

#[derive(Debug, Clone)]
pub enum SliceCondition {
    /// One of the behaviour-only checks: THM1, THM2, CORR_NORM or THM8.
    Check(ConditionId),
    /// `<P, G> ≤ threshold`.
    Expression { g: BellExpression, threshold: f64 },
    /// Bound `+∞`: every point satisfied.
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct SliceSpec {
    pub p1: Behaviour,
    pub p2: Behaviour,
    pub base: Behaviour,
    pub q_range: (f64, f64),
    pub p_range: (f64, f64),
    /// Grid points along `q` and along `p`, each at least 2.
    pub resolution: (usize, usize),
    pub condition: SliceCondition,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub q: f64,
    pub p: f64,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub satisfied: bool,
    /// Nonnegativity holds, i.e. the point lies in the no-signaling polytope.
    pub in_polytope: bool,
}

/// Grid edge between point `(i, j)` and its neighbour along `q` (`i + 1`) or
/// along `p` (`j + 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edge {
    AlongQ(usize, usize),
    AlongP(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub edge: Edge,
    pub q: f64,
    pub p: f64,
}

#[derive(Debug, Clone)]
pub struct SliceResult {
    pub q_values: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Row-major: index `i * p_values.len() + j` for `(q_i, p_j)`.
    pub points: Vec<GridPoint>,
    /// Every grid edge whose endpoints disagree, sorted by edge.
    pub crossings: Vec<Crossing>,
    pub polylines: Vec<Vec<(f64, f64)>>,
}

impl SliceResult {
    pub fn point(&self, i: usize, j: usize) -> &GridPoint {
        &self.points[i * self.p_values.len() + j]
    }
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    (0..n).map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64).collect()
}

fn evaluate_point(spec: &SliceSpec, q: f64, p: f64) -> Result<GridPoint> {
    let b = mix(
        &[q, p, 1.0 - p - q],
        &[spec.p1.clone(), spec.p2.clone(), spec.base.clone()],
        Combination::Affine,
    )?;
    let in_polytope = validate(&b, spec.tol).is_valid();
    let (measured, bound) = match &spec.condition {
        SliceCondition::Check(id) => {
            let r = match id {
                ConditionId::Thm1 => check_thm1(&b, spec.tol)?,
                ConditionId::Thm2 => check_thm2(&b, spec.tol)?,
                ConditionId::CorrNorm => check_corr_norm(&b, spec.tol)?,
                ConditionId::Thm8 => check_thm8(&b, spec.tol)?,
                other => {
                    return Err(Error::Unsupported(format!(
                        "{other} needs an expression; use SliceCondition::Expression"
                    )))
                }
            };
            (r.measured, r.bound)
        }
        SliceCondition::Expression { g, threshold } => (evaluate(g, &b)?, *threshold),
        SliceCondition::Unbounded => (0.0, f64::INFINITY),
    };
    let margin = bound - measured;
    Ok(GridPoint { q, p, measured, bound, margin, satisfied: margin >= -spec.tol, in_polytope })
}

pub fn scan_slice(spec: &SliceSpec) -> Result<SliceResult> {
    let s = spec.p1.scenario();
    if spec.p2.scenario() != s || spec.base.scenario() != s {
        return Err(Error::Shape(format!(
            "slice behaviours live in {}, {} and {}",
            s,
            spec.p2.scenario(),
            spec.base.scenario()
        )));
    }
    let (nq, np) = spec.resolution;
    if nq < 2 || np < 2 {
        return Err(Error::OutOfRange(format!("resolution must be at least 2x2, got {nq}x{np}")));
    }
    let q_values = linspace(spec.q_range, nq);
    let p_values = linspace(spec.p_range, np);

    let rows: Vec<Vec<GridPoint>> = q_values
        .par_iter()
        .map(|&q| p_values.iter().map(|&p| evaluate_point(spec, q, p)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let points: Vec<GridPoint> = rows.into_iter().flatten().collect();

    let mut result = SliceResult { q_values, p_values, points, crossings: Vec::new(), polylines: Vec::new() };
    let (crossings, polylines) = extract_boundary(&result);
    result.crossings = crossings;
    result.polylines = polylines;
    Ok(result)
}

fn interpolate(a: &GridPoint, b: &GridPoint) -> (f64, f64) {
    let t = if a.margin.is_finite() && b.margin.is_finite() && a.margin != b.margin {
        (a.margin / (a.margin - b.margin)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    (a.q + t * (b.q - a.q), a.p + t * (b.p - a.p))
}

fn extract_boundary(r: &SliceResult) -> (Vec<Crossing>, Vec<Vec<(f64, f64)>>) {
    let (nq, np) = (r.q_values.len(), r.p_values.len());
    let mut crossing_at: HashMap<Edge, (f64, f64)> = HashMap::new();
    let mut crossings = Vec::new();
    let mut probe = |edge: Edge, a: &GridPoint, b: &GridPoint| {
        if a.satisfied != b.satisfied {
            let (q, p) = interpolate(a, b);
            crossing_at.insert(edge, (q, p));
            crossings.push(Crossing { edge, q, p });
        }
    };
    for i in 0..nq {
        for j in 0..np {
            if i + 1 < nq {
                probe(Edge::AlongQ(i, j), r.point(i, j), r.point(i + 1, j));
            }
            if j + 1 < np {
                probe(Edge::AlongP(i, j), r.point(i, j), r.point(i, j + 1));
            }
        }
    }
    crossings.sort_by_key(|c| c.edge);

    // marching squares: each cell contributes 0, 1 or 2 segments joining crossed edges
    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..nq.saturating_sub(1) {
        for j in 0..np.saturating_sub(1) {
            // counter-clockwise around the cell starting at (i, j)
            let ring = [Edge::AlongP(i, j), Edge::AlongQ(i, j + 1), Edge::AlongP(i + 1, j), Edge::AlongQ(i, j)];
            let cut: Vec<Edge> = ring.iter().copied().filter(|e| crossing_at.contains_key(e)).collect();
            match cut.len() {
                2 => segments.push((cut[0], cut[1])),
                4 => {
                    let centre = [r.point(i, j), r.point(i + 1, j), r.point(i, j + 1), r.point(i + 1, j + 1)]
                        .iter()
                        .map(|g| g.margin)
                        .sum::<f64>()
                        / 4.0;
                    let corner_ok = r.point(i, j).satisfied;
                    // join the edges so that the centre falls on its own side
                    if (centre >= 0.0) == corner_ok {
                        segments.push((ring[0], ring[1]));
                        segments.push((ring[2], ring[3]));
                    } else {
                        segments.push((ring[3], ring[0]));
                        segments.push((ring[1], ring[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut adjacency: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(k);
        adjacency.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    // open chains first (start at an endpoint of degree 1), then closed loops
    let mut starts: Vec<Edge> = adjacency.iter().filter(|(_, v)| v.len() == 1).map(|(e, _)| *e).collect();
    starts.sort();
    let mut loop_starts: Vec<Edge> = segments.iter().map(|s| s.0).collect();
    loop_starts.sort();
    for start in starts.into_iter().chain(loop_starts) {
        let mut chain = vec![start];
        let mut here = start;
        while let Some(&k) = adjacency[&here].iter().find(|&&k| !used[k]) {
            used[k] = true;
            let (a, b) = segments[k];
            here = if a == here { b } else { a };
            chain.push(here);
        }
        if chain.len() > 1 {
            polylines.push(chain.iter().map(|e| crossing_at[e]).collect());
        }
    }
    (crossings, polylines)
}
