//! Acceptance run: one `[PASS]`/`[FAIL]` line per criterion, exit status 1 if
//! any criterion fails.

use std::f64::consts::SQRT_2;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bellcone_core::bell::{
    catalog, evaluate, extremal_bell_from, extremal_matrix, local_bound, tsirelson_bound_via, BellExpression,
    Catalog,
};
use bellcone_core::closed_forms::{pd_block_eigs, pd_singular_values, s_theta_closed, s_theta_direct};
use bellcone_core::conditions::{
    bound_ineq4, check_corr_norm, check_thm1, check_thm2, check_thm8, dual_certificate_ineq2,
    dual_certificate_ineq4, prop7_witness, ConditionId,
};
use bellcone_core::generators::{
    enumerate_ldbs, fully_mixed, isotropic, ldb, max_ent_behaviour, pr_box, pr_box_mm22_lift,
    random_ns_mixture, LdbAssignment,
};
use bellcone_core::model::{correlators, matrix_p, validate, Behaviour, Scenario};
use bellcone_core::numlin::{
    circulant_eigenvalues, frobenius_inner, frobenius_norm, singular_values, spectral_norm, trace_norm,
};
use bellcone_core::slice::{scan_slice, Edge, SliceCondition, SliceSpec};

type Outcome = Result<String, String>;
type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> AnyResult<Outcome>);

fn run(outcome: AnyResult<Outcome>) -> Outcome {
    outcome.unwrap_or_else(|e| Err(format!("error: {e}")))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn scenario(ma: usize, mb: usize, da: usize, db: usize) -> Scenario {
    Scenario::new(ma, mb, da, db).expect("valid scenario")
}

fn ac1() -> AnyResult<Outcome> {
    let mut worst = 0.0f64;
    let mut count = 0;
    for s in [scenario(2, 2, 2, 2), scenario(3, 3, 2, 2), scenario(2, 2, 3, 3)] {
        for (_, b) in enumerate_ldbs(s) {
            let err = (trace_norm(&matrix_p(&b).data)? - s.sqrt_inputs()).abs();
            worst = worst.max(err);
            count += 1;
        }
    }
    let msg = format!("{count} LDBs, max |‖P‖₁ − √(m_a m_b)| = {worst:.2e}");
    Ok(if worst <= 1e-9 { Ok(msg) } else { Err(msg) })
}

fn ac2() -> AnyResult<Outcome> {
    let n = trace_norm(&matrix_p(&pr_box(2)?).data)?;
    let msg = format!("‖P_PR‖₁ = {n:.15}");
    Ok(if close(n, 1.0 + SQRT_2, 1e-9) { Ok(msg) } else { Err(msg) })
}

fn ac3() -> AnyResult<Outcome> {
    let (lo, hi) = (5f64.sqrt(), 2.0 * SQRT_2);
    let mut norms = Vec::new();
    let mut failures = Vec::new();
    for d in 2..=32 {
        let p = matrix_p(&pr_box(d)?).data;
        let n = trace_norm(&p)?;
        let f = frobenius_norm(&p)?;
        if n < lo - 1e-9 || n > hi + 1e-9 {
            failures.push(format!("d={d}: ‖P‖₁={n}"));
        }
        if !close(f, 2.0 / (d as f64).sqrt(), 1e-9) {
            failures.push(format!("d={d}: ‖P‖₂={f}"));
        }
        norms.push(n);
    }
    let above = norms.iter().all(|&n| n >= 1.0 + SQRT_2 - 1e-9);
    let increasing = norms.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    println!(
        "[INFO] AC-3 exploratory: ‖P_PR(2,d)‖₁ at d=32 is {:.6}; ≥ 1+√2 for all d: {above}; increasing in d: {increasing}",
        norms[norms.len() - 1]
    );
    if failures.is_empty() {
        Ok(Ok("d=2..32 within [√5, 2√2], Frobenius 2/√d".into()))
    } else {
        Ok(Err(failures.join("; ")))
    }
}

fn ac4() -> AnyResult<Outcome> {
    let mut failures = Vec::new();
    let mut min_gap = f64::INFINITY;
    for d in 2..=8 {
        let gap = trace_norm(&matrix_p(&pr_box(d)?).data)? - 2.0;
        min_gap = min_gap.min(gap);
        if gap < 5f64.sqrt() - 2.0 - 1e-9 {
            failures.push(format!("PR(2,{d}) gap {gap}"));
        }
    }
    for m in 2..=6 {
        let n = trace_norm(&matrix_p(&pr_box_mm22_lift(m)?).data)?;
        if n < m as f64 + SQRT_2 - 1.0 - 1e-9 {
            failures.push(format!("lift m={m}: ‖P‖₁={n}"));
        }
    }
    if failures.is_empty() {
        Ok(Ok(format!("min PR(2,d) gap {min_gap:.6} ≥ √5−2; lifts m=2..6 ≥ m+√2−1")))
    } else {
        Ok(Err(failures.join("; ")))
    }
}

fn ac5() -> AnyResult<Outcome> {
    let mut failures = Vec::new();
    for d in 2..=50 {
        let b = max_ent_behaviour(d)?;
        let p = matrix_p(&b).data;
        let numeric = singular_values(&p, 1e-10)?;
        if !close(numeric.sum(), 2.0, 1e-8) {
            failures.push(format!("d={d}: ‖P‖₁={}", numeric.sum()));
        }
        let closed = pd_singular_values(d)?.sorted_values();
        let dev = closed.iter().zip(&numeric.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if dev > 1e-8 {
            failures.push(format!("d={d}: σ multiset deviation {dev:.2e}"));
        }
        let normality = (&p * p.transpose() - p.transpose() * &p).amax();
        if normality > 1e-9 {
            failures.push(format!("d={d}: normality residual {normality:.2e}"));
        }
        let m = b.marginals();
        let marg = m.p_a.iter().chain(m.p_b.iter()).map(|v| (v - 1.0 / d as f64).abs()).fold(0.0, f64::max);
        if marg > 1e-10 {
            failures.push(format!("d={d}: marginal deviation {marg:.2e}"));
        }
    }
    if failures.is_empty() {
        Ok(Ok("d=2..50: ‖P_d‖₁ = 2, σ multiset, normality and uniform marginals".into()))
    } else {
        Ok(Err(failures.join("; ")))
    }
}

fn ac6() -> AnyResult<Outcome> {
    let mut worst_sum = 0.0f64;
    for theta in [0.25, -0.25, 0.75, 0.37] {
        for d in 1..=64 {
            for j in 0..d {
                let dev = (s_theta_closed(theta, j, d)? - s_theta_direct(theta, j, d)?).norm();
                worst_sum = worst_sum.max(dev / (d * d) as f64);
            }
        }
    }
    let mut worst_eig = 0.0f64;
    for d in 2..=50 {
        let p = matrix_p(&max_ent_behaviour(d)?).data;
        let closed = pd_block_eigs(d)?;
        // blocks: A = P_11, B = P_12, C = P_21, each indexed by rows a, columns b
        for (numeric_block, closed_eigs) in [((0, 0), &closed.a), ((0, d), &closed.b), ((d, 0), &closed.c)] {
            let row: Vec<f64> = (0..d).map(|k| p[(numeric_block.0, numeric_block.1 + k)]).collect();
            let numeric = circulant_eigenvalues(&row)?;
            for (u, v) in numeric.iter().zip(closed_eigs.iter()) {
                worst_eig = worst_eig.max((u - v).norm());
            }
        }
    }
    let msg = format!("max |closed − direct|/d² = {worst_sum:.2e}; max block-eigenvalue deviation {worst_eig:.2e}");
    Ok(if worst_sum <= 1e-8 && worst_eig <= 1e-9 { Ok(msg) } else { Err(msg) })
}

fn ac7() -> AnyResult<Outcome> {
    let cat = catalog();
    let local = local_bound(&cat.chsh)?;
    let n = spectral_norm(&cat.chsh.g)?;
    let n_shift = spectral_norm(&cat.chsh_shifted.g)?;
    let via = tsirelson_bound_via(&Catalog::chsh_shift_form(), &cat.chsh)?;
    let cert = dual_certificate_ineq2(&cat.chsh_shifted)?;
    let checks = [
        (local == 2.0, format!("local bound {local}")),
        (close(n, 2.0, 1e-10), format!("‖G_CHSH‖_∞ = {n:.12} (expected 2)")),
        (close(n_shift, 1.0, 1e-10), format!("‖G′_CHSH‖_∞ = {n_shift:.12}")),
        (close(via, 2.0 * SQRT_2, 1e-9), format!("Tsirelson via shift {via:.12}")),
        (cert.min_eig >= -1e-9, format!("certificate min_eig {:.2e}", cert.min_eig)),
    ];
    let msg = checks.iter().map(|(_, m)| m.as_str()).collect::<Vec<_>>().join("; ");
    Ok(if checks.iter().all(|(ok, _)| *ok) { Ok(msg) } else { Err(msg) })
}

fn ac8() -> AnyResult<Outcome> {
    let cat = catalog();
    let value = evaluate(&cat.phi3, &max_ent_behaviour(3)?)?;
    let local = local_bound(&cat.phi3)?;
    let want = (3.0 * 3f64.sqrt() + 5.0) / 6.0;
    let msg = format!("<P_3, G> = {value:.12}; local bound {local:.12}");
    Ok(if close(value, 2.0, 1e-9) && close(local, want, 1e-9) { Ok(msg) } else { Err(msg) })
}

fn ac9() -> AnyResult<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_value = 0.0f64;
    let mut worst_norm = 0.0f64;
    for _ in 0..100 {
        let (r, c) = (rng.gen_range(1..=9), rng.gen_range(1..=9));
        let m = DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0));
        let g = extremal_matrix(&m)?;
        worst_value = worst_value.max((frobenius_inner(&m, &g)? - trace_norm(&m)?).abs());
        worst_norm = worst_norm.max(spectral_norm(&g)?);
    }
    for d in 2..=10 {
        let p = matrix_p(&max_ent_behaviour(d)?);
        let g = extremal_bell_from(&p)?;
        worst_value = worst_value.max((frobenius_inner(&p.data, &g.g)? - trace_norm(&p.data)?).abs());
        worst_norm = worst_norm.max(spectral_norm(&g.g)?);
    }
    let msg = format!("max |<P,G> − ‖P‖₁| = {worst_value:.2e}; max ‖G‖_∞ = {worst_norm:.12}");
    Ok(if worst_value <= 1e-9 && worst_norm <= 1.0 + 1e-10 { Ok(msg) } else { Err(msg) })
}

fn ac10() -> AnyResult<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_eig = f64::INFINITY;
    let mut worst_obj = 0.0f64;
    let mut worst_centered = 0.0f64;
    for _ in 0..200 {
        let s = scenario(rng.gen_range(2..=3), rng.gen_range(2..=3), rng.gen_range(2..=3), rng.gen_range(2..=3));
        let g = DMatrix::from_fn(s.n_a(), s.n_b(), |_, _| rng.gen_range(-1.0..1.0));
        let g = BellExpression::new(s, g, None)?;
        let plain = dual_certificate_ineq2(&g)?;
        let b = random_ns_mixture(s, rng.gen_range(1..=4), &mut rng)?;
        let centered = dual_certificate_ineq4(&b, &g)?;
        let rhs4 = bound_ineq4(&b, &g, 1e-9)?.bound;
        let want = spectral_norm(&g.g)? * s.sqrt_inputs();
        worst_eig = worst_eig.min(plain.min_eig).min(centered.min_eig);
        worst_obj = worst_obj.max((plain.objective - want).abs());
        worst_centered = worst_centered.max((centered.objective - rhs4).abs());
    }
    let msg = format!(
        "min eigenvalue {worst_eig:.2e}; max objective error {worst_obj:.2e}; centered objective vs bound {worst_centered:.2e}"
    );
    Ok(if worst_eig >= -1e-9 && worst_obj <= 1e-9 && worst_centered <= 1e-9 { Ok(msg) } else { Err(msg) })
}

fn ac11() -> AnyResult<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::INFINITY;
    let mut implication_cases = 0;
    let mut falsified = 0;
    for k in 0..1000 {
        let m = if k % 2 == 0 { 2 } else { 3 };
        let s = scenario(m, m, 2, 2);
        let b = random_ns_mixture(s, rng.gen_range(1..=5), &mut rng)?;
        let w = prop7_witness(&b)?;
        worst = worst.min(w.lhs - w.rhs);
        let c_norm = trace_norm(&correlators(&b)?.c)?;
        // ties such as ‖C‖₁ = √(m_a m_b) for LDBs land on either side by an ulp
        if c_norm > s.sqrt_inputs() + 1e-9 {
            implication_cases += 1;
            if w.lhs <= s.sqrt_inputs() {
                falsified += 1;
            }
        }
    }
    let msg = format!(
        "min ‖P‖₁ − (√(mm)+‖C‖₁)/2 = {worst:.3e}; implication premise held {implication_cases} times, falsified {falsified}"
    );
    Ok(if worst >= -1e-9 && falsified == 0 { Ok(msg) } else { Err(msg) })
}

fn ac12() -> AnyResult<Outcome> {
    let norm_at = |v: f64| -> AnyResult<f64> { Ok(trace_norm(&matrix_p(&isotropic(2, v)?).data)?) };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid)? > 2.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let v = 0.5 * (lo + hi);

    let s = scenario(2, 2, 2, 2);
    let spec = SliceSpec {
        p1: pr_box(2)?,
        p2: ldb(s, &LdbAssignment::constant(s, 0, 0))?,
        base: fully_mixed(s)?,
        q_range: (0.0, 1.0),
        p_range: (0.0, 1.0),
        resolution: (200, 200),
        condition: SliceCondition::Check(ConditionId::Thm1),
        tol: 1e-9,
    };
    let r = scan_slice(&spec)?;
    let cell = r.q_values[1] - r.q_values[0];
    let on_axis: Vec<f64> =
        r.crossings.iter().filter(|c| matches!(c.edge, Edge::AlongQ(_, 0))).map(|c| c.q).collect();
    let hit = on_axis.iter().any(|q| (q - 1.0 / SQRT_2).abs() <= cell);
    let msg = format!(
        "bisection v = {v:.10} (1/√2 = {:.10}); slice crossings on p=0: {on_axis:?}, cell {cell:.4}",
        1.0 / SQRT_2
    );
    Ok(if close(v, 1.0 / SQRT_2, 1e-6) && hit && on_axis.len() == 1 { Ok(msg) } else { Err(msg) })
}

fn ac13() -> AnyResult<Outcome> {
    let mut cases: Vec<(String, Behaviour)> = Vec::new();
    for d in 2..=10 {
        cases.push((format!("P_{d}"), max_ent_behaviour(d)?));
    }
    for v in [0.0, 0.3, 1.0 / SQRT_2] {
        cases.push((format!("isotropic v={v:.4}"), isotropic(2, v)?));
    }
    let mut failures = Vec::new();
    let mut checked = 0;
    for (name, b) in &cases {
        if !validate(b, 1e-9).is_valid() {
            failures.push(format!("{name}: not a valid behaviour"));
        }
        let mut reports = vec![check_thm1(b, 1e-9)?, check_thm2(b, 1e-9)?];
        if b.scenario().is_two_outcome() {
            reports.push(check_corr_norm(b, 1e-9)?);
            reports.push(check_thm8(b, 1e-9)?);
        }
        for r in reports {
            checked += 1;
            if !r.satisfied {
                failures.push(format!("{name}: {} margin {:.3e}", r.condition, r.margin));
            }
        }
    }
    if failures.is_empty() {
        Ok(Ok(format!("{checked} checks over {} behaviours satisfied", cases.len())))
    } else {
        Ok(Err(failures.join("; ")))
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let criteria: [Criterion; 13] = [
        ("LDB trace norms", ac1),
        ("PR(2,2) trace norm", ac2),
        ("PR(2,d) bounds", ac3),
        ("PR trace-norm gaps", ac4),
        ("maximally entangled spectra", ac5),
        ("summation formulas", ac6),
        ("CHSH pipeline", ac7),
        ("G(Φ₃⁺) values", ac8),
        ("extremal construction", ac9),
        ("dual certificates", ac10),
        ("correlator lower bound", ac11),
        ("isotropic CHSH boundary", ac12),
        ("quantum-side sanity", ac13),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        match run(f()) {
            Ok(msg) => println!("[PASS] AC-{} {name}: {msg} ({:.2}s)", k + 1, t.elapsed().as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] AC-{} {name}: {msg} ({:.2}s)", k + 1, t.elapsed().as_secs_f64())
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
