use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use proptest::prelude::*;

use bellcone_core::numlin::{
    circulant_eigenvalues, circulant_from_first_row, frobenius_norm, pinching_lower_bound, spectral_norm,
    trace_norm,
};

fn matrix(max_dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        prop::collection::vec(-1.0f64..1.0, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
    })
}

fn square(max_dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_dim).prop_flat_map(|n| prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v)))
}

/// Splits `n` into `k` positive parts using cut points drawn from `cuts`.
fn split(n: usize, k: usize, cuts: &[usize]) -> Vec<usize> {
    let mut points: Vec<usize> = cuts.iter().map(|c| 1 + c % (n - 1).max(1)).collect();
    points.sort();
    points.dedup();
    points.truncate(k - 1);
    let mut sizes = Vec::new();
    let mut prev = 0;
    for p in points.into_iter().chain(std::iter::once(n)) {
        if p > prev {
            sizes.push(p - prev);
            prev = p;
        }
    }
    sizes
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pinching_never_exceeds_trace_norm(m in matrix(12), k in 1usize..5, cuts in prop::collection::vec(0usize..100, 4)) {
        let kk = k.min(m.nrows()).min(m.ncols());
        let rows = split(m.nrows(), kk, &cuts);
        let cols = split(m.ncols(), kk, &cuts[1..]);
        let kk = rows.len().min(cols.len());
        // merge any surplus blocks into the last one so both partitions have kk parts
        let fold = |mut v: Vec<usize>| { while v.len() > kk { let t = v.pop().unwrap(); *v.last_mut().unwrap() += t; } v };
        let (rows, cols) = (fold(rows), fold(cols));
        let bound = pinching_lower_bound(&m, &rows, &cols).unwrap();
        prop_assert!(bound <= trace_norm(&m).unwrap() + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn norms_invariant_under_permutations(m in matrix(10), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rp: Vec<usize> = (0..m.nrows()).collect();
        let mut cp: Vec<usize> = (0..m.ncols()).collect();
        rp.shuffle(&mut rng);
        cp.shuffle(&mut rng);
        let p = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(rp[r], cp[c])]);
        prop_assert!((trace_norm(&m).unwrap() - trace_norm(&p).unwrap()).abs() <= 1e-10);
        prop_assert!((spectral_norm(&m).unwrap() - spectral_norm(&p).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn triangle_inequality_and_convexity(
        (a, b) in (1usize..9, 1usize..9).prop_flat_map(|(r, c)| (
            prop::collection::vec(-1.0f64..1.0, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v)),
            prop::collection::vec(-1.0f64..1.0, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v)),
        )),
        lambda in 0.0f64..=1.0,
    ) {
        let (na, nb) = (trace_norm(&a).unwrap(), trace_norm(&b).unwrap());
        prop_assert!(trace_norm(&(&a + &b)).unwrap() <= na + nb + 1e-9);
        let mix = &a * lambda + &b * (1.0 - lambda);
        prop_assert!(trace_norm(&mix).unwrap() <= lambda * na + (1.0 - lambda) * nb + 1e-9);
    }

    #[test]
    fn trace_norm_at_most_root_n_frobenius(x in square(12)) {
        let n = x.nrows() as f64;
        prop_assert!(trace_norm(&x).unwrap() <= n.sqrt() * frobenius_norm(&x).unwrap() + 1e-9);
    }
}

fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circulant_spectrum_matches_dense_solver(row in (1usize..=64).prop_flat_map(|d| prop::collection::vec(-1.0f64..1.0, d))) {
        let fast = circulant_eigenvalues(&row).unwrap();
        let dense = circulant_from_first_row(&row);
        let schur = Schur::new(dense);
        let slow: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
        // match greedily: each fast eigenvalue takes its nearest unused dense one
        let mut pool = sorted(slow);
        for z in sorted(fast) {
            let (k, dist) = pool
                .iter()
                .enumerate()
                .map(|(k, w)| (k, (w - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            prop_assert!(dist <= 1e-9, "eigenvalue {z} unmatched, nearest at {dist:e}");
            pool.swap_remove(k);
        }
    }
}
