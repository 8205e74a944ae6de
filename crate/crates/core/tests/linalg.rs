use geneo_core::decomposition::{build_decomposition, PartitionOfUnity, PouKind};
use geneo_core::fem::{BoundaryCondition, CoefficientField, FemProblem, StructuredMesh};
use geneo_core::geneo::assemble_geneo_pencil;
use geneo_core::linalg::{
    dense_generalized_eig, dot, factorize, matrix_market, reverse_cuthill_mckee,
    shift_invert_lanczos, Factorization, LanczosOptions, PivotPolicy, SparseMatrixCsr,
};
use geneo_core::solvers::{pcg, IdentityPreconditioner};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random sparse SPD matrix: a banded random part plus a dominant diagonal.
fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            if (i - j) <= 3 || rng.gen_bool(0.1) {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
    }
    for i in 0..n {
        let row: f64 = m.row(i).iter().map(|x| x.abs()).sum();
        m[(i, i)] = row + rng.gen_range(0.1..1.0);
    }
    m
}

#[test]
fn ldlt_matches_dense_solve() {
    let dense = random_spd(20, 7);
    let a = SparseMatrixCsr::from_dense(&dense, 0.0);
    let f = factorize(&a, 0.0).unwrap();
    let b: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
    let x = f.solve(&b);
    let oracle = dense
        .clone()
        .lu()
        .solve(&DVector::from_column_slice(&b))
        .unwrap();
    for (xi, oi) in x.iter().zip(oracle.iter()) {
        assert!((xi - oi).abs() < 1e-12 * oi.abs().max(1.0));
    }
    assert_eq!(f.negative_pivots(), 0);
}

#[test]
fn indefinite_ldlt_counts_negative_pivots() {
    // Shifting past three eigenvalues leaves exactly three negative pivots
    // (Sylvester's law of inertia).
    let dense = random_spd(20, 11);
    let eig = dense.clone().symmetric_eigen();
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let shift = 0.5 * (ev[2] + ev[3]);
    let shifted = &dense - DMatrix::identity(20, 20) * shift;
    let a = SparseMatrixCsr::from_dense(&shifted, 0.0);
    let f = Factorization::new(&a, PivotPolicy::Nonzero).unwrap();
    assert_eq!(f.negative_pivots(), 3);
    assert!(Factorization::new(&a, PivotPolicy::Positive).is_err());
    let b = vec![1.0; 20];
    let x = f.solve(&b);
    let r = a.mul_vec(&x);
    assert!(r.iter().zip(&b).all(|(ri, bi)| (ri - bi).abs() < 1e-9));
}

/// Roots of `det(A − λB)` found by scanning for sign changes and bisecting.
fn characteristic_roots(a: &DMatrix<f64>, b: &DMatrix<f64>, hi: f64) -> Vec<f64> {
    let det = |l: f64| (a - b * l).determinant();
    let steps = 40_000;
    let mut roots = Vec::new();
    let mut prev = (0.0, det(0.0));
    for k in 1..=steps {
        let l = hi * k as f64 / steps as f64;
        let d = det(l);
        if d.signum() != prev.1.signum() {
            let (mut lo, mut up) = (prev.0, l);
            let s_lo = prev.1.signum();
            for _ in 0..80 {
                let mid = 0.5 * (lo + up);
                if det(mid).signum() == s_lo {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            roots.push(0.5 * (lo + up));
        }
        prev = (l, d);
    }
    roots
}

#[test]
fn dense_pencil_matches_characteristic_polynomial() {
    let a = random_spd(6, 3);
    let b = random_spd(6, 4);
    let pairs = dense_generalized_eig(&a, &b).unwrap();
    assert_eq!(pairs.len(), 6);
    let roots = characteristic_roots(&a, &b, 10.0);
    assert_eq!(roots.len(), 6, "roots {roots:?}");
    for (l, r) in pairs.values.iter().zip(&roots) {
        assert!((l - r).abs() < 1e-9 * r.max(1.0), "{l} vs {r}");
    }
    for (i, p) in pairs.vectors.iter().enumerate() {
        let pv = DVector::from_column_slice(p);
        for (j, q) in pairs.vectors.iter().enumerate() {
            let qv = DVector::from_column_slice(q);
            let bij = (pv.transpose() * &b * qv)[(0, 0)];
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((bij - expect).abs() < 1e-10);
        }
    }
}

fn geneo_pencil(contrast: f64, j: usize) -> (SparseMatrixCsr, SparseMatrixCsr) {
    let mesh = StructuredMesh::unit_square(24).unwrap();
    let field = CoefficientField::layers(&mesh, 6, contrast).unwrap();
    let p = FemProblem::darcy(mesh, field, BoundaryCondition::top_bottom(1.0, 0.0)).unwrap();
    let d = build_decomposition(&p, 3, 3, 1).unwrap();
    let pou = PartitionOfUnity::build(&d, &p, PouKind::Standard).unwrap();
    let pencil = assemble_geneo_pencil(&p, &d, &pou, j).unwrap();
    (pencil.a, pencil.b)
}

#[test]
fn lanczos_matches_dense_on_geneo_pencils() {
    for (contrast, j) in [(1.0, 4), (1e4, 4), (1e6, 0), (1e6, 3)] {
        let (a, b) = geneo_pencil(contrast, j);
        let m = 6;
        let res = shift_invert_lanczos(&a, &b, None, m, &LanczosOptions::default()).unwrap();
        let dense = dense_generalized_eig(&a.to_dense(), &b.to_dense()).unwrap();
        assert_eq!(res.pairs.len(), m);
        for (l, d) in res.pairs.values.iter().zip(&dense.values) {
            assert!(*l >= -1e-10);
            assert!(
                (l - d).abs() < 1e-6 * d.abs().max(1e-3),
                "contrast {contrast}: {l} vs {d}"
            );
        }
        assert!(res.pairs.max_relative_residual(&a, &b) < 1e-6);
        for (i, p) in res.pairs.vectors.iter().enumerate() {
            let bp = b.mul_vec(p);
            for (k, q) in res.pairs.vectors.iter().enumerate() {
                let expect = if i == k { 1.0 } else { 0.0 };
                assert!((dot(q, &bp) - expect).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn cg_ritz_values_bracket_the_spectrum() {
    let a = SparseMatrixCsr::from_diagonal(&[1.0, 10.0]);
    let (_, rep) = pcg(&a, &[1.0, 1.0], &IdentityPreconditioner, 1e-14, 10).unwrap();
    assert!((rep.kappa_estimate.unwrap() - 10.0).abs() < 1e-8);

    let diag: Vec<f64> = (0..50).map(|i| 1.0 + i as f64 / 49.0).collect();
    let a = SparseMatrixCsr::from_diagonal(&diag);
    let (_, rep) = pcg(&a, &vec![1.0; 50], &IdentityPreconditioner, 1e-12, 200).unwrap();
    let (lo, hi) = (rep.lambda_min.unwrap(), rep.lambda_max.unwrap());
    assert!(lo >= 0.99 && hi <= 2.02 && lo <= hi);
    assert!(rep.kappa_estimate.unwrap() <= 2.0 + 1e-8);
}

#[test]
fn matrix_market_roundtrip_is_exact() {
    let dense = random_spd(15, 21);
    let a = SparseMatrixCsr::from_dense(&dense, 0.0);
    let mut buf = Vec::new();
    matrix_market::write(&a, &mut buf).unwrap();
    let back = matrix_market::read(buf.as_slice()).unwrap();
    assert_eq!(back.indices(), a.indices());
    assert_eq!(back.offsets(), a.offsets());
    assert_eq!(back.values(), a.values());
}

#[test]
fn malformed_matrix_market_is_rejected() {
    for text in [
        "not a banner\n1 1 1\n1 1 1.0\n",
        "%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1.0\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
    ] {
        assert!(matrix_market::read(text.as_bytes()).is_err(), "{text}");
    }
}

proptest! {
    #[test]
    fn rcm_is_a_permutation(n in 1usize..40, seed in 0u64..1000) {
        let a = SparseMatrixCsr::from_dense(&random_spd(n, seed), 0.0);
        let mut perm = reverse_cuthill_mckee(&a);
        perm.sort_unstable();
        prop_assert_eq!(perm, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn ldlt_solves_random_spd(n in 1usize..30, seed in 0u64..1000) {
        let dense = random_spd(n, seed);
        let a = SparseMatrixCsr::from_dense(&dense, 0.0);
        let b: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).ln()).collect();
        let x = factorize(&a, 0.0).unwrap().solve(&b);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            prop_assert!((ri - bi).abs() < 1e-10 * bi.abs().max(1.0));
        }
    }
}
