use geneo_core::decomposition::{build_decomposition, Decomposition, PartitionOfUnity, PouKind};
use geneo_core::fem::{
    BoundaryCondition, CoefficientField, ElasticField, FemProblem, Side, SideCondition,
    StructuredMesh,
};
use geneo_core::geneo::{
    assemble_coarse, assemble_geneo_pencil, build_geneo_basis, select_mj, EigenSolverKind,
    GeneoOptions, Selection,
};
use geneo_core::linalg::{dense_generalized_eig, LanczosOptions, SparseMatrixCsr};
use nalgebra::DVector;
use proptest::prelude::*;

fn layered(n: usize, layers: usize, contrast: f64) -> FemProblem {
    let mesh = StructuredMesh::unit_square(n).unwrap();
    let field = CoefficientField::layers(&mesh, layers, contrast).unwrap();
    FemProblem::darcy(mesh, field, BoundaryCondition::top_bottom(1.0, 0.0)).unwrap()
}

fn setup(p: &FemProblem, px: usize, py: usize) -> (Decomposition, PartitionOfUnity) {
    let d = build_decomposition(p, px, py, 1).unwrap();
    let pou = PartitionOfUnity::build(&d, p, PouKind::Standard).unwrap();
    (d, pou)
}

#[test]
fn high_contrast_channels_give_small_eigenvalues() {
    // 3×3 split of a 60² mesh: the middle subdomain is 22 elements tall.
    // Every high-conductivity layer crossing it carries one near-constant
    // mode; the global constant is a combination of these.
    let p = layered(60, 15, 1e6);
    let (d, pou) = setup(&p, 3, 3);
    let s = &d.subdomains[4];
    let pencil = assemble_geneo_pencil(&p, &d, &pou, 4).unwrap();
    let dense = dense_generalized_eig(&pencil.a.to_dense(), &pencil.b.to_dense()).unwrap();

    // Count the high layers that meet the subdomain's element rows.
    let rows = s.extent.y0..s.extent.y1;
    let high_layers = (0..15)
        .filter(|k| k % 2 == 1)
        .filter(|k| rows.clone().any(|r| r * 15 / 60 == *k))
        .count();
    let small = high_layers;
    assert_eq!(small, 3);
    for l in &dense.values[..small] {
        assert!(*l < 1e-3, "{:?}", &dense.values[..small + 1]);
    }
    assert!(
        dense.values[small] > 1e-2,
        "{:?}",
        &dense.values[..small + 1]
    );
}

#[test]
fn floating_subdomains_have_near_kernels() {
    let p = layered(24, 4, 1.0);
    let (d, pou) = setup(&p, 3, 3);
    let pencil = assemble_geneo_pencil(&p, &d, &pou, 4).unwrap();
    let ev = dense_generalized_eig(&pencil.a.to_dense(), &pencil.b.to_dense()).unwrap();
    assert!(ev.values[0].abs() < 1e-10);
    assert!(ev.values[1] > 1e-3);

    let mesh = StructuredMesh::new(24, 12, 2.0, 1.0).unwrap();
    let young = CoefficientField::constant(&mesh, 1.0).unwrap();
    let field = ElasticField::uniform_poisson(young, 0.3).unwrap();
    let bc = BoundaryCondition::neumann()
        .with(Side::Left, SideCondition::Dirichlet([0.0, 0.0]))
        .with(Side::Right, SideCondition::Dirichlet([0.0, -1.0]));
    let e = FemProblem::elasticity(mesh, field, bc).unwrap();
    let (d, pou) = setup(&e, 3, 1);
    assert!(d.subdomains[1].is_floating(&e));
    let pencil = assemble_geneo_pencil(&e, &d, &pou, 1).unwrap();
    let ev = dense_generalized_eig(&pencil.a.to_dense(), &pencil.b.to_dense()).unwrap();
    assert!(
        ev.values[..3].iter().all(|l| l.abs() < 1e-9),
        "{:?}",
        &ev.values[..4]
    );
    assert!(ev.values[3] > 1e-4);
}

#[test]
fn coarse_matrix_equals_dense_galerkin_product() {
    let p = layered(20, 5, 1e3);
    let (a, _) = p.assemble().unwrap();
    let (d, pou) = setup(&p, 2, 3);
    let opts = GeneoOptions {
        selection: Selection::Fixed(3),
        ..Default::default()
    };
    let basis = build_geneo_basis(&p, &d, &pou, &opts).unwrap();
    let coarse = assemble_coarse(&a, &d, &basis).unwrap();
    let r = coarse.dense_restriction();
    let oracle = &r * a.to_dense() * r.transpose();
    let scale = oracle.amax();
    assert!((&coarse.a_h - &oracle).amax() < 1e-12 * scale);

    for i in 0..d.len() {
        for j in 0..d.len() {
            if i != j && !d.subdomains[i].neighbors.contains(&j) {
                assert_eq!(coarse.block(i, j).amax(), 0.0);
            }
        }
    }
    let pairs: usize = d
        .subdomains
        .iter()
        .map(|s| s.neighbors.len())
        .sum::<usize>()
        / 2;
    assert_eq!(coarse.exchange.messages, 2 * pairs);
}

#[test]
fn lanczos_and_dense_bases_agree() {
    let p = layered(32, 8, 1e5);
    let (d, pou) = setup(&p, 2, 2);
    let tau = Selection::Threshold { tau: 1.0 };
    let dense = GeneoOptions {
        selection: tau,
        eigensolver: EigenSolverKind::Dense,
        ..Default::default()
    };
    let sparse = GeneoOptions {
        selection: tau,
        eigensolver: EigenSolverKind::ShiftInvertLanczos(LanczosOptions::default()),
        ..Default::default()
    };
    let bd = build_geneo_basis(&p, &d, &pou, &dense).unwrap();
    let bs = build_geneo_basis(&p, &d, &pou, &sparse).unwrap();
    assert_eq!(bd.counts(), bs.counts());
    for (x, y) in bd.subdomains.iter().zip(&bs.subdomains) {
        let k = x.m + 1;
        for (a, b) in x.eigenvalues[..k].iter().zip(&y.eigenvalues[..k]) {
            assert!((a - b).abs() < 1e-6 * a.abs().max(1e-3));
        }
    }
}

#[test]
fn threshold_selection_counts() {
    let r = select_mj(&[0.0, 1e-6, 0.05, 0.2, 1.0], 0.1, 1.0, 1.0).unwrap();
    assert_eq!((r.m, r.saturated), (3, false));
    let r = select_mj(&[0.0, 0.01], 0.1, 1.0, 1.0).unwrap();
    assert_eq!((r.m, r.saturated), (2, true));
    // Strict inequality at the threshold.
    let r = select_mj(&[0.1, 0.3], 0.2, 1.0, 0.5).unwrap();
    assert_eq!(r.m, 1);
    assert!(select_mj(&[1.0], 0.0, 1.0, 1.0).is_err());
}

fn coarse_for(p: &FemProblem, k: usize) -> (SparseMatrixCsr, geneo_core::geneo::CoarseSpace) {
    let (a, _) = p.assemble().unwrap();
    let (d, pou) = setup(p, 2, 2);
    let opts = GeneoOptions {
        selection: Selection::Fixed(k),
        eigensolver: EigenSolverKind::Dense,
        ..Default::default()
    };
    let basis = build_geneo_basis(p, &d, &pou, &opts).unwrap();
    let coarse = assemble_coarse(&a, &d, &basis).unwrap();
    (a, coarse)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn restriction_and_prolongation_are_adjoint(seed in 0u64..1000) {
        let p = layered(12, 3, 1e2);
        let (_, coarse) = coarse_for(&p, 2);
        let n = coarse.fine_dim();
        let v: Vec<f64> = (0..n).map(|i| (((i as u64 + 1) * (seed + 3)) % 13) as f64 - 6.0).collect();
        let w: Vec<f64> = (0..coarse.dim()).map(|i| ((i as u64 * 7 + seed) % 5) as f64 - 2.0).collect();
        let lhs: f64 = coarse.restrict(&v).unwrap().iter().zip(&w).map(|(a, b)| a * b).sum();
        let rhs: f64 = coarse.prolong(&w).unwrap().iter().zip(&v).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn coarse_error_is_energy_orthogonal_to_the_coarse_space(seed in 0u64..1000) {
        let p = layered(12, 3, 1e4);
        let (a, coarse) = coarse_for(&p, 2);
        let n = a.dim();
        let u: Vec<f64> = (0..n)
            .map(|i| if p.is_free(i) { ((i as u64 * 2654435761 + seed) % 101) as f64 / 50.0 - 1.0 } else { 0.0 })
            .collect();
        let uh = coarse.apply(&a.mul_vec(&u)).unwrap();
        let e: Vec<f64> = u.iter().zip(&uh).map(|(x, y)| x - y).collect();
        let ae = a.mul_vec(&e);
        let r = coarse.dense_restriction();
        let proj = &r * DVector::from_column_slice(&ae);
        let scale = a.frobenius_norm() * u.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(proj.amax() < 1e-9 * scale, "{}", proj.amax());
    }
}

#[test]
fn truncated_bases_are_nested_prefixes() {
    let p = layered(16, 4, 1e3);
    let (d, pou) = setup(&p, 2, 2);
    let opts = GeneoOptions {
        selection: Selection::Fixed(4),
        eigensolver: EigenSolverKind::Dense,
        ..Default::default()
    };
    let full = build_geneo_basis(&p, &d, &pou, &opts).unwrap();
    for m in 1..=4 {
        let t = full.truncated(m).unwrap();
        for (ts, fs) in t.subdomains.iter().zip(&full.subdomains) {
            assert_eq!(ts.m, m);
            assert_eq!(ts.vectors[..], fs.vectors[..ts.vectors.len()]);
            assert_eq!(ts.next_eigenvalue(), Some(fs.eigenvalues[m]));
        }
    }
    let direct = build_geneo_basis(
        &p,
        &d,
        &pou,
        &GeneoOptions {
            selection: Selection::Fixed(2),
            ..opts.clone()
        },
    )
    .unwrap();
    assert_eq!(direct.counts(), full.truncated(2).unwrap().counts());
    assert!(full.truncated(5).is_err());
}
