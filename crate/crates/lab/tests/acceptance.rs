//! End-to-end acceptance checks. Each test prints one `criterion N:` line
//! straight to stdout, so the verdicts are visible without `--nocapture`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use geneo_core::decomposition::{build_decomposition, PartitionOfUnity, PouKind};
use geneo_core::fem::{
    BoundaryCondition, CoefficientField, ElasticField, FemProblem, Side, SideCondition,
    StructuredMesh,
};
use geneo_core::geneo::{
    assemble_coarse, assemble_geneo_pencil, build_geneo_basis, GeneoOptions, Selection,
};
use geneo_core::linalg::{dense_generalized_eig, shift_invert_lanczos, LanczosOptions};
use geneo_lab::config::{ExperimentConfig, Lifting, RhsMode};
use geneo_lab::experiments::{CoarseErrorRow, Outcome, ScalingRow};
use geneo_lab::pipeline::RunRecord;
use geneo_lab::{run_experiment, RunOptions, Summary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: &str, ok: bool, detail: impl AsRef<str>) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let line = format!("criterion {n}: {verdict} {}\n", detail.as_ref());
    // Bypasses the test harness capture.
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {n} failed: {}", detail.as_ref());
}

fn experiments_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments")
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&experiments_dir().join(name)).unwrap()
}

fn run(cfg: &ExperimentConfig, parallel: bool) -> (Summary, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out_dir: Some(dir.path().to_path_buf()),
        seed: None,
        parallel,
    };
    (run_experiment(cfg, &opts).unwrap(), dir)
}

fn runs(s: &Summary) -> &[RunRecord] {
    match &s.outcome {
        Outcome::Robustness(r) => r,
        _ => panic!("not a robustness run"),
    }
}

fn scaling_rows(s: &Summary) -> &[ScalingRow] {
    match &s.outcome {
        Outcome::Scaling(r) => r,
        _ => panic!("not a scaling run"),
    }
}

fn coarse_rows(s: &Summary) -> &[CoarseErrorRow] {
    match &s.outcome {
        Outcome::CoarseError(r) => r,
        _ => panic!("not a coarse error run"),
    }
}

fn kappa(records: &[RunRecord], evs: &str, contrast: f64) -> f64 {
    records
        .iter()
        .find(|r| r.evs_per_subdomain == evs && r.contrast == contrast)
        .and_then(|r| r.kappa_est)
        .unwrap()
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, contrast: f64, elastic: bool) -> FemProblem {
    let mesh = StructuredMesh::unit_square(n).unwrap();
    let lo = contrast.log10();
    let values: Vec<f64> = (0..mesh.num_elements())
        .map(|_| 10f64.powf(rng.gen_range(0.0..=lo)))
        .collect();
    let field = CoefficientField::raster(&mesh, values).unwrap();
    if elastic {
        let material = ElasticField::uniform_poisson(field, 0.3).unwrap();
        let bc =
            BoundaryCondition::neumann().with(Side::Left, SideCondition::Dirichlet([0.0, 0.0]));
        FemProblem::elasticity(mesh, material, bc).unwrap()
    } else {
        FemProblem::darcy(mesh, field, BoundaryCondition::top_bottom(1.0, 0.0)).unwrap()
    }
}

#[test]
fn criterion_1_lanczos_matches_dense_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_value, mut worst_map) = (0.0f64, 0.0f64);
    let pencils = 24;
    for case in 0..pencils {
        let size = rng.gen_range(4..=12);
        let contrast = 10f64.powi(rng.gen_range(0..=6));
        let elastic = case % 4 == 3;
        let p = random_problem(&mut rng, 3 * size, contrast, elastic);
        let d = build_decomposition(&p, 3, 3, 1).unwrap();
        let pou = PartitionOfUnity::build(&d, &p, PouKind::Standard).unwrap();
        let j = rng.gen_range(0..d.len());
        let pencil = assemble_geneo_pencil(&p, &d, &pou, j).unwrap();
        let m = 5;
        let res = shift_invert_lanczos(&pencil.a, &pencil.b, None, m, &LanczosOptions::default())
            .unwrap();
        let dense = dense_generalized_eig(&pencil.a.to_dense(), &pencil.b.to_dense()).unwrap();
        assert_eq!(res.pairs.len(), m);
        for ((l, d), nu) in res
            .pairs
            .values
            .iter()
            .zip(&dense.values)
            .zip(&res.transformed)
        {
            worst_value = worst_value.max((l - d).abs());
            worst_map = worst_map.max((1.0 / (l - res.shift) - nu).abs() / nu.abs());
        }
    }
    report(
        "1",
        worst_value < 1e-8 && worst_map < 1e-12,
        format!(
            "{pencils} pencils, max |lanczos - dense| = {worst_value:.2e}, \
             max relative |1/(lambda - sigma) - nu| = {worst_map:.2e}"
        ),
    );
}

#[test]
fn criterion_2_coarse_matrix_matches_dense_triple_product() {
    let mesh = StructuredMesh::unit_square(40).unwrap();
    let field = CoefficientField::layers(&mesh, 10, 1e6).unwrap();
    let p = FemProblem::darcy(mesh, field, BoundaryCondition::top_bottom(1.0, 0.0)).unwrap();
    let (a, _) = p.assemble().unwrap();
    let d = build_decomposition(&p, 4, 4, 1).unwrap();
    let pou = PartitionOfUnity::build(&d, &p, PouKind::Standard).unwrap();
    let opts = GeneoOptions {
        selection: Selection::Fixed(4),
        ..Default::default()
    };
    let basis = build_geneo_basis(&p, &d, &pou, &opts).unwrap();
    let coarse = assemble_coarse(&a, &d, &basis).unwrap();
    let r = coarse.dense_restriction();
    let oracle = &r * a.to_dense() * r.transpose();
    let rel = (&coarse.a_h - &oracle).norm() / oracle.norm();
    report(
        "2",
        rel < 1e-12,
        format!(
            "dim A_H = {}, relative Frobenius difference = {rel:.2e}",
            coarse.dim()
        ),
    );
}

#[test]
fn criterion_3_partition_of_unity_sums_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases = 200;
    let mut worst = 0.0f64;
    let mut zero_ok = true;
    for case in 0..cases {
        let nx = rng.gen_range(4..=20);
        let ny = rng.gen_range(4..=20);
        let mesh = StructuredMesh::new(nx, ny, 1.0, 1.0).unwrap();
        let field = CoefficientField::constant(&mesh, 1.0).unwrap();
        let p = match case % 3 {
            0 => FemProblem::darcy(mesh, field, BoundaryCondition::top_bottom(1.0, 0.0)).unwrap(),
            1 => FemProblem::darcy(mesh, field, BoundaryCondition::all_dirichlet(0.0)).unwrap(),
            _ => {
                let m = ElasticField::uniform_poisson(field, 0.3).unwrap();
                let bc = BoundaryCondition::neumann()
                    .with(Side::Bottom, SideCondition::Dirichlet([0.0, 0.0]));
                FemProblem::elasticity(mesh, m, bc).unwrap()
            }
        };
        let px = rng.gen_range(1..=nx.min(5));
        let py = rng.gen_range(1..=ny.min(5));
        let layers = rng.gen_range(1..=3);
        let d = build_decomposition(&p, px, py, layers).unwrap();
        for kind in [PouKind::Standard, PouKind::Sarkis] {
            let pou = PartitionOfUnity::build(&d, &p, kind).unwrap();
            for (g, s) in pou.sum(&d).iter().enumerate() {
                if p.is_free(g) {
                    worst = worst.max((s - 1.0).abs());
                } else {
                    zero_ok &= *s == 0.0;
                }
            }
            for (sub, w) in d.subdomains.iter().zip(&pou.weights) {
                for (l, &g) in sub.dofs.iter().enumerate() {
                    if sub.artificial[l] || !p.is_free(g) {
                        zero_ok &= w[l] == 0.0;
                    }
                }
            }
        }
    }
    report(
        "3",
        worst <= 1e-14 && zero_ok,
        format!(
            "{cases} decompositions x 2 kinds, max |sum - 1| = {worst:.2e}, \
             zero on Dirichlet/artificial dofs: {zero_ok}"
        ),
    );
}

#[test]
fn criterion_4_layers_robustness_replica() {
    let cfg = load("layers_robustness.toml");
    let (s, _dir) = run(&cfg, true);
    let r = runs(&s);
    let four: Vec<f64> = [1e2, 1e4, 1e6, 1e8]
        .iter()
        .map(|&c| kappa(r, "4", c))
        .collect();
    let hi = four.iter().cloned().fold(0.0, f64::max);
    let lo = four.iter().cloned().fold(f64::INFINITY, f64::min);
    let growth = kappa(r, "2", 1e8) / kappa(r, "2", 1e2);
    let ok = s.failures.is_empty() && hi / lo < 10.0 && hi < 1e3 && growth > 10.0;
    report(
        "4",
        ok,
        format!(
            "4 EV kappa {four:.2?} (spread {:.2}x); 2 EV kappa(1e8)/kappa(1e2) = {growth:.3e}",
            hi / lo
        ),
    );
}

#[test]
fn criterion_5_subdomain_scaling() {
    let cfg = load("scaling.toml");
    let (s, _dir) = run(&cfg, true);
    let rows = scaling_rows(&s);
    let one: Vec<usize> = rows.iter().map(|r| r.one_level_iterations).collect();
    let two: Vec<usize> = rows.iter().map(|r| r.two_level_iterations).collect();
    let increasing = one.windows(2).all(|w| w[1] > w[0]);
    let doubled = one[one.len() - 1] >= 2 * one[0];
    let (lo, hi) = (*two.iter().min().unwrap(), *two.iter().max().unwrap());
    let band = hi as f64 <= 1.5 * lo as f64;
    report(
        "5",
        s.failures.is_empty() && increasing && doubled && band,
        format!("one-level iterations {one:?}, two-level (tau=1) iterations {two:?}"),
    );
}

#[test]
fn criterion_6_condition_number_below_theoretical_bound() {
    let mut checked = Vec::new();
    let (t, _d1) = run(&load("layers_threshold.toml"), true);
    for r in runs(&t) {
        checked.push((r.kappa_est, r.kappa_bound, r.bound_ok));
    }
    let (s, _d2) = run(&load("scaling.toml"), true);
    for r in scaling_rows(&s) {
        checked.push((r.two_level_kappa, r.kappa_bound, r.bound_ok));
    }
    let ok = checked.iter().all(|c| c.2 == Some(true))
        && t.violations.is_empty()
        && s.violations.is_empty();
    let worst = checked
        .iter()
        .map(|c| c.0.unwrap_or(f64::INFINITY) / c.1)
        .fold(0.0, f64::max);
    report(
        "6",
        ok,
        format!(
            "{} threshold two-level runs, max kappa/bound = {worst:.3e}",
            checked.len()
        ),
    );
}

fn relative_errors(rows: &[CoarseErrorRow]) -> Vec<f64> {
    rows.iter().map(|r| r.relative_error).collect()
}

#[test]
fn criterion_7_coarse_error_bound_and_monotonicity() {
    let cfg = load("skyscrapers_coarse_error.toml");
    let (s, _dir) = run(&cfg, false);
    let rows = coarse_rows(&s);
    let rel = relative_errors(rows);
    let monotone = rel.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let bounded = rows.iter().all(|r| r.bound_ok);
    let max_ratio = rows.iter().map(|r| r.bound_ratio).fold(0.0, f64::max);
    report(
        "7 (bound, monotonicity)",
        s.success() && rows.len() == 5 && monotone && bounded,
        format!("m = 1..5 relative errors {rel:.4?}, max error/bound = {max_ratio:.3e}"),
    );
}

#[test]
fn criterion_7_sixteen_coarse_functions_nearly_solve_the_problem() {
    let mut cfg = load("skyscrapers_coarse_error.toml");
    cfg.coarse_error.fields = false;
    cfg.coarse_error.vtk = false;
    let mut by_lifting = BTreeMap::new();
    for lifting in [Lifting::Zero, Lifting::Harmonic] {
        cfg.coarse_error.lifting = lifting;
        let (s, _dir) = run(&cfg, false);
        let row = coarse_rows(&s)
            .iter()
            .find(|r| r.evs_per_subdomain == 4)
            .cloned()
            .unwrap();
        assert_eq!(row.dim_vh, 16);
        by_lifting.insert(format!("{lifting:?}"), row.relative_error);
    }
    let used = by_lifting["Harmonic"];
    report(
        "7 (2x2 subdomains x 4 EVs < 0.05)",
        used < 0.05,
        format!("relative energy error with 16 coarse functions: {by_lifting:.4?}"),
    );
}

#[test]
fn criterion_8_elasticity_near_kernel_and_laminate() {
    let cfg = load("elasticity_laminate.toml");
    // Subdomain 1 of the bottom row does not touch the clamped side.
    let c = cfg.coefficients.contrasts[0];
    let p = geneo_lab::pipeline::build_problem(&cfg, c, [4, 4], RhsMode::Problem).unwrap();
    let d = build_decomposition(&p, 4, 4, 1).unwrap();
    let pou = PartitionOfUnity::build(&d, &p, PouKind::Standard).unwrap();
    assert!(d.subdomains[1].is_floating(&p));
    let pencil = assemble_geneo_pencil(&p, &d, &pou, 1).unwrap();
    let dense = dense_generalized_eig(&pencil.a.to_dense(), &pencil.b.to_dense()).unwrap();
    let lmax = *dense.values.last().unwrap();
    let near_kernel = dense.values.iter().filter(|&&l| l < 1e-6 * lmax).count();

    let (s, _dir) = run(&cfg, true);
    let rows = scaling_rows(&s);
    let iters: Vec<(usize, usize)> = rows
        .iter()
        .map(|r| (r.one_level_iterations, r.two_level_iterations))
        .collect();
    let fast = iters.iter().all(|&(one, two)| 3 * two <= one);
    report(
        "8",
        s.failures.is_empty() && near_kernel >= 3 && fast,
        format!(
            "floating subdomain: {near_kernel} eigenvalues < 1e-6 lambda_max; \
             (one-level, two-level) iterations per contrast {iters:?}"
        ),
    );
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_9_reruns_are_bit_identical() {
    let mut robustness = load("layers_robustness.toml");
    robustness.problem.nx = Some(32);
    robustness.problem.ny = Some(32);
    robustness.coefficients.layers = Some(8);
    robustness.decomposition.grids = vec![[4, 4], [2, 2]];
    robustness.problem.rhs = RhsMode::Random;
    robustness.output.basis = true;
    let mut coarse = load("skyscrapers_coarse_error.toml");
    coarse.problem.nx = Some(40);
    coarse.problem.ny = Some(40);
    coarse.coefficients.contrasts = vec![1e2, 1e6];

    let mut files = 0;
    let mut identical = true;
    for cfg in [&robustness, &coarse] {
        let (_, a) = run(cfg, false);
        let (_, b) = run(cfg, false);
        let (_, c) = run(cfg, true);
        let (sa, sb, sc) = (snapshot(a.path()), snapshot(b.path()), snapshot(c.path()));
        files += sa.len();
        identical &= sa == sb && sa == sc;
    }
    report(
        "9",
        identical,
        format!("{files} output files compared across sequential, sequential and concurrent runs"),
    );
}
