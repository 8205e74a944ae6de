//! One sweep point: problem setup, decomposition, coarse space and solve.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use geneo_core::decomposition::{build_decomposition, Decomposition, PartitionOfUnity, PouKind};
use geneo_core::fem::{
    BoundaryCondition, CoefficientField, ElasticField, FemProblem, Side, SideCondition,
    StructuredMesh,
};
use geneo_core::geneo::{
    assemble_coarse, build_geneo_basis, write_basis_csv, CoarseSpace, EigenSolverKind, GeneoBasis,
    GeneoOptions, Selection,
};
use geneo_core::linalg::{LanczosOptions, SparseMatrixCsr};
use geneo_core::solvers::{pcg, theoretical_condition_bound, SchwarzPreconditioner, SolveReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{
    BoundaryPreset, EigenSolverChoice, ExperimentConfig, Layout, PouChoice, ProblemType, RhsMode,
    SelectionMode,
};
use crate::LabError;

pub const KAPPA_LABEL: &str = "kappa(M^-1 A) [paper label: kappa(A)]";

pub fn mesh_size(cfg: &ExperimentConfig, grid: [usize; 2]) -> (usize, usize) {
    match cfg.decomposition.elements_per_subdomain {
        Some(n) => (grid[0] * n, grid[1] * n),
        None => (cfg.problem.nx.unwrap_or(0), cfg.problem.ny.unwrap_or(0)),
    }
}

pub fn build_problem(
    cfg: &ExperimentConfig,
    contrast: f64,
    grid: [usize; 2],
    rhs: RhsMode,
) -> Result<FemProblem, LabError> {
    let p = &cfg.problem;
    let (nx, ny) = mesh_size(cfg, grid);
    let mesh = StructuredMesh::new(nx, ny, p.lx, p.ly)?;
    let c = &cfg.coefficients;
    let field = match c.layout {
        Layout::Constant => CoefficientField::constant(&mesh, 1.0)?,
        Layout::Layers => {
            let count = match (c.layers, c.layer_thickness) {
                (Some(n), _) => n,
                (None, Some(t)) if t > 0 && ny % t == 0 => ny / t,
                (None, t) => {
                    return Err(LabError::Config(format!(
                        "layer thickness {t:?} does not divide {ny} element rows"
                    )))
                }
            };
            CoefficientField::layers(&mesh, count, contrast)?
        }
        Layout::Skyscrapers => CoefficientField::skyscrapers(&mesh, cfg.rects()?, contrast)?,
        Layout::Channels => CoefficientField::channels(&mesh, cfg.rects()?, contrast)?,
    };
    let keep = |v: f64| if rhs == RhsMode::Homogeneous { 0.0 } else { v };
    let problem = match p.kind {
        ProblemType::Darcy => {
            let bc = BoundaryCondition::top_bottom(keep(p.top), keep(p.bottom));
            FemProblem::darcy(mesh, field, bc)?.with_source(p.source.unwrap_or([1.0, 0.0]))
        }
        ProblemType::Elasticity => {
            let mut bc =
                BoundaryCondition::neumann().with(Side::Left, SideCondition::Dirichlet([0.0, 0.0]));
            if p.boundary == BoundaryPreset::ClampedShear {
                bc = bc.with(Side::Right, SideCondition::Dirichlet([0.0, -keep(p.shear)]));
            }
            let material = ElasticField::uniform_poisson(field, p.poisson)?;
            FemProblem::elasticity(mesh, material, bc)?.with_source(p.source.unwrap_or([0.0, 0.0]))
        }
    };
    Ok(problem)
}

/// Assembled system, with the right-hand side replaced in random mode.
pub fn build_system(
    problem: &FemProblem,
    rhs: RhsMode,
    seed: u64,
) -> Result<(SparseMatrixCsr, Vec<f64>), LabError> {
    let (a, mut b) = problem.assemble()?;
    if rhs == RhsMode::Random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, bi) in b.iter_mut().enumerate() {
            let r: f64 = rng.gen_range(-1.0..1.0);
            *bi = if problem.is_free(i) { r } else { 0.0 };
        }
    }
    Ok((a, b))
}

pub fn pou_kind(cfg: &ExperimentConfig) -> PouKind {
    match cfg.decomposition.pou {
        PouChoice::Standard => PouKind::Standard,
        PouChoice::Sarkis => PouKind::Sarkis,
    }
}

pub fn geneo_options(cfg: &ExperimentConfig, selection: Selection) -> GeneoOptions {
    let g = &cfg.geneo;
    let eigensolver = match g.eigensolver {
        EigenSolverChoice::Lanczos => EigenSolverKind::ShiftInvertLanczos(LanczosOptions {
            tol: g.tol,
            subspace: g.subspace,
            max_restarts: g.max_restarts,
            ..Default::default()
        }),
        EigenSolverChoice::Dense => EigenSolverKind::Dense,
    };
    GeneoOptions {
        selection,
        eigensolver,
        initial_request: g.initial_request,
        max_request: g.max_request,
    }
}

/// Selections for the sweep columns of a two-level run.
pub fn selections(cfg: &ExperimentConfig) -> Vec<Selection> {
    match cfg.geneo.selection {
        SelectionMode::Fixed => cfg.geneo.evs.iter().map(|&k| Selection::Fixed(k)).collect(),
        SelectionMode::Threshold => vec![Selection::Threshold { tau: cfg.geneo.tau }],
    }
}

pub fn selection_label(selection: Option<Selection>) -> String {
    match selection {
        None => "one-level".into(),
        Some(Selection::Fixed(k)) => format!("{k} EV"),
        Some(Selection::Threshold { tau }) => format!("tau={tau}"),
    }
}

pub fn grid_label(grid: [usize; 2]) -> String {
    format!("{}x{}", grid[0], grid[1])
}

/// Everything a coarse space needs, built once per point.
pub struct Setup {
    pub problem: FemProblem,
    pub a: SparseMatrixCsr,
    pub b: Vec<f64>,
    pub decomp: Decomposition,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig, contrast: f64, grid: [usize; 2]) -> Result<Self, LabError> {
        let problem = build_problem(cfg, contrast, grid, cfg.problem.rhs)?;
        let (a, b) = build_system(&problem, cfg.problem.rhs, cfg.seed)?;
        let decomp = build_decomposition(&problem, grid[0], grid[1], cfg.decomposition.overlap)?;
        Ok(Self {
            problem,
            a,
            b,
            decomp,
        })
    }

    pub fn basis(
        &self,
        cfg: &ExperimentConfig,
        selection: Selection,
    ) -> Result<GeneoBasis, LabError> {
        let pou = PartitionOfUnity::build(&self.decomp, &self.problem, pou_kind(cfg))?;
        Ok(build_geneo_basis(
            &self.problem,
            &self.decomp,
            &pou,
            &geneo_options(cfg, selection),
        )?)
    }

    pub fn condition_bound(&self) -> f64 {
        theoretical_condition_bound(
            self.decomp.coverage_constant(),
            &self.decomp.diameters(),
            &self.decomp.overlap_widths(),
        )
    }
}

/// One row of the run table. The first ten columns are the solve report
/// schema; the rest are diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub problem: String,
    pub contrast: f64,
    pub subdomains: String,
    pub evs_per_subdomain: String,
    #[serde(rename = "dim_VH")]
    pub dim_vh: usize,
    pub iterations: usize,
    pub kappa_est: Option<f64>,
    pub kappa_bound: f64,
    pub setup_s: Option<f64>,
    pub solve_s: Option<f64>,
    pub level: String,
    pub converged: bool,
    pub kappa_lower_bound: bool,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub kappa_label: &'static str,
    pub k0: usize,
    pub dofs: usize,
    pub messages: usize,
    pub bytes: usize,
    /// Only set for threshold-selected two-level runs, where the condition
    /// bound applies.
    pub bound_ok: Option<bool>,
    pub error: String,
}

impl RunRecord {
    pub fn failed(
        cfg: &ExperimentConfig,
        contrast: f64,
        grid: [usize; 2],
        selection: Option<Selection>,
        err: &LabError,
    ) -> Self {
        RunRecord {
            problem: cfg.problem.kind.name().into(),
            contrast,
            subdomains: grid_label(grid),
            evs_per_subdomain: selection_label(selection),
            dim_vh: 0,
            iterations: 0,
            kappa_est: None,
            kappa_bound: f64::NAN,
            setup_s: None,
            solve_s: None,
            level: level_name(selection).into(),
            converged: false,
            kappa_lower_bound: false,
            lambda_min: None,
            lambda_max: None,
            kappa_label: KAPPA_LABEL,
            k0: 0,
            dofs: 0,
            messages: 0,
            bytes: 0,
            bound_ok: None,
            error: err.to_string(),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_empty() && self.converged
    }
}

fn level_name(selection: Option<Selection>) -> &'static str {
    if selection.is_some() {
        "two_level"
    } else {
        "one_level"
    }
}

/// Solves one point with the one-level (`selection = None`) or two-level
/// preconditioner.
pub fn solve_point(
    cfg: &ExperimentConfig,
    contrast: f64,
    grid: [usize; 2],
    selection: Option<Selection>,
    basis_dir: Option<&Path>,
) -> Result<(RunRecord, SolveReport), LabError> {
    let start = Instant::now();
    let setup = Setup::new(cfg, contrast, grid)?;
    let mut timings = geneo_core::solvers::PhaseTimings::default();
    let (precond, coarse, evs_label) = match selection {
        None => (
            SchwarzPreconditioner::one_level(&setup.a, &setup.decomp)?,
            None,
            "0".to_string(),
        ),
        Some(sel) => {
            let t = Instant::now();
            let basis = setup.basis(cfg, sel)?;
            timings.eigen_s = t.elapsed().as_secs_f64();
            if let Some(dir) = basis_dir {
                let name = format!(
                    "basis_{}_{}_{:e}.csv",
                    grid_label(grid),
                    selection_label(selection).replace(' ', ""),
                    contrast
                );
                let path = dir.join(name);
                let f = File::create(&path).map_err(LabError::io(&path))?;
                write_basis_csv(&setup.problem, &setup.decomp, &basis, BufWriter::new(f))
                    .map_err(LabError::io(&path))?;
            }
            let t = Instant::now();
            let coarse: CoarseSpace = assemble_coarse(&setup.a, &setup.decomp, &basis)?;
            timings.coarse_assembly_s = t.elapsed().as_secs_f64();
            let counts: Vec<usize> = basis.subdomains.iter().map(|s| s.m).collect();
            let label = match sel {
                Selection::Fixed(k) => k.to_string(),
                Selection::Threshold { .. } => {
                    let lo = counts.iter().min().copied().unwrap_or(0);
                    let hi = counts.iter().max().copied().unwrap_or(0);
                    format!("{lo}-{hi}")
                }
            };
            let exchange = coarse.exchange;
            let m = SchwarzPreconditioner::two_level(&setup.a, &setup.decomp, coarse)?;
            (m, Some(exchange), label)
        }
    };
    timings.setup_s = start.elapsed().as_secs_f64();
    let (_, mut report) = pcg(
        &setup.a,
        &setup.b,
        &precond,
        cfg.solver.tol,
        cfg.solver.max_iter,
    )?;
    timings.cg_s = report.timings.cg_s;
    report.timings = timings;
    report.dim_coarse = precond.coarse_dim();

    let kappa_bound = setup.condition_bound();
    let bound_ok = match selection {
        Some(Selection::Threshold { .. }) => report.kappa_estimate.map(|k| k <= kappa_bound),
        _ => None,
    };
    let record = RunRecord {
        problem: cfg.problem.kind.name().into(),
        contrast,
        subdomains: grid_label(grid),
        evs_per_subdomain: evs_label,
        dim_vh: report.dim_coarse,
        iterations: report.iterations,
        kappa_est: report.kappa_estimate,
        kappa_bound,
        setup_s: cfg.output.timings.then_some(report.timings.setup_s),
        solve_s: cfg.output.timings.then_some(report.timings.cg_s),
        level: level_name(selection).into(),
        converged: report.converged,
        kappa_lower_bound: report.kappa_is_lower_bound,
        lambda_min: report.lambda_min,
        lambda_max: report.lambda_max,
        kappa_label: KAPPA_LABEL,
        k0: setup.decomp.coverage_constant(),
        dofs: setup.a.dim(),
        messages: coarse.map_or(0, |e| e.messages),
        bytes: coarse.map_or(0, |e| e.bytes),
        bound_ok,
        error: if report.converged {
            String::new()
        } else {
            format!("no convergence in {} iterations", report.iterations)
        },
    };
    Ok((record, report))
}
