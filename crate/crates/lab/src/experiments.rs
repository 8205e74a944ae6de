//! Sweep drivers. Each returns typed rows and writes its files to the output
//! directory.

use std::fs;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use geneo_core::geneo::{assemble_coarse, write_basis_csv, Selection};
use geneo_core::linalg::{energy_norm, factorize, norm2};
use geneo_core::solvers::{check_error_bound, coarse_solve};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind, Lifting, SolverMode};
use crate::output::{
    format_contrast, format_kappa, write_field_csv, write_records, write_table, write_vtk,
};
use crate::pipeline::{
    build_problem, build_system, grid_label, selection_label, selections, solve_point, RunRecord,
    Setup,
};
use crate::LabError;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.dir`.
    pub out_dir: Option<PathBuf>,
    /// Overrides `seed`.
    pub seed: Option<u64>,
    /// Run sweep points concurrently. Results are collected in sweep order,
    /// so the files do not depend on this flag.
    pub parallel: bool,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Robustness(Vec<RunRecord>),
    Scaling(Vec<ScalingRow>),
    CoarseError(Vec<CoarseErrorRow>),
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// Points that errored or did not converge.
    pub failures: Vec<String>,
    /// Points where a checked bound was exceeded.
    pub violations: Vec<String>,
    pub outcome: Outcome,
}

impl Summary {
    pub fn success(&self) -> bool {
        self.failures.is_empty() && self.violations.is_empty()
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Summary, LabError> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let out_dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| cfg.resolve(&cfg.output.dir));
    fs::create_dir_all(&out_dir).map_err(LabError::io(&out_dir))?;
    match cfg.experiment {
        ExperimentKind::Robustness => robustness(&cfg, &out_dir, opts.parallel),
        ExperimentKind::Scaling => scaling(&cfg, &out_dir, opts.parallel),
        ExperimentKind::CoarseError => coarse_error(&cfg, &out_dir, opts.parallel),
    }
}

fn map_points<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

fn basis_dir(cfg: &ExperimentConfig, out: &Path) -> Result<Option<PathBuf>, LabError> {
    if !cfg.output.basis {
        return Ok(None);
    }
    let dir = out.join("basis");
    fs::create_dir_all(&dir).map_err(LabError::io(&dir))?;
    Ok(Some(dir))
}

fn run_or_fail(
    cfg: &ExperimentConfig,
    contrast: f64,
    grid: [usize; 2],
    sel: Option<Selection>,
    basis: Option<&Path>,
) -> RunRecord {
    info!(
        "{} contrast {} grid {} {}",
        cfg.name(),
        format_contrast(contrast),
        grid_label(grid),
        selection_label(sel)
    );
    match solve_point(cfg, contrast, grid, sel, basis) {
        Ok((r, _)) => r,
        Err(e) => RunRecord::failed(cfg, contrast, grid, sel, &e),
    }
}

fn check(records: &[&RunRecord], failures: &mut Vec<String>, violations: &mut Vec<String>) {
    for r in records {
        let tag = format!(
            "contrast {} grid {} {} {}",
            format_contrast(r.contrast),
            r.subdomains,
            r.level,
            r.evs_per_subdomain
        );
        if !r.ok() {
            failures.push(format!("{tag}: {}", r.error));
        }
        if r.bound_ok == Some(false) {
            violations.push(format!(
                "{tag}: kappa {} exceeds bound {:.1}",
                format_kappa(r.kappa_est),
                r.kappa_bound
            ));
        }
    }
}

fn robustness(cfg: &ExperimentConfig, out: &Path, parallel: bool) -> Result<Summary, LabError> {
    let sels: Vec<Option<Selection>> = match cfg.solver.mode {
        SolverMode::OneLevel => vec![None],
        _ => selections(cfg).into_iter().map(Some).collect(),
    };
    let bdir = basis_dir(cfg, out)?;
    let mut points = Vec::new();
    for &grid in &cfg.decomposition.grids {
        for &c in &cfg.coefficients.contrasts {
            for &s in &sels {
                points.push((grid, c, s));
            }
        }
    }
    let records = map_points(&points, parallel, |&(grid, c, s)| {
        run_or_fail(cfg, c, grid, s, bdir.as_deref())
    });

    let name = cfg.name();
    let mut files = Vec::new();
    let multi_grid = cfg.decomposition.grids.len() > 1;
    let mut header = Vec::new();
    if multi_grid {
        header.push("Subdomains".to_string());
    }
    header.push("Contrast".to_string());
    header.extend(sels.iter().map(|&s| selection_label(s)));
    let rows: Vec<Vec<String>> = records
        .chunks(sels.len())
        .map(|chunk| {
            let mut row = Vec::new();
            if multi_grid {
                row.push(chunk[0].subdomains.clone());
            }
            row.push(format_contrast(chunk[0].contrast));
            row.extend(chunk.iter().map(|r| {
                if r.error.is_empty() {
                    format_kappa(r.kappa_est)
                } else {
                    "failed".into()
                }
            }));
            row
        })
        .collect();
    let table = out.join(format!("{name}.csv"));
    write_table(&table, &header, &rows)?;
    files.push(table);
    let runs = out.join(format!("{name}_runs.csv"));
    write_records(&runs, &records)?;
    files.push(runs);

    let (mut failures, mut violations) = (Vec::new(), Vec::new());
    check(
        &records.iter().collect::<Vec<_>>(),
        &mut failures,
        &mut violations,
    );
    Ok(Summary {
        out_dir: out.to_path_buf(),
        files,
        failures,
        violations,
        outcome: Outcome::Robustness(records),
    })
}

/// One- and two-level results for one subdomain grid.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub contrast: f64,
    pub subdomains: String,
    pub num_subdomains: usize,
    pub dofs: usize,
    pub one_level_iterations: usize,
    pub one_level_kappa: Option<f64>,
    pub two_level_iterations: usize,
    pub two_level_kappa: Option<f64>,
    pub evs_per_subdomain: String,
    #[serde(rename = "dim_VH")]
    pub dim_vh: usize,
    pub messages: usize,
    pub bytes: usize,
    pub k0: usize,
    pub kappa_bound: f64,
    pub bound_ok: Option<bool>,
}

fn scaling(cfg: &ExperimentConfig, out: &Path, parallel: bool) -> Result<Summary, LabError> {
    // Fixed mode uses the first EV count only.
    let sel = selections(cfg)[0];
    let bdir = basis_dir(cfg, out)?;
    let mut points = Vec::new();
    for &grid in &cfg.decomposition.grids {
        for &c in &cfg.coefficients.contrasts {
            points.push((grid, c));
        }
    }
    let pairs = map_points(&points, parallel, |&(grid, c)| {
        (
            run_or_fail(cfg, c, grid, None, None),
            run_or_fail(cfg, c, grid, Some(sel), bdir.as_deref()),
        )
    });
    let rows: Vec<ScalingRow> = points
        .iter()
        .zip(&pairs)
        .map(|(&(grid, c), (one, two))| ScalingRow {
            contrast: c,
            subdomains: grid_label(grid),
            num_subdomains: grid[0] * grid[1],
            dofs: two.dofs.max(one.dofs),
            one_level_iterations: one.iterations,
            one_level_kappa: one.kappa_est,
            two_level_iterations: two.iterations,
            two_level_kappa: two.kappa_est,
            evs_per_subdomain: two.evs_per_subdomain.clone(),
            dim_vh: two.dim_vh,
            messages: two.messages,
            bytes: two.bytes,
            k0: two.k0,
            kappa_bound: two.kappa_bound,
            bound_ok: two.bound_ok,
        })
        .collect();

    let name = cfg.name();
    let table = out.join(format!("{name}.csv"));
    write_records(&table, &rows)?;
    let runs = out.join(format!("{name}_runs.csv"));
    let flat: Vec<&RunRecord> = pairs.iter().flat_map(|(a, b)| [a, b]).collect();
    write_records(&runs, &flat)?;

    let (mut failures, mut violations) = (Vec::new(), Vec::new());
    check(&flat, &mut failures, &mut violations);
    Ok(Summary {
        out_dir: out.to_path_buf(),
        files: vec![table, runs],
        failures,
        violations,
        outcome: Outcome::Scaling(rows),
    })
}

/// Coarse approximation error of the solution for one EV count.
#[derive(Debug, Clone, Serialize)]
pub struct CoarseErrorRow {
    pub contrast: f64,
    pub subdomains: String,
    pub evs_per_subdomain: usize,
    #[serde(rename = "dim_VH")]
    pub dim_vh: usize,
    /// Number of stored basis vectors, before null columns are pruned.
    pub basis_vectors: usize,
    pub energy_error: f64,
    pub seminorm: f64,
    pub relative_error: f64,
    pub l2_relative_error: f64,
    pub min_next_eigenvalue: f64,
    pub bound: f64,
    pub bound_ratio: f64,
    pub bound_ok: bool,
}

fn coarse_error(cfg: &ExperimentConfig, out: &Path, parallel: bool) -> Result<Summary, LabError> {
    let bdir = basis_dir(cfg, out)?;
    let fdir = if cfg.coarse_error.fields || cfg.coarse_error.vtk {
        let d = out.join("fields");
        fs::create_dir_all(&d).map_err(LabError::io(&d))?;
        Some(d)
    } else {
        None
    };
    let mut points = Vec::new();
    for &grid in &cfg.decomposition.grids {
        for &c in &cfg.coefficients.contrasts {
            points.push((grid, c));
        }
    }
    let results = map_points(&points, parallel, |&(grid, c)| {
        info!(
            "{} contrast {} grid {}",
            cfg.name(),
            format_contrast(c),
            grid_label(grid)
        );
        coarse_error_point(cfg, c, grid, fdir.as_deref(), bdir.as_deref())
    });
    let mut rows = Vec::new();
    let (mut failures, mut violations) = (Vec::new(), Vec::new());
    for (&(grid, c), r) in points.iter().zip(results) {
        let tag = format!("contrast {} grid {}", format_contrast(c), grid_label(grid));
        match r {
            Ok(rs) => {
                for row in &rs {
                    if !row.bound_ok {
                        violations.push(format!(
                            "{tag} m {}: error {:e} exceeds bound {:e}",
                            row.evs_per_subdomain, row.energy_error, row.bound
                        ));
                    }
                }
                rows.extend(rs);
            }
            Err(e) => failures.push(format!("{tag}: {e}")),
        }
    }
    let table = out.join(format!("{}.csv", cfg.name()));
    write_records(&table, &rows)?;
    Ok(Summary {
        out_dir: out.to_path_buf(),
        files: vec![table],
        failures,
        violations,
        outcome: Outcome::CoarseError(rows),
    })
}

/// The function whose coarse approximation is measured: the discrete
/// solution with zero Dirichlet values.
pub fn homogeneous_part(
    cfg: &ExperimentConfig,
    setup: &Setup,
    contrast: f64,
    grid: [usize; 2],
) -> Result<Vec<f64>, LabError> {
    let u = factorize(&setup.a, 0.0)?.solve(&setup.b);
    let mut v = match cfg.coarse_error.lifting {
        Lifting::Zero => u,
        Lifting::Harmonic => {
            let lift = build_problem(cfg, contrast, grid, cfg.problem.rhs)?.with_source([0.0, 0.0]);
            let (a, b) = build_system(&lift, cfg.problem.rhs, cfg.seed)?;
            let ug = factorize(&a, 0.0)?.solve(&b);
            u.iter().zip(&ug).map(|(x, y)| x - y).collect()
        }
    };
    for (g, x) in v.iter_mut().enumerate() {
        if !setup.problem.is_free(g) {
            *x = 0.0;
        }
    }
    Ok(v)
}

fn coarse_error_point(
    cfg: &ExperimentConfig,
    contrast: f64,
    grid: [usize; 2],
    fields: Option<&Path>,
    basis_out: Option<&Path>,
) -> Result<Vec<CoarseErrorRow>, LabError> {
    let setup = Setup::new(cfg, contrast, grid)?;
    let v = homogeneous_part(cfg, &setup, contrast, grid)?;
    let tag = format!("{}_{}", grid_label(grid), format_contrast(contrast));
    if let Some(dir) = fields {
        if cfg.coarse_error.fields {
            write_field_csv(&dir.join(format!("solution_{tag}.csv")), &setup.problem, &v)?;
        }
        if cfg.coarse_error.vtk {
            write_vtk(
                &dir.join(format!("solution_{tag}.vtk")),
                &setup.problem,
                "solution",
                &v,
            )?;
        }
    }
    let mut counts = cfg.geneo.evs.clone();
    counts.sort_unstable();
    counts.dedup();
    let mmax = *counts.last().expect("validated non-empty");
    // One eigensolve; smaller counts keep a prefix of each subdomain basis.
    let full = setup.basis(cfg, Selection::Fixed(mmax))?;
    let k0 = setup.decomp.coverage_constant();
    let av = setup.a.mul_vec(&v);
    let v_norm = norm2(&v);
    let mut rows = Vec::new();
    for m in counts {
        let basis = full.truncated(m)?;
        if let Some(dir) = basis_out {
            let path = dir.join(format!("basis_{tag}_m{m}.csv"));
            let f = File::create(&path).map_err(LabError::io(&path))?;
            write_basis_csv(&setup.problem, &setup.decomp, &basis, BufWriter::new(f))
                .map_err(LabError::io(&path))?;
        }
        let coarse = assemble_coarse(&setup.a, &setup.decomp, &basis)?;
        let next: Vec<Option<f64>> = basis
            .subdomains
            .iter()
            .map(|s| s.next_eigenvalue())
            .collect();
        let rep = check_error_bound(&coarse, &setup.a, &v, k0, &next)?;
        let vh = coarse_solve(&coarse, &av)?;
        let e: Vec<f64> = v.iter().zip(&vh).map(|(x, y)| x - y).collect();
        debug_assert!(
            (energy_norm(&setup.a, &e)? - rep.error).abs() <= 1e-8 * rep.seminorm.max(1.0)
        );
        if let Some(dir) = fields {
            if cfg.coarse_error.fields {
                write_field_csv(
                    &dir.join(format!("error_{tag}_m{m}.csv")),
                    &setup.problem,
                    &e,
                )?;
            }
            if cfg.coarse_error.vtk {
                write_vtk(
                    &dir.join(format!("error_{tag}_m{m}.vtk")),
                    &setup.problem,
                    "error",
                    &e,
                )?;
            }
        }
        let min_next = next.iter().flatten().fold(f64::INFINITY, |a, &b| a.min(b));
        rows.push(CoarseErrorRow {
            contrast,
            subdomains: grid_label(grid),
            evs_per_subdomain: m,
            dim_vh: coarse.dim(),
            basis_vectors: basis.dim(),
            energy_error: rep.error,
            seminorm: rep.seminorm,
            relative_error: rep.relative_error(),
            l2_relative_error: if v_norm > 0.0 {
                norm2(&e) / v_norm
            } else {
                0.0
            },
            min_next_eigenvalue: min_next,
            bound: rep.bound,
            bound_ratio: rep.ratio,
            bound_ok: !rep.violated,
        });
    }
    Ok(rows)
}
