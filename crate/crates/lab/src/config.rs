//! Experiment configuration files.
//!
//! A config is a TOML document: `key = value` pairs grouped in `[sections]`.
//! Relative paths are resolved against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use geneo_core::fem::Rect;
use serde::Deserialize;

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Robustness,
    CoarseError,
    Scaling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemType {
    Darcy,
    Elasticity,
}

impl ProblemType {
    pub fn name(self) -> &'static str {
        match self {
            ProblemType::Darcy => "darcy",
            ProblemType::Elasticity => "elasticity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPreset {
    /// Darcy: Dirichlet `top` on the top side, `bottom` on the bottom side,
    /// Neumann elsewhere.
    TopBottom,
    /// Elasticity: left side clamped, right side displaced by `(0, -shear)`.
    ClampedShear,
    /// Elasticity: left side clamped, everything else traction free.
    Clamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsMode {
    /// Load and boundary data exactly as configured.
    Problem,
    /// Same Dirichlet sides, but with zero boundary values.
    Homogeneous,
    /// Seeded uniform random entries on the free dofs.
    Random,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemType,
    /// Element counts; ignored when `decomposition.elements_per_subdomain`
    /// is set.
    #[serde(default)]
    pub nx: Option<usize>,
    #[serde(default)]
    pub ny: Option<usize>,
    #[serde(default = "one")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
    pub boundary: BoundaryPreset,
    #[serde(default = "one")]
    pub top: f64,
    #[serde(default)]
    pub bottom: f64,
    #[serde(default = "one")]
    pub shear: f64,
    /// Body force or source term; defaults to `[1, 0]` for Darcy and
    /// `[0, 0]` for elasticity.
    #[serde(default)]
    pub source: Option<[f64; 2]>,
    #[serde(default = "default_rhs")]
    pub rhs: RhsMode,
    #[serde(default = "default_poisson")]
    pub poisson: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Constant,
    Layers,
    Skyscrapers,
    Channels,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub layout: Layout,
    /// Number of layers over the domain height.
    #[serde(default)]
    pub layers: Option<usize>,
    /// Layer thickness in elements; the layer count follows the mesh.
    #[serde(default)]
    pub layer_thickness: Option<usize>,
    /// Inline rectangles `[x0, y0, x1, y1]`.
    #[serde(default)]
    pub rects: Vec<[f64; 4]>,
    /// CSV file with one `x0,y0,x1,y1` rectangle per line.
    #[serde(default)]
    pub layout_file: Option<PathBuf>,
    pub contrasts: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PouChoice {
    Standard,
    Sarkis,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    pub grids: Vec<[usize; 2]>,
    #[serde(default = "one_usize")]
    pub overlap: usize,
    #[serde(default = "default_pou")]
    pub pou: PouChoice,
    /// Scale the mesh with the grid: `nx = px · n`, `ny = py · n`.
    #[serde(default)]
    pub elements_per_subdomain: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Fixed,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenSolverChoice {
    Lanczos,
    Dense,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneoConfig {
    #[serde(default = "default_selection")]
    pub selection: SelectionMode,
    /// Eigenvectors per subdomain, one sweep column each (fixed mode).
    #[serde(default)]
    pub evs: Vec<usize>,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default = "default_eigensolver")]
    pub eigensolver: EigenSolverChoice,
    #[serde(default = "default_eig_tol")]
    pub tol: f64,
    #[serde(default)]
    pub subspace: Option<usize>,
    #[serde(default = "default_restarts")]
    pub max_restarts: usize,
    #[serde(default = "default_initial_request")]
    pub initial_request: usize,
    #[serde(default = "default_max_request")]
    pub max_request: usize,
}

impl Default for GeneoConfig {
    fn default() -> Self {
        Self {
            selection: default_selection(),
            evs: Vec::new(),
            tau: 1.0,
            eigensolver: default_eigensolver(),
            tol: default_eig_tol(),
            subspace: None,
            max_restarts: default_restarts(),
            initial_request: default_initial_request(),
            max_request: default_max_request(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    OneLevel,
    TwoLevel,
    CoarseOnly,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_mode")]
    pub mode: SolverMode,
    #[serde(default = "default_cg_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            tol: default_cg_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lifting {
    /// `v` is the discrete solution with its Dirichlet values set to zero.
    Zero,
    /// `v = u − u_g` with `u_g` the a-harmonic extension of the boundary
    /// data.
    Harmonic,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseErrorConfig {
    #[serde(default = "default_lifting")]
    pub lifting: Lifting,
    /// Nodal error fields per EV count.
    #[serde(default = "yes")]
    pub fields: bool,
    #[serde(default)]
    pub vtk: bool,
}

impl Default for CoarseErrorConfig {
    fn default() -> Self {
        Self {
            lifting: default_lifting(),
            fields: true,
            vtk: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    /// Fill the wall-clock columns of the run table. Off by default so
    /// that reruns produce identical files.
    #[serde(default)]
    pub timings: bool,
    /// Export every coarse basis as CSV.
    #[serde(default)]
    pub basis: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out(),
            timings: false,
            basis: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemConfig,
    pub coefficients: CoefficientConfig,
    pub decomposition: DecompositionConfig,
    #[serde(default)]
    pub geneo: GeneoConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub coarse_error: CoarseErrorConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory the config was loaded from.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_rhs() -> RhsMode {
    RhsMode::Problem
}
fn default_poisson() -> f64 {
    0.3
}
fn default_pou() -> PouChoice {
    PouChoice::Standard
}
fn default_selection() -> SelectionMode {
    SelectionMode::Threshold
}
fn default_eigensolver() -> EigenSolverChoice {
    EigenSolverChoice::Lanczos
}
fn default_eig_tol() -> f64 {
    1e-8
}
fn default_restarts() -> usize {
    200
}
fn default_initial_request() -> usize {
    8
}
fn default_max_request() -> usize {
    64
}
fn default_mode() -> SolverMode {
    SolverMode::TwoLevel
}
fn default_cg_tol() -> f64 {
    1e-5
}
fn default_max_iter() -> usize {
    2000
}
fn default_lifting() -> Lifting {
    Lifting::Zero
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = fs::read_to_string(path).map_err(|e| LabError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self, LabError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.base_dir = base_dir;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            match self.experiment {
                ExperimentKind::Robustness => "robustness",
                ExperimentKind::CoarseError => "coarse_error",
                ExperimentKind::Scaling => "scaling",
            }
            .to_string()
        })
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |m: &str| Err(LabError::Config(m.to_string()));
        if self.coefficients.contrasts.is_empty() {
            return bad("coefficients.contrasts must not be empty");
        }
        if self.coefficients.contrasts.iter().any(|c| !(*c > 0.0)) {
            return bad("contrasts must be positive");
        }
        if self.decomposition.grids.is_empty() {
            return bad("decomposition.grids must not be empty");
        }
        if self
            .decomposition
            .grids
            .iter()
            .any(|g| g[0] == 0 || g[1] == 0)
        {
            return bad("subdomain grids must be at least 1x1");
        }
        if self.decomposition.overlap == 0 {
            return bad("decomposition.overlap must be at least 1");
        }
        let uses_coarse =
            self.solver.mode != SolverMode::OneLevel || self.experiment == ExperimentKind::Scaling;
        if uses_coarse && self.geneo.selection == SelectionMode::Fixed && self.geneo.evs.is_empty()
        {
            return bad("geneo.evs must not be empty in fixed selection mode");
        }
        if self.geneo.selection == SelectionMode::Threshold && !(self.geneo.tau > 0.0) {
            return bad("geneo.tau must be positive");
        }
        match self.experiment {
            ExperimentKind::CoarseError => {
                if self.solver.mode != SolverMode::CoarseOnly {
                    return bad("coarse_error experiments need solver.mode = \"coarse_only\"");
                }
                if self.geneo.selection != SelectionMode::Fixed {
                    return bad("coarse_error experiments sweep fixed EV counts");
                }
                if self.geneo.evs.contains(&0) {
                    return bad("coarse_error EV counts must be positive");
                }
            }
            _ => {
                if self.solver.mode == SolverMode::CoarseOnly {
                    return bad("coarse_only mode is only meaningful for coarse_error");
                }
            }
        }
        if self.decomposition.elements_per_subdomain.is_none()
            && (self.problem.nx.is_none() || self.problem.ny.is_none())
        {
            return bad("set problem.nx and problem.ny, or decomposition.elements_per_subdomain");
        }
        let p = &self.problem;
        match (p.kind, p.boundary) {
            (ProblemType::Darcy, BoundaryPreset::TopBottom) => {}
            (ProblemType::Elasticity, BoundaryPreset::ClampedShear | BoundaryPreset::Clamped) => {}
            (k, b) => {
                return Err(LabError::Config(format!(
                    "boundary {b:?} does not apply to {} problems",
                    k.name()
                )))
            }
        }
        let c = &self.coefficients;
        match c.layout {
            Layout::Layers if c.layers.is_none() == c.layer_thickness.is_none() => {
                return bad("layers layout needs exactly one of `layers` or `layer_thickness`");
            }
            Layout::Skyscrapers | Layout::Channels
                if c.rects.is_empty() && c.layout_file.is_none() =>
            {
                return bad("rectangle layouts need `rects` or `layout_file`");
            }
            _ => {}
        }
        if let Some(f) = &c.layout_file {
            let path = self.resolve(f);
            if !path.is_file() {
                return Err(LabError::MissingFile(path));
            }
        }
        Ok(())
    }

    /// Inline rectangles followed by those from `layout_file`.
    pub fn rects(&self) -> Result<Vec<Rect>, LabError> {
        let mut out: Vec<Rect> = self
            .coefficients
            .rects
            .iter()
            .map(|r| Rect::new(r[0], r[1], r[2], r[3]))
            .collect();
        if let Some(f) = &self.coefficients.layout_file {
            let path = self.resolve(f);
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .comment(Some(b'#'))
                .trim(csv::Trim::All)
                .from_path(&path)
                .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
            for (line, rec) in reader.deserialize::<[f64; 4]>().enumerate() {
                let r = rec.map_err(|e| {
                    LabError::Config(format!("{} record {}: {e}", path.display(), line + 1))
                })?;
                out.push(Rect::new(r[0], r[1], r[2], r[3]));
            }
        }
        Ok(out)
    }
}
