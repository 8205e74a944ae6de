//! Overlapping decompositions of a structured grid into a `px × py` array of
//! rectangular subdomains.
//!
//! Each subdomain starts from a nonoverlapping block of elements and is
//! grown by `ℓ` element layers. Dof multiplicities are obtained the way a
//! distributed code would: every subdomain contributes a vector of ones and
//! adds what its neighbors send for the shared dofs.

mod pou;

pub use pou::{sarkis_pou, standard_pou, PartitionOfUnity, PouKind};

use std::io::Write;

use crate::error::{GeneoError, Result};
use crate::fem::FemProblem;

/// Half-open element ranges `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementBox {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl ElementBox {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    fn grown(&self, layers: usize, nx: usize, ny: usize) -> Self {
        Self {
            x0: self.x0.saturating_sub(layers),
            x1: (self.x1 + layers).min(nx),
            y0: self.y0.saturating_sub(layers),
            y1: (self.y1 + layers).min(ny),
        }
    }

    /// Node ranges (closed) intersect.
    fn touches(&self, other: &ElementBox) -> bool {
        self.x0 <= other.x1 && other.x0 <= self.x1 && self.y0 <= other.y1 && other.y0 <= self.y1
    }
}

#[derive(Debug, Clone)]
pub struct Subdomain {
    pub id: usize,
    /// Position in the subdomain grid.
    pub grid: (usize, usize),
    /// Nonoverlapping block Ω_j'.
    pub owned: ElementBox,
    /// Overlapping block Ω_j.
    pub extent: ElementBox,
    /// Elements of Ω_j, ascending.
    pub elements: Vec<usize>,
    /// Global dofs of Ω_j, ascending; position = local index.
    pub dofs: Vec<usize>,
    /// Local dofs on the closure of ∂Ω_j \ ∂Ω.
    pub artificial: Vec<bool>,
    /// Local dofs belonging to at least one other subdomain (Ω_j^o).
    pub overlap_dofs: Vec<usize>,
    /// Elements of Ω_j whose dofs all lie in the overlap zone.
    pub overlap_elements: Vec<usize>,
    pub neighbors: Vec<usize>,
    /// Diagonal of the bounding box of Ω_j.
    pub diameter: f64,
    /// Narrowest overlap width over the artificial sides.
    pub overlap_width: f64,
}

impl Subdomain {
    pub fn num_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.dofs.binary_search(&global).ok()
    }

    /// Local dofs not on the artificial boundary, i.e. the support of
    /// `V_{h,0}(Ω_j)` used by the Schwarz local solves.
    pub fn interior_dofs(&self) -> Vec<usize> {
        (0..self.dofs.len())
            .filter(|&l| !self.artificial[l])
            .collect()
    }

    pub fn is_floating(&self, problem: &FemProblem) -> bool {
        self.dofs.iter().all(|&d| problem.is_free(d))
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub px: usize,
    pub py: usize,
    pub layers: usize,
    pub subdomains: Vec<Subdomain>,
    /// Number of subdomains containing each global dof.
    pub multiplicity: Vec<u32>,
    /// Global Dirichlet dofs.
    pub constrained: Vec<bool>,
    pub components: usize,
    /// Neighbor-exchange messages used to compute the multiplicities.
    pub exchange_messages: usize,
}

/// `px × py` uniform split grown by `layers` element layers.
pub fn build_decomposition(
    problem: &FemProblem,
    px: usize,
    py: usize,
    layers: usize,
) -> Result<Decomposition> {
    let mesh = &problem.mesh;
    if px == 0 || py == 0 || px > mesh.nx || py > mesh.ny {
        return Err(GeneoError::Domain(format!(
            "subdomain grid {px}x{py} incompatible with {}x{} elements",
            mesh.nx, mesh.ny
        )));
    }
    let xcuts: Vec<usize> = (0..=px).map(|s| s * mesh.nx / px).collect();
    let ycuts: Vec<usize> = (0..=py).map(|s| s * mesh.ny / py).collect();
    build_with_cuts(problem, &xcuts, &ycuts, layers)
}

/// General tensor split; `xcuts` and `ycuts` are strictly increasing and
/// span `0..=nx` / `0..=ny`.
pub fn build_with_cuts(
    problem: &FemProblem,
    xcuts: &[usize],
    ycuts: &[usize],
    layers: usize,
) -> Result<Decomposition> {
    let mesh = &problem.mesh;
    let valid = |cuts: &[usize], n: usize| {
        cuts.len() >= 2
            && cuts[0] == 0
            && *cuts.last().unwrap() == n
            && cuts.windows(2).all(|w| w[0] < w[1])
    };
    if !valid(xcuts, mesh.nx) || !valid(ycuts, mesh.ny) {
        return Err(GeneoError::Domain("invalid subdomain cuts".into()));
    }
    if layers == 0 {
        return Err(GeneoError::Domain(
            "at least one overlap layer is required".into(),
        ));
    }
    let px = xcuts.len() - 1;
    let py = ycuts.len() - 1;
    let mut order = Vec::with_capacity(px * py);
    for sy in 0..py {
        for sx in 0..px {
            order.push((sx, sy));
        }
    }
    build_ordered(problem, xcuts, ycuts, layers, &order)
}

/// Builds subdomains in the given grid-position order; used to check
/// that results do not depend on subdomain numbering.
pub fn build_ordered(
    problem: &FemProblem,
    xcuts: &[usize],
    ycuts: &[usize],
    layers: usize,
    order: &[(usize, usize)],
) -> Result<Decomposition> {
    let mesh = &problem.mesh;
    let px = xcuts.len() - 1;
    let py = ycuts.len() - 1;
    let c = problem.dofs.components();
    let n_dofs = problem.num_dofs();

    let owned_of = |sx: usize, sy: usize| ElementBox {
        x0: xcuts[sx],
        x1: xcuts[sx + 1],
        y0: ycuts[sy],
        y1: ycuts[sy + 1],
    };
    let extent_of = |sx: usize, sy: usize| owned_of(sx, sy).grown(layers, mesh.nx, mesh.ny);

    let mut subdomains = Vec::with_capacity(order.len());
    for (id, &(sx, sy)) in order.iter().enumerate() {
        let owned = owned_of(sx, sy);
        let extent = extent_of(sx, sy);
        let mut elements = Vec::with_capacity(extent.width() * extent.height());
        for ey in extent.y0..extent.y1 {
            for ex in extent.x0..extent.x1 {
                elements.push(mesh.element_index(ex, ey));
            }
        }
        let mut dofs = Vec::with_capacity((extent.width() + 1) * (extent.height() + 1) * c);
        let mut artificial = Vec::with_capacity(dofs.capacity());
        for j in extent.y0..=extent.y1 {
            for i in extent.x0..=extent.x1 {
                let node = mesh.node_index(i, j);
                // Closure of the artificial boundary: includes the points
                // where it meets ∂Ω.
                let art = (i == extent.x0 && i > 0)
                    || (i == extent.x1 && i < mesh.nx)
                    || (j == extent.y0 && j > 0)
                    || (j == extent.y1 && j < mesh.ny);
                for k in 0..c {
                    dofs.push(problem.dofs.dof(node, k));
                    artificial.push(art);
                }
            }
        }

        let (hx, hy) = (mesh.hx(), mesh.hy());
        let diameter =
            ((extent.width() as f64 * hx).powi(2) + (extent.height() as f64 * hy).powi(2)).sqrt();
        // Overlap width per artificial side: how far Ω_j reaches into the
        // adjacent subdomain's extent.
        let mut widths = Vec::new();
        if sx + 1 < px {
            widths.push((extent.x1 - extent_of(sx + 1, sy).x0) as f64 * hx);
        }
        if sx > 0 {
            widths.push((extent_of(sx - 1, sy).x1 - extent.x0) as f64 * hx);
        }
        if sy + 1 < py {
            widths.push((extent.y1 - extent_of(sx, sy + 1).y0) as f64 * hy);
        }
        if sy > 0 {
            widths.push((extent_of(sx, sy - 1).y1 - extent.y0) as f64 * hy);
        }
        let overlap_width = widths.into_iter().fold(diameter, f64::min);

        subdomains.push(Subdomain {
            id,
            grid: (sx, sy),
            owned,
            extent,
            elements,
            dofs,
            artificial,
            overlap_dofs: Vec::new(),
            overlap_elements: Vec::new(),
            neighbors: Vec::new(),
            diameter,
            overlap_width,
        });
    }

    for i in 0..subdomains.len() {
        let nbrs: Vec<usize> = (0..subdomains.len())
            .filter(|&j| j != i && subdomains[i].extent.touches(&subdomains[j].extent))
            .collect();
        subdomains[i].neighbors = nbrs;
    }
    let covers_all = |s: &Subdomain| s.extent.width() == mesh.nx && s.extent.height() == mesh.ny;
    if subdomains.len() > 1 && subdomains.iter().any(covers_all) {
        log::warn!("overlap of {layers} layers makes some subdomain cover the whole domain");
    }

    let constrained: Vec<bool> = problem.constrained().iter().map(Option::is_some).collect();
    let mut decomp = Decomposition {
        px,
        py,
        layers,
        subdomains,
        multiplicity: vec![0; n_dofs],
        constrained,
        components: c,
        exchange_messages: 0,
    };
    decomp.detect_overlap_zone(problem);
    Ok(decomp)
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    pub fn num_dofs(&self) -> usize {
        self.multiplicity.len()
    }

    /// Per-subdomain local multiplicity via one neighbor exchange: start
    /// from ones, add the ones each neighbor holds on shared dofs, and mark
    /// dofs with a count above one. Fills `overlap_dofs`,
    /// `overlap_elements` and the global `multiplicity`.
    pub fn detect_overlap_zone(&mut self, problem: &FemProblem) -> Vec<Vec<usize>> {
        let counts = self.exchange_sum(|s| vec![1.0; s.num_dofs()]);
        self.exchange_messages = self.subdomains.iter().map(|s| s.neighbors.len()).sum();
        self.multiplicity.iter_mut().for_each(|m| *m = 0);
        let mut zones = Vec::with_capacity(self.len());
        for (s, local) in self.subdomains.iter_mut().zip(&counts) {
            for (l, &g) in s.dofs.iter().enumerate() {
                self.multiplicity[g] = local[l] as u32;
            }
            s.overlap_dofs = (0..s.dofs.len()).filter(|&l| local[l] > 1.0).collect();
            let mut in_zone = vec![false; s.dofs.len()];
            for &l in &s.overlap_dofs {
                in_zone[l] = true;
            }
            s.overlap_elements = s
                .elements
                .iter()
                .copied()
                .filter(|&e| {
                    problem
                        .dofs
                        .element_dofs(&problem.mesh, e)
                        .iter()
                        .all(|&g| in_zone[s.local_index(g).expect("element dof inside Ω_j")])
                })
                .collect();
            zones.push(s.overlap_dofs.iter().map(|&l| s.dofs[l]).collect());
        }
        zones
    }

    /// For every subdomain, its own local vector plus the neighbors'
    /// values on shared dofs.
    pub(crate) fn exchange_sum<F>(&self, local: F) -> Vec<Vec<f64>>
    where
        F: Fn(&Subdomain) -> Vec<f64>,
    {
        let sent: Vec<Vec<f64>> = self.subdomains.iter().map(&local).collect();
        self.subdomains
            .iter()
            .map(|s| {
                let mut acc = sent[s.id].clone();
                for &n in &s.neighbors {
                    let other = &self.subdomains[n];
                    for (l, &g) in s.dofs.iter().enumerate() {
                        if let Some(o) = other.local_index(g) {
                            acc[l] += sent[n][o];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// Multiplicities recomputed directly from the raw element sets.
    pub fn multiplicity_from_elements(&self, problem: &FemProblem) -> Vec<u32> {
        let mut m = vec![0u32; self.num_dofs()];
        for s in &self.subdomains {
            for g in problem.dofs_of_elements(&s.elements) {
                m[g] += 1;
            }
        }
        m
    }

    /// Maximum number of subdomains covering a dof.
    pub fn coverage_constant(&self) -> usize {
        self.multiplicity.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn restrict(&self, j: usize, global: &[f64]) -> Result<Vec<f64>> {
        if global.len() != self.num_dofs() {
            return Err(GeneoError::Shape {
                expected: self.num_dofs(),
                got: global.len(),
            });
        }
        Ok(self.subdomains[j].dofs.iter().map(|&g| global[g]).collect())
    }

    /// Zero extension of a local vector.
    pub fn prolong(&self, j: usize, local: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.num_dofs()];
        self.prolong_add(j, local, &mut out)?;
        Ok(out)
    }

    pub fn prolong_add(&self, j: usize, local: &[f64], global: &mut [f64]) -> Result<()> {
        let s = &self.subdomains[j];
        if local.len() != s.num_dofs() {
            return Err(GeneoError::Shape {
                expected: s.num_dofs(),
                got: local.len(),
            });
        }
        for (&g, &v) in s.dofs.iter().zip(local) {
            global[g] += v;
        }
        Ok(())
    }

    pub fn overlap_widths(&self) -> Vec<f64> {
        self.subdomains.iter().map(|s| s.overlap_width).collect()
    }

    pub fn diameters(&self) -> Vec<f64> {
        self.subdomains.iter().map(|s| s.diameter).collect()
    }

    /// CSV rows `dof,x,y,subdomain,mu` for every (subdomain, local dof).
    pub fn write_pou_csv<W: Write>(
        &self,
        problem: &FemProblem,
        pou: &PartitionOfUnity,
        mut out: W,
    ) -> std::io::Result<()> {
        writeln!(out, "dof,x,y,subdomain,mu")?;
        for s in &self.subdomains {
            for (l, &g) in s.dofs.iter().enumerate() {
                let (x, y) = problem.dof_coords(g);
                writeln!(out, "{g},{x},{y},{},{}", s.id, pou.weights[s.id][l])?;
            }
        }
        Ok(())
    }

    /// CSV rows `dof,x,y,multiplicity`.
    pub fn write_multiplicity_csv<W: Write>(
        &self,
        problem: &FemProblem,
        mut out: W,
    ) -> std::io::Result<()> {
        writeln!(out, "dof,x,y,multiplicity")?;
        for (g, m) in self.multiplicity.iter().enumerate() {
            let (x, y) = problem.dof_coords(g);
            writeln!(out, "{g},{x},{y},{m}")?;
        }
        Ok(())
    }
}

/// Free-function form of [`Decomposition::coverage_constant`].
pub fn coverage_constant(decomp: &Decomposition) -> usize {
    decomp.coverage_constant()
}
