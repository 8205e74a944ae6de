//! Piecewise-constant coefficient fields on the elements of a structured mesh.

use std::io::Read;

use super::StructuredMesh;
use crate::error::{GeneoError, Result};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]` in domain coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Constant(f64),
    /// Equally thick horizontal layers, odd layers (counting from the
    /// bottom) carry the contrast value.
    Layers {
        count: usize,
        contrast: f64,
    },
    /// Background 1 with high-valued rectangles.
    Skyscrapers {
        rects: Vec<Rect>,
        contrast: f64,
    },
    Channels {
        rects: Vec<Rect>,
        contrast: f64,
    },
    Raster,
}

/// One strictly positive value per element.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    kind: FieldKind,
    values: Vec<f64>,
}

impl CoefficientField {
    pub fn constant(mesh: &StructuredMesh, value: f64) -> Result<Self> {
        Self::checked(FieldKind::Constant(value), vec![value; mesh.num_elements()])
    }

    pub fn layers(mesh: &StructuredMesh, count: usize, contrast: f64) -> Result<Self> {
        if count == 0 {
            return Err(GeneoError::Domain("layer count must be positive".into()));
        }
        let values = (0..mesh.num_elements())
            .map(|e| {
                let (_, yc) = mesh.element_center(e);
                let layer = ((yc / mesh.ly) * count as f64).floor() as usize;
                if layer.min(count - 1) % 2 == 1 {
                    contrast
                } else {
                    1.0
                }
            })
            .collect();
        Self::checked(FieldKind::Layers { count, contrast }, values)
    }

    pub fn skyscrapers(mesh: &StructuredMesh, rects: Vec<Rect>, contrast: f64) -> Result<Self> {
        let values = Self::rect_values(mesh, &rects, contrast);
        Self::checked(FieldKind::Skyscrapers { rects, contrast }, values)
    }

    pub fn channels(mesh: &StructuredMesh, rects: Vec<Rect>, contrast: f64) -> Result<Self> {
        let values = Self::rect_values(mesh, &rects, contrast);
        Self::checked(FieldKind::Channels { rects, contrast }, values)
    }

    pub fn raster(mesh: &StructuredMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_elements() {
            return Err(GeneoError::Shape {
                expected: mesh.num_elements(),
                got: values.len(),
            });
        }
        Self::checked(FieldKind::Raster, values)
    }

    /// Reads `nx ny` followed by `nx·ny` row-major element values.
    pub fn read_raster<R: Read>(mesh: &StructuredMesh, mut input: R) -> Result<Self> {
        let mut text = String::new();
        input
            .read_to_string(&mut text)
            .map_err(|e| GeneoError::Parse(e.to_string()))?;
        let mut tokens = text.split_whitespace();
        let mut header = |what: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| GeneoError::Parse(format!("raster file missing {what}")))?
                .parse()
                .map_err(|_| GeneoError::Parse(format!("raster {what} is not an integer")))
        };
        let (nx, ny) = (header("nx")?, header("ny")?);
        if nx != mesh.nx || ny != mesh.ny {
            return Err(GeneoError::Parse(format!(
                "raster is {nx}x{ny} but mesh is {}x{}",
                mesh.nx, mesh.ny
            )));
        }
        let values: Vec<f64> = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| GeneoError::Parse(format!("bad raster value `{t}`")))
            })
            .collect::<Result<_>>()?;
        Self::raster(mesh, values)
    }

    fn rect_values(mesh: &StructuredMesh, rects: &[Rect], contrast: f64) -> Vec<f64> {
        (0..mesh.num_elements())
            .map(|e| {
                let (x, y) = mesh.element_center(e);
                if rects.iter().any(|r| r.contains(x, y)) {
                    contrast
                } else {
                    1.0
                }
            })
            .collect()
    }

    fn checked(kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        if let Some((element, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(GeneoError::CoefficientDomain { element, value });
        }
        Ok(Self { kind, values })
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    #[inline]
    pub fn value(&self, element: usize) -> f64 {
        self.values[element]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// max / min over elements.
    pub fn contrast(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi / lo
    }
}

/// Per-element isotropic plane-strain material.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticField {
    pub young: CoefficientField,
    pub poisson: Vec<f64>,
}

impl ElasticField {
    pub fn uniform_poisson(young: CoefficientField, poisson: f64) -> Result<Self> {
        let n = young.len();
        Self::new(young, vec![poisson; n])
    }

    pub fn new(young: CoefficientField, poisson: Vec<f64>) -> Result<Self> {
        if poisson.len() != young.len() {
            return Err(GeneoError::Shape {
                expected: young.len(),
                got: poisson.len(),
            });
        }
        if let Some((element, &nu)) = poisson
            .iter()
            .enumerate()
            .find(|(_, nu)| !(**nu > 0.0 && **nu < 0.5))
        {
            return Err(GeneoError::MaterialParameter {
                element,
                young: young.value(element),
                poisson: nu,
            });
        }
        Ok(Self { young, poisson })
    }
}

/// Material data for either problem kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Material {
    Darcy(CoefficientField),
    Elastic(ElasticField),
}
