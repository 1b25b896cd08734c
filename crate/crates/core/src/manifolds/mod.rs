//! Synthetic manifolds with known local intrinsic dimension.
//!
//! A [`ManifoldSpec`] declares a support and a probability measure on it.
//! [`generate`] draws a [`Dataset`] deterministically from `(spec, n, seed)`,
//! attaching the ground-truth LID of every sample (and, for the lollipop, the
//! component each sample came from).

mod chart;
mod io;
mod presets;
mod sample;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use chart::{Chart, ParamDomain};
pub use io::{read_dataset_csv, write_dataset_csv};
pub use presets::{list_specs, preset, Preset};
pub use sample::{generate, interior_queries, Sampler};

/// Shape and measure of a synthetic manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldKind {
    /// Uniform on `[a, b]`.
    UniformInterval { a: f64, b: f64 },
    /// Uniform on `[0, 1]^d`.
    UniformHypercube { d: usize },
    /// Uniform on `[0, e_1] × … × [0, e_k]`.
    UniformRectangle { edge_lengths: Vec<f64> },
    /// `N(0, diag(σ²))` with non-increasing `σ`.
    GaussianDiag { sigmas: Vec<f64> },
    /// `N(0, I_d)` embedded in `R^{2d}` as `(x, x)`.
    GaussianEmbeddedDuplicated { d: usize },
    /// Uniform on the unit circle in `R²`.
    UnitCircle,
    /// Uniform on `(r cos 2πTt, r sin 2πTt, pTt)`, `t ∈ [0, 1]`.
    Helix { radius: f64, pitch: f64, turns: f64 },
    /// Uniform on the unit sphere `S^d ⊂ R^{d+1}`.
    SphereUniform { d: usize },
    /// `(t cos t, h, t sin t)`, uniform in `t ∈ [1.5π, 4.5π]`, `h ∈ [0, 21]`.
    SwissRoll,
    /// Point mass, stick and disc in `R²` (LID 0, 1 and 2).
    Lollipop {
        stick_length: f64,
        disc_radius: f64,
        point_weight: f64,
        stick_weight: f64,
        disc_weight: f64,
    },
    /// Two parallel segments `[0, L] × {0}` and `[0, L] × {s}`, equal mass.
    ParallelSegments { length: f64, separation: f64 },
    /// Uniform over atoms `(ξ_k, 0, …, 0)` with gaps at least `min_gap`.
    PointsOnLine { positions: Vec<f64>, min_gap: f64 },
}

/// A manifold kind placed in an ambient space. Coordinates beyond the kind's
/// natural dimension are identically zero on the support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    #[serde(flatten)]
    pub kind: ManifoldKind,
    pub ambient_dim: usize,
}

pub const SWISS_ROLL_T: (f64, f64) = (1.5 * std::f64::consts::PI, 4.5 * std::f64::consts::PI);
pub const SWISS_ROLL_H: (f64, f64) = (0.0, 21.0);

/// Offset from the stick's far end to the disc centre, and from the stick's
/// origin to the point mass (negative x).
pub(crate) const LOLLIPOP_DISC_OFFSET: f64 = 0.5;
pub(crate) const LOLLIPOP_POINT_OFFSET: f64 = 0.5;

impl Default for ManifoldKind {
    fn default() -> Self {
        ManifoldKind::lollipop()
    }
}

impl ManifoldKind {
    pub fn lollipop() -> Self {
        ManifoldKind::Lollipop {
            stick_length: 1.0,
            disc_radius: 0.4,
            point_weight: 0.1,
            stick_weight: 0.45,
            disc_weight: 0.45,
        }
    }

    pub fn helix() -> Self {
        ManifoldKind::Helix {
            radius: 1.0,
            pitch: 1.0,
            turns: 1.0,
        }
    }

    /// Number of coordinates the kind itself uses.
    pub fn natural_dim(&self) -> usize {
        match self {
            ManifoldKind::UniformInterval { .. } => 1,
            ManifoldKind::UniformHypercube { d } => *d,
            ManifoldKind::UniformRectangle { edge_lengths } => edge_lengths.len(),
            ManifoldKind::GaussianDiag { sigmas } => sigmas.len(),
            ManifoldKind::GaussianEmbeddedDuplicated { d } => 2 * d,
            ManifoldKind::UnitCircle => 2,
            ManifoldKind::Helix { .. } => 3,
            ManifoldKind::SphereUniform { d } => d + 1,
            ManifoldKind::SwissRoll => 3,
            ManifoldKind::Lollipop { .. } => 2,
            ManifoldKind::ParallelSegments { .. } => 2,
            ManifoldKind::PointsOnLine { .. } => 1,
        }
    }

    /// Largest LID over the support.
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            ManifoldKind::UniformInterval { .. } => 1,
            ManifoldKind::UniformHypercube { d } => *d,
            ManifoldKind::UniformRectangle { edge_lengths } => edge_lengths.len(),
            ManifoldKind::GaussianDiag { sigmas } => sigmas.len(),
            ManifoldKind::GaussianEmbeddedDuplicated { d } => *d,
            ManifoldKind::UnitCircle => 1,
            ManifoldKind::Helix { .. } => 1,
            ManifoldKind::SphereUniform { d } => *d,
            ManifoldKind::SwissRoll => 2,
            ManifoldKind::Lollipop { .. } => 2,
            ManifoldKind::ParallelSegments { .. } => 1,
            ManifoldKind::PointsOnLine { .. } => 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match self {
            ManifoldKind::UniformInterval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return bad(format!("interval needs finite a < b, got [{a}, {b}]"));
                }
            }
            ManifoldKind::UniformHypercube { d } | ManifoldKind::GaussianEmbeddedDuplicated { d } => {
                if *d == 0 {
                    return bad("dimension must be positive".into());
                }
            }
            ManifoldKind::SphereUniform { d } => {
                if *d == 0 {
                    return bad("sphere dimension must be positive".into());
                }
            }
            ManifoldKind::UniformRectangle { edge_lengths } => {
                if edge_lengths.is_empty() || !edge_lengths.iter().all(|&e| positive(e)) {
                    return bad("rectangle edges must be non-empty and positive".into());
                }
            }
            ManifoldKind::GaussianDiag { sigmas } => {
                if sigmas.is_empty() || !sigmas.iter().all(|&s| positive(s)) {
                    return bad("gaussian sigmas must be non-empty and strictly positive".into());
                }
                if sigmas.windows(2).any(|w| w[1] > w[0]) {
                    return bad("gaussian sigmas must be non-increasing".into());
                }
            }
            ManifoldKind::UnitCircle | ManifoldKind::SwissRoll => {}
            ManifoldKind::Helix {
                radius,
                pitch,
                turns,
            } => {
                if !(positive(*radius) && pitch.is_finite() && *pitch >= 0.0 && positive(*turns)) {
                    return bad("helix needs radius > 0, pitch ≥ 0, turns > 0".into());
                }
            }
            ManifoldKind::Lollipop {
                stick_length,
                disc_radius,
                point_weight,
                stick_weight,
                disc_weight,
            } => {
                if !(positive(*stick_length) && positive(*disc_radius)) {
                    return bad("lollipop lengths must be positive".into());
                }
                if *disc_radius >= LOLLIPOP_DISC_OFFSET {
                    return bad(format!(
                        "disc radius must be below {LOLLIPOP_DISC_OFFSET} so the disc does not touch the stick"
                    ));
                }
                let ws = [*point_weight, *stick_weight, *disc_weight];
                if ws.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
                    return bad("lollipop weights must be non-negative".into());
                }
                let total: f64 = ws.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("lollipop weights must sum to 1, got {total}"));
                }
            }
            ManifoldKind::ParallelSegments { length, separation } => {
                if !(positive(*length) && positive(*separation)) {
                    return bad("segment length and separation must be positive".into());
                }
            }
            ManifoldKind::PointsOnLine { positions, min_gap } => {
                if positions.is_empty() {
                    return bad("points on line need at least one position".into());
                }
                if !positive(*min_gap) {
                    return bad("minimum gap must be positive".into());
                }
                if positions.iter().any(|p| !p.is_finite()) {
                    return bad("positions must be finite".into());
                }
                if let Some(w) = positions.windows(2).find(|w| w[1] < w[0] + min_gap) {
                    return bad(format!(
                        "positions {} and {} violate the minimum gap {min_gap}",
                        w[0], w[1]
                    ));
                }
            }
        }
        Ok(())
    }
}

impl ManifoldSpec {
    /// Places `kind` in its natural ambient dimension.
    pub fn new(kind: ManifoldKind) -> Self {
        let ambient_dim = kind.natural_dim();
        ManifoldSpec { kind, ambient_dim }
    }

    pub fn with_ambient_dim(kind: ManifoldKind, ambient_dim: usize) -> Result<Self> {
        let spec = ManifoldSpec { kind, ambient_dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        let natural = self.kind.natural_dim();
        if self.ambient_dim < natural {
            return Err(Error::InvalidSpec(format!(
                "ambient dimension {} is below the natural dimension {natural}",
                self.ambient_dim
            )));
        }
        Ok(())
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.kind.intrinsic_dim()
    }

    pub fn natural_dim(&self) -> usize {
        self.kind.natural_dim()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ManifoldSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// A sample matrix with optional ground-truth labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// `n × D` sample matrix.
    pub points: Array2<f64>,
    pub true_lid: Option<Vec<u32>>,
    pub component_id: Option<Vec<u32>>,
    pub spec: Option<ManifoldSpec>,
    pub seed: u64,
}

impl Dataset {
    /// Wraps an unlabeled sample matrix.
    pub fn from_points(points: Array2<f64>) -> Result<Self> {
        let data = Dataset {
            points,
            true_lid: None,
            component_id: None,
            spec: None,
            seed: 0,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset contains non-finite entries".into()));
        }
        let n = self.len();
        let d = self.dim();
        if let Some(lids) = &self.true_lid {
            if lids.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: lids.len(),
                });
            }
            if let Some(&bad) = lids.iter().find(|&&l| l as usize > d) {
                return Err(Error::InvalidArgument(format!(
                    "true LID {bad} exceeds ambient dimension {d}"
                )));
            }
        }
        if let Some(ids) = &self.component_id {
            if ids.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: ids.len(),
                });
            }
        }
        Ok(())
    }

    /// Rows selected by `indices`, labels carried along.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let points = self.points.select(ndarray::Axis(0), indices);
        let pick = |v: &Vec<u32>| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Dataset {
            points,
            true_lid: self.true_lid.as_ref().map(pick),
            component_id: self.component_id.as_ref().map(pick),
            spec: self.spec.clone(),
            seed: self.seed,
        }
    }
}

/// Ground-truth LID of sample `index`.
pub fn lid_at(spec: &ManifoldSpec, index: usize, data: &Dataset) -> Result<u32> {
    if let Some(own) = &data.spec {
        if own != spec {
            return Err(Error::InvalidArgument(
                "dataset was generated from a different spec".into(),
            ));
        }
    }
    let lids = data
        .true_lid
        .as_ref()
        .ok_or_else(|| Error::MissingLabel("dataset has no true_lid column".into()))?;
    lids.get(index).copied().ok_or_else(|| {
        Error::InvalidArgument(format!("index {index} out of range for {} samples", lids.len()))
    })
}
