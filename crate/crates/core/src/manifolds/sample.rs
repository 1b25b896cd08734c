use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    Dataset, ManifoldKind, ManifoldSpec, LOLLIPOP_DISC_OFFSET, LOLLIPOP_POINT_OFFSET, SWISS_ROLL_H,
    SWISS_ROLL_T,
};
use crate::rng::seeded;
use crate::{Error, Result};

/// Deterministic sampler for one spec.
#[derive(Clone, Debug)]
pub struct Sampler {
    spec: ManifoldSpec,
    /// Boundary margin: samples stay at least this far (in ambient length)
    /// from the edges of bounded pieces.
    margin: f64,
}

impl Sampler {
    pub fn new(spec: ManifoldSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Sampler { spec, margin: 0.0 })
    }

    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    /// Restricts sampling to points at least `margin` away from the boundary
    /// of every bounded piece of the support.
    pub fn with_margin(mut self, margin: f64) -> Result<Self> {
        if !(margin.is_finite() && margin >= 0.0) {
            return Err(Error::InvalidArgument(format!("margin must be ≥ 0, got {margin}")));
        }
        let too_wide = |extent: f64| 2.0 * margin >= extent;
        let ok = match &self.spec.kind {
            ManifoldKind::UniformInterval { a, b } => !too_wide(b - a),
            ManifoldKind::UniformHypercube { .. } => !too_wide(1.0),
            ManifoldKind::UniformRectangle { edge_lengths } => {
                edge_lengths.iter().all(|&e| !too_wide(e))
            }
            ManifoldKind::Helix { .. } => !too_wide(self.helix_length()),
            ManifoldKind::SwissRoll => {
                !too_wide(SWISS_ROLL_T.1 - SWISS_ROLL_T.0) && !too_wide(SWISS_ROLL_H.1)
            }
            ManifoldKind::Lollipop {
                stick_length,
                disc_radius,
                ..
            } => !too_wide(*stick_length) && margin < *disc_radius,
            ManifoldKind::ParallelSegments { length, .. } => !too_wide(*length),
            _ => true,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "margin {margin} leaves no interior for this manifold"
            )));
        }
        self.margin = margin;
        Ok(self)
    }

    fn helix_length(&self) -> f64 {
        match self.spec.kind {
            ManifoldKind::Helix {
                radius,
                pitch,
                turns,
            } => turns * (2.0 * PI * radius).hypot(pitch),
            _ => 0.0,
        }
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidArgument("cannot generate an empty dataset".into()));
        }
        let spec = &self.spec;
        let m = self.margin;
        let mut rng = seeded(seed);
        let mut points = Array2::<f64>::zeros((n, spec.ambient_dim));
        let mut lids = vec![spec.intrinsic_dim() as u32; n];
        let mut components: Option<Vec<u32>> = None;

        let uniform = |rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64| {
            lo + m + (hi - lo - 2.0 * m) * rng.random::<f64>()
        };

        match &spec.kind {
            ManifoldKind::UniformInterval { a, b } => {
                for i in 0..n {
                    points[[i, 0]] = uniform(&mut rng, *a, *b);
                }
            }
            ManifoldKind::UniformHypercube { d } => {
                for i in 0..n {
                    for k in 0..*d {
                        points[[i, k]] = uniform(&mut rng, 0.0, 1.0);
                    }
                }
            }
            ManifoldKind::UniformRectangle { edge_lengths } => {
                for i in 0..n {
                    for (k, &e) in edge_lengths.iter().enumerate() {
                        points[[i, k]] = uniform(&mut rng, 0.0, e);
                    }
                }
            }
            ManifoldKind::GaussianDiag { sigmas } => {
                for i in 0..n {
                    for (k, &s) in sigmas.iter().enumerate() {
                        let z: f64 = rng.sample(StandardNormal);
                        points[[i, k]] = s * z;
                    }
                }
            }
            ManifoldKind::GaussianEmbeddedDuplicated { d } => {
                for i in 0..n {
                    for k in 0..*d {
                        let z: f64 = rng.sample(StandardNormal);
                        points[[i, k]] = z;
                        points[[i, k + d]] = z;
                    }
                }
            }
            ManifoldKind::UnitCircle => {
                for i in 0..n {
                    let angle = 2.0 * PI * rng.random::<f64>();
                    points[[i, 0]] = angle.cos();
                    points[[i, 1]] = angle.sin();
                }
            }
            ManifoldKind::Helix {
                radius,
                pitch,
                turns,
            } => {
                let dt = m / self.helix_length();
                for i in 0..n {
                    let t = dt + (1.0 - 2.0 * dt) * rng.random::<f64>();
                    let angle = 2.0 * PI * turns * t;
                    points[[i, 0]] = radius * angle.cos();
                    points[[i, 1]] = radius * angle.sin();
                    points[[i, 2]] = pitch * turns * t;
                }
            }
            ManifoldKind::SphereUniform { d } => {
                let mut v = vec![0.0; d + 1];
                for i in 0..n {
                    for x in v.iter_mut() {
                        *x = rng.sample(StandardNormal);
                    }
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    for (k, x) in v.iter().enumerate() {
                        points[[i, k]] = x / norm;
                    }
                }
            }
            ManifoldKind::SwissRoll => {
                // the arc-length speed is ≥ 1, so a parameter margin of m keeps
                // samples at least m from the t-boundary
                for i in 0..n {
                    let t = uniform(&mut rng, SWISS_ROLL_T.0, SWISS_ROLL_T.1);
                    let h = uniform(&mut rng, SWISS_ROLL_H.0, SWISS_ROLL_H.1);
                    points[[i, 0]] = t * t.cos();
                    points[[i, 1]] = h;
                    points[[i, 2]] = t * t.sin();
                }
            }
            ManifoldKind::Lollipop {
                stick_length,
                disc_radius,
                point_weight,
                stick_weight,
                ..
            } => {
                let centre = stick_length + LOLLIPOP_DISC_OFFSET;
                let mut ids = Vec::with_capacity(n);
                for i in 0..n {
                    let u: f64 = rng.random();
                    let comp = if u < *point_weight {
                        0
                    } else if u < point_weight + stick_weight {
                        1
                    } else {
                        2
                    };
                    match comp {
                        0 => points[[i, 0]] = -LOLLIPOP_POINT_OFFSET,
                        1 => points[[i, 0]] = uniform(&mut rng, 0.0, *stick_length),
                        _ => {
                            let r_max = disc_radius - m;
                            let r = r_max * rng.random::<f64>().sqrt();
                            let phi = 2.0 * PI * rng.random::<f64>();
                            points[[i, 0]] = centre + r * phi.cos();
                            points[[i, 1]] = r * phi.sin();
                        }
                    }
                    lids[i] = comp;
                    ids.push(comp);
                }
                components = Some(ids);
            }
            ManifoldKind::ParallelSegments { length, separation } => {
                let mut ids = Vec::with_capacity(n);
                for i in 0..n {
                    let which = u32::from(rng.random::<bool>());
                    points[[i, 0]] = uniform(&mut rng, 0.0, *length);
                    points[[i, 1]] = f64::from(which) * separation;
                    ids.push(which);
                }
                components = Some(ids);
            }
            ManifoldKind::PointsOnLine { positions, .. } => {
                let mut ids = Vec::with_capacity(n);
                for i in 0..n {
                    let k = rng.random_range(0..positions.len());
                    points[[i, 0]] = positions[k];
                    ids.push(k as u32);
                }
                components = Some(ids);
            }
        }

        let data = Dataset {
            points,
            true_lid: Some(lids),
            component_id: components,
            spec: Some(spec.clone()),
            seed,
        };
        data.validate()?;
        Ok(data)
    }
}

/// Draws `n` samples from `spec` with the given seed. Bit-identical across
/// calls with the same arguments.
pub fn generate(spec: &ManifoldSpec, n: usize, seed: u64) -> Result<Dataset> {
    Sampler::new(spec.clone())?.generate(n, seed)
}

/// Samples from the part of the support at least `margin` away from every
/// boundary. Unbounded or boundaryless supports are sampled as usual.
pub fn interior_queries(spec: &ManifoldSpec, n: usize, margin: f64, seed: u64) -> Result<Dataset> {
    Sampler::new(spec.clone())?
        .with_margin(margin)?
        .generate(n, seed)
}
