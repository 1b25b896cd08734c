use super::{ManifoldKind, ManifoldSpec};
use crate::{Error, Result};

/// A named, ready-to-use spec.
#[derive(Clone, Debug)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub spec: ManifoldSpec,
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

fn entry(name: &str, description: &str, kind: ManifoldKind) -> Preset {
    Preset {
        name: name.to_string(),
        description: description.to_string(),
        spec: ManifoldSpec::new(kind),
    }
}

/// Every preset used by the benchmark suites.
pub fn list_specs() -> Vec<Preset> {
    let mut presets = vec![
        entry("lollipop", "point mass, stick and disc in R^2 (LID 0/1/2)", ManifoldKind::lollipop()),
        entry("helix_r3", "uniform on a one-turn helix in R^3", ManifoldKind::helix()),
        entry("sphere_s7_r8", "uniform on S^7 in R^8", ManifoldKind::SphereUniform { d: 7 }),
        entry("swiss_roll", "swiss roll in R^3", ManifoldKind::SwissRoll),
        entry("uniform_interval", "U(0,1)", ManifoldKind::UniformInterval { a: 0.0, b: 1.0 }),
        entry("unit_circle", "uniform on the unit circle in R^2", ManifoldKind::UnitCircle),
        entry(
            "multiscale_gaussian_d10",
            "N(0, diag(σ²)) in R^10 with σ log-spaced on [1e-3, 1]",
            ManifoldKind::GaussianDiag {
                sigmas: log_spaced(1.0, 1e-3, 10),
            },
        ),
        entry(
            "multiscale_uniform_d4",
            "uniform box in R^4 with edges log-spaced on [1e-3, 1]",
            ManifoldKind::UniformRectangle {
                edge_lengths: log_spaced(1.0, 1e-3, 4),
            },
        ),
        entry(
            "rectangle_0.1_0.01",
            "uniform on a 0.1 × 0.01 rectangle in R^2",
            ManifoldKind::UniformRectangle {
                edge_lengths: vec![0.1, 0.01],
            },
        ),
        entry(
            "parallel_segments",
            "two parallel segments of length 20 at separation 0.1",
            ManifoldKind::ParallelSegments {
                length: 20.0,
                separation: 0.1,
            },
        ),
        entry(
            "points_on_line",
            "ten atoms on a line with unit gaps",
            ManifoldKind::PointsOnLine {
                positions: (0..10).map(f64::from).collect(),
                min_gap: 1.0,
            },
        ),
    ];
    for d in [10, 100, 1000, 4000] {
        presets.push(entry(
            &format!("u{d}_r{d}"),
            &format!("uniform hypercube [0,1]^{d}"),
            ManifoldKind::UniformHypercube { d },
        ));
        presets.push(entry(
            &format!("n{d}_r{d}"),
            &format!("standard normal in R^{d}"),
            ManifoldKind::GaussianDiag {
                sigmas: vec![1.0; d],
            },
        ));
    }
    for d in [10, 100, 1000, 2000] {
        presets.push(entry(
            &format!("n{d}_r{}", 2 * d),
            &format!("standard normal in R^{d} with duplicated coordinates in R^{}", 2 * d),
            ManifoldKind::GaussianEmbeddedDuplicated { d },
        ));
    }
    presets
}

/// Looks a preset up by name.
pub fn preset(name: &str) -> Result<ManifoldSpec> {
    list_specs()
        .into_iter()
        .find(|p| p.name == name)
        .map(|p| p.spec)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_contains_benchmark_rows() {
        let specs = list_specs();
        let dim = |name: &str| {
            specs
                .iter()
                .find(|p| p.name == name)
                .map(|p| p.spec.intrinsic_dim())
        };
        assert_eq!(dim("swiss_roll"), Some(2));
        assert_eq!(dim("helix_r3"), Some(1));
        assert_eq!(dim("sphere_s7_r8"), Some(7));
        assert_eq!(dim("n100_r200"), Some(100));
        assert_eq!(dim("u4000_r4000"), Some(4000));
    }

    #[test]
    fn every_preset_is_valid_and_unique() {
        let specs = list_specs();
        for p in &specs {
            p.spec.validate().unwrap();
        }
        let mut names: Vec<_> = specs.iter().map(|p| p.name.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), specs.len());
    }

    #[test]
    fn multiscale_sigmas_span_the_range() {
        match preset("multiscale_gaussian_d10").unwrap().kind {
            ManifoldKind::GaussianDiag { sigmas } => {
                assert_eq!(sigmas.len(), 10);
                assert!((sigmas[0] - 1.0).abs() < 1e-15);
                assert!((sigmas[9] - 1e-3).abs() < 1e-15);
            }
            other => panic!("unexpected kind {other:?}"),
        }
        assert!(preset("nope").is_err());
    }
}
