use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::{
    ManifoldKind, ManifoldSpec, LOLLIPOP_DISC_OFFSET, LOLLIPOP_POINT_OFFSET, SWISS_ROLL_H,
    SWISS_ROLL_T,
};

/// Parameter domain of a chart.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamDomain {
    /// Zero-dimensional: the chart is a single atom.
    Point,
    Interval { lo: f64, hi: f64, periodic: bool },
    Rectangle {
        lo: [f64; 2],
        hi: [f64; 2],
        periodic: [bool; 2],
    },
}

impl ParamDomain {
    pub fn dim(&self) -> usize {
        match self {
            ParamDomain::Point => 0,
            ParamDomain::Interval { .. } => 1,
            ParamDomain::Rectangle { .. } => 2,
        }
    }
}

type MapFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type LogDensityFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// One smooth piece of a support: a parameter domain, a map `γ` into the
/// kind's natural coordinates and a parameter density `p(u)`. The measure of
/// the piece is `weight · γ_*(p du)`.
#[derive(Clone)]
pub struct Chart {
    pub weight: f64,
    pub domain: ParamDomain,
    /// LID of the piece.
    pub lid: u32,
    /// Dimension of `γ`'s output.
    pub out_dim: usize,
    map: Arc<MapFn>,
    log_density: Arc<LogDensityFn>,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("weight", &self.weight)
            .field("domain", &self.domain)
            .field("lid", &self.lid)
            .field("out_dim", &self.out_dim)
            .finish_non_exhaustive()
    }
}

impl Chart {
    pub fn new(
        weight: f64,
        domain: ParamDomain,
        out_dim: usize,
        map: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        log_density: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let lid = domain.dim() as u32;
        Chart {
            weight,
            domain,
            lid,
            out_dim,
            map: Arc::new(map),
            log_density: Arc::new(log_density),
        }
    }

    /// An atom at `location`.
    pub fn atom(weight: f64, location: Vec<f64>) -> Self {
        let out_dim = location.len();
        Chart::new(
            weight,
            ParamDomain::Point,
            out_dim,
            move |_, out| out.copy_from_slice(&location),
            |_| 0.0,
        )
    }

    #[inline]
    pub fn map(&self, u: &[f64], out: &mut [f64]) {
        (self.map)(u, out)
    }

    #[inline]
    pub fn log_param_density(&self, u: &[f64]) -> f64 {
        (self.log_density)(u)
    }
}

impl ManifoldSpec {
    /// Parametrizations of the support in natural coordinates, or `None` for
    /// kinds that are only handled in closed form (Gaussians, spheres,
    /// hypercubes above two dimensions).
    pub fn charts(&self) -> Option<Vec<Chart>> {
        let charts = match &self.kind {
            ManifoldKind::UniformInterval { a, b } => {
                let (a, b) = (*a, *b);
                vec![Chart::new(
                    1.0,
                    ParamDomain::Interval {
                        lo: a,
                        hi: b,
                        periodic: false,
                    },
                    1,
                    |u, out| out[0] = u[0],
                    move |_| -(b - a).ln(),
                )]
            }
            ManifoldKind::UniformHypercube { d } if *d <= 2 => {
                rectangle_chart(&vec![1.0; *d])
            }
            ManifoldKind::UniformRectangle { edge_lengths } if edge_lengths.len() <= 2 => {
                rectangle_chart(edge_lengths)
            }
            ManifoldKind::UnitCircle => vec![Chart::new(
                1.0,
                ParamDomain::Interval {
                    lo: 0.0,
                    hi: 2.0 * PI,
                    periodic: true,
                },
                2,
                |u, out| {
                    out[0] = u[0].cos();
                    out[1] = u[0].sin();
                },
                |_| -(2.0 * PI).ln(),
            )],
            ManifoldKind::Helix {
                radius,
                pitch,
                turns,
            } => {
                let (r, p, t) = (*radius, *pitch, *turns);
                vec![Chart::new(
                    1.0,
                    ParamDomain::Interval {
                        lo: 0.0,
                        hi: 1.0,
                        periodic: false,
                    },
                    3,
                    move |u, out| {
                        let angle = 2.0 * PI * t * u[0];
                        out[0] = r * angle.cos();
                        out[1] = r * angle.sin();
                        out[2] = p * t * u[0];
                    },
                    |_| 0.0,
                )]
            }
            ManifoldKind::SwissRoll => {
                let area = (SWISS_ROLL_T.1 - SWISS_ROLL_T.0) * (SWISS_ROLL_H.1 - SWISS_ROLL_H.0);
                vec![Chart::new(
                    1.0,
                    ParamDomain::Rectangle {
                        lo: [SWISS_ROLL_T.0, SWISS_ROLL_H.0],
                        hi: [SWISS_ROLL_T.1, SWISS_ROLL_H.1],
                        periodic: [false, false],
                    },
                    3,
                    |u, out| {
                        let t = u[0];
                        out[0] = t * t.cos();
                        out[1] = u[1];
                        out[2] = t * t.sin();
                    },
                    move |_| -area.ln(),
                )]
            }
            ManifoldKind::Lollipop {
                stick_length,
                disc_radius,
                point_weight,
                stick_weight,
                disc_weight,
            } => {
                let (len, rad) = (*stick_length, *disc_radius);
                let centre = len + LOLLIPOP_DISC_OFFSET;
                let mut charts = Vec::new();
                if *point_weight > 0.0 {
                    charts.push(Chart::atom(*point_weight, vec![-LOLLIPOP_POINT_OFFSET, 0.0]));
                }
                if *stick_weight > 0.0 {
                    charts.push(Chart::new(
                        *stick_weight,
                        ParamDomain::Interval {
                            lo: 0.0,
                            hi: len,
                            periodic: false,
                        },
                        2,
                        |u, out| {
                            out[0] = u[0];
                            out[1] = 0.0;
                        },
                        move |_| -len.ln(),
                    ));
                }
                if *disc_weight > 0.0 {
                    // polar coordinates (r, φ), density r / (π R²)
                    let log_area = (PI * rad * rad).ln();
                    charts.push(Chart::new(
                        *disc_weight,
                        ParamDomain::Rectangle {
                            lo: [0.0, 0.0],
                            hi: [rad, 2.0 * PI],
                            periodic: [false, true],
                        },
                        2,
                        move |u, out| {
                            out[0] = centre + u[0] * u[1].cos();
                            out[1] = u[0] * u[1].sin();
                        },
                        move |u| u[0].ln() - log_area,
                    ));
                }
                charts
            }
            ManifoldKind::ParallelSegments { length, separation } => {
                let (len, sep) = (*length, *separation);
                [0.0, sep]
                    .into_iter()
                    .map(|y| {
                        Chart::new(
                            0.5,
                            ParamDomain::Interval {
                                lo: 0.0,
                                hi: len,
                                periodic: false,
                            },
                            2,
                            move |u, out| {
                                out[0] = u[0];
                                out[1] = y;
                            },
                            move |_| -len.ln(),
                        )
                    })
                    .collect()
            }
            ManifoldKind::PointsOnLine { positions, .. } => {
                let w = 1.0 / positions.len() as f64;
                positions.iter().map(|&p| Chart::atom(w, vec![p])).collect()
            }
            _ => return None,
        };
        Some(charts)
    }
}

fn rectangle_chart(edges: &[f64]) -> Vec<Chart> {
    let log_volume: f64 = edges.iter().map(|e| e.ln()).sum();
    match edges {
        [e] => {
            let e = *e;
            vec![Chart::new(
                1.0,
                ParamDomain::Interval {
                    lo: 0.0,
                    hi: e,
                    periodic: false,
                },
                1,
                |u, out| out[0] = u[0],
                move |_| -log_volume,
            )]
        }
        [e0, e1] => vec![Chart::new(
            1.0,
            ParamDomain::Rectangle {
                lo: [0.0, 0.0],
                hi: [*e0, *e1],
                periodic: [false, false],
            },
            2,
            |u, out| {
                out[0] = u[0];
                out[1] = u[1];
            },
            move |_| -log_volume,
        )],
        _ => unreachable!("rectangle charts are built for one or two edges"),
    }
}
