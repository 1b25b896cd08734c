//! Adaptive Gauss–Kronrod quadrature of perturbed densities in log space.
//!
//! `ρ_δ(x) = Σ_c w_c ∫ φ_δ^D(x − γ_c(u)) p_c(u) du` is evaluated with the
//! integrand carried as a logarithm; every panel stores its value with its own
//! maximum exponent factored out, so densities hundreds of log-units below one
//! stay representable.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use libm::lgamma as ln_gamma;

use super::special::{logsumexp, LN_2PI};
use crate::manifolds::{Chart, ParamDomain};
use crate::manifolds::{ManifoldKind, ManifoldSpec};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_PANELS: usize = 1 << 20;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const GRID_OUTER: usize = 512;
const GRID_INNER: usize = 128;
const MAX_PEAKS: usize = 32;
/// Peaks further than this many log-units below the best are ignored.
const PEAK_WINDOW: f64 = 60.0;

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    log_val: f64,
    log_err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.log_err.total_cmp(&other.log_err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.log_err.total_cmp(&other.log_err)
    }
}

type LogFn<'a> = dyn FnMut(f64) -> Result<f64> + 'a;

/// One-dimensional adaptive integrator of `exp(f)`.
#[derive(Clone, Copy, Debug)]
struct Integrator {
    tol: f64,
    max_panels: usize,
}

impl Integrator {
    fn panel(&self, f: &mut LogFn<'_>, a: f64, b: f64) -> Result<Panel> {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut l = [0.0; 15];
        for j in 0..7 {
            l[2 * j] = f(c - h * XGK[j])?;
            l[2 * j + 1] = f(c + h * XGK[j])?;
        }
        l[14] = f(c)?;
        let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m.is_nan() || m == f64::INFINITY {
            return Err(Error::NonFinite(format!("integrand is {m} on [{a}, {b}]")));
        }
        if m == f64::NEG_INFINITY {
            return Ok(Panel {
                a,
                b,
                log_val: f64::NEG_INFINITY,
                log_err: f64::NEG_INFINITY,
            });
        }
        let e = |v: f64| (v - m).exp();
        let mut kron = WGK[7] * e(l[14]);
        let mut gauss = WG[3] * e(l[14]);
        for j in 0..7 {
            let pair = e(l[2 * j]) + e(l[2 * j + 1]);
            kron += WGK[j] * pair;
            if j % 2 == 1 {
                gauss += WG[j / 2] * pair;
            }
        }
        Ok(Panel {
            a,
            b,
            log_val: m + (kron * h).ln(),
            log_err: m + ((kron - gauss).abs() * h).ln(),
        })
    }

    /// `log ∫_lo^hi exp(f(u)) du`, with `breaks` used as initial panel edges.
    fn integrate(&self, f: &mut LogFn<'_>, lo: f64, hi: f64, breaks: &[f64]) -> Result<f64> {
        let mut edges: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
        edges.push(lo);
        edges.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
        edges.push(hi);
        edges.sort_by(f64::total_cmp);
        edges.dedup();

        let mut heap = BinaryHeap::with_capacity(4 * edges.len());
        for w in edges.windows(2) {
            heap.push(self.panel(f, w[0], w[1])?);
        }
        let (mut base, mut sval, mut serr) = rebase(&heap);
        let mut since_rebase = 0;
        loop {
            if base == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            if serr <= self.tol * sval {
                return Ok(base + sval.ln());
            }
            if heap.len() >= self.max_panels {
                return Err(non_convergence(base, sval, serr, heap.len()));
            }
            let worst = heap.pop().expect("heap holds at least one panel");
            let mid = 0.5 * (worst.a + worst.b);
            if !(mid > worst.a && mid < worst.b) {
                heap.push(worst);
                return Err(non_convergence(base, sval, serr, heap.len()));
            }
            let left = self.panel(f, worst.a, mid)?;
            let right = self.panel(f, mid, worst.b)?;
            sval += (left.log_val - base).exp() + (right.log_val - base).exp()
                - (worst.log_val - base).exp();
            serr += (left.log_err - base).exp() + (right.log_err - base).exp()
                - (worst.log_err - base).exp();
            let jump = left.log_val.max(right.log_val) - base > 300.0;
            heap.push(left);
            heap.push(right);
            since_rebase += 1;
            if jump || since_rebase >= 64 || sval <= 0.0 || serr < 0.0 {
                (base, sval, serr) = rebase(&heap);
                since_rebase = 0;
            }
        }
    }
}

fn rebase(heap: &BinaryHeap<Panel>) -> (f64, f64, f64) {
    let base = heap
        .iter()
        .map(|p| p.log_val)
        .fold(f64::NEG_INFINITY, f64::max);
    if base == f64::NEG_INFINITY {
        return (base, 0.0, 0.0);
    }
    let sval = heap.iter().map(|p| (p.log_val - base).exp()).sum();
    let serr = heap.iter().map(|p| (p.log_err - base).exp()).sum();
    (base, sval, serr)
}

fn non_convergence(base: f64, sval: f64, serr: f64, panels: usize) -> Error {
    Error::QuadratureNonConvergence {
        log_estimate: base + sval.ln(),
        achieved_tol: serr / sval,
        panels,
    }
}

/// Locations of the dominant local maxima of `f` on `[lo, hi]` together with
/// a local width estimate for each.
fn locate_peaks(f: &mut LogFn<'_>, lo: f64, hi: f64, grid: usize) -> Result<Vec<(f64, f64)>> {
    let step = (hi - lo) / (grid - 1) as f64;
    let us: Vec<f64> = (0..grid).map(|i| lo + step * i as f64).collect();
    let mut ls = Vec::with_capacity(grid);
    for &u in &us {
        ls.push(f(u)?);
    }
    let mut cands: Vec<usize> = (0..grid)
        .filter(|&i| {
            ls[i] > f64::NEG_INFINITY
                && (i == 0 || ls[i] >= ls[i - 1])
                && (i + 1 == grid || ls[i] >= ls[i + 1])
        })
        .collect();
    cands.sort_by(|&i, &j| ls[j].total_cmp(&ls[i]));
    cands.truncate(MAX_PEAKS);

    let mut peaks = Vec::with_capacity(cands.len());
    for i in cands {
        let a = us[i.saturating_sub(1)];
        let b = us[(i + 1).min(grid - 1)];
        let (u, l) = golden_max(f, a, b)?;
        peaks.push((u, l));
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let best = peaks.first().map_or(f64::NEG_INFINITY, |p| p.1);
    let mut out = Vec::new();
    for (u, l) in peaks {
        if l >= best - PEAK_WINDOW {
            let w = peak_width(f, u, l, step, hi - lo)?;
            out.push((u, w));
        }
    }
    Ok(out)
}

fn golden_max(f: &mut LogFn<'_>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    const R: f64 = 0.618_033_988_749_894_9;
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..60 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - R * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + R * (b - a);
            fd = f(d)?;
        }
        if b - a <= 1e-15 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
    }
    let (fa, fb) = (f(a)?, f(b)?);
    let best = [(a, fa), (b, fb), (c, fc), (d, fd)]
        .into_iter()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("four candidates");
    Ok(best)
}

/// Standard deviation of the Gaussian matching the log-curvature at a peak.
fn peak_width(f: &mut LogFn<'_>, u: f64, l: f64, step: f64, span: f64) -> Result<f64> {
    let mut h = step / 8.0;
    let mut width = span;
    for _ in 0..3 {
        let lp = f(u + h)?;
        let lm = f(u - h)?;
        let curv = (lp + lm - 2.0 * l) / (h * h);
        if !(curv < 0.0) || !curv.is_finite() {
            break;
        }
        width = (-1.0 / curv).sqrt();
        if width > h {
            break;
        }
        h = width / 4.0;
    }
    Ok(width.clamp(1e-12 * span.max(1e-300), span))
}

/// Panel edges at `u* ± w·2^k` around every peak.
fn peak_breaks(peaks: &[(f64, f64)], lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &(u, w) in peaks {
        out.push(u);
        let mut s = w;
        while s < hi - lo {
            out.push(u - s);
            out.push(u + s);
            s *= 2.0;
        }
    }
    out
}

/// Shifts a periodic interval so it is centred on the dominant peak.
fn recentre(lo: f64, hi: f64, peaks: &mut [(f64, f64)]) -> (f64, f64) {
    let Some(&(best, _)) = peaks.first() else {
        return (lo, hi);
    };
    let period = hi - lo;
    let (nlo, nhi) = (best - 0.5 * period, best + 0.5 * period);
    for p in peaks.iter_mut() {
        while p.0 < nlo {
            p.0 += period;
        }
        while p.0 > nhi {
            p.0 -= period;
        }
    }
    (nlo, nhi)
}

fn integrate_localized(
    integ: &Integrator,
    f: &mut LogFn<'_>,
    lo: f64,
    hi: f64,
    periodic: bool,
    grid: usize,
) -> Result<f64> {
    let mut peaks = locate_peaks(f, lo, hi, grid)?;
    let (lo, hi) = if periodic {
        recentre(lo, hi, &mut peaks)
    } else {
        (lo, hi)
    };
    let breaks = peak_breaks(&peaks, lo, hi);
    integ.integrate(f, lo, hi, &breaks)
}

/// A mixture of charts to integrate against, placed in an ambient space.
#[derive(Clone, Debug)]
pub struct QuadratureSpec {
    pub charts: Vec<Chart>,
    pub ambient_dim: usize,
    /// Relative tolerance on the integral.
    pub tol: f64,
    /// Panel budget per one-dimensional integral.
    pub max_panels: usize,
}

impl QuadratureSpec {
    pub fn new(charts: Vec<Chart>, ambient_dim: usize) -> Result<Self> {
        let q = QuadratureSpec {
            charts,
            ambient_dim,
            tol: DEFAULT_TOL,
            max_panels: DEFAULT_MAX_PANELS,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn from_manifold(spec: &ManifoldSpec) -> Result<Self> {
        let charts = spec.charts().ok_or_else(|| {
            Error::InvalidSpec(format!("no quadrature charts for {:?}", spec.kind))
        })?;
        Self::new(charts, spec.ambient_dim)
    }

    pub fn with_tolerance(mut self, tol: f64, max_panels: usize) -> Result<Self> {
        self.tol = tol;
        self.max_panels = max_panels;
        self.validate()?;
        Ok(self)
    }

    /// Checks the settings and that every parameter density integrates to 1.
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} outside (0, 1)", self.tol)));
        }
        if self.max_panels < 1 {
            return Err(Error::InvalidArgument("max_panels must be at least 1".into()));
        }
        if self.charts.is_empty() {
            return Err(Error::InvalidSpec("quadrature needs at least one chart".into()));
        }
        let integ = Integrator {
            tol: self.tol.min(1e-10),
            max_panels: self.max_panels,
        };
        for chart in &self.charts {
            if chart.out_dim > self.ambient_dim {
                return Err(Error::InvalidSpec(format!(
                    "chart output dimension {} exceeds ambient dimension {}",
                    chart.out_dim, self.ambient_dim
                )));
            }
            let log_mass = match &chart.domain {
                ParamDomain::Point => 0.0,
                ParamDomain::Interval { lo, hi, .. } => {
                    integ.integrate(&mut |u| Ok(chart.log_param_density(&[u])), *lo, *hi, &[])?
                }
                ParamDomain::Rectangle { lo, hi, .. } => integ.integrate(
                    &mut |u0| {
                        integ.integrate(
                            &mut |u1| Ok(chart.log_param_density(&[u0, u1])),
                            lo[1],
                            hi[1],
                            &[],
                        )
                    },
                    lo[0],
                    hi[0],
                    &[],
                )?,
            };
            if (log_mass.exp() - 1.0).abs() > self.tol.max(1e-12) {
                return Err(Error::InvalidSpec(format!(
                    "parameter density integrates to {} rather than 1",
                    log_mass.exp()
                )));
            }
        }
        Ok(())
    }
}

/// `log ∫ φ_δ^D(x − γ(u)) p(u) du` summed over the spec's weighted charts.
pub fn log_density_quadrature(q: &QuadratureSpec, delta: f64, x: &[f64]) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if x.len() != q.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: q.ambient_dim,
            got: x.len(),
        });
    }
    let integ = Integrator {
        tol: q.tol,
        max_panels: q.max_panels,
    };
    let inv = 0.5 / (delta * delta);
    let norm = -(q.ambient_dim as f64) * (delta.ln() + 0.5 * LN_2PI);
    let mut terms = Vec::with_capacity(q.charts.len());
    for chart in &q.charts {
        let k = chart.out_dim;
        let (near, far) = x.split_at(k);
        let far_sq: f64 = far.iter().map(|v| v * v).sum();
        let mut y = vec![0.0; k];
        let mut log_kernel = |u: &[f64]| -> f64 {
            chart.map(u, &mut y);
            let sq: f64 = near.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            chart.log_param_density(u) - inv * sq
        };
        let log_int = match &chart.domain {
            ParamDomain::Point => log_kernel(&[]),
            ParamDomain::Interval { lo, hi, periodic } => integrate_localized(
                &integ,
                &mut |u| Ok(log_kernel(&[u])),
                *lo,
                *hi,
                *periodic,
                GRID_OUTER,
            )?,
            ParamDomain::Rectangle { lo, hi, periodic } => {
                integrate_2d(&integ, &mut log_kernel, *lo, *hi, *periodic)?
            }
        };
        terms.push(chart.weight.ln() + log_int - inv * far_sq);
    }
    Ok(logsumexp(&terms) + norm)
}

fn integrate_2d(
    integ: &Integrator,
    f: &mut dyn FnMut(&[f64]) -> f64,
    lo: [f64; 2],
    hi: [f64; 2],
    periodic: [bool; 2],
) -> Result<f64> {
    // outer peaks from the profile max over the inner coordinate
    let inner_step = (hi[1] - lo[1]) / (GRID_INNER - 1) as f64;
    let mut profile = |u0: f64| -> Result<f64> {
        let mut best = (lo[1], f64::NEG_INFINITY);
        for j in 0..GRID_INNER {
            let u1 = lo[1] + inner_step * j as f64;
            let v = f(&[u0, u1]);
            if v > best.1 {
                best = (u1, v);
            }
        }
        let a = (best.0 - inner_step).max(lo[1]);
        let b = (best.0 + inner_step).min(hi[1]);
        let (_, l) = golden_max(&mut |u1| Ok(f(&[u0, u1])), a, b)?;
        Ok(l.max(best.1))
    };
    let mut peaks = locate_peaks(&mut profile, lo[0], hi[0], GRID_OUTER)?;
    let (olo, ohi) = if periodic[0] {
        recentre(lo[0], hi[0], &mut peaks)
    } else {
        (lo[0], hi[0])
    };
    let breaks = peak_breaks(&peaks, olo, ohi);
    integ.integrate(
        &mut |u0| {
            integrate_localized(
                integ,
                &mut |u1| Ok(f(&[u0, u1])),
                lo[1],
                hi[1],
                periodic[1],
                GRID_INNER,
            )
        },
        olo,
        ohi,
        &breaks,
    )
}

/// Perturbed density of the uniform measure on `S^d ⊂ R^{d+1}` placed in
/// `R^D`, reduced by rotational symmetry to a one-dimensional integral over
/// the colatitude between `x` and the sphere point.
pub fn log_density_sphere(
    d: usize,
    ambient_dim: usize,
    delta: f64,
    x: &[f64],
    tol: f64,
) -> Result<f64> {
    if d < 1 || ambient_dim < d + 1 {
        return Err(Error::InvalidSpec(format!(
            "sphere of dimension {d} does not fit in R^{ambient_dim}"
        )));
    }
    if x.len() != ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: ambient_dim,
            got: x.len(),
        });
    }
    let r = x[..=d].iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut reduced = vec![r, 0.0];
    reduced.extend_from_slice(&x[d + 1..]);
    let q = QuadratureSpec {
        charts: vec![sphere_colatitude_chart(d)],
        ambient_dim: reduced.len(),
        tol,
        max_panels: DEFAULT_MAX_PANELS,
    };
    let reduced_norm = -(reduced.len() as f64) * (delta.ln() + 0.5 * LN_2PI);
    let full_norm = -(ambient_dim as f64) * (delta.ln() + 0.5 * LN_2PI);
    Ok(log_density_quadrature(&q, delta, &reduced)? - reduced_norm + full_norm)
}

/// Colatitude chart `θ ↦ (cos θ, sin θ)` with density `sin^{d−1} θ / B`.
pub fn sphere_colatitude_chart(d: usize) -> Chart {
    let e = (d - 1) as f64;
    // B = ∫_0^π sin^{d−1} = √π Γ(d/2) / Γ((d+1)/2)
    let log_b = 0.5 * PI.ln() + ln_gamma(0.5 * d as f64) - ln_gamma(0.5 * (d + 1) as f64);
    Chart::new(
        1.0,
        ParamDomain::Interval {
            lo: 0.0,
            hi: PI,
            periodic: false,
        },
        2,
        |u, out| {
            out[0] = u[0].cos();
            out[1] = u[0].sin();
        },
        move |u| {
            if e == 0.0 {
                -log_b
            } else {
                e * u[0].sin().ln() - log_b
            }
        },
    )
}

/// Log perturbed density of any spec handled by quadrature, spheres included.
pub fn log_density_manifold_quadrature(
    spec: &ManifoldSpec,
    q: Option<&QuadratureSpec>,
    delta: f64,
    x: &[f64],
    tol: f64,
) -> Result<f64> {
    match (&spec.kind, q) {
        (ManifoldKind::SphereUniform { d }, _) => log_density_sphere(*d, spec.ambient_dim, delta, x, tol),
        (_, Some(q)) => log_density_quadrature(q, delta, x),
        (_, None) => log_density_quadrature(&QuadratureSpec::from_manifold(spec)?, delta, x),
    }
}
