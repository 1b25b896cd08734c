//! Masked autoregressive flow with hand-written reverse-mode gradients.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand_distr::{Distribution, Uniform};

use super::made::{build_masks, MadeMasks};
use crate::density::special::LN_2PI;
use crate::density::LogDensity;
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

/// Bound on the per-coordinate log-scale.
pub const ALPHA_BOUND: f64 = 7.0;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LinearSlot {
    pub rows: usize,
    pub cols: usize,
    pub w: usize,
    pub b: usize,
}

/// One autoregressive layer: masks and where its weights live in the flat
/// parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct MafLayer {
    pub masks: MadeMasks,
    /// Fixed orthogonal map applied to the layer input, if any.
    pub rotation: Option<Array2<f64>>,
    pub(crate) slots: Vec<LinearSlot>,
}

/// A stack of MADE-conditioned affine layers on standardised inputs with a
/// standard normal base density.
#[derive(Clone, Debug, PartialEq)]
pub struct MafModel {
    pub dim: usize,
    pub hidden: Vec<usize>,
    pub layers: Vec<MafLayer>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub params: Vec<f64>,
}

/// Activations of one layer kept for the backward pass.
struct Tape {
    input: Array2<f64>,
    hidden: Vec<Array2<f64>>,
    alpha: Array2<f64>,
    z: Array2<f64>,
}

fn layer_slots(dim: usize, hidden: &[usize], offset: &mut usize) -> Vec<LinearSlot> {
    let mut sizes = vec![dim];
    sizes.extend_from_slice(hidden);
    sizes.push(2 * dim);
    sizes
        .windows(2)
        .map(|w| {
            let slot = LinearSlot {
                rows: w[1],
                cols: w[0],
                w: *offset,
                b: *offset + w[0] * w[1],
            };
            *offset += w[0] * w[1] + w[1];
            slot
        })
        .collect()
}

/// Layer `l` conditions in natural order when `l` is even, reversed otherwise.
pub fn layer_ordering(dim: usize, layer: usize) -> Vec<usize> {
    if layer % 2 == 0 {
        (0..dim).collect()
    } else {
        (0..dim).rev().collect()
    }
}

impl MafModel {
    /// A flow with zero output layers, hence the identity on standardised
    /// inputs. Hidden weights are Glorot-uniform under the masks.
    pub fn new(dim: usize, hidden: &[usize], n_layers: usize, seed: u64) -> Result<Self> {
        if n_layers == 0 {
            return Err(Error::InvalidArgument("a flow needs at least one layer".into()));
        }
        let mut layers = Vec::with_capacity(n_layers);
        let mut total = 0;
        for l in 0..n_layers {
            let masks = build_masks(dim, hidden, &layer_ordering(dim, l), derive_seed(seed, &[0, l as u64]))?;
            let slots = layer_slots(dim, hidden, &mut total);
            layers.push(MafLayer {
                masks,
                rotation: None,
                slots,
            });
        }
        let mut model = MafModel {
            dim,
            hidden: hidden.to_vec(),
            layers,
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
            params: vec![0.0; total],
        };
        let mut rng = seeded(derive_seed(seed, &[1]));
        for layer in &model.layers {
            let last = layer.slots.len() - 1;
            for slot in &layer.slots[..last] {
                let bound = (6.0 / (slot.rows + slot.cols) as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                for v in &mut model.params[slot.w..slot.w + slot.rows * slot.cols] {
                    *v = dist.sample(&mut rng);
                }
            }
        }
        model.apply_masks();
        Ok(model)
    }

    pub fn with_standardization(mut self, mean: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if mean.len() != self.dim || scale.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: mean.len().min(scale.len()),
            });
        }
        if scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument("standardisation scales must be positive".into()));
        }
        self.mean = mean;
        self.scale = scale;
        Ok(self)
    }

    /// Precedes every layer but the first with a fixed Haar-random rotation.
    /// Without it, independent coordinates leave the flow at a saddle where
    /// no conditioner weight receives gradient.
    pub fn with_rotations(mut self, seed: u64) -> Self {
        if self.dim < 2 {
            return self;
        }
        let mut rng = seeded(seed);
        for layer in self.layers.iter_mut().skip(1) {
            layer.rotation = Some(random_rotation(self.dim, &mut rng));
        }
        self
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Zeroes every weight a mask forbids.
    pub fn apply_masks(&mut self) {
        for layer in &self.layers {
            for (slot, mask) in layer.slots.iter().zip(&layer.masks.masks) {
                let w = &mut self.params[slot.w..slot.w + slot.rows * slot.cols];
                // the output mask covers μ and is reused for α
                for (v, m) in w.iter_mut().zip(mask.iter().cycle()) {
                    *v *= m;
                }
            }
        }
    }

    pub(crate) fn mask_gradient(&self, grad: &mut [f64]) {
        for layer in &self.layers {
            for (slot, mask) in layer.slots.iter().zip(&layer.masks.masks) {
                let g = &mut grad[slot.w..slot.w + slot.rows * slot.cols];
                for (v, m) in g.iter_mut().zip(mask.iter().cycle()) {
                    *v *= m;
                }
            }
        }
    }

    fn weight(&self, slot: &LinearSlot) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((slot.rows, slot.cols), &self.params[slot.w..slot.w + slot.rows * slot.cols])
            .expect("slot shape matches layout")
    }

    fn bias(&self, slot: &LinearSlot) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.params[slot.b..slot.b + slot.rows])
    }

    /// Shift `μ` and bounded log-scale `α` for a batch of inputs, plus the
    /// hidden activations.
    fn conditioner(&self, layer: &MafLayer, x: ArrayView2<f64>) -> (Vec<Array2<f64>>, Array2<f64>, Array2<f64>) {
        let last = layer.slots.len() - 1;
        let mut hidden = Vec::with_capacity(last);
        let mut h = x.to_owned();
        for slot in &layer.slots[..last] {
            let mut a = h.dot(&self.weight(slot).t());
            a += &self.bias(slot);
            a.mapv_inplace(f64::tanh);
            hidden.push(a.clone());
            h = a;
        }
        let out_slot = &layer.slots[last];
        let mut out = h.dot(&self.weight(out_slot).t());
        out += &self.bias(out_slot);
        let d = self.dim;
        let mu = out.slice(s![.., ..d]).to_owned();
        let alpha = out
            .slice(s![.., d..])
            .mapv(|a| ALPHA_BOUND * (a / ALPHA_BOUND).tanh());
        (hidden, mu, alpha)
    }

    fn standardize(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut u = x.to_owned();
        for (mut col, (m, s)) in u.axis_iter_mut(Axis(1)).zip(self.mean.iter().zip(&self.scale)) {
            col.mapv_inplace(|v| (v - m) / s);
        }
        u
    }

    fn standardize_log_det(&self) -> f64 {
        -self.scale.iter().map(|s| s.ln()).sum::<f64>()
    }

    fn check_batch(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.ncols(),
            });
        }
        Ok(())
    }

    fn forward_tape(&self, x: ArrayView2<f64>) -> Result<(Vec<Tape>, Array1<f64>)> {
        self.check_batch(&x)?;
        let mut u = self.standardize(x);
        let mut log_det = Array1::from_elem(x.nrows(), self.standardize_log_det());
        let mut tapes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            if let Some(q) = &layer.rotation {
                u = u.dot(&q.t());
            }
            let (hidden, mu, alpha) = self.conditioner(layer, u.view());
            let mut z = &u - &mu;
            Zip::from(&mut z).and(&alpha).for_each(|z, a| *z *= (-a).exp());
            log_det -= &alpha.sum_axis(Axis(1));
            tapes.push(Tape {
                input: u,
                hidden,
                alpha,
                z: z.clone(),
            });
            u = z;
        }
        if u.iter().any(|v| !v.is_finite()) || log_det.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("flow forward pass produced a non-finite value".into()));
        }
        Ok((tapes, log_det))
    }

    /// Maps a batch to the base space; returns `z` and `log |det ∂z/∂x|`.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, Array1<f64>)> {
        let (mut tapes, log_det) = self.forward_tape(x)?;
        let z = tapes.pop().map(|t| t.z).unwrap_or_else(|| self.standardize(x));
        Ok((z, log_det))
    }

    /// `(z, log |det ∂z/∂x|)` for a single point.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        let (z, ld) = self.forward_batch(view)?;
        Ok((z.into_raw_vec_and_offset().0, ld[0]))
    }

    /// Exact inverse, one sequential pass per coordinate in every layer.
    pub fn inverse(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        let d = self.dim;
        let mut cur = Array2::from_shape_vec((1, d), z.to_vec()).expect("row shape");
        for layer in self.layers.iter().rev() {
            let mut x = Array2::<f64>::zeros((1, d));
            for _ in 0..d {
                let (_, mu, alpha) = self.conditioner(layer, x.view());
                let mut next = cur.clone();
                Zip::from(&mut next)
                    .and(&mu)
                    .and(&alpha)
                    .for_each(|v, m, a| *v = *v * a.exp() + m);
                x = next;
            }
            cur = match &layer.rotation {
                Some(q) => x.dot(q),
                None => x,
            };
        }
        let out: Vec<f64> = cur
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(u, (m, s))| u * s + m)
            .collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("flow inverse produced a non-finite value".into()));
        }
        Ok(out)
    }

    /// `log q(x)` for every row.
    pub fn log_prob_batch(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        let (z, log_det) = self.forward_batch(x)?;
        let half_d = 0.5 * self.dim as f64 * LN_2PI;
        Ok(Array1::from_iter(
            z.rows()
                .into_iter()
                .zip(log_det.iter())
                .map(|(r, ld)| -0.5 * r.dot(&r) - half_d + ld),
        ))
    }

    /// Mean negative log-likelihood of a batch.
    pub fn nll(&self, x: ArrayView2<f64>) -> Result<f64> {
        let lp = self.log_prob_batch(x)?;
        Ok(-lp.mean().unwrap_or(f64::NAN))
    }

    /// Mean NLL of the batch and its gradient with respect to `params`.
    pub fn nll_and_grad(&self, x: ArrayView2<f64>) -> Result<(f64, Vec<f64>)> {
        let (tapes, log_det) = self.forward_tape(x)?;
        let b = x.nrows() as f64;
        let d = self.dim;
        let z_final = &tapes.last().expect("at least one layer").z;
        let sq: f64 = z_final.iter().map(|v| v * v).sum();
        let nll = (0.5 * sq - log_det.sum()) / b + 0.5 * d as f64 * LN_2PI;

        let mut grad = vec![0.0; self.params.len()];
        let mut g = z_final / b;
        for (layer, tape) in self.layers.iter().zip(&tapes).rev() {
            let inv_scale = tape.alpha.mapv(|a| (-a).exp());
            let direct = &g * &inv_scale;
            let mut d_out = Array2::<f64>::zeros((g.nrows(), 2 * d));
            d_out.slice_mut(s![.., ..d]).assign(&(-&direct));
            {
                let mut d_alpha = d_out.slice_mut(s![.., d..]);
                Zip::from(&mut d_alpha)
                    .and(&g)
                    .and(&tape.z)
                    .and(&tape.alpha)
                    .for_each(|da, g, z, a| {
                        let r = a / ALPHA_BOUND;
                        *da = (-g * z + 1.0 / b) * (1.0 - r * r);
                    });
            }
            let mut upstream = d_out;
            for k in (0..layer.slots.len()).rev() {
                let slot = &layer.slots[k];
                let input = if k == 0 { &tape.input } else { &tape.hidden[k - 1] };
                let gw = upstream.t().dot(input);
                accumulate(&mut grad[slot.w..slot.w + slot.rows * slot.cols], gw.view());
                for (gb, col) in grad[slot.b..slot.b + slot.rows]
                    .iter_mut()
                    .zip(upstream.axis_iter(Axis(1)))
                {
                    *gb += col.sum();
                }
                let mut down = upstream.dot(&self.weight(slot));
                if k > 0 {
                    Zip::from(&mut down)
                        .and(&tape.hidden[k - 1])
                        .for_each(|v, h| *v *= 1.0 - h * h);
                }
                upstream = down;
            }
            g = direct + upstream;
            if let Some(q) = &layer.rotation {
                g = g.dot(q);
            }
        }
        self.mask_gradient(&mut grad);
        if !nll.is_finite() {
            return Err(Error::NonFinite("NLL is not finite".into()));
        }
        Ok((nll, grad))
    }

    /// Draws `n` samples by inverting base-normal draws.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Array2<f64>> {
        let mut rng = seeded(seed);
        let normal = rand_distr::StandardNormal;
        let mut out = Array2::zeros((n, self.dim));
        for mut row in out.rows_mut() {
            let z: Vec<f64> = (0..self.dim).map(|_| normal.sample(&mut rng)).collect();
            let x = self.inverse(&z)?;
            row.assign(&ArrayView1::from(&x));
        }
        Ok(out)
    }
}

fn random_rotation(dim: usize, rng: &mut impl rand::Rng) -> Array2<f64> {
    let a = nalgebra::DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let qr = a.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Array2::from_shape_fn((dim, dim), |(i, j)| q[(i, j)])
}

fn accumulate(dst: &mut [f64], src: ArrayView2<f64>) {
    let src = src.as_standard_layout();
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d += s;
    }
}

impl LogDensity for MafModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        Ok(self.log_prob_batch(view)?[0])
    }
}
