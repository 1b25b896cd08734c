//! JSON checkpoints of trained flows.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::made::input_degrees;
use super::maf::MafModel;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    dim: usize,
    hidden: Vec<usize>,
    orderings: Vec<Vec<usize>>,
    /// Hidden-unit degrees per layer, input degrees excluded.
    hidden_degrees: Vec<Vec<Vec<usize>>>,
    /// Row-major input rotation per layer.
    #[serde(default)]
    rotations: Vec<Option<Vec<f64>>>,
    mean: Vec<f64>,
    scale: Vec<f64>,
    params: Vec<f64>,
}

impl MafModel {
    pub fn to_json(&self) -> Result<String> {
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            dim: self.dim,
            hidden: self.hidden.clone(),
            orderings: self.layers.iter().map(|l| l.masks.ordering.clone()).collect(),
            hidden_degrees: self
                .layers
                .iter()
                .map(|l| l.masks.degrees[1..].to_vec())
                .collect(),
            rotations: self
                .layers
                .iter()
                .map(|l| l.rotation.as_ref().map(|q| q.iter().copied().collect()))
                .collect(),
            mean: self.mean.clone(),
            scale: self.scale.clone(),
            params: self.params.clone(),
        };
        Ok(serde_json::to_string(&ck)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "checkpoint version {} is not supported",
                ck.version
            )));
        }
        if ck.orderings.len() != ck.hidden_degrees.len() {
            return Err(Error::InvalidArgument("checkpoint layer counts disagree".into()));
        }
        let mut model = MafModel::new(ck.dim, &ck.hidden, ck.orderings.len(), 0)?
            .with_standardization(ck.mean, ck.scale)?;
        for (layer, (ordering, hidden)) in model
            .layers
            .iter_mut()
            .zip(ck.orderings.into_iter().zip(ck.hidden_degrees))
        {
            let mut degrees = vec![input_degrees(&ordering)?];
            degrees.extend(hidden);
            layer.masks = super::made::masks_from_degrees(ck.dim, ordering, degrees)?;
        }
        if !ck.rotations.is_empty() && ck.rotations.len() != model.layers.len() {
            return Err(Error::InvalidArgument("checkpoint rotation count disagrees".into()));
        }
        for (layer, rot) in model.layers.iter_mut().zip(ck.rotations) {
            layer.rotation = rot
                .map(|v| ndarray::Array2::from_shape_vec((ck.dim, ck.dim), v))
                .transpose()
                .map_err(|e| Error::InvalidArgument(format!("bad rotation in checkpoint: {e}")))?;
        }
        if ck.params.len() != model.params.len() {
            return Err(Error::DimensionMismatch {
                expected: model.params.len(),
                got: ck.params.len(),
            });
        }
        model.params = ck.params;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut m = MafModel::new(3, &[7, 5], 3, 42).unwrap();
        for (i, v) in m.params.iter_mut().enumerate() {
            *v += (i as f64 * 0.731).sin() * 1e-3 / 3.0;
        }
        m.apply_masks();
        let back = MafModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flow.json");
        m.save(&path).unwrap();
        assert_eq!(MafModel::load(&path).unwrap(), m);
    }

    #[test]
    fn rotations_survive_round_trip() {
        let m = MafModel::new(3, &[5], 3, 1).unwrap().with_rotations(2);
        assert_eq!(MafModel::from_json(&m.to_json().unwrap()).unwrap(), m);
    }

    #[test]
    fn rejects_unknown_version() {
        let m = MafModel::new(2, &[4], 1, 0).unwrap();
        let text = m.to_json().unwrap().replace("\"version\":1", "\"version\":9");
        assert!(MafModel::from_json(&text).is_err());
    }
}
