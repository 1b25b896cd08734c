use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Strictly increasing noise magnitudes `δ_1 < … < δ_n`, `n ≥ 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DeltaSchedule {
    deltas: Vec<f64>,
}

/// How a schedule is written in configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    LogSpaced { lo: f64, hi: f64, n: usize },
    Explicit { deltas: Vec<f64> },
}

impl Default for ScheduleKind {
    fn default() -> Self {
        ScheduleKind::LogSpaced {
            lo: 0.025,
            hi: 0.1,
            n: 11,
        }
    }
}

impl ScheduleKind {
    pub fn build(&self) -> Result<DeltaSchedule> {
        make_schedule(self)
    }
}

/// Builds a schedule: log-spaced with both endpoints, or an explicit list
/// sorted ascending.
pub fn make_schedule(kind: &ScheduleKind) -> Result<DeltaSchedule> {
    match kind {
        ScheduleKind::LogSpaced { lo, hi, n } => DeltaSchedule::log_spaced(*lo, *hi, *n),
        ScheduleKind::Explicit { deltas } => DeltaSchedule::new(deltas.clone()),
    }
}

impl DeltaSchedule {
    pub fn new(mut deltas: Vec<f64>) -> Result<Self> {
        if deltas.len() < 2 {
            return Err(Error::InvalidArgument("a schedule needs at least two deltas".into()));
        }
        if deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidArgument("deltas must be finite and positive".into()));
        }
        deltas.sort_by(f64::total_cmp);
        if deltas.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("deltas must be distinct".into()));
        }
        Ok(DeltaSchedule { deltas })
    }

    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi.is_finite()) || n < 2 {
            return Err(Error::InvalidArgument(format!(
                "log-spaced schedule needs 0 < lo < hi and n ≥ 2, got ({lo}, {hi}, {n})"
            )));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (n - 1) as f64;
        let mut deltas: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
        deltas[0] = lo;
        deltas[n - 1] = hi;
        Self::new(deltas)
    }

    /// `{δ, 1.05 δ}`.
    pub fn two_point(delta: f64) -> Result<Self> {
        Self::new(vec![delta, 1.05 * delta])
    }

    /// `{δ/√r, δ√r}`: a pair whose geometric mean is `δ`.
    pub fn centred_pair(delta: f64, ratio: f64) -> Result<Self> {
        if !(ratio > 1.0) {
            return Err(Error::InvalidArgument(format!("pair ratio must exceed 1, got {ratio}")));
        }
        let r = ratio.sqrt();
        Self::new(vec![delta / r, delta * r])
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn log_deltas(&self) -> Vec<f64> {
        self.deltas.iter().map(|d| d.ln()).collect()
    }
}

impl TryFrom<Vec<f64>> for DeltaSchedule {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DeltaSchedule> for Vec<f64> {
    fn from(s: DeltaSchedule) -> Self {
        s.deltas
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_has_constant_ratio() {
        let s = ScheduleKind::default().build().unwrap();
        assert_eq!(s.len(), 11);
        assert_eq!(s.deltas()[0], 0.025);
        assert_eq!(s.deltas()[10], 0.1);
        let r0 = s.deltas()[1] / s.deltas()[0];
        for w in s.deltas().windows(2) {
            assert!((w[1] / w[0] - r0).abs() < 1e-12);
        }
    }

    #[test]
    fn explicit_lists_are_sorted() {
        let s = make_schedule(&ScheduleKind::Explicit {
            deltas: vec![0.1, 0.05],
        })
        .unwrap();
        assert_eq!(s.deltas(), &[0.05, 0.1]);
        assert!(DeltaSchedule::new(vec![0.1]).is_err());
        assert!(DeltaSchedule::new(vec![0.1, 0.1]).is_err());
        assert!(DeltaSchedule::log_spaced(0.1, 0.05, 3).is_err());
    }

    #[test]
    fn two_point_matches_log_spaced_pair() {
        let a = DeltaSchedule::two_point(0.2).unwrap();
        let b = DeltaSchedule::log_spaced(0.2, 0.21, 2).unwrap();
        assert_eq!(a.deltas()[0], b.deltas()[0]);
        assert!((a.deltas()[1] - b.deltas()[1]).abs() < 1e-16);
        let c = DeltaSchedule::centred_pair(0.1, 1.05).unwrap();
        assert!((c.deltas()[0] * c.deltas()[1] - 0.01).abs() < 1e-16);
    }
}
