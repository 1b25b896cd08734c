//! A masked autoregressive flow (MAF) density estimator.
//!
//! Each layer maps `x` to `z_i = (x_i − μ_i(x_<i)) e^{−α_i(x_<i)}`, with `μ`
//! and `α` produced by a MADE conditioner, so the Jacobian is triangular and
//! `log |det| = −Σ α_i`. Inputs are standardised first and the base density
//! is the standard normal.

mod checkpoint;
pub mod made;
pub mod maf;
pub mod train;

pub use checkpoint::CHECKPOINT_VERSION;
pub use made::{build_masks, MadeMasks};
pub use maf::{MafModel, ALPHA_BOUND};
pub use train::{train_maf, train_maf_with_report, LrSchedule, TrainConfig, TrainReport};
