//! Perturb, model, regress: the LIDL estimator and its building blocks.

mod estimator;
pub mod regression;
pub mod schedule;
pub mod theory;

pub use estimator::{
    lidl_estimate, perturb, prepare_models, run_lidl, LidEstimate, LidReport, LidlConfig,
    PreparedModels, QueryFailure, QuerySelection, QuerySet,
};
pub use regression::{ols_fit, RegressionFit};
pub use schedule::{make_schedule, DeltaSchedule, ScheduleKind};
