//! Gradient estimators, the momentum update, and the two training loops.

mod config;
mod gradient;
mod optimizer;
mod trace;
mod trainer;

pub use config::{Init, TrainingConfig};
pub use gradient::{
    exact_grad_dkl, exact_grad_ncll, finite_difference_gradient, grad_dkl, grad_ncll, sampled_grad_dkl,
    sampled_grad_ncll, GradientEstimate, GradientMode, Resampling,
};
pub use optimizer::momentum_update;
pub use trace::{TraceRecord, TrainingTrace};
pub use trainer::{
    initial_machine, train_distribution, train_distribution_with, train_function_approximator,
    train_function_approximator_with, Architecture, Connectivity,
};
