//! White noise, the stochastic heat equation, its Wick powers and covariance kernels.

mod empirical;
mod kernels;
mod noise;
mod renorm;
mod sampler;
mod stream;
mod wick;

pub use empirical::{
    empirical_covariance, grid_covariance, mean_and_error, CovarianceEstimate, MIN_REALIZATIONS,
};
pub use kernels::{
    covariance_exact, heat_kernel, kernel_mixed, periodic_distance, CovarianceQuery, MixedKernel,
    Period,
};
pub use noise::{CellNoise, NoiseStream};
pub use renorm::{
    ct_bound, grid_wick_variance, ou_variance_recursion, renorm_constant_exact,
    renorm_constant_torus, renorm_shift_torus,
};
pub use sampler::{sample_heat_solution, HeatSampler};
pub use stream::{StackStream, StepStack};
pub use wick::{build_wick_stack, wick_powers, WickConvention, WickStack};

#[cfg(test)]
mod tests;
