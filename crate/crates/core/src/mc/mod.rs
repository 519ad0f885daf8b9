//! Heat-kernel sampling and Monte Carlo estimators.

mod estimate;
mod io;
mod sampler;

pub use estimate::{
    column, dilate_batch, dirichlet_form, entropy_gap, inner_product, kde_estimate, lp_from_powers, lp_norm,
    mc_integral, mehler_apply, sample_rows, sample_values, Finite, McEstimate,
};
pub use io::{read_batch, sidecar_path, write_batch, BatchSidecar};
pub use sampler::{sample_heat_kernel, Provenance, SampleBatch, SamplerConfig, Scheme};
