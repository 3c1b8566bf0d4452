//! Posterior sampling for the graph and bipartite models.

pub mod bipartite;
pub mod hmc;
pub mod hyper;
pub mod latent;
pub mod sampler;
pub mod state;
pub mod target;

pub use bipartite::{run_bipartite_gibbs, BipartiteState, BipartiteTrace};
pub use hmc::{hmc_update, HmcOutcome};
pub use hyper::{mh_hyper_and_mass_update, MhOutcome};
pub use latent::{resample_latent_counts, sample_truncated_multipoisson, sample_truncated_poisson, LatentCounts};
pub use sampler::{mcmc_sweep, run_chain, run_mcmc, McmcConfig, SweepControl, Trace, TraceRecord, WeightSnapshot};
pub use state::{InitialValues, McmcState};
pub use target::{log_target, log_target_gradient, log_target_log_space};
