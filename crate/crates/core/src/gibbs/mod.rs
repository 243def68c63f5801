//! Gibbs sampling over possible worlds: sequential sweeps, parallel blocked
//! schedules for `k <= 3`, joint updates of mutually exclusive atoms, and
//! training-data noise.

mod chain;
mod constrained;
mod sampler;
mod schedule;

pub use chain::{apply_noise, derive_seed, ChainState};
pub use constrained::{check_disjoint, exclusion_blocks, Cardinality, ExclusionBlock};
pub use sampler::{init_chains, Sampler, SamplerConfig, SamplerMode};
pub use schedule::{build_schedule, round_robin, Block, BlockSchedule, Group, ScheduleMode};
