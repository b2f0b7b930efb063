//! Pairwise comparator policy, single-elimination tournaments over the
//! candidate pool, the replay buffer and the off-policy gradient update.

mod net;
mod replay;
mod tournament;
mod update;

pub use net::{clamp_prob, encode_pair, symlog, Comparator, PolicyNet, ScoreComparator, PROB_FLOOR};
pub use replay::{ReplayBuffer, StepRecord};
pub use tournament::{run_tournament, select_batch, Candidate, SelectMode, Trajectory, Transition};
pub use update::{pg_gradient, pg_update, PgConfig};
