//! Data machinery for guided stream-of-search training on Countdown.
//!
//! * [`countdown`]: the arithmetic domain and its exhaustive solver.
//! * [`trajectory`]: the line-oriented search language, tree rebuild and
//!   the binary correctness metric.
//! * [`search`]: DFS / BFS-b generators and a resumable stochastic searcher.
//! * [`augment`]: hint prefixes, subgoal augmentation and the
//!   generate-augment-filter pass.
//! * [`rl`]: operation-level segmentation, rewards and GAE.
//! * [`pipeline`]: config, corpus generation, evaluation and statistics.
//! * [`bridge`]: client for an external model process speaking
//!   line-delimited JSON.

pub mod augment;
pub mod bridge;
pub mod budget;
pub mod countdown;
pub mod generator;
pub mod pipeline;
pub mod rl;
pub mod rng;
pub mod search;
pub mod trajectory;

pub use countdown::{OpSpec, Operator, OptimalPath, Problem, SearchState, Side, TargetSplit};
pub use trajectory::{parse_trajectory, verify, ParseMode, Terminal, Trajectory, TrajectoryEvent};
