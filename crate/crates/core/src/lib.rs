//! Subtree counts of uniform random labelled trees.
//!
//! * [`tree`]: labelled trees, Prüfer codes, uniform sampling.
//! * [`subtree`]: exact and logarithmic subtree counts of a given tree.
//! * [`census`]: exact distribution of the rooted subtree count over all rooted trees of size `k`.
//! * [`asymptotics`]: certified bounds on `lim E[c(T_n)]^(1/n)` built from the census.
//! * [`montecarlo`]: simulation of `E[c(T_n)]^(1/n)` and empirical trimming statistics.

pub mod asymptotics;
pub mod census;
pub mod directed;
pub mod error;
pub mod montecarlo;
pub mod rng;
pub mod subtree;
pub mod tree;

// Public signatures use `rug` numbers.
pub use rug;

pub use census::{compute_tables, exhaustive_tables, load_tables, save_tables, Budget, GCountTable};
pub use directed::DirectedReal;
pub use error::{Error, Result};
pub use subtree::{log_total_count, rooted_count, total_count, RootedSubtreeCount, SubtreeCount};
pub use tree::{prufer_decode, prufer_encode, random_tree, LabelledTree, PruferCode};
