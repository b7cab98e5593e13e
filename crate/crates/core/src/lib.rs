//! Synthesis of polyhedral Lyapunov functions `V(x) = max_i c_iᵀx` for hybrid
//! linear systems by counterexample-guided tree search.
//!
//! The pieces fit together as follows:
//!
//! - [`lp`] is the numerical kernel: a dense simplex and Chebyshev centers.
//! - [`system`] and [`simulate`] describe and integrate hybrid linear systems.
//! - [`learner`] turns a set of constraint triples into a candidate.
//! - [`verifier`] checks a candidate and produces counterexamples.
//! - [`search`] drives the tree of constraint sets.
//! - [`gadget`] compiles NAE-3SAT instances into hybrid systems.
//! - [`sublevel`] extracts the planar 1-sublevel polygon of a candidate.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gadget;
pub mod learner;
pub mod linalg;
pub mod lp;
pub mod search;
pub mod simulate;
pub mod sublevel;
pub mod system;
pub mod verifier;

pub use error::{Error, Result};
pub use learner::{Candidate, ConstraintSet, ConstraintTriple, LearnerConfig, LearnerOutcome};
pub use linalg::Matrix;
pub use search::{synthesize, Budget, SearchConfig, SearchStats, SynthesisOutcome, Synthesizer};
pub use simulate::{simulate, ModePolicy, Trajectory};
pub use system::{HybridSystem, Mode};
pub use verifier::{verify, Counterexample, CounterexampleKind, Verdict, VerifierConfig};
