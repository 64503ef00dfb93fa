//! Inner and outer bounds on the capacity region of two-receiver discrete
//! memoryless broadcast channels.
//!
//! The crate evaluates three classical rate regions at fixed auxiliary
//! distributions and traces their boundaries by maximizing weighted sum
//! rates:
//!
//! - the two-auxiliary outer bound (`ne`), in both of its sum-constraint
//!   forms and in a three-rate common-message form,
//! - the intersection outer bound (`km`), one auxiliary per receiver,
//! - the randomized time-sharing inner bound (`cvdm`) for binary-input
//!   channels.
//!
//! [`channel`] holds the transition law, [`prob`] the joint-distribution
//! arithmetic, [`auxdist`] the auxiliary parameterizations together with the
//! splitting construction and the published reference distributions,
//! [`regions`] the constraint-set evaluators and polygon containment
//! helpers, [`optimize`] the seeded global search, region tracer, grid
//! oracle, and bound comparison, and [`cli`] the command-line front end.
//!
//! ```
//! use bcbounds::auxdist::bssc_reference_triple;
//! use bcbounds::channel::bssc;
//! use bcbounds::regions::ne_outer_constraints;
//!
//! let c = bssc(0.5).unwrap();
//! let s = ne_outer_constraints(&bssc_reference_triple(), &c).unwrap();
//! assert!((s.r1_max - 0.2280).abs() < 5e-4);
//! assert!((s.min_sum() - 0.3711).abs() < 5e-4);
//! ```

pub mod auxdist;
pub mod channel;
pub mod cli;
pub mod optimize;
pub mod prob;
pub mod regions;

#[cfg(test)]
pub(crate) mod testutil;

pub use auxdist::{AuxError, AuxPair, AuxTriple, CommonInfoAux};
pub use channel::{bssc, BroadcastChannel, ChannelError, MarginalChannel};
pub use optimize::{
    brute_force_oracle, compare_bounds, max_weighted_sum, trace_region, BoundKind, CompareReport,
    OptError, OptimizerConfig, SearchMode, TraceResult,
};
pub use prob::{Dist, JointDist, ProbError};
pub use regions::{
    cvdm_rts_constraints, km_oy_constraints, km_oz_constraints, ne_outer_constraints,
    PolygonRegion, RateConstraintSet2, RatePoint, RegionError,
};
