//! Hybrid time, hybrid arcs, hybrid systems and atomic propositions.

mod arc;
mod domain;
mod system;

pub use arc::{ArcError, ArcPoint, HybridArc, Sample};
pub use domain::{DomainError, HybridTime, HybridTimeDomain, Phase};
pub use system::{
    HybridSystem, PropositionSet, ScalarField, StateMap, StatePredicate, StateSet, SystemError,
};
