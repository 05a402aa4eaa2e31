//! Suspension flows over hyperbolic toral automorphisms and orbit
//! equivalences between them.
//!
//! A [`suspension::SuspensionSystem`] pairs a map of the 2-torus with a roof
//! function. Two systems whose base maps are conjugate by `h` are related by
//! [`equivalence::EquivalencePair`], which stretches fibers linearly, and by
//! [`smoothing::SmoothedEquivalence`], which reparametrizes each fiber so the
//! map is smooth across the cross section. [`diff_probe`] measures both.
//!
//! ```
//! use suspflow::ceiling::CeilingFunction;
//! use suspflow::suspension::{SuspensionPoint, SuspensionSystem};
//! use suspflow::torus::{HyperbolicToralMap, TorusPoint};
//!
//! let sys = SuspensionSystem::new(HyperbolicToralMap::cat(), CeilingFunction::constant(1.0).unwrap());
//! let p = SuspensionPoint::new(TorusPoint::new(0.5, 0.5), 0.0);
//! assert_eq!(sys.flow(&p, 2.5), SuspensionPoint::new(TorusPoint::new(0.0, 0.5), 0.5));
//! ```

pub mod ceiling;
pub mod cli;
pub mod config;
pub mod diff_probe;
pub mod equivalence;
pub mod error;
pub mod smoothing;
pub mod suspension;
pub mod torus;
