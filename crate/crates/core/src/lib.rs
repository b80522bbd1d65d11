//! Exact orbits `{q_n y}`, discrepancy, arc unions, limsup truncations and
//! dimension estimators.

pub mod arcs;
pub mod dimension;
pub mod discrepancy;
pub mod dyadic;
pub mod error;
pub mod experiment;
pub mod fixed;
pub mod limsup;
pub mod littlewood;
pub mod measures;
pub mod rng;
pub mod sequences;
pub mod stats;

pub use arcs::{Arc, ArcUnion};
pub use dimension::BlockMeasure;
pub use dyadic::DyadicNumber;
pub use error::{Error, Result};
pub use experiment::{ExperimentReport, ExperimentSpec, Preset};
pub use fixed::Fixed;
pub use littlewood::ContinuedFraction;
pub use measures::MeasureModel;
pub use sequences::{IndexedPoints, IntegerSequence, SequenceSpec};
