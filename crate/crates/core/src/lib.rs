//! Orlicz-space laboratory: norms, conjugates, risk measures and the
//! duality-gap construction on finite and block models.

pub mod blocks;
pub mod closure;
pub mod counterexample;
pub mod duality;
pub mod error;
pub mod finite;
pub mod lp;
pub mod norms;
pub mod orlicz;
pub mod risk;
pub mod roots;

pub use error::{LabError, Result};
pub use finite::{expectation, pairing, FiniteSpace, RandomVariable};
pub use orlicz::{FunctionSpec, OrliczFunction, OrliczPair};
pub use blocks::{BlockSequence, Region};
pub use counterexample::{CounterexampleInstance, MembershipCertificate, TImage, Truncation, Variant};
pub use lp::FarkasCertificate;
pub use risk::{ExtReal, RiskMeasure};
