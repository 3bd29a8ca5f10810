//! Counterparty-risk valuation for collateralized OTC contracts subject to
//! rating triggers.
//!
//! The crate is organised bottom-up:
//!
//! - [`rating`]: rating scales, annual transition matrices and their
//!   embedding into infinitesimal generators.
//! - [`copula`]: Markov-copula joint generators for the counterparty,
//!   investor and (optionally) reference-entity rating chains, plus the
//!   Markovian exponential change of measure.
//! - [`ctmc`]: exact jump-chain simulation of joint rating paths and the
//!   default/trigger stopping times read off them.
//! - [`rates`]: the Vasicek short-rate model (exact simulation, bank
//!   account, zero-coupon bonds, LIBOR, par swap rate).
//! - [`instruments`]: clean prices of the interest rate swap and the credit
//!   default swap used in the experiments.
//! - [`collateral`]: ratings-linked margin accounts and rehypothecation
//!   haircuts at close-out.
//! - [`xva`]: pathwise close-out losses and the Monte Carlo estimators of
//!   CVA, DVA, RVA and their trigger / rehypothecation variants.
//! - [`scenario`] and [`output`]: config ingestion, grid orchestration and
//!   CSV / text table emission.

pub mod collateral;
pub mod copula;
pub mod ctmc;
pub mod instruments;
mod linalg;
pub mod output;
pub mod rates;
pub mod rating;
pub mod rng;
pub mod scenario;
pub mod xva;

pub use collateral::{CollateralLedger, CollateralScheme, CollateralSpec, ThresholdForm};
pub use copula::{CopulaSpec, JointGenerator, MeasureChangeSpec};
pub use ctmc::{CloseOutEvent, JointRatingPath, StoppingTimes, TriggerLevels};
pub use instruments::{CdsPricer, CdsSpec, IrsPricer, IrsSpec};
pub use rates::{ShortRatePath, VasicekParams};
pub use rating::{GeneratorMatrix, RatingScale, TransitionMatrix};
pub use scenario::Scenario;
pub use xva::{AdjustmentReport, Estimate, RecoverySpec};
