//! Counterparty-risk-free prices `S_t` and cum-dividend prices `S^Δ_t`.

mod cds;
mod irs;

pub use cds::{par_cds_spread, CdsPricer, CdsSpec};
pub use irs::{irs_clean_price, IrsPricer, IrsSpec};

use thiserror::Error;

use crate::rates::{RatesError, ShortRatePath};
use crate::rating::RatingError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstrumentError {
    #[error("price requested at t = {t} after maturity {maturity}")]
    EvalAfterMaturity { t: f64, maturity: f64 },
    #[error("risky annuity is zero, no par spread exists")]
    NoRoot,
    #[error("invalid instrument: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Rates(#[from] RatesError),
    #[error(transparent)]
    Rating(#[from] RatingError),
}

/// Clean price and its cum-dividend counterpart at one date.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleanPrice {
    pub s: f64,
    pub s_delta: f64,
}

/// The contract whose counterparty risk is measured.
#[derive(Debug, Clone)]
pub enum Instrument {
    Irs(IrsPricer),
    Cds(CdsPricer),
}

impl Instrument {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Irs(_) => "irs",
            Self::Cds(_) => "cds",
        }
    }

    pub fn maturity(&self) -> f64 {
        match self {
            Self::Irs(p) => p.maturity(),
            Self::Cds(p) => p.maturity(),
        }
    }

    /// Dates carrying a dividend atom known in advance.
    pub fn payment_dates(&self) -> &[f64] {
        match self {
            Self::Irs(p) => p.payment_dates(),
            Self::Cds(_) => &[],
        }
    }

    /// Whether prices depend on a reference-entity rating.
    pub fn needs_reference(&self) -> bool {
        matches!(self, Self::Cds(_))
    }

    /// `(S_t, S^Δ_t)`. `reference` carries the reference entity's category
    /// at `t` and whether it defaults exactly at `t`.
    pub fn price(
        &self,
        t: f64,
        rates: &ShortRatePath,
        reference: Option<(usize, bool)>,
    ) -> Result<CleanPrice, InstrumentError> {
        match self {
            Self::Irs(p) => p.clean_price(rates, t),
            Self::Cds(p) => {
                let (rating, defaults_now) = reference.ok_or_else(|| {
                    InstrumentError::InvalidSpec("CDS pricing needs the reference rating".into())
                })?;
                p.clean_price(t, rating, rates.rate_at(t), defaults_now)
            }
        }
    }
}
