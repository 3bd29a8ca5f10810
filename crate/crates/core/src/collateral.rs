//! Ratings-linked margin accounts.
//!
//! The counterparty and the investor have thresholds `Γ^i = ρ^i(X^i)·S` that
//! shrink as their ratings worsen. At each margin call date before the first
//! trigger time the account is topped up or returned according to the
//! two-sided update rule, subject to a minimum transfer amount `θ` and
//! independent amounts `β₁ ≥ 0`, `β₂ ≤ 0`. From `τ^R` on the account is
//! frozen. On close-out only a fraction `R^h` of rehypothecated collateral
//! comes back from a defaulted holder.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctmc::CloseOutEvent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollateralError {
    #[error("minimum transfer amount must be non-negative, got {0}")]
    NegativeMta(f64),
    #[error("counterparty independent amount must be non-negative, got {0}")]
    NegativeCounterpartyAmount(f64),
    #[error("investor independent amount must be non-positive, got {0}")]
    PositiveInvestorAmount(f64),
    #[error("margin period of risk must be non-negative, got {0}")]
    NegativeMarginPeriod(f64),
    #[error("custom collateral rates need {expected} entries in [0, 1], got {got:?}")]
    BadCustomRates { expected: usize, got: Vec<f64> },
    #[error("margin call dates must increase strictly inside (0, {horizon})")]
    BadCallDates { horizon: f64 },
}

/// Collateral rate `ρ(x)`: the fraction of exposure a party in category `x`
/// may leave uncollateralized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollateralScheme {
    /// No margin agreement, `C ≡ 0`.
    None,
    /// Zero thresholds, `ρ ≡ 0`.
    Full,
    /// `ρ(x) = (K − x)/(K − 1)`
    Linear,
    /// `ρ(x) = e^{1−x}` for `x < K`, `0` at default.
    Exponential,
    /// `ρ` tabulated per category `1..=K`.
    Custom(Vec<f64>),
}

impl CollateralScheme {
    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Full => "full",
            Self::Linear => "linear",
            Self::Exponential => "exponential",
            Self::Custom(_) => "custom",
        }
    }
}

/// How thresholds are signed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdForm {
    /// `Γ^i = ρ^i·S` for both parties.
    #[default]
    Symmetric,
    /// `Γ¹ = ρ¹·S⁺ ≥ 0` and `Γ² = −ρ²·S⁻ ≤ 0`.
    Signed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollateralSpec {
    pub scheme: CollateralScheme,
    pub threshold_form: ThresholdForm,
    /// `θ`
    pub mta: f64,
    /// `β₁ ≥ 0`
    pub ia_cpty: f64,
    /// `β₂ ≤ 0`
    pub ia_inv: f64,
    /// `Δ`
    pub margin_period: f64,
    pub call_dates: Vec<f64>,
}

impl CollateralSpec {
    /// Zero MTA, independent amounts and margin period.
    pub fn simple(scheme: CollateralScheme, call_dates: Vec<f64>) -> Self {
        Self {
            scheme,
            threshold_form: ThresholdForm::Symmetric,
            mta: 0.0,
            ia_cpty: 0.0,
            ia_inv: 0.0,
            margin_period: 0.0,
            call_dates,
        }
    }

    pub fn validate(&self, k: usize, horizon: f64) -> Result<(), CollateralError> {
        if self.mta.is_nan() || self.mta < 0.0 {
            return Err(CollateralError::NegativeMta(self.mta));
        }
        if self.ia_cpty.is_nan() || self.ia_cpty < 0.0 {
            return Err(CollateralError::NegativeCounterpartyAmount(self.ia_cpty));
        }
        if self.ia_inv.is_nan() || self.ia_inv > 0.0 {
            return Err(CollateralError::PositiveInvestorAmount(self.ia_inv));
        }
        if self.margin_period.is_nan() || self.margin_period < 0.0 {
            return Err(CollateralError::NegativeMarginPeriod(self.margin_period));
        }
        if let CollateralScheme::Custom(rho) = &self.scheme {
            if rho.len() != k || rho.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(CollateralError::BadCustomRates { expected: k, got: rho.clone() });
            }
        }
        let inside = self.call_dates.iter().all(|&t| t > 0.0 && t < horizon);
        if !inside || self.call_dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CollateralError::BadCallDates { horizon });
        }
        Ok(())
    }
}

/// `ρ(x)` for a category `x ∈ 1..=K`.
pub fn collateral_rate(scheme: &CollateralScheme, category: usize, k: usize) -> f64 {
    match scheme {
        CollateralScheme::None => 1.0,
        CollateralScheme::Full => 0.0,
        CollateralScheme::Linear => (k - category) as f64 / (k - 1) as f64,
        CollateralScheme::Exponential => {
            if category < k {
                (1.0 - category as f64).exp()
            } else {
                0.0
            }
        }
        CollateralScheme::Custom(rho) => rho[category - 1],
    }
}

/// State of both parties at a margin call date.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CallState {
    /// `S_{t_i}`
    pub price: f64,
    /// `B_{t_i}`
    pub bank: f64,
    pub cpty_rating: usize,
    pub inv_rating: usize,
}

/// One margin call: returns `C` on `(t_i, t_{i+1}]` given `C_{t_i}`.
pub fn margin_update(prev: f64, state: &CallState, spec: &CollateralSpec, k: usize) -> f64 {
    if spec.scheme == CollateralScheme::None {
        return 0.0;
    }
    let rho1 = collateral_rate(&spec.scheme, state.cpty_rating, k);
    let rho2 = collateral_rate(&spec.scheme, state.inv_rating, k);
    let s = state.price;
    let (gamma1, gamma2) = match spec.threshold_form {
        ThresholdForm::Symmetric => (rho1 * s, rho2 * s),
        ThresholdForm::Signed => (rho1 * s.max(0.0), rho2 * s.min(0.0)),
    };
    let ia = state.bank * (spec.ia_cpty - spec.ia_inv);
    let call = s + ia - gamma1 - prev;
    let ret = s - ia - gamma2 - prev;
    let mut next = prev;
    if call > spec.mta {
        next += call;
    }
    if ret < -spec.mta {
        next += ret;
    }
    next
}

/// Piecewise-constant margin account of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct CollateralLedger {
    call_dates: Vec<f64>,
    /// value on `(t_i, t_{i+1}]`
    values: Vec<f64>,
    stop: f64,
    margin_period: f64,
}

impl CollateralLedger {
    /// Runs the update over the call dates strictly before `stop`; `state`
    /// returns the market state at the `i`-th call date.
    pub fn build<F>(spec: &CollateralSpec, k: usize, stop: f64, mut state: F) -> Self
    where
        F: FnMut(usize) -> CallState,
    {
        let n = spec.call_dates.partition_point(|&t| t < stop);
        let mut values = Vec::with_capacity(n);
        let mut c = 0.0;
        for i in 0..n {
            c = margin_update(c, &state(i), spec, k);
            values.push(c);
        }
        Self { call_dates: spec.call_dates[..n].to_vec(), values, stop, margin_period: spec.margin_period }
    }

    /// `C_t`: the value set at the last call date strictly before `t`, frozen
    /// from the stopping time on.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.call_dates.partition_point(|&d| d < t);
        if n == 0 {
            0.0
        } else {
            self.values[n - 1]
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn call_dates(&self) -> &[f64] {
        &self.call_dates
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    /// End of the margin period of risk `[τ^R, τ^R + Δ]`.
    pub fn frozen_until(&self) -> f64 {
        self.stop + self.margin_period
    }
}

/// Close-out collateral after rehypothecation haircuts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloseOutCollateral {
    /// `C̃`
    pub total: f64,
    /// `C̃¹` where the counterparty defaults at close-out, otherwise `C`.
    pub cpty: f64,
    /// `C̃²` where the investor defaults at close-out, otherwise `C`.
    pub inv: f64,
}

/// `C̃` by close-out event: a defaulting counterparty scales positive
/// collateral by `R^h₁`, a defaulting investor scales non-positive
/// collateral by `R^h₂`, a pure trigger leaves `C` unchanged.
pub fn closeout_collateral(c: f64, event: CloseOutEvent, rh1: f64, rh2: f64) -> CloseOutCollateral {
    let posted_by_cpty = c > 0.0;
    let total = match event {
        CloseOutEvent::CounterpartyDefault => {
            if posted_by_cpty {
                rh1 * c
            } else {
                c
            }
        }
        CloseOutEvent::InvestorDefault => {
            if posted_by_cpty {
                c
            } else {
                rh2 * c
            }
        }
        CloseOutEvent::JointDefault => {
            if posted_by_cpty {
                rh1 * c
            } else {
                rh2 * c
            }
        }
        CloseOutEvent::Trigger => c,
    };
    let cpty = match event {
        CloseOutEvent::CounterpartyDefault | CloseOutEvent::JointDefault => total,
        _ => c,
    };
    let inv = match event {
        CloseOutEvent::InvestorDefault | CloseOutEvent::JointDefault => total,
        _ => c,
    };
    CloseOutCollateral { total, cpty, inv }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(price: f64, x1: usize, x2: usize) -> CallState {
        CallState { price, bank: 1.0, cpty_rating: x1, inv_rating: x2 }
    }

    fn spec(scheme: CollateralScheme) -> CollateralSpec {
        CollateralSpec::simple(scheme, vec![0.25, 0.5, 0.75])
    }

    #[test]
    fn linear_rate_endpoints() {
        assert_eq!(collateral_rate(&CollateralScheme::Linear, 1, 4), 1.0);
        assert_eq!(collateral_rate(&CollateralScheme::Linear, 4, 4), 0.0);
    }

    #[test]
    fn exponential_rate() {
        let r = collateral_rate(&CollateralScheme::Exponential, 2, 4);
        assert!((r - 0.36787944117144233).abs() < 1e-15);
        assert_eq!(collateral_rate(&CollateralScheme::Exponential, 4, 4), 0.0);
    }

    #[test]
    fn exponential_rate_below_linear() {
        for x in 1..4 {
            let e = collateral_rate(&CollateralScheme::Exponential, x, 4);
            let l = collateral_rate(&CollateralScheme::Linear, x, 4);
            assert!(e <= l);
        }
    }

    #[test]
    fn full_collateral_tracks_exposure() {
        let s = spec(CollateralScheme::Full);
        for (prev, price) in [(0.0, 3.0), (3.0, -2.0), (-2.0, -2.0)] {
            assert_eq!(margin_update(prev, &st(price, 2, 3), &s, 4), price);
        }
    }

    #[test]
    fn top_rated_counterparty_posts_nothing() {
        let s = spec(CollateralScheme::Linear);
        assert_eq!(margin_update(0.0, &st(5.0, 1, 1), &s, 4), 0.0);
    }

    #[test]
    fn mta_blocks_small_transfers() {
        let mut s = spec(CollateralScheme::Full);
        s.mta = 30.0;
        assert_eq!(margin_update(0.0, &st(3.0, 2, 2), &s, 4), 0.0);
        assert_eq!(margin_update(1.0, &st(-3.0, 2, 2), &s, 4), 1.0);
    }

    #[test]
    fn independent_amounts_enter_scaled_by_bank() {
        let mut s = spec(CollateralScheme::Full);
        s.ia_cpty = 0.1;
        s.ia_inv = -0.05;
        let state = CallState { price: 1.0, bank: 2.0, cpty_rating: 2, inv_rating: 2 };
        assert!((margin_update(0.0, &state, &s, 4) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn scheme_none_is_zero() {
        let s = spec(CollateralScheme::None);
        let ledger = CollateralLedger::build(&s, 4, 10.0, |_| st(4.0, 3, 3));
        assert!(ledger.values().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn ledger_lags_one_period_and_freezes() {
        let s = spec(CollateralScheme::Full);
        let prices = [1.0, 2.0, 3.0];
        let ledger = CollateralLedger::build(&s, 4, 0.6, |i| st(prices[i], 2, 2));
        assert_eq!(ledger.values(), &[1.0, 2.0]);
        assert_eq!(ledger.value_at(0.1), 0.0);
        assert_eq!(ledger.value_at(0.25), 0.0);
        assert_eq!(ledger.value_at(0.3), 1.0);
        assert_eq!(ledger.value_at(0.5), 1.0);
        assert_eq!(ledger.value_at(0.55), 2.0);
        assert_eq!(ledger.value_at(0.9), 2.0);
    }

    #[test]
    fn signed_thresholds() {
        let mut s = spec(CollateralScheme::Linear);
        s.threshold_form = ThresholdForm::Signed;
        // counterparty at B (ρ = 2/3) posts a third of a positive exposure
        let c = margin_update(0.0, &st(3.0, 2, 1), &s, 4);
        assert!((c - 1.0).abs() < 1e-15);
        let c = margin_update(0.0, &st(-3.0, 1, 3), &s, 4);
        assert!((c + 2.0).abs() < 1e-15);
    }

    #[test]
    fn rehypothecation_cases() {
        for ev in [
            CloseOutEvent::CounterpartyDefault,
            CloseOutEvent::InvestorDefault,
            CloseOutEvent::JointDefault,
            CloseOutEvent::Trigger,
        ] {
            assert_eq!(closeout_collateral(2.5, ev, 1.0, 1.0).total, 2.5);
            assert_eq!(closeout_collateral(-2.5, ev, 1.0, 1.0).total, -2.5);
            assert_eq!(closeout_collateral(0.0, ev, 0.3, 0.2).total, 0.0);
        }
        let c = closeout_collateral(5.0, CloseOutEvent::CounterpartyDefault, 0.6, 0.5);
        assert!((c.total - 3.0).abs() < 1e-15);
        assert_eq!(c.inv, 5.0);
        let c = closeout_collateral(-5.0, CloseOutEvent::CounterpartyDefault, 0.6, 0.5);
        assert_eq!(c.total, -5.0);
        let c = closeout_collateral(-4.0, CloseOutEvent::JointDefault, 0.6, 0.5);
        assert_eq!((c.total, c.cpty, c.inv), (-2.0, -2.0, -2.0));
        let c = closeout_collateral(4.0, CloseOutEvent::InvestorDefault, 0.6, 0.5);
        assert_eq!(c.total, 4.0);
        assert_eq!(closeout_collateral(4.0, CloseOutEvent::Trigger, 0.6, 0.5).total, 4.0);
    }

    #[test]
    fn validation() {
        let mut s = spec(CollateralScheme::Custom(vec![1.0, 0.5, 0.2]));
        assert!(s.validate(4, 1.0).is_err());
        s.scheme = CollateralScheme::Custom(vec![1.0, 0.5, 0.2, 0.0]);
        assert!(s.validate(4, 1.0).is_ok());
        s.ia_inv = 0.1;
        assert!(s.validate(4, 1.0).is_err());
        let s = spec(CollateralScheme::Linear);
        assert!(s.validate(4, 0.7).is_err());
    }
}
