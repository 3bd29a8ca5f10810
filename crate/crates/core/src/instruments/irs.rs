//! Fixed-for-floating swap on Vasicek bonds.

use serde::{Deserialize, Serialize};

use super::{CleanPrice, InstrumentError};
use crate::rates::{payment_schedule, ShortRatePath, VasicekParams};

const DATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrsSpec {
    #[serde(default = "one")]
    pub notional: f64,
    pub tenor: f64,
    #[serde(default = "quarterly")]
    pub freq: f64,
    /// Par rate when absent.
    #[serde(default)]
    pub fixed_rate: Option<f64>,
    /// The investor pays fixed and receives LIBOR.
    #[serde(default = "yes")]
    pub payer: bool,
}

fn one() -> f64 {
    1.0
}

fn quarterly() -> f64 {
    4.0
}

fn yes() -> bool {
    true
}

impl IrsSpec {
    pub fn payer(tenor: f64, freq: f64) -> Self {
        Self { notional: 1.0, tenor, freq, fixed_rate: None, payer: true }
    }
}

#[derive(Debug, Clone)]
pub struct IrsPricer {
    params: VasicekParams,
    notional: f64,
    sign: f64,
    fixed_rate: f64,
    dates: Vec<f64>,
}

impl IrsPricer {
    pub fn new(spec: &IrsSpec, params: VasicekParams) -> Result<Self, InstrumentError> {
        let dates = payment_schedule(spec.tenor, spec.freq)?;
        let fixed_rate = match spec.fixed_rate {
            Some(k) if k.is_finite() && k >= 0.0 => k,
            Some(k) => return Err(InstrumentError::InvalidSpec(format!("fixed rate {k}"))),
            None => params.par_swap_rate(spec.tenor, spec.freq)?,
        };
        if !(spec.notional.is_finite() && spec.notional > 0.0) {
            return Err(InstrumentError::InvalidSpec(format!("notional {}", spec.notional)));
        }
        let sign = if spec.payer { 1.0 } else { -1.0 };
        Ok(Self { params, notional: spec.notional, sign, fixed_rate, dates })
    }

    pub fn fixed_rate(&self) -> f64 {
        self.fixed_rate
    }

    pub fn payment_dates(&self) -> &[f64] {
        &self.dates
    }

    pub fn maturity(&self) -> f64 {
        *self.dates.last().unwrap()
    }

    fn period_start(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.dates[k - 1]
        }
    }

    /// Index of the payment date equal to `t`, if any.
    fn payment_index(&self, t: f64) -> Option<usize> {
        let i = self.dates.partition_point(|&d| d < t - DATE_TOL);
        (i < self.dates.len() && (self.dates[i] - t).abs() <= DATE_TOL).then_some(i)
    }

    /// `PV_t` of the fixed-minus-floating difference per unit notional, for
    /// all periods paying strictly after `t`. `fixing` returns the short rate
    /// at a past fixing date.
    pub fn price_state<F: Fn(f64) -> f64>(&self, t: f64, r_t: f64, fixing: F) -> Result<CleanPrice, InstrumentError> {
        let maturity = self.maturity();
        if t > maturity + DATE_TOL {
            return Err(InstrumentError::EvalAfterMaturity { t, maturity });
        }
        let p = &self.params;
        let first = self.dates.partition_point(|&d| d <= t + DATE_TOL);
        let mut value = 0.0;
        for k in first..self.dates.len() {
            let (start, end) = (self.period_start(k), self.dates[k]);
            let delta = end - start;
            let p_end = p.bond_price(r_t, t, end);
            let floating = if start >= t - DATE_TOL {
                p.bond_price(r_t, t, start) - p_end
            } else {
                delta * p.libor_fixing(fixing(start), start, end) * p_end
            };
            value += floating - self.fixed_rate * delta * p_end;
        }
        let mut atom = 0.0;
        if let Some(j) = self.payment_index(t) {
            let start = self.period_start(j);
            let delta = self.dates[j] - start;
            atom = delta * (p.libor_fixing(fixing(start), start, self.dates[j]) - self.fixed_rate);
        }
        let scale = self.sign * self.notional;
        Ok(CleanPrice { s: scale * value, s_delta: scale * (value + atom) })
    }

    /// Prices along a simulated rate path; fixings are read from the path.
    pub fn clean_price(&self, path: &ShortRatePath, t: f64) -> Result<CleanPrice, InstrumentError> {
        self.price_state(t, path.rate_at(t), |s| path.rate_at(s))
    }

    /// `Σ δ_k P(t, T_k)` over periods paying after `t`.
    pub fn annuity(&self, t: f64, r_t: f64) -> f64 {
        let first = self.dates.partition_point(|&d| d <= t + DATE_TOL);
        (first..self.dates.len())
            .map(|k| (self.dates[k] - self.period_start(k)) * self.params.bond_price(r_t, t, self.dates[k]))
            .sum::<f64>()
            * self.notional
    }
}

/// `(S_t, S^Δ_t)` of a swap along a rate path.
pub fn irs_clean_price(
    spec: &IrsSpec,
    params: VasicekParams,
    path: &ShortRatePath,
    t: f64,
) -> Result<CleanPrice, InstrumentError> {
    IrsPricer::new(spec, params)?.clean_price(path, t)
}
