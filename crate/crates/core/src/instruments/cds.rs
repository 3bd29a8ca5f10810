//! Credit default swap on a rated reference entity, protection bought by
//! the investor.
//!
//! The price conditions on the reference entity's current category. With the
//! reference chain independent of the short rate,
//!
//! `S_t = ∫_0^{T−t} [(1−R₃) f_l(u) − κ Q_l(u)] P(t, t+u) du`
//!
//! where `f_l` is the default density and `Q_l` the survival probability of
//! the marginal chain started in category `l`. The integral is evaluated by
//! Gauss–Legendre quadrature on panels of fixed width anchored at `u = 0`, so
//! every full panel's nodes are shared by all evaluation dates.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{CleanPrice, InstrumentError};
use crate::rates::VasicekParams;
use crate::rating::GeneratorMatrix;

const GL_NODES: [f64; 6] = [
    -0.932_469_514_203_152,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152,
];
const GL_WEIGHTS: [f64; 6] = [
    0.171_324_492_379_170_4,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691,
    0.467_913_934_572_691,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_4,
];
const PANEL_WIDTH: f64 = 1.0;
const TIME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdsSpec {
    #[serde(default = "one")]
    pub notional: f64,
    #[serde(default = "ten_years")]
    pub tenor: f64,
    /// Par spread at inception when absent.
    #[serde(default)]
    pub spread: Option<f64>,
    #[serde(default = "forty_percent")]
    pub reference_recovery: f64,
}

fn one() -> f64 {
    1.0
}

fn ten_years() -> f64 {
    10.0
}

fn forty_percent() -> f64 {
    0.4
}

impl Default for CdsSpec {
    fn default() -> Self {
        Self { notional: 1.0, tenor: 10.0, spread: None, reference_recovery: 0.4 }
    }
}

#[derive(Debug, Clone)]
struct Node {
    weight: f64,
    ln_a: f64,
    b: f64,
    /// default density per alive starting category
    density: Vec<f64>,
    survival: Vec<f64>,
}

fn panel_nodes(g: &GeneratorMatrix, params: &VasicekParams, lo: f64, hi: f64) -> Vec<Node> {
    let k = g.dim();
    let a = g.matrix();
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(&x, w)| {
            let u = mid + half * x;
            let e: DMatrix<f64> = g.transition(u);
            let density = (0..k - 1)
                .map(|l| (0..k).map(|j| e[(l, j)] * a[(j, k - 1)]).sum())
                .collect();
            let survival = (0..k - 1).map(|l| 1.0 - e[(l, k - 1)]).collect();
            Node { weight: w * half, ln_a: params.ln_a_factor(u), b: params.b_factor(u), density, survival }
        })
        .collect()
}

/// Quadrature tables for one reference chain, rate model and maturity.
#[derive(Debug, Clone)]
pub struct CdsPricer {
    generator: GeneratorMatrix,
    params: VasicekParams,
    notional: f64,
    tenor: f64,
    recovery: f64,
    spread: f64,
    full_panels: Vec<Node>,
    tails: HashMap<u64, Vec<Node>>,
}

impl CdsPricer {
    /// Builds the tables. An absent spread is set to par for a reference
    /// entity in `inception_rating` at the initial short rate.
    pub fn new(
        spec: &CdsSpec,
        reference: &GeneratorMatrix,
        params: VasicekParams,
        inception_rating: usize,
    ) -> Result<Self, InstrumentError> {
        let k = reference.dim();
        if !(spec.tenor.is_finite() && spec.tenor > 0.0) {
            return Err(InstrumentError::InvalidSpec(format!("tenor {}", spec.tenor)));
        }
        if !(0.0..=1.0).contains(&spec.reference_recovery) {
            return Err(InstrumentError::InvalidSpec(format!(
                "reference recovery {} outside [0, 1]",
                spec.reference_recovery
            )));
        }
        if !(spec.notional.is_finite() && spec.notional > 0.0) {
            return Err(InstrumentError::InvalidSpec(format!("notional {}", spec.notional)));
        }
        if inception_rating == 0 || inception_rating >= k {
            return Err(InstrumentError::InvalidSpec(format!(
                "reference rating {inception_rating} must be alive in 1..{k}"
            )));
        }
        let n_full = (spec.tenor / PANEL_WIDTH + TIME_TOL).floor() as usize;
        let full_panels = (0..n_full)
            .flat_map(|p| {
                let lo = p as f64 * PANEL_WIDTH;
                panel_nodes(reference, &params, lo, lo + PANEL_WIDTH)
            })
            .collect();
        let mut pricer = Self {
            generator: reference.clone(),
            params,
            notional: spec.notional,
            tenor: spec.tenor,
            recovery: spec.reference_recovery,
            spread: 0.0,
            full_panels,
            tails: HashMap::new(),
        };
        pricer.spread = match spec.spread {
            Some(s) if s.is_finite() && s >= 0.0 => s,
            Some(s) => return Err(InstrumentError::InvalidSpec(format!("spread {s}"))),
            None => pricer.par_spread(inception_rating, params.r0)?,
        };
        Ok(pricer)
    }

    /// Precomputes the partial-panel tables for evaluation dates `times`.
    pub fn with_cached_times(mut self, times: &[f64]) -> Self {
        for &t in times {
            let rem = self.tenor - t;
            if rem > 0.0 {
                let (split, _) = self.split(rem);
                let tail = panel_nodes(&self.generator, &self.params, split, rem);
                self.tails.insert(rem.to_bits(), tail);
            }
        }
        self
    }

    pub fn spread(&self) -> f64 {
        self.spread
    }

    pub fn maturity(&self) -> f64 {
        self.tenor
    }

    pub fn recovery(&self) -> f64 {
        self.recovery
    }

    /// Protection payment `(1−R₃)·N` due at the reference default.
    pub fn default_payment(&self) -> f64 {
        (1.0 - self.recovery) * self.notional
    }

    fn split(&self, rem: f64) -> (f64, usize) {
        let m = ((rem / PANEL_WIDTH + TIME_TOL).floor() as usize).min(self.full_panels.len() / 6);
        (m as f64 * PANEL_WIDTH, m * 6)
    }

    /// Protection and premium-annuity legs per unit notional.
    fn legs(&self, t: f64, rating: usize, r_t: f64) -> (f64, f64) {
        let rem = self.tenor - t;
        if rem <= TIME_TOL {
            return (0.0, 0.0);
        }
        let l = rating - 1;
        let (split, n_nodes) = self.split(rem);
        let accumulate = |nodes: &[Node], acc: &mut (f64, f64)| {
            for n in nodes {
                let df = n.weight * (n.ln_a - n.b * r_t).exp();
                acc.0 += df * n.density[l];
                acc.1 += df * n.survival[l];
            }
        };
        let mut acc = (0.0, 0.0);
        accumulate(&self.full_panels[..n_nodes], &mut acc);
        if rem - split > TIME_TOL {
            match self.tails.get(&rem.to_bits()) {
                Some(tail) => accumulate(tail, &mut acc),
                None => accumulate(&panel_nodes(&self.generator, &self.params, split, rem), &mut acc),
            }
        }
        acc
    }

    /// Clean price given the reference category at `t` (`K` once defaulted).
    pub fn price_state(&self, t: f64, rating: usize, r_t: f64) -> Result<f64, InstrumentError> {
        if t > self.tenor + TIME_TOL {
            return Err(InstrumentError::EvalAfterMaturity { t, maturity: self.tenor });
        }
        if rating >= self.generator.dim() {
            return Ok(0.0);
        }
        let (protection, annuity) = self.legs(t, rating, r_t);
        Ok(self.notional * ((1.0 - self.recovery) * protection - self.spread * annuity))
    }

    /// `(S_t, S^Δ_t)`; `defaults_now` marks `t = τ₃`.
    pub fn clean_price(&self, t: f64, rating: usize, r_t: f64, defaults_now: bool) -> Result<CleanPrice, InstrumentError> {
        let s = self.price_state(t, rating, r_t)?;
        let atom = if defaults_now && t <= self.tenor + TIME_TOL { self.default_payment() } else { 0.0 };
        Ok(CleanPrice { s, s_delta: s + atom })
    }

    /// Risky annuity `E[∫_t^{T∧τ₃} B_t/B_u du]` per unit notional.
    pub fn risky_annuity(&self, t: f64, rating: usize, r_t: f64) -> f64 {
        self.legs(t, rating, r_t).1
    }

    /// Protection/annuity ratio at `t = 0`.
    pub fn par_spread(&self, rating: usize, r0: f64) -> Result<f64, InstrumentError> {
        let (protection, annuity) = self.legs(0.0, rating, r0);
        if annuity <= 0.0 {
            return Err(InstrumentError::NoRoot);
        }
        Ok((1.0 - self.recovery) * protection / annuity)
    }
}

/// Spread at which the CDS is worth zero at inception.
pub fn par_cds_spread(
    spec: &CdsSpec,
    reference: &GeneratorMatrix,
    params: VasicekParams,
    rating: usize,
) -> Result<f64, InstrumentError> {
    let spec = CdsSpec { spread: Some(0.0), ..spec.clone() };
    CdsPricer::new(&spec, reference, params, rating)?.par_spread(rating, params.r0)
}
