//! Monte Carlo estimators of the valuation adjustments.
//!
//! Every adjustment is the expectation of a discounted close-out loss read
//! off one simulated path:
//!
//! | leg        | event                     | date  | collateral |
//! |------------|---------------------------|-------|------------|
//! | UCVA       | `τ = τ₁ ≤ T`              | `τ`   | `C_τ`      |
//! | DVA        | `τ = τ₂ ≤ T`              | `τ`   | `C_τ`      |
//! | UCVA^R     | `τ^R = τ₁ ≤ T`            | `τ^R` | `C_{τ^R}`  |
//! | DVA^R      | `τ^R = τ₂ ≤ T`            | `τ^R` | `C_{τ^R}`  |
//! | URVA       | `τ^R < τ = τ₁ ≤ T`        | `τ`   | `C_τ`      |
//! | DRVA       | `τ^R < τ = τ₂ ≤ T`        | `τ`   | `C_τ`      |
//! | UCVA^{R,h} | `τ^R = τ₁ ≤ T`            | `τ^R` | `C̃¹`       |
//! | DVA^{R,h}  | `τ^R = τ₂ ≤ T`            | `τ^R` | `C̃²`       |
//!
//! Counterparty legs take `(1−R₁)(S^Δ − C)⁺`, investor legs
//! `(1−R₂)(S^Δ − C)⁻`, all discounted by `B⁻¹` at the leg date. The
//! bilateral quantities are differences of these means, so `CVA = UCVA − DVA`,
//! `CVA^R = UCVA^R − DVA^R` and `RVA = URVA − DRVA` hold exactly and
//! `RVA = CVA − CVA^R` holds path by path.
//!
//! Paths are simulated in fixed chunks whose partial sums are combined in
//! chunk order, so estimates do not depend on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collateral::{closeout_collateral, CallState, CollateralError, CollateralLedger, CollateralSpec};
use crate::copula::JointGenerator;
use crate::ctmc::{stopping_times_from_table, JointRatingPath, JumpSampler, StoppingTimes, TriggerLevels};
use crate::instruments::{CleanPrice, Instrument, InstrumentError};
use crate::rates::{build_rate_grid, merge_times, sample_rate_path, RatesError, VasicekParams};
use crate::rng::{path_rng, RATE_STREAM, RATING_STREAM};

/// Paths per reduction chunk.
pub const CHUNK_SIZE: u64 = 4096;
/// Largest step of the short-rate grid, in years.
pub const RATE_STEP: f64 = 1.0 / 48.0;
const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum XvaError {
    #[error("at least two paths are needed, got {0}")]
    InsufficientPaths(u64),
    #[error("stopping times and collateral ledger do not describe the same path")]
    InconsistentPathSet,
    #[error("identity {name} violated: {lhs:e} vs {rhs:e}")]
    IdentityViolation { name: &'static str, lhs: f64, rhs: f64 },
    #[error("mitigation needs the no-trigger baseline (K, K)")]
    MissingBaseline,
    #[error("invalid recovery: {0}")]
    InvalidRecovery(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Collateral(#[from] CollateralError),
    #[error(transparent)]
    Instrument(#[from] InstrumentError),
    #[error(transparent)]
    Rates(#[from] RatesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoverySpec {
    pub r1: f64,
    pub r2: f64,
    pub rh1: f64,
    pub rh2: f64,
}

impl Default for RecoverySpec {
    fn default() -> Self {
        Self { r1: 0.4, r2: 0.4, rh1: 1.0, rh2: 1.0 }
    }
}

impl RecoverySpec {
    pub fn validate(&self) -> Result<(), XvaError> {
        for (name, v) in [("R1", self.r1), ("R2", self.r2), ("Rh1", self.rh1), ("Rh2", self.rh2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(XvaError::InvalidRecovery(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.r1 > self.rh1 || self.r2 > self.rh2 {
            return Err(XvaError::InvalidRecovery(format!(
                "need R1 <= Rh1 and R2 <= Rh2, got {} > {} or {} > {}",
                self.r1, self.rh1, self.r2, self.rh2
            )));
        }
        Ok(())
    }
}

/// Discount factor and cum-dividend price at a close-out date.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloseOutPoint {
    pub time: f64,
    /// `B_t⁻¹`
    pub discount: f64,
    /// `S^Δ_t`
    pub s_delta: f64,
}

/// Discounted close-out legs of one path.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PathTerms {
    pub ucva: f64,
    pub dva: f64,
    pub ucva_r: f64,
    pub dva_r: f64,
    pub urva: f64,
    pub drva: f64,
    pub ucva_rh: f64,
    pub dva_rh: f64,
}

const N_LEGS: usize = 8;
const N_QUANTITIES: usize = 15;

impl PathTerms {
    fn legs(&self) -> [f64; N_LEGS] {
        [self.ucva, self.dva, self.ucva_r, self.dva_r, self.urva, self.drva, self.ucva_rh, self.dva_rh]
    }

    /// All reported quantities, in [`Quantity`] order.
    fn quantities(&self) -> [f64; N_QUANTITIES] {
        derive_quantities(&self.legs())
    }
}

fn derive_quantities(l: &[f64; N_LEGS]) -> [f64; N_QUANTITIES] {
    let [ucva, dva, ucva_r, dva_r, urva, drva, ucva_rh, dva_rh] = *l;
    let rva = urva - drva;
    let urva_h = ucva_r - ucva_rh;
    let drva_h = dva_rh - dva_r;
    [
        ucva,
        dva,
        ucva - dva,
        ucva_r,
        dva_r,
        ucva_r - dva_r,
        urva,
        drva,
        rva,
        ucva_rh,
        dva_rh,
        ucva_rh - dva_rh,
        urva_h,
        drva_h,
        rva + urva_h + drva_h,
    ]
}

/// Reported quantities, in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Ucva,
    Dva,
    Cva,
    UcvaR,
    DvaR,
    CvaR,
    Urva,
    Drva,
    Rva,
    UcvaRh,
    DvaRh,
    CvaRh,
    UrvaH,
    DrvaH,
    RvaH,
}

impl Quantity {
    pub const ALL: [Quantity; N_QUANTITIES] = [
        Self::Ucva,
        Self::Dva,
        Self::Cva,
        Self::UcvaR,
        Self::DvaR,
        Self::CvaR,
        Self::Urva,
        Self::Drva,
        Self::Rva,
        Self::UcvaRh,
        Self::DvaRh,
        Self::CvaRh,
        Self::UrvaH,
        Self::DrvaH,
        Self::RvaH,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ucva => "UCVA",
            Self::Dva => "DVA",
            Self::Cva => "CVA",
            Self::UcvaR => "UCVA^R",
            Self::DvaR => "DVA^R",
            Self::CvaR => "CVA^R",
            Self::Urva => "URVA",
            Self::Drva => "DRVA",
            Self::Rva => "RVA",
            Self::UcvaRh => "UCVA^Rh",
            Self::DvaRh => "DVA^Rh",
            Self::CvaRh => "CVA^Rh",
            Self::UrvaH => "URVA^h",
            Self::DrvaH => "DRVA^h",
            Self::RvaH => "RVA^h",
        }
    }
}

/// Close-out legs from one path's stopping times, prices and margin account.
///
/// `at_tau` and `at_tau_r` are required whenever `τ` (respectively `τ^R`)
/// falls before the horizon. The ledger must have been run up to `τ`.
pub fn pathwise_cva_terms(
    stops: &StoppingTimes,
    at_tau: Option<CloseOutPoint>,
    at_tau_r: Option<CloseOutPoint>,
    ledger: &CollateralLedger,
    rec: &RecoverySpec,
) -> Result<PathTerms, XvaError> {
    let mut out = PathTerms::default();
    if stops.tau.is_finite() {
        let p = at_tau.ok_or(XvaError::InconsistentPathSet)?;
        if ledger.stop() != stops.tau || p.time != stops.tau {
            return Err(XvaError::InconsistentPathSet);
        }
        let x = p.s_delta - ledger.value_at(p.time);
        if stops.defaults_first(0) {
            out.ucva = p.discount * (1.0 - rec.r1) * x.max(0.0);
            if stops.trigger_precedes_default(0) {
                out.urva = out.ucva;
            }
        }
        if stops.defaults_first(1) {
            out.dva = p.discount * (1.0 - rec.r2) * (-x).max(0.0);
            if stops.trigger_precedes_default(1) {
                out.drva = out.dva;
            }
        }
    }
    if let Some(event) = stops.event {
        let p = at_tau_r.ok_or(XvaError::InconsistentPathSet)?;
        if p.time != stops.tau_r || ledger.stop() < stops.tau_r {
            return Err(XvaError::InconsistentPathSet);
        }
        let c = ledger.value_at(p.time);
        let haircut = closeout_collateral(c, event, rec.rh1, rec.rh2);
        if stops.closes_on_default(0) {
            let w = p.discount * (1.0 - rec.r1);
            out.ucva_r = w * (p.s_delta - c).max(0.0);
            out.ucva_rh = w * (p.s_delta - haircut.cpty).max(0.0);
        }
        if stops.closes_on_default(1) {
            let w = p.discount * (1.0 - rec.r2);
            out.dva_r = w * (c - p.s_delta).max(0.0);
            out.dva_rh = w * (haircut.inv - p.s_delta).max(0.0);
        }
    }
    Ok(out)
}

/// Monte Carlo mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Estimates for one trigger pair under one collateral scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentReport {
    pub scheme: String,
    pub alpha: f64,
    pub k: usize,
    pub k1: usize,
    pub k2: usize,
    pub n_paths: u64,
    pub seed: u64,
    pub ucva: Estimate,
    pub dva: Estimate,
    pub cva: Estimate,
    pub ucva_r: Estimate,
    pub dva_r: Estimate,
    pub cva_r: Estimate,
    pub urva: Estimate,
    pub drva: Estimate,
    pub rva: Estimate,
    pub ucva_rh: Estimate,
    pub dva_rh: Estimate,
    pub cva_rh: Estimate,
    pub urva_h: Estimate,
    pub drva_h: Estimate,
    pub rva_h: Estimate,
    /// `(|CVA| − |CVA^R|)/|CVA|·100`, absent when `CVA = 0`.
    pub mitigation_pct: Option<f64>,
}

impl AdjustmentReport {
    pub fn get(&self, q: Quantity) -> Estimate {
        match q {
            Quantity::Ucva => self.ucva,
            Quantity::Dva => self.dva,
            Quantity::Cva => self.cva,
            Quantity::UcvaR => self.ucva_r,
            Quantity::DvaR => self.dva_r,
            Quantity::CvaR => self.cva_r,
            Quantity::Urva => self.urva,
            Quantity::Drva => self.drva,
            Quantity::Rva => self.rva,
            Quantity::UcvaRh => self.ucva_rh,
            Quantity::DvaRh => self.dva_rh,
            Quantity::CvaRh => self.cva_rh,
            Quantity::UrvaH => self.urva_h,
            Quantity::DrvaH => self.drva_h,
            Quantity::RvaH => self.rva_h,
        }
    }

    pub fn triggers(&self) -> TriggerLevels {
        TriggerLevels { k1: self.k1, k2: self.k2 }
    }

    pub fn is_baseline(&self) -> bool {
        self.k1 == self.k && self.k2 == self.k
    }

    /// Report-level identities, to a relative tolerance of `1e-12`.
    pub fn check_identities(&self) -> Result<(), XvaError> {
        let scale = self.ucva.value.abs() + self.dva.value.abs() + self.ucva_r.value.abs() + self.dva_r.value.abs();
        let tol = IDENTITY_TOL * scale.max(f64::MIN_POSITIVE);
        let checks = [
            ("CVA^R = UCVA^R - DVA^R", self.cva_r.value, self.ucva_r.value - self.dva_r.value),
            ("RVA = URVA - DRVA", self.rva.value, self.urva.value - self.drva.value),
            ("RVA = CVA - CVA^R", self.rva.value, self.cva.value - self.cva_r.value),
            ("RVA^h = CVA - CVA^Rh", self.rva_h.value, self.cva.value - self.cva_rh.value),
        ];
        for (name, lhs, rhs) in checks {
            if (lhs - rhs).abs() > tol {
                return Err(XvaError::IdentityViolation { name, lhs, rhs });
            }
        }
        Ok(())
    }
}

/// `(|CVA^R(K,K)| − |CVA^R(K₁,K₂)|)/|CVA^R(K,K)|·100` for every report;
/// the reports must share everything except trigger levels.
pub fn mitigation_table(reports: &[AdjustmentReport]) -> Result<Vec<(TriggerLevels, f64)>, XvaError> {
    let base = reports.iter().find(|r| r.is_baseline()).ok_or(XvaError::MissingBaseline)?;
    let b = base.cva_r.value.abs();
    Ok(reports
        .iter()
        .map(|r| (r.triggers(), (b - r.cva_r.value.abs()) / b * 100.0))
        .collect())
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: &Compensated) {
        self.add(other.sum);
        self.add(other.c);
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct CellAccumulator {
    legs: [Compensated; N_LEGS],
    squares: [f64; N_QUANTITIES],
}

impl CellAccumulator {
    fn add(&mut self, t: &PathTerms) {
        for (acc, v) in self.legs.iter_mut().zip(t.legs()) {
            acc.add(v);
        }
        for (acc, v) in self.squares.iter_mut().zip(t.quantities()) {
            *acc += v * v;
        }
    }

    fn merge(&mut self, other: &CellAccumulator) {
        for (a, b) in self.legs.iter_mut().zip(&other.legs) {
            a.merge(b);
        }
        for (a, b) in self.squares.iter_mut().zip(&other.squares) {
            *a += b;
        }
    }

    fn estimates(&self, n: u64) -> [Estimate; N_QUANTITIES] {
        let nf = n as f64;
        let means = self.legs.map(|l| l.value() / nf);
        let q = derive_quantities(&means);
        let mut out = [Estimate { value: 0.0, se: 0.0 }; N_QUANTITIES];
        for i in 0..N_QUANTITIES {
            let var = ((self.squares[i] - nf * q[i] * q[i]) / (nf - 1.0)).max(0.0);
            out[i] = Estimate { value: q[i], se: (var / nf).sqrt() };
        }
        out
    }
}

/// Everything needed to simulate one grid of cells.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    /// Joint generator of (counterparty, investor[, reference]).
    pub generator: JointGenerator,
    /// 1-based initial categories, one per component.
    pub initial: Vec<usize>,
    pub rates: VasicekParams,
    pub instrument: Instrument,
    /// One spec per collateral scheme; all share the same call dates.
    pub schemes: Vec<CollateralSpec>,
    pub triggers: Vec<TriggerLevels>,
    pub recovery: RecoverySpec,
    /// Common-jump weight, for provenance.
    pub alpha: f64,
}

/// A validated model with the per-path sampler and rate grid prepared.
#[derive(Debug, Clone)]
pub struct XvaModel {
    inputs: ModelInputs,
    sampler: JumpSampler,
    initial_state: usize,
    horizon: f64,
    call_dates: Vec<f64>,
    base_grid: Vec<f64>,
}

impl XvaModel {
    pub fn new(inputs: ModelInputs) -> Result<Self, XvaError> {
        let g = &inputs.generator;
        let k = g.k();
        let needed = if inputs.instrument.needs_reference() { 3 } else { 2 };
        if g.n_components() != needed || inputs.initial.len() != needed {
            return Err(XvaError::InvalidModel(format!(
                "{} needs {needed} rating components, got {} with {} initial ratings",
                inputs.instrument.name(),
                g.n_components(),
                inputs.initial.len()
            )));
        }
        if inputs.initial.iter().any(|&c| c == 0 || c >= k) {
            return Err(XvaError::InvalidModel(format!(
                "initial ratings {:?} must be alive categories in 1..{k}",
                inputs.initial
            )));
        }
        for t in &inputs.triggers {
            if t.k1 < 2 || t.k2 < 2 || t.k1 > k || t.k2 > k {
                return Err(XvaError::InvalidModel(format!("trigger levels ({}, {}) outside 2..={k}", t.k1, t.k2)));
            }
            if inputs.initial[0] >= t.k1 || inputs.initial[1] >= t.k2 {
                return Err(XvaError::InvalidModel(format!(
                    "initial ratings must be better than trigger levels ({}, {})",
                    t.k1, t.k2
                )));
            }
        }
        if inputs.schemes.is_empty() || inputs.triggers.is_empty() {
            return Err(XvaError::InvalidModel("empty scheme or trigger grid".into()));
        }
        inputs.recovery.validate()?;
        let horizon = inputs.instrument.maturity();
        let call_dates = inputs.schemes[0].call_dates.clone();
        for s in &inputs.schemes {
            s.validate(k, horizon)?;
            if s.call_dates != call_dates {
                return Err(XvaError::InvalidModel("collateral schemes must share call dates".into()));
            }
        }
        let mut anchors = call_dates.clone();
        anchors.extend_from_slice(inputs.instrument.payment_dates());
        let base_grid = build_rate_grid(horizon, &anchors, RATE_STEP);
        let sampler = JumpSampler::new(g);
        let initial_state = g.index(&inputs.initial);
        Ok(Self { inputs, sampler, initial_state, horizon, call_dates, base_grid })
    }

    pub fn inputs(&self) -> &ModelInputs {
        &self.inputs
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn sampler(&self) -> &JumpSampler {
        &self.sampler
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    /// Rating trajectory of path `index`, as used by the estimator.
    pub fn rating_path(&self, seed: u64, index: u64) -> JointRatingPath {
        let mut rng = path_rng(seed, index, RATING_STREAM);
        self.sampler.sample(self.initial_state, self.horizon, &mut rng)
    }

    fn n_cells(&self) -> usize {
        self.inputs.schemes.len() * self.inputs.triggers.len()
    }

    /// Close-out legs of path `index` for every (scheme, trigger) cell,
    /// scheme-major. `None` when neither party defaults before maturity, in
    /// which case every leg is zero.
    pub fn path_terms(&self, seed: u64, index: u64) -> Result<Option<Vec<PathTerms>>, XvaError> {
        let inputs = &self.inputs;
        let k = inputs.generator.k();
        let path = self.rating_path(seed, index);
        let table = path.category_table();
        let Some(tau_jump) = table.iter().position(|c| c[0] == k || c[1] == k) else {
            return Ok(None);
        };
        let tau = path.jumps[tau_jump].time;

        let jump_times: Vec<f64> = path.jumps[..=tau_jump].iter().map(|j| j.time).collect();
        let base = &self.base_grid[..self.base_grid.partition_point(|&t| t < tau)];
        let grid = merge_times(base, &jump_times);
        let mut rate_rng = path_rng(seed, index, RATE_STREAM);
        let rates = sample_rate_path(&inputs.rates, &grid, &mut rate_rng)?;

        let needs_ref = inputs.instrument.needs_reference();
        let tau3_jump = table.iter().position(|c| c[2] == k);
        let category_at = |t: f64| -> [usize; 3] {
            let n = path.jumps.partition_point(|j| j.time <= t);
            if n == 0 {
                let mut out = [1; 3];
                out[..inputs.initial.len()].copy_from_slice(&inputs.initial);
                out
            } else {
                table[n - 1]
            }
        };

        let n_calls = self.call_dates.partition_point(|&d| d < tau);
        let mut call_states = Vec::with_capacity(n_calls);
        for &d in &self.call_dates[..n_calls] {
            let cats = category_at(d);
            let reference = needs_ref.then_some((cats[2], false));
            let price = inputs.instrument.price(d, &rates, reference)?;
            call_states.push(CallState {
                price: price.s,
                bank: rates.bank_at(d),
                cpty_rating: cats[0],
                inv_rating: cats[1],
            });
        }
        let ledgers: Vec<CollateralLedger> = inputs
            .schemes
            .iter()
            .map(|s| CollateralLedger::build(s, k, tau, |i| call_states[i]))
            .collect();

        let mut memo: Vec<Option<CloseOutPoint>> = vec![None; tau_jump + 1];
        let mut point_at = |j: usize| -> Result<CloseOutPoint, XvaError> {
            if let Some(p) = memo[j] {
                return Ok(p);
            }
            let t = path.jumps[j].time;
            let reference = needs_ref.then_some((table[j][2], tau3_jump == Some(j)));
            let CleanPrice { s_delta, .. } = inputs.instrument.price(t, &rates, reference)?;
            let p = CloseOutPoint { time: t, discount: 1.0 / rates.bank_at(t), s_delta };
            memo[j] = Some(p);
            Ok(p)
        };

        let at_tau = Some(point_at(tau_jump)?);
        let mut out = vec![PathTerms::default(); self.n_cells()];
        let n_trig = inputs.triggers.len();
        for (ti, &trig) in inputs.triggers.iter().enumerate() {
            let stops = stopping_times_from_table(&path, &table, trig, self.horizon);
            let at_tau_r = match stops.tau_r_jump() {
                Some(j) => Some(point_at(j)?),
                None => None,
            };
            let at_default = trig.k1 == k && trig.k2 == k;
            for (si, ledger) in ledgers.iter().enumerate() {
                let terms = pathwise_cva_terms(&stops, at_tau, at_tau_r, ledger, &inputs.recovery)?;
                check_pathwise(&terms, at_default, &inputs.recovery)?;
                out[si * n_trig + ti] = terms;
            }
        }
        Ok(Some(out))
    }

    fn run_chunk(&self, seed: u64, start: u64, end: u64) -> Result<Vec<CellAccumulator>, XvaError> {
        let mut acc = vec![CellAccumulator::default(); self.n_cells()];
        for index in start..end {
            if let Some(terms) = self.path_terms(seed, index)? {
                for (a, t) in acc.iter_mut().zip(&terms) {
                    a.add(t);
                }
            }
        }
        Ok(acc)
    }

    /// One report per (scheme, trigger) cell, scheme-major.
    pub fn estimate(&self, n_paths: u64, seed: u64) -> Result<Vec<AdjustmentReport>, XvaError> {
        if n_paths < 2 {
            return Err(XvaError::InsufficientPaths(n_paths));
        }
        let n_chunks = n_paths.div_ceil(CHUNK_SIZE);
        let partials = (0..n_chunks)
            .into_par_iter()
            .map(|c| self.run_chunk(seed, c * CHUNK_SIZE, ((c + 1) * CHUNK_SIZE).min(n_paths)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut total = vec![CellAccumulator::default(); self.n_cells()];
        for part in &partials {
            for (a, b) in total.iter_mut().zip(part) {
                a.merge(b);
            }
        }

        let k = self.inputs.generator.k();
        let n_trig = self.inputs.triggers.len();
        let mut reports = Vec::with_capacity(self.n_cells());
        for (cell, acc) in total.iter().enumerate() {
            let scheme = &self.inputs.schemes[cell / n_trig];
            let trig = self.inputs.triggers[cell % n_trig];
            let e = acc.estimates(n_paths);
            let cva = e[Quantity::Cva as usize].value;
            let cva_r = e[Quantity::CvaR as usize].value;
            let report = AdjustmentReport {
                scheme: scheme.scheme.name().to_string(),
                alpha: self.inputs.alpha,
                k,
                k1: trig.k1,
                k2: trig.k2,
                n_paths,
                seed,
                ucva: e[0],
                dva: e[1],
                cva: e[2],
                ucva_r: e[3],
                dva_r: e[4],
                cva_r: e[5],
                urva: e[6],
                drva: e[7],
                rva: e[8],
                ucva_rh: e[9],
                dva_rh: e[10],
                cva_rh: e[11],
                urva_h: e[12],
                drva_h: e[13],
                rva_h: e[14],
                mitigation_pct: (cva != 0.0).then(|| (cva.abs() - cva_r.abs()) / cva.abs() * 100.0),
            };
            report.check_identities()?;
            reports.push(report);
        }
        Ok(reports)
    }
}

fn check_pathwise(t: &PathTerms, at_default: bool, rec: &RecoverySpec) -> Result<(), XvaError> {
    let violation = |name, lhs, rhs| Err(XvaError::IdentityViolation { name, lhs, rhs });
    if t.ucva - t.ucva_r != t.urva {
        return violation("URVA = UCVA - UCVA^R pathwise", t.urva, t.ucva - t.ucva_r);
    }
    if t.dva - t.dva_r != t.drva {
        return violation("DRVA = DVA - DVA^R pathwise", t.drva, t.dva - t.dva_r);
    }
    if at_default && (t.ucva_r != t.ucva || t.dva_r != t.dva || t.urva != 0.0 || t.drva != 0.0) {
        return violation("CVA^R = CVA at (K, K) pathwise", t.ucva_r - t.dva_r, t.ucva - t.dva);
    }
    if rec.rh1 == 1.0 && rec.rh2 == 1.0 && (t.ucva_rh != t.ucva_r || t.dva_rh != t.dva_r) {
        return violation("CVA^Rh = CVA^R at Rh = 1 pathwise", t.ucva_rh - t.dva_rh, t.ucva_r - t.dva_r);
    }
    Ok(())
}

/// Convenience wrapper: validate `inputs` and estimate every cell.
pub fn estimate_adjustments(inputs: ModelInputs, n_paths: u64, seed: u64) -> Result<Vec<AdjustmentReport>, XvaError> {
    XvaModel::new(inputs)?.estimate(n_paths, seed)
}
