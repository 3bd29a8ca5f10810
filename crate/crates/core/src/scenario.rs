//! Scenario configuration.
//!
//! Scenarios are TOML documents:
//!
//! ```toml
//! [run]
//! n_paths = 200000        # default 200000
//! seed = 7                # default 0
//!
//! [ratings]
//! counterparty = [[0.9, 0.08, 0.017, 0.003], ...]   # annual matrix, K rows
//! investor = [[...], ...]
//! reference = [[...], ...]                         # CDS only
//! initial = ["A", "A", "A"]                        # default: best rating
//! investor_default_free = false
//!
//! [copula]
//! alpha = [0.0, 1.0]          # one run per value
//! measure_alpha1 = 0.0
//! measure_alpha2 = 0.0
//!
//! [triggers]
//! pairs = [["B", "B"], ["D", "D"]]   # default: every pair worse than the initial ratings
//!
//! [instrument]
//! type = "irs"                # or "cds"
//! tenor = 10.0
//!
//! [rates]
//! r0 = 0.05
//! speed = 0.1                 # or theta/alpha in drift form
//! level = 0.05
//! sigma = 0.01
//!
//! [collateral]
//! schemes = ["none", "linear", "exponential"]
//! call_freq = 4               # default 4 for IRS, 12 for CDS
//!
//! [recovery]
//! r1 = 0.4
//! r2 = 0.4
//! rh1 = 1.0
//! rh2 = 1.0
//! ```
//!
//! Ratings are given either as letters (`A` is the best) or as 1-based
//! category numbers.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::collateral::{CollateralError, CollateralScheme, CollateralSpec, ThresholdForm};
use crate::copula::{build_joint_generator, build_joint_generator_3, change_measure, CopulaError, CopulaSpec};
use crate::copula::MeasureChangeSpec;
use crate::ctmc::TriggerLevels;
use crate::instruments::{CdsPricer, CdsSpec, Instrument, InstrumentError, IrsPricer, IrsSpec};
use crate::rates::{payment_schedule, RatesError, VasicekParams};
use crate::rating::{
    generator_from_annual_matrix, transition_matrix_from_rows, Embedding, GeneratorMatrix, RatingError, RatingScale,
    TransitionMatrix,
};
use crate::xva::{ModelInputs, RecoverySpec, XvaError, XvaModel};

pub const DEFAULT_N_PATHS: u64 = 200_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error(transparent)]
    Rating(#[from] RatingError),
    #[error(transparent)]
    Copula(#[from] CopulaError),
    #[error(transparent)]
    Instrument(#[from] InstrumentError),
    #[error(transparent)]
    Rates(#[from] RatesError),
    #[error(transparent)]
    Collateral(#[from] CollateralError),
    #[error(transparent)]
    Xva(#[from] XvaError),
}

impl ScenarioError {
    /// Failures of a numerical procedure rather than of the input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Self::Rating(e) => matches!(
                e,
                RatingError::LogDivergence | RatingError::NoRealLogarithm | RatingError::EmbeddingFailure { .. }
            ),
            Self::Copula(CopulaError::NegativeIntensity { .. } | CopulaError::MeasureChangeOverflow) => true,
            Self::Instrument(InstrumentError::NoRoot) => true,
            Self::Xva(XvaError::IdentityViolation { .. } | XvaError::InconsistentPathSet) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Rating {
    Number(usize),
    Label(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            Self::One(x) => vec![x],
            Self::Many(v) => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    run: RawRun,
    ratings: RawRatings,
    #[serde(default)]
    copula: RawCopula,
    #[serde(default)]
    triggers: RawTriggers,
    instrument: RawInstrument,
    rates: RawRates,
    #[serde(default)]
    collateral: RawCollateral,
    #[serde(default)]
    recovery: RawRecovery,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n_paths: Option<u64>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRatings {
    counterparty: Vec<Vec<f64>>,
    investor: Vec<Vec<f64>>,
    reference: Option<Vec<Vec<f64>>>,
    #[serde(default = "one_year")]
    horizon: f64,
    initial: Option<Vec<Rating>>,
    #[serde(default)]
    investor_default_free: bool,
}

fn one_year() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCopula {
    #[serde(default = "zero_alpha")]
    alpha: OneOrMany<f64>,
    #[serde(default)]
    measure_alpha1: f64,
    #[serde(default)]
    measure_alpha2: f64,
}

fn zero_alpha() -> OneOrMany<f64> {
    OneOrMany::One(0.0)
}

impl Default for RawCopula {
    fn default() -> Self {
        Self { alpha: zero_alpha(), measure_alpha1: 0.0, measure_alpha2: 0.0 }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTriggers {
    pairs: Option<Vec<(Rating, Rating)>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum RawInstrument {
    Irs(IrsSpec),
    Cds(CdsSpec),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRates {
    r0: f64,
    sigma: f64,
    speed: Option<f64>,
    level: Option<f64>,
    theta: Option<f64>,
    alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCollateral {
    #[serde(alias = "scheme")]
    schemes: Option<OneOrMany<String>>,
    custom_rates: Option<Vec<f64>>,
    #[serde(default)]
    threshold_form: ThresholdForm,
    #[serde(default)]
    mta: f64,
    #[serde(default)]
    ia1: f64,
    #[serde(default)]
    ia2: f64,
    #[serde(default)]
    delta: f64,
    call_freq: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecovery {
    #[serde(default = "forty")]
    r1: f64,
    #[serde(default = "forty")]
    r2: f64,
    #[serde(default = "full")]
    rh1: f64,
    #[serde(default = "full")]
    rh2: f64,
}

fn forty() -> f64 {
    0.4
}

fn full() -> f64 {
    1.0
}

impl Default for RawRecovery {
    fn default() -> Self {
        Self { r1: 0.4, r2: 0.4, rh1: 1.0, rh2: 1.0 }
    }
}

/// Instrument description before pricing tables are built.
#[derive(Debug, Clone, PartialEq)]
pub enum InstrumentSpec {
    Irs(IrsSpec),
    Cds(CdsSpec),
}

impl InstrumentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Irs(_) => "irs",
            Self::Cds(_) => "cds",
        }
    }

    pub fn tenor(&self) -> f64 {
        match self {
            Self::Irs(s) => s.tenor,
            Self::Cds(s) => s.tenor,
        }
    }
}

/// A validated experiment description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub scale: RatingScale,
    /// Counterparty, investor and (CDS only) reference matrices.
    pub matrices: Vec<TransitionMatrix>,
    pub embeddings: Vec<Embedding>,
    pub initial: Vec<usize>,
    pub investor_default_free: bool,
    pub alphas: Vec<f64>,
    pub measure_change: MeasureChangeSpec,
    pub triggers: Vec<TriggerLevels>,
    pub instrument: InstrumentSpec,
    pub rates: VasicekParams,
    pub collateral: Vec<CollateralSpec>,
    pub recovery: RecoverySpec,
    pub n_paths: u64,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// SHA-256 of the config text, hex.
    pub config_hash: String,
}

fn parse_rating(scale: RatingScale, r: &Rating) -> Result<usize, ScenarioError> {
    Ok(match r {
        Rating::Number(n) => scale.check(*n)?,
        Rating::Label(s) => scale.parse(s)?,
    })
}

/// Trigger pairs in the tabulation order `(B,B), (B,C), (C,B), (C,C), …,
/// (B,D), (D,B), (C,D), (D,C), (D,D)`: both non-default first, then pairs
/// with one default level, then the no-trigger baseline.
pub fn default_trigger_grid(k: usize, first: usize) -> Vec<TriggerLevels> {
    let mut out = Vec::new();
    for a in first..k {
        for b in first..k {
            out.push(TriggerLevels { k1: a, k2: b });
        }
    }
    for a in first..k {
        out.push(TriggerLevels { k1: a, k2: k });
        out.push(TriggerLevels { k1: k, k2: a });
    }
    out.push(TriggerLevels { k1: k, k2: k });
    out
}

fn hash_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses and validates a TOML scenario.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let invalid = |m: String| ScenarioError::Validation(m);

    let k = raw.ratings.counterparty.len();
    let scale = RatingScale::new(k)?;
    let horizon = raw.ratings.horizon;
    let mut rows = vec![raw.ratings.counterparty, raw.ratings.investor];
    let is_cds = matches!(raw.instrument, RawInstrument::Cds(_));
    match (raw.ratings.reference, is_cds) {
        (Some(m), true) => rows.push(m),
        (None, true) => return Err(invalid("a CDS scenario needs ratings.reference".into())),
        (Some(_), false) => return Err(invalid("ratings.reference is only used by CDS scenarios".into())),
        (None, false) => {}
    }
    let matrices = rows
        .iter()
        .map(|m| transition_matrix_from_rows(scale, horizon, m))
        .collect::<Result<Vec<_>, _>>()?;
    let embeddings = matrices
        .iter()
        .map(generator_from_annual_matrix)
        .collect::<Result<Vec<_>, _>>()?;

    let initial = match raw.ratings.initial {
        Some(v) => v.iter().map(|r| parse_rating(scale, r)).collect::<Result<Vec<_>, _>>()?,
        None => vec![1; matrices.len()],
    };
    if initial.len() != matrices.len() {
        return Err(invalid(format!(
            "ratings.initial has {} entries, expected {}",
            initial.len(),
            matrices.len()
        )));
    }
    if let Some(&c) = initial.iter().find(|&&c| c >= k) {
        return Err(invalid(format!("initial rating {} is the default state", scale.label(c))));
    }

    let alphas = raw.copula.alpha.into_vec();
    for &a in &alphas {
        CopulaSpec::new(a)?;
    }
    if alphas.is_empty() {
        return Err(invalid("copula.alpha is empty".into()));
    }
    let measure_change = MeasureChangeSpec { alpha1: raw.copula.measure_alpha1, alpha2: raw.copula.measure_alpha2 };

    let triggers = match raw.triggers.pairs {
        Some(pairs) => pairs
            .iter()
            .map(|(a, b)| Ok(TriggerLevels::new(scale, parse_rating(scale, a)?, parse_rating(scale, b)?)?))
            .collect::<Result<Vec<_>, ScenarioError>>()?,
        None => default_trigger_grid(k, initial[0].max(initial[1]) + 1),
    };
    if triggers.is_empty() {
        return Err(invalid("triggers.pairs is empty".into()));
    }
    for t in &triggers {
        if initial[0] >= t.k1 || initial[1] >= t.k2 {
            return Err(invalid(format!(
                "trigger ({}, {}) is not worse than the initial ratings ({}, {})",
                scale.label(t.k1),
                scale.label(t.k2),
                scale.label(initial[0]),
                scale.label(initial[1])
            )));
        }
    }

    let rates = match (raw.rates.speed, raw.rates.level, raw.rates.theta, raw.rates.alpha) {
        (Some(speed), Some(level), None, None) => VasicekParams::new(raw.rates.r0, speed, level, raw.rates.sigma)?,
        (None, None, Some(theta), Some(alpha)) => {
            VasicekParams::from_drift_form(raw.rates.r0, theta, alpha, raw.rates.sigma)?
        }
        _ => return Err(invalid("rates needs either speed and level, or theta and alpha".into())),
    };

    let instrument = match raw.instrument {
        RawInstrument::Irs(s) => InstrumentSpec::Irs(s),
        RawInstrument::Cds(s) => InstrumentSpec::Cds(s),
    };
    let tenor = instrument.tenor();
    let call_freq = raw.collateral.call_freq.unwrap_or(if is_cds { 12.0 } else { 4.0 });
    let mut call_dates = payment_schedule(tenor, call_freq)?;
    call_dates.pop();

    let scheme_names = raw
        .collateral
        .schemes
        .map(OneOrMany::into_vec)
        .unwrap_or_else(|| vec!["none".into(), "linear".into(), "exponential".into()]);
    let mut collateral = Vec::with_capacity(scheme_names.len());
    for name in &scheme_names {
        let scheme = match name.as_str() {
            "none" => CollateralScheme::None,
            "full" => CollateralScheme::Full,
            "linear" => CollateralScheme::Linear,
            "exponential" => CollateralScheme::Exponential,
            "custom" => CollateralScheme::Custom(
                raw.collateral
                    .custom_rates
                    .clone()
                    .ok_or_else(|| invalid("scheme `custom` needs collateral.custom_rates".into()))?,
            ),
            other => return Err(invalid(format!("unknown collateral scheme `{other}`"))),
        };
        let spec = CollateralSpec {
            scheme,
            threshold_form: raw.collateral.threshold_form,
            mta: raw.collateral.mta,
            ia_cpty: raw.collateral.ia1,
            ia_inv: raw.collateral.ia2,
            margin_period: raw.collateral.delta,
            call_dates: call_dates.clone(),
        };
        spec.validate(k, tenor)?;
        collateral.push(spec);
    }
    if collateral.is_empty() {
        return Err(invalid("collateral.schemes is empty".into()));
    }

    let recovery = RecoverySpec {
        r1: raw.recovery.r1,
        r2: raw.recovery.r2,
        rh1: raw.recovery.rh1,
        rh2: raw.recovery.rh2,
    };
    recovery.validate()?;

    let n_paths = raw.run.n_paths.unwrap_or(DEFAULT_N_PATHS);
    if n_paths < 2 {
        return Err(invalid(format!("run.n_paths must be at least 2, got {n_paths}")));
    }

    let scenario = Scenario {
        scale,
        matrices,
        embeddings,
        initial,
        investor_default_free: raw.ratings.investor_default_free,
        alphas,
        measure_change,
        triggers,
        instrument,
        rates,
        collateral,
        recovery,
        n_paths,
        seed: raw.run.seed.unwrap_or(0),
        out_dir: raw.run.out_dir,
        config_hash: hash_hex(text),
    };
    scenario.instrument()?;
    Ok(scenario)
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_owned(), source })?;
        load_scenario(&text)
    }

    /// Marginal generators, with the investor's default removed when the
    /// scenario asks for a default-free investor.
    pub fn generators(&self) -> Vec<GeneratorMatrix> {
        self.embeddings
            .iter()
            .enumerate()
            .map(|(i, e)| {
                if i == 1 && self.investor_default_free {
                    e.generator.without_default()
                } else {
                    e.generator.clone()
                }
            })
            .collect()
    }

    /// The instrument with its pricing tables.
    pub fn instrument(&self) -> Result<Instrument, ScenarioError> {
        Ok(match &self.instrument {
            InstrumentSpec::Irs(s) => Instrument::Irs(IrsPricer::new(s, self.rates)?),
            InstrumentSpec::Cds(s) => {
                let reference = &self.embeddings[2].generator;
                let pricer = CdsPricer::new(s, reference, self.rates, self.initial[2])?
                    .with_cached_times(&self.collateral[0].call_dates);
                Instrument::Cds(pricer)
            }
        })
    }

    /// Simulation model for one common-jump weight.
    pub fn model(&self, alpha: f64) -> Result<XvaModel, ScenarioError> {
        let spec = CopulaSpec::new(alpha)?;
        let g = self.generators();
        let joint = if g.len() == 3 {
            build_joint_generator_3(&g[0], &g[1], &g[2], spec)?
        } else {
            build_joint_generator(&g[0], &g[1], spec)?
        };
        let joint = change_measure(&joint, self.measure_change)?;
        let inputs = ModelInputs {
            generator: joint,
            initial: self.initial.clone(),
            rates: self.rates,
            instrument: self.instrument()?,
            schemes: self.collateral.clone(),
            triggers: self.triggers.clone(),
            recovery: self.recovery,
            alpha,
        };
        Ok(XvaModel::new(inputs)?)
    }
}
