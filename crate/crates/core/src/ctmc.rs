//! Exact jump-chain simulation of joint rating paths and the stopping
//! times read off them.

use rand::Rng;
use rand_distr::Exp1;

use crate::copula::{decode, JointGenerator};
use crate::rating::{RatingError, RatingScale};
use crate::rng::{path_rng, RATING_STREAM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub state: usize,
}

/// Piecewise-constant trajectory of the product-state chain on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointRatingPath {
    k: usize,
    n_components: usize,
    pub initial: usize,
    pub jumps: Vec<Jump>,
    pub horizon: f64,
}

impl JointRatingPath {
    pub fn new(k: usize, n_components: usize, initial: usize, jumps: Vec<Jump>, horizon: f64) -> Self {
        Self { k, n_components, initial, jumps, horizon }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    /// Product state at `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> usize {
        let n = self.jumps.partition_point(|j| j.time <= t);
        if n == 0 {
            self.initial
        } else {
            self.jumps[n - 1].state
        }
    }

    /// 1-based category of `component` at `t`.
    pub fn rating_at(&self, t: f64, component: usize) -> usize {
        self.categories(self.state_at(t))[component]
    }

    pub fn categories(&self, state: usize) -> Vec<usize> {
        decode(self.k, self.n_components, state)
    }

    /// Categories after each jump; unused components read as `1`.
    pub fn category_table(&self) -> Vec<[usize; 3]> {
        self.jumps
            .iter()
            .map(|j| {
                let mut out = [1; 3];
                let cats = self.categories(j.state);
                out[..cats.len().min(3)].copy_from_slice(&cats[..cats.len().min(3)]);
                out
            })
            .collect()
    }
}

/// Precomputed holding rates and jump distributions of a joint generator.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    k: usize,
    n_components: usize,
    exit_rate: Vec<f64>,
    /// per state: (destination, cumulative intensity)
    targets: Vec<Vec<(usize, f64)>>,
}

impl JumpSampler {
    pub fn new(g: &JointGenerator) -> Self {
        let m = g.matrix();
        let n = g.n_states();
        let mut exit_rate = Vec::with_capacity(n);
        let mut targets = Vec::with_capacity(n);
        for u in 0..n {
            let mut cum = 0.0;
            let mut row = Vec::new();
            for v in 0..n {
                if v != u && m[(u, v)] > 0.0 {
                    cum += m[(u, v)];
                    row.push((v, cum));
                }
            }
            exit_rate.push(cum);
            targets.push(row);
        }
        Self { k: g.k(), n_components: g.n_components(), exit_rate, targets }
    }

    /// Samples one path: exponential holding times with rate `−a_uu`, jump
    /// destinations proportional to the off-diagonal row.
    pub fn sample<R: Rng + ?Sized>(&self, initial: usize, horizon: f64, rng: &mut R) -> JointRatingPath {
        let mut t = 0.0;
        let mut state = initial;
        let mut jumps = Vec::new();
        loop {
            let rate = self.exit_rate[state];
            if rate <= 0.0 {
                break;
            }
            let hold: f64 = rng.sample(Exp1);
            t += hold / rate;
            if t > horizon {
                break;
            }
            let u = rng.random::<f64>() * rate;
            let row = &self.targets[state];
            let pick = row.partition_point(|&(_, c)| c <= u).min(row.len() - 1);
            state = row[pick].0;
            jumps.push(Jump { time: t, state });
        }
        JointRatingPath::new(self.k, self.n_components, initial, jumps, horizon)
    }
}

/// Samples a path from `g`, deterministically in `seed`.
pub fn simulate_path(g: &JointGenerator, initial: usize, horizon: f64, seed: u64) -> JointRatingPath {
    let mut rng = path_rng(seed, 0, RATING_STREAM);
    JumpSampler::new(g).sample(initial, horizon, &mut rng)
}

/// Rating trigger levels of the counterparty and the investor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriggerLevels {
    pub k1: usize,
    pub k2: usize,
}

impl TriggerLevels {
    /// Requires `1 < K_i ≤ K`.
    pub fn new(scale: RatingScale, k1: usize, k2: usize) -> Result<Self, RatingError> {
        for level in [k1, k2] {
            if level < 2 || level > scale.k() {
                return Err(RatingError::CategoryOutOfRange { category: level, k: scale.k() });
            }
        }
        Ok(Self { k1, k2 })
    }

    /// Triggers at the default level: no rating-trigger clause.
    pub fn at_default(scale: RatingScale) -> Self {
        Self { k1: scale.k(), k2: scale.k() }
    }
}

/// What happened at the first trigger time `τ^R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CloseOutEvent {
    /// `τ^R = τ_1 ≠ τ_2`
    CounterpartyDefault,
    /// `τ^R = τ_2 ≠ τ_1`
    InvestorDefault,
    /// `τ^R = τ_1 = τ_2`
    JointDefault,
    /// `τ^R = τ̂^R`: a downgrade through a trigger level without default.
    Trigger,
}

/// Default and trigger times of one path. Times are `+∞` when the event
/// does not happen by the horizon. Coincidences are decided by jump index,
/// never by comparing times.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingTimes {
    /// `τ_1, τ_2, τ_3`
    pub default_time: [f64; 3],
    /// `τ̂^R_1, τ̂^R_2`
    pub trigger_event_time: [f64; 2],
    /// `τ^R_i = τ̂^R_i ∧ τ_i`
    pub trigger_time: [f64; 2],
    /// `τ = τ_1 ∧ τ_2`
    pub tau: f64,
    /// `τ^R = τ^R_1 ∧ τ^R_2`
    pub tau_r: f64,
    pub event: Option<CloseOutEvent>,
    default_jump: [Option<usize>; 3],
    tau_jump: Option<usize>,
    tau_r_jump: Option<usize>,
}

impl StoppingTimes {
    /// Index of the jump at `τ`.
    pub fn tau_jump(&self) -> Option<usize> {
        self.tau_jump
    }

    /// Index of the jump at `τ^R`.
    pub fn tau_r_jump(&self) -> Option<usize> {
        self.tau_r_jump
    }

    /// Index of the jump at which component `c` defaults.
    pub fn default_jump(&self, c: usize) -> Option<usize> {
        self.default_jump[c]
    }

    /// `τ = τ_c ≤ T` for party `c` (0 = counterparty, 1 = investor).
    pub fn defaults_first(&self, c: usize) -> bool {
        self.default_jump[c].is_some() && self.default_jump[c] == self.tau_jump
    }

    /// `τ^R = τ_c ≤ T`.
    pub fn closes_on_default(&self, c: usize) -> bool {
        self.default_jump[c].is_some() && self.default_jump[c] == self.tau_r_jump
    }

    /// `τ^R < τ = τ_c ≤ T`: party `c` defaults first, after an earlier trigger.
    pub fn trigger_precedes_default(&self, c: usize) -> bool {
        self.defaults_first(c) && self.tau_r_jump < self.tau_jump
    }

    /// `τ^R = τ_1 = τ_2 ≤ T`.
    pub fn joint_close_out(&self) -> bool {
        self.event == Some(CloseOutEvent::JointDefault)
    }

    /// `τ = τ_1 = τ_2 ≤ T`.
    pub fn joint_default(&self) -> bool {
        self.defaults_first(0) && self.defaults_first(1)
    }
}

/// First-passage scan of the jump list.
pub fn extract_stopping_times(path: &JointRatingPath, triggers: TriggerLevels, horizon: f64) -> StoppingTimes {
    stopping_times_from_table(path, &path.category_table(), triggers, horizon)
}

/// As [`extract_stopping_times`], reusing a table from
/// [`JointRatingPath::category_table`].
pub fn stopping_times_from_table(
    path: &JointRatingPath,
    table: &[[usize; 3]],
    triggers: TriggerLevels,
    horizon: f64,
) -> StoppingTimes {
    let k = path.k();
    let n = path.n_components().min(3);
    let levels = [triggers.k1, triggers.k2];
    let mut default_jump = [None; 3];
    let mut trigger_event_jump: [Option<usize>; 2] = [None; 2];

    for (idx, (jump, cats)) in path.jumps.iter().zip(table).enumerate() {
        if jump.time > horizon {
            break;
        }
        for (c, &cat) in cats.iter().enumerate().take(n) {
            if default_jump[c].is_none() && cat == k {
                default_jump[c] = Some(idx);
            }
            if c < 2 && trigger_event_jump[c].is_none() && cat >= levels[c] && cat < k {
                trigger_event_jump[c] = Some(idx);
            }
        }
    }

    let time_of = |j: Option<usize>| j.map_or(f64::INFINITY, |i| path.jumps[i].time);
    let earliest = |a: Option<usize>, b: Option<usize>| match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    };

    let trigger_jump = [
        earliest(trigger_event_jump[0], default_jump[0]),
        earliest(trigger_event_jump[1], default_jump[1]),
    ];
    let tau_jump = earliest(default_jump[0], default_jump[1]);
    let tau_r_jump = earliest(trigger_jump[0], trigger_jump[1]);

    let event = tau_r_jump.map(|j| {
        let d1 = default_jump[0] == Some(j);
        let d2 = default_jump[1] == Some(j);
        match (d1, d2) {
            (true, true) => CloseOutEvent::JointDefault,
            (true, false) => CloseOutEvent::CounterpartyDefault,
            (false, true) => CloseOutEvent::InvestorDefault,
            (false, false) => CloseOutEvent::Trigger,
        }
    });

    StoppingTimes {
        default_time: [time_of(default_jump[0]), time_of(default_jump[1]), time_of(default_jump[2])],
        trigger_event_time: [time_of(trigger_event_jump[0]), time_of(trigger_event_jump[1])],
        trigger_time: [time_of(trigger_jump[0]), time_of(trigger_jump[1])],
        tau: time_of(tau_jump),
        tau_r: time_of(tau_r_jump),
        event,
        default_jump,
        tau_jump,
        tau_r_jump,
    }
}
