//! Vasicek short rate: exact path sampling, bank account, affine bonds,
//! LIBOR fixings and par swap rates.
//!
//! Dynamics are `dr = a(b − r)dt + σ dW` with speed `a` and level `b`.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng::{path_rng, RATE_STREAM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatesError {
    #[error("mean-reversion speed must be positive, got {0}")]
    NonPositiveSpeed(f64),
    #[error("volatility must be non-negative, got {0}")]
    NegativeVolatility(f64),
    #[error("non-finite parameter {0}")]
    NonFinite(&'static str),
    #[error("rate grid must start at 0 and increase strictly")]
    BadGrid,
    #[error("tenor {tenor} and frequency {freq} do not give a whole number of periods")]
    BadSchedule { tenor: f64, freq: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VasicekParams {
    pub r0: f64,
    pub speed: f64,
    pub level: f64,
    pub sigma: f64,
}

impl VasicekParams {
    pub fn new(r0: f64, speed: f64, level: f64, sigma: f64) -> Result<Self, RatesError> {
        for (name, v) in [("r0", r0), ("speed", speed), ("level", level), ("sigma", sigma)] {
            if !v.is_finite() {
                return Err(RatesError::NonFinite(name));
            }
        }
        if speed <= 0.0 {
            return Err(RatesError::NonPositiveSpeed(speed));
        }
        if sigma < 0.0 {
            return Err(RatesError::NegativeVolatility(sigma));
        }
        Ok(Self { r0, speed, level, sigma })
    }

    /// Parameters given in drift form `dr = (θ − α r)dt + σ dW`.
    pub fn from_drift_form(r0: f64, theta: f64, alpha: f64, sigma: f64) -> Result<Self, RatesError> {
        if alpha <= 0.0 {
            return Err(RatesError::NonPositiveSpeed(alpha));
        }
        Self::new(r0, alpha, theta / alpha, sigma)
    }

    pub fn long_run_mean(&self) -> f64 {
        self.level
    }

    /// `E[r_{t+dt} | r_t = r]`
    pub fn conditional_mean(&self, r: f64, dt: f64) -> f64 {
        self.level + (r - self.level) * (-self.speed * dt).exp()
    }

    /// `Var[r_{t+dt} | r_t]`
    pub fn conditional_variance(&self, dt: f64) -> f64 {
        self.sigma * self.sigma * (-(-2.0 * self.speed * dt).exp_m1()) / (2.0 * self.speed)
    }

    /// `B(τ) = (1 − e^{−aτ})/a`
    pub fn b_factor(&self, tau: f64) -> f64 {
        -(-self.speed * tau).exp_m1() / self.speed
    }

    /// `ln A(τ)` in `P(t, t+τ) = A(τ)e^{−B(τ) r_t}`.
    pub fn ln_a_factor(&self, tau: f64) -> f64 {
        let a = self.speed;
        let s2 = self.sigma * self.sigma;
        let b = self.b_factor(tau);
        (self.level - s2 / (2.0 * a * a)) * (b - tau) - s2 * b * b / (4.0 * a)
    }

    /// Zero-coupon bond `P(t, maturity)` given `r_t`.
    pub fn bond_price(&self, r_t: f64, t: f64, maturity: f64) -> f64 {
        let tau = maturity - t;
        if tau <= 0.0 {
            return 1.0;
        }
        (self.ln_a_factor(tau) - self.b_factor(tau) * r_t).exp()
    }

    /// Simple LIBOR for `(t_prev, t_next]` fixed at `t_prev` from `r_{t_prev}`.
    pub fn libor_fixing(&self, r_fix: f64, t_prev: f64, t_next: f64) -> f64 {
        let delta = t_next - t_prev;
        (1.0 / self.bond_price(r_fix, t_prev, t_next) - 1.0) / delta
    }

    /// Annuity `Σ δ_k P(0, T_k)` for a schedule starting at 0.
    pub fn annuity(&self, tenor: f64, freq: f64) -> Result<f64, RatesError> {
        let dates = payment_schedule(tenor, freq)?;
        let mut prev = 0.0;
        let mut sum = 0.0;
        for &d in &dates {
            sum += (d - prev) * self.bond_price(self.r0, 0.0, d);
            prev = d;
        }
        Ok(sum)
    }

    /// Fixed rate making a spot-starting swap worth zero.
    pub fn par_swap_rate(&self, tenor: f64, freq: f64) -> Result<f64, RatesError> {
        let annuity = self.annuity(tenor, freq)?;
        Ok((1.0 - self.bond_price(self.r0, 0.0, tenor)) / annuity)
    }
}

/// Payment dates `k/freq`, `k = 1..=tenor·freq`.
pub fn payment_schedule(tenor: f64, freq: f64) -> Result<Vec<f64>, RatesError> {
    let n = tenor * freq;
    if !(n.is_finite() && n >= 1.0 && (n - n.round()).abs() < 1e-9) {
        return Err(RatesError::BadSchedule { tenor, freq });
    }
    let n = n.round() as usize;
    Ok((1..=n).map(|k| if k == n { tenor } else { k as f64 / freq }).collect())
}

/// Sorted union of `0`, `horizon` and `anchors` inside `(0, horizon)`, refined
/// so that no step exceeds `max_step`.
pub fn build_rate_grid(horizon: f64, anchors: &[f64], max_step: f64) -> Vec<f64> {
    let mut knots: Vec<f64> = anchors.iter().copied().filter(|&t| t > 0.0 && t < horizon).collect();
    knots.push(0.0);
    knots.push(horizon);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut grid = Vec::with_capacity(knots.len() + (horizon / max_step) as usize + 1);
    grid.push(0.0);
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = ((b - a) / max_step).ceil().max(1.0) as usize;
        for j in 1..pieces {
            grid.push(a + (b - a) * j as f64 / pieces as f64);
        }
        grid.push(b);
    }
    grid
}

/// Merges extra times (rating jump times) into a sorted grid.
pub fn merge_times(grid: &[f64], extra: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len() + extra.len());
    let (mut i, mut j) = (0, 0);
    while i < grid.len() || j < extra.len() {
        let next = if j >= extra.len() || (i < grid.len() && grid[i] <= extra[j]) {
            i += 1;
            grid[i - 1]
        } else {
            j += 1;
            extra[j - 1]
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}

/// Short-rate trajectory with bank account on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortRatePath {
    pub grid: Vec<f64>,
    pub r: Vec<f64>,
    pub bank: Vec<f64>,
}

impl ShortRatePath {
    fn locate(&self, t: f64) -> Result<usize, usize> {
        self.grid.binary_search_by(|g| g.total_cmp(&t))
    }

    /// `r_t`: exact on grid points, linear in between.
    pub fn rate_at(&self, t: f64) -> f64 {
        match self.locate(t) {
            Ok(i) => self.r[i],
            Err(0) => self.r[0],
            Err(i) if i >= self.grid.len() => self.r[self.grid.len() - 1],
            Err(i) => {
                let w = (t - self.grid[i - 1]) / (self.grid[i] - self.grid[i - 1]);
                self.r[i - 1] + w * (self.r[i] - self.r[i - 1])
            }
        }
    }

    /// `B_t`: exact on grid points, log-linear in between.
    pub fn bank_at(&self, t: f64) -> f64 {
        match self.locate(t) {
            Ok(i) => self.bank[i],
            Err(0) => self.bank[0],
            Err(i) if i >= self.grid.len() => self.bank[self.grid.len() - 1],
            Err(i) => {
                let w = (t - self.grid[i - 1]) / (self.grid[i] - self.grid[i - 1]);
                (self.bank[i - 1].ln() * (1.0 - w) + self.bank[i].ln() * w).exp()
            }
        }
    }

    pub fn discount(&self, t: f64) -> f64 {
        1.0 / self.bank_at(t)
    }
}

fn check_grid(grid: &[f64]) -> Result<(), RatesError> {
    if grid.first() != Some(&0.0) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RatesError::BadGrid);
    }
    Ok(())
}

/// Exact Ornstein–Uhlenbeck transitions between grid points, trapezoid bank
/// account.
pub fn sample_rate_path<R: Rng + ?Sized>(
    p: &VasicekParams,
    grid: &[f64],
    rng: &mut R,
) -> Result<ShortRatePath, RatesError> {
    check_grid(grid)?;
    let mut r = Vec::with_capacity(grid.len());
    let mut bank = Vec::with_capacity(grid.len());
    r.push(p.r0);
    bank.push(1.0);
    let mut integral = 0.0;
    for w in grid.windows(2) {
        let dt = w[1] - w[0];
        let prev = *r.last().unwrap();
        let z: f64 = rng.sample(StandardNormal);
        let next = p.conditional_mean(prev, dt) + p.conditional_variance(dt).sqrt() * z;
        integral += 0.5 * (prev + next) * dt;
        r.push(next);
        bank.push(integral.exp());
    }
    Ok(ShortRatePath { grid: grid.to_vec(), r, bank })
}

pub fn simulate_rate_path(p: &VasicekParams, grid: &[f64], seed: u64) -> Result<ShortRatePath, RatesError> {
    let mut rng = path_rng(seed, 0, RATE_STREAM);
    sample_rate_path(p, grid, &mut rng)
}
