//! Joint law of the transmitter and receiver switches.
//!
//! The two switches are Bernoulli variables with marginals `p_t = P(S_T = 1)`
//! and `p_r = P(S_R = 1)` coupled through their Pearson correlation `rho`.
//! For fixed marginals the correlation pins down the full 2x2 pmf:
//!
//! ```text
//! p11 = p_t p_r + rho sqrt(p_t (1 - p_t) p_r (1 - p_r))
//! p10 = p_t - p11,  p01 = p_r - p11,  p00 = 1 - p_t - p_r + p11
//! ```
//!
//! Requests outside the feasible correlation interval are rejected rather
//! than clamped.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Slack used when testing the feasibility boundary and the pmf invariants.
const PMF_TOL: f64 = 1e-12;

/// Which side of the link a switch belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Switch {
    Tx,
    Rx,
}

/// Bivariate Bernoulli law of `(S_T, S_R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchJoint {
    pub p_t: f64,
    pub p_r: f64,
    pub rho: f64,
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
    /// Set when either marginal is 0 or 1. The correlation is then reported as 0.
    pub degenerate: bool,
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(Error::InvalidProbability { name, value });
    }
    Ok(())
}

fn is_degenerate(p: f64) -> bool {
    p == 0.0 || p == 1.0
}

fn std_bernoulli(p: f64) -> f64 {
    (p * (1.0 - p)).sqrt()
}

/// Feasible Pearson-correlation interval `[rho_min, rho_max]` for the given marginals.
pub fn feasible_rho_interval(p_t: f64, p_r: f64) -> Result<(f64, f64)> {
    check_probability("p_t", p_t)?;
    check_probability("p_r", p_r)?;
    if is_degenerate(p_t) {
        return Err(Error::DegenerateMarginal(p_t));
    }
    if is_degenerate(p_r) {
        return Err(Error::DegenerateMarginal(p_r));
    }
    let scale = std_bernoulli(p_t) * std_bernoulli(p_r);
    let prod = p_t * p_r;
    let rho_max = (p_t.min(p_r) - prod) / scale;
    let rho_min = ((p_t + p_r - 1.0).max(0.0) - prod) / scale;
    Ok((rho_min.max(-1.0), rho_max.min(1.0)))
}

/// Builds the unique joint pmf with marginals `(p_t, p_r)` and correlation `rho`.
pub fn joint_from_marginals(p_t: f64, p_r: f64, rho: f64) -> Result<SwitchJoint> {
    check_probability("p_t", p_t)?;
    check_probability("p_r", p_r)?;
    if !rho.is_finite() {
        return Err(Error::InvalidArgument(format!("correlation {rho} is not finite")));
    }

    if is_degenerate(p_t) || is_degenerate(p_r) {
        if rho != 0.0 {
            return Err(Error::InfeasibleCorrelation {
                rho,
                p_t,
                p_r,
                min: 0.0,
                max: 0.0,
            });
        }
        return SwitchJoint::from_cells(p_t * p_r, p_t, p_r, 0.0);
    }

    let (min, max) = feasible_rho_interval(p_t, p_r)?;
    if rho < min - PMF_TOL || rho > max + PMF_TOL {
        return Err(Error::InfeasibleCorrelation {
            rho,
            p_t,
            p_r,
            min,
            max,
        });
    }
    let p11 = p_t * p_r + rho * std_bernoulli(p_t) * std_bernoulli(p_r);
    SwitchJoint::from_cells(p11, p_t, p_r, rho)
}

impl SwitchJoint {
    fn from_cells(p11: f64, p_t: f64, p_r: f64, rho: f64) -> Result<Self> {
        // Rounding at the boundary of the feasible interval can leave cells at -1e-17.
        let clip = |v: f64| if v < 0.0 && v > -PMF_TOL { 0.0 } else { v };
        let p11 = clip(p11);
        let p10 = clip(p_t - p11);
        let p01 = clip(p_r - p11);
        let p00 = clip(1.0 - p_t - p_r + p11);
        for (name, v) in [("p11", p11), ("p10", p10), ("p01", p01), ("p00", p00)] {
            check_probability(name, v)?;
        }
        Ok(Self {
            p_t,
            p_r,
            rho,
            p11,
            p10,
            p01,
            p00,
            degenerate: is_degenerate(p_t) || is_degenerate(p_r),
        })
    }

    /// Builds the law directly from its four cells `P(S_T = a, S_R = b)`.
    pub fn from_pmf(p11: f64, p10: f64, p01: f64, p00: f64) -> Result<Self> {
        for (name, v) in [("p11", p11), ("p10", p10), ("p01", p01), ("p00", p00)] {
            check_probability(name, v)?;
        }
        let total = p11 + p10 + p01 + p00;
        if (total - 1.0).abs() > PMF_TOL {
            return Err(Error::InvalidWeights(total));
        }
        let p_t = p11 + p10;
        let p_r = p11 + p01;
        let degenerate = is_degenerate(p_t) || is_degenerate(p_r);
        let rho = if degenerate {
            0.0
        } else {
            (p11 - p_t * p_r) / (std_bernoulli(p_t) * std_bernoulli(p_r))
        };
        Ok(Self {
            p_t,
            p_r,
            rho,
            p11,
            p10,
            p01,
            p00,
            degenerate,
        })
    }

    /// `P(S_T = s_t, S_R = s_r)`.
    pub fn cell(&self, s_t: bool, s_r: bool) -> f64 {
        match (s_t, s_r) {
            (true, true) => self.p11,
            (true, false) => self.p10,
            (false, true) => self.p01,
            (false, false) => self.p00,
        }
    }

    pub fn marginal(&self, switch: Switch, value: bool) -> f64 {
        let p = match switch {
            Switch::Tx => self.p_t,
            Switch::Rx => self.p_r,
        };
        if value {
            p
        } else {
            1.0 - p
        }
    }

    /// `P(target = value | given = given_value)`.
    pub fn conditional_prob(&self, target: Switch, value: bool, given: Switch, given_value: bool) -> Result<f64> {
        let denom = self.marginal(given, given_value);
        if denom <= 0.0 {
            return Err(Error::ConditionOnNullEvent);
        }
        if target == given {
            return Ok(if value == given_value { 1.0 } else { 0.0 });
        }
        let numer = match target {
            Switch::Tx => self.cell(value, given_value),
            Switch::Rx => self.cell(given_value, value),
        };
        Ok((numer / denom).clamp(0.0, 1.0))
    }

    /// Draws one `(s_t, s_r)` pair.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (bool, bool) {
        let u: f64 = rng.random();
        if u < self.p11 {
            (true, true)
        } else if u < self.p11 + self.p10 {
            (true, false)
        } else if u < self.p11 + self.p10 + self.p01 {
            (false, true)
        } else {
            (false, false)
        }
    }

    /// `n` i.i.d. draws, reproducible for a fixed seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<(bool, bool)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

/// Free-function form of [`SwitchJoint::conditional_prob`].
pub fn conditional_prob(j: &SwitchJoint, target: Switch, value: bool, given: Switch, given_value: bool) -> Result<f64> {
    j.conditional_prob(target, value, given, given_value)
}

/// Free-function form of [`SwitchJoint::sample`].
pub fn sample(j: &SwitchJoint, n: usize, seed: u64) -> Vec<(bool, bool)> {
    j.sample(n, seed)
}
