//! Capacity quantities of the two-switch channel `Y = (X S_T + N) S_R`.
//!
//! All values are bits per real channel use. Closed forms carry the factor 1/2
//! of a real scalar Gaussian channel.
//!
//! * [`capacity_causal`]: causal transmitter side information. The input is
//!   independent of `S_T` and its variance is boosted to `P / p_t`.
//! * [`capacity_noncausal_inner`]: non-causal side information, Gaussian
//!   input with variance `P / p_t` when `S_T = 1` and `alpha` when `S_T = 0`,
//!   maximized over `alpha`.
//! * [`capacity_global`], [`capacity_rx_full`], [`capacity_tx_full_causal`],
//!   [`capacity_tx_full_noncausal_inner`]: the outer bounds obtained when one
//!   or both ends learn the other's switch.
//! * [`capacity_general_model`]: `Y = S_T X + sigma(S_R) N`, where the receiver
//!   keeps every output and knows its noise state.
//!
//! Gaussian inputs are not known to be optimal, so every non-closed-form value
//! here is an achievable rate (inner bound) for the channel in question.
//! Coherence times `tc > 1` are handled by Monte Carlo over i.i.d. Gaussian
//! blocks; the non-causal bounds are only defined for `tc = 1`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::entropy::{
    expected_conditional_entropy_quadrature, gaussian_entropy, mixture_entropy_quadrature, BlockComponent,
    BlockMixture, GaussianMixture, Method, DEFAULT_MC_SAMPLES,
};
use crate::error::{Error, Result};
use crate::mc::chunked_mean;
use crate::optimize::{log_grid, maximize_on_log_grid};
use crate::seed;
use crate::switch_model::{Switch, SwitchJoint};

/// Relative tolerance for every scalar mixture entropy.
pub const ENTROPY_REL_TOL: f64 = 1e-10;
/// Relative tolerance of the outer integral in `h(Y | X)`.
pub const OUTER_REL_TOL: f64 = 1e-9;
/// Points in the logarithmic `alpha` scan (the causal point is added on top).
pub const ALPHA_GRID_POINTS: usize = 25;
/// `alpha` scan range, relative to the `S_T = 1` input variance.
pub const ALPHA_GRID_RANGE: (f64, f64) = (1e-4, 10.0);
/// Relative width at which golden-section refinement of `alpha` stops.
pub const ALPHA_REL_TOL: f64 = 1e-3;

/// Degrees-of-freedom convention of the channel. Only real scalar signaling
/// is modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DofConvention {
    #[default]
    Real,
}

/// Sample budget and root seed for Monte Carlo estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            samples: DEFAULT_MC_SAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Average transmit power `E[|X|^2 S_T]`, noise-normalized.
    pub power: f64,
    pub noise_var: f64,
    /// Coherence time in channel uses.
    pub tc: usize,
    pub convention: DofConvention,
    pub mc: McSettings,
}

impl ChannelConfig {
    pub fn new(power: f64, noise_var: f64, tc: usize) -> Result<Self> {
        if !(power >= 0.0 && power.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "power {power} must be finite and nonnegative"
            )));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::NonPositiveVariance(noise_var));
        }
        if tc == 0 {
            return Err(Error::InvalidArgument("coherence time must be at least 1".into()));
        }
        Ok(Self {
            power,
            noise_var,
            tc,
            convention: DofConvention::Real,
            mc: McSettings::default(),
        })
    }

    /// Unit noise, `tc = 1`.
    pub fn with_power(power: f64) -> Result<Self> {
        Self::new(power, 1.0, 1)
    }

    pub fn with_tc(self, tc: usize) -> Result<Self> {
        Self::new(self.power, self.noise_var, tc).map(|c| c.with_mc(self.mc))
    }

    pub fn with_mc(mut self, mc: McSettings) -> Self {
        self.mc = mc;
        self
    }

    fn at_power(&self, power: f64) -> Result<Self> {
        Self::new(power, self.noise_var, self.tc).map(|c| c.with_mc(self.mc))
    }
}

/// Which capacity quantity a value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    Causal,
    NoncausalInner,
    Global,
    RxFull,
    TxFullCausal,
    TxFullNoncausalInner,
    General,
    /// A bare mutual-information evaluation.
    MutualInformation,
}

impl Quantity {
    /// Quantities selectable in sweeps.
    pub const SWEEPABLE: [Quantity; 7] = [
        Quantity::Causal,
        Quantity::NoncausalInner,
        Quantity::Global,
        Quantity::RxFull,
        Quantity::TxFullCausal,
        Quantity::TxFullNoncausalInner,
        Quantity::General,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Causal => "causal",
            Quantity::NoncausalInner => "noncausal_inner",
            Quantity::Global => "global",
            Quantity::RxFull => "rx_full",
            Quantity::TxFullCausal => "tx_full_causal",
            Quantity::TxFullNoncausalInner => "tx_full_noncausal_inner",
            Quantity::General => "general",
            Quantity::MutualInformation => "mi",
        }
    }

    /// Whether the quantity has a value for block lengths `tc > 1`.
    pub fn supports_blocks(self) -> bool {
        !matches!(self, Quantity::NoncausalInner | Quantity::TxFullNoncausalInner)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::SWEEPABLE
            .into_iter()
            .chain([Quantity::MutualInformation])
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown quantity `{s}`")))
    }
}

/// A rate in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityEstimate {
    pub value: f64,
    pub std_err: f64,
    pub method: Method,
    pub quantity: Quantity,
    /// A negative Monte Carlo (or round-off) estimate was raised to zero.
    pub clipped: bool,
}

impl CapacityEstimate {
    fn new(value: f64, std_err: f64, method: Method, quantity: Quantity) -> Self {
        let clipped = value < 0.0;
        Self {
            value: value.max(0.0),
            std_err,
            method,
            quantity,
            clipped,
        }
    }

    fn zero(quantity: Quantity) -> Self {
        Self::new(0.0, 0.0, Method::ClosedForm, quantity)
    }

    fn closed_form(value: f64, quantity: Quantity) -> Self {
        Self::new(value, 0.0, Method::ClosedForm, quantity)
    }

    fn scaled(self, factor: f64, quantity: Quantity) -> Self {
        Self {
            value: self.value * factor,
            std_err: self.std_err * factor,
            quantity,
            ..self
        }
    }
}

/// Input law for the non-causal inner bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonCausalInput {
    /// Variance of `X` given `S_T = 1`.
    pub var_on: f64,
    /// Variance of `X` given `S_T = 0`.
    pub alpha: f64,
}

impl NonCausalInput {
    /// Input meeting the power constraint with equality: `var_on = P / p_t`.
    pub fn for_power(j: &SwitchJoint, cfg: &ChannelConfig, alpha: f64) -> Result<Self> {
        if j.p_t <= 0.0 {
            return Err(Error::ConditionOnNullEvent);
        }
        Ok(Self {
            var_on: cfg.power / j.p_t,
            alpha,
        })
    }
}

/// Receiver SNR levels of the general model; the good state is `S_R = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralModelStates {
    pub snr_good: f64,
    pub snr_bad: f64,
}

impl GeneralModelStates {
    pub fn new(snr_good: f64, snr_bad: f64) -> Result<Self> {
        if !(snr_bad > 0.0 && snr_good >= snr_bad && snr_good.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "general-model SNRs need snr_good >= snr_bad > 0, got {snr_good} and {snr_bad}"
            )));
        }
        Ok(Self { snr_good, snr_bad })
    }

    pub fn from_db(good_db: f64, bad_db: f64) -> Result<Self> {
        Self::new(db_to_linear(good_db), db_to_linear(bad_db))
    }

    /// Noise variances that realize each SNR at transmit power `power`.
    pub fn noise_vars(&self, power: f64) -> (f64, f64) {
        (power / self.snr_good, power / self.snr_bad)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn awgn(snr: f64) -> f64 {
    0.5 * (1.0 + snr).log2()
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value: v })
    }
}

fn entropy(gm: &GaussianMixture) -> Result<f64> {
    Ok(mixture_entropy_quadrature(gm, ENTROPY_REL_TOL)?.value)
}

/// `I(X; Y)` for `Y = X S + N`, `X ~ N(0, v)`, `S ~ Bern(q)` independent of `X`
/// and unknown to the receiver, `N ~ N(0, noise_var)`.
pub fn mi_mixture_channel(q: f64, v: f64, noise_var: f64) -> Result<CapacityEstimate> {
    check_unit("q", q)?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "input variance {v} must be nonnegative"
        )));
    }
    if !(noise_var > 0.0) {
        return Err(Error::NonPositiveVariance(noise_var));
    }
    if q == 0.0 || v == 0.0 {
        return Ok(CapacityEstimate::zero(Quantity::MutualInformation));
    }
    let h_y = entropy(&GaussianMixture::pair(q, (0.0, v + noise_var), (0.0, noise_var))?)?;
    let outer = GaussianMixture::gaussian(0.0, v)?;
    let h_y_x = expected_conditional_entropy_quadrature(
        &outer,
        |x| GaussianMixture::pair(q, (x, noise_var), (0.0, noise_var)),
        OUTER_REL_TOL,
    )?
    .value;
    Ok(CapacityEstimate::new(
        h_y - h_y_x,
        0.0,
        Method::Quadrature,
        Quantity::MutualInformation,
    ))
}

/// Per-use `I(X^tc; Y^tc) / tc` for the same channel with `S` held constant
/// over a block of `tc` uses and `X` i.i.d. `N(0, v)` within the block,
/// estimated as the sample mean of `log2 p(y | x) - log2 p(y)`.
pub fn mi_block_mc(q: f64, v: f64, noise_var: f64, tc: usize, n: usize, seed: u64) -> Result<CapacityEstimate> {
    check_unit("q", q)?;
    if tc == 0 {
        return Err(Error::InvalidArgument("block length must be at least 1".into()));
    }
    if !(noise_var > 0.0) {
        return Err(Error::NonPositiveVariance(noise_var));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    if q == 0.0 || v == 0.0 {
        return Ok(CapacityEstimate::zero(Quantity::MutualInformation));
    }
    let marginal = BlockMixture::iid(tc, &GaussianMixture::pair(q, (0.0, v + noise_var), (0.0, noise_var))?)?;
    let sd_x = v.sqrt();
    let sd_n = noise_var.sqrt();
    let est = chunked_mean(n, seed, |rng| {
        let on = rng.random::<f64>() < q;
        let mut x = vec![0.0; tc];
        let mut y = vec![0.0; tc];
        for i in 0..tc {
            x[i] = sd_x * rng.sample::<f64, _>(StandardNormal);
            let noise = sd_n * rng.sample::<f64, _>(StandardNormal);
            y[i] = if on { x[i] + noise } else { noise };
        }
        let conditional = BlockMixture::new(
            tc,
            vec![
                BlockComponent {
                    weight: q,
                    means: x,
                    vars: vec![noise_var; tc],
                },
                BlockComponent {
                    weight: 1.0 - q,
                    means: vec![0.0; tc],
                    vars: vec![noise_var; tc],
                },
            ],
        )?;
        Ok((conditional.log2_density(&y) - marginal.log2_density(&y)) / tc as f64)
    })?;
    Ok(CapacityEstimate::new(
        est.mean,
        est.std_err,
        Method::MonteCarlo,
        Quantity::MutualInformation,
    ))
}

/// Mutual information per use at block length `tc`: quadrature for `tc = 1`,
/// Monte Carlo otherwise.
fn mi_at_tc(q: f64, v: f64, noise_var: f64, tc: usize, mc: McSettings) -> Result<CapacityEstimate> {
    if tc == 1 {
        mi_mixture_channel(q, v, noise_var)
    } else {
        mi_block_mc(q, v, noise_var, tc, mc.samples, mc.seed)
    }
}

/// Capacity with causal transmitter side information under Gaussian input:
/// `p_r * I(X^tc; Y^tc | S_R = 1) / tc` with `X ~ N(0, P / p_t)`.
pub fn capacity_causal(j: &SwitchJoint, cfg: &ChannelConfig) -> Result<CapacityEstimate> {
    if j.p_t == 0.0 || j.p_r == 0.0 || cfg.power == 0.0 {
        return Ok(CapacityEstimate::zero(Quantity::Causal));
    }
    let q = j.conditional_prob(Switch::Tx, true, Switch::Rx, true)?;
    let v = cfg.power / j.p_t;
    Ok(mi_at_tc(q, v, cfg.noise_var, cfg.tc, cfg.mc)?.scaled(j.p_r, Quantity::Causal))
}

fn require_single_use(cfg: &ChannelConfig) -> Result<()> {
    if cfg.tc != 1 {
        return Err(Error::InvalidArgument(format!(
            "non-causal inner bounds are only defined for tc = 1 (got tc = {})",
            cfg.tc
        )));
    }
    Ok(())
}

/// Posterior `P(S_T = 1 | X = x)` for `X ~ q N(0, var_on) + (1 - q) N(0, alpha)`.
fn posterior_on(q: f64, var_on: f64, alpha: f64, x: f64) -> f64 {
    if q >= 1.0 {
        return 1.0;
    }
    if q <= 0.0 {
        return 0.0;
    }
    let ln_on = q.ln() - 0.5 * x * x / var_on - 0.5 * var_on.ln();
    let ln_off = (1.0 - q).ln() - 0.5 * x * x / alpha - 0.5 * alpha.ln();
    1.0 / (1.0 + (ln_off - ln_on).exp())
}

/// `I(X; Y | S_R = 1)` when `X | S_R = 1 ~ q N(0, var_on) + (1 - q) N(0, alpha)`
/// with `S_T = 1` selecting the `var_on` branch.
fn mi_given_rx_on(q: f64, var_on: f64, alpha: f64, noise_var: f64) -> Result<f64> {
    let h_y = entropy(&GaussianMixture::pair(q, (0.0, var_on + noise_var), (0.0, noise_var))?)?;
    let outer = GaussianMixture::pair(q, (0.0, var_on), (0.0, alpha))?;
    let h_y_x = expected_conditional_entropy_quadrature(
        &outer,
        |x| {
            let w = posterior_on(q, var_on, alpha, x);
            GaussianMixture::pair(w, (x, noise_var), (0.0, noise_var))
        },
        OUTER_REL_TOL,
    )?
    .value;
    Ok(h_y - h_y_x)
}

/// `I(X; S)` for `X | S=1 ~ N(0, var_on)`, `X | S=0 ~ N(0, alpha)`, `P(S=1) = w`.
fn mi_input_state(w: f64, var_on: f64, alpha: f64) -> Result<f64> {
    let h_x = entropy(&GaussianMixture::pair(w, (0.0, var_on), (0.0, alpha))?)?;
    let mut h_x_s = 0.0;
    if w > 0.0 {
        h_x_s += w * gaussian_entropy(var_on)?;
    }
    if w < 1.0 {
        h_x_s += (1.0 - w) * gaussian_entropy(alpha)?;
    }
    Ok(h_x - h_x_s)
}

/// Achievable rate `I(X; Y, S_R) - I(X; S_T)` of the non-causal scheme with
/// the given two-variance input.
pub fn noncausal_rate(j: &SwitchJoint, cfg: &ChannelConfig, inp: &NonCausalInput) -> Result<CapacityEstimate> {
    require_single_use(cfg)?;
    if !(inp.var_on > 0.0) {
        return Err(Error::NonPositiveVariance(inp.var_on));
    }
    if !(inp.alpha > 0.0) {
        return Err(Error::NonPositiveVariance(inp.alpha));
    }
    if (j.p_t * inp.var_on - cfg.power).abs() > 1e-9 * cfg.power.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "input spends p_t * var_on = {} but the power budget is {}",
            j.p_t * inp.var_on,
            cfg.power
        )));
    }
    if j.p_r == 0.0 {
        return Ok(CapacityEstimate::zero(Quantity::NoncausalInner));
    }
    let (var_on, alpha) = (inp.var_on, inp.alpha);

    let i_x_st = mi_input_state(j.p_t, var_on, alpha)?;

    // I(X; S_R) = h(X) - sum_s P(S_R = s) h(X | S_R = s)
    let h_x = entropy(&GaussianMixture::pair(j.p_t, (0.0, var_on), (0.0, alpha))?)?;
    let mut h_x_given_sr = 0.0;
    for s in [true, false] {
        let p_s = j.marginal(Switch::Rx, s);
        if p_s > 0.0 {
            let w = j.conditional_prob(Switch::Tx, true, Switch::Rx, s)?;
            h_x_given_sr += p_s * entropy(&GaussianMixture::pair(w, (0.0, var_on), (0.0, alpha))?)?;
        }
    }
    let i_x_sr = h_x - h_x_given_sr;

    let q = j.conditional_prob(Switch::Tx, true, Switch::Rx, true)?;
    let i_x_y = mi_given_rx_on(q, var_on, alpha, cfg.noise_var)?;

    Ok(CapacityEstimate::new(
        i_x_sr + j.p_r * i_x_y - i_x_st,
        0.0,
        Method::Quadrature,
        Quantity::NoncausalInner,
    ))
}

/// `alpha` candidates for input variance `var_on`: 25 log-spaced points over
/// `[1e-4, 10] * var_on` plus `var_on` itself.
pub fn alpha_grid(var_on: f64) -> Vec<f64> {
    log_grid(
        ALPHA_GRID_RANGE.0 * var_on,
        ALPHA_GRID_RANGE.1 * var_on,
        ALPHA_GRID_POINTS,
        &[var_on],
    )
}

/// Maximizes [`noncausal_rate`] over `alpha`. Returns the maximizer and its rate.
pub fn optimize_alpha(j: &SwitchJoint, cfg: &ChannelConfig) -> Result<(f64, CapacityEstimate)> {
    require_single_use(cfg)?;
    if j.p_t <= 0.0 || cfg.power == 0.0 {
        return Err(Error::InvalidArgument(
            "alpha optimization needs p_t > 0 and positive power".into(),
        ));
    }
    let var_on = cfg.power / j.p_t;
    if j.p_t == 1.0 {
        let inp = NonCausalInput { var_on, alpha: var_on };
        return Ok((var_on, noncausal_rate(j, cfg, &inp)?));
    }
    let best = maximize_on_log_grid(
        |alpha| Ok(noncausal_rate(j, cfg, &NonCausalInput { var_on, alpha })?.value),
        &alpha_grid(var_on),
        ALPHA_REL_TOL,
    )?;
    let rate = noncausal_rate(j, cfg, &NonCausalInput { var_on, alpha: best.x })?;
    Ok((best.x, rate))
}

/// Non-causal inner bound: the optimized two-variance Gaussian scheme.
pub fn capacity_noncausal_inner(j: &SwitchJoint, cfg: &ChannelConfig) -> Result<CapacityEstimate> {
    require_single_use(cfg)?;
    if j.p_t == 0.0 || j.p_r == 0.0 || cfg.power == 0.0 {
        return Ok(CapacityEstimate::zero(Quantity::NoncausalInner));
    }
    Ok(optimize_alpha(j, cfg)?.1)
}

/// Both ends know both switches: `p11 * 1/2 log2(1 + P / (p11 sigma^2))`.
pub fn capacity_global(j: &SwitchJoint, cfg: &ChannelConfig) -> CapacityEstimate {
    if j.p11 == 0.0 || cfg.power == 0.0 {
        return CapacityEstimate::zero(Quantity::Global);
    }
    CapacityEstimate::closed_form(j.p11 * awgn(cfg.power / (j.p11 * cfg.noise_var)), Quantity::Global)
}

/// Receiver knows both switches: `p11 * 1/2 log2(1 + P / (p_t sigma^2))`.
pub fn capacity_rx_full(j: &SwitchJoint, cfg: &ChannelConfig) -> CapacityEstimate {
    if j.p11 == 0.0 || cfg.power == 0.0 {
        return CapacityEstimate::zero(Quantity::RxFull);
    }
    CapacityEstimate::closed_form(j.p11 * awgn(cfg.power / (j.p_t * cfg.noise_var)), Quantity::RxFull)
}

/// Transmitter knows both switches, causally: [`capacity_causal`] at power
/// `P / P(S_R = 1 | S_T = 1)`.
pub fn capacity_tx_full_causal(j: &SwitchJoint, cfg: &ChannelConfig) -> Result<CapacityEstimate> {
    let p_rx_given_tx = j.conditional_prob(Switch::Rx, true, Switch::Tx, true)?;
    if p_rx_given_tx == 0.0 {
        return Err(Error::ConditionOnNullEvent);
    }
    let boosted = cfg.at_power(cfg.power / p_rx_given_tx)?;
    Ok(CapacityEstimate {
        quantity: Quantity::TxFullCausal,
        ..capacity_causal(j, &boosted)?
    })
}

/// Transmitter knows both switches, non-causally. Inner bound with
/// `X = 0` when `S_R = 0`, `X ~ N(0, P / p11)` when both switches are closed
/// and `X ~ N(0, alpha)` when only the receiver's is, optimized over `alpha`.
pub fn capacity_tx_full_noncausal_inner(j: &SwitchJoint, cfg: &ChannelConfig) -> Result<CapacityEstimate> {
    require_single_use(cfg)?;
    if j.p11 == 0.0 || cfg.power == 0.0 {
        return Ok(CapacityEstimate::zero(Quantity::TxFullNoncausalInner));
    }
    let q = j.conditional_prob(Switch::Tx, true, Switch::Rx, true)?;
    let var_on = cfg.power / j.p11;
    let rate = |alpha: f64| -> Result<f64> {
        Ok(j.p_r * (mi_given_rx_on(q, var_on, alpha, cfg.noise_var)? - mi_input_state(q, var_on, alpha)?))
    };
    let value = if q == 1.0 {
        rate(var_on)?
    } else {
        maximize_on_log_grid(rate, &alpha_grid(var_on), ALPHA_REL_TOL)?.value
    };
    Ok(CapacityEstimate::new(
        value,
        0.0,
        Method::Quadrature,
        Quantity::TxFullNoncausalInner,
    ))
}

/// General model `Y = S_T X + sigma(S_R) N` with a good (`S_R = 1`) and a bad
/// receiver state. Noise variances are `P / snr`, so each state's SNR is met
/// by a full-power Gaussian input. The receiver keeps every output.
pub fn capacity_general_model(
    j: &SwitchJoint,
    cfg: &ChannelConfig,
    states: &GeneralModelStates,
) -> Result<CapacityEstimate> {
    if j.p_t == 0.0 || cfg.power == 0.0 {
        return Ok(CapacityEstimate::zero(Quantity::General));
    }
    let v = cfg.power / j.p_t;
    let (var_good, var_bad) = states.noise_vars(cfg.power);
    let mut value = 0.0;
    let mut var = 0.0;
    let mut method = Method::Quadrature;
    for (idx, (good, noise_var)) in [(true, var_good), (false, var_bad)].into_iter().enumerate() {
        let p_state = j.marginal(Switch::Rx, good);
        if p_state == 0.0 {
            continue;
        }
        let q = j.conditional_prob(Switch::Tx, true, Switch::Rx, good)?;
        let mc = McSettings {
            seed: seed::derive(cfg.mc.seed, idx as u64),
            ..cfg.mc
        };
        let mi = mi_at_tc(q, v, noise_var, cfg.tc, mc)?;
        value += p_state * mi.value;
        var += (p_state * mi.std_err).powi(2);
        if mi.method == Method::MonteCarlo {
            method = Method::MonteCarlo;
        }
    }
    Ok(CapacityEstimate::new(value, var.sqrt(), method, Quantity::General))
}

/// Evaluates one sweepable quantity.
pub fn evaluate(
    quantity: Quantity,
    j: &SwitchJoint,
    cfg: &ChannelConfig,
    states: Option<&GeneralModelStates>,
) -> Result<CapacityEstimate> {
    match quantity {
        Quantity::Causal => capacity_causal(j, cfg),
        Quantity::NoncausalInner => capacity_noncausal_inner(j, cfg),
        Quantity::Global => Ok(capacity_global(j, cfg)),
        Quantity::RxFull => Ok(capacity_rx_full(j, cfg)),
        Quantity::TxFullCausal => capacity_tx_full_causal(j, cfg),
        Quantity::TxFullNoncausalInner => capacity_tx_full_noncausal_inner(j, cfg),
        Quantity::General => {
            let states = states
                .ok_or_else(|| Error::InvalidArgument("the general model needs snr_good_db and snr_bad_db".into()))?;
            capacity_general_model(j, cfg, states)
        }
        Quantity::MutualInformation => Err(Error::InvalidArgument("`mi` is not a channel-level quantity".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::switch_model::joint_from_marginals;

    fn light(rho: f64) -> SwitchJoint {
        joint_from_marginals(0.9, 0.9, rho).unwrap()
    }

    fn cfg10() -> ChannelConfig {
        ChannelConfig::with_power(10.0).unwrap()
    }

    #[test]
    fn mi_collapses_to_awgn_when_switch_always_closed() {
        let m = mi_mixture_channel(1.0, 10.0 / 0.9, 1.0).unwrap();
        assert!((m.value - awgn(10.0 / 0.9)).abs() < 1e-9);
        assert_eq!(mi_mixture_channel(0.0, 5.0, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn block_mc_agrees_with_quadrature_at_tc1() {
        let quad = mi_mixture_channel(0.9, 10.0 / 0.9, 1.0).unwrap().value;
        let mc = mi_block_mc(0.9, 10.0 / 0.9, 1.0, 1, 200_000, 17).unwrap();
        assert!((mc.value - quad).abs() < 4.0 * mc.std_err, "{} vs {quad}", mc.value);
    }

    #[test]
    fn block_mc_awgn_for_any_block_length() {
        for tc in [1, 3, 6] {
            let mc = mi_block_mc(1.0, 5.0, 1.0, tc, 100_000, tc as u64).unwrap();
            assert!((mc.value - awgn(5.0)).abs() < 4.0 * mc.std_err.max(1e-12));
        }
    }

    #[test]
    fn longer_blocks_reveal_the_switch() {
        let v = 10.0 / 0.9;
        let one = mi_block_mc(0.9, v, 1.0, 1, 200_000, 5).unwrap();
        let five = mi_block_mc(0.9, v, 1.0, 5, 200_000, 5).unwrap();
        let se = (one.std_err.powi(2) + five.std_err.powi(2)).sqrt();
        assert!(five.value - one.value > 4.0 * se);
    }

    #[test]
    fn causal_full_correlation_closed_form() {
        let c = capacity_causal(&light(1.0), &cfg10()).unwrap();
        assert!((c.value - 0.9 * awgn(10.0 / 0.9)).abs() < 1e-3);
        assert!((c.value - 1.61934).abs() < 1e-3);
    }

    #[test]
    fn zero_power_gives_zero() {
        let cfg = ChannelConfig::with_power(0.0).unwrap();
        let j = light(0.3);
        assert_eq!(capacity_causal(&j, &cfg).unwrap().value, 0.0);
        assert_eq!(capacity_global(&j, &cfg).value, 0.0);
        assert_eq!(capacity_rx_full(&j, &cfg).value, 0.0);
        assert_eq!(capacity_noncausal_inner(&j, &cfg).unwrap().value, 0.0);
        assert_eq!(capacity_tx_full_noncausal_inner(&j, &cfg).unwrap().value, 0.0);
    }

    #[test]
    fn closed_form_outer_bounds() {
        // 0.81 * 1/2 log2(1 + 10/0.81) and 0.81 * 1/2 log2(1 + 10/0.9)
        assert!((capacity_global(&light(0.0), &cfg10()).value - 1.514012).abs() < 1e-5);
        assert!((capacity_rx_full(&light(0.0), &cfg10()).value - 1.457295).abs() < 1e-5);
        let all_on = SwitchJoint::from_pmf(1.0, 0.0, 0.0, 0.0).unwrap();
        assert!((capacity_global(&all_on, &cfg10()).value - 1.72972).abs() < 1e-5);
        let never = SwitchJoint::from_pmf(0.0, 0.5, 0.5, 0.0).unwrap();
        assert_eq!(capacity_rx_full(&never, &cfg10()).value, 0.0);
    }

    #[test]
    fn rx_full_matches_causal_at_full_correlation() {
        let j = light(1.0);
        let diff = capacity_rx_full(&j, &cfg10()).value - capacity_causal(&j, &cfg10()).unwrap().value;
        assert!(diff.abs() < 1e-3);
    }

    #[test]
    fn alpha_at_causal_point_reduces_to_causal() {
        for rho in [0.0, 0.5] {
            let j = light(rho);
            let inp = NonCausalInput::for_power(&j, &cfg10(), 10.0 / 0.9).unwrap();
            let nc = noncausal_rate(&j, &cfg10(), &inp).unwrap().value;
            let c = capacity_causal(&j, &cfg10()).unwrap().value;
            assert!((nc - c).abs() < 1e-6, "{nc} vs {c}");
        }
    }

    #[test]
    fn optimized_alpha_never_loses_to_causal_point() {
        let j = light(0.3);
        let (alpha, best) = optimize_alpha(&j, &cfg10()).unwrap();
        let inp = NonCausalInput::for_power(&j, &cfg10(), 10.0 / 0.9).unwrap();
        let at_causal = noncausal_rate(&j, &cfg10(), &inp).unwrap().value;
        assert!(best.value >= at_causal);
        assert!(alpha > 0.0);
    }

    #[test]
    fn optimized_alpha_below_rx_full_when_receiver_always_on() {
        let j = joint_from_marginals(0.9, 1.0, 0.0).unwrap();
        let (_, best) = optimize_alpha(&j, &cfg10()).unwrap();
        assert!(best.value <= capacity_rx_full(&j, &cfg10()).value + 1e-9);
    }

    #[test]
    fn transmitter_always_on_makes_alpha_irrelevant() {
        let j = joint_from_marginals(1.0, 0.9, 0.0).unwrap();
        for alpha in [0.01, 1.0, 30.0] {
            let inp = NonCausalInput { var_on: 10.0, alpha };
            let nc = noncausal_rate(&j, &cfg10(), &inp).unwrap().value;
            assert!((nc - 0.9 * awgn(10.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn indistinguishable_states_leak_nothing() {
        let j = light(0.5);
        assert!(mi_input_state(0.9, 7.0, 7.0).unwrap().abs() < 1e-9);
        let inp = NonCausalInput::for_power(&j, &cfg10(), 10.0 / 0.9).unwrap();
        let c = capacity_causal(&j, &cfg10()).unwrap().value;
        assert!((noncausal_rate(&j, &cfg10(), &inp).unwrap().value - c).abs() < 1e-6);
    }

    #[test]
    fn noncausal_power_budget_is_enforced() {
        let j = light(0.0);
        let inp = NonCausalInput {
            var_on: 1.0,
            alpha: 1.0,
        };
        assert!(noncausal_rate(&j, &cfg10(), &inp).is_err());
        let blocks = cfg10().with_tc(3).unwrap();
        assert!(capacity_noncausal_inner(&j, &blocks).is_err());
    }

    #[test]
    fn tx_full_causal_boosts_power() {
        let j = light(1.0);
        let a = capacity_tx_full_causal(&j, &cfg10()).unwrap().value;
        let b = capacity_causal(&j, &cfg10()).unwrap().value;
        assert!((a - b).abs() < 1e-12);

        let j = light(0.0);
        let boosted = capacity_causal(&j, &ChannelConfig::with_power(10.0 / 0.9).unwrap()).unwrap();
        let tx = capacity_tx_full_causal(&j, &cfg10()).unwrap();
        assert!((tx.value - boosted.value).abs() < 1e-12);
        assert!(tx.value >= capacity_causal(&j, &cfg10()).unwrap().value);
        assert_eq!(tx.quantity, Quantity::TxFullCausal);
    }

    #[test]
    fn tx_full_causal_needs_overlap() {
        let j = SwitchJoint::from_pmf(0.0, 0.5, 0.5, 0.0).unwrap();
        assert_eq!(capacity_tx_full_causal(&j, &cfg10()), Err(Error::ConditionOnNullEvent));
    }

    #[test]
    fn tx_full_noncausal_collapses_to_global() {
        let j = light(1.0);
        let v = capacity_tx_full_noncausal_inner(&j, &cfg10()).unwrap().value;
        assert!((v - capacity_global(&j, &cfg10()).value).abs() < 1e-8);
    }

    #[test]
    fn tx_full_noncausal_between_causal_and_global() {
        let j = light(0.2);
        let v = capacity_tx_full_noncausal_inner(&j, &cfg10()).unwrap().value;
        assert!(v >= capacity_tx_full_causal(&j, &cfg10()).unwrap().value - 1e-9);
        assert!(v <= capacity_global(&j, &cfg10()).value + 1e-9);
    }

    #[test]
    fn general_model_limits() {
        let j = light(0.5);
        let causal = capacity_causal(&j, &cfg10()).unwrap().value;
        let faint = GeneralModelStates::new(10.0, 1e-6).unwrap();
        let g = capacity_general_model(&j, &cfg10(), &faint).unwrap().value;
        assert!((g - causal).abs() <= 0.02 * causal);

        let indep = light(0.0);
        let same = GeneralModelStates::new(4.0, 4.0).unwrap();
        let g = capacity_general_model(&indep, &cfg10(), &same).unwrap().value;
        let single = mi_mixture_channel(0.9, 10.0 / 0.9, 10.0 / 4.0).unwrap().value;
        assert!((g - single).abs() < 1e-9);

        let zero_db = GeneralModelStates::from_db(10.0, 0.0).unwrap();
        assert!(capacity_general_model(&j, &cfg10(), &zero_db).unwrap().value > causal);
        assert!(GeneralModelStates::new(1.0, 2.0).is_err());
    }

    #[test]
    fn quantity_names_round_trip() {
        for q in Quantity::SWEEPABLE {
            assert_eq!(q.name().parse::<Quantity>().unwrap(), q);
        }
        assert!("bogus".parse::<Quantity>().is_err());
    }
}
