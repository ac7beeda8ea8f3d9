//! Direct sampling of the channel and plug-in mutual-information estimates.
//!
//! Transcripts record every switch state, input, noise draw and output, so the
//! channel equation can be re-checked symbol by symbol. [`empirical_mi`]
//! averages exact log-density ratios over the sampled blocks. It is a second,
//! independent route to the integrals computed in [`crate::capacity`].

use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::capacity::{CapacityEstimate, ChannelConfig, GeneralModelStates, Quantity};
use crate::entropy::{BlockComponent, BlockMixture, GaussianMixture, Method};
use crate::error::{Error, Result};
use crate::mc::MeanEstimate;
use crate::seed::stream_rng;
use crate::switch_model::{Switch, SwitchJoint};

/// Which channel equation produced a transcript.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    /// `Y = (X S_T + N) S_R`
    TwoSwitch,
    /// `Y = S_T X + N_s`, with noise variance `P / snr_s` in receiver state `s`
    /// (good state when `s_r = 1`).
    General(GeneralModelStates),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    pub s_t: bool,
    /// Receiver switch, or the good/bad state flag under the general model.
    pub s_r: bool,
    pub x: Vec<f64>,
    pub noise: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub joint: SwitchJoint,
    pub cfg: ChannelConfig,
    pub model: ChannelModel,
    pub input_var: f64,
    pub seed: u64,
    pub blocks: Vec<BlockRecord>,
}

/// Empirical switch statistics of a transcript.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchStats {
    pub p_t: f64,
    pub p_r: f64,
    pub rho: f64,
    /// Frequencies of `(1,1), (1,0), (0,1), (0,0)`.
    pub cells: [f64; 4],
    pub n: usize,
}

fn noise_var(cfg: &ChannelConfig, model: &ChannelModel, s_r: bool) -> f64 {
    match model {
        ChannelModel::TwoSwitch => cfg.noise_var,
        ChannelModel::General(states) => {
            let (good, bad) = states.noise_vars(cfg.power);
            if s_r {
                good
            } else {
                bad
            }
        }
    }
}

/// Output of the channel for one symbol.
pub fn channel_output(model: &ChannelModel, s_t: bool, s_r: bool, x: f64, noise: f64) -> f64 {
    let st = if s_t { 1.0 } else { 0.0 };
    match model {
        ChannelModel::TwoSwitch => {
            if s_r {
                x * st + noise
            } else {
                0.0
            }
        }
        ChannelModel::General(_) => st * x + noise,
    }
}

/// Samples `n_blocks` blocks of `cfg.tc` channel uses. Block `b` draws from
/// stream `b` of `seed`, so the transcript does not depend on thread count.
pub fn simulate_transcript(
    j: &SwitchJoint,
    cfg: &ChannelConfig,
    model: ChannelModel,
    input_var: f64,
    n_blocks: usize,
    seed: u64,
) -> Result<Transcript> {
    if n_blocks == 0 {
        return Err(Error::InvalidArgument("a transcript needs at least one block".into()));
    }
    if !(input_var >= 0.0 && input_var.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "input variance {input_var} must be nonnegative"
        )));
    }
    if matches!(model, ChannelModel::General(_)) && cfg.power <= 0.0 {
        return Err(Error::InvalidArgument("the general model needs positive power".into()));
    }
    let tc = cfg.tc;
    let sd_x = input_var.sqrt();
    let blocks = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let (s_t, s_r) = j.draw(&mut rng);
            let sd_n = noise_var(cfg, &model, s_r).sqrt();
            let mut x = Vec::with_capacity(tc);
            let mut noise = Vec::with_capacity(tc);
            for _ in 0..tc {
                x.push(sd_x * rng.sample::<f64, _>(StandardNormal));
                noise.push(sd_n * rng.sample::<f64, _>(StandardNormal));
            }
            let y = x
                .iter()
                .zip(&noise)
                .map(|(&xi, &ni)| channel_output(&model, s_t, s_r, xi, ni))
                .collect();
            BlockRecord { s_t, s_r, x, noise, y }
        })
        .collect();
    Ok(Transcript {
        joint: *j,
        cfg: *cfg,
        model,
        input_var,
        seed,
        blocks,
    })
}

fn block_stats(values: impl Iterator<Item = f64>) -> MeanEstimate {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for v in values {
        n += 1.0;
        let d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
    MeanEstimate {
        mean,
        std_err: (var / f64::max(n, 1.0)).sqrt(),
        n: n as usize,
    }
}

/// Per-use log-density ratio `[log2 p(y | x) - log2 p(y)] / tc` for a block
/// whose transmitter switch is `Bern(q)` given the receiver's view.
fn block_log_ratio(q: f64, input_var: f64, noise_var: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let tc = x.len();
    if q == 0.0 || input_var == 0.0 {
        return Ok(0.0);
    }
    let marginal = BlockMixture::iid(
        tc,
        &GaussianMixture::pair(q, (0.0, input_var + noise_var), (0.0, noise_var))?,
    )?;
    let conditional = BlockMixture::new(
        tc,
        vec![
            BlockComponent {
                weight: q,
                means: x.to_vec(),
                vars: vec![noise_var; tc],
            },
            BlockComponent {
                weight: 1.0 - q,
                means: vec![0.0; tc],
                vars: vec![noise_var; tc],
            },
        ],
    )?;
    Ok((conditional.log2_density(y) - marginal.log2_density(y)) / tc as f64)
}

/// Plug-in estimate of `I(X; Y, S_R)` per channel use from a transcript
/// generated with a switch-independent input.
pub fn empirical_mi(t: &Transcript, j: &SwitchJoint) -> Result<CapacityEstimate> {
    let cells = |k: &SwitchJoint| [k.p11, k.p10, k.p01, k.p00];
    if cells(&t.joint).iter().zip(cells(j)).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::ModelMismatch(format!(
            "transcript switch law {:?} differs from {:?}",
            cells(&t.joint),
            cells(j)
        )));
    }
    let q_given = |s_r: bool| -> Result<f64> {
        if j.marginal(Switch::Rx, s_r) == 0.0 {
            Ok(0.0)
        } else {
            j.conditional_prob(Switch::Tx, true, Switch::Rx, s_r)
        }
    };
    let (q_on, q_off) = (q_given(true)?, q_given(false)?);
    let terms = t
        .blocks
        .par_iter()
        .map(|b| match t.model {
            ChannelModel::TwoSwitch if !b.s_r => Ok(0.0),
            _ => {
                let q = if b.s_r { q_on } else { q_off };
                block_log_ratio(q, t.input_var, noise_var(&t.cfg, &t.model, b.s_r), &b.x, &b.y)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let est = block_stats(terms.into_iter());
    let quantity = match t.model {
        ChannelModel::TwoSwitch => Quantity::Causal,
        ChannelModel::General(_) => Quantity::General,
    };
    Ok(CapacityEstimate {
        value: est.mean.max(0.0),
        std_err: est.std_err,
        method: Method::MonteCarlo,
        quantity,
        clipped: est.mean < 0.0,
    })
}

/// Empirical `E[|X|^2 S_T]` per channel use with its standard error over blocks.
pub fn empirical_power(t: &Transcript) -> MeanEstimate {
    block_stats(t.blocks.iter().map(|b| {
        if b.s_t {
            b.x.iter().map(|x| x * x).sum::<f64>() / b.x.len() as f64
        } else {
            0.0
        }
    }))
}

/// Frequencies and Pearson correlation of the recorded switch pairs.
pub fn empirical_switch_stats(t: &Transcript) -> SwitchStats {
    let mut counts = [0usize; 4];
    for b in &t.blocks {
        let idx = match (b.s_t, b.s_r) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        counts[idx] += 1;
    }
    let n = t.blocks.len();
    let cells = counts.map(|c| c as f64 / n as f64);
    let p_t = cells[0] + cells[1];
    let p_r = cells[0] + cells[2];
    let spread = (p_t * (1.0 - p_t) * p_r * (1.0 - p_r)).sqrt();
    let rho = if spread > 0.0 {
        (cells[0] - p_t * p_r) / spread
    } else {
        0.0
    };
    SwitchStats {
        p_t,
        p_r,
        rho,
        cells,
        n,
    }
}

/// Writes one CSV line per block: `block_index,s_t,s_r,x_1..x_tc,y_1..y_tc`.
pub fn write_transcript_csv<W: Write>(t: &Transcript, mut out: W) -> io::Result<()> {
    let tc = t.cfg.tc;
    let mut header = vec!["block_index".to_string(), "s_t".into(), "s_r".into()];
    header.extend((1..=tc).map(|i| format!("x_{i}")));
    header.extend((1..=tc).map(|i| format!("y_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for (i, b) in t.blocks.iter().enumerate() {
        write!(out, "{i},{},{}", u8::from(b.s_t), u8::from(b.s_r))?;
        for v in b.x.iter().chain(&b.y) {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
