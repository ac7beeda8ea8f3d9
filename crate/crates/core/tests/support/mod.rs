//! Randomized cross-validation between the capacity module and the channel
//! simulator, shared by the integration tests and the acceptance run.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use switchcap::capacity::{capacity_causal, capacity_general_model};
use switchcap::simulator::{empirical_mi, empirical_power, simulate_transcript};
use switchcap::switch_model::feasible_rho_interval;
use switchcap::{joint_from_marginals, ChannelConfig, ChannelModel, GeneralModelStates, McSettings, SwitchJoint};

#[derive(Debug, Clone, Copy)]
pub struct CrossConfig {
    pub joint: SwitchJoint,
    pub power: f64,
    pub tc: usize,
    pub model: ChannelModel,
}

#[derive(Debug, Clone, Copy)]
pub struct CrossOutcome {
    pub config: CrossConfig,
    pub analytic: f64,
    pub simulated: f64,
    pub combined_se: f64,
    pub power_mean: f64,
    pub power_se: f64,
}

impl CrossOutcome {
    pub fn mi_agrees(&self) -> bool {
        (self.analytic - self.simulated).abs() <= 4.0 * self.combined_se
    }

    pub fn power_agrees(&self) -> bool {
        (self.power_mean - self.config.power).abs() <= 4.0 * self.power_se
    }
}

/// Draws `count` configurations: three of every ten use the general model.
pub fn random_configs(count: usize, seed: u64) -> Vec<CrossConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let p_t = rng.random_range(0.1..0.9);
            let p_r = rng.random_range(0.1..0.9);
            let (lo, hi) = feasible_rho_interval(p_t, p_r).unwrap();
            let rho = rng.random_range(lo..=hi);
            let power = 10f64.powf(rng.random_range(0.0..2.0));
            let tc = rng.random_range(1..=3);
            let model = if i % 10 >= 7 {
                let bad = rng.random_range(-10.0..10.0);
                let good = bad + rng.random_range(0.0..15.0);
                ChannelModel::General(GeneralModelStates::from_db(good, bad).unwrap())
            } else {
                ChannelModel::TwoSwitch
            };
            CrossConfig {
                joint: joint_from_marginals(p_t, p_r, rho).unwrap(),
                power,
                tc,
                model,
            }
        })
        .collect()
}

pub fn cross_validate(c: &CrossConfig, blocks: usize, seed: u64) -> CrossOutcome {
    let cfg = ChannelConfig::new(c.power, 1.0, c.tc)
        .unwrap()
        .with_mc(McSettings { samples: 200_000, seed });
    let analytic = match c.model {
        ChannelModel::TwoSwitch => capacity_causal(&c.joint, &cfg).unwrap(),
        ChannelModel::General(states) => capacity_general_model(&c.joint, &cfg, &states).unwrap(),
    };
    let t = simulate_transcript(&c.joint, &cfg, c.model, c.power / c.joint.p_t, blocks, seed ^ 0x5eed).unwrap();
    let sim = empirical_mi(&t, &c.joint).unwrap();
    let power = empirical_power(&t);
    CrossOutcome {
        config: *c,
        analytic: analytic.value,
        simulated: sim.value,
        combined_se: analytic.std_err.hypot(sim.std_err),
        power_mean: power.mean,
        power_se: power.std_err,
    }
}
