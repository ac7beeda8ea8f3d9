//! Independent dense-grid oracles. Nothing here calls into the library: each
//! quantity is integrated straight from the channel's densities on uniform
//! grids with the trapezoid rule, which converges very fast for smooth,
//! rapidly decaying integrands.

#![allow(dead_code)]

use std::f64::consts::PI;

/// `m* = I(X; Y)` for `Y = X S + N`, `X ~ N(0, 10 / 0.9)`, `P(S = 1) = 0.9`,
/// `N ~ N(0, 1)`, from the 4000 x 4000 grid oracle below.
pub const MI_MIXTURE_ORACLE: f64 = 1.482_973_392_945;

/// Non-causal rate at `p_t = p_r = 0.9`, `rho = 0.5`, `P = 10`, `alpha = 0.1`
/// from the five-entropy grid oracle below.
pub const NONCAUSAL_RATE_ORACLE: f64 = 1.408_890_017_254;

pub const GRID_POINTS: usize = 4000;

fn normal(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * PI * var).sqrt()
}

fn grid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / (n - 1) as f64;
    let xs = (0..n).map(|i| lo + i as f64 * h).collect();
    let ws = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
    (xs, ws)
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// `-\int p log2 p` of a 1-D density on a grid.
fn entropy_1d(density: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let (xs, ws) = grid(lo, hi, n);
    -xs.iter().zip(&ws).map(|(&x, &w)| w * plogp(density(x))).sum::<f64>()
}

/// Dense 2-D grid evaluation of `I(X; Y)` for the on/off mixture channel.
/// The output density is obtained by summing the grid over `x`, not from its
/// closed form.
pub fn mi_mixture_grid(q: f64, v: f64, noise_var: f64, n: usize) -> f64 {
    let (xs, wx) = grid(-8.0 * v.sqrt(), 8.0 * v.sqrt(), n);
    let y_half = 8.0 * (v + noise_var).sqrt();
    let (ys, wy) = grid(-y_half, y_half, n);
    let px: Vec<f64> = xs.iter().map(|&x| normal(x, v)).collect();
    let off: Vec<f64> = ys.iter().map(|&y| (1.0 - q) * normal(y, noise_var)).collect();

    let mut py = vec![0.0; n];
    for (i, &x) in xs.iter().enumerate() {
        let a = wx[i] * px[i];
        for (k, &y) in ys.iter().enumerate() {
            py[k] += a * (q * normal(y - x, noise_var) + off[k]);
        }
    }
    let mut total = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let mut inner = 0.0;
        for (k, &y) in ys.iter().enumerate() {
            let p = q * normal(y - x, noise_var) + off[k];
            if p > 0.0 && py[k] > 0.0 {
                inner += wy[k] * p * (p / py[k]).log2();
            }
        }
        total += wx[i] * px[i] * inner;
    }
    total
}

/// The five entropies behind the non-causal rate, each from its own grid.
#[derive(Debug, Clone, Copy)]
pub struct NonCausalTerms {
    pub h_x: f64,
    pub h_x_given_sr: f64,
    pub h_x_given_st: f64,
    pub h_y_given_sr_on: f64,
    pub h_y_given_x_sr_on: f64,
    pub p_r: f64,
}

impl NonCausalTerms {
    /// `I(X; S_R) + p_r I(X; Y | S_R = 1) - I(X; S_T)`
    pub fn rate(&self) -> f64 {
        (self.h_x - self.h_x_given_sr) + self.p_r * (self.h_y_given_sr_on - self.h_y_given_x_sr_on)
            - (self.h_x - self.h_x_given_st)
    }
}

/// Switch cells `(p11, p10, p01, p00)` from marginals and correlation.
pub fn cells(p_t: f64, p_r: f64, rho: f64) -> [f64; 4] {
    let p11 = p_t * p_r + rho * (p_t * (1.0 - p_t) * p_r * (1.0 - p_r)).sqrt();
    [p11, p_t - p11, p_r - p11, 1.0 - p_t - p_r + p11]
}

pub fn noncausal_grid(p_t: f64, p_r: f64, rho: f64, power: f64, alpha: f64, n: usize) -> NonCausalTerms {
    let [p11, p10, _, _] = cells(p_t, p_r, rho);
    let var_on = power / p_t;
    let x_half = 8.0 * var_on.max(alpha).sqrt();
    let x_law = |w_on: f64| move |x: f64| w_on * normal(x, var_on) + (1.0 - w_on) * normal(x, alpha);

    let h_x = entropy_1d(x_law(p_t), -x_half, x_half, n);
    let q_on = p11 / p_r;
    let q_off = p10 / (1.0 - p_r);
    let h_x_given_sr =
        p_r * entropy_1d(x_law(q_on), -x_half, x_half, n) + (1.0 - p_r) * entropy_1d(x_law(q_off), -x_half, x_half, n);
    // Given S_T the input is Gaussian; integrate anyway, each on its own range.
    let h_x_given_st = p_t * entropy_1d(|x| normal(x, var_on), -8.0 * var_on.sqrt(), 8.0 * var_on.sqrt(), n)
        + (1.0 - p_t) * entropy_1d(|x| normal(x, alpha), -8.0 * alpha.sqrt(), 8.0 * alpha.sqrt(), n);

    // Given S_R = 1: S_T = 1 w.p. q_on, and Y = X S_T + N.
    let y_half = 8.0 * (var_on + 1.0).sqrt();
    let h_y_given_sr_on = entropy_1d(
        |y| q_on * normal(y, var_on + 1.0) + (1.0 - q_on) * normal(y, 1.0),
        -y_half,
        y_half,
        n,
    );
    let (xs, wx) = grid(-x_half, x_half, n);
    let (ys, wy) = grid(-(x_half + 8.0), x_half + 8.0, n);
    let mut h_y_given_x = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let on = q_on * normal(x, var_on);
        let off = (1.0 - q_on) * normal(x, alpha);
        let px = on + off;
        if px == 0.0 {
            continue;
        }
        let post = on / px;
        let inner: f64 = ys
            .iter()
            .zip(&wy)
            .map(|(&y, &w)| w * plogp(post * normal(y - x, 1.0) + (1.0 - post) * normal(y, 1.0)))
            .sum();
        h_y_given_x -= wx[i] * px * inner;
    }
    NonCausalTerms {
        h_x,
        h_x_given_sr,
        h_x_given_st,
        h_y_given_sr_on,
        h_y_given_x_sr_on: h_y_given_x,
        p_r,
    }
}
