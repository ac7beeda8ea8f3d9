//! Differential entropy of finite Gaussian mixtures.
//!
//! Scalar mixtures are integrated by adaptive Gauss-Kronrod quadrature over
//! `[min mean - 8 max std, max mean + 8 max std]`; product-form block mixtures
//! are handled by Monte Carlo with a reported standard error. All values are in
//! bits and every density is evaluated in the log domain (log-sum-exp), since
//! well-separated components underflow when summed directly.

use std::cell::RefCell;
use std::f64::consts::{LN_2, LOG2_E, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mc::chunked_mean;
use crate::quadrature::{integrate_with_breakpoints, QuadSettings};

/// Half-width of the integration window, in standard deviations.
pub const WINDOW_STDS: f64 = 8.0;

/// Default Monte Carlo sample count per entropy.
pub const DEFAULT_MC_SAMPLES: usize = 200_000;

/// Minimum Monte Carlo sample count accepted by the block estimator.
pub const MIN_MC_SAMPLES: usize = 1_000;

/// Relative tolerance of the inner quadrature inside conditional-entropy integrals.
pub const INNER_REL_TOL: f64 = 1e-11;

const WEIGHT_TOL: f64 = 1e-12;

/// How a numeric value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Quadrature,
    MonteCarlo,
    ClosedForm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
            Method::ClosedForm => "closed_form",
        }
    }
}

/// An entropy value in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    pub value: f64,
    /// Zero for quadrature.
    pub std_err: f64,
    pub method: Method,
    /// Number of Monte Carlo draws; `None` for quadrature.
    pub n_samples: Option<usize>,
}

impl EntropyEstimate {
    fn quadrature(value: f64) -> Self {
        Self {
            value,
            std_err: 0.0,
            method: Method::Quadrature,
            n_samples: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub var: f64,
}

/// Finite mixture of scalar Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    components: Vec<Component>,
}

fn ln_normal(y: f64, mean: f64, var: f64) -> f64 {
    let d = y - mean;
    -0.5 * d * d / var - 0.5 * (2.0 * PI * var).ln()
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for w in weights {
        if !(0.0..=1.0 + WEIGHT_TOL).contains(&w) || w.is_nan() {
            return Err(Error::InvalidWeights(w));
        }
        total += w;
    }
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidWeights(total));
    }
    Ok(())
}

fn check_variance(var: f64) -> Result<()> {
    if var > 0.0 && var.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveVariance(var))
    }
}

impl GaussianMixture {
    /// Validates the components and drops zero-weight ones.
    pub fn new(components: Vec<Component>) -> Result<Self> {
        check_weights(components.iter().map(|c| c.weight))?;
        for c in &components {
            check_variance(c.var)?;
            if !c.mean.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "component mean {} is not finite",
                    c.mean
                )));
            }
        }
        let components: Vec<_> = components.into_iter().filter(|c| c.weight > 0.0).collect();
        Ok(Self { components })
    }

    /// Builds a mixture from `(weight, mean, variance)` triples.
    pub fn from_triples(triples: &[(f64, f64, f64)]) -> Result<Self> {
        Self::new(
            triples
                .iter()
                .map(|&(weight, mean, var)| Component { weight, mean, var })
                .collect(),
        )
    }

    pub fn gaussian(mean: f64, var: f64) -> Result<Self> {
        Self::from_triples(&[(1.0, mean, var)])
    }

    /// Two-component mixture `w N(m1, v1) + (1 - w) N(m2, v2)`.
    pub fn pair(w: f64, first: (f64, f64), second: (f64, f64)) -> Result<Self> {
        Self::from_triples(&[(w, first.0, first.1), (1.0 - w, second.0, second.1)])
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Natural-log density.
    pub fn ln_density(&self, y: f64) -> f64 {
        log_sum_exp(
            self.components
                .iter()
                .map(move |c| c.weight.ln() + ln_normal(y, c.mean, c.var)),
        )
    }

    pub fn log2_density(&self, y: f64) -> f64 {
        self.ln_density(y) * LOG2_E
    }

    pub fn density(&self, y: f64) -> f64 {
        self.ln_density(y).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.last().expect("mixture is nonempty");
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                chosen = c;
                break;
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        chosen.mean + chosen.var.sqrt() * z
    }

    /// Integration window `[min mean - 8 max std, max mean + 8 max std]`.
    pub fn window(&self) -> (f64, f64) {
        let max_std = self.components.iter().map(|c| c.var.sqrt()).fold(0.0, f64::max);
        let lo = self.components.iter().map(|c| c.mean).fold(f64::INFINITY, f64::min);
        let hi = self.components.iter().map(|c| c.mean).fold(f64::NEG_INFINITY, f64::max);
        (lo - WINDOW_STDS * max_std, hi + WINDOW_STDS * max_std)
    }

    /// Points where a narrow component could hide from a coarse rule.
    pub fn breakpoints(&self) -> Vec<f64> {
        const OFFSETS: [f64; 9] = [-10.0, -6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 10.0];
        self.components
            .iter()
            .flat_map(|c| {
                let s = c.var.sqrt();
                OFFSETS.iter().map(move |k| c.mean + k * s)
            })
            .collect()
    }

    /// Same mixture with every mean shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| Component {
                    mean: c.mean + delta,
                    ..*c
                })
                .collect(),
        }
    }

    /// Law of `a Y` for `Y` distributed as `self`.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        Self::new(
            self.components
                .iter()
                .map(|c| Component {
                    weight: c.weight,
                    mean: a * c.mean,
                    var: a * a * c.var,
                })
                .collect(),
        )
    }

    /// Shannon entropy of the weight vector, in bits.
    pub fn weight_entropy(&self) -> f64 {
        self.components.iter().map(|c| -c.weight * c.weight.log2()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockComponent {
    pub weight: f64,
    pub means: Vec<f64>,
    pub vars: Vec<f64>,
}

/// Mixture of product-form Gaussians on `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMixture {
    dim: usize,
    components: Vec<BlockComponent>,
}

impl BlockMixture {
    pub fn new(dim: usize, components: Vec<BlockComponent>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("block dimension must be at least 1".into()));
        }
        check_weights(components.iter().map(|c| c.weight))?;
        for c in &components {
            if c.means.len() != dim || c.vars.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "block component has {} means and {} variances, expected {dim}",
                    c.means.len(),
                    c.vars.len()
                )));
            }
            for &v in &c.vars {
                check_variance(v)?;
            }
        }
        let components = components.into_iter().filter(|c| c.weight > 0.0).collect();
        Ok(Self { dim, components })
    }

    /// Product of `dim` copies of each scalar component.
    pub fn iid(dim: usize, scalar: &GaussianMixture) -> Result<Self> {
        Self::new(
            dim,
            scalar
                .components()
                .iter()
                .map(|c| BlockComponent {
                    weight: c.weight,
                    means: vec![c.mean; dim],
                    vars: vec![c.var; dim],
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[BlockComponent] {
        &self.components
    }

    pub fn ln_density(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.dim);
        log_sum_exp(self.components.iter().map(move |c| {
            c.weight.ln()
                + y.iter()
                    .zip(c.means.iter().zip(&c.vars))
                    .map(|(&yi, (&m, &v))| ln_normal(yi, m, v))
                    .sum::<f64>()
        }))
    }

    pub fn log2_density(&self, y: &[f64]) -> f64 {
        self.ln_density(y) * LOG2_E
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.last().expect("mixture is nonempty");
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                chosen = c;
                break;
            }
        }
        for (o, (&m, &v)) in out.iter_mut().zip(chosen.means.iter().zip(&chosen.vars)) {
            let z: f64 = rng.sample(StandardNormal);
            *o = m + v.sqrt() * z;
        }
    }
}

/// Anything with a log2-density at a point.
pub trait MixtureDensity {
    type Point: ?Sized;
    fn log2_density_at(&self, point: &Self::Point) -> f64;
}

impl MixtureDensity for GaussianMixture {
    type Point = f64;
    fn log2_density_at(&self, point: &f64) -> f64 {
        self.log2_density(*point)
    }
}

impl MixtureDensity for BlockMixture {
    type Point = [f64];
    fn log2_density_at(&self, point: &[f64]) -> f64 {
        self.log2_density(point)
    }
}

/// log2 of the mixture density at `point`.
pub fn log_density<D: MixtureDensity + ?Sized>(d: &D, point: &D::Point) -> f64 {
    d.log2_density_at(point)
}

/// `1/2 log2(2 pi e var)`.
pub fn gaussian_entropy(var: f64) -> Result<f64> {
    check_variance(var)?;
    Ok(0.5 * (2.0 * PI * std::f64::consts::E * var).log2())
}

fn entropy_integrand(gm: &GaussianMixture, y: f64) -> f64 {
    let lnp = gm.ln_density(y);
    if lnp == f64::NEG_INFINITY {
        return 0.0;
    }
    -lnp.exp() * lnp / LN_2
}

/// `h(gm) = -integral p log2 p` by adaptive quadrature.
pub fn mixture_entropy_quadrature(gm: &GaussianMixture, rel_tol: f64) -> Result<EntropyEstimate> {
    if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
        return Err(Error::InvalidArgument(format!(
            "relative tolerance {rel_tol} outside (0, 1e-2]"
        )));
    }
    if let [only] = gm.components() {
        return Ok(EntropyEstimate::quadrature(gaussian_entropy(only.var)?));
    }
    let (a, b) = gm.window();
    let r = integrate_with_breakpoints(
        |y| entropy_integrand(gm, y),
        a,
        b,
        &gm.breakpoints(),
        QuadSettings::relative(rel_tol),
    )?;
    Ok(EntropyEstimate::quadrature(r.value))
}

/// Monte Carlo estimate of `h(bm)`: the mean of `-log2 p(Y)` over `n` draws.
pub fn mixture_entropy_mc(bm: &BlockMixture, n: usize, seed: u64) -> Result<EntropyEstimate> {
    if n < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo entropy needs at least {MIN_MC_SAMPLES} samples, got {n}"
        )));
    }
    let dim = bm.dim();
    let est = chunked_mean(n, seed, |rng| {
        let mut y = vec![0.0; dim];
        bm.sample_into(rng, &mut y);
        Ok(-bm.log2_density(&y))
    })?;
    Ok(EntropyEstimate {
        value: est.mean,
        std_err: est.std_err,
        method: Method::MonteCarlo,
        n_samples: Some(n),
    })
}

/// `E_{x ~ outer}[h(inner_law(x))]`, Monte Carlo over `x` with quadrature for
/// each inner entropy. The standard error covers the outer sampling only.
pub fn expected_conditional_entropy<F>(
    outer: &GaussianMixture,
    inner_law: F,
    n: usize,
    seed: u64,
) -> Result<EntropyEstimate>
where
    F: Fn(f64) -> Result<GaussianMixture> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let est = chunked_mean(n, seed, |rng| {
        let x = outer.sample(rng);
        Ok(mixture_entropy_quadrature(&inner_law(x)?, INNER_REL_TOL)?.value)
    })?;
    Ok(EntropyEstimate {
        value: est.mean,
        std_err: est.std_err,
        method: Method::MonteCarlo,
        n_samples: Some(n),
    })
}

/// Deterministic counterpart of [`expected_conditional_entropy`]: the outer
/// expectation is itself an adaptive quadrature against the density of `outer`.
pub fn expected_conditional_entropy_quadrature<F>(
    outer: &GaussianMixture,
    inner_law: F,
    rel_tol: f64,
) -> Result<EntropyEstimate>
where
    F: Fn(f64) -> Result<GaussianMixture>,
{
    let failure = RefCell::new(None);
    let integrand = |x: f64| {
        let lnp = outer.ln_density(x);
        if lnp == f64::NEG_INFINITY || failure.borrow().is_some() {
            return 0.0;
        }
        let h = inner_law(x).and_then(|g| mixture_entropy_quadrature(&g, INNER_REL_TOL));
        match h {
            Ok(h) => lnp.exp() * h.value,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let (a, b) = outer.window();
    let r = integrate_with_breakpoints(integrand, a, b, &outer.breakpoints(), QuadSettings::relative(rel_tol));
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(EntropyEstimate::quadrature(r?.value))
}
