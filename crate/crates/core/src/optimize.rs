//! Scalar maximization: log-spaced grid scan followed by golden-section refinement.

use rayon::prelude::*;

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2

/// Location and value of a maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

/// `count` points spaced evenly in log between `lo` and `hi`, plus every
/// point of `extra`, sorted and deduplicated.
pub fn log_grid(lo: f64, hi: f64, count: usize, extra: &[f64]) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[count - 1] = hi;
    grid.extend_from_slice(extra);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo <= hi) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "golden-section bracket [{lo}, {hi}] with tolerance {tol} is invalid"
        )));
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 {
        Maximum { x: x1, value: f1 }
    } else {
        Maximum { x: x2, value: f2 }
    })
}

/// Maximizes `f` over positive `x`: scans `grid` (evaluated in parallel), then
/// refines with golden-section search in `ln x` on the bracket around the best
/// grid point until the bracket's relative width is below `rel_tol`. Never
/// returns less than the best grid value.
pub fn maximize_on_log_grid<F>(f: F, grid: &[f64], rel_tol: f64) -> Result<Maximum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty search grid".into()));
    }
    let values: Vec<f64> = grid.par_iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let (best, _) = values.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
    );
    let grid_best = Maximum {
        x: grid[best],
        value: values[best],
    };
    if grid.len() < 2 {
        return Ok(grid_best);
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let refined = golden_section_max(|t| f(t.exp()), lo.ln(), hi.ln(), rel_tol.ln_1p())?;
    Ok(if refined.value > grid_best.value {
        Maximum {
            x: refined.x.exp(),
            value: refined.value,
        }
    } else {
        grid_best
    })
}
