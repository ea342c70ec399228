//! Extremum-seeking gradient estimate over one dither period.
//!
//! The estimate `(2 / (δ τ_i)) Σ_{k=t0+1}^{t0+τ_i} f(x + δ d^k) d^k` equals
//! `∇f(x)` up to an `O(δ²)` remainder, and is exact for quadratics.

use nalgebra::DVector;

use crate::dither::DitherConfig;
use crate::error::{Error, Result};
use crate::numerics::CompensatedVec;
use crate::problem::LocalCost;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub value: DVector<f64>,
    pub delta_used: f64,
    pub period_used: u64,
}

pub fn es_gradient(
    cost: &LocalCost,
    x: &DVector<f64>,
    dither: &DitherConfig,
    t0: u64,
) -> Result<GradientEstimate> {
    let n = dither.dim();
    for got in [cost.dim(), x.len()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    let delta = dither.delta();
    let tau = dither.agent_period();
    let mut acc = CompensatedVec::zeros(n);
    let mut d = DVector::zeros(n);
    for k in (t0 + 1)..=(t0 + tau) {
        dither.sample_into(k, d.as_mut_slice());
        let probe = x + &d * delta;
        acc.add_scaled(cost.eval(&probe), &d);
    }
    let value = acc.value() * (2.0 / (delta * tau as f64));
    if !value.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(GradientEstimate {
        value,
        delta_used: delta,
        period_used: tau,
    })
}

/// `‖estimate(δ) − ∇f(x)‖` for each amplitude, keeping the template's
/// frequencies and phases.
pub fn estimate_error_curve(
    cost: &LocalCost,
    x: &DVector<f64>,
    dither_template: &DitherConfig,
    deltas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let exact = cost
        .gradient(x)
        .ok_or(Error::NoAnalyticGradient { index: 0 })?;
    deltas
        .iter()
        .map(|&delta| {
            let dither = dither_template.with_delta(delta)?;
            let est = es_gradient(cost, x, &dither, 0)?;
            Ok((delta, (est.value - &exact).norm()))
        })
        .collect()
}
