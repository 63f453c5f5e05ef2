//! The ratio-unbiased estimator tr(R̂²) − p(p−1)/d of tr(R²).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample_stats::{SampleSummary, StatInputs};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub tr_r2_hat: f64,
    /// p(p−1)/d
    pub correction: f64,
    /// tr_r2_hat − correction; may be negative for tiny samples.
    pub estimate: f64,
    pub d: usize,
}

/// d = n − 1 for one sample, n₁ + n₂ − 2 for pooled data.
pub fn ratio_unbiased_tr_r2(summary: &SampleSummary, d: usize) -> Result<TraceEstimate> {
    trace_estimate(summary.p, summary.tr_r2_hat(), d)
}

pub fn ratio_unbiased_from_inputs(inputs: &StatInputs, d: usize) -> Result<TraceEstimate> {
    trace_estimate(inputs.p, inputs.tr_r2_hat, d)
}

fn trace_estimate(p: usize, tr_r2_hat: f64, d: usize) -> Result<TraceEstimate> {
    if d == 0 {
        return Err(Error::domain("correction divisor d must be at least 1"));
    }
    let pf = p as f64;
    let correction = pf * (pf - 1.0) / d as f64;
    Ok(TraceEstimate {
        tr_r2_hat,
        correction,
        estimate: tr_r2_hat - correction,
        d,
    })
}
