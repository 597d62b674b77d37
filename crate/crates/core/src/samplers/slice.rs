use rand::Rng;

use super::SamplerError;
use crate::RandomStream;

/// Univariate slice sampler settings (stepping out, then shrinkage).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceTuning {
    pub width: f64,
    /// Total stepping-out budget, split at random between the two ends.
    pub max_expansions: u32,
    pub max_shrinks: u32,
}

impl Default for SliceTuning {
    fn default() -> Self {
        Self { width: 1.0, max_expansions: 50, max_shrinks: 500 }
    }
}

/// One slice-sampling update of `x0` under the unnormalized log density `log_f`.
pub fn slice_sample<F>(x0: f64, mut log_f: F, tuning: &SliceTuning, rng: &mut RandomStream) -> Result<f64, SamplerError>
where
    F: FnMut(f64) -> f64,
{
    let f0 = log_f(x0);
    if !f0.is_finite() {
        return Err(SamplerError::SliceFailure(format!("log density at the current point is {f0}")));
    }
    let level = f0 + rng.random::<f64>().ln();

    let w = tuning.width;
    let mut left = x0 - w * rng.random::<f64>();
    let mut right = left + w;
    let m = tuning.max_expansions;
    let mut j = (f64::from(m) * rng.random::<f64>()).floor() as u32;
    let mut k = m.saturating_sub(1).saturating_sub(j);
    while j > 0 && log_f(left) > level {
        left -= w;
        j -= 1;
    }
    while k > 0 && log_f(right) > level {
        right += w;
        k -= 1;
    }

    for _ in 0..tuning.max_shrinks {
        let x1 = left + (right - left) * rng.random::<f64>();
        if log_f(x1) > level {
            return Ok(x1);
        }
        if x1 < x0 {
            left = x1;
        } else {
            right = x1;
        }
    }
    Err(SamplerError::SliceFailure(format!(
        "no acceptable point after {} shrinkage steps around {x0}",
        tuning.max_shrinks
    )))
}
