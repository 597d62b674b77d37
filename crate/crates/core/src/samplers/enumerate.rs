use crate::distributions::{sample_discrete_logweights, DistributionError, SUPPORT_CEILING};
use crate::RandomStream;

/// Relative mass allowed in the unvisited tail of an open-ended enumeration.
pub(crate) const TAIL_EPS: f64 = 1e-12;

/// Fill `buf` with log-weights on `start, start + 1, ...` by a ratio recurrence.
///
/// `step(k)` is `ln w(k+1) - ln w(k)` and `bound(k)` bounds every ratio
/// `w(j+1) / w(j)` for `j >= k`. With `max_end` the walk stops exactly there.
/// Otherwise it runs at least to `min_end` and then until the geometric bound
/// puts the remaining tail below `TAIL_EPS` of the mass seen so far.
pub(crate) fn walk<S, B>(
    buf: &mut Vec<f64>,
    start: u64,
    first: f64,
    min_end: u64,
    max_end: Option<u64>,
    mut step: S,
    mut bound: B,
) -> Result<(), DistributionError>
where
    S: FnMut(u64) -> f64,
    B: FnMut(u64) -> f64,
{
    buf.clear();
    buf.push(first);
    let ln_eps = TAIL_EPS.ln();
    let mut k = start;
    let mut lw = first;
    let mut max = first;
    let mut scaled: f64 = if first > f64::NEG_INFINITY { 1.0 } else { 0.0 };
    loop {
        // Recurrences keep -inf once reached.
        if lw == f64::NEG_INFINITY && k >= min_end {
            break;
        }
        match max_end {
            Some(hi) if k >= hi => break,
            None if k >= min_end => {
                let q = bound(k);
                if q < 1.0 && lw + (q / (1.0 - q)).ln() < max + scaled.ln() + ln_eps {
                    break;
                }
            }
            _ => {}
        }
        if buf.len() as u64 >= SUPPORT_CEILING {
            return Err(DistributionError::CapCeilingExceeded { ceiling: SUPPORT_CEILING });
        }
        lw += step(k);
        k += 1;
        buf.push(lw);
        if lw > max {
            scaled = scaled * (max - lw).exp() + 1.0;
            max = lw;
        } else if lw > f64::NEG_INFINITY {
            scaled += (lw - max).exp();
        }
    }
    Ok(())
}

/// Draw `start + i` with probability proportional to `exp(buf[i])`.
pub(crate) fn draw(buf: &[f64], start: u64, rng: &mut RandomStream) -> Result<u64, DistributionError> {
    Ok(start + sample_discrete_logweights(buf, rng)? as u64)
}

/// Griddy-Gibbs draw on (0, 1): pick a cell of an evenly spaced grid by its
/// midpoint log density and return that midpoint. Draws stay at least half a
/// cell away from 0 and 1, which keeps count enumerations finite.
pub(crate) fn griddy_unit<F>(buf: &mut Vec<f64>, points: usize, mut log_f: F, rng: &mut RandomStream) -> Result<f64, DistributionError>
where
    F: FnMut(f64) -> f64,
{
    let h = 1.0 / points as f64;
    buf.clear();
    buf.extend((0..points).map(|i| log_f((i as f64 + 0.5) * h)));
    let cell = sample_discrete_logweights(buf, rng)?;
    Ok((cell as f64 + 0.5) * h)
}
