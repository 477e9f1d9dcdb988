//! Closed form of the advection example started from the indicator of `(0,0)`.
//!
//! Along the row `j = 0` the flow is a pure shift, `x_{i,0}(t) = t^i / i! e^{-t}`:
//! the Poisson distribution with mean `t`, evaluated at `i`.

use crate::error::{Error, Result};

/// Largest index before `i!` overflows a double.
pub const MAX_INDEX: u32 = 170;

fn ln_factorial(i: u32) -> f64 {
    (2..=i).map(|k| (k as f64).ln()).sum()
}

fn check_index(i: u32) -> Result<()> {
    if i > MAX_INDEX {
        return Err(Error::InvalidInput(format!(
            "advection index {i} exceeds {MAX_INDEX}"
        )));
    }
    Ok(())
}

/// `x_{i,0}(t)`, computed in log space.
pub fn advection_oracle(i: u32, t: f64) -> Result<f64> {
    check_index(i)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("time must be nonnegative, got {t}")));
    }
    if i == 0 {
        return Ok((-t).exp());
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok((i as f64 * t.ln() - ln_factorial(i) - t).exp())
}

/// `x_{i,0}(i) = i^i / i! e^{-i}`, the largest value vertex `(i,0)` ever takes.
pub fn advection_peak(i: u32) -> Result<f64> {
    advection_oracle(i, i as f64)
}

/// `e^{-1} i^{-1/2}`, a lower bound for [`advection_peak`] from Stirling's formula.
pub fn stirling_lower_bound(i: u32) -> f64 {
    (-1.0f64).exp() / (i as f64).sqrt()
}
