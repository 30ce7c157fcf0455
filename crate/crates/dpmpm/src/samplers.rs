//! Small sampling primitives shared by the Gibbs updates.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::{Error, Result};

/// Draws an index from (possibly unnormalized) nonnegative weights by inverse
/// CDF, scanning in ascending index order so ties and float rounding resolve
/// deterministically.
pub fn categorical(weights: &[f64], rng: &mut impl Rng) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Internal(format!(
            "categorical draw over a weight vector with sum {total}"
        )));
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (idx, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = idx;
            if target <= acc {
                return Ok(idx);
            }
        }
    }
    // Rounding can leave `target` a hair above the final accumulator.
    Ok(last_positive)
}

/// Gamma draw returning both the value and its logarithm.
///
/// For shapes below 1 the value itself can underflow to zero while its log is
/// still perfectly meaningful, so those shapes are drawn through the boosted
/// form: if Z ~ Gamma(shape + 1) and U ~ Uniform, then Z * U^(1/shape) is
/// Gamma(shape), and ln Z + ln(U)/shape evaluates it without leaving log
/// space.
pub fn gamma_with_log(shape: f64, rng: &mut impl Rng) -> Result<(f64, f64)> {
    if shape >= 1.0 {
        let dist = Gamma::new(shape, 1.0)
            .map_err(|e| Error::Internal(format!("gamma({shape}) draw: {e}")))?;
        let y: f64 = dist.sample(rng);
        return Ok((y, y.ln()));
    }
    if !(shape > 0.0) {
        return Err(Error::Internal(format!("gamma draw with nonpositive shape {shape}")));
    }
    let dist = Gamma::new(shape + 1.0, 1.0)
        .map_err(|e| Error::Internal(format!("gamma({shape}) draw: {e}")))?;
    let z: f64 = dist.sample(rng);
    // 1 - U lies in (0, 1], so the log stays finite.
    let u: f64 = rng.random();
    let ln_y = z.ln() + (1.0 - u).ln() / shape;
    Ok((ln_y.exp(), ln_y))
}

/// Beta draw via the two-gamma ratio, returning the value together with
/// ln(1 - value) computed in log space.
///
/// When `b` is far below 1 the draw sits closer to 1 than f64 can resolve,
/// so recovering the complement from the value itself rounds to zero; the
/// ratio construction keeps it exact.
pub fn beta_with_log_complement(a: f64, b: f64, rng: &mut impl Rng) -> Result<(f64, f64)> {
    let (x, _) = gamma_with_log(a, rng)?;
    let (y, ln_y) = gamma_with_log(b, rng)?;
    let total = x + y;
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Internal(format!("beta({a}, {b}) draw normalizer was {total}")));
    }
    Ok((x / total, ln_y - total.ln()))
}

/// Gamma draw parameterized by shape and *rate*.
pub fn gamma(shape: f64, rate: f64, rng: &mut impl Rng) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::Internal(format!(
            "gamma draw with nonpositive rate {rate}"
        )));
    }
    let dist = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::Internal(format!("gamma({shape}, rate {rate}) draw: {e}")))?;
    Ok(dist.sample(rng))
}

/// Fills `out` with one draw from Dirichlet(`concentrations`).
pub fn dirichlet(concentrations: &[f64], out: &mut [f64], rng: &mut impl Rng) -> Result<()> {
    debug_assert_eq!(concentrations.len(), out.len());
    let mut sum = 0.0;
    for (o, &c) in out.iter_mut().zip(concentrations) {
        let g = Gamma::new(c, 1.0)
            .map_err(|e| Error::Internal(format!("dirichlet component with concentration {c}: {e}")))?;
        let x: f64 = g.sample(rng);
        *o = x;
        sum += x;
    }
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::Internal(format!(
            "dirichlet draw normalizer degenerated to {sum}"
        )));
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    Ok(())
}
