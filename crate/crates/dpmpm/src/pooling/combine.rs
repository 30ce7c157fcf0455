use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::{Error, Result};

/// Degrees of freedom above this are treated as infinite: the reference
/// distribution is taken to be normal. Also substituted when the
/// between-dataset variance is exactly zero.
pub const DF_CAP: f64 = 1e9;

/// Degrees of freedom below this are lifted to it so the t quantile stays
/// defined; the synthesis rules can push the nominal value arbitrarily close
/// to zero.
pub const DF_FLOOR: f64 = 1e-6;

/// Which released-data design the variance combination should assume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombiningRule {
    /// Multiply-imputed data: missing cells filled in, observed cells kept.
    Imputation,
    /// Fully synthetic data: every released record is a model draw.
    SynthesisFull,
    /// Partially synthetic data: some columns replaced, the rest kept.
    SynthesisPartial,
}

impl CombiningRule {
    pub fn name(&self) -> &'static str {
        match self {
            CombiningRule::Imputation => "imputation",
            CombiningRule::SynthesisFull => "synthesis_full",
            CombiningRule::SynthesisPartial => "synthesis_partial",
        }
    }
}

/// A scalar estimate from one released dataset: the point estimate and its
/// estimated sampling variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PerDatasetEstimate {
    pub label: String,
    pub estimate: f64,
    pub variance: f64,
}

/// A pooled scalar estimate across released datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledEstimate {
    pub label: String,
    /// Mean of the per-dataset estimates.
    pub estimate: f64,
    /// Total variance under the chosen rule.
    pub variance: f64,
    pub std_error: f64,
    /// estimate / std_error (0 when both are zero, infinite when only the
    /// standard error is).
    pub statistic: f64,
    pub df: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// Within-dataset variance mean.
    pub ubar: f64,
    /// Between-dataset variance of the estimates.
    pub b: f64,
    /// Set when the full-synthesis variance went nonpositive and was lifted
    /// to its floor.
    pub variance_clamped: bool,
}

/// t quantile (normal at capped df).
///
/// Not delegated to the distribution crate's generic `inverse_cdf`: that
/// search stalls outright for df in the hundreds of millions, which the
/// synthesis degrees-of-freedom formulas produce routinely, and it only
/// reaches about 1e-5 accuracy elsewhere. Large df uses the classical
/// series around the normal quantile (error far below 1e-12 once df is 1e5);
/// smaller df bisects the t CDF, which is accurate, to machine precision.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level must be inside (0, 1)");
    assert!(df > 0.0, "degrees of freedom must be positive");
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -t_quantile(1.0 - p, df);
    }
    let z = Normal::standard().inverse_cdf(p);
    if df >= DF_CAP {
        return z;
    }
    if df >= 1e5 {
        let z2 = z * z;
        let g1 = z * (z2 + 1.0) / 4.0;
        let g2 = z * (5.0 * z2 * z2 + 16.0 * z2 + 3.0) / 96.0;
        let g3 = z * (3.0 * z2 * z2 * z2 + 19.0 * z2 * z2 + 17.0 * z2 - 15.0) / 384.0;
        let g4 = z
            * (79.0 * z2.powi(4) + 776.0 * z2.powi(3) + 1482.0 * z2 * z2
                - 1920.0 * z2
                - 945.0)
            / 92160.0;
        return z + g1 / df + g2 / (df * df) + g3 / df.powi(3) + g4 / df.powi(4);
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid t distribution");
    let mut lo = 0.0f64;
    let mut hi = z.max(1.0);
    while dist.cdf(hi) < p {
        hi *= 2.0;
        if hi > 1e154 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Pools one scalar across released datasets under the chosen rule.
///
/// With `qbar` the mean estimate, `b` the between-dataset variance, and
/// `ubar` the mean within-dataset variance, the total variance and degrees
/// of freedom are
///
/// * imputation:        `T = (1 + 1/m) b + ubar`,
///   `df = (m-1) (1 + ubar / ((1+1/m) b))^2`
/// * full synthesis:    `T = (1 + 1/m) b - ubar` (lifted to `ubar/m` when
///   nonpositive), `df = (m-1) (1 - m ubar / ((m+1) b))^2`
/// * partial synthesis: `T = b/m + ubar`,
///   `df = (m-1) (1 + ubar / (b/m))^2`
///
/// Zero between-dataset variance caps the degrees of freedom at [`DF_CAP`],
/// where the interval quantile is effectively normal. Intervals are central
/// 95% by default; pass another `level` to change that.
pub fn combine(
    estimates: &[PerDatasetEstimate],
    rule: CombiningRule,
    level: f64,
) -> Result<PooledEstimate> {
    let m = estimates.len();
    if m < 2 {
        return Err(Error::Config(format!(
            "pooling needs at least two released datasets, got {m}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "interval level must be inside (0, 1), got {level}"
        )));
    }
    let label = estimates[0].label.clone();
    for e in estimates {
        if e.label != label {
            return Err(Error::Config(format!(
                "pooling mixed estimates of '{label}' and '{}'",
                e.label
            )));
        }
        if !e.estimate.is_finite() || !e.variance.is_finite() || e.variance < 0.0 {
            return Err(Error::Data(format!(
                "estimate '{label}' has a non-finite value or a negative variance"
            )));
        }
    }
    let mf = m as f64;
    let qbar = estimates.iter().map(|e| e.estimate).sum::<f64>() / mf;
    let ubar = estimates.iter().map(|e| e.variance).sum::<f64>() / mf;
    let b = estimates
        .iter()
        .map(|e| (e.estimate - qbar).powi(2))
        .sum::<f64>()
        / (mf - 1.0);

    let mut variance_clamped = false;
    let (variance, df) = match rule {
        CombiningRule::Imputation => {
            let t = (1.0 + 1.0 / mf) * b + ubar;
            let df = if b == 0.0 {
                DF_CAP
            } else {
                (mf - 1.0) * (1.0 + ubar / ((1.0 + 1.0 / mf) * b)).powi(2)
            };
            (t, df)
        }
        CombiningRule::SynthesisFull => {
            let raw = (1.0 + 1.0 / mf) * b - ubar;
            let t = if raw <= 0.0 {
                variance_clamped = true;
                raw.max(ubar / mf)
            } else {
                raw
            };
            let df = if b == 0.0 {
                DF_CAP
            } else {
                (mf - 1.0) * (1.0 - mf * ubar / ((mf + 1.0) * b)).powi(2)
            };
            (t, df)
        }
        CombiningRule::SynthesisPartial => {
            let t = b / mf + ubar;
            let df = if b == 0.0 {
                DF_CAP
            } else {
                (mf - 1.0) * (1.0 + ubar / (b / mf)).powi(2)
            };
            (t, df)
        }
    };

    let df = if df.is_finite() { df.clamp(DF_FLOOR, DF_CAP) } else { DF_CAP };
    let std_error = variance.max(0.0).sqrt();
    let statistic = if std_error > 0.0 {
        qbar / std_error
    } else if qbar == 0.0 {
        0.0
    } else {
        qbar.signum() * f64::INFINITY
    };
    let half = t_quantile(0.5 + level / 2.0, df) * std_error;

    Ok(PooledEstimate {
        label,
        estimate: qbar,
        variance,
        std_error,
        statistic,
        df,
        ci_lower: qbar - half,
        ci_upper: qbar + half,
        ubar,
        b,
        variance_clamped,
    })
}
