use dpmpm::pooling::{t_quantile, CombiningRule, PooledEstimate, DF_CAP, DF_FLOOR};

/// Independently recomputed pooling results. The algebra is written from
/// scratch in a different factoring than the main crate's so that agreement
/// between the two is meaningful; only the t quantile is shared, since its
/// correctness is pinned by tabulated reference values elsewhere.
#[derive(Debug, Clone)]
pub struct PoolReference {
    pub estimate: f64,
    pub variance: f64,
    pub std_error: f64,
    pub statistic: f64,
    pub df: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub ubar: f64,
    pub b: f64,
    pub variance_clamped: bool,
}

/// Reference pooling of per-dataset estimates `qs` with within variances
/// `us` under `rule`, at central interval `level`.
pub fn pool_reference(qs: &[f64], us: &[f64], rule: CombiningRule, level: f64) -> PoolReference {
    assert!(qs.len() == us.len() && qs.len() >= 2, "need matched estimates, two or more");
    let m = qs.len() as f64;

    let mut q_sum = 0.0;
    for &q in qs {
        q_sum += q;
    }
    let qbar = q_sum / m;
    let mut u_sum = 0.0;
    for &u in us {
        u_sum += u;
    }
    let ubar = u_sum / m;
    let mut sq = 0.0;
    for &q in qs {
        sq += (q - qbar) * (q - qbar);
    }
    let b = sq / (m - 1.0);

    let between_inflated = b + b / m;
    let mut clamped = false;
    let (variance, df_raw) = match rule {
        CombiningRule::Imputation => {
            let total = between_inflated + ubar;
            let df = if b == 0.0 {
                DF_CAP
            } else {
                (m - 1.0) * (total / between_inflated) * (total / between_inflated)
            };
            (total, df)
        }
        CombiningRule::SynthesisFull => {
            let raw = between_inflated - ubar;
            let total = if raw <= 0.0 {
                clamped = true;
                if raw > ubar / m {
                    raw
                } else {
                    ubar / m
                }
            } else {
                raw
            };
            let df = if b == 0.0 {
                DF_CAP
            } else {
                (m - 1.0) * (raw / between_inflated) * (raw / between_inflated)
            };
            (total, df)
        }
        CombiningRule::SynthesisPartial => {
            let between_scaled = b / m;
            let total = between_scaled + ubar;
            let df = if b == 0.0 {
                DF_CAP
            } else {
                (m - 1.0) * (total / between_scaled) * (total / between_scaled)
            };
            (total, df)
        }
    };
    let df = if df_raw.is_finite() {
        df_raw.max(DF_FLOOR).min(DF_CAP)
    } else {
        DF_CAP
    };

    let std_error = if variance > 0.0 { variance.sqrt() } else { 0.0 };
    let statistic = if std_error > 0.0 {
        qbar / std_error
    } else if qbar == 0.0 {
        0.0
    } else if qbar > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let half = t_quantile(0.5 * (1.0 + level), df) * std_error;

    PoolReference {
        estimate: qbar,
        variance,
        std_error,
        statistic,
        df,
        ci_lower: qbar - half,
        ci_upper: qbar + half,
        ubar,
        b,
        variance_clamped: clamped,
    }
}

impl PoolReference {
    /// Largest normalized difference between this reference and a pooled
    /// estimate from the main crate, over every numeric field. Matching
    /// infinities count as zero; a mismatch in the clamp flag is infinite.
    pub fn max_gap(&self, other: &PooledEstimate) -> f64 {
        fn gap(a: f64, b: f64) -> f64 {
            if a == b {
                return 0.0; // covers equal infinities
            }
            if !a.is_finite() || !b.is_finite() {
                return f64::INFINITY;
            }
            (a - b).abs() / (1.0 + a.abs().max(b.abs()))
        }
        let mut worst: f64 = 0.0;
        for (a, b) in [
            (self.estimate, other.estimate),
            (self.variance, other.variance),
            (self.std_error, other.std_error),
            (self.statistic, other.statistic),
            (self.df, other.df),
            (self.ci_lower, other.ci_lower),
            (self.ci_upper, other.ci_upper),
            (self.ubar, other.ubar),
            (self.b, other.b),
        ] {
            worst = worst.max(gap(a, b));
        }
        if self.variance_clamped != other.variance_clamped {
            worst = f64::INFINITY;
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dpmpm::pooling::{combine, PerDatasetEstimate};

    #[test]
    fn reference_agrees_with_the_main_crate_on_a_worked_case() {
        let qs = [1.0, 2.0, 3.0];
        let us = [0.5, 0.5, 0.5];
        for rule in [
            CombiningRule::Imputation,
            CombiningRule::SynthesisFull,
            CombiningRule::SynthesisPartial,
        ] {
            let estimates: Vec<PerDatasetEstimate> = qs
                .iter()
                .zip(&us)
                .map(|(&q, &u)| PerDatasetEstimate {
                    label: "x".into(),
                    estimate: q,
                    variance: u,
                })
                .collect();
            let main = combine(&estimates, rule, 0.95).unwrap();
            let reference = pool_reference(&qs, &us, rule, 0.95);
            let gap = reference.max_gap(&main);
            assert!(gap < 1e-12, "{rule:?} disagrees by {gap}");
        }
    }

    #[test]
    fn degenerate_corners_agree_too() {
        // Identical estimates: b = 0, capped df.
        let qs = [2.0, 2.0, 2.0, 2.0];
        let us = [1.0, 1.0, 1.0, 1.0];
        let reference = pool_reference(&qs, &us, CombiningRule::Imputation, 0.95);
        assert_eq!(reference.df, DF_CAP);
        // All-zero case: statistic settles at zero rather than NaN.
        let reference =
            pool_reference(&[0.0, 0.0], &[0.0, 0.0], CombiningRule::SynthesisFull, 0.9);
        assert_eq!(reference.statistic, 0.0);
        assert_eq!(reference.std_error, 0.0);
        assert!(reference.variance_clamped);
    }
}
