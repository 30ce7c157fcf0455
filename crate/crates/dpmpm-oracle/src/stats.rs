/// Asymptotic Kolmogorov p-value for a scaled statistic `lambda`:
/// `2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`. Below 1.18 that
/// alternating series converges too slowly, so the equivalent theta-function
/// form `1 - sqrt(2 pi)/lambda * sum_{k odd} exp(-k^2 pi^2 / (8 lambda^2))`
/// takes over; both branches agree to machine precision at the switch.
fn kolmogorov_p(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let scale = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in (1..40).step_by(2) {
            cdf += (-scale * (k as f64) * (k as f64)).exp();
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        p += if k % 2 == 1 { term } else { -term };
    }
    p.clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test of `samples` against the continuous
/// CDF `cdf`. Returns `(statistic, p_value)`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    assert!(!samples.is_empty(), "no samples to test");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i as f64 + 1.0) / n - f).abs());
    }
    (d, ks_p_value(d, sorted.len()))
}

/// P-value for a one-sample KS statistic `d` at sample size `n`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    kolmogorov_p((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}
