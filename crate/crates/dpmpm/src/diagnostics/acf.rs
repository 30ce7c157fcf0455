use crate::{Error, Result};

/// Sample autocorrelations `values[h]` for lags `0..=max_lag`, normalized so
/// lag 0 is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Acf {
    pub values: Vec<f64>,
    /// The series was constant: all positive lags are reported as 0.
    pub zero_variance: bool,
}

impl Acf {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }
}

/// Default largest lag for a series of length `n`.
pub fn default_max_lag(n: usize) -> usize {
    (n / 2).min(40)
}

/// Sample autocorrelation function with denominator `sum (x_t - mean)^2`.
pub fn acf(series: &[f64], max_lag: Option<usize>) -> Result<Acf> {
    let n = series.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "a series of length {n} is too short for autocorrelations"
        )));
    }
    let max_lag = max_lag.unwrap_or_else(|| default_max_lag(n));
    if max_lag >= n {
        return Err(Error::Config(format!(
            "lag {max_lag} is out of range for a series of length {n}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
    let mut values = vec![0.0; max_lag + 1];
    values[0] = 1.0;
    if denom == 0.0 {
        return Ok(Acf { values, zero_variance: true });
    }
    for (h, value) in values.iter_mut().enumerate().skip(1) {
        let num: f64 = (0..n - h)
            .map(|t| (series[t] - mean) * (series[t + h] - mean))
            .sum();
        *value = num / denom;
    }
    Ok(Acf { values, zero_variance: false })
}

/// `lag,acf` rows for the twin data file next to the plot.
pub fn acf_csv(acf: &Acf) -> String {
    let mut out = String::from("lag,acf\n");
    for (h, r) in acf.values.iter().enumerate() {
        out.push_str(&format!("{h},{r}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_series_is_strongly_negative_at_lag_one() {
        let series: Vec<f64> = (0..100).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a = acf(&series, Some(3)).unwrap();
        assert_eq!(a.values[0], 1.0);
        assert!((a.values[1] - (-0.99)).abs() < 1e-12, "{}", a.values[1]);
        assert!((a.values[2] - 0.98).abs() < 1e-12);
        assert!(!a.zero_variance);
    }

    #[test]
    fn constant_series_flags_zero_variance() {
        let a = acf(&[4.0; 50], Some(5)).unwrap();
        assert!(a.zero_variance);
        assert_eq!(a.values[0], 1.0);
        assert!(a.values[1..].iter().all(|&r| r == 0.0));
    }

    #[test]
    fn default_lag_is_capped() {
        assert_eq!(default_max_lag(1000), 40);
        assert_eq!(default_max_lag(30), 15);
        let series: Vec<f64> = (0..30).map(|t| (t as f64).sin()).collect();
        assert_eq!(acf(&series, None).unwrap().max_lag(), 15);
    }

    #[test]
    fn bad_shapes_error() {
        assert!(acf(&[1.0], None).is_err());
        assert!(acf(&[1.0, 2.0, 3.0], Some(3)).is_err());
    }

    #[test]
    fn csv_twin_lists_every_lag() {
        let series: Vec<f64> = (0..10).map(|t| t as f64).collect();
        let a = acf(&series, Some(2)).unwrap();
        let csv = acf_csv(&a);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "lag,acf");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,1"));
    }
}
