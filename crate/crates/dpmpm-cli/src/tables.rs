use dpmpm::pooling::PooledEstimate;

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Full-precision CSV of pooled rows. `prefix_headers` name the leading
/// label columns; each row carries matching label values.
pub fn pooled_csv(prefix_headers: &[&str], rows: &[(Vec<String>, PooledEstimate)]) -> String {
    let mut out = prefix_headers.join(",");
    out.push_str(",estimate,variance,std_error,statistic,df,ci_lower,ci_upper,ubar,b,variance_clamped\n");
    for (prefix, r) in rows {
        let labels: Vec<String> = prefix.iter().map(|p| csv_field(p)).collect();
        out.push_str(&labels.join(","));
        out.push_str(&format!(
            ",{},{},{},{},{},{},{},{},{},{}\n",
            r.estimate,
            r.variance,
            r.std_error,
            r.statistic,
            r.df,
            r.ci_lower,
            r.ci_upper,
            r.ubar,
            r.b,
            r.variance_clamped
        ));
    }
    out
}

/// Aligned text table of pooled rows, four decimals.
pub fn pooled_text(prefix_headers: &[&str], rows: &[(Vec<String>, PooledEstimate)]) -> String {
    let ncols = prefix_headers.len();
    let mut widths: Vec<usize> = prefix_headers.iter().map(|h| h.len()).collect();
    for (prefix, _) in rows {
        for (w, p) in widths.iter_mut().zip(prefix) {
            *w = (*w).max(p.len());
        }
    }
    let stat_headers = ["estimate", "std.error", "statistic", "df", "ci.lower", "ci.upper"];

    let mut out = String::new();
    for (h, w) in prefix_headers.iter().zip(&widths) {
        out.push_str(&format!("{h:<w$}  "));
    }
    for h in stat_headers {
        out.push_str(&format!("{h:>12}  "));
    }
    out.pop();
    out.pop();
    out.push('\n');

    let mut any_clamped = false;
    for (prefix, r) in rows {
        for c in 0..ncols {
            out.push_str(&format!("{:<w$}  ", prefix[c], w = widths[c]));
        }
        for v in [r.estimate, r.std_error, r.statistic, r.df, r.ci_lower, r.ci_upper] {
            out.push_str(&format!("{v:>12.4}  "));
        }
        out.pop();
        out.pop();
        if r.variance_clamped {
            any_clamped = true;
            out.push_str(" *");
        }
        out.push('\n');
    }
    if any_clamped {
        out.push_str("* variance was nonpositive and was lifted to its floor\n");
    }
    out
}
