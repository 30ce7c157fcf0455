use nalgebra::{DMatrix, DVector};

use super::combine::{combine, CombiningRule, PerDatasetEstimate, PooledEstimate};
use crate::catdata::CategoricalDataset;
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
pub const SCORE_TOLERANCE: f64 = 1e-8;
/// A coefficient magnitude beyond this is taken as evidence of separation:
/// the likelihood is maximized only in the limit and the fit is flagged.
pub const SEPARATION_BOUND: f64 = 30.0;
const MAX_HALVINGS: usize = 30;

/// A fitted regression on categorical predictors (treatment coding, first
/// level as reference), with large-sample variances from the inverse
/// observed information.
#[derive(Debug, Clone)]
pub struct GlmFit {
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub variances: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest absolute score component at the returned coefficients.
    pub max_score: f64,
    pub separation: bool,
}

struct Design {
    x: DMatrix<f64>,
    /// Response codes per record.
    y: Vec<u16>,
    /// Number of response levels.
    d: usize,
    coef_names: Vec<String>,
    response: String,
}

/// Treatment-coded design matrix: an intercept column, then one indicator
/// per non-reference level of each predictor, in schema level order.
fn build_design(
    data: &CategoricalDataset,
    response: &str,
    predictors: &[String],
) -> Result<Design> {
    let schema = data.schema();
    let resp = schema
        .var_index(response)
        .ok_or_else(|| Error::Config(format!("unknown variable {response}")))?;
    let mut pred_idx = Vec::with_capacity(predictors.len());
    for name in predictors {
        let j = schema
            .var_index(name)
            .ok_or_else(|| Error::Config(format!("unknown variable {name}")))?;
        if j == resp {
            return Err(Error::Config(format!(
                "{response} cannot be both the response and a predictor"
            )));
        }
        if pred_idx.contains(&j) {
            return Err(Error::Config(format!("predictor {name} repeats")));
        }
        pred_idx.push(j);
    }

    let n = data.n_records();
    if n == 0 {
        return Err(Error::Data("cannot fit a regression on zero records".into()));
    }
    let q = 1 + pred_idx.iter().map(|&j| schema.dim(j) - 1).sum::<usize>();
    let mut x = DMatrix::zeros(n, q);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        let mut col = 1;
        for &j in &pred_idx {
            let code = data.get(i, j).ok_or_else(|| {
                Error::Data(format!(
                    "record {i} is missing {}; fit regressions on completed datasets",
                    schema.var_names()[j]
                ))
            })?;
            if code > 0 {
                x[(i, col + usize::from(code) - 1)] = 1.0;
            }
            col += schema.dim(j) - 1;
        }
        y.push(data.get(i, resp).ok_or_else(|| {
            Error::Data(format!(
                "record {i} is missing {response}; fit regressions on completed datasets"
            ))
        })?);
    }

    let mut coef_names = vec!["(Intercept)".to_string()];
    for &j in &pred_idx {
        for level in 1..schema.dim(j) {
            coef_names.push(format!(
                "{}{}",
                schema.var_names()[j],
                schema.level_label(j, level as u16)
            ));
        }
    }
    Ok(Design { x, y, d: schema.dim(resp), coef_names, response: response.to_string() })
}

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// log(1 + exp(eta)) without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn logistic_ll(x: &DMatrix<f64>, y01: &[f64], beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    y01.iter()
        .zip(eta.iter())
        .map(|(&y, &e)| y * e - softplus(e))
        .sum()
}

/// Fits a logistic regression of a binary response on categorical predictors
/// by iteratively reweighted least squares, with step halving when a full
/// step lowers the likelihood.
pub fn fit_logistic(
    data: &CategoricalDataset,
    response: &str,
    predictors: &[String],
) -> Result<GlmFit> {
    let design = build_design(data, response, predictors)?;
    if design.d != 2 {
        return Err(Error::Config(format!(
            "logistic regression needs a binary response; {} has {} levels",
            design.response, design.d
        )));
    }
    let x = &design.x;
    let q = x.ncols();
    let y01: Vec<f64> = design.y.iter().map(|&c| f64::from(c)).collect();
    let yv = DVector::from_vec(y01.clone());

    let mut beta = DVector::zeros(q);
    let mut converged = false;
    let mut separation = false;
    let mut iterations = 0;
    let mut max_score = f64::INFINITY;

    for it in 1..=MAX_ITERATIONS {
        iterations = it;
        let eta = x * &beta;
        let mu = eta.map(sigmoid);
        let resid = &yv - &mu;
        let score = x.transpose() * &resid;
        max_score = score.amax();
        if max_score < SCORE_TOLERANCE {
            converged = true;
            iterations = it - 1;
            break;
        }
        let mut xw = x.clone();
        for i in 0..x.nrows() {
            let w = mu[i] * (1.0 - mu[i]);
            xw.row_mut(i).scale_mut(w);
        }
        let info = x.transpose() * xw;
        let chol = info.cholesky().ok_or_else(|| {
            Error::Data(
                "the information matrix is singular; a predictor level may be empty \
                 or the fit separated"
                    .into(),
            )
        })?;
        let delta = chol.solve(&score);
        let ll_old = logistic_ll(x, &y01, &beta);
        // Near the optimum the likelihood change sits below f64 resolution;
        // halving must tolerate that noise or the step shrinks to nothing.
        let noise = 1e-10 * (ll_old.abs() + 1.0);
        let mut step = 1.0;
        let mut candidate = &beta + &delta;
        for _ in 0..MAX_HALVINGS {
            if logistic_ll(x, &y01, &candidate) >= ll_old - noise {
                break;
            }
            step *= 0.5;
            candidate = &beta + &delta * step;
        }
        beta = candidate;
        if beta.amax() > SEPARATION_BOUND {
            separation = true;
            break;
        }
    }

    if !converged {
        let score = x.transpose() * (&yv - (x * &beta).map(sigmoid));
        max_score = score.amax();
    }

    let mut xw = x.clone();
    for i in 0..x.nrows() {
        let mu = sigmoid((x.row(i) * &beta)[0]);
        xw.row_mut(i).scale_mut(mu * (1.0 - mu));
    }
    let info = x.transpose() * xw;
    let variances = match info.cholesky() {
        Some(chol) => chol.inverse().diagonal().iter().cloned().collect(),
        None => vec![f64::INFINITY; q],
    };

    Ok(GlmFit {
        labels: design.coef_names,
        coefficients: beta.iter().cloned().collect(),
        variances,
        converged,
        iterations,
        max_score,
        separation,
    })
}

/// Per-record class probabilities for a baseline-category model, reference
/// class first. `coefs` is level-major: the block for response level `k`
/// (1-based) occupies `[(k-1) q, k q)`.
fn multinomial_probs(x: &DMatrix<f64>, coefs: &DVector<f64>, d: usize) -> DMatrix<f64> {
    let n = x.nrows();
    let q = x.ncols();
    let mut probs = DMatrix::zeros(n, d);
    let mut eta = vec![0.0; d];
    for i in 0..n {
        eta[0] = 0.0;
        for k in 1..d {
            let mut e = 0.0;
            for c in 0..q {
                e += x[(i, c)] * coefs[(k - 1) * q + c];
            }
            eta[k] = e;
        }
        let m = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for k in 0..d {
            denom += (eta[k] - m).exp();
        }
        for k in 0..d {
            probs[(i, k)] = (eta[k] - m).exp() / denom;
        }
    }
    probs
}

fn multinomial_ll(x: &DMatrix<f64>, y: &[u16], coefs: &DVector<f64>, d: usize) -> f64 {
    let q = x.ncols();
    let mut ll = 0.0;
    let mut eta = vec![0.0; d];
    for (i, &yi) in y.iter().enumerate() {
        eta[0] = 0.0;
        for k in 1..d {
            let mut e = 0.0;
            for c in 0..q {
                e += x[(i, c)] * coefs[(k - 1) * q + c];
            }
            eta[k] = e;
        }
        let m = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + eta.iter().map(|&e| (e - m).exp()).sum::<f64>().ln();
        ll += eta[usize::from(yi)] - lse;
    }
    ll
}

fn multinomial_score(
    x: &DMatrix<f64>,
    y: &[u16],
    probs: &DMatrix<f64>,
    d: usize,
) -> DVector<f64> {
    let n = x.nrows();
    let q = x.ncols();
    let mut score = DVector::zeros((d - 1) * q);
    for i in 0..n {
        for k in 1..d {
            let r = (if usize::from(y[i]) == k { 1.0 } else { 0.0 }) - probs[(i, k)];
            for c in 0..q {
                score[(k - 1) * q + c] += x[(i, c)] * r;
            }
        }
    }
    score
}

fn multinomial_info(x: &DMatrix<f64>, probs: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let n = x.nrows();
    let q = x.ncols();
    let size = (d - 1) * q;
    let mut info = DMatrix::zeros(size, size);
    for k in 1..d {
        for l in k..d {
            let mut block = DMatrix::zeros(q, q);
            for i in 0..n {
                let w = probs[(i, k)] * ((if k == l { 1.0 } else { 0.0 }) - probs[(i, l)]);
                for a in 0..q {
                    let xa = x[(i, a)];
                    if xa == 0.0 {
                        continue;
                    }
                    for b in 0..q {
                        block[(a, b)] += w * xa * x[(i, b)];
                    }
                }
            }
            for a in 0..q {
                for b in 0..q {
                    info[((k - 1) * q + a, (l - 1) * q + b)] = block[(a, b)];
                    if k != l {
                        info[((l - 1) * q + a, (k - 1) * q + b)] = block[(b, a)];
                    }
                }
            }
        }
    }
    info
}

/// Fits a baseline-category multinomial regression by Newton-Raphson with
/// step halving. The reference response level is the schema's first;
/// coefficient labels pair each non-reference level with each design column,
/// level-major.
pub fn fit_multinomial(
    data: &CategoricalDataset,
    response: &str,
    predictors: &[String],
) -> Result<GlmFit> {
    let design = build_design(data, response, predictors)?;
    let d = design.d;
    let x = &design.x;
    let q = x.ncols();
    let size = (d - 1) * q;

    let mut coefs = DVector::zeros(size);
    let mut converged = false;
    let mut separation = false;
    let mut iterations = 0;
    let mut max_score = f64::INFINITY;

    for it in 1..=MAX_ITERATIONS {
        iterations = it;
        let probs = multinomial_probs(x, &coefs, d);
        let score = multinomial_score(x, &design.y, &probs, d);
        max_score = score.amax();
        if max_score < SCORE_TOLERANCE {
            converged = true;
            iterations = it - 1;
            break;
        }
        let info = multinomial_info(x, &probs, d);
        let chol = info.cholesky().ok_or_else(|| {
            Error::Data(
                "the information matrix is singular; a predictor level may be empty \
                 or the fit separated"
                    .into(),
            )
        })?;
        let delta = chol.solve(&score);
        let ll_old = multinomial_ll(x, &design.y, &coefs, d);
        let noise = 1e-10 * (ll_old.abs() + 1.0);
        let mut step = 1.0;
        let mut candidate = &coefs + &delta;
        for _ in 0..MAX_HALVINGS {
            if multinomial_ll(x, &design.y, &candidate, d) >= ll_old - noise {
                break;
            }
            step *= 0.5;
            candidate = &coefs + &delta * step;
        }
        coefs = candidate;
        if coefs.amax() > SEPARATION_BOUND {
            separation = true;
            break;
        }
    }

    if !converged {
        let probs = multinomial_probs(x, &coefs, d);
        max_score = multinomial_score(x, &design.y, &probs, d).amax();
    }

    let probs = multinomial_probs(x, &coefs, d);
    let info = multinomial_info(x, &probs, d);
    let variances = match info.cholesky() {
        Some(chol) => chol.inverse().diagonal().iter().cloned().collect(),
        None => vec![f64::INFINITY; size],
    };

    let schema = data.schema();
    let resp = schema.var_index(response).expect("validated above");
    let mut labels = Vec::with_capacity(size);
    for level in 1..d {
        for name in &design.coef_names {
            labels.push(format!("{} {}", schema.level_label(resp, level as u16), name));
        }
    }

    Ok(GlmFit {
        labels,
        coefficients: coefs.iter().cloned().collect(),
        variances,
        converged,
        iterations,
        max_score,
        separation,
    })
}

/// Pools coefficient estimates across per-dataset fits of the same model.
pub fn pool_fitted_glms(
    fits: &[GlmFit],
    rule: CombiningRule,
    level: f64,
) -> Result<Vec<PooledEstimate>> {
    if fits.len() < 2 {
        return Err(Error::Config(format!(
            "pooling needs at least two fits, got {}",
            fits.len()
        )));
    }
    let labels = &fits[0].labels;
    for (d, fit) in fits.iter().enumerate() {
        if &fit.labels != labels {
            return Err(Error::Config(format!(
                "fit {d} has different coefficients than the first fit"
            )));
        }
        if !fit.converged {
            return Err(Error::Data(format!(
                "fit {d} did not converge (largest score component {:.3e}); \
                 pooled results would be unreliable",
                fit.max_score
            )));
        }
    }
    labels
        .iter()
        .enumerate()
        .map(|(c, label)| {
            let estimates: Vec<PerDatasetEstimate> = fits
                .iter()
                .map(|fit| PerDatasetEstimate {
                    label: label.clone(),
                    estimate: fit.coefficients[c],
                    variance: fit.variances[c],
                })
                .collect();
            combine(&estimates, rule, level)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catdata::{Schema, Variable};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn schema_yx() -> Arc<Schema> {
        Arc::new(
            Schema::new(vec![
                Variable { name: "Y".into(), levels: vec!["no".into(), "yes".into()] },
                Variable { name: "X".into(), levels: vec!["x0".into(), "x1".into()] },
            ])
            .unwrap(),
        )
    }

    fn dataset(schema: &Arc<Schema>, rows: &[(u16, u16)]) -> CategoricalDataset {
        let cells: Vec<u16> = rows.iter().flat_map(|&(y, x)| [y, x]).collect();
        CategoricalDataset::from_complete(Arc::clone(schema), &cells).unwrap()
    }

    fn counts_to_rows(counts: &[((u16, u16), usize)]) -> Vec<(u16, u16)> {
        counts
            .iter()
            .flat_map(|&((y, x), c)| std::iter::repeat((y, x)).take(c))
            .collect()
    }

    #[test]
    fn intercept_only_logistic_matches_log_odds() {
        let schema = schema_yx();
        let rows = counts_to_rows(&[((1, 0), 30), ((0, 0), 70)]);
        let data = dataset(&schema, &rows);
        let fit = fit_logistic(&data, "Y", &[]).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.labels, vec!["(Intercept)"]);
        assert_abs_diff_eq!(fit.coefficients[0], (30.0f64 / 70.0).ln(), epsilon = 1e-6);
        // Variance of a log odds: 1/a + 1/b.
        assert_abs_diff_eq!(fit.variances[0], 1.0 / 30.0 + 1.0 / 70.0, epsilon = 1e-6);
        assert!(fit.max_score < 1e-6);
    }

    #[test]
    fn two_by_two_logistic_matches_log_odds_ratio() {
        let schema = schema_yx();
        let rows = counts_to_rows(&[
            ((1, 0), 20),
            ((0, 0), 30),
            ((1, 1), 35),
            ((0, 1), 15),
        ]);
        let data = dataset(&schema, &rows);
        let fit = fit_logistic(&data, "Y", &["X".into()]).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.labels, vec!["(Intercept)", "Xx1"]);
        assert_abs_diff_eq!(fit.coefficients[0], (20.0f64 / 30.0).ln(), epsilon = 1e-6);
        let or: f64 = (35.0 * 30.0) / (15.0 * 20.0);
        assert_abs_diff_eq!(fit.coefficients[1], or.ln(), epsilon = 1e-6);
        assert_abs_diff_eq!(
            fit.variances[1],
            1.0 / 20.0 + 1.0 / 30.0 + 1.0 / 35.0 + 1.0 / 15.0,
            epsilon = 1e-6
        );
    }

    #[test]
    fn separation_is_flagged() {
        let schema = schema_yx();
        let rows = counts_to_rows(&[((0, 0), 25), ((1, 1), 25)]);
        let data = dataset(&schema, &rows);
        let fit = fit_logistic(&data, "Y", &["X".into()]).unwrap();
        assert!(fit.separation);
        assert!(!fit.converged);
    }

    #[test]
    fn intercept_only_multinomial_matches_log_ratios() {
        let schema = Arc::new(
            Schema::new(vec![Variable {
                name: "R".into(),
                levels: vec!["a".into(), "b".into(), "c".into()],
            }])
            .unwrap(),
        );
        let mut cells = Vec::new();
        cells.extend(std::iter::repeat(0u16).take(20));
        cells.extend(std::iter::repeat(1u16).take(30));
        cells.extend(std::iter::repeat(2u16).take(50));
        let data = CategoricalDataset::from_complete(Arc::clone(&schema), &cells).unwrap();
        let fit = fit_multinomial(&data, "R", &[]).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.labels, vec!["b (Intercept)", "c (Intercept)"]);
        assert_abs_diff_eq!(fit.coefficients[0], (30.0f64 / 20.0).ln(), epsilon = 1e-6);
        assert_abs_diff_eq!(fit.coefficients[1], (50.0f64 / 20.0).ln(), epsilon = 1e-6);
        assert_abs_diff_eq!(fit.variances[0], 1.0 / 30.0 + 1.0 / 20.0, epsilon = 1e-6);
    }

    #[test]
    fn binary_multinomial_collapses_to_logistic() {
        let schema = schema_yx();
        let rows = counts_to_rows(&[
            ((1, 0), 22),
            ((0, 0), 28),
            ((1, 1), 31),
            ((0, 1), 19),
        ]);
        let data = dataset(&schema, &rows);
        let logistic = fit_logistic(&data, "Y", &["X".into()]).unwrap();
        let multi = fit_multinomial(&data, "Y", &["X".into()]).unwrap();
        assert!(multi.converged);
        assert_eq!(multi.labels, vec!["yes (Intercept)", "yes Xx1"]);
        for c in 0..2 {
            assert_abs_diff_eq!(
                multi.coefficients[c],
                logistic.coefficients[c],
                epsilon = 1e-8
            );
            assert_abs_diff_eq!(multi.variances[c], logistic.variances[c], epsilon = 1e-8);
        }
    }

    #[test]
    fn multinomial_score_matches_finite_differences() {
        let schema = Arc::new(
            Schema::new(vec![
                Variable {
                    name: "R".into(),
                    levels: vec!["a".into(), "b".into(), "c".into()],
                },
                Variable { name: "X".into(), levels: vec!["x0".into(), "x1".into()] },
            ])
            .unwrap(),
        );
        let cells: Vec<u16> = vec![
            0, 0, 1, 0, 2, 0, 0, 1, 1, 1, 2, 1, 1, 1, 2, 0, 0, 0, 1, 0,
        ];
        let data = CategoricalDataset::from_complete(Arc::clone(&schema), &cells).unwrap();
        let design = build_design(&data, "R", &["X".into()]).unwrap();
        let coefs = DVector::from_vec(vec![0.3, -0.2, 0.1, 0.4]);
        let probs = multinomial_probs(&design.x, &coefs, 3);
        let score = multinomial_score(&design.x, &design.y, &probs, 3);
        let h = 1e-6;
        for c in 0..4 {
            let mut up = coefs.clone();
            up[c] += h;
            let mut down = coefs.clone();
            down[c] -= h;
            let fd = (multinomial_ll(&design.x, &design.y, &up, 3)
                - multinomial_ll(&design.x, &design.y, &down, 3))
                / (2.0 * h);
            assert_abs_diff_eq!(score[c], fd, epsilon = 1e-5);
        }
    }

    #[test]
    fn design_errors_are_specific() {
        let schema = schema_yx();
        let data = dataset(&schema, &[(0, 0), (1, 1)]);
        assert!(fit_logistic(&data, "Z", &[]).is_err());
        assert!(fit_logistic(&data, "Y", &["Z".into()]).is_err());
        assert!(fit_logistic(&data, "Y", &["Y".into()]).is_err());
        let with_missing = CategoricalDataset::new(
            Arc::clone(&schema),
            vec![Some(0), None, Some(1), Some(1)],
        )
        .unwrap();
        let err = fit_logistic(&with_missing, "Y", &["X".into()]).unwrap_err();
        assert!(err.to_string().contains("missing X"), "{err}");
    }

    #[test]
    fn pooled_fits_line_up_by_coefficient() {
        let schema = schema_yx();
        let d1 = dataset(
            &schema,
            &counts_to_rows(&[((1, 0), 20), ((0, 0), 30), ((1, 1), 35), ((0, 1), 15)]),
        );
        let d2 = dataset(
            &schema,
            &counts_to_rows(&[((1, 0), 22), ((0, 0), 28), ((1, 1), 33), ((0, 1), 17)]),
        );
        let fits = vec![
            fit_logistic(&d1, "Y", &["X".into()]).unwrap(),
            fit_logistic(&d2, "Y", &["X".into()]).unwrap(),
        ];
        let pooled = pool_fitted_glms(&fits, CombiningRule::SynthesisPartial, 0.95).unwrap();
        assert_eq!(pooled.len(), 2);
        assert_eq!(pooled[0].label, "(Intercept)");
        assert_eq!(pooled[1].label, "Xx1");
        let mean = (fits[0].coefficients[1] + fits[1].coefficients[1]) / 2.0;
        assert_abs_diff_eq!(pooled[1].estimate, mean, epsilon = 1e-12);
    }
}
