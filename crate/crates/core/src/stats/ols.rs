use nalgebra::{DMatrix, DVector};

use super::{wald, DesignMatrix, Diagnostics, FitError, FitResult};

// After scaling columns to unit norm, |R_jj| is the distance of column j from
// the span of the earlier columns.
const RANK_TOL: f64 = 1e-9;

/// Least-squares solution from a Householder QR of the column-scaled design.
pub(crate) struct LeastSquares {
    pub beta: DVector<f64>,
    pub rss: f64,
    /// (XᵀX)⁻¹
    pub xtx_inv: DMatrix<f64>,
}

pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquares, FitError> {
    let (n, p) = x.shape();
    if n <= p {
        return Err(FitError::Underdetermined { rows: n, params: p });
    }
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    if norms.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return Err(FitError::RankDeficient);
    }
    let mut scaled = x.clone();
    for (mut col, s) in scaled.column_iter_mut().zip(&norms) {
        col /= *s;
    }
    let qr = scaled.qr();
    let r = qr.r();
    if r.diagonal().iter().any(|d| d.abs() < RANK_TOL) {
        return Err(FitError::RankDeficient);
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let qty = qty.rows(0, p).into_owned();
    let scaled_beta = r.solve_upper_triangular(&qty).ok_or(FitError::RankDeficient)?;
    let beta = DVector::from_fn(p, |j, _| scaled_beta[j] / norms[j]);
    let resid = y - x * &beta;
    let rss = resid.norm_squared();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(FitError::RankDeficient)?;
    let scaled_inv = &r_inv * r_inv.transpose();
    let xtx_inv = DMatrix::from_fn(p, p, |i, j| scaled_inv[(i, j)] / (norms[i] * norms[j]));
    Ok(LeastSquares { beta, rss, xtx_inv })
}

/// Ordinary least squares with t-test p-values on `n − p` degrees of freedom.
pub fn ols(x: &DesignMatrix, y: &[f64]) -> Result<FitResult, FitError> {
    if y.len() != x.n_rows() {
        return Err(FitError::InvalidInput("response length differs from design rows".into()));
    }
    let (n, p) = (x.n_rows(), x.n_cols());
    let fit = least_squares(&x.to_matrix(), &DVector::from_column_slice(y))?;
    let df = (n - p) as f64;
    let sigma2 = fit.rss / df;
    let coefficients = x
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| wald(name, fit.beta[j], (sigma2 * fit.xtx_inv[(j, j)]).sqrt(), df))
        .collect();
    Ok(FitResult {
        coefficients,
        dropped: Vec::new(),
        variance: None,
        diagnostics: Diagnostics {
            method: "ols".into(),
            n_obs: n,
            n_params: p,
            n_groups: x.n_groups(),
            df,
            rss: fit.rss,
            log_likelihood: None,
            log_ratio: None,
            evaluations: 0,
            boundary: false,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_data() {
        let xs = vec![0.0, 1.0, 2.5, 4.0, 7.0];
        let y: Vec<f64> = xs.iter().map(|x| 2.0 + 3.0 * x).collect();
        let design = DesignMatrix::with_intercept(vec![("x".into(), xs)], vec![0; 5]).unwrap();
        let fit = ols(&design, &y).unwrap();
        assert!((fit.coefficients[0].estimate - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1].estimate - 3.0).abs() < 1e-12);
        assert!(fit.diagnostics.rss < 1e-20);
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 5.0];
        let design = DesignMatrix::with_intercept(
            vec![("x".into(), xs.clone()), ("x2".into(), xs)],
            vec![0; 5],
        )
        .unwrap();
        assert_eq!(ols(&design, &[1.0, 2.0, 2.0, 4.0, 5.0]), Err(FitError::RankDeficient));
    }

    #[test]
    fn underdetermined() {
        let design =
            DesignMatrix::with_intercept(vec![("x".into(), vec![1.0, 2.0])], vec![0, 1]).unwrap();
        assert!(matches!(ols(&design, &[1.0, 2.0]), Err(FitError::Underdetermined { .. })));
    }

    #[test]
    fn textbook_standard_errors() {
        // simple regression: se(slope) = sqrt(σ̂² / Sxx)
        let xs = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = vec![1.1, 1.9, 3.2, 3.8, 5.3, 5.9];
        let design = DesignMatrix::with_intercept(vec![("x".into(), xs.clone())], vec![0; 6]).unwrap();
        let fit = ols(&design, &y).unwrap();
        let xbar = 3.5;
        let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
        let sigma2 = fit.diagnostics.rss / 4.0;
        assert!((fit.coefficients[1].std_error - (sigma2 / sxx).sqrt()).abs() < 1e-12);
    }
}
