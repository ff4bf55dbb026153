//! Random-intercept linear mixed model, `y = Xβ + u_group + ε`.
//!
//! With `λ = σ²_u / σ²_ε` the marginal covariance is `σ²_ε H`,
//! `H = blockdiag(I + λ 11ᵀ)`. For fixed λ the GLS problem reduces to
//! ordinary least squares on quasi-demeaned data
//! (`x̃ = x − θ_g x̄_g`, `θ_g = 1 − 1/√(1 + λ n_g)`), and
//! `ln|H| = Σ_g ln(1 + λ n_g)`.
//!
//! σ²_ε is profiled out, leaving a one-dimensional objective in `log λ`:
//!
//! ```text
//! ML:   −½ [ n ln(2π r/n) + ln|H| + n ]
//! REML: −½ [ (n−p) ln(2π r/(n−p)) + ln|H| + ln|XᵀH⁻¹X| + (n−p) ]
//! ```
//!
//! where `r` is the GLS residual sum of squares. The objective is evaluated
//! from per-group sufficient statistics, maximised by a coarse grid scan
//! followed by golden-section refinement, and the final estimates come from a
//! QR solve of the transformed problem.

use nalgebra::{DMatrix, DVector};

use super::ols::least_squares;
use super::{wald, DesignMatrix, Diagnostics, FitError, FitResult, VarianceComponents};

/// Search interval for `log λ`.
pub const LOG_RATIO_BOUNDS: (f64, f64) = (-12.0, 12.0);
const GRID_POINTS: usize = 41;
const TOLERANCE: f64 = 1e-8;
const MAX_ITER: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Sufficient statistics for profiling the variance ratio.
pub struct RandomInterceptProblem<'a> {
    design: &'a DesignMatrix,
    y: &'a [f64],
    n: usize,
    p: usize,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    group_sizes: Vec<f64>,
    group_x: Vec<DVector<f64>>,
    group_y: Vec<f64>,
}

impl<'a> RandomInterceptProblem<'a> {
    pub fn new(design: &'a DesignMatrix, y: &'a [f64]) -> Result<Self, FitError> {
        let (n, p) = (design.n_rows(), design.n_cols());
        if y.len() != n {
            return Err(FitError::InvalidInput("response length differs from design rows".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(FitError::InvalidInput("response has non-finite values".into()));
        }
        if design.n_groups() < 2 {
            return Err(FitError::InsufficientGroups(design.n_groups()));
        }
        if n <= p {
            return Err(FitError::Underdetermined { rows: n, params: p });
        }
        // Centre everything but the intercept; the column space is unchanged
        // and the cross products lose less to cancellation.
        let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
        let centers: Vec<f64> =
            design.columns().iter().enumerate().map(|(j, c)| if j == 0 { 0.0 } else { mean(c) }).collect();
        let y_mean = mean(y);
        let g = design.n_groups();
        let mut xtx = DMatrix::zeros(p, p);
        let mut xty = DVector::zeros(p);
        let mut yty = 0.0;
        let mut group_sizes = vec![0.0; g];
        let mut group_x = vec![DVector::zeros(p); g];
        let mut group_y = vec![0.0; g];
        let mut row = DVector::zeros(p);
        for i in 0..n {
            for j in 0..p {
                row[j] = design.columns()[j][i] - centers[j];
            }
            let yi = y[i] - y_mean;
            xtx.ger(1.0, &row, &row, 1.0);
            xty.axpy(yi, &row, 1.0);
            yty += yi * yi;
            let gi = design.groups()[i];
            group_sizes[gi] += 1.0;
            group_x[gi] += &row;
            group_y[gi] += yi;
        }
        Ok(RandomInterceptProblem { design, y, n, p, xtx, xty, yty, group_sizes, group_x, group_y })
    }

    /// Profiled log-likelihood (restricted when `reml`) at `log λ`.
    /// Returns `-∞` where `XᵀH⁻¹X` is not positive definite.
    pub fn profile_loglik(&self, log_ratio: f64, reml: bool) -> f64 {
        let ratio = log_ratio.exp();
        let mut a = self.xtx.clone();
        let mut b = self.xty.clone();
        let mut c = self.yty;
        let mut log_det_h = 0.0;
        for ((&ng, sx), &sy) in self.group_sizes.iter().zip(&self.group_x).zip(&self.group_y) {
            let w = ratio / (1.0 + ratio * ng);
            a.ger(-w, sx, sx, 1.0);
            b.axpy(-w * sy, sx, 1.0);
            c -= w * sy * sy;
            log_det_h += (ratio * ng).ln_1p();
        }
        let Some(chol) = a.cholesky() else {
            return f64::NEG_INFINITY;
        };
        let beta = chol.solve(&b);
        let rss = (c - b.dot(&beta)).max(f64::MIN_POSITIVE);
        let two_pi = 2.0 * std::f64::consts::PI;
        let n = self.n as f64;
        if reml {
            let m = (self.n - self.p) as f64;
            let log_det_a: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            -0.5 * (m * (two_pi * rss / m).ln() + log_det_h + log_det_a + m)
        } else {
            -0.5 * (n * (two_pi * rss / n).ln() + log_det_h + n)
        }
    }

    /// Maximises the profile over `log λ`; returns `(log λ, loglik, evaluations)`.
    pub fn optimize(&self, reml: bool) -> Result<(f64, f64, usize), FitError> {
        let (lo, hi) = LOG_RATIO_BOUNDS;
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;
        let mut evaluations = 0;
        let mut eval = |x: f64| {
            evaluations += 1;
            self.profile_loglik(x, reml)
        };
        let grid: Vec<(f64, f64)> = (0..GRID_POINTS)
            .map(|k| {
                let x = lo + k as f64 * step;
                (x, eval(x))
            })
            .collect();
        let (k_best, &(mut best_x, mut best_f)) = grid
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.1.total_cmp(&b.1))
            .expect("grid is non-empty");
        if !best_f.is_finite() {
            return Err(FitError::RankDeficient);
        }
        let mut a = grid[k_best.saturating_sub(1)].0;
        let mut b = grid[(k_best + 1).min(GRID_POINTS - 1)].0;
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = eval(c);
        let mut fd = eval(d);
        let mut iterations = 0;
        while b - a > TOLERANCE {
            iterations += 1;
            if iterations > MAX_ITER {
                return Err(FitError::NonConvergence);
            }
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = eval(d);
            }
        }
        for (x, f) in [(c, fc), (d, fd)] {
            if f > best_f {
                best_x = x;
                best_f = f;
            }
        }
        Ok((best_x, best_f, evaluations))
    }

    /// Fixed-effects fit at a given variance ratio.
    fn fit_at(&self, ratio: f64, reml: bool) -> Result<FitResult, FitError> {
        let (n, p) = (self.n, self.p);
        let design = self.design;
        let g = design.n_groups();
        let mut x_mean = vec![vec![0.0; p]; g];
        let mut y_mean = vec![0.0; g];
        for i in 0..n {
            let gi = design.groups()[i];
            for j in 0..p {
                x_mean[gi][j] += design.columns()[j][i];
            }
            y_mean[gi] += self.y[i];
        }
        let theta: Vec<f64> = self.group_sizes.iter().map(|&ng| 1.0 - 1.0 / (1.0 + ratio * ng).sqrt()).collect();
        for gi in 0..g {
            let ng = self.group_sizes[gi];
            x_mean[gi].iter_mut().for_each(|v| *v /= ng);
            y_mean[gi] /= ng;
        }
        let x = DMatrix::from_fn(n, p, |i, j| {
            let gi = design.groups()[i];
            design.columns()[j][i] - theta[gi] * x_mean[gi][j]
        });
        let y = DVector::from_fn(n, |i, _| {
            let gi = design.groups()[i];
            self.y[i] - theta[gi] * y_mean[gi]
        });
        let fit = least_squares(&x, &y)?;
        let df = (n - p) as f64;
        let sigma2 = if reml { fit.rss / df } else { fit.rss / n as f64 };
        let coefficients = design
            .names()
            .iter()
            .enumerate()
            .map(|(j, name)| wald(name, fit.beta[j], (sigma2 * fit.xtx_inv[(j, j)]).sqrt(), df))
            .collect();
        Ok(FitResult {
            coefficients,
            dropped: Vec::new(),
            variance: Some(VarianceComponents { residual: sigma2, intercept: ratio * sigma2 }),
            diagnostics: Diagnostics {
                method: if reml { "reml" } else { "ml" }.into(),
                n_obs: n,
                n_params: p,
                n_groups: g,
                df,
                rss: fit.rss,
                log_likelihood: None,
                log_ratio: None,
                evaluations: 0,
                boundary: false,
            },
        })
    }
}

/// Fits the random-intercept model by (RE)ML profile optimisation over `log λ ∈ [−12, 12]`.
pub fn lmm(design: &DesignMatrix, y: &[f64], reml: bool) -> Result<FitResult, FitError> {
    let problem = RandomInterceptProblem::new(design, y)?;
    // rank check on the untransformed design
    least_squares(&design.to_matrix(), &DVector::from_column_slice(y))?;
    let (log_ratio, loglik, evaluations) = problem.optimize(reml)?;
    let mut fit = problem.fit_at(log_ratio.exp(), reml)?;
    let (lo, hi) = LOG_RATIO_BOUNDS;
    fit.diagnostics.log_likelihood = Some(loglik);
    fit.diagnostics.log_ratio = Some(log_ratio);
    fit.diagnostics.evaluations = evaluations;
    fit.diagnostics.boundary = (log_ratio - lo).abs() < 1e-6 || (hi - log_ratio).abs() < 1e-6;
    Ok(fit)
}

/// Fits with the variance ratio pinned at `ratio` (≥ 0); `ratio = 0` is OLS.
pub fn lmm_fixed_ratio(
    design: &DesignMatrix,
    y: &[f64],
    ratio: f64,
    reml: bool,
) -> Result<FitResult, FitError> {
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(FitError::InvalidInput("variance ratio must be finite and non-negative".into()));
    }
    let problem = RandomInterceptProblem::new(design, y)?;
    let mut fit = problem.fit_at(ratio, reml)?;
    if ratio > 0.0 {
        fit.diagnostics.log_likelihood = Some(problem.profile_loglik(ratio.ln(), reml));
        fit.diagnostics.log_ratio = Some(ratio.ln());
    }
    Ok(fit)
}
