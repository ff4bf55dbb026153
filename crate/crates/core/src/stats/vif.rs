//! Variance inflation factors and iterative collinearity pruning.

use super::DesignMatrix;

/// Columns that are never pruned in an RDiT design.
pub const VIF_PROTECTED: [&str; 4] = ["const", "time", "intervention", "time_after"];

// R² this close to 1 counts as exact collinearity.
const EXACT_R2: f64 = 1e-12;
const DEPENDENCE_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn subtract_projection(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of modified Gram-Schmidt for orthogonality to working precision
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
        }
    }
}

/// Residual sum of squares of `target` regressed on `others`.
/// Linearly dependent regressors are skipped rather than rejected.
fn residual_ss(target: &[f64], others: &[&[f64]]) -> f64 {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(others.len());
    for col in others {
        let norm0 = dot(col, col).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        let mut v = col.to_vec();
        subtract_projection(&mut v, &basis);
        let norm = dot(&v, &v).sqrt();
        if norm > DEPENDENCE_TOL * norm0 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut r = target.to_vec();
    subtract_projection(&mut r, &basis);
    dot(&r, &r)
}

/// VIF of column `index` (not the intercept): `1 / (1 − R²)` from regressing
/// it on every other column. Exact collinearity gives `+∞`.
pub fn vif(design: &DesignMatrix, index: usize) -> f64 {
    assert!(index > 0 && index < design.n_cols(), "VIF is undefined for the intercept");
    let cols = design.columns();
    let target = &cols[index];
    let n = target.len() as f64;
    let mean = target.iter().sum::<f64>() / n;
    let tss: f64 = target.iter().map(|v| (v - mean) * (v - mean)).sum();
    if tss <= 0.0 {
        return f64::INFINITY;
    }
    let others: Vec<&[f64]> =
        cols.iter().enumerate().filter(|(j, _)| *j != index).map(|(_, c)| c.as_slice()).collect();
    let r2 = 1.0 - residual_ss(target, &others) / tss;
    if r2 >= 1.0 - EXACT_R2 {
        f64::INFINITY
    } else {
        1.0 / (1.0 - r2.max(0.0))
    }
}

/// Repeatedly drops the unprotected column with the largest VIF while any
/// exceeds `threshold`. Ties go to the later column. Returns the pruned
/// design and the dropped names in drop order.
pub fn vif_prune(
    design: &DesignMatrix,
    threshold: f64,
    protected: &[&str],
) -> (DesignMatrix, Vec<String>) {
    let mut current = design.clone();
    let mut dropped = Vec::new();
    loop {
        let mut worst: Option<(usize, f64)> = None;
        for (j, name) in current.names().iter().enumerate().skip(1) {
            if protected.contains(&name.as_str()) {
                continue;
            }
            let v = vif(&current, j);
            if worst.map_or(true, |(_, w)| v >= w) {
                worst = Some((j, v));
            }
        }
        match worst {
            Some((j, v)) if v > threshold => {
                dropped.push(current.names()[j].clone());
                current = current.without_column(j);
            }
            _ => return (current, dropped),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(cols: Vec<(&str, Vec<f64>)>) -> DesignMatrix {
        let n = cols[0].1.len();
        DesignMatrix::with_intercept(
            cols.into_iter().map(|(n, c)| (n.to_string(), c)).collect(),
            vec![0; n],
        )
        .unwrap()
    }

    #[test]
    fn orthogonal_columns_have_unit_vif() {
        let d = design(vec![
            ("a", vec![1.0, -1.0, 1.0, -1.0]),
            ("b", vec![1.0, 1.0, -1.0, -1.0]),
            ("c", vec![1.0, -1.0, -1.0, 1.0]),
        ]);
        for j in 1..4 {
            assert!((vif(&d, j) - 1.0).abs() < 1e-12);
        }
        let (pruned, dropped) = vif_prune(&d, 2.5, &["const"]);
        assert!(dropped.is_empty());
        assert_eq!(pruned.n_cols(), 4);
    }

    #[test]
    fn exact_duplicate_dropped_once() {
        let x = vec![1.0, 3.0, 2.0, 5.0, 4.0, 7.0];
        let z = vec![0.5, -1.0, 2.0, 0.0, 1.0, -0.5];
        let d = design(vec![("x", x.clone()), ("z", z), ("x_copy", x)]);
        assert!(vif(&d, 1).is_infinite());
        let (pruned, dropped) = vif_prune(&d, 5.0, &["const"]);
        // tie at +inf goes to the later column
        assert_eq!(dropped, vec!["x_copy".to_string()]);
        assert_eq!(pruned.names(), &["const", "x", "z"]);
    }

    #[test]
    fn protected_columns_survive() {
        let t = vec![-2.0, -1.0, 1.0, 2.0, 3.0, 4.0];
        let d = design(vec![("time", t.clone()), ("cov", t.iter().map(|v| v * 2.0 + 1.0).collect())]);
        let (pruned, dropped) = vif_prune(&d, 2.5, &VIF_PROTECTED);
        assert_eq!(dropped, vec!["cov".to_string()]);
        assert_eq!(pruned.names(), &["const", "time"]);
    }

    #[test]
    fn constant_column_is_infinite() {
        let d = design(vec![("a", vec![1.0, 2.0, 3.0]), ("flat", vec![4.0, 4.0, 4.0])]);
        assert!(vif(&d, 2).is_infinite());
    }
}
