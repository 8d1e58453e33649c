use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub coefficient: f64,
    pub n: usize,
    /// `n - 2`
    pub df: usize,
    /// Two-sided, from the t approximation `t = r·sqrt(df / (1 - r²))`.
    pub p_value: f64,
}

fn two_sided_p(r: f64, df: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df as f64 / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df > 0");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Undefined(format!(
            "correlation needs at least 3 pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Invalid(
            "non-finite value in correlation input".into(),
        ));
    }
    Ok(())
}

/// Sample Pearson correlation, computed from centered sums.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_lengths(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation with zero variance".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = x.len() - 2;
    Ok(Correlation {
        coefficient: r,
        n: x.len(),
        df,
        p_value: two_sided_p(r, df),
    })
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_lengths(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_linear() {
        assert!(
            (pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0])
                .unwrap()
                .coefficient
                - 1.0)
                .abs()
                < 1e-15
        );
        assert!(
            (pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0])
                .unwrap()
                .coefficient
                + 1.0)
                .abs()
                < 1e-15
        );
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().df, 1);
    }

    #[test]
    fn zero_variance_undefined() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Undefined(_))
        ));
        assert!(spearman(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn monotone_transform_gives_unit_rho() {
        let x = [0.3, -1.0, 2.5, 7.0, 0.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.powi(3) + 1.0).collect();
        assert!((spearman(&x, &y).unwrap().coefficient - 1.0).abs() < 1e-15);
        let rev: Vec<f64> = x.iter().map(|v| -v.exp()).collect();
        assert!((spearman(&x, &rev).unwrap().coefficient + 1.0).abs() < 1e-15);
    }

    #[test]
    fn ties_get_mean_rank() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 10.0, 30.0]),
            vec![1.5, 3.0, 1.5, 4.0]
        );
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn p_value_reference() {
        // r = 0.5, n = 12: t = 0.5·sqrt(10/0.75) = 1.825742, two-sided p ≈ 0.0978546 (df 10).
        let p = two_sided_p(0.5, 10);
        assert!((p - 0.097_854_6).abs() < 1e-6, "{p}");
    }
}
