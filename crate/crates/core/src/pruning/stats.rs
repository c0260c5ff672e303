use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub p_value: f64,
    pub df: f64,
    /// Equal to `p_value` until a family correction is applied.
    pub adjusted_p: f64,
    /// Both samples had zero variance, so the statistic is not a proper t.
    pub degenerate: bool,
}

impl TTestResult {
    pub fn with_family(mut self, m: usize) -> Self {
        self.adjusted_p = bonferroni_family(self.p_value, m);
        self
    }
}

fn moments<T: Scalar>(xs: &[T]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|x| x.as_f64()).sum::<f64>() / n;
    let var = xs.iter().map(|x| (x.as_f64() - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sided Welch test of `mean(a) = mean(b)`.
pub fn welch_t<T: Scalar>(a: &[T], b: &[T]) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "welch test needs two samples of size >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = moments(a);
    let (mb, vb) = moments(b);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 <= 0.0 || !se2.is_finite() {
        let diff = ma - mb;
        let (t, p) = if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        };
        return Ok(TTestResult {
            t_statistic: t,
            p_value: p,
            df: na + nb - 2.0,
            adjusted_p: p,
            degenerate: true,
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InsufficientData(format!("student t with df {df}: {e}")))?;
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(TTestResult {
        t_statistic: t,
        p_value: p,
        df,
        adjusted_p: p,
        degenerate: va == 0.0 && vb == 0.0,
    })
}

pub fn bonferroni_family(p: f64, m: usize) -> f64 {
    (p * m as f64).min(1.0)
}

/// Corrects every p-value for a family the size of the slice.
pub fn bonferroni(ps: &[f64]) -> Vec<f64> {
    ps.iter().map(|&p| bonferroni_family(p, ps.len())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn matches_reference_values() {
        let r = welch_t(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_relative_eq!(r.t_statistic, -2.1908902300206647, max_relative = 1e-12);
        assert_relative_eq!(r.df, 6.0, max_relative = 1e-12);
        assert_relative_eq!(r.p_value, 0.07098765432098755, max_relative = 1e-8);

        let a = [0.1, 0.5, 0.2, 0.9, 0.4];
        let b = [1.3, 0.2, 2.5, 1.9, 0.8, 1.1, 1.7];
        let r = welch_t(&a, &b).unwrap();
        assert_relative_eq!(r.t_statistic, -2.9453488125287337, max_relative = 1e-12);
        assert_relative_eq!(r.df, 8.46805663754129, max_relative = 1e-10);
        assert_relative_eq!(r.p_value, 0.017443233794500457, max_relative = 1e-8);
    }

    #[test]
    fn identical_samples() {
        let r = welch_t(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(r.t_statistic, 0.0);
        assert_relative_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn undersized_and_degenerate() {
        assert!(matches!(welch_t(&[1.0], &[1.0, 2.0]), Err(Error::InsufficientData(_))));
        let r = welch_t(&[0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.t_statistic, r.p_value), (0.0, 1.0));
        let r = welch_t(&[-1.0, -1.0], &[0.0, 0.0]).unwrap();
        assert!(r.degenerate && r.t_statistic == f64::NEG_INFINITY && r.p_value == 0.0);
    }

    #[test]
    fn bonferroni_examples() {
        assert_relative_eq!(bonferroni_family(0.01, 6), 0.06, epsilon = 1e-15);
        assert_eq!(bonferroni_family(1.0, 6), 1.0);
        assert_eq!(bonferroni(&[0.2, 0.5, 0.01]), vec![0.6000000000000001, 1.0, 0.03]);
        assert!(bonferroni(&[]).is_empty());
    }

    #[test]
    fn adjusted_relation_for_reported_row() {
        // A reported adjusted p of 1.12e-05 in a family of six implies a raw
        // p of 1.12e-05 / 6; the correction must map it back.
        let raw = 1.12e-05 / 6.0;
        let r = TTestResult {
            t_statistic: -4.809,
            p_value: raw,
            df: 30.0,
            adjusted_p: raw,
            degenerate: false,
        }
        .with_family(6);
        assert_relative_eq!(r.adjusted_p, 1.12e-05, max_relative = 1e-12);
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-5.0f64..5.0, 2..20)
    }

    proptest! {
        #[test]
        fn antisymmetric(a in sample(), b in sample()) {
            let ab = welch_t(&a, &b).unwrap();
            let ba = welch_t(&b, &a).unwrap();
            prop_assert_eq!(ab.t_statistic, -ba.t_statistic);
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }

        #[test]
        fn shift_invariant(a in sample(), b in sample(), c in -10.0f64..10.0) {
            let base = welch_t(&a, &b).unwrap();
            let sa: Vec<f64> = a.iter().map(|x| x + c).collect();
            let sb: Vec<f64> = b.iter().map(|x| x + c).collect();
            let shifted = welch_t(&sa, &sb).unwrap();
            if !base.degenerate {
                prop_assert!((base.t_statistic - shifted.t_statistic).abs() <= 1e-6 * (1.0 + base.t_statistic.abs()));
            }
        }

        #[test]
        fn bonferroni_monotone_capped(mut ps in proptest::collection::vec(0.0f64..=1.0, 1..30)) {
            ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let adj = bonferroni(&ps);
            for w in adj.windows(2) { prop_assert!(w[0] <= w[1]); }
            for (p, q) in ps.iter().zip(&adj) { prop_assert!(*q >= *p && *q <= 1.0); }
        }
    }
}
