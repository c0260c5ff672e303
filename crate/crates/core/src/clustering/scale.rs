use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Column-wise z-scores (population standard deviation). Constant columns
/// become zeros.
pub fn standardize<T: Scalar>(rows: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    if rows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "standardizing needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Input("rows have different lengths".into()));
    }
    let n = T::of_usize(rows.len());
    let mut out = vec![vec![T::zero(); d]; rows.len()];
    for c in 0..d {
        let mean = rows.iter().map(|r| r[c]).sum::<T>() / n;
        let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<T>() / n;
        let sd = var.sqrt();
        if sd <= T::epsilon() * (T::one() + mean.abs()) {
            continue;
        }
        for (o, r) in out.iter_mut().zip(rows) {
            o[c] = (r[c] - mean) / sd;
        }
    }
    Ok(out)
}
