use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Empirical-Bernstein half-width after `t` samples with standard deviation
/// `sigma_t`, range `range` and failure probability `delta`:
///
/// ```text
/// sigma_t * sqrt(2 ln(3/delta) / t) + 3 * range * ln(3/delta) / t
/// ```
pub fn bernstein_bound<T: Scalar>(sigma_t: T, t: usize, range: T, delta: T) -> Result<T> {
    if t == 0 {
        return Err(Error::InsufficientData("bound needs at least one sample".into()));
    }
    let t = T::of_usize(t);
    let log_term = (T::of(3.0) / delta).ln();
    let two = T::of(2.0);
    let three = T::of(3.0);
    Ok(sigma_t * (two * log_term / t).sqrt() + three * range * log_term / t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_samples_is_an_error() {
        assert!(bernstein_bound(0.1f64, 0, 1.0, 0.1).is_err());
    }

    #[test]
    fn vanishes_with_zero_variance() {
        let mut prev = f64::INFINITY;
        for t in [1, 10, 100, 1000, 100_000, 10_000_000] {
            let b = bernstein_bound(0.0f64, t, 1.0, 0.1).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn doubling_samples_shrinks_bound() {
        for t in [1usize, 3, 17, 250] {
            let a = bernstein_bound(0.3f64, t, 1.0, 0.1).unwrap();
            let b = bernstein_bound(0.3f64, 2 * t, 1.0, 0.1).unwrap();
            assert!(b < a);
        }
    }

    #[test]
    fn generic_over_width() {
        let a = bernstein_bound(0.1f32, 100, 1.0, 0.1).unwrap();
        let b = bernstein_bound(0.1f64, 100, 1.0, 0.1).unwrap();
        assert!((f64::from(a) - b).abs() < 1e-6);
    }
}
