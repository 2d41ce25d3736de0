use alloc::format;

use crate::error::{invalid, shape, Error, Result};

/// `|a − n| / max(1e-8, |a| + |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares `analytic` against central differences of `loss` around `params`
/// and returns the largest [`relative_error`] over all coordinates.
pub fn finite_difference_check<F>(mut loss: F, params: &[f64], analytic: &[f64], eps: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("finite-difference step must be positive"));
    }
    if params.len() != analytic.len() {
        return Err(shape(format!(
            "{} parameters but {} analytic gradient entries",
            params.len(),
            analytic.len()
        )));
    }
    let mut theta = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + eps;
        let plus = loss(&theta);
        theta[i] = orig - eps;
        let minus = loss(&theta);
        theta[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NumericInstability(format!("non-finite loss when perturbing coordinate {i}")));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_loss_is_exact() {
        let err = finite_difference_check(|t| 3.0 * t[0], &[0.7], &[3.0], 1e-5).unwrap();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn quadratic_loss_is_exact() {
        let err = finite_difference_check(|t| t[0] * t[0], &[1.0], &[2.0], 1e-5).unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn wrong_gradient_is_detected() {
        let err = finite_difference_check(|t| t[0] * t[0], &[1.0], &[2.5], 1e-5).unwrap();
        assert!(err > 0.1);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let r = finite_difference_check(|t| if t[0] > 0.0 { f64::NAN } else { 0.0 }, &[0.0], &[0.0], 1e-5);
        assert!(matches!(r, Err(Error::NumericInstability(_))));
        assert!(finite_difference_check(|t| t[0], &[0.0], &[1.0], 0.0).is_err());
        assert!(finite_difference_check(|t| t[0], &[0.0], &[1.0, 2.0], 1e-5).is_err());
    }
}
