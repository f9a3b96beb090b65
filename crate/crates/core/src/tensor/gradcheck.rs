//! Finite-difference gradient checking.
//!
//! Central differences in `f64` against an analytic gradient; the relative
//! error bound used throughout the test suites is 1e-4 with step 1e-5.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Compares an analytic gradient of a scalar function against central
/// finite differences.
///
/// Returns `max_i |g_fd,i - g_an,i| / max(|g_fd,i|, |g_an,i|, 1e-8)`.
pub fn gradient_check<F>(f: F, x: &Tensor<f64>, analytic: &Tensor<f64>, h: f64) -> Result<f64>
where
    F: Fn(&Tensor<f64>) -> Result<f64>,
{
    if analytic.shape() != x.shape() {
        return Err(Error::shape(
            "gradient_check",
            format!(
                "analytic gradient shape {:?} does not match input {:?}",
                analytic.shape(),
                x.shape()
            ),
        ));
    }
    let mut max_err = 0.0f64;
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = x.data()[i];
        probe.data_mut()[i] = orig + h;
        let f_plus = eval_finite(&f, &probe)?;
        probe.data_mut()[i] = orig - h;
        let f_minus = eval_finite(&f, &probe)?;
        probe.data_mut()[i] = orig;

        let fd = (f_plus - f_minus) / (2.0 * h);
        let an = analytic.data()[i];
        let denom = fd.abs().max(an.abs()).max(1e-8);
        let err = (fd - an).abs() / denom;
        if err > max_err {
            max_err = err;
        }
    }
    Ok(max_err)
}

fn eval_finite<F>(f: &F, x: &Tensor<f64>) -> Result<f64>
where
    F: Fn(&Tensor<f64>) -> Result<f64>,
{
    let v = f(x)?;
    if !v.is_finite() {
        return Err(Error::Eval(format!("function value is not finite: {v}")));
    }
    Ok(v)
}
