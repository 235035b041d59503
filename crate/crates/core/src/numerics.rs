//! Log-domain primitives.

use alloc::format;

use crate::error::{invalid, Error, Result};

/// `log Σ w_i e^{v_i}`, max-shifted so no intermediate overflows. Unit weights when
/// `weights` is `None`.
pub fn log_sum_exp(values: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("log_sum_exp of an empty slice"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("log_sum_exp input"));
    }
    match weights {
        None => {
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = values.iter().map(|&v| libm::exp(v - max)).sum();
            Ok(max + libm::log(sum))
        }
        Some(w) => {
            if w.len() != values.len() {
                return Err(Error::DimensionMismatch {
                    expected: values.len(),
                    found: w.len(),
                });
            }
            if let Some(bad) = w.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
                return Err(invalid(format!(
                    "weights must be positive and finite, got {bad}"
                )));
            }
            Ok(log_weighted_sum(values, w))
        }
    }
}

/// `log(1 − e^a)` for `a < 0`, accurate both near zero and for very negative `a`.
pub fn log1m_exp(a: f64) -> Result<f64> {
    if !(a < 0.0) {
        return Err(invalid(format!("log1m_exp needs a < 0, got {a}")));
    }
    if a > -core::f64::consts::LN_2 {
        Ok(libm::log(-libm::expm1(a)))
    } else {
        Ok(libm::log1p(-libm::exp(a)))
    }
}

/// `log Σ w_i e^{z_i}` over the entries with `w_i > 0`. Zero weights are skipped so
/// they never contribute `0 · e^{z}` terms. At least one weight must be positive.
pub(crate) fn log_weighted_sum(z: &[f64], w: &[f64]) -> f64 {
    debug_assert_eq!(z.len(), w.len());
    let max = z
        .iter()
        .zip(w)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(max.is_finite(), "no positive weight");
    let sum: f64 = z
        .iter()
        .zip(w)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&z, &w)| w * libm::exp(z - max))
        .sum();
    max + libm::log(sum)
}

/// `grad[i] += scale · w_i e^{z_i − log_total}`: the derivative of
/// `log_weighted_sum(z, w)` with respect to `z`, scaled.
pub(crate) fn add_shares(z: &[f64], w: &[f64], log_total: f64, scale: f64, grad: &mut [f64]) {
    for ((g, &zi), &wi) in grad.iter_mut().zip(z).zip(w) {
        if wi > 0.0 {
            *g += scale * wi * libm::exp(zi - log_total);
        }
    }
}
