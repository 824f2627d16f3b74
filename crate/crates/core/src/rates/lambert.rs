//! Principal branch `W0` of the Lambert function on `[0, inf)`.

use crate::error::{Error, Result};

const MAX_ITER: usize = 100;

/// `W0(z)` for `z >= 0` by Halley iteration: `y e^y = z` to
/// `|y e^y - z| <= 1e-12 max(1, z)`.
///
/// For `z` so large that `y e^y` overflows use [`lambert_w0_exp`].
pub fn lambert_w0(z: f64) -> Result<f64> {
    if z < 0.0 || z.is_nan() {
        return Err(Error::NegativeArgument(z));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if !z.is_finite() {
        return Ok(f64::INFINITY);
    }
    let mut w = if z < std::f64::consts::E {
        z.ln_1p() * (1.0 - 0.25 * z.ln_1p() / (1.0 + z.ln_1p()))
    } else {
        let l = z.ln();
        l - l.ln()
    };
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs() {
            break;
        }
    }
    Ok(w)
}

/// `W0(e^l)`, the root of `w + ln w = l`, stable for any finite `l`.
/// Falls back to [`lambert_w0`] while `e^l` is representable.
pub fn lambert_w0_exp(l: f64) -> Result<f64> {
    if l.is_nan() {
        return Err(Error::BadInput("log-argument is NaN".into()));
    }
    if l < 700.0 {
        return lambert_w0(l.exp());
    }
    // Newton on w + ln w - l, which is concave and increasing: from the
    // right of the root the iterates decrease monotonically.
    let mut w = l;
    for _ in 0..MAX_ITER {
        let f = w + w.ln() - l;
        let step = f / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w {
            break;
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        // omega constant: W(1)
        assert!((lambert_w0(1.0).unwrap() - 0.567_143_290_409_783_8).abs() < 1e-15);
        assert!(matches!(lambert_w0(-1.0), Err(Error::NegativeArgument(_))));
    }

    #[test]
    fn log_form_agrees_where_both_apply() {
        for l in [-5.0, 0.0, 3.0, 50.0, 699.0] {
            let a = lambert_w0(f64::exp(l)).unwrap();
            let b = lambert_w0_exp(l).unwrap();
            assert!((a - b).abs() <= 1e-13 * (1.0 + a));
        }
        let w = lambert_w0_exp(1e4).unwrap();
        assert!((w + w.ln() - 1e4).abs() <= 1e-12 * 1e4);
    }

    proptest! {
        #[test]
        fn residual_within_contract(z in 0.0f64..1e12) {
            let y = lambert_w0(z).unwrap();
            prop_assert!(y >= 0.0);
            prop_assert!((y * y.exp() - z).abs() <= 1e-12 * z.max(1.0));
        }
    }
}
