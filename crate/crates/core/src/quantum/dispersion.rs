//! Group velocity from tabulated phase velocity.

use crate::error::{Error, Result};

/// Second-order derivative estimates on a strictly increasing, possibly
/// non-uniform abscissa: three-point centred in the interior, three-point
/// one-sided at the ends. Written in difference form so a constant table
/// differentiates to exactly zero.
pub fn derivative(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let (a, b, c) = if i == 0 {
            (0, 1, 2)
        } else if i + 1 == n {
            (n - 3, n - 2, n - 1)
        } else {
            (i - 1, i, i + 1)
        };
        let (h1, h2) = (x[b] - x[a], x[c] - x[b]);
        out[i] = if i == 0 {
            (h1 + h2) / (h1 * h2) * (f[b] - f[a]) - h1 / (h2 * (h1 + h2)) * (f[c] - f[a])
        } else if i + 1 == n {
            (h1 + h2) / (h1 * h2) * (f[c] - f[b]) - h2 / (h1 * (h1 + h2)) * (f[c] - f[a])
        } else {
            -h2 / (h1 * (h1 + h2)) * (f[a] - f[b]) + h1 / (h2 * (h1 + h2)) * (f[c] - f[b])
        };
    }
    out
}

fn check(samples: &[(f64, f64)], what: &str) -> Result<()> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples {
            need: 3,
            got: samples.len(),
        });
    }
    if samples[0].0 <= 0.0 || samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Domain(format!("{what} must be positive and strictly increasing")));
    }
    Ok(())
}

/// `v_g = v_p + k dv_p/dk` from `(k, v_p)` samples.
pub fn group_velocity_from_k(samples: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    check(samples, "wave numbers")?;
    let (k, vp): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    let d = derivative(&k, &vp);
    Ok((0..k.len()).map(|i| (k[i], vp[i] + k[i] * d[i])).collect())
}

/// `v_g = v_p − λ dv_p/dλ` from `(λ, v_p)` samples.
pub fn group_velocity_from_lambda(samples: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    check(samples, "wavelengths")?;
    let (l, vp): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    let d = derivative(&l, &vp);
    Ok((0..l.len()).map(|i| (l[i], vp[i] - l[i] * d[i])).collect())
}
