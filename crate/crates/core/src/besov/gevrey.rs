//! Gevrey bumps, the smooth step built from them, and a fit of their Fourier decay.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// `exp(-x^{-kappa})` for `x > 0`, zero otherwise, with `kappa = 1/(theta - 1)`.
pub fn gevrey_profile(x: f64, theta: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-x.powf(-1.0 / (theta - 1.0))).exp()
    }
}

/// Smooth step equal to 0 for `u <= 0` and 1 for `u >= 1`, built from the
/// Gevrey profile as `phi(u) / (phi(u) + phi(1 - u))`.
pub fn smooth_step(u: f64, theta: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let kappa = 1.0 / (theta - 1.0);
        // ratio form avoids underflow of both profiles near the ends
        let e = u.powf(-kappa) - (1.0 - u).powf(-kappa);
        if e > 700.0 {
            0.0
        } else {
            1.0 / (1.0 + e.exp())
        }
    }
}

/// Spacing of the samples returned by [`gevrey_bump_1d`].
pub fn bump_spacing(radius: f64, samples: usize) -> f64 {
    4.0 * radius / (samples - 1) as f64
}

/// Samples `phi(r + x) phi(r - x)` at `samples` equispaced points of `[-2r, 2r]`.
///
/// The abscissae are generated from odd integers so that the output is
/// symmetric bit for bit.
pub fn gevrey_bump_1d(theta: f64, radius: f64, samples: usize) -> Result<Vec<f64>> {
    if !(theta > 1.0) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    if !(radius > 0.0) || samples < 2 {
        return Err(Error::Config(format!(
            "bump needs radius > 0 and at least 2 samples (got {radius}, {samples})"
        )));
    }
    let denom = (samples - 1) as f64;
    Ok((0..samples)
        .map(|i| {
            let m = (2 * i) as f64 - denom;
            let x = 2.0 * radius * m / denom;
            let ax = x.abs();
            gevrey_profile(radius + ax, theta) * gevrey_profile(radius - ax, theta)
        })
        .collect())
}

/// Outcome of [`fourier_decay_check`]: `|phi_hat(zeta)| ~ C exp(-c |zeta|^{1/theta})`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecayFit {
    pub c: f64,
    pub big_c: f64,
    /// RMS residual of the log fit divided by the log-range of the data.
    pub residual: f64,
    /// Decades spanned by the fitted envelope.
    pub decades: f64,
    pub points: usize,
}

/// Fits the envelope of `log |phi_hat|` against `log C - c |zeta|^{1/theta}`.
///
/// `spacing` is the sample spacing of `bump`. The transform is zero-padded to
/// eight times the input length; local maxima above a round-off floor form the
/// envelope.
pub fn fourier_decay_check(bump: &[f64], spacing: f64, theta: f64) -> Result<DecayFit> {
    if !(theta > 1.0) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    let n = bump.len();
    let len = (8 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = bump.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mag: Vec<f64> = buf[..len / 2].iter().map(|c| c.norm() * spacing).collect();
    let peak = mag.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::FitFailed("zero input".into()));
    }
    let sum_abs: f64 = bump.iter().map(|v| v.abs()).sum::<f64>() * spacing;
    let floor = 1e3 * f64::EPSILON * sum_abs;
    let dzeta = 2.0 * std::f64::consts::PI / (len as f64 * spacing);

    let above = mag[1..].iter().take_while(|&&m| m >= floor).count();
    let point = |j: usize| ((j as f64 * dzeta).powf(1.0 / theta), mag[j].ln());
    let mut pts: Vec<(f64, f64)> = (1..above.min(mag.len() - 2))
        .filter(|&j| mag[j] >= mag[j - 1] && mag[j] >= mag[j + 1])
        .map(point)
        .collect();
    // a monotone spectrum has no interior maxima: it is its own envelope
    if pts.len() < 10 {
        pts = (1..=above).map(point).collect();
    }
    if pts.len() < 3 {
        return Err(Error::FitFailed(format!("only {} envelope points", pts.len())));
    }
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(p.1), b.max(p.1))
    });
    let decades = (hi - lo) / std::f64::consts::LN_10;
    if decades < 6.0 {
        return Err(Error::FitFailed(format!(
            "dynamic range {decades:.2} decades is below 6"
        )));
    }
    let np = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / np, sy / np);
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), p| {
        (a + (p.0 - mx).powi(2), b + (p.0 - mx) * (p.1 - my))
    });
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / np)
        .sqrt();
    Ok(DecayFit {
        c: -slope,
        big_c: intercept.exp(),
        residual: rms / (hi - lo),
        decades,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_values() {
        let b = gevrey_bump_1d(2.0, 1.0, 401).unwrap();
        assert!((b[200] - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(b[100], 0.0);
        assert_eq!(b[300], 0.0);
        assert!(b[101] > 0.0 && b[299] > 0.0);
        for i in 0..401 {
            assert_eq!(b[i], b[400 - i]);
        }
        assert!(matches!(
            gevrey_bump_1d(1.0, 1.0, 11),
            Err(Error::ThetaOutOfRange(_))
        ));
    }

    #[test]
    fn smooth_step_is_monotone_and_symmetric() {
        let mut last = 0.0;
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            let s = smooth_step(u, 2.0);
            assert!(s >= last);
            assert!((s + smooth_step(1.0 - u, 2.0) - 1.0).abs() < 1e-15);
            last = s;
        }
    }

    #[test]
    fn decay_fit_on_theta_two_bump() {
        let samples = 2049;
        let b = gevrey_bump_1d(2.0, 1.0, samples).unwrap();
        let fit = fourier_decay_check(&b, bump_spacing(1.0, samples), 2.0).unwrap();
        assert!(fit.c > 0.0);
        assert!(fit.residual < 0.1, "{fit:?}");
    }

    #[test]
    fn gaussian_input_decays_fast_enough() {
        let h = 0.01;
        let g: Vec<f64> = (0..801)
            .map(|i| {
                let x = (i as f64 - 400.0) * h;
                (-x * x / 0.1).exp()
            })
            .collect();
        let fit = fourier_decay_check(&g, h, 2.0).unwrap();
        assert!(fit.c > 0.0);
    }

    #[test]
    fn indicator_only_decays_polynomially() {
        let ind: Vec<f64> = (0..2049)
            .map(|i| if (512..=1536).contains(&i) { 1.0 } else { 0.0 })
            .collect();
        match fourier_decay_check(&ind, 4.0 / 2048.0, 2.0) {
            Err(Error::FitFailed(_)) => {}
            Ok(fit) => assert!(fit.c < 0.05 || fit.residual > 0.1, "{fit:?}"),
            Err(e) => panic!("{e}"),
        }
    }
}
