//! Image quality metrics: peak signal-to-noise ratio and the structural
//! similarity index, both over matrices interpreted as grayscale images.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Side length of the SSIM window.
const SSIM_WINDOW: usize = 11;
/// Standard deviation of the Gaussian window.
const SSIM_SIGMA: f64 = 1.5;

/// Peak signal-to-noise ratio in decibels: `10 log10(peak^2 / MSE)`.
/// Identical images (MSE = 0) report `f64::INFINITY`.
pub fn psnr(reference: &DenseMatrix, estimate: &DenseMatrix, peak: f64) -> Result<f64> {
    reference.check_same_shape(estimate)?;
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::InvalidInput(format!("peak must be positive, got {peak}")));
    }
    let n = (reference.rows() * reference.cols()) as f64;
    let mse: f64 = reference
        .entries()
        .iter()
        .zip(estimate.entries())
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Mean local structural similarity over all fully-contained 11x11 windows,
/// with a sigma = 1.5 Gaussian weighting and the usual stabilizers
/// `C1 = (0.01 peak)^2`, `C2 = (0.03 peak)^2`.
pub fn ssim(reference: &DenseMatrix, estimate: &DenseMatrix, peak: f64) -> Result<f64> {
    reference.check_same_shape(estimate)?;
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::InvalidInput(format!("peak must be positive, got {peak}")));
    }
    let (rows, cols) = reference.shape();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::InvalidInput(format!(
            "image {rows}x{cols} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )));
    }

    let kernel = gaussian_kernel();
    let c1 = (0.01 * peak) * (0.01 * peak);
    let c2 = (0.03 * peak) * (0.03 * peak);

    let mut acc = 0.0;
    let mut windows = 0usize;
    for wi in 0..=(rows - SSIM_WINDOW) {
        for wj in 0..=(cols - SSIM_WINDOW) {
            let mut mu_x = 0.0;
            let mut mu_y = 0.0;
            for di in 0..SSIM_WINDOW {
                for dj in 0..SSIM_WINDOW {
                    let w = kernel[di] * kernel[dj];
                    mu_x += w * reference.get(wi + di, wj + dj);
                    mu_y += w * estimate.get(wi + di, wj + dj);
                }
            }
            let mut var_x = 0.0;
            let mut var_y = 0.0;
            let mut cov = 0.0;
            for di in 0..SSIM_WINDOW {
                for dj in 0..SSIM_WINDOW {
                    let w = kernel[di] * kernel[dj];
                    let dx = reference.get(wi + di, wj + dj) - mu_x;
                    let dy = estimate.get(wi + di, wj + dj) - mu_y;
                    var_x += w * dx * dx;
                    var_y += w * dy * dy;
                    cov += w * dx * dy;
                }
            }
            let num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2);
            let den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
            acc += num / den;
            windows += 1;
        }
    }
    Ok(acc / windows as f64)
}

/// One-dimensional Gaussian weights, normalized to sum 1; the 2-D window is
/// the separable product.
fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn random_image(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = stream(seed);
        DenseMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() * 255.0)
    }

    #[test]
    fn identical_images_saturate_both_metrics() {
        let img = random_image(16, 1);
        assert_eq!(psnr(&img, &img, 255.0).unwrap(), f64::INFINITY);
        assert!((ssim(&img, &img, 255.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_of_full_swing_is_zero_db() {
        let a = DenseMatrix::zeros(8, 8);
        let b = DenseMatrix::from_fn(8, 8, |_, _| 255.0);
        assert!((psnr(&a, &b, 255.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn psnr_follows_log_arithmetic() {
        // MSE = peak^2 / 100 gives 20 dB
        let peak = 255.0;
        let delta = peak / 10.0;
        let a = DenseMatrix::zeros(10, 10);
        let b = DenseMatrix::from_fn(10, 10, |_, _| delta);
        assert!((psnr(&a, &b, peak).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_and_ssim_are_symmetric() {
        let a = random_image(16, 2);
        let b = random_image(16, 3);
        assert_eq!(psnr(&a, &b, 255.0).unwrap(), psnr(&b, &a, 255.0).unwrap());
        let s1 = ssim(&a, &b, 255.0).unwrap();
        let s2 = ssim(&b, &a, 255.0).unwrap();
        assert!((s1 - s2).abs() < 1e-12);
    }

    #[test]
    fn constant_shift_dims_luminance_only() {
        // estimate = reference + c: the structure term stays 1, the
        // luminance term drops below 1, so 0 < ssim < 1.
        let a = random_image(16, 4);
        let mut b = a.clone();
        for v in b.entries_mut() {
            *v += 40.0;
        }
        let s = ssim(&a, &b, 255.0).unwrap();
        assert!(s < 0.999, "shifted image should not be fully similar: {s}");
        assert!(s > 0.0);

        // per-window check with the closed form: both terms of the product
        // are known when y = x + c.
        let kernel = gaussian_kernel();
        let c1 = (0.01f64 * 255.0).powi(2);
        let c2 = (0.03f64 * 255.0).powi(2);
        let mut mu_x = 0.0;
        for di in 0..SSIM_WINDOW {
            for dj in 0..SSIM_WINDOW {
                mu_x += kernel[di] * kernel[dj] * a.get(di, dj);
            }
        }
        let mu_y = mu_x + 40.0;
        let mut var_x = 0.0;
        for di in 0..SSIM_WINDOW {
            for dj in 0..SSIM_WINDOW {
                let d = a.get(di, dj) - mu_x;
                var_x += kernel[di] * kernel[dj] * d * d;
            }
        }
        let expect = (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
            * (2.0 * var_x + c2)
            / (2.0 * var_x + c2);
        // compare against the implementation on an image that is one window
        let win_a = DenseMatrix::from_fn(11, 11, |i, j| a.get(i, j));
        let mut win_b = win_a.clone();
        for v in win_b.entries_mut() {
            *v += 40.0;
        }
        let got = ssim(&win_a, &win_b, 255.0).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn independent_noise_has_near_zero_ssim() {
        for seed in 0..10 {
            let a = random_image(64, 100 + seed);
            let b = random_image(64, 200 + seed);
            let s = ssim(&a, &b, 255.0).unwrap();
            assert!(s.abs() <= 0.1, "seed {seed}: ssim {s} not near zero");
        }
    }

    #[test]
    fn undersized_images_are_rejected() {
        let a = DenseMatrix::zeros(8, 8);
        assert!(ssim(&a, &a, 255.0).is_err());
        assert!(psnr(&a, &DenseMatrix::zeros(9, 8), 255.0).is_err());
        assert!(psnr(&a, &a, 0.0).is_err());
    }
}
