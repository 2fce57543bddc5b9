//! Image-quality metrics: PSNR, mean local SSIM, relative L2 error.

use crate::error::{Error, Result};
use crate::transform::Image;

fn check_same_dims(truth: &Image, test: &Image) -> Result<()> {
    if truth.width() != test.width() || truth.height() != test.height() {
        return Err(Error::Dimension(format!(
            "truth {}x{} vs test {}x{}",
            truth.width(),
            truth.height(),
            test.width(),
            test.height()
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB: `10 log10(peak^2 / MSE)`.
///
/// Exact equality reports `f64::INFINITY`.
pub fn psnr(truth: &Image, test: &Image, peak: f64) -> Result<f64> {
    check_same_dims(truth, test)?;
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::Parameter(format!("peak = {peak} must be > 0")));
    }
    let mse = truth
        .as_slice()
        .iter()
        .zip(test.as_slice())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        / truth.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Mean local SSIM over a uniform square window, valid region only (no
/// padding). Standard constants `C1 = (0.01 peak)^2`, `C2 = (0.03 peak)^2`;
/// window statistics use population normalization.
pub fn ssim(truth: &Image, test: &Image, window: usize, peak: f64) -> Result<f64> {
    check_same_dims(truth, test)?;
    if window < 3 || window % 2 == 0 {
        return Err(Error::Parameter(format!("window = {window} must be odd and >= 3")));
    }
    if truth.width() < window || truth.height() < window {
        return Err(Error::Dimension(format!(
            "window {window} larger than image {}x{}",
            truth.width(),
            truth.height()
        )));
    }
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::Parameter(format!("peak = {peak} must be > 0")));
    }
    let c1 = (0.01 * peak) * (0.01 * peak);
    let c2 = (0.03 * peak) * (0.03 * peak);
    let (w, h) = (truth.width(), truth.height());
    let a = truth.as_slice();
    let b = test.as_slice();
    let n = (window * window) as f64;

    let mut acc = 0.0;
    let mut positions = 0usize;
    for y0 in 0..=(h - window) {
        for x0 in 0..=(w - window) {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in y0..y0 + window {
                for x in x0..x0 + window {
                    let va = a[y * w + x];
                    let vb = b[y * w + x];
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            }
            let mu_a = sa / n;
            let mu_b = sb / n;
            let var_a = saa / n - mu_a * mu_a;
            let var_b = sbb / n - mu_b * mu_b;
            let cov = sab / n - mu_a * mu_b;
            acc += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            positions += 1;
        }
    }
    Ok(acc / positions as f64)
}

/// Relative L2 error `||test - truth|| / ||truth||`. Asymmetric by
/// definition: the denominator is always the reference image.
pub fn rel_l2(truth: &Image, test: &Image) -> Result<f64> {
    check_same_dims(truth, test)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&a, &b) in truth.as_slice().iter().zip(test.as_slice()) {
        num += (b - a) * (b - a);
        den += a * a;
    }
    if den == 0.0 {
        return Err(Error::Domain("reference image has zero norm".into()));
    }
    Ok((num / den).sqrt())
}

/// All three metrics for one truth/test pair (peak 1.0, 7x7 SSIM window).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub rel_l2: f64,
    pub width: usize,
    pub height: usize,
}

impl QualityReport {
    pub const DEFAULT_PEAK: f64 = 1.0;
    pub const DEFAULT_WINDOW: usize = 7;

    pub fn compute(truth: &Image, test: &Image) -> Result<Self> {
        Ok(QualityReport {
            psnr_db: psnr(truth, test, Self::DEFAULT_PEAK)?,
            ssim: ssim(truth, test, Self::DEFAULT_WINDOW, Self::DEFAULT_PEAK)?,
            rel_l2: rel_l2(truth, test)?,
            width: truth.width(),
            height: truth.height(),
        })
    }

    /// CSV schema; infinity renders as `inf`.
    pub fn csv_header() -> &'static str {
        "psnr_db,ssim,rel_l2,width,height"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.psnr_db, self.ssim, self.rel_l2, self.width, self.height
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = SplitMix64::new(seed);
        Image::from_fn(w, h, |_, _| rng.next_f64()).unwrap()
    }

    #[test]
    fn psnr_exact_match_is_infinite() {
        let img = random_image(8, 8, 1);
        assert_eq!(psnr(&img, &img, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_constant_offset_closed_form() {
        let truth = Image::zeros(8, 8);
        let test = Image::from_fn(8, 8, |_, _| 0.1).unwrap();
        let p = psnr(&truth, &test, 1.0).unwrap();
        assert!((p - 20.0).abs() < 1e-12, "{p}");
    }

    #[test]
    fn psnr_matches_two_pass_mse_oracle() {
        let a = random_image(16, 16, 2);
        let b = random_image(16, 16, 3);
        let p = psnr(&a, &b, 1.0).unwrap();
        let mut mse = 0.0;
        for i in 0..256 {
            let d = a.as_slice()[i] - b.as_slice()[i];
            mse += d * d;
        }
        mse /= 256.0;
        assert!((p - 10.0 * (1.0 / mse).log10()).abs() < 1e-10);
    }

    #[test]
    fn psnr_decreases_with_noise_amplitude() {
        let truth = random_image(16, 16, 4);
        let noise = random_image(16, 16, 5);
        let mut prev = f64::INFINITY;
        for k in 1..6 {
            let amp = k as f64 * 0.02;
            let test = Image::from_fn(16, 16, |x, y| {
                truth.get(x, y) + amp * (noise.get(x, y) - 0.5)
            })
            .unwrap();
            let p = psnr(&truth, &test, 1.0).unwrap();
            assert!(p < prev, "psnr not decreasing: {p} vs {prev}");
            prev = p;
        }
    }

    #[test]
    fn ssim_identical_is_one() {
        let img = random_image(12, 12, 6);
        let s = ssim(&img, &img, 7, 1.0).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_constant_offset_closed_form() {
        let c = 0.4;
        let delta = 0.2;
        let truth = Image::from_fn(10, 10, |_, _| c).unwrap();
        let test = Image::from_fn(10, 10, |_, _| c + delta).unwrap();
        let s = ssim(&truth, &test, 5, 1.0).unwrap();
        let c1 = 0.01f64.powi(2);
        let expect = (2.0 * c * (c + delta) + c1) / (c * c + (c + delta) * (c + delta) + c1);
        assert!((s - expect).abs() < 1e-12, "{s} vs {expect}");
    }

    #[test]
    fn ssim_matches_per_window_oracle() {
        let a = random_image(11, 9, 7);
        let b = random_image(11, 9, 8);
        let win = 3;
        let s = ssim(&a, &b, win, 1.0).unwrap();

        // Naive oracle: collect windows explicitly.
        let c1 = 0.01f64.powi(2);
        let c2 = 0.03f64.powi(2);
        let mut vals = Vec::new();
        for y0 in 0..=(9 - win) {
            for x0 in 0..=(11 - win) {
                let mut pa = Vec::new();
                let mut pb = Vec::new();
                for y in y0..y0 + win {
                    for x in x0..x0 + win {
                        pa.push(a.get(x, y));
                        pb.push(b.get(x, y));
                    }
                }
                let n = pa.len() as f64;
                let ma = pa.iter().sum::<f64>() / n;
                let mb = pb.iter().sum::<f64>() / n;
                let va = pa.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / n;
                let vb = pb.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / n;
                let cov = pa
                    .iter()
                    .zip(&pb)
                    .map(|(x, y)| (x - ma) * (y - mb))
                    .sum::<f64>()
                    / n;
                vals.push(
                    ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                        / ((ma * ma + mb * mb + c1) * (va + vb + c2)),
                );
            }
        }
        let oracle = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((s - oracle).abs() < 1e-10, "{s} vs {oracle}");
    }

    #[test]
    fn ssim_window_validation() {
        let img = random_image(8, 8, 9);
        assert!(ssim(&img, &img, 4, 1.0).is_err());
        assert!(ssim(&img, &img, 1, 1.0).is_err());
        assert!(ssim(&img, &img, 9, 1.0).is_err());
    }

    #[test]
    fn rel_l2_cases() {
        let truth = random_image(8, 8, 10);
        assert_eq!(rel_l2(&truth, &truth).unwrap(), 0.0);

        let doubled = Image::from_fn(8, 8, |x, y| 2.0 * truth.get(x, y)).unwrap();
        assert!((rel_l2(&truth, &doubled).unwrap() - 1.0).abs() < 1e-12);

        let zero = Image::zeros(8, 8);
        assert!(matches!(rel_l2(&zero, &truth), Err(Error::Domain(_))));

        // Direct summation oracle.
        let a = random_image(8, 8, 11);
        let b = random_image(8, 8, 12);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..64 {
            num += (b.as_slice()[i] - a.as_slice()[i]).powi(2);
            den += a.as_slice()[i].powi(2);
        }
        assert!((rel_l2(&a, &b).unwrap() - (num / den).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn report_row_shape() {
        let a = random_image(8, 8, 13);
        let b = random_image(8, 8, 14);
        let r = QualityReport::compute(&a, &b).unwrap();
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), 5);
        assert!(row.ends_with(",8,8"));
        assert_eq!(QualityReport::csv_header().split(',').count(), 5);
    }

    #[test]
    fn dims_must_agree() {
        let a = Image::zeros(8, 8);
        let b = Image::zeros(8, 9);
        assert!(psnr(&a, &b, 1.0).is_err());
        assert!(rel_l2(&a, &b).is_err());
    }
}
