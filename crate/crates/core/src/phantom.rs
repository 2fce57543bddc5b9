//! Synthetic 2-D prostate phantom: a known ground truth for measuring
//! reconstruction quality.
//!
//! The scene is a single slice: uniform background, a centered ellipse for
//! the prostate, a few hypointense lesions inside it, and a small central
//! urethra. Intensities are relative contrast only. All lengths are stored
//! as fractions — radii and semi-axes relative to `min(width, height)`,
//! centers relative to width and height — so a spec scales cleanly.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::transform::Image;

/// Default intensities. Documented so benchmark numbers are reproducible.
pub const BACKGROUND_INTENSITY: f64 = 0.15;
pub const PROSTATE_INTENSITY: f64 = 0.6;
pub const LESION_INTENSITY: f64 = 0.35;
pub const URETHRA_INTENSITY: f64 = 0.1;

/// Prostate axial dimensions are 5 x 4.5 units with the major axis spanning
/// 40% of the short image side; lesion radii span 0.25-0.5 of the same unit
/// and the urethra diameter is 0.7 units.
const PROSTATE_SEMI_X_FRAC: f64 = 0.20;
const PROSTATE_SEMI_Y_FRAC: f64 = 0.20 * 4.5 / 5.0;
const LESION_RADIUS_MIN_FRAC: f64 = 0.25 / 5.0 * 0.40;
const LESION_RADIUS_MAX_FRAC: f64 = 0.50 / 5.0 * 0.40;
const URETHRA_RADIUS_FRAC: f64 = 0.35 / 5.0 * 0.40;

/// Circular lesion, fractions of the image as described in the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct Lesion {
    pub cx_frac: f64,
    pub cy_frac: f64,
    pub radius_frac: f64,
    pub intensity: f64,
}

/// Full scene description. Deterministic: rendering a spec twice produces
/// bit-identical images.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub background_level: f64,
    pub prostate_semi_x_frac: f64,
    pub prostate_semi_y_frac: f64,
    pub prostate_intensity: f64,
    pub lesions: Vec<Lesion>,
    pub urethra_cx_frac: f64,
    pub urethra_cy_frac: f64,
    pub urethra_radius_frac: f64,
    pub urethra_intensity: f64,
    pub rng_seed: u64,
}

impl PhantomSpec {
    /// Validate all invariants: intensities in [0,1], positive radii, every
    /// shape fully inside the image bounds.
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidSpec(format!(
                "zero-sized canvas {}x{}",
                self.width, self.height
            )));
        }
        let unit = |v: f64, name: &str| -> Result<()> {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} = {v} outside [0, 1]")));
            }
            Ok(())
        };
        unit(self.background_level, "background_level")?;
        unit(self.prostate_intensity, "prostate_intensity")?;
        unit(self.urethra_intensity, "urethra_intensity")?;

        let w = self.width as f64;
        let h = self.height as f64;
        let m = w.min(h);
        let inside_ellipse =
            |cx: f64, cy: f64, rx: f64, ry: f64, name: &str| -> Result<()> {
                if rx <= 0.0 || ry <= 0.0 {
                    return Err(Error::InvalidSpec(format!("{name} has non-positive radius")));
                }
                let (cx, cy) = (cx * w, cy * h);
                if cx - rx < 0.0 || cx + rx > w || cy - ry < 0.0 || cy + ry > h {
                    return Err(Error::InvalidSpec(format!("{name} extends outside the image")));
                }
                Ok(())
            };
        if self.prostate_semi_x_frac != 0.0 || self.prostate_semi_y_frac != 0.0 {
            inside_ellipse(
                0.5,
                0.5,
                self.prostate_semi_x_frac * m,
                self.prostate_semi_y_frac * m,
                "prostate",
            )?;
        }
        for (k, lesion) in self.lesions.iter().enumerate() {
            unit(lesion.intensity, "lesion intensity")?;
            inside_ellipse(
                lesion.cx_frac,
                lesion.cy_frac,
                lesion.radius_frac * m,
                lesion.radius_frac * m,
                &format!("lesion {k}"),
            )?;
        }
        if self.urethra_radius_frac != 0.0 {
            inside_ellipse(
                self.urethra_cx_frac,
                self.urethra_cy_frac,
                self.urethra_radius_frac * m,
                self.urethra_radius_frac * m,
                "urethra",
            )?;
        }
        Ok(())
    }

    /// A scene with no shapes, just the background level.
    pub fn background_only(width: usize, height: usize, level: f64) -> Self {
        PhantomSpec {
            width,
            height,
            background_level: level,
            prostate_semi_x_frac: 0.0,
            prostate_semi_y_frac: 0.0,
            prostate_intensity: 0.0,
            lesions: Vec::new(),
            urethra_cx_frac: 0.5,
            urethra_cy_frac: 0.5,
            urethra_radius_frac: 0.0,
            urethra_intensity: 0.0,
            rng_seed: 0,
        }
    }

    fn has_prostate(&self) -> bool {
        self.prostate_semi_x_frac > 0.0 && self.prostate_semi_y_frac > 0.0
    }

    fn has_urethra(&self) -> bool {
        self.urethra_radius_frac > 0.0
    }
}

/// Default prostate scene: centered 5:4.5 ellipse spanning 40% of the short
/// side, three lesions placed by `seed` fully inside the prostate, central
/// urethra.
pub fn default_prostate_spec(width: usize, height: usize, seed: u64) -> Result<PhantomSpec> {
    if width < 32 || height < 32 {
        return Err(Error::Parameter(format!(
            "canvas {width}x{height} too small for the default phantom (min 32x32)"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut lesions: Vec<Lesion> = Vec::with_capacity(3);
    let (a, b) = (PROSTATE_SEMI_X_FRAC, PROSTATE_SEMI_Y_FRAC);
    while lesions.len() < 3 {
        let r = rng.range_f64(LESION_RADIUS_MIN_FRAC, LESION_RADIUS_MAX_FRAC);
        // Place the center inside the prostate shrunk by the lesion radius
        // plus a small margin, keeping the whole disc interior.
        let (sa, sb) = (a - r - 0.01, b - r - 0.01);
        let u = rng.range_f64(-1.0, 1.0);
        let v = rng.range_f64(-1.0, 1.0);
        if u * u + v * v > 1.0 {
            continue;
        }
        let cand = Lesion {
            cx_frac: 0.5 + sa * u * (height.min(width) as f64 / width as f64),
            cy_frac: 0.5 + sb * v * (height.min(width) as f64 / height as f64),
            radius_frac: r,
            intensity: LESION_INTENSITY,
        };
        // Keep lesions disjoint and clear of the urethra so each one reads
        // as a separate structure.
        let min_dim = width.min(height) as f64;
        let dist_ok = lesions.iter().all(|l| {
            let dx = (l.cx_frac - cand.cx_frac) * width as f64;
            let dy = (l.cy_frac - cand.cy_frac) * height as f64;
            (dx * dx + dy * dy).sqrt() > (l.radius_frac + cand.radius_frac + 0.01) * min_dim
        });
        let dx = (cand.cx_frac - 0.5) * width as f64;
        let dy = (cand.cy_frac - 0.5) * height as f64;
        let urethra_ok = (dx * dx + dy * dy).sqrt()
            > (URETHRA_RADIUS_FRAC + cand.radius_frac + 0.01) * min_dim;
        if dist_ok && urethra_ok {
            lesions.push(cand);
        }
    }
    let spec = PhantomSpec {
        width,
        height,
        background_level: BACKGROUND_INTENSITY,
        prostate_semi_x_frac: a,
        prostate_semi_y_frac: b,
        prostate_intensity: PROSTATE_INTENSITY,
        lesions,
        urethra_cx_frac: 0.5,
        urethra_cy_frac: 0.5,
        urethra_radius_frac: URETHRA_RADIUS_FRAC,
        urethra_intensity: URETHRA_INTENSITY,
        rng_seed: seed,
    };
    spec.validate()?;
    Ok(spec)
}

/// Intensity of the topmost shape containing the point, in draw order
/// background -> prostate -> lesions -> urethra.
fn scene_intensity(spec: &PhantomSpec, px: f64, py: f64) -> f64 {
    let w = spec.width as f64;
    let h = spec.height as f64;
    let m = w.min(h);
    let mut value = spec.background_level;
    if spec.has_prostate() {
        let dx = (px - 0.5 * w) / (spec.prostate_semi_x_frac * m);
        let dy = (py - 0.5 * h) / (spec.prostate_semi_y_frac * m);
        if dx * dx + dy * dy <= 1.0 {
            value = spec.prostate_intensity;
        }
    }
    for lesion in &spec.lesions {
        let r = lesion.radius_frac * m;
        let dx = px - lesion.cx_frac * w;
        let dy = py - lesion.cy_frac * h;
        if dx * dx + dy * dy <= r * r {
            value = lesion.intensity;
        }
    }
    if spec.has_urethra() {
        let r = spec.urethra_radius_frac * m;
        let dx = px - spec.urethra_cx_frac * w;
        let dy = py - spec.urethra_cy_frac * h;
        if dx * dx + dy * dy <= r * r {
            value = spec.urethra_intensity;
        }
    }
    value
}

const SUPERSAMPLE: usize = 4;

/// Render the scene with 4x4 supersampled anti-aliased edges.
///
/// Pixels whose subsamples all land in the same shape take that intensity
/// exactly; only boundary pixels blend.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<Image> {
    spec.validate()?;
    let inv = 1.0 / SUPERSAMPLE as f64;
    let norm = 1.0 / (SUPERSAMPLE * SUPERSAMPLE) as f64;
    Image::from_fn(spec.width, spec.height, |x, y| {
        let mut acc = 0.0;
        let mut first = f64::NAN;
        let mut uniform = true;
        for sy in 0..SUPERSAMPLE {
            for sx in 0..SUPERSAMPLE {
                let px = x as f64 + (sx as f64 + 0.5) * inv;
                let py = y as f64 + (sy as f64 + 0.5) * inv;
                let v = scene_intensity(spec, px, py);
                if sx == 0 && sy == 0 {
                    first = v;
                } else if v != first {
                    uniform = false;
                }
                acc += v;
            }
        }
        if uniform {
            first
        } else {
            acc * norm
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scene_is_constant_background() {
        let spec = PhantomSpec::background_only(24, 16, 0.2);
        let img = generate_phantom(&spec).unwrap();
        for &v in img.as_slice() {
            assert_eq!(v, 0.2);
        }
    }

    #[test]
    fn center_pixel_is_urethra() {
        let spec = default_prostate_spec(256, 256, 1).unwrap();
        let img = generate_phantom(&spec).unwrap();
        assert_eq!(img.get(128, 128), URETHRA_INTENSITY);
    }

    #[test]
    fn default_spec_is_valid_and_deterministic() {
        let a = default_prostate_spec(256, 256, 42).unwrap();
        let b = default_prostate_spec(256, 256, 42).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert_eq!(a.lesions.len(), 3);

        let img_a = generate_phantom(&a).unwrap();
        let img_b = generate_phantom(&b).unwrap();
        assert_eq!(img_a.as_slice(), img_b.as_slice());

        let c = default_prostate_spec(256, 256, 43).unwrap();
        assert_ne!(a.lesions, c.lesions);
    }

    #[test]
    fn lesion_radius_fraction_matches_size_range() {
        // Lesion radii are 0.25-0.5 units against the 5-unit prostate major
        // axis, i.e. (0.05, 0.1) of the full axis length.
        let spec = default_prostate_spec(128, 128, 7).unwrap();
        let axis = 2.0 * spec.prostate_semi_x_frac;
        for lesion in &spec.lesions {
            let rel = lesion.radius_frac / axis;
            assert!(
                (0.05..=0.1).contains(&rel),
                "lesion radius {rel} of the prostate axis"
            );
        }
    }

    #[test]
    fn lesions_sit_inside_prostate() {
        for seed in 0..20 {
            let spec = default_prostate_spec(128, 128, seed).unwrap();
            let m = 128.0;
            for lesion in &spec.lesions {
                // Entire disc inside the prostate ellipse: test the worst
                // boundary sample.
                let worst = (0..64)
                    .map(|k| {
                        let ang = k as f64 * std::f64::consts::TAU / 64.0;
                        let bx = lesion.cx_frac * m + lesion.radius_frac * m * ang.cos();
                        let by = lesion.cy_frac * m + lesion.radius_frac * m * ang.sin();
                        let dx = (bx - 64.0) / (spec.prostate_semi_x_frac * m);
                        let dy = (by - 64.0) / (spec.prostate_semi_y_frac * m);
                        dx * dx + dy * dy
                    })
                    .fold(0.0f64, f64::max);
                assert!(worst <= 1.0, "lesion boundary leaves prostate: {worst}");
            }
        }
    }

    #[test]
    fn intensities_stay_in_unit_range() {
        let spec = default_prostate_spec(96, 64, 3).unwrap();
        let img = generate_phantom(&spec).unwrap();
        for &v in img.as_slice() {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn mean_matches_containment_oracle() {
        // Binary pixel-center rasterization bounds the supersampled mean:
        // edge cells differ by a fraction of a pixel and largely cancel.
        let spec = default_prostate_spec(256, 256, 11).unwrap();
        let img = generate_phantom(&spec).unwrap();
        let mut oracle = 0.0;
        for y in 0..256 {
            for x in 0..256 {
                oracle += scene_intensity(&spec, x as f64 + 0.5, y as f64 + 0.5);
            }
        }
        oracle /= 256.0 * 256.0;
        assert!(
            (img.mean() - oracle).abs() < 1e-3,
            "mean {} vs oracle {}",
            img.mean(),
            oracle
        );
    }

    #[test]
    fn out_of_bounds_shape_is_rejected() {
        let mut spec = default_prostate_spec(64, 64, 0).unwrap();
        spec.urethra_cx_frac = 0.99;
        assert!(matches!(generate_phantom(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn too_small_canvas_is_rejected() {
        assert!(matches!(
            default_prostate_spec(16, 64, 0),
            Err(Error::Parameter(_))
        ));
    }
}
