//! File formats.
//!
//! * `CDKS` — raw k-space: magic `CDKS`, u32 version (1), u32 width, u32
//!   height, then `width * height` complex bins as little-endian `f64`
//!   pairs (re, im), row-major, DC-centered. All integers little-endian.
//! * `CDIM` — raw image: same envelope with magic `CDIM` and one `f64` per
//!   pixel. Lossless round trip.
//! * PBM (P4) — sampling masks, bit 1 = kept.
//! * PGM (P5, 16-bit) — image previews; the linear rescale used is recorded
//!   in a `<path>.minmax.txt` sidecar (`min=`/`max=` lines). Write-only.
//! * Flat `key = value` text files for phantom specs and reconstruction
//!   configs, `#` comments allowed. Unknown keys are rejected.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::CliqueMode;
use crate::optimizer::ReconConfig;
use crate::phantom::{Lesion, PhantomSpec};
use crate::transform::{Image, KSpace, SamplingMask};

const FORMAT_VERSION: u32 = 1;

fn write_header(out: &mut impl Write, magic: &[u8; 4], width: usize, height: usize) -> Result<()> {
    out.write_all(magic)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(width as u32).to_le_bytes())?;
    out.write_all(&(height as u32).to_le_bytes())?;
    Ok(())
}

fn read_header(data: &[u8], magic: &[u8; 4], path: &Path) -> Result<(usize, usize)> {
    if data.len() < 16 {
        return Err(Error::Format(format!("{}: truncated header", path.display())));
    }
    if &data[0..4] != magic {
        return Err(Error::Format(format!(
            "{}: bad magic (expected {})",
            path.display(),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let width = u32::from_le_bytes(data[8..12].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(data[12..16].try_into().unwrap()) as usize;
    Ok((width, height))
}

pub fn write_kspace(path: &Path, ks: &KSpace) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write_header(&mut out, b"CDKS", ks.width(), ks.height())?;
    for c in ks.as_slice() {
        out.write_all(&c.re.to_le_bytes())?;
        out.write_all(&c.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_kspace(path: &Path) -> Result<KSpace> {
    let mut data = Vec::new();
    fs::File::open(path)?.read_to_end(&mut data)?;
    let (width, height) = read_header(&data, b"CDKS", path)?;
    let expected = 16 + width * height * 16;
    if data.len() != expected {
        return Err(Error::Format(format!(
            "{}: {} bytes, expected {expected}",
            path.display(),
            data.len()
        )));
    }
    let mut values = Vec::with_capacity(width * height);
    for chunk in data[16..].chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    KSpace::new(width, height, values)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_image_raw(path: &Path, img: &Image) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write_header(&mut out, b"CDIM", img.width(), img.height())?;
    for v in img.as_slice() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_image_raw(path: &Path) -> Result<Image> {
    let mut data = Vec::new();
    fs::File::open(path)?.read_to_end(&mut data)?;
    let (width, height) = read_header(&data, b"CDIM", path)?;
    let expected = 16 + width * height * 8;
    if data.len() != expected {
        return Err(Error::Format(format!(
            "{}: {} bytes, expected {expected}",
            path.display(),
            data.len()
        )));
    }
    let values: Vec<f64> = data[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Image::new(width, height, values).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_mask_pbm(path: &Path, mask: &SamplingMask) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P4\n{} {}\n", mask.width(), mask.height())?;
    let w = mask.width();
    for y in 0..mask.height() {
        let mut byte = 0u8;
        let mut bits = 0;
        for x in 0..w {
            byte = (byte << 1) | u8::from(mask.is_kept(x, y));
            bits += 1;
            if bits == 8 {
                out.write_all(&[byte])?;
                byte = 0;
                bits = 0;
            }
        }
        if bits > 0 {
            out.write_all(&[byte << (8 - bits)])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_mask_pbm(path: &Path) -> Result<SamplingMask> {
    let mut data = Vec::new();
    fs::File::open(path)?.read_to_end(&mut data)?;
    // Header: "P4", whitespace, width, whitespace, height, single whitespace.
    let mut pos = 0usize;
    let mut token = |data: &[u8]| -> Result<String> {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format(format!("{}: truncated PBM header", path.display())));
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };
    if token(&data)? != "P4" {
        return Err(Error::Format(format!("{}: not a P4 bitmap", path.display())));
    }
    let parse = |s: String| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("{}: bad PBM dimension '{s}'", path.display())))
    };
    let width = parse(token(&data)?)?;
    let height = parse(token(&data)?)?;
    pos += 1; // single whitespace after the header
    let row_bytes = width.div_ceil(8);
    if data.len() < pos + row_bytes * height {
        return Err(Error::Format(format!("{}: truncated PBM payload", path.display())));
    }
    let mut kept = Vec::with_capacity(width * height);
    for y in 0..height {
        let row = &data[pos + y * row_bytes..pos + (y + 1) * row_bytes];
        for x in 0..width {
            kept.push(row[x / 8] >> (7 - x % 8) & 1 == 1);
        }
    }
    SamplingMask::new(width, height, kept)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// 16-bit PGM preview plus a `<path>.minmax.txt` sidecar recording the
/// linear rescale. A constant image maps to all zeros.
pub fn write_image_pgm16(path: &Path, img: &Image) -> Result<()> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in img.as_slice() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P5\n{} {}\n65535\n", img.width(), img.height())?;
    for &v in img.as_slice() {
        let q = ((v - lo) / span * 65535.0).round().clamp(0.0, 65535.0) as u16;
        out.write_all(&q.to_be_bytes())?;
    }
    out.flush()?;

    let sidecar = sidecar_path(path);
    fs::write(&sidecar, format!("min={lo}\nmax={hi}\n"))?;
    Ok(())
}

pub fn sidecar_path(pgm_path: &Path) -> std::path::PathBuf {
    let mut os = pgm_path.as_os_str().to_owned();
    os.push(".minmax.txt");
    std::path::PathBuf::from(os)
}

// --- Flat key-value files ----------------------------------------------------

/// Parse `key = value` lines; `#` starts a comment, blank lines ignored.
fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Format(format!("line {}: expected 'key = value'", lineno + 1)));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("{key}: bad float '{value}'")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::Format(format!("{key}: bad integer '{value}'")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| Error::Format(format!("{key}: bad integer '{value}'")))
}

pub fn phantom_spec_to_string(spec: &PhantomSpec) -> String {
    let mut s = String::new();
    s.push_str(&format!("width = {}\n", spec.width));
    s.push_str(&format!("height = {}\n", spec.height));
    s.push_str(&format!("background_level = {}\n", spec.background_level));
    s.push_str(&format!("prostate_semi_x = {}\n", spec.prostate_semi_x_frac));
    s.push_str(&format!("prostate_semi_y = {}\n", spec.prostate_semi_y_frac));
    s.push_str(&format!("prostate_intensity = {}\n", spec.prostate_intensity));
    s.push_str(&format!("lesion_count = {}\n", spec.lesions.len()));
    for (k, lesion) in spec.lesions.iter().enumerate() {
        s.push_str(&format!("lesion{k}_cx = {}\n", lesion.cx_frac));
        s.push_str(&format!("lesion{k}_cy = {}\n", lesion.cy_frac));
        s.push_str(&format!("lesion{k}_radius = {}\n", lesion.radius_frac));
        s.push_str(&format!("lesion{k}_intensity = {}\n", lesion.intensity));
    }
    s.push_str(&format!("urethra_cx = {}\n", spec.urethra_cx_frac));
    s.push_str(&format!("urethra_cy = {}\n", spec.urethra_cy_frac));
    s.push_str(&format!("urethra_radius = {}\n", spec.urethra_radius_frac));
    s.push_str(&format!("urethra_intensity = {}\n", spec.urethra_intensity));
    s.push_str(&format!("rng_seed = {}\n", spec.rng_seed));
    s
}

pub fn write_phantom_spec(path: &Path, spec: &PhantomSpec) -> Result<()> {
    fs::write(path, phantom_spec_to_string(spec))?;
    Ok(())
}

pub fn phantom_spec_from_string(text: &str) -> Result<PhantomSpec> {
    let pairs = parse_kv(text)?;
    let mut map: std::collections::BTreeMap<String, String> = std::collections::BTreeMap::new();
    for (k, v) in pairs {
        if map.insert(k.clone(), v).is_some() {
            return Err(Error::Format(format!("duplicate key '{k}'")));
        }
    }
    let mut take = |key: &str| -> Result<String> {
        map.remove(key)
            .ok_or_else(|| Error::Format(format!("missing key '{key}'")))
    };

    let width = parse_usize("width", &take("width")?)?;
    let height = parse_usize("height", &take("height")?)?;
    let background_level = parse_f64("background_level", &take("background_level")?)?;
    let prostate_semi_x_frac = parse_f64("prostate_semi_x", &take("prostate_semi_x")?)?;
    let prostate_semi_y_frac = parse_f64("prostate_semi_y", &take("prostate_semi_y")?)?;
    let prostate_intensity = parse_f64("prostate_intensity", &take("prostate_intensity")?)?;
    let lesion_count = parse_usize("lesion_count", &take("lesion_count")?)?;
    let mut lesions = Vec::with_capacity(lesion_count);
    for k in 0..lesion_count {
        lesions.push(Lesion {
            cx_frac: parse_f64("lesion_cx", &take(&format!("lesion{k}_cx"))?)?,
            cy_frac: parse_f64("lesion_cy", &take(&format!("lesion{k}_cy"))?)?,
            radius_frac: parse_f64("lesion_radius", &take(&format!("lesion{k}_radius"))?)?,
            intensity: parse_f64("lesion_intensity", &take(&format!("lesion{k}_intensity"))?)?,
        });
    }
    let urethra_cx_frac = parse_f64("urethra_cx", &take("urethra_cx")?)?;
    let urethra_cy_frac = parse_f64("urethra_cy", &take("urethra_cy")?)?;
    let urethra_radius_frac = parse_f64("urethra_radius", &take("urethra_radius")?)?;
    let urethra_intensity = parse_f64("urethra_intensity", &take("urethra_intensity")?)?;
    let rng_seed = parse_u64("rng_seed", &take("rng_seed")?)?;

    if let Some(extra) = map.keys().next() {
        return Err(Error::Format(format!("unknown key '{extra}'")));
    }

    let spec = PhantomSpec {
        width,
        height,
        background_level,
        prostate_semi_x_frac,
        prostate_semi_y_frac,
        prostate_intensity,
        lesions,
        urethra_cx_frac,
        urethra_cy_frac,
        urethra_radius_frac,
        urethra_intensity,
        rng_seed,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn read_phantom_spec(path: &Path) -> Result<PhantomSpec> {
    let text = fs::read_to_string(path)?;
    phantom_spec_from_string(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn recon_config_to_string(cfg: &ReconConfig) -> String {
    let mode = match cfg.cliques.mode {
        CliqueMode::DeterministicThreshold => "deterministic",
        CliqueMode::Stochastic => "stochastic",
    };
    format!(
        "lambda_u = {}\nlambda_p = {}\nsigma = {}\n\
         gamma = {}\nsigma_s = {}\nsigma_d = {}\nclique_mode = {mode}\n\
         candidate_radius = {}\nseed = {}\n\
         step_size = {}\nmax_iters = {}\ntol_rel_energy = {}\ntol_grad_norm = {}\n\
         resample_every = {}\n",
        cfg.energy.lambda_u,
        cfg.energy.lambda_p,
        cfg.energy.sigma,
        cfg.cliques.gamma,
        cfg.cliques.sigma_s,
        cfg.cliques.sigma_d,
        cfg.cliques.candidate_radius,
        cfg.cliques.seed,
        cfg.step_size,
        cfg.max_iters,
        cfg.tol_rel_energy,
        cfg.tol_grad_norm,
        cfg.resample_every,
    )
}

pub fn write_recon_config(path: &Path, cfg: &ReconConfig) -> Result<()> {
    fs::write(path, recon_config_to_string(cfg))?;
    Ok(())
}

/// Apply `key = value` overrides from a config file onto `base`. Keys not
/// present keep their base values; unknown keys are errors.
pub fn recon_config_from_string(text: &str, base: &ReconConfig) -> Result<ReconConfig> {
    let mut cfg = base.clone();
    for (key, value) in parse_kv(text)? {
        match key.as_str() {
            "lambda_u" => cfg.energy.lambda_u = parse_f64(&key, &value)?,
            "lambda_p" => cfg.energy.lambda_p = parse_f64(&key, &value)?,
            "sigma" => cfg.energy.sigma = parse_f64(&key, &value)?,
            "gamma" => cfg.cliques.gamma = parse_f64(&key, &value)?,
            "sigma_s" => cfg.cliques.sigma_s = parse_f64(&key, &value)?,
            "sigma_d" => cfg.cliques.sigma_d = parse_f64(&key, &value)?,
            "clique_mode" => {
                cfg.cliques.mode = match value.as_str() {
                    "deterministic" => CliqueMode::DeterministicThreshold,
                    "stochastic" => CliqueMode::Stochastic,
                    other => {
                        return Err(Error::Format(format!("clique_mode: unknown mode '{other}'")))
                    }
                }
            }
            "candidate_radius" => cfg.cliques.candidate_radius = parse_f64(&key, &value)?,
            "seed" => cfg.cliques.seed = parse_u64(&key, &value)?,
            "step_size" => cfg.step_size = parse_f64(&key, &value)?,
            "max_iters" => cfg.max_iters = parse_usize(&key, &value)?,
            "tol_rel_energy" => cfg.tol_rel_energy = parse_f64(&key, &value)?,
            "tol_grad_norm" => cfg.tol_grad_norm = parse_f64(&key, &value)?,
            "resample_every" => cfg.resample_every = parse_usize(&key, &value)?,
            other => return Err(Error::Format(format!("unknown key '{other}'"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_recon_config(path: &Path, base: &ReconConfig) -> Result<ReconConfig> {
    let text = fs::read_to_string(path)?;
    recon_config_from_string(&text, base)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
