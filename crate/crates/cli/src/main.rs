//! Command-line pipeline: phantom generation, radial masks, undersampling,
//! CD-SFCRF reconstruction, evaluation, and sampling-rate sweeps.
//!
//! Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numerical
//! divergence. Every command writes a `<base>.manifest.txt` next to its
//! outputs with the resolved parameters needed to reproduce the run.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cdsfcrf::graph::CliqueMode;
use cdsfcrf::io;
use cdsfcrf::metrics::QualityReport;
use cdsfcrf::optimizer::{reconstruct, ReconConfig, StopReason};
use cdsfcrf::phantom::{default_prostate_spec, generate_phantom};
use cdsfcrf::transform::{
    apply_mask, dft2_forward, lines_for_ratio, radial_mask, sampling_ratio, zero_filled_recon,
};
use cdsfcrf::{Error, Image, Result};

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "cdsfcrf",
    version,
    about = "Compressive-sensing MRI reconstruction via cross-domain stochastic CRFs",
    after_help = "File formats:\n  \
        .cdim       raw f64 image (magic CDIM, little-endian)\n  \
        .cdks       raw complex f64 k-space, DC-centered (magic CDKS)\n  \
        .pbm        P4 bitmap sampling mask, bit 1 = kept\n  \
        .pgm        16-bit P5 preview with <name>.minmax.txt rescale sidecar\n\n\
        CSV schemas:\n  \
        trace:  iteration,unary,pairwise,total,grad_norm\n  \
        report: psnr_db,ssim,rel_l2,width,height\n  \
        sweep:  ratio,method,psnr_db,ssim,rel_l2,status"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic prostate phantom (CDIM + PGM preview + spec file)
    Phantom(PhantomArgs),
    /// Build a radial k-space sampling mask (PBM)
    Mask(MaskArgs),
    /// Forward-transform an image and apply a sampling mask (CDKS)
    Undersample(UndersampleArgs),
    /// Reconstruct an image from masked k-space via CD-SFCRF
    Reconstruct(ReconstructArgs),
    /// Score a reconstruction against ground truth (CSV report)
    Evaluate(EvaluateArgs),
    /// Mask/undersample/reconstruct/evaluate across sampling ratios
    Sweep(SweepArgs),
}

#[derive(Args)]
struct PhantomArgs {
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    /// Seed for lesion placement
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Render this spec file instead of building the default spec
    #[arg(long, conflicts_with_all = ["width", "height", "seed"])]
    spec: Option<PathBuf>,
    /// Output base path; writes <out>.cdim, <out>.pgm, <out>.spec.txt
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("density").required(true).multiple(false))]
struct MaskArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    /// Number of radial lines
    #[arg(long, group = "density")]
    lines: Option<usize>,
    /// Target sampling ratio in (0, 1]; the smallest line count reaching it
    /// is used and the achieved ratio is logged
    #[arg(long, group = "density")]
    ratio: Option<f64>,
    /// Output base path; writes <out>.pbm
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct UndersampleArgs {
    /// Input image (.cdim)
    #[arg(long)]
    image: PathBuf,
    /// Sampling mask (.pbm)
    #[arg(long)]
    mask: PathBuf,
    /// Output base path; writes <out>.cdks
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Stochastic,
    Deterministic,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Masked k-space observations (.cdks)
    #[arg(long)]
    kspace: PathBuf,
    /// Sampling mask (.pbm)
    #[arg(long)]
    mask: PathBuf,
    /// Config file (flat key = value); flags below override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output base path; writes <out>.cdim and <out>.pgm
    #[arg(long)]
    out: PathBuf,
    /// Also write <out>.trace.csv with per-iteration energies
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda_u: Option<f64>,
    #[arg(long)]
    lambda_p: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma_s: Option<f64>,
    #[arg(long)]
    sigma_d: Option<f64>,
    #[arg(long)]
    candidate_radius: Option<f64>,
    #[arg(long)]
    mode: Option<ModeArg>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    resample_every: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground-truth image (.cdim)
    #[arg(long)]
    truth: PathBuf,
    /// Image under test (.cdim)
    #[arg(long)]
    test: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Ground-truth image (.cdim)
    #[arg(long)]
    image: PathBuf,
    /// Comma-separated sampling ratios, e.g. 0.1,0.2,0.32
    #[arg(long)]
    ratios: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; per-ratio artifacts go to <dir>/ratio_<r>/ and the
    /// combined table to <dir>/sweep.csv
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parameter(_) | Error::Domain(_) | Error::InvalidSpec(_) => 2,
        Error::Dimension(_) | Error::Io(_) | Error::Format(_) => 3,
        Error::Divergence { .. } => 4,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Phantom(args) => cmd_phantom(args),
        Command::Mask(args) => cmd_mask(args),
        Command::Undersample(args) => cmd_undersample(args),
        Command::Reconstruct(args) => cmd_reconstruct(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut os = base.as_os_str().to_owned();
    os.push(suffix);
    PathBuf::from(os)
}

fn cmd_phantom(args: PhantomArgs) -> Result<()> {
    let start = Instant::now();
    ensure_parent(&args.out)?;

    let spec = match &args.spec {
        Some(path) => io::read_phantom_spec(path)?,
        None => default_prostate_spec(args.width, args.height, args.seed)?,
    };
    let image = generate_phantom(&spec)?;

    let cdim = with_suffix(&args.out, ".cdim");
    let pgm = with_suffix(&args.out, ".pgm");
    let spec_path = with_suffix(&args.out, ".spec.txt");
    io::write_image_raw(&cdim, &image)?;
    io::write_image_pgm16(&pgm, &image)?;
    io::write_phantom_spec(&spec_path, &spec)?;

    let mut m = RunManifest::new("phantom");
    m.param("width", spec.width)
        .param("height", spec.height)
        .param("seed", spec.rng_seed)
        .output("cdim", &cdim)
        .output("pgm", &pgm)
        .output("spec", &spec_path);
    if let Some(path) = &args.spec {
        m.input("spec", path);
    }
    m.write(&with_suffix(&args.out, ".manifest.txt"), start.elapsed().as_millis())?;

    println!("wrote {} ({}x{})", cdim.display(), spec.width, spec.height);
    Ok(())
}

fn cmd_mask(args: MaskArgs) -> Result<()> {
    let start = Instant::now();
    ensure_parent(&args.out)?;

    let lines = match (args.lines, args.ratio) {
        (Some(lines), None) => lines,
        (None, Some(ratio)) => lines_for_ratio(args.width, args.height, ratio)?,
        // clap's arg group enforces exactly one.
        _ => unreachable!(),
    };
    let mask = radial_mask(args.width, args.height, lines)?;
    let achieved = sampling_ratio(&mask);

    let pbm = with_suffix(&args.out, ".pbm");
    io::write_mask_pbm(&pbm, &mask)?;

    let mut m = RunManifest::new("mask");
    m.param("width", args.width).param("height", args.height).param("lines", lines);
    if let Some(ratio) = args.ratio {
        m.param("requested_ratio", ratio);
    }
    m.note("achieved_ratio", achieved).output("pbm", &pbm);
    m.write(&with_suffix(&args.out, ".manifest.txt"), start.elapsed().as_millis())?;

    println!("lines = {lines}");
    println!("achieved_ratio = {achieved}");
    Ok(())
}

fn cmd_undersample(args: UndersampleArgs) -> Result<()> {
    let start = Instant::now();
    ensure_parent(&args.out)?;

    let image = io::read_image_raw(&args.image)?;
    let mask = io::read_mask_pbm(&args.mask)?;
    let masked = apply_mask(&dft2_forward(&image), &mask)?;

    let cdks = with_suffix(&args.out, ".cdks");
    io::write_kspace(&cdks, &masked)?;

    let mut m = RunManifest::new("undersample");
    m.input("image", &args.image)
        .input("mask", &args.mask)
        .note("sampling_ratio", sampling_ratio(&mask))
        .output("cdks", &cdks);
    m.write(&with_suffix(&args.out, ".manifest.txt"), start.elapsed().as_millis())?;

    println!("wrote {}", cdks.display());
    Ok(())
}

fn resolve_recon_config(
    config: Option<&Path>,
    args: &ReconstructArgs,
) -> Result<ReconConfig> {
    let mut cfg = match config {
        Some(path) => io::read_recon_config(path, &ReconConfig::default())?,
        None => ReconConfig::default(),
    };
    if let Some(v) = args.seed {
        cfg.cliques.seed = v;
    }
    if let Some(v) = args.lambda_u {
        cfg.energy.lambda_u = v;
    }
    if let Some(v) = args.lambda_p {
        cfg.energy.lambda_p = v;
    }
    if let Some(v) = args.sigma {
        cfg.energy.sigma = v;
    }
    if let Some(v) = args.gamma {
        cfg.cliques.gamma = v;
    }
    if let Some(v) = args.sigma_s {
        cfg.cliques.sigma_s = v;
    }
    if let Some(v) = args.sigma_d {
        cfg.cliques.sigma_d = v;
    }
    if let Some(v) = args.candidate_radius {
        cfg.cliques.candidate_radius = v;
    }
    if let Some(v) = args.mode {
        cfg.cliques.mode = match v {
            ModeArg::Stochastic => CliqueMode::Stochastic,
            ModeArg::Deterministic => CliqueMode::DeterministicThreshold,
        };
    }
    if let Some(v) = args.step_size {
        cfg.step_size = v;
    }
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = args.resample_every {
        cfg.resample_every = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn stop_reason_str(reason: StopReason) -> &'static str {
    match reason {
        StopReason::MaxIters => "max_iters",
        StopReason::EnergyTol => "energy_tol",
        StopReason::GradTol => "grad_tol",
    }
}

fn cmd_reconstruct(args: ReconstructArgs) -> Result<()> {
    let start = Instant::now();
    ensure_parent(&args.out)?;

    let kspace = io::read_kspace(&args.kspace)?;
    let mask = io::read_mask_pbm(&args.mask)?;
    let mut cfg = resolve_recon_config(args.config.as_deref(), &args)?;
    cfg.record_trace = args.trace;

    let result = reconstruct(&kspace, &mask, &cfg)?;

    let cdim = with_suffix(&args.out, ".cdim");
    let pgm = with_suffix(&args.out, ".pgm");
    io::write_image_raw(&cdim, &result.image)?;
    io::write_image_pgm16(&pgm, &result.image)?;

    let mut m = RunManifest::new("reconstruct");
    m.input("kspace", &args.kspace).input("mask", &args.mask);
    if let Some(path) = &args.config {
        m.input("config", path);
    }
    for line in io::recon_config_to_string(&cfg).lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            m.param(k, v);
        }
    }
    m.note("iterations_run", result.iterations_run)
        .note("stop_reason", stop_reason_str(result.stop_reason))
        .output("cdim", &cdim)
        .output("pgm", &pgm);

    if args.trace {
        let trace_path = with_suffix(&args.out, ".trace.csv");
        let mut csv = String::from("iteration,unary,pairwise,total,grad_norm\n");
        for row in &result.trace {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                row.iteration, row.energy.unary, row.energy.pairwise, row.energy.total, row.grad_norm
            ));
        }
        fs::write(&trace_path, csv)?;
        m.output("trace", &trace_path);
    }
    m.write(&with_suffix(&args.out, ".manifest.txt"), start.elapsed().as_millis())?;

    println!("iterations_run = {}", result.iterations_run);
    println!("stop_reason = {}", stop_reason_str(result.stop_reason));
    println!("wrote {}", cdim.display());
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    ensure_parent(&args.out)?;
    let truth = io::read_image_raw(&args.truth)?;
    let test = io::read_image_raw(&args.test)?;
    let report = QualityReport::compute(&truth, &test)?;
    fs::write(
        &args.out,
        format!("{}\n{}\n", QualityReport::csv_header(), report.csv_row()),
    )?;
    println!("psnr_db = {}", report.psnr_db);
    println!("ssim = {}", report.ssim);
    println!("rel_l2 = {}", report.rel_l2);
    Ok(())
}

struct SweepRow {
    ratio: f64,
    method: &'static str,
    report: Option<QualityReport>,
    status: String,
}

impl SweepRow {
    fn csv(&self) -> String {
        match &self.report {
            Some(r) => format!(
                "{},{},{},{},{},{}",
                self.ratio, self.method, r.psnr_db, r.ssim, r.rel_l2, self.status
            ),
            None => format!("{},{},,,,{}", self.ratio, self.method, self.status),
        }
    }
}

fn sweep_one_ratio(
    truth: &Image,
    ratio: f64,
    cfg: &ReconConfig,
    dir: &Path,
) -> Result<(QualityReport, QualityReport)> {
    fs::create_dir_all(dir)?;
    let (w, h) = (truth.width(), truth.height());
    let lines = lines_for_ratio(w, h, ratio)?;
    let mask = radial_mask(w, h, lines)?;
    io::write_mask_pbm(&dir.join("mask.pbm"), &mask)?;

    let masked = apply_mask(&dft2_forward(truth), &mask)?;
    io::write_kspace(&dir.join("masked.cdks"), &masked)?;

    let zf = zero_filled_recon(&masked);
    io::write_image_raw(&dir.join("zero_filled.cdim"), &zf)?;

    let result = reconstruct(&masked, &mask, cfg)?;
    io::write_image_raw(&dir.join("cd_sfcrf.cdim"), &result.image)?;
    io::write_image_pgm16(&dir.join("cd_sfcrf.pgm"), &result.image)?;

    Ok((
        QualityReport::compute(truth, &result.image)?,
        QualityReport::compute(truth, &zf)?,
    ))
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let start = Instant::now();
    fs::create_dir_all(&args.out_dir)?;

    let mut ratios = Vec::new();
    for token in args.ratios.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let r: f64 = token
            .parse()
            .map_err(|_| Error::Parameter(format!("bad ratio '{token}'")))?;
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Parameter(format!("ratio {r} outside (0, 1]")));
        }
        ratios.push(r);
    }
    if ratios.is_empty() {
        return Err(Error::Parameter("no ratios given".into()));
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ratios.dedup();

    let truth = io::read_image_raw(&args.image)?;
    let mut cfg = match &args.config {
        Some(path) => io::read_recon_config(path, &ReconConfig::default())?,
        None => ReconConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.cliques.seed = seed;
    }
    cfg.record_trace = false;

    let mut rows: Vec<SweepRow> = Vec::new();
    for &ratio in &ratios {
        let dir = args.out_dir.join(format!("ratio_{ratio:.4}"));
        match sweep_one_ratio(&truth, ratio, &cfg, &dir) {
            Ok((crf, zf)) => {
                rows.push(SweepRow {
                    ratio,
                    method: "cd_sfcrf",
                    report: Some(crf),
                    status: "ok".into(),
                });
                rows.push(SweepRow {
                    ratio,
                    method: "zero_filled",
                    report: Some(zf),
                    status: "ok".into(),
                });
            }
            Err(err) => {
                eprintln!("ratio {ratio}: {err}");
                for method in ["cd_sfcrf", "zero_filled"] {
                    rows.push(SweepRow {
                        ratio,
                        method,
                        report: None,
                        status: format!("error: {err}"),
                    });
                }
            }
        }
    }

    let table = args.out_dir.join("sweep.csv");
    let mut csv = String::from("ratio,method,psnr_db,ssim,rel_l2,status\n");
    for row in &rows {
        csv.push_str(&row.csv());
        csv.push('\n');
    }
    fs::write(&table, csv)?;

    let mut m = RunManifest::new("sweep");
    m.input("image", &args.image);
    if let Some(path) = &args.config {
        m.input("config", path);
    }
    m.param("ratios", ratios.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","))
        .param("seed", cfg.cliques.seed)
        .output("table", &table);
    m.write(&args.out_dir.join("sweep.manifest.txt"), start.elapsed().as_millis())?;

    println!("wrote {}", table.display());
    Ok(())
}
