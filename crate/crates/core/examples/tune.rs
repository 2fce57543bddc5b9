// Scratch parameter sweep used during development.

use cdsfcrf::energy::EnergyParams;
use cdsfcrf::graph::{CliqueMode, CliqueSamplingConfig};
use cdsfcrf::metrics::{psnr, ssim};
use cdsfcrf::optimizer::{reconstruct, ReconConfig};
use cdsfcrf::phantom::{default_prostate_spec, generate_phantom};
use cdsfcrf::transform::{apply_mask, dft2_forward, lines_for_ratio, radial_mask};
use std::time::Instant;

fn run_case(n: usize, ratio: f64, cfg: &ReconConfig, label: &str) {
    let spec = default_prostate_spec(n, n, 0).unwrap();
    let truth = generate_phantom(&spec).unwrap();
    let lines = lines_for_ratio(n, n, ratio).unwrap();
    let mask = radial_mask(n, n, lines).unwrap();
    let masked = apply_mask(&dft2_forward(&truth), &mask).unwrap();

    let zf = cdsfcrf::transform::zero_filled_recon(&masked);
    let zf_psnr = psnr(&truth, &zf, 1.0).unwrap();
    let zf_ssim = ssim(&truth, &zf, 7, 1.0).unwrap();

    let t0 = Instant::now();
    match reconstruct(&masked, &mask, cfg) {
        Ok(out) => {
            let p = psnr(&truth, &out.image, 1.0).unwrap();
            let s = ssim(&truth, &out.image, 7, 1.0).unwrap();
            println!(
                "{label} n={n} ratio={ratio}: psnr {p:.3} (zf {zf_psnr:.3}, gain {:+.3}) ssim {s:.4} (zf {zf_ssim:.4}) iters {} in {:.1}s",
                p - zf_psnr,
                out.iterations_run,
                t0.elapsed().as_secs_f64()
            );
        }
        Err(e) => println!("{label} n={n} ratio={ratio}: DIVERGED {e}"),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("validate");

    if which == "refine" {
        // Fine sweep around the stochastic optimum at 64x64 / 0.32.
        let n = 64;
        let ratio = 0.32;
        let spec = default_prostate_spec(n, n, 0).unwrap();
        let truth = generate_phantom(&spec).unwrap();
        let lines = lines_for_ratio(n, n, ratio).unwrap();
        let mask = radial_mask(n, n, lines).unwrap();
        let masked = apply_mask(&dft2_forward(&truth), &mask).unwrap();
        let zf_psnr = psnr(&truth, &cdsfcrf::transform::zero_filled_recon(&masked), 1.0).unwrap();
        println!("# zf {zf_psnr:.3}");
        let mut best = (f64::NEG_INFINITY, String::new());
        for &lambda_p in &[0.5, 1.0, 2.0] {
            for &sigma in &[0.1, 0.15, 0.2, 0.3] {
                for &gamma in &[0.4, 0.6, 0.8] {
                    for &sigma_d in &[0.03, 0.05, 0.08] {
                        let cfg = ReconConfig {
                            energy: EnergyParams { lambda_u: 1.0, lambda_p, sigma },
                            cliques: CliqueSamplingConfig {
                                gamma,
                                sigma_s: 1.5,
                                sigma_d,
                                mode: CliqueMode::Stochastic,
                                candidate_radius: 9.0,
                                seed: 0,
                            },
                            step_size: 0.1,
                            max_iters: 500,
                            tol_rel_energy: 1e-6,
                            tol_grad_norm: 1e-8,
                            resample_every: 1,
                            record_trace: false,
                        };
                        if let Ok(out) = reconstruct(&masked, &mask, &cfg) {
                            let p = psnr(&truth, &out.image, 1.0).unwrap();
                            let s = ssim(&truth, &out.image, 7, 1.0).unwrap();
                            let line = format!(
                                "{lambda_p},{sigma},{gamma},{sigma_d} -> {p:.3} ssim {s:.4} it {}",
                                out.iterations_run
                            );
                            println!("{line}");
                            if p > best.0 {
                                best = (p, line);
                            }
                        }
                    }
                }
            }
        }
        println!("# best: {}", best.1);
        return;
    }

    // Validate a candidate default across sizes and ratios.
    let cfg = ReconConfig::default();
    println!(
        "# defaults: lambda_p {} sigma {} gamma {} sigma_d {} mode {:?}",
        cfg.energy.lambda_p, cfg.energy.sigma, cfg.cliques.gamma, cfg.cliques.sigma_d, cfg.cliques.mode
    );
    for &ratio in &[0.1, 0.2, 0.32, 0.5] {
        run_case(128, ratio, &cfg, "default");
    }
    run_case(64, 0.32, &cfg, "default");
}
