//! The reconstruction loop: initialize from the zero-filled spectrum, then
//! iterate (resample cliques, evaluate the cross-domain gradient, step)
//! until convergence.
//!
//! The observation image used by the pairwise term and the clique sampler is
//! frozen at the initial estimate, so each fixed-clique subproblem is a
//! well-defined objective. Clique resampling mixes the iteration index into
//! the RNG key, which keeps the whole run a pure function of
//! `(inputs, config)`.

use crate::energy::{total_energy, total_gradient, EnergyBreakdown, EnergyParams};
use crate::error::{Error, Result};
use crate::graph::{sample_cliques, CliqueSamplingConfig, CliqueSet};
use crate::metrics::psnr;
use crate::rng::derive_seed;
use crate::transform::{zero_filled_recon, Image, KSpace, SamplingMask};

/// Everything the reconstruction loop needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconConfig {
    pub energy: EnergyParams,
    pub cliques: CliqueSamplingConfig,
    /// Gradient step size, > 0.
    pub step_size: f64,
    pub max_iters: usize,
    /// Stop when the relative change of the total energy over a 3-iteration
    /// window falls below this.
    pub tol_rel_energy: f64,
    /// Stop when the gradient L2 norm falls below this.
    pub tol_grad_norm: f64,
    /// Resample cliques every this many iterations, >= 1. Set it above
    /// `max_iters` to sample once at the start and never again.
    pub resample_every: usize,
    pub record_trace: bool,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            energy: EnergyParams::default(),
            cliques: CliqueSamplingConfig::default(),
            step_size: 0.1,
            max_iters: 500,
            tol_rel_energy: 1e-6,
            tol_grad_norm: 1e-8,
            resample_every: 1,
            record_trace: false,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        self.cliques.validate()?;
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::Parameter(format!(
                "step_size = {} must be > 0",
                self.step_size
            )));
        }
        if !(self.tol_rel_energy >= 0.0) {
            return Err(Error::Parameter("tol_rel_energy must be >= 0".into()));
        }
        if !(self.tol_grad_norm >= 0.0) {
            return Err(Error::Parameter("tol_grad_norm must be >= 0".into()));
        }
        if self.resample_every < 1 {
            return Err(Error::Parameter("resample_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Which criterion ended the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    EnergyTol,
    GradTol,
}

/// One recorded iteration: energies and gradient norm at the pre-step
/// iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: EnergyBreakdown,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct ReconResult {
    pub image: Image,
    pub iterations_run: usize,
    pub stop_reason: StopReason,
    /// One row per performed iteration when recording was requested.
    pub trace: Vec<TraceRow>,
}

fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Reconstruct an image from masked k-space observations.
///
/// `max_iters = 0` returns the zero-filled initialization untouched. With
/// `lambda_p = 0` clique sampling is skipped entirely (the pairwise term
/// carries zero weight); the trace then reports a pairwise energy of 0.
pub fn reconstruct(
    x_masked: &KSpace,
    mask: &SamplingMask,
    cfg: &ReconConfig,
) -> Result<ReconResult> {
    cfg.validate()?;
    if x_masked.width() != mask.width() || x_masked.height() != mask.height() {
        return Err(Error::Dimension(format!(
            "k-space {}x{} vs mask {}x{}",
            x_masked.width(),
            x_masked.height(),
            mask.width(),
            mask.height()
        )));
    }

    let initial = zero_filled_recon(x_masked);
    let obs_spatial = initial.clone();
    let (w, h) = (initial.width(), initial.height());
    let skip_pairwise = cfg.energy.lambda_p == 0.0;

    let mut y = initial;
    let mut cliques = CliqueSet::empty(w, h, cfg.cliques.clone());
    let mut trace = Vec::new();
    let mut energies: Vec<f64> = Vec::with_capacity(cfg.max_iters.min(4096));

    for t in 0..cfg.max_iters {
        if !skip_pairwise && t % cfg.resample_every == 0 {
            let mut clique_cfg = cfg.cliques.clone();
            clique_cfg.seed = derive_seed(cfg.cliques.seed, t as u64);
            cliques = sample_cliques(&obs_spatial, &clique_cfg)?;
        }

        let bd = total_energy(&y, x_masked, mask, &obs_spatial, &cliques, &cfg.energy)?;
        if !bd.total.is_finite() {
            return Err(Error::Divergence { iteration: t });
        }
        energies.push(bd.total);

        let grad = total_gradient(&y, x_masked, mask, &obs_spatial, &cliques, &cfg.energy)?;
        let grad_norm = l2_norm(grad.as_slice());
        if !grad_norm.is_finite() {
            return Err(Error::Divergence { iteration: t });
        }

        if grad_norm < cfg.tol_grad_norm {
            return Ok(ReconResult {
                image: y,
                iterations_run: t,
                stop_reason: StopReason::GradTol,
                trace,
            });
        }
        if t >= 3 {
            let past = energies[t - 3];
            let rel = (past - bd.total).abs() / past.abs().max(f64::MIN_POSITIVE);
            if rel < cfg.tol_rel_energy {
                return Ok(ReconResult {
                    image: y,
                    iterations_run: t,
                    stop_reason: StopReason::EnergyTol,
                    trace,
                });
            }
        }

        if cfg.record_trace {
            trace.push(TraceRow { iteration: t, energy: bd, grad_norm });
        }

        let stepped: Vec<f64> = y
            .as_slice()
            .iter()
            .zip(grad.as_slice())
            .map(|(&v, &g)| v - cfg.step_size * g)
            .collect();
        y = Image::from_vec_unchecked(w, h, stepped);
    }

    Ok(ReconResult {
        image: y,
        iterations_run: cfg.max_iters,
        stop_reason: StopReason::MaxIters,
        trace,
    })
}

/// One grid-tune evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneCell {
    pub lambda_p: f64,
    pub step_size: f64,
    pub gamma: f64,
    pub psnr_db: f64,
}

/// Cartesian grid of tuning candidates over the pairwise weight, step size,
/// and sparsity factor. Every list must be non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneGrid {
    pub lambda_p: Vec<f64>,
    pub step_size: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// Exhaustively score the grid by PSNR against the known truth.
///
/// Ties break toward lower `lambda_p`, then lower step size, then
/// declaration order. Returns the winning config and every cell's score.
pub fn grid_tune(
    x_masked: &KSpace,
    mask: &SamplingMask,
    truth: &Image,
    base: &ReconConfig,
    grid: &TuneGrid,
) -> Result<(ReconConfig, Vec<TuneCell>)> {
    if grid.lambda_p.is_empty() || grid.step_size.is_empty() || grid.gamma.is_empty() {
        return Err(Error::Parameter("tuning grid must be non-empty".into()));
    }
    let mut cells = Vec::new();
    let mut best: Option<(TuneCell, ReconConfig)> = None;
    for &lambda_p in &grid.lambda_p {
        for &step_size in &grid.step_size {
            for &gamma in &grid.gamma {
                let mut cfg = base.clone();
                cfg.energy.lambda_p = lambda_p;
                cfg.step_size = step_size;
                cfg.cliques.gamma = gamma;
                cfg.record_trace = false;
                let result = reconstruct(x_masked, mask, &cfg)?;
                let score = psnr(truth, &result.image, 1.0)?;
                let cell = TuneCell { lambda_p, step_size, gamma, psnr_db: score };
                let better = match &best {
                    None => true,
                    Some((b, _)) => {
                        score > b.psnr_db
                            || (score == b.psnr_db
                                && (lambda_p < b.lambda_p
                                    || (lambda_p == b.lambda_p && step_size < b.step_size)))
                    }
                };
                if better {
                    best = Some((cell, cfg));
                }
                cells.push(cell);
            }
        }
    }
    Ok((best.expect("non-empty grid").1, cells))
}
