//! Stochastic clique sampling.
//!
//! Every node is nominally connected to every other node; the active
//! pairwise cliques for one inference pass are drawn from a distribution
//! combining spatial proximity and data similarity. A pair `(i, j)` is
//! active when
//!
//! ```text
//! deterministic-threshold mode:  Ps(i,j) * Qd(i,j) >= gamma
//! stochastic mode:               U(i,j) * gamma <= Ps(i,j) * Qd(i,j)
//! ```
//!
//! with `Ps` a Gaussian kernel in pixel distance, `Qd` a Gaussian kernel in
//! intensity difference, and `U(i,j)` a uniform variate keyed on
//! `(seed, i, j)`. Keyed draws make the realization independent of the
//! enumeration order, and shrinking `gamma` can only grow the active set,
//! so the two modes nest: stochastic sampling with `U` pinned to 1 is
//! exactly the deterministic threshold.

use crate::error::{Error, Result};
use crate::rng::pair_uniform;
use crate::transform::Image;

/// How the stochastic indicator resolves a candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliqueMode {
    /// Literal threshold: active iff `Ps * Qd >= gamma`.
    DeterministicThreshold,
    /// Seeded uniform draw per pair: active iff `U * gamma <= Ps * Qd`.
    Stochastic,
}

/// Parameters of the clique distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueSamplingConfig {
    /// Sparsity factor; larger means fewer active cliques.
    pub gamma: f64,
    /// Spatial kernel scale in pixels.
    pub sigma_s: f64,
    /// Data kernel scale in intensity units.
    pub sigma_d: f64,
    pub mode: CliqueMode,
    /// Candidate cutoff distance in pixels; `0` means unbounded (the full
    /// `n - 1` candidate set). The spatial kernel at `6 * sigma_s` is below
    /// 1.6e-8, so the default cutoff loses nothing measurable.
    pub candidate_radius: f64,
    pub seed: u64,
}

impl Default for CliqueSamplingConfig {
    fn default() -> Self {
        let sigma_s = 1.5;
        CliqueSamplingConfig {
            gamma: 0.4,
            sigma_s,
            sigma_d: 0.25,
            mode: CliqueMode::Stochastic,
            candidate_radius: (6.0 * sigma_s).ceil(),
            seed: 0,
        }
    }
}

impl CliqueSamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_s > 0.0) || !self.sigma_s.is_finite() {
            return Err(Error::Parameter(format!("sigma_s = {} must be > 0", self.sigma_s)));
        }
        if !(self.sigma_d > 0.0) || !self.sigma_d.is_finite() {
            return Err(Error::Parameter(format!("sigma_d = {} must be > 0", self.sigma_d)));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::Parameter(format!("gamma = {} must be >= 0", self.gamma)));
        }
        if !(self.candidate_radius >= 0.0) || !self.candidate_radius.is_finite() {
            return Err(Error::Parameter(format!(
                "candidate_radius = {} must be >= 0",
                self.candidate_radius
            )));
        }
        Ok(())
    }
}

/// Realized clique structure: per-node adjacency plus the configuration that
/// generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueSet {
    width: usize,
    height: usize,
    neighbors: Vec<Vec<u32>>,
    num_pairs: usize,
    config: CliqueSamplingConfig,
}

impl CliqueSet {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_nodes(&self) -> usize {
        self.width * self.height
    }

    /// Number of active unordered pairs.
    pub fn num_pairs(&self) -> usize {
        self.num_pairs
    }

    /// Partners of node `i`, ascending.
    pub fn neighbors_of(&self, i: usize) -> &[u32] {
        &self.neighbors[i]
    }

    pub fn contains_pair(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&(j as u32)).is_ok()
    }

    /// Generation parameters (seed, mode, kernels, cutoff).
    pub fn config(&self) -> &CliqueSamplingConfig {
        &self.config
    }

    /// Iterate active pairs once each, as `(i, j)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(i, adj)| {
            adj.iter()
                .filter(move |&&j| (j as usize) > i)
                .map(move |&j| (i, j as usize))
        })
    }

    /// Debug dump: one `i j` line per active pair, ascending. For
    /// small-instance oracle comparison only.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.pairs() {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }

    /// Empty clique set over the given grid (no active pairs).
    pub(crate) fn empty(width: usize, height: usize, config: CliqueSamplingConfig) -> Self {
        CliqueSet {
            width,
            height,
            neighbors: vec![Vec::new(); width * height],
            num_pairs: 0,
            config,
        }
    }
}

/// Spatial kernel `Ps`: Gaussian in Euclidean pixel distance.
///
/// `dims` is `(width, height)` of the grid the node indices refer to.
pub fn spatial_affinity(i: usize, j: usize, sigma_s: f64, dims: (usize, usize)) -> Result<f64> {
    let (w, h) = dims;
    let n = w * h;
    if i >= n || j >= n {
        return Err(Error::Dimension(format!("node index out of range ({i}, {j}) on {w}x{h}")));
    }
    if i == j {
        return Err(Error::Domain("self-pairs are excluded from the neighborhood".into()));
    }
    if !(sigma_s > 0.0) {
        return Err(Error::Parameter(format!("sigma_s = {sigma_s} must be > 0")));
    }
    let (xi, yi) = ((i % w) as f64, (i / w) as f64);
    let (xj, yj) = ((j % w) as f64, (j / w) as f64);
    let d2 = (xi - xj).powi(2) + (yi - yj).powi(2);
    Ok((-d2 / (2.0 * sigma_s * sigma_s)).exp())
}

/// Data kernel `Qd`: Gaussian in intensity difference; 1 exactly when the
/// intensities agree.
pub fn data_affinity(v_i: f64, v_j: f64, sigma_d: f64) -> f64 {
    debug_assert!(v_i.is_finite() && v_j.is_finite());
    debug_assert!(sigma_d > 0.0);
    let d = v_i - v_j;
    (-(d * d) / (2.0 * sigma_d * sigma_d)).exp()
}

/// Walk candidate pairs `(i, j)`, `i < j`, within the cutoff radius and feed
/// each to `visit` along with its precomputed `Ps`.
///
/// `radius = 0` walks all pairs. Enumeration order is fixed (row-major half
/// neighborhood) but nothing downstream depends on it.
fn for_each_candidate(
    width: usize,
    height: usize,
    sigma_s: f64,
    radius: f64,
    mut visit: impl FnMut(usize, usize, f64),
) {
    let inv = 1.0 / (2.0 * sigma_s * sigma_s);
    if radius == 0.0 {
        let n = width * height;
        for i in 0..n {
            let (xi, yi) = ((i % width) as f64, (i / width) as f64);
            for j in (i + 1)..n {
                let (xj, yj) = ((j % width) as f64, (j / width) as f64);
                let d2 = (xi - xj).powi(2) + (yi - yj).powi(2);
                visit(i, j, (-d2 * inv).exp());
            }
        }
        return;
    }

    let r = radius.floor() as i64;
    let r2 = radius * radius;
    // Spatial kernel by integer squared distance, computed once.
    let max_d2 = (2 * r * r) as usize;
    let table: Vec<f64> = (0..=max_d2).map(|d2| (-(d2 as f64) * inv).exp()).collect();

    for yi in 0..height as i64 {
        for xi in 0..width as i64 {
            let i = (yi * width as i64 + xi) as usize;
            for dy in 0..=r {
                let yj = yi + dy;
                if yj >= height as i64 {
                    break;
                }
                // Half neighborhood: (dy, dx) lexicographically positive.
                let dx_lo = if dy == 0 { 1 } else { -r };
                for dx in dx_lo..=r {
                    let xj = xi + dx;
                    if xj < 0 || xj >= width as i64 {
                        continue;
                    }
                    let d2 = (dx * dx + dy * dy) as f64;
                    if d2 > r2 {
                        continue;
                    }
                    let j = (yj * width as i64 + xj) as usize;
                    visit(i, j, table[(dx * dx + dy * dy) as usize]);
                }
            }
        }
    }
}

fn sample_cliques_with(
    obs_spatial: &Image,
    cfg: &CliqueSamplingConfig,
    draw: impl Fn(usize, usize) -> f64,
) -> CliqueSet {
    let (w, h) = (obs_spatial.width(), obs_spatial.height());
    let values = obs_spatial.as_slice();
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); w * h];
    let mut num_pairs = 0usize;
    let inv_d = 1.0 / (2.0 * cfg.sigma_d * cfg.sigma_d);
    let gamma = cfg.gamma;

    for_each_candidate(w, h, cfg.sigma_s, cfg.candidate_radius, |i, j, ps| {
        let bar = draw(i, j) * gamma;
        // Qd <= 1, so a pair whose spatial kernel already misses the bar
        // cannot activate; skip the exp.
        if bar > ps {
            return;
        }
        let dv = values[i] - values[j];
        let qd = (-(dv * dv) * inv_d).exp();
        if bar <= ps * qd {
            neighbors[i].push(j as u32);
            neighbors[j].push(i as u32);
            num_pairs += 1;
        }
    });

    CliqueSet { width: w, height: h, neighbors, num_pairs, config: cfg.clone() }
}

/// Draw the active clique set for one inference pass.
///
/// `obs_spatial` is the spatial-domain representation of the measurements
/// (the zero-filled reconstruction); the data kernel reads intensities from
/// it, not from the evolving estimate.
pub fn sample_cliques(obs_spatial: &Image, cfg: &CliqueSamplingConfig) -> Result<CliqueSet> {
    cfg.validate()?;
    match cfg.mode {
        CliqueMode::Stochastic => {
            let seed = cfg.seed;
            Ok(sample_cliques_with(obs_spatial, cfg, move |i, j| {
                pair_uniform(seed, i as u32, j as u32)
            }))
        }
        CliqueMode::DeterministicThreshold => {
            Ok(sample_cliques_with(obs_spatial, cfg, |_, _| 1.0))
        }
    }
}

/// Expected mean node degree under the configured distribution.
///
/// Stochastic mode: mean over nodes of the summed activation probabilities
/// `min(1, Ps * Qd / gamma)` (`gamma = 0` reports the full candidate
/// degree). Deterministic mode: the realized mean degree of the threshold
/// set. A diagnostic for tuning `gamma`.
pub fn expected_degree(cfg: &CliqueSamplingConfig, obs_spatial: &Image) -> Result<f64> {
    cfg.validate()?;
    let (w, h) = (obs_spatial.width(), obs_spatial.height());
    let values = obs_spatial.as_slice();
    let inv_d = 1.0 / (2.0 * cfg.sigma_d * cfg.sigma_d);
    let mut sum = 0.0;
    for_each_candidate(w, h, cfg.sigma_s, cfg.candidate_radius, |i, j, ps| {
        let dv = values[i] - values[j];
        let qd = (-(dv * dv) * inv_d).exp();
        let pq = ps * qd;
        let p = match cfg.mode {
            CliqueMode::Stochastic => {
                if cfg.gamma == 0.0 {
                    1.0
                } else {
                    (pq / cfg.gamma).min(1.0)
                }
            }
            CliqueMode::DeterministicThreshold => {
                if pq >= cfg.gamma {
                    1.0
                } else {
                    0.0
                }
            }
        };
        // Each active pair contributes one degree at both endpoints.
        sum += 2.0 * p;
    });
    Ok(sum / (w * h) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = SplitMix64::new(seed);
        Image::from_fn(w, h, |_, _| rng.next_f64()).unwrap()
    }

    fn cfg(gamma: f64, mode: CliqueMode) -> CliqueSamplingConfig {
        CliqueSamplingConfig {
            gamma,
            sigma_s: 1.0,
            sigma_d: 0.3,
            mode,
            candidate_radius: 0.0,
            seed: 77,
        }
    }

    #[test]
    fn spatial_affinity_adjacent_pixels() {
        // d = 1, sigma_s = 1 -> exp(-1/2)
        let p = spatial_affinity(0, 1, 1.0, (8, 8)).unwrap();
        assert!((p - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn spatial_affinity_decays_with_distance() {
        let mut prev = 1.0;
        for d in 1..8usize {
            let p = spatial_affinity(0, d, 1.0, (8, 8)).unwrap();
            assert!(p < prev && p > 0.0);
            prev = p;
        }
    }

    #[test]
    fn spatial_affinity_symmetry_oracle() {
        let mut rng = SplitMix64::new(9);
        let dims = (13, 11);
        let n = dims.0 * dims.1;
        for _ in 0..100 {
            let i = (rng.next_u64() as usize) % n;
            let mut j = (rng.next_u64() as usize) % n;
            if i == j {
                j = (j + 1) % n;
            }
            let a = spatial_affinity(i, j, 1.7, dims).unwrap();
            let b = spatial_affinity(j, i, 1.7, dims).unwrap();
            assert_eq!(a, b);
            // Recompute from coordinates as an independent check.
            let (xi, yi) = ((i % dims.0) as f64, (i / dims.0) as f64);
            let (xj, yj) = ((j % dims.0) as f64, (j / dims.0) as f64);
            let d2 = (xi - xj).powi(2) + (yi - yj).powi(2);
            assert!((a - (-d2 / (2.0 * 1.7 * 1.7)).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn spatial_affinity_rejects_self_pairs() {
        assert!(matches!(
            spatial_affinity(5, 5, 1.0, (8, 8)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            spatial_affinity(0, 64, 1.0, (8, 8)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn data_affinity_cases() {
        assert_eq!(data_affinity(0.4, 0.4, 0.2), 1.0);
        let s = 0.31;
        assert!((data_affinity(0.5, 0.5 + s, s) - (-0.5f64).exp()).abs() < 1e-15);
        // Monotone decreasing over a grid sweep.
        let mut prev = 1.0;
        for k in 1..20 {
            let q = data_affinity(0.0, k as f64 * 0.05, 0.3);
            assert!(q < prev);
            prev = q;
        }
    }

    #[test]
    fn gamma_zero_activates_every_candidate() {
        let img = random_image(6, 6, 1);
        for mode in [CliqueMode::Stochastic, CliqueMode::DeterministicThreshold] {
            let cs = sample_cliques(&img, &cfg(0.0, mode)).unwrap();
            assert_eq!(cs.num_pairs(), 36 * 35 / 2);
        }
    }

    #[test]
    fn gamma_above_one_empties_deterministic_mode() {
        let img = random_image(6, 6, 2);
        let cs = sample_cliques(&img, &cfg(1.0 + 1e-9, CliqueMode::DeterministicThreshold)).unwrap();
        assert_eq!(cs.num_pairs(), 0);
    }

    #[test]
    fn constant_image_threshold_matches_four_neighborhood() {
        // Qd = 1 everywhere; gamma = exp(-1/2) keeps exactly d <= 1, i.e.
        // the 4-neighborhood. Verified against brute-force enumeration of
        // all 2016 pairs of an 8x8 grid.
        let img = Image::from_fn(8, 8, |_, _| 0.5).unwrap();
        let c = CliqueSamplingConfig {
            gamma: (-0.5f64).exp(),
            sigma_s: 1.0,
            sigma_d: 0.3,
            mode: CliqueMode::DeterministicThreshold,
            candidate_radius: 0.0,
            seed: 0,
        };
        let cs = sample_cliques(&img, &c).unwrap();
        let mut expected = 0;
        for i in 0..64usize {
            for j in (i + 1)..64usize {
                let (xi, yi) = (i % 8, i / 8);
                let (xj, yj) = (j % 8, j / 8);
                let d2 = xi.abs_diff(xj).pow(2) + yi.abs_diff(yj).pow(2);
                let adjacent = d2 == 1;
                assert_eq!(
                    cs.contains_pair(i, j),
                    adjacent,
                    "pair ({i},{j}) d2={d2}"
                );
                expected += usize::from(adjacent);
            }
        }
        assert_eq!(cs.num_pairs(), expected);
        assert_eq!(expected, 2 * 8 * 7); // horizontal + vertical edges
    }

    #[test]
    fn stochastic_mode_is_seed_deterministic() {
        let img = random_image(16, 16, 3);
        let c = cfg(0.5, CliqueMode::Stochastic);
        let a = sample_cliques(&img, &c).unwrap();
        let b = sample_cliques(&img, &c).unwrap();
        assert_eq!(a, b);
        let mut c2 = c.clone();
        c2.seed = 78;
        let d = sample_cliques(&img, &c2).unwrap();
        assert_ne!(a.dump(), d.dump());
    }

    #[test]
    fn no_self_cliques_and_symmetric() {
        let img = random_image(10, 10, 4);
        let cs = sample_cliques(&img, &cfg(0.3, CliqueMode::Stochastic)).unwrap();
        for i in 0..cs.num_nodes() {
            for &j in cs.neighbors_of(i) {
                assert_ne!(i, j as usize);
                assert!(cs.contains_pair(j as usize, i));
            }
        }
    }

    #[test]
    fn active_set_shrinks_as_gamma_grows() {
        let img = random_image(9, 9, 5);
        for mode in [CliqueMode::Stochastic, CliqueMode::DeterministicThreshold] {
            let mut prev: Option<CliqueSet> = None;
            for &g in &[0.0, 0.1, 0.3, 0.6, 1.0, 1.5] {
                let cs = sample_cliques(&img, &cfg(g, mode)).unwrap();
                if let Some(bigger) = &prev {
                    for (i, j) in cs.pairs() {
                        assert!(
                            bigger.contains_pair(i, j),
                            "pair ({i},{j}) active at gamma={g} but not below"
                        );
                    }
                    assert!(cs.num_pairs() <= bigger.num_pairs());
                }
                prev = Some(cs);
            }
        }
    }

    #[test]
    fn stochastic_with_unit_draw_equals_threshold_mode() {
        let img = random_image(8, 8, 6);
        let c = cfg(0.45, CliqueMode::Stochastic);
        let pinned = sample_cliques_with(&img, &c, |_, _| 1.0);
        let det = sample_cliques(
            &img,
            &CliqueSamplingConfig { mode: CliqueMode::DeterministicThreshold, ..c },
        )
        .unwrap();
        assert_eq!(pinned.dump(), det.dump());
    }

    #[test]
    fn candidate_radius_limits_distance() {
        let img = random_image(12, 12, 7);
        let c = CliqueSamplingConfig {
            gamma: 0.0,
            sigma_s: 1.0,
            sigma_d: 0.3,
            mode: CliqueMode::Stochastic,
            candidate_radius: 2.0,
            seed: 1,
        };
        let cs = sample_cliques(&img, &c).unwrap();
        for (i, j) in cs.pairs() {
            let (xi, yi) = (i % 12, i / 12);
            let (xj, yj) = (j % 12, j / 12);
            let d2 = xi.abs_diff(xj).pow(2) + yi.abs_diff(yj).pow(2);
            assert!(d2 as f64 <= 4.0);
        }
        // gamma = 0 with a radius: every in-radius pair is active.
        let mut count = 0;
        for i in 0..144usize {
            for j in (i + 1)..144 {
                let (xi, yi) = (i % 12, i / 12);
                let (xj, yj) = (j % 12, j / 12);
                let d2 = xi.abs_diff(xj).pow(2) + yi.abs_diff(yj).pow(2);
                if d2 as f64 <= 4.0 {
                    count += 1;
                    assert!(cs.contains_pair(i, j));
                }
            }
        }
        assert_eq!(cs.num_pairs(), count);
    }

    #[test]
    fn expected_degree_gamma_zero_is_candidate_degree() {
        let img = random_image(8, 8, 8);
        let mut c = cfg(0.0, CliqueMode::Stochastic);
        let d = expected_degree(&c, &img).unwrap();
        assert!((d - 63.0).abs() < 1e-12, "full candidate degree on 8x8: {d}");
        c.candidate_radius = 1.0;
        let d4 = expected_degree(&c, &img).unwrap();
        // Interior nodes have 4 candidates; borders fewer.
        assert!(d4 < 4.0 && d4 > 3.0, "{d4}");
    }

    #[test]
    fn expected_degree_uniform_on_constant_image_interior() {
        let img = Image::from_fn(9, 9, |_, _| 0.2).unwrap();
        let c = CliqueSamplingConfig {
            gamma: 0.2,
            sigma_s: 1.0,
            sigma_d: 0.3,
            mode: CliqueMode::DeterministicThreshold,
            candidate_radius: 3.0,
            seed: 0,
        };
        let cs = sample_cliques(&img, &c).unwrap();
        // Translation invariance away from borders: all interior nodes see
        // the same realized degree.
        let interior_degree = cs.neighbors_of(4 * 9 + 4).len();
        for y in 3..6 {
            for x in 3..6 {
                assert_eq!(cs.neighbors_of(y * 9 + x).len(), interior_degree);
            }
        }
    }

    #[test]
    fn expected_degree_matches_monte_carlo() {
        let img = random_image(16, 16, 9);
        let c = CliqueSamplingConfig {
            gamma: 0.5,
            sigma_s: 1.0,
            sigma_d: 0.3,
            mode: CliqueMode::Stochastic,
            candidate_radius: 0.0,
            seed: 0,
        };
        let formula = expected_degree(&c, &img).unwrap();

        // Monte-Carlo oracle: precompute Ps*Qd per pair independently, then
        // resample the indicator 10^4 times.
        let n = 256usize;
        let mut pq = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let ps = spatial_affinity(i, j, c.sigma_s, (16, 16)).unwrap();
                let qd = data_affinity(img.as_slice()[i], img.as_slice()[j], c.sigma_d);
                pq.push((i as u32, j as u32, ps * qd));
            }
        }
        let resamples = 10_000usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for t in 0..resamples {
            let seed = crate::rng::derive_seed(1234, t as u64);
            let mut active = 0usize;
            for &(i, j, v) in &pq {
                if pair_uniform(seed, i, j) * c.gamma <= v {
                    active += 1;
                }
            }
            let deg = 2.0 * active as f64 / n as f64;
            let delta = deg - mean;
            mean += delta / (t + 1) as f64;
            m2 += delta * (deg - mean);
        }
        let std_of_mean = (m2 / (resamples - 1) as f64 / resamples as f64).sqrt();
        assert!(
            (formula - mean).abs() <= 3.0 * std_of_mean,
            "formula {formula} vs MC {mean} +- {std_of_mean}"
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let img = random_image(4, 4, 0);
        let mut c = cfg(0.5, CliqueMode::Stochastic);
        c.sigma_s = 0.0;
        assert!(sample_cliques(&img, &c).is_err());
        c.sigma_s = 1.0;
        c.sigma_d = -1.0;
        assert!(sample_cliques(&img, &c).is_err());
        c.sigma_d = 0.3;
        c.gamma = f64::NAN;
        assert!(sample_cliques(&img, &c).is_err());
    }
}
