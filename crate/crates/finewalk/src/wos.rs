//! Walk-on-spheres sampling of harmonic measure on a domain.
//!
//! A walker jumps to a uniform point on the largest sphere inscribed at its
//! position until it lands within `absorb_delta` of the boundary, then snaps
//! to the nearest boundary sphere. The absorbing shell is the one source of
//! bias; it is controlled empirically by rerunning with smaller deltas.
//!
//! Sampling is organized in fixed blocks of [`BLOCK_SIZE`] walks. Block `b`
//! draws from its own RNG stream addressed by (seed, b) and results are
//! reduced in ascending block order, so an estimate is bit-identical no
//! matter how many worker threads run.

use rayon::prelude::*;
use thiserror::Error;

use crate::domain::Domain;
use crate::geom::{axpy, format_point};
use crate::measure::{EmpiricalMeasure, MeasureError, Provenance};
use crate::rng::{stream_rng, unit_sphere_dir};
use crate::scalar::{lit, SampleScalar};

pub const BLOCK_SIZE: usize = 1024;

/// Truncated-walk share above which results carry a quality warning.
pub const TRUNCATION_WARN_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("start point ({point}) is only {dist} from the boundary, within absorb_delta {absorb_delta}")]
    StartTooClose {
        point: String,
        dist: String,
        absorb_delta: String,
    },
    #[error("bad walk config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Clone, Copy, Debug)]
pub struct WalkConfig<F> {
    /// Absorbing shell width; must be positive and below the smallest
    /// geometric feature of the domain for unbiased results.
    pub absorb_delta: F,
    /// Step cap per walk. Capped walks are flagged, never dropped.
    pub max_steps: u32,
    pub samples: usize,
    pub seed: u64,
}

impl<F: SampleScalar> WalkConfig<F>
{
    pub fn new(seed: u64) -> Self {
        WalkConfig {
            absorb_delta: lit(1e-3),
            max_steps: 10_000,
            samples: 10_000,
            seed,
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_absorb_delta(mut self, delta: F) -> Self {
        self.absorb_delta = delta;
        self
    }

    fn validate(&self) -> Result<(), WalkError> {
        if !(self.absorb_delta > F::zero()) || !self.absorb_delta.is_finite() {
            return Err(WalkError::BadConfig("absorb_delta must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(WalkError::BadConfig("max_steps must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(WalkError::BadConfig("samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// One absorbed walker.
#[derive(Clone, Debug)]
pub struct ExitSample<F> {
    /// Exit point, projected onto the boundary sphere set.
    pub point: Vec<F>,
    pub steps: u32,
    /// True when the step cap fired before absorption.
    pub truncated: bool,
}

fn check_start<F: SampleScalar>(
    domain: &Domain<F>,
    z: &[F],
    cfg: &WalkConfig<F>,
) -> Result<(), WalkError>
{
    cfg.validate()?;
    let d = domain.dist_to_boundary(z);
    if !(d > cfg.absorb_delta) {
        return Err(WalkError::StartTooClose {
            point: format_point(z),
            dist: format!("{d}"),
            absorb_delta: format!("{}", cfg.absorb_delta),
        });
    }
    Ok(())
}

fn walk_once<F: SampleScalar>(
    domain: &Domain<F>,
    z: &[F],
    cfg: &WalkConfig<F>,
    rng: &mut rand_chacha::ChaCha8Rng,
    dir: &mut [F],
) -> ExitSample<F>
{
    let mut x = z.to_vec();
    let mut steps = 0u32;
    let mut truncated = true;
    while steps < cfg.max_steps {
        let d = domain.dist_to_boundary(&x);
        if d <= cfg.absorb_delta {
            truncated = false;
            break;
        }
        unit_sphere_dir(rng, dir);
        let xc = x.clone();
        axpy(&mut x, &xc, d, dir);
        steps += 1;
    }
    domain.project_to_boundary(&mut x);
    ExitSample {
        point: x,
        steps,
        truncated,
    }
}

/// Runs a single walk on the given RNG stream. Deterministic in
/// (seed, stream_index).
pub fn sample_exit<F: SampleScalar>(
    domain: &Domain<F>,
    z: &[F],
    cfg: &WalkConfig<F>,
    stream_index: u64,
) -> Result<ExitSample<F>, WalkError>
{
    check_start(domain, z, cfg)?;
    let mut rng = stream_rng(cfg.seed, stream_index);
    let mut dir = vec![F::zero(); domain.dimension];
    Ok(walk_once(domain, z, cfg, &mut rng, &mut dir))
}

struct BlockResult<F> {
    points: Vec<Vec<F>>,
    truncated: usize,
}

/// Empirical harmonic measure estimate: `cfg.samples` exits with uniform
/// weights and barycenter `z`.
pub fn estimate_measure<F: SampleScalar>(
    domain: &Domain<F>,
    z: &[F],
    cfg: &WalkConfig<F>,
) -> Result<EmpiricalMeasure<F>, WalkError>
{
    check_start(domain, z, cfg)?;
    let blocks = cfg.samples.div_ceil(BLOCK_SIZE);
    let results: Vec<BlockResult<F>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(cfg.seed, b as u64);
            let mut dir = vec![F::zero(); domain.dimension];
            let count = BLOCK_SIZE.min(cfg.samples - b * BLOCK_SIZE);
            let mut points = Vec::with_capacity(count);
            let mut truncated = 0usize;
            for _ in 0..count {
                let exit = walk_once(domain, z, cfg, &mut rng, &mut dir);
                truncated += exit.truncated as usize;
                points.push(exit.point);
            }
            BlockResult { points, truncated }
        })
        .collect();

    let mut support = Vec::with_capacity(cfg.samples);
    let mut truncated = 0usize;
    for block in results {
        truncated += block.truncated;
        support.extend(block.points);
    }
    let truncation_fraction = truncated as f64 / cfg.samples as f64;

    let mut warnings = Vec::new();
    if cfg.absorb_delta >= domain.min_feature() {
        warnings.push(format!(
            "absorb_delta {} is not below the smallest domain feature {}",
            cfg.absorb_delta,
            domain.min_feature()
        ));
    }
    if truncation_fraction > TRUNCATION_WARN_FRACTION {
        warnings.push(format!(
            "{:.2}% of walks hit the step cap",
            truncation_fraction * 100.0
        ));
    }

    let provenance = Provenance {
        source: "walk_on_spheres".into(),
        seed: Some(cfg.seed),
        samples: cfg.samples,
        epsilon: domain.epsilon.to_f64(),
        absorb_delta: cfg.absorb_delta.to_f64(),
        truncation_fraction,
        scene_truncation: None,
        warnings,
    };
    let w = F::one() / lit(cfg.samples as f64);
    Ok(EmpiricalMeasure::new(
        support,
        vec![w; cfg.samples],
        z.to_vec(),
        provenance,
    )?)
}

/// Monte Carlo boundary integral: mean of `f` over exit samples plus its
/// standard error. Non-finite values of `f` at an exit are a hard error.
pub fn integrate_boundary<F: SampleScalar>(
    domain: &Domain<F>,
    z: &[F],
    id: &str,
    f: impl Fn(&[F]) -> F,
    cfg: &WalkConfig<F>,
) -> Result<(F, F), WalkError>
{
    let measure = estimate_measure(domain, z, cfg)?;
    Ok(measure.integrate_with_stderr(id, f)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::norm;
    use crate::scene::canonical;

    fn ball_domain(eps: f64) -> Domain<f64> {
        Domain::neighborhood(&canonical::unit_ball::<f64>(3), eps).unwrap()
    }

    #[test]
    fn exits_live_on_the_boundary() {
        let dom = ball_domain(0.05);
        let cfg = WalkConfig::new(9).with_samples(256);
        let mu = estimate_measure(&dom, &[0.3, -0.2, 0.1], &cfg).unwrap();
        for p in mu.support() {
            assert!((norm(p) - 1.05).abs() < 1e-12);
        }
    }

    #[test]
    fn estimates_are_bit_reproducible() {
        let dom = ball_domain(0.02);
        let cfg = WalkConfig::new(1234).with_samples(BLOCK_SIZE * 2 + 17);
        let a = estimate_measure(&dom, &[0.1, 0.0, 0.4], &cfg).unwrap();
        let b = estimate_measure(&dom, &[0.1, 0.0, 0.4], &cfg).unwrap();
        assert_eq!(a.support(), b.support());
        let one = sample_exit(&dom, &[0.1, 0.0, 0.4], &cfg, 5).unwrap();
        let two = sample_exit(&dom, &[0.1, 0.0, 0.4], &cfg, 5).unwrap();
        assert_eq!(one.point, two.point);
    }

    #[test]
    fn center_exit_law_reproduces_sphere_moments() {
        // From the center the first jump is already uniform on the sphere:
        // E[x_1] = 0 and E[x_1^2] = (1 + eps)^2 / 3.
        let dom = ball_domain(0.01);
        let cfg = WalkConfig::new(7).with_samples(20_000);
        let (m1, s1) =
            integrate_boundary(&dom, &[0.0; 3], "x1", |x| x[0], &cfg).unwrap();
        assert!(m1.abs() < 4.0 * s1 + 1e-3, "mean {m1} stderr {s1}");
        let (m2, s2) =
            integrate_boundary(&dom, &[0.0; 3], "x1sq", |x| x[0] * x[0], &cfg).unwrap();
        let want = 1.01_f64.powi(2) / 3.0;
        assert!((m2 - want).abs() < 4.0 * s2 + 1e-3, "mean {m2} want {want}");
    }

    #[test]
    fn newton_potential_from_center_is_exact_in_expectation() {
        // Average of -1/|x - p| over any sphere around the origin inside
        // |p| = 2 equals -1/2.
        let dom = ball_domain(0.01);
        let cfg = WalkConfig::new(21).with_samples(20_000);
        let p = [0.0, 0.0, 2.0];
        let (m, s) = integrate_boundary(
            &dom,
            &[0.0; 3],
            "newton",
            |x| {
                let d: f64 = x
                    .iter()
                    .zip(&p)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                -1.0 / d
            },
            &cfg,
        )
        .unwrap();
        assert!((m + 0.5).abs() < 4.0 * s + 1e-3, "mean {m}");
    }

    #[test]
    fn harmonic_reproduction_off_center() {
        let dom = ball_domain(0.01);
        let cfg = WalkConfig::new(3).with_samples(20_000).with_absorb_delta(1e-3);
        let (m, s) = integrate_boundary(&dom, &[0.5, 0.0, 0.0], "x1", |x| x[0], &cfg).unwrap();
        assert!((m - 0.5).abs() < 4.0 * s + 2e-3, "mean {m} stderr {s}");
    }

    #[test]
    fn step_cap_flags_but_keeps_walks() {
        let dom = ball_domain(0.05);
        let mut cfg = WalkConfig::new(2).with_samples(64);
        cfg.max_steps = 1;
        let mu = estimate_measure(&dom, &[0.5, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(mu.len(), 64);
        assert!(mu.provenance.truncation_fraction > TRUNCATION_WARN_FRACTION);
        assert!(!mu.provenance.warnings.is_empty());
    }

    #[test]
    fn start_inside_shell_is_rejected() {
        let dom = ball_domain(0.05);
        let cfg = WalkConfig::new(2);
        let err = estimate_measure(&dom, &[1.0495, 0.0, 0.0], &cfg);
        assert!(matches!(err, Err(WalkError::StartTooClose { .. })));
    }
}
