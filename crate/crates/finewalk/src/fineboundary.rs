//! Fine-topology boundary tests for ball-complement scenes.
//!
//! The local thinness series at a boundary point z sums, over dyadic scales
//! delta_k = 2^-k, the scaled capacity of the complement piece inside
//! B(z, delta_k). Capacities of ball unions are not computed exactly; every
//! term is bracketed between an inscribed-ball lower bound and a
//! subadditive upper bound, and every verdict is derived from the bracket
//! side that supports it:
//!
//! - divergence (z sticks to the complement finely, a fine boundary point)
//!   is claimed from the LOWER partial sum;
//! - convergence (complement thin at z, z finely interior) is claimed from
//!   a geometric tail bound on the UPPER terms.
//!
//! The complement of a scene is an outer-ball exterior plus finitely many
//! reported holes plus, for generator scenes, the infinite generated tail;
//! the tail is materialized far past the requested depth so that omitted
//! balls sit below resolution of every retained term.

use serde::Serialize;
use thiserror::Error;

use crate::domain::{Domain, DomainError};
use crate::geom::{dist, norm, Ball};
use crate::rng::seed_mix;
use crate::scalar::{lit, SampleScalar, Scalar};
use crate::scene::{BallScene, PointClass};
use crate::wos::{estimate_measure, WalkConfig, WalkError};

/// Generated balls are materialized to `depth + GENERATOR_MARGIN` indices.
/// For radius bases >= 2 the omitted tail is below 2^-60 of the smallest
/// retained term.
const GENERATOR_MARGIN: usize = 60;

#[derive(Debug, Error)]
pub enum FineError {
    #[error("thinness series needs ambient dimension >= 3, got {0}")]
    DimensionUnsupported(usize),
    #[error("series depth must be at least 4, got {0}")]
    DepthTooSmall(u32),
    #[error("point ({0}) is not on the boundary of the scene")]
    NotBoundary(String),
    #[error("{0}")]
    BadInput(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WienerTerm<F> {
    pub level: u32,
    pub lower: F,
    pub upper: F,
}

#[derive(Clone, Debug, Serialize)]
pub struct WienerSeries<F> {
    pub point: Vec<F>,
    pub terms: Vec<WienerTerm<F>>,
    pub lower_sum: F,
    pub upper_sum: F,
}

/// Decision thresholds for [`classify_fine`]. Finite-depth partial sums
/// cannot prove divergence; `divergence_sum` is calibrated so that every
/// divergent canonical scene clears it at least 2.5x while the convergent
/// ones stay at least 2x below.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FinePolicy {
    pub depth: u32,
    /// Lower partial sums above this are ruled divergent.
    pub divergence_sum: f64,
    /// Geometric tail bounds below this are ruled convergent.
    pub tail_bound: f64,
    /// Trailing terms inspected for the tail ratio.
    pub tail_window: usize,
    /// Term ratios at or above this defeat the geometric tail bound.
    pub ratio_cap: f64,
}

impl Default for FinePolicy {
    fn default() -> Self {
        FinePolicy {
            depth: 20,
            divergence_sum: 1.0,
            tail_bound: 1e-3,
            tail_window: 5,
            ratio_cap: 0.95,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FineClass {
    /// The complement is non-thin at z: a fine boundary point.
    FineBoundary,
    /// The complement is thin at z: z is finely interior despite lying on
    /// the metric boundary.
    FinelyInterior,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize)]
pub struct FineReport<F> {
    pub series: WienerSeries<F>,
    /// Geometric bound on the upper-series tail, when one exists.
    pub tail: Option<F>,
    pub verdict: FineClass,
    pub reason: String,
}

fn complement_balls<F: Scalar>(scene: &BallScene<F>, depth: u32) -> Vec<Ball<F>> {
    let mut balls = scene.deleted.clone();
    if let Some(g) = &scene.generator {
        for m in g.start..g.start + depth as usize + GENERATOR_MARGIN {
            balls.push(g.ball(scene.dimension, m));
        }
    }
    balls
}

/// Bracketed thinness series for the scene complement at boundary point z.
pub fn wiener_series<F: Scalar>(
    scene: &BallScene<F>,
    z: &[F],
    depth: u32,
) -> Result<WienerSeries<F>, FineError> {
    let n = scene.dimension;
    if n < 3 {
        return Err(FineError::DimensionUnsupported(n));
    }
    if depth < 4 {
        return Err(FineError::DepthTooSmall(depth));
    }
    if z.len() != n {
        return Err(FineError::BadInput(format!(
            "point has dimension {}, scene has {}",
            z.len(),
            n
        )));
    }
    if scene.classify(z) != PointClass::Boundary {
        return Err(FineError::NotBoundary(crate::geom::format_point(z)));
    }

    let balls = complement_balls(scene, depth);
    let hole_dists: Vec<F> = balls.iter().map(|b| dist(z, &b.center)).collect();
    let outer_slack = {
        let mut diff = vec![F::zero(); n];
        for i in 0..n {
            diff[i] = z[i] - scene.outer.center[i];
        }
        norm(&diff) - scene.outer.radius
    };

    let power = n as i32 - 2;
    let mut terms = Vec::with_capacity(depth as usize);
    let mut lower_sum = F::zero();
    let mut upper_sum = F::zero();
    for k in 1..=depth {
        let delta_inv: F = lit::<F>(2.0).powi(k as i32);
        let delta = F::one() / delta_inv;

        // Each atom is reduced to rho/delta in [0, 1]; the scale factor
        // 2^(k(n-2)) then cancels and nothing can overflow.
        let mut max_lower = F::zero();
        let mut upper_atoms = F::zero();

        // Outer-ball exterior. For z inside at signed depth s <= 0 the
        // intersection with B(z, delta) holds an inscribed ball of radius
        // (s + delta) / 2 when that is positive.
        if outer_slack + delta > F::zero() {
            let rho = if outer_slack >= delta {
                delta
            } else {
                (outer_slack + delta) * lit(0.5)
            };
            max_lower = max_lower.max(rho * delta_inv);
            upper_atoms = upper_atoms + F::one(); // min(delta, delta) / delta
        }

        for (b, &d) in balls.iter().zip(&hole_dists) {
            let r = b.radius;
            if d - r > delta {
                continue;
            }
            // Lens of the hole inside B(z, delta) along the center ray:
            // [d - r, min(d + r, delta)]; its inscribed ball touches the
            // hole sphere, so the lower radius is half the lens length.
            let hi = (d + r).min(delta);
            let rho_lower = ((hi - (d - r)) * lit(0.5)).max(F::zero());
            max_lower = max_lower.max(rho_lower * delta_inv);
            let rho_upper = r.min(delta);
            upper_atoms = upper_atoms + (rho_upper * delta_inv).powi(power);
        }

        let lower = max_lower.powi(power);
        // Subadditivity, capped by the capacity of B(z, delta) itself.
        let upper = upper_atoms.min(F::one());
        lower_sum = lower_sum + lower;
        upper_sum = upper_sum + upper;
        terms.push(WienerTerm { level: k, lower, upper });
    }

    Ok(WienerSeries {
        point: z.to_vec(),
        terms,
        lower_sum,
        upper_sum,
    })
}

/// Geometric bound on the series tail from the trailing window of upper
/// terms. `None` means no bound: some ratio reached `ratio_cap`, or a zero
/// term was followed by a positive one.
fn tail_estimate<F: Scalar>(terms: &[WienerTerm<F>], window: usize, ratio_cap: F) -> Option<F> {
    let w = &terms[terms.len().saturating_sub(window.max(2))..];
    if w.iter().all(|t| t.upper == F::zero()) {
        return Some(F::zero());
    }
    let mut q = F::zero();
    for pair in w.windows(2) {
        if pair[0].upper <= F::zero() {
            if pair[1].upper > F::zero() {
                return None;
            }
            continue;
        }
        q = q.max(pair[1].upper / pair[0].upper);
    }
    if q >= ratio_cap {
        return None;
    }
    let last = w.last().unwrap().upper;
    Some(last * q / (F::one() - q))
}

/// Classifies a metric boundary point against the fine topology.
///
/// A small geometric tail bound on the upper series proves summability and
/// wins outright; otherwise a lower partial sum beyond the divergence
/// threshold is ruled non-thin; otherwise the evidence is inconclusive.
pub fn classify_fine<F: Scalar>(
    scene: &BallScene<F>,
    z: &[F],
    policy: &FinePolicy,
) -> Result<FineReport<F>, FineError> {
    let series = wiener_series(scene, z, policy.depth)?;
    let tail = tail_estimate(&series.terms, policy.tail_window, lit(policy.ratio_cap));
    let (verdict, reason) = match tail {
        Some(t) if t < lit(policy.tail_bound) => (
            FineClass::FinelyInterior,
            format!(
                "upper series is summable: partial sum {} with tail bound {:e}",
                series.upper_sum, t
            ),
        ),
        _ => {
            if series.lower_sum > lit(policy.divergence_sum) {
                (
                    FineClass::FineBoundary,
                    format!(
                        "lower partial sum {} exceeds the divergence threshold {}",
                        series.lower_sum, policy.divergence_sum
                    ),
                )
            } else {
                (
                    FineClass::Indeterminate,
                    format!(
                        "no tail bound and lower partial sum {} is below the \
                         divergence threshold {}",
                        series.lower_sum, policy.divergence_sum
                    ),
                )
            }
        }
    };
    Ok(FineReport {
        series,
        tail,
        verdict,
        reason,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConcentrationVerdict {
    /// Exit mass piles up near z as the neighborhood shrinks, as it does at
    /// a fine boundary point.
    Concentrating,
    /// Exit mass stays spread out, as it does when z is finely interior.
    Spreading,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConcentrationPolicy {
    /// Final-level mass at the headline radius at or above this reads as
    /// concentration.
    pub concentrated_mass: f64,
    /// Mass rise (last minus first level) below this reads as flat.
    pub flat_rise: f64,
    pub stderr_mult: f64,
}

impl Default for ConcentrationPolicy {
    fn default() -> Self {
        ConcentrationPolicy {
            concentrated_mass: 0.5,
            flat_rise: 0.25,
            stderr_mult: 3.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationLevel<F> {
    pub epsilon: F,
    /// Exit mass within each probe radius of z, in radius order.
    pub masses: Vec<F>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationReport<F> {
    pub point: Vec<F>,
    pub radii: Vec<F>,
    pub levels: Vec<ConcentrationLevel<F>>,
    /// Largest probe radius; the verdict reads this column.
    pub headline_radius: F,
    pub first_mass: F,
    pub last_mass: F,
    pub mass_stderr: F,
    pub verdict: ConcentrationVerdict,
    pub reason: String,
}

/// Monte Carlo cross-check of the series verdict: estimates the exit
/// measure on a shrinking neighborhood schedule and watches whether mass
/// concentrates near z. Each level runs on its own derived seed.
pub fn concentration_diagnostic<F: SampleScalar>(
    scene: &BallScene<F>,
    z: &[F],
    radii: &[F],
    epsilons: &[F],
    cfg: &WalkConfig<F>,
    policy: &ConcentrationPolicy,
) -> Result<ConcentrationReport<F>, FineError> {
    if radii.is_empty() || epsilons.is_empty() {
        return Err(FineError::BadInput(
            "need at least one probe radius and one epsilon".into(),
        ));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= F::zero() {
        return Err(FineError::BadInput(
            "probe radii must be positive and strictly increasing".into(),
        ));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(FineError::BadInput(
            "epsilons must be strictly decreasing".into(),
        ));
    }

    let mut levels = Vec::with_capacity(epsilons.len());
    for (j, &eps) in epsilons.iter().enumerate() {
        let domain = Domain::neighborhood(scene, eps)?;
        let mut level_cfg = *cfg;
        level_cfg.seed = seed_mix(cfg.seed, j as u64);
        let measure = estimate_measure(&domain, z, &level_cfg)?;
        let masses = radii.iter().map(|&r| measure.mass_within(z, r)).collect();
        levels.push(ConcentrationLevel { epsilon: eps, masses });
    }

    let headline = radii.len() - 1;
    let first_mass = levels.first().unwrap().masses[headline];
    let last_mass = levels.last().unwrap().masses[headline];
    let n = cfg.samples as f64;
    let var = |m: F| {
        let m = m.to_f64().unwrap_or(0.5);
        (m * (1.0 - m) / n).max(1.0 / (n * n))
    };
    let mass_stderr: F = lit((var(first_mass) + var(last_mass)).sqrt());

    let concentrated = lit::<F>(policy.concentrated_mass);
    let slack = lit::<F>(policy.stderr_mult) * mass_stderr;
    let (verdict, reason) = if last_mass >= concentrated && last_mass >= first_mass - slack {
        (
            ConcentrationVerdict::Concentrating,
            format!(
                "mass within {} grew to {} at the finest level",
                radii[headline], last_mass
            ),
        )
    } else if last_mass < concentrated && last_mass - first_mass < lit(policy.flat_rise) {
        (
            ConcentrationVerdict::Spreading,
            format!(
                "mass within {} stayed at {} at the finest level",
                radii[headline], last_mass
            ),
        )
    } else {
        (
            ConcentrationVerdict::Indeterminate,
            format!(
                "mass within {} moved from {} to {}, matching neither profile",
                radii[headline], first_mass, last_mass
            ),
        )
    };

    Ok(ConcentrationReport {
        point: z.to_vec(),
        radii: radii.to_vec(),
        levels,
        headline_radius: radii[headline],
        first_mass,
        last_mass,
        mass_stderr,
        verdict,
        reason,
    })
}
