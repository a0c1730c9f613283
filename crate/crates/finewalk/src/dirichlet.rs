//! Dirichlet solutions on shrinking neighborhoods.
//!
//! Everything here reduces to exit-measure integrals: the solution value
//! for boundary data g at an interior point z is the mean of g over the
//! exit distribution. Solving on a schedule of shrinking neighborhoods
//! gives a trace per quantity; convergence, monotonicity and boundary
//! attainment are judged from the traces with noise-aware tolerances.
//!
//! All randomness is seeded per (level, point) from the base seed, so
//! every report is reproducible bit for bit.

use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::domain::{domain_schedule, Domain, DomainError};
use crate::geom::{dist, format_point, norm};
use crate::jensen::{Kind, TestFunction};
use crate::measure::{EmpiricalMeasure, MeasureError, POLE_MARGIN};
use crate::rng::seed_mix;
use crate::scalar::{lit, SampleScalar, Scalar};
use crate::scene::BallScene;
use crate::wos::{estimate_measure, WalkConfig, WalkError};

#[derive(Debug, Error)]
pub enum DirichletError {
    #[error("bad schedule `{0}`: expected eps0:ratio:count with eps0 > 0, 0 < ratio < 1, count >= 1")]
    BadSchedule(String),
    #[error("unknown data function `{0}`")]
    UnknownData(String),
    #[error("point ({0}) has the wrong dimension for the scene")]
    BadPoint(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Shrinking neighborhood schedule `eps0 * ratio^j` for `j < count`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScheduleSpec<F> {
    pub eps0: F,
    pub ratio: F,
    pub count: usize,
}

impl<F: Scalar> ScheduleSpec<F> {
    pub fn new(eps0: F, ratio: F, count: usize) -> Result<Self, DirichletError> {
        let ok = eps0 > F::zero()
            && eps0.is_finite()
            && ratio > F::zero()
            && ratio < F::one()
            && count >= 1;
        if !ok {
            return Err(DirichletError::BadSchedule(format!(
                "{eps0}:{ratio}:{count}"
            )));
        }
        Ok(ScheduleSpec { eps0, ratio, count })
    }

    pub fn epsilons(&self) -> Vec<F> {
        let mut eps = self.eps0;
        (0..self.count)
            .map(|_| {
                let e = eps;
                eps = eps * self.ratio;
                e
            })
            .collect()
    }

    pub fn domains(&self, scene: &BallScene<F>) -> Result<Vec<Domain<F>>, DirichletError> {
        Ok(domain_schedule(scene, self.eps0, self.ratio, self.count)?)
    }
}

impl FromStr for ScheduleSpec<f64> {
    type Err = DirichletError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DirichletError::BadSchedule(s.to_string());
        let mut it = s.split(':');
        let eps0: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let ratio: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let count: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if it.next().is_some() {
            return Err(bad());
        }
        ScheduleSpec::new(eps0, ratio, count).map_err(|_| bad())
    }
}

fn smoothstep<F: Scalar>(u: F) -> F {
    if u <= F::zero() {
        F::zero()
    } else if u >= F::one() {
        F::one()
    } else {
        u * u * (lit::<F>(3.0) - lit::<F>(2.0) * u)
    }
}

#[derive(Clone, Debug)]
enum DataKind<F> {
    /// `x_axis` (harmonic).
    Coordinate(usize),
    /// Distance to the outer center.
    Radial { center: Vec<F> },
    /// Smoothed indicator vanishing near the coordinate origin: 0 within
    /// |x| <= 0.03, 1 beyond |x| >= 0.10.
    AwayFromOrigin,
    /// Smoothed indicator of the outer sphere against the holes: exactly 1
    /// on the outer sphere (grown by any eps) and exactly 0 on every hole
    /// sphere (shrunk by any eps). Hole-free scenes get the constant 1.
    OuterIndicator {
        holes: Vec<crate::geom::Ball<F>>,
        mid: F,
        width: F,
    },
    /// Paraboloid cap `R^2 - |x - c|^2`: vanishes exactly on the outer
    /// sphere, positive inside it.
    Dome { center: Vec<F>, radius_sq: F },
}

/// A named boundary data function, defined on all of space so it restricts
/// continuously to every neighborhood boundary in a schedule.
#[derive(Clone, Debug)]
pub struct BoundaryData<F> {
    pub name: String,
    kind: DataKind<F>,
}

impl<F: Scalar> BoundaryData<F> {
    pub fn eval(&self, x: &[F]) -> F {
        match &self.kind {
            DataKind::Coordinate(axis) => x[*axis],
            DataKind::Radial { center } => dist(x, center),
            DataKind::AwayFromOrigin => {
                smoothstep((norm(x) - lit(0.03)) / lit(0.07))
            }
            DataKind::OuterIndicator { holes, mid, width } => {
                if holes.is_empty() {
                    return F::one();
                }
                let clearance = holes
                    .iter()
                    .map(|b| dist(x, &b.center) - b.radius)
                    .fold(F::infinity(), F::min);
                smoothstep((clearance - *mid) / *width)
            }
            DataKind::Dome { center, radius_sq } => {
                let d = dist(x, center);
                *radius_sq - d * d
            }
        }
    }
}

/// Resolves a data function by name: `coord1`..`coordN`, `radial`,
/// `away0`, `outer1`, or `dome0`.
pub fn named_data<F: Scalar>(
    scene: &BallScene<F>,
    name: &str,
) -> Result<BoundaryData<F>, DirichletError> {
    let kind = if let Some(k) = name.strip_prefix("coord") {
        let axis: usize = k
            .parse()
            .map_err(|_| DirichletError::UnknownData(name.to_string()))?;
        if axis == 0 || axis > scene.dimension {
            return Err(DirichletError::UnknownData(name.to_string()));
        }
        DataKind::Coordinate(axis - 1)
    } else {
        match name {
            "radial" => DataKind::Radial {
                center: scene.outer.center.clone(),
            },
            "away0" => DataKind::AwayFromOrigin,
            "outer1" => {
                let holes = scene.metric_holes();
                let sigma = holes
                    .iter()
                    .map(|b| {
                        scene.outer.radius - dist(&b.center, &scene.outer.center) - b.radius
                    })
                    .fold(F::infinity(), F::min);
                DataKind::OuterIndicator {
                    holes,
                    mid: sigma * lit(0.2),
                    width: sigma * lit(0.3),
                }
            }
            "dome0" => DataKind::Dome {
                center: scene.outer.center.clone(),
                radius_sq: scene.outer.radius * scene.outer.radius,
            },
            _ => return Err(DirichletError::UnknownData(name.to_string())),
        }
    };
    Ok(BoundaryData {
        name: name.to_string(),
        kind,
    })
}

/// Exit measures on every schedule level, each on its own derived seed.
/// The finest-level measure records the scene's declared truncation.
pub fn level_measures<F: SampleScalar>(
    scene: &BallScene<F>,
    z: &[F],
    spec: &ScheduleSpec<F>,
    cfg: &WalkConfig<F>,
) -> Result<(Vec<F>, Vec<EmpiricalMeasure<F>>), DirichletError> {
    if z.len() != scene.dimension {
        return Err(DirichletError::BadPoint(format_point(z)));
    }
    let domains = spec.domains(scene)?;
    let mut measures = Vec::with_capacity(domains.len());
    for (j, domain) in domains.iter().enumerate() {
        let mut level_cfg = *cfg;
        level_cfg.seed = seed_mix(cfg.seed, j as u64);
        let mut m = estimate_measure(domain, z, &level_cfg)?;
        m.provenance.scene_truncation = Some(scene.declared_truncation());
        measures.push(m);
    }
    Ok((spec.epsilons(), measures))
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeTrace<F> {
    pub id: String,
    pub values: Vec<F>,
    pub stderrs: Vec<F>,
    /// Absolute successive differences, one fewer than values.
    pub gaps: Vec<F>,
    pub gap_stderrs: Vec<F>,
    /// No gap grew by more than the noise allowance.
    pub gaps_shrinking: bool,
    pub last_gap: F,
    pub last_gap_stderr: F,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport<F> {
    pub epsilons: Vec<F>,
    pub traces: Vec<ProbeTrace<F>>,
    pub skipped: Vec<String>,
    /// Every trace settled: its last gap is within noise of zero.
    pub converged: bool,
}

const GAP_FLOOR: f64 = 1e-9;

fn pole_clear_of_levels<F: Scalar>(pole: Option<&[F]>, domains: &[Domain<F>]) -> bool {
    match pole {
        None => true,
        Some(p) => domains
            .iter()
            .all(|d| d.dist_to_shell(p) >= lit(POLE_MARGIN)),
    }
}

/// Traces probe integrals along the schedule and judges weak convergence:
/// gaps must not grow beyond noise and the final gap must be within noise
/// of zero. Kernel probes whose pole comes close to any level's boundary
/// shells are skipped.
pub fn harmonic_measure<F: SampleScalar>(
    scene: &BallScene<F>,
    z: &[F],
    spec: &ScheduleSpec<F>,
    probes: &[TestFunction<F>],
    cfg: &WalkConfig<F>,
) -> Result<(ConvergenceReport<F>, EmpiricalMeasure<F>), DirichletError> {
    let (epsilons, measures) = level_measures(scene, z, spec, cfg)?;
    let domains = spec.domains(scene)?;

    let mut traces = Vec::new();
    let mut skipped = Vec::new();
    let mut converged = true;
    for probe in probes {
        if probe.is_constant() {
            continue;
        }
        if !pole_clear_of_levels(probe.pole(), &domains) {
            skipped.push(probe.id.clone());
            continue;
        }
        let mut values = Vec::with_capacity(measures.len());
        let mut stderrs = Vec::with_capacity(measures.len());
        for m in &measures {
            let (v, s) = m.integrate_with_stderr(&probe.id, |x| probe.eval(x))?;
            values.push(v);
            stderrs.push(s);
        }
        let mut gaps = Vec::new();
        let mut gap_stderrs = Vec::new();
        for j in 0..values.len() - 1 {
            gaps.push((values[j + 1] - values[j]).abs());
            gap_stderrs
                .push((stderrs[j] * stderrs[j] + stderrs[j + 1] * stderrs[j + 1]).sqrt());
        }
        let mut gaps_shrinking = true;
        for j in 0..gaps.len().saturating_sub(1) {
            let allowance = lit::<F>(3.0)
                * (gap_stderrs[j] * gap_stderrs[j] + gap_stderrs[j + 1] * gap_stderrs[j + 1])
                    .sqrt()
                + lit(GAP_FLOOR);
            if gaps[j + 1] > gaps[j] + allowance {
                gaps_shrinking = false;
            }
        }
        let last_gap = *gaps.last().unwrap_or(&F::zero());
        let last_gap_stderr = *gap_stderrs.last().unwrap_or(&F::zero());
        let settled =
            last_gap <= lit::<F>(3.0) * last_gap_stderr + lit(GAP_FLOOR) && gaps_shrinking;
        converged &= settled;
        traces.push(ProbeTrace {
            id: probe.id.clone(),
            values,
            stderrs,
            gaps,
            gap_stderrs,
            gaps_shrinking,
            last_gap,
            last_gap_stderr,
        });
    }
    let finest = measures.into_iter().next_back().expect("count >= 1");
    Ok((
        ConvergenceReport {
            epsilons,
            traces,
            skipped,
            converged,
        },
        finest,
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneEntry<F> {
    pub id: String,
    pub values: Vec<F>,
    pub stderrs: Vec<F>,
    /// Levels where the value rose beyond the noise allowance as the
    /// neighborhood shrank.
    pub violations: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneReport<F> {
    pub epsilons: Vec<F>,
    pub entries: Vec<MonotoneEntry<F>>,
    pub skipped: Vec<String>,
    pub pass: bool,
}

const MONOTONE_FLOOR: f64 = 1e-3;

/// Sub-mean-value consistency: shrinking the neighborhood stops the walk
/// earlier, so integrals of subharmonic probes must not rise (beyond
/// noise) along the schedule. Kernel probes too close to any boundary
/// shell are skipped rather than measured badly.
pub fn monotone_check<F: SampleScalar>(
    scene: &BallScene<F>,
    z: &[F],
    spec: &ScheduleSpec<F>,
    probes: &[TestFunction<F>],
    cfg: &WalkConfig<F>,
) -> Result<MonotoneReport<F>, DirichletError> {
    let (epsilons, measures) = level_measures(scene, z, spec, cfg)?;
    let domains = spec.domains(scene)?;

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    let mut pass = true;
    for probe in probes {
        if probe.kind != Kind::Subharmonic {
            continue;
        }
        if !pole_clear_of_levels(probe.pole(), &domains) {
            skipped.push(probe.id.clone());
            continue;
        }
        let mut values = Vec::with_capacity(measures.len());
        let mut stderrs = Vec::with_capacity(measures.len());
        for m in &measures {
            let (v, s) = m.integrate_with_stderr(&probe.id, |x| probe.eval(x))?;
            values.push(v);
            stderrs.push(s);
        }
        let mut violations = 0usize;
        for j in 0..values.len() - 1 {
            let allowance = lit::<F>(3.0)
                * (stderrs[j] * stderrs[j] + stderrs[j + 1] * stderrs[j + 1]).sqrt()
                + lit(MONOTONE_FLOOR);
            if values[j + 1] > values[j] + allowance {
                violations += 1;
            }
        }
        let ok = violations == 0;
        pass &= ok;
        entries.push(MonotoneEntry {
            id: probe.id.clone(),
            values,
            stderrs,
            violations,
            pass: ok,
        });
    }
    Ok(MonotoneReport {
        epsilons,
        entries,
        skipped,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PointSolution<F> {
    pub point: Vec<F>,
    pub values: Vec<F>,
    pub stderrs: Vec<F>,
    /// Finest-level value and its standard error.
    pub value: F,
    pub stderr: F,
    /// Gap between the two finest levels; a resolution estimate.
    pub level_gap: F,
    /// Observed data range over this point's finest-level exits.
    pub data_min: F,
    pub data_max: F,
    pub within_range: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport<F> {
    pub data: String,
    pub epsilons: Vec<F>,
    pub points: Vec<PointSolution<F>>,
    /// Every value sits inside its observed data range, up to noise.
    pub range_ok: bool,
    /// Nonnegative data produced nonnegative values, up to noise.
    pub positive_ok: bool,
}

fn point_seed(base: u64, level: usize, point: usize) -> u64 {
    seed_mix(base, ((level as u64) << 32) | point as u64)
}

/// Solves the data at each point along the schedule. Each (level, point)
/// pair walks on its own derived seed.
pub fn solve<F: SampleScalar>(
    scene: &BallScene<F>,
    data: &BoundaryData<F>,
    points: &[Vec<F>],
    spec: &ScheduleSpec<F>,
    cfg: &WalkConfig<F>,
) -> Result<SolveReport<F>, DirichletError> {
    let domains = spec.domains(scene)?;
    let mut out = Vec::with_capacity(points.len());
    let mut range_ok = true;
    let mut positive_ok = true;
    for (pi, z) in points.iter().enumerate() {
        if z.len() != scene.dimension {
            return Err(DirichletError::BadPoint(format_point(z)));
        }
        let mut values = Vec::with_capacity(domains.len());
        let mut stderrs = Vec::with_capacity(domains.len());
        let mut data_min = F::infinity();
        let mut data_max = F::neg_infinity();
        for (j, domain) in domains.iter().enumerate() {
            let mut level_cfg = *cfg;
            level_cfg.seed = point_seed(cfg.seed, j, pi);
            let measure = estimate_measure(domain, z, &level_cfg)?;
            let (v, s) = measure.integrate_with_stderr(&data.name, |x| data.eval(x))?;
            values.push(v);
            stderrs.push(s);
            if j + 1 == domains.len() {
                for x in measure.support() {
                    let g = data.eval(x);
                    data_min = data_min.min(g);
                    data_max = data_max.max(g);
                }
            }
        }
        let value = *values.last().unwrap();
        let stderr = *stderrs.last().unwrap();
        let level_gap = if values.len() >= 2 {
            (values[values.len() - 1] - values[values.len() - 2]).abs()
        } else {
            F::zero()
        };
        let slack = lit::<F>(3.0) * stderr + lit(GAP_FLOOR);
        let within_range = value >= data_min - slack && value <= data_max + slack;
        range_ok &= within_range;
        if data_min >= F::zero() {
            positive_ok &= value >= -slack;
        }
        out.push(PointSolution {
            point: z.clone(),
            values,
            stderrs,
            value,
            stderr,
            level_gap,
            data_min,
            data_max,
            within_range,
        });
    }
    Ok(SolveReport {
        data: data.name.clone(),
        epsilons: spec.epsilons(),
        points: out,
        range_ok,
        positive_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryAgreement<F> {
    pub point: Vec<F>,
    pub data_value: F,
    pub solved: F,
    pub stderr: F,
    pub level_gap: F,
    pub tol: F,
    pub pass: bool,
}

/// At a boundary point the schedule keeps z strictly inside every
/// neighborhood; at points where the complement is non-thin the solved
/// values must land on the data value as the neighborhood shrinks. The
/// tolerance grants the noise allowance plus the observed resolution gap.
pub fn boundary_agreement<F: SampleScalar>(
    scene: &BallScene<F>,
    data: &BoundaryData<F>,
    boundary_points: &[Vec<F>],
    spec: &ScheduleSpec<F>,
    cfg: &WalkConfig<F>,
) -> Result<Vec<BoundaryAgreement<F>>, DirichletError> {
    let report = solve(scene, data, boundary_points, spec, cfg)?;
    Ok(report
        .points
        .into_iter()
        .map(|p| {
            let data_value = data.eval(&p.point);
            let tol = lit::<F>(3.0) * p.stderr + p.level_gap + lit(MONOTONE_FLOOR);
            let pass = (p.value - data_value).abs() <= tol;
            BoundaryAgreement {
                point: p.point,
                data_value,
                solved: p.value,
                stderr: p.stderr,
                level_gap: p.level_gap,
                tol,
                pass,
            }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct AveragingReport<F> {
    pub center_value: F,
    pub center_stderr: F,
    pub sphere_mean: F,
    pub sphere_stderr: F,
    pub diff: F,
    pub tol: F,
    pub pass: bool,
}

/// Mean-value identity of the solved function inside one fixed
/// neighborhood: the value at z must match the average of values at
/// random points of the sphere around z, up to combined noise. The sphere
/// radius must keep the sphere inside the neighborhood.
pub fn averaging_check<F: SampleScalar>(
    scene: &BallScene<F>,
    data: &BoundaryData<F>,
    z: &[F],
    rho: F,
    count: usize,
    epsilon: F,
    cfg: &WalkConfig<F>,
) -> Result<AveragingReport<F>, DirichletError> {
    let domain = Domain::neighborhood(scene, epsilon)?;
    if domain.dist_to_boundary(z) <= rho {
        return Err(DirichletError::BadPoint(format!(
            "sphere of radius {rho} around ({}) leaves the neighborhood",
            format_point(z)
        )));
    }
    let sphere = crate::measure::sphere_sample(z, rho, count, seed_mix(cfg.seed, 0xA11));

    let mut center_cfg = *cfg;
    center_cfg.seed = seed_mix(cfg.seed, 0xC0);
    let center = estimate_measure(&domain, z, &center_cfg)?;
    let (center_value, center_stderr) =
        center.integrate_with_stderr(&data.name, |x| data.eval(x))?;

    let mut values = Vec::with_capacity(count);
    let mut var = F::zero();
    for (i, x) in sphere.support().iter().enumerate() {
        let mut c = *cfg;
        c.seed = seed_mix(cfg.seed, 0x1000 + i as u64);
        let m = estimate_measure(&domain, x, &c)?;
        let (v, s) = m.integrate_with_stderr(&data.name, |y| data.eval(y))?;
        values.push(v);
        var = var + s * s;
    }
    let k = lit::<F>(count as f64);
    let sphere_mean = values.iter().fold(F::zero(), |a, &v| a + v) / k;
    // The mean's variance adds the per-point walk noise and the spread of
    // the true sphere values across the k sampled directions.
    let spread = values
        .iter()
        .fold(F::zero(), |a, &v| a + (v - sphere_mean) * (v - sphere_mean));
    let sphere_stderr = ((var + spread) / (k * k)).sqrt();

    let diff = (center_value - sphere_mean).abs();
    let tol = lit::<F>(3.0) * (center_stderr * center_stderr + sphere_stderr * sphere_stderr)
        .sqrt()
        + lit(GAP_FLOOR);
    Ok(AveragingReport {
        center_value,
        center_stderr,
        sphere_mean,
        sphere_stderr,
        diff,
        tol,
        pass: diff <= tol,
    })
}
