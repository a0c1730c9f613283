//! Upper-envelope computation by linear programming, from both sides.
//!
//! For data p on the scene set K and an interior point z, the function
//! side maximizes u(z) over cone combinations of the witness family with
//! u <= p sampled on a finite grid of K; the measure side minimizes the
//! discrete expectation of p over grid-supported measures satisfying the
//! family's sub-averaging constraints at z. The two linear programs are
//! exact duals, and they are built and solved independently — the measure
//! side is never read off the function side's basis — so the closed
//! duality gap is a real cross-check of both routes.
//!
//! Grids are deterministic: a low-discrepancy sweep of the bounding box
//! filtered to K, plus seeded points on every boundary sphere, plus z
//! itself (which keeps the measure side feasible).

use serde::Serialize;
use thiserror::Error;

use crate::dirichlet::BoundaryData;
use crate::geom::{axpy, format_point};
use crate::jensen::{default_family, Kind, TestFunction};
use crate::measure::{
    EmpiricalMeasure, MeasureError, Provenance, POLE_MARGIN, WEIGHT_TOL,
};
use crate::rng::{seed_mix, stream_rng, unit_sphere_dir};
use crate::scalar::{lit, SampleScalar, Scalar};
use crate::scene::{BallScene, PointClass};
use crate::simplex::{
    solve as lp_solve, Constraint, Direction, LinearProgram, LpError, Sense,
};

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("{0}")]
    BadInstance(String),
    #[error("function-side program failed: {0}")]
    Primal(LpError),
    #[error("measure-side program failed: {0}")]
    Dual(LpError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

const PRIMES: [u64; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];

/// Radical-inverse of `index` in the given base; the classic
/// low-discrepancy coordinate in [0, 1).
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

/// A frozen discretization of the envelope problem. Rebuilding with the
/// same inputs reproduces the grid bit for bit.
#[derive(Clone, Debug)]
pub struct DiscreteInstance<F> {
    pub z: Vec<F>,
    /// Grid over K; index 0 is z itself.
    pub grid: Vec<Vec<F>>,
    /// Data values on the grid.
    pub p: Vec<F>,
    /// Cone generators; kernels with poles hugging K are dropped.
    pub family: Vec<TestFunction<F>>,
    pub skipped_kernels: Vec<String>,
    pub seed: u64,
}

/// Samples the grid and evaluates the data. `grid_target` controls the
/// total point budget, split between the interior sweep and the boundary
/// spheres.
pub fn build_instance<F: SampleScalar>(
    scene: &BallScene<F>,
    z: &[F],
    data: &BoundaryData<F>,
    degree: u32,
    grid_target: usize,
    seed: u64,
) -> Result<DiscreteInstance<F>, EnvelopeError> {
    let n = scene.dimension;
    if n > PRIMES.len() {
        return Err(EnvelopeError::BadInstance(format!(
            "dimension {n} exceeds the low-discrepancy base table"
        )));
    }
    if z.len() != n {
        return Err(EnvelopeError::BadInstance(format!(
            "point ({}) has the wrong dimension",
            format_point(z)
        )));
    }
    if grid_target < 10 {
        return Err(EnvelopeError::BadInstance(
            "grid target must be at least 10".into(),
        ));
    }
    if scene.classify(z) == PointClass::Exterior {
        return Err(EnvelopeError::BadInstance(format!(
            "point ({}) lies outside the scene set",
            format_point(z)
        )));
    }

    let mut grid: Vec<Vec<F>> = vec![z.to_vec()];

    // Interior sweep: low-discrepancy points of the bounding box kept when
    // they land in K.
    let interior_budget = grid_target / 2;
    let r = scene.outer.radius;
    let mut index = 1u64;
    let mut accepted = 0usize;
    while accepted < interior_budget && index < 200 * grid_target as u64 {
        let x: Vec<F> = (0..n)
            .map(|j| {
                let u = radical_inverse(index, PRIMES[j]);
                scene.outer.center[j] + r * lit::<F>(2.0 * u - 1.0)
            })
            .collect();
        index += 1;
        if scene.classify(&x) != PointClass::Exterior {
            grid.push(x);
            accepted += 1;
        }
    }

    // Boundary probes: seeded directions on the outer sphere and every
    // reported hole sphere.
    let holes = scene.metric_holes();
    let spheres: Vec<(Vec<F>, F)> = std::iter::once((scene.outer.center.clone(), r))
        .chain(holes.iter().map(|b| (b.center.clone(), b.radius)))
        .collect();
    let per_sphere = (grid_target - interior_budget).div_ceil(spheres.len());
    let mut dir = vec![F::zero(); n];
    let mut x = vec![F::zero(); n];
    for (si, (center, radius)) in spheres.iter().enumerate() {
        let mut rng = stream_rng(seed_mix(seed, 0xB0D7), si as u64);
        for _ in 0..per_sphere {
            unit_sphere_dir(&mut rng, &mut dir);
            axpy(&mut x, center, *radius, &dir);
            grid.push(x.clone());
        }
    }

    let p: Vec<F> = grid.iter().map(|x| data.eval(x)).collect();

    let mut family = Vec::new();
    let mut skipped_kernels = Vec::new();
    for f in default_family(scene, degree) {
        match f.pole() {
            Some(pole) if scene.dist_to_k(pole) < lit(POLE_MARGIN) => {
                skipped_kernels.push(f.id.clone());
            }
            _ => family.push(f),
        }
    }

    Ok(DiscreteInstance {
        z: z.to_vec(),
        grid,
        p,
        family,
        skipped_kernels,
        seed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SideResult<F> {
    pub value: F,
    pub iterations: usize,
}

/// Function side: maximize the cone combination's value at z subject to
/// staying at or below the data across the grid. Harmonic generators may
/// enter with either sign; subharmonic ones only nonnegatively.
pub fn envelope_primal<F: Scalar>(
    instance: &DiscreteInstance<F>,
) -> Result<SideResult<F>, EnvelopeError> {
    let mut objective = Vec::new();
    let mut columns: Vec<(usize, F)> = Vec::new(); // (family index, sign)
    for (j, f) in instance.family.iter().enumerate() {
        let vz = f.eval(&instance.z);
        objective.push(vz);
        columns.push((j, F::one()));
        if f.kind == Kind::Harmonic {
            objective.push(-vz);
            columns.push((j, -F::one()));
        }
    }
    let constraints = instance
        .grid
        .iter()
        .zip(&instance.p)
        .map(|(y, &py)| Constraint {
            coeffs: columns
                .iter()
                .map(|&(j, sign)| sign * instance.family[j].eval(y))
                .collect(),
            sense: Sense::Le,
            rhs: py,
        })
        .collect();
    let lp = LinearProgram {
        direction: Direction::Maximize,
        objective,
        constraints,
    };
    let s = lp_solve(&lp).map_err(EnvelopeError::Primal)?;
    Ok(SideResult {
        value: s.value,
        iterations: s.iterations,
    })
}

/// Measure side: minimize the grid expectation of the data over
/// nonnegative weights that match every harmonic generator exactly at z
/// and dominate every subharmonic one. Solved from scratch; nothing is
/// taken from the function side.
pub fn envelope_dual<F: Scalar>(
    instance: &DiscreteInstance<F>,
) -> Result<(SideResult<F>, Vec<F>), EnvelopeError> {
    let constraints = instance
        .family
        .iter()
        .map(|f| Constraint {
            coeffs: instance.grid.iter().map(|y| f.eval(y)).collect(),
            sense: match f.kind {
                Kind::Harmonic => Sense::Eq,
                Kind::Subharmonic => Sense::Ge,
            },
            rhs: f.eval(&instance.z),
        })
        .collect();
    let lp = LinearProgram {
        direction: Direction::Minimize,
        objective: instance.p.clone(),
        constraints,
    };
    let s = lp_solve(&lp).map_err(EnvelopeError::Dual)?;
    Ok((
        SideResult {
            value: s.value,
            iterations: s.iterations,
        },
        s.x,
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeReport<F> {
    pub value: F,
    pub primal: SideResult<F>,
    pub dual: SideResult<F>,
    pub gap: F,
    pub gap_tol: F,
    pub grid_size: usize,
    pub family_size: usize,
    pub skipped_kernels: Vec<String>,
    /// The duality gap closed within tolerance.
    pub pass: bool,
}

pub const GAP_TOL: f64 = 1e-7;

/// Runs both sides and reports the duality gap. `value` is the function
/// side's optimum.
pub fn envelope<F: Scalar>(
    instance: &DiscreteInstance<F>,
) -> Result<EnvelopeReport<F>, EnvelopeError> {
    let primal = envelope_primal(instance)?;
    let (dual, _) = envelope_dual(instance)?;
    let gap = (primal.value - dual.value).abs();
    let gap_tol = lit(GAP_TOL);
    Ok(EnvelopeReport {
        value: primal.value,
        gap,
        gap_tol,
        grid_size: instance.grid.len(),
        family_size: instance.family.len(),
        skipped_kernels: instance.skipped_kernels.clone(),
        pass: gap <= gap_tol,
        primal,
        dual,
    })
}

/// The measure side's optimum as an empirical measure: the discrete
/// minimizing measure for the data at z.
pub fn dual_measure<F: Scalar>(
    instance: &DiscreteInstance<F>,
) -> Result<EmpiricalMeasure<F>, EnvelopeError> {
    let (_, weights) = envelope_dual(instance)?;
    let cut = lit::<F>(WEIGHT_TOL);
    let mut support = Vec::new();
    let mut kept = Vec::new();
    let mut total = F::zero();
    for (x, &w) in instance.grid.iter().zip(&weights) {
        if w > cut {
            support.push(x.clone());
            kept.push(w);
            total = total + w;
        }
    }
    for w in kept.iter_mut() {
        *w = *w / total;
    }
    let provenance = Provenance {
        source: "envelope_dual".into(),
        seed: Some(instance.seed),
        samples: support.len(),
        epsilon: None,
        absorb_delta: None,
        truncation_fraction: 0.0,
        scene_truncation: None,
        warnings: Vec::new(),
    };
    Ok(EmpiricalMeasure::new(
        support,
        kept,
        instance.z.clone(),
        provenance,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::named_data;
    use crate::scene::canonical;

    #[test]
    fn harmonic_data_envelope_is_the_data() {
        // The data x1 is itself a cone generator with both signs, so the
        // function side reaches exactly p(z) and the point mass at z caps
        // the measure side at the same value.
        let scene = canonical::unit_ball::<f64>(3);
        let data = named_data(&scene, "coord1").unwrap();
        let z = vec![0.3, 0.0, 0.0];
        let inst = build_instance(&scene, &z, &data, 2, 200, 17).unwrap();
        let report = envelope(&inst).unwrap();
        assert!(report.pass, "gap {}", report.gap);
        assert!((report.value - 0.3).abs() < 1e-7, "value {}", report.value);
    }

    #[test]
    fn convex_radial_data_envelope_touches_the_data() {
        // |x| is subharmonic, so every admissible measure's expectation
        // dominates |z| while x1 <= |x| pushes the function side up to
        // |z|; both sides meet at the data value.
        let scene = canonical::unit_ball::<f64>(3);
        let data = named_data(&scene, "radial").unwrap();
        let z = vec![0.5, 0.0, 0.0];
        let inst = build_instance(&scene, &z, &data, 2, 200, 17).unwrap();
        let report = envelope(&inst).unwrap();
        assert!(report.pass, "gap {}", report.gap);
        assert!((report.value - 0.5).abs() < 1e-7, "value {}", report.value);
    }

    #[test]
    fn envelope_grows_with_the_family() {
        let scene = canonical::unit_ball::<f64>(3);
        let data = named_data(&scene, "radial").unwrap();
        let z = vec![0.3, 0.2, 0.0];
        let small = envelope(&build_instance(&scene, &z, &data, 1, 150, 3).unwrap()).unwrap();
        let large = envelope(&build_instance(&scene, &z, &data, 2, 150, 3).unwrap()).unwrap();
        assert!(small.pass && large.pass);
        assert!(
            small.value <= large.value + 1e-9,
            "small {} large {}",
            small.value,
            large.value
        );
        // The point mass at z caps both from above by the data value.
        assert!(large.value <= data.eval(&z) + 1e-9);
    }

    #[test]
    fn holed_scene_gap_closes_and_dual_measure_is_sane() {
        let scene = canonical::swiss_cheese::<f64>();
        let data = named_data(&scene, "outer1").unwrap();
        let z = vec![0.0, 0.0, -0.5];
        let inst = build_instance(&scene, &z, &data, 2, 300, 23).unwrap();
        let report = envelope(&inst).unwrap();
        assert!(report.pass, "gap {}", report.gap);
        // u = 0 is admissible and the point mass at z caps from above.
        assert!(
            report.value >= -1e-9 && report.value <= 1.0 + 1e-9,
            "value {}",
            report.value
        );

        let mu = dual_measure(&inst).unwrap();
        let mean = mu.support_mean();
        for (m, zi) in mean.iter().zip(&z) {
            assert!((m - zi).abs() < 1e-6, "barycenter drifted: {m} vs {zi}");
        }
        let (one, _) = mu.integrate_with_stderr("const", |_| 1.0).unwrap();
        assert!((one - 1.0).abs() < 1e-9);
    }

    #[test]
    fn instances_and_values_are_reproducible() {
        let scene = canonical::swiss_cheese::<f64>();
        let data = named_data(&scene, "outer1").unwrap();
        let z = vec![0.2, 0.1, 0.0];
        let a = build_instance(&scene, &z, &data, 2, 250, 99).unwrap();
        let b = build_instance(&scene, &z, &data, 2, 250, 99).unwrap();
        assert_eq!(a.grid, b.grid);
        let ra = envelope(&a).unwrap();
        let rb = envelope(&b).unwrap();
        assert_eq!(ra.value, rb.value);
        assert_eq!(ra.dual.value, rb.dual.value);
    }

    #[test]
    fn tiny_kernel_poles_are_filtered() {
        let scene = canonical::road_runner_thin::<f64>();
        let data = named_data(&scene, "outer1").unwrap();
        let z = vec![0.0, 0.0, 0.0];
        let inst = build_instance(&scene, &z, &data, 2, 150, 7).unwrap();
        assert!(
            !inst.skipped_kernels.is_empty(),
            "expected kernels at sub-margin generated balls to be dropped"
        );
        for f in &inst.family {
            if let Some(p) = f.pole() {
                assert!(scene.dist_to_k(p) >= POLE_MARGIN);
            }
        }
    }
}
