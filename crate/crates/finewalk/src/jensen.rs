//! Witness families of harmonic and subharmonic test functions, membership
//! checks for the sub-averaging inequality, and maximality probes.
//!
//! Every verdict in this module is relative to a finite family and a
//! tolerance. A measure that passes is compatible with the sub-averaging
//! property on the family; nothing stronger is claimed.

use serde::Serialize;
use thiserror::Error;

use crate::geom::{dist, format_point};
use crate::measure::{EmpiricalMeasure, MeasureError};
use crate::scalar::{lit, Scalar};
use crate::scene::BallScene;

#[derive(Debug, Error)]
pub enum JensenError {
    #[error("measure claims barycenter ({claimed}), check asked about ({asked})")]
    BarycenterMismatch { claimed: String, asked: String },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Kind {
    Harmonic,
    Subharmonic,
}

/// Closed-form test function definitions.
///
/// Kernels blow down to negative infinity at their pole, which keeps them
/// subharmonic across the whole space; evaluation at the pole returns
/// negative infinity and integration against a measure supported there is a
/// hard error upstream.
#[derive(Clone, Debug, Serialize)]
pub enum Def<F> {
    Constant(F),
    /// `sign * x_axis`.
    Coordinate { axis: usize, sign: i8 },
    /// `x_i * x_j`, i != j.
    Cross { i: usize, j: usize },
    /// `x_i^2 - x_j^2`.
    SquareDiff { i: usize, j: usize },
    /// `|x - pole|^2`.
    SquaredDist { pole: Vec<F> },
    /// `-|x - pole|^(2-n)` for ambient dimension n >= 3.
    NewtonKernel { pole: Vec<F> },
    /// `log |x - pole|` for ambient dimension 2.
    LogKernel { pole: Vec<F> },
}

#[derive(Clone, Debug, Serialize)]
pub struct TestFunction<F> {
    pub id: String,
    pub kind: Kind,
    pub def: Def<F>,
}

impl<F: Scalar> TestFunction<F> {
    pub fn eval(&self, x: &[F]) -> F {
        match &self.def {
            Def::Constant(c) => *c,
            Def::Coordinate { axis, sign } => {
                if *sign >= 0 {
                    x[*axis]
                } else {
                    -x[*axis]
                }
            }
            Def::Cross { i, j } => x[*i] * x[*j],
            Def::SquareDiff { i, j } => x[*i] * x[*i] - x[*j] * x[*j],
            Def::SquaredDist { pole } => {
                let d = dist(x, pole);
                d * d
            }
            Def::NewtonKernel { pole } => {
                let d = dist(x, pole);
                if d == F::zero() {
                    return F::neg_infinity();
                }
                let n = x.len() as i32;
                -d.powi(2 - n)
            }
            Def::LogKernel { pole } => {
                let d = dist(x, pole);
                if d == F::zero() {
                    return F::neg_infinity();
                }
                d.ln()
            }
        }
    }

    pub fn pole(&self) -> Option<&[F]> {
        match &self.def {
            Def::NewtonKernel { pole } | Def::LogKernel { pole } => Some(pole),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.def, Def::Constant(_))
    }

    pub fn is_coordinate(&self, axis: usize, sign: i8) -> bool {
        matches!(&self.def, Def::Coordinate { axis: a, sign: s }
            if *a == axis && (*s >= 0) == (sign >= 0))
    }
}

/// Builds the default witness family for a scene.
///
/// Degree 1: the constant, all signed coordinates, squared distances to the
/// scene anchors, and kernels with poles in the deleted balls and at
/// exterior probes. Degree 2 adds the quadratic harmonics `x_i x_j` and
/// `x_i^2 - x_j^2`.
pub fn default_family<F: Scalar>(scene: &BallScene<F>, degree: u32) -> Vec<TestFunction<F>> {
    let n = scene.dimension;
    let mut family = Vec::new();

    family.push(TestFunction {
        id: "const".into(),
        kind: Kind::Harmonic,
        def: Def::Constant(F::one()),
    });
    for axis in 0..n {
        for sign in [1i8, -1] {
            let tag = if sign >= 0 { '+' } else { '-' };
            family.push(TestFunction {
                id: format!("coord({tag}x{})", axis + 1),
                kind: Kind::Harmonic,
                def: Def::Coordinate { axis, sign },
            });
        }
    }
    if degree >= 2 {
        for i in 0..n {
            for j in i + 1..n {
                family.push(TestFunction {
                    id: format!("cross(x{},x{})", i + 1, j + 1),
                    kind: Kind::Harmonic,
                    def: Def::Cross { i, j },
                });
                family.push(TestFunction {
                    id: format!("sqdiff(x{},x{})", i + 1, j + 1),
                    kind: Kind::Harmonic,
                    def: Def::SquareDiff { i, j },
                });
            }
        }
    }

    // Squared-distance anchors: outer center, half-radius axis points, and
    // the deleted-ball centers.
    let mut anchors: Vec<Vec<F>> = vec![scene.outer.center.clone()];
    let half = scene.outer.radius * lit(0.5);
    for axis in 0..n {
        for sign in [F::one(), -F::one()] {
            let mut p = scene.outer.center.clone();
            p[axis] = p[axis] + sign * half;
            anchors.push(p);
        }
    }
    let mut kernel_poles: Vec<Vec<F>> = Vec::new();
    for b in &scene.deleted {
        anchors.push(b.center.clone());
        kernel_poles.push(b.center.clone());
    }
    if let Some(g) = &scene.generator {
        for m in g.start..g.start + 3 {
            kernel_poles.push(g.ball(n, m).center);
        }
        anchors.push(g.ball(n, g.start).center);
    }
    // Exterior probes, well off the outer sphere.
    let probe = scene.outer.radius * lit(1.5);
    for axis in 0..n {
        for sign in [F::one(), -F::one()] {
            let mut p = scene.outer.center.clone();
            p[axis] = p[axis] + sign * probe;
            kernel_poles.push(p);
        }
    }

    for pole in anchors {
        family.push(TestFunction {
            id: format!("sqdist({})", format_point(&pole)),
            kind: Kind::Subharmonic,
            def: Def::SquaredDist { pole },
        });
    }
    for pole in kernel_poles {
        if n == 2 {
            family.push(TestFunction {
                id: format!("logker({})", format_point(&pole)),
                kind: Kind::Subharmonic,
                def: Def::LogKernel { pole },
            });
        } else {
            family.push(TestFunction {
                id: format!("newton({})", format_point(&pole)),
                kind: Kind::Subharmonic,
                def: Def::NewtonKernel { pole },
            });
        }
    }
    family
}

/// Tolerance policy for membership and maximality checks: absolute floor
/// plus a multiple of the relevant Monte Carlo standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlackTolerance {
    pub abs: f64,
    pub stderr_mult: f64,
    /// Poles closer than this to a support are skipped, not evaluated.
    pub pole_margin: f64,
}

impl Default for SlackTolerance {
    fn default() -> Self {
        SlackTolerance {
            abs: 1e-9,
            stderr_mult: 3.0,
            pole_margin: crate::measure::POLE_MARGIN,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberSlack<F> {
    pub id: String,
    pub kind: Kind,
    pub value_at_z: F,
    pub integral: F,
    pub stderr: F,
    pub tol: F,
    /// `integral - value_at_z`; membership needs this >= -tol for
    /// subharmonic members and |slack| <= tol for harmonic ones.
    pub slack: F,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct JensenReport<F> {
    pub pass: bool,
    pub members: Vec<MemberSlack<F>>,
    pub skipped: Vec<String>,
}

fn pole_too_close<F: Scalar>(
    f: &TestFunction<F>,
    mu: &EmpiricalMeasure<F>,
    margin: F,
) -> bool {
    match f.pole() {
        None => false,
        Some(p) => mu.support().iter().any(|x| dist(x, p) < margin),
    }
}

/// Checks the sub-averaging inequality `f(z) <= mu(f)` for subharmonic
/// members and the mean-value identity for harmonic ones, member by member.
pub fn verify_jensen<F: Scalar>(
    mu: &EmpiricalMeasure<F>,
    z: &[F],
    family: &[TestFunction<F>],
    tol: &SlackTolerance,
) -> Result<JensenReport<F>, JensenError> {
    if mu.barycenter != z {
        return Err(JensenError::BarycenterMismatch {
            claimed: format_point(&mu.barycenter),
            asked: format_point(z),
        });
    }
    let margin = lit(tol.pole_margin);
    let mut members = Vec::new();
    let mut skipped = Vec::new();
    let mut pass = true;
    for f in family {
        if pole_too_close(f, mu, margin) {
            skipped.push(f.id.clone());
            continue;
        }
        let value_at_z = f.eval(z);
        let (integral, stderr) = mu.integrate_with_stderr(&f.id, |x| f.eval(x))?;
        let t = lit::<F>(tol.abs) + lit::<F>(tol.stderr_mult) * stderr;
        let slack = integral - value_at_z;
        let ok = match f.kind {
            Kind::Subharmonic => slack >= -t,
            Kind::Harmonic => slack.abs() <= t,
        };
        pass &= ok;
        members.push(MemberSlack {
            id: f.id.clone(),
            kind: f.kind,
            value_at_z,
            integral,
            stderr,
            tol: t,
            slack,
            pass: ok,
        });
    }
    Ok(JensenReport {
        pass,
        members,
        skipped,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeCheck<F> {
    pub candidate: usize,
    pub witness: String,
    pub omega_value: F,
    pub candidate_value: F,
    pub tol: F,
    pub refuted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MaximalityReport<F> {
    /// Candidates dropped because they failed the membership check, with the
    /// failing member ids.
    pub excluded: Vec<(usize, Vec<String>)>,
    pub checks: Vec<ProbeCheck<F>>,
    pub refutations: usize,
    /// True when no evaluated witness refuted domination.
    pub pass: bool,
}

/// Probes maximality of `omega` against candidate measures with the same
/// barycenter: on every subharmonic witness, `omega(f)` must not fall below
/// the candidate's value beyond tolerance. A refutation is evidence that
/// `omega` is not maximal; absence of refutations is only consistency.
pub fn maximality_probe<F: Scalar>(
    omega: &EmpiricalMeasure<F>,
    z: &[F],
    candidates: &[EmpiricalMeasure<F>],
    family: &[TestFunction<F>],
    tol: &SlackTolerance,
) -> Result<MaximalityReport<F>, JensenError> {
    let mut excluded = Vec::new();
    let mut checks = Vec::new();
    let mut refutations = 0usize;
    let margin = lit(tol.pole_margin);

    for (ci, cand) in candidates.iter().enumerate() {
        let membership = verify_jensen(cand, z, family, tol)?;
        if !membership.pass {
            let failing: Vec<String> = membership
                .members
                .iter()
                .filter(|m| !m.pass)
                .map(|m| m.id.clone())
                .collect();
            excluded.push((ci, failing));
            continue;
        }
        for f in family {
            if f.kind != Kind::Subharmonic {
                continue;
            }
            if pole_too_close(f, omega, margin) || pole_too_close(f, cand, margin) {
                continue;
            }
            let (ov, os) = omega.integrate_with_stderr(&f.id, |x| f.eval(x))?;
            let (cv, cs) = cand.integrate_with_stderr(&f.id, |x| f.eval(x))?;
            let t = lit::<F>(tol.abs)
                + lit::<F>(tol.stderr_mult) * (os * os + cs * cs).sqrt();
            let refuted = ov < cv - t;
            refutations += refuted as usize;
            checks.push(ProbeCheck {
                candidate: ci,
                witness: f.id.clone(),
                omega_value: ov,
                candidate_value: cv,
                tol: t,
                refuted,
            });
        }
    }
    Ok(MaximalityReport {
        excluded,
        checks,
        refutations,
        pass: refutations == 0,
    })
}
