//! Empirical measures on boundary samples, and the sub-averaging order.
//!
//! A measure here is a finite list of support points with nonnegative weights
//! summing to one, a claimed barycenter, and provenance describing how it was
//! produced. Comparison happens against a finite witness family: the verdict
//! is always "up to the family and tolerance", never an absolute claim.

use serde::Serialize;
use thiserror::Error;

use crate::geom::{all_finite, dist, format_point};
use crate::jensen::{Kind, TestFunction};
use crate::rng::{stream_rng, uniform_in_ball, unit_sphere_dir};
use crate::scalar::{lit, Scalar};

/// Weight normalization slack accepted by the constructor.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("weight {index} is negative: {value}")]
    NegativeWeight { index: usize, value: String },
    #[error("weights sum to {sum}, expected 1 within {tol}")]
    BadNormalization { sum: String, tol: f64 },
    #[error("support point {index} has a non-finite coordinate")]
    BadSupport { index: usize },
    #[error("support/weight/barycenter dimensions disagree")]
    DimensionMismatch,
    #[error("test function {id} is non-finite at support point ({point})")]
    NonFinite { id: String, point: String },
    #[error("witness family must contain every coordinate function with both signs")]
    FamilyIncomplete,
    #[error("csv parse: {0}")]
    Csv(String),
}

/// How a measure came to be; embedded in exports.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Provenance {
    pub source: String,
    pub seed: Option<u64>,
    pub samples: usize,
    pub epsilon: Option<f64>,
    pub absorb_delta: Option<f64>,
    pub truncation_fraction: f64,
    /// Declared deleted-ball truncation of the originating scene.
    pub scene_truncation: Option<usize>,
    pub warnings: Vec<String>,
}

impl Provenance {
    pub fn tagged(source: &str) -> Self {
        Provenance {
            source: source.to_string(),
            ..Provenance::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalMeasure<F> {
    support: Vec<Vec<F>>,
    weights: Vec<F>,
    pub barycenter: Vec<F>,
    pub provenance: Provenance,
}

impl<F: Scalar> EmpiricalMeasure<F> {
    pub fn new(
        support: Vec<Vec<F>>,
        weights: Vec<F>,
        barycenter: Vec<F>,
        provenance: Provenance,
    ) -> Result<Self, MeasureError> {
        if support.len() != weights.len() || support.is_empty() {
            return Err(MeasureError::DimensionMismatch);
        }
        let dim = barycenter.len();
        for (index, p) in support.iter().enumerate() {
            if p.len() != dim {
                return Err(MeasureError::DimensionMismatch);
            }
            if !all_finite(p) {
                return Err(MeasureError::BadSupport { index });
            }
        }
        for (index, w) in weights.iter().enumerate() {
            if *w < F::zero() {
                return Err(MeasureError::NegativeWeight {
                    index,
                    value: format!("{w}"),
                });
            }
        }
        // Compensated sum: 1e5 equal weights drift past the tolerance when
        // added naively.
        let mut sum = F::zero();
        let mut comp = F::zero();
        for &w in &weights {
            let t = sum + w;
            comp = comp
                + if sum.abs() >= w.abs() {
                    (sum - t) + w
                } else {
                    (w - t) + sum
                };
            sum = t;
        }
        let sum = sum + comp;
        if (sum - F::one()).abs() > lit(WEIGHT_TOL) {
            return Err(MeasureError::BadNormalization {
                sum: format!("{sum}"),
                tol: WEIGHT_TOL,
            });
        }
        Ok(EmpiricalMeasure {
            support,
            weights,
            barycenter,
            provenance,
        })
    }

    /// Point mass at `z`.
    pub fn dirac(z: Vec<F>) -> Self {
        EmpiricalMeasure {
            support: vec![z.clone()],
            weights: vec![F::one()],
            barycenter: z,
            provenance: Provenance::tagged("dirac"),
        }
    }

    pub fn support(&self) -> &[Vec<F>] {
        &self.support
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.barycenter.len()
    }

    /// Weighted integral of `f`; errors on a non-finite value, naming the
    /// offending support point.
    pub fn integrate(&self, id: &str, f: impl Fn(&[F]) -> F) -> Result<F, MeasureError> {
        let mut acc = F::zero();
        for (p, w) in self.support.iter().zip(&self.weights) {
            let v = f(p);
            if !v.is_finite() {
                return Err(MeasureError::NonFinite {
                    id: id.to_string(),
                    point: format_point(p),
                });
            }
            acc = acc + *w * v;
        }
        Ok(acc)
    }

    /// Integral plus a standard error estimate treating support points as
    /// independent draws. Exact atoms (single-point measures) report zero.
    pub fn integrate_with_stderr(
        &self,
        id: &str,
        f: impl Fn(&[F]) -> F,
    ) -> Result<(F, F), MeasureError> {
        let mean = self.integrate(id, &f)?;
        let n = self.support.len();
        if n < 2 {
            return Ok((mean, F::zero()));
        }
        let mut var = F::zero();
        for (p, w) in self.support.iter().zip(&self.weights) {
            let d = f(p) - mean;
            var = var + *w * *w * d * d;
        }
        let bessel = lit::<F>(n as f64 / (n as f64 - 1.0));
        Ok((mean, (var * bessel).sqrt()))
    }

    /// Total weight within distance `r` of `z`.
    pub fn mass_within(&self, z: &[F], r: F) -> F {
        let mut acc = F::zero();
        for (p, w) in self.support.iter().zip(&self.weights) {
            if dist(p, z) <= r {
                acc = acc + *w;
            }
        }
        acc
    }

    /// Empirical mean of the support points under the weights.
    pub fn support_mean(&self) -> Vec<F> {
        let dim = self.dimension();
        let mut mean = vec![F::zero(); dim];
        for (p, w) in self.support.iter().zip(&self.weights) {
            for i in 0..dim {
                mean[i] = mean[i] + *w * p[i];
            }
        }
        mean
    }

    /// CSV with columns x_1..x_n, weight. The header comments carry the
    /// provenance needed to reproduce the run; output is byte-deterministic.
    pub fn to_csv(&self) -> String {
        let p = &self.provenance;
        let mut s = String::new();
        s.push_str(&format!(
            "# source={} seed={} samples={} absorb_delta={} truncation_fraction={} epsilon={} scene_truncation={}\n",
            p.source,
            p.seed.map_or("none".into(), |v| v.to_string()),
            p.samples,
            p.absorb_delta.map_or("none".into(), |v| v.to_string()),
            p.truncation_fraction,
            p.epsilon.map_or("none".into(), |v| v.to_string()),
            p.scene_truncation.map_or("none".into(), |v| v.to_string()),
        ));
        for w in &p.warnings {
            s.push_str(&format!("# warning={w}\n"));
        }
        s.push_str(&format!("# barycenter={}\n", format_point(&self.barycenter)));
        let dim = self.dimension();
        let cols: Vec<String> = (1..=dim).map(|i| format!("x_{i}")).collect();
        s.push_str(&cols.join(","));
        s.push_str(",weight\n");
        for (pt, w) in self.support.iter().zip(&self.weights) {
            s.push_str(&format_point(pt));
            s.push_str(&format!(",{w}\n"));
        }
        s
    }
}

impl EmpiricalMeasure<f64> {
    /// Parses the `to_csv` format back. Round-trips support and weights bit
    /// for bit; provenance comes back from the header comments.
    pub fn from_csv(text: &str) -> Result<Self, MeasureError> {
        let mut provenance = Provenance::tagged("csv");
        let mut barycenter: Option<Vec<f64>> = None;
        let mut support = Vec::new();
        let mut weights = Vec::new();
        let mut saw_header = false;
        let parse_f = |s: &str| -> Result<f64, MeasureError> {
            s.parse::<f64>()
                .map_err(|_| MeasureError::Csv(format!("bad number: {s}")))
        };
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for field in rest.split_whitespace() {
                    let Some((k, v)) = field.split_once('=') else {
                        continue;
                    };
                    match k {
                        "source" => provenance.source = v.to_string(),
                        "seed" => provenance.seed = v.parse().ok(),
                        "samples" => provenance.samples = v.parse().unwrap_or(0),
                        "absorb_delta" => provenance.absorb_delta = v.parse().ok(),
                        "epsilon" => provenance.epsilon = v.parse().ok(),
                        "scene_truncation" => provenance.scene_truncation = v.parse().ok(),
                        "truncation_fraction" => {
                            provenance.truncation_fraction = v.parse().unwrap_or(0.0)
                        }
                        "warning" => provenance.warnings.push(v.to_string()),
                        "barycenter" => {
                            let coords: Result<Vec<f64>, _> =
                                v.split(',').map(parse_f).collect();
                            barycenter = Some(coords?);
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !saw_header {
                // Column header row.
                saw_header = true;
                continue;
            }
            let mut coords: Vec<f64> = Vec::new();
            for part in line.split(',') {
                coords.push(parse_f(part)?);
            }
            let w = coords.pop().ok_or_else(|| MeasureError::Csv("empty row".into()))?;
            support.push(coords);
            weights.push(w);
        }
        let barycenter = barycenter.ok_or_else(|| MeasureError::Csv("missing barycenter".into()))?;
        EmpiricalMeasure::new(support, weights, barycenter, provenance)
    }
}

/// Uniform Monte Carlo sample of the sphere around `center`; a Jensen
/// measure whenever the closed ball sits inside the set interior.
pub fn sphere_sample<F>(center: &[F], radius: F, n_points: usize, seed: u64) -> EmpiricalMeasure<F>
where
    F: crate::scalar::SampleScalar,
{
    let mut rng = stream_rng(seed, 0);
    let dim = center.len();
    let mut support = Vec::with_capacity(n_points);
    let mut dir = vec![F::zero(); dim];
    for _ in 0..n_points {
        unit_sphere_dir(&mut rng, &mut dir);
        let mut p = center.to_vec();
        for i in 0..dim {
            p[i] = p[i] + radius * dir[i];
        }
        support.push(p);
    }
    let w = F::one() / lit(n_points as f64);
    let mut prov = Provenance::tagged("sphere_sample");
    prov.seed = Some(seed);
    prov.samples = n_points;
    EmpiricalMeasure {
        support,
        weights: vec![w; n_points],
        barycenter: center.to_vec(),
        provenance: prov,
    }
}

/// Uniform Monte Carlo sample of the closed ball around `center`.
pub fn ball_sample<F>(center: &[F], radius: F, n_points: usize, seed: u64) -> EmpiricalMeasure<F>
where
    F: crate::scalar::SampleScalar,
{
    let mut rng = stream_rng(seed, 0);
    let dim = center.len();
    let mut support = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let mut p = vec![F::zero(); dim];
        uniform_in_ball(&mut rng, center, radius, &mut p);
        support.push(p);
    }
    let w = F::one() / lit(n_points as f64);
    let mut prov = Provenance::tagged("ball_sample");
    prov.seed = Some(seed);
    prov.samples = n_points;
    EmpiricalMeasure {
        support,
        weights: vec![w; n_points],
        barycenter: center.to_vec(),
        provenance: prov,
    }
}

/// Verdict of an order comparison, always relative to the witness family and
/// tolerance. The first payload is the per-family tolerance description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum OrderRelation {
    /// First measure dominates the second on every subharmonic witness.
    DominatesUpTo(f64),
    DominatedByUpTo(f64),
    EqualUpTo(f64),
    /// Witnesses with opposite strict orderings exist.
    Incomparable,
    /// No informative witness could be evaluated.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessEval<F> {
    pub id: String,
    pub mu: F,
    pub nu: F,
    pub tol: F,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderVerdict<F> {
    pub relation: OrderRelation,
    /// Every witness evaluation, violated or not.
    pub witnesses: Vec<WitnessEval<F>>,
    /// Ids of the witnesses that force the verdict.
    pub deciding: Vec<String>,
    pub skipped: Vec<String>,
}

/// Margin poles must keep from both supports or the member is skipped.
pub const POLE_MARGIN: f64 = 1e-2;

fn pole_near_support<F: Scalar>(f: &TestFunction<F>, m: &EmpiricalMeasure<F>, margin: F) -> bool {
    match f.pole() {
        None => false,
        Some(p) => m.support.iter().any(|x| dist(x, p) < margin),
    }
}

/// Compares two measures in the sub-averaging order over the witness family.
///
/// `tol` of `None` uses three combined standard errors per witness plus a
/// 1e-9 floor, which collapses to the floor for exact (atomic) measures.
/// The family must contain every coordinate function with both signs, so
/// distinct barycenters always produce opposite witnesses.
pub fn compare_order<F: Scalar>(
    mu: &EmpiricalMeasure<F>,
    nu: &EmpiricalMeasure<F>,
    family: &[TestFunction<F>],
    tol: Option<F>,
) -> Result<OrderVerdict<F>, MeasureError> {
    let dim = mu.dimension();
    if nu.dimension() != dim {
        return Err(MeasureError::DimensionMismatch);
    }
    for axis in 0..dim {
        for sign in [1i8, -1] {
            let found = family.iter().any(|f| f.is_coordinate(axis, sign));
            if !found {
                return Err(MeasureError::FamilyIncomplete);
            }
        }
    }

    let margin = lit(POLE_MARGIN);
    let mut witnesses = Vec::new();
    let mut deciding = Vec::new();
    let mut skipped = Vec::new();
    let mut mu_side = false;
    let mut nu_side = false;
    let mut evaluated_nonconstant = 0usize;
    let mut tol_display = 0f64;

    for f in family {
        if pole_near_support(f, mu, margin) || pole_near_support(f, nu, margin) {
            skipped.push(f.id.clone());
            continue;
        }
        let (a, sa) = mu.integrate_with_stderr(&f.id, |x| f.eval(x))?;
        let (b, sb) = nu.integrate_with_stderr(&f.id, |x| f.eval(x))?;
        let t = match tol {
            Some(t) => t,
            None => lit::<F>(3.0) * (sa * sa + sb * sb).sqrt() + lit(1e-9),
        };
        tol_display = tol_display.max(t.to_f64().unwrap_or(0.0));
        if !f.is_constant() {
            evaluated_nonconstant += 1;
        }
        witnesses.push(WitnessEval {
            id: f.id.clone(),
            mu: a,
            nu: b,
            tol: t,
        });
        let diff = a - b;
        match f.kind {
            Kind::Subharmonic => {
                if diff > t {
                    mu_side = true;
                    deciding.push(f.id.clone());
                } else if diff < -t {
                    nu_side = true;
                    deciding.push(f.id.clone());
                }
            }
            Kind::Harmonic => {
                // A harmonic witness and its negation are both admissible,
                // so any violation cuts both ways.
                if diff.abs() > t {
                    mu_side = true;
                    nu_side = true;
                    deciding.push(f.id.clone());
                    deciding.push(format!("neg({})", f.id));
                    witnesses.push(WitnessEval {
                        id: format!("neg({})", f.id),
                        mu: -a,
                        nu: -b,
                        tol: t,
                    });
                }
            }
        }
    }

    let relation = if evaluated_nonconstant == 0 {
        OrderRelation::Inconclusive
    } else if mu_side && nu_side {
        OrderRelation::Incomparable
    } else if mu_side {
        OrderRelation::DominatesUpTo(tol_display)
    } else if nu_side {
        OrderRelation::DominatedByUpTo(tol_display)
    } else {
        OrderRelation::EqualUpTo(tol_display)
    };

    Ok(OrderVerdict {
        relation,
        witnesses,
        deciding,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jensen::default_family;
    use crate::scene::canonical;

    #[test]
    fn constructor_rejects_bad_weights() {
        let prov = Provenance::tagged("test");
        let bad = EmpiricalMeasure::new(
            vec![vec![0.0f64], vec![1.0]],
            vec![0.7, 0.7],
            vec![0.0],
            prov.clone(),
        );
        assert!(matches!(bad, Err(MeasureError::BadNormalization { .. })));
        let neg = EmpiricalMeasure::new(
            vec![vec![0.0f64], vec![1.0]],
            vec![-0.1, 1.1],
            vec![0.0],
            prov,
        );
        assert!(matches!(neg, Err(MeasureError::NegativeWeight { .. })));
    }

    #[test]
    fn cap_mass_of_uniform_sphere() {
        // Spherical cap within distance 1 of a pole covers a quarter of the
        // unit sphere: (1 - cos 60) / 2.
        let mu = sphere_sample::<f64>(&[0.0, 0.0, 0.0], 1.0, 40_000, 11);
        let mass = mu.mass_within(&[0.0, 0.0, 1.0], 1.0);
        assert!((mass - 0.25).abs() < 0.01, "mass {mass}");
    }

    #[test]
    fn sphere_moment_matches_quadrature_value() {
        // Mean of x_1^2 over the unit sphere is 1/3.
        let mu = sphere_sample::<f64>(&[0.0, 0.0, 0.0], 1.0, 40_000, 5);
        let v = mu.integrate("x1sq", |x| x[0] * x[0]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 0.01, "moment {v}");
    }

    #[test]
    fn dirac_vs_sphere_average_is_dominated() {
        let scene = canonical::unit_ball::<f64>(3);
        let family = default_family(&scene, 2);
        let z = vec![0.0, 0.0, 0.0];
        let mu = EmpiricalMeasure::dirac(z.clone());
        let nu = sphere_sample::<f64>(&z, 1.0, 20_000, 3);
        let verdict = compare_order(&mu, &nu, &family, None).unwrap();
        assert!(matches!(verdict.relation, OrderRelation::DominatedByUpTo(_)));
        // Swapping arguments flips the verdict.
        let flipped = compare_order(&nu, &mu, &family, None).unwrap();
        assert!(matches!(flipped.relation, OrderRelation::DominatesUpTo(_)));
    }

    #[test]
    fn distinct_barycenters_are_incomparable() {
        let scene = canonical::unit_ball::<f64>(3);
        let family = default_family(&scene, 1);
        let mu = EmpiricalMeasure::dirac(vec![0.2, 0.0, 0.0]);
        let nu = EmpiricalMeasure::dirac(vec![-0.2, 0.1, 0.0]);
        let verdict = compare_order(&mu, &nu, &family, None).unwrap();
        assert_eq!(verdict.relation, OrderRelation::Incomparable);
        assert!(verdict.deciding.len() >= 2);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let mu = sphere_sample::<f64>(&[0.25, -0.5, 0.125], 0.3, 64, 17);
        let text = mu.to_csv();
        let back = EmpiricalMeasure::from_csv(&text).unwrap();
        assert_eq!(mu.support(), back.support());
        assert_eq!(mu.weights(), back.weights());
        assert_eq!(mu.barycenter, back.barycenter);
        assert_eq!(text, back.to_csv());
    }
}
