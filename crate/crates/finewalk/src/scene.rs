//! Compact sets of the form: closed outer ball minus finitely or countably
//! many disjoint open balls.
//!
//! A scene is the exact description of the set `K`. Deleted balls are listed
//! explicitly, or produced by the `road_runner` generator whose m-th ball has
//! center `(2^-m, 0, ..., 0)` and radius `r_m = coeff * base^-(m+offset)`.
//! The generator keeps the countable family symbolic, so operations that need
//! resolution near the accumulation point (metric classification, the Wiener
//! classifier, neighborhood construction at small epsilon) can extend the
//! materialized list on demand instead of inheriting truncation error.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geom::{dist, Ball};
use crate::scalar::{lit, Scalar};

/// Default classification tolerance: distances at or below this count as zero.
pub const TAU_GEO: f64 = 1e-12;

/// Generator depth used by metric queries. Beyond this the remaining balls
/// are smaller than any tolerance representable in f64.
const METRIC_TAIL: usize = 100;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("dimension {0} unsupported, need at least 2")]
    BadDimension(usize),
    #[error("scene io: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene parse: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Radius law `r_m = coeff * base^-(m + offset)` for generated balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusRule<F> {
    pub coeff: F,
    pub base: F,
    pub offset: F,
}

impl<F: Scalar> RadiusRule<F> {
    pub fn radius(&self, m: usize) -> F {
        self.coeff * self.base.powf(-(lit::<F>(m as f64) + self.offset))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    #[serde(rename = "road_runner")]
    RoadRunner,
}

/// Symbolic rule for a countable family of deleted balls marching into the
/// origin along the first axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator<F> {
    pub kind: GeneratorKind,
    pub radius_rule: RadiusRule<F>,
    /// First index of the family. Indices below `start` are not part of the
    /// scene; the disjointness constraint `r_m < 2^-(m+2)` may force a start
    /// above 1 for fat radius laws.
    #[serde(default = "default_start")]
    pub start: usize,
    /// Declared truncation horizon `M`: how many balls reports enumerate.
    /// Geometry does not truncate; this is a reporting knob and is recorded
    /// in provenance so downstream artifacts can state it.
    pub count: usize,
}

fn default_start() -> usize {
    1
}

impl<F: Scalar> Generator<F> {
    pub fn ball(&self, dimension: usize, m: usize) -> Ball<F> {
        let mut center = vec![F::zero(); dimension];
        center[0] = lit::<F>(2.0).powi(-(m as i32));
        Ball::new(center, self.radius_rule.radius(m))
    }

    /// Generated balls with radius strictly above `threshold`.
    pub fn balls_above(&self, dimension: usize, threshold: F) -> Vec<Ball<F>> {
        let mut out = Vec::new();
        let mut m = self.start;
        loop {
            let r = self.radius_rule.radius(m);
            if !(r > threshold) || m > self.start + 4000 {
                break;
            }
            out.push(self.ball(dimension, m));
            m += 1;
        }
        out
    }

    /// Deep materialization for metric queries.
    fn metric_balls(&self, dimension: usize) -> Vec<Ball<F>> {
        let mut out = Vec::new();
        for m in self.start..self.start + METRIC_TAIL {
            let b = self.ball(dimension, m);
            if b.radius <= F::zero() || b.center[0] <= F::zero() {
                break;
            }
            out.push(b);
        }
        out
    }
}

/// Classification of a point against the compact set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointClass {
    Interior,
    Boundary,
    Exterior,
}

/// The compact set `K`: closed outer ball minus disjoint open deleted balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallScene<F> {
    pub dimension: usize,
    pub outer: Ball<F>,
    #[serde(default = "Vec::new")]
    pub deleted: Vec<Ball<F>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator<F>>,
}

impl<F: Scalar> BallScene<F> {
    pub fn new(outer: Ball<F>, deleted: Vec<Ball<F>>) -> Result<Self, SceneError> {
        let scene = BallScene {
            dimension: outer.center.len(),
            outer,
            deleted,
            generator: None,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn with_generator(
        outer: Ball<F>,
        deleted: Vec<Ball<F>>,
        generator: Generator<F>,
    ) -> Result<Self, SceneError> {
        let scene = BallScene {
            dimension: outer.center.len(),
            outer,
            deleted,
            generator: Some(generator),
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Checks every structural invariant; all other operations assume them.
    pub fn validate(&self) -> Result<(), SceneError> {
        let n = self.dimension;
        if n < 2 {
            return Err(SceneError::BadDimension(n));
        }
        if self.outer.center.len() != n {
            return Err(SceneError::Invalid(format!(
                "outer center has {} coordinates, dimension says {n}",
                self.outer.center.len()
            )));
        }
        if !(self.outer.radius > F::zero()) || !self.outer.radius.is_finite() {
            return Err(SceneError::Invalid("outer radius must be positive and finite".into()));
        }
        for (i, b) in self.deleted.iter().enumerate() {
            if b.center.len() != n {
                return Err(SceneError::Invalid(format!("deleted ball {i} has wrong dimension")));
            }
            if !(b.radius > F::zero()) || !b.radius.is_finite() {
                return Err(SceneError::Invalid(format!("deleted ball {i} has nonpositive radius")));
            }
        }
        // Closed deleted balls must sit inside the open outer ball.
        let check_inside = |b: &Ball<F>, what: &str| -> Result<(), SceneError> {
            if !(dist(&b.center, &self.outer.center) + b.radius < self.outer.radius) {
                return Err(SceneError::Invalid(format!("{what} reaches the outer sphere")));
            }
            Ok(())
        };
        for (i, b) in self.deleted.iter().enumerate() {
            check_inside(b, &format!("deleted ball {i}"))?;
        }
        // Pairwise disjoint closed balls.
        for i in 0..self.deleted.len() {
            for j in i + 1..self.deleted.len() {
                let (a, b) = (&self.deleted[i], &self.deleted[j]);
                if !(dist(&a.center, &b.center) > a.radius + b.radius) {
                    return Err(SceneError::Invalid(format!("deleted balls {i} and {j} overlap")));
                }
            }
        }
        if let Some(g) = &self.generator {
            if g.count == 0 {
                return Err(SceneError::Invalid("generator count must be positive".into()));
            }
            if g.start == 0 {
                return Err(SceneError::Invalid("generator start must be at least 1".into()));
            }
            if !(g.radius_rule.coeff > F::zero()) || !(g.radius_rule.base >= lit(2.0)) {
                return Err(SceneError::Invalid(
                    "generator radius rule needs coeff > 0 and base >= 2".into(),
                ));
            }
            // r_m < 2^-(m+2) keeps consecutive generated balls disjoint; with
            // base >= 2 the ratio r_m / 2^-(m+2) is nonincreasing, so the
            // first index is the binding one.
            let m = g.start;
            let bound = lit::<F>(2.0).powi(-(m as i32 + 2));
            if !(g.radius_rule.radius(m) < bound) {
                return Err(SceneError::Invalid(format!(
                    "generated radius r_{m} violates r_m < 2^-(m+2)"
                )));
            }
            let lead = g.ball(n, g.start);
            check_inside(&lead, "first generated ball")?;
            // Explicit deletions must keep clear of the generated family and
            // of its accumulation point at the origin.
            let origin = vec![F::zero(); n];
            for (i, b) in self.deleted.iter().enumerate() {
                if !(dist(&b.center, &origin) > b.radius) {
                    return Err(SceneError::Invalid(format!(
                        "deleted ball {i} covers the generator accumulation point"
                    )));
                }
                for gb in g.metric_balls(n) {
                    if !(dist(&b.center, &gb.center) > b.radius + gb.radius) {
                        return Err(SceneError::Invalid(format!(
                            "deleted ball {i} overlaps a generated ball"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// All deleted balls relevant to metric queries: explicit plus a deep
    /// materialization of the generated family.
    pub fn metric_holes(&self) -> Vec<Ball<F>> {
        let mut out = self.deleted.clone();
        if let Some(g) = &self.generator {
            out.extend(g.metric_balls(self.dimension));
        }
        out
    }

    /// Deleted balls with radius strictly above `threshold`.
    pub fn holes_above(&self, threshold: F) -> Vec<Ball<F>> {
        let mut out: Vec<Ball<F>> = self
            .deleted
            .iter()
            .filter(|b| b.radius > threshold)
            .cloned()
            .collect();
        if let Some(g) = &self.generator {
            out.extend(g.balls_above(self.dimension, threshold));
        }
        out
    }

    /// The truncation horizon reports should state; explicit deletions plus
    /// the generator's declared count.
    pub fn declared_truncation(&self) -> usize {
        self.deleted.len() + self.generator.as_ref().map_or(0, |g| g.count)
    }

    /// Exact distance from `x` to `K`. Zero iff `x` is in the set.
    pub fn dist_to_k(&self, x: &[F]) -> F {
        let s = self.outer.sphere_signed_dist(x);
        if s > F::zero() {
            return s;
        }
        for b in self.metric_holes() {
            let d = dist(x, &b.center);
            if d < b.radius {
                // Holes are disjoint, so x sits in exactly one.
                return b.radius - d;
            }
        }
        F::zero()
    }

    /// Exact distance from `x` to the complement of `K`. Zero iff `x` lies in
    /// the closure of the complement.
    pub fn dist_to_complement(&self, x: &[F]) -> F {
        let mut d = (self.outer.radius - dist(x, &self.outer.center)).max(F::zero());
        for b in self.metric_holes() {
            let t = (dist(x, &b.center) - b.radius).max(F::zero());
            if t < d {
                d = t;
            }
        }
        d
    }

    /// Distance from `x` to the topological boundary of `K` (the union of
    /// all defining spheres, plus the generator accumulation point).
    pub fn dist_to_boundary_set(&self, x: &[F]) -> F {
        let mut d = self.outer.sphere_signed_dist(x).abs();
        for b in self.metric_holes() {
            let t = b.sphere_signed_dist(x).abs();
            if t < d {
                d = t;
            }
        }
        d
    }

    pub fn classify(&self, x: &[F]) -> PointClass {
        self.classify_with_tau(x, lit(TAU_GEO))
    }

    pub fn classify_with_tau(&self, x: &[F], tau: F) -> PointClass {
        if self.dist_to_k(x) > tau {
            PointClass::Exterior
        } else if self.dist_to_complement(x) > tau {
            PointClass::Interior
        } else {
            PointClass::Boundary
        }
    }

    /// Canonical JSON form. Shortest round-trip decimal encoding, so parsing
    /// the output reproduces every coordinate bit for bit.
    pub fn to_json_string(&self) -> String
    where
        F: Serialize,
    {
        let mut s = serde_json::to_string_pretty(self).expect("scene serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, SceneError>
    where
        F: for<'de> Deserialize<'de>,
    {
        let scene: BallScene<F> = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn save(&self, path: &Path) -> Result<(), SceneError>
    where
        F: Serialize,
    {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SceneError>
    where
        F: for<'de> Deserialize<'de>,
    {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Hash of the canonical JSON form; embedded in report headers.
    pub fn content_hash(&self) -> String
    where
        F: Serialize,
    {
        let compact = serde_json::to_string(self).expect("scene serializes");
        let digest = Sha256::digest(compact.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..16].to_string()
    }
}

/// Canonical scenes used across tests and the command-line examples.
pub mod canonical {
    use super::*;

    /// Closed unit ball in the given dimension.
    pub fn unit_ball<F: Scalar>(dimension: usize) -> BallScene<F> {
        BallScene::new(Ball::new(vec![F::zero(); dimension], F::one()), Vec::new())
            .expect("unit ball is valid")
    }

    /// Unit ball minus the open concentric ball of radius `inner`, in R^3.
    pub fn shell<F: Scalar>(inner: f64) -> BallScene<F> {
        BallScene::new(
            Ball::new(vec![F::zero(); 3], F::one()),
            vec![Ball::new(vec![F::zero(); 3], lit(inner))],
        )
        .expect("shell is valid")
    }

    /// Unit ball in R^3 with three off-center holes.
    pub fn swiss_cheese<F: Scalar>() -> BallScene<F> {
        BallScene::new(
            Ball::new(vec![F::zero(); 3], F::one()),
            vec![
                Ball::new(vec![lit(0.5), F::zero(), F::zero()], lit(0.18)),
                Ball::new(vec![lit(-0.3), lit(0.4), F::zero()], lit(0.15)),
                Ball::new(vec![F::zero(), lit(-0.45), lit(0.3)], lit(0.12)),
            ],
        )
        .expect("swiss cheese is valid")
    }

    /// Road-runner scene with fast-shrinking holes `r_m = 4^-m` in R^3.
    ///
    /// Indices start at 3: the disjointness constraint `r_m < 2^-(m+2)` fails
    /// for `4^-m` at m = 1, 2 (those balls would overlap their neighbors), so
    /// the thin family is the tail from m = 3 on. The complement is thin at
    /// the origin.
    pub fn road_runner_thin<F: Scalar>() -> BallScene<F> {
        BallScene::with_generator(
            Ball::new(vec![F::zero(); 3], F::one()),
            Vec::new(),
            Generator {
                kind: GeneratorKind::RoadRunner,
                radius_rule: RadiusRule {
                    coeff: F::one(),
                    base: lit(4.0),
                    offset: F::zero(),
                },
                start: 3,
                count: 8,
            },
        )
        .expect("thin road runner is valid")
    }

    /// Road-runner scene with near-maximal holes `r_m = 0.99 * 2^-(m+2)` in
    /// R^3. The complement is non-thin at the origin.
    pub fn road_runner_fat<F: Scalar>() -> BallScene<F> {
        BallScene::with_generator(
            Ball::new(vec![F::zero(); 3], F::one()),
            Vec::new(),
            Generator {
                kind: GeneratorKind::RoadRunner,
                radius_rule: RadiusRule {
                    coeff: lit(0.99),
                    base: lit(2.0),
                    offset: lit(2.0),
                },
                start: 1,
                count: 8,
            },
        )
        .expect("fat road runner is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_distances_match_hand_values() {
        let scene = canonical::shell::<f64>(0.5);
        let x = [0.75, 0.0, 0.0];
        assert_eq!(scene.dist_to_k(&x), 0.0);
        assert!((scene.dist_to_complement(&x) - 0.25).abs() < 1e-15);
        assert_eq!(scene.classify(&x), PointClass::Interior);
        assert_eq!(scene.classify(&[1.0, 0.0, 0.0]), PointClass::Boundary);
        assert_eq!(scene.classify(&[0.0, 0.0, 0.0]), PointClass::Exterior);
        assert!((scene.dist_to_k(&[0.0, 0.0, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn overlap_is_rejected() {
        let bad = BallScene::new(
            Ball::new(vec![0.0_f64; 2], 1.0),
            vec![
                Ball::new(vec![0.3, 0.0], 0.2),
                Ball::new(vec![0.55, 0.0], 0.1),
            ],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn hole_touching_outer_sphere_is_rejected() {
        let bad = BallScene::new(
            Ball::new(vec![0.0_f64; 2], 1.0),
            vec![Ball::new(vec![0.8, 0.0], 0.2)],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn accumulation_point_is_boundary_for_generator_scenes() {
        let scene = canonical::road_runner_thin::<f64>();
        let origin = [0.0, 0.0, 0.0];
        assert_eq!(scene.classify(&origin), PointClass::Boundary);
        // Points on the first axis between holes stay in the set.
        let x = [0.09, 0.0, 0.0];
        assert_eq!(scene.dist_to_k(&x), 0.0);
    }

    #[test]
    fn fat_road_runner_first_index_must_be_one() {
        let scene = canonical::road_runner_fat::<f64>();
        let g = scene.generator.as_ref().unwrap();
        assert_eq!(g.start, 1);
        // Radius law sits strictly under the disjointness bound.
        assert!(g.radius_rule.radius(1) < 0.125);
    }

    #[test]
    fn thin_rule_from_index_one_is_invalid() {
        let bad = BallScene::with_generator(
            Ball::new(vec![0.0_f64; 3], 1.0),
            Vec::new(),
            Generator {
                kind: GeneratorKind::RoadRunner,
                radius_rule: RadiusRule {
                    coeff: 1.0,
                    base: 4.0,
                    offset: 0.0,
                },
                start: 1,
                count: 8,
            },
        );
        assert!(bad.is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let scene = canonical::swiss_cheese::<f64>();
        let text = scene.to_json_string();
        let back = BallScene::<f64>::from_json_str(&text).unwrap();
        assert_eq!(scene, back);
        assert_eq!(text, back.to_json_string());
        assert_eq!(scene.content_hash(), back.content_hash());
    }

    #[test]
    fn awkward_decimals_round_trip() {
        let scene = BallScene::new(
            Ball::new(vec![0.1_f64, 0.2, 0.3], 1.0000000000000002),
            vec![Ball::new(vec![1.0 / 3.0, 0.0, 0.0], 0.1 + 1e-16)],
        )
        .unwrap();
        let back = BallScene::<f64>::from_json_str(&scene.to_json_string()).unwrap();
        assert_eq!(scene, back);
    }
}
