//! Epsilon-neighborhoods of a scene, as walk-ready open domains.
//!
//! The open set `{ dist_to_k < eps }` is again ball-shaped: the outer radius
//! grows by `eps`, every deleted ball shrinks by `eps`, and deleted balls
//! with radius at most `eps` vanish exactly. This makes the neighborhood of
//! a generator scene finitely representable with no truncation error.

use serde::Serialize;
use thiserror::Error;

use crate::geom::{dist, project_to_sphere, Ball};
use crate::scalar::Scalar;
use crate::scene::BallScene;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("neighborhood width must be positive, got {0}")]
    BadEpsilon(String),
    #[error("schedule needs 0 < ratio < 1 and at least one level")]
    BadSchedule,
}

/// Open neighborhood of the scene: enlarged outer ball minus shrunk closed
/// deleted balls.
#[derive(Clone, Debug, Serialize)]
pub struct Domain<F> {
    pub dimension: usize,
    pub epsilon: F,
    pub outer: Ball<F>,
    pub holes: Vec<Ball<F>>,
}

impl<F: Scalar> Domain<F> {
    /// Builds the `eps`-neighborhood of the scene.
    pub fn neighborhood(scene: &BallScene<F>, eps: F) -> Result<Self, DomainError> {
        if !(eps > F::zero()) || !eps.is_finite() {
            return Err(DomainError::BadEpsilon(format!("{eps}")));
        }
        let outer = Ball::new(scene.outer.center.clone(), scene.outer.radius + eps);
        let holes = scene
            .holes_above(eps)
            .into_iter()
            .map(|b| Ball::new(b.center, b.radius - eps))
            .collect();
        Ok(Domain {
            dimension: scene.dimension,
            epsilon: eps,
            outer,
            holes,
        })
    }

    /// Distance from an interior point to the domain boundary; nonpositive
    /// values mean `x` is outside the domain or on its boundary.
    #[inline]
    pub fn dist_to_boundary(&self, x: &[F]) -> F {
        let mut d = self.outer.radius - dist(x, &self.outer.center);
        for b in &self.holes {
            let t = dist(x, &b.center) - b.radius;
            if t < d {
                d = t;
            }
        }
        d
    }

    #[inline]
    pub fn contains(&self, x: &[F]) -> bool {
        self.dist_to_boundary(x) > F::zero()
    }

    /// Unsigned distance from an arbitrary point to the boundary sphere set.
    pub fn dist_to_shell(&self, x: &[F]) -> F {
        let mut d = self.outer.sphere_signed_dist(x).abs();
        for b in &self.holes {
            let t = b.sphere_signed_dist(x).abs();
            if t < d {
                d = t;
            }
        }
        d
    }

    /// Moves `x` onto the nearest boundary sphere.
    pub fn project_to_boundary(&self, x: &mut [F]) {
        let mut best = self.outer.sphere_signed_dist(x).abs();
        let mut which = None;
        for (i, b) in self.holes.iter().enumerate() {
            let t = b.sphere_signed_dist(x).abs();
            if t < best {
                best = t;
                which = Some(i);
            }
        }
        match which {
            None => project_to_sphere(x, &self.outer.center, self.outer.radius),
            Some(i) => project_to_sphere(x, &self.holes[i].center, self.holes[i].radius),
        }
    }

    /// Smallest sphere radius in the domain; walks should absorb well below
    /// this scale.
    pub fn min_feature(&self) -> F {
        let mut m = self.outer.radius;
        for b in &self.holes {
            if b.radius < m {
                m = b.radius;
            }
        }
        m
    }
}

/// Geometric schedule `eps_j = eps0 * ratio^j`, j = 0..count.
pub fn domain_schedule<F: Scalar>(
    scene: &BallScene<F>,
    eps0: F,
    ratio: F,
    count: usize,
) -> Result<Vec<Domain<F>>, DomainError> {
    if count == 0 || !(ratio > F::zero()) || !(ratio < F::one()) {
        return Err(DomainError::BadSchedule);
    }
    let mut out = Vec::with_capacity(count);
    let mut eps = eps0;
    for _ in 0..count {
        out.push(Domain::neighborhood(scene, eps)?);
        eps = eps * ratio;
    }
    Ok(out)
}
