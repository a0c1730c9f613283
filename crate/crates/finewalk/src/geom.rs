//! Flat-vector geometry helpers.
//!
//! Points are plain `Vec<F>` slices since the ambient dimension is a runtime
//! parameter. The helpers stay allocation-free so the walk loop can run hot.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Closed or open ball; openness is decided by the consumer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball<F> {
    pub center: Vec<F>,
    pub radius: F,
}

impl<F: Scalar> Ball<F> {
    pub fn new(center: Vec<F>, radius: F) -> Self {
        Ball { center, radius }
    }

    /// Signed distance to the sphere bounding this ball (negative inside).
    #[inline]
    pub fn sphere_signed_dist(&self, x: &[F]) -> F {
        dist(x, &self.center) - self.radius
    }
}

#[inline]
pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut s = F::zero();
    for i in 0..a.len() {
        s = s + a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm<F: Scalar>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut s = F::zero();
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s = s + d * d;
    }
    s.sqrt()
}

/// `out = a + t * dir`.
#[inline]
pub fn axpy<F: Scalar>(out: &mut [F], a: &[F], t: F, dir: &[F]) {
    for i in 0..out.len() {
        out[i] = a[i] + t * dir[i];
    }
}

/// Projects `x` radially onto the sphere around `center` with `radius`.
///
/// Falls back to the first axis direction when `x` sits on the center, which
/// can only happen for walkers started exactly there.
pub fn project_to_sphere<F: Scalar>(x: &mut [F], center: &[F], radius: F) {
    let d = dist(x, center);
    if d == F::zero() {
        x.copy_from_slice(center);
        x[0] = x[0] + radius;
        return;
    }
    let scale = radius / d;
    for i in 0..x.len() {
        x[i] = center[i] + (x[i] - center[i]) * scale;
    }
}

pub fn all_finite<F: Scalar>(x: &[F]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Renders a point as comma-separated decimals, shortest round-trip form.
pub fn format_point<F: Scalar>(x: &[F]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    parts.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_lands_on_sphere() {
        let c = vec![1.0f64, 0.0, 0.0];
        let mut x = vec![3.0, 4.0, 0.0];
        project_to_sphere(&mut x, &c, 2.0);
        assert!((dist(&x, &c) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_projection_picks_axis() {
        let c = vec![0.0f64, 0.0];
        let mut x = vec![0.0, 0.0];
        project_to_sphere(&mut x, &c, 0.5);
        assert_eq!(x, vec![0.5, 0.0]);
    }
}
