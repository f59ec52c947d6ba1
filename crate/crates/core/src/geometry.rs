//! Closed-form geometry of eccentric annuli `B_{R1}(0) \ closed B_{R0}(s e1)`.
//!
//! Everything here is exact: no quadrature, no meshes. Offsets beyond the
//! contained regime are accepted where the closed forms still make sense.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative margin the mesh generator keeps between the inner and outer circles.
pub const CONTAINED_MARGIN: f64 = 1e-6;

/// Outer ball of radius `r1` at the origin minus the closed inner ball of
/// radius `r0` centred at `s * e1`, in `dim` space dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusSpec {
    pub r1: f64,
    pub r0: f64,
    pub s: f64,
    pub dim: usize,
}

/// Where the inner ball sits relative to the outer one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetRegime {
    /// `s < R1 - R0`: inner ball strictly inside.
    Contained,
    /// `R1 - R0 <= s < R1 + R0`: the balls overlap.
    Overlapping,
    /// `s >= R1 + R0`: the inner ball no longer cuts the outer one.
    Disjoint,
}

impl AnnulusSpec {
    pub fn new(r1: f64, r0: f64, s: f64, dim: usize) -> Result<Self> {
        let spec = Self { r1, r0, s, dim };
        spec.validate()?;
        Ok(spec)
    }

    /// Two-dimensional annulus.
    pub fn planar(r1: f64, r0: f64, s: f64) -> Result<Self> {
        Self::new(r1, r0, s, 2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r1.is_finite() && self.r0.is_finite() && self.s.is_finite()) {
            return Err(Error::InvalidSpec("radii and offset must be finite".into()));
        }
        if !(self.r0 > 0.0 && self.r0 < self.r1) {
            return Err(Error::InvalidSpec(format!(
                "need 0 < R0 < R1, got R0 = {}, R1 = {}",
                self.r0, self.r1
            )));
        }
        if self.s < 0.0 {
            return Err(Error::InvalidSpec(format!("offset must be >= 0, got {}", self.s)));
        }
        if self.dim < 2 {
            return Err(Error::InvalidSpec(format!(
                "dimension must be >= 2, got {}",
                self.dim
            )));
        }
        Ok(())
    }

    /// Same radii and dimension, different offset.
    pub fn with_offset(&self, s: f64) -> Self {
        Self { s, ..*self }
    }

    pub fn regime(&self) -> OffsetRegime {
        if self.s < self.r1 - self.r0 {
            OffsetRegime::Contained
        } else if self.s < self.r1 + self.r0 {
            OffsetRegime::Overlapping
        } else {
            OffsetRegime::Disjoint
        }
    }

    /// Largest offset accepted by mesh-backed computations.
    pub fn max_mesh_offset(&self) -> f64 {
        self.r1 - self.r0 - CONTAINED_MARGIN * self.r1
    }

    /// Errors unless the inner ball is strictly contained with the mesh margin.
    pub fn check_contained(&self) -> Result<()> {
        self.validate()?;
        if self.s > self.max_mesh_offset() {
            return Err(Error::OffsetOutOfRange {
                s: self.s,
                limit: self.r1 - self.r0,
            });
        }
        Ok(())
    }
}

/// True iff `point` lies in the open annulus.
pub fn contains(spec: &AnnulusSpec, point: &[f64]) -> Result<bool> {
    if point.len() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            got: point.len(),
        });
    }
    let outer2: f64 = point.iter().map(|x| x * x).sum();
    let inner2: f64 = point
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let c = if k == 0 { spec.s } else { 0.0 };
            (x - c) * (x - c)
        })
        .sum();
    Ok(outer2 < spec.r1 * spec.r1 && inner2 > spec.r0 * spec.r0)
}

/// Radius of the largest ball inscribed in the annulus.
///
/// The widest gap lies on the side opposite the offset: it spans from the far
/// point of the inner sphere, at distance `s + R0` from the origin, to the
/// outer sphere. Once the inner ball leaves the outer one entirely the whole
/// outer ball is available.
pub fn inradius(spec: &AnnulusSpec) -> f64 {
    if spec.s >= spec.r1 + spec.r0 {
        spec.r1
    } else {
        0.5 * (spec.r1 - spec.r0 + spec.s)
    }
}

/// Limit of `lambda_1(p)^{1/p}` as `p -> infinity`: the reciprocal inradius.
pub fn lambda_infinity(spec: &AnnulusSpec) -> f64 {
    1.0 / inradius(spec)
}

/// Surface area of the unit sphere `S^{n-1}` in `R^n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    // |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2); use the two-step recurrence to
    // stay exact in closed form.
    match n {
        0 => 2.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => unit_sphere_area(n - 2) * 2.0 * PI / (n as f64 - 2.0),
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    unit_sphere_area(n) / n as f64
}

/// `|boundary| / |domain|` for a contained eccentric annulus.
///
/// The boundary spheres are disjoint, so neither measure depends on `s`;
/// for `s = 0` this is the Cheeger constant of the (calibrable) concentric
/// annulus, and an upper bound on it for `s > 0`.
pub fn perimeter_volume_ratio(spec: &AnnulusSpec) -> f64 {
    let n = spec.dim as i32;
    let area = unit_sphere_area(spec.dim) * (spec.r1.powi(n - 1) + spec.r0.powi(n - 1));
    let volume = unit_ball_volume(spec.dim) * (spec.r1.powi(n) - spec.r0.powi(n));
    area / volume
}

/// Mirror image of `point` across the affine hyperplane
/// `{x : <normal, x - offset e1> = 0}`.
pub fn reflect(point: &[f64], normal: &[f64], offset: f64) -> Result<Vec<f64>> {
    if point.len() != normal.len() {
        return Err(Error::DimensionMismatch {
            expected: normal.len(),
            got: point.len(),
        });
    }
    let norm2: f64 = normal.iter().map(|a| a * a).sum();
    if norm2 == 0.0 || !norm2.is_finite() {
        return Err(Error::ZeroNormal);
    }
    let mut shifted = point.to_vec();
    if let Some(first) = shifted.first_mut() {
        *first -= offset;
    }
    let dot: f64 = shifted.iter().zip(normal).map(|(x, a)| x * a).sum();
    let scale = 2.0 * dot / norm2;
    let mut out: Vec<f64> = shifted.iter().zip(normal).map(|(x, a)| x - scale * a).collect();
    if let Some(first) = out.first_mut() {
        *first += offset;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn planar(r1: f64, r0: f64, s: f64) -> AnnulusSpec {
        AnnulusSpec::planar(r1, r0, s).unwrap()
    }

    #[test]
    fn rejects_bad_radii() {
        assert!(AnnulusSpec::planar(0.3, 0.9, 0.0).is_err());
        assert!(AnnulusSpec::planar(1.0, 0.0, 0.0).is_err());
        assert!(AnnulusSpec::planar(1.0, 0.3, -0.1).is_err());
        assert!(AnnulusSpec::new(1.0, 0.3, 0.0, 1).is_err());
    }

    #[test]
    fn containment() {
        let c = planar(1.0, 0.3, 0.0);
        assert!(contains(&c, &[0.5, 0.0]).unwrap());
        assert!(!contains(&c, &[0.0, 0.0]).unwrap());
        let e = planar(1.0, 0.3, 0.5);
        assert!(contains(&e, &[-0.5, 0.0]).unwrap());
        assert!(!contains(&e, &[0.5, 0.1]).unwrap());
        assert_eq!(
            contains(&c, &[0.5]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn inradius_branches() {
        assert_relative_eq!(inradius(&planar(1.0, 0.3, 0.0)), 0.35, epsilon = 1e-15);
        assert_relative_eq!(inradius(&planar(1.0, 0.3, 0.4)), 0.55, epsilon = 1e-15);
        assert_eq!(inradius(&planar(1.0, 0.3, 1.3)), 1.0);
        // continuity at s = R1 + R0
        assert_relative_eq!(inradius(&planar(1.0, 0.3, 1.3 - 1e-12)), 1.0, epsilon = 1e-11);
    }

    #[test]
    fn lambda_infinity_values() {
        assert_relative_eq!(
            lambda_infinity(&planar(1.0, 0.3, 0.0)),
            2.0 / 0.7,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            lambda_infinity(&planar(1.0, 0.3, 0.7)),
            2.0 / 1.4,
            epsilon = 1e-14
        );
        assert_eq!(lambda_infinity(&planar(1.0, 0.3, 2.0)), 1.0);
    }

    #[test]
    fn perimeter_volume_closed_forms() {
        assert_relative_eq!(
            perimeter_volume_ratio(&planar(1.0, 0.5, 0.0)),
            4.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            perimeter_volume_ratio(&planar(1.0, 0.5, 0.2)),
            4.0,
            epsilon = 1e-14
        );
        let three = AnnulusSpec::new(1.0, 0.5, 0.0, 3).unwrap();
        assert_relative_eq!(perimeter_volume_ratio(&three), 30.0 / 7.0, epsilon = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-15);
        assert_relative_eq!(unit_sphere_area(4), 2.0 * PI * PI, epsilon = 1e-14);
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(reflect(&[1.0, 2.0], &[0.0, 1.0], 0.0).unwrap(), vec![1.0, -2.0]);
        let r = reflect(&[1.0, 0.0], &[1.0, 0.0], 0.5).unwrap();
        assert_relative_eq!(r[0], 0.0, epsilon = 1e-15);
        assert_eq!(reflect(&[1.0, 0.0], &[0.0, 0.0], 0.0), Err(Error::ZeroNormal));
    }

    #[test]
    fn regimes() {
        assert_eq!(planar(1.0, 0.3, 0.69).regime(), OffsetRegime::Contained);
        assert_eq!(planar(1.0, 0.3, 0.7).regime(), OffsetRegime::Overlapping);
        assert_eq!(planar(1.0, 0.3, 1.3).regime(), OffsetRegime::Disjoint);
        assert!(planar(1.0, 0.3, 0.7 - 1e-7).check_contained().is_err());
        assert!(planar(1.0, 0.3, 0.6).check_contained().is_ok());
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0..5.0f64, 3)
    }

    proptest! {
        #[test]
        fn reflect_is_involutive_isometry(x in vec3(), y in vec3(), a in vec3(), off in -2.0..2.0f64) {
            prop_assume!(a.iter().map(|v| v * v).sum::<f64>() > 1e-3);
            let rx = reflect(&x, &a, off).unwrap();
            let back = reflect(&rx, &a, off).unwrap();
            for (u, v) in x.iter().zip(&back) {
                prop_assert!((u - v).abs() < 1e-12);
            }
            let ry = reflect(&y, &a, off).unwrap();
            let d = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            prop_assert!((d(&x, &y) - d(&rx, &ry)).abs() < 1e-12);
        }

        #[test]
        fn inradius_monotone(s1 in 0.0..1.29f64, ds in 1e-6..0.5f64) {
            let s2 = (s1 + ds).min(1.2999999);
            prop_assume!(s2 > s1);
            let a = planar(1.0, 0.3, s1);
            let b = planar(1.0, 0.3, s2);
            prop_assert!(inradius(&b) > inradius(&a));
            prop_assert!(lambda_infinity(&b) < lambda_infinity(&a));
        }

        #[test]
        fn ratio_independent_of_offset(s in 0.0..0.69f64, dim in 2usize..6) {
            let base = AnnulusSpec::new(1.0, 0.3, 0.0, dim).unwrap();
            prop_assert_eq!(perimeter_volume_ratio(&base), perimeter_volume_ratio(&base.with_offset(s)));
        }
    }
}
