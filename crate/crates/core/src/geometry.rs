//! Planar array geometry and near/far-field classification.
//!
//! Every array in the crate (RIS, transmitter, receiver) is a [`RisGeometry`]:
//! a regular `rows × cols` grid centred on a point, lying in the plane
//! orthogonal to a unit normal. Columns run along the in-plane `u` axis and
//! rows along `v = normal × u`.
//!
//! Angles used by the codebooks are measured in the `u`–normal plane:
//! a point at angle `θ` and distance `d` sits at
//! `center + d·(sin θ·u + cos θ·normal)`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Cartesian coordinate in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for a zero or non-finite vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Carrier wavelength in meters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Wavelength(f64);

impl Wavelength {
    pub fn new(lambda: f64) -> Result<Self> {
        ensure!(
            lambda > 0.0 && lambda.is_finite(),
            Domain,
            "wavelength must be positive and finite, got {lambda}"
        );
        Ok(Self(lambda))
    }

    pub fn from_frequency(hz: f64) -> Result<Self> {
        ensure!(
            hz > 0.0 && hz.is_finite(),
            Domain,
            "frequency must be positive, got {hz}"
        );
        Self::new(SPEED_OF_LIGHT / hz)
    }

    pub fn meters(self) -> f64 {
        self.0
    }

    /// `2π/λ`
    pub fn wavenumber(self) -> f64 {
        std::f64::consts::TAU / self.0
    }
}

/// Conventional near/far-field boundary `2D²/λ`.
pub fn rayleigh_distance(aperture: f64, lambda: f64) -> Result<f64> {
    ensure!(
        aperture >= 0.0 && aperture.is_finite(),
        Domain,
        "aperture must be non-negative, got {aperture}"
    );
    let lambda = Wavelength::new(lambda)?.meters();
    Ok(2.0 * aperture * aperture / lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldRegion {
    NearField,
    FarField,
}

impl FieldRegion {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldRegion::NearField => "near",
            FieldRegion::FarField => "far",
        }
    }
}

/// A planar rectangular array of isotropic elements.
#[derive(Debug, Clone, PartialEq)]
pub struct RisGeometry {
    positions: Vec<Vec3>,
    rows: usize,
    cols: usize,
    spacing: f64,
    aperture: f64,
    center: Vec3,
    normal: Vec3,
    u_axis: Vec3,
    v_axis: Vec3,
}

impl RisGeometry {
    /// Regular grid of `rows × cols` elements centred on `center`, element
    /// `m = row·cols + col`.
    pub fn planar(rows: usize, cols: usize, spacing: f64, center: Vec3, normal: Vec3) -> Result<Self> {
        ensure!(
            rows >= 1 && cols >= 1,
            Domain,
            "array needs at least one row and column"
        );
        ensure!(
            spacing > 0.0 && spacing.is_finite(),
            Domain,
            "element spacing must be positive, got {spacing}"
        );
        ensure!(center.is_finite(), Domain, "array center must be finite");
        let normal = normal
            .normalized()
            .ok_or_else(|| Error::Domain("array normal must be nonzero".into()))?;
        let (u_axis, v_axis) = plane_basis(normal);

        let row_offset = (rows - 1) as f64 / 2.0;
        let col_offset = (cols - 1) as f64 / 2.0;
        let mut positions = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let du = (c as f64 - col_offset) * spacing;
                let dv = (r as f64 - row_offset) * spacing;
                positions.push(center + u_axis * du + v_axis * dv);
            }
        }
        let rr = (rows - 1) as f64;
        let cc = (cols - 1) as f64;
        let aperture = spacing * (rr * rr + cc * cc).sqrt();

        Ok(Self {
            positions,
            rows,
            cols,
            spacing,
            aperture,
            center,
            normal,
            u_axis,
            v_axis,
        })
    }

    /// Uniform linear array of `n` elements along the `u` axis.
    pub fn line(n: usize, spacing: f64, center: Vec3, normal: Vec3) -> Result<Self> {
        Self::planar(1, n, spacing, center, normal)
    }

    /// Single isotropic antenna at `position`.
    pub fn point(position: Vec3) -> Result<Self> {
        Self::planar(1, 1, 1.0, position, Vec3::Z)
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Diagonal of the bounding rectangle of the element positions.
    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn u_axis(&self) -> Vec3 {
        self.u_axis
    }

    pub fn v_axis(&self) -> Vec3 {
        self.v_axis
    }

    pub fn rayleigh_distance(&self, lambda: f64) -> Result<f64> {
        rayleigh_distance(self.aperture, lambda)
    }

    /// Point at `angle` (radians from the normal, towards `u`) and `distance` from the center.
    pub fn point_at(&self, angle: f64, distance: f64) -> Vec3 {
        self.center + (self.u_axis * angle.sin() + self.normal * angle.cos()) * distance
    }

    /// Angle in the `u`–normal plane and distance from the center.
    pub fn polar_of(&self, point: Vec3) -> (f64, f64) {
        let rel = point - self.center;
        (rel.dot(self.u_axis).atan2(rel.dot(self.normal)), rel.norm())
    }

    /// Signed distance of `point` from the array plane (positive on the normal side).
    pub fn signed_height(&self, point: Vec3) -> f64 {
        (point - self.center).dot(self.normal)
    }

    pub fn classify(&self, point: Vec3, lambda: f64) -> Result<FieldRegion> {
        classify_region(self, point, lambda)
    }
}

/// Near field iff the point is strictly closer to the array center than the
/// Rayleigh distance of the array aperture.
pub fn classify_region(geometry: &RisGeometry, point: Vec3, lambda: f64) -> Result<FieldRegion> {
    let limit = geometry.rayleigh_distance(lambda)?;
    Ok(if geometry.center.distance(point) < limit {
        FieldRegion::NearField
    } else {
        FieldRegion::FarField
    })
}

// In-plane axes: project the coordinate axis least aligned with the normal.
fn plane_basis(normal: Vec3) -> (Vec3, Vec3) {
    let comps = [normal.x.abs(), normal.y.abs(), normal.z.abs()];
    let mut pick = 0;
    for i in 1..3 {
        if comps[i] < comps[pick] {
            pick = i;
        }
    }
    let axis = [Vec3::X, Vec3::Y, Vec3::Z][pick];
    let u = (axis - normal * axis.dot(normal))
        .normalized()
        .expect("axis least aligned with a unit normal is never parallel to it");
    (u, normal.cross(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rayleigh_at_28_ghz() {
        let lambda = Wavelength::from_frequency(28e9).unwrap().meters();
        let r = rayleigh_distance(1.0, lambda).unwrap();
        assert!((r - 186.8).abs() < 0.5, "{r}");
    }

    #[test]
    fn rayleigh_trivial_values() {
        assert_eq!(rayleigh_distance(0.0, 0.01).unwrap(), 0.0);
        assert_relative_eq!(rayleigh_distance(0.1, 0.01).unwrap(), 2.0, max_relative = 1e-15);
        assert!(matches!(rayleigh_distance(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(rayleigh_distance(1.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(rayleigh_distance(-1.0, 0.01), Err(Error::Domain(_))));
    }

    #[test]
    fn single_element_array() {
        let c = Vec3::new(1.0, 2.0, 3.0);
        let g = RisGeometry::planar(1, 1, 0.005, c, Vec3::Z).unwrap();
        assert_eq!(g.positions(), &[c]);
        assert_eq!(g.aperture(), 0.0);
    }

    #[test]
    fn two_by_two_array() {
        let g = RisGeometry::planar(2, 2, 0.005, Vec3::ZERO, Vec3::Z).unwrap();
        assert_eq!(g.len(), 4);
        for p in g.positions() {
            assert_eq!(p.z, 0.0);
            assert_relative_eq!(p.x.abs(), 0.0025);
            assert_relative_eq!(p.y.abs(), 0.0025);
        }
        assert_relative_eq!(g.aperture(), 0.005 * 2f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn twenty_by_twenty_side() {
        let g = RisGeometry::planar(20, 20, 0.005, Vec3::ZERO, Vec3::Z).unwrap();
        let xs: Vec<f64> = g.positions().iter().map(|p| p.x).collect();
        let span = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
        assert_relative_eq!(span, 0.095, max_relative = 1e-12);
    }

    #[test]
    fn zero_normal_rejected() {
        assert!(matches!(
            RisGeometry::planar(2, 2, 0.01, Vec3::ZERO, Vec3::ZERO),
            Err(Error::Domain(_))
        ));
        assert!(RisGeometry::planar(0, 2, 0.01, Vec3::ZERO, Vec3::Z).is_err());
        assert!(RisGeometry::planar(2, 2, 0.0, Vec3::ZERO, Vec3::Z).is_err());
    }

    #[test]
    fn classify_examples() {
        let lambda = SPEED_OF_LIGHT / 28e9;
        // 2x2 array whose diagonal is exactly 1 m
        let g = RisGeometry::planar(2, 2, 1.0 / 2f64.sqrt(), Vec3::ZERO, Vec3::Z).unwrap();
        assert_relative_eq!(g.aperture(), 1.0, max_relative = 1e-12);
        assert_eq!(
            g.classify(Vec3::new(0.0, 0.0, 100.0), lambda).unwrap(),
            FieldRegion::NearField
        );

        let r = g.rayleigh_distance(lambda).unwrap();
        assert_eq!(
            g.classify(Vec3::new(0.0, 0.0, r), lambda).unwrap(),
            FieldRegion::FarField
        );

        let patch = RisGeometry::planar(2, 2, 0.028 / 2f64.sqrt(), Vec3::ZERO, Vec3::Z).unwrap();
        assert_relative_eq!(patch.rayleigh_distance(0.01).unwrap(), 0.1568, max_relative = 1e-9);
        assert_eq!(
            patch.classify(Vec3::new(0.0, 0.0, 10.0), 0.01).unwrap(),
            FieldRegion::FarField
        );
    }

    #[test]
    fn polar_round_trip() {
        let g = RisGeometry::line(8, 0.005, Vec3::new(0.5, 0.0, 1.0), Vec3::Z).unwrap();
        let p = g.point_at(0.4, 3.0);
        let (a, d) = g.polar_of(p);
        assert_relative_eq!(a, 0.4, max_relative = 1e-12);
        assert_relative_eq!(d, 3.0, max_relative = 1e-12);
    }

    fn arb_normal() -> impl Strategy<Value = Vec3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
            .prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn rayleigh_homogeneous(d in 0.0f64..10.0, k in 0.01f64..100.0, lambda in 1e-4f64..1.0) {
            let lhs = rayleigh_distance(k * d, lambda).unwrap();
            let rhs = k * k * rayleigh_distance(d, lambda).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }

        #[test]
        fn classify_monotone_along_ray(
            normal in arb_normal(),
            dir in arb_normal(),
            rows in 1usize..6, cols in 1usize..6,
        ) {
            let g = RisGeometry::planar(rows, cols, 0.02, Vec3::new(0.1, -0.2, 0.3), normal).unwrap();
            let dir = dir.normalized().unwrap();
            let mut seen_far = false;
            for i in 0..200 {
                let p = g.center() + dir * (i as f64 * 0.01);
                let far = g.classify(p, 0.01).unwrap() == FieldRegion::FarField;
                prop_assert!(!(seen_far && !far));
                seen_far |= far;
            }
        }

        #[test]
        fn planar_invariants(normal in arb_normal(), rows in 1usize..9, cols in 1usize..9, spacing in 1e-3f64..0.1) {
            let center = Vec3::new(0.3, 0.1, -0.7);
            let g = RisGeometry::planar(rows, cols, spacing, center, normal).unwrap();
            prop_assert_eq!(g.len(), rows * cols);
            let n = g.normal();
            for p in g.positions() {
                prop_assert!((*p - center).dot(n).abs() < 1e-12);
                // reflection through the center maps the element set onto itself
                let mirror = center * 2.0 - *p;
                prop_assert!(g.positions().iter().any(|q| q.distance(mirror) < 1e-12));
            }
            // bounding-rectangle diagonal in the (u, v) frame
            let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for p in g.positions() {
                let u = (*p - center).dot(g.u_axis());
                let v = (*p - center).dot(g.v_axis());
                umin = umin.min(u); umax = umax.max(u); vmin = vmin.min(v); vmax = vmax.max(v);
            }
            let diag = ((umax - umin).powi(2) + (vmax - vmin).powi(2)).sqrt();
            prop_assert!((diag - g.aperture()).abs() <= 1e-9 * g.aperture().max(1e-12));
        }
    }
}
