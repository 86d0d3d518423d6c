//! Beam codebooks over the polar (angle × distance) domain in front of a
//! line array: far-field steering beams, near-field focusing beams, and a
//! layered codebook that narrows angle first and then angle and distance.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::channel::RisProfile;
use crate::error::{ensure, Result};
use crate::geometry::{RisGeometry, Vec3, Wavelength};

/// Angle × distance box `[θ_lo, θ_hi) × [d_lo, d_hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarRegion {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub d_lo: f64,
    pub d_hi: f64,
}

impl PolarRegion {
    pub fn new(theta_lo: f64, theta_hi: f64, d_lo: f64, d_hi: f64) -> Result<Self> {
        ensure!(
            theta_lo < theta_hi,
            Domain,
            "empty angle interval [{theta_lo}, {theta_hi})"
        );
        ensure!(
            theta_lo >= -FRAC_PI_2 && theta_hi <= FRAC_PI_2,
            Domain,
            "angle interval outside the front half-space"
        );
        ensure!(
            0.0 < d_lo && d_lo < d_hi,
            Domain,
            "invalid distance interval [{d_lo}, {d_hi})"
        );
        Ok(Self {
            theta_lo,
            theta_hi,
            d_lo,
            d_hi,
        })
    }

    pub fn contains(&self, theta: f64, d: f64) -> bool {
        self.theta_lo <= theta && theta < self.theta_hi && self.d_lo <= d && d < self.d_hi
    }

    pub fn contains_region(&self, other: &PolarRegion) -> bool {
        self.theta_lo <= other.theta_lo
            && other.theta_hi <= self.theta_hi
            && self.d_lo <= other.d_lo
            && other.d_hi <= self.d_hi
    }
}

/// Full search domain `[−π/2, π/2) × [d_min, d_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarDomain {
    pub d_min: f64,
    pub d_max: f64,
}

impl PolarDomain {
    pub fn new(d_min: f64, d_max: f64) -> Result<Self> {
        ensure!(
            0.0 < d_min && d_min < d_max && d_max.is_finite(),
            Config,
            "distance domain needs 0 < d_min < d_max, got [{d_min}, {d_max})"
        );
        Ok(Self { d_min, d_max })
    }

    /// `[0.05·R, R)` with `R` the Rayleigh distance of the full array.
    pub fn for_array(geometry: &RisGeometry, lambda: f64) -> Result<Self> {
        let r = geometry.rayleigh_distance(lambda)?;
        Self::new(0.05 * r, r)
    }

    pub fn region(&self) -> PolarRegion {
        PolarRegion {
            theta_lo: -FRAC_PI_2,
            theta_hi: FRAC_PI_2,
            d_lo: self.d_min,
            d_hi: self.d_max,
        }
    }

    /// Angle at fraction `q ∈ [0, 1]` of the `sin θ` range.
    pub fn angle_at(q: f64) -> f64 {
        if q <= 0.0 {
            -FRAC_PI_2
        } else if q >= 1.0 {
            FRAC_PI_2
        } else {
            (-1.0 + 2.0 * q).asin()
        }
    }

    /// Distance at fraction `q ∈ [0, 1]` of the `1/d` range, from `d_min` to `d_max`.
    pub fn distance_at(&self, q: f64) -> f64 {
        if q <= 0.0 {
            self.d_min
        } else if q >= 1.0 {
            self.d_max
        } else {
            1.0 / (1.0 / self.d_min + (1.0 / self.d_max - 1.0 / self.d_min) * q)
        }
    }

    /// Cell `(a, s)` of an `angles × rings` grid uniform in `sin θ` and `1/d`.
    pub fn cell(&self, angles: usize, rings: usize, a: usize, s: usize) -> PolarRegion {
        PolarRegion {
            theta_lo: Self::angle_at(a as f64 / angles as f64),
            theta_hi: Self::angle_at((a + 1) as f64 / angles as f64),
            d_lo: self.distance_at(s as f64 / rings as f64),
            d_hi: self.distance_at((s + 1) as f64 / rings as f64),
        }
    }

    /// Centre of cell `(a, s)` in `sin θ` and `1/d`.
    pub fn cell_center(&self, angles: usize, rings: usize, a: usize, s: usize) -> (f64, f64) {
        (
            Self::angle_at((a as f64 + 0.5) / angles as f64),
            self.distance_at((s as f64 + 0.5) / rings as f64),
        )
    }
}

/// How a codeword's phases were derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beam {
    Steer { angle: f64 },
    Focus { angle: f64, distance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    /// Per-element phase; meaningless where the mask is off.
    pub phases: Vec<f64>,
    pub active_mask: Vec<bool>,
    pub region: PolarRegion,
    /// 1-based layer in a hierarchical codebook, 0 for standalone codewords.
    pub layer: usize,
    pub beam: Beam,
}

impl Codeword {
    /// Reflection coefficients with inactive elements switched off.
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.phases
            .iter()
            .zip(&self.active_mask)
            .map(|(&p, &on)| {
                if on {
                    Complex64::from_polar(1.0, p)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    pub fn profile(&self) -> RisProfile {
        RisProfile::ReflectOnly(self.coefficients())
    }

    pub fn active_count(&self) -> usize {
        self.active_mask.iter().filter(|&&a| a).count()
    }

    /// Unit-gain spherical-wave response `Σ_active e^{jφ_m} e^{−jk‖s_m−p‖}` at `point`.
    pub fn response(&self, geometry: &RisGeometry, point: Vec3, lambda: f64) -> Complex64 {
        let k = std::f64::consts::TAU / lambda;
        geometry
            .positions()
            .iter()
            .zip(&self.phases)
            .zip(&self.active_mask)
            .filter(|(_, &on)| on)
            .map(|((s, &p), _)| Complex64::from_polar(1.0, p - k * s.distance(point)))
            .sum()
    }

    /// Planar-wave response towards `angle`, referenced to the array center.
    pub fn far_response(&self, geometry: &RisGeometry, angle: f64, lambda: f64) -> Complex64 {
        let k = std::f64::consts::TAU / lambda;
        let dir = direction(geometry, angle);
        geometry
            .positions()
            .iter()
            .zip(&self.phases)
            .zip(&self.active_mask)
            .filter(|(_, &on)| on)
            .map(|((s, &p), _)| Complex64::from_polar(1.0, p + k * (*s - geometry.center()).dot(dir)))
            .sum()
    }
}

fn direction(geometry: &RisGeometry, angle: f64) -> Vec3 {
    geometry.u_axis() * angle.sin() + geometry.normal() * angle.cos()
}

/// Mask of the `count` central elements of a line array.
pub fn centered_mask(n: usize, count: usize) -> Vec<bool> {
    let count = count.min(n);
    let start = (n - count) / 2;
    (0..n).map(|m| m >= start && m < start + count).collect()
}

fn check_mask(geometry: &RisGeometry, mask: &[bool]) -> Result<()> {
    ensure!(
        mask.len() == geometry.len(),
        Dimension,
        "mask has {} entries for {} elements",
        mask.len(),
        geometry.len()
    );
    ensure!(mask.iter().any(|&a| a), Config, "active mask is empty");
    Ok(())
}

fn steering_phases(geometry: &RisGeometry, angle: f64, k: f64) -> Vec<f64> {
    let dir = direction(geometry, angle);
    geometry
        .positions()
        .iter()
        .map(|s| -k * (*s - geometry.center()).dot(dir))
        .collect()
}

fn focusing_phases(geometry: &RisGeometry, target: Vec3, k: f64) -> Vec<f64> {
    let b = geometry.center().distance(target);
    geometry
        .positions()
        .iter()
        .map(|s| {
            // ‖s−p‖ − ‖c−p‖ = (‖s−c‖² + 2⟨s−c, c−p⟩) / (‖s−p‖ + ‖c−p‖)
            let e = *s - geometry.center();
            let num = e.dot(e) + 2.0 * e.dot(geometry.center() - target);
            k * num / (s.distance(target) + b)
        })
        .collect()
}

/// Smallest `Δ > 0` with `f(Δ) < ½`, searched up to `limit`; `None` if `f` stays above.
fn half_power_edge(f: impl Fn(f64) -> f64, step: f64, limit: f64) -> Option<f64> {
    let mut lo = 0.0;
    let mut hi = step;
    loop {
        if hi > limit {
            if f(limit) >= 0.5 {
                return None;
            }
            hi = limit;
            break;
        }
        if f(hi) < 0.5 {
            break;
        }
        lo = hi;
        hi += step;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn active_span(geometry: &RisGeometry, mask: &[bool]) -> f64 {
    let xs: Vec<f64> = geometry
        .positions()
        .iter()
        .zip(mask)
        .filter(|(_, &on)| on)
        .map(|(s, _)| (*s - geometry.center()).dot(geometry.u_axis()))
        .collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn half_power_angles(geometry: &RisGeometry, mask: &[bool], angle: f64, lambda: f64) -> (f64, f64) {
    let k = std::f64::consts::TAU / lambda;
    let xs: Vec<f64> = geometry
        .positions()
        .iter()
        .zip(mask)
        .filter(|(_, &on)| on)
        .map(|(s, _)| (*s - geometry.center()).dot(geometry.u_axis()))
        .collect();
    let n = xs.len() as f64;
    // Array factor depends only on the offset in sin θ.
    let f = |delta: f64| {
        let s: Complex64 = xs.iter().map(|&x| Complex64::from_polar(1.0, k * x * delta)).sum();
        s.norm_sqr() / (n * n)
    };
    let step = lambda / (8.0 * (active_span(geometry, mask) + lambda));
    let s0 = angle.sin();
    match half_power_edge(f, step, 2.0) {
        Some(d) => (
            PolarDomain::angle_at((s0 - d + 1.0) / 2.0),
            PolarDomain::angle_at((s0 + d + 1.0) / 2.0),
        ),
        None => (-FRAC_PI_2, FRAC_PI_2),
    }
}

/// Far-field steering codeword towards `target_angle` on the active
/// elements; its region is the half-power beamwidth over all distances.
pub fn angular_codeword(
    geometry: &RisGeometry,
    active_mask: &[bool],
    target_angle: f64,
    lambda: f64,
    domain: &PolarDomain,
) -> Result<Codeword> {
    let k = Wavelength::new(lambda)?.wavenumber();
    check_mask(geometry, active_mask)?;
    ensure!(
        target_angle.abs() < FRAC_PI_2,
        Domain,
        "target angle {target_angle} outside the front half-space"
    );
    let (theta_lo, theta_hi) = half_power_angles(geometry, active_mask, target_angle, lambda);
    Ok(Codeword {
        phases: steering_phases(geometry, target_angle, k),
        active_mask: active_mask.to_vec(),
        region: PolarRegion::new(theta_lo, theta_hi, domain.d_min, domain.d_max)?,
        layer: 0,
        beam: Beam::Steer { angle: target_angle },
    })
}

/// Near-field focusing codeword on the point at `target_angle`,
/// `target_distance`; its region is the half-power beamwidth times the
/// half-power depth, clipped to the domain.
pub fn polar_codeword(
    geometry: &RisGeometry,
    active_mask: &[bool],
    target_angle: f64,
    target_distance: f64,
    lambda: f64,
    domain: &PolarDomain,
) -> Result<Codeword> {
    let k = Wavelength::new(lambda)?.wavenumber();
    check_mask(geometry, active_mask)?;
    ensure!(
        target_angle.abs() < FRAC_PI_2,
        Geometry,
        "target angle {target_angle} is not in front of the surface"
    );
    ensure!(
        target_distance > lambda,
        Geometry,
        "target distance {target_distance} within one wavelength"
    );
    ensure!(
        domain.d_min <= target_distance && target_distance < domain.d_max,
        Config,
        "target distance {target_distance} outside [{}, {})",
        domain.d_min,
        domain.d_max
    );
    let target = geometry.point_at(target_angle, target_distance);
    let phases = focusing_phases(geometry, target, k);
    let mut cw = Codeword {
        phases,
        active_mask: active_mask.to_vec(),
        region: domain.region(),
        layer: 0,
        beam: Beam::Focus {
            angle: target_angle,
            distance: target_distance,
        },
    };

    let (theta_lo, theta_hi) = half_power_angles(geometry, active_mask, target_angle, lambda);
    let n = cw.active_count() as f64;
    let x0 = 1.0 / target_distance;
    let depth = |x: f64| {
        cw.response(geometry, geometry.point_at(target_angle, 1.0 / x), lambda)
            .norm_sqr()
            / (n * n)
    };
    let (x_min, x_max) = (1.0 / domain.d_max, 1.0 / domain.d_min);
    let step = (x_max - x_min) / 4096.0;
    let up = half_power_edge(|dx| depth(x0 + dx), step, x_max - x0);
    let down = half_power_edge(|dx| depth(x0 - dx), step, x0 - x_min);
    let d_lo = up.map_or(domain.d_min, |dx| (1.0 / (x0 + dx)).max(domain.d_min));
    let d_hi = down.map_or(domain.d_max, |dx| (1.0 / (x0 - dx)).min(domain.d_max));
    cw.region = PolarRegion::new(theta_lo, theta_hi, d_lo, d_hi)?;
    Ok(cw)
}

/// `A` full-array steering beams and `A × S` focusing beams over a uniform
/// `sin θ × 1/d` grid, generated on demand.
#[derive(Debug, Clone)]
pub struct FlatPolarCodebook {
    geometry: RisGeometry,
    lambda: f64,
    domain: PolarDomain,
    angles: usize,
    rings: usize,
}

impl FlatPolarCodebook {
    pub fn new(geometry: RisGeometry, lambda: f64, domain: PolarDomain, angles: usize, rings: usize) -> Result<Self> {
        Wavelength::new(lambda)?;
        ensure!(
            angles >= 1 && rings >= 1,
            Config,
            "need at least one angle and one distance"
        );
        Ok(Self {
            geometry,
            lambda,
            domain,
            angles,
            rings,
        })
    }

    pub fn angles(&self) -> usize {
        self.angles
    }

    pub fn rings(&self) -> usize {
        self.rings
    }

    pub fn len(&self) -> usize {
        self.angles * self.rings
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn geometry(&self) -> &RisGeometry {
        &self.geometry
    }

    pub fn domain(&self) -> &PolarDomain {
        &self.domain
    }

    /// Steering beam at the centre of angle cell `a`, region = the whole angle cell.
    pub fn angular(&self, a: usize) -> Codeword {
        let (angle, _) = self.domain.cell_center(self.angles, 1, a, 0);
        Codeword {
            phases: steering_phases(&self.geometry, angle, std::f64::consts::TAU / self.lambda),
            active_mask: vec![true; self.geometry.len()],
            region: self.domain.cell(self.angles, 1, a, 0),
            layer: 0,
            beam: Beam::Steer { angle },
        }
    }

    /// Focusing beam at the centre of cell `(a, s)`, region = that cell.
    pub fn polar(&self, a: usize, s: usize) -> Codeword {
        let (angle, distance) = self.domain.cell_center(self.angles, self.rings, a, s);
        let target = self.geometry.point_at(angle, distance);
        Codeword {
            phases: focusing_phases(&self.geometry, target, std::f64::consts::TAU / self.lambda),
            active_mask: vec![true; self.geometry.len()],
            region: self.domain.cell(self.angles, self.rings, a, s),
            layer: 0,
            beam: Beam::Focus { angle, distance },
        }
    }

    /// Codeword `index = a·S + s`.
    pub fn codeword(&self, index: usize) -> Codeword {
        self.polar(index / self.rings, index % self.rings)
    }
}

/// Angular branching factor of the hierarchical codebook.
pub const BRANCHING: usize = 2;

/// Layered codebook: layers `1..=L1` hold steering beams over `2^l` angle
/// cells; layers `L1+1..=L1+L2` hold focusing beams over `2^l` angle cells
/// times `D_b^(l−L1)` distance rings. Layer `l` activates the `2^l` central
/// elements. Codewords are generated on demand.
#[derive(Debug, Clone)]
pub struct HierarchicalCodebook {
    geometry: RisGeometry,
    lambda: f64,
    domain: PolarDomain,
    l1: usize,
    l2: usize,
    distance_branches: usize,
}

/// Number of layers `⌈log₂ N⌉`.
pub fn total_layers(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Builds the hierarchical codebook for a line array. `domain` defaults to
/// [`PolarDomain::for_array`].
pub fn build_hierarchical(
    geometry: &RisGeometry,
    lambda: f64,
    l1: usize,
    l2: usize,
    distance_branches: usize,
    domain: Option<PolarDomain>,
) -> Result<HierarchicalCodebook> {
    Wavelength::new(lambda)?;
    ensure!(
        geometry.rows() == 1,
        Config,
        "hierarchical codebooks need a line array (rows = 1)"
    );
    let lt = total_layers(geometry.len());
    ensure!(lt >= 1, Config, "hierarchical codebooks need at least two elements");
    ensure!(
        l1 + l2 == lt,
        Config,
        "L1 + L2 = {} but ⌈log₂ {}⌉ = {lt}",
        l1 + l2,
        geometry.len()
    );
    ensure!(distance_branches >= 1, Config, "distance branches must be at least 1");
    let domain = match domain {
        Some(d) => d,
        None => PolarDomain::for_array(geometry, lambda)?,
    };
    Ok(HierarchicalCodebook {
        geometry: geometry.clone(),
        lambda,
        domain,
        l1,
        l2,
        distance_branches,
    })
}

impl HierarchicalCodebook {
    pub fn n_layers(&self) -> usize {
        self.l1 + self.l2
    }

    pub fn l1(&self) -> usize {
        self.l1
    }

    pub fn l2(&self) -> usize {
        self.l2
    }

    pub fn branching(&self) -> usize {
        BRANCHING
    }

    pub fn distance_branches(&self) -> usize {
        self.distance_branches
    }

    pub fn domain(&self) -> &PolarDomain {
        &self.domain
    }

    pub fn geometry(&self) -> &RisGeometry {
        &self.geometry
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_polar(&self, layer: usize) -> bool {
        layer > self.l1
    }

    /// `(angle cells, distance rings)` of a layer.
    pub fn layer_shape(&self, layer: usize) -> (usize, usize) {
        assert!((1..=self.n_layers()).contains(&layer), "layer {layer} out of range");
        let rings = if self.is_polar(layer) {
            self.distance_branches.pow((layer - self.l1) as u32)
        } else {
            1
        };
        (1usize << layer, rings)
    }

    pub fn layer_size(&self, layer: usize) -> usize {
        let (a, s) = self.layer_shape(layer);
        a * s
    }

    pub fn active_count(&self, layer: usize) -> usize {
        (1usize << layer).min(self.geometry.len())
    }

    /// Region of codeword `index = a·S + s` in `layer`.
    pub fn region(&self, layer: usize, index: usize) -> PolarRegion {
        let (a, s) = self.layer_shape(layer);
        assert!(index < a * s, "codeword {index} out of range in layer {layer}");
        self.domain.cell(a, s, index / s, index % s)
    }

    pub fn codeword(&self, layer: usize, index: usize) -> Codeword {
        let (angles, rings) = self.layer_shape(layer);
        let (ai, si) = (index / rings, index % rings);
        let (angle, distance) = self.domain.cell_center(angles, rings, ai, si);
        let k = std::f64::consts::TAU / self.lambda;
        let (phases, beam) = if self.is_polar(layer) {
            let target = self.geometry.point_at(angle, distance);
            (
                focusing_phases(&self.geometry, target, k),
                Beam::Focus { angle, distance },
            )
        } else {
            (steering_phases(&self.geometry, angle, k), Beam::Steer { angle })
        };
        Codeword {
            phases,
            active_mask: centered_mask(self.geometry.len(), self.active_count(layer)),
            region: self.region(layer, index),
            layer,
            beam,
        }
    }

    /// Indices in `layer + 1` refining codeword `index` of `layer`: `b` angle
    /// children, each split into `D_b` rings when the next layer is polar.
    pub fn children(&self, layer: usize, index: usize) -> Vec<usize> {
        assert!(layer < self.n_layers(), "last layer has no children");
        let (_, rings) = self.layer_shape(layer);
        let (_, child_rings) = self.layer_shape(layer + 1);
        let split = child_rings / rings;
        let (a, s) = (index / rings, index % rings);
        let mut out = Vec::with_capacity(BRANCHING * split);
        for ca in BRANCHING * a..BRANCHING * (a + 1) {
            for cs in s * split..(s + 1) * split {
                out.push(ca * child_rings + cs);
            }
        }
        out
    }

    /// Codewords measured by a top-down search: all of layer 1, then the
    /// children of one codeword per layer.
    pub fn pilot_count(&self) -> usize {
        (1..=self.n_layers())
            .map(|l| {
                if l == 1 {
                    self.layer_size(1)
                } else {
                    self.children(l - 1, 0).len()
                }
            })
            .sum()
    }

    /// `(layer, index, region, active_count)` for every codeword, layer by layer.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, PolarRegion, usize)> + '_ {
        (1..=self.n_layers())
            .flat_map(move |l| (0..self.layer_size(l)).map(move |i| (l, i, self.region(l, i), self.active_count(l))))
    }
}

/// Pilot count `b·L1 + b·D_b·L2` of the hierarchical search.
pub fn hierarchical_pilots(l1: usize, l2: usize, distance_branches: usize) -> usize {
    BRANCHING * l1 + BRANCHING * distance_branches * l2
}

/// A codebook criterion violation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Part of the domain not covered in a layer, or a region leaving it.
    Coverage { layer: usize, detail: String },
    /// A child region not contained in its parent.
    Nesting { layer: usize, parent: usize, child: usize },
}

/// Checks that every layer's regions exactly tile-cover the domain, using
/// the elementary grid of all region boundaries in that layer.
pub fn check_coverage(codebook: &HierarchicalCodebook) -> Vec<Violation> {
    let domain = codebook.domain().region();
    let mut out = Vec::new();
    for layer in 1..=codebook.n_layers() {
        let regions: Vec<PolarRegion> = (0..codebook.layer_size(layer))
            .map(|i| codebook.region(layer, i))
            .collect();
        if let Some(detail) = union_equals(&regions, &domain) {
            out.push(Violation::Coverage { layer, detail });
        }
    }
    out
}

/// `None` if the union of `regions` is exactly `domain`, otherwise a description.
pub fn union_equals(regions: &[PolarRegion], domain: &PolarRegion) -> Option<String> {
    for (i, r) in regions.iter().enumerate() {
        if !domain.contains_region(r) {
            return Some(format!("region {i} leaves the domain: {r:?}"));
        }
    }
    let bounds = |lo: fn(&PolarRegion) -> f64, hi: fn(&PolarRegion) -> f64, a: f64, b: f64| {
        let mut v: Vec<f64> = regions.iter().flat_map(|r| [lo(r), hi(r)]).chain([a, b]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let th = bounds(|r| r.theta_lo, |r| r.theta_hi, domain.theta_lo, domain.theta_hi);
    let ds = bounds(|r| r.d_lo, |r| r.d_hi, domain.d_lo, domain.d_hi);
    let (na, ns) = (th.len() - 1, ds.len() - 1);
    let mut covered = vec![false; na * ns];
    let find = |v: &[f64], x: f64| v.binary_search_by(|p| p.total_cmp(&x)).expect("boundary present");
    for r in regions {
        let (a0, a1) = (find(&th, r.theta_lo), find(&th, r.theta_hi));
        let (s0, s1) = (find(&ds, r.d_lo), find(&ds, r.d_hi));
        for a in a0..a1 {
            covered[a * ns + s0..a * ns + s1].iter_mut().for_each(|c| *c = true);
        }
    }
    covered.iter().position(|c| !c).map(|cell| {
        let (a, s) = (cell / ns, cell % ns);
        format!("uncovered cell [{}, {}) x [{}, {})", th[a], th[a + 1], ds[s], ds[s + 1])
    })
}

/// Checks that every child region lies inside its parent region.
pub fn check_nesting(codebook: &HierarchicalCodebook) -> Vec<Violation> {
    let mut out = Vec::new();
    for layer in 1..codebook.n_layers() {
        for parent in 0..codebook.layer_size(layer) {
            let pr = codebook.region(layer, parent);
            for child in codebook.children(layer, parent) {
                if !pr.contains_region(&codebook.region(layer + 1, child)) {
                    out.push(Violation::Nesting { layer, parent, child });
                }
            }
        }
    }
    out
}
