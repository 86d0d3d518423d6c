//! Quasi-continuous metasurface: a sampled current sheet, its radiation
//! operator under the scalar free-space Green function, and the end-to-end
//! power gain of a current distribution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::ChannelMatrix;
use crate::error::{ensure, Error, Result};
use crate::geometry::{RisGeometry, Vec3, Wavelength};
use crate::linalg;

/// Scalar free-space Green function `e^{−jkR} / (4πR)`.
pub fn green(source: Vec3, point: Vec3, k: f64) -> Complex64 {
    let r = source.distance(point);
    Complex64::from_polar(1.0 / (4.0 * PI * r), -k * r)
}

/// Midpoint-rule sampling of a rectangular surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    points: Vec<Vec3>,
    cell_area: f64,
    total_area: f64,
    spacing: f64,
    center: Vec3,
    normal: Vec3,
}

impl SurfaceGrid {
    /// `width × height` rectangle (along the `u` and `v` axes of the plane
    /// with the given normal) split into equal cells no wider than `max_spacing`.
    pub fn rectangular(width: f64, height: f64, max_spacing: f64, center: Vec3, normal: Vec3) -> Result<Self> {
        ensure!(
            width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite(),
            Domain,
            "surface extents must be positive, got {width} x {height}"
        );
        ensure!(max_spacing > 0.0, Domain, "grid spacing must be positive");
        let nu = cells(width, max_spacing);
        let nv = cells(height, max_spacing);
        let (du, dv) = (width / nu as f64, height / nv as f64);
        // Same in-plane axes as a planar array with this normal.
        let frame = RisGeometry::planar(1, 1, 1.0, center, normal)?;
        let (u, v) = (frame.u_axis(), frame.v_axis());
        let mut points = Vec::with_capacity(nu * nv);
        for r in 0..nv {
            for c in 0..nu {
                let a = (c as f64 + 0.5) * du - width / 2.0;
                let b = (r as f64 + 0.5) * dv - height / 2.0;
                points.push(center + u * a + v * b);
            }
        }
        Ok(Self {
            points,
            cell_area: du * dv,
            total_area: width * height,
            spacing: du.max(dv),
            center,
            normal: frame.normal(),
        })
    }

    /// Footprint of a patch array, each `spacing × spacing` element cell split
    /// into `per_side²` samples, with the matching element partition.
    pub fn tiled(ris: &RisGeometry, per_side: usize) -> Result<(Self, ElementPartition)> {
        ensure!(per_side >= 1, Domain, "need at least one sample per element side");
        let a = ris.spacing();
        let step = a / per_side as f64;
        let (u, v) = (ris.u_axis(), ris.v_axis());
        let n_side = per_side * per_side;
        let mut points = Vec::with_capacity(ris.len() * n_side);
        let mut groups = Vec::with_capacity(ris.len());
        for p in ris.positions() {
            let mut group = Vec::with_capacity(n_side);
            for r in 0..per_side {
                for c in 0..per_side {
                    let du = (c as f64 + 0.5) * step - a / 2.0;
                    let dv = (r as f64 + 0.5) * step - a / 2.0;
                    group.push(points.len());
                    points.push(*p + u * du + v * dv);
                }
            }
            groups.push(group);
        }
        let n = points.len();
        let grid = Self {
            points,
            cell_area: step * step,
            total_area: a * a * ris.len() as f64,
            spacing: step,
            center: ris.center(),
            normal: ris.normal(),
        };
        Ok((grid, ElementPartition::new(groups, n)?))
    }

    /// One sample standing for a cell of the given area.
    pub fn single(point: Vec3, area: f64, normal: Vec3) -> Result<Self> {
        ensure!(area > 0.0 && area.is_finite(), Domain, "cell area must be positive");
        let normal = normal
            .normalized()
            .ok_or_else(|| Error::Domain("surface normal must be nonzero".into()))?;
        Ok(Self {
            points: vec![point],
            cell_area: area,
            total_area: area,
            spacing: area.sqrt(),
            center: point,
            normal,
        })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }
}

fn cells(extent: f64, max_spacing: f64) -> usize {
    ((extent / max_spacing) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Complex surface current sampled on a grid, `max |J| ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentDistribution {
    values: Vec<Complex64>,
}

impl CurrentDistribution {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        for (k, j) in values.iter().enumerate() {
            ensure!(j.is_finite(), Domain, "current sample {k} is not finite");
            ensure!(
                j.norm() <= 1.0 + 1e-12,
                Domain,
                "current sample {k} has |J| = {} > 1",
                j.norm()
            );
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            values: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self {
            values: phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect(),
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Receiver-sample × surface-sample propagation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationOperator {
    matrix: ChannelMatrix,
}

impl RadiationOperator {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn get(&self, p: usize, k: usize) -> Complex64 {
        self.matrix.get(p, k)
    }

    pub fn matrix(&self) -> &ChannelMatrix {
        &self.matrix
    }

    /// Non-increasing singular values.
    pub fn singular_values(&self) -> Vec<f64> {
        linalg::singular_values(self.rows(), self.cols(), self.matrix.data())
    }
}

/// `G[p][k] = g(s_k, r_p)`. Multi-sample grids must be sampled at λ/2 or finer.
pub fn build_operator(grid: &SurfaceGrid, rx_samples: &[Vec3], lambda: f64) -> Result<RadiationOperator> {
    let k = Wavelength::new(lambda)?.wavenumber();
    ensure!(
        grid.len() == 1 || grid.spacing() <= lambda / 2.0 * (1.0 + 1e-12),
        Domain,
        "grid spacing {} exceeds λ/2",
        grid.spacing()
    );
    ensure!(!rx_samples.is_empty(), Dimension, "no receiver samples");
    for r in rx_samples {
        for s in grid.points() {
            ensure!(
                s.distance(*r) >= lambda,
                Domain,
                "receiver sample {r:?} inside the reactive zone (< λ) of the surface"
            );
        }
    }
    let data: Vec<Complex64> = rx_samples
        .par_iter()
        .flat_map_iter(|r| grid.points().iter().map(move |s| green(*s, *r, k)))
        .collect();
    Ok(RadiationOperator {
        matrix: ChannelMatrix::new(rx_samples.len(), grid.len(), data)?,
    })
}

/// Plane-wave illumination of the surface by a transmitter of directivity
/// `G` and effective area `A_T` at distance `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxIllumination {
    pub directivity: f64,
    pub capture_area: f64,
    pub distance: f64,
}

impl TxIllumination {
    pub fn new(directivity: f64, capture_area: f64, distance: f64) -> Result<Self> {
        ensure!(directivity > 0.0, Domain, "directivity must be positive");
        ensure!(capture_area > 0.0, Domain, "capture area must be positive");
        ensure!(distance > 0.0, Domain, "transmitter distance must be positive");
        Ok(Self {
            directivity,
            capture_area,
            distance,
        })
    }

    /// Isotropic transmitter (`G = 1`, `A_T = λ²/4π`).
    pub fn isotropic(lambda: f64, distance: f64) -> Result<Self> {
        Self::new(1.0, lambda * lambda / (4.0 * PI), distance)
    }
}

/// Radiated field `Σ_k J[k]·g(s_k, r)·dA` at one point.
pub fn radiated_field(grid: &SurfaceGrid, currents: &CurrentDistribution, rx: Vec3, lambda: f64) -> Result<Complex64> {
    let k = Wavelength::new(lambda)?.wavenumber();
    ensure!(
        currents.len() == grid.len(),
        Dimension,
        "{} currents for {} grid samples",
        currents.len(),
        grid.len()
    );
    let sum: Complex64 = grid
        .points()
        .iter()
        .zip(currents.values())
        .map(|(s, j)| j * green(*s, rx, k))
        .sum();
    Ok(sum * grid.cell_area())
}

/// End-to-end power gain `(G·A_T/(4πd²)) · |∫∫ J*(s₁) K(s₁,s₂,r) J(s₂)|`
/// with `K = (4π/A_T)·g*(s₁,r)·g(s₂,r)`, i.e. `(G/d²)·|Σ_k J[k] g(s_k,r) dA|²`.
///
/// Multi-sample grids must be sampled at λ/8 or finer.
pub fn channel_gain(
    grid: &SurfaceGrid,
    currents: &CurrentDistribution,
    tx: &TxIllumination,
    rx: Vec3,
    lambda: f64,
) -> Result<f64> {
    ensure!(
        grid.len() == 1 || grid.spacing() <= lambda / 8.0 * (1.0 + 1e-12),
        Domain,
        "grid spacing {} exceeds λ/8",
        grid.spacing()
    );
    let field = radiated_field(grid, currents, rx, lambda)?;
    let capture = tx.directivity * tx.capture_area / (4.0 * PI * tx.distance * tx.distance);
    Ok(capture * (4.0 * PI / tx.capture_area) * field.norm_sqr())
}

/// Assignment of every grid sample to exactly one patch element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementPartition {
    groups: Vec<Vec<usize>>,
    element_of: Vec<usize>,
}

impl ElementPartition {
    pub fn new(groups: Vec<Vec<usize>>, n_samples: usize) -> Result<Self> {
        let mut element_of = vec![usize::MAX; n_samples];
        for (e, group) in groups.iter().enumerate() {
            ensure!(!group.is_empty(), Config, "element {e} owns no grid samples");
            for &k in group {
                ensure!(
                    k < n_samples,
                    Config,
                    "element {e} references sample {k} outside the grid"
                );
                ensure!(
                    element_of[k] == usize::MAX,
                    Config,
                    "sample {k} assigned to elements {} and {e}",
                    element_of[k]
                );
                element_of[k] = e;
            }
        }
        if let Some(k) = element_of.iter().position(|&e| e == usize::MAX) {
            return Err(Error::Config(format!("sample {k} not covered by any element")));
        }
        Ok(Self { groups, element_of })
    }

    /// Contiguous split of `n_samples` into `n_elements` nearly equal runs.
    pub fn contiguous(n_samples: usize, n_elements: usize) -> Result<Self> {
        ensure!(
            n_elements >= 1 && n_elements <= n_samples,
            Config,
            "cannot split {n_samples} samples into {n_elements} elements"
        );
        let groups = (0..n_elements)
            .map(|e| (e * n_samples / n_elements..(e + 1) * n_samples / n_elements).collect())
            .collect();
        Self::new(groups, n_samples)
    }

    pub fn n_elements(&self) -> usize {
        self.groups.len()
    }

    pub fn n_samples(&self) -> usize {
        self.element_of.len()
    }

    pub fn group(&self, e: usize) -> &[usize] {
        &self.groups[e]
    }

    pub fn element_of(&self, k: usize) -> usize {
        self.element_of[k]
    }
}

/// Piecewise-constant unit current `J[k] = exp(jφ_e)` for `k` in element `e`.
pub fn patch_emulation(
    grid: &SurfaceGrid,
    partition: &ElementPartition,
    phases: &[f64],
) -> Result<CurrentDistribution> {
    ensure!(
        partition.n_samples() == grid.len(),
        Config,
        "partition covers {} samples, grid has {}",
        partition.n_samples(),
        grid.len()
    );
    ensure!(
        phases.len() == partition.n_elements(),
        Dimension,
        "{} phases for {} elements",
        phases.len(),
        partition.n_elements()
    );
    let values = (0..grid.len())
        .map(|k| Complex64::from_polar(1.0, phases[partition.element_of(k)]))
        .collect();
    Ok(CurrentDistribution { values })
}

/// Per-sample co-phased current `J[k] = exp(+j·arg conj g(s_k, r))`, the
/// unit-amplitude maximizer of the gain at `rx`.
pub fn cophased_currents(grid: &SurfaceGrid, rx: Vec3, lambda: f64) -> Result<CurrentDistribution> {
    let k = Wavelength::new(lambda)?.wavenumber();
    Ok(CurrentDistribution {
        values: grid
            .points()
            .iter()
            .map(|s| Complex64::from_polar(1.0, k * s.distance(rx)))
            .collect(),
    })
}

/// Per-element phases maximizing the gain at `rx` over piecewise-constant currents.
pub fn best_patch_phases(grid: &SurfaceGrid, partition: &ElementPartition, rx: Vec3, lambda: f64) -> Result<Vec<f64>> {
    let k = Wavelength::new(lambda)?.wavenumber();
    ensure!(
        partition.n_samples() == grid.len(),
        Config,
        "partition covers {} samples, grid has {}",
        partition.n_samples(),
        grid.len()
    );
    Ok((0..partition.n_elements())
        .map(|e| {
            let a: Complex64 = partition.group(e).iter().map(|&s| green(grid.points()[s], rx, k)).sum();
            -a.arg()
        })
        .collect())
}
