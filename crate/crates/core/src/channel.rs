//! Patch-array cascaded channel: per-element transmitter → RIS → receiver
//! gains with exact spherical phases, their planar-wavefront approximation,
//! and end-to-end MIMO matrices for a given RIS configuration.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry::{RisGeometry, Vec3, Wavelength};

/// Amplitude model for one cascaded (or single-hop) link.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathLossModel {
    /// `β = λ² / ((4π)² d_tx d_rx)`, isotropic elements.
    #[default]
    FreeSpaceCascaded,
    /// `β = 1`, isolates wavefront (phase) effects.
    UnitGain,
}

impl PathLossModel {
    pub fn cascaded(self, lambda: f64, d_tx: f64, d_rx: f64) -> f64 {
        match self {
            PathLossModel::FreeSpaceCascaded => lambda * lambda / ((4.0 * PI).powi(2) * d_tx * d_rx),
            PathLossModel::UnitGain => 1.0,
        }
    }

    /// Friis amplitude `λ/(4πd)` of a direct link between two isotropic antennas.
    pub fn single_hop(self, lambda: f64, d: f64) -> f64 {
        match self {
            PathLossModel::FreeSpaceCascaded => lambda / (4.0 * PI * d),
            PathLossModel::UnitGain => 1.0,
        }
    }
}

/// Which face of a STAR surface a receiver is served from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Same half-space as the transmitter.
    Reflect,
    /// Opposite half-space.
    Transmit,
}

/// Complex cascaded gains `gains[i][j][m]` (receiver × transmitter × element).
#[derive(Debug, Clone, PartialEq)]
pub struct CascadedLinkSet {
    gains: Vec<Complex64>,
    n_rx: usize,
    n_tx: usize,
    n_elements: usize,
    lambda: f64,
    rx_sides: Vec<Side>,
}

impl CascadedLinkSet {
    /// Wraps precomputed gains laid out as `[(i * n_tx + j) * n_elements + m]`.
    pub fn from_gains(
        gains: Vec<Complex64>,
        n_rx: usize,
        n_tx: usize,
        n_elements: usize,
        lambda: f64,
        rx_sides: Vec<Side>,
    ) -> Result<Self> {
        Wavelength::new(lambda)?;
        ensure!(
            gains.len() == n_rx * n_tx * n_elements,
            Dimension,
            "{} gains for {n_rx}x{n_tx}x{n_elements} links",
            gains.len()
        );
        ensure!(
            rx_sides.len() == n_rx,
            Dimension,
            "{} sides for {n_rx} receivers",
            rx_sides.len()
        );
        ensure!(gains.iter().all(|g| g.is_finite()), Domain, "non-finite cascaded gain");
        Ok(Self {
            gains,
            n_rx,
            n_tx,
            n_elements,
            lambda,
            rx_sides,
        })
    }

    /// Single transmitter, single receiver, given per-element gains.
    pub fn single(gains: Vec<Complex64>, lambda: f64) -> Result<Self> {
        let n = gains.len();
        Self::from_gains(gains, 1, 1, n, lambda, vec![Side::Reflect])
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rx_side(&self, i: usize) -> Side {
        self.rx_sides[i]
    }

    pub fn gain(&self, i: usize, j: usize, m: usize) -> Complex64 {
        self.gains[(i * self.n_tx + j) * self.n_elements + m]
    }

    /// The per-element gains of the `(i, j)` antenna pair.
    pub fn pair(&self, i: usize, j: usize) -> &[Complex64] {
        let start = (i * self.n_tx + j) * self.n_elements;
        &self.gains[start..start + self.n_elements]
    }

    /// Multiplies every gain by a real factor (antenna directivity).
    pub fn scaled(mut self, factor: f64) -> Self {
        for g in &mut self.gains {
            *g *= factor;
        }
        self
    }
}

/// Unit-modulus reflection coefficient or a STAR transmit/reflect pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarCoefficient {
    pub a_t: f64,
    pub a_r: f64,
    pub phase_t: f64,
    pub phase_r: f64,
}

impl StarCoefficient {
    pub fn new(a_t: f64, a_r: f64, phase_t: f64, phase_r: f64) -> Result<Self> {
        ensure!(a_t >= 0.0 && a_r >= 0.0, Domain, "STAR amplitudes must be non-negative");
        ensure!(
            a_t * a_t + a_r * a_r <= 1.0 + 1e-12,
            Domain,
            "STAR energy split a_t² + a_r² = {} exceeds 1",
            a_t * a_t + a_r * a_r
        );
        Ok(Self {
            a_t,
            a_r,
            phase_t,
            phase_r,
        })
    }

    pub fn coefficient(&self, side: Side) -> Complex64 {
        match side {
            Side::Transmit => Complex64::from_polar(self.a_t, self.phase_t),
            Side::Reflect => Complex64::from_polar(self.a_r, self.phase_r),
        }
    }
}

/// Per-element RIS configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum RisProfile {
    ReflectOnly(Vec<Complex64>),
    Star(Vec<StarCoefficient>),
}

impl RisProfile {
    pub fn reflect(coefficients: Vec<Complex64>) -> Result<Self> {
        for (m, c) in coefficients.iter().enumerate() {
            ensure!(
                (c.norm() - 1.0).abs() <= 1e-12,
                Domain,
                "reflection coefficient {m} has modulus {}",
                c.norm()
            );
        }
        Ok(RisProfile::ReflectOnly(coefficients))
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        RisProfile::ReflectOnly(phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect())
    }

    /// All coefficients equal to one.
    pub fn identity(n: usize) -> Self {
        RisProfile::ReflectOnly(vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn star(coefficients: Vec<StarCoefficient>) -> Result<Self> {
        for c in &coefficients {
            StarCoefficient::new(c.a_t, c.a_r, c.phase_t, c.phase_r)?;
        }
        Ok(RisProfile::Star(coefficients))
    }

    pub fn len(&self) -> usize {
        match self {
            RisProfile::ReflectOnly(v) => v.len(),
            RisProfile::Star(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coefficient applied to signals leaving element `m` towards `side`.
    /// A reflect-only surface passes nothing to the transmit side.
    pub fn coefficient(&self, m: usize, side: Side) -> Complex64 {
        match (self, side) {
            (RisProfile::ReflectOnly(v), Side::Reflect) => v[m],
            (RisProfile::ReflectOnly(_), Side::Transmit) => Complex64::new(0.0, 0.0),
            (RisProfile::Star(v), side) => v[m].coefficient(side),
        }
    }

    /// Phases of a reflect-only profile.
    pub fn phases(&self) -> Option<Vec<f64>> {
        match self {
            RisProfile::ReflectOnly(v) => Some(v.iter().map(|c| c.arg()).collect()),
            RisProfile::Star(_) => None,
        }
    }

    /// Multiplies every coefficient by a unit-modulus scalar.
    pub fn rotated(&self, phase: f64) -> Self {
        match self {
            RisProfile::ReflectOnly(v) => {
                let r = Complex64::from_polar(1.0, phase);
                RisProfile::ReflectOnly(v.iter().map(|c| c * r).collect())
            }
            RisProfile::Star(v) => RisProfile::Star(
                v.iter()
                    .map(|c| StarCoefficient {
                        phase_t: c.phase_t + phase,
                        phase_r: c.phase_r + phase,
                        ..*c
                    })
                    .collect(),
            ),
        }
    }
}

/// Receiver × transmitter complex channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
    outside_validity: bool,
}

impl ChannelMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        ensure!(
            data.len() == rows * cols,
            Dimension,
            "{} entries for {rows}x{cols}",
            data.len()
        );
        ensure!(data.iter().all(|c| c.is_finite()), Domain, "non-finite channel entry");
        Ok(Self {
            rows,
            cols,
            data,
            outside_validity: false,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self {
            rows: n,
            cols: n,
            data,
            outside_validity: false,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    /// Row-major entries.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Set when some `|H[i][j]|² > 1`: a passive surface cannot deliver more
    /// power than was transmitted, so the free-space model is outside its validity.
    pub fn outside_validity(&self) -> bool {
        self.outside_validity
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
            outside_validity: self.outside_validity,
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            data: self.data.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn flag_validity(mut self) -> Self {
        self.outside_validity = self.data.iter().any(|c| c.norm_sqr() > 1.0);
        self
    }
}

fn side_of(ris: &RisGeometry, tx: &RisGeometry, rx: Vec3) -> Side {
    let tx_height: f64 = tx.positions().iter().map(|p| ris.signed_height(*p)).sum::<f64>() / tx.len() as f64;
    if ris.signed_height(rx) * tx_height >= 0.0 {
        Side::Reflect
    } else {
        Side::Transmit
    }
}

fn check_separation(ris: &RisGeometry, ends: &RisGeometry, lambda: f64, what: &str) -> Result<()> {
    let min = lambda / 10.0;
    for (m, s) in ris.positions().iter().enumerate() {
        for p in ends.positions() {
            ensure!(
                s.distance(*p) > min,
                Geometry,
                "RIS element {m} within λ/10 of a {what} antenna at {p:?}"
            );
        }
    }
    Ok(())
}

/// Exact spherical-wavefront cascaded gains
/// `β_{i,j,m} · exp(−j(2π/λ)(‖r_i − s_m‖ + ‖s_m − t_j‖))`.
pub fn cascaded_links(
    tx: &RisGeometry,
    ris: &RisGeometry,
    rx: &RisGeometry,
    lambda: f64,
    model: PathLossModel,
) -> Result<CascadedLinkSet> {
    let k = Wavelength::new(lambda)?.wavenumber();
    check_separation(ris, tx, lambda, "transmit")?;
    check_separation(ris, rx, lambda, "receive")?;

    let n = ris.len();
    let mut gains = Vec::with_capacity(rx.len() * tx.len() * n);
    for r in rx.positions() {
        for t in tx.positions() {
            for s in ris.positions() {
                let d_rx = r.distance(*s);
                let d_tx = s.distance(*t);
                let beta = model.cascaded(lambda, d_tx, d_rx);
                gains.push(Complex64::from_polar(beta, -k * (d_rx + d_tx)));
            }
        }
    }
    let sides = rx.positions().iter().map(|r| side_of(ris, tx, *r)).collect();
    CascadedLinkSet::from_gains(gains, rx.len(), tx.len(), n, lambda, sides)
}

/// Planar-wavefront approximation of [`cascaded_links`]: both link phases are
/// expanded to first order in element position about the RIS center and the
/// amplitude is evaluated center-to-center.
pub fn farfield_links(
    tx: &RisGeometry,
    ris: &RisGeometry,
    rx: &RisGeometry,
    lambda: f64,
    model: PathLossModel,
) -> Result<CascadedLinkSet> {
    let k = Wavelength::new(lambda)?.wavenumber();
    check_separation(ris, tx, lambda, "transmit")?;
    check_separation(ris, rx, lambda, "receive")?;

    let c = ris.center();
    let n = ris.len();
    let mut gains = Vec::with_capacity(rx.len() * tx.len() * n);
    for r in rx.positions() {
        let dr = r.distance(c);
        ensure!(dr > 0.0, Geometry, "receiver at the RIS center");
        let ur = (*r - c) * (1.0 / dr);
        for t in tx.positions() {
            let dt = t.distance(c);
            ensure!(dt > 0.0, Geometry, "transmitter at the RIS center");
            let ut = (*t - c) * (1.0 / dt);
            let beta = model.cascaded(lambda, dt, dr);
            let steer = ur + ut;
            for s in ris.positions() {
                let path = dr + dt - (*s - c).dot(steer);
                gains.push(Complex64::from_polar(beta, -k * path));
            }
        }
    }
    let sides = rx.positions().iter().map(|r| side_of(ris, tx, *r)).collect();
    CascadedLinkSet::from_gains(gains, rx.len(), tx.len(), n, lambda, sides)
}

/// `H[i][j] = Σ_m θ_m · gains[i][j][m]`, with the STAR coefficient chosen by
/// the receiver's side of the surface.
pub fn end_to_end(links: &CascadedLinkSet, profile: &RisProfile) -> Result<ChannelMatrix> {
    ensure!(
        profile.len() == links.n_elements(),
        Dimension,
        "profile has {} elements, links have {}",
        profile.len(),
        links.n_elements()
    );
    let mut data = Vec::with_capacity(links.n_rx() * links.n_tx());
    for i in 0..links.n_rx() {
        let side = links.rx_side(i);
        for j in 0..links.n_tx() {
            let h: Complex64 = links
                .pair(i, j)
                .iter()
                .enumerate()
                .map(|(m, g)| profile.coefficient(m, side) * g)
                .sum();
            data.push(h);
        }
    }
    Ok(ChannelMatrix::new(links.n_rx(), links.n_tx(), data)?.flag_validity())
}

/// Direct line-of-sight MIMO matrix (receiver antennas × array elements).
pub fn los_mimo(array: &RisGeometry, rx: &RisGeometry, lambda: f64, model: PathLossModel) -> Result<ChannelMatrix> {
    let k = Wavelength::new(lambda)?.wavenumber();
    check_separation(array, rx, lambda, "receive")?;
    let mut data = Vec::with_capacity(rx.len() * array.len());
    for r in rx.positions() {
        for s in array.positions() {
            let d = r.distance(*s);
            data.push(Complex64::from_polar(model.single_hop(lambda, d), -k * d));
        }
    }
    ChannelMatrix::new(rx.len(), array.len(), data).map_err(|e| match e {
        Error::Domain(m) => Error::Geometry(m),
        other => other,
    })
}
