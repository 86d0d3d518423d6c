//! Performance limits: co-phasing, power scaling with surface size, and
//! degrees of freedom from singular spectra.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{cascaded_links, end_to_end, CascadedLinkSet, ChannelMatrix, PathLossModel, RisProfile};
use crate::error::{ensure, Result};
use crate::geometry::{classify_region, rayleigh_distance, FieldRegion, RisGeometry, Vec3, Wavelength};
use crate::linalg;
use crate::metasurface::{build_operator, channel_gain, cophased_currents, SurfaceGrid, TxIllumination};

/// Profile `θ_m = exp(−j·arg g_ijm)` that adds all element contributions of
/// one antenna pair in phase.
pub fn cophase_profile(links: &CascadedLinkSet, rx_index: usize, tx_index: usize) -> Result<RisProfile> {
    ensure!(
        rx_index < links.n_rx() && tx_index < links.n_tx(),
        Dimension,
        "pair ({rx_index}, {tx_index}) outside {}x{} links",
        links.n_rx(),
        links.n_tx()
    );
    Ok(RisProfile::from_phases(
        &links
            .pair(rx_index, tx_index)
            .iter()
            .map(|g| -g.arg())
            .collect::<Vec<_>>(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RisKind {
    Patch,
    Metasurface,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    /// Element count (patch) or aperture area in m² (metasurface).
    pub size_metric: f64,
    pub pr_over_pt: f64,
    pub regime: FieldRegion,
    /// `P_r/P_t > 1`: beyond what a passive free-space model can represent.
    pub outside_validity: bool,
}

/// Fixed part of a power-scaling sweep. The surface is centred at the origin
/// with normal `+z`; `tx` and `rx` are absolute positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerScalingConfig {
    pub lambda: f64,
    pub spacing: f64,
    pub tx: Vec3,
    pub rx: Vec3,
}

/// `rows × cols` with `rows` the largest divisor of `n` not above `√n`.
pub fn near_square(n: usize) -> (usize, usize) {
    let mut rows = (n as f64).sqrt() as usize;
    while rows > 1 && n % rows != 0 {
        rows -= 1;
    }
    let rows = rows.max(1);
    (rows, n / rows)
}

/// Co-phased `P_r/P_t` for every size in `sizes` (element counts).
///
/// A metasurface of size `N` is a continuous sheet of area `N·λ²/(4π)`, the
/// effective area of `N` isotropic patch elements, with the same row/column
/// aspect as the patch array, sampled at λ/8 and driven by co-phased currents.
pub fn power_scaling_sweep(config: &PowerScalingConfig, sizes: &[usize], kind: RisKind) -> Result<Vec<ScalingPoint>> {
    let lambda = Wavelength::new(config.lambda)?.meters();
    ensure!(!sizes.is_empty(), Config, "no sizes to sweep");
    ensure!(sizes[0] >= 1, Config, "sizes must be positive");
    ensure!(
        sizes.windows(2).all(|w| w[0] < w[1]),
        Config,
        "sizes must be strictly increasing"
    );
    ensure!(config.spacing > 0.0, Domain, "element spacing must be positive");

    sizes
        .par_iter()
        .map(|&n| match kind {
            RisKind::Patch => patch_point(config, n, lambda),
            RisKind::Metasurface => metasurface_point(config, n, lambda),
        })
        .collect()
}

fn regime(ris: &RisGeometry, config: &PowerScalingConfig, lambda: f64) -> Result<FieldRegion> {
    let near = classify_region(ris, config.tx, lambda)? == FieldRegion::NearField
        || classify_region(ris, config.rx, lambda)? == FieldRegion::NearField;
    Ok(if near {
        FieldRegion::NearField
    } else {
        FieldRegion::FarField
    })
}

fn patch_point(config: &PowerScalingConfig, n: usize, lambda: f64) -> Result<ScalingPoint> {
    let (rows, cols) = near_square(n);
    let ris = RisGeometry::planar(rows, cols, config.spacing, Vec3::ZERO, Vec3::Z)?;
    let links = cascaded_links(
        &RisGeometry::point(config.tx)?,
        &ris,
        &RisGeometry::point(config.rx)?,
        lambda,
        PathLossModel::FreeSpaceCascaded,
    )?;
    let h = end_to_end(&links, &cophase_profile(&links, 0, 0)?)?;
    Ok(ScalingPoint {
        size_metric: n as f64,
        pr_over_pt: h.get(0, 0).norm_sqr(),
        regime: regime(&ris, config, lambda)?,
        outside_validity: h.outside_validity(),
    })
}

fn metasurface_point(config: &PowerScalingConfig, n: usize, lambda: f64) -> Result<ScalingPoint> {
    let (rows, cols) = near_square(n);
    let side = lambda / (4.0 * PI).sqrt();
    let (width, height) = (cols as f64 * side, rows as f64 * side);
    let grid = SurfaceGrid::rectangular(width, height, lambda / 8.0, Vec3::ZERO, Vec3::Z)?;
    let tx = TxIllumination::isotropic(lambda, config.tx.norm())?;
    let currents = cophased_currents(&grid, config.rx, lambda)?;
    let gain = channel_gain(&grid, &currents, &tx, config.rx, lambda)?;
    // Classification uses the sheet's own diagonal as the aperture.
    let limit = rayleigh_distance(width.hypot(height), lambda)?;
    let near = config.tx.norm() < limit || config.rx.norm() < limit;
    Ok(ScalingPoint {
        size_metric: width * height,
        pr_over_pt: gain,
        regime: if near {
            FieldRegion::NearField
        } else {
            FieldRegion::FarField
        },
        outside_validity: gain > 1.0,
    })
}

/// Ordinary least-squares slope of `ln y` against `ln x`; `None` when the
/// fit is degenerate (fewer than two distinct abscissae or non-positive data).
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 1e-300 {
        return None;
    }
    Some(sxy / sxx)
}

/// Log-log slope over the points whose size lies within the top decade.
pub fn top_decade_slope(points: &[ScalingPoint]) -> Option<f64> {
    let max = points.iter().map(|p| p.size_metric).fold(f64::NEG_INFINITY, f64::max);
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.size_metric >= max / 10.0)
        .map(|p| (p.size_metric, p.pr_over_pt))
        .unzip();
    fit_loglog_slope(&x, &y)
}

/// Log-log slope over all points.
pub fn overall_slope(points: &[ScalingPoint]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().map(|p| (p.size_metric, p.pr_over_pt)).unzip();
    fit_loglog_slope(&x, &y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdofMethod {
    /// `exp` of the Shannon entropy of `σ_k / Σσ`.
    EffectiveRank,
    /// `#{k : σ_k ≥ τ·σ₁}`.
    ThresholdCount(f64),
}

pub const DEFAULT_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct EdofReport {
    pub singular_values: Vec<f64>,
    pub effective_rank: f64,
    pub threshold_count: usize,
    pub method: EdofMethod,
}

impl EdofReport {
    /// The figure selected by `method`.
    pub fn value(&self) -> f64 {
        match self.method {
            EdofMethod::EffectiveRank => self.effective_rank,
            EdofMethod::ThresholdCount(_) => self.threshold_count as f64,
        }
    }
}

/// Degrees of freedom of `h`. `threshold_count` uses τ from the method, or
/// the default 0.01 for [`EdofMethod::EffectiveRank`].
pub fn effective_dof(h: &ChannelMatrix, method: EdofMethod) -> Result<EdofReport> {
    let sv = linalg::singular_values(h.rows(), h.cols(), h.data());
    edof_from_singular_values(sv, h.rows().max(h.cols()), method)
}

/// As [`effective_dof`] on a precomputed non-increasing spectrum of a
/// matrix whose larger dimension is `max_dim`.
pub fn edof_from_singular_values(mut sv: Vec<f64>, max_dim: usize, method: EdofMethod) -> Result<EdofReport> {
    let tau = match method {
        EdofMethod::ThresholdCount(t) => {
            ensure!(t > 0.0 && t <= 1.0, Domain, "threshold τ = {t} outside (0, 1]");
            t
        }
        EdofMethod::EffectiveRank => DEFAULT_THRESHOLD,
    };
    let s1 = sv.first().copied().unwrap_or(0.0);
    ensure!(
        s1 > 0.0 && s1.is_finite(),
        Domain,
        "zero or non-finite matrix has no degrees of freedom"
    );
    // Values under the numerical-rank floor are round-off.
    let floor = s1 * max_dim.max(1) as f64 * f64::EPSILON;
    for s in &mut sv {
        if *s < floor {
            *s = 0.0;
        }
    }
    let total: f64 = sv.iter().sum();
    let entropy: f64 = sv
        .iter()
        .filter(|&&s| s > 0.0)
        .map(|&s| {
            let p = s / total;
            -p * p.ln()
        })
        .sum();
    let threshold_count = sv.iter().filter(|&&s| s >= tau * s1).count();
    Ok(EdofReport {
        effective_rank: entropy.exp().min(sv.len() as f64).max(1.0),
        threshold_count,
        singular_values: sv,
        method,
    })
}

/// Upper estimate `V_R V_T / (4 (λr)² Δz_T Δz_R)` of the degrees of freedom
/// between two rectangular prisms.
pub fn max_edof_prisms(v_r: f64, v_t: f64, lambda: f64, r: f64, dz_t: f64, dz_r: f64) -> Result<f64> {
    for (name, v) in [
        ("V_R", v_r),
        ("V_T", v_t),
        ("lambda", lambda),
        ("r", r),
        ("dz_T", dz_t),
        ("dz_R", dz_r),
    ] {
        ensure!(v > 0.0 && v.is_finite(), Domain, "{name} must be positive, got {v}");
    }
    Ok(v_r * v_t / (4.0 * (lambda * r).powi(2) * dz_t * dz_r))
}

/// Square metasurface facing a parallel square receiver patch on its axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdofScalingConfig {
    pub lambda: f64,
    /// Surface sampling step (≤ λ/2).
    pub surface_spacing: f64,
    pub rx_side: f64,
    pub rx_spacing: f64,
    /// Relative singular-value threshold τ.
    pub threshold: f64,
}

impl EdofScalingConfig {
    /// λ/2 surface sampling, receiver sampled at λ, half-power threshold.
    pub fn new(lambda: f64, rx_side: f64) -> Self {
        Self {
            lambda,
            surface_spacing: lambda / 2.0,
            rx_side,
            rx_spacing: lambda,
            threshold: std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdofScaling {
    /// `(S, count)` at the first distance.
    pub by_aperture: Vec<(f64, usize)>,
    /// `(r, count)` at the largest aperture.
    pub by_distance: Vec<(f64, usize)>,
    /// `None` when every count is equal (degenerate fit).
    pub aperture_exponent: Option<f64>,
    pub distance_exponent: Option<f64>,
}

/// Threshold-count degrees of freedom of one surface–receiver pair.
pub fn metasurface_edof(config: &EdofScalingConfig, aperture: f64, distance: f64) -> Result<usize> {
    ensure!(
        aperture > 0.0 && distance > 0.0,
        Domain,
        "aperture and distance must be positive"
    );
    let side = aperture.sqrt();
    let grid = SurfaceGrid::rectangular(side, side, config.surface_spacing, Vec3::ZERO, Vec3::Z)?;
    let rx = SurfaceGrid::rectangular(
        config.rx_side,
        config.rx_side,
        config.rx_spacing,
        Vec3::new(0.0, 0.0, distance),
        Vec3::Z,
    )?;
    let op = build_operator(&grid, rx.points(), config.lambda)?;
    let report = edof_from_singular_values(
        op.singular_values(),
        op.rows().max(op.cols()),
        EdofMethod::ThresholdCount(config.threshold),
    )?;
    Ok(report.threshold_count)
}

/// Sweeps the aperture `S` (m², square surfaces) at `distances[0]` and the
/// distance at the largest aperture, fitting power laws to both.
pub fn metasurface_edof_scaling(
    config: &EdofScalingConfig,
    apertures: &[f64],
    distances: &[f64],
) -> Result<EdofScaling> {
    ensure!(
        !apertures.is_empty() && !distances.is_empty(),
        Config,
        "empty aperture or distance sweep"
    );
    let s_max = apertures.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let r0 = distances[0];
    let by_aperture = apertures
        .iter()
        .map(|&s| metasurface_edof(config, s, r0).map(|c| (s, c)))
        .collect::<Result<Vec<_>>>()?;
    let by_distance = distances
        .iter()
        .map(|&r| metasurface_edof(config, s_max, r).map(|c| (r, c)))
        .collect::<Result<Vec<_>>>()?;
    let fit = |pts: &[(f64, usize)]| {
        if pts.iter().all(|p| p.1 == pts[0].1) {
            return None;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(a, c)| (a, c as f64)).unzip();
        fit_loglog_slope(&x, &y)
    };
    Ok(EdofScaling {
        aperture_exponent: fit(&by_aperture),
        distance_exponent: fit(&by_distance),
        by_aperture,
        by_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::los_mimo;
    use crate::error::Error;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_positive_gains_need_no_shift() {
        let l = CascadedLinkSet::single(vec![c(1.0, 0.0), c(0.5, 0.0), c(2.0, 0.0)], 0.01).unwrap();
        let p = cophase_profile(&l, 0, 0).unwrap();
        assert!(p.phases().unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn quadrature_gains_add() {
        let l = CascadedLinkSet::single(vec![c(0.0, 1.0), c(0.0, -1.0)], 0.01).unwrap();
        let h = end_to_end(&l, &cophase_profile(&l, 0, 0).unwrap()).unwrap();
        assert_relative_eq!(h.get(0, 0).norm(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn random_gains_reach_triangle_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g: Vec<Complex64> = (0..16)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let bound: f64 = g.iter().map(|x| x.norm()).sum();
        let l = CascadedLinkSet::single(g, 0.01).unwrap();
        let h = end_to_end(&l, &cophase_profile(&l, 0, 0).unwrap()).unwrap();
        assert!((h.get(0, 0).norm() - bound).abs() <= 1e-12 * bound);
    }

    #[test]
    fn cophasing_beats_random_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g: Vec<Complex64> = (0..12)
            .map(|_| Complex64::from_polar(rng.random::<f64>(), rng.random::<f64>() * 6.3))
            .collect();
        let l = CascadedLinkSet::single(g, 0.01).unwrap();
        let best = end_to_end(&l, &cophase_profile(&l, 0, 0).unwrap())
            .unwrap()
            .get(0, 0)
            .norm();
        for _ in 0..1000 {
            let phases: Vec<f64> = (0..12).map(|_| rng.random::<f64>() * 6.3).collect();
            let v = end_to_end(&l, &RisProfile::from_phases(&phases))
                .unwrap()
                .get(0, 0)
                .norm();
            assert!(v <= best * (1.0 + 1e-12));
        }
    }

    #[test]
    fn near_square_shapes() {
        assert_eq!(near_square(1), (1, 1));
        assert_eq!(near_square(16), (4, 4));
        assert_eq!(near_square(12), (3, 4));
        assert_eq!(near_square(7), (1, 7));
        assert_eq!(near_square(400), (20, 20));
    }

    #[test]
    fn single_element_patch_matches_metasurface() {
        let cfg = PowerScalingConfig {
            lambda: 0.01,
            spacing: 0.005,
            tx: Vec3::new(0.0, 0.0, 10.0),
            rx: Vec3::new(1.0, 0.0, 10.0),
        };
        let p = power_scaling_sweep(&cfg, &[1], RisKind::Patch).unwrap()[0];
        let m = power_scaling_sweep(&cfg, &[1], RisKind::Metasurface).unwrap()[0];
        assert!((p.pr_over_pt - m.pr_over_pt).abs() / p.pr_over_pt < 0.01);
    }

    #[test]
    fn far_field_slope_is_quadratic() {
        let cfg = PowerScalingConfig {
            lambda: 0.01,
            spacing: 0.005,
            tx: Vec3::new(0.0, 0.0, 1000.0),
            rx: Vec3::new(0.0, 0.0, 10.0),
        };
        let sizes: Vec<usize> = (1..=12).map(|n| n * n).collect();
        let pts = power_scaling_sweep(&cfg, &sizes, RisKind::Patch).unwrap();
        let slope = overall_slope(&pts).unwrap();
        assert!((1.9..=2.1).contains(&slope), "{slope}");
        assert!(pts.iter().all(|p| p.regime == FieldRegion::FarField));
        let meta = power_scaling_sweep(&cfg, &sizes, RisKind::Metasurface).unwrap();
        let slope = overall_slope(&meta).unwrap();
        assert!((1.9..=2.1).contains(&slope), "{slope}");
    }

    #[test]
    fn sizes_must_increase() {
        let cfg = PowerScalingConfig {
            lambda: 0.01,
            spacing: 0.005,
            tx: Vec3::new(0.0, 0.0, 10.0),
            rx: Vec3::new(0.0, 0.0, 10.0),
        };
        assert!(matches!(
            power_scaling_sweep(&cfg, &[4, 4], RisKind::Patch),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            power_scaling_sweep(&cfg, &[], RisKind::Patch),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn validity_flag_propagates() {
        let cfg = PowerScalingConfig {
            lambda: 1.0,
            spacing: 0.1,
            tx: Vec3::new(0.0, 0.0, 0.15),
            rx: Vec3::new(0.0, 0.0, 0.15),
        };
        let p = power_scaling_sweep(&cfg, &[100], RisKind::Patch).unwrap()[0];
        assert!(p.pr_over_pt > 1.0 && p.outside_validity);
    }

    #[test]
    fn slope_fit_oracle() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert_relative_eq!(fit_loglog_slope(&x, &y).unwrap(), 1.5, epsilon = 1e-12);
        assert!(fit_loglog_slope(&[2.0, 2.0], &[1.0, 3.0]).is_none());
        assert!(fit_loglog_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn rank_one_is_exactly_one() {
        let a = [c(1.0, 0.5), c(-0.3, 2.0), c(0.7, 0.0), c(0.0, 1.0)];
        let b = [c(0.2, 0.1), c(1.0, -1.0), c(0.5, 0.5)];
        let data = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
        let h = ChannelMatrix::new(4, 3, data).unwrap();
        let r = effective_dof(&h, EdofMethod::EffectiveRank).unwrap();
        assert_eq!(r.effective_rank, 1.0);
        assert_eq!(r.threshold_count, 1);
    }

    #[test]
    fn identity_rank_four() {
        let r = effective_dof(&ChannelMatrix::identity(4), EdofMethod::EffectiveRank).unwrap();
        assert_relative_eq!(r.effective_rank, 4.0, epsilon = 1e-12);
        assert_eq!(r.threshold_count, 4);
    }

    #[test]
    fn zero_matrix_rejected() {
        let h = ChannelMatrix::new(2, 2, vec![c(0.0, 0.0); 4]).unwrap();
        assert!(matches!(
            effective_dof(&h, EdofMethod::EffectiveRank),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn threshold_count_respects_tau() {
        let h = ChannelMatrix::new(
            3,
            3,
            vec![
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.1, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.001, 0.0),
            ],
        )
        .unwrap();
        assert_eq!(
            effective_dof(&h, EdofMethod::ThresholdCount(0.01))
                .unwrap()
                .threshold_count,
            2
        );
        assert_eq!(
            effective_dof(&h, EdofMethod::ThresholdCount(0.5))
                .unwrap()
                .threshold_count,
            1
        );
        assert_eq!(
            effective_dof(&h, EdofMethod::ThresholdCount(1e-4)).unwrap().value(),
            3.0
        );
    }

    #[test]
    fn los_mimo_rank_dichotomy() {
        let lambda = 0.01;
        let ris = RisGeometry::planar(16, 16, lambda / 2.0, Vec3::ZERO, Vec3::Z).unwrap();
        let r = ris.rayleigh_distance(lambda).unwrap();
        let rank = |d: f64| {
            let rx = RisGeometry::line(4, lambda / 2.0, Vec3::new(0.0, 0.0, d), Vec3::Z).unwrap();
            let h = los_mimo(&ris, &rx, lambda, PathLossModel::FreeSpaceCascaded).unwrap();
            effective_dof(&h, EdofMethod::EffectiveRank).unwrap().effective_rank
        };
        let far = rank(100.0 * r);
        let near = rank(0.05 * r);
        assert!((1.0..=1.05).contains(&far), "{far}");
        assert!(near > 1.2, "{near}");
    }

    #[test]
    fn prism_bound_values() {
        assert_relative_eq!(
            max_edof_prisms(1e-4, 1e-4, 0.01, 1.0, 0.01, 0.01).unwrap(),
            0.25,
            max_relative = 1e-12
        );
        let base = max_edof_prisms(1e-3, 2e-3, 0.01, 0.5, 0.02, 0.01).unwrap();
        assert_relative_eq!(
            max_edof_prisms(1e-3, 2e-3, 0.01, 1.0, 0.02, 0.01).unwrap(),
            base / 4.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            max_edof_prisms(2e-3, 4e-3, 0.01, 0.5, 0.02, 0.01).unwrap(),
            base * 4.0,
            max_relative = 1e-12
        );
        assert!(max_edof_prisms(0.0, 1.0, 0.01, 1.0, 0.01, 0.01).is_err());
        assert!(max_edof_prisms(1.0, 1.0, 0.01, -1.0, 0.01, 0.01).is_err());
    }

    #[test]
    fn metasurface_edof_tracks_area_over_range_squared() {
        let cfg = EdofScalingConfig::new(0.01, 0.1);
        let base = metasurface_edof(&cfg, 0.0144, 0.4).unwrap();
        let quad = metasurface_edof(&cfg, 0.0576, 0.4).unwrap();
        let ratio = quad as f64 / base as f64;
        assert!((3.0..=5.0).contains(&ratio), "{base} -> {quad}");
        // S and r² scaled together
        let both = metasurface_edof(&cfg, 0.0576, 0.8).unwrap();
        assert!((both as i64 - base as i64).abs() <= 1, "{base} vs {both}");
    }

    #[test]
    fn degenerate_scaling_fit_reported() {
        let cfg = EdofScalingConfig::new(0.01, 0.02);
        let s = metasurface_edof_scaling(&cfg, &[1e-4, 1.2e-4], &[5.0]).unwrap();
        assert_eq!(s.by_aperture[0].1, 1);
        assert!(s.aperture_exponent.is_none());
        assert!(s.distance_exponent.is_none());
    }

    proptest! {
        #[test]
        fn effective_rank_bounds_and_scale_invariance(seed in 0u64..500, re in -3.0f64..3.0, im in 0.1f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (r, cc) = (rng.random_range(1..5usize), rng.random_range(1..6usize));
            let data: Vec<Complex64> = (0..r * cc).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let h = ChannelMatrix::new(r, cc, data).unwrap();
            let a = effective_dof(&h, EdofMethod::EffectiveRank).unwrap();
            prop_assert!(a.effective_rank >= 1.0 && a.effective_rank <= r.min(cc) as f64 + 1e-12);
            prop_assert!(a.singular_values.windows(2).all(|w| w[0] >= w[1]));
            let b = effective_dof(&h.scale(c(re, im)), EdofMethod::EffectiveRank).unwrap();
            prop_assert!((a.effective_rank - b.effective_rank).abs() < 1e-9);
        }

        #[test]
        fn patch_edof_ceiling(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lambda = 0.01;
            let n_side = rng.random_range(1..4usize);
            let ris = RisGeometry::planar(n_side, n_side, lambda / 2.0, Vec3::ZERO, Vec3::Z).unwrap();
            let tx = RisGeometry::line(rng.random_range(1..5), lambda / 2.0, Vec3::new(0.1, 0.0, 0.5), Vec3::Z).unwrap();
            let rx = RisGeometry::line(rng.random_range(1..5), lambda / 2.0, Vec3::new(-0.1, 0.0, 0.3), Vec3::Z).unwrap();
            let links = cascaded_links(&tx, &ris, &rx, lambda, PathLossModel::FreeSpaceCascaded).unwrap();
            let phases: Vec<f64> = (0..ris.len()).map(|_| rng.random::<f64>() * 6.3).collect();
            let h = end_to_end(&links, &RisProfile::from_phases(&phases)).unwrap();
            if h.frobenius_norm() > 0.0 {
                let e = effective_dof(&h, EdofMethod::ThresholdCount(DEFAULT_THRESHOLD)).unwrap();
                prop_assert!(e.threshold_count <= ris.len().min(tx.len()).min(rx.len()));
            }
        }

        #[test]
        fn adding_elements_never_reduces_cophased_power(seed in 0u64..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..20usize);
            let g: Vec<Complex64> = (0..n).map(|_| Complex64::from_polar(rng.random::<f64>(), rng.random::<f64>() * 6.3)).collect();
            let k = rng.random_range(1..n);
            let power = |g: Vec<Complex64>| {
                let l = CascadedLinkSet::single(g, 0.01).unwrap();
                end_to_end(&l, &cophase_profile(&l, 0, 0).unwrap()).unwrap().get(0, 0).norm_sqr()
            };
            prop_assert!(power(g[..k].to_vec()) <= power(g.clone()) * (1.0 + 1e-12));
        }
    }
}
