//! Element-wise coordinate ascent over surface coefficients: a closed-form
//! update for single-user received power and a phase-grid search for the
//! weighted sum rate, optionally with transmit/reflect amplitude splits.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analysis::near_square;
use crate::channel::{
    cascaded_links, end_to_end, farfield_links, CascadedLinkSet, PathLossModel, RisProfile, Side, StarCoefficient,
};
use crate::error::{ensure, Result};
use crate::geometry::{classify_region, FieldRegion, RisGeometry, Vec3};

/// Number of transmit-amplitude samples in `[0, 1]` for STAR updates.
pub const STAR_AMPLITUDES: usize = 17;

/// Weighted sum rate of single-antenna users. With one transmit stream per
/// user (`T = K`) stream `k` serves user `k` and the others interfere; with
/// a single stream (`T = 1`) users are served on orthogonal resources.
#[derive(Debug, Clone)]
pub struct RateObjective {
    users: Vec<CascadedLinkSet>,
    weights: Vec<f64>,
    noise: f64,
    tx_power: f64,
}

impl RateObjective {
    pub fn new(users: Vec<CascadedLinkSet>, weights: Vec<f64>, noise: f64, tx_power: f64) -> Result<Self> {
        ensure!(!users.is_empty(), Config, "rate objective needs at least one user");
        ensure!(
            weights.len() == users.len(),
            Dimension,
            "{} weights for {} users",
            weights.len(),
            users.len()
        );
        ensure!(weights.iter().all(|&w| w > 0.0), Domain, "weights must be positive");
        ensure!(noise > 0.0 && noise.is_finite(), Domain, "noise power must be positive");
        ensure!(
            tx_power > 0.0 && tx_power.is_finite(),
            Domain,
            "transmit power must be positive"
        );
        let n = users[0].n_elements();
        let t = users[0].n_tx();
        for (k, u) in users.iter().enumerate() {
            ensure!(
                u.n_rx() == 1,
                Dimension,
                "user {k} has {} receive antennas, expected 1",
                u.n_rx()
            );
            ensure!(
                u.n_elements() == n,
                Dimension,
                "user {k} sees {} elements, expected {n}",
                u.n_elements()
            );
            ensure!(
                u.n_tx() == t,
                Dimension,
                "user {k} has {} streams, expected {t}",
                u.n_tx()
            );
        }
        ensure!(
            t == 1 || t == users.len(),
            Dimension,
            "{t} transmit streams for {} users: need 1 or one per user",
            users.len()
        );
        Ok(Self {
            users,
            weights,
            noise,
            tx_power,
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_elements(&self) -> usize {
        self.users[0].n_elements()
    }

    fn n_streams(&self) -> usize {
        self.users[0].n_tx()
    }

    fn side(&self, k: usize) -> Side {
        self.users[k].rx_side(0)
    }

    /// `w_k log₂(1 + SINR_k)` from the effective channels `h_k·` of user `k`.
    fn user_term(&self, k: usize, h: &[Complex64]) -> f64 {
        let p = self.tx_power;
        let sinr = if h.len() == 1 {
            p * h[0].norm_sqr() / self.noise
        } else {
            let interference: f64 = h
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, x)| x.norm_sqr())
                .sum();
            p * h[k].norm_sqr() / (p * interference + self.noise)
        };
        self.weights[k] * (1.0 + sinr).log2()
    }

    pub fn evaluate(&self, profile: &RisProfile) -> Result<f64> {
        let mut total = 0.0;
        for (k, u) in self.users.iter().enumerate() {
            let h = end_to_end(u, profile)?;
            total += self.user_term(k, h.data());
        }
        Ok(total)
    }
}

#[derive(Debug, Clone)]
pub enum Objective {
    /// `|H₀₀|²` of a single-pair link set.
    ReceivedPower(CascadedLinkSet),
    WeightedSumRate(RateObjective),
}

impl Objective {
    pub fn evaluate(&self, profile: &RisProfile) -> Result<f64> {
        match self {
            Objective::ReceivedPower(links) => Ok(end_to_end(links, profile)?.get(0, 0).norm_sqr()),
            Objective::WeightedSumRate(r) => r.evaluate(profile),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrace {
    pub initial: f64,
    /// Objective after every element update, sweep after sweep.
    pub objective_values: Vec<f64>,
    pub sweeps: usize,
    /// Candidate-by-user evaluations in each sweep.
    pub evaluations: Vec<usize>,
    pub converged: bool,
    pub n_elements: usize,
}

impl SweepTrace {
    fn new(initial: f64, n_elements: usize) -> Self {
        Self {
            initial,
            objective_values: Vec::new(),
            sweeps: 0,
            evaluations: Vec::new(),
            converged: false,
            n_elements,
        }
    }

    /// `(sweep, element, objective)` with 1-based sweeps.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_elements.max(1);
        self.objective_values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i / n + 1, i % n, v))
    }

    pub fn final_value(&self) -> f64 {
        self.objective_values.last().copied().unwrap_or(self.initial)
    }

    /// Objective at the end of each completed sweep.
    pub fn per_sweep(&self) -> Vec<f64> {
        self.objective_values
            .chunks(self.n_elements.max(1))
            .map(|c| *c.last().expect("non-empty chunk"))
            .collect()
    }
}

fn relative_gain(start: f64, end: f64) -> f64 {
    if start == 0.0 {
        if end == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (end - start) / start.abs()
    }
}

/// Single-user received-power ascent. Each element in ascending order takes
/// `φ_m = arg(Σ_{k≠m} θ_k g_k) − arg(g_m)`; stops once a sweep improves the
/// objective by less than `tol` relative, or after `max_sweeps`.
pub fn elementwise_power(
    links: &CascadedLinkSet,
    init: &RisProfile,
    max_sweeps: usize,
    tol: f64,
) -> Result<(RisProfile, SweepTrace)> {
    ensure!(
        links.n_rx() == 1 && links.n_tx() == 1,
        Config,
        "received-power ascent needs a single-pair link set"
    );
    ensure!(max_sweeps >= 1, Config, "max_sweeps must be at least 1");
    let g = links.pair(0, 0);
    let n = g.len();
    let RisProfile::ReflectOnly(init) = init else {
        return Err(crate::Error::Config(
            "received-power ascent needs a reflect-only initial profile".into(),
        ));
    };
    ensure!(
        init.len() == n,
        Dimension,
        "initial profile has {} elements, links have {n}",
        init.len()
    );
    let mut theta = init.clone();
    let sum = |theta: &[Complex64]| -> Complex64 { theta.iter().zip(g).map(|(t, x)| t * x).sum() };
    let mut s = sum(&theta);
    let mut trace = SweepTrace::new(s.norm_sqr(), n);
    let mut current = trace.initial;

    for _ in 0..max_sweeps {
        let start = current;
        for m in 0..n {
            let rest = s - theta[m] * g[m];
            let phase = if rest.norm() > 0.0 { rest.arg() } else { 0.0 } - g[m].arg();
            let cand = Complex64::from_polar(1.0, phase);
            let s_new = rest + cand * g[m];
            if s_new.norm_sqr() >= current {
                theta[m] = cand;
                s = s_new;
                current = s_new.norm_sqr();
            }
            trace.objective_values.push(current);
        }
        trace.sweeps += 1;
        trace.evaluations.push(n);
        // Resynchronise the cached sum with the coefficients.
        s = sum(&theta);
        if relative_gain(start, current) < tol {
            trace.converged = true;
            break;
        }
    }
    Ok((RisProfile::ReflectOnly(theta), trace))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumRateOptions {
    /// Phase-grid size `Q`.
    pub q: usize,
    pub star: bool,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for SumRateOptions {
    fn default() -> Self {
        Self {
            q: 64,
            star: false,
            max_sweeps: 50,
            tol: 1e-6,
        }
    }
}

/// Weighted-sum-rate ascent. Each element in ascending order tries `Q`
/// uniformly spaced phases (and, for STAR surfaces, 17 transmit amplitudes
/// with `a_r = √(1 − a_t²)`), keeping the best candidate only if it does not
/// lower the objective. Each candidate costs one evaluation per user term,
/// so a sweep performs `N·Q·K` evaluations (`N·Q·K·17` with STAR).
pub fn elementwise_sumrate(
    objective: &RateObjective,
    init: &RisProfile,
    options: &SumRateOptions,
) -> Result<(RisProfile, SweepTrace)> {
    ensure!(options.q >= 4, Config, "phase grid needs Q ≥ 4, got {}", options.q);
    ensure!(options.max_sweeps >= 1, Config, "max_sweeps must be at least 1");
    let n = objective.n_elements();
    ensure!(
        init.len() == n,
        Dimension,
        "initial profile has {} elements, links have {n}",
        init.len()
    );
    let (k_users, t) = (objective.n_users(), objective.n_streams());

    // coefficient state per element and side
    let mut coef: Vec<[Complex64; 2]> = match (init, options.star) {
        (RisProfile::ReflectOnly(v), false) => v.iter().map(|&c| [c, Complex64::new(0.0, 0.0)]).collect(),
        (RisProfile::ReflectOnly(v), true) => v
            .iter()
            .map(|c| {
                let h = Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, c.arg());
                [h, h]
            })
            .collect(),
        (RisProfile::Star(v), true) => v
            .iter()
            .map(|c| [c.coefficient(Side::Reflect), c.coefficient(Side::Transmit)])
            .collect(),
        (RisProfile::Star(_), false) => {
            return Err(crate::Error::Config(
                "reflect-only ascent needs a reflect-only initial profile".into(),
            ))
        }
    };
    let side_ix = |k: usize| match objective.side(k) {
        Side::Reflect => 0,
        Side::Transmit => 1,
    };
    let gain = |k: usize, j: usize, m: usize| objective.users[k].gain(0, j, m);
    let by_side: [Vec<usize>; 2] = [0, 1].map(|si| (0..k_users).filter(|&k| side_ix(k) == si).collect());

    let build_h = |coef: &[[Complex64; 2]]| -> Vec<Vec<Complex64>> {
        (0..k_users)
            .map(|k| {
                let si = side_ix(k);
                (0..t)
                    .map(|j| (0..n).map(|m| coef[m][si] * gain(k, j, m)).sum())
                    .collect()
            })
            .collect()
    };
    let total = |h: &[Vec<Complex64>]| (0..k_users).map(|k| objective.user_term(k, &h[k])).sum::<f64>();

    let phases: Vec<Complex64> = (0..options.q)
        .map(|i| Complex64::from_polar(1.0, std::f64::consts::TAU * i as f64 / options.q as f64))
        .collect();
    let amplitudes: Vec<(f64, f64)> = if options.star {
        (0..STAR_AMPLITUDES)
            .map(|i| {
                let a_t = i as f64 / (STAR_AMPLITUDES - 1) as f64;
                (a_t, (1.0 - a_t * a_t).max(0.0).sqrt())
            })
            .collect()
    } else {
        vec![(0.0, 1.0)]
    };

    let mut h = build_h(&coef);
    let mut current = total(&h);
    let mut trace = SweepTrace::new(current, n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); t];

    for _ in 0..options.max_sweeps {
        let start = current;
        let mut evaluations = 0usize;
        #[allow(clippy::needless_range_loop)]
        for m in 0..n {
            // Sum of the other users' terms stays fixed while one side changes,
            // so each side is maximized separately.
            let mut best: Option<(f64, [Complex64; 2])> = None;
            for &(a_t, a_r) in &amplitudes {
                let mut pick = [Complex64::new(0.0, 0.0); 2];
                let mut value = 0.0;
                for (si, amp) in [(0usize, a_r), (1usize, a_t)] {
                    if si == 1 && !options.star {
                        continue;
                    }
                    let mut side_best: Option<(f64, Complex64)> = None;
                    for &ph in &phases {
                        let c = ph * amp;
                        let mut v = 0.0;
                        for &k in &by_side[si] {
                            for (j, slot) in scratch.iter_mut().enumerate() {
                                *slot = h[k][j] + (c - coef[m][si]) * gain(k, j, m);
                            }
                            v += objective.user_term(k, &scratch);
                            evaluations += 1;
                        }
                        if side_best.is_none_or(|(bv, _)| v > bv) {
                            side_best = Some((v, c));
                        }
                    }
                    let (v, c) = side_best.expect("phase grid is non-empty");
                    pick[si] = c;
                    value += v;
                }
                if best.is_none_or(|(bv, _)| value > bv) {
                    best = Some((value, pick));
                }
            }
            let (value, pick) = best.expect("amplitude grid is non-empty");
            if value >= current {
                for (k, hk) in h.iter_mut().enumerate() {
                    let si = side_ix(k);
                    for (j, x) in hk.iter_mut().enumerate() {
                        *x += (pick[si] - coef[m][si]) * gain(k, j, m);
                    }
                }
                coef[m] = pick;
                current = total(&h);
            }
            trace.objective_values.push(current);
        }
        trace.sweeps += 1;
        trace.evaluations.push(evaluations);
        h = build_h(&coef);
        let synced = total(&h);
        // keep the trace monotone across the resynchronisation
        current = synced.max(current);
        if relative_gain(start, current) < options.tol {
            trace.converged = true;
            break;
        }
    }

    let profile = if options.star {
        RisProfile::Star(
            coef.iter()
                .map(|[r, t]| StarCoefficient {
                    a_t: t.norm(),
                    a_r: r.norm(),
                    phase_t: t.arg(),
                    phase_r: r.arg(),
                })
                .collect(),
        )
    } else {
        RisProfile::ReflectOnly(coef.iter().map(|c| c[0]).collect())
    };
    Ok((profile, trace))
}

/// Setup of the near-field versus far-field design comparison. The surface
/// is an `n × n`-ish planar array at the origin facing `+z`.
#[derive(Debug, Clone)]
pub struct NearFarConfig {
    pub lambda: f64,
    pub spacing: f64,
    pub bs: Vec3,
    pub users: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub noise: f64,
    pub tx_power: f64,
    pub options: SumRateOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearFarRow {
    pub n_elements: usize,
    /// Profile optimized on the exact channels, evaluated on the exact channels.
    pub near_designed: f64,
    /// Profile optimized on the planar-wavefront channels, evaluated on the exact channels.
    pub far_designed: f64,
    pub gap: f64,
    /// Every user is inside the near field of the surface.
    pub all_near: bool,
}

/// For each size, designs a profile on exact and on planar-wavefront
/// channels (identity start) and scores both on the exact channels.
pub fn near_vs_far_rate_experiment(config: &NearFarConfig, sizes: &[usize]) -> Result<Vec<NearFarRow>> {
    ensure!(config.users.len() >= 2, Config, "comparison needs at least two users");
    ensure!(!sizes.is_empty(), Config, "no sizes to sweep");
    sizes
        .par_iter()
        .map(|&n| {
            let (rows, cols) = near_square(n);
            let ris = RisGeometry::planar(rows, cols, config.spacing, Vec3::ZERO, Vec3::Z)?;
            let tx = RisGeometry::point(config.bs)?;
            let build = |far: bool| -> Result<Vec<CascadedLinkSet>> {
                config
                    .users
                    .iter()
                    .map(|u| {
                        let rx = RisGeometry::point(*u)?;
                        if far {
                            farfield_links(&tx, &ris, &rx, config.lambda, PathLossModel::FreeSpaceCascaded)
                        } else {
                            cascaded_links(&tx, &ris, &rx, config.lambda, PathLossModel::FreeSpaceCascaded)
                        }
                    })
                    .collect()
            };
            let objective = |links| RateObjective::new(links, config.weights.clone(), config.noise, config.tx_power);
            let exact = objective(build(false)?)?;
            let approx = objective(build(true)?)?;
            let init = RisProfile::identity(ris.len());
            let (near_profile, _) = elementwise_sumrate(&exact, &init, &config.options)?;
            let (far_profile, _) = elementwise_sumrate(&approx, &init, &config.options)?;
            let near_designed = exact.evaluate(&near_profile)?;
            let far_designed = exact.evaluate(&far_profile)?;
            let mut all_near = true;
            for u in &config.users {
                all_near &= classify_region(&ris, *u, config.lambda)? == FieldRegion::NearField;
            }
            Ok(NearFarRow {
                n_elements: ris.len(),
                near_designed,
                far_designed,
                gap: near_designed - far_designed,
                all_near,
            })
        })
        .collect()
}
