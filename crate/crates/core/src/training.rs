//! Beam training against a simulated received-power probe: exhaustive
//! polar search, two-phase (angle then distance) search, and top-down
//! search of a hierarchical codebook.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{cascaded_links, PathLossModel};
use crate::codebook::{
    build_hierarchical, total_layers, Codeword, FlatPolarCodebook, HierarchicalCodebook, PolarDomain,
};
use crate::error::{ensure, Result};
use crate::geometry::{RisGeometry, Vec3, Wavelength};

/// Received-power probe for one user. The base-station beam is fixed on the
/// surface and its known per-element phase is removed, leaving the
/// surface-to-user gains `g_m`.
#[derive(Debug, Clone)]
pub struct MeasurementOracle {
    gains: Vec<Complex64>,
    noise_variance: f64,
    rng: ChaCha8Rng,
    pilots: usize,
    user_polar: (f64, f64),
}

impl MeasurementOracle {
    pub fn new(gains: Vec<Complex64>, noise_variance: f64, seed: u64, user_polar: (f64, f64)) -> Result<Self> {
        ensure!(!gains.is_empty(), Dimension, "oracle needs at least one element gain");
        ensure!(
            noise_variance >= 0.0 && noise_variance.is_finite(),
            Domain,
            "noise variance must be non-negative"
        );
        Ok(Self {
            gains,
            noise_variance,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pilots: 0,
            user_polar,
        })
    }

    /// Cascaded base station → surface → user gains with the base-station leg phase removed.
    pub fn from_scene(
        bs: Vec3,
        ris: &RisGeometry,
        user: Vec3,
        lambda: f64,
        model: PathLossModel,
        noise_variance: f64,
        seed: u64,
    ) -> Result<Self> {
        let k = Wavelength::new(lambda)?.wavenumber();
        let links = cascaded_links(&RisGeometry::point(bs)?, ris, &RisGeometry::point(user)?, lambda, model)?;
        let gains = links
            .pair(0, 0)
            .iter()
            .zip(ris.positions())
            .map(|(g, s)| g * Complex64::from_polar(1.0, k * s.distance(bs)))
            .collect();
        Self::new(gains, noise_variance, seed, ris.polar_of(user))
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn pilots(&self) -> usize {
        self.pilots
    }

    /// `(angle, distance)` of the user relative to the surface.
    pub fn user_polar(&self) -> (f64, f64) {
        self.user_polar
    }

    /// Noiseless `|Σ θ_m g_m|²`.
    pub fn gain_of(&self, codeword: &Codeword) -> f64 {
        self.field(codeword).norm_sqr()
    }

    fn field(&self, codeword: &Codeword) -> Complex64 {
        assert_eq!(
            codeword.phases.len(),
            self.gains.len(),
            "codeword size does not match the oracle"
        );
        codeword
            .phases
            .iter()
            .zip(&codeword.active_mask)
            .zip(&self.gains)
            .filter(|((_, &on), _)| on)
            .map(|((&p, _), g)| Complex64::from_polar(1.0, p) * g)
            .sum()
    }

    /// One pilot: `|Σ θ_m g_m + n|²` with `n ~ CN(0, σ²)`.
    pub fn measure(&mut self, codeword: &Codeword) -> f64 {
        self.pilots += 1;
        let mut y = self.field(codeword);
        if self.noise_variance > 0.0 {
            let s = (self.noise_variance / 2.0).sqrt();
            let re: f64 = self.rng.sample(StandardNormal);
            let im: f64 = self.rng.sample(StandardNormal);
            y += Complex64::new(re, im) * s;
        }
        y.norm_sqr()
    }

    /// Co-phasing optimum `(Σ|g_m|)²`.
    pub fn truth_gain(&self) -> f64 {
        self.gains.iter().map(|g| g.norm()).sum::<f64>().powi(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingResult {
    pub chosen: Codeword,
    pub pilot_count: usize,
    pub achieved_gain: f64,
    pub truth_gain: f64,
    /// The chosen codeword's region contains the user.
    pub hit: bool,
}

fn best_of(oracle: &mut MeasurementOracle, candidates: impl IntoIterator<Item = Codeword>) -> (usize, Codeword) {
    let mut best: Option<(f64, usize, Codeword)> = None;
    for (i, cw) in candidates.into_iter().enumerate() {
        let p = oracle.measure(&cw);
        if best.as_ref().is_none_or(|(bp, _, _)| p > *bp) {
            best = Some((p, i, cw));
        }
    }
    let (_, i, cw) = best.expect("at least one candidate");
    (i, cw)
}

fn finish(oracle: &MeasurementOracle, start: usize, chosen: Codeword) -> TrainingResult {
    let (theta, d) = oracle.user_polar();
    TrainingResult {
        achieved_gain: oracle.gain_of(&chosen),
        truth_gain: oracle.truth_gain(),
        hit: chosen.region.contains(theta, d),
        pilot_count: oracle.pilots() - start,
        chosen,
    }
}

/// Measures every codeword of an `A × S` polar codebook.
pub fn exhaustive_training(oracle: &mut MeasurementOracle, codebook: &FlatPolarCodebook) -> TrainingResult {
    let start = oracle.pilots();
    let (_, chosen) = best_of(oracle, (0..codebook.len()).map(|i| codebook.codeword(i)));
    finish(oracle, start, chosen)
}

/// `A` full-array steering beams, then `S` focusing beams at the winning angle.
pub fn two_phase_training(oracle: &mut MeasurementOracle, codebook: &FlatPolarCodebook) -> TrainingResult {
    let start = oracle.pilots();
    let (a, _) = best_of(oracle, (0..codebook.angles()).map(|a| codebook.angular(a)));
    let (_, chosen) = best_of(oracle, (0..codebook.rings()).map(|s| codebook.polar(a, s)));
    finish(oracle, start, chosen)
}

/// Top-down search: all of layer 1, then the children of each winner.
pub fn hierarchical_training(oracle: &mut MeasurementOracle, codebook: &HierarchicalCodebook) -> TrainingResult {
    let start = oracle.pilots();
    let mut best = argmax(oracle, codebook, 1, 0..codebook.layer_size(1));
    for layer in 2..=codebook.n_layers() {
        best = argmax(oracle, codebook, layer, codebook.children(layer - 1, best));
    }
    let chosen = codebook.codeword(codebook.n_layers(), best);
    finish(oracle, start, chosen)
}

fn argmax(
    oracle: &mut MeasurementOracle,
    codebook: &HierarchicalCodebook,
    layer: usize,
    indices: impl IntoIterator<Item = usize>,
) -> usize {
    let mut best: Option<(f64, usize)> = None;
    for i in indices {
        let p = oracle.measure(&codebook.codeword(layer, i));
        if best.is_none_or(|(bp, _)| p > bp) {
            best = Some((p, i));
        }
    }
    best.expect("non-empty layer").1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Exhaustive,
    TwoPhase,
    Hierarchical,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Exhaustive => "exhaustive",
            Protocol::TwoPhase => "two_phase",
            Protocol::Hierarchical => "hierarchical",
        }
    }
}

/// A Monte-Carlo training setup on a line array. Exhaustive and two-phase
/// search use the final hierarchical layer's grid: `A = 2^(L1+L2)` angles
/// and `S = D_b^L2` rings.
#[derive(Debug, Clone)]
pub struct TrainingScenario {
    pub ris: RisGeometry,
    pub lambda: f64,
    pub bs: Vec3,
    pub l1: usize,
    pub l2: usize,
    pub distance_branches: usize,
    pub domain: PolarDomain,
    pub noise_variance: f64,
    /// Users at final-layer cell centres instead of uniform in angle and `1/d`.
    pub on_grid: bool,
    pub model: PathLossModel,
}

impl TrainingScenario {
    pub fn hierarchical(&self) -> Result<HierarchicalCodebook> {
        build_hierarchical(
            &self.ris,
            self.lambda,
            self.l1,
            self.l2,
            self.distance_branches,
            Some(self.domain),
        )
    }

    pub fn flat(&self) -> Result<FlatPolarCodebook> {
        let lt = self.l1 + self.l2;
        FlatPolarCodebook::new(
            self.ris.clone(),
            self.lambda,
            self.domain,
            1usize << lt,
            self.distance_branches.pow(self.l2 as u32),
        )
    }

    fn draw_user(&self, rng: &mut ChaCha8Rng) -> Vec3 {
        if self.on_grid {
            let lt = self.l1 + self.l2;
            let (angles, rings) = (1usize << lt, self.distance_branches.pow(self.l2 as u32));
            let a = rng.random_range(0..angles);
            let s = rng.random_range(0..rings);
            let (theta, d) = self.domain.cell_center(angles, rings, a, s);
            self.ris.point_at(theta, d)
        } else {
            let theta = (rng.random::<f64>() - 0.5) * std::f64::consts::PI;
            let d = self.domain.distance_at(rng.random::<f64>());
            self.ris.point_at(theta, d)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub protocol: Protocol,
    pub trial: usize,
    pub pilots: usize,
    pub achieved_gain: f64,
    pub truth_gain: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSummary {
    pub protocol: Protocol,
    pub mean_pilots: f64,
    pub mean_ratio: f64,
    pub miss_rate: f64,
}

/// Runs `trials` seeded trials. Trial `t` draws its user and noise seeds
/// from stream `t` of a generator seeded with `seed`.
pub fn evaluate_protocols(
    scenario: &TrainingScenario,
    trials: usize,
    protocols: &[Protocol],
    seed: u64,
) -> Result<(Vec<TrialRecord>, Vec<ProtocolSummary>)> {
    ensure!(trials >= 1, Config, "need at least one trial");
    ensure!(!protocols.is_empty(), Config, "no protocols selected");
    ensure!(
        scenario.l1 + scenario.l2 == total_layers(scenario.ris.len()),
        Config,
        "L1 + L2 must equal ⌈log₂ N⌉ = {}",
        total_layers(scenario.ris.len())
    );
    let hier = scenario.hierarchical()?;
    let flat = scenario.flat()?;

    let per_trial: Vec<Vec<TrialRecord>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let user = scenario.draw_user(&mut rng);
            protocols
                .iter()
                .map(|&p| {
                    let mut oracle = MeasurementOracle::from_scene(
                        scenario.bs,
                        &scenario.ris,
                        user,
                        scenario.lambda,
                        scenario.model,
                        scenario.noise_variance,
                        rng.random(),
                    )?;
                    let r = match p {
                        Protocol::Exhaustive => exhaustive_training(&mut oracle, &flat),
                        Protocol::TwoPhase => two_phase_training(&mut oracle, &flat),
                        Protocol::Hierarchical => hierarchical_training(&mut oracle, &hier),
                    };
                    Ok(TrialRecord {
                        protocol: p,
                        trial: t,
                        pilots: r.pilot_count,
                        achieved_gain: r.achieved_gain,
                        truth_gain: r.truth_gain,
                        hit: r.hit,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let summaries = protocols
        .iter()
        .map(|&p| {
            let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.protocol == p).collect();
            let n = rs.len() as f64;
            ProtocolSummary {
                protocol: p,
                mean_pilots: rs.iter().map(|r| r.pilots as f64).sum::<f64>() / n,
                mean_ratio: rs.iter().map(|r| r.achieved_gain / r.truth_gain).sum::<f64>() / n,
                miss_rate: rs.iter().filter(|r| !r.hit).count() as f64 / n,
            }
        })
        .collect();
    Ok((records, summaries))
}

/// Hierarchical summary for every split `L1 + L2 = ⌈log₂ N⌉`.
pub fn sweep_splits(
    scenario: &TrainingScenario,
    trials: usize,
    seed: u64,
) -> Result<Vec<(usize, usize, ProtocolSummary)>> {
    let lt = total_layers(scenario.ris.len());
    (0..=lt)
        .map(|l1| {
            let s = TrainingScenario {
                l1,
                l2: lt - l1,
                ..scenario.clone()
            };
            let (_, summary) = evaluate_protocols(&s, trials, &[Protocol::Hierarchical], seed)?;
            Ok((l1, lt - l1, summary[0].clone()))
        })
        .collect()
}
