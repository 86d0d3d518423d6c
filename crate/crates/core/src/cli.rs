//! Command-line experiment runner. Every experiment writes CSV files whose
//! first line is a `#` manifest with the crate version, the SHA-256 of the
//! configuration text and the seed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    effective_dof, metasurface_edof_scaling, overall_slope, power_scaling_sweep, top_decade_slope, EdofMethod,
    EdofScalingConfig, PowerScalingConfig, RisKind,
};
use crate::beamforming::{
    elementwise_power, elementwise_sumrate, near_vs_far_rate_experiment, NearFarConfig, RateObjective, SumRateOptions,
    SweepTrace,
};
use crate::channel::{cascaded_links, los_mimo, RisProfile};
use crate::codebook::PolarDomain;
use crate::config::{
    choice, load_config, nonnegative_or, positive_list, positive_or, required_positive, ConfigError, ExperimentConfig,
    LoadedConfig,
};
use crate::geometry::{classify_region, rayleigh_distance, RisGeometry, Vec3};
use crate::training::{evaluate_protocols, sweep_splits, Protocol, TrainingScenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "NFRIS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nfris", version, about = "Near-field RIS simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Received power versus surface size (patch array or metasurface).
    PowerScaling(RunArgs),
    /// Effective degrees of freedom of a surface-to-receiver link.
    Edof(RunArgs),
    /// Monte-Carlo beam training with exhaustive, two-phase and hierarchical search.
    Train(RunArgs),
    /// Element-wise beamforming and the near/far-field design comparison.
    Beamform(RunArgs),
    /// Rayleigh distance and near/far-field classification.
    Region(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("I/O error: {e}"))
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Parses `args` (program name first), runs the experiment and returns the
/// process exit code. Progress goes to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(m)) => {
            let _ = writeln!(stderr, "error: config: {m}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_RUNTIME
        }
    }
}

fn configure_threads() -> Outcome<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("{THREADS_ENV} must be a positive integer, got \"{v}\"")))?;
    // A pool that already exists (repeated in-process runs) is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

struct Run {
    config: ExperimentConfig,
    sha256: String,
    seed: Option<u64>,
    out: PathBuf,
}

impl Run {
    fn new(args: &RunArgs, subcommand: &str) -> Outcome<Self> {
        let LoadedConfig { config, sha256 } = load_config(&args.config)?;
        config.check_kind(subcommand)?;
        let out = args
            .out
            .clone()
            .or_else(|| config.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self {
            seed: config.seed(args.seed),
            config,
            sha256,
            out,
        })
    }

    fn manifest(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# nfris {} config_sha256={} seed={seed}",
            env!("CARGO_PKG_VERSION"),
            self.sha256
        )
    }

    fn write_csv(&self, name: &str, header: &str, body: &str, stdout: &mut dyn std::io::Write) -> Outcome<()> {
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        let text = format!("{}\n{header}\n{body}", self.manifest());
        write_atomic(&path, text.as_bytes())?;
        writeln!(stdout, "wrote {}", path.display())?;
        Ok(())
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

fn dispatch(command: Command, stdout: &mut dyn std::io::Write) -> Outcome<()> {
    configure_threads()?;
    match command {
        Command::PowerScaling(a) => power_scaling(&Run::new(&a, "power-scaling")?, stdout),
        Command::Edof(a) => edof(&Run::new(&a, "edof")?, stdout),
        Command::Train(a) => train(&Run::new(&a, "train")?, stdout),
        Command::Beamform(a) => beamform(&Run::new(&a, "beamform")?, stdout),
        Command::Region(a) => region(&Run::new(&a, "region")?, stdout),
    }
}

fn surface(c: &ExperimentConfig) -> Outcome<RisGeometry> {
    Ok(RisGeometry::planar(
        c.rows()?,
        c.cols()?,
        c.spacing()?,
        Vec3::ZERO,
        Vec3::Z,
    )?)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| x.to_string())
}

fn region(run: &Run, stdout: &mut dyn std::io::Write) -> Outcome<()> {
    let c = &run.config;
    let lambda = c.lambda()?;
    let (ris, aperture) = match c.geometry.aperture {
        Some(d) => (None, required_positive("geometry.aperture", Some(d))?),
        None => {
            let g = surface(c)?;
            let d = g.aperture();
            (Some(g), d)
        }
    };
    let r = rayleigh_distance(aperture, lambda)?;
    writeln!(stdout, "aperture_m={aperture}")?;
    writeln!(stdout, "lambda_m={lambda}")?;
    writeln!(stdout, "rayleigh_distance_m={r:.3}")?;
    let mut body = String::new();
    for p in c.points() {
        let label = match &ris {
            Some(g) => classify_region(g, p, lambda)?.as_str(),
            None if p.norm() < r => "near",
            None => "far",
        };
        writeln!(body, "{},{},{},{},{label}", p.x, p.y, p.z, p.norm()).expect("string write");
    }
    run.write_csv("region.csv", "x,y,z,distance,region", &body, stdout)
}

fn power_scaling(run: &Run, stdout: &mut dyn std::io::Write) -> Outcome<()> {
    let c = &run.config;
    let kind = match choice(
        "experiment.surface",
        &c.experiment.surface,
        &["patch", "metasurface"],
        "patch",
    )? {
        "patch" => RisKind::Patch,
        _ => RisKind::Metasurface,
    };
    let cfg = PowerScalingConfig {
        lambda: c.lambda()?,
        spacing: c.spacing()?,
        tx: c.tx()?,
        rx: c.rx()?,
    };
    let sizes = c.sizes()?;
    let points = power_scaling_sweep(&cfg, &sizes, kind)?;
    let mut body = String::new();
    for (n, p) in sizes.iter().zip(&points) {
        writeln!(
            body,
            "{n},{},{},{},{}",
            p.size_metric,
            p.pr_over_pt,
            p.regime.as_str(),
            p.outside_validity
        )
        .expect("string write");
    }
    writeln!(stdout, "overall_slope={}", opt(overall_slope(&points)))?;
    writeln!(stdout, "top_decade_slope={}", opt(top_decade_slope(&points)))?;
    run.write_csv(
        "power_scaling.csv",
        "n_elements,size_metric,pr_over_pt,regime,outside_validity",
        &body,
        stdout,
    )
}

fn edof(run: &Run, stdout: &mut dyn std::io::Write) -> Outcome<()> {
    let c = &run.config;
    let e = &c.experiment;
    let lambda = c.lambda()?;
    match choice("experiment.mode", &e.mode, &["los", "metasurface"], "los")? {
        "los" => {
            let ris = surface(c)?;
            let r = ris.rayleigh_distance(lambda)?;
            let distances: Vec<f64> = match (&e.distances, &e.rayleigh_multiples) {
                (Some(_), Some(_)) => {
                    return Err(Failure::Config(
                        "give only one of `experiment.distances` and `experiment.rayleigh_multiples`".into(),
                    ))
                }
                (Some(_), None) => positive_list("experiment.distances", &e.distances)?,
                (None, Some(_)) => positive_list("experiment.rayleigh_multiples", &e.rayleigh_multiples)?
                    .into_iter()
                    .map(|m| m * r)
                    .collect(),
                (None, None) => return Err(ConfigError("missing required key `experiment.distances`".into()).into()),
            };
            let antennas = e.rx_antennas.unwrap_or(4);
            if antennas == 0 {
                return Err(Failure::Config(
                    "invalid value for `experiment.rx_antennas`: must be positive".into(),
                ));
            }
            let rx_spacing = positive_or("experiment.rx_spacing", e.rx_spacing, lambda / 2.0)?;
            let threshold = positive_or("experiment.threshold", e.threshold, crate::analysis::DEFAULT_THRESHOLD)?;
            let mut body = String::new();
            for d in distances {
                let rx = RisGeometry::line(antennas, rx_spacing, ris.center() + ris.normal() * d, -ris.normal())?;
                let h = los_mimo(&ris, &rx, lambda, c.path_loss()?)?;
                let report = effective_dof(&h, EdofMethod::ThresholdCount(threshold))?;
                let region = classify_region(&ris, rx.center(), lambda)?;
                writeln!(
                    body,
                    "{d},{},{},{},{}",
                    d / r,
                    region.as_str(),
                    report.effective_rank,
                    report.threshold_count
                )
                .expect("string write");
            }
            writeln!(stdout, "rayleigh_distance_m={r}")?;
            run.write_csv(
                "edof.csv",
                "distance,rayleigh_multiple,region,effective_rank,threshold_count",
                &body,
                stdout,
            )
        }
        _ => {
            let rx_side = required_positive("experiment.rx_side", e.rx_side)?;
            let mut cfg = EdofScalingConfig::new(lambda, rx_side);
            cfg.surface_spacing = positive_or("experiment.surface_spacing", e.surface_spacing, cfg.surface_spacing)?;
            cfg.rx_spacing = positive_or("experiment.rx_spacing", e.rx_spacing, cfg.rx_spacing)?;
            cfg.threshold = positive_or("experiment.threshold", e.threshold, cfg.threshold)?;
            let apertures = positive_list("experiment.apertures", &e.apertures)?;
            let distances = positive_list("experiment.distances", &e.distances)?;
            let s = metasurface_edof_scaling(&cfg, &apertures, &distances)?;
            let mut body = String::new();
            let r0 = distances[0];
            let s_max = apertures.iter().copied().fold(f64::MIN, f64::max);
            for (a, n) in &s.by_aperture {
                writeln!(body, "aperture,{a},{r0},{n}").expect("string write");
            }
            for (r, n) in &s.by_distance {
                writeln!(body, "distance,{s_max},{r},{n}").expect("string write");
            }
            writeln!(stdout, "aperture_exponent={}", opt(s.aperture_exponent))?;
            writeln!(stdout, "distance_exponent={}", opt(s.distance_exponent))?;
            run.write_csv("edof_scaling.csv", "sweep,aperture,distance,count", &body, stdout)
        }
    }
}

fn protocols(c: &ExperimentConfig) -> Outcome<Vec<Protocol>> {
    let Some(names) = &c.experiment.protocols else {
        return Ok(vec![Protocol::Exhaustive, Protocol::TwoPhase, Protocol::Hierarchical]);
    };
    if names.is_empty() {
        return Err(Failure::Config(
            "invalid value for `experiment.protocols`: list is empty".into(),
        ));
    }
    names
        .iter()
        .map(|n| match n.as_str() {
            "exhaustive" => Ok(Protocol::Exhaustive),
            "two_phase" => Ok(Protocol::TwoPhase),
            "hierarchical" => Ok(Protocol::Hierarchical),
            other => Err(Failure::Config(format!(
                "invalid value for `experiment.protocols`: unknown protocol \"{other}\""
            ))),
        })
        .collect()
}

fn train(run: &Run, stdout: &mut dyn std::io::Write) -> Outcome<()> {
    let c = &run.config;
    let e = &c.experiment;
    let seed = c.require_seed(run.seed)?;
    let lambda = c.lambda()?;
    if c.geometry.rows.is_some_and(|r| r != 1) {
        return Err(Failure::Config(
            "invalid value for `geometry.rows`: training uses a line array (rows = 1)".into(),
        ));
    }
    let n = c.cols()?;
    let ris = RisGeometry::line(n, c.spacing()?, Vec3::ZERO, Vec3::Z)?;
    let domain = match e.domain {
        Some([lo, hi]) => PolarDomain::new(lo, hi)
            .map_err(|err| Failure::Config(format!("invalid value for `experiment.domain`: {err}")))?,
        None => PolarDomain::for_array(&ris, lambda)?,
    };
    let trials = e
        .trials
        .ok_or_else(|| ConfigError("missing required key `experiment.trials`".into()))?;
    let distance_branches = e.distance_branches.unwrap_or(4);
    let protocols = protocols(c)?;
    let mut scenario = TrainingScenario {
        ris,
        lambda,
        bs: c.tx()?,
        l1: 0,
        l2: 0,
        distance_branches,
        domain,
        noise_variance: nonnegative_or("experiment.noise_variance", e.noise_variance, 0.0)?,
        on_grid: e.on_grid.unwrap_or(true),
        model: c.path_loss()?,
    };

    let summary_header = "l1,l2,protocol,mean_pilots,mean_ratio,miss_rate";
    match (e.l1, e.l2) {
        (Some(l1), Some(l2)) => {
            scenario.l1 = l1;
            scenario.l2 = l2;
            let codebook = scenario.hierarchical()?;
            let mut cb = String::new();
            for (layer, index, region, active) in codebook.rows() {
                writeln!(
                    cb,
                    "{layer},{index},{},{},{},{},{active}",
                    region.theta_lo, region.theta_hi, region.d_lo, region.d_hi
                )
                .expect("string write");
            }
            let (records, summaries) = evaluate_protocols(&scenario, trials, &protocols, seed)?;
            let mut tr = String::new();
            for r in &records {
                writeln!(
                    tr,
                    "{},{},{},{},{},{}",
                    r.protocol.as_str(),
                    r.trial,
                    r.pilots,
                    r.achieved_gain,
                    r.truth_gain,
                    r.hit
                )
                .expect("string write");
            }
            let mut sm = String::new();
            for s in &summaries {
                writeln!(
                    sm,
                    "{l1},{l2},{},{},{},{}",
                    s.protocol.as_str(),
                    s.mean_pilots,
                    s.mean_ratio,
                    s.miss_rate
                )
                .expect("string write");
                writeln!(
                    stdout,
                    "{}: pilots={} mean_ratio={:.4} miss_rate={:.4}",
                    s.protocol.as_str(),
                    s.mean_pilots,
                    s.mean_ratio,
                    s.miss_rate
                )?;
            }
            run.write_csv(
                "codebook.csv",
                "layer,index,theta_lo,theta_hi,d_lo,d_hi,active_elements",
                &cb,
                stdout,
            )?;
            run.write_csv(
                "trials.csv",
                "protocol,trial,pilots,achieved_gain,truth_gain,hit",
                &tr,
                stdout,
            )?;
            run.write_csv("summary.csv", summary_header, &sm, stdout)
        }
        (None, None) => {
            let rows = sweep_splits(&scenario, trials, seed)?;
            let mut sm = String::new();
            for (l1, l2, s) in &rows {
                writeln!(
                    sm,
                    "{l1},{l2},{},{},{},{}",
                    s.protocol.as_str(),
                    s.mean_pilots,
                    s.mean_ratio,
                    s.miss_rate
                )
                .expect("string write");
            }
            run.write_csv("splits.csv", summary_header, &sm, stdout)
        }
        (Some(_), None) => Err(ConfigError("missing required key `experiment.l2`".into()).into()),
        (None, Some(_)) => Err(ConfigError("missing required key `experiment.l1`".into()).into()),
    }
}

fn sumrate_options(c: &ExperimentConfig) -> Outcome<SumRateOptions> {
    let e = &c.experiment;
    let d = SumRateOptions::default();
    Ok(SumRateOptions {
        q: e.q.unwrap_or(d.q),
        star: e.star.unwrap_or(d.star),
        max_sweeps: e.max_sweeps.unwrap_or(d.max_sweeps),
        tol: nonnegative_or("experiment.tol", e.tol, d.tol)?,
    })
}

fn initial_profile(run: &Run, n: usize) -> Outcome<RisProfile> {
    let c = &run.config;
    match choice(
        "experiment.init",
        &c.experiment.init,
        &["identity", "random"],
        "identity",
    )? {
        "identity" => Ok(RisProfile::identity(n)),
        _ => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(c.require_seed(run.seed)?);
            let phases: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
            Ok(RisProfile::from_phases(&phases))
        }
    }
}

fn trace_csv(trace: &SweepTrace) -> String {
    let mut body = String::new();
    for (sweep, element, value) in trace.rows() {
        writeln!(body, "{sweep},{element},{value}").expect("string write");
    }
    body
}

fn profile_csv(profile: &RisProfile) -> (&'static str, String) {
    let mut body = String::new();
    match profile {
        RisProfile::ReflectOnly(v) => {
            for (m, c) in v.iter().enumerate() {
                writeln!(body, "{m},{},{}", c.re, c.im).expect("string write");
            }
            ("element,re,im", body)
        }
        RisProfile::Star(v) => {
            for (m, c) in v.iter().enumerate() {
                let (t, r) = (
                    c.coefficient(crate::channel::Side::Transmit),
                    c.coefficient(crate::channel::Side::Reflect),
                );
                writeln!(body, "{m},{},{},{},{}", t.re, t.im, r.re, r.im).expect("string write");
            }
            ("element,t_re,t_im,r_re,r_im", body)
        }
    }
}

fn beamform(run: &Run, stdout: &mut dyn std::io::Write) -> Outcome<()> {
    let c = &run.config;
    let e = &c.experiment;
    let lambda = c.lambda()?;
    let weights = |k: usize| -> Outcome<Vec<f64>> {
        match &e.weights {
            None => Ok(vec![1.0; k]),
            Some(w) if w.len() == k => Ok(positive_list("experiment.weights", &e.weights)?),
            Some(w) => Err(Failure::Config(format!(
                "invalid value for `experiment.weights`: {} weights for {k} users",
                w.len()
            ))),
        }
    };
    let noise = || required_positive("experiment.noise", e.noise);
    match choice("experiment.mode", &e.mode, &["power", "sumrate", "near_far"], "power")? {
        "power" => {
            let ris = surface(c)?;
            let tx = RisGeometry::point(c.tx()?)?;
            let rx = RisGeometry::point(c.rx()?)?;
            let links = cascaded_links(&tx, &ris, &rx, lambda, c.path_loss()?)?;
            let opts = sumrate_options(c)?;
            let (profile, trace) =
                elementwise_power(&links, &initial_profile(run, ris.len())?, opts.max_sweeps, opts.tol)?;
            writeln!(
                stdout,
                "sweeps={} converged={} objective={}",
                trace.sweeps,
                trace.converged,
                trace.final_value()
            )?;
            let (header, body) = profile_csv(&profile);
            run.write_csv("trace.csv", "sweep,element,objective", &trace_csv(&trace), stdout)?;
            run.write_csv("profile.csv", header, &body, stdout)
        }
        "sumrate" => {
            let ris = surface(c)?;
            let tx = RisGeometry::point(c.tx()?)?;
            let users = c.users()?;
            let model = c.path_loss()?;
            let links = users
                .iter()
                .map(|u| cascaded_links(&tx, &ris, &RisGeometry::point(*u)?, lambda, model))
                .collect::<crate::Result<Vec<_>>>()?;
            let objective = RateObjective::new(
                links,
                weights(users.len())?,
                noise()?,
                positive_or("experiment.tx_power", e.tx_power, 1.0)?,
            )?;
            let (profile, trace) =
                elementwise_sumrate(&objective, &initial_profile(run, ris.len())?, &sumrate_options(c)?)?;
            writeln!(
                stdout,
                "sweeps={} converged={} objective={}",
                trace.sweeps,
                trace.converged,
                trace.final_value()
            )?;
            let (header, body) = profile_csv(&profile);
            run.write_csv("trace.csv", "sweep,element,objective", &trace_csv(&trace), stdout)?;
            run.write_csv("profile.csv", header, &body, stdout)
        }
        _ => {
            let users = c.users()?;
            let config = NearFarConfig {
                lambda,
                spacing: c.spacing()?,
                bs: c.tx()?,
                weights: weights(users.len())?,
                users,
                noise: noise()?,
                tx_power: positive_or("experiment.tx_power", e.tx_power, 1.0)?,
                options: sumrate_options(c)?,
            };
            let rows = near_vs_far_rate_experiment(&config, &c.sizes()?)?;
            let mut body = String::new();
            for r in &rows {
                writeln!(
                    body,
                    "{},{},{},{},{}",
                    r.n_elements, r.near_designed, r.far_designed, r.gap, r.all_near
                )
                .expect("string write");
                writeln!(
                    stdout,
                    "N={} near={:.4} far={:.4} gap={:.4}",
                    r.n_elements, r.near_designed, r.far_designed, r.gap
                )?;
            }
            run.write_csv(
                "near_far.csv",
                "n_elements,near_designed,far_designed,gap,all_near",
                &body,
                stdout,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn region_reports_rayleigh_distance() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "[geometry]\nfrequency = 28e9\naperture = 1.0\n[placement]\npoints = [[0.0, 0.0, 10.0], [0.0, 0.0, 500.0]]\n").unwrap();
        let (code, out, err) = run_capture(&[
            "nfris",
            "region",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        let r: f64 = out
            .lines()
            .find_map(|l| l.strip_prefix("rayleigh_distance_m="))
            .unwrap()
            .parse()
            .unwrap();
        assert!((r - 186.7).abs() <= 1.0, "{r}");
        let csv = std::fs::read_to_string(dir.path().join("region.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# nfris "));
        assert_eq!(lines[1], "x,y,z,distance,region");
        assert!(lines[2].ends_with(",near") && lines[3].ends_with(",far"));
    }

    #[test]
    fn missing_lambda_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "[geometry]\nrows = 2\ncols = 2\n").unwrap();
        let (code, _, err) = run_capture(&[
            "nfris",
            "region",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("geometry.lambda"), "{err}");
    }

    #[test]
    fn unknown_subcommand_and_missing_file() {
        assert_eq!(run_capture(&["nfris", "frobnicate"]).0, EXIT_CONFIG);
        assert_eq!(
            run_capture(&["nfris", "region", "--config", "/nonexistent/c.toml"]).0,
            EXIT_CONFIG
        );
        assert_eq!(run_capture(&["nfris", "--help"]).0, EXIT_OK);
    }

    #[test]
    fn runtime_failure_exit_code() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        // receiver inside the reactive zone of the surface
        std::fs::write(
            &cfg,
            "[geometry]\nlambda = 0.01\nrows = 3\ncols = 3\n[placement]\ntx = [0.0, 0.0, 1.0]\nrx = [0.0, 0.0, 0.0001]\n[experiment]\nmode = \"power\"\n",
        )
        .unwrap();
        let (code, _, err) = run_capture(&[
            "nfris",
            "beamform",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_RUNTIME, "{err}");
    }

    #[test]
    fn kind_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(
            &cfg,
            "[geometry]\nlambda = 0.01\naperture = 1.0\n[experiment]\nkind = \"train\"\n",
        )
        .unwrap();
        let (code, _, err) = run_capture(&[
            "nfris",
            "region",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("experiment.kind"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
