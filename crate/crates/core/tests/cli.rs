use std::path::Path;
use std::process::{Command, Output};

fn nfris(dir: &Path, args: &[&str], config: &str, env: &[(&str, &str)]) -> Output {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nfris"));
    cmd.args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"));
    cmd.env_remove("NFRIS_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

#[test]
fn region_at_28_ghz() {
    let dir = tempfile::tempdir().unwrap();
    let o = nfris(
        dir.path(),
        &["region"],
        "[geometry]\nfrequency = 28e9\naperture = 1.0\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("rayleigh_distance_m="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((r - 186.7).abs() <= 1.0);
}

#[test]
fn missing_lambda_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = nfris(dir.path(), &["region"], "[geometry]\nrows = 4\ncols = 4\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("geometry.lambda"), "{}", stderr(&o));
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = nfris(
        dir.path(),
        &["region"],
        "[geometry]\nlambda = 0.01\naperture = 1.0\n[experiment]\nsize = [4]\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("size"), "{}", stderr(&o));
}

#[test]
fn bad_thread_cap_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = nfris(
        dir.path(),
        &["region"],
        "[geometry]\nlambda = 0.01\naperture = 1.0\n",
        &[("NFRIS_THREADS", "zero")],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NFRIS_THREADS"));
}

#[test]
fn stochastic_run_needs_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[geometry]\nlambda = 0.01\nrows = 1\ncols = 16\n[placement]\ntx = [-2.0, 0.0, 10.0]\n[experiment]\nl1 = 2\nl2 = 2\ntrials = 5\n";
    let o = nfris(dir.path(), &["train"], cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment.seed"));
    let o = nfris(dir.path(), &["train", "--seed", "5"], cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = read(dir.path(), "summary.csv");
    assert_eq!(summary.lines().count(), 2 + 3);
}

#[test]
fn runtime_error_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // L1 + L2 does not match the array size
    let cfg = "[geometry]\nlambda = 0.01\nrows = 1\ncols = 16\n[placement]\ntx = [-2.0, 0.0, 10.0]\n[experiment]\nl1 = 1\nl2 = 1\ntrials = 5\nseed = 1\n";
    let o = nfris(dir.path(), &["train"], cfg, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn manifest_line_format() {
    let dir = tempfile::tempdir().unwrap();
    let o = nfris(
        dir.path(),
        &["edof", "--seed", "17"],
        "[geometry]\nlambda = 0.01\nrows = 8\ncols = 8\n[experiment]\ndistances = [0.05, 5.0]\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(dir.path(), "edof.csv");
    let first = csv.lines().next().unwrap();
    let rest = first
        .strip_prefix(&format!("# nfris {} config_sha256=", env!("CARGO_PKG_VERSION")))
        .unwrap();
    let (hash, seed) = rest.split_once(' ').unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(seed, "seed=17");
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains(",near,") && rows[1].contains(",far,"));
    let leftovers = std::fs::read_dir(dir.path().join("out")).unwrap().count();
    assert_eq!(leftovers, 1);
}

#[test]
fn metasurface_modes() {
    let dir = tempfile::tempdir().unwrap();
    let o = nfris(
        dir.path(),
        &["edof"],
        "[geometry]\nlambda = 0.01\n[experiment]\nmode = \"metasurface\"\nrx_side = 0.1\napertures = [0.0036, 0.0144]\ndistances = [0.4, 0.8]\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read(dir.path(), "edof_scaling.csv").lines().count(), 2 + 4);

    let o = nfris(
        dir.path(),
        &["power-scaling"],
        "[geometry]\nlambda = 0.01\n[placement]\ntx = [0.0, 0.0, 20.0]\nrx = [0.0, 0.0, 0.5]\n[experiment]\nsurface = \"metasurface\"\nsizes = [4, 16, 64]\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read(dir.path(), "power_scaling.csv").lines().count(), 2 + 3);
}

#[test]
fn beamform_modes() {
    let dir = tempfile::tempdir().unwrap();
    let base =
        "[geometry]\nlambda = 0.01\nrows = 6\ncols = 6\n[placement]\ntx = [-2.5, 0.0, 4.33]\nrx = [0.03, 0.0, 0.1]\n";
    let o = nfris(
        dir.path(),
        &["beamform"],
        &format!("{base}[experiment]\nmode = \"power\"\n"),
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = read(dir.path(), "trace.csv");
    assert_eq!(trace.lines().nth(1), Some("sweep,element,objective"));
    assert_eq!(read(dir.path(), "profile.csv").lines().count(), 2 + 36);

    let users = "users = [[0.034, 0.0, 0.094], [0.103, 0.0, 0.282]]\n";
    let cfg = format!("{base}{users}[experiment]\nmode = \"sumrate\"\nnoise = 1e-11\nstar = true\nq = 8\n");
    let o = nfris(dir.path(), &["beamform"], &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        read(dir.path(), "profile.csv").lines().nth(1),
        Some("element,t_re,t_im,r_re,r_im")
    );

    let cfg = format!("{base}{users}[experiment]\nmode = \"near_far\"\nnoise = 1e-11\nsizes = [16, 36]\nq = 8\n");
    let o = nfris(dir.path(), &["beamform"], &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read(dir.path(), "near_far.csv").lines().count(), 2 + 2);
}

#[test]
fn split_sweep_without_fixed_layers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[geometry]\nlambda = 0.01\nrows = 1\ncols = 16\n[placement]\ntx = [-2.0, 0.0, 10.0]\n[experiment]\ntrials = 4\nseed = 3\n";
    let o = nfris(dir.path(), &["train"], cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(read(dir.path(), "splits.csv").lines().count() >= 3);
}
