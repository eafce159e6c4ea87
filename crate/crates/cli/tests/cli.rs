use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use exciton2des::config::RunConfig;
use exciton2des::gridio::{GridData, GridFile};
use serde_json::Value;

const SMALL_GRID: &str = "[grid]\nw_min = 12200.0\nw_max = 12800.0\nw_points = 31\nw2_min = -450.0\nw2_max = 450.0\nw2_points = 31\nabs_points = 201\nt2_points = 21\n";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_exciton2des"));
    c.env_remove("EXCITON2DES_THREADS");
    c
}

fn run(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    bin().arg("--config").arg(&cfg).arg("--out").arg(&out).args(extra).output().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn empty_config_runs_absorption_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(dir.path());
    assert_eq!(m["experiment"], "absorption");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    let g = GridFile::read(&dir.path().join("out/absorption.grid")).unwrap();
    assert_eq!(g.axes[0].unit, "cm-1");
    let GridData::Real(v) = &g.data else { panic!("absorption must be real") };
    let max = v.iter().copied().fold(f64::MIN, f64::max);
    assert!((max - 1.0).abs() < 1e-12, "normalized absorption max {max}");
}

#[test]
fn manifest_records_every_resolved_default() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "[bath]\nxi = 3.0\n", &["--seed", "7", "--secular"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(dir.path());
    let resolved: RunConfig = serde_json::from_value(m["config"].clone()).unwrap();
    let mut expected = RunConfig::default();
    expected.bath.xi = 3.0;
    expected.disorder.seed = 7;
    expected.run.secular = true;
    expected.run.out = dir.path().join("out").to_string_lossy().into_owned();
    assert_eq!(resolved, expected);
    // Every key of every section is present, not only the overridden ones.
    let full = serde_json::to_value(RunConfig::default()).unwrap();
    for (section, fields) in full.as_object().unwrap() {
        for key in fields.as_object().unwrap().keys() {
            assert!(m["config"][section].get(key).is_some(), "manifest lacks {section}.{key}");
        }
    }
}

#[test]
fn pathway_report_lists_heterodimer_beat_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nomega1 = 12600.0\nomega2 = 12400.0\n[bath]\nomega_s = 282.842712\n[run]\nexperiment = \"pathway-report\"\n";
    let o = run(dir.path(), cfg, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("out/modes.tsv")).unwrap();
    let row = table
        .lines()
        .find(|l| l.starts_with("upsilon\t1\t"))
        .unwrap_or_else(|| panic!("no upsilon 1 row in\n{table}"));
    let cols: Vec<&str> = row.split('\t').collect();
    let (re, im): (f64, f64) = (cols[2].parse().unwrap(), cols[3].parse().unwrap());
    assert!((re + 41.0).abs() < 2.0 && (im - 280.0).abs() < 2.0, "upsilon_1 = {re}+{im}i");
    assert!(dir.path().join("out/pathways.tsv").exists());
    assert!(dir.path().join("out/pathway_report.txt").exists());
}

#[test]
fn unknown_key_is_a_config_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "[bath]\nlambda = 50.0\nlamda = 3.0\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("lamda") && e.contains("line 3"), "{e}");
}

#[test]
fn invalid_values_are_config_errors() {
    for (cfg, field) in [
        ("[disorder]\nfwhm = -5.0\n", "disorder.fwhm"),
        ("[bath]\nxi = 0.0\n", "bath.xi"),
        ("[grid]\ncarrier = 0.0\n", "grid.t_step"),
        ("[run]\nexperiment = \"figure:3\"\n", "run.experiment"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let o = run(dir.path(), cfg, &[]);
        assert_eq!(o.status.code(), Some(2), "{cfg}");
        assert!(stderr(&o).contains(field), "{cfg}: {}", stderr(&o));
        assert!(!dir.path().join("out/manifest.json").exists());
    }
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().arg("--config").arg(dir.path().join("nope.toml")).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn disordered_beatmap_is_deterministic_for_a_seed() {
    let cfg = format!("{SMALL_GRID}[disorder]\nfwhm = 30.0\nsamples = 16\n[run]\nexperiment = \"beatmap\"\n");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(d.path(), &cfg, &["--seed", "11"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let files: Vec<String> = manifest(a.path())["outputs"].as_array().unwrap().iter().map(|r| r["file"].as_str().unwrap().to_string()).collect();
    assert!(files.iter().any(|f| f == "beatmap_R.grid"));
    for f in &files {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        let y = fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
    }
    // A different seed draws a different ensemble.
    let c = tempfile::tempdir().unwrap();
    assert!(run(c.path(), &cfg, &["--seed", "12"]).status.success());
    assert_ne!(fs::read(a.path().join("out/beatmap_R.grid")).unwrap(), fs::read(c.path().join("out/beatmap_R.grid")).unwrap());
}

#[test]
fn beatmap_cube_has_documented_axes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &format!("{SMALL_GRID}[run]\nexperiment = \"beatmap\"\n"), &["--csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let g = GridFile::read(&dir.path().join("out/beatmap_R.grid")).unwrap();
    let names: Vec<&str> = g.axes.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names, ["omega2", "omega1", "omega3"]);
    assert_eq!(g.shape(), vec![31, 31, 31]);
    assert_eq!(g.attr("display_exponent"), Some("0.1"));
    assert!(dir.path().join("out/beatmap_R.csv").exists());
    assert!(dir.path().join("out/beatmap_N_traces.tsv").exists());
}

#[test]
fn figure2_writes_three_correlation_panels() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), SMALL_GRID, &["--experiment", "figure:2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for tag in ["xi1e-3d", "xi3d", "xi1e3d"] {
        for part in ["absorption", "rephasing2d", "r21_transient"] {
            let p = dir.path().join(format!("out/fig2_{tag}_{part}.grid"));
            GridFile::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
    }
    assert_eq!(manifest(dir.path())["panels"].as_array().unwrap().len(), 6);
}

#[test]
fn discrete_route_matches_exact_route_at_the_peaks() {
    let base = "[grid]\nw_min = 12350.0\nw_max = 12650.0\nw_points = 7\nt_step = 2.0\nt_points = 2048\n";
    let spectra = |route: &str| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = format!("{base}route = \"{route}\"\n[run]\nexperiment = \"rephasing2d\"\nnormalize = false\n");
        let o = run(dir.path(), &cfg, &[]);
        assert!(o.status.success(), "{}", stderr(&o));
        match GridFile::read(&dir.path().join("out/rephasing2d.grid")).unwrap().data {
            GridData::Complex(v) => v,
            _ => panic!("2D spectra are complex"),
        }
    };
    let (exact, discrete) = (spectra("exact"), spectra("discrete"));
    let scale = exact.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let err = exact.iter().zip(&discrete).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 0.02 * scale, "max deviation {err} vs scale {scale}");
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "").unwrap();
    let o = bin().env("EXCITON2DES_THREADS", "2").arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("out")).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(dir.path());
    assert_eq!(m["threads"], 2);
    assert_eq!(m["config"]["run"]["threads"], 2);
}

#[test]
fn figure7_widths_show_rephasing_elongation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[grid]\nw_points = 5\nw2_points = 5\n";
    let o = run(dir.path(), cfg, &["--experiment", "figure:7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(dir.path());
    for panel in m["panels"].as_array().unwrap() {
        assert_eq!(panel["disorder"]["scheme"], "split");
    }
    let ratio = |signal: &str, peak: &str| -> f64 {
        let table = fs::read_to_string(dir.path().join(format!("out/fig7_xi1e3d_fwhm100_widths_{signal}.tsv"))).unwrap();
        let row = table.lines().find(|l| l.starts_with(peak)).unwrap_or_else(|| panic!("no {peak} row in\n{table}"));
        row.split('\t').nth(5).unwrap().parse().unwrap()
    };
    let (r, n) = (ratio("R", "R21"), ratio("N", "N22"));
    assert!(r > 1.5 && n < r, "R21 {r}, N22 {n}");
}
