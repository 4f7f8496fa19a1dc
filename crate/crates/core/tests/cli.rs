use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use qlm::cli::{ExperimentConfig, Preset};
use qlm::configspace::load_sector;
use qlm::lattice::LatticeGeometry;

fn qlm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlm")).args(args).output().expect("binary runs")
}

fn short_fig3(dir: &Path, extra: &str) -> std::path::PathBuf {
    let p = dir.join("short.toml");
    fs::write(&p, format!("[evolution]\nn_steps = 4\n{extra}")).unwrap();
    p
}

fn files(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        let name = e.file_name().to_string_lossy().into_owned();
        if e.file_type().unwrap().is_dir() {
            out.extend(files(&e.path()).into_iter().map(|f| format!("{name}/{f}")));
        } else {
            out.push(name);
        }
    }
    out.sort();
    out
}

#[test]
fn dry_run_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let o = qlm(&["run", "--preset", "fig2", "--dry-run", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["qubit_count"], 51);
    assert_eq!(v["n_steps"], 20);
    assert_eq!(v["diagnostics"]["resonance"]["order"], 1);
}

#[test]
fn reruns_are_byte_identical_and_compare_to_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_fig3(tmp.path(), "");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = qlm(&["run", "--preset", "fig3", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let fa = files(&a);
    assert_eq!(fa, files(&b));
    for want in [
        "manifest.json",
        "sector.bin",
        "resources.json",
        "circuit.txt",
        "order_map.json",
        "timeseries.csv",
        "timeseries.json",
        "estimates.csv",
        "retention.csv",
        "shots/step_0004.csv",
        "snapshots/step_0000.json",
    ] {
        assert!(fa.iter().any(|f| f == want), "missing {want}");
    }
    for f in &fa {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let report = tmp.path().join("dev.csv");
    let o = qlm(&["compare", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let series = v["series"].as_array().unwrap();
    assert!(!series.is_empty());
    for s in series {
        assert_eq!(s["max_deviation"].as_f64().unwrap(), 0.0, "{}", s["observable"]);
    }
    assert!(fs::read_to_string(report).unwrap().lines().count() > 1);

    let sector = load_sector(a.join("sector.bin"), &LatticeGeometry::with_opposite_corners(4, 3).unwrap()).unwrap();
    assert_eq!(sector.len(), 1826);
}

#[test]
fn seed_changes_shots_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_fig3(tmp.path(), "");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (d, seed) in [(&a, "1"), (&b, "2")] {
        let o = qlm(&["run", "--preset", "fig3", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", d.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(a.join("timeseries.csv")).unwrap(), fs::read(b.join("timeseries.csv")).unwrap());
    assert_ne!(fs::read(a.join("estimates.csv")).unwrap(), fs::read(b.join("estimates.csv")).unwrap());
}

#[test]
fn mismatched_grids_fail_with_json_error() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c1 = short_fig3(tmp.path(), "[measurement]\nn_shots = 0\n");
    assert!(qlm(&["run", "--preset", "fig3", "--config", c1.to_str().unwrap(), "--out", a.to_str().unwrap()]).status.success());
    let c2 = tmp.path().join("fine.toml");
    fs::write(&c2, "[evolution]\nn_steps = 4\ndt = 0.05\n[measurement]\nn_shots = 0\n").unwrap();
    assert!(qlm(&["run", "--preset", "fig3", "--config", c2.to_str().unwrap(), "--out", b.to_str().unwrap()]).status.success());
    let o = qlm(&["compare", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(v["error"].is_string() && v["message"].is_string());
}

#[test]
fn invalid_inputs_exit_nonzero_with_json() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[evolution]\nsteps = 3\n").unwrap();
    for args in [
        vec!["run", "--preset", "fig3", "--config", bad.to_str().unwrap(), "--dry-run"],
        vec!["run", "--preset", "nope", "--dry-run"],
        vec!["run", "--dry-run"],
        vec!["run", "--preset", "fig3"],
    ] {
        let o = qlm(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
        assert!(v["error"].is_string(), "{args:?}");
    }
    let odd = tmp.path().join("odd.toml");
    fs::write(
        &odd,
        "[lattice]\nlx = 3\nly = 3\n[params]\nkappa = 1.0\nmass = 1.0\nefield = 1.0\nplaq = 0.0\n[evolution]\nengine = \"krylov\"\ndt = 0.1\nn_steps = 1\n",
    )
    .unwrap();
    let o = qlm(&["run", "--config", odd.to_str().unwrap(), "--dry-run"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "geometry");
}

#[test]
fn sector_and_compile_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s.bin");
    let o = qlm(&["sector", "--preset", "fig3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["sector_dim"], 1826);
    assert!(load_sector(&out, &LatticeGeometry::with_opposite_corners(4, 3).unwrap()).is_ok());
    assert!(load_sector(&out, &LatticeGeometry::with_opposite_corners(5, 4).unwrap()).is_err());

    let circ = tmp.path().join("c.txt");
    let o = qlm(&["compile", "--preset", "fig2", "--circuit", circ.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((v["n_qubits"].as_u64(), v["n2q"].as_u64(), v["depth2q"].as_u64()), (Some(51), Some(385), Some(28)));
    let gates = qlm::circuits::parse_gates(&fs::read_to_string(circ).unwrap()).unwrap();
    assert_eq!(gates.iter().filter(|g| g.is_two_qubit()).count(), 385);
}

#[test]
fn config_toml_round_trip() {
    for p in Preset::ALL {
        let c = p.config();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hash_tracks_semantic_fields(field in 0usize..12, bump in 1u64..1000) {
        let base = Preset::Fig2.config();
        let mut c = base.clone();
        let x = bump as f64 * 1e-3;
        match field {
            0 => c.lattice.lx += 1,
            1 => c.params.kappa += x,
            2 => c.params.mass += x,
            3 => c.params.efield += x,
            4 => c.params.plaq += x,
            5 => c.evolution.dt += x,
            6 => c.evolution.n_steps = Some(20 + bump as usize),
            7 => c.measurement.n_shots += bump as usize,
            8 => c.measurement.noise.p2q += x * 1e-3,
            9 => c.run.seed += bump,
            10 => c.evolution.krylov_tol *= 1.0 + x,
            _ => c.measurement.schemes.truncate(1),
        }
        prop_assert_ne!(c.hash(), base.hash());
        let mut same = base.clone();
        same.run.out = Some(format!("/tmp/out{bump}").into());
        prop_assert_eq!(same.hash(), base.hash());
    }
}
