use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab")).args(args).output().expect("spawn lab")
}

fn out_arg(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn ground_state_default_is_pohozaev_clean() {
    let tmp = tempfile::tempdir().unwrap();
    for masses in ["1,1,3", "1,1,1"] {
        let out = out_arg(tmp.path(), masses);
        let o = lab(&["ground-state", "--out", &out, "--masses", masses]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let gs = read_json(Path::new(&out).join("ground_state.json"));
        assert!(gs["pohozaev_defect"].as_f64().unwrap() < 1e-5);
        assert!(gs["gn_excess"].as_f64().unwrap().abs() < 1e-5);
        let f = read_json(Path::new(&out).join("functionals.json"));
        assert!(f["K"].as_f64().unwrap() > 0.0);
        let csv = fs::read_to_string(Path::new(&out).join("q_profile.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2049);

        let m = read_json(Path::new(&out).join("manifest.json"));
        assert_eq!(m["status"], "ok");
        assert_eq!(m["command"], "ground-state");
        assert_eq!(m["grids"][0]["r_sha256"].as_str().unwrap().len(), 64);
        let names: Vec<&str> = m["artifacts"].as_array().unwrap().iter().map(|a| a["path"].as_str().unwrap()).collect();
        assert_eq!(names, ["functionals.json", "ground_state.json", "q_profile.csv"]);
    }
}

#[test]
fn malformed_config_exits_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.toml", "[grid]\nn = \"many\"\n");
    let o = lab(&["ground-state", "--config", &bad, "--out", &out_arg(tmp.path(), "o")]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("bad.toml"), "{err}");

    let unknown = write_config(tmp.path(), "unknown.toml", "[grid]\nsize = 10\n");
    let o = lab(&["spectrum", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("size"));

    let o = lab(&["ground-state", "--masses", "1,2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectrum_reports_positive_eigenvalue_and_refuses_tiny_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&["spectrum", "--n", "32", "--out", &out_arg(tmp.path(), "tiny")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n >= 64"));

    let out = out_arg(tmp.path(), "s");
    let o = lab(&["spectrum", "--n", "512", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(Path::new(&out).join("spectrum.json"));
    let lambda = s["pair"]["lambda1"].as_f64().unwrap();
    assert!((lambda - 0.1186).abs() < 1e-3, "{lambda}");
    assert!(s["pair"]["residual_r"].as_f64().unwrap() < 1e-6);
    assert!(s["witness"]["value"].as_f64().unwrap() < 0.0);
    assert_eq!(s["convergence"]["n"].as_array().unwrap().len(), 3);
    assert!(Path::new(&out).join("e1.csv").exists() && Path::new(&out).join("eigenpair.svg").exists());
}

#[test]
fn identical_runs_give_identical_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "ev.toml",
        "seed = 11\n[evolve]\nperturbation = 0.01\n[evolve.run]\ndt = 0.01\nt_end = 0.5\ncheckpoints = [0.25]\n",
    );
    let dirs: Vec<String> = (0..2).map(|i| out_arg(tmp.path(), &format!("run{i}"))).collect();
    for d in &dirs {
        let o = lab(&["evolve", "--config", &cfg, "--n", "256", "--out", d]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let m: Vec<Value> = dirs.iter().map(|d| read_json(Path::new(d).join("manifest.json"))).collect();
    assert_eq!(m[0]["artifacts"], m[1]["artifacts"]);
    let names: Vec<String> = m[0]["artifacts"].as_array().unwrap().iter().map(|a| a["path"].as_str().unwrap().to_string()).collect();
    assert!(names.contains(&"snapshot_000.bin".to_string()) && names.contains(&"trace.csv".to_string()));
    for name in names.iter().filter(|n| !n.ends_with(".svg")) {
        let a = fs::read(Path::new(&dirs[0]).join(name)).unwrap();
        let b = fs::read(Path::new(&dirs[1]).join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
}

#[test]
fn virial_scan_rows_and_empty_lattice() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "v.toml",
        "[virial]\nlattice = [[1.0, 1.0, 1.0], [1.0, 1.0, 3.0], [2.0, 1.0, 3.0]]\n[virial.scan]\nn = 512\n",
    );
    let out = out_arg(tmp.path(), "v");
    let o = lab(&["virial-scan", "--config", &cfg, "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(Path::new(&out).join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(read_json(Path::new(&out).join("scan.json"))["selected"], "galilean");
    assert!(Path::new(&out).join("heatmap.svg").exists());

    let empty = write_config(tmp.path(), "e.toml", "[virial]\nlattice = []\n");
    let o = lab(&["virial-scan", "--config", &empty, "--out", &out_arg(tmp.path(), "e")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty mass lattice"));

    // stationary data: dV/dt stays at the discretization floor
    let still = write_config(
        tmp.path(),
        "s.toml",
        "[virial]\nlattice = [[1.0, 1.0, 1.0], [1.0, 1.0, 3.0]]\n[virial.scan]\nn = 512\nscale = 1.0\nchirp = 0.0\n",
    );
    let out = out_arg(tmp.path(), "s");
    let o = lab(&["virial-scan", "--config", &still, "--out", &out]);
    assert!(o.status.success());
    let t = read_json(Path::new(&out).join("scan.json"));
    for row in t["rows"].as_array().unwrap() {
        assert!(row["max_dv"].as_f64().unwrap() < 1e-5, "{row}");
    }
}

#[test]
fn stationary_special_run_is_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a0.toml", "[special]\namplitude = 0.0\nbackward = false\n");
    let out = out_arg(tmp.path(), "a0");
    let o = lab(&["special", "--config", &cfg, "--n", "256", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(Path::new(&out).join("special.json"));
    assert_eq!(r["passed"], true);
    assert!(r["backward"].is_null());
    assert!(Path::new(&out).join("delta_decay.svg").exists());
    let track = fs::read_to_string(Path::new(&out).join("forward_track.csv")).unwrap();
    assert!(track.lines().count() > 10);
}

#[test]
fn modulate_decomposes_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let ev = out_arg(tmp.path(), "ev");
    let o = lab(&["evolve", "--n", "2048", "--rmax", "1e5", "--scale", "1.0", "--t-end", "0.05", "--out", &ev]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let snap = out_arg(Path::new(&ev), "final.bin");
    let out = out_arg(tmp.path(), "m");
    let o = lab(&["modulate", "--input", &snap, "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = read_json(Path::new(&out).join("decompositions.json"));
    let first = &d[0];
    assert!(first["error"].is_null());
    assert!((first["mu"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let rt = fs::read_to_string(Path::new(&out).join("round_trip.csv")).unwrap();
    assert_eq!(rt.lines().count(), 4);
}
