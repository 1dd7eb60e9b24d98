use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn whichway(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_whichway"))
        .args(args)
        .current_dir(dir)
        .env_remove("WHICHWAY_SEED")
        .output()
        .expect("binary runs")
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    fs::read_to_string(path).unwrap()
}

fn read(dir: &TempDir, name: &str) -> String {
    fs::read_to_string(dir.path().join(name)).unwrap()
}

fn json(dir: &TempDir, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn sweep_delta_matches_golden() {
    let dir = TempDir::new().unwrap();
    let out = whichway(
        &["sweep-delta", "--visibility", "0.5", "--delta-points", "9", "--samples", "300", "--out", "d.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");
    assert_eq!(read(&dir, "d.csv"), golden("sweep_delta_v0.5.csv"));
}

#[test]
fn sweep_visibility_matches_golden() {
    let dir = TempDir::new().unwrap();
    let out = whichway(
        &["sweep-visibility", "--v-grid", "0,0.3,0.6", "--delta-points", "9", "--samples", "200", "--out", "v.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");
    assert_eq!(read(&dir, "v.csv"), golden("sweep_visibility.csv"));
    assert_eq!(read(&dir, "v.csv.argmax.json"), golden("sweep_visibility_argmax.json"));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden("sweep_visibility_argmax.json"));
}

#[test]
fn csv_schema_and_line_endings() {
    let dir = TempDir::new().unwrap();
    let out = whichway(
        &["sweep-delta", "--visibility", "0.5", "--protocols", "natural,ff", "--delta-points", "5", "--samples", "10", "--out", "d.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = read(&dir, "d.csv");
    assert!(!csv.contains('\r'));
    assert!(csv.starts_with("delta_rad,k_natural,k_canonical,k_simplified,k_ff\n"));
    assert!(column(&csv, "k_canonical").iter().all(|c| c.is_empty()));
    assert!(column(&csv, "k_ff").iter().all(|c| !c.is_empty()));
}

#[test]
fn natural_knowledge_is_one_at_half_period() {
    let dir = TempDir::new().unwrap();
    whichway(&["sweep-delta", "--visibility", "0.5", "--protocols", "natural", "--out", "d.csv"], dir.path());
    let csv = read(&dir, "d.csv");
    let deltas = column(&csv, "delta_rad");
    let k = column(&csv, "k_natural");
    assert_eq!(deltas.len(), 50);
    let (j, _) = deltas
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let d = |s: &String| (s.parse::<f64>().unwrap() - std::f64::consts::PI).abs();
            d(a.1).total_cmp(&d(b.1))
        })
        .unwrap();
    // 50 points do not hit π exactly; the nearest one is within half a step.
    let nearest: f64 = k[j].parse().unwrap();
    assert!(nearest > 0.99, "{nearest}");
    let dir = TempDir::new().unwrap();
    whichway(&["sweep-delta", "--visibility", "0.5", "--protocols", "natural", "--delta-points", "3", "--out", "d.csv"], dir.path());
    assert_eq!(column(&read(&dir, "d.csv"), "k_natural")[1], "1");
}

#[test]
fn canonical_column_is_constant() {
    let dir = TempDir::new().unwrap();
    whichway(&["sweep-delta", "--visibility", "0.9", "--protocols", "canonical", "--out", "d.csv"], dir.path());
    assert!(column(&read(&dir, "d.csv"), "k_canonical").iter().all(|c| c == "0.435889894354"));
}

#[test]
fn no_detector_contrast_means_full_knowledge() {
    let dir = TempDir::new().unwrap();
    whichway(&["sweep-delta", "--visibility", "0", "--samples", "50", "--delta-points", "7", "--out", "d.csv"], dir.path());
    let csv = read(&dir, "d.csv");
    for line in csv.lines().skip(1) {
        assert!(line.split(',').skip(1).all(|c| c == "1"), "{line}");
    }
}

#[test]
fn json_format() {
    let dir = TempDir::new().unwrap();
    whichway(
        &["sweep-delta", "--visibility", "0.5", "--protocols", "canonical", "--delta-points", "4", "--format", "json", "--out", "d.json"],
        dir.path(),
    );
    let v = json(&dir, "d.json");
    assert_eq!(v["delta_rad"].as_array().unwrap().len(), 4);
    assert!(v.get("k_natural").is_none());
    assert!((v["k_canonical"][0].as_f64().unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
}

#[test]
fn outputs_are_bit_reproducible_and_digested() {
    let args = ["sweep-delta", "--visibility", "0.7", "--delta-points", "11", "--samples", "400", "--seed", "9", "--out", "d.csv", "--plot", "d.svg"];
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    whichway(&args, a.path());
    whichway(&args, b.path());
    assert_eq!(read(&a, "d.csv"), read(&b, "d.csv"));
    assert_eq!(read(&a, "d.svg"), read(&b, "d.svg"));

    let manifest = json(&a, "d.csv.manifest.json");
    assert_eq!(manifest["command"], "sweep-delta");
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    for name in ["d.csv", "d.svg"] {
        let digest: String = Sha256::digest(read(&a, name).as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(manifest["outputs"][name], digest.as_str());
    }
    assert_eq!(read(&a, "d.svg").matches("<polyline").count(), 4);
}

#[test]
fn seed_from_environment() {
    let run = |env_seed: Option<&str>| {
        let dir = TempDir::new().unwrap();
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_whichway"));
        cmd.args(["sweep-delta", "--visibility", "0.6", "--protocols", "ff", "--delta-points", "9", "--samples", "200", "--out", "d.csv"])
            .current_dir(dir.path())
            .env_remove("WHICHWAY_SEED");
        if let Some(s) = env_seed {
            cmd.env("WHICHWAY_SEED", s);
        }
        assert!(cmd.output().unwrap().status.success());
        (read(&dir, "d.csv"), json(&dir, "d.csv.manifest.json")["seed"].clone())
    };
    let (default_csv, default_seed) = run(None);
    let (env_csv, env_seed) = run(Some("12345"));
    assert_eq!(default_seed, 1);
    assert_eq!(env_seed, 12345);
    assert_ne!(default_csv, env_csv);
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(whichway(&["sweep-delta", "--visibility", "0.5", "--bogus", "--out", "x"], dir.path()).status.code(), Some(2));
    assert_eq!(whichway(&["sweep-delta", "--out", "x"], dir.path()).status.code(), Some(2));
    assert_eq!(whichway(&["sweep-visibility", "--v-grid", "0:0:1", "--out", "x"], dir.path()).status.code(), Some(2));
    assert_eq!(
        whichway(&["sweep-delta", "--visibility", "0.5", "--delta-points", "1", "--out", "x"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn domain_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let out = whichway(&["sweep-delta", "--visibility", "1", "--out", "x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dark fringe"));
    assert_eq!(whichway(&["sweep-visibility", "--v-grid", "0.5,1.2", "--out", "x.csv"], dir.path()).status.code(), Some(3));
    assert_eq!(
        whichway(&["montecarlo", "--theta", "2", "--shots", "1000", "--out", "m.json"], dir.path()).status.code(),
        Some(3)
    );
    assert_eq!(
        whichway(&["montecarlo", "--visibility", "1", "--delta", "3.141592653589793", "--shots", "1000", "--out", "m.json"], dir.path())
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn starvation_exits_4() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        whichway(&["montecarlo", "--visibility", "0.5", "--shots", "50", "--out", "m.json"], dir.path()).status.code(),
        Some(4)
    );
    // Port probability 0.05 leaves about 10 of 200 shots at the port.
    assert_eq!(
        whichway(&["montecarlo", "--visibility", "0.9", "--delta", "3.141592653589793", "--shots", "200", "--out", "m.json"], dir.path())
            .status
            .code(),
        Some(4)
    );
}

fn montecarlo_knowledge(args: &[&str]) -> (f64, f64, f64) {
    let dir = TempDir::new().unwrap();
    let mut full = vec!["montecarlo", "--shots", "1000000", "--out", "m.json"];
    full.extend_from_slice(args);
    let out = whichway(&full, dir.path());
    assert!(out.status.success(), "{out:?}");
    let v = json(&dir, "m.json");
    let k = &v["guessing_game"]["knowledge"];
    (k["observed"].as_f64().unwrap(), k["expected"].as_f64().unwrap(), k["z"].as_f64().unwrap())
}

#[test]
fn montecarlo_natural_knowledge() {
    let (_, expected, z) = montecarlo_knowledge(&["--visibility", "0.5", "--basis", "natural"]);
    assert!((expected - 0.5).abs() < 1e-12);
    assert!(z.abs() < 3.0, "{z}");
}

#[test]
fn montecarlo_canonical_knowledge() {
    let (_, expected, z) = montecarlo_knowledge(&["--visibility", "0.5", "--basis", "canonical"]);
    assert!((expected - 0.8660254037844386).abs() < 1e-12);
    assert!(z.abs() < 3.0, "{z}");
}

#[test]
fn montecarlo_without_contrast_has_no_knowledge() {
    let (observed, expected, z) = montecarlo_knowledge(&["--visibility", "0"]);
    assert!((expected - 1.0).abs() < 1e-12);
    assert_eq!(observed, 1.0);
    assert_eq!(z, 0.0);
    let (_, expected, z) = montecarlo_knowledge(&["--visibility", "1"]);
    assert!(expected.abs() < 1e-12);
    assert!(z.abs() < 3.0, "{z}");
}

#[test]
fn montecarlo_basis_file_and_phase() {
    let dir = TempDir::new().unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let basis = format!("[[[1,0],[0,0],[0,0]], [[0,0],[{h},0],[0,{h}]], [[0,0],[0,{h}],[{h},0]]]");
    fs::write(dir.path().join("b.json"), basis).unwrap();
    let out = whichway(
        &["montecarlo", "--theta", "0.5", "--basis", "b.json", "--delta", "1.2", "--order", "wwd-first", "--shots", "20000", "--out", "m.json"],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let v = json(&dir, "m.json");
    assert_eq!(v["fixed_phase"]["outcomes"].as_array().unwrap().len(), 3);
    assert!(v["max_abs_z"].as_f64().unwrap() < 4.5);

    fs::write(dir.path().join("bad.json"), "[[[1,0],[0,0],[0,0]], [[1,0],[0,0],[0,0]], [[0,0],[0,0],[1,0]]]").unwrap();
    let out = whichway(&["montecarlo", "--theta", "0.5", "--basis", "bad.json", "--out", "m.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_quick_passes_fast() {
    let dir = TempDir::new().unwrap();
    let start = Instant::now();
    let out = whichway(&["verify", "--quick", "--out", "r.json"], dir.path());
    assert!(start.elapsed() < Duration::from_secs(10));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir, "r.json");
    assert_eq!(report["passed"], true);
    assert_eq!(report["mode"], "quick");
    assert!(report["checks"].as_array().unwrap().len() >= 10);
    assert!(dir.path().join("r.json.manifest.json").exists());
}

#[test]
fn verify_reports_injected_failures() {
    let dir = TempDir::new().unwrap();
    let out = whichway(&["verify", "--quick", "--tolerance-scale", "-1"], dir.path());
    assert_eq!(out.status.code(), Some(5));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], false);
    assert!(report["checks"].as_array().unwrap().iter().any(|c| c["passed"] == false));
}

#[test]
fn verify_full_runs_the_large_duality_sweep() {
    let dir = TempDir::new().unwrap();
    let out = whichway(&["verify", "--full", "--out", "r.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir, "r.json");
    assert_eq!(report["mode"], "full");
    assert!(report["checks"].as_array().unwrap().iter().any(|c| c["name"] == "duality_bound"));
}
