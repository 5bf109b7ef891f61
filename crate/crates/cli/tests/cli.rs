use std::path::Path;
use std::process::Command;

use qcwork::classical::cf_classical_value;
use qcwork::operators::DriveProtocol;

fn qcwork(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qcwork")).args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn run_ok(args: &[&str]) {
    let (code, text) = qcwork(args);
    assert_eq!(code, 0, "{args:?}: {text}");
}

/// Data rows of a CSV output (comment lines and column header removed).
fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn summary(path: &Path, key: &str) -> String {
    let prefix = format!("# summary {key} = ");
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
        .unwrap_or_else(|| panic!("no summary {key} in {}", path.display()))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn series<'a>(rows: &'a [Vec<String>], definition: &str) -> Vec<&'a Vec<String>> {
    rows.iter().filter(|r| r[3] == definition).collect()
}

#[test]
fn cf_has_four_series_anchored_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&["cf", "--out", out, "--dim", "50", "--steps", "200"]);
    let rows = rows(&dir.path().join("cf.csv"));
    assert_eq!(rows.len(), 4 * 161);
    for d in ["tpm", "fcs", "mh", "classical"] {
        let s = series(&rows, d);
        assert_eq!(s.len(), 161);
        let zero = s.iter().find(|r| num(&r[0]) == 0.0).unwrap();
        assert!((num(&zero[1]) - 1.0).abs() < 1e-10 && num(&zero[2]).abs() < 1e-10, "{d}: {zero:?}");
    }
}

#[test]
fn definitions_coincide_without_pre_drive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flat.toml");
    std::fs::write(&cfg, "# no coherence\npre_duration = 0.0\ndim = 60\nsteps = 200\neta_count = 41\n").unwrap();
    run_ok(&["cf", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let rows = rows(&dir.path().join("cf.csv"));
    let (t, f, m) = (series(&rows, "tpm"), series(&rows, "fcs"), series(&rows, "mh"));
    for i in 0..t.len() {
        for c in [1, 2] {
            assert!((num(&t[i][c]) - num(&f[i][c])).abs() < 1e-10);
            assert!((num(&t[i][c]) - num(&m[i][c])).abs() < 1e-10);
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for fmt in ["csv", "json"] {
        for dir in [&a, &b] {
            let out = dir.path().to_str().unwrap();
            run_ok(&["cf", "--out", out, "--dim", "50", "--steps", "100", "--eta-count", "21", "--format", fmt]);
            run_ok(&["classical", "--out", out, "--samples", "20000", "--seed", "11", "--format", fmt]);
        }
        for name in ["cf", "classical"] {
            let file = format!("{name}.{fmt}");
            let x = std::fs::read(a.path().join(&file)).unwrap();
            let y = std::fs::read(b.path().join(&file)).unwrap();
            assert_eq!(x, y, "{file}");
        }
    }
    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("cf.json")).unwrap()).unwrap();
    assert_eq!(doc["schema"], "cf/1");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4 * 21);
    assert_eq!(doc["config"]["seed"], "20240601");
}

#[test]
fn distributions_are_normalized() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["dist", "--out", dir.path().to_str().unwrap(), "--dim", "50", "--steps", "200"]);
    for d in ["tpm", "fcs", "mh"] {
        let path = dir.path().join(format!("dist_{d}.csv"));
        assert!((num(&summary(&path, "weight_sum")) - 1.0).abs() < 1e-10);
        if d == "tpm" {
            assert!(num(&summary(&path, "min_weight")) >= -1e-12);
            assert_eq!(summary(&path, "negative_count"), "0");
        }
    }
    let fcs = rows(&dir.path().join("dist_fcs.csv"));
    assert_ne!(summary(&dir.path().join("dist_fcs.csv"), "negative_count"), "0");
    // Supports are (E_m − (E_n + E_k)/2) on ladders of spacing ℏω, so they
    // sit on a half-integer lattice away from the truncation edge.
    let origin = num(&fcs[0][0]);
    for r in fcs.iter().filter(|r| num(&r[1]).abs() > 1e-6) {
        let k = (num(&r[0]) - origin) / 0.5;
        assert!((k - k.round()).abs() < 1e-6, "{r:?}");
    }
}

#[test]
fn fig1_panels_share_eta_and_classical_series() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "fig1", "--out", dir.path().to_str().unwrap(),
        "--eta-min", "-1", "--eta-max", "1", "--eta-count", "5", "--steps", "200",
        "--hbars", "0.6,0.48,0.384,0.3072,0.24576,0.196608,0.1572864", "--degree", "4",
    ]);
    let re = rows(&dir.path().join("fig1_real.csv"));
    let im = rows(&dir.path().join("fig1_imag.csv"));
    assert_eq!(re.len(), 5);
    let p = DriveProtocol::fig1();
    for (a, b) in re.iter().zip(&im) {
        assert_eq!(a[0], b[0]);
        assert_eq!(a.len(), 5);
        let exact = cf_classical_value(num(&a[0]), &p);
        assert_eq!(num(&a[1]), exact.re);
        assert_eq!(num(&b[1]), exact.im);
        let gap = (num(&a[2]) - exact.re).hypot(num(&b[2]) - exact.im);
        assert!(gap < 1e-3 * (1.0 + exact.norm()), "{a:?}");
    }
    let split = rows(&dir.path().join("fig1_phi2.csv"));
    assert!(split.iter().any(|r| num(&r[0]) == 1.0 && r[7] == "true"));
}

#[test]
fn jarzynski_thermal_state() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "jarzynski", "--out", dir.path().to_str().unwrap(),
        "--pre-duration", "0", "--dim", "50", "--steps", "200", "--samples", "200000",
    ]);
    let path = dir.path().join("jarzynski.csv");
    let rows = rows(&path);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r[6], "true", "{r:?}");
        assert!(num(&r[3]).abs() < 1e-12);
        if r[0] != "classical" {
            assert!((num(&r[1]) - 1.0).abs() < 1e-8 && (num(&r[2]) - 1.0).abs() < 1e-8);
        }
    }
    assert_eq!(summary(&path, "all_pass"), "true");
}

#[test]
fn measurement_isotropizes_the_wigner_function() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["measure", "--out", dir.path().to_str().unwrap(), "--steps", "200", "--eta-count", "21"]);
    let m: Vec<(String, f64)> = rows(&dir.path().join("measure.csv"))
        .into_iter()
        .map(|r| (r[0].clone(), num(&r[1])))
        .collect();
    let get = |k: &str| m.iter().find(|(q, _)| q == k).unwrap().1;
    assert!(get("linf_dephased_vs_average") < 1e-4);
    assert!(get("linf_before_vs_dephased") > 0.01);
    assert!(get("dephased_cf_max_pairwise_deviation") < 1e-10);
    let text = std::fs::read_to_string(dir.path().join("wigner_average.csv")).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[2], "512,512");
    assert_eq!(body.len(), 3 + 512);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "mass = 1.0\nbeta = -2.0\n").unwrap();
    let (code, text) = qcwork(&["cf", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2);
    assert!(text.contains("bad.toml:2"), "{text}");
    assert_eq!(qcwork(&["cf", "--out", out, "--eta-count", "2"]).0, 2);
    assert_eq!(qcwork(&["cf", "--out", out, "--dim", "20"]).0, 4);
    assert_eq!(qcwork(&["jarzynski", "--out", out, "--beta", "40", "--pre-duration", "0", "--dim", "40"]).0, 4);
}
