use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn hypercurv(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypercurv")).args(args).arg("--out-dir").arg(out).output().unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn data_file(dir: &Path, cmd: &str, ext: &str) -> PathBuf {
    let prefix = format!("{cmd}-");
    let hits: Vec<PathBuf> = files(dir)
        .into_iter()
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            name.starts_with(&prefix) && name.ends_with(ext)
        })
        .collect();
    assert_eq!(hits.len(), 1, "{cmd} {ext}: {hits:?}");
    hits.into_iter().next().unwrap()
}

fn one_with_suffix(dir: &Path, suffix: &str) -> PathBuf {
    let hits: Vec<PathBuf> = files(dir).into_iter().filter(|p| p.to_string_lossy().ends_with(suffix)).collect();
    assert_eq!(hits.len(), 1, "{suffix}: {hits:?}");
    hits.into_iter().next().unwrap()
}

#[test]
fn periods_of_the_regular_hexagon_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypercurv(&["periods", "--curve", "x^6-1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let data = read_json(&data_file(dir.path(), "periods", ".json"));
    assert!(data["symmetry_residual"].as_f64().unwrap() < 1e-8);
    assert!(data["min_eig_im"].as_f64().unwrap() > 0.0);
    for key in ["P", "Q", "omega"] {
        assert_eq!(data[key].as_array().unwrap().len(), 2, "{key}");
    }
    let manifest = read_json(&one_with_suffix(dir.path(), ".manifest.json"));
    assert_eq!(manifest["command"], "periods");
    assert_eq!(manifest["notes"]["root_finder"], true);
    assert_eq!(manifest["all_pass"], true);
}

#[test]
fn file_names_share_the_manifest_run_id() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypercurv(&["curvature", "--roots", "1,-1,2,-2", "--grid", "-1.5,1.5,-1,1,5,4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let manifest_path = one_with_suffix(dir.path(), ".manifest.json");
    let manifest = read_json(&manifest_path);
    let id = manifest["run_id"].as_str().unwrap().to_owned();
    assert_eq!(id.len(), 16);
    assert_eq!(manifest_path.file_name().unwrap().to_string_lossy(), format!("{id}.manifest.json"));
    let listed: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(listed, vec![format!("curvature-{id}.json"), format!("curvature-{id}.csv")]);
    assert_eq!(manifest["notes"]["root_finder"], false);
    for f in files(dir.path()) {
        assert!(f.file_name().unwrap().to_string_lossy().contains(&id));
    }
}

#[test]
fn curvature_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypercurv(&["curvature", "--roots", "1,-1,2,-2,0.5+i,0.5-i", "--grid", "-2,2,-2,2,6,6", "--csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(files(dir.path()).len(), 2);
    let text = std::fs::read_to_string(data_file(dir.path(), "curvature", ".csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re_x,im_x,sheet,rho,K"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.len() % 2 == 0 && rows.len() > 60 && rows.len() <= 72, "{}", rows.len());
    for pair in rows.chunks(2) {
        assert_eq!(pair[0][..2], pair[1][..2]);
        assert_eq!((pair[0][2], pair[1][2]), ("1", "2"));
        assert_eq!(pair[0][4], pair[1][4]);
    }
    for row in &rows {
        assert_eq!(row.len(), 5);
        assert!(row[2] == "1" || row[2] == "2");
        let rho: f64 = row[3].parse().unwrap();
        let k: f64 = row[4].parse().unwrap();
        assert!(rho > 0.0 && k <= 1e-9);
        let mantissa = row[3].split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{}", row[3]);
    }
}

#[test]
fn area_of_the_genus_one_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypercurv(&["area", "--curve", "x^4-1", "--json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let data = read_json(&data_file(dir.path(), "area", ".json"));
    assert!((data["area"].as_f64().unwrap() - 1.0).abs() < 0.01);
    assert_eq!(data["expected_g"].as_f64(), Some(1.0));
    assert!(data["total_curvature"].as_f64().unwrap().abs() < 0.05);
}

#[test]
fn malformed_polynomial_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["x^6 +", "2x^6 - 1", "x^6 - y"] {
        let out = hypercurv(&["periods", "--curve", bad], dir.path());
        assert_eq!(out.status.code(), Some(1), "{bad}");
        assert!(!out.stderr.is_empty());
    }
    assert!(files(dir.path()).is_empty());
}

#[test]
fn bad_flags_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["periods"],
        &["periods", "--curve", "x^4-1", "--roots", "1,-1,2,-2"],
        &["periods", "--roots", "1,1,2,3"],
        &["curvature", "--roots", "1,-1,2,-2", "--grid", "0,1,0,1"],
    ];
    for args in cases {
        assert_eq!(hypercurv(args, dir.path()).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn thread_cap_does_not_change_results() {
    let one = tempfile::tempdir().unwrap();
    let many = tempfile::tempdir().unwrap();
    let args = ["curvature", "--curve", "x^6 - 1", "--grid", "-2,2,-2,2,7,7"];
    assert_eq!(hypercurv(&[&args[..], &["--threads", "1"]].concat(), one.path()).status.code(), Some(0));
    assert_eq!(hypercurv(&[&args[..], &["--threads", "4"]].concat(), many.path()).status.code(), Some(0));
    let csv = |d: &Path| std::fs::read(data_file(d, "curvature", ".csv")).unwrap();
    assert_eq!(csv(one.path()), csv(many.path()));
}

#[test]
fn weierstrass_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypercurv(&["weierstrass", "--curve", "x^6 - 1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let data = read_json(&data_file(dir.path(), "weierstrass", ".json"));
    assert_eq!(data["branch_points"].as_array().unwrap().len(), 6);
    assert!(data["max_abs_k_branch"].as_f64().unwrap() <= 1e-6);
    assert_eq!(data["generic"]["count"], 50);
    assert!(data["generic"]["max_k"].as_f64().unwrap() < 0.0);
}

#[test]
fn separating_pinch_reports_check_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypercurv(&["pinch", "--kind", "sep", "--t-grid", "1e-2,1e-3,1e-4", "--angles", "32"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let manifest = read_json(&one_with_suffix(dir.path(), ".manifest.json"));
    let checks = manifest["checks"].as_array().unwrap();
    let verdict = |name: &str| checks.iter().find(|c| c["name"] == name).unwrap()["pass"].as_bool().unwrap();
    assert!(!verdict("max_abs_k_band"));
    assert!(verdict("max_rho_band"));
    assert!(verdict("max_k"));
    let csv = std::fs::read_to_string(data_file(dir.path(), "pinch", ".csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn nonsep_pinch_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypercurv(
        &["pinch", "--kind", "nonsep", "--t-grid", "1e-2,1e-3", "--angles", "16", "--fixed-roots", "2,-2,3,-3,2+2i,2-2i"],
        dir.path(),
    );
    assert!(matches!(out.status.code(), Some(0) | Some(2)));
    let data = read_json(&data_file(dir.path(), "pinch", ".json"));
    assert_eq!(data["scaling"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(data["gram"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(data["collar"].as_array().unwrap().len(), 2);
    let bad = hypercurv(&["pinch", "--kind", "nonsep", "--t-grid", "1e-3,1e-2"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
}
