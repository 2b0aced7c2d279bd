mod common;

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::LazyLock;
use tempfile::TempDir;
use triwave::dynamics::unitary_3level;

/// One pulse cache shared by every test in this binary so repeated presets
/// reuse compiled gates instead of re-optimizing.
static CACHE: LazyLock<TempDir> = LazyLock::new(|| TempDir::new().unwrap());

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_triwave")
}

fn model_arg() -> String {
    common::model_path().to_string_lossy().into_owned()
}

fn run_with_cache(args: &[&str], cache: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .env("TRIWAVE_CACHE_DIR", cache)
        .output()
        .expect("binary should launch")
}

fn run(args: &[&str]) -> Output {
    run_with_cache(args, CACHE.path())
}

fn out_file(dir: &TempDir, name: &str) -> (PathBuf, String) {
    let p = dir.path().join(name);
    let s = p.to_string_lossy().into_owned();
    (p, s)
}

struct Csv {
    meta: String,
    header: String,
    rows: Vec<Vec<f64>>,
    trailing: Vec<String>,
}

fn parse_csv(text: &str) -> Csv {
    let mut lines = text.lines();
    let meta = lines.next().expect("metadata line").to_string();
    assert!(meta.starts_with("# triwave"), "metadata line: {meta}");
    let header = lines.next().expect("header line").to_string();
    let mut rows = Vec::new();
    let mut trailing = Vec::new();
    for line in lines {
        if line.starts_with('#') {
            trailing.push(line.to_string());
            continue;
        }
        assert!(trailing.is_empty(), "data after trailing comments");
        rows.push(
            line.split(',')
                .map(|v| v.parse::<f64>().expect("numeric cell"))
                .collect(),
        );
    }
    Csv {
        meta,
        header,
        rows,
        trailing,
    }
}

#[test]
fn fig1c_writes_populations_and_targets() {
    let dir = TempDir::new().unwrap();
    let (path, path_s) = out_file(&dir, "fig1c.csv");
    let out = run(&["fig1c", "--model", &model_arg(), "--out", &path_s]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&path).unwrap();
    let csv = parse_csv(&text);
    assert!(csv.meta.contains("preset=fig1c"));
    assert!(csv.meta.contains("model_sha="));
    assert!(csv.meta.contains("converged=true"));
    assert_eq!(csv.header, "t_ns,p0,p1,p2,p_guard");
    assert_eq!(csv.rows.len(), 301);

    for (k, row) in csv.rows.iter().enumerate() {
        assert_eq!(row.len(), 5);
        assert!((row[0] - 0.5 * k as f64).abs() < 1e-12);
        let sum: f64 = row[1..].iter().sum();
        assert!((sum - 1.0).abs() < 1e-6, "row {k} sums to {sum}");
        for &p in &row[1..] {
            assert!((-1e-9..=1.0 + 1e-9).contains(&p));
        }
    }
    let last = csv.rows.last().unwrap();
    assert!((last[0] - 150.0).abs() < 1e-12);
    assert!((last[1] - 0.9802).abs() < 0.02, "final p0 {}", last[1]);
    assert!(last[4] <= 1e-3, "final guard population {}", last[4]);

    // The analytic target comment carries the exact transition
    // probabilities of the three-level gate.
    assert_eq!(csv.trailing.len(), 1);
    assert!(csv.trailing[0].contains("p0=0.9801988047020223"));
    assert!(csv.trailing[0].contains("p1=0.019603186322219305"));
    assert!(csv.trailing[0].contains("p2=0.00019800897575851295"));
}

#[test]
fn fig1c_reruns_are_byte_identical_even_after_cache_corruption() {
    let dir = TempDir::new().unwrap();
    let cache = TempDir::new().unwrap();
    let (path, path_s) = out_file(&dir, "fig1c.csv");

    let first = run_with_cache(&["fig1c", "--model", &model_arg(), "--out", &path_s], cache.path());
    assert!(first.status.success());
    let bytes1 = std::fs::read(&path).unwrap();

    // Second run hits the pulse cache.
    let cached_files: Vec<_> = std::fs::read_dir(cache.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("triwave-pulse-"))
        .collect();
    assert_eq!(cached_files.len(), 1, "expected one cached pulse");
    let second = run_with_cache(&["fig1c", "--model", &model_arg(), "--out", &path_s], cache.path());
    assert!(second.status.success());
    assert_eq!(bytes1, std::fs::read(&path).unwrap(), "cache hit changed output");

    // A corrupt cache entry is ignored and rebuilt, with identical output.
    std::fs::write(cached_files[0].path(), "not json at all").unwrap();
    let third = run_with_cache(&["fig1c", "--model", &model_arg(), "--out", &path_s], cache.path());
    assert!(third.status.success());
    assert_eq!(bytes1, std::fs::read(&path).unwrap(), "cache rebuild changed output");
}

#[test]
fn fig2_tracks_exact_gate_powers() {
    let dir = TempDir::new().unwrap();
    let (path, path_s) = out_file(&dir, "fig2.csv");
    let out = run(&["fig2", "--model", &model_arg(), "--out", &path_s, "--n", "12"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&path).unwrap();
    let csv = parse_csv(&text);
    assert!(csv.meta.contains("preset=fig2"));
    assert!(csv.meta.contains("rotations=3"));
    assert!(csv.meta.contains("native_gate_estimate=9"));
    assert_eq!(
        csv.header,
        "N,exact_p0,exact_p1,exact_p2,modular_p0,modular_p1,modular_p2,sequence_p0,sequence_p1,sequence_p2"
    );
    assert_eq!(csv.rows.len(), 12);

    let per_rot: f64 = csv
        .meta
        .split("per_rotation_error=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(per_rot > 0.0 && per_rot < 0.05, "per-rotation error {per_rot}");

    for (idx, row) in csv.rows.iter().enumerate() {
        let n = idx + 1;
        assert_eq!(row[0] as usize, n);
        for &p in &row[1..] {
            assert!((-1e-9..=1.0 + 1e-9).contains(&p), "N = {n}: probability {p}");
        }
        // Exact columns agree with the closed-form gate power.
        let u = unitary_3level(0.2 * n as f64, FRAC_PI_2, 2.0).unwrap();
        for level in 0..3 {
            let ideal = u.entries[[level, 0]].norm_sqr();
            assert!(
                (row[1 + level] - ideal).abs() < 1e-9,
                "N = {n} level {level}: {} vs {ideal}",
                row[1 + level]
            );
        }
    }
}

#[test]
fn fig3_endpoint_row_and_parallel_determinism() {
    let dir = TempDir::new().unwrap();
    let (path, path_s) = out_file(&dir, "fig3.csv");
    let args = [
        "fig3", "--model", &model_arg(), "--out", &path_s, "--s-list", "2,8",
    ];
    let out = run(&args);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let bytes_seq = std::fs::read(&path).unwrap();

    let csv = parse_csv(std::str::from_utf8(&bytes_seq).unwrap());
    assert!(csv.meta.contains("preset=fig3"));
    assert!(csv.meta.contains("s_list=2,8"));
    assert_eq!(csv.header, "s,F0,F1,F2");
    assert_eq!(csv.rows.len(), 2);

    let endpoint = &csv.rows[0];
    assert_eq!(endpoint[0], 2.0);
    for &f in &endpoint[1..] {
        assert!((f - 1.0).abs() < 1e-6, "s = 2 fidelity {f}");
    }
    for row in &csv.rows {
        for &f in &row[1..] {
            assert!(f >= 0.98, "s = {}: fidelity {f}", row[0]);
            assert!(f <= 1.0 + 1e-9);
        }
    }

    // The parallel sweep must emit byte-identical results.
    let (path2, path2_s) = out_file(&dir, "fig3_par.csv");
    let out2 = run(&[
        "fig3", "--model", &model_arg(), "--out", &path2_s, "--s-list", "2,8", "--parallel",
    ]);
    assert!(out2.status.success());
    assert_eq!(bytes_seq, std::fs::read(&path2).unwrap());
}

#[test]
fn evolve_reports_conserved_occupations() {
    let dir = TempDir::new().unwrap();
    let (path, path_s) = out_file(&dir, "evolve.csv");
    let out = run(&[
        "evolve", "--out", &path_s, "--s", "3", "--tau", "1.5", "--n", "60",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = parse_csv(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(csv.header, "tau,n1,n2,n3");
    assert_eq!(csv.rows.len(), 61);
    let first = &csv.rows[0];
    assert!((first[1] - 2.0).abs() < 1e-12);
    assert!((first[2] - 1.0).abs() < 1e-12);
    assert!(first[3].abs() < 1e-12);
    for row in &csv.rows {
        assert!((row[1] + row[3] - 2.0).abs() < 1e-8, "n1 + n3 drifted");
        assert!((row[1] + row[2] - 3.0).abs() < 1e-8, "n1 + n2 drifted");
    }

    // The sector parameter must be a nonnegative integer.
    let bad = run(&["evolve", "--out", &path_s, "--s", "2.5"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn classical_preset_shows_depletion_and_conservation() {
    let dir = TempDir::new().unwrap();
    let (path, path_s) = out_file(&dir, "classical.csv");
    let out = run(&["classical", "--out", &path_s]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = parse_csv(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(csv.header, "tau,a1_abs2,a2_abs2,a3_abs2,inv2,inv3");
    assert_eq!(csv.rows.len(), 10001);

    let inv2_0 = csv.rows[0][4];
    let inv3_0 = csv.rows[0][5];
    let mut min_i1 = f64::INFINITY;
    for row in &csv.rows {
        min_i1 = min_i1.min(row[1]);
        assert!((row[4] - inv2_0).abs() / inv2_0 < 1e-8);
        assert!((row[5] - inv3_0).abs() / inv3_0 < 1e-8);
    }
    assert!(min_i1 < 1e-6, "pump never depleted: min I1 = {min_i1}");
    let recovered = csv.rows.iter().skip(4000).map(|r| r[1]).fold(0.0, f64::max);
    assert!(recovered > 1.0024, "pump never recovered: {recovered}");
}

#[test]
fn decompose_emits_a_deterministic_rotation_listing() {
    let dir = TempDir::new().unwrap();
    let (path, path_s) = out_file(&dir, "decompose.txt");
    let out = run(&["decompose", "--out", &path_s]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# triwave"));
    assert_eq!(
        text.lines().filter(|l| l.starts_with("rotation ")).count(),
        3
    );
    assert!(text.contains("phase"));

    let out2 = run(&["decompose", "--out", &path_s]);
    assert!(out2.status.success());
    assert_eq!(text, std::fs::read_to_string(&path).unwrap());
}

#[test]
fn pulse_opt_writes_envelope_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let (path, path_s) = out_file(&dir, "pulse.csv");
    let out = run(&["pulse-opt", "--model", &model_arg(), "--out", &path_s]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = parse_csv(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(csv.header, "t_ns,eps_re,eps_im");
    assert_eq!(csv.rows.len(), 300);
    for (k, row) in csv.rows.iter().enumerate() {
        assert!((row[0] - 0.5 * k as f64).abs() < 1e-12);
        let mag = (row[1] * row[1] + row[2] * row[2]).sqrt();
        assert!(mag <= 0.03 + 1e-12, "slice {k} amplitude {mag}");
    }

    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["tau"].as_f64().unwrap(), 0.1);
    assert_eq!(sidecar["s"].as_f64().unwrap(), 2.0);
    assert_eq!(sidecar["slice_ns"].as_f64().unwrap(), 0.5);
    assert_eq!(sidecar["total_t_ns"].as_f64().unwrap(), 150.0);
    assert!(sidecar["achieved_fidelity"].as_f64().unwrap() >= 1.0 - 1e-5);
    assert_eq!(sidecar["converged"].as_bool().unwrap(), true);
}

#[test]
fn cache_directory_environment_variable_is_honored() {
    let dir = TempDir::new().unwrap();
    let cache = TempDir::new().unwrap();
    let (_, path_s) = out_file(&dir, "pulse.csv");
    let out = run_with_cache(
        &["pulse-opt", "--model", &model_arg(), "--out", &path_s],
        cache.path(),
    );
    assert!(out.status.success());
    let cached: Vec<_> = std::fs::read_dir(cache.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("triwave-pulse-"))
        .collect();
    assert_eq!(cached.len(), 1, "pulse cache not written to TRIWAVE_CACHE_DIR");
    // Nothing but the requested outputs lands beside them.
    let beside: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("triwave-pulse-"))
        .collect();
    assert!(beside.is_empty());
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let (_, path_s) = out_file(&dir, "x.csv");

    // Missing model for a preset that needs one.
    let no_model = run(&["fig1c", "--out", &path_s]);
    assert_eq!(no_model.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&no_model.stderr).is_empty());

    // Model path that does not exist.
    let missing = run(&["fig1c", "--model", "/nonexistent/model.json", "--out", &path_s]);
    assert_eq!(missing.status.code(), Some(2));

    // Malformed model document.
    let bad_model = dir.path().join("bad.json");
    std::fs::write(&bad_model, "{\"levels\": 5}").unwrap();
    let malformed = run(&[
        "fig1c", "--model", &bad_model.to_string_lossy(), "--out", &path_s,
    ]);
    assert_eq!(malformed.status.code(), Some(2));

    // Family parameters below 2 are rejected.
    let bad_s = run(&[
        "fig3", "--model", &model_arg(), "--out", &path_s, "--s-list", "1.5,8",
    ]);
    assert_eq!(bad_s.status.code(), Some(2));

    // Zero repetitions.
    let zero_n = run(&["fig2", "--model", &model_arg(), "--out", &path_s, "--n", "0"]);
    assert_eq!(zero_n.status.code(), Some(2));

    // Unknown preset (clap usage error).
    let unknown = run(&["fig9", "--out", &path_s]);
    assert_eq!(unknown.status.code(), Some(2));
}
