use std::path::Path;
use std::process::{Command, Output};

use geoshift::manifest::write_manifest;
use geoshift::patch_io::{write_patch, Dtype};
use geoshift::{ClassGrid, Manifest, Patch, Region, Season, BAND_COUNT, PATCH_PIXELS, PATCH_SIZE};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoshift"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// Patches whose every pixel in every band equals `value`, one per scene.
fn constant_dataset(dir: &Path, patches: &[(Region, f32)]) -> std::path::PathBuf {
    let entries = patches
        .iter()
        .enumerate()
        .map(|(i, &(region, value))| {
            let patch = Patch::new(
                format!("p{i}"),
                format!("scene{i}"),
                region,
                Season::Summer,
                vec![value; BAND_COUNT * PATCH_PIXELS],
                ClassGrid::filled(PATCH_SIZE, PATCH_SIZE, (i % 2) as u8).unwrap(),
            )
            .unwrap();
            write_patch(dir, &format!("p{i}"), &patch, Dtype::U16).unwrap()
        })
        .collect();
    let path = dir.join("manifest.csv");
    write_manifest(&path, &Manifest::new(dir, entries).unwrap()).unwrap();
    path
}

#[test]
fn summarize_prints_the_packaged_inventory() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.csv");
    ok(&["fixture", "sen12ms", "--output", s(&manifest)]);
    let table = ok(&["summarize", "--manifest", s(&manifest)]);
    assert!(table.contains("13 (9,393)"));
    assert!(table.contains("252 (180,662)"));
}

#[test]
fn missing_manifest_fails_with_a_message() {
    let out = run(&["summarize", "--manifest", "/nonexistent/manifest.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest not found"));
}

#[test]
fn empty_manifest_summarizes_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.csv");
    std::fs::write(&manifest, "patch_id,scene_id,region,season,image_path,label_path\n").unwrap();
    let out_dir = dir.path().join("out");
    ok(&["summarize", "--manifest", s(&manifest), "--output-dir", s(&out_dir)]);
    let csv = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "Total,Total,0,0"));
    let record = read_json(&out_dir.join("run.json"));
    assert_eq!(record["run"]["command"], "summarize");
    assert!(record["artifacts"]["summary.csv"].is_string());
}

#[test]
fn stats_rejects_a_constant_band() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = constant_dataset(dir.path(), &[(Region::Asia, 500.0), (Region::Asia, 500.0)]);
    let out = run(&[
        "stats",
        "--manifest",
        s(&manifest),
        "--output-dir",
        s(&dir.path().join("o")),
    ]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn stats_writes_summaries_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&[
        "fixture",
        "shift",
        "--output-dir",
        s(&data),
        "--scenes",
        "2",
        "--patches",
        "1",
    ]);
    let out = dir.path().join("stats");
    ok(&[
        "stats",
        "--manifest",
        s(&data.join("manifest.csv")),
        "--output-dir",
        s(&out),
        "--group-by",
        "continent",
        "--stride",
        "16",
        "--grid",
        "64",
    ]);
    assert!(out.join("band_summary.csv").exists());
    assert!(out.join("band_summary_africa.csv").exists());
    let curves = std::fs::read_dir(out.join("kde")).unwrap().count();
    assert_eq!(curves, 2 * BAND_COUNT);
    let record = read_json(&out.join("run.json"));
    assert_eq!(record["run"]["grid"], 64);
    assert_eq!(record["artifacts"].as_object().unwrap().len(), 3 + 2 * BAND_COUNT);
}

#[test]
fn cluster_and_shift_on_two_disjoint_regions() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = constant_dataset(
        dir.path(),
        &[
            (Region::Africa, 100.0),
            (Region::Africa, 100.0),
            (Region::Europe, 900.0),
            (Region::Europe, 900.0),
        ],
    );
    let cl = dir.path().join("cluster");
    let args = [
        "cluster",
        "--manifest",
        s(&manifest),
        "--output-dir",
        s(&cl),
        "--k",
        "2",
        "--seed",
        "3",
    ];
    ok(&args);
    let model = read_json(&cl.join("model.json"));
    assert_eq!(model["inertia"], 0.0);
    assert_eq!(model["run"]["seed"], 3);
    let first = std::fs::read(cl.join("assignments.csv")).unwrap();
    ok(&args);
    assert_eq!(std::fs::read(cl.join("assignments.csv")).unwrap(), first);

    let sh = dir.path().join("shift");
    ok(&[
        "shift",
        "--manifest",
        s(&manifest),
        "--assignments",
        s(&cl.join("assignments.csv")),
        "--model",
        s(&cl.join("model.json")),
        "--output-dir",
        s(&sh),
        "--pcond",
        "--pca",
        "--format",
        "json",
    ]);
    let table = read_json(&sh.join("p_group_given_cluster.json"));
    for row in table["values"].as_array().unwrap() {
        let mut cells: Vec<f64> = row.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        cells.sort_by(f64::total_cmp);
        assert_eq!(cells, [0.0, 1.0]);
    }
    let pca = read_json(&sh.join("pca.json"));
    let coords = pca["coordinates"].as_array().unwrap();
    let gap = (coords[0][0].as_f64().unwrap() - coords[1][0].as_f64().unwrap()).abs();
    assert!((gap - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn restarts_never_do_worse_than_one_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&[
        "fixture",
        "shift",
        "--output-dir",
        s(&data),
        "--scenes",
        "3",
        "--patches",
        "2",
    ]);
    let manifest = data.join("manifest.csv");
    let inertia = |restarts: &str| {
        let out = dir.path().join(format!("c{restarts}"));
        ok(&[
            "cluster",
            "--manifest",
            s(&manifest),
            "--output-dir",
            s(&out),
            "--k",
            "4",
            "--restarts",
            restarts,
        ]);
        read_json(&out.join("model.json"))["inertia"].as_f64().unwrap()
    };
    assert!(inertia("5") <= inertia("1"));
}

#[test]
fn coverage_needs_a_training_group() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = constant_dataset(dir.path(), &[(Region::Africa, 100.0), (Region::Europe, 900.0)]);
    let cl = dir.path().join("cluster");
    ok(&[
        "cluster",
        "--manifest",
        s(&manifest),
        "--output-dir",
        s(&cl),
        "--k",
        "2",
    ]);
    let out = run(&[
        "shift",
        "--manifest",
        s(&manifest),
        "--assignments",
        s(&cl.join("assignments.csv")),
        "--model",
        s(&cl.join("model.json")),
        "--output-dir",
        s(&dir.path().join("shift")),
        "--coverage",
        s(&manifest),
    ]);
    assert!(!out.status.success());
}

#[test]
fn oracle_evaluation_is_perfect_on_every_season() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&[
        "fixture",
        "shift",
        "--output-dir",
        s(&data),
        "--scenes",
        "8",
        "--patches",
        "1",
    ]);
    let out = dir.path().join("eval");
    ok(&[
        "evaluate",
        "--manifest",
        s(&data.join("manifest.csv")),
        "--output-dir",
        s(&out),
        "--group-by",
        "season",
        "--oracle-predictor",
    ]);
    let matrix = read_json(&out.join("accuracy_matrix.json"));
    assert_eq!(matrix["groups"].as_array().unwrap().len(), 4);
    let cells = matrix["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 16);
    assert!(cells.iter().all(|c| c["mean"] == 1.0 && c["std"] == 0.0));
    assert_eq!(cells.iter().filter(|c| c["diagonal"] == true).count(), 4);
    let csv = std::fs::read_to_string(out.join("accuracy_matrix.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn invalid_training_settings_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&[
        "fixture",
        "shift",
        "--output-dir",
        s(&data),
        "--scenes",
        "2",
        "--patches",
        "1",
    ]);
    let out = run(&[
        "evaluate",
        "--manifest",
        s(&data.join("manifest.csv")),
        "--output-dir",
        s(&dir.path().join("eval")),
        "--batch-size",
        "0",
    ]);
    assert!(!out.status.success());
}
