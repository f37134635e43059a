//! End-to-end runs of the `brainkit` binary on synthetic data.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use brainkit::nifti::read_nifti;
use brainkit_cli::tables::read_matrix;

fn brainkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brainkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = brainkit(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn failure(args: &[&str]) -> (i32, String) {
    let out = brainkit(args);
    (out.status.code().unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, args: &[&str]) -> PathBuf {
    let data = dir.join("data");
    let mut all = vec!["synth", "--out", p(&data)];
    all.extend_from_slice(args);
    ok(&all);
    data
}

fn csv_header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    files
}

#[test]
fn decode_output_schema_is_classifier_independent() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--kind", "decoding", "--shape", "10,10,10", "--n-per-class", "20"]);
    let mut listings = Vec::new();
    for classifier in ["svc", "logreg"] {
        let out = dir.path().join(classifier);
        let line = ok(&[
            "decode",
            "--data",
            p(&data.join("bold.nii")),
            "--mask",
            p(&data.join("mask.nii")),
            "--labels",
            p(&data.join("labels.csv")),
            "--classifier",
            classifier,
            "--k",
            "50",
            "--out",
            p(&out),
        ]);
        assert!(line.starts_with("accuracy "), "{line}");
        let files: Vec<PathBuf> = tree(&out).into_keys().collect();
        let headers = [csv_header(&out.join("cv_scores.csv")), csv_header(&out.join("summary.csv"))];
        let weights = read_nifti(out.join("weights.nii")).unwrap();
        assert_eq!(weights.spatial_shape(), [10, 10, 10]);
        listings.push((files, headers));
    }
    assert_eq!(listings[0], listings[1]);
}

#[test]
fn receptive_fields_land_on_the_true_patch() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--kind", "encoding", "--n-trials", "300", "--n-voxels", "40", "--noise", "0.5"]);
    let out = dir.path().join("encode");
    ok(&[
        "encode",
        "--data",
        p(&data.join("bold.nii")),
        "--mask",
        p(&data.join("mask.nii")),
        "--stimuli",
        p(&data.join("stimuli.csv")),
        "--n-fields",
        "10",
        "--out",
        p(&out),
    ]);
    let truth = read_matrix(&data.join("fields.csv"), true).unwrap();
    let mut checked = 0;
    for entry in fs::read_dir(out.join("fields")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_str().unwrap();
        let voxel: usize = name.trim_start_matches("voxel_").parse().unwrap();
        let grid = read_matrix(&path, false).unwrap();
        assert_eq!(grid.dim(), (10, 10));
        let (mut on_patch, mut total) = (0.0, 0.0);
        for (pixel, w) in grid.iter().enumerate() {
            total += w.abs();
            if truth[[voxel, pixel]] != 0.0 {
                on_patch += w.abs();
            }
        }
        assert!(on_patch >= 0.6 * total, "{name}: {on_patch} of {total}");
        checked += 1;
    }
    assert_eq!(checked, 10);
}

#[test]
fn ica_writes_one_map_per_component() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--kind", "rest", "--n-frames", "60", "--shape", "10,10,10"]);
    let out = dir.path().join("ica");
    ok(&[
        "ica",
        "--data",
        p(&data.join("sub-00.nii")),
        "--data",
        p(&data.join("sub-01.nii")),
        "--mask",
        p(&data.join("mask.nii")),
        "--n-components",
        "10",
        "--out",
        p(&out),
    ]);
    let maps = (0..10).filter(|i| out.join(format!("ic_{i:02}.nii")).exists()).count();
    assert_eq!(maps, 10);
    assert!(!out.join("ic_10.nii").exists());
    assert_eq!(read_nifti(out.join("components.nii")).unwrap().n_frames(), 10);
}

#[test]
fn ward_reaches_a_thousand_parcels() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--kind", "rest", "--n-subjects", "1", "--n-frames", "30", "--shape", "15,15,15"]);
    let out = dir.path().join("ward");
    let line = ok(&[
        "cluster",
        "--data",
        p(&data.join("sub-00.nii")),
        "--method",
        "ward",
        "--n-clusters",
        "1000",
        "--out",
        p(&out),
    ]);
    assert!(line.starts_with("1000 clusters, 1000 connected regions"), "{line}");
    let labels = read_nifti(out.join("labels.nii")).unwrap();
    let mut seen: Vec<u32> = labels.data().iter().filter(|&&v| v > 0.0).map(|&v| v as u32).collect();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), 1000);
}

#[test]
fn searchlight_scores_are_accuracies() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--kind", "decoding", "--shape", "8,8,8", "--n-per-class", "10"]);
    let out = dir.path().join("sl");
    ok(&[
        "searchlight",
        "--data",
        p(&data.join("bold.nii")),
        "--mask",
        p(&data.join("mask.nii")),
        "--labels",
        p(&data.join("labels.csv")),
        "--radius-mm",
        "2",
        "--out",
        p(&out),
    ]);
    let map = read_nifti(out.join("searchlight.nii")).unwrap();
    assert!(map.data().iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(map.data().iter().any(|&v| v > 0.0));
}

#[test]
fn thresholded_render_shows_background_below_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--kind", "decoding", "--shape", "8,8,8", "--n-per-class", "10"]);
    let render = |threshold: &str, name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "render",
            "--map",
            p(&data.join("truth.nii")),
            "--background",
            p(&data.join("bold.nii")),
            "--threshold",
            threshold,
            "--out",
            p(&out),
        ]);
        fs::read(&out).unwrap()
    };
    let header = b"P5\n8 8\n255\n";
    let overlay = render("0.5", "overlay.pgm");
    let plain = render("2", "plain.pgm");
    assert!(overlay.starts_with(header) && plain.starts_with(header));
    assert_eq!(overlay.len(), header.len() + 64);

    let truth = read_nifti(data.join("truth.nii")).unwrap();
    let in_slice = (0..8).flat_map(|y| (0..8).map(move |x| (x, y))).filter(|&(x, y)| truth.get(x, y, 4, 0) > 0.5).count();
    let body = |bytes: &[u8]| bytes[header.len()..].to_vec();
    let (o, b) = (body(&overlay), body(&plain));
    assert!(o.iter().zip(&b).all(|(po, pb)| po == pb || *po == 255));
    assert!(o.iter().filter(|&&v| v == 255).count() >= in_slice);
}

#[test]
fn same_seed_gives_identical_trees() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let root = dir.path().join(name);
        let data = synth(&root, &["--kind", "decoding", "--shape", "8,8,8", "--n-per-class", "10", "--seed", "3"]);
        ok(&[
            "decode",
            "--data",
            p(&data.join("bold.nii")),
            "--labels",
            p(&data.join("labels.csv")),
            "--k",
            "20",
            "--shuffle",
            "--seed",
            "3",
            "--out",
            p(&root.join("decode")),
        ]);
        ok(&[
            "cluster",
            "--data",
            p(&data.join("bold.nii")),
            "--method",
            "kmeans",
            "--n-clusters",
            "5",
            "--seed",
            "3",
            "--out",
            p(&root.join("kmeans")),
        ]);
        tree(&root)
    };
    let first = run("a");
    assert!(first.len() > 10);
    assert_eq!(first, run("b"));
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let (code, stderr) = failure(&["decode", "--data", p(&dir.path().join("missing.nii"))]);
    assert_eq!(code, 2);
    assert!(stderr.starts_with("error: config: "), "{stderr}");

    let junk = dir.path().join("junk.nii");
    fs::write(&junk, vec![7u8; 400]).unwrap();
    let (code, stderr) = failure(&["cluster", "--data", p(&junk), "--n-clusters", "2", "--out", p(dir.path())]);
    assert_eq!(code, 3);
    assert!(stderr.starts_with("error: ") && stderr.lines().count() == 1, "{stderr}");

    let data = synth(dir.path(), &["--kind", "encoding", "--n-trials", "60", "--n-voxels", "5"]);
    let (code, stderr) = failure(&[
        "encode",
        "--data",
        p(&data.join("bold.nii")),
        "--mask",
        p(&data.join("mask.nii")),
        "--stimuli",
        p(&data.join("stimuli.csv")),
        "--alpha",
        "0",
        "--out",
        p(&dir.path().join("enc")),
    ]);
    assert_eq!(code, 4);
    assert!(stderr.starts_with("error: singular_system: "), "{stderr}");
}
