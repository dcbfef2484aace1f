use std::fs;
use std::path::Path;
use std::process::Command;

use s3fse::io::{read_pgm, write_cube, write_labels};
use s3fse::HyperspectralCube;

fn s3fse_cmd(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_s3fse"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = s3fse_cmd(args);
    assert!(
        out.status.success(),
        "s3fse {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Data rows of metrics.csv, split into fields.
fn metrics(dir: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn overall(dir: &Path, method: &str) -> f64 {
    metrics(dir)
        .into_iter()
        .find(|r| r[0] == method && r[1] == "overall")
        .map(|r| r[3].parse().unwrap())
        .unwrap_or_else(|| panic!("no overall row for {method}"))
}

fn sweep_rows(dir: &Path) -> Vec<(String, usize, f64)> {
    let text = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,d,OA"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].to_string(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn baseline_is_perfect_on_separable_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&[
        "run",
        "--methods",
        "baseline",
        "--noise-sigma",
        "0",
        "--out",
        out,
    ]);
    assert_eq!(overall(dir.path(), "baseline"), 1.0);
    let rows = metrics(dir.path());
    // 4 class rows plus the summary row
    assert_eq!(rows.len(), 5);
    for r in rows.iter().filter(|r| r[1] != "overall") {
        assert_eq!(r[2], "1");
    }
}

#[test]
fn s3fse_trace_objective_never_increases() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&[
        "run",
        "--methods",
        "s3fse",
        "--d",
        "3",
        "--beta",
        "10",
        "--out",
        out,
    ]);
    let text = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,objective,sparsity,seconds"));
    let objective: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(objective.len() >= 2);
    for w in objective.windows(2) {
        assert!(w[1] <= w[0] + 1e-8, "objective rose: {w:?}");
    }
    let sparsity = fs::read_to_string(dir.path().join("sparsity.txt")).unwrap();
    assert!(sparsity.contains("row_sparsity="));
    assert!(sparsity.contains("noise_columns_planted=30"));
    assert!(dir.path().join("projection.txt").exists());
}

#[test]
fn every_artifact_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        run_ok(&[
            "run",
            "--seed",
            "4",
            "--d",
            "3",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
    }
    // trace.csv minus its wall-clock column
    let trace = |dir: &Path| -> Vec<String> {
        fs::read_to_string(dir.join("trace.csv"))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(trace(a.path()), trace(b.path()));
    for file in ["sparsity.txt", "projection.txt"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file} differs"
        );
    }
    // metrics differ only in the runtime column
    let strip = |dir: &Path| -> Vec<Vec<String>> {
        metrics(dir)
            .into_iter()
            .map(|mut r| {
                r.pop();
                r
            })
            .collect()
    };
    assert_eq!(strip(a.path()), strip(b.path()));
    // manifests differ only in the output directory
    let manifest = |dir: &Path| -> Vec<String> {
        fs::read_to_string(dir.join("manifest.txt"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("out="))
            .map(String::from)
            .collect()
    };
    assert_eq!(manifest(a.path()), manifest(b.path()));
}

fn blocky_cube(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let (w, h, bands) = (36, 32, 12);
    // four quadrants with distinct spectra, plus a little texture
    let class_of = |r: usize, c: usize| 1 + (r >= h / 2) as usize * 2 + (c >= w / 2) as usize;
    let mut data = Vec::with_capacity(w * h * bands);
    for b in 0..bands {
        for r in 0..h {
            for c in 0..w {
                let k = class_of(r, c) as f64;
                let ripple = ((r * 7 + c * 3 + b) % 5) as f64 * 0.01;
                data.push(k * (1.0 + b as f64 * 0.1 * k).sin().abs() + ripple);
            }
        }
    }
    let cube = HyperspectralCube::new(w, h, bands, data).unwrap();
    let header = dir.join("scene.hdr");
    write_cube(&header, &cube).unwrap();
    // every other pixel unlabelled
    let labels: Vec<i64> = (0..w * h)
        .map(|p| {
            if p % 2 == 0 {
                10 * class_of(p / w, p % w) as i64
            } else {
                0
            }
        })
        .collect();
    let label_path = dir.join("labels.txt");
    write_labels(&label_path, &labels).unwrap();
    (header, label_path)
}

#[test]
fn cube_run_writes_maps_matching_the_raster() {
    let dir = tempfile::tempdir().unwrap();
    let (header, labels) = blocky_cube(dir.path());
    let out = dir.path().join("run");
    run_ok(&[
        "run",
        "--cube",
        header.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--gabor-kernel-size",
        "7",
        "--gabor-scales",
        "0,1",
        "--dmp-pcs",
        "3",
        "--per-class-train",
        "20",
        "--d",
        "5",
        "--methods",
        "s3fse,baseline",
        "--out",
        out.to_str().unwrap(),
    ]);
    for name in ["map.pgm", "map_s3fse.pgm", "map_baseline.pgm"] {
        let (w, h, pixels) = read_pgm(&out.join(name)).unwrap();
        assert_eq!((w, h), (36, 32), "{name}");
        assert!(
            pixels.iter().all(|&g| [64, 128, 191, 255].contains(&g)),
            "{name}"
        );
    }
    assert_eq!(
        fs::read(out.join("map.pgm")).unwrap(),
        fs::read(out.join("map_s3fse.pgm")).unwrap()
    );
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("class.1=label 10, gray 64"));
    assert!(manifest.contains("gabor_kernel_size=7"));
    // 12 spectral + 2 x 12 Gabor + 3 x 2 x 4 morphological
    assert!(manifest.contains("view_dims=12,24,24"));
    let labels_in_metrics: Vec<String> = metrics(&out).into_iter().map(|r| r[1].clone()).collect();
    assert!(labels_in_metrics.contains(&"40".to_string()));
}

#[test]
fn features_then_views_matches_cube_input() {
    let dir = tempfile::tempdir().unwrap();
    let (header, labels) = blocky_cube(dir.path());
    let feats = dir.path().join("features");
    let imaging = [
        "--gabor-kernel-size",
        "7",
        "--gabor-scales",
        "0",
        "--dmp-pcs",
        "2",
    ];
    let mut args = vec![
        "features",
        "--cube",
        header.to_str().unwrap(),
        "--out",
        feats.to_str().unwrap(),
    ];
    args.extend(imaging);
    run_ok(&args);
    let views: Vec<String> = ["spectral", "texture", "dmp"]
        .iter()
        .map(|v| feats.join(format!("{v}.csv")).display().to_string())
        .collect();
    let views = views.join(",");

    let common = [
        "--methods",
        "baseline,pca",
        "--d",
        "4",
        "--per-class-train",
        "15",
    ];
    let from_cube = dir.path().join("cube");
    let mut args = vec![
        "run",
        "--cube",
        header.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
    ];
    args.extend(imaging);
    args.extend(common);
    args.extend(["--out", from_cube.to_str().unwrap()]);
    run_ok(&args);

    let from_views = dir.path().join("views");
    let mut args = vec![
        "run",
        "--views",
        views.as_str(),
        "--labels",
        labels.to_str().unwrap(),
    ];
    args.extend(common);
    args.extend(["--out", from_views.to_str().unwrap()]);
    run_ok(&args);

    for method in ["baseline", "pca"] {
        let a = overall(&from_cube, method);
        let b = overall(&from_views, method);
        // CSV stores shortest round-trip decimals, so features are identical
        assert_eq!(a, b, "{method}");
    }
}

#[test]
fn fit_then_eval_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let fit_dir = dir.path().join("fit");
    let run_dir = dir.path().join("run");
    let eval_dir = dir.path().join("eval");
    let common = ["--d", "3", "--seed", "2", "--alpha", "0.5"];
    let mut args = vec!["fit", "--out", fit_dir.to_str().unwrap()];
    args.extend(common);
    run_ok(&args);
    let projection = fit_dir.join("projection.txt");
    let mut args = vec![
        "eval",
        "--projection",
        projection.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ];
    args.extend(common);
    run_ok(&args);
    let mut args = vec![
        "run",
        "--methods",
        "s3fse",
        "--out",
        run_dir.to_str().unwrap(),
    ];
    args.extend(common);
    run_ok(&args);
    assert_eq!(overall(&eval_dir, "s3fse"), overall(&run_dir, "s3fse"));
    assert_eq!(
        fs::read(fit_dir.join("projection.txt")).unwrap(),
        fs::read(run_dir.join("projection.txt")).unwrap()
    );
}

#[test]
fn singleton_sweep_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let sweep_dir = dir.path().join("sweep");
    let run_dir = dir.path().join("run");
    let common = [
        "--seed",
        "3",
        "--noise-sigma",
        "1.5",
        "--methods",
        "s3fse,colgp,pca,baseline",
    ];
    let mut args = vec![
        "sweep",
        "--d-values",
        "4",
        "--out",
        sweep_dir.to_str().unwrap(),
    ];
    args.extend(common);
    run_ok(&args);
    let mut args = vec!["run", "--d", "4", "--out", run_dir.to_str().unwrap()];
    args.extend(common);
    run_ok(&args);
    let rows = sweep_rows(&sweep_dir);
    assert_eq!(rows.len(), 4);
    for (method, d, oa) in rows {
        assert_eq!(d, 4);
        assert_eq!(oa, overall(&run_dir, &method), "{method}");
    }
}

#[test]
fn sweep_has_one_row_per_method_and_d() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "sweep",
        "--d-values",
        "1-3,6",
        "--methods",
        "pca,colgp,baseline",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let rows = sweep_rows(dir.path());
    assert_eq!(rows.len(), 3 * 4);
    let methods: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    assert_eq!(methods.iter().filter(|&&m| m == "pca").count(), 4);
    assert!(fs::read_to_string(dir.path().join("manifest.txt"))
        .unwrap()
        .contains("d_values=1,2,3,6"));
}

#[test]
fn s3fse_accuracy_peaks_by_the_discriminant_dimension() {
    // C = 4 classes span a 3-dimensional discriminant subspace
    for (noise, seed) in [("0.5", "0"), ("1.5", "1")] {
        let dir = tempfile::tempdir().unwrap();
        run_ok(&[
            "sweep",
            "--d-values",
            "1-20",
            "--methods",
            "s3fse",
            "--noise-sigma",
            noise,
            "--seed",
            seed,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        let rows = sweep_rows(dir.path());
        assert_eq!(rows.len(), 20);
        let best = rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
        let best_early = rows
            .iter()
            .filter(|r| r.1 <= 3)
            .map(|r| r.2)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best_early, best, "noise {noise}");
        assert!(rows[0].2 < best, "noise {noise}: d=1 already at the peak");
    }
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("exp.conf");
    fs::write(
        &conf,
        "methods=baseline\nper_class_train=10\nseed=5\nk_cls=3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    run_ok(&[
        "run",
        "--config",
        conf.to_str().unwrap(),
        "--seed",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed=6\n"));
    assert!(manifest.contains("per_class_train=10\n"));
    assert!(manifest.contains("k_cls=3\n"));
    assert!(manifest.contains("methods=baseline\n"));
    // 40 per class, 10 train each
    assert!(manifest.contains("test_samples=120\n"));
}

#[test]
fn errors_exit_nonzero_with_a_reason() {
    let dir = tempfile::tempdir().unwrap();
    let out = s3fse_cmd(&[
        "run",
        "--views",
        "missing.csv",
        "--labels",
        "missing.txt",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("data: reading view"), "{stderr}");

    let out = s3fse_cmd(&[
        "run",
        "--per-class-train",
        "41",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fewer than per_class_train"));

    let out = s3fse_cmd(&["run", "--methods", "svm"]);
    assert!(!out.status.success());
}
