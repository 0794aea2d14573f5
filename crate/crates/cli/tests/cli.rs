use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use synthprint::dsp::{dft2, folded_frequency, idft2};
use synthprint::imgio::write_pgm;
use synthprint::synth::{gen_powerlaw_field, image_seed, write_fixture, Artifact, FixtureSpec, PostOp};
use synthprint::ImageF;
use synthprint_cli::Report;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_synthprint"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn synthprint")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(dir: &Path, spec: &FixtureSpec) -> PathBuf {
    write_fixture(spec, dir, 65535, 0).unwrap();
    dir.to_path_buf()
}

fn white(size: usize, count: usize, seed: u64) -> FixtureSpec {
    FixtureSpec {
        size,
        count,
        alpha: 0.0,
        artifact: None,
        chain: vec![],
        seed,
    }
}

fn analyze(input: &Path, output: &Path, extra: &[&str]) -> Report {
    let mut args = vec!["analyze", "--input", s(input), "--output", s(output)];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    Report::load(&output.join("report.json")).unwrap()
}

fn without_timing(json: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(json).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v.to_string()
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn synth_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let spec_path = tmp.path().join("spec.json");
    fs::write(&spec_path, r#"{"size": 64, "count": 10, "alpha": 2, "seed": 7}"#).unwrap();
    for name in ["a", "b"] {
        let out = run(&["synth", "--spec", s(&spec_path), "--output", s(&tmp.path().join(name))]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = dir_contents(&tmp.path().join("a"));
    assert_eq!(a.len(), 11);
    assert_eq!(a, dir_contents(&tmp.path().join("b")));
}

#[test]
fn synth_rejects_bad_fields() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        (r#"{"size": 64, "count": 2, "alpha": 2, "seed": 1, "artifact": {"period": 7, "amplitude": 0.05, "pattern_seed": 1}}"#, "artifact.period"),
        (r#"{"size": 64, "count": 2, "alpha": 2}"#, "seed"),
        (r#"{"size": 64, "count": 2, "alpha": 2, "seed": 1, "chain": [{"jpeg": {"quality": 0}}]}"#, "chain[0]"),
    ];
    for (json, field) in cases {
        let spec_path = tmp.path().join("spec.json");
        fs::write(&spec_path, json).unwrap();
        let out = run(&["synth", "--spec", s(&spec_path), "--output", s(&tmp.path().join("out"))]);
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "{err}");
    }
}

#[test]
fn analyze_period4_fixture() {
    let tmp = TempDir::new().unwrap();
    let mut spec = white(128, 20, 3);
    spec.artifact = Some(Artifact {
        period: 4,
        amplitude: 0.05,
        pattern_seed: 11,
    });
    let input = fixture(&tmp.path().join("in"), &spec);
    let out = tmp.path().join("out");
    let report = analyze(&input, &out, &["--crop", "128"]);
    assert!(!report.peaks.peaks.is_empty());
    assert_eq!(report.peaks.inferred_factor, Some(4));
    assert!((report.summary.power_mean - 1.0).abs() < 1e-9);
    for name in [
        "report.json",
        "summary.json",
        "summary_power.f64",
        "summary_autocorr.f64",
        "power.csv",
        "autocorr.csv",
        "autocorr_crop65.csv",
        "radial.csv",
        "angular.csv",
        "power_spectrum.svg",
        "autocorr.svg",
        "radial.svg",
        "angular.svg",
    ] {
        assert!(out.join(name).is_file(), "{name}");
    }
    assert!(!out.join("fisher.svg").exists());
    let crop = fs::read_to_string(out.join("autocorr_crop65.csv")).unwrap();
    assert_eq!(crop.lines().count(), 65);
    let center: f64 = crop.lines().nth(32).unwrap().split(',').nth(32).unwrap().parse().unwrap();
    assert_eq!(center, report.summary.autocorr_zero_lag);
}

#[test]
fn single_image_corpus_has_undefined_variances() {
    let tmp = TempDir::new().unwrap();
    let input = fixture(&tmp.path().join("in"), &white(64, 1, 5));
    let report = analyze(&input, &tmp.path().join("out"), &["--crop", "64"]);
    assert_eq!(report.corpus.usable, 1);
    assert!(report.radial.variance.iter().all(Option::is_none));
    assert!(report.angular.variance.iter().all(Option::is_none));
    let json = fs::read_to_string(tmp.path().join("out/report.json")).unwrap();
    assert!(json.contains("\"variance\": [\n      null"));
    let csv = fs::read_to_string(tmp.path().join("out/radial.csv")).unwrap();
    assert!(csv.lines().nth(10).unwrap().split(',').nth(2).unwrap().is_empty());
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let tmp = TempDir::new().unwrap();
    let input = fixture(&tmp.path().join("in"), &white(64, 12, 9));
    let mut reports = Vec::new();
    for threads in ["1", "2", "8", "1"] {
        let out = tmp.path().join(format!("out{}", reports.len()));
        analyze(&input, &out, &["--crop", "64", "--threads", threads]);
        reports.push(fs::read_to_string(out.join("report.json")).unwrap());
    }
    for r in &reports[1..] {
        assert_eq!(without_timing(r), without_timing(&reports[0]));
    }
    for r in &reports {
        assert_eq!(Report::from_json(r).unwrap().to_json().unwrap(), *r);
    }
    for name in ["summary_power.f64", "radial.csv", "power_spectrum.svg", "autocorr.svg", "radial.svg"] {
        assert_eq!(
            fs::read(tmp.path().join("out0").join(name)).unwrap(),
            fs::read(tmp.path().join("out2").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn report_subcommand_rerenders_identical_plots() {
    let tmp = TempDir::new().unwrap();
    let input = fixture(&tmp.path().join("in"), &white(64, 4, 2));
    let out = tmp.path().join("out");
    analyze(&input, &out, &["--crop", "64"]);
    let again = tmp.path().join("again");
    let res = run(&["report", "--input", s(&out.join("report.json")), "--output", s(&again)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for name in ["power_spectrum.svg", "autocorr.svg", "radial.svg", "angular.svg"] {
        let a = fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(a, fs::read_to_string(again.join(name)).unwrap(), "{name}");
        assert!(a.starts_with("<svg"));
        assert!(!a.to_lowercase().contains("date") && !a.to_lowercase().contains("time"));
    }
}

#[test]
fn no_plots_flag() {
    let tmp = TempDir::new().unwrap();
    let input = fixture(&tmp.path().join("in"), &white(64, 2, 2));
    let out = tmp.path().join("out");
    analyze(&input, &out, &["--crop", "64", "--no-plots"]);
    assert!(!out.join("radial.svg").exists());
    assert!(out.join("radial.csv").exists());
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for (name, bytes) in dir_contents(from) {
        fs::write(to.join(name), bytes).unwrap();
    }
}

fn compare(subject: &Path, reference: &Path, out: &Path, crop: &str) -> Report {
    let res = run(&[
        "compare",
        "--input",
        s(subject),
        "--reference",
        s(reference),
        "--output",
        s(out),
        "--crop",
        crop,
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    Report::load(&out.join("report.json")).unwrap()
}

#[test]
fn compare_same_and_swapped() {
    let tmp = TempDir::new().unwrap();
    let a = fixture(&tmp.path().join("a"), &white(64, 6, 1));
    let b = fixture(&tmp.path().join("b"), &FixtureSpec { alpha: 1.0, ..white(64, 6, 2) });
    let a_copy = tmp.path().join("a_copy");
    copy_dir(&a, &a_copy);

    let same = compare(&a, &a_copy, &tmp.path().join("o1"), "64");
    assert!(same.fisher.as_ref().unwrap().values.iter().all(|v| *v == Some(0.0)));
    assert!(tmp.path().join("o1/fisher.svg").is_file());
    assert!(tmp.path().join("o1/fisher.csv").is_file());

    let ab = compare(&a, &b, &tmp.path().join("o2"), "64").fisher.unwrap();
    let ba = compare(&b, &a, &tmp.path().join("o3"), "64").fisher.unwrap();
    for (x, y) in ab.values.iter().zip(&ba.values) {
        assert_eq!(x.map(|v| -v), *y);
    }
}

/// White noise whose spectrum is attenuated around the diagonal orientations.
fn diagonal_attenuated(size: usize, seed: u64) -> ImageF {
    let img = gen_powerlaw_field(size, 0.0, seed).unwrap();
    let mut spec = dft2(&img);
    for k in 0..size {
        for l in 0..size {
            let (fu, fv) = (folded_frequency(l, size), folded_frequency(k, size));
            if fu == 0.0 && fv == 0.0 {
                continue;
            }
            let theta = fv.atan2(fu).rem_euclid(std::f64::consts::PI);
            let d = [std::f64::consts::FRAC_PI_4, 3.0 * std::f64::consts::FRAC_PI_4]
                .iter()
                .map(|c| (theta - c).abs())
                .fold(f64::INFINITY, f64::min);
            let w = 1.0 - 0.6 * (-(d * d) / (2.0 * 0.15f64.powi(2))).exp();
            spec.values[k * size + l] *= w;
        }
    }
    let back = idft2(&spec).unwrap();
    ImageF::new(size, size, back.values.iter().map(|z| z.re.clamp(0.0, 1.0)).collect()).unwrap()
}

#[test]
fn compare_diagonal_attenuation() {
    let tmp = TempDir::new().unwrap();
    let diag = tmp.path().join("diag");
    fs::create_dir_all(&diag).unwrap();
    for i in 0..12 {
        let img = diagonal_attenuated(64, image_seed(40, i));
        fs::write(diag.join(format!("d{i:02}.pgm")), write_pgm(&img, 65535).unwrap()).unwrap();
    }
    let iso = fixture(&tmp.path().join("iso"), &white(64, 12, 41));
    let f = compare(&diag, &iso, &tmp.path().join("out"), "64").fisher.unwrap();
    let abs: Vec<f64> = f.values.iter().map(|v| v.unwrap().abs()).collect();
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&a, &b| abs[b].total_cmp(&abs[a]));
    let mut top = [order[0], order[1]];
    top.sort_unstable();
    assert_eq!(top, [4, 12], "{abs:?}");
    assert!(f.values[4].unwrap() < 0.0 && f.values[12].unwrap() < 0.0);
}

#[test]
fn jpeg_chain_raises_grid_score() {
    let tmp = TempDir::new().unwrap();
    let clean = FixtureSpec {
        size: 256,
        count: 20,
        alpha: 5.0,
        artifact: None,
        chain: vec![],
        seed: 21,
    };
    let jpeg = FixtureSpec {
        chain: vec![PostOp::Jpeg { quality: 75 }],
        ..clean.clone()
    };
    let a = analyze(&fixture(&tmp.path().join("clean"), &clean), &tmp.path().join("o1"), &["--no-plots"]);
    let b = analyze(&fixture(&tmp.path().join("jpeg"), &jpeg), &tmp.path().join("o2"), &["--no-plots"]);
    let (ga, gb) = (a.grid.unwrap().score, b.grid.unwrap().score);
    assert!(gb > ga, "clean {ga}, jpeg {gb}");
}

#[test]
fn partial_failures_are_listed() {
    let tmp = TempDir::new().unwrap();
    let input = fixture(&tmp.path().join("in"), &white(64, 3, 8));
    fs::write(input.join("broken.pgm"), b"P5\n64 64\n255\n\x01\x02").unwrap();
    fs::write(input.join("tiny.pgm"), write_pgm(&ImageF::filled(8, 8, 0.5).unwrap(), 255).unwrap()).unwrap();
    let report = analyze(&input, &tmp.path().join("out"), &["--crop", "64"]);
    assert_eq!(report.corpus.usable, 3);
    assert_eq!(report.corpus.selected, 5);
    let failed: Vec<&str> = report.errors.iter().map(|e| e.path.rsplit('/').next().unwrap()).collect();
    assert_eq!(failed, ["broken.pgm", "tiny.pgm"]);
}

#[test]
fn invalid_input_exits_2() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let out = tmp.path().join("out");
    let missing = tmp.path().join("missing");
    let cases: Vec<Vec<&str>> = vec![
        vec!["analyze", "--input", s(&empty), "--output", s(&out)],
        vec!["analyze", "--output", s(&out)],
        vec!["analyze", "--input", s(&missing), "--output", s(&out)],
        vec!["compare", "--input", s(&empty), "--output", s(&out)],
        vec!["analyze", "--input", s(&empty), "--output", s(&out), "--crop", "lots"],
        vec!["bogus"],
    ];
    for args in cases {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }

    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"detector": {"neighborhood": 2}}"#).unwrap();
    let input = fixture(&tmp.path().join("in"), &white(64, 2, 8));
    let res = run(&["analyze", "--config", s(&cfg), "--input", s(&input), "--output", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("neighborhood"));

    // Every image unusable: exit 2.
    let res = run(&["analyze", "--input", s(&input), "--output", s(&out), "--crop", "128"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn config_file_with_external_denoiser() {
    let tmp = TempDir::new().unwrap();
    let input = fixture(&tmp.path().join("in"), &white(64, 3, 8));
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"crop": 64, "plots": false, "denoiser": {"kind": {"external": {"command": ["cat"]}}, "strength": 1.0, "window": 3}}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let res = run(&["analyze", "--config", s(&cfg), "--input", s(&input), "--output", s(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    // `cat` returns the image, so every residual is zero.
    let report = Report::load(&out.join("report.json")).unwrap();
    assert_eq!(report.summary.norm_constant, 0.0);
    assert!(!out.join("radial.svg").exists());
}
