//! End-to-end tests driving the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use srot::color;

fn srot() -> Command {
    Command::new(env!("CARGO_BIN_EXE_srot"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("srot-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

/// Trace CSV with the wall_seconds column dropped (the one nondeterministic
/// column).
fn trace_without_wall(path: &Path) -> String {
    read(path)
        .lines()
        .map(|line| {
            if line.starts_with('#') || line.starts_with("epoch") {
                return line.to_string();
            }
            let fields: Vec<&str> = line.split(',').collect();
            let mut kept = vec![fields[0]];
            kept.extend_from_slice(&fields[2..]);
            kept.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn objective_column(path: &Path) -> Vec<String> {
    read(path)
        .lines()
        .skip(2)
        .map(|line| line.split(',').nth(2).unwrap().to_string())
        .collect()
}

#[test]
fn solve_example_converges_with_certificate() {
    let dir = temp_dir("solve");
    let out = run(srot().args([
        "solve",
        "--gen",
        "random",
        "--m",
        "16",
        "--n",
        "16",
        "--lambda",
        "1e-2",
        "--algo",
        "bcfw",
        "--sampling",
        "uniform",
        "--step",
        "els",
        "--eps",
        "1e-6",
        "--seed",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.join("summary.json"))).unwrap();
    assert_eq!(summary["converged"], serde_json::Value::Bool(true));
    assert!(summary["final_gap"].as_f64().unwrap() <= 1e-6);
    assert!(dir.join("plan.txt").exists());
    assert!(dir.join("trace.csv").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_lambda_exits_one_with_message() {
    let out = run(srot().args(["solve", "--gen", "random", "--m", "4", "--n", "4"]));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("lambda"), "stderr was: {stderr}");
}

#[test]
fn missing_required_flag_prints_usage() {
    let out = run(srot().args(["solve", "--bogus-flag"]));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.to_lowercase().contains("usage"),
        "stderr was: {stderr}"
    );
}

#[test]
fn n1_fw_and_bcfw_traces_match() {
    let dir = temp_dir("n1");
    for algo in ["fw", "bcfw"] {
        let out = run(srot().args([
            "solve",
            "--gen",
            "random",
            "--m",
            "6",
            "--n",
            "1",
            "--lambda",
            "1e-1",
            "--algo",
            algo,
            "--step",
            "dec",
            "--eps",
            "1e-12",
            "--max-epochs",
            "200",
            "--seed",
            "9",
            "--no-lp",
            "--out",
            dir.join(algo).to_str().unwrap(),
        ]));
        assert!(out.status.code().is_some());
    }
    let fw = objective_column(&dir.join("fw/trace.csv"));
    let bcfw = objective_column(&dir.join("bcfw/trace.csv"));
    assert_eq!(
        fw, bcfw,
        "objective columns differ between fw and bcfw at n=1"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn solve_artifacts_are_deterministic() {
    let dir = temp_dir("det");
    for tag in ["a", "b"] {
        let out = run(srot().args([
            "solve",
            "--gen",
            "random",
            "--m",
            "8",
            "--n",
            "8",
            "--lambda",
            "1e-2",
            "--step",
            "els",
            "--eps",
            "1e-5",
            "--seed",
            "3",
            "--out",
            dir.join(tag).to_str().unwrap(),
        ]));
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(
        read(&dir.join("a/plan.txt")),
        read(&dir.join("b/plan.txt")),
        "plans differ"
    );
    assert_eq!(
        read(&dir.join("a/summary.json")),
        read(&dir.join("b/summary.json")),
        "summaries differ"
    );
    assert_eq!(
        trace_without_wall(&dir.join("a/trace.csv")),
        trace_without_wall(&dir.join("b/trace.csv")),
        "traces differ beyond wall_seconds"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bench_counts_and_determinism() {
    let dir = temp_dir("bench");
    let args = |out: &Path, jobs: &str| {
        vec![
            "bench".to_string(),
            "--m".into(),
            "6".into(),
            "--n".into(),
            "6".into(),
            "--lambdas".into(),
            "1e-1,1e-2".into(),
            "--algos".into(),
            "bcfw-u-dec,bcfw-u-els".into(),
            "--seeds".into(),
            "3".into(),
            "--max-epochs".into(),
            "60".into(),
            "--jobs".into(),
            jobs.into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let out = run(srot().args(args(&dir.join("x"), "1")));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // 2 algorithms x 2 lambdas x 3 seeds = 12 run rows in the aggregate
    let aggregate = read(&dir.join("x/bench_aggregate.csv"));
    let run_rows = aggregate
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("algo") && !l.is_empty())
        .count();
    assert_eq!(run_rows, 12);

    // aggregate objective is non-increasing in epoch for ELS rows
    let runs = read(&dir.join("x/bench_runs.csv"));
    let mut last: Option<(String, f64)> = None;
    for line in runs.lines().skip(2) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0] != "bcfw-u-els" {
            continue;
        }
        let key = format!("{}-{}-{}", fields[0], fields[1], fields[2]);
        let objective: f64 = fields[4].parse().unwrap();
        if let Some((prev_key, prev_obj)) = &last {
            if *prev_key == key {
                assert!(
                    objective <= prev_obj + 1e-12,
                    "ELS objective increased within {key}"
                );
            }
        }
        last = Some((key, objective));
    }

    // byte-identical across invocations and pool sizes
    let out = run(srot().args(args(&dir.join("y"), "4")));
    assert_eq!(out.status.code(), Some(0));
    for file in ["bench_runs.csv", "bench_aggregate.csv", "bench_medians.csv"] {
        assert_eq!(
            read(&dir.join("x").join(file)),
            read(&dir.join("y").join(file)),
            "{file} differs across invocations"
        );
    }
    std::fs::remove_dir_all(&dir).ok();
}

fn write_ppm_file(path: &Path, img: &color::RgbImage) {
    let mut bytes = Vec::new();
    color::write_ppm(img, &mut bytes).unwrap();
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn transfer_identity_and_lp_agreement() {
    let dir = temp_dir("transfer");
    let (src_img, ref_img) = color::synth_three_color();
    write_ppm_file(&dir.join("src.ppm"), &src_img);
    write_ppm_file(&dir.join("ref.ppm"), &ref_img);

    // src = ref: output equals the quantized source exactly
    let out = run(srot().args([
        "transfer",
        dir.join("src.ppm").to_str().unwrap(),
        dir.join("src.ppm").to_str().unwrap(),
        "--k",
        "3",
        "--lambda",
        "1e-3",
        "--step",
        "els",
        "--eps",
        "1e-10",
        "--max-epochs",
        "100000",
        "--seed",
        "5",
        "--out",
        dir.join("self.ppm").to_str().unwrap(),
    ]));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let self_out = std::fs::read(dir.join("self.ppm")).unwrap();
    let src_bytes = std::fs::read(dir.join("src.ppm")).unwrap();
    assert_eq!(self_out, src_bytes, "self-transfer moved pixels");

    // three-color pair at the LP-like lambda: the output matches recoloring
    // through the exact LP plan pixel for pixel
    let out = run(srot().args([
        "transfer",
        dir.join("src.ppm").to_str().unwrap(),
        dir.join("ref.ppm").to_str().unwrap(),
        "--k",
        "3",
        "--lambda",
        "1e-3",
        "--sampling",
        "permutation",
        "--step",
        "els",
        "--eps",
        "1e-12",
        "--max-epochs",
        "200000",
        "--seed",
        "5",
        "--out",
        dir.join("out.ppm").to_str().unwrap(),
    ]));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // oracle path: same quantization seeds as the CLI, LP plan, project,
    // recolor
    let src_q = color::kmeans_quantize(&src_img, 3, 5, 200)
        .unwrap()
        .quantized;
    let ref_q = color::kmeans_quantize(&ref_img, 3, 6, 200)
        .unwrap()
        .quantized;
    let cost = color::build_cost(&src_q, &ref_q);
    let lp =
        srot::baselines::lp_transport_solve(&cost, &src_q.histogram, &ref_q.histogram).unwrap();
    let lp_plan =
        srot::problem::TransportPlan::from_matrix(lp.plan.clone(), ref_q.histogram.clone())
            .unwrap();
    let projected =
        color::barycentric_project(&lp_plan, &src_q.centroids, &ref_q.centroids).unwrap();
    let expected = color::recolor(&src_q, &projected.centroids).unwrap();
    let mut expected_bytes = Vec::new();
    color::write_ppm(&expected, &mut expected_bytes).unwrap();
    let actual = std::fs::read(dir.join("out.ppm")).unwrap();
    assert_eq!(
        actual, expected_bytes,
        "transfer output differs from LP recoloring"
    );

    // k = 1 gives a constant image at the reference mean color
    let out = run(srot().args([
        "transfer",
        dir.join("src.ppm").to_str().unwrap(),
        dir.join("ref.ppm").to_str().unwrap(),
        "--k",
        "1",
        "--lambda",
        "1e-3",
        "--out",
        dir.join("k1.ppm").to_str().unwrap(),
    ]));
    assert_eq!(out.status.code(), Some(0));
    let k1 = std::fs::read(dir.join("k1.ppm")).unwrap();
    let body = &k1[k1.len() - 300..];
    let first = [body[0], body[1], body[2]];
    assert!(
        body.chunks(3).all(|c| c == first),
        "k=1 output not constant"
    );
    let ref_q1 = color::kmeans_quantize(&ref_img, 1, 6, 200)
        .unwrap()
        .quantized;
    let mean = ref_q1.centroids[0];
    for ch in 0..3 {
        let expected = (mean[ch] * 255.0).round() as u8;
        assert_eq!(first[ch], expected, "k=1 color is not the reference mean");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn transfer_snapshots_are_written() {
    let dir = temp_dir("snap");
    let (src_img, ref_img) = color::synth_three_color();
    write_ppm_file(&dir.join("src.ppm"), &src_img);
    write_ppm_file(&dir.join("ref.ppm"), &ref_img);
    let out = run(srot().args([
        "transfer",
        dir.join("src.ppm").to_str().unwrap(),
        dir.join("ref.ppm").to_str().unwrap(),
        "--k",
        "3",
        "--lambda",
        "1e-6",
        "--sampling",
        "permutation",
        "--step",
        "dec",
        "--max-epochs",
        "200",
        "--snapshots",
        "1,50",
        "--out",
        dir.join("out.ppm").to_str().unwrap(),
    ]));
    assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
    assert!(dir.join("out_epoch1.ppm").exists());
    assert!(dir.join("out_epoch50.ppm").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_passes_and_detects_injected_fault() {
    let ok = run(srot().args(["verify", "--seeds", "8", "--sizes", "2..4"]));
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stdout)
    );
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("gap-equivalence"));
    assert!(stdout.contains("PASS"));

    let bad = run(srot().args([
        "verify",
        "--seeds",
        "8",
        "--sizes",
        "2..4",
        "--perturb-gradient",
    ]));
    assert_eq!(bad.status.code(), Some(1), "fault injection went unnoticed");
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert!(stdout.contains("FAIL"));
}

#[test]
fn config_file_precedence() {
    let dir = temp_dir("config");
    std::fs::write(
        dir.join("run.conf"),
        "lambda = 1e-1\nm = 4\nn = 4\ngen = random\nseed = 2\nmax-epochs = 50\n",
    )
    .unwrap();
    // config supplies everything; the lambda flag overrides the file
    let out = run(srot().args([
        "solve",
        "--config",
        dir.join("run.conf").to_str().unwrap(),
        "--lambda",
        "1e-2",
        "--no-lp",
        "--out",
        dir.join("out").to_str().unwrap(),
    ]));
    assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.join("out/summary.json"))).unwrap();
    assert_eq!(summary["lambda"].as_f64().unwrap(), 1e-2);
    assert_eq!(summary["m"].as_u64().unwrap(), 4);
    assert_eq!(summary["max_epochs"].as_u64().unwrap(), 50);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn saved_instances_can_be_resolved_again() {
    let dir = temp_dir("instance");
    let out = run(srot().args([
        "solve",
        "--gen",
        "random",
        "--m",
        "5",
        "--n",
        "5",
        "--lambda",
        "5e-2",
        "--step",
        "els",
        "--eps",
        "1e-7",
        "--seed",
        "11",
        "--save-instance",
        "--out",
        dir.join("a").to_str().unwrap(),
    ]));
    assert_eq!(out.status.code(), Some(0));
    let out = run(srot().args([
        "solve",
        "--instance",
        dir.join("a/instance.txt").to_str().unwrap(),
        "--lambda",
        "5e-2",
        "--step",
        "els",
        "--eps",
        "1e-7",
        "--seed",
        "11",
        "--out",
        dir.join("b").to_str().unwrap(),
    ]));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // the instance digest pins both runs to the same problem, so the
    // artifacts match exactly
    assert_eq!(read(&dir.join("a/plan.txt")), read(&dir.join("b/plan.txt")));
    let a: serde_json::Value = serde_json::from_str(&read(&dir.join("a/summary.json"))).unwrap();
    let b: serde_json::Value = serde_json::from_str(&read(&dir.join("b/summary.json"))).unwrap();
    assert_eq!(a["instance_digest"], b["instance_digest"]);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn report_aggregates_bench_runs() {
    let dir = temp_dir("report");
    let out = run(srot().args([
        "bench",
        "--m",
        "5",
        "--n",
        "5",
        "--lambdas",
        "1e-2",
        "--algos",
        "bcfw-u-els,pgd",
        "--seeds",
        "3",
        "--max-epochs",
        "30",
        "--out",
        dir.join("b").to_str().unwrap(),
    ]));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = run(srot().args([
        "report",
        "--runs",
        dir.join("b/bench_runs.csv").to_str().unwrap(),
        "--out",
        dir.join("r").to_str().unwrap(),
        "--svg",
    ]));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = read(&dir.join("r/report.csv"));
    assert!(report.starts_with("# schema: srot-report-v1"));
    assert!(report.lines().count() > 10);
    assert!(dir.join("r/report_gap.svg").exists());
    std::fs::remove_dir_all(&dir).ok();
}
