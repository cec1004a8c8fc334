use toric_core::experiments::{run_convergence, run_distortion, run_property_suite, DistortionConfig, ExperimentConfig, Tag};

fn config(threads: usize) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"divisor": {{"fan": "P2", "ray_values": [0, 0, -1]}},
            "g0": {{"kind": "canonical"}}, "g1": {{"kind": "bergman"}},
            "k_schedule": [1, 2, 4], "threads": {threads}}}"#
    ))
    .unwrap()
}

fn without_runtime(csv: &str) -> Vec<String> {
    csv.lines().map(|l| l.rsplit_once(',').map_or(l, |(a, _)| a).to_string()).collect()
}

#[test]
fn csv_is_bitwise_identical_across_thread_counts() {
    let one = run_convergence(&config(1)).unwrap();
    let four = run_convergence(&config(4)).unwrap();
    assert_eq!(without_runtime(&one.csv()), without_runtime(&four.csv()));
    assert_eq!(one.summary.eeq_diff.to_bits(), four.summary.eeq_diff.to_bits());
}

#[test]
fn summary_embeds_a_reproducible_config() {
    let run = run_convergence(&config(2)).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&run.summary_json()).unwrap();
    let back: ExperimentConfig = serde_json::from_value(summary["config"].clone()).unwrap();
    assert_eq!(back.hash(), summary["config_hash"].as_str().unwrap());
    assert_eq!(summary["rows_completed"], 3);
    assert!(summary["tolerances"]["conjugate"].as_f64().unwrap() > 0.0);
    let again = run_convergence(&back).unwrap();
    assert_eq!(without_runtime(&again.csv()), without_runtime(&run.csv()));
}

#[test]
fn monge_ampere_measures_converge_on_the_plane() {
    let c = ExperimentConfig::from_json(
        r#"{"divisor": {"fan": "P2", "ray_values": [0, 0, -1]},
            "g0": {"kind": "canonical"}, "g1": {"kind": "bergman"},
            "mu0": {"kind": "monge-ampere", "metric": {"kind": "bergman"}},
            "k_schedule": [1, 2, 4, 8]}"#,
    )
    .unwrap();
    let run = run_convergence(&c).unwrap();
    assert!((run.summary.eeq_diff - 5.0 / 12.0).abs() < 1e-5);
    assert!(run.summary.trend_decreasing, "{}", run.csv());
}

#[test]
fn distortion_grid_and_verdicts() {
    let good: DistortionConfig = serde_json::from_str(
        r#"{"divisor": {"fan": "P1", "ray_values": [0, -1]}, "metric": {"kind": "canonical"},
            "ks": [1, 2, 4, 8, 16, 32, 64], "radius": 8, "steps": 40}"#,
    )
    .unwrap();
    let run = run_distortion(&good).unwrap();
    let m: Vec<f64> = run.report.rows.iter().map(|r| r.max_log_distortion).collect();
    assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
    assert!(run.report.verdict, "{:?}", run.report);
    assert!(run.csv().starts_with("k,u0,rho_value\n"));

    let bad: DistortionConfig = serde_json::from_str(
        r#"{"divisor": {"fan": "P1", "ray_values": [0, -1]}, "metric": {"kind": "canonical"},
            "measure": {"kind": "uniform-ball", "radius": 1}, "ks": [1, 2, 4, 8, 16], "radius": 8, "steps": 40}"#,
    )
    .unwrap();
    let run = run_distortion(&bad).unwrap();
    assert!(!run.report.verdict, "{:?}", run.report);
}

#[test]
fn property_suite_tags() {
    let rep = run_property_suite(&[Tag::Energy, Tag::Sections, Tag::Gram]);
    for c in &rep.checks {
        assert!(c.passed, "{c:?}");
    }
    assert!(rep.passed);
}
