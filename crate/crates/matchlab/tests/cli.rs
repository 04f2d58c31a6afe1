use std::path::Path;
use std::process::{Command, Output};

use matchlab::{execute, Experiment, PartialConfig};

fn matchlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matchlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn same_config_gives_identical_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "3", "1"].into_iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let o = matchlab(&[
            "f_bi",
            "--d",
            "2",
            "--scales",
            "3,4",
            "--replicates",
            "6",
            "--seed",
            "11",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(out.join("f_bi.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn invalid_input_exits_with_two_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = matchlab(&[
        "tails",
        "--replicates",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`replicates`"));

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"experiment": "tails", "replicas": 10}"#).unwrap();
    let o = matchlab(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = matchlab(&["monotone", "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`p`"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("tails.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"experiment": "tails", "scales": [50], "replicates": 500, "master_seed": 3, "output_path": {:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = matchlab(&[
        "--config",
        cfg.to_str().unwrap(),
        "--replicates",
        "200",
        "--seed",
        "9",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&read(&out.join("tails.json"))).unwrap();
    assert_eq!(summary["config"]["replicates"], 200);
    assert_eq!(summary["config"]["master_seed"], 9);
    assert_eq!(summary["config"]["scales"], serde_json::json!([50.0]));
    for key in ["aggregates", "assertions", "runtime_seconds", "version"] {
        assert!(summary.get(key).is_some(), "summary lacks {key}");
    }
    assert!(summary["assertions"][0]["passed"].as_bool().unwrap());
    let csv = read(&out.join("tails.csv"));
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(6) == Some("9")));
}

#[test]
fn positional_and_flag_experiment_must_agree() {
    let o = matchlab(&["tails", "--experiment", "rates"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn csv_schema_is_fixed_per_experiment() {
    let small: &[(Experiment, &[f64], usize)] = &[
        (Experiment::Rates, &[8.0, 16.0, 32.0], 3),
        (Experiment::FRef, &[2.0], 2),
        (Experiment::FBi, &[3.0], 6),
        (Experiment::Bracket, &[1.0, 2.0], 2),
        (Experiment::SubaddCert, &[2.0], 2),
        (Experiment::PdeBound, &[2.0], 2),
        (Experiment::GridDefect, &[4.0, 6.0], 2),
        (Experiment::Depoisson, &[2.0, 3.0], 2),
        (Experiment::Tails, &[20.0], 200),
        (Experiment::Monotone, &[2.0, 4.0], 3),
        (Experiment::Concentration, &[4.0, 8.0], 3),
    ];
    for &(experiment, scales, replicates) in small {
        let d = match experiment {
            Experiment::Rates => 1,
            Experiment::GridDefect => 3,
            _ => 2,
        };
        let config = PartialConfig {
            experiment: Some(experiment),
            d: Some(d),
            scales: Some(scales.to_vec()),
            replicates: Some(replicates),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        let out = execute(&config).unwrap_or_else(|e| panic!("{experiment}: {e}"));
        let csv = out.table.to_csv();
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(
            &header[..8],
            &[
                "experiment",
                "d",
                "p",
                "scale",
                "kind",
                "replicate",
                "seed",
                "value"
            ]
        );
        assert_eq!(header.len(), 8 + out.table.aux_columns.len());
        let mut rows = 0;
        for line in lines {
            rows += 1;
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), header.len(), "{experiment}: {line}");
            assert_eq!(fields[0], experiment.name());
            for f in fields.iter().skip(7).filter(|f| !f.is_empty()) {
                assert!(
                    f.parse::<f64>().unwrap().is_finite(),
                    "{experiment}: {line}"
                );
            }
        }
        assert!(rows > 0, "{experiment} wrote no rows");
        assert!(!csv.contains('\r'));
    }
}
