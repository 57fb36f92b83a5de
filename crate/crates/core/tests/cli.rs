use std::path::Path;
use std::process::{Command, Output};

fn msfair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msfair"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{
  "scenario": "p_fair_auction",
  "seeds": [1, 2],
  "generator": {"n_consumers": 60, "n_providers": 10, "n_items": 120, "interactions_per_consumer": 8},
  "auction": {"k_auction": 2}
}"#;

#[test]
fn version_and_help_exit_zero() {
    let out = msfair(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
    assert_eq!(msfair(&["--help"]).status.code(), Some(0));
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = msfair(&[
        "run",
        "--config",
        &config,
        "--out",
        out_dir.to_str().unwrap(),
        "--seeds",
        "3,4,5",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "metrics.csv",
        "metrics_summary.csv",
        "provider_exposure.csv",
        "slates.csv",
        "auction_log.csv",
        "run_manifest.json",
    ] {
        assert!(out_dir.join(name).is_file(), "{name}");
    }
    let metrics = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    let seeds: Vec<&str> = metrics
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(seeds, ["3", "4", "5"]);

    let again = dir.path().join("again");
    msfair(&[
        "run",
        "--config",
        &config,
        "--out",
        again.to_str().unwrap(),
        "--seeds",
        "3,4,5",
    ]);
    for name in ["metrics.csv", "slates.csv", "auction_log.csv"] {
        assert_eq!(
            std::fs::read(out_dir.join(name)).unwrap(),
            std::fs::read(again.join(name)).unwrap()
        );
    }
}

#[test]
fn config_errors_exit_one_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"scenario": "baseline", "seeds": [1], "generator": {"rho_p": 1.5}}"#,
    );
    let out = msfair(&[
        "run",
        "--config",
        &config,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("generator.rho_p"));

    let config = write_config(
        dir.path(),
        r#"{"scenario": "baseline", "seeds": [1], "colour": 1}"#,
    );
    let out = msfair(&[
        "run",
        "--config",
        &config,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    assert_eq!(msfair(&["run"]).status.code(), Some(1));
    assert_eq!(msfair(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn io_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    assert_eq!(
        msfair(&["run", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let config = write_config(dir.path(), SMALL);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = msfair(&[
        "run",
        "--config",
        &config,
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_exports_marketplace_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("market");
    let out = msfair(&[
        "gen",
        "--config",
        &config,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for seed in [1, 2] {
        let d = out_dir.join(format!("seed_{seed}"));
        let consumers = std::fs::read_to_string(d.join("consumers.csv")).unwrap();
        assert_eq!(consumers.lines().count(), 61);
        let interactions = std::fs::read_to_string(d.join("interactions.csv")).unwrap();
        assert_eq!(interactions.lines().count(), 1 + 60 * 8);
        assert!(d.join("items.csv").is_file() && d.join("providers.csv").is_file());
    }
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = msfair::experiment::parse_config(&text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap();
        n += 1;
    }
    assert_eq!(n, 5);
}
