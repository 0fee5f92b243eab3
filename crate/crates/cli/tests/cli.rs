//! End-to-end tests driving the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn voter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voter"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn assert_ok(output: &Output) {
    assert!(
        output.status.success(),
        "command failed: {}\n{}",
        stdout(output),
        stderr(output)
    );
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

/// Data rows of a table, comment block and header skipped.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .filter(|line| !line.starts_with('#'))
        .skip(1)
        .map(|line| line.split('\t').map(str::to_string).collect())
        .collect()
}

fn generate_complete(dir: &Path, n: u32, z0: u32, z1: u32) -> String {
    let out = dir.join("net").to_string_lossy().into_owned();
    let output = voter(&[
        "generate", "complete",
        "--n", &n.to_string(), "--z0", &z0.to_string(), "--z1", &z1.to_string(),
        "--out-dir", &out,
    ]);
    assert_ok(&output);
    format!("{out}/network.txt")
}

#[test]
fn generate_writes_network_and_manifest() {
    let dir = TempDir::new().unwrap();
    let net = generate_complete(dir.path(), 4, 1, 1);
    let text = fs::read_to_string(&net).unwrap();
    assert!(text.starts_with("nodes 4\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("net/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["subcommand"], "generate");
    assert_eq!(manifest["parameters"]["n"], "4");
    assert_eq!(manifest["artifacts"][0], "network.txt");
}

#[test]
fn generate_is_reproducible_bit_for_bit() {
    let dir = TempDir::new().unwrap();
    let er = |out: &Path| {
        let output = voter(&[
            "generate", "er",
            "--n", "50", "--density", "0.2", "--z0", "5", "--z1", "5",
            "--weights", "exponential", "--seed", "7",
            "--out-dir", &out.to_string_lossy(),
        ]);
        assert_ok(&output);
        fs::read(out.join("network.txt")).unwrap()
    };
    assert_eq!(er(&dir.path().join("a")), er(&dir.path().join("b")));
}

#[test]
fn generate_requires_the_node_count() {
    let output = voter(&["generate", "er", "--density", "0.1"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn config_file_fills_defaults_but_flags_win() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("voter.json");
    fs::write(&config, r#"{ "seed": 7 }"#).unwrap();
    let gen = |args: &[&str], out: &str| {
        let mut full = vec![
            "generate", "er", "--n", "30", "--density", "0.2",
            "--out-dir", out,
        ];
        full.extend_from_slice(args);
        let output = voter(&full);
        assert_ok(&output);
        fs::read(Path::new(out).join("network.txt")).unwrap()
    };
    let dir_of = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let explicit = gen(&["--seed", "7"], &dir_of("a"));
    let configured = gen(&["--config", &config.to_string_lossy()], &dir_of("b"));
    assert_eq!(explicit, configured);
    let overridden = gen(&["--config", &config.to_string_lossy(), "--seed", "9"], &dir_of("c"));
    let direct = gen(&["--seed", "9"], &dir_of("d"));
    assert_eq!(overridden, direct);
    assert_ne!(explicit, overridden);
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("voter.json");
    fs::write(&config, r#"{ "sede": 7 }"#).unwrap();
    let output = voter(&[
        "generate", "complete", "--n", "4",
        "--config", &config.to_string_lossy(),
        "--out-dir", &dir.path().join("out").to_string_lossy(),
    ]);
    assert_eq!(exit_code(&output), 3);
}

#[test]
fn equilibrium_matches_the_complete_graph_closed_forms() {
    let dir = TempDir::new().unwrap();
    let net = generate_complete(dir.path(), 12, 3, 2);
    let out = dir.path().join("eq");
    let output = voter(&["equilibrium", "--network", &net, "--out-dir", &out.to_string_lossy()]);
    assert_ok(&output);
    let summary = rows(&out.join("summary.tsv"));
    let x_bar: f64 = summary[0][5].parse().unwrap();
    let sigma: f64 = summary[0][6].parse().unwrap();
    assert!((x_bar - 0.4).abs() < 1e-12, "x_bar = {x_bar}");
    assert!((sigma - 0.96).abs() < 1e-12, "sigma = {sigma}");
    assert_eq!(rows(&out.join("opinions.tsv")).len(), 12);
    // Every directed edge into a free node carries a q value.
    assert_eq!(rows(&out.join("activation.tsv")).len(), 7 * 11);
}

#[test]
fn equilibrium_distinguishes_parse_and_solver_failures() {
    let dir = TempDir::new().unwrap();
    let garbled = dir.path().join("garbled.txt");
    fs::write(&garbled, "nodes two\n").unwrap();
    let out = dir.path().join("out").to_string_lossy().into_owned();
    let output = voter(&["equilibrium", "--network", &garbled.to_string_lossy(), "--out-dir", &out]);
    assert_eq!(exit_code(&output), 3);

    // Structurally valid but with no committed influence anywhere: the
    // equilibrium is not unique, which is a numerical failure, not a parse one.
    let singular = dir.path().join("singular.txt");
    fs::write(&singular, "nodes 2\nnode 0 free\nnode 1 free\nedge 0 1 1\nedge 1 0 1\n").unwrap();
    let output = voter(&["equilibrium", "--network", &singular.to_string_lossy(), "--out-dir", &out]);
    assert_eq!(exit_code(&output), 4);
    assert!(stderr(&output).contains("influence"));
}

#[test]
fn simulate_reports_summary_against_theory() {
    let dir = TempDir::new().unwrap();
    let net = generate_complete(dir.path(), 20, 4, 4);
    let out = dir.path().join("sim");
    let output = voter(&[
        "simulate", "--network", &net,
        "--horizon", "300", "--burn-in", "100", "--sample-every", "10",
        "--seed", "3", "--out-dir", &out.to_string_lossy(),
    ]);
    assert_ok(&output);
    assert!(stdout(&output).contains("|rho_hat - rho|"));
    let trace = rows(&out.join("trace.tsv"));
    assert!(trace.len() > 10);
    let summary = rows(&out.join("summary.tsv"));
    let x_bar: f64 = summary[0][3].parse().unwrap();
    let x_bar_theory: f64 = summary[0][9].parse().unwrap();
    assert!((0.0..=1.0).contains(&x_bar));
    assert!((x_bar_theory - 0.5).abs() < 1e-12);
}

#[test]
fn simulate_aggregates_replicated_runs() {
    let dir = TempDir::new().unwrap();
    let net = generate_complete(dir.path(), 10, 2, 2);
    let out = dir.path().join("sim");
    let output = voter(&[
        "simulate", "--network", &net,
        "--horizon", "200", "--burn-in", "50", "--sample-every", "10",
        "--runs", "3", "--seed", "11", "--out-dir", &out.to_string_lossy(),
    ]);
    assert_ok(&output);
    assert_eq!(rows(&out.join("runs.tsv")).len(), 3);
    let summary = rows(&out.join("summary.tsv"));
    assert_eq!(summary[0][0], "3");
    assert!(!out.join("trace.tsv").exists());
}

#[test]
fn simulate_rejects_a_horizon_inside_the_burn_in() {
    let dir = TempDir::new().unwrap();
    let net = generate_complete(dir.path(), 10, 2, 2);
    let output = voter(&[
        "simulate", "--network", &net,
        "--horizon", "10", "--burn-in", "50",
        "--out-dir", &dir.path().join("sim").to_string_lossy(),
    ]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn optimize_balances_committed_masses() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p2");
    let output = voter(&[
        "optimize", "p2", "--n", "445", "--z0", "89", "--alpha", "0.5",
        "--out-dir", &out.to_string_lossy(),
    ]);
    assert_ok(&output);
    assert!(stdout(&output).contains("z1_star = 178"));
    let table = rows(&out.join("optimize.tsv"));
    assert_eq!(table[0][1], "178");
    assert_eq!(table[0][2], "178");
}

#[test]
fn optimize_needs_no_committed_voters_for_a_zero_target() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p1");
    let output = voter(&[
        "optimize", "p1", "--n", "100", "--z0", "10", "--lambda", "0",
        "--out-dir", &out.to_string_lossy(),
    ]);
    assert_ok(&output);
    assert_eq!(rows(&out.join("optimize.tsv"))[0][1], "0");
}

#[test]
fn optimize_rejects_backfire_of_one() {
    let output = voter(&["optimize", "p3", "--n", "100", "--z0", "10", "--alpha", "1.0"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn optimize_general_reaches_half_on_a_random_network() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("er").to_string_lossy().into_owned();
    let output = voter(&[
        "generate", "er", "--n", "60", "--density", "0.15", "--z0", "8", "--z1", "6",
        "--seed", "4", "--out-dir", &out,
    ]);
    assert_ok(&output);
    let gen = dir.path().join("gen");
    let output = voter(&[
        "optimize", "general", "--network", &format!("{out}/network.txt"),
        "--out-dir", &gen.to_string_lossy(),
    ]);
    assert_ok(&output);
    let summary = rows(&gen.join("summary.tsv"));
    assert_eq!(summary[0][3], "true");
    let x_bar: f64 = summary[0][0].parse().unwrap();
    assert!((x_bar - 0.5).abs() <= 1e-9);
    assert_eq!(rows(&gen.join("plan.tsv")).len(), 46);
}

#[test]
fn congress_estimate_recovers_the_bundled_counts() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("est");
    let output = voter(&["congress", "estimate", "--out-dir", &out.to_string_lossy()]);
    assert_ok(&output);
    assert!(stdout(&output).contains("D = 89, R = 63"));
    let estimate = rows(&out.join("estimate.tsv"));
    assert_eq!(estimate[0][0], "89");
    assert_eq!(estimate[0][1], "63");
    assert_eq!(estimate[0][5], "444");
}

#[test]
fn congress_rejects_a_zero_seat_congress() {
    let dir = TempDir::new().unwrap();
    let counts = dir.path().join("counts.tsv");
    fs::write(&counts, "1\t0\t5\t5\n2\t3\t4\t7\n").unwrap();
    let output = voter(&[
        "congress", "estimate", "--counts", &counts.to_string_lossy(),
        "--out-dir", &dir.path().join("out").to_string_lossy(),
    ]);
    assert_eq!(exit_code(&output), 3);
}

#[test]
fn congress_sweep_emits_four_rows_per_backfire_value() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep");
    let output = voter(&[
        "congress", "sweep", "--alphas", "0:0.2:0.1",
        "--out-dir", &out.to_string_lossy(),
    ]);
    assert_ok(&output);
    let table = rows(&out.join("sweep.tsv"));
    assert_eq!(table.len(), 12);
    for chunk in table.chunks(4) {
        let parties: Vec<&str> = chunk.iter().map(|r| r[1].as_str()).collect();
        let objectives: Vec<&str> = chunk.iter().map(|r| r[2].as_str()).collect();
        assert_eq!(parties, ["D", "D", "R", "R"]);
        assert_eq!(objectives, ["diversity", "activity", "diversity", "activity"]);
    }
    // Without backfire the diversity optimum balances the two parties.
    assert_eq!(table[0][0], "0");
    assert_eq!(table[0][3], "63");
    assert_eq!(table[2][3], "89");
}
