use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hsl-elicit");

const CONFIG: &str = r#"
objects = ["Lemon", "Grass"]
method = ["mcmc", "gibbs"]

[sampler]
iterations = 40
seed = 9

[[target.components]]
weight = 1.0
mean = [80, 60, 45]
stddev = [15, 10, 10]
"#;

fn hsl_elicit(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(cwd).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    dir
}

fn run(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", "run.toml", "--out", "out"];
    args.extend_from_slice(extra);
    hsl_elicit(&args, dir)
}

#[test]
fn run_writes_logs_and_prints_a_summary() {
    let dir = setup();
    let o = run(dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("chains: 16 (16 complete)"), "{out}");
    assert!(out.contains("R-hat"));
    assert!(out.contains("Lemon"));
    let logs = dir.path().join("out/logs");
    assert!(logs.join("lemon/mcmc/chain-0.jsonl").exists());
    assert!(logs.join("grass/gibbs/chain-3.jsonl").exists());
    assert!(dir.path().join("out/report.csv").exists());
    assert!(dir.path().join("out/figures/rhat_gibbs.png").exists());
}

#[test]
fn seed_method_and_object_flags_override_the_config() {
    let dir = setup();
    assert!(run(dir.path(), &[]).status.success());
    let first = std::fs::read(dir.path().join("out/logs/lemon/mcmc/chain-0.jsonl")).unwrap();
    let o = run(dir.path(), &["--seed", "10", "--method", "mcmc", "--object", "Lemon"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("chains: 4 (4 complete)"));
    let second = std::fs::read(dir.path().join("out/logs/lemon/mcmc/chain-0.jsonl")).unwrap();
    assert_ne!(first, second);
}

#[test]
fn bad_method_flag_lists_the_valid_ones() {
    let dir = setup();
    let o = run(dir.path(), &["--method", "hmc"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    for m in ["direct_prompting", "direct_sampling", "mcmc", "gibbs"] {
        assert!(err.contains(m), "{err}");
    }
}

#[test]
fn diagnose_reports_rhat_and_refuses_a_single_chain() {
    let dir = setup();
    assert!(run(dir.path(), &[]).status.success());
    let o = hsl_elicit(&["diagnose", "out/logs/lemon/gibbs", "--out", "diag"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("gibbs"));
    assert!(dir.path().join("diag/rhat/lemon_gibbs.csv").exists());

    let o = hsl_elicit(&["diagnose", "out/logs/lemon/gibbs/chain-0.jsonl"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("at least 2"), "{}", stderr(&o));
}

#[test]
fn diagnose_warns_on_config_drift() {
    let dir = setup();
    assert!(run(dir.path(), &[]).status.success());
    std::fs::write(dir.path().join("other.toml"), CONFIG.replace("seed = 9", "seed = 8")).unwrap();
    let o = hsl_elicit(&["diagnose", "out/logs", "--config", "other.toml"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
    let o = hsl_elicit(&["diagnose", "out/logs", "--config", "run.toml"], dir.path());
    assert!(!stderr(&o).contains("warning"));
}

#[test]
fn report_needs_a_reference() {
    let dir = setup();
    assert!(run(dir.path(), &[]).status.success());
    let o = hsl_elicit(&["report", "out/logs"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no reference histogram"), "{}", stderr(&o));

    let o = hsl_elicit(
        &["report", "out/logs", "--reference", "out/references", "--hue-metric", "circular", "--out", "rep"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("circular hue"));
    let csv = std::fs::read_to_string(dir.path().join("rep/report.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "object,mcmc_hellinger,mcmc_mode,gibbs_hellinger,gibbs_mode");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn render_draws_figures_from_logs() {
    let dir = setup();
    assert!(run(dir.path(), &[]).status.success());
    let o = hsl_elicit(&["render", "out/logs", "--method", "mcmc", "--out", "fig"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["strip_grass_mcmc.png", "scatter_lemon_mcmc.png", "rhat_mcmc.png"] {
        assert!(dir.path().join("fig/figures").join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("fig/figures/strip_grass_gibbs.png").exists());
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = hsl_elicit(&["frobnicate"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    let o = hsl_elicit(&["run", "--config", "x.toml", "--bogus"], dir.path());
    assert!(!o.status.success());
    let o = hsl_elicit(&["run", "--config", "missing.toml"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("missing.toml"));
    assert!(hsl_elicit(&["--help"], dir.path()).status.success());
}

#[test]
fn llm_config_without_endpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("llm.toml"), "[respondent]\nkind = \"llm\"\nmodel = \"gpt-4\"\n").unwrap();
    let o = hsl_elicit(&["run", "--config", "llm.toml"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("endpoint"));
}
