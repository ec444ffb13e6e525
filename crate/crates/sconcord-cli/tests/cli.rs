//! End-to-end tests of the `sconcord` binary: artifact formats, exit codes,
//! determinism, and the report schema contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sconcord::report::{trace_header_line, TRACE_COLUMNS};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sconcord"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("binary runs")
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = run(args, dir);
    assert!(
        out.status.success(),
        "command {:?} failed with {:?}\nstdout: {}\nstderr: {}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref())
        .unwrap_or_else(|e| panic!("read {}: {e}", path.as_ref().display()))
}

#[test]
fn gen_is_idempotent_and_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(
        &["gen", "nmf_mse", "--m", "8", "--n", "5", "--r", "2", "--seed", "7", "--out", "a"],
        d,
    );
    run_ok(
        &["gen", "nmf_mse", "--m", "8", "--n", "5", "--r", "2", "--seed", "7", "--out", "b"],
        d,
    );
    assert_eq!(fs::read(d.join("a.json")).unwrap(), fs::read(d.join("b.json")).unwrap());
    assert_eq!(fs::read(d.join("a.scmx")).unwrap(), fs::read(d.join("b.scmx")).unwrap());
    let sidecar: serde_json::Value = serde_json::from_str(&read(d.join("a.json"))).unwrap();
    assert_eq!(sidecar["kind"], "nmf_mse");
    assert_eq!(sidecar["seed"], 7);
}

#[test]
fn gen_noiseless_kl_records_zero_hint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(
        &["gen", "nmf_kl", "--m", "6", "--n", "4", "--r", "2", "--noise", "0", "--seed", "3", "--out", "kl"],
        d,
    );
    let sidecar: serde_json::Value = serde_json::from_str(&read(d.join("kl.json"))).unwrap();
    assert_eq!(sidecar["kind"], "nmf_kl");
    assert_eq!(sidecar["optimal_value_hint"], 0.0);
}

#[test]
fn gen_rejects_inapplicable_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["gen", "log_barrier_demo", "--m", "8", "--seed", "1", "--out", "x"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--m does not apply"));
}

fn gen_barrier(d: &Path, dim: &str, seed: &str, out: &str) {
    run_ok(&["gen", "log_barrier_demo", "--dim", dim, "--seed", seed, "--out", out], d);
}

#[test]
fn rnm_trace_has_stable_schema_and_monotone_objective() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_barrier(d, "12", "3", "inst");
    run_ok(
        &["solve", "--instance", "inst", "--method", "rnm", "--seed", "1", "--deterministic"],
        d,
    );
    let trace = read(d.join("inst.rnm.trace.csv"));
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), trace_header_line());
    assert_eq!(lines.next().unwrap(), TRACE_COLUMNS.join(","));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.len() >= 5, "expected a multi-row trace");
    let mut prev_f = f64::INFINITY;
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), TRACE_COLUMNS.len());
        let f: f64 = row[1].parse().unwrap();
        assert!(f <= prev_f, "f rose at row {i}");
        prev_f = f;
        // One accepted step per non-terminal iteration; all wall fields
        // zeroed by --deterministic.
        let terminal = i + 1 == rows.len();
        assert_eq!(row[5], if terminal { "" } else { "true" });
        assert_eq!(*row.last().unwrap(), "0");
    }

    let report: serde_json::Value =
        serde_json::from_str(&read(d.join("inst.rnm.report.json"))).unwrap();
    assert_eq!(report["result"]["status"], "converged");
    assert!(report["result"]["gap"].as_f64().unwrap() < 1e-10);
}

#[test]
fn arm_newton_reaches_small_gap_on_the_desk_instance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(&["gen", "nmf_mse", "--seed", "7", "--out", "desk"], d);
    run_ok(
        &["solve", "--instance", "desk", "--method", "arm_newton", "--seed", "3", "--deterministic"],
        d,
    );
    let report: serde_json::Value =
        serde_json::from_str(&read(d.join("desk.arm_newton.report.json"))).unwrap();
    assert_eq!(report["result"]["status"], "converged");
    let gap = report["result"]["gap"].as_f64().unwrap();
    assert!(gap.abs() <= 1e-6, "gap {gap:e}");
    // Shipped adaptive-method hyperparameters are echoed.
    let cfg = &report["resolved_config"];
    assert_eq!(cfg["sigma0"], 1.0);
    assert_eq!(cfg["eta1"], 0.01);
    assert_eq!(cfg["eta2"], 0.9);
    assert_eq!(cfg["gamma1"], 0.5);
    assert_eq!(cfg["gamma2"], 2.0);
    assert_eq!(cfg["gamma3"], 2.0);
}

#[test]
fn incompatible_method_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(&["gen", "nmf_mse", "--m", "6", "--n", "4", "--r", "2", "--seed", "1", "--out", "z"], d);
    let out = run(&["solve", "--instance", "z", "--method", "newton_cg"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not applicable"));
}

#[test]
fn deterministic_solves_are_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_barrier(d, "10", "5", "inst");
    for tag in ["one", "two"] {
        run_ok(
            &[
                "solve", "--instance", "inst", "--method", "arm_newton", "--seed", "9",
                "--deterministic", "--report", &format!("{tag}.json"), "--trace",
                &format!("{tag}.csv"),
            ],
            d,
        );
    }
    assert_eq!(fs::read(d.join("one.json")).unwrap(), fs::read(d.join("two.json")).unwrap());
    assert_eq!(fs::read(d.join("one.csv")).unwrap(), fs::read(d.join("two.csv")).unwrap());
}

fn schema_validator() -> jsonschema::Validator {
    let schema: serde_json::Value = serde_json::from_str(&read(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/schema/report.schema.json"
    )))
    .unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(validator: &jsonschema::Validator, report: &serde_json::Value) {
    let errors: Vec<String> = validator.iter_errors(report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

#[test]
fn reports_validate_against_the_shipped_schema() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let validator = schema_validator();

    gen_barrier(d, "8", "2", "inst");
    for method in ["rnm", "newton_cg", "arm_negcurv"] {
        run_ok(
            &["solve", "--instance", "inst", "--method", method, "--seed", "4", "--deterministic"],
            d,
        );
        let report: serde_json::Value =
            serde_json::from_str(&read(d.join(format!("inst.{method}.report.json")))).unwrap();
        assert_valid(&validator, &report);
    }
}

#[test]
fn ippm_respects_its_recomputed_outer_budget() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Exercise the RunSpec-file route at the same time.
    fs::write(
        d.join("spec.json"),
        r#"{
  "problem": "phase_retrieval",
  "method": "ippm",
  "seed": 11,
  "generator": { "n": 4, "m": 12 },
  "outputs": { "report": "run.report.json", "trace": "run.trace.csv" }
}
"#,
    )
    .unwrap();
    run_ok(&["solve", "--spec", "spec.json", "--deterministic"], d);
    let report: serde_json::Value =
        serde_json::from_str(&read(d.join("run.report.json"))).unwrap();
    assert_valid(&schema_validator(), &report);
    let res = &report["result"];
    assert_eq!(res["status"], "converged");
    assert_eq!(res["certificate"], "early_exit_at_x0");
    let outer = res["outer_iterations"].as_u64().unwrap();
    let budget = res["outer_budget"].as_f64().unwrap();
    assert!((outer as f64) <= budget, "outer {outer} > budget {budget}");
    assert!(res["hvp_count"].as_u64().unwrap() > 0);
    assert!(res["final_nu"].as_f64().unwrap() <= 1e-3 * (1.0 + 1e-6));
}

#[test]
fn malformed_spec_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.json"), "{ \"problem\": \"nmf_mse\" }").unwrap();
    let out = run(&["solve", "--spec", "bad.json"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed run spec"));
}

#[test]
fn verify_passes_and_rejects_unknown_scopes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run_ok(&["verify", "scalar_identities"], d);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("all checks passed"), "stdout: {stdout}");
    assert!(stdout.contains("[PASS]"));

    let out = run(&["verify", "nonsense"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_aggregates_methods_and_joins_baselines() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let base = d.join("base");
    fs::create_dir(&base).unwrap();
    fs::write(base.join("lbfgsb_s0.csv"), "iter,f,wall_nanos\n0,5.0,100\n1,2.5,200\n2,1.0,300\n")
        .unwrap();
    fs::write(base.join("lbfgsb_s1.csv"), "iter,f,wall_nanos\n0,4.0,100\n1,2.0,150\n").unwrap();
    fs::write(base.join("broken.csv"), "not,a,baseline\n1,2\n").unwrap();

    let args = [
        "bench", "--problem", "log_barrier_demo", "--methods", "rnm,arm_newton", "--seeds", "2",
        "--dim", "6", "--max-iters", "60", "--deterministic", "--out-dir", "out",
        "--baseline-dir", "base",
    ];
    let out = run_ok(&args, d);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("skipping baseline"),
        "expected a warning for broken.csv"
    );

    let table = read(d.join("out/aggregate.csv"));
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "method,iter,runs,median_f,median_gap,median_wall_nanos");
    for label in ["rnm,", "arm_newton,", "lbfgsb,"] {
        assert!(table.lines().any(|l| l.starts_with(label)), "missing rows for {label}");
    }
    // Two baseline seeds join under one stripped label: median(5,4) = 4.5,
    // and the shorter run carries its last value forward.
    assert!(table.lines().any(|l| l == "lbfgsb,0,2,4.5,,100"));
    assert!(table.lines().any(|l| l == "lbfgsb,2,2,1.5,,225"));
    // Internal rows have a gap column (exact optimum recorded by gen).
    let rnm_row = table.lines().find(|l| l.starts_with("rnm,0,")).unwrap();
    assert!(!rnm_row.split(',').nth(4).unwrap().is_empty(), "rnm rows carry a gap");
    // Per-run artifacts exist.
    for name in
        ["log_barrier_demo_rnm_s0.report.json", "log_barrier_demo_arm_newton_s1.trace.csv"]
    {
        assert!(d.join("out").join(name).exists(), "missing artifact {name}");
    }

    // Identical grid → identical aggregate bytes.
    let args2: Vec<&str> =
        args.iter().map(|s| if *s == "out" { "out2" } else { *s }).collect();
    run_ok(&args2, d);
    assert_eq!(
        fs::read(d.join("out/aggregate.csv")).unwrap(),
        fs::read(d.join("out2/aggregate.csv")).unwrap()
    );
}

#[test]
fn thread_env_is_parsed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_barrier(d, "6", "1", "inst");
    let out = bin()
        .args(["solve", "--instance", "inst", "--method", "rnm", "--deterministic"])
        .env("SCONCORD_THREADS", "1")
        .current_dir(d)
        .output()
        .unwrap();
    assert!(out.status.success());

    let out = bin()
        .args(["verify", "scalar_identities"])
        .env("SCONCORD_THREADS", "many")
        .current_dir(d)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_scale_flag_switches_nmf_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(&["gen", "nmf_mse", "--full-scale", "--seed", "1", "--out", "big"], d);
    let sidecar: serde_json::Value = serde_json::from_str(&read(d.join("big.json"))).unwrap();
    assert_eq!(sidecar["m"], 100);
    assert_eq!(sidecar["n"], 20);
    assert_eq!(sidecar["r"], 10);
}
