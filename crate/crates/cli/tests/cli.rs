use std::process::{Command, Output};

use cyclicity::criterion::Verdict;
use cyclicity_cli::report::{Cell, Table};
use cyclicity_cli::{emit_report, parse_report, run_command, Format};

const LOG1: &str = r#"{"family":"log_power","alpha":1}"#;
const CANTOR30: &str = r#"{"kind":"cantor","depth":30}"#;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclicity")).args(args).output().expect("binary runs")
}

fn cli_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclicity")).args(args).env(key, value).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn cantor_alpha_one_is_divergent() {
    let o = cli(&["criterion", "analyze", "--weight", LOG1, "--set", CANTOR30, "--checkpoints", "29"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = parse_report(&o.stdout).unwrap();
    assert_eq!(report.command, "criterion analyze");
    assert_eq!(report.verdict.unwrap().headline, Some(Verdict::Divergent));
    assert_eq!(report.payload.summary["VERDICT"], Cell::text("divergent"));
    assert_eq!(report.payload.summary["FORMS_AGREE"], Cell::Bool(true));
    let arcs = &report.payload.tables[0];
    assert_eq!(arcs.header, ["a", "b", "class", "contribution"]);
    assert!(!arcs.rows.is_empty());
}

#[test]
fn analyze_csv_lists_classified_arcs() {
    let o = cli(&["criterion", "analyze", "--weight", LOG1, "--set", r#"{"kind":"geometric"}"#, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a,b,class,contribution"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 4);
    assert!(["short", "intermediate", "long"].contains(&first[2]), "{first:?}");
    assert!(text.contains("\nVERDICT "));
}

#[test]
fn missing_weight_is_a_usage_error() {
    let o = cli(&["criterion", "analyze", "--set", CANTOR30]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--weight") && err.contains("Usage"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_json_and_bad_configs_are_usage_errors() {
    assert_eq!(cli(&["criterion", "analyze", "--weight", "{", "--set", CANTOR30]).status.code(), Some(1));
    let unknown_family = r#"{"family":"exp","alpha":1}"#;
    assert_eq!(cli(&["criterion", "analyze", "--weight", unknown_family, "--set", CANTOR30]).status.code(), Some(1));
    assert_eq!(cli(&[]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"run": {"command": "sigma", "profile": {"variant": "sector", "phi": "zero"}, "rho": [10], "seed": 1}}"#)
        .unwrap();
    assert_eq!(cli(&["--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(cli(&["scan", "--theorem", "teo3", "--alpha-from", "1", "--alpha-to", "2", "--step", "0"]).status.code(), Some(1));
    assert_eq!(cli_env(&["sigma", "--profile", r#"{"variant":"sector","phi":"zero"}"#, "--rho", "10"], "CYCLICITY_THREADS", "x").status.code(), Some(1));
}

#[test]
fn numeric_and_io_failures_exit_2() {
    // A depth-3 Cantor set cannot resolve the gaps the criterion needs.
    let o = cli(&["criterion", "analyze", "--weight", LOG1, "--set", r#"{"kind":"cantor","depth":3}"#]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let o = cli(&["sigma", "--profile", r#"{"variant":"sector","phi":"zero"}"#, "--rho", "10", "--output", "/nonexistent/dir/out.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strict_scan_at_the_cantor_threshold_exits_3() {
    let args = ["scan", "--theorem", "teo3", "--alpha-from", "1.45", "--alpha-to", "1.47", "--step", "0.01"];
    let relaxed = cli(&args);
    assert_eq!(relaxed.status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict-verdict");
    let o = cli(&strict);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(o.stdout, relaxed.stdout);
    // Away from the threshold strict mode changes nothing.
    let o = cli(&["scan", "--theorem", "teo3", "--alpha-from", "1", "--alpha-to", "1.2", "--step", "0.2", "--strict-verdict"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn teo3_scan_rows_agree_with_the_oracle() {
    let o = cli(&["scan", "--theorem", "teo3", "--alpha-from", "1.0", "--alpha-to", "2.0", "--step", "0.2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,fitted_exponent,verdict,oracle,agree");
    assert_eq!(lines.len(), 7);
    for l in &lines[1..] {
        assert!(l.ends_with(",true"), "{l}");
    }
    assert!(lines[1].starts_with("1,0.31"), "{}", lines[1]);
}

#[test]
fn empty_scan_range_gives_header_only() {
    let o = cli(&["scan", "--theorem", "teo3", "--alpha-from", "2", "--alpha-to", "1", "--step", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "alpha,fitted_exponent,verdict,oracle,agree\n");
}

#[test]
fn same_config_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let cfg = dir.path().join("cfg.json");
    let o = cli(&[
        "hm-mc",
        "--paths",
        "20000",
        "--seed",
        "7",
        "--rho",
        "4,8",
        "--format",
        "json",
        "--output",
        a.to_str().unwrap(),
        "--save-config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = cli_env(&["--config", cfg.to_str().unwrap(), "--output", b.to_str().unwrap()], "CYCLICITY_THREADS", "3");
    assert_eq!(o.status.code(), Some(0));
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!x.is_empty());
    assert_eq!(x, y);
    // A different seed changes the payload.
    let c = cli(&["hm-mc", "--paths", "20000", "--seed", "8", "--rho", "4,8", "--format", "json"]);
    assert_ne!(c.stdout, x);
}

#[test]
fn config_hash_ignores_output_and_tracks_parameters() {
    let base = ["sigma", "--profile", r#"{"variant":"cartesian","phi":"x"}"#, "--rho", "10,100", "--format", "json"];
    let r1 = parse_report(&cli(&base).stdout).unwrap();
    let mut csv = base.to_vec();
    csv[6] = "csv";
    let r2 = run_command(std::iter::once("cyclicity").chain(csv)).report.unwrap();
    assert_eq!(r1.config_hash, r2.config_hash);
    let mut other = base.to_vec();
    other[4] = "10,1000";
    let r3 = parse_report(&cli(&other).stdout).unwrap();
    assert_ne!(r1.config_hash, r3.config_hash);
    assert_eq!(r1.config_hash.len(), 64);
}

#[test]
fn json_reports_round_trip() {
    let runs: [&[&str]; 4] = [
        &["criterion", "analyze", "--weight", LOG1, "--set", r#"{"kind":"beta","beta":0.25}"#],
        &["aux", "verify-lemma", "--weight", LOG1, "--set", r#"{"kind":"point"}"#, "--grid", "3"],
        &["scan", "--theorem", "teo2", "--alpha-from", "1", "--alpha-to", "2", "--step", "1", "--beta", "0,0.5"],
        &["gamma", "--weight", LOG1, "--set", CANTOR30, "--theta", "0.1,-1e-3", "--timing"],
    ];
    for args in runs {
        let argv: Vec<&str> = std::iter::once("cyclicity").chain(args.iter().copied()).chain(["--format", "json"]).collect();
        let out = run_command(argv);
        assert_eq!(out.code, 0, "{args:?}");
        let report = out.report.unwrap();
        let bytes = emit_report(&report, Format::Json).unwrap();
        assert_eq!(bytes, out.stdout);
        assert_eq!(parse_report(&bytes).unwrap(), report, "{args:?}");
    }
}

#[test]
fn lemma_csv_ends_with_sup_line() {
    let o = cli(&["aux", "verify-lemma", "--weight", LOG1, "--set", r#"{"kind":"full"}"#, "--a", "0.1", "--A", "1000", "--grid", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("lambda_re,lambda_im,z_re,z_im,H,case_tag\n"));
    let sup = text.lines().find_map(|l| l.strip_prefix("SUP_H ")).unwrap();
    let sup: f64 = sup.parse().unwrap();
    assert!(sup.is_finite());
}

#[test]
fn keldysh_recipe_records_amplitude() {
    let o = cli(&["aux", "keldysh"]);
    assert_eq!(o.status.code(), Some(0));
    let r = parse_report(&o.stdout).unwrap();
    assert_eq!(r.payload.summary["AMPLITUDE"], Cell::Num(4.0));
    assert_eq!(r.payload.summary["HOLDS"], Cell::Bool(true));
    assert_eq!(cli(&["aux", "keldysh"]).stdout, o.stdout);
}

#[test]
fn gamma_rows_carry_certificates() {
    let o = cli(&["gamma", "--weight", LOG1, "--set", r#"{"kind":"point"}"#, "--theta", "0.01,-0.2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,gamma,residual,R,phi");
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[2] <= 1e-12 * f[1], "{l}");
    }
}

#[test]
fn help_and_version_exit_0() {
    let o = cli(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("criterion"));
    let o = cli(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn csv_emits_first_table_only() {
    let out = run_command(["cyclicity", "criterion", "analyze", "--weight", LOG1, "--set", r#"{"kind":"point"}"#]);
    let mut report = out.report.unwrap();
    report.payload.tables.insert(0, Table::new("empty", &["x"]));
    report.payload.summary.clear();
    assert_eq!(emit_report(&report, Format::Csv).unwrap(), b"x\n");
}
