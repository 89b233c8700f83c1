//! End-to-end tests driving the built binary.

use std::path::Path;
use std::process::{Command, Output};

fn sitem(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sitem"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn converge_csv_shape_and_byte_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "converge",
        "--model",
        "exp-psych",
        "--scheme",
        "milstein",
        "--levels",
        "4:6",
        "--ref-level",
        "8",
        "--paths",
        "40",
        "--seed",
        "7",
        "--out",
        "r.csv",
    ];
    let out = sitem(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(dir.path().join("r.csv")).unwrap();

    let lines: Vec<String> = String::from_utf8(first.clone())
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert!(lines[0].starts_with("# converge model=exp-psych scheme=milstein"));
    assert_eq!(lines[1], "scheme,model,level,h,m_paths,err_sup_l2,err_T_l2");
    assert_eq!(lines.len(), 2 + 3 + 1, "3 level rows plus slope footer");
    assert!(lines[5].starts_with("milstein,exp-psych,fit,,40,"));

    // identical command line => byte-identical output
    let out2 = sitem(&args, dir.path());
    assert!(out2.status.success());
    let second = std::fs::read(dir.path().join("r.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn svg_output_is_standalone() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitem(
        &[
            "converge", "--model", "lorenz", "--scheme", "euler", "--levels", "3:5",
            "--ref-level", "7", "--paths", "20", "--out", "r.csv", "--svg", "r.svg",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.path().join("r.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn no_arguments_prints_usage_and_misuse_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitem(&[], dir.path());
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage"), "{text}");
}

#[test]
fn zero_paths_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitem(
        &["converge", "--model", "lorenz", "--scheme", "euler", "--paths", "0"],
        dir.path(),
    );
    assert!(!out.status.success());
}

#[test]
fn unknown_model_and_scheme_fail_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitem(&["converge", "--model", "nope", "--scheme", "euler"], dir.path());
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("unknown model"), "{text}");

    let out = sitem(&["converge", "--model", "lorenz", "--scheme", "rk4"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scheme"));
}

#[test]
fn order_constraint_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitem(
        &[
            "converge", "--model", "exp-psych", "--scheme", "milstein", "--delta", "3",
            "--paths", "10",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("delta - 2*theta"), "{text}");
}

#[test]
fn order15_on_commutative_noise_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitem(
        &["converge", "--model", "lotka-volterra", "--scheme", "order15", "--paths", "10"],
        dir.path(),
    );
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("order15"), "{text}");
}

#[test]
fn config_file_with_flag_override_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"model": "exp-psych", "scheme": "euler", "levels": "3:4", "ref_level": 6,
            "paths": 10, "seed": 5, "beta": 0.4, "out": "from_config.csv"}"#,
    )
    .unwrap();
    // flag overrides the config's scheme; config supplies the rest
    let out = sitem(
        &["converge", "--config", "cfg.json", "--scheme", "milstein"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("from_config.csv")).unwrap();
    assert!(csv.contains("scheme=milstein"), "flag must override config");
    assert!(csv.contains("seed=5"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"model": "lorenz", "pths": 7}"#).unwrap();
    let out = sitem(&["converge", "--config", "bad.json", "--scheme", "euler"], dir.path());
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("pths"), "{text}");
}

#[test]
fn model_parameter_not_used_by_model_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"model": "lorenz", "scheme": "euler", "friction": 2.0}"#,
    )
    .unwrap();
    let out = sitem(&["converge", "--config", "cfg.json"], dir.path());
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("friction"), "{text}");
}

#[test]
fn check_reports_exact_zero_for_additive_models() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitem(&["check", "--model", "lorenz"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("check lg_g: max rel err 0.000e0"), "{text}");
    assert!(text.contains("taming bound: 0 violations"), "{text}");
}

#[test]
fn expmoment_needs_a_built_in_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitem(
        &["expmoment", "--model", "langevin", "--levels", "4:5", "--paths", "50", "--out", "em.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("em.csv")).unwrap();
    assert!(csv.contains("model,scheme,level,estimate"));

    let out = sitem(&["expmoment", "--model", "lorenz"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("control pair"));
}

#[test]
fn simulate_dumps_grid_states() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitem(
        &[
            "simulate", "--model", "van-der-pol", "--scheme", "order15", "--level", "5",
            "--seed", "3", "--out", "p.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[1], "t,y1,y2");
    assert_eq!(lines.len(), 2 + 33, "header lines plus 2^5 + 1 states");
    assert!(lines[0].contains("tau_index="));
}

#[test]
fn baseline_em_table_via_converge() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"x0": [5.0]}"#).unwrap();
    let out = sitem(
        &[
            "converge", "--config", "cfg.json", "--model", "cubic", "--scheme", "baseline-em",
            "--levels", "3:4", "--paths", "100", "--out", "b.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert!(csv.contains("model,level,em_mean_sq,em_overflow,tamed_overflow"));
    let level3_row: Vec<&str> = csv.lines().find(|l| l.starts_with("cubic,3,")).unwrap().split(',').collect();
    let overflow: u64 = level3_row[3].parse().unwrap();
    assert!(overflow >= 1, "classical iteration must overflow at level 3 from x0=5");
    assert_eq!(level3_row[4], "0", "tamed scheme never overflows");
}

#[test]
fn threads_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "converge", "--model", "exp-psych", "--scheme", "euler", "--levels", "3:5",
        "--ref-level", "7", "--paths", "30", "--out", "a.csv",
    ];
    let out = sitem(&base, dir.path());
    assert!(out.status.success());
    let mut threaded = base.to_vec();
    threaded[base.len() - 1] = "b.csv";
    threaded.extend_from_slice(&["--threads", "1"]);
    let out = sitem(&threaded, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}
