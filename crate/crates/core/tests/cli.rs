use std::process::{Command, Output};

fn nonlocal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn solve_prints_csv_and_exits_zero() {
    let out = nonlocal(&[
        "solve",
        "--benchmark",
        "ode1d",
        "--nodes",
        "21",
        "--order",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("nnode,dx,l2,umax_ratio_err,p,phg,runtime_s")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "21");
    assert_eq!(row[4], "2");
}

#[test]
fn out_directory_holds_report_fields_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = nonlocal(&[
        "solve",
        "--benchmark",
        "plate",
        "--nodes",
        "12",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["report.csv", "fields.txt", "convergence.log"] {
        assert!(out_dir.join(f).is_file(), "{f} missing");
    }
    let log = std::fs::read_to_string(out_dir.join("convergence.log")).unwrap();
    assert!(log.contains("center_deflection"));
}

#[test]
fn unwritable_output_is_io_error() {
    let out = nonlocal(&[
        "solve",
        "--benchmark",
        "ode1d",
        "--nodes",
        "21",
        "--out",
        "/dev/null/x",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bad_arguments_are_config_errors() {
    assert_eq!(code(&nonlocal(&["solve", "--benchmark", "nope"])), 2);
    assert_eq!(
        code(&nonlocal(&[
            "solve",
            "--benchmark",
            "ode1d",
            "--order",
            "zero"
        ])),
        2
    );
    assert_eq!(code(&nonlocal(&["solve"])), 2);
    assert_eq!(code(&nonlocal(&["frobnicate"])), 2);
    assert_eq!(
        code(&nonlocal(&[
            "solve",
            "--benchmark",
            "ode1d",
            "--config",
            "/nonexistent/run.cfg"
        ])),
        2
    );
    assert_eq!(code(&nonlocal(&["--help"])), 0);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# ladder rung\nbenchmark = ode1d\nnodes = 31\norder = 4\n",
    )
    .unwrap();
    let out = nonlocal(&["solve", "--config", cfg.to_str().unwrap(), "--nodes", "41"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let row = stdout(&out).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("41,"), "{row}");
    assert_eq!(row.split(',').nth(4), Some("4"));
}

#[test]
fn singular_support_and_inverted_element_exit_three() {
    let out = nonlocal(&[
        "solve",
        "--benchmark",
        "poisson2d-strong",
        "--nodes",
        "11",
        "--order",
        "4",
        "--neighbors",
        "14",
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("singular support"));
    let out = nonlocal(&[
        "solve",
        "--benchmark",
        "neo-hooke-block",
        "--nodes",
        "5",
        "--phg",
        "0",
        "--load-steps",
        "1",
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn newton_budget_exhaustion_exits_four() {
    let out = nonlocal(&[
        "solve",
        "--benchmark",
        "von-karman",
        "--nodes",
        "10",
        "--max-iter",
        "1",
    ]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn identical_runs_give_identical_csv() {
    let args = [
        "solve",
        "--benchmark",
        "poisson2d-strong",
        "--nodes",
        "15",
        "--order",
        "3",
        "--perturb",
        "0.4",
        "--seed",
        "9",
    ];
    let a = nonlocal(&args);
    let b = nonlocal(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = nonlocal(&[
        "solve",
        "--benchmark",
        "poisson2d-strong",
        "--nodes",
        "15",
        "--order",
        "3",
        "--perturb",
        "0.4",
        "--seed",
        "10",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn ladder_reports_slopes() {
    let out = nonlocal(&[
        "ladder",
        "--benchmark",
        "ode1d",
        "--orders",
        "2,4",
        "--nodes-list",
        "21,41,81",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 1 + 6);
    assert_eq!(
        stderr(&out).matches("fitted rate").count(),
        2,
        "{}",
        stderr(&out)
    );
}

#[test]
fn validate_checks_support_sizes_and_tags() {
    let ok = nonlocal(&["validate", "--benchmark", "plate", "--nodes", "20"]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("ok"));
    let warn = nonlocal(&[
        "validate",
        "--benchmark",
        "poisson2d",
        "--order",
        "3",
        "--neighbors",
        "5",
    ]);
    assert!(format!("{}{}", stdout(&warn), stderr(&warn)).contains("n_i >= n_p"));
}

#[test]
fn custom_problem_runs_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let n = 9;
    let mut pts = String::from("# dim 2\n");
    for a in 0..n {
        for b in 0..n {
            let (x, y) = (a as f64 / (n - 1) as f64, b as f64 / (n - 1) as f64);
            let edge = a == 0 || b == 0 || a == n - 1 || b == n - 1;
            pts.push_str(&format!(
                "{x} {y} 0.015625 {}\n",
                if edge { "edge" } else { "inside" }
            ));
        }
    }
    std::fs::write(dir.path().join("sq.pts"), pts).unwrap();
    let problem = dir.path().join("sq.problem");
    std::fs::write(
        &problem,
        "cloud = sq.pts\norder = 2\nterm = 2,0 1\nterm = 0,2 1\nsource = 4\ndirichlet = edge 0\n",
    )
    .unwrap();
    let out = nonlocal(&["solve", "--problem", problem.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    std::fs::write(
        &problem,
        "cloud = sq.pts\norder = 2\nterm = 2,0 1\ndirichlet = rim 0\n",
    )
    .unwrap();
    let out = nonlocal(&["validate", "--problem", problem.to_str().unwrap()]);
    assert_ne!(code(&out), 0);
    assert!(stderr(&out).contains("rim"), "{}", stderr(&out));
}
