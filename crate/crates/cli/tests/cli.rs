use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fk-ratchet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn cfrac_prints_golden_convergents() {
    let o = run(&["cfrac", "golden", "--max-terms", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("21/13"), "{text}");
}

#[test]
fn bound_reports_every_quantity() {
    let o = run(&["bound", "--rho", "34/55", "--tau", "1e8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for key in ["C_rho", "gamma", "theorem1_bound", "corollary_generic_bound", "optimal_tau", "golden_mean_bound"] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
}

#[test]
fn bad_arguments_exit_with_two() {
    assert_eq!(run(&["bound", "--rho", "1/0", "--tau", "10"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["speed", "--rho", "1/2", "--dt-max", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["run", "/nonexistent/config"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let o = run(&[
        "sweep",
        "--rho",
        "2/3,3/5",
        "--tau",
        "1,10",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(matches!(o.status.code(), Some(0) | Some(1)));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("rho,tau,v_measured,converged,"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn speed_and_verify_run() {
    let o = run(&["speed", "--rho", "8/13", "--tau", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("converged = true"));
    let o = run(&["verify", "--rho", "8/13", "--tau", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS poincare_inequality"));
}

#[test]
fn simulate_then_resume_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.cfg");
    fs::write(&model, "[model]\nW.kind = quadratic\nW.c = 1\n[pulse]\ntau = 2\nkappa = 3\n").unwrap();
    let ck = dir.path().join("state.ck");
    let o = run(&[
        "simulate",
        "--model",
        model.to_str().unwrap(),
        "--rho",
        "3/5",
        "--periods",
        "2",
        "--checkpoint",
        ck.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("t,phase,avg_width,energy,w1_leb,mean_disp"));
    let cfg = dir.path().join("resume.cfg");
    fs::write(
        &cfg,
        "[model]\nW.kind = quadratic\nW.c = 1\n[pulse]\ntau = 2\nkappa = 3\n[run]\ncommand = simulate\nresume = state.ck\nperiods = 1\nsummary = s.json\n",
    )
    .unwrap();
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("s.json")).unwrap();
    assert!(summary.contains("\"final_time\": 12.0"), "{summary}");
}
