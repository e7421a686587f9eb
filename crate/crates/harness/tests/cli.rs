use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contract-sched"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&run(&["list"])), 0);
    let unknown = run(&["run", "--experiment", "fig_mul"]);
    assert_eq!(code(&unknown), 3);
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("fig_mult"));
    assert_eq!(
        code(&run(&["run", "--experiment", "fig_mult", "--set", "k=5:1"])),
        2
    );
    assert_eq!(
        code(&run(&[
            "run",
            "--experiment",
            "fig_mult",
            "--set",
            "bogus=1"
        ])),
        2
    );
    assert_eq!(code(&run(&["run"])), 2);
    assert_eq!(
        code(&run(&["run", "--experiment", "fig_mult", "--seed", "-3"])),
        2
    );
    assert_eq!(
        code(&run(&["eval", "--dist", "uniform:4,2", "--n", "4"])),
        2
    );
    assert_eq!(
        code(&run(&[
            "run",
            "--experiment",
            "fig_mult",
            "--trials",
            "2",
            "--out",
            "/nonexistent/dir/x.csv"
        ])),
        4
    );
    assert_eq!(code(&run(&["run", "--config", "/nonexistent/cfg"])), 4);
}

#[test]
fn run_writes_csv_to_stdout_or_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mult.csv");
    let args = [
        "run",
        "--experiment",
        "fig_mult",
        "--set",
        "k=1:3",
        "--trials",
        "20",
    ];
    let stdout = run(&args);
    assert_eq!(code(&stdout), 0);
    let mut with_file = args.to_vec();
    with_file.extend(["--out", path.to_str().unwrap()]);
    assert_eq!(code(&run(&with_file)), 0);
    assert_eq!(std::fs::read(&path).unwrap(), stdout.stdout);
    let text = String::from_utf8(stdout.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("experiment,k,worst_consistency_mean,avg_consistency_mean,bound\n"));
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    write(&cfg, "experiment=fig_normal\nm=1:8\nn=1:2\n");
    let out = run(&["run", "--config", cfg.to_str().unwrap(), "--set", "n=3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("3")));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["run", "--experiment", "fig_mult", "--trials", "200"];
    let serial = bin().args(args).args(["--threads", "1"]).output().unwrap();
    let env = bin()
        .args(args)
        .env("CONTRACT_SCHED_THREADS", "8")
        .output()
        .unwrap();
    assert_eq!(code(&serial), 0);
    assert_eq!(serial.stdout, env.stdout);
}

#[test]
fn one_off_queries() {
    let out = run(&["mult", "--taus", "2,3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("consistency=2.6666666666666665e0"), "{text}");
    assert!(
        text.contains("average_consistency=2.33333333333333"),
        "{text}"
    );

    let out = run(&["eval", "--dist", "points:4@1", "--lambda", "0"]);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("consistency=2.0000000000000000e0"));

    let out = run(&["eval", "--dist", "normal:500,25", "--epsilon", "0.3"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("n=4"));

    let out = run(&["emd", "--a", "points:2.5", "--b", "points:7"]);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        "4.5000000000000000e0"
    );

    // exactly one of --lambda, --n, --epsilon
    assert_eq!(
        code(&run(&[
            "eval", "--dist", "points:4", "--lambda", "0", "--n", "2"
        ])),
        2
    );
    assert_eq!(code(&run(&["eval", "--dist", "points:4"])), 2);
}
