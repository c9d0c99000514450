use std::path::PathBuf;
use std::process::{Command, Output};

use cachesim::delivery::TransmissionLog;

fn cachesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cachesim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn simulate_examples() {
    let o = cachesim(&["simulate", "-N", "2", "-K", "4", "-M", "1", "-F", "12", "-d", "1,2,1,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("load 11/12 0.916666666666667"));
    assert!(text.contains("codewords 3 2 3 3"));
    assert_eq!(text.matches("decode OK").count(), 4);

    let o = cachesim(&["simulate", "-N", "1", "-K", "2", "-M", "1", "-F", "2", "-d", "1,1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("load 0 0"));

    let o = cachesim(&["simulate", "-N", "2", "-K", "3", "-M", "2/3", "-F", "6", "-d", "1,1,2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("load 5/3"));
}

#[test]
fn simulate_all_and_average() {
    let o = cachesim(&["simulate", "-N", "2", "-K", "3", "-M", "2/3", "-d", "all"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("demand")).count(), 8);
    let o = cachesim(&["simulate", "-N", "2", "-K", "4", "-M", "1", "-d", "average"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("average load"));
    let o = cachesim(&["simulate", "-N", "3", "-K", "4", "-M", "3/4", "-d", "worst"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn bad_input_exits_with_two() {
    for args in [
        vec!["simulate", "-N", "2", "-K", "4", "-M", "3/4", "-d", "1,2,1,1"],
        vec!["simulate", "-N", "2", "-K", "4", "-M", "1", "-d", "1,2,3,1"],
        vec!["simulate", "-N", "2", "-K", "4", "-M", "1", "-d", "1,2"],
        vec!["simulate", "-N", "2", "-K", "4", "-M", "1/4", "-d", "1,2,1,1"],
        vec!["simulate", "-N", "2", "-K", "4", "-M", "1", "-F", "7", "-d", "1,2,1,1"],
        vec!["bounds", "-N", "2"],
        vec!["nonsense"],
    ] {
        let o = cachesim(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn envelope_allows_fractional_t() {
    let o = cachesim(&[
        "simulate",
        "-N",
        "2",
        "-K",
        "4",
        "-M",
        "3/4",
        "-d",
        "1,2,1,1",
        "--envelope",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("codewords part2"));
}

#[test]
fn config_file_and_out_flag() {
    let cfg = scratch("worked.cfg");
    std::fs::write(&cfg, "# worked example\nN=2\nK=4\nM=1\nF=12\ndemand=1,2,1,1\n").unwrap();
    let out = scratch("worked.txt");
    let o = cachesim(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().contains("load 11/12"));

    // flags override the file
    let o = cachesim(&["simulate", "--config", cfg.to_str().unwrap(), "-F", "24"]);
    assert!(stdout(&o).contains("F=24"));
}

#[test]
fn dump_is_parseable() {
    let dump = scratch("worked.bin");
    let o = cachesim(&[
        "simulate",
        "-N",
        "2",
        "-K",
        "4",
        "-M",
        "1",
        "-F",
        "96",
        "-d",
        "1,2,1,1",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let bytes = std::fs::read(&dump).unwrap();
    let codewords = TransmissionLog::parse_bytes(&bytes, 4, 8).unwrap();
    assert_eq!(codewords.len(), 11);
}

#[test]
fn bounds_csv() {
    let o = cachesim(&["bounds", "-N", "10", "-K", "30", "--grid", "1:1/3:6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("curve,M_num,M_den,R_num,R_den,R_float"));
    assert_eq!(lines.count(), 8 * 16);
    assert!(text.contains("proposed_worst,2,1,21328,5655,3.77152961980548"));
    let o = cachesim(&["bounds", "-N", "3", "-K", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("all 81 demands"));
}

#[test]
fn converse_exit_codes() {
    let o = cachesim(&["converse", "-N", "2", "-K", "3", "-M", "4/3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    // two files each requested twice: per-demand symmetry fails
    let o = cachesim(&["converse", "-N", "2", "-K", "4"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("type 2-2 symmetry per-demand FAIL per-type OK"));
    assert!(text.contains("type 3-1 symmetry per-demand OK per-type OK"));
    let o = cachesim(&["converse", "-N", "2", "-K", "3", "--report"]);
    assert!(stdout(&o).starts_with("type,t,r_num,r_den,achievable_num,achievable_den,equal\n"));
}

#[test]
fn inactivity_commands() {
    let o = cachesim(&[
        "inactivity",
        "-N",
        "2",
        "-K",
        "4",
        "-M",
        "1",
        "-a",
        "0,1,2",
        "-d",
        "1,2,1,1",
        "--simulate",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("a=1 m=10 n=12 factor=6/5"));
    let o = cachesim(&[
        "inactivity",
        "-K",
        "20",
        "-N",
        "5",
        "-p",
        "0.3",
        "-a",
        "9",
        "--trials",
        "20000",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = cachesim(&[
        "inactivity",
        "-N",
        "50",
        "-K",
        "100",
        "-p",
        "1/10",
        "-a",
        "32,24,0",
        "--curve",
    ]);
    assert_eq!(stdout(&o).lines().count(), 1 + 3 * 99);
}

#[test]
fn repro_reports_average_panel_failures() {
    let o = cachesim(&["repro", "fig2"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().filter(|l| l.starts_with("PASS worst/")).count(), 5);
    assert_eq!(err.lines().filter(|l| l.starts_with("FAIL average/")).count(), 3);
    assert!(stdout(&o).starts_with("series,M,M_ref,R,R_ref,abs_dev\n"));
}
