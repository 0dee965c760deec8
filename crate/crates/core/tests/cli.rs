use std::process::{Command, Output};

fn netlist(name: &str) -> String {
    format!("{}/../../netlists/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn screduce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_screduce"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn unknown_method_is_a_usage_error() {
    let o = screduce(&["--netlist", &netlist("rf_squid.json"), "reduce", "--method", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn multi_qubit_method_on_a_single_circuit_is_a_usage_error() {
    let o = screduce(&["--netlist", &netlist("rf_squid.json"), "reduce", "--method", "swt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_netlist_is_a_usage_error() {
    let o = screduce(&["--netlist", "/nonexistent.json", "spectrum"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn local_reduction_outside_its_range_exits_with_validity_code() {
    let nl = netlist("rf_squid.json");
    let o = screduce(&[
        "--netlist",
        &nl,
        "reduce",
        "--method",
        "lr",
        "--sweep",
        "param:fz=0.45:0.5:2",
    ]);
    assert_eq!(o.status.code(), Some(4));
    let text = stdout(&o);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains("error4"));
    assert!(rows[1].contains(",ok,"));
}

#[test]
fn output_is_reproducible() {
    let nl = netlist("rf_squid.json");
    let args = [
        "--netlist",
        nl.as_str(),
        "--seed",
        "7",
        "reduce",
        "--method",
        "pr",
        "--sweep",
        "param:fz=0.49:0.51:3",
    ];
    let a = screduce(&args);
    let b = screduce(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn worker_count_does_not_change_results() {
    let nl = netlist("rf_squid.json");
    let run = |w: &str| {
        stdout(&screduce(&[
            "--netlist",
            &nl,
            "--workers",
            w,
            "reduce",
            "--method",
            "lr",
            "--sweep",
            "param:fz=0.48:0.52:5",
        ]))
    };
    assert_eq!(data_rows(&run("1")), data_rows(&run("4")));
}

#[test]
fn single_point_sweep_gives_one_row() {
    let nl = netlist("rf_squid.json");
    let o = screduce(&[
        "--netlist",
        &nl,
        "reduce",
        "--method",
        "lr",
        "--sweep",
        "param:fz=0.5:0.5:1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(data_rows(&stdout(&o)).len(), 1);
}

#[test]
fn header_records_version_hash_and_flags() {
    let nl = netlist("rf_squid.json");
    let o = screduce(&["--netlist", &nl, "spectrum", "--k", "3"]);
    let text = stdout(&o);
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("# screduce "));
    assert!(first.contains("netlist_sha256="));
    assert!(first.contains("spectrum --k 3"));
    assert_eq!(text.lines().nth(1).unwrap(), "status,E0,E1,E2,E1-E0,E2-E0");
}

#[test]
fn comparing_a_method_with_itself_shows_no_divergence() {
    let nl = netlist("rf_squid.json");
    let o = screduce(&[
        "--netlist",
        &nl,
        "compare",
        "--methods",
        "lr,lr",
        "--sweep",
        "param:fz=0.49:0.5:2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let devs: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("# max relative deviation"))
        .collect();
    assert_eq!(devs.len(), 4);
    for l in devs {
        let v: f64 = l.rsplit(' ').next().unwrap().parse().unwrap();
        assert_eq!(v, 0.0, "{l}");
    }
}

#[test]
fn one_row_schedule_converge() {
    let dir = std::env::temp_dir().join(format!("screduce-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let sched = dir.join("schedule.txt");
    std::fs::write(&sched, "# single row\n10\n").unwrap();
    let nl = netlist("rf_squid.json");
    let o = screduce(&[
        "--netlist",
        &nl,
        "converge",
        "--schedule",
        sched.to_str().unwrap(),
        "--k",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("10,11,"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn out_flag_writes_the_table_to_a_file() {
    let dir = std::env::temp_dir().join(format!("screduce-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("t.csv");
    let nl = netlist("two_qubit.json");
    let o = screduce(&[
        "--netlist",
        &nl,
        "--out",
        path.to_str().unwrap(),
        "reduce",
        "--method",
        "swt",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(data_rows(&text).len(), 1);
    std::fs::remove_dir_all(&dir).ok();
}
