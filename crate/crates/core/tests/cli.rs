use std::path::Path;
use std::process::{Command, Output};

fn onebit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_onebit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_owned()
}

#[test]
fn validate_succeeds_on_defaults() {
    let out = onebit(&["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    let stdout = text(&out.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")), "{stdout}");
    assert!(stdout.contains("C_rp vs Monte-Carlo"));
}

#[test]
fn config_errors_exit_with_two_and_name_the_key() {
    let out = onebit(&["ser", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("trials"));

    let out = onebit(&["ser", "--tau", "9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("tau"));

    let out = onebit(&["validate", "--config", "/nonexistent/cfg.txt"]);
    assert_eq!(out.status.code(), Some(2));

    let out = onebit(&["ser", "-m", "200"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("allow_large"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            "# small run\nM = 4\ntau = 5\nconstellation = qpsk\nsnr_db = 0\ntrials = 0\nout_dir = {}\n",
            out_dir.display()
        ),
    )
    .unwrap();
    // trials = 0 in the file is invalid until the flag overrides it
    let cfg_arg = cfg.to_str().unwrap();
    assert_eq!(onebit(&["ser", "--config", cfg_arg]).status.code(), Some(2));
    let out = onebit(&[
        "ser", "--config", cfg_arg, "--trials", "50", "--snr-db", "-5,5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));

    assert_eq!(
        header(&out_dir.join("ser.csv")),
        "strategy,snr_db,errors,count,ser,stderr"
    );
    let csv = std::fs::read_to_string(out_dir.join("ser.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("exhaustive,-5,"));
    assert!(csv.contains(",100,"), "count = trials * K");
    assert_eq!(
        header(&out_dir.join("ser_per_ue.csv")),
        "strategy,snr_db,ue,errors,count,ser,stderr"
    );
}

#[test]
fn scatter_and_table_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let common = [
        "-m",
        "4",
        "--tau",
        "5",
        "--snr-db",
        "0",
        "--trials",
        "10",
        "--out-dir",
        d,
    ];

    let out = onebit(
        &[
            &["scatter"][..],
            &common,
            &["--ue", "1", "--interferers", "3"],
        ]
        .concat(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let scatter = dir.path().join("scatter_ue1_snr0dB.csv");
    assert_eq!(header(&scatter), "trial,re_xhat,im_xhat,true_symbol_index");
    assert_eq!(
        std::fs::read_to_string(&scatter).unwrap().lines().count(),
        1 + 16 * 10
    );
    let exp = dir.path().join("expectations_ue1_snr0dB.csv");
    assert_eq!(header(&exp), "x_encoding,re_E,im_E");
    assert_eq!(std::fs::read_to_string(&exp).unwrap().lines().count(), 17);

    let out = onebit(&[&["scatter"][..], &common, &["--mode", "all"]].concat());
    assert_eq!(out.status.code(), Some(0));
    let means = dir.path().join("class_means_ue0_snr0dB.csv");
    assert_eq!(header(&means), "l,re_Ebar,im_Ebar");

    let out = onebit(&[&["expectation-table"][..], &common].concat());
    assert_eq!(out.status.code(), Some(0));
    for k in 0..2 {
        let t = dir.path().join(format!("expectations_ue{k}_snr0dB.csv"));
        assert_eq!(std::fs::read_to_string(&t).unwrap().lines().count(), 257);
        let m = dir.path().join(format!("class_means_ue{k}_snr0dB.csv"));
        assert_eq!(std::fs::read_to_string(&m).unwrap().lines().count(), 17);
    }
}

#[test]
fn ser_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = onebit(&[
            "ser",
            "-m",
            "4",
            "--tau",
            "5",
            "--snr-db",
            "0,10",
            "--trials",
            "100",
            "--seed",
            "3",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(out_dir.join("ser.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}
