//! End-to-end checks of the command-line binary: exit codes, output shape,
//! the prove/verify round trip, and byte-level determinism under a fixed
//! seed with timing suppressed.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_primality"))
        .args(args)
        .output()
        .expect("the binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("output is UTF-8")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("the binary exits normally")
}

#[test]
fn test_subcommand_maps_verdicts_to_exit_codes() {
    let prime = run(&["test", "13", "--no-timing"]);
    assert_eq!(exit_code(&prime), 0, "a prime exits 0");
    assert!(
        stdout(&prime).contains("verdict=prime"),
        "got {:?}",
        stdout(&prime)
    );

    let composite = run(&["test", "561", "--no-timing"]);
    assert_eq!(exit_code(&composite), 1, "a composite exits 1");
    assert!(
        stdout(&composite).contains("verdict=composite"),
        "got {:?}",
        stdout(&composite)
    );

    let garbage = run(&["test", "xyz"]);
    assert_eq!(exit_code(&garbage), 2, "unparseable input exits 2");
}

#[test]
fn hex_input_is_accepted_and_reported_in_decimal() {
    let out = run(&["test", "0x10001", "--no-timing"]);
    assert_eq!(exit_code(&out), 0, "65537 is prime");
    assert!(
        stdout(&out).contains("RESULT n=65537"),
        "hex input must be echoed as decimal, got {:?}",
        stdout(&out)
    );
}

#[test]
fn aks_method_settles_a_small_semiprime() {
    let out = run(&["test", "91", "--method", "aks", "--no-timing"]);
    assert_eq!(exit_code(&out), 1, "91 = 7 * 13 exits 1");
    let text = stdout(&out);
    assert!(text.contains("method=aks"), "got {text:?}");
    assert!(text.contains("verdict=composite"), "got {text:?}");
}

#[test]
fn prove_and_verify_round_trip_through_a_file() {
    let dir = tempfile::tempdir().expect("tempdir");
    let cert_path = dir.path().join("cert.txt");

    let prove = run(&[
        "prove",
        "1000000007",
        "--out",
        cert_path.to_str().unwrap(),
        "--no-timing",
    ]);
    assert_eq!(exit_code(&prove), 0, "the prover certifies 10^9 + 7");
    assert!(
        stdout(&prove).contains("verdict=prime"),
        "got {:?}",
        stdout(&prove)
    );
    let text = std::fs::read_to_string(&cert_path).expect("certificate written");
    assert!(text.starts_with("PRIMECERT v1 subject=1000000007"), "got {text:?}");
    assert!(text.contains("STEP method="), "a subject above the floor needs steps");

    let verify = run(&["verify", cert_path.to_str().unwrap()]);
    assert_eq!(exit_code(&verify), 0, "the fresh certificate verifies");
    assert!(
        stdout(&verify).contains("status=valid"),
        "got {:?}",
        stdout(&verify)
    );

    // One changed digit in the header must flip the verdict.
    let tampered_path = dir.path().join("tampered.txt");
    let tampered = text.replace("subject=1000000007", "subject=1000000009");
    std::fs::write(&tampered_path, tampered).expect("write tampered copy");
    let verify_bad = run(&["verify", tampered_path.to_str().unwrap()]);
    assert_eq!(exit_code(&verify_bad), 1, "a tampered certificate exits 1");
    assert!(
        stdout(&verify_bad).contains("status=invalid"),
        "got {:?}",
        stdout(&verify_bad)
    );

    // Structurally broken input is a usage error, not a verdict.
    let broken_path = dir.path().join("broken.txt");
    std::fs::write(&broken_path, "not a certificate\n").expect("write broken file");
    let verify_broken = run(&["verify", broken_path.to_str().unwrap()]);
    assert_eq!(exit_code(&verify_broken), 2, "unparseable certificates exit 2");

    let missing = dir.path().join("missing.txt");
    assert!(!Path::new(&missing).exists());
    let verify_missing = run(&["verify", missing.to_str().unwrap()]);
    assert_eq!(exit_code(&verify_missing), 2, "a missing file exits 2");
}

#[test]
fn fixed_seed_without_timing_is_byte_deterministic() {
    let args = ["prove", "1000000007", "--seed", "7", "--no-timing"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(
        stdout(&first),
        stdout(&second),
        "identical seeds must reproduce identical bytes"
    );
    assert!(
        stdout(&first).contains("PRIMECERT v1"),
        "without --out the certificate is printed"
    );

    let args = ["test", "1000003", "--method", "mr", "--seed", "9", "--no-timing"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(stdout(&first), stdout(&second), "test output must also be stable");
}

#[test]
fn bench_prints_the_per_method_table() {
    let out = run(&["bench", "--bits", "16", "--samples", "1"]);
    assert_eq!(exit_code(&out), 0, "bench exits 0");
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("bits\tmr\tgrh\taks\tcyclotomic\tecpp"),
        "the header names one column per method"
    );
    let row = lines.next().expect("one data row");
    assert!(row.starts_with("16\t"), "the row is keyed by bit size, got {row:?}");
    assert_eq!(
        row.split('\t').count(),
        6,
        "every method column is populated at 16 bits"
    );

    let quiet = ["bench", "--bits", "16", "--samples", "1", "--no-timing", "--seed", "3"];
    let first = run(&quiet);
    let second = run(&quiet);
    assert_eq!(
        stdout(&first),
        stdout(&second),
        "without timing the table bytes depend only on the seed"
    );
    assert!(
        stdout(&first).lines().nth(1).is_some_and(|r| r.contains("\tok")),
        "settled cells degrade to ok markers without timing"
    );
}
