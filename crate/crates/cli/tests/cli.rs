mod common;

use common::{fixture, mock_authority, path, run, stderr, stdout, Server};

#[test]
fn demo_ends_with_matching_keys() {
    let out = run(&["demo"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().last(), Some("session keys match"));
    let fps: Vec<&str> = text.lines().filter_map(|l| l.split_once(" fingerprint ")).map(|(_, fp)| fp).collect();
    assert_eq!(fps.len(), 3, "{text}");
    assert_eq!(fps[1], fps[2], "client and server fingerprints differ");
    assert!(text.contains("z = g2^s"));
}

#[test]
fn demo_with_custom_policy() {
    let out = run(&["demo", "--policy", "doctor AND cardiology"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("policy doctor AND cardiology"));
    assert_eq!(text.lines().last(), Some("session keys match"));
}

#[test]
fn demo_tampering_is_caught_by_confirmation() {
    for target in ["response", "challenge"] {
        let out = run(&["demo", "--tamper", target]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert_eq!(stdout(&out).lines().last(), Some("rejected (bad confirmation)"), "tamper {target}");
    }
}

#[test]
fn demo_with_unsatisfying_attributes_exits_2() {
    let out = run(&["demo", "--policy", "A AND B", "--attrs", "A"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["policy", "check"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn policy_compile_prints_rows() {
    let out = run(&["policy", "compile", "A AND B"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("msp: 2 rows x 2 columns"), "{text}");
    assert!(text.contains("A  (1, 1)"), "{text}");
    assert!(text.contains("B  (0, -1)"), "{text}");
}

#[test]
fn policy_compile_writes_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("msp.bin");
    let out = run(&["policy", "compile", "A AND B", "--out", path(&out_file)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let bytes = std::fs::read(&out_file).unwrap();
    // n = 2, m = 2 as u32 big-endian
    assert_eq!(&bytes[..8], &[0, 0, 0, 2, 0, 0, 0, 2]);
}

#[test]
fn policy_check_and_syntax_errors() {
    let out = run(&["policy", "check", "A OR B", "--attrs", "B"]);
    assert!(stdout(&out).starts_with("satisfied"));
    let out = run(&["policy", "check", "A AND B", "--attrs", "B"]);
    assert!(stdout(&out).starts_with("not satisfied"));
    let out = run(&["policy", "check", "A AND (B OR", "--attrs", "B"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("at byte 11"), "{}", stderr(&out));
}

#[test]
fn policy_anonymity_counts_roster() {
    let roster = fixture("roster10.txt");
    let out = run(&["policy", "anonymity", "A AND B", "--roster", path(&roster), "--r", "3"]);
    assert_eq!(stdout(&out).trim(), "pass: 3 of 10 roster users satisfy the policy (r = 3)");
    let out = run(&["policy", "anonymity", "A AND B", "--roster", path(&roster), "--r", "4"]);
    assert!(stdout(&out).starts_with("fail: 3 of 10"));
}

#[test]
fn mock_keys_need_explicit_suite() {
    let dir = tempfile::tempdir().unwrap();
    mock_authority(dir.path(), &[]);
    let out = run(&["authority", "issue", "--dir", path(dir.path()), "--attrs", "A", "--out", path(&dir.path().join("sk"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--suite mock"));
}

#[test]
fn authority_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    mock_authority(dir.path(), &["doctor,cardiology"]);
    for name in ["params.abk", "mpk.abk", "msk.abk", "arl.abk", "sk0.abk"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }

    let out = run(&["--suite", "mock", "authority", "revoke", "--dir", d, "--attr", "doctor"]);
    assert!(stdout(&out).contains("revocation list v1"));

    let sk = dir.path().join("again.abk");
    let out = run(&["--suite", "mock", "authority", "issue", "--dir", d, "--attrs", "doctor", "--out", path(&sk)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("doctor"));
    assert!(!sk.exists());

    let out = run(&["--suite", "mock", "authority", "rotate", "--dir", d]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("revocation list v1"));

    let out = run(&["--suite", "mock", "authority", "init", "--out", d]);
    assert_eq!(out.status.code(), Some(1), "init must not clobber an authority");
}

#[test]
fn serve_and_login_agree_on_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    let keys = mock_authority(dir.path(), &["A,B", "A"]);
    let server = Server::start(dir.path(), "A AND B", 2, &[]);
    let ok = server.login(dir.path(), &keys[0], &[]);
    let refused = server.login(dir.path(), &keys[1], &[]);
    let log = server.finish();

    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let fp = stdout(&ok).trim().rsplit(' ').next().unwrap().to_string();
    assert_eq!(fp.len(), 8);
    assert!(log.iter().any(|l| l.ends_with(&format!("accepted, session key fingerprint {fp}"))), "{log:?}");

    assert_eq!(refused.status.code(), Some(2));
    assert!(stderr(&refused).contains("do not satisfy"));
}

#[test]
fn serve_refuses_policy_naming_revoked_attribute() {
    let dir = tempfile::tempdir().unwrap();
    mock_authority(dir.path(), &[]);
    run(&["--suite", "mock", "authority", "revoke", "--dir", path(dir.path()), "--attr", "A"]);
    let out = run(&[
        "--suite",
        "mock",
        "serve",
        "--params",
        path(&dir.path().join("params.abk")),
        "--mpk",
        path(&dir.path().join("mpk.abk")),
        "--arl",
        path(&dir.path().join("arl.abk")),
        "--policy",
        "A AND B",
        "--listen",
        "127.0.0.1:0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("revoked attribute \"A\""));
}

#[test]
fn stale_revocation_list_is_refused_by_client() {
    let dir = tempfile::tempdir().unwrap();
    let keys = mock_authority(dir.path(), &["A,B"]);
    let stale = dir.path().join("arl-v0.abk");
    std::fs::copy(dir.path().join("arl.abk"), &stale).unwrap();
    run(&["--suite", "mock", "authority", "revoke", "--dir", path(dir.path()), "--attr", "C"]);
    let arl = dir.path().join("arl.abk");
    let server = Server::start(dir.path(), "A AND B", 1, &["--arl", path(&arl)]);
    let out = server.login(dir.path(), &keys[0], &["--arl", path(&stale)]);
    server.finish();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("v1"), "{}", stderr(&out));
}

#[test]
fn key_from_before_rotation_is_rejected_locally() {
    let dir = tempfile::tempdir().unwrap();
    let keys = mock_authority(dir.path(), &["A,B"]);
    run(&["--suite", "mock", "authority", "rotate", "--dir", path(dir.path())]);
    let out = run(&[
        "--suite",
        "mock",
        "login",
        "--params",
        path(&dir.path().join("params.abk")),
        "--mpk",
        path(&dir.path().join("mpk.abk")),
        "--sk",
        path(&keys[0]),
        "--connect",
        "127.0.0.1:1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("was not issued under"));
}

#[test]
fn no_secret_files_leak_into_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--suite", "mock", "authority", "init", "--out", path(dir.path())]);
    let msk = std::fs::read(dir.path().join("msk.abk")).unwrap();
    let body_hex: String = msk[6..].iter().map(|b| format!("{b:02x}")).collect();
    let text = stdout(&out);
    assert!(!text.contains(&body_hex));
    let exponent = u64::from_be_bytes(msk[6..14].try_into().unwrap()).to_string();
    assert!(!text.contains(&exponent));
}
