#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::thread::{self, JoinHandle};

pub fn abkem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_abkem"))
}

pub fn run(args: &[&str]) -> Output {
    abkem().args(args).output().expect("spawn abkem")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// A mock authority in `dir` with one key per attribute list in `keys`,
/// written to `dir/sk<i>.abk`.
pub fn mock_authority(dir: &Path, keys: &[&str]) -> Vec<PathBuf> {
    let out = run(&["--suite", "mock", "authority", "init", "--out", path(dir)]);
    assert!(out.status.success(), "init: {}", stderr(&out));
    keys.iter()
        .enumerate()
        .map(|(i, attrs)| {
            let sk = dir.join(format!("sk{i}.abk"));
            let out = run(&["--suite", "mock", "authority", "issue", "--dir", path(dir), "--attrs", attrs, "--out", path(&sk)]);
            assert!(out.status.success(), "issue: {}", stderr(&out));
            sk
        })
        .collect()
}

/// A `serve` process on an ephemeral port that exits after `connections`.
pub struct Server {
    child: Child,
    pub addr: String,
    log: Option<JoinHandle<Vec<String>>>,
}

impl Server {
    pub fn start(dir: &Path, policy: &str, connections: usize, extra: &[&str]) -> Server {
        let mut child = abkem()
            .args(["--suite", "mock", "serve", "--listen", "127.0.0.1:0", "--policy", policy])
            .args(["--params", path(&dir.join("params.abk")), "--mpk", path(&dir.join("mpk.abk"))])
            .args(["--connections", &connections.to_string()])
            .args(extra)
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .expect("spawn serve");
        let mut lines = BufReader::new(child.stdout.take().expect("piped stdout")).lines();
        let first = lines.next().expect("serve printed nothing").expect("read serve output");
        let addr = first.strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected first line {first:?}")).to_string();
        let log = thread::spawn(move || lines.map_while(Result::ok).collect());
        Server { child, addr, log: Some(log) }
    }

    pub fn login(&self, dir: &Path, sk: &Path, extra: &[&str]) -> Output {
        abkem()
            .args(["--suite", "mock", "login", "--connect", &self.addr])
            .args(["--params", path(&dir.join("params.abk")), "--mpk", path(&dir.join("mpk.abk"))])
            .args(["--sk", path(sk)])
            .args(extra)
            .output()
            .expect("spawn login")
    }

    /// Waits for the server to exit and returns what it printed after the
    /// listening line.
    pub fn finish(mut self) -> Vec<String> {
        let status = self.child.wait().expect("wait for serve");
        assert!(status.success(), "serve exited with {status}");
        self.log.take().expect("log reader").join().expect("log reader panicked")
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if self.log.is_some() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}
