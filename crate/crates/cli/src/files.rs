use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use abkem_auth::abkem::SystemParams;
use abkem_auth::suite::{PairingSuite, SuiteId};
use abkem_auth::wire::{self, KeyFileBody, SuiteCodec};
use clap::ValueEnum;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const PARAMS_FILE: &str = "params.abk";
pub const MPK_FILE: &str = "mpk.abk";
pub const MSK_FILE: &str = "msk.abk";
pub const ARL_FILE: &str = "arl.abk";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteChoice {
    /// Insecure exponent-tracking suite for testing.
    Mock,
    /// BLS12-381.
    Production,
}

/// Decides which suite a params file may be loaded as. Mock files are only
/// accepted with `--suite mock`.
pub fn params_suite(path: &Path, choice: Option<SuiteChoice>) -> Result<SuiteId, CliError> {
    let bytes = read(path)?;
    let (_, id) = wire::peek_key_file(&bytes).map_err(|source| CliError::KeyFile { path: path.into(), source })?;
    match (id, choice) {
        (SuiteId::Mock, Some(SuiteChoice::Mock)) | (SuiteId::Bls12_381, None | Some(SuiteChoice::Production)) => Ok(id),
        (SuiteId::Mock, _) => Err(CliError::MockNotSelected(path.into())),
        (found, Some(c)) => Err(CliError::Usage(format!(
            "{} is a {found} file but --suite {} was given",
            path.display(),
            c.to_possible_value().expect("no skipped variants").get_name()
        ))),
    }
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_params<S: SuiteCodec>(path: &Path) -> Result<SystemParams<S>, CliError> {
    wire::decode_params(&read(path)?).map_err(|source| CliError::KeyFile { path: path.into(), source })
}

pub fn load<S: PairingSuite, T: KeyFileBody<S>>(suite: &S, path: &Path) -> Result<T, CliError> {
    wire::read_key_file(suite, &read(path)?).map_err(|source| CliError::KeyFile { path: path.into(), source })
}

pub fn store<S: PairingSuite, T: KeyFileBody<S>>(suite: &S, value: &T, path: &Path, secret: bool) -> Result<(), CliError> {
    write(path, &wire::write_key_file(suite, value), secret)
}

/// Writes atomically via a sibling temp file. Secret files get mode 0600.
pub fn write(path: &Path, bytes: &[u8], secret: bool) -> Result<(), CliError> {
    let tmp = tmp_path(path);
    let mut opts = OpenOptions::new();
    opts.write(true).create(true).truncate(true);
    #[cfg(unix)]
    if secret {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    #[cfg(not(unix))]
    let _ = secret;
    let mut f = opts.open(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// First 8 hex characters of SHA-256, for comparing files by eye.
pub fn fingerprint(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(4).map(|b| format!("{b:02x}")).collect()
}
