use std::path::{Path, PathBuf};

use abkem_auth::abkem::{AttributeSecretKey, MasterPublicKey, MasterSecretKey};
use abkem_auth::authority::{AttributeRevocationList, AuthorityState};
use abkem_auth::policy::AttributeSet;
use abkem_auth::suite::{Bls12Suite, MockSuite, PairingSuite, SuiteId};
use abkem_auth::wire::{self, SuiteCodec};
use clap::Subcommand;
use rand::rngs::OsRng;

use crate::error::CliError;
use crate::files::{self, SuiteChoice, ARL_FILE, MPK_FILE, MSK_FILE, PARAMS_FILE};

/// The largest prime below 2^61.
pub const DEFAULT_MOCK_MODULUS: u64 = (1 << 61) - 1;

#[derive(Subcommand, Debug)]
pub enum AuthorityCmd {
    /// Create params, master key pair and an empty revocation list.
    Init {
        #[arg(long, visible_alias = "dir", default_value = ".")]
        out: PathBuf,
        /// Group order for the mock suite.
        #[arg(long, default_value_t = DEFAULT_MOCK_MODULUS)]
        mock_modulus: u64,
        #[arg(long)]
        force: bool,
    },
    /// Issue an attribute secret key.
    Issue {
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        attrs: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Add an attribute to the revocation list.
    Revoke {
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        #[arg(long)]
        attr: String,
    },
    /// Replace the master key pair. The revocation list is kept.
    Rotate {
        #[arg(long, default_value = ".")]
        dir: PathBuf,
    },
}

pub fn run(cmd: AuthorityCmd, choice: Option<SuiteChoice>) -> Result<(), CliError> {
    match cmd {
        AuthorityCmd::Init { out, mock_modulus, force } => match choice.unwrap_or(SuiteChoice::Production) {
            SuiteChoice::Mock => {
                let suite = MockSuite::new(mock_modulus).map_err(|e| CliError::Usage(e.to_string()))?;
                println!("suite: mock (INSECURE, p = {mock_modulus})");
                init(&out, suite, force)
            }
            SuiteChoice::Production => {
                println!("suite: bls12-381");
                init(&out, Bls12Suite::new(), force)
            }
        },
        AuthorityCmd::Issue { dir, attrs, out, force } => {
            let attrs = AttributeSet::new(attrs.iter().map(|a| a.trim()))?;
            match files::params_suite(&dir.join(PARAMS_FILE), choice)? {
                SuiteId::Mock => issue::<MockSuite>(&dir, &attrs, &out, force),
                SuiteId::Bls12_381 => issue::<Bls12Suite>(&dir, &attrs, &out, force),
            }
        }
        AuthorityCmd::Revoke { dir, attr } => match files::params_suite(&dir.join(PARAMS_FILE), choice)? {
            SuiteId::Mock => revoke::<MockSuite>(&dir, attr.trim()),
            SuiteId::Bls12_381 => revoke::<Bls12Suite>(&dir, attr.trim()),
        },
        AuthorityCmd::Rotate { dir } => match files::params_suite(&dir.join(PARAMS_FILE), choice)? {
            SuiteId::Mock => rotate::<MockSuite>(&dir),
            SuiteId::Bls12_381 => rotate::<Bls12Suite>(&dir),
        },
    }
}

fn init<S: PairingSuite>(dir: &Path, suite: S, force: bool) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for name in [PARAMS_FILE, MPK_FILE, MSK_FILE, ARL_FILE] {
        let path = dir.join(name);
        if !force && path.exists() {
            return Err(CliError::Exists(path));
        }
    }
    let level = suite.security_bits();
    let state = AuthorityState::init(level, suite, &mut OsRng)?;
    save(dir, &state, true)?;
    println!("wrote {}", dir.display());
    println!("mpk fingerprint: {}", mpk_fingerprint(&state));
    println!("revocation list v{}", state.arl().version());
    Ok(())
}

fn load_state<S: SuiteCodec>(dir: &Path) -> Result<AuthorityState<S>, CliError> {
    let params = files::load_params::<S>(&dir.join(PARAMS_FILE))?;
    let suite = params.suite().clone();
    let mpk: MasterPublicKey<S> = files::load(&suite, &dir.join(MPK_FILE))?;
    let msk: MasterSecretKey<S> = files::load(&suite, &dir.join(MSK_FILE))?;
    let arl: AttributeRevocationList = files::load(&suite, &dir.join(ARL_FILE))?;
    Ok(AuthorityState::from_parts(params, mpk, msk, arl)?)
}

/// Writes the public files, and the master secret when `with_msk`.
fn save<S: PairingSuite>(dir: &Path, state: &AuthorityState<S>, with_msk: bool) -> Result<(), CliError> {
    let suite = state.params().suite();
    files::write(&dir.join(PARAMS_FILE), &wire::encode_params(state.params()), false)?;
    files::store(suite, state.mpk(), &dir.join(MPK_FILE), false)?;
    if with_msk {
        files::store(suite, state.msk(), &dir.join(MSK_FILE), true)?;
    }
    files::store(suite, state.arl(), &dir.join(ARL_FILE), false)
}

fn mpk_fingerprint<S: PairingSuite>(state: &AuthorityState<S>) -> String {
    files::fingerprint(&wire::write_key_file(state.params().suite(), state.mpk()))
}

fn issue<S: SuiteCodec>(dir: &Path, attrs: &AttributeSet, out: &Path, force: bool) -> Result<(), CliError> {
    if !force && out.exists() {
        return Err(CliError::Exists(out.into()));
    }
    let mut state = load_state::<S>(dir)?;
    let sk: AttributeSecretKey<S> = state.issue_keys(attrs, &mut OsRng)?;
    files::store(state.params().suite(), &sk, out, true)?;
    println!("issued key for {attrs} to {}", out.display());
    println!("mpk fingerprint: {}", mpk_fingerprint(&state));
    println!("revocation list v{}", state.arl().version());
    Ok(())
}

fn revoke<S: SuiteCodec>(dir: &Path, attr: &str) -> Result<(), CliError> {
    let mut state = load_state::<S>(dir)?;
    let version = state.revoke_attribute(attr)?.version();
    save(dir, &state, false)?;
    println!("revoked {attr:?}");
    println!("revocation list v{version}");
    Ok(())
}

fn rotate<S: SuiteCodec>(dir: &Path) -> Result<(), CliError> {
    let mut state = load_state::<S>(dir)?;
    let before = mpk_fingerprint(&state);
    state.rotate(&mut OsRng)?;
    save(dir, &state, true)?;
    println!("rotated master keys; previously issued keys no longer authenticate");
    println!("mpk fingerprint: {before} -> {}", mpk_fingerprint(&state));
    println!("revocation list v{}", state.arl().version());
    Ok(())
}
