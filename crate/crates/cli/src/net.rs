use std::net::{TcpListener, TcpStream};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use abkem_auth::abkem::{AttributeSecretKey, MasterPublicKey};
use abkem_auth::authority::AttributeRevocationList;
use abkem_auth::policy::{parse_policy, PolicyFormula, Roster};
use abkem_auth::protocol::{
    run_client, run_server, AuthResult, ClientCredentials, ProtocolError, ServerConfig, SessionStore,
};
use abkem_auth::suite::{Bls12Suite, MockSuite, SuiteId};
use abkem_auth::wire::{StreamTransport, SuiteCodec, WireError};
use clap::Args;
use rand::rngs::OsRng;

use crate::error::CliError;
use crate::files::{self, SuiteChoice};

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    mpk: PathBuf,
    /// Revocation list; policies naming revoked attributes are refused.
    #[arg(long)]
    arl: Option<PathBuf>,
    #[arg(long, required_unless_present = "policy_file", conflicts_with = "policy_file")]
    policy: Option<String>,
    #[arg(long)]
    policy_file: Option<PathBuf>,
    /// Service provider identity, bound into every session key.
    #[arg(long, default_value = "abkem-sp")]
    id_sp: String,
    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: String,
    /// Accept responses without a key-confirmation tag.
    #[arg(long)]
    no_confirm: bool,
    /// Seconds a challenge stays answerable.
    #[arg(long, default_value_t = 120)]
    timeout: u64,
    /// Exit after this many connections.
    #[arg(long)]
    connections: Option<usize>,
}

#[derive(Args, Debug)]
pub struct LoginArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    mpk: PathBuf,
    #[arg(long)]
    sk: PathBuf,
    #[arg(long, default_value = "127.0.0.1:7878")]
    connect: String,
    /// Local revocation list; its version must match the server's.
    #[arg(long)]
    arl: Option<PathBuf>,
    /// Refuse challenges from any other service provider.
    #[arg(long)]
    id_sp: Option<String>,
    /// Refuse policies satisfied by fewer roster users than this.
    #[arg(long, requires = "roster")]
    min_anonymity: Option<NonZeroUsize>,
    #[arg(long)]
    roster: Option<PathBuf>,
    #[arg(long, default_value_t = 120)]
    timeout: u64,
}

pub fn serve(args: ServeArgs, choice: Option<SuiteChoice>) -> Result<(), CliError> {
    match files::params_suite(&args.params, choice)? {
        SuiteId::Mock => serve_with::<MockSuite>(args),
        SuiteId::Bls12_381 => serve_with::<Bls12Suite>(args),
    }
}

pub fn login(args: LoginArgs, choice: Option<SuiteChoice>) -> Result<(), CliError> {
    match files::params_suite(&args.params, choice)? {
        SuiteId::Mock => login_with::<MockSuite>(args),
        SuiteId::Bls12_381 => login_with::<Bls12Suite>(args),
    }
}

fn load_policy(text: &Option<String>, file: &Option<PathBuf>) -> Result<PolicyFormula, CliError> {
    let text = match (text, file) {
        (Some(t), _) => t.clone(),
        (None, Some(path)) => files::read_text(path)?,
        (None, None) => return Err(CliError::Usage("no policy given".into())),
    };
    Ok(parse_policy(text.trim())?)
}

fn server_config<S: SuiteCodec>(args: &ServeArgs) -> Result<ServerConfig<S>, CliError> {
    let params = files::load_params::<S>(&args.params)?;
    let suite = params.suite().clone();
    let mpk: MasterPublicKey<S> = files::load(&suite, &args.mpk)?;
    let policy = load_policy(&args.policy, &args.policy_file)?;
    let mut cfg = ServerConfig::new(params, mpk, policy, args.id_sp.as_str())?
        .with_confirmation(!args.no_confirm)
        .with_timeout(Duration::from_secs(args.timeout));
    if let Some(path) = &args.arl {
        let arl: AttributeRevocationList = files::load(&suite, path)?;
        if let Some(a) = arl.first_revoked(cfg.policy().leaves()) {
            return Err(CliError::Usage(format!("policy names revoked attribute {a:?}")));
        }
        cfg = cfg.with_arl(arl);
    }
    Ok(cfg)
}

fn serve_with<S: SuiteCodec>(args: ServeArgs) -> Result<(), CliError> {
    let cfg = Arc::new(server_config::<S>(&args)?);
    let listener = TcpListener::bind(&args.listen).map_err(CliError::Net)?;
    let addr = listener.local_addr().map_err(CliError::Net)?;
    println!("listening on {addr}");
    println!("policy: {}", cfg.policy());
    let store = Arc::new(SessionStore::new());
    let mut workers = Vec::new();
    for (n, conn) in listener.incoming().enumerate() {
        store.purge(Instant::now(), cfg.timeout() * 2);
        match conn {
            Ok(stream) => {
                let (cfg, store) = (Arc::clone(&cfg), Arc::clone(&store));
                workers.push(thread::spawn(move || handle(&cfg, &store, stream)));
            }
            Err(e) => eprintln!("accept failed: {e}"),
        }
        workers.retain(|w| !w.is_finished());
        if args.connections.is_some_and(|max| n + 1 >= max) {
            break;
        }
    }
    for w in workers {
        let _ = w.join();
    }
    Ok(())
}

fn handle<S: SuiteCodec>(cfg: &ServerConfig<S>, store: &SessionStore<S>, stream: TcpStream) {
    let peer = stream.peer_addr().map_or_else(|_| "unknown peer".to_string(), |a| a.to_string());
    if let Err(e) = stream.set_read_timeout(Some(cfg.timeout())) {
        println!("{peer}: {e}");
        return;
    }
    let mut transport = StreamTransport::new(stream);
    match run_server(cfg, store, &mut transport, true, &mut OsRng) {
        Ok(AuthResult::Accepted(keys)) => println!("{peer}: accepted, session key fingerprint {}", keys.fingerprint()),
        Ok(AuthResult::Rejected(reason)) => println!("{peer}: rejected ({reason})"),
        Err(ProtocolError::Wire(WireError::PeerClosed)) => println!("{peer}: client left without responding"),
        Err(e) => println!("{peer}: aborted: {e}"),
    }
}

fn client_credentials<S: SuiteCodec>(args: &LoginArgs) -> Result<ClientCredentials<S>, CliError> {
    let params = files::load_params::<S>(&args.params)?;
    let suite = params.suite().clone();
    let mpk: MasterPublicKey<S> = files::load(&suite, &args.mpk)?;
    let sk: AttributeSecretKey<S> = files::load(&suite, &args.sk)?;
    if !sk.is_consistent(&params, &mpk) {
        return Err(CliError::Usage(format!(
            "{} was not issued under {}",
            args.sk.display(),
            args.mpk.display()
        )));
    }
    let mut creds = ClientCredentials::new(params, mpk, sk);
    if let Some(path) = &args.arl {
        creds = creds.with_arl(files::load(&suite, path)?);
    }
    if let Some(id) = &args.id_sp {
        creds = creds.expecting_id_sp(id.as_str());
    }
    if let Some(r) = args.min_anonymity {
        creds = creds.with_min_anonymity(r);
    }
    Ok(creds)
}

fn load_roster(path: &Path) -> Result<Roster, CliError> {
    Ok(files::read_text(path)?.parse()?)
}

fn login_with<S: SuiteCodec>(args: LoginArgs) -> Result<(), CliError> {
    let creds = client_credentials::<S>(&args)?;
    let roster = args.roster.as_deref().map(load_roster).transpose()?;
    let stream = TcpStream::connect(&args.connect).map_err(CliError::Net)?;
    stream.set_read_timeout(Some(Duration::from_secs(args.timeout))).map_err(CliError::Net)?;
    let mut transport = StreamTransport::new(stream);
    let outcome = run_client(&creds, &mut transport, roster.as_ref(), true, &mut OsRng)?;
    match outcome.verdict {
        Ok(()) => {
            println!("accepted, session key fingerprint {}", outcome.keys.fingerprint());
            Ok(())
        }
        Err(reason) => Err(CliError::Rejected(reason)),
    }
}
