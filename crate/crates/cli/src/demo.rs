use std::thread;

use abkem_auth::authority::AuthorityState;
use abkem_auth::policy::{parse_policy, AttributeSet};
use abkem_auth::protocol::{run_client, run_server, Challenge, ClientCredentials, Response, ResultMessage, ServerConfig, SessionStore};
use abkem_auth::suite::{Bls12Suite, GroupElement, MockSuite, PairingSuite};
use abkem_auth::wire::{self, Frame, FrameType, LoopbackTransport, Transport, WireError};
use clap::{Args, ValueEnum};
use rand::rngs::OsRng;

use crate::authority::DEFAULT_MOCK_MODULUS;
use crate::error::CliError;
use crate::files::{self, SuiteChoice};
use crate::policy::render_msp;

const DEMO_ID_SP: &str = "demo-sp";

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(long, default_value = "(doctor OR nurse) AND cardiology")]
    policy: String,
    /// Attributes of the demo user (default: every attribute the policy names).
    #[arg(long, value_delimiter = ',')]
    attrs: Option<Vec<String>>,
    /// Let a man in the middle alter one message.
    #[arg(long, value_enum)]
    tamper: Option<Tamper>,
    /// Run the variant without key confirmation.
    #[arg(long)]
    no_confirm: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Tamper {
    /// Replace `z` in the challenge with `z * g2`.
    Challenge,
    /// Flip one bit of the confirmation tag (or alter `B` without one).
    Response,
}

/// The demo runs on the mock suite unless `--suite production` is given.
pub fn run(args: DemoArgs, choice: Option<SuiteChoice>) -> Result<(), CliError> {
    match choice.unwrap_or(SuiteChoice::Mock) {
        SuiteChoice::Mock => {
            println!("suite: mock (INSECURE, p = {DEFAULT_MOCK_MODULUS})");
            demo(&args, MockSuite::new(DEFAULT_MOCK_MODULUS).expect("default modulus is prime"))
        }
        SuiteChoice::Production => {
            println!("suite: bls12-381");
            demo(&args, Bls12Suite::new())
        }
    }
}

fn demo<S: PairingSuite>(args: &DemoArgs, suite: S) -> Result<(), CliError> {
    let policy = parse_policy(args.policy.trim())?;
    let attrs = match &args.attrs {
        Some(list) => AttributeSet::new(list.iter().map(|a| a.trim()))?,
        None => AttributeSet::new(dedup(policy.leaves()))?,
    };

    let mut authority = AuthorityState::init(suite.security_bits(), suite.clone(), &mut OsRng)?;
    let mpk_fp = files::fingerprint(&wire::write_key_file(&suite, authority.mpk()));
    println!("[authority] setup: mpk1 = g1^b, mpk2 = e(g1,g2)^a, msk = g1^a");
    println!("            mpk fingerprint {mpk_fp}");
    let sk = authority.issue_keys(&attrs, &mut OsRng)?;
    println!("[authority] keygen for {attrs}: x1 = msk * mpk1^r, x2 = g2^r, k_x = H(x)^r");

    let cfg = ServerConfig::new(authority.params().clone(), authority.mpk().clone(), policy, DEMO_ID_SP)?
        .with_confirmation(!args.no_confirm);
    println!("[server]    policy {}", cfg.policy());
    for line in render_msp(cfg.msp()).lines() {
        println!("            {line}");
    }
    let creds = ClientCredentials::new(authority.params().clone(), authority.mpk().clone(), sk).expecting_id_sp(DEMO_ID_SP);

    let (server_end, client_end) = LoopbackTransport::pair();
    let server = thread::spawn(move || {
        let store = SessionStore::new();
        let mut end = server_end;
        run_server(&cfg, &store, &mut end, true, &mut OsRng)
    });
    let mut tap = Wiretap { inner: client_end, suite: suite.clone(), tamper: args.tamper };
    let client = run_client(&creds, &mut tap, None, true, &mut OsRng);
    drop(tap);
    let server = server.join().map_err(|_| CliError::Usage("server thread panicked".into()))?;

    let client = match client {
        Ok(c) => c,
        Err(e) => {
            let e = CliError::from(e);
            println!("[client]    refused: {e}");
            return Err(e);
        }
    };
    let server = server?;
    println!("[client]    K = e(x1, z) / (e(w, x2) * prod e(k_rho(i), c_i2^d_i)), K_DH = K^b");
    println!("[server]    K_DH = B^s; K_d, k_mac = HKDF(K_DH, challenge || B || id_sp)");
    println!("client fingerprint {}", client.keys.fingerprint());
    match (server.keys(), client.verdict) {
        (Some(server_keys), Ok(())) => {
            println!("server fingerprint {}", server_keys.fingerprint());
            if server_keys.session_key() == client.keys.session_key() {
                println!("session keys match");
                Ok(())
            } else if args.tamper.is_some() {
                println!("accepted without confirmation; session keys differ");
                Ok(())
            } else {
                Err(CliError::Usage("session keys differ on an untampered run".into()))
            }
        }
        (None, Err(reason)) if args.tamper.is_some() => {
            println!("rejected ({reason})");
            Ok(())
        }
        (None, Err(reason)) => Err(CliError::Rejected(reason)),
        _ => Err(CliError::Usage("server and client disagree on the outcome".into())),
    }
}

fn dedup(mut leaves: Vec<&str>) -> Vec<&str> {
    leaves.sort_unstable();
    leaves.dedup();
    leaves
}

/// Client-side transport that prints each frame and optionally alters one.
struct Wiretap<S: PairingSuite> {
    inner: LoopbackTransport,
    suite: S,
    tamper: Option<Tamper>,
}

fn element_summary<E: GroupElement>(e: &E) -> String {
    let bytes = e.to_bytes();
    format!("[{} bytes, digest {}]", bytes.len(), files::fingerprint(&bytes))
}

impl<S: PairingSuite> Transport for Wiretap<S> {
    fn send(&mut self, frame: &Frame) -> Result<(), WireError> {
        match frame.kind {
            FrameType::Hello => println!("client -> server  Hello: requesting a challenge"),
            FrameType::Response => {
                let mut resp: Response<S> = wire::decode(&self.suite, &frame.payload)?;
                println!("client -> server  Response ({} bytes)", frame.payload.len());
                println!("    B = mpk2^b {}", element_summary(&resp.b));
                match &resp.mac {
                    Some(_) => println!("    m = HMAC(k_mac, challenge || B || id_sp) [32 bytes]"),
                    None => println!("    no confirmation tag"),
                }
                if self.tamper == Some(Tamper::Response) {
                    match &mut resp.mac {
                        Some(tag) => {
                            tag[0] ^= 1;
                            println!("    !! tampered: flipped one bit of m");
                        }
                        None => {
                            resp.b = resp.b.op(&self.suite.gt());
                            println!("    !! tampered: B replaced by B * e(g1,g2)");
                        }
                    }
                    return self.inner.send(&Frame::new(FrameType::Response, wire::encode(&self.suite, &resp)));
                }
            }
            _ => {}
        }
        self.inner.send(frame)
    }

    fn recv(&mut self) -> Result<Frame, WireError> {
        let frame = self.inner.recv()?;
        match frame.kind {
            FrameType::Challenge => {
                let mut ch: Challenge<S> = wire::decode(&self.suite, &frame.payload)?;
                println!("server -> client  Challenge ({} bytes)", frame.payload.len());
                println!("    session {}", ch.session_id);
                println!(
                    "    id_sp {:?}, revocation list v{}, confirmation {}",
                    ch.id_sp,
                    ch.arl_version,
                    if ch.require_confirmation { "required" } else { "off" }
                );
                println!("    msp {} x {}, labels {}", ch.msp.rows(), ch.msp.cols(), ch.msp.labels().join(", "));
                println!("    z = g2^s {}", element_summary(&ch.encapsulation.z));
                for (i, (c1, c2)) in ch.encapsulation.rows.iter().enumerate() {
                    println!("    c_{} = (mpk1^mu_{} * H({})^-r_{}, g2^r_{})", i + 1, i + 1, ch.msp.label(i), i + 1, i + 1);
                    println!("          {} {}", element_summary(c1), element_summary(c2));
                }
                if self.tamper == Some(Tamper::Challenge) {
                    ch.encapsulation.z = ch.encapsulation.z.op(&self.suite.g2());
                    println!("    !! tampered: z replaced by z * g2");
                    return Ok(Frame::new(FrameType::Challenge, wire::encode(&self.suite, &ch)));
                }
            }
            FrameType::Result => {
                let notice: ResultMessage = wire::decode(&self.suite, &frame.payload)?;
                match notice.rejection {
                    None => println!("server -> client  Result: accepted"),
                    Some(r) => println!("server -> client  Result: rejected ({r})"),
                }
            }
            _ => {}
        }
        Ok(frame)
    }
}
