//! Runs one exchange over a [`Transport`].
//!
//! Server-initiated: `Challenge`, `Response`, `Result`. User-initiated flows
//! open with an empty `Hello` frame from the client.

use rand::{CryptoRng, RngCore};

use super::{
    client_respond, server_begin, AuthResult, ClientCredentials, ProtocolError, RejectReason, ResultMessage,
    ServerConfig, SessionKeys, SessionStore,
};
use crate::policy::Roster;
use crate::suite::PairingSuite;
use crate::wire::{self, Frame, FrameType, Transport};

/// Serves one exchange. A response that fails to decode is answered with
/// `Malformed` and closes the session.
pub fn run_server<S, T, R>(
    cfg: &ServerConfig<S>,
    store: &SessionStore<S>,
    transport: &mut T,
    await_hello: bool,
    rng: &mut R,
) -> Result<AuthResult, ProtocolError>
where
    S: PairingSuite,
    T: Transport + ?Sized,
    R: RngCore + CryptoRng + ?Sized,
{
    if await_hello {
        transport.recv()?.expect(FrameType::Hello)?;
    }
    let suite = cfg.params().suite();
    let (challenge, session) = server_begin(cfg, rng)?;
    let session_id = challenge.session_id;
    store.insert(session);
    transport.send(&Frame::new(FrameType::Challenge, wire::encode(suite, &challenge)))?;

    let payload = transport.recv()?.expect(FrameType::Response)?;
    let result = match wire::decode(suite, &payload) {
        Ok(resp) => store.finish(&resp),
        Err(_) => {
            store.close(session_id, RejectReason::Malformed);
            AuthResult::Rejected(RejectReason::Malformed)
        }
    };
    let notice = ResultMessage { session_id, rejection: result.rejection() };
    transport.send(&Frame::new(FrameType::Result, wire::encode(suite, &notice)))?;
    Ok(result)
}

/// What the client learned: its keys and the server's verdict.
#[derive(Debug)]
pub struct ClientOutcome {
    pub keys: SessionKeys,
    pub verdict: Result<(), RejectReason>,
}

/// Runs the client side. Local refusals (unsatisfied policy, anonymity guard,
/// revocation list mismatch) return an error without sending anything.
pub fn run_client<S, T, R>(
    creds: &ClientCredentials<S>,
    transport: &mut T,
    roster: Option<&Roster>,
    send_hello: bool,
    rng: &mut R,
) -> Result<ClientOutcome, ProtocolError>
where
    S: PairingSuite,
    T: Transport + ?Sized,
    R: RngCore + CryptoRng + ?Sized,
{
    let suite = creds.params().suite();
    if send_hello {
        transport.send(&Frame::hello())?;
    }
    let payload = transport.recv()?.expect(FrameType::Challenge)?;
    let challenge = wire::decode(suite, &payload)?;
    let (response, keys) = client_respond(creds, &challenge, roster, rng)?;
    transport.send(&Frame::new(FrameType::Response, wire::encode(suite, &response)))?;
    let payload = transport.recv()?.expect(FrameType::Result)?;
    let notice: ResultMessage = wire::decode(suite, &payload)?;
    if notice.session_id != challenge.session_id {
        return Err(ProtocolError::SessionMismatch);
    }
    let verdict = match notice.rejection {
        None => Ok(()),
        Some(r) => Err(r),
    };
    Ok(ClientOutcome { keys, verdict })
}
