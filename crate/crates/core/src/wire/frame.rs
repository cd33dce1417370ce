//! Frames: `"ABK1" || type (u8) || length (u32, big-endian) || payload`,
//! and the transports that carry them.

use std::io::{self, Read, Write};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};

use super::{WireError, MAGIC};

/// Largest accepted payload.
pub const MAX_FRAME_LEN: usize = 1 << 20;

const HEADER_LEN: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameType {
    Challenge = 0x01,
    Response = 0x02,
    Result = 0x03,
    Hello = 0x04,
}

impl FrameType {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0x01 => FrameType::Challenge,
            0x02 => FrameType::Response,
            0x03 => FrameType::Result,
            0x04 => FrameType::Hello,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(kind: FrameType, payload: Vec<u8>) -> Self {
        Frame { kind, payload }
    }

    pub fn hello() -> Self {
        Frame::new(FrameType::Hello, Vec::new())
    }

    /// The payload if this frame has the expected type.
    pub fn expect(self, kind: FrameType) -> Result<Vec<u8>, WireError> {
        if self.kind != kind {
            return Err(WireError::UnexpectedFrame { expected: kind, found: self.kind });
        }
        Ok(self.payload)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, WireError> {
        if self.payload.len() > MAX_FRAME_LEN {
            return Err(WireError::FrameTooLarge(self.payload.len() as u64));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(self.kind as u8);
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }
}

/// Validates a header and returns the frame type and payload length.
fn parse_header(header: &[u8; HEADER_LEN]) -> Result<(FrameType, usize), WireError> {
    if header[..4] != MAGIC {
        return Err(WireError::BadMagic);
    }
    let kind = FrameType::from_byte(header[4]).ok_or(WireError::UnknownFrameType(header[4]))?;
    let len = u32::from_be_bytes(header[5..9].try_into().expect("4 bytes")) as usize;
    if len > MAX_FRAME_LEN {
        return Err(WireError::FrameTooLarge(len as u64));
    }
    Ok((kind, len))
}

pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> Result<(), WireError> {
    w.write_all(&frame.to_bytes()?)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame. The length cap is checked before the payload buffer is
/// allocated. A clean end of stream before the header maps to `PeerClosed`.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Frame, WireError> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => WireError::PeerClosed,
        _ => WireError::Io(e),
    })?;
    let (kind, len) = parse_header(&header)?;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(Frame { kind, payload })
}

/// Ordered, reliable delivery of whole frames.
pub trait Transport {
    fn send(&mut self, frame: &Frame) -> Result<(), WireError>;
    fn recv(&mut self) -> Result<Frame, WireError>;
}

impl<T: Transport + ?Sized> Transport for &mut T {
    fn send(&mut self, frame: &Frame) -> Result<(), WireError> {
        (**self).send(frame)
    }

    fn recv(&mut self) -> Result<Frame, WireError> {
        (**self).recv()
    }
}

/// In-memory transport. Frames pass through their byte encoding so the
/// loopback exercises the same checks as a socket.
pub struct LoopbackTransport {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

impl LoopbackTransport {
    pub fn pair() -> (LoopbackTransport, LoopbackTransport) {
        let (a_tx, b_rx) = channel();
        let (b_tx, a_rx) = channel();
        (LoopbackTransport { tx: a_tx, rx: a_rx }, LoopbackTransport { tx: b_tx, rx: b_rx })
    }
}

impl Transport for LoopbackTransport {
    fn send(&mut self, frame: &Frame) -> Result<(), WireError> {
        self.tx.send(frame.to_bytes()?).map_err(|_| WireError::PeerClosed)
    }

    fn recv(&mut self) -> Result<Frame, WireError> {
        let bytes = self.rx.recv().map_err(|_| WireError::PeerClosed)?;
        read_frame(&mut bytes.as_slice())
    }
}

/// Frames over any reliable byte stream, e.g. a `TcpStream`.
pub struct StreamTransport<T> {
    stream: T,
}

impl<T: Read + Write> StreamTransport<T> {
    pub fn new(stream: T) -> Self {
        StreamTransport { stream }
    }

    pub fn into_inner(self) -> T {
        self.stream
    }
}

impl<T: Read + Write> Transport for StreamTransport<T> {
    fn send(&mut self, frame: &Frame) -> Result<(), WireError> {
        write_frame(&mut self.stream, frame)
    }

    fn recv(&mut self) -> Result<Frame, WireError> {
        read_frame(&mut self.stream)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub direction: Direction,
    pub kind: FrameType,
    pub len: usize,
}

/// Records every frame that passes through the inner transport. The trace
/// handle can be cloned out before the transport moves to another thread.
pub struct TracedTransport<T> {
    inner: T,
    trace: Arc<Mutex<Vec<TraceEntry>>>,
}

impl<T: Transport> TracedTransport<T> {
    pub fn new(inner: T) -> Self {
        TracedTransport { inner, trace: Arc::default() }
    }

    pub fn trace_handle(&self) -> Arc<Mutex<Vec<TraceEntry>>> {
        Arc::clone(&self.trace)
    }

    pub fn trace(&self) -> Vec<TraceEntry> {
        self.trace.lock().expect("trace lock").clone()
    }

    fn record(&self, direction: Direction, frame: &Frame) {
        self.trace.lock().expect("trace lock").push(TraceEntry {
            direction,
            kind: frame.kind,
            len: frame.payload.len(),
        });
    }
}

impl<T: Transport> Transport for TracedTransport<T> {
    fn send(&mut self, frame: &Frame) -> Result<(), WireError> {
        self.inner.send(frame)?;
        self.record(Direction::Sent, frame);
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame, WireError> {
        let frame = self.inner.recv()?;
        self.record(Direction::Received, &frame);
        Ok(frame)
    }
}
