//! Length-prefixed binary framing for the client/server session.
//!
//! Every frame is `u32 length | u8 msg_type | body`, where `length` counts the
//! type byte and the body. All integers are little-endian and `f32` values are
//! IEEE-754 little-endian.
//!
//! | type | message  | body                                                                 |
//! |------|----------|----------------------------------------------------------------------|
//! | 1    | Hello    | version u16, full_w u16, full_h u16, fov_w u16, fov_h u16, periph_scale f32, codec u8, scene_id u8, path_id u8, frame_count u32 |
//! | 2    | Pose     | frame_id u64, position 3 x f32, orientation 4 x f32 (x, y, z, w)      |
//! | 3    | Subframe | frame_id u64, eye u8, codec u8, rect 4 x u16 (x, y, w, h), payload_len u32, payload |
//! | 4    | End      | frame_id u64                                                          |

use std::io::{self, ErrorKind, Read, Write};

use thiserror::Error;

use crate::camera::{Eye, Pose};
use crate::codec::CodecId;
use crate::image::Rect;
use crate::math::{Quat, Vec3};
use crate::partition::PartitionSpec;

pub const PROTOCOL_VERSION: u16 = 1;

/// Default upper bound on a frame's length field.
pub const DEFAULT_MAX_FRAME_LEN: usize = 64 << 20;

pub const MSG_HELLO: u8 = 1;
pub const MSG_POSE: u8 = 2;
pub const MSG_SUBFRAME: u8 = 3;
pub const MSG_END: u8 = 4;

const HELLO_BODY: usize = 21;
const POSE_BODY: usize = 36;
const SUBFRAME_HEADER: usize = 22;
const END_BODY: usize = 8;

/// Largest subframe payload whose frame length still fits the u32 prefix.
pub const MAX_PAYLOAD_LEN: u64 = u32::MAX as u64 - 1 - SUBFRAME_HEADER as u64;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("payload of {0} bytes is too large for one frame")]
    PayloadTooLarge(u64),
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("frame length {len} exceeds the limit of {max} bytes")]
    FrameTooLong { len: usize, max: usize },
    #[error("malformed {what} message: {detail}")]
    Malformed { what: &'static str, detail: String },
    #[error("connection closed mid-frame after {read} of {expected} bytes")]
    ConnectionClosed { read: usize, expected: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl WireError {
    /// Errors caused by the peer violating the framing rules.
    pub fn is_protocol(&self) -> bool {
        matches!(self, WireError::UnknownType(_) | WireError::FrameTooLong { .. } | WireError::Malformed { .. })
    }
}

/// Session configuration handshake.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelloMsg {
    pub protocol_version: u16,
    pub full_w: u16,
    pub full_h: u16,
    pub fov_w: u16,
    pub fov_h: u16,
    pub periph_scale: f32,
    pub codec: u8,
    pub scene_id: u8,
    pub path_id: u8,
    pub frame_count: u32,
}

impl HelloMsg {
    pub fn partition(&self) -> PartitionSpec {
        PartitionSpec::new(
            u32::from(self.full_w),
            u32::from(self.full_h),
            u32::from(self.fov_w),
            u32::from(self.fov_h),
            self.periph_scale,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseUpdateMsg {
    pub frame_id: u64,
    pub position: [f32; 3],
    pub orientation: [f32; 4],
}

impl PoseUpdateMsg {
    pub fn from_pose(frame_id: u64, pose: &Pose) -> Self {
        PoseUpdateMsg { frame_id, position: pose.position.to_array(), orientation: pose.orientation.to_array() }
    }

    /// The carried pose, re-normalized if its quaternion drifted off unit length.
    pub fn pose(&self) -> Pose {
        let [x, y, z, w] = self.orientation;
        Pose::renormalized(Vec3::from(self.position), Quat::from_xyzw(x, y, z, w))
    }
}

/// One eye's encoded foveal image for one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubframeMsg {
    pub frame_id: u64,
    pub eye: u8,
    pub codec: u8,
    /// x, y, w, h in per-eye coordinates.
    pub rect: [u16; 4],
    pub payload: Vec<u8>,
}

impl SubframeMsg {
    pub fn eye(&self) -> Option<Eye> {
        Eye::from_u8(self.eye)
    }

    pub fn codec(&self) -> Option<CodecId> {
        CodecId::from_u8(self.codec)
    }

    pub fn rect(&self) -> Rect {
        let [x, y, w, h] = self.rect.map(u32::from);
        Rect::new(x, y, w, h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EndMsg {
    pub frame_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Hello(HelloMsg),
    Pose(PoseUpdateMsg),
    Subframe(SubframeMsg),
    End(EndMsg),
}

impl Message {
    pub fn msg_type(&self) -> u8 {
        match self {
            Message::Hello(_) => MSG_HELLO,
            Message::Pose(_) => MSG_POSE,
            Message::Subframe(_) => MSG_SUBFRAME,
            Message::End(_) => MSG_END,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Message::Hello(_) => "Hello",
            Message::Pose(_) => "Pose",
            Message::Subframe(_) => "Subframe",
            Message::End(_) => "End",
        }
    }

    /// Size of the encoded frame including the length prefix.
    pub fn encoded_len(&self) -> usize {
        5 + match self {
            Message::Hello(_) => HELLO_BODY,
            Message::Pose(_) => POSE_BODY,
            Message::Subframe(s) => SUBFRAME_HEADER + s.payload.len(),
            Message::End(_) => END_BODY,
        }
    }
}

pub fn check_payload_len(len: u64) -> Result<(), WireError> {
    if len > MAX_PAYLOAD_LEN {
        Err(WireError::PayloadTooLarge(len))
    } else {
        Ok(())
    }
}

/// Serializes one complete frame.
pub fn write_msg(msg: &Message) -> Result<Vec<u8>, WireError> {
    if let Message::Subframe(s) = msg {
        check_payload_len(s.payload.len() as u64)?;
    }
    let total = msg.encoded_len();
    let mut buf = Vec::with_capacity(total);
    buf.extend_from_slice(&((total - 4) as u32).to_le_bytes());
    buf.push(msg.msg_type());
    match msg {
        Message::Hello(h) => {
            for v in [h.protocol_version, h.full_w, h.full_h, h.fov_w, h.fov_h] {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            buf.extend_from_slice(&h.periph_scale.to_le_bytes());
            buf.extend_from_slice(&[h.codec, h.scene_id, h.path_id]);
            buf.extend_from_slice(&h.frame_count.to_le_bytes());
        }
        Message::Pose(p) => {
            buf.extend_from_slice(&p.frame_id.to_le_bytes());
            for v in p.position.iter().chain(p.orientation.iter()) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        Message::Subframe(s) => {
            buf.extend_from_slice(&s.frame_id.to_le_bytes());
            buf.extend_from_slice(&[s.eye, s.codec]);
            for v in s.rect {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            buf.extend_from_slice(&(s.payload.len() as u32).to_le_bytes());
            buf.extend_from_slice(&s.payload);
        }
        Message::End(e) => buf.extend_from_slice(&e.frame_id.to_le_bytes()),
    }
    debug_assert_eq!(buf.len(), total);
    Ok(buf)
}

/// Writes one frame with a single `write_all` call.
pub fn write_to<W: Write>(out: &mut W, msg: &Message) -> Result<usize, WireError> {
    let buf = write_msg(msg)?;
    out.write_all(&buf)?;
    Ok(buf.len())
}

/// Reads one frame. `Ok(None)` means the stream ended cleanly at a frame boundary.
pub fn read_msg<R: Read>(input: &mut R) -> Result<Option<Message>, WireError> {
    MessageReader::new().read(input)
}

/// A received frame with arrival times of its first and last byte.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedMessage {
    pub msg: Message,
    pub first_byte_ms: f64,
    pub last_byte_ms: f64,
    pub wire_bytes: usize,
}

/// Frame decoder with a configurable length limit.
#[derive(Debug, Clone, Copy)]
pub struct MessageReader {
    pub max_frame_len: usize,
}

impl Default for MessageReader {
    fn default() -> Self {
        MessageReader { max_frame_len: DEFAULT_MAX_FRAME_LEN }
    }
}

impl MessageReader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_limit(max_frame_len: usize) -> Self {
        MessageReader { max_frame_len }
    }

    pub fn read<R: Read>(&self, input: &mut R) -> Result<Option<Message>, WireError> {
        Ok(self.read_timed(input, || 0.0)?.map(|t| t.msg))
    }

    /// Like [`read`](Self::read), stamping the first and last byte with `now()`.
    pub fn read_timed<R: Read>(
        &self,
        input: &mut R,
        mut now: impl FnMut() -> f64,
    ) -> Result<Option<TimedMessage>, WireError> {
        let mut prefix = [0u8; 4];
        let got = read_full(input, &mut prefix[..1])?;
        if got == 0 {
            return Ok(None);
        }
        let first_byte_ms = now();
        let got = read_full(input, &mut prefix[1..])?;
        if got < 3 {
            return Err(WireError::ConnectionClosed { read: 1 + got, expected: 4 });
        }
        let len = u32::from_le_bytes(prefix) as usize;
        if len > self.max_frame_len {
            return Err(WireError::FrameTooLong { len, max: self.max_frame_len });
        }
        if len == 0 {
            return Err(WireError::Malformed { what: "frame", detail: "zero length".into() });
        }
        let mut body = vec![0u8; len];
        let got = read_full(input, &mut body)?;
        if got < len {
            return Err(WireError::ConnectionClosed { read: 4 + got, expected: 4 + len });
        }
        let last_byte_ms = now();
        let msg = parse_body(body[0], &body[1..])?;
        Ok(Some(TimedMessage { msg, first_byte_ms, last_byte_ms, wire_bytes: 4 + len }))
    }
}

/// Fills `buf` as far as possible; returns the count read before EOF.
fn read_full<R: Read>(input: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

struct Cursor<'a> {
    what: &'static str,
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let (head, rest) = self.buf.split_at(N);
        self.buf = rest;
        head.try_into().expect("split_at returns N bytes")
    }
    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }
    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take())
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take())
    }
    fn expect_len(&self, expected: usize) -> Result<(), WireError> {
        if self.buf.len() != expected {
            return Err(WireError::Malformed {
                what: self.what,
                detail: format!("body is {} bytes, expected {expected}", self.buf.len()),
            });
        }
        Ok(())
    }
}

fn parse_body(msg_type: u8, body: &[u8]) -> Result<Message, WireError> {
    match msg_type {
        MSG_HELLO => {
            let mut c = Cursor { what: "Hello", buf: body };
            c.expect_len(HELLO_BODY)?;
            Ok(Message::Hello(HelloMsg {
                protocol_version: c.u16(),
                full_w: c.u16(),
                full_h: c.u16(),
                fov_w: c.u16(),
                fov_h: c.u16(),
                periph_scale: c.f32(),
                codec: c.u8(),
                scene_id: c.u8(),
                path_id: c.u8(),
                frame_count: c.u32(),
            }))
        }
        MSG_POSE => {
            let mut c = Cursor { what: "Pose", buf: body };
            c.expect_len(POSE_BODY)?;
            let frame_id = c.u64();
            let position = [c.f32(), c.f32(), c.f32()];
            let orientation = [c.f32(), c.f32(), c.f32(), c.f32()];
            Ok(Message::Pose(PoseUpdateMsg { frame_id, position, orientation }))
        }
        MSG_SUBFRAME => {
            if body.len() < SUBFRAME_HEADER {
                return Err(WireError::Malformed {
                    what: "Subframe",
                    detail: format!("body is {} bytes, header needs {SUBFRAME_HEADER}", body.len()),
                });
            }
            let mut c = Cursor { what: "Subframe", buf: body };
            let frame_id = c.u64();
            let eye = c.u8();
            let codec = c.u8();
            let rect = [c.u16(), c.u16(), c.u16(), c.u16()];
            let payload_len = c.u32() as usize;
            c.expect_len(payload_len)?;
            Ok(Message::Subframe(SubframeMsg { frame_id, eye, codec, rect, payload: c.buf.to_vec() }))
        }
        MSG_END => {
            let mut c = Cursor { what: "End", buf: body };
            c.expect_len(END_BODY)?;
            Ok(Message::End(EndMsg { frame_id: c.u64() }))
        }
        other => Err(WireError::UnknownType(other)),
    }
}
