use crate::crypto::DIGEST_LEN;

use super::{Direction, EntityId, MessageTag, Payload, ProtocolMessage};

/// tag(1) direction(1) sender(4) receiver(4) group_size(2) hop(2)
pub const HEADER_LEN: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MalformedMessage {
    #[error("buffer truncated")]
    Truncated,
    #[error("unknown tag byte {0:#04x}")]
    UnknownTag(u8),
    #[error("invalid direction byte {0:#04x}")]
    BadDirection(u8),
    #[error("length prefix runs past the end of the buffer")]
    LengthOverflow,
    #[error("expected {expected} items, found {found}")]
    ItemCount { expected: usize, found: usize },
    #[error("item {index} has invalid length {len}")]
    ItemLength { index: usize, len: usize },
    #[error("group size {0} is invalid for this message")]
    GroupSize(u16),
}

fn item_count(tag: MessageTag, nc: usize) -> usize {
    match tag {
        MessageTag::HgakaRequest
        | MessageTag::HgakaChallenge
        | MessageTag::HmLink
        | MessageTag::HgakaShare
        | MessageTag::PreHga
        | MessageTag::HgaShare => 1,
        MessageTag::HgakaProof => 2,
        // (nc - 1) client shares, leader share, target package, digest
        MessageTag::HgakaGrant => nc + 2,
        // sealed request, nc tokens, target package, digest
        MessageTag::HgaRequest => nc + 3,
        // echo plus (nc - 1) client shares
        MessageTag::HgaResponse => nc,
    }
}

fn items(payload: &Payload) -> Vec<&[u8]> {
    match payload {
        Payload::HgakaRequest { sealed } | Payload::HgakaChallenge { sealed } => vec![sealed],
        Payload::HmLink { hm } => vec![hm],
        Payload::HgakaProof { hm, sealed } => vec![hm, sealed],
        Payload::HgakaGrant { client_shares, leader_share, target_package, package_digest } => {
            let mut v: Vec<&[u8]> = client_shares.iter().map(Vec::as_slice).collect();
            v.extend([leader_share.as_slice(), target_package, package_digest]);
            v
        }
        Payload::HgakaShare { share } | Payload::HgaShare { share } => vec![share],
        Payload::PreHga { token } => vec![token],
        Payload::HgaRequest { sealed, authenticator, target_package, package_digest } => {
            let mut v: Vec<&[u8]> = vec![sealed];
            v.extend(authenticator.iter().map(Vec::as_slice));
            v.extend([target_package.as_slice(), package_digest]);
            v
        }
        Payload::HgaResponse { echo, client_shares } => {
            let mut v: Vec<&[u8]> = vec![echo];
            v.extend(client_shares.iter().map(Vec::as_slice));
            v
        }
    }
}

/// Header followed by every payload item with a 16-bit big-endian length
/// prefix, in schema order.
///
/// Panics if an item exceeds 65535 bytes, which no supported group size
/// produces.
pub fn serialize(msg: &ProtocolMessage) -> Vec<u8> {
    let items = items(&msg.payload);
    let body: usize = items.iter().map(|i| 2 + i.len()).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + body);
    out.push(msg.tag() as u8);
    out.push(msg.direction as u8);
    out.extend_from_slice(&msg.sender.0.to_be_bytes());
    out.extend_from_slice(&msg.receiver.0.to_be_bytes());
    out.extend_from_slice(&msg.group_size.to_be_bytes());
    out.extend_from_slice(&msg.hop.to_be_bytes());
    for item in items {
        let len = u16::try_from(item.len()).expect("payload item exceeds 16-bit length prefix");
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(item);
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MalformedMessage> {
        if self.buf.len() < n {
            return Err(MalformedMessage::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, MalformedMessage> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, MalformedMessage> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, MalformedMessage> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn parse(bytes: &[u8]) -> Result<ProtocolMessage, MalformedMessage> {
    let mut r = Reader { buf: bytes };
    let tag_byte = r.u8()?;
    let tag = MessageTag::from_byte(tag_byte).ok_or(MalformedMessage::UnknownTag(tag_byte))?;
    let direction = match r.u8()? {
        0 => Direction::Req,
        1 => Direction::Res,
        other => return Err(MalformedMessage::BadDirection(other)),
    };
    let sender = EntityId(r.u32()?);
    let receiver = EntityId(r.u32()?);
    let group_size = r.u16()?;
    let hop = r.u16()?;
    if group_size < 2 {
        return Err(MalformedMessage::GroupSize(group_size));
    }

    let mut raw = Vec::new();
    while !r.buf.is_empty() {
        let len = r.u16()? as usize;
        if r.buf.len() < len {
            return Err(MalformedMessage::LengthOverflow);
        }
        let item = r.take(len)?;
        if item.is_empty() {
            return Err(MalformedMessage::ItemLength { index: raw.len(), len: 0 });
        }
        raw.push(item.to_vec());
    }

    let expected = item_count(tag, group_size as usize);
    if raw.len() != expected {
        return Err(MalformedMessage::ItemCount { expected, found: raw.len() });
    }

    let digest = |index: usize, v: &[u8]| -> Result<[u8; DIGEST_LEN], MalformedMessage> {
        v.try_into().map_err(|_| MalformedMessage::ItemLength { index, len: v.len() })
    };

    let mut it = raw.into_iter();
    let mut next = || it.next().expect("count checked");
    let payload = match tag {
        MessageTag::HgakaRequest => Payload::HgakaRequest { sealed: next() },
        MessageTag::HgakaChallenge => Payload::HgakaChallenge { sealed: next() },
        MessageTag::HmLink => Payload::HmLink { hm: digest(0, &next())? },
        MessageTag::HgakaProof => {
            let hm = digest(0, &next())?;
            Payload::HgakaProof { hm, sealed: next() }
        }
        MessageTag::HgakaGrant => {
            let client_shares = (0..expected - 3).map(|_| next()).collect();
            let leader_share = next();
            let target_package = next();
            let package_digest = digest(expected - 1, &next())?;
            Payload::HgakaGrant { client_shares, leader_share, target_package, package_digest }
        }
        MessageTag::HgakaShare => Payload::HgakaShare { share: next() },
        MessageTag::PreHga => Payload::PreHga { token: next() },
        MessageTag::HgaRequest => {
            let sealed = next();
            let authenticator = (0..group_size).map(|_| next()).collect();
            let target_package = next();
            let package_digest = digest(expected - 1, &next())?;
            Payload::HgaRequest { sealed, authenticator, target_package, package_digest }
        }
        MessageTag::HgaResponse => {
            let echo = next();
            let client_shares = (1..expected).map(|_| next()).collect();
            Payload::HgaResponse { echo, client_shares }
        }
        MessageTag::HgaShare => Payload::HgaShare { share: next() },
    };

    Ok(ProtocolMessage { direction, sender, receiver, group_size, hop, payload })
}
