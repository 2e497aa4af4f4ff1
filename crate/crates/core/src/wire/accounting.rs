use super::{serialize, Payload, ProtocolMessage};

/// Booked size of one asymmetric ciphertext block.
pub const RSA_BOOKED_BLOCK_BITS: u64 = 2544;

const DIGEST_BITS: u64 = 256;

/// Symmetric ciphertext of `logical` plaintext bits, rounded to whole AES
/// blocks without the PKCS#7 extra block.
fn sealed(logical: u64) -> u64 {
    128 * logical.div_ceil(128)
}

fn request_plaintext(nc: u64) -> u64 {
    32 * nc + 192
}

/// `EK_GD1[SK]` followed by the RSA-encrypted OrNonce list.
fn target_package(nc: u64) -> u64 {
    sealed(128 + RSA_BOOKED_BLOCK_BITS * (128 * nc).div_ceil(RSA_BOOKED_BLOCK_BITS))
}

/// Cryptographic payload size in bits, booking each item at its logical
/// plaintext length. Headers and length prefixes are excluded.
pub fn payload_bits(msg: &ProtocolMessage) -> u64 {
    let nc = msg.group_size as u64;
    match &msg.payload {
        Payload::HgakaRequest { .. } => sealed(request_plaintext(nc)),
        Payload::HgakaChallenge { .. } => sealed(256),
        Payload::HmLink { .. } => DIGEST_BITS,
        Payload::HgakaProof { .. } => DIGEST_BITS + sealed(256),
        Payload::HgakaGrant { client_shares, .. } => {
            client_shares.len() as u64 * sealed(256) + sealed(384) + target_package(nc) + DIGEST_BITS
        }
        Payload::HgakaShare { .. } => sealed(256),
        Payload::PreHga { .. } => RSA_BOOKED_BLOCK_BITS,
        Payload::HgaRequest { authenticator, .. } => {
            sealed(request_plaintext(nc))
                + authenticator.len() as u64 * RSA_BOOKED_BLOCK_BITS
                + target_package(nc)
                + DIGEST_BITS
        }
        Payload::HgaResponse { client_shares, .. } => sealed(128) + client_shares.len() as u64 * sealed(256),
        Payload::HgaShare { .. } => sealed(256),
    }
}

/// Full serialized size in bits.
pub fn wire_bits(msg: &ProtocolMessage) -> u64 {
    8 * serialize(msg).len() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{Direction, EntityId};

    fn msg(nc: u16, payload: Payload) -> ProtocolMessage {
        ProtocolMessage {
            direction: Direction::Req,
            sender: EntityId(1),
            receiver: EntityId(2),
            group_size: nc,
            hop: 0,
            payload,
        }
    }

    #[test]
    fn item_sizes() {
        assert_eq!(payload_bits(&msg(3, Payload::HgakaRequest { sealed: vec![0; 48] })), 384);
        assert_eq!(payload_bits(&msg(4, Payload::HgakaRequest { sealed: vec![0; 48] })), 384);
        assert_eq!(payload_bits(&msg(5, Payload::HgakaRequest { sealed: vec![0; 48] })), 384);
        assert_eq!(payload_bits(&msg(6, Payload::HgakaRequest { sealed: vec![0; 48] })), 384);
        assert_eq!(payload_bits(&msg(7, Payload::HgakaRequest { sealed: vec![0; 48] })), 512);
        assert_eq!(payload_bits(&msg(3, Payload::HmLink { hm: [0; 32] })), 256);
        assert_eq!(payload_bits(&msg(3, Payload::PreHga { token: vec![1; 384] })), 2544);
    }

    #[test]
    fn target_package_steps_at_block_boundary() {
        // 128 * 19 = 2432 fits one block, 128 * 20 = 2560 needs two
        assert_eq!(target_package(19), 128 + 2560);
        assert_eq!(target_package(20), 128 + 5120);
        assert_eq!(target_package(3), 128 + 2560);
    }

    #[test]
    fn wire_bits_counts_header() {
        let m = msg(3, Payload::HmLink { hm: [0; 32] });
        assert_eq!(wire_bits(&m), 8 * (14 + 2 + 32));
    }
}
