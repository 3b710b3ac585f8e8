//! ChaCha20 keystream (IETF variant: 32-bit block counter, 96-bit nonce).

pub const KEY_BYTES: usize = 32;
pub const NONCE_BYTES: usize = 12;
pub const BLOCK_BYTES: usize = 64;

const SIGMA: [u32; 4] = [0x6170_7865, 0x3320_646e, 0x7962_2d32, 0x6b20_6574];

#[inline(always)]
fn quarter_round(s: &mut [u32; 16], a: usize, b: usize, c: usize, d: usize) {
    s[a] = s[a].wrapping_add(s[b]);
    s[d] = (s[d] ^ s[a]).rotate_left(16);
    s[c] = s[c].wrapping_add(s[d]);
    s[b] = (s[b] ^ s[c]).rotate_left(12);
    s[a] = s[a].wrapping_add(s[b]);
    s[d] = (s[d] ^ s[a]).rotate_left(8);
    s[c] = s[c].wrapping_add(s[d]);
    s[b] = (s[b] ^ s[c]).rotate_left(7);
}

fn initial_state(key: &[u8; KEY_BYTES], nonce: &[u8; NONCE_BYTES], counter: u32) -> [u32; 16] {
    let word = |b: &[u8]| u32::from_le_bytes([b[0], b[1], b[2], b[3]]);
    let mut s = [0u32; 16];
    s[..4].copy_from_slice(&SIGMA);
    for i in 0..8 {
        s[4 + i] = word(&key[4 * i..]);
    }
    s[12] = counter;
    for i in 0..3 {
        s[13 + i] = word(&nonce[4 * i..]);
    }
    s
}

/// One 64-byte keystream block.
pub fn block(key: &[u8; KEY_BYTES], nonce: &[u8; NONCE_BYTES], counter: u32) -> [u8; BLOCK_BYTES] {
    let input = initial_state(key, nonce, counter);
    let mut x = input;
    for _ in 0..10 {
        // column rounds
        quarter_round(&mut x, 0, 4, 8, 12);
        quarter_round(&mut x, 1, 5, 9, 13);
        quarter_round(&mut x, 2, 6, 10, 14);
        quarter_round(&mut x, 3, 7, 11, 15);
        // diagonal rounds
        quarter_round(&mut x, 0, 5, 10, 15);
        quarter_round(&mut x, 1, 6, 11, 12);
        quarter_round(&mut x, 2, 7, 8, 13);
        quarter_round(&mut x, 3, 4, 9, 14);
    }
    let mut out = [0u8; BLOCK_BYTES];
    for (i, chunk) in out.chunks_exact_mut(4).enumerate() {
        chunk.copy_from_slice(&x[i].wrapping_add(input[i]).to_le_bytes());
    }
    out
}

/// `len` keystream bytes starting at block `counter`.
///
/// The counter wraps after 2^32 blocks (256 GiB), far beyond any corpus
/// this crate builds.
pub fn keystream(key: &[u8; KEY_BYTES], nonce: &[u8; NONCE_BYTES], counter: u32, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len.next_multiple_of(BLOCK_BYTES));
    let mut ctr = counter;
    while out.len() < len {
        out.extend_from_slice(&block(key, nonce, ctr));
        ctr = ctr.wrapping_add(1);
    }
    out.truncate(len);
    out
}
