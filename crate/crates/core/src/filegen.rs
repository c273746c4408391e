//! Deterministic test-file generation.
//!
//! Files are sequences of 100-byte records in the sort-benchmark layout:
//!
//! ```text
//! [0..10)   key: ten bytes from a seeded 64-bit multiplicative congruential generator
//! [10..42)  record index, 32 uppercase hex digits
//! [42..98)  filler letters derived from the record index
//! [98..100) "\r\n"
//! ```
//!
//! The same `(size, seed)` always yields the same bytes.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

pub const RECORD_BYTES: u64 = 100;
pub const KEY_BYTES: usize = 10;

/// Test-file size used for a benchmark spanning `n_disks` disks.
pub const BYTES_PER_DISK: u64 = 30_000_000_000;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("size {0} is not a multiple of the {RECORD_BYTES}-byte record size")]
    SizeNotMultiple(u64),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn test_file_size(n_disks: u64) -> u64 {
    n_disks * BYTES_PER_DISK
}

// Multiplier from Steele & Vigna's tables for 64-bit MCGs.
const MCG_MULTIPLIER: u64 = 0xf135_7aea_2e62_a9c5;

/// 64-bit multiplicative congruential generator; state is always odd.
#[derive(Clone, Debug)]
pub struct KeyGenerator {
    state: u64,
}

impl KeyGenerator {
    pub fn new(seed: u64) -> Self {
        // splitmix64 finalizer spreads nearby seeds apart
        let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        Self { state: z | 1 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(MCG_MULTIPLIER);
        self.state
    }

    pub fn next_key(&mut self) -> [u8; KEY_BYTES] {
        // high bits of an MCG are the well-mixed ones
        let a = self.next_u64().to_be_bytes();
        let b = self.next_u64().to_be_bytes();
        let mut key = [0u8; KEY_BYTES];
        key[..8].copy_from_slice(&a);
        key[8..].copy_from_slice(&b[..2]);
        key
    }
}

fn fill_record(rec: &mut [u8], index: u64, keys: &mut KeyGenerator) {
    rec[..KEY_BYTES].copy_from_slice(&keys.next_key());
    let hex = format!("{:032X}", u128::from(index));
    rec[10..42].copy_from_slice(hex.as_bytes());
    for (j, b) in rec[42..98].iter_mut().enumerate() {
        *b = b'A' + ((index + j as u64) % 26) as u8;
    }
    rec[98] = b'\r';
    rec[99] = b'\n';
}

/// Writes `size_bytes / 100` records.
pub fn generate_to<W: Write>(out: W, size_bytes: u64, seed: u64) -> Result<(), GenError> {
    if !size_bytes.is_multiple_of(RECORD_BYTES) {
        return Err(GenError::SizeNotMultiple(size_bytes));
    }
    let mut out = BufWriter::with_capacity(1 << 20, out);
    let mut keys = KeyGenerator::new(seed);
    let mut rec = [0u8; RECORD_BYTES as usize];
    for index in 0..size_bytes / RECORD_BYTES {
        fill_record(&mut rec, index, &mut keys);
        out.write_all(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Creates (or truncates) `path` with exactly `size_bytes` of record data.
pub fn generate(path: &Path, size_bytes: u64, seed: u64) -> Result<(), GenError> {
    if !size_bytes.is_multiple_of(RECORD_BYTES) {
        return Err(GenError::SizeNotMultiple(size_bytes));
    }
    let file = File::create(path)?;
    generate_to(&file, size_bytes, seed)?;
    file.sync_all()?;
    Ok(())
}

/// True iff `input` holds exactly what [`generate_to`] would write for its
/// length and `seed`.
pub fn verify_from<R: Read>(input: R, seed: u64) -> Result<bool, GenError> {
    let mut input = BufReader::with_capacity(1 << 20, input);
    let mut keys = KeyGenerator::new(seed);
    let mut expect = [0u8; RECORD_BYTES as usize];
    let mut got = [0u8; RECORD_BYTES as usize];
    let mut index = 0u64;
    loop {
        let n = read_full(&mut input, &mut got)?;
        if n == 0 {
            return Ok(true);
        }
        if n < got.len() {
            return Ok(false);
        }
        fill_record(&mut expect, index, &mut keys);
        if expect != got {
            return Ok(false);
        }
        index += 1;
    }
}

pub fn verify(path: &Path, seed: u64) -> Result<bool, GenError> {
    verify_from(File::open(path)?, seed)
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}
