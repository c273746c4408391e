//! Size parsing and formatting.
//!
//! Sizes accept a bare byte count or a binary `K`/`M`/`G` suffix
//! (case-insensitive, optional trailing `B`/`iB`).

use thiserror::Error;

pub const KIB: u64 = 1024;
pub const MIB: u64 = 1024 * 1024;
pub const GIB: u64 = 1024 * 1024 * 1024;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid size `{0}`")]
pub struct SizeError(pub String);

pub fn parse_size(text: &str) -> Result<u64, SizeError> {
    let t = text.trim();
    let err = || SizeError(text.to_string());
    if t.is_empty() {
        return Err(err());
    }
    let upper = t.to_ascii_uppercase();
    let stripped = upper
        .strip_suffix("IB")
        .or_else(|| upper.strip_suffix('B'))
        .unwrap_or(&upper);
    let (digits, mult) = match stripped.chars().last() {
        Some('K') => (&stripped[..stripped.len() - 1], KIB),
        Some('M') => (&stripped[..stripped.len() - 1], MIB),
        Some('G') => (&stripped[..stripped.len() - 1], GIB),
        _ => (stripped, 1),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let n: u64 = digits.parse().map_err(|_| err())?;
    n.checked_mul(mult).ok_or_else(err)
}

/// Shortest binary-suffixed spelling that round-trips through [`parse_size`].
pub fn format_size(bytes: u64) -> String {
    if bytes >= GIB && bytes.is_multiple_of(GIB) {
        format!("{}G", bytes / GIB)
    } else if bytes >= MIB && bytes.is_multiple_of(MIB) {
        format!("{}M", bytes / MIB)
    } else if bytes >= KIB && bytes.is_multiple_of(KIB) {
        format!("{}K", bytes / KIB)
    } else {
        bytes.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn suffixes_are_binary() {
        assert_eq!(parse_size("64K"), Ok(65536));
        assert_eq!(parse_size("1M"), Ok(1_048_576));
        assert_eq!(parse_size("30m"), Ok(30 * MIB));
        assert_eq!(parse_size("96KiB"), Ok(96 * 1024));
        assert_eq!(parse_size("4096"), Ok(4096));
        assert_eq!(parse_size("2G"), Ok(2 * GIB));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_size("").is_err());
        assert!(parse_size("K").is_err());
        assert!(parse_size("1.5M").is_err());
        assert!(parse_size("-4K").is_err());
        assert!(parse_size("99999999999999999999G").is_err());
    }

    proptest! {
        #[test]
        fn format_round_trips(n in 0u64..(1u64 << 40)) {
            prop_assert_eq!(parse_size(&format_size(n)), Ok(n));
        }
    }
}
