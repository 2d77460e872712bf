//! Exact ETH amounts on an integer wei scale (1 ETH = 10^18 wei).
//!
//! Monetary columns are parsed to integers on ingest and summed without
//! floating point; formatting back to decimal is canonical (no exponent, no
//! trailing zeros), so export/ingest cycles are lossless.

use thiserror::Error;

pub const WEI_PER_ETH: u128 = 1_000_000_000_000_000_000;
const ETH_DECIMALS: usize = 18;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("empty decimal string")]
    Empty,
    #[error("invalid character in decimal string {0:?}")]
    BadChar(String),
    #[error("more than {ETH_DECIMALS} fractional digits in {0:?}")]
    TooPrecise(String),
    #[error("decimal {0:?} overflows the wei scale")]
    Overflow(String),
}

/// Parses a nonnegative decimal ETH amount (e.g. `"0.25"`, `"12"`) into wei.
pub fn parse_eth_to_wei(text: &str) -> Result<u128, DecimalError> {
    if text.is_empty() {
        return Err(DecimalError::Empty);
    }
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() || text.matches('.').count() > 1 {
        return Err(DecimalError::BadChar(text.to_string()));
    }
    if text.contains('.') && frac_part.is_empty() {
        return Err(DecimalError::BadChar(text.to_string()));
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(DecimalError::BadChar(text.to_string()));
    }
    if frac_part.len() > ETH_DECIMALS {
        return Err(DecimalError::TooPrecise(text.to_string()));
    }
    let int_wei = int_part
        .parse::<u128>()
        .ok()
        .and_then(|i| i.checked_mul(WEI_PER_ETH))
        .ok_or_else(|| DecimalError::Overflow(text.to_string()))?;
    let mut frac_wei = 0u128;
    if !frac_part.is_empty() {
        let scale = 10u128.pow((ETH_DECIMALS - frac_part.len()) as u32);
        frac_wei = frac_part.parse::<u128>().unwrap() * scale;
    }
    int_wei
        .checked_add(frac_wei)
        .ok_or_else(|| DecimalError::Overflow(text.to_string()))
}

/// Formats wei as a canonical ETH decimal string.
pub fn format_wei_as_eth(wei: u128) -> String {
    let int_part = wei / WEI_PER_ETH;
    let frac_part = wei % WEI_PER_ETH;
    if frac_part == 0 {
        return int_part.to_string();
    }
    let digits = format!("{frac_part:018}");
    format!("{int_part}.{}", digits.trim_end_matches('0'))
}
