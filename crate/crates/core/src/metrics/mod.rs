//! Repeated-transaction spam metrics over transaction logs.
//!
//! The pipeline is ingest -> detect_repeats -> aggregate_daily ->
//! export_panel. Bursts are identical-key transactions inside an anchored
//! window: the first occurrence opens the burst, everything with the same key
//! within `window_ms` of the burst start is labeled repeated, and the first
//! transaction past the horizon opens a fresh burst. Daily aggregates count
//! repeated transactions, the gas they burned when failing, failure rates,
//! and revenue including express-lane auction proceeds on the treated chain.

pub mod decimal;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io;

use chrono::{DateTime, NaiveDate};
use thiserror::Error;

use decimal::{format_wei_as_eth, parse_eth_to_wei};

/// Exact header of the transaction CSV.
pub const TX_CSV_HEADER: [&str; 11] = [
    "chain",
    "timestamp_ms",
    "tx_hash",
    "sender",
    "recipient",
    "value",
    "selector",
    "calldata_hash",
    "gas_fee_eth",
    "status",
    "timeboosted",
];

/// Exact header of the auction CSV.
pub const AUCTION_CSV_HEADER: [&str; 3] = ["round_id", "timestamp_ms", "payment_eth"];

/// Exact header of the exported panel CSV.
pub const PANEL_CSV_HEADER: [&str; 7] = [
    "chain",
    "date",
    "rep_txs",
    "rep_gas_eth",
    "failed_rep_txs",
    "pct_failed",
    "revenue_eth",
];

const MS_PER_DAY: i64 = 86_400_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxStatus {
    Success,
    Failed,
}

/// One on-chain transaction, with monetary amounts already on the wei scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionRecord {
    pub chain: String,
    /// Epoch milliseconds, UTC; strictly positive.
    pub timestamp_ms: i64,
    pub tx_hash: String,
    pub sender: String,
    pub recipient: String,
    /// Transferred amount in the chain's smallest unit, as the exact decimal
    /// string from the source; compared byte-for-byte.
    pub value: String,
    /// 4-byte function selector in hex; empty for plain transfers.
    pub selector: String,
    /// 32-byte hex digest of the full calldata.
    pub calldata_hash: String,
    pub gas_fee_wei: u128,
    pub status: TxStatus,
    pub timeboosted: bool,
}

/// Identity key of a burst: exact field-wise equality, no normalization.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BurstKey {
    pub chain: String,
    pub sender: String,
    pub recipient: String,
    pub value: String,
    pub selector: String,
    pub calldata_hash: String,
}

impl BurstKey {
    pub fn of(record: &TransactionRecord) -> Self {
        Self {
            chain: record.chain.clone(),
            sender: record.sender.clone(),
            recipient: record.recipient.clone(),
            value: record.value.clone(),
            selector: record.selector.clone(),
            calldata_hash: record.calldata_hash.clone(),
        }
    }
}

/// One express-lane auction round on the treated chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionRound {
    pub round_id: u64,
    pub timestamp_ms: i64,
    /// The winner's payment (the second-highest bid), in wei.
    pub payment_wei: u128,
}

/// A transaction together with its repeat label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub record: TransactionRecord,
    /// True for every burst member beyond the first.
    pub repeated: bool,
}

/// Per-chain per-day aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub chain: String,
    /// UTC calendar day.
    pub date: NaiveDate,
    /// Repeated transactions, counting timeboosted ones too.
    pub rep_txs: u64,
    /// Gas burned by failed repeated transactions, in wei.
    pub rep_gas_wei: u128,
    /// Failed repeated transactions, excluding timeboosted ones on the
    /// treated chain.
    pub failed_rep_txs: u64,
    /// Failure fraction among the same non-timeboosted repeated population,
    /// quantized to 6 decimals; `None` when that population is empty.
    pub pct_failed: Option<f64>,
    /// `rep_gas` plus same-day auction payments on the treated chain.
    pub revenue_wei: u128,
}

/// A malformed input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    /// 1-based line in the source file (the header is line 1).
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    Schema {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{} malformed row(s); first at line {}: {}", .0.len(), .0[0].line, .0[0].message)]
    Rows(Vec<RowIssue>),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("burst window must be positive, got {0} ms")]
    BadWindow(i64),
    #[error("records are not sorted by (timestamp, tx_hash) at index {0}")]
    Unsorted(usize),
    #[error("arithmetic overflow while accumulating wei amounts")]
    Overflow,
    #[error("i/o failure: {0}")]
    Io(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<io::Error> for MetricsError {
    fn from(err: io::Error) -> Self {
        MetricsError::Io(err.to_string())
    }
}

fn is_hex(text: &str) -> bool {
    let body = text.strip_prefix("0x").unwrap_or(text);
    !body.is_empty() && body.bytes().all(|b| b.is_ascii_hexdigit())
}

fn hex_len(text: &str) -> usize {
    text.strip_prefix("0x").unwrap_or(text).len()
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<(), IngestError> {
    if found.len() != expected.len() || found.iter().zip(expected).any(|(f, e)| f != *e) {
        return Err(IngestError::Schema {
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(())
}

fn parse_tx_row(row: &csv::StringRecord) -> Result<TransactionRecord, String> {
    let field = |i: usize| row.get(i).unwrap_or("");

    let chain = field(0).to_string();
    if chain.is_empty() {
        return Err("chain must be nonempty".into());
    }
    let timestamp_ms: i64 = field(1)
        .parse()
        .map_err(|_| format!("unparseable timestamp_ms {:?}", field(1)))?;
    if timestamp_ms <= 0 {
        return Err(format!("timestamp_ms must be positive, got {timestamp_ms}"));
    }
    let tx_hash = field(2).to_string();
    if !is_hex(&tx_hash) {
        return Err(format!("tx_hash {tx_hash:?} is not a hex string"));
    }
    let sender = field(3).to_string();
    let recipient = field(4).to_string();
    if sender.is_empty() || recipient.is_empty() {
        return Err("sender and recipient must be nonempty".into());
    }
    let value = field(5).to_string();
    if value.is_empty() || !value.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("value {value:?} is not a decimal integer string"));
    }
    let selector = field(6).to_string();
    if !selector.is_empty() && !(is_hex(&selector) && hex_len(&selector) == 8) {
        return Err(format!("selector {selector:?} is not 4 bytes of hex"));
    }
    let calldata_hash = field(7).to_string();
    if !(is_hex(&calldata_hash) && hex_len(&calldata_hash) == 64) {
        return Err(format!(
            "calldata_hash {calldata_hash:?} is not 32 bytes of hex"
        ));
    }
    let gas_fee_wei = parse_eth_to_wei(field(8)).map_err(|e| format!("bad gas_fee_eth: {e}"))?;
    let status = match field(9) {
        "success" => TxStatus::Success,
        "failed" => TxStatus::Failed,
        other => return Err(format!("status must be success|failed, got {other:?}")),
    };
    let timeboosted = match field(10) {
        "true" => true,
        "false" => false,
        other => return Err(format!("timeboosted must be true|false, got {other:?}")),
    };
    Ok(TransactionRecord {
        chain,
        timestamp_ms,
        tx_hash,
        sender,
        recipient,
        value,
        selector,
        calldata_hash,
        gas_fee_wei,
        status,
        timeboosted,
    })
}

/// Reads and validates the transaction CSV; returns records sorted by
/// `(timestamp, tx_hash)`. All malformed rows are collected and reported
/// together with their line numbers; a duplicate tx_hash within a chain is
/// malformed.
pub fn ingest_transactions<R: io::Read>(reader: R) -> Result<Vec<TransactionRecord>, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    check_header(csv_reader.headers()?, &TX_CSV_HEADER)?;

    let mut records = Vec::new();
    let mut issues = Vec::new();
    let mut seen_hashes: HashSet<(String, String)> = HashSet::new();
    for row in csv_reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != TX_CSV_HEADER.len() {
            issues.push(RowIssue {
                line,
                message: format!(
                    "expected {} fields, found {}",
                    TX_CSV_HEADER.len(),
                    row.len()
                ),
            });
            continue;
        }
        match parse_tx_row(&row) {
            Ok(record) => {
                if !seen_hashes.insert((record.chain.clone(), record.tx_hash.clone())) {
                    issues.push(RowIssue {
                        line,
                        message: format!(
                            "duplicate tx_hash {} within chain {}",
                            record.tx_hash, record.chain
                        ),
                    });
                } else {
                    records.push(record);
                }
            }
            Err(message) => issues.push(RowIssue { line, message }),
        }
    }
    if !issues.is_empty() {
        return Err(IngestError::Rows(issues));
    }
    // chain is a tiebreak only; labeling and aggregation are insensitive to
    // the relative order of equal (timestamp, hash) pairs across chains
    records.sort_by(|a, b| {
        (a.timestamp_ms, &a.tx_hash, &a.chain).cmp(&(b.timestamp_ms, &b.tx_hash, &b.chain))
    });
    Ok(records)
}

/// Reads and validates the auction CSV; `round_id` must be unique.
pub fn ingest_auctions<R: io::Read>(reader: R) -> Result<Vec<AuctionRound>, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    check_header(csv_reader.headers()?, &AUCTION_CSV_HEADER)?;

    let mut rounds = Vec::new();
    let mut issues = Vec::new();
    let mut seen_ids = HashSet::new();
    for row in csv_reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let parsed = (|| -> Result<AuctionRound, String> {
            if row.len() != AUCTION_CSV_HEADER.len() {
                return Err(format!(
                    "expected {} fields, found {}",
                    AUCTION_CSV_HEADER.len(),
                    row.len()
                ));
            }
            let round_id: u64 = row
                .get(0)
                .unwrap()
                .parse()
                .map_err(|_| format!("unparseable round_id {:?}", row.get(0).unwrap()))?;
            let timestamp_ms: i64 = row
                .get(1)
                .unwrap()
                .parse()
                .map_err(|_| format!("unparseable timestamp_ms {:?}", row.get(1).unwrap()))?;
            if timestamp_ms <= 0 {
                return Err(format!("timestamp_ms must be positive, got {timestamp_ms}"));
            }
            let payment_wei = parse_eth_to_wei(row.get(2).unwrap())
                .map_err(|e| format!("bad payment_eth: {e}"))?;
            Ok(AuctionRound {
                round_id,
                timestamp_ms,
                payment_wei,
            })
        })();
        match parsed {
            Ok(round) => {
                if !seen_ids.insert(round.round_id) {
                    issues.push(RowIssue {
                        line,
                        message: format!("duplicate round_id {}", round.round_id),
                    });
                } else {
                    rounds.push(round);
                }
            }
            Err(message) => issues.push(RowIssue { line, message }),
        }
    }
    if !issues.is_empty() {
        return Err(IngestError::Rows(issues));
    }
    rounds.sort_by_key(|r| (r.timestamp_ms, r.round_id));
    Ok(rounds)
}

/// Labels burst members beyond the first as repeated, using windows anchored
/// at each burst's first transaction. Input must be sorted by
/// `(timestamp, tx_hash)`.
pub fn detect_repeats(
    records: Vec<TransactionRecord>,
    window_ms: i64,
) -> Result<Vec<LabeledRecord>, MetricsError> {
    if window_ms <= 0 {
        return Err(MetricsError::BadWindow(window_ms));
    }
    for (i, pair) in records.windows(2).enumerate() {
        if (pair[0].timestamp_ms, &pair[0].tx_hash) > (pair[1].timestamp_ms, &pair[1].tx_hash) {
            return Err(MetricsError::Unsorted(i + 1));
        }
    }
    let mut burst_starts: HashMap<BurstKey, i64> = HashMap::new();
    let labeled = records
        .into_iter()
        .map(|record| {
            let key = BurstKey::of(&record);
            let repeated = match burst_starts.get(&key) {
                Some(&start) if record.timestamp_ms <= start + window_ms => true,
                _ => {
                    burst_starts.insert(key, record.timestamp_ms);
                    false
                }
            };
            LabeledRecord { record, repeated }
        })
        .collect();
    Ok(labeled)
}

fn utc_day_index(timestamp_ms: i64) -> i64 {
    timestamp_ms.div_euclid(MS_PER_DAY)
}

fn day_index_to_date(day: i64) -> NaiveDate {
    DateTime::from_timestamp_millis(day * MS_PER_DAY)
        .expect("day index within chrono range")
        .date_naive()
}

fn quantize_fraction(fraction: f64) -> f64 {
    (fraction * 1e6).round() / 1e6
}

#[derive(Default)]
struct DayAccum {
    rep_txs: u64,
    rep_gas_wei: u128,
    // failure-rate population: repeated transactions minus timeboosted ones
    // on the treated chain
    rate_basis: u64,
    failed_rep_txs: u64,
    auction_wei: u128,
}

/// Aggregates labeled transactions (plus treated-chain auction payments)
/// into per-chain per-day panel rows, sorted by `(chain, date)`.
///
/// An auction round on a day with no treated-chain transactions still emits
/// a row with zero transaction aggregates.
pub fn aggregate_daily(
    labeled: &[LabeledRecord],
    auctions: &[AuctionRound],
    treated_chain: &str,
) -> Result<Vec<PanelRow>, MetricsError> {
    let mut days: BTreeMap<(String, i64), DayAccum> = BTreeMap::new();

    for entry in labeled {
        let record = &entry.record;
        let key = (record.chain.clone(), utc_day_index(record.timestamp_ms));
        let accum = days.entry(key).or_default();
        if !entry.repeated {
            continue;
        }
        accum.rep_txs += 1;
        if record.status == TxStatus::Failed {
            accum.rep_gas_wei = accum
                .rep_gas_wei
                .checked_add(record.gas_fee_wei)
                .ok_or(MetricsError::Overflow)?;
        }
        let excluded_from_rate = record.chain == treated_chain && record.timeboosted;
        if !excluded_from_rate {
            accum.rate_basis += 1;
            if record.status == TxStatus::Failed {
                accum.failed_rep_txs += 1;
            }
        }
    }

    for round in auctions {
        let key = (treated_chain.to_string(), utc_day_index(round.timestamp_ms));
        let accum = days.entry(key).or_default();
        accum.auction_wei = accum
            .auction_wei
            .checked_add(round.payment_wei)
            .ok_or(MetricsError::Overflow)?;
    }

    days.into_iter()
        .map(|((chain, day), accum)| {
            let pct_failed = if accum.rate_basis > 0 {
                Some(quantize_fraction(
                    accum.failed_rep_txs as f64 / accum.rate_basis as f64,
                ))
            } else {
                None
            };
            let revenue_wei = accum
                .rep_gas_wei
                .checked_add(accum.auction_wei)
                .ok_or(MetricsError::Overflow)?;
            Ok(PanelRow {
                chain,
                date: day_index_to_date(day),
                rep_txs: accum.rep_txs,
                rep_gas_wei: accum.rep_gas_wei,
                failed_rep_txs: accum.failed_rep_txs,
                pct_failed,
                revenue_wei,
            })
        })
        .collect()
}

struct CountingWriter<W: io::Write> {
    inner: W,
    written: u64,
}

impl<W: io::Write> io::Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Writes the panel CSV (stable column order, fractions with 6 decimals,
/// empty field for an undefined failure rate) and returns the bytes written.
pub fn export_panel<W: io::Write>(rows: &[PanelRow], dest: W) -> Result<u64, MetricsError> {
    let mut writer = csv::Writer::from_writer(CountingWriter {
        inner: dest,
        written: 0,
    });
    writer.write_record(PANEL_CSV_HEADER)?;
    for row in rows {
        writer.write_record([
            row.chain.as_str(),
            &row.date.format("%Y-%m-%d").to_string(),
            &row.rep_txs.to_string(),
            &format_wei_as_eth(row.rep_gas_wei),
            &row.failed_rep_txs.to_string(),
            &row.pct_failed.map_or(String::new(), |p| format!("{p:.6}")),
            &format_wei_as_eth(row.revenue_wei),
        ])?;
    }
    writer.flush()?;
    let counting = writer
        .into_inner()
        .map_err(|e| MetricsError::Io(e.to_string()))?;
    Ok(counting.written)
}

/// Reads a panel CSV produced by [`export_panel`].
pub fn ingest_panel<R: io::Read>(reader: R) -> Result<Vec<PanelRow>, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    check_header(csv_reader.headers()?, &PANEL_CSV_HEADER)?;

    let mut rows = Vec::new();
    let mut issues = Vec::new();
    for row in csv_reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let parsed = (|| -> Result<PanelRow, String> {
            if row.len() != PANEL_CSV_HEADER.len() {
                return Err(format!(
                    "expected {} fields, found {}",
                    PANEL_CSV_HEADER.len(),
                    row.len()
                ));
            }
            let field = |i: usize| row.get(i).unwrap_or("");
            let chain = field(0).to_string();
            if chain.is_empty() {
                return Err("chain must be nonempty".into());
            }
            let date = NaiveDate::parse_from_str(field(1), "%Y-%m-%d")
                .map_err(|_| format!("unparseable date {:?}", field(1)))?;
            let rep_txs: u64 = field(2)
                .parse()
                .map_err(|_| format!("unparseable rep_txs {:?}", field(2)))?;
            let rep_gas_wei =
                parse_eth_to_wei(field(3)).map_err(|e| format!("bad rep_gas_eth: {e}"))?;
            let failed_rep_txs: u64 = field(4)
                .parse()
                .map_err(|_| format!("unparseable failed_rep_txs {:?}", field(4)))?;
            let pct_failed = if field(5).is_empty() {
                None
            } else {
                let pct: f64 = field(5)
                    .parse()
                    .map_err(|_| format!("unparseable pct_failed {:?}", field(5)))?;
                if !(0.0..=1.0).contains(&pct) {
                    return Err(format!("pct_failed {pct} outside [0, 1]"));
                }
                Some(pct)
            };
            let revenue_wei =
                parse_eth_to_wei(field(6)).map_err(|e| format!("bad revenue_eth: {e}"))?;
            Ok(PanelRow {
                chain,
                date,
                rep_txs,
                rep_gas_wei,
                failed_rep_txs,
                pct_failed,
                revenue_wei,
            })
        })();
        match parsed {
            Ok(row) => rows.push(row),
            Err(message) => issues.push(RowIssue { line, message }),
        }
    }
    if !issues.is_empty() {
        return Err(IngestError::Rows(issues));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use decimal::WEI_PER_ETH;

    const EMPTY_CALLDATA_SHA256: &str =
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";

    fn tx(chain: &str, ts: i64, hash: &str) -> TransactionRecord {
        TransactionRecord {
            chain: chain.to_string(),
            timestamp_ms: ts,
            tx_hash: hash.to_string(),
            sender: "0xaaa".to_string(),
            recipient: "0xbbb".to_string(),
            value: "0".to_string(),
            selector: "a9059cbb".to_string(),
            calldata_hash: EMPTY_CALLDATA_SHA256.to_string(),
            gas_fee_wei: 0,
            status: TxStatus::Success,
            timeboosted: false,
        }
    }

    fn tx_csv(rows: &[&str]) -> String {
        let mut text = TX_CSV_HEADER.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        text
    }

    #[test]
    fn ingest_empty_file() {
        let records = ingest_transactions(tx_csv(&[]).as_bytes()).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn ingest_sorts_by_timestamp_then_hash() {
        let csv = tx_csv(&[
            &format!("arb,3000,0x03,0xa,0xb,1,,{EMPTY_CALLDATA_SHA256},0.1,success,false"),
            &format!("arb,1000,0x01,0xa,0xb,1,,{EMPTY_CALLDATA_SHA256},0.1,success,false"),
            &format!("arb,2000,0x02,0xa,0xb,1,,{EMPTY_CALLDATA_SHA256},0.1,failed,false"),
        ]);
        let records = ingest_transactions(csv.as_bytes()).unwrap();
        let stamps: Vec<i64> = records.iter().map(|r| r.timestamp_ms).collect();
        assert_eq!(stamps, vec![1000, 2000, 3000]);
        assert_eq!(records[1].status, TxStatus::Failed);
        assert_eq!(records[0].gas_fee_wei, WEI_PER_ETH / 10);
    }

    #[test]
    fn ingest_reports_bad_rows_with_lines() {
        let csv = tx_csv(&[
            &format!("arb,1000,0x01,0xa,0xb,1,,{EMPTY_CALLDATA_SHA256},0.1,success,false"),
            &format!("arb,2000,0x02,0xa,0xb,1,,{EMPTY_CALLDATA_SHA256},-0.1,success,false"),
            &format!("arb,3000,0x03,0xa,0xb,1,,{EMPTY_CALLDATA_SHA256},0.1,maybe,false"),
        ]);
        let err = ingest_transactions(csv.as_bytes()).unwrap_err();
        match err {
            IngestError::Rows(issues) => {
                assert_eq!(issues.len(), 2);
                assert_eq!(issues[0].line, 3);
                assert!(issues[0].message.contains("gas_fee_eth"));
                assert_eq!(issues[1].line, 4);
                assert!(issues[1].message.contains("status"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_duplicate_hash_within_chain() {
        let csv = tx_csv(&[
            &format!("arb,1000,0x01,0xa,0xb,1,,{EMPTY_CALLDATA_SHA256},0.1,success,false"),
            &format!("arb,2000,0x01,0xa,0xb,1,,{EMPTY_CALLDATA_SHA256},0.1,success,false"),
            // same hash on another chain is fine
            &format!("base,2000,0x01,0xa,0xb,1,,{EMPTY_CALLDATA_SHA256},0.1,success,false"),
        ]);
        let err = ingest_transactions(csv.as_bytes()).unwrap_err();
        match err {
            IngestError::Rows(issues) => {
                assert_eq!(issues.len(), 1);
                assert_eq!(issues[0].line, 3);
                assert!(issues[0].message.contains("duplicate"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_wrong_header() {
        let err = ingest_transactions("chain,when\n".as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::Schema { .. }));
    }

    #[test]
    fn detect_labels_within_anchored_window() {
        let records = vec![
            tx("arb", 1, "0x1"),
            tx("arb", 501, "0x2"),
            tx("arb", 1501, "0x3"),
        ];
        let labeled = detect_repeats(records, 2000).unwrap();
        let flags: Vec<bool> = labeled.iter().map(|l| l.repeated).collect();
        assert_eq!(flags, vec![false, true, true]);
    }

    #[test]
    fn detect_opens_new_burst_past_horizon() {
        let records = vec![tx("arb", 1, "0x1"), tx("arb", 2501, "0x2")];
        let labeled = detect_repeats(records, 2000).unwrap();
        let flags: Vec<bool> = labeled.iter().map(|l| l.repeated).collect();
        assert_eq!(flags, vec![false, false]);
    }

    #[test]
    fn detect_window_boundary_is_inclusive() {
        let records = vec![tx("arb", 1, "0x1"), tx("arb", 2001, "0x2")];
        let labeled = detect_repeats(records, 2000).unwrap();
        assert!(labeled[1].repeated);
    }

    #[test]
    fn detect_distinguishes_keys() {
        let mut a = tx("arb", 1000, "0x1");
        let mut b = tx("arb", 1000, "0x2");
        a.calldata_hash = format!("{:064x}", 1);
        b.calldata_hash = format!("{:064x}", 2);
        let labeled = detect_repeats(vec![a, b], 2000).unwrap();
        assert!(!labeled[0].repeated && !labeled[1].repeated);
    }

    #[test]
    fn detect_rejects_unsorted_input() {
        let records = vec![tx("arb", 2000, "0x1"), tx("arb", 1000, "0x2")];
        assert!(matches!(
            detect_repeats(records, 2000),
            Err(MetricsError::Unsorted(1))
        ));
        assert!(matches!(
            detect_repeats(vec![], 0),
            Err(MetricsError::BadWindow(0))
        ));
    }

    fn labeled(record: TransactionRecord, repeated: bool) -> LabeledRecord {
        LabeledRecord { record, repeated }
    }

    #[test]
    fn aggregate_counts_and_failure_rate() {
        // four repeated transactions, two failed, none timeboosted
        let mut rows = Vec::new();
        rows.push(labeled(tx("arb", 1000, "0x0"), false));
        for (i, failed) in [(1, true), (2, true), (3, false), (4, false)] {
            let mut record = tx("arb", 1000 + i, &format!("0x{i}"));
            record.status = if failed {
                TxStatus::Failed
            } else {
                TxStatus::Success
            };
            record.gas_fee_wei = WEI_PER_ETH / 20; // 0.05 each
            rows.push(labeled(record, true));
        }
        let panel = aggregate_daily(&rows, &[], "arbitrum").unwrap();
        assert_eq!(panel.len(), 1);
        let row = &panel[0];
        assert_eq!(row.rep_txs, 4);
        assert_eq!(row.failed_rep_txs, 2);
        assert_eq!(row.pct_failed, Some(0.5));
        // only the two failed repeats burn gas
        assert_eq!(row.rep_gas_wei, WEI_PER_ETH / 10);
        assert_eq!(row.revenue_wei, row.rep_gas_wei);
    }

    #[test]
    fn aggregate_adds_auction_proceeds_on_treated_chain() {
        let mut rows = Vec::new();
        for (i, failed) in [(1, true), (2, true), (3, false), (4, false)] {
            let mut record = tx("arbitrum", 1000 + i, &format!("0x{i}"));
            record.status = if failed {
                TxStatus::Failed
            } else {
                TxStatus::Success
            };
            record.gas_fee_wei = WEI_PER_ETH / 20;
            rows.push(labeled(record, true));
        }
        let auctions = vec![AuctionRound {
            round_id: 1,
            timestamp_ms: 5000,
            payment_wei: 3 * WEI_PER_ETH / 10,
        }];
        let panel = aggregate_daily(&rows, &auctions, "arbitrum").unwrap();
        let row = &panel[0];
        assert_eq!(row.rep_gas_wei, WEI_PER_ETH / 10);
        assert_eq!(row.revenue_wei, 4 * WEI_PER_ETH / 10); // 0.1 + 0.3
    }

    #[test]
    fn aggregate_auction_only_day_still_emits_row() {
        let auctions = vec![AuctionRound {
            round_id: 7,
            timestamp_ms: 1000,
            payment_wei: WEI_PER_ETH,
        }];
        let panel = aggregate_daily(&[], &auctions, "arbitrum").unwrap();
        assert_eq!(panel.len(), 1);
        let row = &panel[0];
        assert_eq!(row.chain, "arbitrum");
        assert_eq!(row.rep_txs, 0);
        assert_eq!(row.pct_failed, None);
        assert_eq!(row.revenue_wei, WEI_PER_ETH);
    }

    #[test]
    fn aggregate_excludes_timeboosted_from_rate_on_treated_chain_only() {
        let mut boosted_failed = tx("arbitrum", 1000, "0x1");
        boosted_failed.timeboosted = true;
        boosted_failed.status = TxStatus::Failed;
        boosted_failed.gas_fee_wei = WEI_PER_ETH;
        let mut plain_failed = tx("arbitrum", 1001, "0x2");
        plain_failed.status = TxStatus::Failed;
        let plain_ok = tx("arbitrum", 1002, "0x3");

        let rows = vec![
            labeled(boosted_failed.clone(), true),
            labeled(plain_failed, true),
            labeled(plain_ok, true),
        ];
        let panel = aggregate_daily(&rows, &[], "arbitrum").unwrap();
        let row = &panel[0];
        // all three count as repeated spam and the boosted failure burns gas,
        // but the failure rate is over the two non-boosted repeats
        assert_eq!(row.rep_txs, 3);
        assert_eq!(row.rep_gas_wei, WEI_PER_ETH);
        assert_eq!(row.failed_rep_txs, 1);
        assert_eq!(row.pct_failed, Some(0.5));

        // on a non-treated chain the flag is ignored
        let mut other = boosted_failed;
        other.chain = "base".to_string();
        let panel = aggregate_daily(&[labeled(other, true)], &[], "arbitrum").unwrap();
        assert_eq!(panel[0].failed_rep_txs, 1);
        assert_eq!(panel[0].pct_failed, Some(1.0));
    }

    #[test]
    fn export_header_only_for_empty_panel() {
        let mut buffer = Vec::new();
        let bytes = export_panel(&[], &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert_eq!(text, format!("{}\n", PANEL_CSV_HEADER.join(",")));
        assert_eq!(bytes, text.len() as u64);
    }

    #[test]
    fn export_renders_declared_order_and_null_marker() {
        let rows = vec![PanelRow {
            chain: "arbitrum".to_string(),
            date: NaiveDate::from_ymd_opt(2025, 4, 17).unwrap(),
            rep_txs: 4,
            rep_gas_wei: WEI_PER_ETH / 10,
            failed_rep_txs: 2,
            pct_failed: Some(0.5),
            revenue_wei: 4 * WEI_PER_ETH / 10,
        }];
        let mut buffer = Vec::new();
        export_panel(&rows, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "arbitrum,2025-04-17,4,0.1,2,0.500000,0.4");

        let empty_rate = vec![PanelRow {
            pct_failed: None,
            ..rows[0].clone()
        }];
        let mut buffer = Vec::new();
        export_panel(&empty_rate, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "arbitrum,2025-04-17,4,0.1,2,,0.4"
        );
    }

    #[test]
    fn panel_roundtrip_identity() {
        let rows = vec![
            PanelRow {
                chain: "arbitrum".to_string(),
                date: NaiveDate::from_ymd_opt(2025, 4, 17).unwrap(),
                rep_txs: 3,
                rep_gas_wei: 123_456_789,
                failed_rep_txs: 1,
                pct_failed: Some(quantize_fraction(1.0 / 3.0)),
                revenue_wei: 123_456_789 + WEI_PER_ETH,
            },
            PanelRow {
                chain: "base".to_string(),
                date: NaiveDate::from_ymd_opt(2025, 4, 18).unwrap(),
                rep_txs: 0,
                rep_gas_wei: 0,
                failed_rep_txs: 0,
                pct_failed: None,
                revenue_wei: 0,
            },
        ];
        let mut buffer = Vec::new();
        export_panel(&rows, &mut buffer).unwrap();
        let back = ingest_panel(buffer.as_slice()).unwrap();
        assert_eq!(back, rows);
    }
}
