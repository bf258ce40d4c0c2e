//! Turns internal incident reports into public records by temporal omission,
//! conversion of absolute volumes into percentages, optional range bucketing
//! of the volume ratio, and a leakage scanner that checks the result.
//!
//! # Scanner pattern table
//!
//! | kind         | pattern                                                                  |
//! |--------------|--------------------------------------------------------------------------|
//! | `temporal`   | ISO-8601 date, optionally followed by a time and zone (`2024-08-05T09:30:00Z`) |
//! | `temporal`   | ISO time of day `HH:MM[:SS[.fff]][Z|±HH:MM]`                              |
//! | `temporal`   | epoch-like integer of 10 to 13 digits standing alone                      |
//! | `temporal`   | month-name phrase with a year: `August 5, 2024`, `Aug 2024`, `5 August 2024` |
//! | `identifier` | any policy denylist entry, case-insensitive, word-bounded                 |
//! | `temporal`   | a structured field named like a time (`timestamp`, `event_start`, `date`, ...) |
//! | `identifier` | a structured field named like a firm identifier (`firm_id`, `lei`, ...)   |
//! | `narrative`  | a structured field named like free text (`narrative`, `notes`, ...)       |
//!
//! "Standing alone" means the digit run is not preceded by a letter, digit,
//! underscore or `.` and not followed by a letter, digit or underscore.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{
    yes_no, AiSystemCategory, DomainError, IncidentPattern, IncidentRecord, InstrumentCategory, MarketRegion, Schema,
    ValidationMode, ValidationReport, VolumeBucket, VolumeVs30d,
};

/// A pre-redaction report as held by the regulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InternalReport {
    pub event_start: String,
    pub event_end: String,
    pub reporting_firm_id: String,
    #[serde(default)]
    pub narrative: String,

    pub instrument_category: InstrumentCategory,
    pub market_region: MarketRegion,
    pub ai_system_category: AiSystemCategory,
    pub incident_pattern: IncidentPattern,
    #[serde(with = "yes_no")]
    pub market_impact_detected: bool,
    #[serde(with = "yes_no")]
    pub issue_flag: bool,
    #[serde(with = "yes_no")]
    pub human_oversight_involved: bool,
    #[serde(with = "yes_no")]
    pub fail_safe_triggered: bool,
    pub price_range_pct: f64,

    pub absolute_buy_volume: f64,
    pub absolute_sell_volume: f64,
    pub absolute_ai_buy_volume: f64,
    pub absolute_ai_sell_volume: f64,
    pub market_total_buy_volume: f64,
    pub market_total_sell_volume: f64,
    pub trailing_30d_avg_volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RedactionPolicy {
    /// Ascending edges starting at 0; empty publishes the exact ratio.
    pub bucket_edges: Vec<f64>,
    pub strict_mode: bool,
    /// Firm names and other identifiers the scanner must never find.
    pub denylist: Vec<String>,
    /// Decimal places for emitted percents.
    pub rounding: u32,
}

impl Default for RedactionPolicy {
    fn default() -> Self {
        RedactionPolicy { bucket_edges: Vec::new(), strict_mode: true, denylist: Vec::new(), rounding: 1 }
    }
}

impl RedactionPolicy {
    pub fn validate(&self) -> Result<(), RedactionError> {
        if !self.bucket_edges.is_empty() {
            check_edges(&self.bucket_edges).map_err(|e| RedactionError::InvalidPolicy(e.0))?;
        }
        if self.rounding > 12 {
            return Err(RedactionError::InvalidPolicy(format!("rounding {} exceeds 12 places", self.rounding)));
        }
        Ok(())
    }

    fn mode(&self) -> ValidationMode {
        if self.strict_mode {
            ValidationMode::Strict
        } else {
            ValidationMode::Lenient
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RedactionError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("invalid report: {0}")]
    InvalidReport(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("redacted record fails validation: {0}")]
    Validation(ValidationReport),
}

/// Rounds half away from zero to `places` decimals.
pub fn round_half_away(value: f64, places: u32) -> f64 {
    let scale = 10f64.powi(places as i32);
    (value * scale).round() / scale
}

pub(crate) fn check_edges(edges: &[f64]) -> Result<(), DomainError> {
    match edges.first() {
        None => return Err(DomainError("bucket edges are empty".into())),
        Some(&first) if first != 0.0 => return Err(DomainError(format!("bucket edges must start at 0, got {first}"))),
        _ => {}
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(DomainError("bucket edges must be finite".into()));
    }
    if edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DomainError(format!("bucket edges must be strictly ascending: {edges:?}")));
    }
    Ok(())
}

fn buckets(edges: &[f64]) -> impl Iterator<Item = VolumeBucket> + '_ {
    edges.iter().enumerate().map(|(i, &lower)| VolumeBucket { lower, upper: edges.get(i + 1).copied() })
}

/// Places `pct` in the half-open interval `[L, U)` of `edges`; values at or
/// beyond the last edge land in the overflow bucket `≥E%`.
pub fn bucket_volume(pct: f64, edges: &[f64]) -> Result<VolumeBucket, DomainError> {
    check_edges(edges)?;
    if !pct.is_finite() || pct < 0.0 {
        return Err(DomainError(format!("cannot bucket {pct}: must be finite and non-negative")));
    }
    let i = edges.partition_point(|&e| e <= pct) - 1;
    Ok(VolumeBucket { lower: edges[i], upper: edges.get(i + 1).copied() })
}

/// Position of a bucket in interval order, if it belongs to `edges`.
pub fn bucket_index(bucket: &VolumeBucket, edges: &[f64]) -> Option<usize> {
    buckets(edges).position(|b| b == *bucket)
}

/// Resolves a label to the bucket of `edges` it names.
pub(crate) fn resolve_bucket_label(label: &str, edges: &[f64]) -> Option<VolumeBucket> {
    let parsed = VolumeBucket::parse_label(label)?;
    buckets(edges).find(|b| *b == parsed)
}

static ISO_DATETIME: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"\b\d{4}-(?:0[1-9]|1[0-2])-(?:0[1-9]|[12]\d|3[01])(?:[T ](?:[01]\d|2[0-3]):[0-5]\d(?::[0-5]\d(?:[.,]\d+)?)?(?:Z|[+-](?:[01]\d|2[0-3]):?[0-5]\d)?)?\b",
    )
    .unwrap()
});
static ISO_TIME: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b(?:[01]\d|2[0-3]):[0-5]\d(?::[0-5]\d(?:[.,]\d+)?)?(?:Z|[+-](?:[01]\d|2[0-3]):?[0-5]\d)?\b").unwrap()
});
const MONTHS: &str = r"(?:jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)";
static MONTH_PHRASE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"(?i)\b{MONTHS}\.?\s+(?:\d{{1,2}}(?:st|nd|rd|th)?,?\s+)?\d{{4}}\b|\b\d{{1,2}}(?:st|nd|rd|th)?\s+{MONTHS}\.?,?\s+\d{{4}}\b"
    ))
    .unwrap()
});
static DIGIT_RUN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+").unwrap());
static ISO_FULL: LazyLock<Regex> = LazyLock::new(|| Regex::new(&format!("^(?:{})$", ISO_DATETIME.as_str())).unwrap());

const TEMPORAL_KEYS: &[&str] = &[
    "timestamp",
    "time",
    "date",
    "datetime",
    "event_start",
    "event_end",
    "start_time",
    "end_time",
    "execution_date",
    "trade_date",
    "reported_at",
    "created_at",
    "updated_at",
    "duration",
];
const IDENTIFIER_KEYS: &[&str] =
    &["reporting_firm_id", "firm_id", "firm", "firm_name", "lei", "trader_id", "account_id"];
const NARRATIVE_KEYS: &[&str] =
    &["narrative", "description", "notes", "note", "comment", "comments", "summary", "details"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    Temporal,
    Identifier,
    Narrative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageFinding {
    pub location: String,
    pub kind: FindingKind,
    pub matched_text: String,
}

fn redacted_pct(value: f64, denominator: f64, places: u32) -> f64 {
    round_half_away(100.0 * value / denominator, places)
}

/// Redacts against the default closed-region schema.
pub fn redact(report: &InternalReport, policy: &RedactionPolicy) -> Result<IncidentRecord, RedactionError> {
    redact_with_schema(report, policy, &Schema::default())
}

pub fn redact_with_schema(
    report: &InternalReport,
    policy: &RedactionPolicy,
    schema: &Schema,
) -> Result<IncidentRecord, RedactionError> {
    policy.validate()?;
    for (name, ts) in [("event_start", &report.event_start), ("event_end", &report.event_end)] {
        if !ISO_FULL.is_match(ts.trim()) {
            return Err(RedactionError::InvalidReport(format!("{name} is not an ISO-8601 timestamp")));
        }
    }
    let absolutes = [
        ("absolute_buy_volume", report.absolute_buy_volume),
        ("absolute_sell_volume", report.absolute_sell_volume),
        ("absolute_ai_buy_volume", report.absolute_ai_buy_volume),
        ("absolute_ai_sell_volume", report.absolute_ai_sell_volume),
        ("market_total_buy_volume", report.market_total_buy_volume),
        ("market_total_sell_volume", report.market_total_sell_volume),
        ("trailing_30d_avg_volume", report.trailing_30d_avg_volume),
    ];
    for (name, v) in absolutes {
        if !v.is_finite() || v < 0.0 {
            return Err(RedactionError::InvalidReport(format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    if policy.strict_mode
        && (report.absolute_ai_buy_volume > report.absolute_buy_volume
            || report.absolute_ai_sell_volume > report.absolute_sell_volume)
    {
        return Err(RedactionError::InvalidReport("AI volume exceeds firm volume".into()));
    }
    if report.market_total_buy_volume <= 0.0 || report.market_total_sell_volume <= 0.0 {
        return Err(DomainError("market total volumes must be positive".into()).into());
    }
    if report.trailing_30d_avg_volume <= 0.0 {
        return Err(DomainError("trailing 30-day average volume must be positive".into()).into());
    }

    let places = policy.rounding;
    let ratio = 100.0 * (report.absolute_buy_volume + report.absolute_sell_volume) / report.trailing_30d_avg_volume;
    let volume_vs_30d = if policy.bucket_edges.is_empty() {
        VolumeVs30d::Exact(round_half_away(ratio, places))
    } else {
        VolumeVs30d::Bucket(bucket_volume(ratio, &policy.bucket_edges)?)
    };

    let record = IncidentRecord {
        serial_no: None,
        instrument_category: report.instrument_category,
        market_region: report.market_region.clone(),
        total_buy_volume_pct: redacted_pct(report.absolute_buy_volume, report.market_total_buy_volume, places),
        total_sell_volume_pct: redacted_pct(report.absolute_sell_volume, report.market_total_sell_volume, places),
        ai_buy_volume_pct: redacted_pct(report.absolute_ai_buy_volume, report.market_total_buy_volume, places),
        ai_sell_volume_pct: redacted_pct(report.absolute_ai_sell_volume, report.market_total_sell_volume, places),
        price_range_pct: round_half_away(report.price_range_pct, places),
        volume_vs_30d,
        market_impact_detected: report.market_impact_detected,
        issue_flag: report.issue_flag,
        ai_system_category: report.ai_system_category,
        incident_pattern: report.incident_pattern,
        human_oversight_involved: report.human_oversight_involved,
        fail_safe_triggered: report.fail_safe_triggered,
    };
    let validation = schema.validate(&record, policy.mode());
    if !validation.ok {
        return Err(RedactionError::Validation(validation));
    }
    Ok(record)
}

fn key_class(key: &str) -> Option<FindingKind> {
    let k = key.trim().to_ascii_lowercase().replace([' ', '-', '.'], "_");
    if TEMPORAL_KEYS.contains(&k.as_str()) {
        Some(FindingKind::Temporal)
    } else if IDENTIFIER_KEYS.contains(&k.as_str()) {
        Some(FindingKind::Identifier)
    } else if NARRATIVE_KEYS.contains(&k.as_str()) {
        Some(FindingKind::Narrative)
    } else {
        None
    }
}

fn overlaps(spans: &[(usize, usize)], start: usize, end: usize) -> bool {
    spans.iter().any(|&(s, e)| start < e && s < end)
}

fn denylist_regexes(policy: &RedactionPolicy) -> Vec<Regex> {
    policy
        .denylist
        .iter()
        .filter(|d| !d.trim().is_empty())
        .map(|d| {
            let d = d.trim();
            let lead = if d.starts_with(|c: char| c.is_alphanumeric() || c == '_') { r"\b" } else { "" };
            let trail = if d.ends_with(|c: char| c.is_alphanumeric() || c == '_') { r"\b" } else { "" };
            Regex::new(&format!("(?i){lead}{}{trail}", regex::escape(d))).expect("escaped literal is a valid regex")
        })
        .collect()
}

fn scan_text(text: &str, location: &str, deny: &[Regex], out: &mut Vec<LeakageFinding>) {
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut push = |start: usize, end: usize, kind: FindingKind, spans: &mut Vec<(usize, usize)>| {
        spans.push((start, end));
        out.push(LeakageFinding { location: location.to_string(), kind, matched_text: text[start..end].to_string() });
    };

    for re in [&*ISO_DATETIME, &*MONTH_PHRASE, &*ISO_TIME] {
        for m in re.find_iter(text) {
            if !overlaps(&spans, m.start(), m.end()) {
                push(m.start(), m.end(), FindingKind::Temporal, &mut spans);
            }
        }
    }
    let bytes = text.as_bytes();
    for m in DIGIT_RUN.find_iter(text) {
        let len = m.end() - m.start();
        if !(10..=13).contains(&len) || overlaps(&spans, m.start(), m.end()) {
            continue;
        }
        let before_ok = m.start() == 0 || {
            let b = bytes[m.start() - 1];
            !(b.is_ascii_alphanumeric() || b == b'_' || b == b'.')
        };
        let after_ok = m.end() == bytes.len() || {
            let b = bytes[m.end()];
            !(b.is_ascii_alphanumeric() || b == b'_')
        };
        if before_ok && after_ok {
            push(m.start(), m.end(), FindingKind::Temporal, &mut spans);
        }
    }
    for re in deny {
        for m in re.find_iter(text) {
            out.push(LeakageFinding {
                location: location.to_string(),
                kind: FindingKind::Identifier,
                matched_text: m.as_str().to_string(),
            });
        }
    }
}

fn scan_key(key: &str, value: Option<&Value>, location: &str, out: &mut Vec<LeakageFinding>) {
    if let Some(kind) = key_class(key) {
        let matched_text = match value {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(v) if !v.is_null() && !matches!(v, Value::String(_)) => v.to_string(),
            _ => key.to_string(),
        };
        out.push(LeakageFinding { location: location.to_string(), kind, matched_text });
    }
}

fn walk(value: &Value, location: &str, deny: &[Regex], out: &mut Vec<LeakageFinding>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let loc = if location.is_empty() { k.clone() } else { format!("{location}.{k}") };
                scan_key(k, Some(v), &loc, out);
                scan_text(k, &loc, deny, out);
                walk(v, &loc, deny, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                walk(v, &format!("{location}[{i}]"), deny, out);
            }
        }
        Value::String(s) => scan_text(s, location_or_root(location), deny, out),
        Value::Number(n) => scan_text(&n.to_string(), location_or_root(location), deny, out),
        Value::Bool(_) | Value::Null => {}
    }
}

fn location_or_root(location: &str) -> &str {
    if location.is_empty() {
        "$"
    } else {
        location
    }
}

fn scan_csv(text: &str, deny: &[Regex], out: &mut Vec<LeakageFinding>) -> bool {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let header: Vec<String> = match rdr.headers() {
        Ok(h) => h.iter().map(str::to_string).collect(),
        Err(_) => return false,
    };
    let mut rows = Vec::new();
    for row in rdr.records() {
        match row {
            Ok(r) => rows.push(r),
            Err(_) => return false,
        }
    }
    for h in &header {
        scan_key(h, None, h, out);
        scan_text(h, h, deny, out);
    }
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            let loc = header.get(i).cloned().unwrap_or_else(|| format!("column {}", i + 1));
            scan_text(cell, &loc, deny, out);
        }
    }
    true
}

/// Scans serialized output for temporal data, identifiers and narrative.
///
/// JSON (a single document or JSON lines) is walked field by field, CSV with
/// a header row is scanned cell by cell, anything else is scanned as text.
/// An empty result means the text is clean.
pub fn leakage_scan(serialized: &str, policy: &RedactionPolicy) -> Vec<LeakageFinding> {
    let deny = denylist_regexes(policy);
    let mut out = Vec::new();

    if let Ok(value) = serde_json::from_str::<Value>(serialized) {
        walk(&value, "", &deny, &mut out);
        return out;
    }
    let lines: Vec<&str> = serialized.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() > 1 {
        let parsed: Option<Vec<Value>> = lines.iter().map(|l| serde_json::from_str(l).ok()).collect();
        if let Some(values) = parsed {
            for (i, v) in values.iter().enumerate() {
                walk(v, &format!("line {}", i + 1), &deny, &mut out);
            }
            return out;
        }
        if lines[0].contains(',') && scan_csv(serialized, &deny, &mut out) {
            return out;
        }
        out.clear();
    }
    scan_text(serialized, "text", &deny, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{table2_records, to_csv_string};

    pub(crate) fn sample_report() -> InternalReport {
        InternalReport {
            event_start: "2024-08-05T09:30:00Z".into(),
            event_end: "2024-08-05T10:10:00Z".into(),
            reporting_firm_id: "Northwind Capital".into(),
            narrative: "Router looped on stale quotes".into(),
            instrument_category: InstrumentCategory::Derivative,
            market_region: MarketRegion::Emea,
            ai_system_category: AiSystemCategory::SmartOrderRouting,
            incident_pattern: IncidentPattern::InformationAdvantage,
            market_impact_detected: true,
            issue_flag: false,
            human_oversight_involved: false,
            fail_safe_triggered: false,
            price_range_pct: 14.5,
            absolute_buy_volume: 128.0,
            absolute_sell_volume: 111.0,
            absolute_ai_buy_volume: 69.0,
            absolute_ai_sell_volume: 56.0,
            market_total_buy_volume: 1000.0,
            market_total_sell_volume: 1000.0,
            trailing_30d_avg_volume: 239.0 / 1.357,
        }
    }

    #[test]
    fn redact_reproduces_table2_row1() {
        let record = redact(&sample_report(), &RedactionPolicy::default()).unwrap();
        let mut expected = table2_records().remove(0);
        expected.serial_no = None;
        assert_eq!(record, expected);
    }

    #[test]
    fn combined_volume_equal_to_average_is_exactly_100() {
        let mut r = sample_report();
        r.trailing_30d_avg_volume = r.absolute_buy_volume + r.absolute_sell_volume;
        let record = redact(&r, &RedactionPolicy::default()).unwrap();
        assert_eq!(record.volume_vs_30d, VolumeVs30d::Exact(100.0));
    }

    #[test]
    fn redact_buckets_with_edges() {
        let policy = RedactionPolicy { bucket_edges: vec![0.0, 100.0, 200.0], ..Default::default() };
        let record = redact(&sample_report(), &policy).unwrap();
        assert_eq!(record.volume_vs_30d.to_cell(), "100-200%");
    }

    #[test]
    fn redact_domain_errors() {
        let mut r = sample_report();
        r.market_total_buy_volume = 0.0;
        assert!(matches!(redact(&r, &RedactionPolicy::default()), Err(RedactionError::Domain(_))));
        let mut r = sample_report();
        r.trailing_30d_avg_volume = 0.0;
        assert!(matches!(redact(&r, &RedactionPolicy::default()), Err(RedactionError::Domain(_))));
    }

    #[test]
    fn redact_surfaces_validation_report() {
        let mut r = sample_report();
        r.absolute_buy_volume = 1500.0;
        r.absolute_ai_buy_volume = 100.0;
        match redact(&r, &RedactionPolicy::default()) {
            Err(RedactionError::Validation(rep)) => assert_eq!(rep.violations[0].field, "total_buy_volume_pct"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn redact_rejects_ai_above_firm_in_strict_mode() {
        let mut r = sample_report();
        r.absolute_ai_buy_volume = 200.0;
        assert!(matches!(redact(&r, &RedactionPolicy::default()), Err(RedactionError::InvalidReport(_))));
        let lenient = RedactionPolicy { strict_mode: false, ..Default::default() };
        assert!(redact(&r, &lenient).is_ok());
    }

    #[test]
    fn redact_rejects_malformed_timestamps() {
        let mut r = sample_report();
        r.event_start = "yesterday".into();
        assert!(matches!(redact(&r, &RedactionPolicy::default()), Err(RedactionError::InvalidReport(_))));
    }

    #[test]
    fn bucket_examples() {
        let edges = [0.0, 100.0, 200.0];
        assert_eq!(bucket_volume(135.7, &edges).unwrap().label(), "100-200%");
        assert_eq!(bucket_volume(0.0, &edges).unwrap().label(), "0-100%");
        assert_eq!(bucket_volume(250.0, &edges).unwrap().label(), "≥200%");
        assert_eq!(bucket_volume(200.0, &edges).unwrap().label(), "≥200%");
        assert_eq!(bucket_volume(99.999, &edges).unwrap().label(), "0-100%");
        assert!(bucket_volume(-0.1, &edges).is_err());
        assert!(bucket_volume(10.0, &[0.0, 100.0, 100.0]).is_err());
        assert!(bucket_volume(10.0, &[5.0, 100.0]).is_err());
    }

    #[test]
    fn scanner_examples() {
        let policy = RedactionPolicy::default();
        let f = leakage_scan("plunge on August 5, 2024 in equities", &policy);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].kind, FindingKind::Temporal);
        assert_eq!(f[0].matched_text, "August 5, 2024");

        let f = leakage_scan("event at 2024-08-05T09:30:00Z", &policy);
        assert_eq!(f.len(), 1, "{f:?}");
        assert_eq!(f[0].matched_text, "2024-08-05T09:30:00Z");

        assert_eq!(leakage_scan("ts=1722850200", &policy).len(), 1);
        assert_eq!(leakage_scan("ts=1722850200123", &policy).len(), 1);
        assert!(leakage_scan("id 12345678901234", &policy).is_empty());
        assert!(leakage_scan("ratio 0.1722850200", &policy).is_empty());
        assert_eq!(leakage_scan("at 09:30", &policy).len(), 1);
        assert_eq!(leakage_scan("in Aug 2024", &policy).len(), 1);
        assert_eq!(leakage_scan("on 5th August 2024", &policy).len(), 1);
        assert!(leakage_scan("MARKET_MAKING 2024 units", &policy).is_empty());
    }

    #[test]
    fn scanner_denylist_and_keys() {
        let policy = RedactionPolicy { denylist: vec!["Northwind Capital".into()], ..Default::default() };
        let f = leakage_scan("{\"note_x\":\"traded by northwind capital\"}", &policy);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].kind, FindingKind::Identifier);
        assert_eq!(f[0].location, "note_x");

        let json = serde_json::to_string(&sample_report()).unwrap();
        let f = leakage_scan(&json, &policy);
        let kinds: Vec<FindingKind> = f.iter().map(|x| x.kind).collect();
        assert!(kinds.contains(&FindingKind::Temporal));
        assert!(kinds.contains(&FindingKind::Identifier));
        assert!(kinds.contains(&FindingKind::Narrative));
        assert!(f.iter().all(|x| !x.matched_text.is_empty()));
    }

    #[test]
    fn serialized_records_are_clean() {
        let policy = RedactionPolicy::default();
        let rows = table2_records();
        for r in &rows {
            assert!(leakage_scan(&serde_json::to_string(r).unwrap(), &policy).is_empty());
        }
        assert!(leakage_scan(&to_csv_string(&rows), &policy).is_empty());
        assert!(leakage_scan(&crate::model::to_jsonl_string(&rows), &policy).is_empty());
    }

    #[test]
    fn timing_is_not_recoverable() {
        let policy = RedactionPolicy { bucket_edges: vec![0.0, 100.0, 200.0], ..Default::default() };
        let a = sample_report();
        let mut b = sample_report();
        b.event_start = "2023-01-02T00:00:00Z".into();
        b.event_end = "2023-01-02T03:00:00Z".into();
        b.reporting_firm_id = "Other Firm".into();
        b.trailing_30d_avg_volume *= 1.1;
        assert_eq!(redact(&a, &policy).unwrap(), redact(&b, &policy).unwrap());
    }

    #[test]
    fn round_half_away_from_zero() {
        assert_eq!(round_half_away(2.25, 1), 2.3);
        assert_eq!(round_half_away(-2.25, 1), -2.3);
        assert_eq!(round_half_away(12.8, 1), 12.8);
    }
}
