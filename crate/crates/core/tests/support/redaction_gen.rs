//! Random internal reports, policies and scanner-pattern payloads.
#![allow(dead_code)]

use incidentdb_core::confidentiality::{leakage_scan, FindingKind, InternalReport, LeakageFinding, RedactionPolicy};
use incidentdb_core::model::{
    AiSystemCategory, IncidentPattern, IncidentRecord, InstrumentCategory, MarketRegion, CSV_HEADER,
};

use super::anova_oracle::SplitMix;

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];
const FIRM_SUFFIX: [&str; 4] = ["Capital", "Partners", "Securities", "Trading"];

fn pick<'a, T>(rng: &mut SplitMix, items: &'a [T]) -> &'a T {
    &items[rng.range(0, items.len() - 1)]
}

fn word(rng: &mut SplitMix) -> String {
    let len = rng.range(4, 9);
    let mut w: String = (0..len).map(|_| (b'a' + rng.range(0, 25) as u8) as char).collect();
    w[..1].make_ascii_uppercase();
    w
}

pub fn firm_name(rng: &mut SplitMix) -> String {
    format!("{} {}", word(rng), pick(rng, &FIRM_SUFFIX))
}

fn iso_timestamp(rng: &mut SplitMix) -> String {
    format!(
        "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z",
        rng.range(2000, 2030),
        rng.range(1, 12),
        rng.range(1, 28),
        rng.range(0, 23),
        rng.range(0, 59),
        rng.range(0, 59)
    )
}

/// A report whose percentages all land inside [0, 100].
pub fn random_report(rng: &mut SplitMix) -> InternalReport {
    let market_buy = 10f64.powf(3.0 + 6.0 * rng.uniform());
    let market_sell = 10f64.powf(3.0 + 6.0 * rng.uniform());
    let buy = market_buy * (0.001 + 0.999 * rng.uniform());
    let sell = market_sell * (0.001 + 0.999 * rng.uniform());
    let ratio = 0.05 + 4.95 * rng.uniform();
    InternalReport {
        event_start: iso_timestamp(rng),
        event_end: iso_timestamp(rng),
        reporting_firm_id: firm_name(rng),
        narrative: format!("{} saw {} on {}", word(rng), word(rng), iso_timestamp(rng)),
        instrument_category: *pick(rng, InstrumentCategory::ALL),
        market_region: pick(rng, &MarketRegion::BUILTIN).clone(),
        ai_system_category: *pick(rng, AiSystemCategory::ALL),
        incident_pattern: *pick(rng, IncidentPattern::ALL),
        market_impact_detected: rng.uniform() < 0.5,
        issue_flag: rng.uniform() < 0.5,
        human_oversight_involved: rng.uniform() < 0.5,
        fail_safe_triggered: rng.uniform() < 0.5,
        price_range_pct: 100.0 * rng.uniform(),
        absolute_buy_volume: buy,
        absolute_sell_volume: sell,
        absolute_ai_buy_volume: buy * rng.uniform(),
        absolute_ai_sell_volume: sell * rng.uniform(),
        market_total_buy_volume: market_buy,
        market_total_sell_volume: market_sell,
        trailing_30d_avg_volume: (buy + sell) / ratio,
    }
}

pub fn random_policy(rng: &mut SplitMix, firm: &str) -> RedactionPolicy {
    let bucket_edges = match rng.range(0, 2) {
        0 => Vec::new(),
        1 => vec![0.0, 100.0, 200.0],
        _ => vec![0.0, 50.0, 80.0, 120.0, 150.0, 300.0],
    };
    RedactionPolicy {
        bucket_edges,
        strict_mode: true,
        denylist: vec![firm.to_string()],
        rounding: rng.range(0, 3) as u32,
    }
}

/// Where a payload goes: into a field value, or as a field name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Value,
    Key,
}

/// One row of the scanner pattern table with a generated instance.
#[derive(Debug, Clone)]
pub struct Payload {
    pub pattern: &'static str,
    pub kind: FindingKind,
    pub placement: Placement,
    pub text: String,
}

/// One instance of every scanner pattern, in table order.
pub fn payloads(rng: &mut SplitMix, firm: &str) -> Vec<Payload> {
    let month = MONTHS[rng.range(0, 11)];
    let (y, d) = (rng.range(1990, 2035), rng.range(1, 28));
    let zone = match rng.range(0, 2) {
        0 => String::new(),
        1 => "Z".into(),
        _ => format!("+{:02}:{:02}", rng.range(0, 14), 30 * rng.range(0, 1)),
    };
    let time = format!("{:02}:{:02}:{:02}", rng.range(0, 23), rng.range(0, 59), rng.range(0, 59));
    let digits = rng.range(10, 13);
    let epoch: String = std::iter::once((b'1' + rng.range(0, 8) as u8) as char)
        .chain((1..digits).map(|_| (b'0' + rng.range(0, 9) as u8) as char))
        .collect();
    let value = |pattern, kind, text: String| Payload { pattern, kind, placement: Placement::Value, text };
    let key = |pattern, kind, text: &str| Payload { pattern, kind, placement: Placement::Key, text: text.into() };
    let temporal_keys = ["timestamp", "event_start", "date", "trade_date", "created_at", "duration"];
    let identifier_keys = ["firm_id", "lei", "reporting_firm_id", "trader_id"];
    let narrative_keys = ["narrative", "notes", "description", "comment"];
    vec![
        value("iso_date", FindingKind::Temporal, format!("{y:04}-{:02}-{d:02}", rng.range(1, 12))),
        value("iso_datetime", FindingKind::Temporal, format!("{y:04}-{:02}-{d:02}T{time}{zone}", rng.range(1, 12))),
        value("iso_time", FindingKind::Temporal, format!("{}{zone}", &time[..if rng.uniform() < 0.5 { 5 } else { 8 }])),
        value("epoch", FindingKind::Temporal, epoch),
        value("month_day_year", FindingKind::Temporal, format!("{month} {d}, {y}")),
        value("month_year", FindingKind::Temporal, format!("{} {y}", &month[..3])),
        value("day_month_year", FindingKind::Temporal, format!("{d} {month} {y}")),
        value("denylist", FindingKind::Identifier, firm.to_string()),
        key("temporal_key", FindingKind::Temporal, temporal_keys[rng.range(0, temporal_keys.len() - 1)]),
        key("identifier_key", FindingKind::Identifier, identifier_keys[rng.range(0, identifier_keys.len() - 1)]),
        key("narrative_key", FindingKind::Narrative, narrative_keys[rng.range(0, narrative_keys.len() - 1)]),
    ]
}

fn hit(findings: &[LeakageFinding], p: &Payload) -> bool {
    findings.iter().any(|f| {
        f.kind == p.kind
            && match p.placement {
                Placement::Value => f.matched_text.contains(&p.text),
                Placement::Key => f.location == p.text,
            }
    })
}

/// Injects `p` into the JSON and CSV serializations of `record` and reports
/// whether the scanner flags it in each.
pub fn detected(record: &IncidentRecord, policy: &RedactionPolicy, p: &Payload, rng: &mut SplitMix) -> (bool, bool) {
    let mut json: serde_json::Value = serde_json::to_value(record).unwrap();
    let mut header: Vec<String> = CSV_HEADER.iter().map(|s| s.to_string()).collect();
    let mut row: Vec<String> = record.to_csv_row().to_vec();
    match p.placement {
        Placement::Value => {
            let fields = ["instrument_category", "market_region", "ai_system_category", "incident_pattern"];
            let field = fields[rng.range(0, fields.len() - 1)];
            let original = json[field].as_str().unwrap().to_string();
            json[field] = format!("{original} {}", p.text).into();
            let col = rng.range(1, row.len() - 1);
            row[col] = format!("{} {}", row[col], p.text);
        }
        Placement::Key => {
            json[p.text.as_str()] = "x".into();
            header.push(p.text.clone());
            row.push("x".into());
        }
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&header).unwrap();
    w.write_record(&row).unwrap();
    let csv_text = String::from_utf8(w.into_inner().unwrap()).unwrap();
    (hit(&leakage_scan(&json.to_string(), policy), p), hit(&leakage_scan(&csv_text, policy), p))
}
