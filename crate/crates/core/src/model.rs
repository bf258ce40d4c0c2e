//! Incident record schema: enumerations, the public record type, parsing,
//! validation and the Table-style CSV layout shared by every other module.
//!
//! Percent fields are plain `f64`. Comparisons against bounds use an absolute
//! tolerance of [`PCT_TOLERANCE`]; values are emitted as the shortest decimal
//! that round-trips, so one-decimal inputs come back out unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Absolute tolerance used for every percent comparison.
pub const PCT_TOLERANCE: f64 = 1e-9;

/// Column headers, in order, of the incident CSV.
pub const CSV_HEADER: [&str; 15] = [
    "S.No",
    "Instrument_Category",
    "Market_Region",
    "Total_Buy_Volume_Pct",
    "Total_Sell_Volume_Pct",
    "AI_Buy_Volume_Pct",
    "AI_Sell_Volume_Pct",
    "Price_Range_Pct",
    "Volume_vs_30D_Avg_Pct",
    "Market_Impact_Detected",
    "Issue_Flag",
    "AI_System_Category",
    "Incident_Pattern",
    "Human_oversight_involved",
    "Fail_Safe_Triggered",
];

/// Normalizes an enum token or field name: trim, strip quotes, uppercase,
/// map spaces and hyphens to underscores and collapse repeated underscores.
pub fn normalize_token(raw: &str) -> String {
    let trimmed = raw.trim().trim_matches(|c| c == '\'' || c == '"').trim();
    let mut out = String::with_capacity(trimmed.len());
    for ch in trimmed.chars() {
        let ch = match ch {
            ' ' | '-' | '\t' => '_',
            c => c.to_ascii_uppercase(),
        };
        if ch == '_' && out.ends_with('_') {
            continue;
        }
        out.push(ch);
    }
    out.trim_matches('_').to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} token {token:?}")]
pub struct UnknownToken {
    pub kind: &'static str,
    pub token: String,
}

macro_rules! closed_enum {
    (
        $(#[$meta:meta])*
        $name:ident, $kind:literal {
            $($variant:ident => $canon:literal $(| $alias:literal)*),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            /// Every member in canonical order.
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $canon),+
                }
            }

            /// Parses a token after normalization.
            pub fn parse(raw: &str) -> Result<Self, UnknownToken> {
                let norm = normalize_token(raw);
                match norm.as_str() {
                    $($canon $(| $alias)* => Ok($name::$variant),)+
                    _ => Err(UnknownToken { kind: $kind, token: raw.to_string() }),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownToken;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::parse(s)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(d)?;
                Self::parse(&raw).map_err(de::Error::custom)
            }
        }
    };
}

closed_enum! {
    /// Classification of the financial instrument involved.
    InstrumentCategory, "instrument category" {
        Equity => "EQUITY" | "EQTY" | "EQUITIES",
        Bond => "BND",
        Derivative => "DERV",
        ForeignExchange => "FX",
        Etf => "ETF",
        MutualFund => "MUTUALFUND" | "MUTUAL_FUND",
        Commodity => "CMDTY",
        StructuredFinance => "SFP",
        EmissionAllowance => "EA",
        Future => "FUTURE",
    }
}

closed_enum! {
    /// Type of AI trading system involved.
    AiSystemCategory, "AI system category" {
        AlgorithmicTrading => "ALGORITHMIC_TRADING",
        Arbitrage => "ARBITRAGE",
        Hft => "HFT",
        MarketMaking => "MARKET_MAKING",
        PredictionBasedTrading => "PREDICTION_BASED_TRADING",
        PortfolioOptimization => "PORTFOLIO_OPTIMIZATION",
        SentimentAnalysisBasedTrading => "SENTIMENT_ANALYSIS_BASED_TRADING",
        SmartOrderRouting => "SMART_ORDER_ROUTING",
    }
}

closed_enum! {
    /// Classification of the observed behaviour pattern.
    IncidentPattern, "incident pattern" {
        AnomalyDetection => "PATTERN_ANOMALY_DETECTION",
        Arbitrage => "PATTERN_ARBITRAGE",
        InformationAdvantage => "PATTERN_INFORMATION_ADVANTAGE",
        MomentumIgnition => "PATTERN_MOMENTUM_IGNITION",
        OrderBookManipulation => "PATTERN_ORDER_BOOK_MANIPULATION",
        SentimentDriven => "PATTERN_SENTIMENT_DRIVEN",
        VolatilityTrading => "PATTERN_VOLATILITY_TRADING",
    }
}

/// Geographic region of the incident.
///
/// The three built-in regions form the default closed set. `Extended` carries
/// a normalized token that is only valid when a [`Schema`] lists it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MarketRegion {
    Apac,
    Emea,
    Amer,
    Extended(String),
}

impl MarketRegion {
    pub const BUILTIN: [MarketRegion; 3] = [MarketRegion::Apac, MarketRegion::Emea, MarketRegion::Amer];

    pub fn as_str(&self) -> &str {
        match self {
            MarketRegion::Apac => "APAC",
            MarketRegion::Emea => "EMEA",
            MarketRegion::Amer => "AMER",
            MarketRegion::Extended(s) => s,
        }
    }

    /// Parses one of the built-in regions.
    pub fn parse(raw: &str) -> Result<Self, UnknownToken> {
        match Self::parse_any(raw)? {
            MarketRegion::Extended(_) => Err(UnknownToken { kind: "market region", token: raw.to_string() }),
            region => Ok(region),
        }
    }

    /// Parses any syntactically plausible region token; membership of
    /// extended tokens is checked by [`Schema`].
    fn parse_any(raw: &str) -> Result<Self, UnknownToken> {
        let norm = normalize_token(raw);
        match norm.as_str() {
            "APAC" => Ok(MarketRegion::Apac),
            "EMEA" => Ok(MarketRegion::Emea),
            "AMER" => Ok(MarketRegion::Amer),
            t if !t.is_empty()
                && t.starts_with(|c: char| c.is_ascii_uppercase())
                && t.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_') =>
            {
                Ok(MarketRegion::Extended(norm))
            }
            _ => Err(UnknownToken { kind: "market region", token: raw.to_string() }),
        }
    }
}

impl fmt::Display for MarketRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for MarketRegion {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for MarketRegion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        MarketRegion::parse_any(&raw).map_err(de::Error::custom)
    }
}

/// Formats a percent as the shortest round-trip decimal with at least one
/// fractional digit.
pub fn format_pct(value: f64) -> String {
    let mut s = value.to_string();
    if value.is_finite() && !s.contains('.') {
        s.push_str(".0");
    }
    s
}

fn format_edge(value: f64) -> String {
    value.to_string()
}

/// A half-open interval `[lower, upper)` of volume-vs-30-day percentages, or
/// `[lower, ∞)` when `upper` is absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeBucket {
    pub lower: f64,
    pub upper: Option<f64>,
}

impl VolumeBucket {
    pub fn label(&self) -> String {
        match self.upper {
            Some(upper) => format!("{}-{}%", format_edge(self.lower), format_edge(upper)),
            None => format!("≥{}%", format_edge(self.lower)),
        }
    }

    /// Parses `"L-U%"`, `"≥L%"` or `">=L%"`.
    pub fn parse_label(raw: &str) -> Option<Self> {
        let s = raw.trim();
        let s = s.strip_suffix('%').unwrap_or(s).trim();
        if let Some(rest) = s.strip_prefix('≥').or_else(|| s.strip_prefix(">=")) {
            let lower = rest.trim().parse::<f64>().ok()?;
            return Some(VolumeBucket { lower, upper: None });
        }
        let (lo, hi) = s.split_once('-')?;
        let lower = lo.trim().parse::<f64>().ok()?;
        let upper = hi.trim().trim_end_matches('%').parse::<f64>().ok()?;
        Some(VolumeBucket { lower, upper: Some(upper) })
    }

    pub fn contains(&self, pct: f64) -> bool {
        pct >= self.lower && self.upper.is_none_or(|u| pct < u)
    }

    /// Representative value used where a single number is needed: the
    /// midpoint of a bounded bucket, the lower edge of the overflow bucket.
    pub fn representative(&self) -> f64 {
        match self.upper {
            Some(u) => (self.lower + u) / 2.0,
            None => self.lower,
        }
    }
}

/// Trading volume compared with the trailing 30-day average: either an
/// exact percentage or a range bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeVs30d {
    Exact(f64),
    Bucket(VolumeBucket),
}

impl VolumeVs30d {
    pub fn exact(&self) -> Option<f64> {
        match self {
            VolumeVs30d::Exact(v) => Some(*v),
            VolumeVs30d::Bucket(_) => None,
        }
    }

    /// Exact value, or the bucket's representative value.
    pub fn numeric(&self) -> f64 {
        match self {
            VolumeVs30d::Exact(v) => *v,
            VolumeVs30d::Bucket(b) => b.representative(),
        }
    }

    pub fn to_cell(&self) -> String {
        match self {
            VolumeVs30d::Exact(v) => format_pct(*v),
            VolumeVs30d::Bucket(b) => b.label(),
        }
    }

    pub fn parse_cell(raw: &str) -> Option<Self> {
        let s = raw.trim();
        let numeric = s.strip_suffix('%').unwrap_or(s).trim();
        if let Ok(v) = numeric.parse::<f64>() {
            return Some(VolumeVs30d::Exact(v));
        }
        VolumeBucket::parse_label(s).map(VolumeVs30d::Bucket)
    }
}

impl Serialize for VolumeVs30d {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            VolumeVs30d::Exact(v) => s.serialize_f64(*v),
            VolumeVs30d::Bucket(b) => s.serialize_str(&b.label()),
        }
    }
}

impl<'de> Deserialize<'de> for VolumeVs30d {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = VolumeVs30d;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a percentage or a bucket label such as \"100-200%\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Ok(VolumeVs30d::Exact(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(VolumeVs30d::Exact(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(VolumeVs30d::Exact(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                VolumeVs30d::parse_cell(v).ok_or_else(|| E::custom(format!("invalid volume value {v:?}")))
            }
        }
        d.deserialize_any(V)
    }
}

pub(crate) mod yes_no {
    use super::*;

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_bool(*v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = bool;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a boolean or YES/NO")
            }
            fn visit_bool<E: de::Error>(self, v: bool) -> Result<bool, E> {
                Ok(v)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<bool, E> {
                super::parse_yes_no(v).ok_or_else(|| E::custom(format!("expected YES or NO, got {v:?}")))
            }
        }
        d.deserialize_any(V)
    }
}

pub fn parse_yes_no(raw: &str) -> Option<bool> {
    match normalize_token(raw).as_str() {
        "YES" | "Y" | "TRUE" => Some(true),
        "NO" | "N" | "FALSE" => Some(false),
        _ => None,
    }
}

pub fn yes_no(v: bool) -> &'static str {
    if v {
        "YES"
    } else {
        "NO"
    }
}

/// One public, temporally redacted incident row.
///
/// There is deliberately no field able to carry a timestamp, date, duration,
/// firm identifier or narrative, and unknown fields are rejected on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncidentRecord {
    /// Assigned by the store; `None` until then.
    #[serde(default)]
    pub serial_no: Option<u64>,
    pub instrument_category: InstrumentCategory,
    pub market_region: MarketRegion,
    pub total_buy_volume_pct: f64,
    pub total_sell_volume_pct: f64,
    pub ai_buy_volume_pct: f64,
    pub ai_sell_volume_pct: f64,
    pub price_range_pct: f64,
    #[serde(rename = "volume_vs_30d_avg_pct")]
    pub volume_vs_30d: VolumeVs30d,
    #[serde(with = "yes_no")]
    pub market_impact_detected: bool,
    #[serde(with = "yes_no")]
    pub issue_flag: bool,
    pub ai_system_category: AiSystemCategory,
    pub incident_pattern: IncidentPattern,
    #[serde(with = "yes_no")]
    pub human_oversight_involved: bool,
    #[serde(with = "yes_no")]
    pub fail_safe_triggered: bool,
}

impl IncidentRecord {
    /// Copy with the serial cleared; the basis of content hashing.
    pub fn without_serial(&self) -> IncidentRecord {
        IncidentRecord { serial_no: None, ..self.clone() }
    }

    /// Canonical JSON serialization (fixed field order, serial cleared).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.without_serial()).expect("record serialization is infallible")
    }

    /// The fifteen CSV cells in header order.
    pub fn to_csv_row(&self) -> [String; 15] {
        [
            self.serial_no.map(|s| s.to_string()).unwrap_or_default(),
            self.instrument_category.to_string(),
            self.market_region.to_string(),
            format_pct(self.total_buy_volume_pct),
            format_pct(self.total_sell_volume_pct),
            format_pct(self.ai_buy_volume_pct),
            format_pct(self.ai_sell_volume_pct),
            format_pct(self.price_range_pct),
            self.volume_vs_30d.to_cell(),
            yes_no(self.market_impact_detected).to_string(),
            yes_no(self.issue_flag).to_string(),
            self.ai_system_category.to_string(),
            self.incident_pattern.to_string(),
            yes_no(self.human_oversight_involved).to_string(),
            yes_no(self.fail_safe_triggered).to_string(),
        ]
    }

    /// Cells keyed by CSV header name.
    pub fn to_row_map(&self) -> BTreeMap<String, String> {
        CSV_HEADER.iter().map(|h| h.to_string()).zip(self.to_csv_row()).collect()
    }
}

/// Combined AI share of the incident's volume, in percent.
pub fn ai_share(record: &IncidentRecord) -> Result<f64, DomainError> {
    let total = record.total_buy_volume_pct + record.total_sell_volume_pct;
    if total.is_nan() || total <= 0.0 {
        return Err(DomainError("ai_share requires total buy + sell volume > 0".into()));
    }
    Ok(100.0 * (record.ai_buy_volume_pct + record.ai_sell_volume_pct) / total)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("domain error: {0}")]
pub struct DomainError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    NotFinite,
    Negative,
    AboveHundred,
    AiExceedsTotal,
    SerialNotPositive,
    UnknownRegion,
    MalformedBucket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: Rule,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport { ok: violations.is_empty(), violations }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return f.write_str("ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| format!("{}: {}", v.field, v.message)).collect();
        f.write_str(&parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("missing required field {0}")]
    MissingField(&'static str),
    #[error("unknown field {0:?}")]
    UnknownField(String),
    #[error("field {field}: unknown token {value:?}")]
    UnknownToken { field: &'static str, value: String },
    #[error("field {field}: not a number: {value:?}")]
    NotNumeric { field: &'static str, value: String },
    #[error("field {field}: expected YES or NO, got {value:?}")]
    NotBoolean { field: &'static str, value: String },
}

/// Schema configuration: which extended market regions are admitted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default)]
    pub extra_regions: BTreeSet<String>,
}

impl Schema {
    pub fn with_regions<I, S>(regions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Schema { extra_regions: regions.into_iter().map(|r| normalize_token(r.as_ref())).collect() }
    }

    /// Every admitted region, built-ins first.
    pub fn regions(&self) -> Vec<MarketRegion> {
        let mut out = MarketRegion::BUILTIN.to_vec();
        out.extend(self.extra_regions.iter().map(|r| MarketRegion::Extended(r.clone())));
        out
    }

    pub fn parse_region(&self, raw: &str) -> Result<MarketRegion, UnknownToken> {
        match MarketRegion::parse_any(raw)? {
            MarketRegion::Extended(t) if !self.extra_regions.contains(&t) => {
                Err(UnknownToken { kind: "market region", token: raw.to_string() })
            }
            region => Ok(region),
        }
    }

    /// Builds a record from a flat string map keyed by CSV header names
    /// (matched after normalization).
    pub fn parse_record(&self, row: &BTreeMap<String, String>) -> Result<IncidentRecord, ParseError> {
        let mut cells: BTreeMap<String, &str> = BTreeMap::new();
        let known: Vec<String> = CSV_HEADER.iter().map(|h| normalize_token(h)).collect();
        for (k, v) in row {
            let key = normalize_token(k);
            if !known.contains(&key) {
                return Err(ParseError::UnknownField(k.clone()));
            }
            cells.insert(key, v.as_str());
        }
        let get = |field: &'static str| -> Result<&str, ParseError> {
            cells
                .get(&normalize_token(field))
                .copied()
                .filter(|v| !v.trim().is_empty())
                .ok_or(ParseError::MissingField(field))
        };
        let pct = |field: &'static str| -> Result<f64, ParseError> {
            let raw = get(field)?;
            let s = raw.trim();
            s.strip_suffix('%')
                .unwrap_or(s)
                .trim()
                .parse::<f64>()
                .map_err(|_| ParseError::NotNumeric { field, value: raw.to_string() })
        };
        let flag = |field: &'static str| -> Result<bool, ParseError> {
            let raw = get(field)?;
            parse_yes_no(raw).ok_or_else(|| ParseError::NotBoolean { field, value: raw.to_string() })
        };
        fn token<T>(field: &'static str, raw: &str, r: Result<T, UnknownToken>) -> Result<T, ParseError> {
            r.map_err(|_| ParseError::UnknownToken { field, value: raw.to_string() })
        }

        let serial_no = match cells.get(&normalize_token("S.No")).map(|s| s.trim()) {
            None | Some("") => None,
            Some(s) => {
                Some(s.parse::<u64>().map_err(|_| ParseError::NotNumeric { field: "S.No", value: s.to_string() })?)
            }
        };
        let instrument = get("Instrument_Category")?;
        let region = get("Market_Region")?;
        let system = get("AI_System_Category")?;
        let pattern = get("Incident_Pattern")?;
        let volume_raw = get("Volume_vs_30D_Avg_Pct")?;

        Ok(IncidentRecord {
            serial_no,
            instrument_category: token("Instrument_Category", instrument, InstrumentCategory::parse(instrument))?,
            market_region: token("Market_Region", region, self.parse_region(region))?,
            total_buy_volume_pct: pct("Total_Buy_Volume_Pct")?,
            total_sell_volume_pct: pct("Total_Sell_Volume_Pct")?,
            ai_buy_volume_pct: pct("AI_Buy_Volume_Pct")?,
            ai_sell_volume_pct: pct("AI_Sell_Volume_Pct")?,
            price_range_pct: pct("Price_Range_Pct")?,
            volume_vs_30d: VolumeVs30d::parse_cell(volume_raw).ok_or_else(|| ParseError::NotNumeric {
                field: "Volume_vs_30D_Avg_Pct",
                value: volume_raw.to_string(),
            })?,
            market_impact_detected: flag("Market_Impact_Detected")?,
            issue_flag: flag("Issue_Flag")?,
            ai_system_category: token("AI_System_Category", system, AiSystemCategory::parse(system))?,
            incident_pattern: token("Incident_Pattern", pattern, IncidentPattern::parse(pattern))?,
            human_oversight_involved: flag("Human_oversight_involved")?,
            fail_safe_triggered: flag("Fail_Safe_Triggered")?,
        })
    }

    /// Reports every violated invariant. Never mutates the record.
    pub fn validate(&self, record: &IncidentRecord, mode: ValidationMode) -> ValidationReport {
        let mut violations = Vec::new();
        let mut push = |field: &str, rule: Rule, message: String| {
            violations.push(Violation { field: field.to_string(), rule, message });
        };

        if record.serial_no == Some(0) {
            push("serial_no", Rule::SerialNotPositive, "serial number must be positive".into());
        }
        if let MarketRegion::Extended(t) = &record.market_region {
            if !self.extra_regions.contains(t) {
                push("market_region", Rule::UnknownRegion, format!("region {t:?} is not configured"));
            }
        }

        let volumes = [
            ("total_buy_volume_pct", record.total_buy_volume_pct),
            ("total_sell_volume_pct", record.total_sell_volume_pct),
            ("ai_buy_volume_pct", record.ai_buy_volume_pct),
            ("ai_sell_volume_pct", record.ai_sell_volume_pct),
        ];
        for (field, v) in volumes {
            if !v.is_finite() {
                push(field, Rule::NotFinite, format!("{v} is not finite"));
            } else if v < -PCT_TOLERANCE {
                push(field, Rule::Negative, format!("{v} is negative"));
            } else if v > 100.0 + PCT_TOLERANCE {
                push(field, Rule::AboveHundred, format!("{v} exceeds 100"));
            }
        }

        let price = record.price_range_pct;
        if !price.is_finite() {
            push("price_range_pct", Rule::NotFinite, format!("{price} is not finite"));
        } else if price < -PCT_TOLERANCE {
            push("price_range_pct", Rule::Negative, format!("{price} is negative"));
        }

        match record.volume_vs_30d {
            VolumeVs30d::Exact(v) => {
                if !v.is_finite() {
                    push("volume_vs_30d_avg_pct", Rule::NotFinite, format!("{v} is not finite"));
                } else if v < -PCT_TOLERANCE {
                    push("volume_vs_30d_avg_pct", Rule::Negative, format!("{v} is negative"));
                }
            }
            VolumeVs30d::Bucket(b) => {
                let bad_upper = b.upper.is_some_and(|u| !u.is_finite() || u <= b.lower);
                if !b.lower.is_finite() || b.lower < 0.0 || bad_upper {
                    push(
                        "volume_vs_30d_avg_pct",
                        Rule::MalformedBucket,
                        format!("bucket {:?} is malformed", b.label()),
                    );
                }
            }
        }

        if mode == ValidationMode::Strict {
            if record.ai_buy_volume_pct > record.total_buy_volume_pct + PCT_TOLERANCE {
                push(
                    "ai_buy_volume_pct",
                    Rule::AiExceedsTotal,
                    format!("AI buy {} exceeds total buy {}", record.ai_buy_volume_pct, record.total_buy_volume_pct),
                );
            }
            if record.ai_sell_volume_pct > record.total_sell_volume_pct + PCT_TOLERANCE {
                push(
                    "ai_sell_volume_pct",
                    Rule::AiExceedsTotal,
                    format!(
                        "AI sell {} exceeds total sell {}",
                        record.ai_sell_volume_pct, record.total_sell_volume_pct
                    ),
                );
            }
        }
        ValidationReport::from_violations(violations)
    }
}

/// Validates against the default (closed-region) schema.
pub fn validate_record(record: &IncidentRecord, mode: ValidationMode) -> ValidationReport {
    Schema::default().validate(record, mode)
}

/// Parses against the default (closed-region) schema.
pub fn parse_record(row: &BTreeMap<String, String>) -> Result<IncidentRecord, ParseError> {
    Schema::default().parse_record(row)
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    Header { expected: Vec<String>, found: Vec<String> },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A data row that failed to parse, numbered from 1 (header excluded).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub row: usize,
    pub reason: String,
}

/// Reads incident CSV. The header must match [`CSV_HEADER`] (in order,
/// after normalization); per-row failures are returned in place.
pub fn read_csv<R: Read>(schema: &Schema, reader: R) -> Result<Vec<Result<IncidentRecord, RowError>>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim_start_matches('\u{feff}').to_string()).collect();
    let expected: Vec<String> = CSV_HEADER.iter().map(|h| normalize_token(h)).collect();
    let found: Vec<String> = header.iter().map(|h| normalize_token(h)).collect();
    if found != expected {
        return Err(CsvError::Header { expected: CSV_HEADER.iter().map(|s| s.to_string()).collect(), found: header });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let parsed = match row {
            Err(e) => Err(RowError { row: row_no, reason: e.to_string() }),
            Ok(row) if row.len() != CSV_HEADER.len() => Err(RowError {
                row: row_no,
                reason: format!("expected {} cells, found {}", CSV_HEADER.len(), row.len()),
            }),
            Ok(row) => {
                let map: BTreeMap<String, String> =
                    header.iter().cloned().zip(row.iter().map(str::to_string)).collect();
                schema.parse_record(&map).map_err(|e| RowError { row: row_no, reason: e.to_string() })
            }
        };
        out.push(parsed);
    }
    Ok(out)
}

/// Writes records as incident CSV with the exact header.
pub fn write_csv<'a, W, I>(writer: W, records: I) -> Result<usize, CsvError>
where
    W: Write,
    I: IntoIterator<Item = &'a IncidentRecord>,
{
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    let mut n = 0;
    for record in records {
        wtr.write_record(record.to_csv_row())?;
        n += 1;
    }
    wtr.flush()?;
    Ok(n)
}

/// Renders records as CSV text.
pub fn to_csv_string<'a, I>(records: I) -> String
where
    I: IntoIterator<Item = &'a IncidentRecord>,
{
    let mut buf = Vec::new();
    write_csv(&mut buf, records).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Renders records as JSON lines.
pub fn to_jsonl_string<'a, I>(records: I) -> String
where
    I: IntoIterator<Item = &'a IncidentRecord>,
{
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serialization is infallible"));
        out.push('\n');
    }
    out
}

/// Sample rows printed with the schema proposal, verbatim spellings
/// (`EQTY`, `PREDICTION-BASED_TRADING`) included.
pub const TABLE2_CSV: &str = include_str!("../data/table2.csv");

/// The four sample rows, parsed.
pub fn table2_records() -> Vec<IncidentRecord> {
    read_csv(&Schema::default(), TABLE2_CSV.as_bytes())
        .expect("bundled sample has a valid header")
        .into_iter()
        .map(|r| r.expect("bundled sample rows parse"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row1() -> IncidentRecord {
        table2_records().remove(0)
    }

    #[test]
    fn table2_rows_are_strict_valid() {
        let rows = table2_records();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            let rep = validate_record(r, ValidationMode::Strict);
            assert!(rep.ok, "{rep}");
        }
        let r = &rows[0];
        assert_eq!(r.instrument_category, InstrumentCategory::Derivative);
        assert_eq!(r.market_region, MarketRegion::Emea);
        assert_eq!(r.volume_vs_30d, VolumeVs30d::Exact(135.7));
        assert!(r.market_impact_detected && !r.issue_flag);
        assert_eq!(r.ai_system_category, AiSystemCategory::SmartOrderRouting);
        assert_eq!(rows[3].instrument_category, InstrumentCategory::Equity);
        assert_eq!(rows[3].ai_system_category, AiSystemCategory::PredictionBasedTrading);
    }

    #[test]
    fn range_violation() {
        let mut r = row1();
        r.total_buy_volume_pct = 101.0;
        let rep = validate_record(&r, ValidationMode::Lenient);
        assert!(!rep.ok);
        assert_eq!(rep.violations[0].field, "total_buy_volume_pct");
        assert_eq!(rep.violations[0].rule, Rule::AboveHundred);
    }

    #[test]
    fn ordering_only_in_strict_mode() {
        let mut r = row1();
        r.ai_buy_volume_pct = 8.0;
        r.total_buy_volume_pct = 6.0;
        assert!(validate_record(&r, ValidationMode::Lenient).ok);
        let strict = validate_record(&r, ValidationMode::Strict);
        assert_eq!(strict.violations.len(), 1);
        assert_eq!(strict.violations[0].rule, Rule::AiExceedsTotal);
    }

    #[test]
    fn validation_collects_every_violation() {
        let mut r = row1();
        r.price_range_pct = f64::NAN;
        r.ai_sell_volume_pct = -1.0;
        r.serial_no = Some(0);
        let rep = validate_record(&r, ValidationMode::Strict);
        assert!(!rep.ok);
        assert_eq!(rep.violations.len(), 3);
    }

    #[test]
    fn normalization_of_paper_spellings() {
        assert_eq!(
            AiSystemCategory::parse("SENTIMENT ANALYSIS-BASED TRADING").unwrap(),
            AiSystemCategory::SentimentAnalysisBasedTrading
        );
        assert_eq!(
            AiSystemCategory::parse("'SENTIMENT_ANALYSIS-BASED_TRADING'").unwrap(),
            AiSystemCategory::SentimentAnalysisBasedTrading
        );
        assert_eq!(
            AiSystemCategory::parse("'PREDICTION_BASED TRADING'").unwrap(),
            AiSystemCategory::PredictionBasedTrading
        );
        assert_eq!(AiSystemCategory::parse("MARKET_MAKING'").unwrap(), AiSystemCategory::MarketMaking);
        assert_eq!(IncidentPattern::parse("'PATTERN_VOLATILITY TRADING'").unwrap(), IncidentPattern::VolatilityTrading);
        assert_eq!(InstrumentCategory::parse("eqty").unwrap().as_str(), "EQUITY");
        assert_eq!(normalize_token("  a--b  c "), "A_B_C");
        assert!(InstrumentCategory::parse("STOCK").is_err());
    }

    #[test]
    fn parse_record_from_map() {
        let mut row = table2_records()[1].to_row_map();
        row.insert("Market_Impact_Detected".into(), "YES".into());
        row.insert("ai system category".into(), "SENTIMENT ANALYSIS-BASED TRADING".into());
        row.remove("AI_System_Category");
        let r = parse_record(&row).unwrap();
        assert_eq!(r.price_range_pct, 9.3);
        assert_eq!(r.market_region, MarketRegion::Apac);
        assert!(r.market_impact_detected);
        assert_eq!(r.ai_system_category, AiSystemCategory::SentimentAnalysisBasedTrading);
    }

    #[test]
    fn parse_errors_name_field_and_value() {
        let base = row1().to_row_map();

        let mut row = base.clone();
        row.insert("Instrument_Category".into(), "STOCK".into());
        let err = parse_record(&row).unwrap_err();
        assert_eq!(err, ParseError::UnknownToken { field: "Instrument_Category", value: "STOCK".into() });

        let mut row = base.clone();
        row.remove("Issue_Flag");
        assert_eq!(parse_record(&row).unwrap_err(), ParseError::MissingField("Issue_Flag"));

        let mut row = base.clone();
        row.insert("Price_Range_Pct".into(), "high".into());
        assert!(matches!(parse_record(&row).unwrap_err(), ParseError::NotNumeric { field: "Price_Range_Pct", .. }));

        let mut row = base;
        row.insert("Event_Timestamp".into(), "2024-08-05".into());
        assert!(matches!(parse_record(&row).unwrap_err(), ParseError::UnknownField(_)));
    }

    #[test]
    fn extended_regions_need_configuration() {
        let mut row = row1().to_row_map();
        row.insert("Market_Region".into(), "latam".into());
        assert!(parse_record(&row).is_err());
        let schema = Schema::with_regions(["LATAM"]);
        let r = schema.parse_record(&row).unwrap();
        assert_eq!(r.market_region, MarketRegion::Extended("LATAM".into()));
        assert!(schema.validate(&r, ValidationMode::Strict).ok);
        assert_eq!(validate_record(&r, ValidationMode::Strict).violations[0].rule, Rule::UnknownRegion);
    }

    #[test]
    fn ai_share_cases() {
        let r = row1();
        let share = ai_share(&r).unwrap();
        assert!((share - 100.0 * 12.5 / 23.9).abs() < 1e-12);
        assert!((share - 52.301_255_230_125_52).abs() < 1e-9);

        let mut zero = r.clone();
        zero.ai_buy_volume_pct = 0.0;
        zero.ai_sell_volume_pct = 0.0;
        assert_eq!(ai_share(&zero).unwrap(), 0.0);

        let mut full = r.clone();
        full.ai_buy_volume_pct = full.total_buy_volume_pct;
        full.ai_sell_volume_pct = full.total_sell_volume_pct;
        assert!((ai_share(&full).unwrap() - 100.0).abs() < 1e-12);

        let mut empty = r;
        empty.total_buy_volume_pct = 0.0;
        empty.total_sell_volume_pct = 0.0;
        assert!(ai_share(&empty).is_err());
    }

    #[test]
    fn bucket_labels_round_trip() {
        let b = VolumeBucket { lower: 100.0, upper: Some(200.0) };
        assert_eq!(b.label(), "100-200%");
        assert_eq!(VolumeBucket::parse_label("100-200%"), Some(b));
        let open = VolumeBucket { lower: 200.0, upper: None };
        assert_eq!(open.label(), "≥200%");
        assert_eq!(VolumeBucket::parse_label(">=200%"), Some(open));
        assert_eq!(VolumeVs30d::parse_cell("135.7"), Some(VolumeVs30d::Exact(135.7)));
    }

    #[test]
    fn json_rejects_temporal_fields() {
        let mut v: serde_json::Value = serde_json::from_str(&row1().canonical_json()).unwrap();
        v["event_start"] = serde_json::json!("2024-08-05T09:30:00Z");
        assert!(serde_json::from_value::<IncidentRecord>(v).is_err());
    }

    #[test]
    fn json_accepts_yes_no_strings() {
        let mut v: serde_json::Value = serde_json::from_str(&row1().canonical_json()).unwrap();
        v["issue_flag"] = serde_json::json!("YES");
        v["volume_vs_30d_avg_pct"] = serde_json::json!("100-200%");
        let r: IncidentRecord = serde_json::from_value(v).unwrap();
        assert!(r.issue_flag);
        assert!(matches!(r.volume_vs_30d, VolumeVs30d::Bucket(_)));
    }

    #[test]
    fn header_mismatch_is_an_error() {
        let csv = "S.No,Instrument_Category\n1,DERV\n";
        assert!(matches!(read_csv(&Schema::default(), csv.as_bytes()), Err(CsvError::Header { .. })));
    }

    #[test]
    fn format_pct_keeps_a_decimal() {
        assert_eq!(format_pct(100.0), "100.0");
        assert_eq!(format_pct(12.8), "12.8");
        assert_eq!(format_pct(0.0), "0.0");
    }
}
