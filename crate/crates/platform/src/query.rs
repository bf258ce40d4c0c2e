//! Entry filtering with equality on categorical and boolean fields,
//! inclusive ranges on percent fields, and limit/offset paging.
//!
//! Filters are built from `key=value` pairs (CLI `--filter`, HTTP query
//! string). Keys are record field names in snake_case; ranges use
//! `<field>_min` / `<field>_max`; paging uses `limit` and `offset`.

use std::collections::BTreeMap;

use incidentdb_core::model::{
    parse_yes_no, AiSystemCategory, IncidentPattern, IncidentRecord, InstrumentCategory, MarketRegion, Schema,
    VolumeVs30d,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::StoreEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PctField {
    TotalBuyVolumePct,
    TotalSellVolumePct,
    AiBuyVolumePct,
    AiSellVolumePct,
    PriceRangePct,
    VolumeVs30dAvgPct,
}

impl PctField {
    pub const ALL: [PctField; 6] = [
        PctField::TotalBuyVolumePct,
        PctField::TotalSellVolumePct,
        PctField::AiBuyVolumePct,
        PctField::AiSellVolumePct,
        PctField::PriceRangePct,
        PctField::VolumeVs30dAvgPct,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PctField::TotalBuyVolumePct => "total_buy_volume_pct",
            PctField::TotalSellVolumePct => "total_sell_volume_pct",
            PctField::AiBuyVolumePct => "ai_buy_volume_pct",
            PctField::AiSellVolumePct => "ai_sell_volume_pct",
            PctField::PriceRangePct => "price_range_pct",
            PctField::VolumeVs30dAvgPct => "volume_vs_30d_avg_pct",
        }
    }

    fn parse(key: &str) -> Option<Self> {
        PctField::ALL.into_iter().find(|f| f.as_str() == key)
    }
}

/// Inclusive bounds; either side may be open.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Range {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Range {
    fn contains(&self, v: f64) -> bool {
        self.min.is_none_or(|m| v >= m) && self.max.is_none_or(|m| v <= m)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("unknown filter key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}")]
    InvalidValue { key: String, value: String },
    #[error("malformed range for {field}: min {min} > max {max}")]
    MalformedRange { field: &'static str, min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QueryFilter {
    pub instrument_category: Option<InstrumentCategory>,
    pub market_region: Option<MarketRegion>,
    pub ai_system_category: Option<AiSystemCategory>,
    pub incident_pattern: Option<IncidentPattern>,
    pub market_impact_detected: Option<bool>,
    pub issue_flag: Option<bool>,
    pub human_oversight_involved: Option<bool>,
    pub fail_safe_triggered: Option<bool>,
    pub ranges: BTreeMap<PctField, Range>,
    pub limit: Option<usize>,
    pub offset: usize,
}

impl QueryFilter {
    pub fn from_pairs<I, K, V>(pairs: I, schema: &Schema) -> Result<QueryFilter, QueryError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut f = QueryFilter::default();
        for (k, v) in pairs {
            let key = k.as_ref().trim().to_ascii_lowercase();
            let raw = v.as_ref();
            let bad = || QueryError::InvalidValue { key: key.clone(), value: raw.to_string() };
            let boolean = || parse_yes_no(raw).ok_or_else(bad);
            match key.as_str() {
                "instrument_category" => {
                    f.instrument_category = Some(InstrumentCategory::parse(raw).map_err(|_| bad())?)
                }
                "market_region" => f.market_region = Some(schema.parse_region(raw).map_err(|_| bad())?),
                "ai_system_category" => f.ai_system_category = Some(AiSystemCategory::parse(raw).map_err(|_| bad())?),
                "incident_pattern" => f.incident_pattern = Some(IncidentPattern::parse(raw).map_err(|_| bad())?),
                "market_impact_detected" => f.market_impact_detected = Some(boolean()?),
                "issue_flag" => f.issue_flag = Some(boolean()?),
                "human_oversight_involved" => f.human_oversight_involved = Some(boolean()?),
                "fail_safe_triggered" => f.fail_safe_triggered = Some(boolean()?),
                "limit" => f.limit = Some(raw.trim().parse().map_err(|_| bad())?),
                "offset" => f.offset = raw.trim().parse().map_err(|_| bad())?,
                other => {
                    let (field, is_min) = if let Some(base) = other.strip_suffix("_min") {
                        (PctField::parse(base), true)
                    } else if let Some(base) = other.strip_suffix("_max") {
                        (PctField::parse(base), false)
                    } else {
                        (None, false)
                    };
                    let field = field.ok_or_else(|| QueryError::UnknownKey(k.as_ref().to_string()))?;
                    let value: f64 = raw.trim().parse().map_err(|_| bad())?;
                    if !value.is_finite() {
                        return Err(bad());
                    }
                    let range = f.ranges.entry(field).or_default();
                    if is_min {
                        range.min = Some(value);
                    } else {
                        range.max = Some(value);
                    }
                }
            }
        }
        f.check()?;
        Ok(f)
    }

    pub fn check(&self) -> Result<(), QueryError> {
        for (field, r) in &self.ranges {
            if let (Some(min), Some(max)) = (r.min, r.max) {
                if min > max {
                    return Err(QueryError::MalformedRange { field: field.as_str(), min, max });
                }
            }
        }
        Ok(())
    }

    /// True when the record satisfies every filter. A bucketed volume ratio
    /// matches a range only if the whole bucket lies inside it.
    pub fn matches(&self, r: &IncidentRecord) -> bool {
        fn eq<T: PartialEq>(want: &Option<T>, got: &T) -> bool {
            want.as_ref().is_none_or(|w| w == got)
        }
        if !(eq(&self.instrument_category, &r.instrument_category)
            && eq(&self.market_region, &r.market_region)
            && eq(&self.ai_system_category, &r.ai_system_category)
            && eq(&self.incident_pattern, &r.incident_pattern)
            && eq(&self.market_impact_detected, &r.market_impact_detected)
            && eq(&self.issue_flag, &r.issue_flag)
            && eq(&self.human_oversight_involved, &r.human_oversight_involved)
            && eq(&self.fail_safe_triggered, &r.fail_safe_triggered))
        {
            return false;
        }
        self.ranges.iter().all(|(field, range)| match field {
            PctField::TotalBuyVolumePct => range.contains(r.total_buy_volume_pct),
            PctField::TotalSellVolumePct => range.contains(r.total_sell_volume_pct),
            PctField::AiBuyVolumePct => range.contains(r.ai_buy_volume_pct),
            PctField::AiSellVolumePct => range.contains(r.ai_sell_volume_pct),
            PctField::PriceRangePct => range.contains(r.price_range_pct),
            PctField::VolumeVs30dAvgPct => match &r.volume_vs_30d {
                VolumeVs30d::Exact(v) => range.contains(*v),
                VolumeVs30d::Bucket(b) => {
                    range.min.is_none_or(|m| b.lower >= m)
                        && match (b.upper, range.max) {
                            (_, None) => true,
                            (Some(u), Some(m)) => u <= m,
                            (None, Some(_)) => false,
                        }
                }
            },
        })
    }

    /// Matching entries in serial order, paged. Also returns the number of
    /// matches before paging.
    pub fn apply<'a>(&self, entries: &'a [StoreEntry]) -> (usize, Vec<&'a StoreEntry>) {
        let all: Vec<&StoreEntry> = entries.iter().filter(|e| self.matches(&e.record)).collect();
        let total = all.len();
        let page = all.into_iter().skip(self.offset).take(self.limit.unwrap_or(usize::MAX)).collect();
        (total, page)
    }
}
