//! Reporting gate: only significant incidents enter the database.
//!
//! An incident is significant when its price range exceeds the price
//! threshold, or when its volume-vs-30-day ratio deviates from 100% by more
//! than the volume threshold (two-sided). Both comparisons are strict.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confidentiality::{check_edges, resolve_bucket_label};
use crate::model::{IncidentRecord, VolumeVs30d};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignificancePolicy {
    pub price_deviation_threshold_pct: f64,
    pub volume_anomaly_threshold_pct: f64,
}

impl Default for SignificancePolicy {
    fn default() -> Self {
        SignificancePolicy { price_deviation_threshold_pct: 5.0, volume_anomaly_threshold_pct: 20.0 }
    }
}

impl SignificancePolicy {
    pub fn validate(&self) -> Result<(), SignificanceError> {
        let ok = |t: f64| t.is_finite() && t > 0.0;
        if ok(self.price_deviation_threshold_pct) && ok(self.volume_anomaly_threshold_pct) {
            Ok(())
        } else {
            Err(SignificanceError::InvalidPolicy(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignificanceError {
    #[error("thresholds must be positive and finite: {0}")]
    InvalidPolicy(String),
    #[error("unknown bucket label {label:?} for edges {edges:?}")]
    UnknownBucket { label: String, edges: Vec<String> },
    #[error("invalid bucket edges: {0}")]
    InvalidEdges(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignificanceVerdict {
    pub significant: bool,
    pub price_trigger: bool,
    pub volume_trigger: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeTrigger {
    Triggered,
    NotTriggered,
    Indeterminate,
}

/// Verdict for a record whose volume ratio is known only as an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketedVerdict {
    pub significant: bool,
    pub price_trigger: bool,
    pub volume_trigger: VolumeTrigger,
}

impl From<SignificanceVerdict> for BucketedVerdict {
    fn from(v: SignificanceVerdict) -> Self {
        BucketedVerdict {
            significant: v.significant,
            price_trigger: v.price_trigger,
            volume_trigger: if v.volume_trigger { VolumeTrigger::Triggered } else { VolumeTrigger::NotTriggered },
        }
    }
}

pub fn assess(price_range_pct: f64, volume_vs_30d_pct: f64, policy: &SignificancePolicy) -> SignificanceVerdict {
    let price_trigger = price_range_pct > policy.price_deviation_threshold_pct;
    let volume_trigger = (volume_vs_30d_pct - 100.0).abs() > policy.volume_anomaly_threshold_pct;
    SignificanceVerdict { significant: price_trigger || volume_trigger, price_trigger, volume_trigger }
}

/// Assesses a volume ratio known only to lie in `[lower, upper)`
/// (`upper == None` means unbounded; `upper == Some(lower)` is the single
/// point `lower`).
pub fn assess_interval(
    price_range_pct: f64,
    lower: f64,
    upper: Option<f64>,
    policy: &SignificancePolicy,
) -> BucketedVerdict {
    let price_trigger = price_range_pct > policy.price_deviation_threshold_pct;
    let t = policy.volume_anomaly_threshold_pct;
    // Values inside [100 - t, 100 + t] do not trigger.
    let (band_lo, band_hi) = (100.0 - t, 100.0 + t);

    let volume_trigger = if upper == Some(lower) {
        if (lower - 100.0).abs() > t {
            VolumeTrigger::Triggered
        } else {
            VolumeTrigger::NotTriggered
        }
    } else {
        let disjoint = lower > band_hi || upper.is_some_and(|u| u <= band_lo);
        let inside = lower >= band_lo && upper.is_some_and(|u| u <= band_hi);
        if disjoint {
            VolumeTrigger::Triggered
        } else if inside {
            VolumeTrigger::NotTriggered
        } else {
            VolumeTrigger::Indeterminate
        }
    };
    BucketedVerdict {
        significant: price_trigger || volume_trigger == VolumeTrigger::Triggered,
        price_trigger,
        volume_trigger,
    }
}

/// Assesses a bucketed submission. The label must be one of the buckets
/// `bucket_volume` produces for `edges`.
pub fn assess_bucketed(
    price_range_pct: f64,
    label: &str,
    edges: &[f64],
    policy: &SignificancePolicy,
) -> Result<BucketedVerdict, SignificanceError> {
    check_edges(edges).map_err(|e| SignificanceError::InvalidEdges(e.0))?;
    let bucket = resolve_bucket_label(label, edges).ok_or_else(|| SignificanceError::UnknownBucket {
        label: label.to_string(),
        edges: edges.iter().map(|e| e.to_string()).collect(),
    })?;
    Ok(assess_interval(price_range_pct, bucket.lower, bucket.upper, policy))
}

/// Gate verdict for a stored record, exact or bucketed.
pub fn assess_record(record: &IncidentRecord, policy: &SignificancePolicy) -> BucketedVerdict {
    match record.volume_vs_30d {
        VolumeVs30d::Exact(v) => assess(record.price_range_pct, v, policy).into(),
        VolumeVs30d::Bucket(b) => assess_interval(record.price_range_pct, b.lower, b.upper, policy),
    }
}
