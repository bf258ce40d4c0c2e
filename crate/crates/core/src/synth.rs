//! Deterministic synthetic incident generator.
//!
//! Each output row is a bootstrap draw from a seed set with Gaussian jitter on
//! the numeric fields, categorical mutation, optional region resampling and
//! optional additive effects. For record `i` the draws are taken from the
//! [`PortableRng`] stream in this fixed order:
//!
//! 1. seed row: `below(m)` (random selection) or `i mod m` with no draw
//!    (round-robin);
//! 2. six standard normals, one per numeric field in CSV order (total buy,
//!    total sell, AI buy, AI sell, price range, volume ratio), always drawn;
//! 3. for each categorical in the order instrument, region, AI system,
//!    pattern, market impact, issue flag, human oversight, fail-safe: one
//!    uniform `u`; when `u < mutation_rate` one more `below(levels)` picks the
//!    replacement;
//! 4. when region-neutral: one `below(3)` over `APAC, EMEA, AMER`.
//!
//! Jittered volumes are clamped to `[0, 100]`, price and volume ratio to
//! `>= 0`, then `ai = min(ai, total)`. Effects are added afterwards; an effect
//! pushing AI volume above the total raises the total to match (capped at
//! 100). Every percent is finally rounded half away from zero to
//! `decimals` places.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confidentiality::round_half_away;
use crate::model::{
    table2_records, yes_no, AiSystemCategory, IncidentPattern, IncidentRecord, InstrumentCategory, MarketRegion,
    ValidationMode, ValidationReport, VolumeVs30d,
};
use crate::rng::PortableRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSelection {
    #[default]
    Random,
    RoundRobin,
}

/// A factor level an effect attaches to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorLevel {
    AiSystemCategory(AiSystemCategory),
    MarketRegion(MarketRegion),
}

impl FactorLevel {
    fn matches(&self, r: &IncidentRecord) -> bool {
        match self {
            FactorLevel::AiSystemCategory(c) => r.ai_system_category == *c,
            FactorLevel::MarketRegion(m) => r.market_region == *m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectTarget {
    AiBuy,
    AiSell,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectShift {
    pub level: FactorLevel,
    #[serde(default)]
    pub target: EffectTarget,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n: usize,
    pub jitter_sigma: f64,
    pub categorical_mutation_rate: f64,
    pub region_neutral: bool,
    pub effect_injection: Vec<EffectShift>,
    pub seed_selection: SeedSelection,
    pub decimals: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n: 2999,
            jitter_sigma: 1.5,
            categorical_mutation_rate: 0.15,
            region_neutral: false,
            effect_injection: Vec::new(),
            seed_selection: SeedSelection::Random,
            decimals: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidConfig(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !self.jitter_sigma.is_finite() || self.jitter_sigma < 0.0 {
            return bad(format!("jitter_sigma must be finite and >= 0, got {}", self.jitter_sigma));
        }
        if !(0.0..=1.0).contains(&self.categorical_mutation_rate) {
            return bad(format!("mutation rate must be in [0, 1], got {}", self.categorical_mutation_rate));
        }
        if self.effect_injection.iter().any(|e| !e.shift.is_finite()) {
            return bad("effect shifts must be finite".into());
        }
        if self.decimals > 12 {
            return bad(format!("decimals {} exceeds 12", self.decimals));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("seed set is empty")]
    EmptySeeds,
    #[error("seed row {index} is not strict-valid: {report}")]
    InvalidSeed { index: usize, report: ValidationReport },
    #[error("summary requires at least one record")]
    EmptyInput,
}

/// Empirical basis for synthesis; every row is strict-valid.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet(Vec<IncidentRecord>);

impl SeedSet {
    pub fn new(records: Vec<IncidentRecord>) -> Result<Self, SynthError> {
        if records.is_empty() {
            return Err(SynthError::EmptySeeds);
        }
        for (index, r) in records.iter().enumerate() {
            let report = crate::model::validate_record(r, ValidationMode::Strict);
            if !report.ok {
                return Err(SynthError::InvalidSeed { index, report });
            }
        }
        Ok(SeedSet(records))
    }

    /// The four bundled sample rows.
    pub fn table2() -> Self {
        SeedSet::new(table2_records()).expect("bundled sample rows are strict-valid")
    }

    /// Adds user-supplied rows after the bundled ones.
    pub fn table2_plus(extra: Vec<IncidentRecord>) -> Result<Self, SynthError> {
        let mut rows = table2_records();
        rows.extend(extra);
        SeedSet::new(rows)
    }

    pub fn records(&self) -> &[IncidentRecord] {
        &self.0
    }
}

fn mutate<T: Clone>(rng: &mut PortableRng, rate: f64, current: T, levels: &[T]) -> T {
    if rng.next_f64() < rate {
        levels[rng.below(levels.len())].clone()
    } else {
        current
    }
}

pub fn synthesize(seeds: &SeedSet, config: &SynthConfig) -> Result<Vec<IncidentRecord>, SynthError> {
    config.validate()?;
    let seeds = seeds.records();
    let mut rng = PortableRng::seed_from_u64(config.seed);
    let sigma = config.jitter_sigma;
    let rate = config.categorical_mutation_rate;
    let regions = MarketRegion::BUILTIN;
    let bools = [false, true];

    let mut out = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let base = match config.seed_selection {
            SeedSelection::Random => &seeds[rng.below(seeds.len())],
            SeedSelection::RoundRobin => &seeds[i % seeds.len()],
        };
        let mut z = [0.0; 6];
        for zi in z.iter_mut() {
            *zi = rng.standard_normal();
        }
        let vol = |v: f64, zi: f64| (v + sigma * zi).clamp(0.0, 100.0);
        let total_buy = vol(base.total_buy_volume_pct, z[0]);
        let total_sell = vol(base.total_sell_volume_pct, z[1]);
        let ai_buy = vol(base.ai_buy_volume_pct, z[2]).min(total_buy);
        let ai_sell = vol(base.ai_sell_volume_pct, z[3]).min(total_sell);
        let price = (base.price_range_pct + sigma * z[4]).max(0.0);
        let volume_vs_30d = match base.volume_vs_30d {
            VolumeVs30d::Exact(v) => VolumeVs30d::Exact((v + sigma * z[5]).max(0.0)),
            bucket => bucket,
        };

        let mut r = IncidentRecord {
            serial_no: Some(i as u64 + 1),
            instrument_category: mutate(&mut rng, rate, base.instrument_category, InstrumentCategory::ALL),
            market_region: mutate(&mut rng, rate, base.market_region.clone(), &regions),
            total_buy_volume_pct: total_buy,
            total_sell_volume_pct: total_sell,
            ai_buy_volume_pct: ai_buy,
            ai_sell_volume_pct: ai_sell,
            price_range_pct: price,
            volume_vs_30d,
            ai_system_category: mutate(&mut rng, rate, base.ai_system_category, AiSystemCategory::ALL),
            incident_pattern: mutate(&mut rng, rate, base.incident_pattern, IncidentPattern::ALL),
            market_impact_detected: mutate(&mut rng, rate, base.market_impact_detected, &bools),
            issue_flag: mutate(&mut rng, rate, base.issue_flag, &bools),
            human_oversight_involved: mutate(&mut rng, rate, base.human_oversight_involved, &bools),
            fail_safe_triggered: mutate(&mut rng, rate, base.fail_safe_triggered, &bools),
        };
        if config.region_neutral {
            r.market_region = regions[rng.below(regions.len())].clone();
        }

        for effect in &config.effect_injection {
            if !effect.level.matches(&r) {
                continue;
            }
            if matches!(effect.target, EffectTarget::AiBuy | EffectTarget::Both) {
                r.ai_buy_volume_pct = (r.ai_buy_volume_pct + effect.shift).clamp(0.0, 100.0);
                r.total_buy_volume_pct = r.total_buy_volume_pct.max(r.ai_buy_volume_pct);
            }
            if matches!(effect.target, EffectTarget::AiSell | EffectTarget::Both) {
                r.ai_sell_volume_pct = (r.ai_sell_volume_pct + effect.shift).clamp(0.0, 100.0);
                r.total_sell_volume_pct = r.total_sell_volume_pct.max(r.ai_sell_volume_pct);
            }
        }

        let d = config.decimals;
        r.total_buy_volume_pct = round_half_away(r.total_buy_volume_pct, d);
        r.total_sell_volume_pct = round_half_away(r.total_sell_volume_pct, d);
        r.ai_buy_volume_pct = round_half_away(r.ai_buy_volume_pct, d);
        r.ai_sell_volume_pct = round_half_away(r.ai_sell_volume_pct, d);
        r.price_range_pct = round_half_away(r.price_range_pct, d);
        if let VolumeVs30d::Exact(v) = r.volume_vs_30d {
            r.volume_vs_30d = VolumeVs30d::Exact(round_half_away(v, d));
        }
        debug_assert!(crate::model::validate_record(&r, ValidationMode::Strict).ok);
        out.push(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSummary {
    pub field: String,
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSummary {
    pub n: usize,
    pub numeric: Vec<NumericSummary>,
    /// Field name to token to count; both levels sorted.
    pub categorical: BTreeMap<String, BTreeMap<String, usize>>,
}

fn numeric_summary(field: &str, values: &[f64]) -> NumericSummary {
    let count = values.len();
    if count == 0 {
        return NumericSummary { field: field.into(), count, mean: f64::NAN, stddev: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
    NumericSummary { field: field.into(), count, mean, stddev: var.sqrt() }
}

/// Per-field sample statistics and per-enum frequencies. Bucketed volume
/// ratios are excluded from the numeric summary and counted by label.
pub fn marginal_summary(records: &[IncidentRecord]) -> Result<MarginalSummary, SynthError> {
    if records.is_empty() {
        return Err(SynthError::EmptyInput);
    }
    type Getter = fn(&IncidentRecord) -> f64;
    let fields: [(&str, Getter); 5] = [
        ("total_buy_volume_pct", |r| r.total_buy_volume_pct),
        ("total_sell_volume_pct", |r| r.total_sell_volume_pct),
        ("ai_buy_volume_pct", |r| r.ai_buy_volume_pct),
        ("ai_sell_volume_pct", |r| r.ai_sell_volume_pct),
        ("price_range_pct", |r| r.price_range_pct),
    ];
    let mut numeric: Vec<NumericSummary> =
        fields.iter().map(|(name, get)| numeric_summary(name, &records.iter().map(get).collect::<Vec<_>>())).collect();
    let exact: Vec<f64> = records.iter().filter_map(|r| r.volume_vs_30d.exact()).collect();
    numeric.push(numeric_summary("volume_vs_30d_avg_pct", &exact));

    let mut categorical: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut bump = |field: &str, token: String| {
        *categorical.entry(field.to_string()).or_default().entry(token).or_default() += 1;
    };
    for r in records {
        bump("instrument_category", r.instrument_category.to_string());
        bump("market_region", r.market_region.to_string());
        bump("ai_system_category", r.ai_system_category.to_string());
        bump("incident_pattern", r.incident_pattern.to_string());
        bump("market_impact_detected", yes_no(r.market_impact_detected).into());
        bump("issue_flag", yes_no(r.issue_flag).into());
        bump("human_oversight_involved", yes_no(r.human_oversight_involved).into());
        bump("fail_safe_triggered", yes_no(r.fail_safe_triggered).into());
        if let VolumeVs30d::Bucket(b) = r.volume_vs_30d {
            bump("volume_vs_30d_bucket", b.label());
        }
    }
    Ok(MarginalSummary { n: records.len(), numeric, categorical })
}
