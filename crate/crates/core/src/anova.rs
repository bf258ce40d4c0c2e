//! Two-way ANOVA of an AI volume response against two categorical factors.
//!
//! Factors are dummy (treatment) coded against their first observed level in
//! sorted order. Sums of squares are Type II: each main effect is the drop in
//! residual sum of squares when it is added to a model already holding the
//! other main effect; the optional interaction is added last. Degrees of
//! freedom come from numerical rank differences of the nested designs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::linalg::least_squares;
use crate::model::{IncidentRecord, Schema, ValidationMode, ValidationReport};
use crate::stats::{f_p_value, StatsError};

/// Sums of squares below this fraction of the total (or of the rounding
/// scale of the raw response, when the total is itself zero) are reported as
/// zero.
pub const SS_ZERO_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    #[default]
    AiBuyVolumePct,
    AiSellVolumePct,
}

impl Response {
    pub fn as_str(self) -> &'static str {
        match self {
            Response::AiBuyVolumePct => "ai_buy_volume_pct",
            Response::AiSellVolumePct => "ai_sell_volume_pct",
        }
    }

    pub fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "ai_buy_volume_pct" | "ai_buy" => Some(Response::AiBuyVolumePct),
            "ai_sell_volume_pct" | "ai_sell" => Some(Response::AiSellVolumePct),
            _ => None,
        }
    }

    fn value(self, r: &IncidentRecord) -> f64 {
        match self {
            Response::AiBuyVolumePct => r.ai_buy_volume_pct,
            Response::AiSellVolumePct => r.ai_sell_volume_pct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    AiSystemCategory,
    MarketRegion,
}

impl Factor {
    pub fn as_str(self) -> &'static str {
        match self {
            Factor::AiSystemCategory => "ai_system_category",
            Factor::MarketRegion => "market_region",
        }
    }

    fn level(self, r: &IncidentRecord) -> String {
        match self {
            Factor::AiSystemCategory => r.ai_system_category.as_str().to_string(),
            Factor::MarketRegion => r.market_region.as_str().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SsType {
    #[serde(rename = "II")]
    TypeII,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnovaSpec {
    pub response: Response,
    pub factor_a: Factor,
    pub factor_b: Factor,
    pub include_interaction: bool,
    pub ss_type: SsType,
}

impl Default for AnovaSpec {
    fn default() -> Self {
        AnovaSpec {
            response: Response::AiBuyVolumePct,
            factor_a: Factor::AiSystemCategory,
            factor_b: Factor::MarketRegion,
            include_interaction: false,
            ss_type: SsType::TypeII,
        }
    }
}

impl AnovaSpec {
    pub fn new(response: Response) -> Self {
        AnovaSpec { response, ..Default::default() }
    }

    pub fn with_interaction(mut self, on: bool) -> Self {
        self.include_interaction = on;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnovaError {
    #[error("no records")]
    EmptyInput,
    #[error("factors must differ, both are {0}")]
    SameFactor(&'static str),
    #[error("record {index} is not strict-valid: {report}")]
    NotStrictValid { index: usize, report: ValidationReport },
    #[error("factor {factor} needs at least 2 observed levels, found {observed:?}")]
    InsufficientLevels { factor: String, observed: Vec<String> },
    #[error("degenerate design: {reason}; empty cells: {}", fmt_cells(empty_cells))]
    DegenerateDesign { reason: String, empty_cells: Vec<(String, String)> },
    #[error("no residual degrees of freedom: n = {n}, model rank = {rank}")]
    NoResidualDf { n: usize, rank: usize },
    #[error("response value at row {0} is not finite")]
    NonFinite(usize),
    #[error("inconsistent design: {0}")]
    InvalidDesign(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn fmt_cells(cells: &[(String, String)]) -> String {
    if cells.is_empty() {
        return "none".into();
    }
    cells.iter().map(|(a, b)| format!("{a} x {b}")).collect::<Vec<_>>().join(", ")
}

/// Numeric response with integer-coded factor levels.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayDesign {
    pub y: Vec<f64>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub a_levels: Vec<String>,
    pub b_levels: Vec<String>,
}

impl TwoWayDesign {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Observed (a, b) cell counts.
    pub fn cell_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut m = BTreeMap::new();
        for (&i, &j) in self.a.iter().zip(&self.b) {
            *m.entry((i, j)).or_insert(0) += 1;
        }
        m
    }

    fn empty_cells(&self) -> Vec<(String, String)> {
        let counts = self.cell_counts();
        let mut out = Vec::new();
        for (i, la) in self.a_levels.iter().enumerate() {
            for (j, lb) in self.b_levels.iter().enumerate() {
                if !counts.contains_key(&(i, j)) {
                    out.push((la.clone(), lb.clone()));
                }
            }
        }
        out
    }

    fn check(&self) -> Result<(), AnovaError> {
        let n = self.y.len();
        if n == 0 {
            return Err(AnovaError::EmptyInput);
        }
        if self.a.len() != n || self.b.len() != n {
            return Err(AnovaError::InvalidDesign("factor codes and response differ in length".into()));
        }
        if let Some(i) = self.y.iter().position(|v| !v.is_finite()) {
            return Err(AnovaError::NonFinite(i));
        }
        if self.a.iter().any(|&i| i >= self.a_levels.len()) || self.b.iter().any(|&j| j >= self.b_levels.len()) {
            return Err(AnovaError::InvalidDesign("factor code out of range".into()));
        }
        for (name, codes, levels) in [("a", &self.a, &self.a_levels), ("b", &self.b, &self.b_levels)] {
            let seen: BTreeSet<usize> = codes.iter().copied().collect();
            if seen.len() < 2 {
                return Err(AnovaError::InsufficientLevels {
                    factor: name.into(),
                    observed: seen.iter().map(|&i| levels[i].clone()).collect(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Block {
    A,
    B,
    Ab,
}

fn design_matrix(d: &TwoWayDesign, blocks: &[Block]) -> Array2<f64> {
    let (ka, kb) = (d.a_levels.len(), d.b_levels.len());
    let mut cols = 1;
    for b in blocks {
        cols += match b {
            Block::A => ka - 1,
            Block::B => kb - 1,
            Block::Ab => (ka - 1) * (kb - 1),
        };
    }
    let mut x = Array2::<f64>::zeros((d.n(), cols));
    for r in 0..d.n() {
        let (i, j) = (d.a[r], d.b[r]);
        x[[r, 0]] = 1.0;
        let mut c = 1;
        for b in blocks {
            match b {
                Block::A => {
                    if i > 0 {
                        x[[r, c + i - 1]] = 1.0;
                    }
                    c += ka - 1;
                }
                Block::B => {
                    if j > 0 {
                        x[[r, c + j - 1]] = 1.0;
                    }
                    c += kb - 1;
                }
                Block::Ab => {
                    if i > 0 && j > 0 {
                        x[[r, c + (i - 1) * (kb - 1) + (j - 1)]] = 1.0;
                    }
                    c += (ka - 1) * (kb - 1);
                }
            }
        }
    }
    x
}

/// Serializes non-finite statistics as strings so JSON stays valid.
mod stat_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("Infinity")
        } else {
            s.serialize_str("NaN")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "Infinity" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("unexpected statistic {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTerm {
    pub term: String,
    pub ss: f64,
    pub df: u64,
    #[serde(with = "stat_f64")]
    pub f_stat: f64,
    pub p_value: f64,
    pub partial_eta_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub response: String,
    pub ss_type: SsType,
    pub include_interaction: bool,
    pub levels_a: Vec<String>,
    pub levels_b: Vec<String>,
    pub terms: Vec<AnovaTerm>,
    pub residual_ss: f64,
    pub residual_df: u64,
    pub total_ss: f64,
    pub model_r_squared: f64,
    #[serde(with = "stat_f64")]
    pub model_f: f64,
    pub model_p: f64,
    pub n: usize,
    /// Set when the residual sum of squares is zero and some term is not.
    pub degenerate: bool,
}

impl AnovaResult {
    pub fn term(&self, name: &str) -> Option<&AnovaTerm> {
        self.terms.iter().find(|t| t.term == name)
    }

    pub fn factor_a(&self) -> &AnovaTerm {
        &self.terms[0]
    }

    pub fn factor_b(&self) -> &AnovaTerm {
        &self.terms[1]
    }

    pub fn interaction(&self) -> Option<&AnovaTerm> {
        self.terms.get(2)
    }

    /// Term table: `term,ss,df,F,p,partial_eta_sq`, one row per term plus a
    /// residual row with the test columns left empty.
    pub fn term_table_csv(&self) -> String {
        let mut out = String::from("term,ss,df,F,p,partial_eta_sq\n");
        for t in &self.terms {
            let _ =
                writeln!(out, "{},{:?},{},{:?},{:?},{:?}", t.term, t.ss, t.df, t.f_stat, t.p_value, t.partial_eta_sq);
        }
        let _ = writeln!(out, "residual,{:?},{},,,", self.residual_ss, self.residual_df);
        out
    }
}

/// Builds the coded design for `spec` from records. Levels are the observed
/// tokens in sorted order.
pub fn build_design(records: &[IncidentRecord], spec: &AnovaSpec) -> TwoWayDesign {
    let la: Vec<String> = records.iter().map(|r| spec.factor_a.level(r)).collect();
    let lb: Vec<String> = records.iter().map(|r| spec.factor_b.level(r)).collect();
    let a_levels: Vec<String> = la.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let b_levels: Vec<String> = lb.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let code = |levels: &[String], v: &String| levels.binary_search(v).expect("observed level");
    TwoWayDesign {
        y: records.iter().map(|r| spec.response.value(r)).collect(),
        a: la.iter().map(|v| code(&a_levels, v)).collect(),
        b: lb.iter().map(|v| code(&b_levels, v)).collect(),
        a_levels,
        b_levels,
    }
}

pub fn two_way_anova(records: &[IncidentRecord], spec: &AnovaSpec) -> Result<AnovaResult, AnovaError> {
    two_way_anova_with_schema(records, spec, &Schema::default())
}

/// As [`two_way_anova`], validating records against `schema` (for
/// deployments with extra market regions).
pub fn two_way_anova_with_schema(
    records: &[IncidentRecord],
    spec: &AnovaSpec,
    schema: &Schema,
) -> Result<AnovaResult, AnovaError> {
    if records.is_empty() {
        return Err(AnovaError::EmptyInput);
    }
    if spec.factor_a == spec.factor_b {
        return Err(AnovaError::SameFactor(spec.factor_a.as_str()));
    }
    for (index, r) in records.iter().enumerate() {
        let report = schema.validate(r, ValidationMode::Strict);
        if !report.ok {
            return Err(AnovaError::NotStrictValid { index, report });
        }
    }
    let design = build_design(records, spec);
    let mut result = anova_design(&design, spec.include_interaction).map_err(|e| match e {
        AnovaError::InsufficientLevels { factor, observed } => AnovaError::InsufficientLevels {
            factor: if factor == "a" { spec.factor_a } else { spec.factor_b }.as_str().into(),
            observed,
        },
        other => other,
    })?;
    result.response = spec.response.as_str().into();
    result.terms[0].term = spec.factor_a.as_str().into();
    result.terms[1].term = spec.factor_b.as_str().into();
    if let Some(t) = result.terms.get_mut(2) {
        t.term = format!("{}:{}", spec.factor_a.as_str(), spec.factor_b.as_str());
    }
    Ok(result)
}

/// Type II two-way ANOVA on a coded design. Terms are named `a`, `b` and
/// `a:b`.
pub fn anova_design(d: &TwoWayDesign, include_interaction: bool) -> Result<AnovaResult, AnovaError> {
    d.check()?;
    let n = d.n();
    let empty = d.empty_cells();
    if include_interaction && !empty.is_empty() {
        return Err(AnovaError::DegenerateDesign {
            reason: "interaction model needs every factor-level combination observed".into(),
            empty_cells: empty,
        });
    }

    let fit = |blocks: &[Block]| least_squares(&design_matrix(d, blocks), &d.y);
    let only_a = fit(&[Block::A]);
    let only_b = fit(&[Block::B]);
    let main = fit(&[Block::A, Block::B]);
    let expected_main = d.a_levels.len() + d.b_levels.len() - 1;
    if main.rank < expected_main {
        return Err(AnovaError::DegenerateDesign {
            reason: format!("main-effects design has rank {} < {expected_main} (disconnected cells)", main.rank),
            empty_cells: empty,
        });
    }
    let full = if include_interaction { fit(&[Block::A, Block::B, Block::Ab]) } else { main };
    if n <= full.rank {
        return Err(AnovaError::NoResidualDf { n, rank: full.rank });
    }

    let mean = d.y.iter().sum::<f64>() / n as f64;
    let total_ss: f64 = d.y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sum_sq: f64 = d.y.iter().map(|v| v * v).sum();
    let floor = SS_ZERO_REL * total_ss.max(f64::EPSILON * sum_sq);
    let clean = |ss: f64| if ss <= floor { 0.0 } else { ss };

    let residual_ss = clean(full.sse);
    let residual_df = (n - full.rank) as u64;
    let mut raw = vec![
        ("a", only_b.sse - main.sse, main.rank - only_b.rank),
        ("b", only_a.sse - main.sse, main.rank - only_a.rank),
    ];
    if include_interaction {
        raw.push(("a:b", main.sse - full.sse, full.rank - main.rank));
    }

    let mut degenerate = false;
    let mut terms = Vec::with_capacity(raw.len());
    for (name, ss, df) in raw {
        let ss = clean(ss);
        let (f_stat, p_value, partial_eta_sq) = test_term(ss, df as u64, residual_ss, residual_df)?;
        if ss > 0.0 && residual_ss == 0.0 {
            degenerate = true;
        }
        terms.push(AnovaTerm { term: name.into(), ss, df: df as u64, f_stat, p_value, partial_eta_sq });
    }

    let model_ss = clean(total_ss - residual_ss);
    let model_df = (full.rank - 1) as u64;
    let (model_f, model_p, _) = test_term(model_ss, model_df, residual_ss, residual_df)?;
    let model_r_squared = if total_ss > 0.0 { (1.0 - residual_ss / total_ss).clamp(0.0, 1.0) } else { 0.0 };

    Ok(AnovaResult {
        response: String::new(),
        ss_type: SsType::TypeII,
        include_interaction,
        levels_a: d.a_levels.clone(),
        levels_b: d.b_levels.clone(),
        terms,
        residual_ss,
        residual_df,
        total_ss,
        model_r_squared,
        model_f,
        model_p,
        n,
        degenerate,
    })
}

fn test_term(ss: f64, df: u64, ss_res: f64, df_res: u64) -> Result<(f64, f64, f64), AnovaError> {
    if ss == 0.0 || df == 0 {
        return Ok((0.0, 1.0, 0.0));
    }
    if ss_res == 0.0 {
        return Ok((f64::INFINITY, 0.0, 1.0));
    }
    let f = (ss / df as f64) / (ss_res / df_res as f64);
    Ok((f, f_p_value(f, df, df_res)?, ss / (ss + ss_res)))
}
