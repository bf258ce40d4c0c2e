//! Report artifacts: ANOVA term tables for both AI volume responses, the
//! cluster assignment, centroid and plot-data tables, JSON summaries and a
//! plain-text digest. Output depends only on the records and options, so
//! reruns are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use incidentdb_core::anova::{two_way_anova_with_schema, AnovaError, AnovaResult, AnovaSpec, Response};
use incidentdb_core::cluster::{analyze, ClusterAnalysis, ClusterError, ClusterEvidence, KMeansOptions};
use incidentdb_core::model::{IncidentRecord, Schema};
use serde::Serialize;
use thiserror::Error;

use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub k: usize,
    pub seed: u64,
    pub kmeans: KMeansOptions,
    pub interaction: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { k: 5, seed: 0, kmeans: KMeansOptions::default(), interaction: false }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("anova on {response}: {source}")]
    Anova { response: &'static str, source: AnovaError },
    #[error("clustering: {0}")]
    Cluster(#[from] ClusterError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Serialize)]
pub struct AnovaReport<'a> {
    pub schema_version: &'static str,
    pub result: &'a AnovaResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub schema_version: &'static str,
    pub k: usize,
    pub seed: u64,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    pub inertia: f64,
    pub explained_variance_ratio: Vec<f64>,
    pub two_pc_variance_ratio: f64,
    pub heuristic_version: String,
    pub degenerate: bool,
    pub zones: Vec<ClusterEvidence>,
}

impl ClusterSummary {
    pub fn from_analysis(a: &ClusterAnalysis) -> Self {
        ClusterSummary {
            schema_version: SCHEMA_VERSION,
            k: a.model.k,
            seed: a.model.seed,
            n: a.model.assignments.len(),
            iterations: a.model.iterations,
            converged: a.model.converged,
            inertia: a.model.inertia,
            explained_variance_ratio: a.pca.explained_variance_ratio.clone(),
            two_pc_variance_ratio: a.pca.two_pc_ratio(),
            heuristic_version: a.zones.heuristic_version.clone(),
            degenerate: a.zones.degenerate,
            zones: a.zones.evidence.clone(),
        }
    }
}

pub const RESPONSES: [Response; 2] = [Response::AiBuyVolumePct, Response::AiSellVolumePct];

/// Named artifacts in write order.
pub fn build_report(
    records: &[IncidentRecord],
    schema: &Schema,
    opts: &ReportOptions,
) -> Result<Vec<(String, String)>, ReportError> {
    let mut files = Vec::new();
    let mut digest = format!("records: {}\n", records.len());
    for response in RESPONSES {
        let spec = AnovaSpec::new(response).with_interaction(opts.interaction);
        let result = two_way_anova_with_schema(records, &spec, schema)
            .map_err(|source| ReportError::Anova { response: response.as_str(), source })?;
        let _ = writeln!(digest, "\nanova {} (type II, n = {}):", response.as_str(), result.n);
        for t in &result.terms {
            let _ = writeln!(
                digest,
                "  {}: df = {}, F = {:.4}, p = {:.4}, partial eta squared = {:.4}",
                t.term, t.df, t.f_stat, t.p_value, t.partial_eta_sq
            );
        }
        let _ = writeln!(digest, "  model R squared = {:.4}, model p = {:.4e}", result.model_r_squared, result.model_p);
        files.push((format!("anova_{}.csv", response.as_str()), result.term_table_csv()));
        let json = serde_json::to_string_pretty(&AnovaReport { schema_version: SCHEMA_VERSION, result: &result })
            .expect("anova result serializes");
        files.push((format!("anova_{}.json", response.as_str()), json + "\n"));
    }

    let analysis = analyze(records, opts.k, opts.seed, &opts.kmeans)?;
    let summary = ClusterSummary::from_analysis(&analysis);
    let _ =
        writeln!(digest, "\nclusters: k = {}, seed = {}, inertia = {:.4}", summary.k, summary.seed, summary.inertia);
    let _ = writeln!(digest, "two-PC explained variance ratio: {:.4}", summary.two_pc_variance_ratio);
    for e in &summary.zones {
        let _ = writeln!(
            digest,
            "  cluster {} {}: size {}, AI share {:.1}%, price range {:.2}%, volume vs 30d {:.1}%",
            e.cluster, e.zone, e.size, e.ai_share, e.centroid[4], e.centroid[5]
        );
    }
    files.push(("cluster_assignments.csv".into(), analysis.assignments_csv()));
    files.push(("cluster_centroids.csv".into(), analysis.centroid_table_csv()));
    files.push(("cluster_plot_data.csv".into(), analysis.plot_data_csv()));
    files.push((
        "cluster_summary.json".into(),
        serde_json::to_string_pretty(&summary).expect("cluster summary serializes") + "\n",
    ));
    files.push(("summary.txt".into(), digest));
    Ok(files)
}

/// Writes all artifacts into `dir` (created if missing) and returns their
/// paths.
pub fn write_report(
    records: &[IncidentRecord],
    schema: &Schema,
    dir: &Path,
    opts: &ReportOptions,
) -> Result<Vec<PathBuf>, ReportError> {
    let files = build_report(records, schema, opts)?;
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.into(), source })?;
    let mut written = Vec::new();
    for (name, content) in files {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|source| ReportError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}
