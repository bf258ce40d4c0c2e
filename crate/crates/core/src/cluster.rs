//! Trading-zone clustering: z-score standardization of the six numeric
//! fields, K-means (k-means++ seeding, Lloyd iterations), PCA for 2-D
//! coordinates, and a rule-based mapping of the five clusters onto zones.

use std::fmt::{self, Write as _};

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::symmetric_eigen;
use crate::model::IncidentRecord;
use crate::rng::PortableRng;

pub const FEATURES: [&str; 6] = [
    "total_buy_volume_pct",
    "total_sell_volume_pct",
    "ai_buy_volume_pct",
    "ai_sell_volume_pct",
    "price_range_pct",
    "volume_vs_30d_pct",
];
const TOTAL_BUY: usize = 0;
const TOTAL_SELL: usize = 1;
const AI_BUY: usize = 2;
const AI_SELL: usize = 3;
const PRICE: usize = 4;
const VOLUME: usize = 5;

/// Version tag of the zone-labeling rules.
pub const ZONE_HEURISTIC_VERSION: &str = "zones-v1";
/// AI share (percent of total volume) above which a cluster may be anomalous.
pub const ANOMALOUS_AI_SHARE: f64 = 70.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("k must be between 1 and n = {n}, got {k}")]
    InvalidK { k: usize, n: usize },
    #[error("zone labeling needs k = 5, got {0}")]
    UnsupportedK(usize),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    /// Standardized values, one row per record.
    pub values: Array2<f64>,
    pub means: Vec<f64>,
    /// Population standard deviations.
    pub stddevs: Vec<f64>,
    pub constant: Vec<bool>,
    pub serials: Vec<Option<u64>>,
}

impl FeatureMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Maps a standardized point back to original units.
    pub fn destandardize(&self, z: ArrayView1<f64>) -> Vec<f64> {
        z.iter().zip(self.means.iter().zip(&self.stddevs)).map(|(v, (m, s))| m + v * s).collect()
    }
}

/// Raw six-feature row. Bucketed volume ratios use the bucket's
/// representative value.
pub fn feature_row(r: &IncidentRecord) -> [f64; 6] {
    [
        r.total_buy_volume_pct,
        r.total_sell_volume_pct,
        r.ai_buy_volume_pct,
        r.ai_sell_volume_pct,
        r.price_range_pct,
        r.volume_vs_30d.numeric(),
    ]
}

pub fn standardize(records: &[IncidentRecord]) -> Result<FeatureMatrix, ClusterError> {
    let mut raw = Array2::<f64>::zeros((records.len(), FEATURES.len()));
    for (i, r) in records.iter().enumerate() {
        raw.row_mut(i).assign(&Array1::from(feature_row(r).to_vec()));
    }
    let mut m = standardize_matrix(&raw, FEATURES.iter().map(|s| s.to_string()).collect())?;
    m.serials = records.iter().map(|r| r.serial_no).collect();
    Ok(m)
}

/// Z-scores each column with its population standard deviation. Constant
/// columns become zeros and are flagged.
pub fn standardize_matrix(raw: &Array2<f64>, columns: Vec<String>) -> Result<FeatureMatrix, ClusterError> {
    let (n, d) = raw.dim();
    if n < 2 {
        return Err(ClusterError::TooFewRows(n));
    }
    if columns.len() != d {
        return Err(ClusterError::Shape(format!("{} column names for {d} columns", columns.len())));
    }
    check_finite(raw)?;
    let mut values = Array2::<f64>::zeros((n, d));
    let (mut means, mut stddevs, mut constant) = (Vec::new(), Vec::new(), Vec::new());
    for (j, col) in raw.axis_iter(Axis(1)).enumerate() {
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let is_const = col.iter().all(|&v| v == col[0]);
        let sd = if is_const { 0.0 } else { var.sqrt() };
        if !is_const {
            for i in 0..n {
                values[[i, j]] = (col[i] - mean) / sd;
            }
        }
        means.push(if is_const { col[0] } else { mean });
        stddevs.push(sd);
        constant.push(is_const);
    }
    Ok(FeatureMatrix { columns, values, means, stddevs, constant, serials: vec![None; n] })
}

fn check_finite(x: &Array2<f64>) -> Result<(), ClusterError> {
    for ((row, col), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(ClusterError::NonFinite { row, col });
        }
    }
    Ok(())
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Independent k-means++ starts; the lowest final inertia wins.
    pub n_init: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions { max_iter: 300, tol: 1e-6, n_init: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// Centroids in the units of the clustered matrix.
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    pub seed: u64,
    pub converged: bool,
    /// Inertia after the initial assignment and after every Lloyd step.
    pub inertia_history: Vec<f64>,
}

impl ClusterModel {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &a in &self.assignments {
            s[a] += 1;
        }
        s
    }
}

/// Nearest centroid per row (ties go to the lowest index) and the total
/// squared distance.
pub fn assign(x: &Array2<f64>, centroids: &Array2<f64>) -> (Vec<usize>, f64) {
    let mut labels = Vec::with_capacity(x.nrows());
    let mut inertia = 0.0;
    for row in x.rows() {
        let (best, d) = centroids
            .rows()
            .into_iter()
            .map(|c| sq_dist(row, c))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (j, d)| if d < acc.1 { (j, d) } else { acc });
        labels.push(best);
        inertia += d;
    }
    (labels, inertia)
}

fn kmeans_pp(x: &Array2<f64>, k: usize, rng: &mut PortableRng) -> Array2<f64> {
    let n = x.nrows();
    let mut centers = Array2::<f64>::zeros((k, x.ncols()));
    centers.row_mut(0).assign(&x.row(rng.below(n)));
    let mut d2: Vec<f64> = x.rows().into_iter().map(|r| sq_dist(r, centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("positive total"))
        } else {
            rng.below(n)
        };
        centers.row_mut(c).assign(&x.row(pick));
        for (i, r) in x.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, centers.row(c)));
        }
    }
    centers
}

fn lloyd(
    x: &Array2<f64>,
    mut centroids: Array2<f64>,
    opts: &KMeansOptions,
) -> (Array2<f64>, Vec<usize>, Vec<f64>, usize, bool) {
    let (n, d) = x.dim();
    let k = centroids.nrows();
    let (mut labels, inertia) = assign(x, &centroids);
    let mut history = vec![inertia];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            let mut s = sums.row_mut(c);
            s += &x.row(i);
            counts[c] += 1;
        }
        let mut next = centroids.clone();
        let mut taken = vec![false; n];
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                next.row_mut(c).assign(&(&sums.row(c) / count as f64));
            } else {
                // Reseed at the point farthest from its own centroid.
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .map(|i| (i, sq_dist(x.row(i), centroids.row(labels[i]))))
                    .fold((usize::MAX, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc })
                    .0;
                taken[far] = true;
                next.row_mut(c).assign(&x.row(far));
            }
        }
        let shift = (0..k).map(|c| sq_dist(centroids.row(c), next.row(c)).sqrt()).fold(0.0, f64::max);
        centroids = next;
        let (new_labels, inertia) = assign(x, &centroids);
        debug_assert!(
            inertia <= history.last().unwrap() * (1.0 + 1e-12) + 1e-12,
            "inertia increased: {history:?} -> {inertia}"
        );
        history.push(inertia);
        let stable = new_labels == labels;
        labels = new_labels;
        if stable || shift < opts.tol {
            converged = true;
            break;
        }
    }
    (centroids, labels, history, iterations, converged)
}

/// K-means on the rows of `x`. Deterministic for fixed `(x, k, seed, opts)`.
pub fn kmeans(x: &Array2<f64>, k: usize, seed: u64, opts: &KMeansOptions) -> Result<ClusterModel, ClusterError> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    if opts.max_iter == 0 || opts.n_init == 0 || !(opts.tol >= 0.0 && opts.tol.is_finite()) {
        return Err(ClusterError::InvalidOptions(format!("{opts:?}")));
    }
    check_finite(x)?;
    let mut rng = PortableRng::seed_from_u64(seed);
    let mut best: Option<ClusterModel> = None;
    for _ in 0..opts.n_init {
        let init = kmeans_pp(x, k, &mut rng);
        let (centroids, assignments, inertia_history, iterations, converged) = lloyd(x, init, opts);
        let inertia = *inertia_history.last().unwrap();
        if best.as_ref().is_none_or(|b| inertia < b.inertia) {
            best = Some(ClusterModel {
                k,
                centroids: centroids.rows().into_iter().map(|r| r.to_vec()).collect(),
                assignments,
                inertia,
                iterations,
                seed,
                converged,
                inertia_history,
            });
        }
    }
    Ok(best.expect("n_init >= 1"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// Column means subtracted before projection.
    pub mean: Vec<f64>,
    /// Unit loading vectors, one per component, ordered by eigenvalue.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// n x n_components scores.
    pub projection: Vec<Vec<f64>>,
    pub n_components: usize,
    /// Set when every column is constant, leaving no variance to explain.
    pub degenerate: bool,
}

impl PcaModel {
    pub fn project(&self, point: &[f64]) -> Vec<f64> {
        self.components[..self.n_components]
            .iter()
            .map(|c| c.iter().zip(point.iter().zip(&self.mean)).map(|(w, (v, m))| w * (v - m)).sum())
            .collect()
    }

    pub fn two_pc_ratio(&self) -> f64 {
        self.explained_variance_ratio.iter().take(2).sum()
    }
}

/// Principal components of the population covariance of `x`. Components
/// are sorted by descending eigenvalue; each is signed so its
/// largest-magnitude loading is positive.
pub fn pca(x: &Array2<f64>, n_components: usize) -> Result<PcaModel, ClusterError> {
    let (n, d) = x.dim();
    if n < 2 {
        return Err(ClusterError::TooFewRows(n));
    }
    if n_components == 0 || n_components > d {
        return Err(ClusterError::InvalidOptions(format!("n_components must be in 1..={d}, got {n_components}")));
    }
    check_finite(x)?;
    let mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let centered = x - &mean;
    let cov = centered.t().dot(&centered) / n as f64;
    let (vals, vecs) = symmetric_eigen(&cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| vals[i].max(0.0)).collect();
    let components: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            let mut v = vecs.column(i).to_vec();
            let lead = v.iter().enumerate().fold(0, |b, (j, x)| if x.abs() > v[b].abs() { j } else { b });
            if v[lead] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    let trace: f64 = eigenvalues.iter().sum();
    let degenerate = trace <= 0.0;
    let explained_variance_ratio =
        if degenerate { vec![0.0; d] } else { eigenvalues.iter().map(|e| e / trace).collect() };
    let projection = centered
        .rows()
        .into_iter()
        .map(|r| components[..n_components].iter().map(|c| c.iter().zip(r.iter()).map(|(w, v)| w * v).sum()).collect())
        .collect();
    Ok(PcaModel {
        mean: mean.to_vec(),
        components,
        eigenvalues,
        explained_variance_ratio,
        projection,
        n_components,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Zone {
    Stable,
    Anomalous,
    TransitionA,
    TransitionB,
    Irregular,
    Strategic,
}

impl Zone {
    pub const ALL: [Zone; 6] =
        [Zone::Stable, Zone::Anomalous, Zone::TransitionA, Zone::TransitionB, Zone::Irregular, Zone::Strategic];

    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Stable => "STABLE",
            Zone::Anomalous => "ANOMALOUS",
            Zone::TransitionA => "TRANSITION_A",
            Zone::TransitionB => "TRANSITION_B",
            Zone::Irregular => "IRREGULAR",
            Zone::Strategic => "STRATEGIC",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEvidence {
    pub cluster: usize,
    pub zone: Zone,
    pub size: usize,
    /// Centroid in original units, ordered as [`FEATURES`].
    pub centroid: Vec<f64>,
    /// `100 * (ai_buy + ai_sell) / (total_buy + total_sell)` of the centroid.
    pub ai_share: f64,
    /// Mean squared distance of members to the centroid, standardized units.
    pub dispersion: f64,
    pub pc1: f64,
    pub pc2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneMap {
    pub heuristic_version: String,
    /// Zone of each cluster, indexed by cluster.
    pub labels: Vec<Zone>,
    pub evidence: Vec<ClusterEvidence>,
    pub degenerate: bool,
}

impl ZoneMap {
    pub fn zone_of(&self, cluster: usize) -> Zone {
        self.labels[cluster]
    }

    pub fn cluster_of(&self, zone: Zone) -> Option<usize> {
        self.labels.iter().position(|&z| z == zone)
    }
}

/// 0-based ascending ranks; ties share the lower rank order by index.
fn ranks(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut r = vec![0; values.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank;
    }
    r
}

fn arg_best<F: Fn(usize) -> f64>(candidates: &[usize], key: F, maximize: bool) -> usize {
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        let (kc, kb) = (key(c), key(best));
        if (maximize && kc > kb) || (!maximize && kc < kb) {
            best = c;
        }
    }
    best
}

/// Assigns zones to the clusters of a k = 5 model.
///
/// Rules, applied in order to the clusters not yet labeled (ties go to the
/// lowest cluster index; ranks are 0-based ascending over all clusters):
/// 1. ANOMALOUS: highest mean price range among clusters with AI share above
///    70%; if none, highest price rank + AI share rank.
/// 2. STABLE: lowest `|mean volume ratio - 100| + price rank`.
/// 3. IRREGULAR: largest dispersion.
/// 4. STRATEGIC: smallest dispersion, if strictly below IRREGULAR's.
/// 5. TRANSITION_A then TRANSITION_B for the rest, by ascending PC1 of the
///    centroid.
///
/// If all centroids coincide, clusters are labeled by index in the order
/// STABLE, ANOMALOUS, TRANSITION_A, IRREGULAR, STRATEGIC and the map is
/// flagged degenerate.
pub fn label_zones(model: &ClusterModel, pca: &PcaModel, matrix: &FeatureMatrix) -> Result<ZoneMap, ClusterError> {
    if model.k != 5 {
        return Err(ClusterError::UnsupportedK(model.k));
    }
    if model.assignments.len() != matrix.n() || model.centroids.iter().any(|c| c.len() != matrix.columns.len()) {
        return Err(ClusterError::Shape("model does not match feature matrix".into()));
    }
    if matrix.columns.len() != FEATURES.len() {
        return Err(ClusterError::Shape(format!("expected the {} standard features", FEATURES.len())));
    }
    let k = model.k;
    let sizes = model.sizes();
    let centroids: Vec<Vec<f64>> =
        model.centroids.iter().map(|c| matrix.destandardize(ArrayView1::from(c.as_slice()))).collect();
    let ai_share: Vec<f64> = centroids
        .iter()
        .map(|c| {
            let total = c[TOTAL_BUY] + c[TOTAL_SELL];
            if total > 0.0 {
                100.0 * (c[AI_BUY] + c[AI_SELL]) / total
            } else {
                0.0
            }
        })
        .collect();
    let mut dispersion = vec![0.0; k];
    for (i, &c) in model.assignments.iter().enumerate() {
        dispersion[c] += sq_dist(matrix.values.row(i), ArrayView1::from(model.centroids[c].as_slice()));
    }
    for c in 0..k {
        if sizes[c] > 0 {
            dispersion[c] /= sizes[c] as f64;
        }
    }
    let pcs: Vec<Vec<f64>> = model.centroids.iter().map(|c| pca.project(c)).collect();

    let degenerate = model.centroids.iter().all(|c| c == &model.centroids[0]);
    let mut labels: Vec<Option<Zone>> = vec![None; k];
    if degenerate {
        let order = [Zone::Stable, Zone::Anomalous, Zone::TransitionA, Zone::Irregular, Zone::Strategic];
        for c in 0..k {
            labels[c] = Some(order[c]);
        }
    } else {
        let price: Vec<f64> = centroids.iter().map(|c| c[PRICE]).collect();
        let price_rank = ranks(&price);
        let share_rank = ranks(&ai_share);
        let remaining = |labels: &[Option<Zone>]| (0..k).filter(|&c| labels[c].is_none()).collect::<Vec<_>>();

        let hot: Vec<usize> = (0..k).filter(|&c| ai_share[c] > ANOMALOUS_AI_SHARE).collect();
        let anomalous = if hot.is_empty() {
            arg_best(&remaining(&labels), |c| (price_rank[c] + share_rank[c]) as f64, true)
        } else {
            arg_best(&hot, |c| price[c], true)
        };
        labels[anomalous] = Some(Zone::Anomalous);

        let stable =
            arg_best(&remaining(&labels), |c| (centroids[c][VOLUME] - 100.0).abs() + price_rank[c] as f64, false);
        labels[stable] = Some(Zone::Stable);

        let irregular = arg_best(&remaining(&labels), |c| dispersion[c], true);
        labels[irregular] = Some(Zone::Irregular);

        let strategic = arg_best(&remaining(&labels), |c| dispersion[c], false);
        if dispersion[strategic] < dispersion[irregular] {
            labels[strategic] = Some(Zone::Strategic);
        }

        let mut rest = remaining(&labels);
        rest.sort_by(|&a, &b| pcs[a][0].total_cmp(&pcs[b][0]).then(a.cmp(&b)));
        for (c, zone) in rest.into_iter().zip([Zone::TransitionA, Zone::TransitionB]) {
            labels[c] = Some(zone);
        }
    }
    let labels: Vec<Zone> = labels.into_iter().map(|z| z.expect("every cluster labeled")).collect();
    let evidence = (0..k)
        .map(|c| ClusterEvidence {
            cluster: c,
            zone: labels[c],
            size: sizes[c],
            centroid: centroids[c].clone(),
            ai_share: ai_share[c],
            dispersion: dispersion[c],
            pc1: pcs[c][0],
            pc2: pcs[c].get(1).copied().unwrap_or(0.0),
        })
        .collect();
    Ok(ZoneMap { heuristic_version: ZONE_HEURISTIC_VERSION.into(), labels, evidence, degenerate })
}

/// Full pipeline output for a record set.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAnalysis {
    pub matrix: FeatureMatrix,
    pub model: ClusterModel,
    pub pca: PcaModel,
    pub zones: ZoneMap,
}

/// Standardize, cluster in the six-feature space, project with PCA and
/// label zones. Only k = 5 is supported.
pub fn analyze(
    records: &[IncidentRecord],
    k: usize,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<ClusterAnalysis, ClusterError> {
    if k != 5 {
        return Err(ClusterError::UnsupportedK(k));
    }
    let matrix = standardize(records)?;
    let model = kmeans(&matrix.values, k, seed, opts)?;
    let pca = pca(&matrix.values, 2)?;
    let zones = label_zones(&model, &pca, &matrix)?;
    Ok(ClusterAnalysis { matrix, model, pca, zones })
}

impl ClusterAnalysis {
    /// `serial_no,cluster,zone,pc1,pc2` per record.
    pub fn assignments_csv(&self) -> String {
        let mut out = String::from("serial_no,cluster,zone,pc1,pc2\n");
        for (i, &c) in self.model.assignments.iter().enumerate() {
            let serial = self.matrix.serials[i].map(|s| s.to_string()).unwrap_or_default();
            let p = &self.pca.projection[i];
            let _ = writeln!(out, "{serial},{c},{},{},{}", self.zones.labels[c], p[0], p[1]);
        }
        out
    }

    /// Centroids in original units with size, AI share and dispersion.
    pub fn centroid_table_csv(&self) -> String {
        let mut out = format!("cluster,zone,size,{},ai_share,dispersion\n", FEATURES.join(","));
        for e in &self.zones.evidence {
            let cols: Vec<String> = e.centroid.iter().map(|v| v.to_string()).collect();
            let _ =
                writeln!(out, "{},{},{},{},{},{}", e.cluster, e.zone, e.size, cols.join(","), e.ai_share, e.dispersion);
        }
        out
    }

    /// `pc1,pc2,zone` per record, for external plotting.
    pub fn plot_data_csv(&self) -> String {
        let mut out = String::from("pc1,pc2,zone\n");
        for (i, &c) in self.model.assignments.iter().enumerate() {
            let p = &self.pca.projection[i];
            let _ = writeln!(out, "{},{},{}", p[0], p[1], self.zones.labels[c]);
        }
        out
    }
}
