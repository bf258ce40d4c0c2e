//! Brute-force two-way ANOVA: explicit dummy-coded design matrices, normal
//! equations solved by Gaussian elimination, Type II sums as differences of
//! residual sums of squares. Designs are generated connected (and with
//! every cell filled when an interaction is fitted) so each design matrix
//! has full column rank.

#![allow(dead_code)]

pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        SplitMix(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + (self.next_u64() % (hi_inclusive - lo + 1) as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

pub struct Design {
    pub y: Vec<f64>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub ka: usize,
    pub kb: usize,
    pub interaction: bool,
}

/// Random design with at most 100 rows, 2..=8 levels of factor a and
/// 2..=3 levels of factor b.
pub fn random_design(rng: &mut SplitMix, interaction: bool) -> Design {
    let ka = rng.range(2, 8);
    let kb = rng.range(2, 3);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    if interaction {
        for i in 0..ka {
            for j in 0..kb {
                a.push(i);
                b.push(j);
            }
        }
    } else {
        for i in 0..ka {
            a.push(i);
            b.push(0);
        }
        for j in 1..kb {
            a.push(0);
            b.push(j);
        }
    }
    let n = rng.range(a.len() + 2, 100);
    while a.len() < n {
        a.push(rng.range(0, ka - 1));
        b.push(rng.range(0, kb - 1));
    }
    let alpha: Vec<f64> = (0..ka).map(|_| 10.0 * rng.uniform() - 5.0).collect();
    let beta: Vec<f64> = (0..kb).map(|_| 6.0 * rng.uniform() - 3.0).collect();
    let gamma: Vec<f64> = (0..ka * kb).map(|_| if interaction { 4.0 * rng.uniform() - 2.0 } else { 0.0 }).collect();
    let sigma = 0.5 + 2.0 * rng.uniform();
    let y = (0..n).map(|r| 40.0 + alpha[a[r]] + beta[b[r]] + gamma[a[r] * kb + b[r]] + sigma * rng.normal()).collect();
    Design { y, a, b, ka, kb, interaction }
}

fn columns(d: &Design, use_a: bool, use_b: bool, use_ab: bool) -> Vec<Vec<f64>> {
    let n = d.y.len();
    let mut cols = vec![vec![1.0; n]];
    if use_a {
        for i in 1..d.ka {
            cols.push((0..n).map(|r| if d.a[r] == i { 1.0 } else { 0.0 }).collect());
        }
    }
    if use_b {
        for j in 1..d.kb {
            cols.push((0..n).map(|r| if d.b[r] == j { 1.0 } else { 0.0 }).collect());
        }
    }
    if use_ab {
        for i in 1..d.ka {
            for j in 1..d.kb {
                cols.push((0..n).map(|r| if d.a[r] == i && d.b[r] == j { 1.0 } else { 0.0 }).collect());
            }
        }
    }
    cols
}

/// Residual sum of squares of the least-squares fit on `cols`.
#[allow(clippy::needless_range_loop)]
fn sse(cols: &[Vec<f64>], y: &[f64]) -> f64 {
    let p = cols.len();
    let n = y.len();
    let mut m = vec![vec![0.0; p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            m[i][j] = (0..n).map(|r| cols[i][r] * cols[j][r]).sum();
        }
        m[i][p] = (0..n).map(|r| cols[i][r] * y[r]).sum();
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&x, &z| m[x][c].abs().total_cmp(&m[z][c].abs())).unwrap();
        m.swap(c, piv);
        assert!(m[c][c].abs() > 1e-12, "oracle design is singular");
        for r in 0..p {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=p {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..p).map(|i| m[i][p] / m[i][i]).collect();
    (0..n)
        .map(|r| {
            let fit: f64 = (0..p).map(|i| beta[i] * cols[i][r]).sum();
            (y[r] - fit).powi(2)
        })
        .sum()
}

pub struct OracleTerm {
    pub ss: f64,
    pub df: u64,
    pub f: f64,
    pub eta: f64,
}

pub struct OracleResult {
    pub terms: Vec<OracleTerm>,
    pub ss_res: f64,
    pub df_res: u64,
    pub r_squared: f64,
}

pub fn oracle_anova(d: &Design) -> OracleResult {
    let n = d.y.len();
    let sse_a = sse(&columns(d, true, false, false), &d.y);
    let sse_b = sse(&columns(d, false, true, false), &d.y);
    let sse_main = sse(&columns(d, true, true, false), &d.y);
    let full_cols = columns(d, true, true, d.interaction);
    let sse_full = sse(&full_cols, &d.y);
    let df_res = (n - full_cols.len()) as u64;
    let mean = d.y.iter().sum::<f64>() / n as f64;
    let ss_total: f64 = d.y.iter().map(|v| (v - mean).powi(2)).sum();

    let mut raw = vec![(sse_b - sse_main, (d.ka - 1) as u64), (sse_a - sse_main, (d.kb - 1) as u64)];
    if d.interaction {
        raw.push((sse_main - sse_full, ((d.ka - 1) * (d.kb - 1)) as u64));
    }
    let terms = raw
        .into_iter()
        .map(|(ss, df)| OracleTerm {
            ss,
            df,
            f: (ss / df as f64) / (sse_full / df_res as f64),
            eta: ss / (ss + sse_full),
        })
        .collect();
    OracleResult { terms, ss_res: sse_full, df_res, r_squared: 1.0 - sse_full / ss_total }
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    let scale = got.abs().max(want.abs());
    if scale == 0.0 {
        0.0
    } else {
        (got - want).abs() / scale
    }
}
