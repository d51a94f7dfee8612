//! Pairwise score baselines: correlation, lag-1 Granger causality and
//! plug-in transfer entropy.
//!
//! `scores[i][j]` is directional where the method is: for Granger and
//! transfer entropy it measures how much node `j` helps predict node `i`.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logmath::entropy_from_counts;
use crate::series::TimeSeries;

/// Ceiling on the Granger variance ratio when the full model fits exactly.
pub const GRANGER_CAP: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Corr,
    Granger,
    Te,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corr" | "correlation" => Ok(Method::Corr),
            "granger" => Ok(Method::Granger),
            "te" | "transfer-entropy" => Ok(Method::Te),
            other => Err(Error::InvalidModel(format!("unknown heuristic `{other}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Corr => "corr",
            Method::Granger => "granger",
            Method::Te => "te",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub method: Method,
    pub scores: Vec<Vec<f64>>,
    /// Ordered pairs whose score came from a degenerate-input fallback.
    pub flagged: Vec<(usize, usize)>,
    /// Granger only: the variance ratio Σ_ij/Σ_i, where smaller means stronger.
    pub literal: Option<Vec<Vec<f64>>>,
}

impl ScoreMatrix {
    /// Undirected scores, S ← max(S, Sᵀ).
    pub fn symmetrized(&self) -> Vec<Vec<f64>> {
        let n = self.scores.len();
        let mut out = self.scores.clone();
        for i in 0..n {
            for j in 0..n {
                out[i][j] = self.scores[i][j].max(self.scores[j][i]);
            }
        }
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W, symmetric: bool) -> Result<()> {
        let m = if symmetric { self.symmetrized() } else { self.scores.clone() };
        let mut out = csv::Writer::from_writer(w);
        for row in &m {
            out.write_record(row.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn heuristic_scores(x: &TimeSeries, method: Method) -> Result<ScoreMatrix> {
    match method {
        Method::Corr => correlation_scores(x),
        Method::Granger => granger_scores(x),
        Method::Te => transfer_entropy_scores(x),
    }
}

fn require_len(x: &TimeSeries, min: usize) -> Result<()> {
    if x.len() < min {
        return Err(Error::InvalidModel(format!("series of length {} is too short; need {min}", x.len())));
    }
    Ok(())
}

/// Pearson correlation with the 1/(T − 1) normalisation.
pub fn correlation_scores(x: &TimeSeries) -> Result<ScoreMatrix> {
    require_len(x, 2)?;
    let (n, t) = (x.n_nodes(), x.len());
    let centred: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let row = x.row(i);
            let mean = row.iter().map(|&v| v as f64).sum::<f64>() / t as f64;
            row.iter().map(|&v| v as f64 - mean).collect()
        })
        .collect();
    let sd: Vec<f64> =
        centred.iter().map(|c| (c.iter().map(|v| v * v).sum::<f64>() / (t - 1) as f64).sqrt()).collect();
    let mut scores = vec![vec![0.0; n]; n];
    let mut flagged = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if sd[i] == 0.0 || sd[j] == 0.0 {
                flagged.push((i, j));
                continue;
            }
            let c = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum::<f64>() / (t - 1) as f64;
            scores[i][j] = c / (sd[i] * sd[j]);
        }
    }
    Ok(ScoreMatrix { method: Method::Corr, scores, flagged, literal: None })
}

/// Mean squared OLS residual of `y` on the given predictor columns plus an
/// intercept, or `None` when the design is rank deficient.
fn residual_variance(y: &[f64], cols: &[&[f64]]) -> Option<f64> {
    let k = cols.len() + 1;
    let m = y.len();
    let col = |c: usize, t: usize| if c == 0 { 1.0 } else { cols[c - 1][t] };
    let mut gram = Matrix3::<f64>::identity();
    let mut xty = Vector3::<f64>::zeros();
    for a in 0..k {
        for b in 0..k {
            gram[(a, b)] = (0..m).map(|t| col(a, t) * col(b, t)).sum();
        }
        xty[a] = (0..m).map(|t| col(a, t) * y[t]).sum();
    }
    let svd = gram.svd(true, true);
    let sv = svd.singular_values;
    let top = sv.max();
    let rank = sv.iter().filter(|&&s| s > 1e-9 * top).count();
    // Unused slots of the 3×3 system carry the identity and one unit singular value.
    if rank < 3 {
        return None;
    }
    let beta = svd.solve(&xty, 1e-12).ok()?;
    let rss: f64 = (0..m)
        .map(|t| {
            let fit: f64 = (0..k).map(|a| beta[a] * col(a, t)).sum();
            (y[t] - fit).powi(2)
        })
        .sum();
    Some((rss / m as f64).max(0.0))
}

/// Lag-1 Granger scores Σ_i/Σ_ij (larger means `j` helps predict `i`).
pub fn granger_scores(x: &TimeSeries) -> Result<ScoreMatrix> {
    require_len(x, 3)?;
    let (n, t) = (x.n_nodes(), x.len());
    let past: Vec<Vec<f64>> = (0..n).map(|i| x.row(i)[..t - 1].iter().map(|&v| v as f64).collect()).collect();
    let future: Vec<Vec<f64>> = (0..n).map(|i| x.row(i)[1..].iter().map(|&v| v as f64).collect()).collect();
    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<(usize, usize)>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = vec![0.0; n];
            let mut lit = vec![0.0; n];
            let mut flags = Vec::new();
            let restricted = residual_variance(&future[i], &[&past[i]]);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let full = residual_variance(&future[i], &[&past[i], &past[j]]);
                let (score, literal, flagged) = match (restricted, full) {
                    (Some(si), Some(sij)) if si > 0.0 => {
                        let score = if sij > 0.0 { (si / sij).min(GRANGER_CAP) } else { GRANGER_CAP };
                        (score, sij / si, false)
                    }
                    _ => (1.0, 1.0, true),
                };
                s[j] = score;
                lit[j] = literal;
                if flagged {
                    flags.push((i, j));
                }
            }
            (s, lit, flags)
        })
        .collect();
    let mut scores = Vec::with_capacity(n);
    let mut literal = Vec::with_capacity(n);
    let mut flagged = Vec::new();
    for (s, l, f) in rows {
        scores.push(s);
        literal.push(l);
        flagged.extend(f);
    }
    Ok(ScoreMatrix { method: Method::Granger, scores, flagged, literal: Some(literal) })
}

/// Plug-in transfer entropy T_{j→i} in bits.
pub fn transfer_entropy(x: &TimeSeries, i: usize, j: usize) -> f64 {
    let (xi, xj) = (x.row(i), x.row(j));
    // counts[next][current][source]
    let mut c = [[[0u64; 2]; 2]; 2];
    for t in 0..x.len() - 1 {
        c[xi[t + 1] as usize][xi[t] as usize][xj[t] as usize] += 1;
    }
    let joint_all = entropy_from_counts(c.iter().flat_map(|a| a.iter().flat_map(|b| b.iter().copied())));
    let cur_src = entropy_from_counts((0..4).map(|k| c[0][k / 2][k % 2] + c[1][k / 2][k % 2]));
    let next_cur = entropy_from_counts((0..4).map(|k| c[k / 2][k % 2][0] + c[k / 2][k % 2][1]));
    let cur = entropy_from_counts((0..2).map(|b| c[0][b][0] + c[0][b][1] + c[1][b][0] + c[1][b][1]));
    ((next_cur - cur) - (joint_all - cur_src)).max(0.0)
}

pub fn transfer_entropy_scores(x: &TimeSeries) -> Result<ScoreMatrix> {
    require_len(x, 3)?;
    let n = x.n_nodes();
    let scores: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { transfer_entropy(x, i, j) }).collect())
        .collect();
    Ok(ScoreMatrix { method: Method::Te, scores, flagged: Vec::new(), literal: None })
}
