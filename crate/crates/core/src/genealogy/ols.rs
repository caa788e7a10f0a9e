//! Ordinary least squares through Householder QR.

use crate::error::AnalysisError;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub betas: Vec<f64>,
    /// 1 − SS_res / SS_tot, defined as 0 when y has no variance.
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

impl OlsFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.betas).map(|(x, b)| x * b).sum()
    }
}

/// Fit `y ≈ X β`. `rows` holds one design row per observation and `names`
/// labels the columns for rank-deficiency errors.
pub fn ols_fit(names: &[&str], rows: &[Vec<f64>], y: &[f64]) -> Result<OlsFit, AnalysisError> {
    let n = rows.len();
    let p = names.len();
    if y.len() != n || rows.iter().any(|r| r.len() != p) {
        return Err(AnalysisError::Invalid("design and response sizes disagree".into()));
    }
    if p == 0 || n < p {
        return Err(AnalysisError::Underdetermined { rows: n, cols: p });
    }
    if rows.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::Invalid("non-finite value in regression data".into()));
    }

    // column-major working copy of X, and a copy of y that receives Qᵀy
    let mut a: Vec<Vec<f64>> = (0..p).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    let mut qty = y.to_vec();
    let scale = a
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = scale * 1e-10 * n.max(p) as f64;

    for k in 0..p {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= tol {
            return Err(collinear(&a, k, names));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= f * vi;
            }
        };
        for col in a.iter_mut().skip(k) {
            reflect(&mut col[k..]);
        }
        reflect(&mut qty[k..]);
    }

    let mut betas = vec![0.0; p];
    for k in (0..p).rev() {
        let s: f64 = (k + 1..p).map(|c| a[c][k] * betas[c]).sum();
        betas[k] = (qty[k] - s) / a[k][k];
    }

    let residuals: Vec<f64> = rows
        .iter()
        .zip(y)
        .map(|(r, yi)| yi - r.iter().zip(&betas).map(|(x, b)| x * b).sum::<f64>())
        .collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    Ok(OlsFit {
        betas,
        r_squared,
        residuals,
    })
}

/// Column `k` lies in the span of columns `0..k`; name the ones it uses.
fn collinear(a: &[Vec<f64>], k: usize, names: &[&str]) -> AnalysisError {
    // R[0..k, 0..k] c = R[0..k, k]
    let mut c = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| a[j][i] * c[j]).sum();
        c[i] = (a[k][i] - s) / a[i][i];
    }
    let biggest = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let others = c
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > 1e-9 * biggest.max(1.0))
        .map(|(i, _)| names[i].to_string())
        .collect();
    AnalysisError::RankDeficient {
        column: names[k].to_string(),
        others,
    }
}
