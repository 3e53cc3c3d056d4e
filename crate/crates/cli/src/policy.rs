//! JSON policy files written by `solve` and read by `simulate`.

use covsteer::{AffinePolicy, ModelError, RandomizedAffinePolicy};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::Rows;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub ubar: Vec<Vec<f64>>,
    pub gains: Vec<Rows>,
    pub mu_ref: Vec<Vec<f64>>,
    /// Randomization covariances; all zero for a deterministic policy.
    pub p: Vec<Rows>,
}

fn rows(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(r: &Rows) -> Result<DMatrix<f64>, String> {
    let nc = r.first().map_or(0, Vec::len);
    if r.iter().any(|row| row.len() != nc) {
        return Err("ragged matrix in policy file".into());
    }
    Ok(DMatrix::from_fn(r.len(), nc, |i, j| r[i][j]))
}

impl PolicyFile {
    pub fn from_policy(policy: &RandomizedAffinePolicy) -> Self {
        let base = policy.base();
        let h = policy.horizon();
        Self {
            ubar: (0..h).map(|k| base.ubar(k).iter().copied().collect()).collect(),
            gains: (0..h).map(|k| rows(base.gain(k))).collect(),
            mu_ref: (0..h).map(|k| base.mu_ref(k).iter().copied().collect()).collect(),
            p: (0..h).map(|k| rows(policy.p(k))).collect(),
        }
    }

    pub fn to_policy(&self) -> Result<RandomizedAffinePolicy, String> {
        let gains = self.gains.iter().map(matrix).collect::<Result<Vec<_>, _>>()?;
        let p = self.p.iter().map(matrix).collect::<Result<Vec<_>, _>>()?;
        let vecs = |v: &[Vec<f64>]| v.iter().map(|x| DVector::from_column_slice(x)).collect::<Vec<_>>();
        let build = || -> Result<RandomizedAffinePolicy, ModelError> {
            let base = AffinePolicy::new(vecs(&self.ubar), gains, vecs(&self.mu_ref))?;
            RandomizedAffinePolicy::new(base, p)
        };
        build().map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let base = AffinePolicy::new(
            vec![DVector::from_vec(vec![0.5]); 2],
            vec![DMatrix::from_row_slice(1, 2, &[0.1, -0.3]); 2],
            vec![DVector::from_vec(vec![1.0, 2.0]); 2],
        )
        .unwrap();
        let pol = RandomizedAffinePolicy::new(base, vec![DMatrix::from_element(1, 1, 0.25); 2]).unwrap();
        let text = serde_json::to_string(&PolicyFile::from_policy(&pol)).unwrap();
        let back: PolicyFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_policy().unwrap(), pol);
    }
}
