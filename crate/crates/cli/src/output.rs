//! CSV writers. Every number is written with 17 significant digits.
//!
//! | file | columns |
//! |------|---------|
//! | `statistics.csv` | `k, mu_<i>..., sigma_<i>_<j>...` (`i ≤ j`, 0-based) |
//! | `gaps.csv` | `k, gap_m, gap_x, gap_u, norm_m, norm_x, norm_u` |
//! | `policy.csv` | `k, ubar_<a>..., gain_<a>_<i>..., p_<a>_<b>...` (`a ≤ b` for `p`) |
//! | `trajectories.csv` | `trajectory, k, x_<i>..., u_<a>...` (inputs empty at `k = N`) |
//! | `sample_statistics.csv` | `k, mean_<i>..., cov_<i>_<j>...` |

use std::fmt::Write as _;

use covsteer::{RandomizedAffinePolicy, SampleStatistics, StateStatistics, StepGaps, TrajectoryBatch};
use nalgebra::{DMatrix, DVector};

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn upper_names(prefix: &str, n: usize) -> Vec<String> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in i..n {
            v.push(format!("{prefix}_{i}_{j}"));
        }
    }
    v
}

fn upper_values(m: &DMatrix<f64>, out: &mut Vec<String>) {
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            out.push(num(m[(i, j)]));
        }
    }
}

fn vector_values(v: &DVector<f64>, out: &mut Vec<String>) {
    out.extend(v.iter().map(|&x| num(x)));
}

fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}_{i}")).collect()
}

fn table(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn statistics_header(n: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    h.extend(indexed("mu", n));
    h.extend(upper_names("sigma", n));
    h
}

pub fn statistics_csv(stats: &StateStatistics) -> String {
    let n = stats.mu[0].len();
    table(
        statistics_header(n),
        stats.mu.iter().zip(&stats.sigma).enumerate().map(|(k, (mu, s))| {
            let mut r = vec![k.to_string()];
            vector_values(mu, &mut r);
            upper_values(s, &mut r);
            r
        }),
    )
}

pub fn gaps_header() -> Vec<String> {
    ["k", "gap_m", "gap_x", "gap_u", "norm_m", "norm_x", "norm_u"]
        .map(String::from)
        .to_vec()
}

pub fn gaps_csv(gaps: &[StepGaps]) -> String {
    table(
        gaps_header(),
        gaps.iter().enumerate().map(|(k, g)| {
            let mut r = vec![k.to_string()];
            r.extend([g.m, g.x, g.u, g.m_scale, g.x_scale, g.u_scale].map(num));
            r
        }),
    )
}

pub fn policy_header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    h.extend(indexed("ubar", m));
    for a in 0..m {
        for i in 0..n {
            h.push(format!("gain_{a}_{i}"));
        }
    }
    h.extend(upper_names("p", m));
    h
}

pub fn policy_csv(policy: &RandomizedAffinePolicy) -> String {
    let base = policy.base();
    table(
        policy_header(base.state_dim(), base.input_dim()),
        (0..policy.horizon()).map(|k| {
            let mut r = vec![k.to_string()];
            vector_values(base.ubar(k), &mut r);
            let g = base.gain(k);
            for a in 0..g.nrows() {
                for i in 0..g.ncols() {
                    r.push(num(g[(a, i)]));
                }
            }
            upper_values(policy.p(k), &mut r);
            r
        }),
    )
}

pub fn trajectories_header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["trajectory".to_string(), "k".to_string()];
    h.extend(indexed("x", n));
    h.extend(indexed("u", m));
    h
}

pub fn trajectories_csv(batch: &TrajectoryBatch, n: usize, m: usize) -> String {
    let mut s = trajectories_header(n, m).join(",");
    s.push('\n');
    for (t, traj) in batch.trajectories.iter().enumerate() {
        for (k, x) in traj.states.iter().enumerate() {
            let _ = write!(s, "{t},{k}");
            for v in x.iter() {
                let _ = write!(s, ",{}", num(*v));
            }
            match traj.inputs.get(k) {
                Some(u) => u.iter().for_each(|v| {
                    let _ = write!(s, ",{}", num(*v));
                }),
                None => s.push_str(&",".repeat(m)),
            }
            s.push('\n');
        }
    }
    s
}

pub fn sample_statistics_header(n: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    h.extend(indexed("mean", n));
    h.extend(upper_names("cov", n));
    h
}

pub fn sample_statistics_csv(stats: &SampleStatistics) -> String {
    let n = stats.mean[0].len();
    table(
        sample_statistics_header(n),
        stats.mean.iter().zip(&stats.covariance).enumerate().map(|(k, (mu, s))| {
            let mut r = vec![k.to_string()];
            vector_values(mu, &mut r);
            upper_values(s, &mut r);
            r
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        let x = 1.0 / 3.0;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }
}
