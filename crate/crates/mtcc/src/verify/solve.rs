//! Exact solvers on the augmented MDP: value iteration, policy evaluation by
//! direct linear solve, and the Bellman-consistency residual.

use super::tabular::AugmentedTabularMdp;
use crate::{Error, Result};

pub struct ViResult {
    pub values: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub policy: Vec<usize>,
    /// Successive sup-norm differences, for the contraction property.
    pub sup_diffs: Vec<f64>,
}

/// Value iteration to sup-norm tolerance `tol`.
pub fn value_iteration(mdp: &AugmentedTabularMdp, tol: f64, max_iter: usize) -> ViResult {
    let n = mdp.n_states;
    let mut v = vec![0.0; n];
    let mut sup_diffs = Vec::new();
    let mut q = vec![vec![0.0; mdp.n_actions]; n];
    for _ in 0..max_iter {
        let mut v_next = vec![0.0; n];
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for a in 0..mdp.n_actions {
                let mut val = mdp.delayed_reward[s][a];
                for &(s2, p) in &mdp.kernel[s][a] {
                    val += mdp.gamma * p * v[s2];
                }
                q[s][a] = val;
                best = best.max(val);
            }
            v_next[s] = best;
        }
        let diff = v
            .iter()
            .zip(&v_next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        sup_diffs.push(diff);
        v = v_next;
        if diff < tol {
            break;
        }
    }
    let policy = q
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(a, _)| a)
                .unwrap()
        })
        .collect();
    ViResult { values: v, q, policy, sup_diffs }
}

/// Dense Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::invalid("singular system in policy evaluation"));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Exact Q-values of a stationary policy: V solves (I - gamma P_pi) V = R_pi,
/// then one backup produces Q.
pub fn policy_evaluation_q(mdp: &AugmentedTabularMdp, policy: &[usize]) -> Result<Vec<Vec<f64>>> {
    let n = mdp.n_states;
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        a[s][s] = 1.0;
        let act = policy[s];
        for &(s2, p) in &mdp.kernel[s][act] {
            a[s][s2] -= mdp.gamma * p;
        }
        b[s] = mdp.delayed_reward[s][act];
    }
    let v = solve_linear(a, b)?;
    Ok((0..n)
        .map(|s| {
            (0..mdp.n_actions)
                .map(|act| {
                    let mut q = mdp.delayed_reward[s][act];
                    for &(s2, p) in &mdp.kernel[s][act] {
                        q += mdp.gamma * p * v[s2];
                    }
                    q
                })
                .collect()
        })
        .collect())
}

/// Max over (state, action) of the Bellman-consistency defect of `q` under
/// `policy`.
pub fn bellman_residual(mdp: &AugmentedTabularMdp, policy: &[usize], q: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let mut rhs = mdp.delayed_reward[s][a];
            for &(s2, p) in &mdp.kernel[s][a] {
                rhs += mdp.gamma * p * q[s2][policy[s2]];
            }
            worst = worst.max((q[s][a] - rhs).abs());
        }
    }
    worst
}
