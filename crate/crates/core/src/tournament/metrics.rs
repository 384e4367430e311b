use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::PayoffTensor;
use crate::baselines::REGISTRY;

pub const REPLICATOR_STEPS: usize = 1000;
pub const REPLICATOR_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RoundRobinAverage,
    PctBestScore,
    WorstCaseScore,
    ReplicatorDynamic,
    Group1Tourney,
    Group2Tourney,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::RoundRobinAverage,
        Metric::PctBestScore,
        Metric::WorstCaseScore,
        Metric::ReplicatorDynamic,
        Metric::Group1Tourney,
        Metric::Group2Tourney,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::RoundRobinAverage => "round_robin_average",
            Metric::PctBestScore => "pct_best_score",
            Metric::WorstCaseScore => "worst_case_score",
            Metric::ReplicatorDynamic => "replicator_dynamic",
            Metric::Group1Tourney => "group1_tourney",
            Metric::Group2Tourney => "group2_tourney",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("payoff tensor has missing or non-finite entries")]
    IncompleteTensor,
    #[error("replicator fitness vanished after shifting payoffs")]
    DegeneratePayoffs,
    #[error("replicator payoff matrix must be square and non-empty")]
    NotSquare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: Metric,
    pub agents: Vec<String>,
    pub scores: Vec<f64>,
    /// Agent indices, best first. Ties go to the agent listed earlier in
    /// the registry, then earlier in the roster.
    pub ranking: Vec<usize>,
    /// 1-based rank of each agent.
    pub ranks: Vec<usize>,
}

impl MetricReport {
    pub fn rank_of(&self, agent: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == agent).map(|i| self.ranks[i])
    }
}

fn registry_position(agent: &str) -> usize {
    let base = agent.split('[').next().unwrap_or(agent);
    REGISTRY.iter().position(|n| *n == base).unwrap_or(usize::MAX)
}

fn report(metric: Metric, agents: &[String], scores: Vec<f64>, secondary: Option<&[f64]>) -> MetricReport {
    let mut ranking: Vec<usize> = (0..agents.len()).collect();
    ranking.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| match secondary {
                Some(s) => s[b].partial_cmp(&s[a]).unwrap_or(Ordering::Equal),
                None => Ordering::Equal,
            })
            .then_with(|| registry_position(&agents[a]).cmp(&registry_position(&agents[b])))
            .then_with(|| a.cmp(&b))
    });
    let mut ranks = vec![0; agents.len()];
    for (pos, &i) in ranking.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    MetricReport {
        metric,
        agents: agents.to_vec(),
        scores,
        ranking,
        ranks,
    }
}

/// `M[i][j]`: agent `i`'s payoff against `j`, averaged over games and trials.
pub fn mean_payoff_matrix(tensor: &PayoffTensor) -> Vec<Vec<f64>> {
    let [n, _, g, _] = tensor.shape();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..g).map(|k| tensor.trial_mean(i, j, k)).sum::<f64>() / g as f64)
                .collect()
        })
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

pub fn compute_metrics(tensor: &PayoffTensor) -> Result<Vec<MetricReport>, MetricError> {
    let [n, _, games, _] = tensor.shape();
    if n == 0 || games == 0 || tensor.trials == 0 || !tensor.is_complete() {
        return Err(MetricError::IncompleteTensor);
    }
    let agents = &tensor.agents;
    let m = mean_payoff_matrix(tensor);

    let rr_avg: Vec<f64> = (0..n).map(|i| mean(m[i].iter().copied())).collect();

    let mut best_counts = vec![0usize; n];
    for g in 0..games {
        for j in 0..n {
            let vs: Vec<f64> = (0..n).map(|i| tensor.trial_mean(i, j, g)).collect();
            let top = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for i in 0..n {
                if vs[i] == top {
                    best_counts[i] += 1;
                }
            }
        }
    }
    let pct_best: Vec<f64> = best_counts
        .iter()
        .map(|c| 100.0 * *c as f64 / (games * n) as f64)
        .collect();

    let worst: Vec<f64> = (0..n)
        .map(|i| m[i].iter().cloned().fold(f64::INFINITY, f64::min))
        .collect();

    let rep = replicator_dynamics(&m, REPLICATOR_STEPS, REPLICATOR_THRESHOLD)?;
    let shares = rep.final_shares().to_vec();
    let survival: Vec<f64> = rep
        .extinct_at
        .iter()
        .map(|e| e.map(|s| s as f64).unwrap_or(f64::INFINITY))
        .collect();

    let group1: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                m[i][i]
            } else {
                mean((0..n).filter(|j| *j != i).map(|j| m[i][j]))
            }
        })
        .collect();
    let group2: Vec<f64> = (0..n).map(|i| mean(m[i].iter().copied())).collect();

    Ok(vec![
        report(Metric::RoundRobinAverage, agents, rr_avg, None),
        report(Metric::PctBestScore, agents, pct_best, None),
        report(Metric::WorstCaseScore, agents, worst, None),
        report(Metric::ReplicatorDynamic, agents, shares, Some(&survival)),
        report(Metric::Group1Tourney, agents, group1, None),
        report(Metric::Group2Tourney, agents, group2, None),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicatorRun {
    /// Shares at step 0 (uniform) through the last step.
    pub trajectory: Vec<Vec<f64>>,
    /// Step at which each agent's share fell below the threshold.
    pub extinct_at: Vec<Option<usize>>,
}

impl ReplicatorRun {
    pub fn final_shares(&self) -> &[f64] {
        self.trajectory.last().expect("trajectory has the start point")
    }
}

/// Discrete replicator dynamic `x_i <- x_i (Ax)_i / (x'Ax)` from the
/// uniform start. If any payoff is non-positive the matrix is first shifted
/// so its minimum is 1. Shares below `threshold` are zeroed and the rest
/// renormalized.
pub fn replicator_dynamics(a: &[Vec<f64>], steps: usize, threshold: f64) -> Result<ReplicatorRun, MetricError> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) {
        return Err(MetricError::NotSquare);
    }
    let lo = a.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let shift = if lo <= 0.0 { 1.0 - lo } else { 0.0 };
    let a: Vec<Vec<f64>> = a.iter().map(|row| row.iter().map(|v| v + shift).collect()).collect();

    let mut x = vec![1.0 / n as f64; n];
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(x.clone());
    let mut extinct_at = vec![None; n];
    for step in 1..=steps {
        let fitness: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * x[j]).sum()).collect();
        let avg: f64 = (0..n).map(|i| x[i] * fitness[i]).sum();
        if !avg.is_finite() || avg <= 0.0 {
            return Err(MetricError::DegeneratePayoffs);
        }
        for i in 0..n {
            x[i] *= fitness[i] / avg;
            if extinct_at[i].is_none() && x[i] < threshold {
                extinct_at[i] = Some(step);
            }
            if extinct_at[i].is_some() {
                x[i] = 0.0;
            }
        }
        let total: f64 = x.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(MetricError::DegeneratePayoffs);
        }
        for v in x.iter_mut() {
            *v /= total;
        }
        trajectory.push(x.clone());
    }
    Ok(ReplicatorRun { trajectory, extinct_at })
}
