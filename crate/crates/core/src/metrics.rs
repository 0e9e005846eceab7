//! Dynamic regret, cumulative constraint violation, consensus diagnostics
//! and the conservative network constants.

use crate::dust::RoundSummary;
use crate::oracle::{variation_series, RoundOptimum};
use crate::problem::BoundConstants;
use crate::{Error, Result, Vector};

/// Exact CSV header of a run's metric series.
pub const CSV_HEADER: &str = "t,cum_regret,avg_regret,cum_violation,avg_violation,V_t,consensus_err,mu_bar_norm";

/// One row of the metric series. Regret and variation are absent when the
/// run did not compute round optima.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub t: usize,
    pub cum_regret: Option<f64>,
    pub avg_regret: Option<f64>,
    pub cum_violation: f64,
    pub avg_violation: f64,
    pub variation: Option<f64>,
    pub consensus_err: f64,
    pub mu_bar_norm: f64,
}

/// Running `Reg(t) = sum_{s<=t} (f_s(x_s) - f_s(x*_s))`, signed.
pub fn dynamic_regret<O: AsRef<RoundOptimum>>(traj: &[RoundSummary], optima: &[O]) -> Result<Vec<f64>> {
    if optima.len() < traj.len() {
        return Err(Error::MissingRound(optima.len() + 1));
    }
    let mut total = 0.0;
    traj.iter()
        .zip(optima)
        .map(|(row, opt)| {
            let opt = opt.as_ref();
            if opt.t != row.t {
                return Err(Error::InvalidArgument(format!(
                    "round mismatch: trajectory round {} vs optimum round {}",
                    row.t, opt.t
                )));
            }
            total += row.cost - opt.value;
            Ok(total)
        })
        .collect()
}

/// Running `|| [sum_{s<=t} sum_i g_i(x_{i,s})]_+ ||`: the positive part is
/// taken after accumulating, so slack in one round offsets overshoot in
/// another.
pub fn constraint_violation(traj: &[RoundSummary]) -> Vec<f64> {
    let p = traj.first().map_or(0, |r| r.constraint_sum.len());
    let mut acc = Vector::zeros(p);
    traj.iter()
        .map(|row| {
            acc += &row.constraint_sum;
            positive_norm(&acc)
        })
        .collect()
}

pub fn positive_norm(v: &Vector) -> f64 {
    v.iter().map(|x| x.max(0.0).powi(2)).sum::<f64>().sqrt()
}

/// Worst-case constants of the network analysis. Values that do not fit in
/// an `f64` are `+inf` with `overflow` set; the `ln_*` fields stay finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub n: usize,
    pub p: usize,
    pub window: usize,
    pub floor: f64,
    pub diameter: f64,
    pub value_bound: f64,
    pub gradient_bound: f64,
    /// `1 / N^{NB}`.
    pub r_lower: f64,
    pub ln_r_lower: f64,
    /// `(1 - 1/N^{NB})^{1/(NB)}`.
    pub sigma_upper: f64,
    /// `1 - sigma_upper`, kept separately since it is far below `f64`
    /// resolution near one.
    pub one_minus_sigma: f64,
    pub ln_one_minus_sigma: f64,
    /// Tracker bound `B_y = (8 N^2 F sqrt(p) / r)(1 + 2/(1 - sigma)) + (N + 2) F`.
    pub tracker_bound: f64,
    pub ln_tracker_bound: f64,
    /// `N^6 / (r^3 (1 - sigma)^3)`.
    pub sensitivity: f64,
    pub ln_sensitivity: f64,
    pub overflow: bool,
}

fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Evaluates the closed-form constants for `n` nodes, `p` coupled
/// inequalities and connectivity window `window`.
pub fn theory_constants(n: usize, p: usize, window: usize, floor: f64, bounds: BoundConstants) -> Result<TheoryConstants> {
    if n == 0 || window == 0 {
        return Err(Error::InvalidArgument("theory constants need N >= 1 and B >= 1".into()));
    }
    let nf = n as f64;
    let nb = (n * window) as f64;
    let ln_r = -nb * nf.ln();
    let r = ln_r.exp();
    let ln_one_minus_sigma = if n == 1 {
        // r = 1, sigma = 0.
        0.0
    } else if ln_r > -30.0 {
        (-((-r).ln_1p() / nb).exp_m1()).ln()
    } else {
        // ln(1 - sigma) = ln(1 - (1 - r)^{1/NB}) ~ ln(r / NB) to relative O(r).
        ln_r - nb.ln()
    };
    let one_minus_sigma = ln_one_minus_sigma.exp();
    let f = bounds.value_bound;
    let sqrt_p = (p as f64).sqrt();

    // ln[(8 N^2 F sqrt(p) / r)(1 + 2/(1 - sigma))]
    let ln_lead = (8.0 * nf * nf * f * sqrt_p).ln() - ln_r + ln_add(0.0, 2f64.ln() - ln_one_minus_sigma);
    let ln_tail = ((nf + 2.0) * f).ln();
    let ln_tracker_bound = ln_add(ln_lead, ln_tail);
    let ln_sensitivity = 6.0 * nf.ln() - 3.0 * ln_r - 3.0 * ln_one_minus_sigma;

    let tracker_bound = ln_tracker_bound.exp();
    let sensitivity = ln_sensitivity.exp();
    Ok(TheoryConstants {
        n,
        p,
        window,
        floor,
        diameter: bounds.diameter,
        value_bound: f,
        gradient_bound: bounds.gradient_bound,
        r_lower: r,
        ln_r_lower: ln_r,
        sigma_upper: 1.0 - one_minus_sigma,
        one_minus_sigma,
        ln_one_minus_sigma,
        tracker_bound,
        ln_tracker_bound,
        sensitivity,
        ln_sensitivity,
        overflow: tracker_bound.is_infinite() || sensitivity.is_infinite() || r == 0.0,
    })
}

impl TheoryConstants {
    /// Natural log of the consensus envelope
    /// `(8 N^2 B_y sqrt(p) / r) * sum_{k=1}^{s} sigma^{s-k}` for `s >= 1`;
    /// `-inf` for `s = 0`.
    pub fn ln_consensus_envelope(&self, s: usize) -> f64 {
        if s == 0 {
            return f64::NEG_INFINITY;
        }
        let nf = self.n as f64;
        // sum_{j<s} sigma^j = (1 - sigma^s) / (1 - sigma), with
        // 1 - sigma^s = -expm1(s ln sigma).
        let ln_sigma = (-self.one_minus_sigma).ln_1p();
        let ln_geometric = if self.one_minus_sigma >= 1.0 {
            0.0
        } else {
            (-(s as f64 * ln_sigma).exp_m1()).ln() - self.ln_one_minus_sigma
        };
        (8.0 * nf * nf * (self.p as f64).sqrt()).ln() + self.ln_tracker_bound - self.ln_r_lower + ln_geometric
    }
}

/// Observed dual disagreement next to its theoretical envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusPoint {
    pub t: usize,
    /// `max_i ||lambda_{i,t} - mu_bar_{t-1}||`.
    pub observed_max: f64,
    /// `sum_i ||lambda_{i,t} - mu_bar_{t-1}||`, the quantity the envelope bounds.
    pub observed_sum: f64,
    pub ln_envelope: f64,
}

impl ConsensusPoint {
    pub fn envelope(&self) -> f64 {
        self.ln_envelope.exp()
    }

    pub fn within_envelope(&self) -> bool {
        self.observed_sum == 0.0 || self.observed_sum.ln() <= self.ln_envelope
    }
}

pub fn consensus_diagnostics(traj: &[RoundSummary], consts: &TheoryConstants) -> Vec<ConsensusPoint> {
    traj.iter()
        .map(|row| ConsensusPoint {
            t: row.t,
            observed_max: row.consensus_err,
            observed_sum: row.consensus_err_sum,
            ln_envelope: consts.ln_consensus_envelope(row.t.saturating_sub(1)),
        })
        .collect()
}

/// `inf_t min_i c_{i,t}`: the push-sum weights are exactly
/// `W_{t-1} ... W_1 1`.
pub fn empirical_r(traj: &[RoundSummary]) -> f64 {
    traj.iter().map(|r| r.weight_min).fold(f64::INFINITY, f64::min)
}

pub fn max_tracker_norm(traj: &[RoundSummary]) -> f64 {
    traj.iter().map(|r| r.tracker_max_norm).fold(0.0, f64::max)
}

/// Assembles the per-round metric rows. `optima` must cover rounds
/// `1..=T+1` when given.
pub fn records<O: AsRef<RoundOptimum>>(traj: &[RoundSummary], optima: Option<&[O]>) -> Result<Vec<RunRecord>> {
    let violation = constraint_violation(traj);
    let (regret, variation) = match optima {
        Some(opt) => (
            Some(dynamic_regret(traj, opt)?),
            Some(variation_series(opt, traj.len())?),
        ),
        None => (None, None),
    };
    Ok(traj
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let t = row.t as f64;
            RunRecord {
                t: row.t,
                cum_regret: regret.as_ref().map(|r| r[k]),
                avg_regret: regret.as_ref().map(|r| r[k] / t),
                cum_violation: violation[k],
                avg_violation: violation[k] / t,
                variation: variation.as_ref().map(|v| v[k]),
                consensus_err: row.consensus_err,
                mu_bar_norm: row.mu_bar.norm(),
            }
        })
        .collect())
}

/// Renders rows under [`CSV_HEADER`]; absent values are empty fields.
pub fn records_csv(rows: &[RunRecord]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.t,
            opt(r.cum_regret),
            opt(r.avg_regret),
            r.cum_violation,
            r.avg_violation,
            opt(r.variation),
            r.consensus_err,
            r.mu_bar_norm
        ));
    }
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
