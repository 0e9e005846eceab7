//! Centralized reference solvers.
//!
//! [`solve_round`] computes the per-round optimum used by dynamic regret
//! through dual decomposition: for a fixed multiplier every block has a
//! closed-form minimizer, and the multiplier is updated by projected dual
//! ascent.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::problem::{ProblemInstance, Quadratic};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualStep {
    /// `rho_k = rho0 / sqrt(k)`.
    Diminishing { rho0: f64 },
    /// Accelerated ascent with step `1/L`, `L = sum_i ||A_i||^2 / a_i`,
    /// restarted whenever the dual value drops.
    Accelerated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub step: DualStep,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iter: 20_000,
            step: DualStep::Accelerated,
        }
    }
}

/// The optimum of the round-`t` problem with its dual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOptimum {
    pub t: usize,
    pub x: Vec<Vector>,
    pub value: f64,
    pub mu: Vector,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// False when `max_iter` was hit before `kkt_residual <= tol`.
    pub converged: bool,
}

fn round_quadratics(inst: &ProblemInstance, t: usize) -> Result<Vec<Quadratic>> {
    (0..inst.n())
        .map(|i| match inst.cost.quadratic(i, t) {
            Some(q) if q.curvature > 0.0 => Ok(q),
            _ => Err(Error::NotStronglyConvex { node: i, t }),
        })
        .collect()
}

/// Per-block minimizers of the Lagrangian at `mu`.
fn block_minimizers(inst: &ProblemInstance, costs: &[Quadratic], mu: &Vector) -> Result<Vec<Vector>> {
    inst.nodes
        .iter()
        .zip(costs)
        .map(|(node, q)| {
            let shifted = &q.linear + node.constraint.matrix().tr_mul(mu);
            node.set.project(&(-shifted / q.curvature))
        })
        .collect()
}

fn lagrangian(inst: &ProblemInstance, costs: &[Quadratic], x: &[Vector], mu: &Vector) -> (f64, f64, Vector) {
    let value: f64 = costs.iter().zip(x).map(|(q, xi)| q.value(xi)).sum();
    let gsum = inst.constraint_sum(x);
    (value + mu.dot(&gsum), value, gsum)
}

/// Dual function value `min_x L_t(x, mu)`.
pub fn dual_value(inst: &ProblemInstance, t: usize, mu: &Vector) -> Result<f64> {
    let costs = round_quadratics(inst, t)?;
    let x = block_minimizers(inst, &costs, mu)?;
    Ok(lagrangian(inst, &costs, &x, mu).0)
}

/// Stationarity, primal feasibility and complementarity residual at
/// `(x, mu)`.
fn kkt_residual(inst: &ProblemInstance, costs: &[Quadratic], x: &[Vector], mu: &Vector, gsum: &Vector) -> Result<f64> {
    let mut stationarity: f64 = 0.0;
    for ((node, q), xi) in inst.nodes.iter().zip(costs).zip(x) {
        let grad = q.gradient(xi) + node.constraint.matrix().tr_mul(mu);
        let moved = node.set.project(&(xi - &grad))?;
        stationarity = stationarity.max((xi - moved).amax());
    }
    let feasibility = gsum.iter().map(|g| g.max(0.0)).fold(0.0, f64::max);
    let slackness = mu.iter().zip(gsum.iter()).map(|(m, g)| (m * g).abs()).fold(0.0, f64::max);
    Ok(stationarity.max(feasibility).max(slackness))
}

pub fn solve_round(inst: &ProblemInstance, t: usize, opts: &SolverOptions) -> Result<RoundOptimum> {
    solve_round_from(inst, t, opts, &Vector::zeros(inst.p()))
}

/// [`solve_round`] warm-started at `mu0`.
pub fn solve_round_from(inst: &ProblemInstance, t: usize, opts: &SolverOptions, mu0: &Vector) -> Result<RoundOptimum> {
    let costs = round_quadratics(inst, t)?;
    let p = inst.p();
    if mu0.len() != p {
        return Err(Error::DimensionMismatch {
            context: "warm-start multiplier",
            expected: p,
            actual: mu0.len(),
        });
    }
    let lipschitz: f64 = inst
        .nodes
        .iter()
        .zip(&costs)
        .map(|(node, q)| node.constraint.operator_norm().powi(2) / q.curvature)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);

    let mut mu = mu0.map(|m| m.max(0.0));
    let mut anchor = mu.clone();
    let mut prev = mu.clone();
    let mut momentum: f64 = 1.0;
    let mut last_dual = f64::NEG_INFINITY;
    let mut best: Option<(f64, Vec<Vector>, f64, Vector)> = None;
    for k in 1..=opts.max_iter {
        let x = block_minimizers(inst, &costs, &mu)?;
        let (dual, value, gsum) = lagrangian(inst, &costs, &x, &mu);
        let residual = kkt_residual(inst, &costs, &x, &mu, &gsum)?;
        if residual <= opts.tol {
            return Ok(RoundOptimum {
                t,
                x,
                value,
                mu,
                kkt_residual: residual,
                iterations: k,
                converged: true,
            });
        }
        if best.as_ref().is_none_or(|(r, ..)| residual < *r) {
            best = Some((residual, x.clone(), value, mu.clone()));
        }
        match opts.step {
            DualStep::Diminishing { rho0 } => {
                mu = (&mu + gsum * (rho0 / (k as f64).sqrt())).map(|m| m.max(0.0));
            }
            DualStep::Accelerated => {
                // `mu` is the extrapolated point; `anchor` the last iterate.
                if dual < last_dual {
                    momentum = 1.0;
                    mu = anchor.clone();
                    last_dual = f64::NEG_INFINITY;
                    continue;
                }
                last_dual = dual;
                let next = (&mu + gsum / lipschitz).map(|m| m.max(0.0));
                let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
                let extrapolated = &next + (&next - &prev) * ((momentum - 1.0) / next_momentum);
                prev = next.clone();
                anchor = next;
                mu = extrapolated.map(|m| m.max(0.0));
                momentum = next_momentum;
            }
        }
    }
    let (residual, x, value, mu) = best.expect("at least one iteration");
    Ok(RoundOptimum {
        t,
        x,
        value,
        mu,
        kkt_residual: residual,
        iterations: opts.max_iter,
        converged: false,
    })
}

/// Optima for rounds `1..=last`, each warm-started from the previous
/// certificate.
pub fn solve_rounds(inst: &ProblemInstance, last: usize, opts: &SolverOptions) -> Result<Vec<RoundOptimum>> {
    let mut out: Vec<RoundOptimum> = Vec::with_capacity(last);
    let mut mu = Vector::zeros(inst.p());
    for t in 1..=last {
        let opt = solve_round_from(inst, t, opts, &mu)?;
        mu = opt.mu.clone();
        out.push(opt);
    }
    Ok(out)
}

/// Shared cache of round optima keyed by `(instance key, t)`.
#[derive(Debug, Default)]
pub struct OptimaCache {
    entries: Mutex<HashMap<(u64, usize), Arc<RoundOptimum>>>,
}

impl OptimaCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Returns the cached optimum or solves and inserts it. Concurrent
    /// callers may both solve; the first insert wins.
    pub fn get_or_solve(
        &self,
        key: u64,
        inst: &ProblemInstance,
        t: usize,
        opts: &SolverOptions,
    ) -> Result<Arc<RoundOptimum>> {
        if let Some(hit) = self.entries.lock().expect("cache lock").get(&(key, t)) {
            return Ok(Arc::clone(hit));
        }
        let solved = Arc::new(solve_round(inst, t, opts)?);
        let mut map = self.entries.lock().expect("cache lock");
        Ok(Arc::clone(map.entry((key, t)).or_insert(solved)))
    }

    /// Rounds `1..=last`, warm-starting uncached rounds from the previous
    /// round's certificate.
    pub fn get_or_solve_all(
        &self,
        key: u64,
        inst: &ProblemInstance,
        last: usize,
        opts: &SolverOptions,
    ) -> Result<Vec<Arc<RoundOptimum>>> {
        let mut out: Vec<Arc<RoundOptimum>> = Vec::with_capacity(last);
        for t in 1..=last {
            let cached = self.entries.lock().expect("cache lock").get(&(key, t)).cloned();
            let opt = match cached {
                Some(hit) => hit,
                None => {
                    let mu0 = out.last().map_or_else(|| Vector::zeros(inst.p()), |o| o.mu.clone());
                    let solved = Arc::new(solve_round_from(inst, t, opts, &mu0)?);
                    let mut map = self.entries.lock().expect("cache lock");
                    Arc::clone(map.entry((key, t)).or_insert(solved))
                }
            };
            out.push(opt);
        }
        Ok(out)
    }
}

/// One step of the clairvoyant centralized method.
#[derive(Debug, Clone, PartialEq)]
pub struct ClairvoyantStep {
    pub t: usize,
    pub x: Vec<Vector>,
    pub mu: Vector,
}

/// Centralized dual subgradient method that already knows the next round's
/// cost: `x_{t+1} = argmin_x L_{t+1}(x, mu_t)`,
/// `mu_{t+1} = [mu_t + step * sum_i g_i(x_{i,t+1})]_+`, from `mu_1 = 0`.
/// Returns the iterates for rounds `2..=horizon + 1`.
pub fn clairvoyant_dual_subgradient(inst: &ProblemInstance, horizon: usize, step: f64) -> Result<Vec<ClairvoyantStep>> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("dual step must be positive".into()));
    }
    let mut mu = Vector::zeros(inst.p());
    let mut out = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let costs = round_quadratics(inst, t + 1)?;
        let x = block_minimizers(inst, &costs, &mu)?;
        let gsum = inst.constraint_sum(&x);
        mu = (&mu + gsum * step).map(|m| m.max(0.0));
        out.push(ClairvoyantStep { t: t + 1, x, mu: mu.clone() });
    }
    Ok(out)
}

/// `V_T = sum_{t=1}^{T} sqrt(t) sum_i ||x*_{i,t+1} - x*_{i,t}||`. Needs the
/// optima of rounds `1..=horizon + 1`, in order.
pub fn accumulated_variation<O: AsRef<RoundOptimum>>(optima: &[O], horizon: usize) -> Result<f64> {
    variation_series(optima, horizon).map(|s| s.last().copied().unwrap_or(0.0))
}

/// Running `V_t` for `t = 1..=horizon`.
pub fn variation_series<O: AsRef<RoundOptimum>>(optima: &[O], horizon: usize) -> Result<Vec<f64>> {
    for t in 1..=horizon + 1 {
        match optima.get(t - 1) {
            Some(o) if o.as_ref().t == t => {}
            _ => return Err(Error::MissingRound(t)),
        }
    }
    let mut total = 0.0;
    Ok((1..=horizon)
        .map(|t| {
            let (now, next) = (optima[t - 1].as_ref(), optima[t].as_ref());
            let moved: f64 = now.x.iter().zip(&next.x).map(|(a, b)| (b - a).norm()).sum();
            total += (t as f64).sqrt() * moved;
            total
        })
        .collect())
}

impl AsRef<RoundOptimum> for RoundOptimum {
    fn as_ref(&self) -> &RoundOptimum {
        self
    }
}

/// `t,f_star,kkt_residual,mu_star_norm` rows.
pub fn optima_csv<O: AsRef<RoundOptimum>>(optima: &[O]) -> String {
    let mut out = String::from("t,f_star,kkt_residual,mu_star_norm\n");
    for o in optima {
        let o = o.as_ref();
        out.push_str(&format!("{},{},{},{}\n", o.t, o.value, o.kkt_residual, o.mu.norm()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{
        make_pev_instance, ConstraintFunction, CostModel, CostTable, FeasibleSet, NodeSpec,
        PevParams, Piece,
    };
    use crate::{Matrix, Vector};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn table_instance(quads: Vec<Quadratic>, rows: Vec<(f64, f64)>, lo: f64, hi: f64) -> ProblemInstance {
        let nodes: Vec<NodeSpec> = rows
            .iter()
            .map(|&(a, b)| NodeSpec {
                set: FeasibleSet::cube(1, lo, hi),
                constraint: ConstraintFunction::affine(Matrix::from_element(1, 1, a), v(&[b])).unwrap(),
            })
            .collect();
        let feasible = vec![v(&[lo]); nodes.len()];
        ProblemInstance::new(nodes, CostModel::Table(CostTable { rounds: vec![quads] }), feasible, None, 10).unwrap()
    }

    #[test]
    fn single_node_clamps() {
        let q = Quadratic { curvature: 1.0, linear: v(&[1.0]) };
        let inst = table_instance(vec![q], vec![(0.0, -1.0)], 0.0, 1.0);
        let opt = solve_round(&inst, 1, &SolverOptions::default()).unwrap();
        assert!(opt.converged);
        assert_eq!(opt.x[0], v(&[0.0]));
        assert_eq!(opt.value, 0.0);
    }

    #[test]
    fn slack_coupling_has_zero_multiplier() {
        // g_i(x) = x - 2 on [0, 1]: sum <= -2 everywhere.
        let quads = vec![
            Quadratic { curvature: 1.0, linear: v(&[-0.5]) },
            Quadratic { curvature: 2.0, linear: v(&[-1.0]) },
        ];
        let inst = table_instance(quads, vec![(1.0, -2.0), (1.0, -2.0)], 0.0, 1.0);
        let opt = solve_round(&inst, 1, &SolverOptions { tol: 1e-10, ..Default::default() }).unwrap();
        assert_eq!(opt.mu, v(&[0.0]));
        assert!((opt.x[0][0] - 0.5).abs() < 1e-12 && (opt.x[1][0] - 0.5).abs() < 1e-12);
        let gsum = inst.constraint_sum(&opt.x);
        assert!((opt.mu.dot(&gsum)).abs() <= 1e-10);
    }

    #[test]
    fn active_coupling_kkt() {
        let params = PevParams { linear_sign: -1.0, kappa: 0.3, ..PevParams::new(4, 3, 2, 11, 10) };
        let inst = make_pev_instance(&params).unwrap();
        let tol = 1e-8;
        for step in [DualStep::Accelerated, DualStep::Diminishing { rho0: 1.0 }] {
            let opts = SolverOptions { tol, max_iter: 200_000, step };
            let opt = solve_round(&inst, 3, &opts).unwrap();
            assert!(opt.converged, "{step:?} residual {}", opt.kkt_residual);
            assert!(opt.mu.amax() > 0.0);
            let gsum = inst.constraint_sum(&opt.x);
            assert!(gsum.iter().all(|g| *g <= tol));
            assert!(opt.mu.dot(&gsum).abs() <= tol * (1.0 + opt.mu.norm()) * 2.0);
            for (node, xi) in inst.nodes.iter().zip(&opt.x) {
                assert!(node.set.contains(xi, 0.0));
            }
        }
    }

    #[test]
    fn best_dual_value_is_monotone_under_diminishing_steps() {
        let params = PevParams { linear_sign: -1.0, kappa: 0.3, ..PevParams::new(3, 2, 2, 5, 10) };
        let inst = make_pev_instance(&params).unwrap();
        let costs = round_quadratics(&inst, 1).unwrap();
        let mut mu = Vector::zeros(2);
        let mut best = f64::NEG_INFINITY;
        let mut history = Vec::new();
        for k in 1..=500 {
            let x = block_minimizers(&inst, &costs, &mu).unwrap();
            let (dual, _, gsum) = lagrangian(&inst, &costs, &x, &mu);
            assert!((dual - dual_value(&inst, 1, &mu).unwrap()).abs() < 1e-12);
            let next_best = best.max(dual);
            assert!(next_best >= best);
            best = next_best;
            history.push(best);
            mu = (&mu + gsum / (k as f64).sqrt()).map(|m| m.max(0.0));
        }
        let opt = solve_round(&inst, 1, &SolverOptions { tol: 1e-9, ..Default::default() }).unwrap();
        // Weak duality: no dual value exceeds the primal optimum.
        assert!(best <= opt.value + 1e-9);
        assert!(opt.value - best < 1e-3);
    }

    #[test]
    fn rejects_non_strongly_convex_costs() {
        let nodes = vec![NodeSpec {
            set: FeasibleSet::cube(1, 0.0, 1.0),
            constraint: ConstraintFunction::affine(Matrix::from_element(1, 1, 1.0), v(&[-1.0])).unwrap(),
        }];
        let cost = CostModel::PiecewiseLinear(vec![vec![Piece { slope: v(&[1.0]), offset: 0.0 }]]);
        let inst = ProblemInstance::new(nodes, cost, vec![v(&[0.0])], None, 1).unwrap();
        assert!(matches!(solve_round(&inst, 1, &SolverOptions::default()), Err(Error::NotStronglyConvex { .. })));
    }

    #[test]
    fn max_iter_returns_flagged_result() {
        let params = PevParams { linear_sign: -1.0, kappa: 0.3, ..PevParams::new(4, 3, 2, 11, 10) };
        let inst = make_pev_instance(&params).unwrap();
        let opt = solve_round(&inst, 1, &SolverOptions { tol: 0.0, max_iter: 5, ..Default::default() }).unwrap();
        assert!(!opt.converged);
        assert_eq!(opt.iterations, 5);
        assert!(opt.kkt_residual > 0.0);
    }

    #[test]
    fn clairvoyant_keeps_zero_dual_when_slack() {
        let params = PevParams::new(3, 2, 2, 1, 10);
        let inst = make_pev_instance(&params).unwrap();
        // Positive prices: the Lagrangian minimizer is x = 0, which is slack.
        let steps = clairvoyant_dual_subgradient(&inst, 5, 1.0).unwrap();
        for s in &steps {
            assert!(inst.constraint_sum(&s.x).iter().all(|g| *g <= 0.0));
            assert_eq!(s.mu, Vector::zeros(2));
        }
    }

    #[test]
    fn clairvoyant_without_constraints_repeats_exact_minimization() {
        let q = Quadratic { curvature: 2.0, linear: v(&[-1.0]) };
        let nodes = vec![NodeSpec {
            set: FeasibleSet::cube(1, -5.0, 5.0),
            constraint: ConstraintFunction::affine(Matrix::zeros(0, 1), Vector::zeros(0)).unwrap(),
        }];
        let cost = CostModel::Table(CostTable { rounds: vec![vec![q]] });
        let inst = ProblemInstance::new(nodes, cost, vec![v(&[0.0])], None, 5).unwrap();
        for s in clairvoyant_dual_subgradient(&inst, 4, 1.0).unwrap() {
            assert_eq!(s.x[0], v(&[0.5]));
            assert_eq!(s.mu.len(), 0);
        }
    }

    #[test]
    fn variation_examples() {
        let at = |t: usize, x: f64| RoundOptimum {
            t,
            x: vec![v(&[x])],
            value: 0.0,
            mu: Vector::zeros(1),
            kkt_residual: 0.0,
            iterations: 1,
            converged: true,
        };
        let flat: Vec<_> = (1..=6).map(|t| at(t, 0.3)).collect();
        assert_eq!(accumulated_variation(&flat, 5).unwrap(), 0.0);
        assert_eq!(accumulated_variation(&[at(1, 0.0), at(2, 1.0)], 1).unwrap(), 1.0);
        assert!(matches!(accumulated_variation(&flat, 6), Err(Error::MissingRound(7))));
        let csv = optima_csv(&flat[..1]);
        assert_eq!(csv, "t,f_star,kkt_residual,mu_star_norm\n1,0,0,0\n");
    }

    #[test]
    fn cache_reuses_entries() {
        let params = PevParams { linear_sign: -1.0, ..PevParams::new(2, 2, 1, 3, 10) };
        let inst = make_pev_instance(&params).unwrap();
        let cache = OptimaCache::new();
        let all = cache.get_or_solve_all(42, &inst, 5, &SolverOptions::default()).unwrap();
        assert_eq!(cache.len(), 5);
        let again = cache.get_or_solve(42, &inst, 3, &SolverOptions::default()).unwrap();
        assert!(Arc::ptr_eq(&all[2], &again));
    }
}
