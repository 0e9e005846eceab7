//! The DUST round engine.
//!
//! Each node keeps a decision `x`, a tracker `y` of the network-wide
//! constraint value, a local dual `mu`, a push-sum weight `c` and the
//! ratio-corrected dual `lambda`. One synchronous round reads only the
//! round-`t` snapshot:
//!
//! ```text
//! c'      = sum_j w_ij c_j
//! lambda' = (sum_j w_ij mu_j) / c'
//! x'      = argmin_{x in X_i} alpha_t s_i.(x - x_i) + <lambda', g_i(x)> + eta_t ||x - x_i||^2
//! y'      = sum_j w_ij y_j + g_i(x') - g_i(x_i)
//! mu'     = [sum_j w_ij mu_j + y']_+
//! ```
//!
//! where `s_i` is a subgradient of the round-`t` cost at `x_i`.

use rand_chacha::ChaCha8Rng;

use crate::graph::{GraphSequence, MixingMatrix};
use crate::problem::{ConstraintFunction, FeasibleSet, ProblemInstance};
use crate::rng::{keyed, Domain};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub x: Vector,
    pub y: Vector,
    pub mu: Vector,
    pub c: f64,
    pub lambda: Vector,
}

/// `scale * t^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub scale: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn value(&self, t: usize) -> f64 {
        self.scale * (t as f64).powf(self.exponent)
    }
}

/// The `(alpha_t, eta_t)` pair. Defaults to `(sqrt(t), t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub alpha: PowerLaw,
    pub eta: PowerLaw,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule {
            alpha: PowerLaw { scale: 1.0, exponent: 0.5 },
            eta: PowerLaw { scale: 1.0, exponent: 1.0 },
        }
    }
}

impl StepSchedule {
    pub fn powers(alpha_pow: f64, eta_pow: f64) -> Result<Self> {
        let s = StepSchedule {
            alpha: PowerLaw { scale: 1.0, exponent: alpha_pow },
            eta: PowerLaw { scale: 1.0, exponent: eta_pow },
        };
        s.validate()?;
        Ok(s)
    }

    /// Positive scales; `eta` must be nondecreasing.
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha.scale > 0.0
            && self.eta.scale > 0.0
            && self.alpha.scale.is_finite()
            && self.eta.scale.is_finite()
            && self.alpha.exponent.is_finite()
            && self.eta.exponent.is_finite()
            && self.eta.exponent >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid step schedule {self:?}")))
        }
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha.value(t)
    }

    pub fn eta(&self, t: usize) -> f64 {
        self.eta.value(t)
    }
}

/// All node states at round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub t: usize,
    pub nodes: Vec<NodeState>,
    /// `sum_i g_i(x_i)` at this round.
    pub constraint_sum: Vector,
}

impl SwarmState {
    /// Assembles a state from explicit node values, recomputing the cached
    /// constraint sum.
    pub fn from_nodes(inst: &ProblemInstance, t: usize, nodes: Vec<NodeState>) -> Result<Self> {
        if nodes.len() != inst.n() {
            return Err(Error::DimensionMismatch {
                context: "node count",
                expected: inst.n(),
                actual: nodes.len(),
            });
        }
        for (node, spec) in nodes.iter().zip(&inst.nodes) {
            check_len(&node.x, spec.set.dim(), "decision")?;
            for v in [&node.y, &node.mu, &node.lambda] {
                check_len(v, inst.p(), "dual block")?;
            }
        }
        let x: Vec<Vector> = nodes.iter().map(|n| n.x.clone()).collect();
        Ok(SwarmState {
            t,
            constraint_sum: inst.constraint_sum(&x),
            nodes,
        })
    }

    pub fn decisions(&self) -> Vec<Vector> {
        self.nodes.iter().map(|n| n.x.clone()).collect()
    }

    pub fn tracker_sum(&self) -> Vector {
        let p = self.constraint_sum.len();
        self.nodes.iter().fold(Vector::zeros(p), |acc, n| acc + &n.y)
    }

    pub fn weight_sum(&self) -> f64 {
        self.nodes.iter().map(|n| n.c).sum()
    }

    /// `(1/N) sum_i mu_i`.
    pub fn mu_bar(&self) -> Vector {
        let p = self.constraint_sum.len();
        self.nodes.iter().fold(Vector::zeros(p), |acc, n| acc + &n.mu) / self.nodes.len() as f64
    }
}

fn check_len(v: &Vector, expected: usize, context: &'static str) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual: v.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// `x_i = proj_{X_i}(0)`.
    ZeroProjected,
    /// Independent draw from each `X_i`, keyed by `(seed, i)`.
    SeededRandom(u64),
    /// The instance's stored feasible point.
    FeasiblePoint,
}

/// Round-1 state: `c = 1`, `mu = 0`, `y_i = g_i(x_i)`. `lambda` is stored
/// as zero; the first round overwrites it before use.
pub fn initialize(inst: &ProblemInstance, init: InitKind) -> Result<SwarmState> {
    let p = inst.p();
    let nodes = inst
        .nodes
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let x = match init {
                InitKind::ZeroProjected => spec.set.project(&Vector::zeros(spec.set.dim()))?,
                InitKind::SeededRandom(seed) => {
                    let mut rng: ChaCha8Rng = keyed(seed, Domain::Init, i as u64, 0);
                    spec.set.sample(&mut rng)
                }
                InitKind::FeasiblePoint => inst.feasible_point[i].clone(),
            };
            Ok(NodeState {
                y: spec.constraint.eval(&x),
                x,
                mu: Vector::zeros(p),
                c: 1.0,
                lambda: Vector::zeros(p),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SwarmState::from_nodes(inst, 1, nodes)
}

/// Closed-form minimizer of
/// `alpha s.(x - x_t) + <lambda, A x + b> + eta ||x - x_t||^2` over `set`.
///
/// The objective is an isotropic quadratic, so the minimizer is the
/// projection of its unconstrained stationary point.
pub fn local_argmin(
    x_t: &Vector,
    scaled_subgrad: &Vector,
    lambda: &Vector,
    g: &ConstraintFunction,
    set: &FeasibleSet,
    eta: f64,
) -> Result<Vector> {
    check_argmin_args(x_t, scaled_subgrad, lambda, g, set, eta)?;
    let direction = scaled_subgrad + g.gradient_dot(x_t, lambda);
    set.project(&(x_t - direction / (2.0 * eta)))
}

/// Inner-loop settings for [`local_argmin_iterative`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerLoop {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InnerLoop {
    fn default() -> Self {
        InnerLoop { tol: 1e-10, max_iter: 10_000 }
    }
}

/// Projected-gradient solution of the same subproblem as
/// [`local_argmin`], using only gradient evaluations of the objective.
/// Does not assume the constraint is affine.
pub fn local_argmin_iterative(
    x_t: &Vector,
    scaled_subgrad: &Vector,
    lambda: &Vector,
    g: &ConstraintFunction,
    set: &FeasibleSet,
    eta: f64,
    inner: InnerLoop,
) -> Result<Vector> {
    check_argmin_args(x_t, scaled_subgrad, lambda, g, set, eta)?;
    let grad = |x: &Vector| scaled_subgrad + g.gradient_dot(x, lambda) + (x - x_t) * (2.0 * eta);
    // Half the inverse smoothness of the proximal term.
    let step = 0.25 / eta;
    let mut x = set.project(x_t)?;
    let mut residual = f64::INFINITY;
    for _ in 0..inner.max_iter {
        let next = set.project(&(&x - grad(&x) * step))?;
        residual = (&next - &x).norm();
        x = next;
        if residual <= inner.tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        iterations: inner.max_iter,
        residual,
    })
}

fn check_argmin_args(
    x_t: &Vector,
    scaled_subgrad: &Vector,
    lambda: &Vector,
    g: &ConstraintFunction,
    set: &FeasibleSet,
    eta: f64,
) -> Result<()> {
    check_len(x_t, set.dim(), "argmin point")?;
    check_len(scaled_subgrad, set.dim(), "argmin subgradient")?;
    check_len(lambda, g.p(), "argmin multiplier")?;
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    if lambda.iter().any(|l| *l < 0.0) {
        return Err(Error::InvalidArgument("multiplier must be nonnegative".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ArgminMethod {
    #[default]
    ClosedForm,
    Iterative(InnerLoop),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoundOptions {
    pub argmin: ArgminMethod,
    /// Drops the `g_i(x') - g_i(x_i)` increment so `y` is only mixed.
    pub frozen_tracking: bool,
}

/// Cost evaluated at the current decisions, used for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundCost {
    pub per_node: Vec<f64>,
}

/// One synchronous round from `state` (round `t`) to round `t + 1`.
pub fn dust_round(
    inst: &ProblemInstance,
    state: &SwarmState,
    w: &MixingMatrix,
    sched: &StepSchedule,
) -> Result<SwarmState> {
    dust_round_with(inst, state, w, sched, RoundOptions::default()).map(|(s, _)| s)
}

pub fn dust_round_with(
    inst: &ProblemInstance,
    state: &SwarmState,
    w: &MixingMatrix,
    sched: &StepSchedule,
    opts: RoundOptions,
) -> Result<(SwarmState, RoundCost)> {
    let n = inst.n();
    if state.nodes.len() != n || w.n() != n {
        return Err(Error::DimensionMismatch {
            context: "mixing matrix vs node count",
            expected: n,
            actual: w.n(),
        });
    }
    let t = state.t;
    let alpha = sched.alpha(t);
    let eta = sched.eta(t);

    let weights: Vec<f64> = state.nodes.iter().map(|s| s.c).collect();
    let duals: Vec<Vector> = state.nodes.iter().map(|s| s.mu.clone()).collect();
    let trackers: Vec<Vector> = state.nodes.iter().map(|s| s.y.clone()).collect();
    let c_next = w.mix_scalars(&weights);
    let mu_hat = w.mix_vectors(&duals);
    let y_mixed = w.mix_vectors(&trackers);

    let mut per_node = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let spec = &inst.nodes[i];
        let old = &state.nodes[i];
        if !(c_next[i] > 0.0) {
            return Err(Error::NonPositiveWeight { node: i, value: c_next[i] });
        }
        let lambda = &mu_hat[i] / c_next[i];
        let (value, subgrad) = inst.cost.evaluate(i, t, &old.x);
        per_node.push(value);
        let scaled = subgrad * alpha;
        let x = match opts.argmin {
            ArgminMethod::ClosedForm => local_argmin(&old.x, &scaled, &lambda, &spec.constraint, &spec.set, eta)?,
            ArgminMethod::Iterative(inner) => {
                local_argmin_iterative(&old.x, &scaled, &lambda, &spec.constraint, &spec.set, eta, inner)?
            }
        };
        let y = if opts.frozen_tracking {
            y_mixed[i].clone()
        } else {
            &y_mixed[i] + spec.constraint.eval(&x) - spec.constraint.eval(&old.x)
        };
        let mu = (&mu_hat[i] + &y).map(|v| v.max(0.0));
        let next = NodeState { x, y, mu, c: c_next[i], lambda };
        check_finite(&next, i)?;
        nodes.push(next);
    }
    let x: Vec<Vector> = nodes.iter().map(|s| s.x.clone()).collect();
    let next = SwarmState {
        t: t + 1,
        constraint_sum: inst.constraint_sum(&x),
        nodes,
    };
    Ok((next, RoundCost { per_node }))
}

fn check_finite(s: &NodeState, node: usize) -> Result<()> {
    let fields: [(&'static str, &Vector); 4] = [("x", &s.x), ("y", &s.y), ("mu", &s.mu), ("lambda", &s.lambda)];
    for (what, v) in fields {
        if v.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite { what, node });
        }
    }
    if !s.c.is_finite() {
        return Err(Error::NonFinite { what: "c", node });
    }
    Ok(())
}

/// Per-round summary of a run, describing the state at round `t` (the
/// decisions played at `t` and the duals carried into round `t`).
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSummary {
    pub t: usize,
    /// `sum_i f_{i,t}(x_{i,t})`.
    pub cost: f64,
    /// `sum_i g_i(x_{i,t})`.
    pub constraint_sum: Vector,
    /// `sum_i y_{i,t}`.
    pub tracker_sum: Vector,
    /// `sum_i c_{i,t}`.
    pub weight_sum: f64,
    pub weight_min: f64,
    pub weight_max: f64,
    pub mu_min: f64,
    pub mu_bar: Vector,
    /// `max_i ||lambda_{i,t} - mu_bar_{t-1}||`; zero at `t = 1`.
    pub consensus_err: f64,
    /// `sum_i ||lambda_{i,t} - mu_bar_{t-1}||`; zero at `t = 1`.
    pub consensus_err_sum: f64,
    pub tracker_max_norm: f64,
    /// `max_i (||[mu_hat_i + y_i]_+ - mu_hat_i|| - ||y_i||)` for the round
    /// that produced this state; never positive.
    pub increment_excess: f64,
}

/// Receives every state of a run, including the initial one.
pub trait RoundObserver {
    fn observe(&mut self, state: &SwarmState);
}

impl RoundObserver for () {
    fn observe(&mut self, _: &SwarmState) {}
}

/// Keeps every `every`-th state (and the first).
#[derive(Debug, Default)]
pub struct StateRecorder {
    pub every: usize,
    pub states: Vec<SwarmState>,
}

impl StateRecorder {
    pub fn every(every: usize) -> Self {
        StateRecorder { every: every.max(1), states: Vec::new() }
    }
}

impl RoundObserver for StateRecorder {
    fn observe(&mut self, state: &SwarmState) {
        if (state.t - 1) % self.every.max(1) == 0 {
            self.states.push(state.clone());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub init: InitKind,
    pub round: RoundOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            init: InitKind::ZeroProjected,
            round: RoundOptions::default(),
        }
    }
}

/// Runs `horizon` rounds from the initialized state. Returns one summary
/// per played round `t = 1..=horizon`.
pub fn run(
    inst: &ProblemInstance,
    seq: &GraphSequence,
    sched: &StepSchedule,
    horizon: usize,
    opts: RunOptions,
    observer: &mut dyn RoundObserver,
) -> Result<Vec<RoundSummary>> {
    let state = initialize(inst, opts.init)?;
    run_from(inst, seq, sched, horizon, state, opts.round, observer)
}

/// Like [`run`] from an explicit starting state.
pub fn run_from(
    inst: &ProblemInstance,
    seq: &GraphSequence,
    sched: &StepSchedule,
    horizon: usize,
    mut state: SwarmState,
    round: RoundOptions,
    observer: &mut dyn RoundObserver,
) -> Result<Vec<RoundSummary>> {
    if horizon < 1 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if seq.n() != inst.n() {
        return Err(Error::DimensionMismatch {
            context: "graph vs instance node count",
            expected: inst.n(),
            actual: seq.n(),
        });
    }
    sched.validate()?;
    let mut out = Vec::with_capacity(horizon);
    let mut consensus = (0.0, 0.0);
    let mut increment_excess = 0.0;
    for _ in 0..horizon {
        observer.observe(&state);
        let t = state.t;
        let w = seq.mixing(t);
        let (next, cost) = dust_round_with(inst, &state, &w, sched, round).map_err(|e| e.at_round(t))?;
        out.push(summarize(&state, cost.per_node.iter().sum(), consensus, increment_excess));

        let mu_bar = state.mu_bar();
        let mu_hat = w.mix_vectors(&state.nodes.iter().map(|s| s.mu.clone()).collect::<Vec<_>>());
        let dists: Vec<f64> = next.nodes.iter().map(|s| (&s.lambda - &mu_bar).norm()).collect();
        consensus = (dists.iter().copied().fold(0.0, f64::max), dists.iter().sum());
        increment_excess = next
            .nodes
            .iter()
            .zip(&mu_hat)
            .map(|(s, hat)| (&s.mu - hat).norm() - s.y.norm())
            .fold(f64::NEG_INFINITY, f64::max);
        state = next;
    }
    Ok(out)
}

fn summarize(state: &SwarmState, cost: f64, consensus: (f64, f64), increment_excess: f64) -> RoundSummary {
    let weights = state.nodes.iter().map(|s| s.c);
    RoundSummary {
        t: state.t,
        cost,
        constraint_sum: state.constraint_sum.clone(),
        tracker_sum: state.tracker_sum(),
        weight_sum: state.weight_sum(),
        weight_min: weights.clone().fold(f64::INFINITY, f64::min),
        weight_max: weights.fold(f64::NEG_INFINITY, f64::max),
        mu_min: state
            .nodes
            .iter()
            .flat_map(|s| s.mu.iter().copied())
            .fold(f64::INFINITY, f64::min),
        mu_bar: state.mu_bar(),
        consensus_err: consensus.0,
        consensus_err_sum: consensus.1,
        tracker_max_norm: state.nodes.iter().map(|s| s.y.norm()).fold(0.0, f64::max),
        increment_excess: if state.t == 1 { 0.0 } else { increment_excess },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphKind, GraphSequence};
    use crate::problem::{make_pev_instance, PevParams};
    use crate::{Matrix, Vector};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn scalar_constraint() -> ConstraintFunction {
        ConstraintFunction::affine(Matrix::from_element(1, 1, 1.0), v(&[0.0])).unwrap()
    }

    /// Minimizes the 1-d subproblem on a grid of step `h`.
    fn grid_argmin(x_t: f64, s: f64, a_lambda: f64, eta: f64, lo: f64, hi: f64, h: f64) -> f64 {
        let steps = ((hi - lo) / h).round() as usize;
        (0..=steps)
            .map(|k| lo + k as f64 * h)
            .map(|x| (x, s * (x - x_t) + a_lambda * x + eta * (x - x_t).powi(2)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
            .0
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let set = FeasibleSet::cube(2, -1.0, 1.0);
        let g = ConstraintFunction::affine(Matrix::from_element(1, 2, 1.0), v(&[0.0])).unwrap();
        let x = v(&[0.3, -0.2]);
        let out = local_argmin(&x, &v(&[0.0, 0.0]), &v(&[0.0]), &g, &set, 3.0).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn one_dimensional_fixtures_match_grid() {
        let h = 1e-4;
        let g = scalar_constraint();
        let set = FeasibleSet::cube(1, -1.0, 1.0);
        let out = local_argmin(&v(&[0.0]), &v(&[2.0]), &v(&[0.0]), &g, &set, 1.0).unwrap();
        let grid = grid_argmin(0.0, 2.0, 0.0, 1.0, -1.0, 1.0, h);
        assert_eq!(out[0], -1.0);
        assert!((out[0] - grid).abs() <= 2.0 * h);

        let set = FeasibleSet::cube(1, 0.0, 1.0);
        let out = local_argmin(&v(&[0.5]), &v(&[1.0]), &v(&[1.0]), &g, &set, 1.0).unwrap();
        let grid = grid_argmin(0.5, 1.0, 1.0, 1.0, 0.0, 1.0, h);
        assert_eq!(out[0], 0.0);
        assert!((out[0] - grid).abs() <= 2.0 * h);
    }

    #[test]
    fn argmin_rejects_bad_inputs() {
        let g = scalar_constraint();
        let set = FeasibleSet::cube(1, 0.0, 1.0);
        assert!(local_argmin(&v(&[0.5]), &v(&[1.0]), &v(&[1.0]), &g, &set, 0.0).is_err());
        assert!(local_argmin(&v(&[0.5]), &v(&[1.0]), &v(&[-1.0]), &g, &set, 1.0).is_err());
        assert!(local_argmin(&v(&[0.5, 1.0]), &v(&[1.0]), &v(&[1.0]), &g, &set, 1.0).is_err());
    }

    #[test]
    fn iterative_reports_non_convergence() {
        let g = scalar_constraint();
        let set = FeasibleSet::cube(1, -10.0, 10.0);
        let inner = InnerLoop { tol: 0.0, max_iter: 3 };
        let err = local_argmin_iterative(&v(&[0.0]), &v(&[1.0]), &v(&[0.0]), &g, &set, 1.0, inner).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 3, .. }));
    }

    #[test]
    fn schedule_defaults_and_validation() {
        let s = StepSchedule::default();
        assert_eq!(s.alpha(4), 2.0);
        assert_eq!(s.eta(4), 4.0);
        assert!(StepSchedule::powers(0.5, -1.0).is_err());
        assert!(StepSchedule::powers(0.0, 0.0).is_ok());
    }

    #[test]
    fn initialization_follows_algorithm() {
        let inst = make_pev_instance(&PevParams::new(3, 2, 2, 4, 10)).unwrap();
        let s = initialize(&inst, InitKind::ZeroProjected).unwrap();
        assert_eq!(s.t, 1);
        for (node, spec) in s.nodes.iter().zip(&inst.nodes) {
            assert_eq!(node.x, Vector::zeros(2));
            assert_eq!(node.y, spec.constraint.offset().clone());
            assert_eq!(node.mu, Vector::zeros(2));
            assert_eq!(node.c, 1.0);
        }
        assert_eq!(s.tracker_sum(), s.constraint_sum);
        let r = initialize(&inst, InitKind::SeededRandom(3)).unwrap();
        assert_eq!(r, initialize(&inst, InitKind::SeededRandom(3)).unwrap());
        assert!(r.nodes.iter().zip(&inst.nodes).all(|(n, spec)| spec.set.contains(&n.x, 0.0)));
    }

    #[test]
    fn single_node_is_centralized_proximal_step() {
        let params = PevParams { linear_sign: -1.0, kappa: 0.2, ..PevParams::new(1, 2, 1, 8, 10) };
        let inst = make_pev_instance(&params).unwrap();
        let sched = StepSchedule::default();
        let mut s = initialize(&inst, InitKind::ZeroProjected).unwrap();
        let w = MixingMatrix::identity(1);
        for _ in 0..20 {
            let prev = s.clone();
            s = dust_round(&inst, &prev, &w, &sched).unwrap();
            let node = &s.nodes[0];
            assert_eq!(node.c, 1.0);
            assert_eq!(node.lambda, prev.nodes[0].mu);
            let (_, grad) = inst.cost.evaluate(0, prev.t, &prev.nodes[0].x);
            let expected = local_argmin(
                &prev.nodes[0].x,
                &(grad * sched.alpha(prev.t)),
                &prev.nodes[0].mu,
                &inst.nodes[0].constraint,
                &inst.nodes[0].set,
                sched.eta(prev.t),
            )
            .unwrap();
            assert_eq!(node.x, expected);
            let g = inst.nodes[0].constraint.eval(&node.x);
            assert!((&node.y - &g).amax() < 1e-12);
            assert_eq!(node.mu, (&prev.nodes[0].mu + &node.y).map(|v| v.max(0.0)));
        }
    }

    #[test]
    fn doubly_stochastic_graph_keeps_unit_weights() {
        let inst = make_pev_instance(&PevParams { linear_sign: -1.0, ..PevParams::new(4, 2, 2, 2, 100) }).unwrap();
        // Complete graph: the out-degree rule gives a doubly stochastic W.
        let seq = GraphSequence::generate(GraphKind::StaticComplete, 4, 1, 0).unwrap();
        let trace = run(&inst, &seq, &StepSchedule::default(), 100, RunOptions::default(), &mut ()).unwrap();
        for row in &trace {
            assert!((row.weight_min - 1.0).abs() < 1e-12 && (row.weight_max - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn corrupted_weights_are_reported() {
        let inst = make_pev_instance(&PevParams::new(2, 1, 1, 2, 10)).unwrap();
        let s = initialize(&inst, InitKind::ZeroProjected).unwrap();
        let w = MixingMatrix::from_weights(Matrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]), 0.5).unwrap();
        let err = dust_round(&inst, &s, &w, &StepSchedule::default()).unwrap_err();
        assert!(matches!(err, Error::NonPositiveWeight { node: 0, .. }));
        assert!(err.is_numeric());
    }

    #[test]
    fn non_finite_state_is_reported() {
        let inst = make_pev_instance(&PevParams::new(2, 1, 1, 2, 10)).unwrap();
        let mut s = initialize(&inst, InitKind::ZeroProjected).unwrap();
        s.nodes[1].y[0] = f64::INFINITY;
        let w = MixingMatrix::identity(2);
        let err = dust_round(&inst, &s, &w, &StepSchedule::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { node: 1, .. }));
    }

    #[test]
    fn run_errors_carry_round() {
        let inst = make_pev_instance(&PevParams::new(2, 1, 1, 2, 10)).unwrap();
        let seq = GraphSequence::generate(GraphKind::StaticRing, 2, 1, 0).unwrap();
        let mut s = initialize(&inst, InitKind::ZeroProjected).unwrap();
        s.nodes[0].mu[0] = f64::NAN;
        let err = run_from(&inst, &seq, &StepSchedule::default(), 5, s, RoundOptions::default(), &mut ()).unwrap_err();
        assert!(matches!(err, Error::AtRound { t: 1, .. }));
        assert!(run(&inst, &seq, &StepSchedule::default(), 0, RunOptions::default(), &mut ()).is_err());
    }
}
