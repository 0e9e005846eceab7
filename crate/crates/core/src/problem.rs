//! The online problem: per-node projectable sets, affine coupling
//! constraints `sum_i (A_i x_i + b_i) <= 0`, and time-varying costs.

use std::str::FromStr;

use rand::Rng;

use crate::rng::{keyed, Domain};
use crate::{Error, Matrix, Result, Vector};

/// A compact convex local set with a closed-form Euclidean projection.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Box { lo: Vector, hi: Vector },
    Ball { center: Vector, radius: f64 },
}

impl FeasibleSet {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        FeasibleSet::Box {
            lo: Vector::from_element(dim, lo),
            hi: Vector::from_element(dim, hi),
        }
    }

    pub fn new_box(lo: Vector, hi: Vector) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                context: "box bounds",
                expected: lo.len(),
                actual: hi.len(),
            });
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidArgument("box needs finite lo <= hi".into()));
        }
        Ok(FeasibleSet::Box { lo, hi })
    }

    pub fn new_ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("ball needs finite center and radius >= 0".into()));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lo, .. } => lo.len(),
            FeasibleSet::Ball { center, .. } => center.len(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Box { lo, hi } => (hi - lo).norm(),
            FeasibleSet::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Euclidean projection: clamp for boxes, radial rescale for balls.
    pub fn project(&self, z: &Vector) -> Result<Vector> {
        self.check_dim(z, "projection")?;
        Ok(match self {
            FeasibleSet::Box { lo, hi } => {
                Vector::from_fn(z.len(), |k, _| z[k].clamp(lo[k], hi[k]))
            }
            FeasibleSet::Ball { center, radius } => {
                let offset = z - center;
                let dist = offset.norm();
                if dist <= *radius {
                    z.clone()
                } else {
                    center + offset * (radius / dist)
                }
            }
        })
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            FeasibleSet::Box { lo, hi } => (0..x.len()).all(|k| x[k] >= lo[k] - tol && x[k] <= hi[k] + tol),
            FeasibleSet::Ball { center, radius } => (x - center).norm() <= radius + tol,
        }
    }

    /// Uniform-ish sample: uniform per coordinate for boxes, uniform
    /// direction and radius for balls.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vector {
        match self {
            FeasibleSet::Box { lo, hi } => Vector::from_fn(lo.len(), |k, _| {
                if hi[k] > lo[k] {
                    rng.random_range(lo[k]..=hi[k])
                } else {
                    lo[k]
                }
            }),
            FeasibleSet::Ball { center, radius } => {
                let dir = Vector::from_fn(center.len(), |_, _| rng.random_range(-1.0..=1.0));
                let norm = dir.norm();
                if norm == 0.0 {
                    return center.clone();
                }
                center + dir * (radius * rng.random::<f64>() / norm)
            }
        }
    }

    /// Maximum and minimum of `row . x` over the set.
    fn linear_range(&self, row: &[f64]) -> (f64, f64) {
        match self {
            FeasibleSet::Box { lo, hi } => row.iter().enumerate().fold((0.0, 0.0), |(mx, mn), (k, a)| {
                let (u, v) = (a * lo[k], a * hi[k]);
                (mx + u.max(v), mn + u.min(v))
            }),
            FeasibleSet::Ball { center, radius } => {
                let mid: f64 = row.iter().zip(center.iter()).map(|(a, c)| a * c).sum();
                let len = row.iter().map(|a| a * a).sum::<f64>().sqrt();
                (mid + radius * len, mid - radius * len)
            }
        }
    }

    /// Largest absolute coordinate over the set, per coordinate.
    fn coordinate_magnitudes(&self) -> Vector {
        match self {
            FeasibleSet::Box { lo, hi } => Vector::from_fn(lo.len(), |k, _| lo[k].abs().max(hi[k].abs())),
            FeasibleSet::Ball { center, radius } => {
                Vector::from_fn(center.len(), |k, _| center[k].abs() + radius)
            }
        }
    }

    fn check_dim(&self, z: &Vector, context: &'static str) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim(),
                actual: z.len(),
            });
        }
        Ok(())
    }
}

/// Affine local constraint `g(x) = A x + b` with values in `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintFunction {
    a: Matrix,
    b: Vector,
}

impl ConstraintFunction {
    pub fn affine(a: Matrix, b: Vector) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                context: "constraint offset",
                expected: a.nrows(),
                actual: b.len(),
            });
        }
        Ok(ConstraintFunction { a, b })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn offset(&self) -> &Vector {
        &self.b
    }

    /// Number of coupled inequalities.
    pub fn p(&self) -> usize {
        self.a.nrows()
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn eval(&self, x: &Vector) -> Vector {
        &self.a * x + &self.b
    }

    /// Same value as [`eval`](Self::eval), computed one row at a time.
    pub fn eval_rows(&self, x: &Vector) -> Vector {
        Vector::from_fn(self.p(), |k, _| self.a.row(k).iter().zip(x.iter()).map(|(a, v)| a * v).sum::<f64>() + self.b[k])
    }

    /// `(dg/dx)^T lambda`, the gradient of `<lambda, g(x)>`. Constant for
    /// affine constraints.
    pub fn gradient_dot(&self, _x: &Vector, lambda: &Vector) -> Vector {
        self.a.tr_mul(lambda)
    }

    /// Componentwise bound `max_{x in set} |g_k(x)|`.
    pub fn component_bounds(&self, set: &FeasibleSet) -> Vector {
        Vector::from_fn(self.p(), |k, _| {
            let row: Vec<f64> = self.a.row(k).iter().copied().collect();
            let (mx, mn) = set.linear_range(&row);
            (mx + self.b[k]).abs().max((mn + self.b[k]).abs())
        })
    }

    /// An upper bound on `max_{x in set} ||g(x)||`.
    pub fn value_bound(&self, set: &FeasibleSet) -> f64 {
        self.component_bounds(set).norm()
    }

    /// Spectral norm of `A`, bounding `||dg/dx||`.
    pub fn operator_norm(&self) -> f64 {
        if self.a.is_empty() {
            return 0.0;
        }
        self.a.clone().svd(false, false).singular_values.max()
    }
}

/// `f(x) = (a/2)||x||^2 + b.x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub curvature: f64,
    pub linear: Vector,
}

impl Quadratic {
    pub fn value(&self, x: &Vector) -> f64 {
        0.5 * self.curvature * x.norm_squared() + self.linear.dot(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        x * self.curvature + &self.linear
    }
}

/// One affine piece `slope.x + offset` of a piecewise-linear cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub slope: Vector,
    pub offset: f64,
}

/// Randomized charging costs. Coefficients for `(node, t)` are drawn from a
/// stream keyed by `(seed, node, t)`, so they are reproducible and
/// independent of evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct PevCost {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub curvature: (f64, f64),
    /// The linear coefficient is `linear_sign * u` with `u ~ Uniform(0, 1]`.
    pub linear_sign: f64,
    pub refresh: Refresh,
}

/// Which rounds draw fresh cost coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Refresh {
    #[default]
    EveryRound,
    /// New draws at `t = 1, 2, 4, 8, ...`; costs hold in between.
    Doubling,
    Fixed,
}

impl Refresh {
    /// Round whose draw is in effect at `t`.
    pub fn epoch(self, t: usize) -> usize {
        match self {
            Refresh::EveryRound => t,
            Refresh::Doubling => {
                if t == 0 {
                    0
                } else {
                    1 << (usize::BITS - 1 - t.leading_zeros())
                }
            }
            Refresh::Fixed => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Refresh::EveryRound => "every_round",
            Refresh::Doubling => "doubling",
            Refresh::Fixed => "fixed",
        }
    }
}

impl FromStr for Refresh {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "every_round" => Ok(Refresh::EveryRound),
            "doubling" => Ok(Refresh::Doubling),
            "fixed" => Ok(Refresh::Fixed),
            _ => Err(Error::InvalidArgument(format!("unknown cost refresh '{s}'"))),
        }
    }
}

/// Form of the coupled constraint in the PEV scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// `sum_i A_i x_i <= D`; the zero profile is strictly feasible.
    #[default]
    Capacity,
    /// `sum_i A_i x_i = D`, written as two inequalities. No Slater point.
    Balance,
}

impl Coupling {
    pub fn name(self) -> &'static str {
        match self {
            Coupling::Capacity => "capacity",
            Coupling::Balance => "balance",
        }
    }
}

impl FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "capacity" => Ok(Coupling::Capacity),
            "balance" => Ok(Coupling::Balance),
            _ => Err(Error::InvalidArgument(format!("unknown coupling '{s}'"))),
        }
    }
}

impl PevCost {
    pub fn quadratic(&self, node: usize, t: usize) -> Quadratic {
        let (lo, hi) = self.curvature;
        let t = self.refresh.epoch(t);
        let mut ra = keyed(self.seed, Domain::CostCurvature, node as u64, t as u64);
        let curvature = if hi > lo { ra.random_range(lo..=hi) } else { lo };
        let mut rb = keyed(self.seed, Domain::CostLinear, node as u64, t as u64);
        let linear = Vector::from_fn(self.dims[node], |_, _| self.linear_sign * (1.0 - rb.random::<f64>()));
        Quadratic { curvature, linear }
    }
}

/// Explicit quadratic coefficients per round; round `t` uses entry
/// `(t - 1) % rounds.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    pub rounds: Vec<Vec<Quadratic>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostModel {
    QuadraticPev(PevCost),
    /// Static per-node `max_k (slope_k . x + offset_k)`.
    PiecewiseLinear(Vec<Vec<Piece>>),
    Table(CostTable),
}

impl CostModel {
    pub fn family(&self) -> &'static str {
        match self {
            CostModel::QuadraticPev(_) => "quadratic_pev",
            CostModel::PiecewiseLinear(_) => "piecewise_linear",
            CostModel::Table(_) => "table",
        }
    }

    /// The round cost of `node` as a quadratic, if it is one.
    pub fn quadratic(&self, node: usize, t: usize) -> Option<Quadratic> {
        match self {
            CostModel::QuadraticPev(c) => Some(c.quadratic(node, t)),
            CostModel::Table(tab) => Some(tab.rounds[(t.max(1) - 1) % tab.rounds.len()][node].clone()),
            CostModel::PiecewiseLinear(_) => None,
        }
    }

    /// Value and a deterministic subgradient of `f_{node,t}` at `x`.
    ///
    /// For piecewise-linear costs ties are broken toward the zero-norm
    /// slope among the active pieces, then the lowest index.
    pub fn evaluate(&self, node: usize, t: usize, x: &Vector) -> (f64, Vector) {
        match self {
            CostModel::PiecewiseLinear(nodes) => {
                let pieces = &nodes[node];
                let values: Vec<f64> = pieces.iter().map(|pc| pc.slope.dot(x) + pc.offset).collect();
                let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let tol = 1e-12 * (1.0 + best.abs());
                let active = (0..pieces.len()).filter(|&k| values[k] >= best - tol);
                let pick = active
                    .min_by(|&a, &b| {
                        pieces[a]
                            .slope
                            .norm()
                            .partial_cmp(&pieces[b].slope.norm())
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .unwrap_or(0);
                (best, pieces[pick].slope.clone())
            }
            _ => {
                let q = self.quadratic(node, t).expect("quadratic family");
                (q.value(x), q.gradient(x))
            }
        }
    }

    pub fn value(&self, node: usize, t: usize, x: &Vector) -> f64 {
        match self.quadratic(node, t) {
            Some(q) => q.value(x),
            None => self.evaluate(node, t, x).0,
        }
    }

    /// Strong-convexity modulus of the round cost, zero if none.
    pub fn curvature(&self, node: usize, t: usize) -> f64 {
        self.quadratic(node, t).map_or(0.0, |q| q.curvature)
    }

    /// Bound on `||subgradient||` over `set` uniformly in `t`.
    pub fn subgradient_bound(&self, node: usize, set: &FeasibleSet) -> f64 {
        let mags = set.coordinate_magnitudes();
        match self {
            CostModel::QuadraticPev(c) => {
                let a = c.curvature.0.abs().max(c.curvature.1.abs());
                (mags * a).add_scalar(c.linear_sign.abs()).norm()
            }
            CostModel::PiecewiseLinear(nodes) => {
                nodes[node].iter().map(|pc| pc.slope.norm()).fold(0.0, f64::max)
            }
            CostModel::Table(tab) => tab
                .rounds
                .iter()
                .map(|r| {
                    let q = &r[node];
                    Vector::from_fn(mags.len(), |k, _| q.curvature.abs() * mags[k] + q.linear[k].abs()).norm()
                })
                .fold(0.0, f64::max),
        }
    }
}

/// One agent's private data.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub set: FeasibleSet,
    pub constraint: ConstraintFunction,
}

/// A strictly feasible interior point with margin `epsilon`:
/// `sum_i g_i(witness_i) <= -epsilon * 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaterCertificate {
    pub witness: Vec<Vector>,
    pub margin: f64,
}

/// Parameters of the plug-in EV charging scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PevParams {
    pub n: usize,
    pub d: usize,
    pub p: usize,
    pub seed: u64,
    pub horizon: usize,
    /// Per-slot charging cap; `X_i = [0, x_max]^d`.
    pub x_max: f64,
    /// Capacity tightness: `D = kappa * sum_i A_i (x_max / 2) 1`.
    pub kappa: f64,
    /// Sign of the linear cost term (`+1`: price, `-1`: charging utility).
    pub linear_sign: f64,
    pub curvature: (f64, f64),
    pub refresh: Refresh,
    pub coupling: Coupling,
}

impl PevParams {
    pub fn new(n: usize, d: usize, p: usize, seed: u64, horizon: usize) -> Self {
        PevParams {
            n,
            d,
            p,
            seed,
            horizon,
            x_max: 1.0,
            kappa: 0.5,
            linear_sign: 1.0,
            curvature: (0.5, 1.0),
            refresh: Refresh::EveryRound,
            coupling: Coupling::Capacity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub nodes: Vec<NodeSpec>,
    pub cost: CostModel,
    /// A point of the coupled feasible set, one block per node.
    pub feasible_point: Vec<Vector>,
    pub slater: Option<SlaterCertificate>,
    /// Rounds the instance is meant for (costs exist for every `t`).
    pub horizon: usize,
}

/// `R`, `F` and `G`: set diameter, constraint value bound and subgradient
/// bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub diameter: f64,
    pub value_bound: f64,
    pub gradient_bound: f64,
}

impl ProblemInstance {
    /// Validates dimensions and the stored feasible point.
    pub fn new(
        nodes: Vec<NodeSpec>,
        cost: CostModel,
        feasible_point: Vec<Vector>,
        slater: Option<SlaterCertificate>,
        horizon: usize,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("instance needs at least one node".into()));
        }
        let p = nodes[0].constraint.p();
        for (i, node) in nodes.iter().enumerate() {
            if node.constraint.p() != p {
                return Err(Error::DimensionMismatch {
                    context: "coupled constraint count",
                    expected: p,
                    actual: node.constraint.p(),
                });
            }
            if node.constraint.dim() != node.set.dim() {
                return Err(Error::DimensionMismatch {
                    context: "constraint columns vs set dimension",
                    expected: node.set.dim(),
                    actual: node.constraint.dim(),
                });
            }
            let _ = i;
        }
        match &cost {
            CostModel::QuadraticPev(c) => {
                if c.dims.len() != nodes.len() || c.dims.iter().zip(&nodes).any(|(d, n)| *d != n.set.dim()) {
                    return Err(Error::InvalidArgument("cost dimensions do not match nodes".into()));
                }
            }
            CostModel::PiecewiseLinear(pieces) => {
                if pieces.len() != nodes.len()
                    || pieces.iter().zip(&nodes).any(|(ps, n)| ps.is_empty() || ps.iter().any(|pc| pc.slope.len() != n.set.dim()))
                {
                    return Err(Error::InvalidArgument("piecewise cost does not match nodes".into()));
                }
            }
            CostModel::Table(tab) => {
                if tab.rounds.is_empty()
                    || tab.rounds.iter().any(|r| {
                        r.len() != nodes.len() || r.iter().zip(&nodes).any(|(q, n)| q.linear.len() != n.set.dim())
                    })
                {
                    return Err(Error::InvalidArgument("cost table does not match nodes".into()));
                }
            }
        }
        let blocks_match = |x: &[Vector]| x.len() == nodes.len() && x.iter().zip(&nodes).all(|(xi, n)| xi.len() == n.set.dim());
        if !blocks_match(&feasible_point) || slater.as_ref().is_some_and(|c| !blocks_match(&c.witness)) {
            return Err(Error::InvalidArgument("point blocks do not match node dimensions".into()));
        }
        let inst = ProblemInstance {
            nodes,
            cost,
            feasible_point,
            slater,
            horizon,
        };
        if !inst.is_feasible(&inst.feasible_point, 1e-9) {
            return Err(Error::InvalidArgument("stored feasible point is infeasible".into()));
        }
        if let Some(cert) = &inst.slater {
            if cert.witness.len() != inst.n() || cert.margin <= 0.0 {
                return Err(Error::InvalidArgument("malformed Slater certificate".into()));
            }
            let total = inst.constraint_sum(&cert.witness);
            if total.iter().any(|v| *v > -cert.margin) {
                return Err(Error::InvalidArgument("Slater witness misses its margin".into()));
            }
        }
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn p(&self) -> usize {
        self.nodes[0].constraint.p()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.set.dim()).collect()
    }

    /// `sum_i g_i(x_i)`.
    pub fn constraint_sum(&self, x: &[Vector]) -> Vector {
        self.nodes
            .iter()
            .zip(x)
            .fold(Vector::zeros(self.p()), |acc, (node, xi)| acc + node.constraint.eval(xi))
    }

    /// `sum_i f_{i,t}(x_i)`.
    pub fn cost_sum(&self, t: usize, x: &[Vector]) -> f64 {
        x.iter().enumerate().map(|(i, xi)| self.cost.value(i, t, xi)).sum()
    }

    pub fn is_feasible(&self, x: &[Vector], tol: f64) -> bool {
        x.len() == self.n()
            && self.nodes.iter().zip(x).all(|(node, xi)| node.set.contains(xi, tol))
            && self.constraint_sum(x).iter().all(|v| *v <= tol)
    }

    pub fn bound_constants(&self) -> BoundConstants {
        let mut out = BoundConstants {
            diameter: 0.0,
            value_bound: 0.0,
            gradient_bound: 0.0,
        };
        for (i, node) in self.nodes.iter().enumerate() {
            out.diameter = out.diameter.max(node.set.diameter());
            out.value_bound = out.value_bound.max(node.constraint.value_bound(&node.set));
            out.gradient_bound = out
                .gradient_bound
                .max(node.constraint.operator_norm())
                .max(self.cost.subgradient_bound(i, &node.set));
        }
        out
    }
}

/// Builds the charging scenario: quadratic costs with per-round random
/// coefficients, nonnegative rate-aggregation matrices `A_i` (entries
/// `Uniform[0, 1)` keyed by `(seed, i)`), `g_i(x) = A_i x - D/N` and boxes
/// `[0, x_max]^d`.
///
/// The stored Slater witness is `x_max * kappa / 4` in every coordinate,
/// which lies in the relative interior of each box; its margin is the
/// smallest component of `-sum_i g_i(witness_i)`.
pub fn make_pev_instance(params: &PevParams) -> Result<ProblemInstance> {
    let PevParams { n, d, p, seed, .. } = *params;
    if n < 1 || d < 1 || p < 1 {
        return Err(Error::InvalidArgument(format!("invalid PEV shape n={n} d={d} p={p}")));
    }
    if !(params.x_max > 0.0) || !(params.kappa >= 0.0 && params.kappa <= 1.0) {
        return Err(Error::InvalidArgument("need x_max > 0 and kappa in [0, 1]".into()));
    }
    let (clo, chi) = params.curvature;
    if !(clo > 0.0 && chi >= clo) {
        return Err(Error::InvalidArgument("curvature range must be positive".into()));
    }
    let matrices: Vec<Matrix> = (0..n)
        .map(|i| {
            let mut rng = keyed(seed, Domain::ConstraintMatrix, i as u64, 0);
            Matrix::from_fn(p, d, |_, _| rng.random::<f64>())
        })
        .collect();
    let half = Vector::from_element(d, params.x_max / 2.0);
    let capacity = matrices
        .iter()
        .fold(Vector::zeros(p), |acc, a| acc + a * &half)
        * params.kappa;
    match params.coupling {
        Coupling::Capacity => make_coupled_instance(params, matrices, capacity),
        Coupling::Balance => make_balance_instance(params, matrices, capacity),
    }
}

fn make_balance_instance(params: &PevParams, matrices: Vec<Matrix>, demand: Vector) -> Result<ProblemInstance> {
    let n = matrices.len();
    let p = demand.len();
    let per_node = &demand / n as f64;
    let mut offset = Vector::zeros(2 * p);
    offset.rows_mut(0, p).copy_from(&(-&per_node));
    offset.rows_mut(p, p).copy_from(&per_node);
    let nodes = matrices
        .into_iter()
        .map(|a| {
            let mut stacked = Matrix::zeros(2 * p, a.ncols());
            stacked.rows_mut(0, p).copy_from(&a);
            stacked.rows_mut(p, p).copy_from(&(-&a));
            Ok(NodeSpec {
                set: FeasibleSet::cube(a.ncols(), 0.0, params.x_max),
                constraint: ConstraintFunction::affine(stacked, offset.clone())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dims: Vec<usize> = nodes.iter().map(|n| n.set.dim()).collect();
    let level = params.x_max * params.kappa / 2.0;
    let feasible: Vec<Vector> = dims.iter().map(|&d| Vector::from_element(d, level)).collect();
    let cost = pev_cost(params, dims);
    ProblemInstance::new(nodes, cost, feasible, None, params.horizon)
}

fn pev_cost(params: &PevParams, dims: Vec<usize>) -> CostModel {
    CostModel::QuadraticPev(PevCost {
        seed: params.seed,
        dims,
        curvature: params.curvature,
        linear_sign: params.linear_sign,
        refresh: params.refresh,
    })
}

/// Same scenario with caller-provided `A_i` and capacity `D`.
pub fn make_coupled_instance(params: &PevParams, matrices: Vec<Matrix>, capacity: Vector) -> Result<ProblemInstance> {
    let n = matrices.len();
    let per_node = &capacity / n as f64;
    let nodes = matrices
        .into_iter()
        .map(|a| {
            let set = FeasibleSet::cube(a.ncols(), 0.0, params.x_max);
            Ok(NodeSpec {
                constraint: ConstraintFunction::affine(a, -per_node.clone())?,
                set,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dims: Vec<usize> = nodes.iter().map(|n| n.set.dim()).collect();
    let zero: Vec<Vector> = dims.iter().map(|&d| Vector::zeros(d)).collect();
    let level = params.x_max * params.kappa / 4.0;
    let witness: Vec<Vector> = dims.iter().map(|&d| Vector::from_element(d, level)).collect();
    let cost = pev_cost(params, dims);
    let mut inst = ProblemInstance {
        nodes,
        cost,
        feasible_point: zero,
        slater: None,
        horizon: params.horizon,
    };
    let margin = -inst.constraint_sum(&witness).max();
    if margin > 0.0 {
        inst.slater = Some(SlaterCertificate { witness, margin });
    }
    ProblemInstance::new(inst.nodes, inst.cost, inst.feasible_point, inst.slater, inst.horizon)
}
