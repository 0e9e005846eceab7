//! Versioned line-oriented text formats for problem instances and state
//! dumps.
//!
//! Every line is a keyword followed by whitespace-separated fields. Vectors
//! are comma-separated with `-` for the empty vector; matrices are rows of
//! vectors joined by `;`. Blank lines and lines starting with `#` are
//! ignored. Floats are written in shortest round-trip form, so
//! `parse(serialize(x)) == x` bit for bit.
//!
//! ```text
//! dust-instance 1
//! nodes 2
//! horizon 100
//! cost quadratic_pev 7 0.5 1.0 1.0 every_round
//! set 0 box 0.0,0.0 1.0,1.0
//! constraint 0 0.5,0.25 -0.5
//! feasible 0 0.0,0.0
//! ...
//! end
//! ```

use std::fmt::Write as _;

use crate::dust::{NodeState, SwarmState};
use crate::problem::{
    ConstraintFunction, CostModel, CostTable, FeasibleSet, NodeSpec, PevCost, Piece, ProblemInstance, Quadratic,
    SlaterCertificate,
};
use crate::{Error, Matrix, Result, Vector};

pub const INSTANCE_MAGIC: &str = "dust-instance";
pub const STATE_MAGIC: &str = "dust-state";
pub const VERSION: u32 = 1;

/// Upper bound on declared counts, so a short malicious header cannot make
/// the parser allocate gigabytes.
const MAX_NODES: usize = 1 << 16;
const MAX_TABLE: usize = 1 << 20;

fn push_vector(out: &mut String, v: &Vector) {
    if v.is_empty() {
        out.push('-');
        return;
    }
    for (k, x) in v.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(out, "{x:?}");
    }
}

fn push_matrix(out: &mut String, m: &Matrix) {
    if m.nrows() == 0 {
        out.push('-');
        return;
    }
    for r in 0..m.nrows() {
        if r > 0 {
            out.push(';');
        }
        push_vector(out, &m.row(r).transpose());
    }
}

pub fn serialize_instance(inst: &ProblemInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{INSTANCE_MAGIC} {VERSION}");
    let _ = writeln!(out, "nodes {}", inst.n());
    let _ = writeln!(out, "horizon {}", inst.horizon);
    match &inst.cost {
        CostModel::QuadraticPev(c) => {
            let _ = writeln!(
                out,
                "cost quadratic_pev {} {:?} {:?} {:?} {}",
                c.seed,
                c.curvature.0,
                c.curvature.1,
                c.linear_sign,
                c.refresh.name()
            );
        }
        CostModel::PiecewiseLinear(_) => out.push_str("cost piecewise_linear\n"),
        CostModel::Table(tab) => {
            let _ = writeln!(out, "cost table {}", tab.rounds.len());
        }
    }
    for (i, node) in inst.nodes.iter().enumerate() {
        match &node.set {
            FeasibleSet::Box { lo, hi } => {
                let _ = write!(out, "set {i} box ");
                push_vector(&mut out, lo);
                out.push(' ');
                push_vector(&mut out, hi);
            }
            FeasibleSet::Ball { center, radius } => {
                let _ = write!(out, "set {i} ball ");
                push_vector(&mut out, center);
                let _ = write!(out, " {radius:?}");
            }
        }
        out.push('\n');
        let _ = write!(out, "constraint {i} ");
        push_matrix(&mut out, node.constraint.matrix());
        out.push(' ');
        push_vector(&mut out, node.constraint.offset());
        out.push('\n');
        let _ = write!(out, "feasible {i} ");
        push_vector(&mut out, &inst.feasible_point[i]);
        out.push('\n');
    }
    match &inst.cost {
        CostModel::PiecewiseLinear(pieces) => {
            for (i, ps) in pieces.iter().enumerate() {
                for pc in ps {
                    let _ = write!(out, "piece {i} {:?} ", pc.offset);
                    push_vector(&mut out, &pc.slope);
                    out.push('\n');
                }
            }
        }
        CostModel::Table(tab) => {
            for (r, row) in tab.rounds.iter().enumerate() {
                for (i, q) in row.iter().enumerate() {
                    let _ = write!(out, "quad {} {i} {:?} ", r + 1, q.curvature);
                    push_vector(&mut out, &q.linear);
                    out.push('\n');
                }
            }
        }
        CostModel::QuadraticPev(_) => {}
    }
    if let Some(cert) = &inst.slater {
        let _ = writeln!(out, "slater {:?}", cert.margin);
        for (i, w) in cert.witness.iter().enumerate() {
            let _ = write!(out, "witness {i} ");
            push_vector(&mut out, w);
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn next_fields(&mut self) -> Option<Vec<&'a str>> {
        for (k, raw) in self.inner.by_ref() {
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            self.line = k + 1;
            return Some(trimmed.split_whitespace().collect());
        }
        None
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("bad number `{s}`"))?;
    if !v.is_finite() {
        return Err(format!("non-finite number `{s}`"));
    }
    Ok(v)
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.parse().map_err(|_| format!("bad integer `{s}`"))
}

fn parse_vector(s: &str) -> std::result::Result<Vector, String> {
    if s == "-" {
        return Ok(Vector::zeros(0));
    }
    let xs = s.split(',').map(parse_f64).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Vector::from_vec(xs))
}

fn parse_matrix(s: &str) -> std::result::Result<Vec<Vector>, String> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split(';').map(parse_vector).collect()
}

fn rows_to_matrix(rows: &[Vector], cols: usize) -> std::result::Result<Matrix, String> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err("matrix rows must match the set dimension".into());
    }
    Ok(Matrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

fn expect_len(fields: &[&str], n: usize) -> std::result::Result<(), String> {
    if fields.len() != n {
        return Err(format!("`{}` expects {} fields, got {}", fields[0], n - 1, fields.len() - 1));
    }
    Ok(())
}

fn read_header(lines: &mut Lines<'_>, magic: &str) -> Result<()> {
    let fields = lines.next_fields().ok_or_else(|| lines.err("empty input"))?;
    if fields.len() != 2 || fields[0] != magic {
        return Err(lines.err(format!("expected `{magic} {VERSION}` header")));
    }
    let version: u32 = fields[1].parse().map_err(|_| lines.err("bad version"))?;
    if version != VERSION {
        return Err(lines.err(format!("unsupported version {version}")));
    }
    Ok(())
}

fn node_index(lines: &Lines<'_>, s: &str, n: usize) -> Result<usize> {
    let i = parse_usize(s).map_err(|m| lines.err(m))?;
    if i >= n {
        return Err(lines.err(format!("node {i} out of range (n = {n})")));
    }
    Ok(i)
}

fn set_once<T>(lines: &Lines<'_>, slot: &mut Option<T>, value: T, what: &str) -> Result<()> {
    if slot.is_some() {
        return Err(lines.err(format!("duplicate {what}")));
    }
    *slot = Some(value);
    Ok(())
}

enum CostHeader {
    Pev(PevCost),
    Piecewise,
    Table(usize),
}

pub fn parse_instance(text: &str) -> Result<ProblemInstance> {
    let mut lines = Lines::new(text);
    read_header(&mut lines, INSTANCE_MAGIC)?;
    let mut n: Option<usize> = None;
    let mut horizon: Option<usize> = None;
    let mut cost: Option<CostHeader> = None;
    let mut sets: Vec<Option<FeasibleSet>> = Vec::new();
    let mut constraints: Vec<Option<(Vec<Vector>, Vector)>> = Vec::new();
    let mut feasible: Vec<Option<Vector>> = Vec::new();
    let mut witness: Vec<Option<Vector>> = Vec::new();
    let mut pieces: Vec<Vec<Piece>> = Vec::new();
    let mut quads: Vec<Option<Quadratic>> = Vec::new();
    let mut margin: Option<f64> = None;
    let mut ended = false;

    while let Some(f) = lines.next_fields() {
        if ended {
            return Err(lines.err("content after `end`"));
        }
        let m = |r: std::result::Result<(), String>| r.map_err(|m| lines.err(m));
        match f[0] {
            "nodes" => {
                m(expect_len(&f, 2))?;
                let v = parse_usize(f[1]).map_err(|e| lines.err(e))?;
                if v == 0 || v > MAX_NODES {
                    return Err(lines.err("node count out of range"));
                }
                set_once(&lines, &mut n, v, "nodes")?;
                sets = vec![None; v];
                constraints = vec![None; v];
                feasible = vec![None; v];
                witness = vec![None; v];
                pieces = vec![Vec::new(); v];
            }
            "horizon" => {
                m(expect_len(&f, 2))?;
                let v = parse_usize(f[1]).map_err(|e| lines.err(e))?;
                set_once(&lines, &mut horizon, v, "horizon")?;
            }
            "cost" => {
                let nn = n.ok_or_else(|| lines.err("`nodes` must precede `cost`"))?;
                if f.len() < 2 {
                    return Err(lines.err("missing cost family"));
                }
                let header = match f[1] {
                    "quadratic_pev" => {
                        m(expect_len(&f, 7))?;
                        let num = |s| parse_f64(s).map_err(|e| lines.err(e));
                        CostHeader::Pev(PevCost {
                            seed: f[2].parse().map_err(|_| lines.err("bad seed"))?,
                            dims: Vec::new(),
                            curvature: (num(f[3])?, num(f[4])?),
                            linear_sign: num(f[5])?,
                            refresh: f[6].parse().map_err(|e: Error| lines.err(e.to_string()))?,
                        })
                    }
                    "piecewise_linear" => {
                        m(expect_len(&f, 2))?;
                        CostHeader::Piecewise
                    }
                    "table" => {
                        m(expect_len(&f, 3))?;
                        let rounds = parse_usize(f[2]).map_err(|e| lines.err(e))?;
                        if rounds == 0 || rounds.saturating_mul(nn) > MAX_TABLE {
                            return Err(lines.err("table size out of range"));
                        }
                        quads = vec![None; rounds * nn];
                        CostHeader::Table(rounds)
                    }
                    other => return Err(lines.err(format!("unknown cost family `{other}`"))),
                };
                set_once(&lines, &mut cost, header, "cost")?;
            }
            "set" => {
                let nn = n.ok_or_else(|| lines.err("`nodes` must precede `set`"))?;
                if f.len() < 3 {
                    return Err(lines.err("`set` needs a node and a kind"));
                }
                let i = node_index(&lines, f[1], nn)?;
                let set = match f[2] {
                    "box" => {
                        m(expect_len(&f, 5))?;
                        let lo = parse_vector(f[3]).map_err(|e| lines.err(e))?;
                        let hi = parse_vector(f[4]).map_err(|e| lines.err(e))?;
                        FeasibleSet::new_box(lo, hi).map_err(|e| lines.err(e.to_string()))?
                    }
                    "ball" => {
                        m(expect_len(&f, 5))?;
                        let c = parse_vector(f[3]).map_err(|e| lines.err(e))?;
                        let r = parse_f64(f[4]).map_err(|e| lines.err(e))?;
                        FeasibleSet::new_ball(c, r).map_err(|e| lines.err(e.to_string()))?
                    }
                    other => return Err(lines.err(format!("unknown set kind `{other}`"))),
                };
                set_once(&lines, &mut sets[i], set, "set")?;
            }
            "constraint" => {
                let nn = n.ok_or_else(|| lines.err("`nodes` must precede `constraint`"))?;
                m(expect_len(&f, 4))?;
                let i = node_index(&lines, f[1], nn)?;
                let rows = parse_matrix(f[2]).map_err(|e| lines.err(e))?;
                let b = parse_vector(f[3]).map_err(|e| lines.err(e))?;
                set_once(&lines, &mut constraints[i], (rows, b), "constraint")?;
            }
            "feasible" | "witness" => {
                let nn = n.ok_or_else(|| lines.err("`nodes` must precede points"))?;
                m(expect_len(&f, 3))?;
                let i = node_index(&lines, f[1], nn)?;
                let x = parse_vector(f[2]).map_err(|e| lines.err(e))?;
                let slot = if f[0] == "feasible" { &mut feasible[i] } else { &mut witness[i] };
                set_once(&lines, slot, x, f[0])?;
            }
            "piece" => {
                let nn = n.ok_or_else(|| lines.err("`nodes` must precede `piece`"))?;
                if !matches!(cost, Some(CostHeader::Piecewise)) {
                    return Err(lines.err("`piece` needs `cost piecewise_linear`"));
                }
                m(expect_len(&f, 4))?;
                let i = node_index(&lines, f[1], nn)?;
                let offset = parse_f64(f[2]).map_err(|e| lines.err(e))?;
                let slope = parse_vector(f[3]).map_err(|e| lines.err(e))?;
                if pieces[i].len() >= MAX_TABLE {
                    return Err(lines.err("too many pieces"));
                }
                pieces[i].push(Piece { slope, offset });
            }
            "quad" => {
                let nn = n.ok_or_else(|| lines.err("`nodes` must precede `quad`"))?;
                let Some(&CostHeader::Table(rounds)) = cost.as_ref() else {
                    return Err(lines.err("`quad` needs `cost table`"));
                };
                m(expect_len(&f, 5))?;
                let r = parse_usize(f[1]).map_err(|e| lines.err(e))?;
                if r == 0 || r > rounds {
                    return Err(lines.err(format!("table round {r} out of range")));
                }
                let i = node_index(&lines, f[2], nn)?;
                let curvature = parse_f64(f[3]).map_err(|e| lines.err(e))?;
                let linear = parse_vector(f[4]).map_err(|e| lines.err(e))?;
                set_once(&lines, &mut quads[(r - 1) * nn + i], Quadratic { curvature, linear }, "quad")?;
            }
            "slater" => {
                m(expect_len(&f, 2))?;
                let v = parse_f64(f[1]).map_err(|e| lines.err(e))?;
                set_once(&lines, &mut margin, v, "slater")?;
            }
            "end" => {
                m(expect_len(&f, 1))?;
                ended = true;
            }
            other => return Err(lines.err(format!("unknown keyword `{other}`"))),
        }
    }
    if !ended {
        return Err(lines.err("missing `end`"));
    }
    let last = lines.line;
    let fail = |message: &str| Error::Parse {
        line: last,
        message: message.to_string(),
    };
    let n = n.ok_or_else(|| fail("missing `nodes`"))?;
    let horizon = horizon.ok_or_else(|| fail("missing `horizon`"))?;
    let cost = cost.ok_or_else(|| fail("missing `cost`"))?;
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let set = sets[i].take().ok_or_else(|| fail(&format!("missing set for node {i}")))?;
        let (rows, b) = constraints[i]
            .take()
            .ok_or_else(|| fail(&format!("missing constraint for node {i}")))?;
        let a = rows_to_matrix(&rows, set.dim()).map_err(|m| fail(&m))?;
        let constraint = ConstraintFunction::affine(a, b).map_err(|e| fail(&e.to_string()))?;
        nodes.push(NodeSpec { set, constraint });
    }
    let feasible_point = feasible
        .into_iter()
        .enumerate()
        .map(|(i, x)| x.ok_or_else(|| fail(&format!("missing feasible point for node {i}"))))
        .collect::<Result<Vec<_>>>()?;
    let slater = match margin {
        None => {
            if witness.iter().any(Option::is_some) {
                return Err(fail("`witness` without `slater`"));
            }
            None
        }
        Some(margin) => Some(SlaterCertificate {
            witness: witness
                .into_iter()
                .enumerate()
                .map(|(i, x)| x.ok_or_else(|| fail(&format!("missing witness for node {i}"))))
                .collect::<Result<Vec<_>>>()?,
            margin,
        }),
    };
    let cost = match cost {
        CostHeader::Pev(mut c) => {
            c.dims = nodes.iter().map(|nd| nd.set.dim()).collect();
            CostModel::QuadraticPev(c)
        }
        CostHeader::Piecewise => CostModel::PiecewiseLinear(pieces),
        CostHeader::Table(rounds) => {
            let mut it = quads.into_iter();
            let mut table = Vec::with_capacity(rounds);
            for r in 0..rounds {
                let row = (0..n)
                    .map(|i| {
                        it.next()
                            .flatten()
                            .ok_or_else(|| fail(&format!("missing quad for round {} node {i}", r + 1)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                table.push(row);
            }
            CostModel::Table(CostTable { rounds: table })
        }
    };
    ProblemInstance::new(nodes, cost, feasible_point, slater, horizon).map_err(|e| fail(&e.to_string()))
}

/// Round index plus per-node values, as read from a dump. Turn it into a
/// [`SwarmState`] with [`StateDump::into_swarm`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateDump {
    pub t: usize,
    pub nodes: Vec<NodeState>,
}

impl StateDump {
    pub fn into_swarm(self, inst: &ProblemInstance) -> Result<SwarmState> {
        SwarmState::from_nodes(inst, self.t, self.nodes)
    }
}

impl From<&SwarmState> for StateDump {
    fn from(s: &SwarmState) -> Self {
        StateDump {
            t: s.t,
            nodes: s.nodes.clone(),
        }
    }
}

/// One `node` line per agent: `node <i> <c> <x> <y> <mu> <lambda>`.
pub fn serialize_state(state: &StateDump) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{STATE_MAGIC} {VERSION}");
    let _ = writeln!(out, "t {}", state.t);
    let _ = writeln!(out, "nodes {}", state.nodes.len());
    for (i, node) in state.nodes.iter().enumerate() {
        let _ = write!(out, "node {i} {:?}", node.c);
        for v in [&node.x, &node.y, &node.mu, &node.lambda] {
            out.push(' ');
            push_vector(&mut out, v);
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

pub fn parse_state(text: &str) -> Result<StateDump> {
    let mut lines = Lines::new(text);
    read_header(&mut lines, STATE_MAGIC)?;
    let mut t: Option<usize> = None;
    let mut slots: Option<Vec<Option<NodeState>>> = None;
    let mut ended = false;
    while let Some(f) = lines.next_fields() {
        if ended {
            return Err(lines.err("content after `end`"));
        }
        match f[0] {
            "t" => {
                expect_len(&f, 2).map_err(|m| lines.err(m))?;
                let v = parse_usize(f[1]).map_err(|e| lines.err(e))?;
                set_once(&lines, &mut t, v, "t")?;
            }
            "nodes" => {
                expect_len(&f, 2).map_err(|m| lines.err(m))?;
                let v = parse_usize(f[1]).map_err(|e| lines.err(e))?;
                if v == 0 || v > MAX_NODES {
                    return Err(lines.err("node count out of range"));
                }
                set_once(&lines, &mut slots, vec![None; v], "nodes")?;
            }
            "node" => {
                expect_len(&f, 7).map_err(|m| lines.err(m))?;
                let Some(slots) = slots.as_mut() else {
                    return Err(lines.err("`nodes` must precede `node`"));
                };
                let i = node_index(&lines, f[1], slots.len())?;
                let c = parse_f64(f[2]).map_err(|e| lines.err(e))?;
                let v = |s| parse_vector(s).map_err(|e| lines.err(e));
                let node = NodeState {
                    c,
                    x: v(f[3])?,
                    y: v(f[4])?,
                    mu: v(f[5])?,
                    lambda: v(f[6])?,
                };
                set_once(&lines, &mut slots[i], node, "node")?;
            }
            "end" => {
                expect_len(&f, 1).map_err(|m| lines.err(m))?;
                ended = true;
            }
            other => return Err(lines.err(format!("unknown keyword `{other}`"))),
        }
    }
    if !ended {
        return Err(lines.err("missing `end`"));
    }
    let t = t.ok_or_else(|| lines.err("missing `t`"))?;
    let slots = slots.ok_or_else(|| lines.err("missing `nodes`"))?;
    let nodes = slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| lines.err(format!("missing node {i}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(StateDump { t, nodes })
}
