//! Exact solver for small bounded integer programs.
//!
//! Depth-first branch-and-bound over the variables in declaration order.
//! Every node tightens variable domains by interval propagation on the
//! linear rows, rejects nodes whose quadratic rows cannot be satisfied on
//! the current box, and prunes on an interval bound of the objective. The
//! first optimal assignment met in DFS order is returned, so results are
//! deterministic.
//!
//! The engine is meant for the programs built by the typed solvers: a few
//! dozen variables bounded by the instance size.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relation of a constraint row. `Gt`/`Lt` are accepted for convenience and
/// rewritten to `Ge rhs+1` / `Le rhs-1`, which is exact over the integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
    Gt,
    Lt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: i64,
    pub upper: i64,
}

/// `coeffs · x  rel  rhs`, with `coeffs` dense over the variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<i64>,
    pub relation: Relation,
    pub rhs: i64,
}

/// `x^T Q x + linear · x  rel  rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticConstraint {
    pub quadratic: Vec<Vec<i64>>,
    pub linear: Vec<i64>,
    pub relation: Relation,
    pub rhs: i64,
}

/// Objective `linear · x + x^T Q x` (the quadratic part is optional).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: Sense,
    pub linear: Vec<i64>,
    pub quadratic: Option<Vec<Vec<i64>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerProgram {
    pub vars: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    pub quadratic_constraints: Vec<QuadraticConstraint>,
    pub objective: Objective,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub value: i64,
    pub assignment: Vec<i64>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum IpError {
    #[error("integer program is infeasible")]
    Infeasible,
    #[error("search budget of {0} nodes exceeded")]
    BudgetExceeded(u64),
    #[error("malformed program: {0}")]
    Malformed(String),
}

/// Node budget guarding against runaway enumeration.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_nodes: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_nodes: 20_000_000,
        }
    }
}

impl IntegerProgram {
    /// Empty maximisation program.
    pub fn new(sense: Sense) -> Self {
        IntegerProgram {
            vars: Vec::new(),
            constraints: Vec::new(),
            quadratic_constraints: Vec::new(),
            objective: Objective {
                sense,
                linear: Vec::new(),
                quadratic: None,
            },
        }
    }

    /// Adds a variable and returns its index. Existing rows are padded.
    pub fn add_var(&mut self, name: impl Into<String>, lower: i64, upper: i64) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        let n = self.vars.len();
        for c in &mut self.constraints {
            c.coeffs.resize(n, 0);
        }
        for q in &mut self.quadratic_constraints {
            pad_square(&mut q.quadratic, n);
            q.linear.resize(n, 0);
        }
        self.objective.linear.resize(n, 0);
        if let Some(q) = &mut self.objective.quadratic {
            pad_square(q, n);
        }
        n - 1
    }

    /// Adds a linear row given as sparse `(var, coeff)` terms.
    pub fn add_constraint(&mut self, terms: &[(usize, i64)], relation: Relation, rhs: i64) {
        let mut coeffs = vec![0; self.vars.len()];
        for &(v, a) in terms {
            coeffs[v] += a;
        }
        self.constraints.push(LinearConstraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Adds a quadratic row `Σ q·x_a·x_b + Σ l·x_a  rel  rhs`.
    pub fn add_quadratic_constraint(
        &mut self,
        quad: &[(usize, usize, i64)],
        linear: &[(usize, i64)],
        relation: Relation,
        rhs: i64,
    ) {
        let n = self.vars.len();
        let mut q = vec![vec![0; n]; n];
        for &(a, b, c) in quad {
            q[a][b] += c;
        }
        let mut l = vec![0; n];
        for &(a, c) in linear {
            l[a] += c;
        }
        self.quadratic_constraints.push(QuadraticConstraint {
            quadratic: q,
            linear: l,
            relation,
            rhs,
        });
    }

    pub fn set_linear_objective(&mut self, terms: &[(usize, i64)]) {
        let mut c = vec![0; self.vars.len()];
        for &(v, a) in terms {
            c[v] += a;
        }
        self.objective.linear = c;
    }

    pub fn set_quadratic_objective(&mut self, quad: &[(usize, usize, i64)]) {
        let n = self.vars.len();
        let mut q = vec![vec![0; n]; n];
        for &(a, b, c) in quad {
            q[a][b] += c;
        }
        self.objective.quadratic = Some(q);
    }

    /// Objective value of an assignment.
    pub fn evaluate(&self, x: &[i64]) -> i64 {
        let mut v: i64 = self.objective.linear.iter().zip(x).map(|(c, x)| c * x).sum();
        if let Some(q) = &self.objective.quadratic {
            v += quad_value(q, x);
        }
        v
    }

    /// True when `x` lies in the box and satisfies every row.
    pub fn is_feasible(&self, x: &[i64]) -> bool {
        if x.len() != self.vars.len() {
            return false;
        }
        if self
            .vars
            .iter()
            .zip(x)
            .any(|(v, &x)| x < v.lower || x > v.upper)
        {
            return false;
        }
        let lin_ok = self.constraints.iter().all(|c| {
            let lhs: i64 = c.coeffs.iter().zip(x).map(|(a, x)| a * x).sum();
            holds(lhs, c.relation, c.rhs)
        });
        lin_ok
            && self.quadratic_constraints.iter().all(|c| {
                let lhs = quad_value(&c.quadratic, x)
                    + c.linear.iter().zip(x).map(|(a, x)| a * x).sum::<i64>();
                holds(lhs, c.relation, c.rhs)
            })
    }

    fn validate(&self) -> Result<(), IpError> {
        let n = self.vars.len();
        for v in &self.vars {
            if v.lower > v.upper {
                return Err(IpError::Infeasible);
            }
        }
        let bad_len = self.constraints.iter().any(|c| c.coeffs.len() != n)
            || self.objective.linear.len() != n
            || self
                .objective
                .quadratic
                .as_ref()
                .is_some_and(|q| !is_square(q, n))
            || self
                .quadratic_constraints
                .iter()
                .any(|c| c.linear.len() != n || !is_square(&c.quadratic, n));
        if bad_len {
            return Err(IpError::Malformed(
                "coefficient vector length does not match variable count".into(),
            ));
        }
        Ok(())
    }
}

fn pad_square(q: &mut Vec<Vec<i64>>, n: usize) {
    for row in q.iter_mut() {
        row.resize(n, 0);
    }
    q.resize(n, vec![0; n]);
}

fn is_square(q: &[Vec<i64>], n: usize) -> bool {
    q.len() == n && q.iter().all(|r| r.len() == n)
}

fn quad_value(q: &[Vec<i64>], x: &[i64]) -> i64 {
    let mut v = 0;
    for (a, row) in q.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            if c != 0 {
                v += c * x[a] * x[b];
            }
        }
    }
    v
}

fn holds(lhs: i64, rel: Relation, rhs: i64) -> bool {
    match rel {
        Relation::Le => lhs <= rhs,
        Relation::Eq => lhs == rhs,
        Relation::Ge => lhs >= rhs,
        Relation::Gt => lhs > rhs,
        Relation::Lt => lhs < rhs,
    }
}

/// Closed interval `[lo, hi]` of a row's admissible activity.
fn row_range(rel: Relation, rhs: i64) -> (i128, i128) {
    let rhs = rhs as i128;
    match rel {
        Relation::Le => (i128::MIN, rhs),
        Relation::Lt => (i128::MIN, rhs - 1),
        Relation::Eq => (rhs, rhs),
        Relation::Ge => (rhs, i128::MAX),
        Relation::Gt => (rhs + 1, i128::MAX),
    }
}

struct Row {
    terms: Vec<(usize, i128)>,
    lo: i128,
    hi: i128,
}

struct QuadRow {
    pairs: Vec<(usize, usize, i128)>,
    linear: Vec<(usize, i128)>,
    lo: i128,
    hi: i128,
}

struct Search<'a> {
    rows: Vec<Row>,
    /// For each variable, the rows it appears in.
    occurs: Vec<Vec<usize>>,
    quads: Vec<QuadRow>,
    obj_lin: Vec<(usize, i128)>,
    obj_quad: Vec<(usize, usize, i128)>,
    maximise: bool,
    /// Value order per variable: true = try high values first.
    descending: Vec<bool>,
    best: Option<(i128, Vec<i64>)>,
    nodes: u64,
    limits: &'a Limits,
}

/// Solves `ip` with the default node budget.
pub fn solve(ip: &IntegerProgram) -> Result<Solution, IpError> {
    solve_with(ip, &Limits::default())
}

/// Solves `ip` exactly, returning the first optimal assignment in DFS order.
pub fn solve_with(ip: &IntegerProgram, limits: &Limits) -> Result<Solution, IpError> {
    ip.validate()?;
    let n = ip.vars.len();
    let rows: Vec<Row> = ip
        .constraints
        .iter()
        .map(|c| {
            let (lo, hi) = row_range(c.relation, c.rhs);
            Row {
                terms: c
                    .coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a != 0)
                    .map(|(v, &a)| (v, a as i128))
                    .collect(),
                lo,
                hi,
            }
        })
        .collect();
    let mut occurs = vec![Vec::new(); n];
    for (r, row) in rows.iter().enumerate() {
        for &(v, _) in &row.terms {
            occurs[v].push(r);
        }
    }
    let quads = ip
        .quadratic_constraints
        .iter()
        .map(|c| {
            let (lo, hi) = row_range(c.relation, c.rhs);
            QuadRow {
                pairs: sym_pairs(&c.quadratic),
                linear: sparse(&c.linear),
                lo,
                hi,
            }
        })
        .collect();
    let obj_lin = sparse(&ip.objective.linear);
    let obj_quad = ip
        .objective
        .quadratic
        .as_ref()
        .map(|q| sym_pairs(q))
        .unwrap_or_default();
    let maximise = ip.objective.sense == Sense::Max;
    let descending = (0..n)
        .map(|v| {
            let mut g = ip.objective.linear[v] as i128;
            for &(a, b, c) in &obj_quad {
                if a == v || b == v {
                    g += c;
                }
            }
            if maximise {
                g > 0
            } else {
                g < 0
            }
        })
        .collect();
    let mut s = Search {
        rows,
        occurs,
        quads,
        obj_lin,
        obj_quad,
        maximise,
        descending,
        best: None,
        nodes: 0,
        limits,
    };
    let lo: Vec<i64> = ip.vars.iter().map(|v| v.lower).collect();
    let hi: Vec<i64> = ip.vars.iter().map(|v| v.upper).collect();
    s.dfs(lo, hi, 0)?;
    match s.best {
        Some((value, assignment)) => Ok(Solution {
            value: value as i64,
            assignment,
        }),
        None => Err(IpError::Infeasible),
    }
}

fn sparse(v: &[i64]) -> Vec<(usize, i128)> {
    v.iter()
        .enumerate()
        .filter(|(_, &a)| a != 0)
        .map(|(i, &a)| (i, a as i128))
        .collect()
}

/// Folds `Q` into upper-triangular `(a, b, q_ab + q_ba)` terms.
fn sym_pairs(q: &[Vec<i64>]) -> Vec<(usize, usize, i128)> {
    let n = q.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a..n {
            let c = if a == b {
                q[a][a] as i128
            } else {
                q[a][b] as i128 + q[b][a] as i128
            };
            if c != 0 {
                out.push((a, b, c));
            }
        }
    }
    out
}

fn mul_range(a: (i128, i128), b: (i128, i128)) -> (i128, i128) {
    let p = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
    (*p.iter().min().unwrap(), *p.iter().max().unwrap())
}

fn square_range(a: (i128, i128)) -> (i128, i128) {
    if a.0 >= 0 {
        (a.0 * a.0, a.1 * a.1)
    } else if a.1 <= 0 {
        (a.1 * a.1, a.0 * a.0)
    } else {
        (0, (a.0 * a.0).max(a.1 * a.1))
    }
}

fn scale_range(c: i128, r: (i128, i128)) -> (i128, i128) {
    if c >= 0 {
        (c * r.0, c * r.1)
    } else {
        (c * r.1, c * r.0)
    }
}

fn expr_range(
    pairs: &[(usize, usize, i128)],
    linear: &[(usize, i128)],
    lo: &[i64],
    hi: &[i64],
) -> (i128, i128) {
    let dom = |v: usize| (lo[v] as i128, hi[v] as i128);
    let mut acc = (0i128, 0i128);
    for &(a, b, c) in pairs {
        let r = if a == b {
            square_range(dom(a))
        } else {
            mul_range(dom(a), dom(b))
        };
        let s = scale_range(c, r);
        acc = (acc.0 + s.0, acc.1 + s.1);
    }
    for &(v, c) in linear {
        let s = scale_range(c, dom(v));
        acc = (acc.0 + s.0, acc.1 + s.1);
    }
    acc
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

impl Search<'_> {
    /// Interval propagation to a fixpoint. Returns false on a wipe-out.
    fn propagate(&self, lo: &mut [i64], hi: &mut [i64]) -> bool {
        let mut queue: Vec<usize> = (0..self.rows.len()).collect();
        let mut queued = vec![true; self.rows.len()];
        while let Some(r) = queue.pop() {
            queued[r] = false;
            let row = &self.rows[r];
            let (mut min_act, mut max_act) = (0i128, 0i128);
            for &(v, a) in &row.terms {
                let (l, h) = (lo[v] as i128, hi[v] as i128);
                if a > 0 {
                    min_act += a * l;
                    max_act += a * h;
                } else {
                    min_act += a * h;
                    max_act += a * l;
                }
            }
            if min_act > row.hi || max_act < row.lo {
                return false;
            }
            for &(v, a) in &row.terms {
                let (l, h) = (lo[v] as i128, hi[v] as i128);
                let (vmin, vmax) = if a > 0 { (a * l, a * h) } else { (a * h, a * l) };
                let mut new_lo = l;
                let mut new_hi = h;
                if row.hi != i128::MAX {
                    // a·x ≤ hi − (min_act − vmin)
                    let cap = row.hi - (min_act - vmin);
                    if a > 0 {
                        new_hi = new_hi.min(floor_div(cap, a));
                    } else {
                        new_lo = new_lo.max(ceil_div(cap, a));
                    }
                }
                if row.lo != i128::MIN {
                    // a·x ≥ lo − (max_act − vmax)
                    let need = row.lo - (max_act - vmax);
                    if a > 0 {
                        new_lo = new_lo.max(ceil_div(need, a));
                    } else {
                        new_hi = new_hi.min(floor_div(need, a));
                    }
                }
                if new_lo > new_hi {
                    return false;
                }
                if new_lo != l || new_hi != h {
                    lo[v] = new_lo as i64;
                    hi[v] = new_hi as i64;
                    for &r2 in &self.occurs[v] {
                        if !queued[r2] {
                            queued[r2] = true;
                            queue.push(r2);
                        }
                    }
                    // Activities of this row are now stale; revisit it.
                    if !queued[r] {
                        queued[r] = true;
                        queue.push(r);
                    }
                    break;
                }
            }
        }
        true
    }

    fn dfs(&mut self, mut lo: Vec<i64>, mut hi: Vec<i64>, start: usize) -> Result<(), IpError> {
        self.nodes += 1;
        if self.nodes > self.limits.max_nodes {
            return Err(IpError::BudgetExceeded(self.limits.max_nodes));
        }
        if !self.propagate(&mut lo, &mut hi) {
            return Ok(());
        }
        for q in &self.quads {
            let (a, b) = expr_range(&q.pairs, &q.linear, &lo, &hi);
            if a > q.hi || b < q.lo {
                return Ok(());
            }
        }
        let (omin, omax) = expr_range(&self.obj_quad, &self.obj_lin, &lo, &hi);
        if let Some((best, _)) = &self.best {
            let hopeless = if self.maximise {
                omax <= *best
            } else {
                omin >= *best
            };
            if hopeless {
                return Ok(());
            }
        }
        let Some(v) = (start..lo.len()).find(|&v| lo[v] != hi[v]) else {
            // Every variable is fixed: the box is a single feasible point.
            let value = omin;
            let better = match &self.best {
                None => true,
                Some((b, _)) => {
                    if self.maximise {
                        value > *b
                    } else {
                        value < *b
                    }
                }
            };
            if better {
                self.best = Some((value, lo));
            }
            return Ok(());
        };
        let values: Vec<i64> = if self.descending[v] {
            (lo[v]..=hi[v]).rev().collect()
        } else {
            (lo[v]..=hi[v]).collect()
        };
        for x in values {
            let mut l2 = lo.clone();
            let mut h2 = hi.clone();
            l2[v] = x;
            h2[v] = x;
            self.dfs(l2, h2, v + 1)?;
        }
        Ok(())
    }
}

/// Linear and product terms of one side of a text row.
type Terms = (Vec<(usize, i64)>, Vec<(usize, usize, i64)>);

fn malformed(line: usize, msg: impl std::fmt::Display) -> IpError {
    IpError::Malformed(format!("line {line}: {msg}"))
}

/// Parses `[+|-] [c] name` / `[c] a*b` terms, e.g. `2 x - y + 3 x*y`.
fn parse_terms(
    tokens: &[&str],
    index: &std::collections::HashMap<String, usize>,
    line: usize,
) -> Result<Terms, IpError> {
    let mut lin = Vec::new();
    let mut quad = Vec::new();
    let mut sign = 1i64;
    let mut coef: Option<i64> = None;
    let var = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| malformed(line, format!("unknown variable '{name}'")))
    };
    for &tok in tokens {
        match tok {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Ok(c) = tok.parse::<i64>() {
                    if coef.is_some() {
                        return Err(malformed(line, "two coefficients in a row"));
                    }
                    coef = Some(c);
                    continue;
                }
                let (c, name) = match tok.split_once('*') {
                    Some((c, rest)) if c.parse::<i64>().is_ok() => (c.parse::<i64>().unwrap(), rest),
                    _ => (1, tok),
                };
                let (neg, name) = match name.strip_prefix('-') {
                    Some(rest) => (-1, rest),
                    None => (1, name),
                };
                let c = sign * neg * c * coef.take().unwrap_or(1);
                match name.split_once('*') {
                    Some((a, b)) => quad.push((var(a)?, var(b)?, c)),
                    None => lin.push((var(name)?, c)),
                }
                sign = 1;
            }
        }
    }
    if coef.is_some() {
        return Err(malformed(line, "dangling coefficient"));
    }
    Ok((lin, quad))
}

/// Reads the plain-text program format used by the debugging CLI:
///
/// ```text
/// max                  # or min
/// var x 0 2            # name lower upper
/// var y 0 2
/// obj x + y + 2 x*y    # linear and product terms
/// st x + y <= 3        # relations <= >= = < >
/// ```
pub fn parse_program(text: &str) -> Result<IntegerProgram, IpError> {
    let mut ip = IntegerProgram::new(Sense::Max);
    let mut index = std::collections::HashMap::new();
    let mut objective: Option<Terms> = None;
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        let Some((&head, rest)) = tokens.split_first() else {
            continue;
        };
        match head {
            "max" | "min" if rest.is_empty() => {
                ip.objective.sense = if head == "max" { Sense::Max } else { Sense::Min };
            }
            "var" => {
                let [name, lo, hi] = rest else {
                    return Err(malformed(line, "expected 'var <name> <lower> <upper>'"));
                };
                let bound = |s: &str| s.parse::<i64>().map_err(|_| malformed(line, format!("bad bound '{s}'")));
                let (lo, hi) = (bound(lo)?, bound(hi)?);
                if lo > hi {
                    return Err(malformed(line, format!("empty domain for '{name}'")));
                }
                if index.insert(name.to_string(), ip.vars.len()).is_some() {
                    return Err(malformed(line, format!("duplicate variable '{name}'")));
                }
                ip.add_var(*name, lo, hi);
            }
            "obj" => objective = Some(parse_terms(rest, &index, line)?),
            "st" => rows.push((line, rest.to_vec())),
            other => return Err(malformed(line, format!("unknown directive '{other}'"))),
        }
    }
    for (line, row) in rows {
        let pos = row
            .iter()
            .position(|t| matches!(*t, "<=" | ">=" | "=" | "<" | ">"))
            .ok_or_else(|| malformed(line, "missing relation"))?;
        let relation = match row[pos] {
            "<=" => Relation::Le,
            ">=" => Relation::Ge,
            "=" => Relation::Eq,
            "<" => Relation::Lt,
            _ => Relation::Gt,
        };
        let rhs = match &row[pos + 1..] {
            [r] => r.parse::<i64>().map_err(|_| malformed(line, format!("bad right-hand side '{r}'")))?,
            _ => return Err(malformed(line, "right-hand side must be one integer")),
        };
        let (lin, quad) = parse_terms(&row[..pos], &index, line)?;
        if quad.is_empty() {
            ip.add_constraint(&lin, relation, rhs);
        } else {
            ip.add_quadratic_constraint(&quad, &lin, relation, rhs);
        }
    }
    let (lin, quad) = objective.unwrap_or_default();
    ip.set_linear_objective(&lin);
    if !quad.is_empty() {
        ip.set_quadratic_objective(&quad);
    }
    Ok(ip)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_linear_max() {
        let mut ip = IntegerProgram::new(Sense::Max);
        let x1 = ip.add_var("x1", 0, 2);
        let x2 = ip.add_var("x2", 0, 2);
        ip.add_constraint(&[(x1, 1), (x2, 1)], Relation::Le, 3);
        ip.set_linear_objective(&[(x1, 1), (x2, 1)]);
        let s = solve(&ip).unwrap();
        assert_eq!(s.value, 3);
        assert!(ip.is_feasible(&s.assignment));
    }

    #[test]
    fn quadratic_min_on_simplex() {
        // min x1² + x2² s.t. x1 + x2 = 2 over [0,2]²: feasible points
        // (0,2), (1,1), (2,0) with values 4, 2, 4.
        let mut ip = IntegerProgram::new(Sense::Min);
        let a = ip.add_var("a", 0, 2);
        let b = ip.add_var("b", 0, 2);
        ip.add_constraint(&[(a, 1), (b, 1)], Relation::Eq, 2);
        ip.set_quadratic_objective(&[(a, a, 1), (b, b, 1)]);
        let s = solve(&ip).unwrap();
        assert_eq!(s.value, 2);
        assert_eq!(s.assignment, vec![1, 1]);
    }

    #[test]
    fn strict_rows_are_integral() {
        let mut ip = IntegerProgram::new(Sense::Min);
        let x = ip.add_var("x", 0, 5);
        ip.add_constraint(&[(x, 1)], Relation::Gt, 2);
        ip.set_linear_objective(&[(x, 1)]);
        assert_eq!(solve(&ip).unwrap().value, 3);
    }

    #[test]
    fn infeasible_and_budget() {
        let mut ip = IntegerProgram::new(Sense::Max);
        let x = ip.add_var("x", 0, 3);
        let y = ip.add_var("y", 0, 3);
        ip.add_constraint(&[(x, 2), (y, 2)], Relation::Eq, 3);
        assert_eq!(solve(&ip), Err(IpError::Infeasible));

        let mut big = IntegerProgram::new(Sense::Max);
        let vars: Vec<usize> = (0..12).map(|i| big.add_var(format!("v{i}"), 0, 9)).collect();
        // Parity row that propagation cannot settle early.
        let terms: Vec<(usize, i64)> = vars
            .iter()
            .map(|&v| (v, if v % 2 == 0 { 2 } else { -2 }))
            .collect();
        big.add_quadratic_constraint(&[], &terms, Relation::Eq, 1);
        let lim = Limits { max_nodes: 1000 };
        assert_eq!(solve_with(&big, &lim), Err(IpError::BudgetExceeded(1000)));
    }

    #[test]
    fn quadratic_equality_row() {
        // x·y = 6 with x,y ∈ [0,6], maximise x.
        let mut ip = IntegerProgram::new(Sense::Max);
        let x = ip.add_var("x", 0, 6);
        let y = ip.add_var("y", 0, 6);
        ip.add_quadratic_constraint(&[(x, y, 1)], &[], Relation::Eq, 6);
        ip.set_linear_objective(&[(x, 1)]);
        let s = solve(&ip).unwrap();
        assert_eq!(s.assignment, vec![6, 1]);
    }

    #[test]
    fn malformed_lengths_rejected() {
        let mut ip = IntegerProgram::new(Sense::Max);
        ip.add_var("x", 0, 1);
        ip.constraints.push(LinearConstraint {
            coeffs: vec![1, 1],
            relation: Relation::Le,
            rhs: 1,
        });
        assert!(matches!(solve(&ip), Err(IpError::Malformed(_))));
    }

    #[test]
    fn text_format_round_trip() {
        let ip = parse_program(
            "# demo\nmax\nvar x 0 2\nvar y 0 2\nobj x + y\nst x + y <= 3\n",
        )
        .unwrap();
        assert_eq!(solve(&ip).unwrap().value, 3);
        let ip = parse_program("min\nvar a 0 2\nvar b 0 2\nobj a*a + b*b\nst a + b = 2\n").unwrap();
        let sol = solve(&ip).unwrap();
        assert_eq!((sol.value, sol.assignment), (2, vec![1, 1]));
        let ip = parse_program("max\nvar x 0 5\nobj 2 x\nst - 3*x >= -7\nst x*x <= 9\n").unwrap();
        assert_eq!(solve(&ip).unwrap().value, 4);
        assert!(parse_program("var x 0 1\nst x + z <= 1\n").is_err());
        assert!(parse_program("var x 2 1\n").is_err());
        assert!(parse_program("var x 0 1\nst x 1\n").is_err());
    }
}
