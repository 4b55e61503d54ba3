//! Exact maximum total multicommodity flow on unit-node-capacity instances,
//! via a path-formulation LP solved by rational-arithmetic simplex.
//!
//! Paths are enumerated up to a length cap. A solve is marked exact when the
//! cap provably does not bind: either every simple path fits under it, or the
//! optimal duals certify optimality for the unrestricted LP — node prices
//! that are feasible (every source-to-sink path, of any length, collects
//! total price at least 1) prove no longer path could improve the packing.

use crate::instance::{Instance, InstanceError};
use crate::linalg::Label;
use num::bigint::BigInt;
use num::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use std::collections::BTreeSet;
use std::fmt;

/// Exact rational number used for all flow values.
pub type Rational = num::BigRational;

/// Hard cap on enumerated paths per solve.
pub const DEFAULT_PATH_BUDGET: usize = 50_000;

fn rat(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Formats a rational as "n" or "n/d" (the canonical reduced form).
pub fn rational_string(r: &Rational) -> String {
    r.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowError {
    PathBudget { budget: usize },
    Instance(InstanceError),
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::PathBudget { budget } => {
                write!(f, "path enumeration exceeds the budget of {budget} paths")
            }
            FlowError::Instance(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for FlowError {}

impl From<InstanceError> for FlowError {
    fn from(e: InstanceError) -> FlowError {
        FlowError::Instance(e)
    }
}

/// One source-to-sink path for a commodity: a simple vertex sequence from
/// the source's attach set to the sink's, consecutive vertices adjacent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PathVariable {
    pub commodity: usize,
    pub vertices: Vec<Label>,
}

/// All simple paths for commodity `i` with at most `max_len` vertices, in
/// depth-first order: start vertices ascending by index, extensions ascending
/// by neighbor index, a path recorded at every visit of a sink-attached
/// vertex (longer continuations follow their prefix).
pub fn enumerate_paths(inst: &Instance, i: usize, max_len: usize) -> Vec<PathVariable> {
    let mut unlimited = usize::MAX;
    enumerate_paths_capped(inst, i, max_len, &mut unlimited).unwrap()
}

fn enumerate_paths_capped(
    inst: &Instance,
    i: usize,
    max_len: usize,
    remaining: &mut usize,
) -> Result<Vec<PathVariable>, FlowError> {
    let c = &inst.commodities()[i];
    let sources = inst.attach_set(&c.source).unwrap();
    let sinks = inst.attach_set(&c.sink).unwrap();
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut on_path = vec![false; inst.n()];

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        inst: &Instance,
        sinks: &BTreeSet<usize>,
        max_len: usize,
        commodity: usize,
        stack: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<PathVariable>,
        remaining: &mut usize,
    ) -> Result<(), FlowError> {
        let v = *stack.last().unwrap();
        if sinks.contains(&v) {
            if *remaining == 0 {
                return Err(FlowError::PathBudget {
                    budget: DEFAULT_PATH_BUDGET,
                });
            }
            *remaining -= 1;
            out.push(PathVariable {
                commodity,
                vertices: stack.iter().map(|&u| inst.vertex(u).clone()).collect(),
            });
        }
        if stack.len() < max_len {
            for &w in inst.neighbors(v) {
                if !on_path[w] {
                    stack.push(w);
                    on_path[w] = true;
                    dfs(
                        inst, sinks, max_len, commodity, stack, on_path, out, remaining,
                    )?;
                    on_path[w] = false;
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    for &s in sources {
        if max_len == 0 {
            break;
        }
        stack.push(s);
        on_path[s] = true;
        dfs(
            inst,
            sinks,
            max_len,
            i,
            &mut stack,
            &mut on_path,
            &mut out,
            remaining,
        )?;
        on_path[s] = false;
        stack.pop();
    }
    Ok(out)
}

/// An optimal flow: total value, the nonzero path assignment, and whether
/// the value is provably the unrestricted optimum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowSolution {
    pub value: Rational,
    pub assignment: Vec<(PathVariable, Rational)>,
    pub max_len: usize,
    pub exact: bool,
    pub paths_considered: usize,
}

impl Serialize for FlowSolution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct PathJson<'a> {
            commodity: usize,
            vertices: &'a [Label],
            flow: String,
        }
        let mut s = serializer.serialize_struct("FlowSolution", 5)?;
        s.serialize_field("value", &rational_string(&self.value))?;
        let paths: Vec<PathJson> = self
            .assignment
            .iter()
            .map(|(p, x)| PathJson {
                commodity: p.commodity,
                vertices: &p.vertices,
                flow: rational_string(x),
            })
            .collect();
        s.serialize_field("paths", &paths)?;
        s.serialize_field("max_len", &self.max_len)?;
        s.serialize_field("exact", &self.exact)?;
        s.serialize_field("paths_considered", &self.paths_considered)?;
        s.end()
    }
}

/// Maximum-ratio simplex tableau over exact rationals, Bland's rule
/// throughout: entering variable is the lowest-index improving column,
/// leaving row breaks ratio ties by lowest basis index. Terminates on any
/// input; deterministic.
struct Simplex {
    // rows: m constraint rows then the objective row; columns: structural
    // variables, slacks, rhs.
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    n_struct: usize,
    m: usize,
}

impl Simplex {
    /// maximize Σ x_j subject to A x ≤ b, x ≥ 0 (all coefficients of the
    /// objective are 1; A is 0/1 here but any nonnegative data works).
    fn new(a: &[Vec<u8>], b: &[usize], n_struct: usize) -> Simplex {
        let m = a.len();
        let width = n_struct + m + 1;
        let mut t: Vec<Vec<Rational>> = Vec::with_capacity(m + 1);
        for (i, row) in a.iter().enumerate() {
            let mut r = vec![Rational::zero(); width];
            for (j, &v) in row.iter().enumerate() {
                r[j] = rat(v as usize);
            }
            r[n_struct + i] = Rational::one();
            r[width - 1] = rat(b[i]);
            t.push(r);
        }
        let mut z = vec![Rational::zero(); width];
        for cell in z.iter_mut().take(n_struct) {
            *cell = -Rational::one();
        }
        t.push(z);
        Simplex {
            t,
            basis: (n_struct..n_struct + m).collect(),
            n_struct,
            m,
        }
    }

    fn solve(&mut self) {
        let width = self.n_struct + self.m + 1;
        loop {
            let z = &self.t[self.m];
            let Some(enter) = (0..width - 1).find(|&j| z[j].is_negative()) else {
                return;
            };
            let mut leave: Option<usize> = None;
            for r in 0..self.m {
                if self.t[r][enter].is_positive() {
                    let better = match leave {
                        None => true,
                        Some(cur) => {
                            let ratio_r = &self.t[r][width - 1] / &self.t[r][enter];
                            let ratio_cur = &self.t[cur][width - 1] / &self.t[cur][enter];
                            ratio_r < ratio_cur
                                || (ratio_r == ratio_cur && self.basis[r] < self.basis[cur])
                        }
                    };
                    if better {
                        leave = Some(r);
                    }
                }
            }
            let leave = leave.expect("node-capacitated path LP is always bounded");
            self.pivot(leave, enter);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.n_struct + self.m + 1;
        let inv = self.t[row][col].recip();
        for j in 0..width {
            self.t[row][j] = &self.t[row][j] * &inv;
        }
        for r in 0..=self.m {
            if r == row || self.t[r][col].is_zero() {
                continue;
            }
            let factor = self.t[r][col].clone();
            for j in 0..width {
                let sub = &factor * &self.t[row][j];
                self.t[r][j] = &self.t[r][j] - &sub;
            }
        }
        self.basis[row] = col;
    }

    fn objective(&self) -> Rational {
        self.t[self.m][self.n_struct + self.m].clone()
    }

    fn primal(&self) -> Vec<Rational> {
        let width = self.n_struct + self.m + 1;
        let mut x = vec![Rational::zero(); self.n_struct];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.t[r][width - 1].clone();
            }
        }
        x
    }

    fn duals(&self) -> Vec<Rational> {
        (0..self.m)
            .map(|i| self.t[self.m][self.n_struct + i].clone())
            .collect()
    }
}

/// Minimum node-price of any source-to-sink walk for commodity `i` under
/// nonnegative prices `y` (a walk's price counts every visited vertex, so
/// with y ≥ 0 the minimum over walks is attained by a simple path). `None`
/// when the commodity is disconnected.
fn min_path_price(inst: &Instance, i: usize, y: &[Rational]) -> Option<Rational> {
    let c = &inst.commodities()[i];
    let sources = inst.attach_set(&c.source).unwrap();
    let sinks = inst.attach_set(&c.sink).unwrap();
    let mut dist: Vec<Option<Rational>> = vec![None; inst.n()];
    for &s in sources {
        dist[s] = Some(y[s].clone());
    }
    for _ in 0..inst.n() {
        let mut changed = false;
        for v in 0..inst.n() {
            let Some(dv) = dist[v].clone() else { continue };
            for &w in inst.neighbors(v) {
                let cand = &dv + &y[w];
                if dist[w].as_ref().is_none_or(|dw| &cand < dw) {
                    dist[w] = Some(cand);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    sinks.iter().filter_map(|&t| dist[t].clone()).min()
}

/// Exact optimum of the path LP restricted to paths of at most `max_len`
/// vertices: maximize total flow subject to unit capacity on every graph
/// vertex. The result is flagged exact when the restriction provably does
/// not bind (see the module docs).
///
/// # Errors
///
/// Fails when more than `path_budget` paths would be enumerated.
pub fn max_multicommodity_flow(
    inst: &Instance,
    max_len: usize,
    path_budget: usize,
) -> Result<FlowSolution, FlowError> {
    let mut remaining = path_budget;
    let mut paths: Vec<PathVariable> = Vec::new();
    for i in 0..inst.commodities().len() {
        let mut chunk = enumerate_paths_capped(inst, i, max_len, &mut remaining).map_err(|_| {
            FlowError::PathBudget {
                budget: path_budget,
            }
        })?;
        paths.append(&mut chunk);
    }

    let n = inst.n();
    let mut a: Vec<Vec<u8>> = vec![vec![0; paths.len()]; n];
    for (j, p) in paths.iter().enumerate() {
        for l in &p.vertices {
            a[inst.vertex_index(l).unwrap()][j] = 1;
        }
    }
    let b = vec![1; n];
    let mut simplex = Simplex::new(&a, &b, paths.len());
    simplex.solve();

    let value = simplex.objective();
    let x = simplex.primal();
    let y = simplex.duals();
    debug_assert!(y.iter().all(|yi| !yi.is_negative()));

    // Any nonnegative prices covering every path and totaling the primal
    // value certify unrestricted optimality, so besides the simplex duals
    // (whose total always matches) try uniform prices: on saturated
    // symmetric optima the simplex duals are often degenerate while the
    // uniform vector certifies.
    let certified = |prices: &[Rational]| {
        (0..inst.commodities().len())
            .all(|i| min_path_price(inst, i, prices).is_none_or(|p| p >= Rational::one()))
    };
    let exact = max_len >= n || certified(&y) || {
        let uniform = vec![&value / rat(n); n];
        !value.is_zero() && certified(&uniform)
    };

    let assignment: Vec<(PathVariable, Rational)> = paths
        .into_iter()
        .zip(x)
        .filter(|(_, xi)| !xi.is_zero())
        .collect();
    Ok(FlowSolution {
        value,
        assignment,
        max_len,
        exact,
        paths_considered: simplex.n_struct,
    })
}

/// Shortest source-to-sink path length (in vertices) over all commodities,
/// ignoring disconnected ones; `None` when every commodity is disconnected.
fn longest_shortest_path(inst: &Instance) -> Option<usize> {
    let mut worst = None;
    for i in 0..inst.commodities().len() {
        let y: Vec<Rational> = vec![Rational::one(); inst.n()];
        if let Some(p) = min_path_price(inst, i, &y) {
            let len = p.to_integer().try_into().unwrap_or(usize::MAX);
            worst = Some(worst.map_or(len, |w: usize| w.max(len)));
        }
    }
    worst
}

/// Solves with increasing length caps until the result is provably exact,
/// starting from the largest shortest-path length among the commodities.
/// Returns an inexact lower bound only when the path budget stops the
/// escalation after at least one successful solve.
pub fn max_flow_exact_auto(inst: &Instance, path_budget: usize) -> Result<FlowSolution, FlowError> {
    let Some(start) = longest_shortest_path(inst) else {
        // Nothing is connected: the zero flow is exact.
        return max_multicommodity_flow(inst, 1, path_budget);
    };
    let mut last: Option<FlowSolution> = None;
    for max_len in start..=inst.n() {
        match max_multicommodity_flow(inst, max_len, path_budget) {
            Ok(sol) => {
                if sol.exact {
                    return Ok(sol);
                }
                last = Some(sol);
            }
            Err(e @ FlowError::PathBudget { .. }) => {
                return last.ok_or(e);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(last.expect("a solve at max_len = n always runs and is exact"))
}
