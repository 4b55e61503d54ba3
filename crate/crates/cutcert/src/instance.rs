//! Node-capacitated multicommodity instances: an undirected graph with paired
//! source/sink terminals attached to vertex subsets, the strong product that
//! composes two instances, and multicut predicates and oracles.
//!
//! A cut here removes graph vertices, never terminals. The directed network a
//! cut must disconnect is [`Instance::instance_network`]: each undirected edge
//! in both directions, an arc from each source onto its attach set, and an
//! arc from each sink's attach set into the sink.

use crate::linalg::Label;
use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

/// Exhaustive multicut search is refused beyond this many vertices; larger
/// instances must rely on certificates and the explicit sink-attach upper
/// bound.
pub const BRUTE_FORCE_VERTEX_LIMIT: usize = 22;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commodity {
    pub source: String,
    pub sink: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceError {
    Validation(String),
    NoCommodities,
    TooLarge { vertices: usize, limit: usize },
    TerminalCollision(String),
    UnknownVertex(Label),
    UnknownTerminal(String),
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceError::Validation(s) => write!(f, "invalid instance: {s}"),
            InstanceError::NoCommodities => write!(f, "instance has no commodities"),
            InstanceError::TooLarge { vertices, limit } => write!(
                f,
                "instance has {vertices} vertices, above the exhaustive-search limit {limit}"
            ),
            InstanceError::TerminalCollision(id) => {
                write!(f, "terminal id {id:?} appears in both product factors")
            }
            InstanceError::UnknownVertex(l) => write!(f, "unknown vertex {l}"),
            InstanceError::UnknownTerminal(id) => write!(f, "unknown terminal {id:?}"),
        }
    }
}

impl std::error::Error for InstanceError {}

/// A node of the directed instance network: a graph vertex or a terminal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum NetNode {
    Vertex(Label),
    Terminal(String),
}

impl fmt::Display for NetNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetNode::Vertex(l) => write!(f, "{l}"),
            NetNode::Terminal(t) => write!(f, "{t}"),
        }
    }
}

/// A set of graph vertices meant to disconnect every source/sink pair.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Multicut {
    pub members: BTreeSet<Label>,
}

impl Multicut {
    pub fn new(members: BTreeSet<Label>) -> Multicut {
        Multicut { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl fmt::Display for Multicut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{{}}}",
            self.members.iter().map(Label::to_string).join(", ")
        )
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    vertices: Vec<Label>,
    edges: Vec<(Label, Label)>,
    commodities: Vec<Commodity>,
    attach: BTreeMap<String, Vec<Label>>,
}

/// An undirected graph with an ordered list of source/sink commodity pairs
/// and an attach map sending each terminal id to a nonempty vertex subset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceJson", into = "InstanceJson")]
pub struct Instance {
    vertices: Vec<Label>,
    index: BTreeMap<Label, usize>,
    adjacency: Vec<BTreeSet<usize>>,
    edges: BTreeSet<(usize, usize)>,
    commodities: Vec<Commodity>,
    attach: BTreeMap<String, BTreeSet<usize>>,
}

impl TryFrom<InstanceJson> for Instance {
    type Error = InstanceError;

    fn try_from(j: InstanceJson) -> Result<Instance, InstanceError> {
        Instance::new(j.vertices, j.edges, j.commodities, j.attach)
    }
}

impl From<Instance> for InstanceJson {
    fn from(inst: Instance) -> InstanceJson {
        InstanceJson {
            edges: inst
                .edges
                .iter()
                .map(|&(a, b)| (inst.vertices[a].clone(), inst.vertices[b].clone()))
                .collect(),
            attach: inst
                .attach
                .iter()
                .map(|(id, set)| {
                    (
                        id.clone(),
                        set.iter().map(|&v| inst.vertices[v].clone()).collect(),
                    )
                })
                .collect(),
            vertices: inst.vertices,
            commodities: inst.commodities,
        }
    }
}

impl Instance {
    pub fn new(
        vertices: Vec<Label>,
        edges: Vec<(Label, Label)>,
        commodities: Vec<Commodity>,
        attach: BTreeMap<String, impl IntoIterator<Item = Label>>,
    ) -> Result<Instance, InstanceError> {
        let fail = |s: String| Err(InstanceError::Validation(s));

        let mut index = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if !v.is_well_formed() {
                return fail(format!("malformed vertex label {v:?}"));
            }
            if index.insert(v.clone(), i).is_some() {
                return fail(format!("duplicate vertex {v}"));
            }
        }

        let mut adjacency = vec![BTreeSet::new(); vertices.len()];
        let mut edge_set = BTreeSet::new();
        for (a, b) in &edges {
            let &ia = index
                .get(a)
                .ok_or_else(|| InstanceError::UnknownVertex(a.clone()))?;
            let &ib = index
                .get(b)
                .ok_or_else(|| InstanceError::UnknownVertex(b.clone()))?;
            if ia == ib {
                return fail(format!("self-loop at {a}"));
            }
            adjacency[ia].insert(ib);
            adjacency[ib].insert(ia);
            edge_set.insert((ia.min(ib), ia.max(ib)));
        }

        let mut terminal_ids = BTreeSet::new();
        for c in &commodities {
            for id in [&c.source, &c.sink] {
                if !Label::valid_name(id) {
                    return fail(format!("malformed terminal id {id:?}"));
                }
                if !terminal_ids.insert(id.clone()) {
                    return fail(format!("terminal id {id:?} used more than once"));
                }
                if index.contains_key(&Label::Name(id.clone())) {
                    return fail(format!("terminal id {id:?} is also a vertex label"));
                }
            }
        }

        let mut attach_sets = BTreeMap::new();
        for (id, set) in attach {
            if !terminal_ids.contains(&id) {
                return Err(InstanceError::UnknownTerminal(id));
            }
            let mut resolved = BTreeSet::new();
            for v in set {
                let &iv = index
                    .get(&v)
                    .ok_or_else(|| InstanceError::UnknownVertex(v.clone()))?;
                resolved.insert(iv);
            }
            if resolved.is_empty() {
                return fail(format!("terminal {id:?} attaches to no vertices"));
            }
            attach_sets.insert(id, resolved);
        }
        for id in &terminal_ids {
            if !attach_sets.contains_key(id) {
                return fail(format!("terminal {id:?} missing from the attach map"));
            }
        }

        Ok(Instance {
            vertices,
            index,
            adjacency,
            edges: edge_set,
            commodities,
            attach: attach_sets,
        })
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Label] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Label {
        &self.vertices[i]
    }

    pub fn vertex_index(&self, label: &Label) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.adjacency[i]
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].contains(&j)
    }

    /// Undirected edges as index pairs (i, j) with i < j, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn terminal_ids(&self) -> impl Iterator<Item = &str> {
        self.attach.keys().map(String::as_str)
    }

    /// Attach set of a terminal, as vertex indices.
    pub fn attach_set(&self, id: &str) -> Result<&BTreeSet<usize>, InstanceError> {
        self.attach
            .get(id)
            .ok_or_else(|| InstanceError::UnknownTerminal(id.to_string()))
    }

    /// Union of all source attach sets.
    pub fn source_attach_union(&self) -> BTreeSet<usize> {
        self.commodities
            .iter()
            .flat_map(|c| self.attach[&c.source].iter().copied())
            .collect()
    }

    /// Union of all sink attach sets.
    pub fn sink_attach_union(&self) -> BTreeSet<usize> {
        self.commodities
            .iter()
            .flat_map(|c| self.attach[&c.sink].iter().copied())
            .collect()
    }

    /// Commodity indices whose source attaches to vertex `v`.
    pub fn sources_attached_to(&self, v: usize) -> Vec<usize> {
        self.commodities
            .iter()
            .enumerate()
            .filter(|(_, c)| self.attach[&c.source].contains(&v))
            .map(|(i, _)| i)
            .collect()
    }

    /// The directed graph a multicut must disconnect: both orientations of
    /// every undirected edge, an arc from each source to its attach set, and
    /// an arc from each sink's attach set to the sink.
    pub fn instance_network(&self) -> Vec<(NetNode, NetNode)> {
        let mut arcs = Vec::new();
        for &(a, b) in &self.edges {
            let (va, vb) = (self.vertices[a].clone(), self.vertices[b].clone());
            arcs.push((NetNode::Vertex(va.clone()), NetNode::Vertex(vb.clone())));
            arcs.push((NetNode::Vertex(vb), NetNode::Vertex(va)));
        }
        for c in &self.commodities {
            for &v in &self.attach[&c.source] {
                arcs.push((
                    NetNode::Terminal(c.source.clone()),
                    NetNode::Vertex(self.vertices[v].clone()),
                ));
            }
            for &v in &self.attach[&c.sink] {
                arcs.push((
                    NetNode::Vertex(self.vertices[v].clone()),
                    NetNode::Terminal(c.sink.clone()),
                ));
            }
        }
        arcs.sort();
        arcs
    }

    /// Vertices reachable from `starts ∖ removed` without entering `removed`.
    fn reachable(&self, starts: &BTreeSet<usize>, removed: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<usize> = starts
            .iter()
            .copied()
            .filter(|v| !removed.contains(v))
            .collect();
        seen.extend(queue.iter().copied());
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if !removed.contains(&w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// True iff removing `m` leaves no source-to-sink path for any commodity.
    /// Terminals themselves are never removable.
    pub fn is_multicut_indices(&self, m: &BTreeSet<usize>) -> bool {
        assert!(m.iter().all(|&v| v < self.n()), "cut vertex out of range");
        self.commodities.iter().all(|c| {
            self.reachable(&self.attach[&c.source], m)
                .is_disjoint(&self.attach[&c.sink])
        })
    }

    pub fn is_multicut(&self, m: &Multicut) -> Result<bool, InstanceError> {
        Ok(self.is_multicut_indices(&self.resolve(m)?))
    }

    /// True iff removing `m` disconnects every source from every sink, paired
    /// or not.
    pub fn cuts_all_terminal_pairs(&self, m: &BTreeSet<usize>) -> bool {
        self.commodities.iter().all(|c| {
            let reach = self.reachable(&self.attach[&c.source], m);
            self.commodities
                .iter()
                .all(|d| reach.is_disjoint(&self.attach[&d.sink]))
        })
    }

    fn resolve(&self, m: &Multicut) -> Result<BTreeSet<usize>, InstanceError> {
        m.members
            .iter()
            .map(|l| {
                self.vertex_index(l)
                    .ok_or_else(|| InstanceError::UnknownVertex(l.clone()))
            })
            .collect()
    }

    pub fn multicut_from_indices(&self, m: &BTreeSet<usize>) -> Multicut {
        Multicut::new(m.iter().map(|&v| self.vertices[v].clone()).collect())
    }

    /// Minimum multicut size with one witness, by exhaustive enumeration in
    /// increasing cardinality (lexicographic within a size, so the witness is
    /// deterministic).
    ///
    /// # Errors
    ///
    /// Refuses instances with no commodities or more than `limit` vertices.
    pub fn min_multicut(&self, limit: usize) -> Result<(usize, Multicut), InstanceError> {
        if self.commodities.is_empty() {
            return Err(InstanceError::NoCommodities);
        }
        if self.n() > limit {
            return Err(InstanceError::TooLarge {
                vertices: self.n(),
                limit,
            });
        }
        let oracle = BitOracle::new(self);
        for size in 0..=self.n() {
            for combo in (0..self.n()).combinations(size) {
                let mask = combo.iter().fold(0u64, |acc, &v| acc | 1 << v);
                if oracle.is_multicut(mask) {
                    let set: BTreeSet<usize> = combo.into_iter().collect();
                    return Ok((size, self.multicut_from_indices(&set)));
                }
            }
        }
        unreachable!("the full vertex set is always a multicut");
    }

    /// All inclusion-minimal multicuts, sorted by size then lexicographically
    /// by vertex indices.
    ///
    /// Search branches on the vertices of a shortest surviving source-to-sink
    /// path: any multicut extending the current partial cut must contain one
    /// of them, so every minimal multicut is reached; non-minimal leaves are
    /// filtered out afterwards.
    ///
    /// # Errors
    ///
    /// Refuses instances with more than `limit` vertices.
    pub fn minimal_multicuts(&self, limit: usize) -> Result<Vec<Multicut>, InstanceError> {
        if self.n() > limit {
            return Err(InstanceError::TooLarge {
                vertices: self.n(),
                limit,
            });
        }
        let oracle = BitOracle::new(self);
        let mut seen: HashSet<u64> = HashSet::new();
        let mut cuts: BTreeSet<u64> = BTreeSet::new();
        let mut stack = vec![0u64];
        while let Some(mask) = stack.pop() {
            if !seen.insert(mask) {
                continue;
            }
            match oracle.violating_path(mask) {
                None => {
                    cuts.insert(mask);
                }
                Some(path) => {
                    for v in path {
                        stack.push(mask | 1 << v);
                    }
                }
            }
        }
        let minimal: Vec<u64> = cuts
            .iter()
            .copied()
            .filter(|&mask| {
                (0..self.n())
                    .filter(|&v| mask & (1 << v) != 0)
                    .all(|v| !oracle.is_multicut(mask & !(1 << v)))
            })
            .collect();
        let mut out: Vec<Multicut> = minimal
            .iter()
            .map(|&mask| {
                let set: BTreeSet<usize> =
                    (0..self.n()).filter(|&v| mask & (1 << v) != 0).collect();
                self.multicut_from_indices(&set)
            })
            .collect();
        out.sort_by_key(|m| {
            (
                m.len(),
                m.members
                    .iter()
                    .map(|l| self.index[l])
                    .collect::<Vec<usize>>(),
            )
        });
        Ok(out)
    }

    /// A random inclusion-minimal multicut: start from the full vertex set
    /// and greedily drop vertices in a random order while the remainder still
    /// cuts. Works at any size; used to sample cuts past the exhaustive
    /// limit.
    pub fn random_minimal_multicut<R: Rng + ?Sized>(&self, rng: &mut R) -> Multicut {
        let mut cut: BTreeSet<usize> = (0..self.n()).collect();
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.shuffle(rng);
        for v in order {
            cut.remove(&v);
            if !self.is_multicut_indices(&cut) {
                cut.insert(v);
            }
        }
        self.multicut_from_indices(&cut)
    }
}

/// Bitmask reachability oracle for instances with at most 64 vertices; used
/// by the exhaustive multicut searches.
pub struct BitOracle {
    n: usize,
    adjacency: Vec<u64>,
    sources: Vec<u64>,
    sinks: Vec<u64>,
}

impl BitOracle {
    pub fn new(inst: &Instance) -> BitOracle {
        assert!(inst.n() <= 64, "bit oracle limited to 64 vertices");
        let to_mask = |s: &BTreeSet<usize>| s.iter().fold(0u64, |acc, &v| acc | 1 << v);
        BitOracle {
            n: inst.n(),
            adjacency: inst.adjacency.iter().map(to_mask).collect(),
            sources: inst
                .commodities
                .iter()
                .map(|c| to_mask(&inst.attach[&c.source]))
                .collect(),
            sinks: inst
                .commodities
                .iter()
                .map(|c| to_mask(&inst.attach[&c.sink]))
                .collect(),
        }
    }

    fn reach(&self, start: u64, removed: u64) -> u64 {
        let mut reach = start & !removed;
        loop {
            let mut next = reach;
            let mut frontier = reach;
            while frontier != 0 {
                let v = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                next |= self.adjacency[v] & !removed;
            }
            if next == reach {
                return reach;
            }
            reach = next;
        }
    }

    pub fn is_multicut(&self, removed: u64) -> bool {
        (0..self.sources.len()).all(|i| self.reach(self.sources[i], removed) & self.sinks[i] == 0)
    }

    /// A shortest surviving source-to-sink vertex path for some commodity,
    /// or `None` when `removed` is a multicut.
    pub fn violating_path(&self, removed: u64) -> Option<Vec<usize>> {
        for i in 0..self.sources.len() {
            let start = self.sources[i] & !removed;
            let goal = self.sinks[i] & !removed;
            if start & goal != 0 {
                return Some(vec![(start & goal).trailing_zeros() as usize]);
            }
            let mut parent: Vec<Option<usize>> = vec![None; self.n];
            let mut seen = start;
            let mut queue: VecDeque<usize> = (0..self.n).filter(|&v| start & 1 << v != 0).collect();
            while let Some(v) = queue.pop_front() {
                let mut nbrs = self.adjacency[v] & !removed & !seen;
                while nbrs != 0 {
                    let w = nbrs.trailing_zeros() as usize;
                    nbrs &= nbrs - 1;
                    seen |= 1 << w;
                    parent[w] = Some(v);
                    if goal & 1 << w != 0 {
                        let mut path = vec![w];
                        let mut cur = w;
                        while let Some(p) = parent[cur] {
                            path.push(p);
                            cur = p;
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(w);
                }
            }
        }
        None
    }
}

/// Strong product of two instances: vertex pairs (first factor major),
/// adjacency when both coordinates are equal or adjacent (excluding the equal
/// pair), concatenated commodities, and attach sets crossed with the other
/// factor's full vertex set.
///
/// # Errors
///
/// The factors' terminal id sets must be disjoint.
pub fn strong_product(n1: &Instance, n2: &Instance) -> Result<Instance, InstanceError> {
    for id in n1.attach.keys() {
        if n2.attach.contains_key(id) {
            return Err(InstanceError::TerminalCollision(id.clone()));
        }
    }
    let mut vertices = Vec::with_capacity(n1.n() * n2.n());
    for u in &n1.vertices {
        for v in &n2.vertices {
            vertices.push(Label::pair(u.clone(), v.clone()));
        }
    }
    let joint = |i: usize| (i / n2.n(), i % n2.n());
    let mut edges = Vec::new();
    for i in 0..vertices.len() {
        let (u1, v1) = joint(i);
        for j in i + 1..vertices.len() {
            let (u2, v2) = joint(j);
            let first = u1 == u2 || n1.adjacent(u1, u2);
            let second = v1 == v2 || n2.adjacent(v1, v2);
            if first && second {
                edges.push((vertices[i].clone(), vertices[j].clone()));
            }
        }
    }
    let mut commodities = n1.commodities.clone();
    commodities.extend(n2.commodities.iter().cloned());
    let mut attach: BTreeMap<String, Vec<Label>> = BTreeMap::new();
    for (id, set) in &n1.attach {
        let mut out = Vec::new();
        for &u in set {
            for v in 0..n2.n() {
                out.push(vertices[u * n2.n() + v].clone());
            }
        }
        attach.insert(id.clone(), out);
    }
    for (id, set) in &n2.attach {
        let mut out = Vec::new();
        for u in 0..n1.n() {
            for &v in set {
                out.push(vertices[u * n2.n() + v].clone());
            }
        }
        attach.insert(id.clone(), out);
    }
    Instance::new(vertices, edges, commodities, attach)
}
