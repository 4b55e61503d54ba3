//! Linear network codes on instances: a prime field, per-source message
//! rates, a vertex ordering, and a coding matrix with one row per vertex and
//! one column per message.
//!
//! Three checks matter. *Validity*: every vertex can produce its transmission
//! from strictly-earlier neighbors plus its own source inputs. *Decodability*:
//! every message outside a fixed set is recovered at its paired sink from the
//! sink's attach set. *Certifiability*: encoder supports can be confined to
//! cliques and the coding matrix restricted to any multicut keeps rank at
//! least the certified bound, which makes that bound a multicut lower bound.

use crate::field::PrimeField;
use crate::instance::{Instance, InstanceError, Multicut};
use crate::linalg::{self, FieldMatrix, Label, Pivot};
use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Exhaustive fixed-set search is refused beyond this many messages.
pub const FIXED_SET_SEARCH_LIMIT: usize = 16;

/// Message (s, j): the j-th input of source s, 1-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message {
    pub source: String,
    pub index: usize,
}

impl Message {
    pub fn new(source: impl Into<String>, index: usize) -> Message {
        Message {
            source: source.into(),
            index,
        }
    }

    pub fn label(&self) -> Label {
        Label::pair(
            Label::name(self.source.clone()),
            Label::Num(self.index as u64),
        )
    }

    pub fn from_label(l: &Label) -> Option<Message> {
        let (s, j) = l.as_pair()?;
        match (s, j) {
            (Label::Name(s), Label::Num(j)) if *j >= 1 => Some(Message {
                source: s.clone(),
                index: *j as usize,
            }),
            _ => None,
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Debug, Clone)]
pub enum CodeCheckError {
    Structure(String),
    UnknownMessage(Message),
    Invalid {
        vertex: Label,
    },
    EncoderViolation {
        vertex: Label,
        detail: String,
    },
    Undecodable {
        message: Message,
    },
    DecoderViolation {
        message: Message,
        detail: String,
    },
    CliqueViolation {
        vertex: Label,
        detail: String,
    },
    RankShortfall {
        cut: Multicut,
        rank: usize,
        bound: usize,
    },
    TooManyMessages {
        count: usize,
        limit: usize,
    },
    NoFixedSetWorks,
    Instance(InstanceError),
}

impl fmt::Display for CodeCheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeCheckError::Structure(s) => write!(f, "malformed code: {s}"),
            CodeCheckError::UnknownMessage(m) => write!(f, "unknown message {m}"),
            CodeCheckError::Invalid { vertex } => write!(
                f,
                "validity failed at vertex {vertex}: no encoder supported on its \
                 neighborhood produces this row while keeping foreign messages zero"
            ),
            CodeCheckError::EncoderViolation { vertex, detail } => {
                write!(f, "stored encoder for {vertex} violates validity: {detail}")
            }
            CodeCheckError::Undecodable { message } => write!(
                f,
                "decodability failed at message {message}: its sink cannot isolate it \
                 from the other non-fixed messages"
            ),
            CodeCheckError::DecoderViolation { message, detail } => {
                write!(
                    f,
                    "stored decoder for {message} violates decodability: {detail}"
                )
            }
            CodeCheckError::CliqueViolation { vertex, detail } => {
                write!(f, "clique condition failed at {vertex}: {detail}")
            }
            CodeCheckError::RankShortfall { cut, rank, bound } => write!(
                f,
                "certifiability failed: multicut {cut} gives rank {rank} < {bound}"
            ),
            CodeCheckError::TooManyMessages { count, limit } => write!(
                f,
                "fixed-set search over {count} messages exceeds the limit {limit}"
            ),
            CodeCheckError::NoFixedSetWorks => {
                write!(f, "no fixed set of any size makes this code decodable")
            }
            CodeCheckError::Instance(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CodeCheckError {}

impl From<InstanceError> for CodeCheckError {
    fn from(e: InstanceError) -> CodeCheckError {
        CodeCheckError::Instance(e)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: Vec<Label>,
    cols: Vec<Label>,
    entries: Vec<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
struct CodeJson {
    field: PrimeField,
    rates: BTreeMap<String, usize>,
    ordering: Vec<Label>,
    matrix: MatrixJson,
}

/// A linear network code: field, per-source rates, vertex ordering π, and the
/// coding matrix (rows labeled by vertices, columns by messages).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CodeJson", into = "CodeJson")]
pub struct LinearCode {
    field: PrimeField,
    rates: BTreeMap<String, usize>,
    ordering: Vec<Label>,
    matrix: FieldMatrix,
    messages: Vec<Message>,
}

impl TryFrom<CodeJson> for LinearCode {
    type Error = CodeCheckError;

    fn try_from(j: CodeJson) -> Result<LinearCode, CodeCheckError> {
        let matrix = FieldMatrix::from_rows(j.field, j.matrix.entries)
            .and_then(|m| m.with_labels(Some(j.matrix.rows), Some(j.matrix.cols)))
            .map_err(|e| CodeCheckError::Structure(e.to_string()))?;
        LinearCode::new(j.field, j.rates, j.ordering, matrix)
    }
}

impl From<LinearCode> for CodeJson {
    fn from(c: LinearCode) -> CodeJson {
        CodeJson {
            field: c.field,
            rates: c.rates,
            ordering: c.ordering,
            matrix: MatrixJson {
                rows: c.matrix.row_labels().unwrap().to_vec(),
                cols: c.matrix.col_labels().unwrap().to_vec(),
                entries: (0..c.matrix.rows())
                    .map(|i| c.matrix.row(i).to_vec())
                    .collect(),
            },
        }
    }
}

impl LinearCode {
    /// Structural construction; relationships to a specific instance are
    /// checked separately by [`LinearCode::validate_against`].
    pub fn new(
        field: PrimeField,
        rates: BTreeMap<String, usize>,
        ordering: Vec<Label>,
        matrix: FieldMatrix,
    ) -> Result<LinearCode, CodeCheckError> {
        let fail = |s: String| Err(CodeCheckError::Structure(s));
        if matrix.field() != field {
            return fail("matrix field differs from the declared field".into());
        }
        let Some(rows) = matrix.row_labels() else {
            return fail("matrix lacks row labels".into());
        };
        let Some(cols) = matrix.col_labels() else {
            return fail("matrix lacks column labels".into());
        };
        if ordering.len() != rows.len() {
            return fail("ordering length differs from the row count".into());
        }
        let row_set: BTreeSet<&Label> = rows.iter().collect();
        let ord_set: BTreeSet<&Label> = ordering.iter().collect();
        if ord_set.len() != ordering.len() || ord_set != row_set {
            return fail("ordering is not a permutation of the matrix rows".into());
        }
        let mut messages = Vec::with_capacity(cols.len());
        let mut counts: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for l in cols {
            let Some(m) = Message::from_label(l) else {
                return fail(format!("column label {l} is not a (source, index) pair"));
            };
            let Some(&rate) = rates.get(&m.source) else {
                return fail(format!("column {l} references a source with no rate"));
            };
            if m.index > rate {
                return fail(format!("column {l} exceeds the source rate {rate}"));
            }
            if !counts.entry(m.source.clone()).or_default().insert(m.index) {
                return fail(format!("duplicate column {l}"));
            }
            messages.push(m);
        }
        for (s, &r) in &rates {
            let have = counts.get(s).map_or(0, BTreeSet::len);
            if have != r {
                return fail(format!(
                    "source {s:?} declares rate {r} but has {have} columns"
                ));
            }
        }
        Ok(LinearCode {
            field,
            rates,
            ordering,
            matrix,
            messages,
        })
    }

    /// Checks that this code belongs to `inst`: matrix rows are exactly the
    /// instance vertices in instance order, and the rated sources are exactly
    /// the instance's sources.
    pub fn validate_against(&self, inst: &Instance) -> Result<(), CodeCheckError> {
        if self.matrix.row_labels().unwrap() != inst.vertices() {
            return Err(CodeCheckError::Structure(
                "matrix rows differ from the instance vertex list".into(),
            ));
        }
        let sources: BTreeSet<&str> = inst
            .commodities()
            .iter()
            .map(|c| c.source.as_str())
            .collect();
        let rated: BTreeSet<&str> = self.rates.keys().map(String::as_str).collect();
        if sources != rated {
            return Err(CodeCheckError::Structure(
                "rated sources differ from the instance sources".into(),
            ));
        }
        Ok(())
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rates(&self) -> &BTreeMap<String, usize> {
        &self.rates
    }

    pub fn ordering(&self) -> &[Label] {
        &self.ordering
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.matrix
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn message_count(&self) -> usize {
        self.messages.len()
    }

    pub fn message_column(&self, m: &Message) -> Option<usize> {
        self.messages.iter().position(|x| x == m)
    }

    /// π positions by vertex index: `positions[v] = k` means vertex `v` is
    /// the (k+1)-th in the ordering.
    pub fn positions(&self, inst: &Instance) -> Vec<usize> {
        let mut pos = vec![usize::MAX; inst.n()];
        for (k, l) in self.ordering.iter().enumerate() {
            let v = inst
                .vertex_index(l)
                .expect("ordering label missing from the instance");
            pos[v] = k;
        }
        pos
    }

    /// Column indices owned by messages of sources attached to vertex `v`
    /// (the vertex's own inputs).
    fn own_message_columns(&self, inst: &Instance, v: usize) -> BTreeSet<usize> {
        let own_sources: BTreeSet<&str> = inst
            .sources_attached_to(v)
            .into_iter()
            .map(|i| inst.commodities()[i].source.as_str())
            .collect();
        self.messages
            .iter()
            .enumerate()
            .filter(|(_, m)| own_sources.contains(m.source.as_str()))
            .map(|(j, _)| j)
            .collect()
    }
}

/// The closed in-neighborhood under the code's ordering: `v` together with
/// its earlier graph neighbors.
pub fn neighborhood(inst: &Instance, code: &LinearCode, v: usize) -> BTreeSet<usize> {
    let pos = code.positions(inst);
    let mut out: BTreeSet<usize> = inst
        .neighbors(v)
        .iter()
        .copied()
        .filter(|&u| pos[u] < pos[v])
        .collect();
    out.insert(v);
    out
}

/// Per-vertex encoder vectors, full length over the instance vertices.
pub type Encoders = BTreeMap<Label, Vec<u64>>;

/// Solves for an encoder at every vertex, restricting each vertex's support
/// to its closed earlier-neighborhood: the encoder must reproduce the
/// vertex's matrix row from rows in the support while sending every message
/// of a source not attached to the vertex to zero.
pub fn check_valid(inst: &Instance, code: &LinearCode) -> Result<Encoders, CodeCheckError> {
    check_valid_with(inst, code, &BTreeMap::new())
}

/// [`check_valid`] with per-vertex support overrides (missing vertices use
/// the default neighborhood). Passing cliques here checks the stricter
/// clique-restricted validity.
pub fn check_valid_with(
    inst: &Instance,
    code: &LinearCode,
    overrides: &BTreeMap<usize, BTreeSet<usize>>,
) -> Result<Encoders, CodeCheckError> {
    code.validate_against(inst)?;
    let mut encoders = Encoders::new();
    for l in code.ordering() {
        let v = inst.vertex_index(l).unwrap();
        let support: BTreeSet<usize> = match overrides.get(&v) {
            Some(s) => s.clone(),
            None => neighborhood(inst, code, v),
        };
        if !support.contains(&v) {
            return Err(CodeCheckError::CliqueViolation {
                vertex: l.clone(),
                detail: "support set does not contain the vertex itself".into(),
            });
        }
        let support: Vec<usize> = support.into_iter().collect();
        let own = code.own_message_columns(inst, v);
        let zero_cols: Vec<usize> = (0..code.message_count())
            .filter(|j| !own.contains(j))
            .collect();
        match linalg::find_support_vector(code.matrix(), &support, &zero_cols, Pivot::Row(v)) {
            Some(a) => {
                encoders.insert(l.clone(), a);
            }
            None => return Err(CodeCheckError::Invalid { vertex: l.clone() }),
        }
    }
    Ok(encoders)
}

/// Verifies stored encoders against the validity conditions with the given
/// per-vertex supports (no solving).
pub fn verify_encoders(
    inst: &Instance,
    code: &LinearCode,
    supports: &BTreeMap<usize, BTreeSet<usize>>,
    encoders: &Encoders,
) -> Result<(), CodeCheckError> {
    for l in code.ordering() {
        let v = inst.vertex_index(l).unwrap();
        let Some(a) = encoders.get(l) else {
            return Err(CodeCheckError::EncoderViolation {
                vertex: l.clone(),
                detail: "no encoder stored".into(),
            });
        };
        if a.len() != inst.n() {
            return Err(CodeCheckError::EncoderViolation {
                vertex: l.clone(),
                detail: "encoder length differs from the vertex count".into(),
            });
        }
        let support: BTreeSet<usize> = match supports.get(&v) {
            Some(s) => s.clone(),
            None => neighborhood(inst, code, v),
        };
        if a[v] == 0 {
            return Err(CodeCheckError::EncoderViolation {
                vertex: l.clone(),
                detail: "encoder does not use the vertex's own row".into(),
            });
        }
        if let Some(u) = linalg::support(a)
            .into_iter()
            .find(|u| !support.contains(u))
        {
            return Err(CodeCheckError::EncoderViolation {
                vertex: l.clone(),
                detail: format!(
                    "encoder uses {} outside the allowed support",
                    inst.vertex(u)
                ),
            });
        }
        let image = code.matrix().row_vec_mul(a);
        let own = code.own_message_columns(inst, v);
        if let Some(j) = linalg::support(&image)
            .into_iter()
            .find(|j| !own.contains(j))
        {
            return Err(CodeCheckError::EncoderViolation {
                vertex: l.clone(),
                detail: format!("encoder leaks onto foreign message {}", code.messages()[j]),
            });
        }
    }
    Ok(())
}

/// A fixed message set with decoders for everything outside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodabilityWitness {
    pub fixed: BTreeSet<Message>,
    pub decoders: BTreeMap<Message, Vec<u64>>,
    pub rate: usize,
}

impl DecodabilityWitness {
    /// Re-verifies a stored witness: rate arithmetic, decoder supports inside
    /// the paired sink's attach set, and each decoder isolating its message
    /// modulo the fixed set with a unit coefficient.
    pub fn verify(&self, inst: &Instance, code: &LinearCode) -> Result<(), CodeCheckError> {
        if self.rate + self.fixed.len() != code.message_count() {
            return Err(CodeCheckError::Structure(
                "rate plus fixed-set size differs from the message count".into(),
            ));
        }
        let sink_of: BTreeMap<&str, &str> = inst
            .commodities()
            .iter()
            .map(|c| (c.source.as_str(), c.sink.as_str()))
            .collect();
        for m in &self.fixed {
            if code.message_column(m).is_none() {
                return Err(CodeCheckError::UnknownMessage(m.clone()));
            }
        }
        for (j, m) in code.messages().iter().enumerate() {
            if self.fixed.contains(m) {
                continue;
            }
            let Some(d) = self.decoders.get(m) else {
                return Err(CodeCheckError::DecoderViolation {
                    message: m.clone(),
                    detail: "no decoder stored".into(),
                });
            };
            if d.len() != inst.n() {
                return Err(CodeCheckError::DecoderViolation {
                    message: m.clone(),
                    detail: "decoder length differs from the vertex count".into(),
                });
            }
            let sink = sink_of[m.source.as_str()];
            let allowed = inst.attach_set(sink)?;
            if let Some(u) = linalg::support(d)
                .into_iter()
                .find(|u| !allowed.contains(u))
            {
                return Err(CodeCheckError::DecoderViolation {
                    message: m.clone(),
                    detail: format!(
                        "decoder reads {} outside the sink's attach set",
                        inst.vertex(u)
                    ),
                });
            }
            let image = code.matrix().row_vec_mul(d);
            if image[j] == 0 {
                return Err(CodeCheckError::DecoderViolation {
                    message: m.clone(),
                    detail: "decoder has zero coefficient on its own message".into(),
                });
            }
            for j2 in linalg::support(&image) {
                let m2 = &code.messages()[j2];
                if j2 != j && !self.fixed.contains(m2) {
                    return Err(CodeCheckError::DecoderViolation {
                        message: m.clone(),
                        detail: format!("decoder mixes in non-fixed message {m2}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Solves for a decoder for every message outside `d_set`: supported on the
/// paired sink's attach set, isolating the message modulo `d_set`.
pub fn check_decodable(
    inst: &Instance,
    code: &LinearCode,
    d_set: &BTreeSet<Message>,
) -> Result<DecodabilityWitness, CodeCheckError> {
    code.validate_against(inst)?;
    let mut d_cols = BTreeSet::new();
    for m in d_set {
        match code.message_column(m) {
            Some(j) => {
                d_cols.insert(j);
            }
            None => return Err(CodeCheckError::UnknownMessage(m.clone())),
        }
    }
    let sink_of: BTreeMap<&str, &str> = inst
        .commodities()
        .iter()
        .map(|c| (c.source.as_str(), c.sink.as_str()))
        .collect();
    let mut decoders = BTreeMap::new();
    for (j, m) in code.messages().iter().enumerate() {
        if d_cols.contains(&j) {
            continue;
        }
        let sink = sink_of[m.source.as_str()];
        let support: Vec<usize> = inst.attach_set(sink)?.iter().copied().collect();
        let zero_cols: Vec<usize> = (0..code.message_count())
            .filter(|j2| *j2 != j && !d_cols.contains(j2))
            .collect();
        match linalg::find_support_vector(code.matrix(), &support, &zero_cols, Pivot::Col(j)) {
            Some(d) => {
                decoders.insert(m.clone(), d);
            }
            None => return Err(CodeCheckError::Undecodable { message: m.clone() }),
        }
    }
    Ok(DecodabilityWitness {
        fixed: d_set.clone(),
        decoders,
        rate: code.message_count() - d_set.len(),
    })
}

/// Smallest fixed set (by size, then lexicographically by column order) that
/// makes the code decodable, found exhaustively.
///
/// # Errors
///
/// Refuses codes with more than [`FIXED_SET_SEARCH_LIMIT`] messages.
pub fn search_min_fixed_set(
    inst: &Instance,
    code: &LinearCode,
) -> Result<DecodabilityWitness, CodeCheckError> {
    let total = code.message_count();
    if total > FIXED_SET_SEARCH_LIMIT {
        return Err(CodeCheckError::TooManyMessages {
            count: total,
            limit: FIXED_SET_SEARCH_LIMIT,
        });
    }
    for size in 0..=total {
        for combo in (0..total).combinations(size) {
            let d_set: BTreeSet<Message> =
                combo.iter().map(|&j| code.messages()[j].clone()).collect();
            if let Ok(witness) = check_decodable(inst, code, &d_set) {
                return Ok(witness);
            }
        }
    }
    Err(CodeCheckError::NoFixedSetWorks)
}

/// Clique-restricted encoders with a rank bound to hold on every multicut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifiabilityWitness {
    pub cliques: BTreeMap<Label, BTreeSet<Label>>,
    pub encoders: Encoders,
    pub bound: usize,
}

impl CertifiabilityWitness {
    /// Index-keyed clique sets.
    pub fn clique_indices(
        &self,
        inst: &Instance,
    ) -> Result<BTreeMap<usize, BTreeSet<usize>>, CodeCheckError> {
        let mut out = BTreeMap::new();
        for (l, k) in &self.cliques {
            let v = inst
                .vertex_index(l)
                .ok_or_else(|| CodeCheckError::Structure(format!("unknown clique vertex {l}")))?;
            let mut set = BTreeSet::new();
            for u in k {
                set.insert(inst.vertex_index(u).ok_or_else(|| {
                    CodeCheckError::Structure(format!("unknown clique member {u}"))
                })?);
            }
            out.insert(v, set);
        }
        Ok(out)
    }

    /// Verifies the clique shape (contains the vertex, members precede or
    /// equal it in the ordering, pairwise adjacent or equal) and the stored
    /// encoders' clique-restricted validity.
    pub fn verify_structure(
        &self,
        inst: &Instance,
        code: &LinearCode,
    ) -> Result<(), CodeCheckError> {
        let pos = code.positions(inst);
        let cliques = self.clique_indices(inst)?;
        for l in code.ordering() {
            let v = inst.vertex_index(l).unwrap();
            let Some(k) = cliques.get(&v) else {
                return Err(CodeCheckError::CliqueViolation {
                    vertex: l.clone(),
                    detail: "no clique stored".into(),
                });
            };
            if !k.contains(&v) {
                return Err(CodeCheckError::CliqueViolation {
                    vertex: l.clone(),
                    detail: "clique does not contain the vertex".into(),
                });
            }
            for &u in k {
                if pos[u] > pos[v] {
                    return Err(CodeCheckError::CliqueViolation {
                        vertex: l.clone(),
                        detail: format!("member {} comes after the vertex", inst.vertex(u)),
                    });
                }
            }
            for (&u, &w) in k.iter().tuple_combinations() {
                if !inst.adjacent(u, w) {
                    return Err(CodeCheckError::CliqueViolation {
                        vertex: l.clone(),
                        detail: format!(
                            "members {} and {} are not adjacent",
                            inst.vertex(u),
                            inst.vertex(w)
                        ),
                    });
                }
            }
        }
        verify_encoders(inst, code, &cliques, &self.encoders)
    }
}

/// How certifiability quantifies over multicuts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertMode {
    /// All inclusion-minimal multicuts (column supersets never lower rank).
    Exhaustive,
    /// `count` random minimal multicuts from the given seed: a sound
    /// spot-check, not a proof.
    Sampled { count: usize, seed: u64 },
}

/// Outcome of a certifiability check.
#[derive(Clone, Debug, Serialize)]
pub struct CertReport {
    pub cuts_checked: usize,
    pub min_rank_seen: Option<usize>,
    pub exhaustive: bool,
}

/// Verifies the witness structure, then the rank bound `rank(Lᵀ I_M) ≥ ρ`
/// over multicuts per `mode`. `cut_limit` caps the instance size for the
/// exhaustive enumeration.
pub fn check_certifiable(
    inst: &Instance,
    code: &LinearCode,
    witness: &CertifiabilityWitness,
    mode: CertMode,
    cut_limit: usize,
) -> Result<CertReport, CodeCheckError> {
    code.validate_against(inst)?;
    witness.verify_structure(inst, code)?;
    let rank_at = |cut: &BTreeSet<usize>| -> usize {
        let rows: Vec<usize> = cut.iter().copied().collect();
        code.matrix().select_rows(&rows).rank()
    };
    let mut checked = 0;
    let mut min_rank = None;
    let mut violation: Option<(Multicut, usize)> = None;
    let mut consider = |inst: &Instance, cut: BTreeSet<usize>| {
        let r = rank_at(&cut);
        checked += 1;
        min_rank = Some(min_rank.map_or(r, |m: usize| m.min(r)));
        if r < witness.bound && violation.is_none() {
            violation = Some((inst.multicut_from_indices(&cut), r));
        }
    };
    let exhaustive = match mode {
        CertMode::Exhaustive => {
            for cut in inst.minimal_multicuts(cut_limit)? {
                let idx: BTreeSet<usize> = cut
                    .members
                    .iter()
                    .map(|l| inst.vertex_index(l).unwrap())
                    .collect();
                consider(inst, idx);
            }
            true
        }
        CertMode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                let cut = inst.random_minimal_multicut(&mut rng);
                let idx: BTreeSet<usize> = cut
                    .members
                    .iter()
                    .map(|l| inst.vertex_index(l).unwrap())
                    .collect();
                consider(inst, idx);
            }
            false
        }
    };
    if let Some((cut, rank)) = violation {
        return Err(CodeCheckError::RankShortfall {
            cut,
            rank,
            bound: witness.bound,
        });
    }
    Ok(CertReport {
        cuts_checked: checked,
        min_rank_seen: min_rank,
        exhaustive,
    })
}

/// Builds the code that routes one unit message along each of the given
/// vertex-disjoint paths (path `i` serves commodity `i`): the coding matrix
/// has the indicator column of each path, the ordering walks each path in
/// turn, every non-initial path vertex subtracts its predecessor (a 2-clique),
/// and the certified bound is the number of paths.
///
/// Returns the code, the empty-fixed-set decodability witness (each sink
/// reads its path's last vertex), and the certifiability witness.
pub fn disjoint_path_code(
    inst: &Instance,
    paths: &[Vec<Label>],
    field: PrimeField,
) -> Result<(LinearCode, DecodabilityWitness, CertifiabilityWitness), CodeCheckError> {
    let fail = |s: String| Err(CodeCheckError::Structure(s));
    if paths.len() > inst.commodities().len() {
        return fail("more paths than commodities".into());
    }
    let mut resolved: Vec<Vec<usize>> = Vec::with_capacity(paths.len());
    let mut used = BTreeSet::new();
    for (i, path) in paths.iter().enumerate() {
        if path.is_empty() {
            return fail(format!("path {i} is empty"));
        }
        let mut idx = Vec::with_capacity(path.len());
        for l in path {
            let v = inst
                .vertex_index(l)
                .ok_or_else(|| CodeCheckError::Structure(format!("unknown path vertex {l}")))?;
            if !used.insert(v) {
                return fail(format!("paths are not vertex-disjoint at {l}"));
            }
            idx.push(v);
        }
        for w in idx.windows(2) {
            if !inst.adjacent(w[0], w[1]) {
                return fail(format!(
                    "path {i} jumps between non-adjacent {} and {}",
                    inst.vertex(w[0]),
                    inst.vertex(w[1])
                ));
            }
        }
        let c = &inst.commodities()[i];
        if !inst.attach_set(&c.source)?.contains(&idx[0]) {
            return fail(format!("path {i} does not start in the source attach set"));
        }
        if !inst.attach_set(&c.sink)?.contains(idx.last().unwrap()) {
            return fail(format!("path {i} does not end in the sink attach set"));
        }
        resolved.push(idx);
    }

    let mut ordering: Vec<Label> = Vec::with_capacity(inst.n());
    for idx in &resolved {
        ordering.extend(idx.iter().map(|&v| inst.vertex(v).clone()));
    }
    let mut off_path: Vec<Label> = inst
        .vertices()
        .iter()
        .filter(|l| !ordering.contains(l))
        .cloned()
        .collect();
    off_path.sort();
    ordering.extend(off_path);

    let mut rates = BTreeMap::new();
    for (i, c) in inst.commodities().iter().enumerate() {
        rates.insert(c.source.clone(), usize::from(i < paths.len()));
    }
    let mut matrix = FieldMatrix::zeros(field, inst.n(), resolved.len());
    for (i, idx) in resolved.iter().enumerate() {
        for &v in idx {
            matrix.set(v, i, 1);
        }
    }
    let col_labels: Vec<Label> = (0..resolved.len())
        .map(|i| Message::new(inst.commodities()[i].source.clone(), 1).label())
        .collect();
    let matrix = matrix
        .with_labels(Some(inst.vertices().to_vec()), Some(col_labels))
        .map_err(|e| CodeCheckError::Structure(e.to_string()))?;
    let code = LinearCode::new(field, rates, ordering, matrix)?;

    let mut encoders = Encoders::new();
    let mut cliques = BTreeMap::new();
    let mut on_path_pred: BTreeMap<usize, Option<usize>> = BTreeMap::new();
    for idx in &resolved {
        for (k, &v) in idx.iter().enumerate() {
            on_path_pred.insert(v, (k > 0).then(|| idx[k - 1]));
        }
    }
    for v in 0..inst.n() {
        let l = inst.vertex(v).clone();
        let mut a = vec![0; inst.n()];
        a[v] = 1;
        let mut k: BTreeSet<Label> = BTreeSet::from([l.clone()]);
        if let Some(Some(pred)) = on_path_pred.get(&v) {
            a[*pred] = field.neg(1);
            k.insert(inst.vertex(*pred).clone());
        }
        encoders.insert(l.clone(), a);
        cliques.insert(l, k);
    }
    let cert = CertifiabilityWitness {
        cliques,
        encoders,
        bound: resolved.len(),
    };

    let mut decoders = BTreeMap::new();
    for (i, idx) in resolved.iter().enumerate() {
        let mut d = vec![0; inst.n()];
        d[*idx.last().unwrap()] = 1;
        decoders.insert(Message::new(inst.commodities()[i].source.clone(), 1), d);
    }
    let decod = DecodabilityWitness {
        fixed: BTreeSet::new(),
        decoders,
        rate: resolved.len(),
    };
    Ok((code, decod, cert))
}

/// Per-node and per-message outcome of an end-to-end replay.
#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    /// (vertex, transmitted value) in instance vertex order.
    pub transmissions: Vec<(String, u64)>,
    pub node_results: Vec<(String, bool)>,
    pub message_results: Vec<(String, bool)>,
    pub all_passed: bool,
}

/// Replays one transmission schedule: computes every node's transmission
/// from the message vector, re-derives it the way the node would (own inputs
/// plus strictly earlier transmissions in its encoder support, scaled by the
/// encoder), and checks every sink recovers each non-fixed message through
/// its decoder given the fixed messages.
pub fn simulate(
    inst: &Instance,
    code: &LinearCode,
    encoders: &Encoders,
    witness: &DecodabilityWitness,
    messages: &BTreeMap<Message, u64>,
) -> Result<SimulationReport, CodeCheckError> {
    code.validate_against(inst)?;
    let f = code.field();
    let mut mu = vec![0; code.message_count()];
    for (j, m) in code.messages().iter().enumerate() {
        let Some(&value) = messages.get(m) else {
            return Err(CodeCheckError::Structure(format!(
                "message {m} has no assigned value"
            )));
        };
        f.check_element(value)
            .map_err(|e| CodeCheckError::Structure(e.to_string()))?;
        mu[j] = value;
    }
    if messages.len() != code.message_count() {
        return Err(CodeCheckError::Structure(
            "message assignment mentions unknown messages".into(),
        ));
    }

    // Ground truth: x = L · μ.
    let x: Vec<u64> = (0..inst.n())
        .map(|v| {
            code.matrix()
                .row(v)
                .iter()
                .zip(&mu)
                .fold(0, |acc, (&l, &m)| f.add(acc, f.mul(l, m)))
        })
        .collect();

    let pos = code.positions(inst);
    let mut node_results = Vec::with_capacity(inst.n());
    let mut all = true;
    for l in code.ordering() {
        let v = inst.vertex_index(l).unwrap();
        let Some(a) = encoders.get(l) else {
            return Err(CodeCheckError::EncoderViolation {
                vertex: l.clone(),
                detail: "no encoder stored".into(),
            });
        };
        let mut ok = a.len() == inst.n() && a[v] != 0;
        if ok {
            // Own source inputs: (a_v L) · μ, which validity confines to the
            // vertex's own messages.
            let image = code.matrix().row_vec_mul(a);
            let own_input = image
                .iter()
                .zip(&mu)
                .fold(0, |acc, (&c, &m)| f.add(acc, f.mul(c, m)));
            let mut derived = own_input;
            for u in linalg::support(a) {
                if u == v {
                    continue;
                }
                if pos[u] >= pos[v] {
                    ok = false;
                    break;
                }
                derived = f.sub(derived, f.mul(a[u], x[u]));
            }
            ok = ok && f.mul(f.inv(a[v]), derived) == x[v];
        }
        all &= ok;
        node_results.push((l.to_string(), ok));
    }

    let mut message_results = Vec::with_capacity(code.message_count());
    for (j, m) in code.messages().iter().enumerate() {
        if witness.fixed.contains(m) {
            continue;
        }
        let Some(d) = witness.decoders.get(m) else {
            return Err(CodeCheckError::DecoderViolation {
                message: m.clone(),
                detail: "no decoder stored".into(),
            });
        };
        let mut ok = d.len() == inst.n();
        if ok {
            let read = d
                .iter()
                .zip(&x)
                .fold(0, |acc, (&c, &xv)| f.add(acc, f.mul(c, xv)));
            let image = code.matrix().row_vec_mul(d);
            // Subtract the known fixed contributions, divide by the message's
            // own coefficient.
            let mut value = read;
            for j2 in linalg::support(&image) {
                if j2 != j {
                    let m2 = &code.messages()[j2];
                    if witness.fixed.contains(m2) {
                        value = f.sub(value, f.mul(image[j2], mu[j2]));
                    } else {
                        ok = false;
                    }
                }
            }
            ok = ok && image[j] != 0 && f.mul(f.inv(image[j]), value) == mu[j];
        }
        all &= ok;
        message_results.push((m.to_string(), ok));
    }
    Ok(SimulationReport {
        transmissions: inst
            .vertices()
            .iter()
            .zip(&x)
            .map(|(l, &v)| (l.to_string(), v))
            .collect(),
        node_results,
        message_results,
        all_passed: all,
    })
}
