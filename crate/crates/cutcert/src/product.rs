//! Composition of two coded instances over the strong product.
//!
//! Given bundles for N₁ and N₂ — each an instance, a code, a decodability
//! witness and a certifiability witness — this module constructs the product
//! code `[I ⊗ L₂ , L₁ ⊗ I]` on N₁⊠N₂ together with composed witnesses, and
//! certifies per-multicut rank bounds by assembling a matrix supported on the
//! cut whose image under Lᵀ is lower block triangular. The composed bound is
//!
//! ```text
//! ρ = n₁ρ₂ + n₂ρ₁ − ρ₁·|f₂(S₂)|
//! ```
//!
//! so folding a fixed coded instance with itself grows the certified multicut
//! bound multiplicatively while the graph grows as a power.

use crate::code::{
    check_certifiable, CertMode, CertReport, CertifiabilityWitness, CodeCheckError,
    DecodabilityWitness, Encoders, LinearCode, Message,
};
use crate::instance::{strong_product, Instance, InstanceError, Multicut};
use crate::linalg::{
    kron, kron_rows, lower_block_triangular_bound, solve_row_system, FieldMatrix, Label,
    LinalgError,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

#[derive(Debug)]
pub enum ProductError {
    FieldMismatch,
    NotAProduct,
    NotMulticut(Multicut),
    ProjectionFailed { vertex: Label, projected: Multicut },
    Correction { message: Message, detail: String },
    Structure(String),
    Code(CodeCheckError),
    Instance(InstanceError),
    Linalg(LinalgError),
}

impl fmt::Display for ProductError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProductError::FieldMismatch => write!(f, "factor codes use different fields"),
            ProductError::NotAProduct => {
                write!(f, "bundle does not carry the two factor bundles")
            }
            ProductError::NotMulticut(m) => write!(f, "{m} is not a multicut"),
            ProductError::ProjectionFailed { vertex, projected } => write!(
                f,
                "projection at {vertex} produced {projected}, which is not a factor multicut; \
                 the input witnesses are inconsistent"
            ),
            ProductError::Correction { message, detail } => write!(
                f,
                "decoder correction for {message} failed: {detail}; \
                 the input witnesses are inconsistent"
            ),
            ProductError::Structure(s) => write!(f, "{s}"),
            ProductError::Code(e) => write!(f, "{e}"),
            ProductError::Instance(e) => write!(f, "{e}"),
            ProductError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ProductError {}

impl From<CodeCheckError> for ProductError {
    fn from(e: CodeCheckError) -> ProductError {
        ProductError::Code(e)
    }
}

impl From<InstanceError> for ProductError {
    fn from(e: InstanceError) -> ProductError {
        ProductError::Instance(e)
    }
}

impl From<LinalgError> for ProductError {
    fn from(e: LinalgError) -> ProductError {
        ProductError::Linalg(e)
    }
}

/// An instance with a code and both witnesses, plus the factor bundles it
/// was composed from (empty for base constructions). Self-contained: every
/// level embeds its own instance, so a stored bundle can be re-verified
/// without further inputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BundleJson", into = "BundleJson")]
pub struct CodeBundle {
    pub name: String,
    pub instance: Instance,
    pub code: LinearCode,
    pub decodability: DecodabilityWitness,
    pub certifiability: CertifiabilityWitness,
    pub factors: Vec<CodeBundle>,
}

impl CodeBundle {
    pub fn base(
        name: impl Into<String>,
        instance: Instance,
        code: LinearCode,
        decodability: DecodabilityWitness,
        certifiability: CertifiabilityWitness,
    ) -> CodeBundle {
        CodeBundle {
            name: name.into(),
            instance,
            code,
            decodability,
            certifiability,
            factors: Vec::new(),
        }
    }

    /// Full re-verification of the stored witnesses against the embedded
    /// instance: code/instance agreement, decodability, and the rank bound
    /// over multicuts per `mode`.
    pub fn verify(&self, mode: CertMode, cut_limit: usize) -> Result<CertReport, ProductError> {
        self.code.validate_against(&self.instance)?;
        self.decodability.verify(&self.instance, &self.code)?;
        let report = check_certifiable(
            &self.instance,
            &self.code,
            &self.certifiability,
            mode,
            cut_limit,
        )?;
        Ok(report)
    }

    pub fn rate(&self) -> usize {
        self.decodability.rate
    }

    pub fn rho(&self) -> usize {
        self.certifiability.bound
    }
}

#[derive(Serialize, Deserialize)]
struct WitnessJson {
    fixed: Vec<String>,
    decoders: BTreeMap<String, Vec<u64>>,
    cliques: BTreeMap<String, Vec<String>>,
    encoders: BTreeMap<String, Vec<u64>>,
    rho: usize,
}

#[derive(Serialize, Deserialize)]
struct BundleJson {
    name: String,
    instance: Instance,
    code: LinearCode,
    witnesses: WitnessJson,
    factors: Vec<BundleJson>,
}

impl From<CodeBundle> for BundleJson {
    fn from(b: CodeBundle) -> BundleJson {
        BundleJson {
            name: b.name,
            instance: b.instance,
            code: b.code,
            witnesses: WitnessJson {
                fixed: b
                    .decodability
                    .fixed
                    .iter()
                    .map(Message::to_string)
                    .collect(),
                decoders: b
                    .decodability
                    .decoders
                    .into_iter()
                    .map(|(m, d)| (m.to_string(), d))
                    .collect(),
                cliques: b
                    .certifiability
                    .cliques
                    .into_iter()
                    .map(|(v, k)| (v.to_string(), k.iter().map(Label::to_string).collect()))
                    .collect(),
                encoders: b
                    .certifiability
                    .encoders
                    .into_iter()
                    .map(|(v, a)| (v.to_string(), a))
                    .collect(),
                rho: b.certifiability.bound,
            },
            factors: b.factors.into_iter().map(BundleJson::from).collect(),
        }
    }
}

fn parse_label(s: &str) -> Result<Label, String> {
    Label::from_str(s).map_err(|e| format!("bad label {s:?}: {e}"))
}

fn parse_message(s: &str) -> Result<Message, String> {
    Message::from_label(&parse_label(s)?).ok_or_else(|| format!("{s:?} is not a message label"))
}

impl TryFrom<BundleJson> for CodeBundle {
    type Error = String;

    fn try_from(j: BundleJson) -> Result<CodeBundle, String> {
        let mut fixed = BTreeSet::new();
        for s in &j.witnesses.fixed {
            fixed.insert(parse_message(s)?);
        }
        let mut decoders = BTreeMap::new();
        for (s, d) in j.witnesses.decoders {
            decoders.insert(parse_message(&s)?, d);
        }
        // The decodable rate is determined, not stored: message count minus
        // the fixed set.
        let rate = j
            .code
            .message_count()
            .checked_sub(fixed.len())
            .ok_or("fixed set larger than the message count")?;
        let mut cliques = BTreeMap::new();
        for (s, k) in j.witnesses.cliques {
            let members = k
                .iter()
                .map(|m| parse_label(m))
                .collect::<Result<BTreeSet<Label>, String>>()?;
            cliques.insert(parse_label(&s)?, members);
        }
        let mut encoders: Encoders = BTreeMap::new();
        for (s, a) in j.witnesses.encoders {
            encoders.insert(parse_label(&s)?, a);
        }
        let factors = j
            .factors
            .into_iter()
            .map(CodeBundle::try_from)
            .collect::<Result<Vec<CodeBundle>, String>>()?;
        Ok(CodeBundle {
            name: j.name,
            instance: j.instance,
            code: j.code,
            decodability: DecodabilityWitness {
                fixed,
                decoders,
                rate,
            },
            certifiability: CertifiabilityWitness {
                cliques,
                encoders,
                bound: j.witnesses.rho,
            },
            factors,
        })
    }
}

/// Shared bookkeeping for one composition: the product instance, the product
/// code, and the mapping between structural column positions and canonical
/// message labels.
///
/// Columns come in two blocks. Block 1 holds one column per (u ∈ V₁, column
/// of L₂) at position `u·m₂ + c₂`; block 2 one per (column of L₁, v ∈ V₂) at
/// position `n₁m₂ + c₁·n₂ + v`. Canonical labels number each source's columns
/// 1.. in column order.
struct Composition<'a> {
    b1: &'a CodeBundle,
    b2: &'a CodeBundle,
    prod: Instance,
    code: LinearCode,
    messages: Vec<Message>,
    n1: usize,
    n2: usize,
    m2: usize,
}

impl<'a> Composition<'a> {
    fn new(b1: &'a CodeBundle, b2: &'a CodeBundle) -> Result<Composition<'a>, ProductError> {
        if b1.code.field() != b2.code.field() {
            return Err(ProductError::FieldMismatch);
        }
        b1.code.validate_against(&b1.instance)?;
        b2.code.validate_against(&b2.instance)?;
        let field = b1.code.field();
        let prod = strong_product(&b1.instance, &b2.instance)?;
        let (n1, n2) = (b1.instance.n(), b2.instance.n());
        let (m1, m2) = (b1.code.message_count(), b2.code.message_count());

        let mut counter: BTreeMap<&str, usize> = BTreeMap::new();
        let mut messages = Vec::with_capacity(n1 * m2 + m1 * n2);
        let mut label_col = |source: &'a str| {
            let k = counter.entry(source).or_insert(0);
            *k += 1;
            Message::new(source, *k)
        };
        for _u in 0..n1 {
            for c2 in 0..m2 {
                messages.push(label_col(&b2.code.messages()[c2].source));
            }
        }
        for c1 in 0..m1 {
            for _v in 0..n2 {
                messages.push(label_col(&b1.code.messages()[c1].source));
            }
        }

        let mut l = FieldMatrix::hstack(&[
            &kron(&FieldMatrix::identity(field, n1), b2.code.matrix()),
            &kron(b1.code.matrix(), &FieldMatrix::identity(field, n2)),
        ]);
        l.set_row_labels(Some(prod.vertices().to_vec()))?;
        l.set_col_labels(Some(messages.iter().map(Message::label).collect()))?;

        let mut ordering = Vec::with_capacity(n1 * n2);
        for a in b1.code.ordering() {
            for b in b2.code.ordering() {
                ordering.push(Label::pair(a.clone(), b.clone()));
            }
        }
        let mut rates = BTreeMap::new();
        for (s, &r) in b1.code.rates() {
            rates.insert(s.clone(), r * n2);
        }
        for (s, &r) in b2.code.rates() {
            rates.insert(s.clone(), r * n1);
        }
        let code = LinearCode::new(field, rates, ordering, l)?;
        Ok(Composition {
            b1,
            b2,
            prod,
            code,
            messages,
            n1,
            n2,
            m2,
        })
    }

    fn col_block1(&self, u: usize, c2: usize) -> usize {
        u * self.m2 + c2
    }

    fn col_block2(&self, c1: usize, v: usize) -> usize {
        self.n1 * self.m2 + c1 * self.n2 + v
    }

    fn decodability(&self) -> Result<DecodabilityWitness, ProductError> {
        let field = self.code.field();
        let code1 = &self.b1.code;
        let code2 = &self.b2.code;
        let dec1 = &self.b1.decodability;
        let dec2 = &self.b2.decodability;
        let f2t = self.b2.instance.sink_attach_union();

        let mut fixed: BTreeSet<Message> = BTreeSet::new();
        for m1 in &dec1.fixed {
            let c1 = code1.message_column(m1).unwrap();
            for v in 0..self.n2 {
                fixed.insert(self.messages[self.col_block2(c1, v)].clone());
            }
        }
        for m2 in &dec2.fixed {
            let c2 = code2.message_column(m2).unwrap();
            for u in 0..self.n1 {
                fixed.insert(self.messages[self.col_block1(u, c2)].clone());
            }
        }
        for c1 in 0..code1.message_count() {
            for &v in &f2t {
                fixed.insert(self.messages[self.col_block2(c1, v)].clone());
            }
        }

        let unit = |n: usize, i: usize| {
            let mut e = vec![0u64; n];
            e[i] = 1;
            e
        };
        let mut decoders: BTreeMap<Message, Vec<u64>> = BTreeMap::new();

        // Block 1: a message (u, m₂) is read at the copy of f₂'s sink attach
        // inside column u, with the factor-2 decoder.
        let live2: Vec<usize> = (0..code2.message_count())
            .filter(|&c2| !dec2.fixed.contains(&code2.messages()[c2]))
            .collect();
        for &c2 in &live2 {
            let d2 = &dec2.decoders[&code2.messages()[c2]];
            for u in 0..self.n1 {
                let d = kron_rows(field, &unit(self.n1, u), d2);
                decoders.insert(self.messages[self.col_block1(u, c2)].clone(), d);
            }
        }

        // Block 2: start from d¹ ⊗ e_v, whose image also leaks into the
        // block-1 columns sitting at the factor-1 sink rows; cancel that leak
        // with the block-1 decoders for those rows, which only add fixed
        // columns to the image.
        let sink_of: BTreeMap<&str, &str> = self
            .b1
            .instance
            .commodities()
            .iter()
            .map(|c| (c.source.as_str(), c.sink.as_str()))
            .collect();
        for c1 in 0..code1.message_count() {
            let msg1 = &code1.messages()[c1];
            if dec1.fixed.contains(msg1) {
                continue;
            }
            let d1 = &dec1.decoders[msg1];
            let f1t: Vec<usize> = self
                .b1
                .instance
                .attach_set(sink_of[msg1.source.as_str()])?
                .iter()
                .copied()
                .collect();

            // Correction basis: block-1 decoders at sink rows, and the
            // block-1 columns they must cancel.
            let mut q_vectors: Vec<Vec<u64>> = Vec::new();
            let mut offending: Vec<usize> = Vec::new();
            for &u in &f1t {
                for &c2 in &live2 {
                    q_vectors.push(decoders[&self.messages[self.col_block1(u, c2)]].clone());
                    offending.push(self.col_block1(u, c2));
                }
            }
            let q_images: Vec<Vec<u64>> = q_vectors
                .iter()
                .map(|q| {
                    let img = self.code.matrix().row_vec_mul(q);
                    offending.iter().map(|&c| img[c]).collect()
                })
                .collect();
            let q_system = FieldMatrix::from_rows(field, q_images.clone())?;

            for v in 0..self.n2 {
                if f2t.contains(&v) {
                    continue;
                }
                let mut d = kron_rows(field, d1, &unit(self.n2, v));
                if !offending.is_empty() {
                    let img = self.code.matrix().row_vec_mul(&d);
                    let target: Vec<u64> = offending.iter().map(|&c| img[c]).collect();
                    let msg = self.messages[self.col_block2(c1, v)].clone();
                    let x = solve_row_system(&q_system, &target).ok_or_else(|| {
                        ProductError::Correction {
                            message: msg,
                            detail: "no combination of sink-row decoders cancels the leak".into(),
                        }
                    })?;
                    for (k, q) in q_vectors.iter().enumerate() {
                        if x[k] != 0 {
                            for (di, qi) in d.iter_mut().zip(q) {
                                *di = field.sub(*di, field.mul(x[k], *qi));
                            }
                        }
                    }
                }
                decoders.insert(self.messages[self.col_block2(c1, v)].clone(), d);
            }
        }

        let witness = DecodabilityWitness {
            rate: self.messages.len() - fixed.len(),
            fixed,
            decoders,
        };
        witness.verify(&self.prod, &self.code)?;
        let p1 = dec1.rate;
        let p2 = dec2.rate;
        let predicted = self.n1 * p2 + self.n2 * p1 - p1 * f2t.len();
        if witness.rate != predicted {
            return Err(ProductError::Structure(format!(
                "composed rate {} differs from the predicted {predicted}",
                witness.rate
            )));
        }
        Ok(witness)
    }

    fn certifiability(&self) -> Result<CertifiabilityWitness, ProductError> {
        let field = self.code.field();
        let cert1 = &self.b1.certifiability;
        let cert2 = &self.b2.certifiability;
        let mut cliques: BTreeMap<Label, BTreeSet<Label>> = BTreeMap::new();
        let mut encoders: Encoders = BTreeMap::new();
        for u in 0..self.n1 {
            let lu = self.b1.instance.vertex(u);
            let (k1, a1) = (&cert1.cliques[lu], &cert1.encoders[lu]);
            for v in 0..self.n2 {
                let lv = self.b2.instance.vertex(v);
                let (k2, a2) = (&cert2.cliques[lv], &cert2.encoders[lv]);
                let pair = Label::pair(lu.clone(), lv.clone());
                let members = k1
                    .iter()
                    .flat_map(|a| k2.iter().map(move |b| Label::pair(a.clone(), b.clone())))
                    .collect();
                cliques.insert(pair.clone(), members);
                encoders.insert(pair, kron_rows(field, a1, a2));
            }
        }
        let f2s = self.b2.instance.source_attach_union().len();
        let bound = self.n1 * cert2.bound + cert1.bound * (self.n2 - f2s);
        let witness = CertifiabilityWitness {
            cliques,
            encoders,
            bound,
        };
        witness.verify_structure(&self.prod, &self.code)?;
        Ok(witness)
    }
}

/// The code `[I ⊗ L₂ , L₁ ⊗ I]` on N₁⊠N₂: rates r₁(s)·n₂ for factor-1
/// sources and r₂(s)·n₁ for factor-2 sources, ordering positions
/// n₂(π₁(u)−1) + π₂(v).
pub fn product_code(b1: &CodeBundle, b2: &CodeBundle) -> Result<LinearCode, ProductError> {
    Ok(Composition::new(b1, b2)?.code)
}

/// Composed decodability: fixes factor-fixed columns in both blocks plus
/// every block-2 column at a factor-2 sink row; decodes block-1 messages
/// with factor-2 decoders and block-2 messages with leak-corrected factor-1
/// decoders. Rate n₁p₂ + n₂p₁ − p₁·|f₂(T₂)|.
pub fn product_decodability(
    b1: &CodeBundle,
    b2: &CodeBundle,
) -> Result<DecodabilityWitness, ProductError> {
    Composition::new(b1, b2)?.decodability()
}

/// Composed certifiability: cliques K₁(u)×K₂(v), encoders a_u ⊗ a_v, bound
/// n₁ρ₂ + n₂ρ₁ − ρ₁·|f₂(S₂)|.
pub fn product_certifiability(
    b1: &CodeBundle,
    b2: &CodeBundle,
) -> Result<CertifiabilityWitness, ProductError> {
    Composition::new(b1, b2)?.certifiability()
}

/// Composes two bundles into the product bundle, carrying both factors.
pub fn product_bundle(
    name: impl Into<String>,
    b1: &CodeBundle,
    b2: &CodeBundle,
) -> Result<CodeBundle, ProductError> {
    let comp = Composition::new(b1, b2)?;
    let decodability = comp.decodability()?;
    let certifiability = comp.certifiability()?;
    Ok(CodeBundle {
        name: name.into(),
        instance: comp.prod,
        code: comp.code,
        decodability,
        certifiability,
        factors: vec![b1.clone(), b2.clone()],
    })
}

/// Projects a multicut of the product onto the second factor at `u`: the set
/// M_u = {v ∈ V₂ : K₁(u)×{v} ⊆ M}, which is always a multicut of N₂ when
/// K₁(u) is a clique containing u that supports a valid encoder.
///
/// # Errors
///
/// `NotMulticut` when `m` is not a multicut of `prod`; `ProjectionFailed`
/// when the projection is not a multicut of `n2` (impossible for cliques
/// from a genuine certifiability witness, so it signals corrupt inputs).
pub fn project_multicut(
    prod: &Instance,
    m: &Multicut,
    u: &Label,
    k1u: &BTreeSet<Label>,
    n2: &Instance,
) -> Result<Multicut, ProductError> {
    if !k1u.contains(u) {
        return Err(ProductError::Structure(format!(
            "the clique at {u} does not contain it"
        )));
    }
    for w in k1u {
        for v in n2.vertices() {
            if prod
                .vertex_index(&Label::pair(w.clone(), v.clone()))
                .is_none()
            {
                return Err(ProductError::Structure(format!(
                    "({w},{v}) is not a product vertex"
                )));
            }
        }
    }
    if !prod.is_multicut(m)? {
        return Err(ProductError::NotMulticut(m.clone()));
    }
    let members: BTreeSet<Label> = n2
        .vertices()
        .iter()
        .filter(|v| {
            k1u.iter()
                .all(|w| m.members.contains(&Label::pair(w.clone(), (*v).clone())))
        })
        .cloned()
        .collect();
    let mu = Multicut::new(members);
    if !n2.is_multicut(&mu)? {
        return Err(ProductError::ProjectionFailed {
            vertex: u.clone(),
            projected: mu,
        });
    }
    Ok(mu)
}

/// Mirror of [`project_multicut`] onto the first factor at `v ∈ V₂`:
/// M_v = {u ∈ V₁ : {u}×K₂(v) ⊆ M}, a multicut of N₁.
pub fn project_multicut_left(
    prod: &Instance,
    m: &Multicut,
    v: &Label,
    k2v: &BTreeSet<Label>,
    n1: &Instance,
) -> Result<Multicut, ProductError> {
    if !k2v.contains(v) {
        return Err(ProductError::Structure(format!(
            "the clique at {v} does not contain it"
        )));
    }
    for w in k2v {
        for u in n1.vertices() {
            if prod
                .vertex_index(&Label::pair(u.clone(), w.clone()))
                .is_none()
            {
                return Err(ProductError::Structure(format!(
                    "({u},{w}) is not a product vertex"
                )));
            }
        }
    }
    if !prod.is_multicut(m)? {
        return Err(ProductError::NotMulticut(m.clone()));
    }
    let members: BTreeSet<Label> = n1
        .vertices()
        .iter()
        .filter(|u| {
            k2v.iter()
                .all(|w| m.members.contains(&Label::pair((*u).clone(), w.clone())))
        })
        .cloned()
        .collect();
    let mv = Multicut::new(members);
    if !n1.is_multicut(&mv)? {
        return Err(ProductError::ProjectionFailed {
            vertex: v.clone(),
            projected: mv,
        });
    }
    Ok(mv)
}

/// A per-multicut rank certificate: a matrix `b` supported on the cut's rows
/// whose image `Lᵀb` has rank at least `diagonal_bound`, so
/// `|M| ≥ rank(Lᵀ I_M) ≥ rank(Lᵀ b) ≥ diagonal_bound ≥ ρ`.
pub struct RankCertificate {
    pub b: FieldMatrix,
    /// rank(Lᵀ·b), the certified lower bound on rank(Lᵀ I_M).
    pub rank_bound: usize,
    /// Sum of the diagonal block ranks of the aligned triangular form of
    /// Lᵀ·b; at most `rank_bound`, and at least ρ.
    pub diagonal_bound: usize,
}

/// Builds the rank certificate for one multicut of a product bundle, from
/// the factor witnesses alone.
///
/// Columns of `b` come from the factor encoders crossed with projected cuts:
/// a block a_uᵀ ⊗ I_{M_u} for each u ∈ V₁ and I_{M_v} ⊗ a_vᵀ for each
/// v ∈ V₂ outside f₂(S₂). Reading Lᵀ·b with both blocks ordered by falling
/// factor positions puts factor-rank blocks on the diagonal and zeros
/// strictly above it, which is verified structurally rather than assumed.
pub fn build_b_certificate(
    bundle: &CodeBundle,
    m: &Multicut,
) -> Result<RankCertificate, ProductError> {
    let [b1, b2] = bundle.factors.as_slice() else {
        return Err(ProductError::NotAProduct);
    };
    let prod = &bundle.instance;
    let field = bundle.code.field();
    let (n1, n2) = (b1.instance.n(), b2.instance.n());
    let (m1, m2) = (b1.code.message_count(), b2.code.message_count());
    if !prod.is_multicut(m)? {
        return Err(ProductError::NotMulticut(m.clone()));
    }
    let f2s = b2.instance.source_attach_union();

    // Factor-1 blocks in falling position order, then factor-2 blocks.
    let mut blocks: Vec<FieldMatrix> = Vec::new();
    let mut row_sizes: Vec<usize> = Vec::new();
    let mut col_sizes: Vec<usize> = Vec::new();
    let mut aligned_rows: Vec<usize> = Vec::new();

    for lu in b1.code.ordering().iter().rev() {
        let u = b1.instance.vertex_index(lu).unwrap();
        let k1 = &b1.certifiability.cliques[lu];
        let mu = project_multicut(prod, m, lu, k1, &b2.instance)?;
        let a_u = &b1.certifiability.encoders[lu];
        let cut_cols: Vec<usize> = mu
            .members
            .iter()
            .map(|v| b2.instance.vertex_index(v).unwrap())
            .collect();
        let selector = FieldMatrix::identity(field, n2).select_cols(&cut_cols);
        let a_col = FieldMatrix::from_rows(field, a_u.iter().map(|&x| vec![x]).collect())?;
        blocks.push(kron(&a_col, &selector));
        col_sizes.push(cut_cols.len());
        row_sizes.push(m2);
        aligned_rows.extend((0..m2).map(|c2| u * m2 + c2));
    }
    for lv in b2.code.ordering().iter().rev() {
        let v = b2.instance.vertex_index(lv).unwrap();
        if f2s.contains(&v) {
            continue;
        }
        let k2 = &b2.certifiability.cliques[lv];
        let mv = project_multicut_left(prod, m, lv, k2, &b1.instance)?;
        let a_v = &b2.certifiability.encoders[lv];
        let cut_cols: Vec<usize> = mv
            .members
            .iter()
            .map(|u| b1.instance.vertex_index(u).unwrap())
            .collect();
        let selector = FieldMatrix::identity(field, n1).select_cols(&cut_cols);
        let a_col = FieldMatrix::from_rows(field, a_v.iter().map(|&x| vec![x]).collect())?;
        blocks.push(kron(&selector, &a_col));
        col_sizes.push(cut_cols.len());
        row_sizes.push(m1);
        aligned_rows.extend((0..m1).map(|c1| n1 * m2 + c1 * n2 + v));
    }

    let refs: Vec<&FieldMatrix> = blocks.iter().collect();
    let mut b = FieldMatrix::hstack(&refs);
    b.set_row_labels(Some(prod.vertices().to_vec()))?;

    // Every nonzero row of b must be a cut member: b's columns lie in the
    // column space of the cut-selector.
    for i in 0..b.rows() {
        if !b.row(i).iter().all(|&x| x == 0) && !m.members.contains(prod.vertex(i)) {
            return Err(ProductError::Structure(format!(
                "certificate touches {}, which is outside the multicut",
                prod.vertex(i)
            )));
        }
    }

    let ltb = bundle.code.matrix().transpose().matmul(&b);
    let aligned = ltb.select_rows(&aligned_rows);
    let diagonal_bound = lower_block_triangular_bound(&aligned, &row_sizes, &col_sizes)?;
    let rank_bound = ltb.rank();
    assert!(
        rank_bound >= diagonal_bound,
        "a submatrix cannot out-rank the full matrix"
    );
    let rho = bundle.certifiability.bound;
    if diagonal_bound < rho {
        return Err(ProductError::Structure(format!(
            "certificate bound {diagonal_bound} falls below the composed bound {rho}; \
             a factor witness is dishonest"
        )));
    }
    Ok(RankCertificate {
        b,
        rank_bound,
        diagonal_bound,
    })
}
