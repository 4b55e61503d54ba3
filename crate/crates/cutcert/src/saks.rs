//! End-to-end driver for the path-power family: build the k-fold strong
//! power of an end-terminated path, compose the code bundle, and verify that
//! the certified lower bound meets the sink-attach upper bound, pinning the
//! minimum multicut at exactly n^k − (n−1)^k. A second driver generalizes
//! the base to any instance carrying r disjoint source-to-sink paths with
//! |f(S)| = |f(T)| = r, where the pinned value is n^k − (n−r)^k.

use crate::code::{check_certifiable, check_valid, disjoint_path_code, CertMode, CodeCheckError};
use crate::field::PrimeField;
use crate::flow::{max_flow_exact_auto, rational_string, FlowError, Rational, DEFAULT_PATH_BUDGET};
use crate::instance::{Instance, InstanceError, Multicut, BRUTE_FORCE_VERTEX_LIMIT};
use crate::linalg::Label;
use crate::product::{build_b_certificate, product_bundle, CodeBundle, ProductError};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;

/// Largest product the builders will construct (vertex count).
pub const CONSTRUCTION_SIZE_LIMIT: usize = 64;

/// Instance size up to which the automatic mode checks certifiability
/// against every minimal multicut rather than a random sample.
pub const EXHAUSTIVE_CERT_LIMIT: usize = 12;

#[derive(Debug)]
pub enum SaksError {
    BadParams(String),
    SizeBudget { required: usize, limit: usize },
    Product(ProductError),
    Code(CodeCheckError),
    Instance(InstanceError),
    Flow(FlowError),
}

impl fmt::Display for SaksError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SaksError::BadParams(s) => write!(f, "{s}"),
            SaksError::SizeBudget { required, limit } => {
                write!(
                    f,
                    "construction needs {required} vertices, over the budget of {limit}"
                )
            }
            SaksError::Product(e) => write!(f, "{e}"),
            SaksError::Code(e) => write!(f, "{e}"),
            SaksError::Instance(e) => write!(f, "{e}"),
            SaksError::Flow(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SaksError {}

impl From<ProductError> for SaksError {
    fn from(e: ProductError) -> SaksError {
        SaksError::Product(e)
    }
}

impl From<InstanceError> for SaksError {
    fn from(e: InstanceError) -> SaksError {
        SaksError::Instance(e)
    }
}

impl From<CodeCheckError> for SaksError {
    fn from(e: CodeCheckError) -> SaksError {
        SaksError::Code(e)
    }
}

/// The length-n path p1…pn with one commodity attached at its endpoints:
/// f(s) = {p1}, f(t) = {pn}.
pub fn path_instance(n: usize) -> Result<Instance, SaksError> {
    path_copy(n, "s", "t")
}

fn path_copy(n: usize, source: &str, sink: &str) -> Result<Instance, SaksError> {
    if n < 2 {
        return Err(SaksError::BadParams(format!(
            "a path instance needs at least 2 vertices, got {n}"
        )));
    }
    let vertices: Vec<Label> = (1..=n).map(|i| Label::name(format!("p{i}"))).collect();
    let edges: Vec<(Label, Label)> = vertices
        .windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect();
    let commodities = vec![crate::instance::Commodity {
        source: source.to_string(),
        sink: sink.to_string(),
    }];
    let attach = BTreeMap::from([
        (source.to_string(), vec![vertices[0].clone()]),
        (sink.to_string(), vec![vertices[n - 1].clone()]),
    ]);
    Ok(Instance::new(vertices, edges, commodities, attach)?)
}

/// The path instance carrying its one-path code: rate 1, bound 1. Terminal
/// ids are suffixed with the copy number so k copies stay disjoint.
pub fn path_bundle(n: usize, copy: usize) -> Result<CodeBundle, SaksError> {
    let inst = path_copy(n, &format!("s{copy}"), &format!("t{copy}"))?;
    let path: Vec<Label> = (1..=n).map(|i| Label::name(format!("p{i}"))).collect();
    let (code, dec, cert) = disjoint_path_code(&inst, &[path], PrimeField::gf2())?;
    Ok(CodeBundle::base(
        format!("path{n}-copy{copy}"),
        inst,
        code,
        dec,
        cert,
    ))
}

fn checked_power(n: usize, k: usize) -> Result<usize, SaksError> {
    let size = n
        .checked_pow(u32::try_from(k).unwrap_or(u32::MAX))
        .unwrap_or(usize::MAX);
    if size > CONSTRUCTION_SIZE_LIMIT {
        return Err(SaksError::SizeBudget {
            required: size,
            limit: CONSTRUCTION_SIZE_LIMIT,
        });
    }
    Ok(size)
}

/// The k-fold strong power of the path instance, folded left with each new
/// path copy as the second factor, with the full composed bundle. Both the
/// decodable rate and the certified bound come out to n^k − (n−1)^k.
pub fn saks_bundle(n: usize, k: usize) -> Result<CodeBundle, SaksError> {
    if k < 1 {
        return Err(SaksError::BadParams(format!(
            "the power must be at least 1, got {k}"
        )));
    }
    checked_power(n, k)?;
    let mut acc = path_bundle(n, 1)?;
    for j in 2..=k {
        let fresh = path_bundle(n, j)?;
        acc = product_bundle(format!("path{n}-power{j}"), &acc, &fresh)?;
    }
    Ok(acc)
}

/// How verification quantifies certifiability over multicuts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertChoice {
    /// Exhaustive up to [`EXHAUSTIVE_CERT_LIMIT`] vertices, sampled beyond.
    Auto,
    Exhaustive,
    Sampled {
        count: usize,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug)]
pub struct SaksOptions {
    pub cert: CertChoice,
    /// Try the exhaustive minimum multicut when the instance is within
    /// [`BRUTE_FORCE_VERTEX_LIMIT`] vertices.
    pub brute_force: bool,
    /// Path budget for the exact flow solve; `None` skips the flow entirely.
    pub flow_budget: Option<usize>,
}

impl Default for SaksOptions {
    fn default() -> SaksOptions {
        SaksOptions {
            cert: CertChoice::Auto,
            brute_force: true,
            flow_budget: Some(DEFAULT_PATH_BUDGET),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

/// Everything one verification run established, with one named entry per
/// sub-check. When every entry passes, the family's minimum multicut equals
/// `predicted` exactly: the certified bound matches the sink-attach cut.
#[derive(Clone, Debug)]
pub struct SaksReport {
    pub n: usize,
    pub k: usize,
    /// Disjoint paths in the base instance (1 for the plain path family).
    pub r: usize,
    pub predicted: usize,
    pub coding_rate: usize,
    pub rho: usize,
    pub upper_bound_cut: Multicut,
    pub brute_force_cut: Option<usize>,
    pub flow_value: Option<Rational>,
    pub flow_exact: Option<bool>,
    pub checks: Vec<CheckEntry>,
}

impl SaksReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    /// Aligned two-column text rendering.
    pub fn render_table(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("n".into(), self.n.to_string()),
            ("k".into(), self.k.to_string()),
            ("base paths r".into(), self.r.to_string()),
            ("predicted value".into(), self.predicted.to_string()),
            ("coding rate".into(), self.coding_rate.to_string()),
            ("certified bound".into(), self.rho.to_string()),
            (
                "sink-attach cut size".into(),
                self.upper_bound_cut.len().to_string(),
            ),
            (
                "brute-force min cut".into(),
                self.brute_force_cut
                    .map_or("not computed".into(), |c| c.to_string()),
            ),
            (
                "max flow".into(),
                match (&self.flow_value, self.flow_exact) {
                    (Some(v), Some(true)) => format!("{} (exact)", rational_string(v)),
                    (Some(v), _) => format!("{} (lower bound)", rational_string(v)),
                    _ => "not computed".into(),
                },
            ),
        ];
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skipped => "skipped",
            };
            let text = if c.detail.is_empty() {
                status.to_string()
            } else {
                format!("{status} ({})", c.detail)
            };
            rows.push((format!("check: {}", c.name), text));
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:<width$}  {v}\n"));
        }
        out
    }
}

impl Serialize for SaksReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("SaksReport", 11)?;
        s.serialize_field("n", &self.n)?;
        s.serialize_field("k", &self.k)?;
        s.serialize_field("r", &self.r)?;
        s.serialize_field("predicted", &self.predicted)?;
        s.serialize_field("coding_rate", &self.coding_rate)?;
        s.serialize_field("rho", &self.rho)?;
        s.serialize_field("upper_bound_cut", &self.upper_bound_cut)?;
        s.serialize_field("upper_bound_size", &self.upper_bound_cut.len())?;
        s.serialize_field("brute_force_cut", &self.brute_force_cut)?;
        s.serialize_field("flow_value", &self.flow_value.as_ref().map(rational_string))?;
        s.serialize_field("flow_exact", &self.flow_exact)?;
        s.serialize_field("checks", &self.checks)?;
        s.end()
    }
}

/// Verifies the k-fold path power end to end and reports every sub-check:
/// witness validity, the rate and bound formulas, certifiability over
/// multicuts, the sink-attach cut as a matching upper bound, the per-cut
/// rank certificate, the optional brute-force cut, and the exact flow with
/// its strict gap below the coding rate for k ≥ 2.
pub fn verify_corollary1(n: usize, k: usize, opts: &SaksOptions) -> Result<SaksReport, SaksError> {
    let bundle = saks_bundle(n, k)?;
    let predicted = checked_power(n, k)? - (n - 1).pow(u32::try_from(k).unwrap());
    assess(&bundle, n, k, 1, predicted, opts, true)
}

fn relabel_terminals(inst: &Instance, suffix: &str) -> Result<Instance, SaksError> {
    let vertices = inst.vertices().to_vec();
    let edges: Vec<(Label, Label)> = inst
        .edges()
        .map(|(i, j)| (inst.vertex(i).clone(), inst.vertex(j).clone()))
        .collect();
    let commodities: Vec<crate::instance::Commodity> = inst
        .commodities()
        .iter()
        .map(|c| crate::instance::Commodity {
            source: format!("{}{suffix}", c.source),
            sink: format!("{}{suffix}", c.sink),
        })
        .collect();
    let mut attach: BTreeMap<String, Vec<Label>> = BTreeMap::new();
    for id in inst.terminal_ids() {
        let set = inst.attach_set(id)?;
        attach.insert(
            format!("{id}{suffix}"),
            set.iter().map(|&v| inst.vertex(v).clone()).collect(),
        );
    }
    Ok(Instance::new(vertices, edges, commodities, attach)?)
}

/// Generalized driver: the base instance carries `r` disjoint source-to-sink
/// paths with |f(S)| = |f(T)| = r, and the k-fold power pins the minimum
/// multicut at n^k − (n−r)^k. With r = 1 on a bare path this coincides with
/// [`verify_corollary1`].
pub fn verify_corollary2(
    inst: &Instance,
    paths: &[Vec<Label>],
    k: usize,
    opts: &SaksOptions,
) -> Result<SaksReport, SaksError> {
    if k < 1 {
        return Err(SaksError::BadParams(format!(
            "the power must be at least 1, got {k}"
        )));
    }
    let r = paths.len();
    if r == 0 {
        return Err(SaksError::BadParams("at least one path is required".into()));
    }
    let n = inst.n();
    let fs = inst.source_attach_union().len();
    let ft = inst.sink_attach_union().len();
    if fs != r || ft != r {
        return Err(SaksError::BadParams(format!(
            "the source and sink attach unions have sizes {fs} and {ft}; \
             both must equal the path count {r}"
        )));
    }
    checked_power(n, k)?;
    let base = |copy: usize| -> Result<CodeBundle, SaksError> {
        let relabeled = relabel_terminals(inst, &format!("_c{copy}"))?;
        let (code, dec, cert) = disjoint_path_code(&relabeled, paths, PrimeField::gf2())?;
        Ok(CodeBundle::base(
            format!("base-copy{copy}"),
            relabeled,
            code,
            dec,
            cert,
        ))
    };
    let mut acc = base(1)?;
    for j in 2..=k {
        acc = product_bundle(format!("base-power{j}"), &acc, &base(j)?)?;
    }
    let predicted = checked_power(n, k)? - (n - r).pow(u32::try_from(k).unwrap());
    assess(&acc, n, k, r, predicted, opts, false)
}

fn assess(
    bundle: &CodeBundle,
    n: usize,
    k: usize,
    r: usize,
    predicted: usize,
    opts: &SaksOptions,
    assert_flow_gap: bool,
) -> Result<SaksReport, SaksError> {
    let inst = &bundle.instance;
    let mut checks: Vec<CheckEntry> = Vec::new();
    let mut push = |name: &str, status: CheckStatus, detail: String| {
        checks.push(CheckEntry {
            name: name.to_string(),
            status,
            detail,
        });
    };

    match check_valid(inst, &bundle.code) {
        Ok(_) => push(
            "validity",
            CheckStatus::Pass,
            "every vertex encodes from earlier neighbors and its own sources".into(),
        ),
        Err(e) => push("validity", CheckStatus::Fail, e.to_string()),
    }

    match bundle.decodability.verify(inst, &bundle.code) {
        Ok(()) => push(
            "decodability",
            CheckStatus::Pass,
            format!(
                "{} of {} messages decode at their sinks",
                bundle.rate(),
                bundle.code.message_count()
            ),
        ),
        Err(e) => push("decodability", CheckStatus::Fail, e.to_string()),
    }

    if bundle.rate() == predicted {
        push(
            "rate-formula",
            CheckStatus::Pass,
            format!("rate {predicted}"),
        );
    } else {
        push(
            "rate-formula",
            CheckStatus::Fail,
            format!(
                "rate {} differs from the predicted {predicted}",
                bundle.rate()
            ),
        );
    }

    let mode = match opts.cert {
        CertChoice::Auto if inst.n() <= EXHAUSTIVE_CERT_LIMIT => CertMode::Exhaustive,
        CertChoice::Auto => CertMode::Sampled {
            count: 200,
            seed: 7,
        },
        CertChoice::Exhaustive => CertMode::Exhaustive,
        CertChoice::Sampled { count, seed } => CertMode::Sampled { count, seed },
    };
    match check_certifiable(
        inst,
        &bundle.code,
        &bundle.certifiability,
        mode,
        BRUTE_FORCE_VERTEX_LIMIT,
    ) {
        Ok(report) => push(
            "certifiability",
            CheckStatus::Pass,
            format!(
                "min rank {} over {} {} multicuts",
                report.min_rank_seen.map_or("-".into(), |x| x.to_string()),
                report.cuts_checked,
                if report.exhaustive {
                    "minimal"
                } else {
                    "sampled minimal"
                }
            ),
        ),
        Err(CodeCheckError::Instance(e @ InstanceError::TooLarge { .. })) => {
            return Err(SaksError::Instance(e));
        }
        Err(e) => push("certifiability", CheckStatus::Fail, e.to_string()),
    }

    if bundle.rho() == predicted {
        push(
            "rho-formula",
            CheckStatus::Pass,
            format!("bound {predicted}"),
        );
    } else {
        push(
            "rho-formula",
            CheckStatus::Fail,
            format!(
                "bound {} differs from the predicted {predicted}",
                bundle.rho()
            ),
        );
    }

    let cut_set = inst.sink_attach_union();
    let cut = inst.multicut_from_indices(&cut_set);
    let is_cut = inst.is_multicut(&cut)?;
    if is_cut && cut.len() == predicted {
        push(
            "upper-bound-cut",
            CheckStatus::Pass,
            format!("the sink-attach set is a multicut of size {predicted}"),
        );
    } else {
        push(
            "upper-bound-cut",
            CheckStatus::Fail,
            format!(
                "sink-attach set has size {} and is{} a multicut",
                cut.len(),
                if is_cut { "" } else { " not" }
            ),
        );
    }

    if inst.cuts_all_terminal_pairs(&cut_set) {
        push(
            "cuts-all-terminal-pairs",
            CheckStatus::Pass,
            "no source reaches any sink, paired or not".into(),
        );
    } else {
        push(
            "cuts-all-terminal-pairs",
            CheckStatus::Fail,
            "some source still reaches a sink".into(),
        );
    }

    if bundle.rho() == cut.len() {
        push(
            "value-pinned",
            CheckStatus::Pass,
            format!("lower bound {} meets the upper bound", bundle.rho()),
        );
    } else {
        push(
            "value-pinned",
            CheckStatus::Fail,
            format!("bound {} vs cut size {}", bundle.rho(), cut.len()),
        );
    }

    if bundle.factors.len() == 2 {
        match build_b_certificate(bundle, &cut) {
            Ok(cert) => {
                if cert.rank_bound >= bundle.rho() {
                    push(
                        "rank-certificate",
                        CheckStatus::Pass,
                        format!(
                            "certificate rank {} (diagonal bound {})",
                            cert.rank_bound, cert.diagonal_bound
                        ),
                    );
                } else {
                    push(
                        "rank-certificate",
                        CheckStatus::Fail,
                        format!(
                            "certificate rank {} below {}",
                            cert.rank_bound,
                            bundle.rho()
                        ),
                    );
                }
            }
            Err(e) => push("rank-certificate", CheckStatus::Fail, e.to_string()),
        }
    } else {
        push(
            "rank-certificate",
            CheckStatus::Skipped,
            "base bundle has no factor structure".into(),
        );
    }

    let mut brute = None;
    if !opts.brute_force {
        push(
            "brute-force-min-cut",
            CheckStatus::Skipped,
            "disabled".into(),
        );
    } else if inst.n() > BRUTE_FORCE_VERTEX_LIMIT {
        push(
            "brute-force-min-cut",
            CheckStatus::Skipped,
            format!(
                "{} vertices exceed the exhaustive budget of {BRUTE_FORCE_VERTEX_LIMIT}",
                inst.n()
            ),
        );
    } else {
        let (size, _witness) = inst.min_multicut(BRUTE_FORCE_VERTEX_LIMIT)?;
        brute = Some(size);
        if size == predicted {
            push(
                "brute-force-min-cut",
                CheckStatus::Pass,
                format!("exhaustive minimum {size}"),
            );
        } else {
            push(
                "brute-force-min-cut",
                CheckStatus::Fail,
                format!("exhaustive minimum {size} differs from the predicted {predicted}"),
            );
        }
    }

    let mut flow_value = None;
    let mut flow_exact = None;
    match opts.flow_budget {
        None => push("flow-gap", CheckStatus::Skipped, "flow disabled".into()),
        Some(budget) => match max_flow_exact_auto(inst, budget) {
            Ok(sol) => {
                flow_value = Some(sol.value.clone());
                flow_exact = Some(sol.exact);
                if !assert_flow_gap {
                    push(
                        "flow-gap",
                        CheckStatus::Skipped,
                        "no gap asserted for this family".into(),
                    );
                } else if k < 2 {
                    push(
                        "flow-gap",
                        CheckStatus::Skipped,
                        "no gap expected at k = 1".into(),
                    );
                } else if !sol.exact {
                    push(
                        "flow-gap",
                        CheckStatus::Skipped,
                        "flow value is only a lower bound".into(),
                    );
                } else if sol.value < Rational::from_integer(bundle.rate().into()) {
                    push(
                        "flow-gap",
                        CheckStatus::Pass,
                        format!(
                            "flow {} strictly below the coding rate {}",
                            rational_string(&sol.value),
                            bundle.rate()
                        ),
                    );
                } else {
                    push(
                        "flow-gap",
                        CheckStatus::Fail,
                        format!(
                            "flow {} does not fall below the coding rate {}",
                            rational_string(&sol.value),
                            bundle.rate()
                        ),
                    );
                }
            }
            Err(FlowError::PathBudget { budget }) => push(
                "flow-gap",
                CheckStatus::Skipped,
                format!("not computed: more than {budget} paths"),
            ),
            Err(e) => return Err(SaksError::Flow(e)),
        },
    }

    Ok(SaksReport {
        n,
        k,
        r,
        predicted,
        coding_rate: bundle.rate(),
        rho: bundle.rho(),
        upper_bound_cut: cut,
        brute_force_cut: brute,
        flow_value,
        flow_exact,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::max_multicommodity_flow;
    use num::{BigInt, One};

    fn rat(n: usize) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    #[test]
    fn test_path_instance_examples() {
        let p2 = path_instance(2).unwrap();
        assert_eq!((p2.n(), p2.edge_count()), (2, 1));
        let p5 = path_instance(5).unwrap();
        let (min_cut, _) = p5.min_multicut(BRUTE_FORCE_VERTEX_LIMIT).unwrap();
        assert_eq!(min_cut, 1);
        let flow = max_multicommodity_flow(&p5, 5, DEFAULT_PATH_BUDGET).unwrap();
        assert_eq!(flow.value, Rational::one());
        assert!(matches!(path_instance(1), Err(SaksError::BadParams(_))));

        let base = path_bundle(4, 1).unwrap();
        assert_eq!((base.rate(), base.rho()), (1, 1));
    }

    #[test]
    fn test_bundle_values_match_the_closed_form() {
        for (n, k, expected) in [
            (2, 2, 3),
            (3, 2, 5),
            (2, 3, 7),
            (4, 2, 7),
            (3, 3, 19),
            (2, 1, 1),
            (5, 1, 1),
        ] {
            let b = saks_bundle(n, k).unwrap();
            assert_eq!(b.rate(), expected, "rate at ({n},{k})");
            assert_eq!(b.rho(), expected, "bound at ({n},{k})");
            assert_eq!(b.instance.n(), n.pow(k as u32));
        }
    }

    #[test]
    fn test_recurrence_closes_to_the_difference_of_powers() {
        for n in 2usize..=6 {
            let mut rho = 1usize;
            for k in 1..=6 {
                assert_eq!(rho, n.pow(k) - (n - 1).pow(k), "n={n} k={k}");
                rho = rho * (n - 1) + n.pow(k);
            }
        }
    }

    #[test]
    fn test_sink_cut_cardinality_identity() {
        for (n, k) in [(2, 2), (3, 2), (2, 3), (4, 2), (3, 3)] {
            let b = saks_bundle(n, k).unwrap();
            let cut = b.instance.sink_attach_union();
            assert_eq!(cut.len(), n.pow(k as u32) - (n - 1).pow(k as u32));
        }
    }

    #[test]
    fn test_size_budget_is_enforced() {
        assert!(matches!(
            saks_bundle(3, 4),
            Err(SaksError::SizeBudget { required: 81, .. })
        ));
        assert!(matches!(
            verify_corollary1(2, 7, &SaksOptions::default()),
            Err(SaksError::SizeBudget { required: 128, .. })
        ));
        assert!(matches!(saks_bundle(2, 0), Err(SaksError::BadParams(_))));
    }

    #[test]
    fn test_verify_corollary1_small_pairs() {
        for (n, k, expected) in [(2, 2, 3), (3, 2, 5), (2, 3, 7)] {
            let report = verify_corollary1(n, k, &SaksOptions::default()).unwrap();
            assert!(report.all_passed(), "({n},{k}): {}", report.render_table());
            assert_eq!(report.predicted, expected);
            assert_eq!(report.coding_rate, expected);
            assert_eq!(report.rho, expected);
            assert_eq!(report.upper_bound_cut.len(), expected);
            assert_eq!(report.brute_force_cut, Some(expected));
            assert_eq!(report.flow_exact, Some(true));
            assert!(report.flow_value.clone().unwrap() < rat(expected));
        }
    }

    #[test]
    fn test_two_by_two_flow_is_exactly_two() {
        let report = verify_corollary1(2, 2, &SaksOptions::default()).unwrap();
        assert_eq!(report.flow_value, Some(rat(2)));
        assert_eq!(report.flow_exact, Some(true));
    }

    #[test]
    fn test_verify_corollary1_four_two() {
        let report = verify_corollary1(4, 2, &SaksOptions::default()).unwrap();
        assert!(report.all_passed(), "{}", report.render_table());
        assert_eq!(report.predicted, 7);
        assert_eq!(report.brute_force_cut, Some(7));
        assert_eq!(report.flow_value, Some(rat(4)));
    }

    #[test]
    fn test_verify_corollary1_three_three_is_certificate_only() {
        let report = verify_corollary1(3, 3, &SaksOptions::default()).unwrap();
        assert!(report.all_passed(), "{}", report.render_table());
        assert_eq!(report.predicted, 19);
        assert_eq!(report.rho, 19);
        assert_eq!(report.upper_bound_cut.len(), 19);
        assert_eq!(report.brute_force_cut, None);
        let brute = report
            .checks
            .iter()
            .find(|c| c.name == "brute-force-min-cut")
            .unwrap();
        assert_eq!(brute.status, CheckStatus::Skipped);
        let rank = report
            .checks
            .iter()
            .find(|c| c.name == "rank-certificate")
            .unwrap();
        assert_eq!(rank.status, CheckStatus::Pass);
        assert_eq!(report.flow_value, Some(rat(9)));
        assert_eq!(report.flow_exact, Some(true));
    }

    #[test]
    fn test_corollary2_two_parallel_paths() {
        // Two disjoint 2-vertex paths in a 4-vertex instance: r = 2, n = 4.
        let v = |s: &str| Label::name(s);
        let inst = Instance::new(
            vec![v("a1"), v("a2"), v("b1"), v("b2")],
            vec![(v("a1"), v("a2")), (v("b1"), v("b2"))],
            vec![
                crate::instance::Commodity {
                    source: "sA".into(),
                    sink: "tA".into(),
                },
                crate::instance::Commodity {
                    source: "sB".into(),
                    sink: "tB".into(),
                },
            ],
            BTreeMap::from([
                ("sA".to_string(), vec![v("a1")]),
                ("tA".to_string(), vec![v("a2")]),
                ("sB".to_string(), vec![v("b1")]),
                ("tB".to_string(), vec![v("b2")]),
            ]),
        )
        .unwrap();
        let paths = vec![vec![v("a1"), v("a2")], vec![v("b1"), v("b2")]];
        let report = verify_corollary2(&inst, &paths, 2, &SaksOptions::default()).unwrap();
        assert!(report.all_passed(), "{}", report.render_table());
        assert_eq!(report.predicted, 12); // 4² − 2²
        assert_eq!(report.coding_rate, 12);
        assert_eq!(report.rho, 12);
        assert_eq!(report.upper_bound_cut.len(), 12);
        assert_eq!(report.brute_force_cut, Some(12));
    }

    #[test]
    fn test_corollary2_with_one_path_matches_corollary1() {
        let inst = path_instance(3).unwrap();
        let path = vec![Label::name("p1"), Label::name("p2"), Label::name("p3")];
        let c2 = verify_corollary2(&inst, &[path], 2, &SaksOptions::default()).unwrap();
        let c1 = verify_corollary1(3, 2, &SaksOptions::default()).unwrap();
        assert!(c2.all_passed(), "{}", c2.render_table());
        assert_eq!(c2.predicted, c1.predicted);
        assert_eq!(c2.coding_rate, c1.coding_rate);
        assert_eq!(c2.rho, c1.rho);
        assert_eq!(c2.brute_force_cut, c1.brute_force_cut);
    }

    #[test]
    fn test_corollary2_every_vertex_its_own_path() {
        // r = n = 2 with single-vertex paths: the cut is all of V, n^k − 0.
        let v = |s: &str| Label::name(s);
        let inst = Instance::new(
            vec![v("u"), v("w")],
            vec![],
            vec![
                crate::instance::Commodity {
                    source: "sU".into(),
                    sink: "tU".into(),
                },
                crate::instance::Commodity {
                    source: "sW".into(),
                    sink: "tW".into(),
                },
            ],
            BTreeMap::from([
                ("sU".to_string(), vec![v("u")]),
                ("tU".to_string(), vec![v("u")]),
                ("sW".to_string(), vec![v("w")]),
                ("tW".to_string(), vec![v("w")]),
            ]),
        )
        .unwrap();
        let paths = vec![vec![v("u")], vec![v("w")]];
        let report = verify_corollary2(&inst, &paths, 2, &SaksOptions::default()).unwrap();
        assert!(report.all_passed(), "{}", report.render_table());
        assert_eq!(report.predicted, 4);
        assert_eq!(report.upper_bound_cut.len(), 4);
    }

    #[test]
    fn test_corollary2_rejects_mismatched_attach() {
        // Source attach union bigger than the path count.
        let v = |s: &str| Label::name(s);
        let inst = Instance::new(
            vec![v("a1"), v("a2"), v("x")],
            vec![(v("a1"), v("a2")), (v("a2"), v("x"))],
            vec![crate::instance::Commodity {
                source: "s".into(),
                sink: "t".into(),
            }],
            BTreeMap::from([
                ("s".to_string(), vec![v("a1"), v("x")]),
                ("t".to_string(), vec![v("a2")]),
            ]),
        )
        .unwrap();
        let paths = vec![vec![v("a1"), v("a2")]];
        assert!(matches!(
            verify_corollary2(&inst, &paths, 2, &SaksOptions::default()),
            Err(SaksError::BadParams(_))
        ));
    }

    #[test]
    fn test_report_serialization_and_table() {
        let report = verify_corollary1(2, 2, &SaksOptions::default()).unwrap();
        let json: serde_json::Value = serde_json::to_value(&report).unwrap();
        assert_eq!(json["predicted"], 3);
        assert_eq!(json["flow_value"], "2");
        assert_eq!(json["upper_bound_size"], 3);
        assert!(json["checks"]
            .as_array()
            .unwrap()
            .iter()
            .all(|c| c["status"] == "pass" || c["status"] == "skipped"));
        let table = report.render_table();
        assert!(table.contains("predicted value"));
        assert!(table.contains("check: value-pinned"));
        assert!(!table.contains("FAIL"));
    }

    #[test]
    fn test_failures_are_reported_not_panicked() {
        // Corrupt the certified bound upward: certifiability and the value
        // checks must fail by name while the rest still passes.
        let mut bundle = saks_bundle(2, 2).unwrap();
        bundle.certifiability.bound = 4;
        let report = assess(&bundle, 2, 2, 1, 3, &SaksOptions::default(), true).unwrap();
        assert!(!report.all_passed());
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .map(|c| c.name.as_str())
            .collect();
        assert!(failed.contains(&"certifiability"));
        assert!(failed.contains(&"rho-formula"));
        assert!(failed.contains(&"value-pinned"));
        assert!(!failed.contains(&"validity"));
    }
}
