//! Empirical checks of two properties a ranking method may have.
//!
//! *Size invariance*: if entity `j` sends to and receives from every third
//! entity a fixed multiple of what entity `i` does, `i` and `j` share a rank.
//!
//! *Bridge independence*: if two groups of entities are linked through a
//! single bridge entity only, the order inside one group (bridge included)
//! does not depend on the flows inside the other.
//!
//! Net scores fail both, ratio scores only the second, least-squares scores
//! satisfy both. The checkers here test a method on concrete instances; the
//! [`run_suite`] driver combines fixed witnesses with seeded random trials.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fixtures;
use crate::flow::{EntityId, FlowMatrix, Registry};
use crate::ranker::{score, to_ranking, Method, DEFAULT_TIE_TOLERANCE};
use crate::synth;

/// Outcome of one property check.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict<V> {
    Holds,
    Violated(V),
}

impl<V> Verdict<V> {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

/// Adds `clone` as a copy of `base` with every flow scaled by `factor`.
#[derive(Clone, Debug, PartialEq)]
pub struct CloneSpec {
    pub base: String,
    pub clone: EntityId,
    pub factor: f64,
}

impl CloneSpec {
    pub fn new(base: impl Into<String>, clone: impl Into<String>, factor: f64) -> Result<Self> {
        Ok(CloneSpec { base: base.into(), clone: EntityId::new(clone)?, factor })
    }
}

/// Appends the clone described by `spec` to `a`.
///
/// The clone trades `factor` times the base's amount with every third
/// entity, in both directions, and nothing with the base itself.
pub fn add_clone(a: &FlowMatrix, spec: &CloneSpec) -> Result<FlowMatrix> {
    if !(spec.factor.is_finite() && spec.factor > 0.0) {
        return Err(Error::InvalidCloneSpec(format!("factor must be positive, got {}", spec.factor)));
    }
    let reg = a.registry();
    let base = reg
        .index_of(&spec.base)
        .ok_or_else(|| Error::InvalidCloneSpec(format!("unknown base `{}`", spec.base)))?;
    if reg.contains(spec.clone.code()) {
        return Err(Error::InvalidCloneSpec(format!("clone code `{}` already in use", spec.clone)));
    }
    let n = a.n();
    let m = n + 1;
    let registry = Registry::new(reg.iter().cloned().chain([spec.clone.clone()]))?;
    let mut flows = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            flows[i * m + j] = a.get(i, j);
        }
    }
    for k in 0..n {
        if k != base {
            flows[n * m + k] = spec.factor * a.get(base, k);
            flows[k * m + n] = spec.factor * a.get(k, base);
        }
    }
    FlowMatrix::from_dense(registry, flows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SizeViolation {
    pub base: String,
    pub clone: String,
    pub base_score: f64,
    pub clone_score: f64,
    pub base_rank: usize,
    pub clone_rank: usize,
}

impl fmt::Display for SizeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} scores {} (rank {}) but its clone {} scores {} (rank {})",
            self.base, self.base_score, self.base_rank, self.clone, self.clone_score, self.clone_rank
        )
    }
}

pub fn check_size_invariance(method: Method, a: &FlowMatrix, spec: &CloneSpec) -> Result<Verdict<SizeViolation>> {
    check_size_invariance_with(method, a, spec, DEFAULT_TIE_TOLERANCE)
}

/// [`check_size_invariance`] with an explicit tie tolerance.
pub fn check_size_invariance_with(
    method: Method,
    a: &FlowMatrix,
    spec: &CloneSpec,
    tie_tolerance: f64,
) -> Result<Verdict<SizeViolation>> {
    let cloned = add_clone(a, spec)?;
    let w = score(&cloned, method)?;
    let ranking = to_ranking(&w, tie_tolerance);
    let reg = cloned.registry();
    let (b, c) = (reg.index_of(&spec.base).unwrap(), reg.index_of(spec.clone.code()).unwrap());
    if ranking.ranks()[b] == ranking.ranks()[c] {
        return Ok(Verdict::Holds);
    }
    Ok(Verdict::Violated(SizeViolation {
        base: spec.base.clone(),
        clone: spec.clone.code().to_owned(),
        base_score: w.values()[b],
        clone_score: w.values()[c],
        base_rank: ranking.ranks()[b],
        clone_rank: ranking.ranks()[c],
    }))
}

/// Two groups of entities whose only link is the bridge entity.
#[derive(Clone, Debug, PartialEq)]
pub struct BridgeInstance {
    matrix: FlowMatrix,
    bridge: String,
    side_one: Vec<String>,
    side_two: Vec<String>,
}

impl BridgeInstance {
    pub fn matrix(&self) -> &FlowMatrix {
        &self.matrix
    }

    pub fn bridge(&self) -> &str {
        &self.bridge
    }

    /// First group, bridge included, in registry order.
    pub fn side_one(&self) -> &[String] {
        &self.side_one
    }

    /// Second group, bridge included, in registry order.
    pub fn side_two(&self) -> &[String] {
        &self.side_two
    }

    pub fn side_one_flows(&self) -> FlowMatrix {
        self.matrix.restrict(&self.side_one).expect("side is part of the registry")
    }

    pub fn side_two_flows(&self) -> FlowMatrix {
        self.matrix.restrict(&self.side_two).expect("side is part of the registry")
    }
}

/// Glues two flow matrices together at the shared `bridge` entity.
///
/// The union lists side one's entities first, then side two's (minus the
/// bridge). There are no flows between the non-bridge entities of the two
/// sides.
pub fn build_bridge(side_one: &FlowMatrix, side_two: &FlowMatrix, bridge: &str) -> Result<BridgeInstance> {
    let (r1, r2) = (side_one.registry(), side_two.registry());
    if !r1.contains(bridge) || !r2.contains(bridge) {
        return Err(Error::UnknownBridge(bridge.to_owned()));
    }
    if let Some(shared) = r2.codes().find(|c| *c != bridge && r1.contains(c)) {
        return Err(Error::SharedNonBridgeEntity(shared.to_owned()));
    }
    let registry = Registry::new(r1.iter().cloned().chain(r2.iter().filter(|e| e.code() != bridge).cloned()))?;
    let n = registry.len();
    let mut flows = vec![0.0; n * n];
    for side in [side_one, side_two] {
        let map: Vec<usize> = side.registry().codes().map(|c| registry.index_of(c).unwrap()).collect();
        for (i, j, amount) in side.entries() {
            flows[map[i] * n + map[j]] += amount;
        }
    }
    Ok(BridgeInstance {
        matrix: FlowMatrix::from_dense(registry, flows)?,
        bridge: bridge.to_owned(),
        side_one: r1.codes().map(str::to_owned).collect(),
        side_two: r2.codes().map(str::to_owned).collect(),
    })
}

/// A pair inside side one whose relative order changed.
#[derive(Clone, Debug, PartialEq)]
pub struct BridgeViolation {
    pub first: String,
    pub second: String,
    /// `Less` means `first` ranked better.
    pub before: Ordering,
    pub after: Ordering,
}

impl fmt::Display for BridgeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let word = |o: Ordering| match o {
            Ordering::Less => "above",
            Ordering::Equal => "tied with",
            Ordering::Greater => "below",
        };
        write!(
            f,
            "{} was {} {} and is now {} it",
            self.first,
            word(self.before),
            self.second,
            word(self.after)
        )
    }
}

pub fn check_bridge_independence(
    method: Method,
    inst: &BridgeInstance,
    perturbed_side_two: &FlowMatrix,
) -> Result<Verdict<BridgeViolation>> {
    check_bridge_independence_with(method, inst, perturbed_side_two, DEFAULT_TIE_TOLERANCE)
}

/// [`check_bridge_independence`] with an explicit tie tolerance.
pub fn check_bridge_independence_with(
    method: Method,
    inst: &BridgeInstance,
    perturbed_side_two: &FlowMatrix,
    tie_tolerance: f64,
) -> Result<Verdict<BridgeViolation>> {
    let expected: HashSet<&str> = inst.side_two.iter().map(String::as_str).collect();
    let got: HashSet<&str> = perturbed_side_two.registry().codes().collect();
    if expected != got {
        return Err(Error::PerturbationMismatch);
    }
    let perturbed = build_bridge(&inst.side_one_flows(), perturbed_side_two, &inst.bridge)?;
    let before = to_ranking(&score(&inst.matrix, method)?, tie_tolerance);
    let after = to_ranking(&score(&perturbed.matrix, method)?, tie_tolerance);
    let side = &inst.side_one;
    for (x, a) in side.iter().enumerate() {
        for b in &side[x + 1..] {
            let order_before = before.rank_of(a).cmp(&before.rank_of(b));
            let order_after = after.rank_of(a).cmp(&after.rank_of(b));
            if order_before != order_after {
                return Ok(Verdict::Violated(BridgeViolation {
                    first: a.clone(),
                    second: b.clone(),
                    before: order_before,
                    after: order_after,
                }));
            }
        }
    }
    Ok(Verdict::Holds)
}

/// Which properties each method is expected to have:
/// `(size invariance, bridge independence)`.
pub fn expected_pattern(method: Method) -> (bool, bool) {
    match method {
        Method::Net => (false, false),
        Method::Ratio => (true, false),
        Method::LeastSquares => (true, true),
    }
}

/// The four-country instance with `B` rebuilt as a clone of `A` at twice
/// the scale.
pub fn size_witness() -> (FlowMatrix, CloneSpec) {
    let base = fixtures::four_country().restrict(&["A", "C", "D"]).expect("fixture entities");
    (base, CloneSpec::new("A", "B", 2.0).expect("valid code"))
}

/// The four-country instance split at `C` into `{A, B, C}` and `{C, D}`,
/// and a second side in which `C -> D` grows from 10 to 1000.
pub fn bridge_witness() -> (BridgeInstance, FlowMatrix) {
    let a = fixtures::four_country();
    let one = a.restrict(&["A", "B", "C"]).expect("fixture entities");
    let two = a.restrict(&["C", "D"]).expect("fixture entities");
    let inst = build_bridge(&one, &two, "C").expect("disjoint sides");
    let registry = two.registry().clone();
    let perturbed = crate::flow::build_flow_matrix(registry, [("C", "D", 1000.0), ("D", "C", 10.0)]).expect("valid");
    (inst, perturbed)
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: usize,
    pub tie_tolerance: f64,
    /// Optional user instance; every entity with flows is cloned at twice
    /// its size and checked in addition to the random trials.
    pub extra: Option<FlowMatrix>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 20190501, trials: 100, tie_tolerance: DEFAULT_TIE_TOLERANCE, extra: None }
    }
}

/// Aggregate result of one (method, property) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiomOutcome {
    pub checks: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
}

impl AxiomOutcome {
    fn new() -> Self {
        AxiomOutcome { checks: 0, violations: 0, first_violation: None }
    }

    pub fn holds(&self) -> bool {
        self.violations == 0
    }

    fn record<V: fmt::Display>(&mut self, label: &str, verdict: Verdict<V>) {
        self.checks += 1;
        if let Verdict::Violated(v) = verdict {
            self.violations += 1;
            self.first_violation.get_or_insert_with(|| format!("{label}: {v}"));
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodReport {
    pub method: Method,
    pub size_invariance: AxiomOutcome,
    pub bridge_independence: AxiomOutcome,
}

impl MethodReport {
    pub fn matches_expected(&self) -> bool {
        expected_pattern(self.method) == (self.size_invariance.holds(), self.bridge_independence.holds())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub methods: Vec<MethodReport>,
}

impl SuiteReport {
    pub fn matches_expected(&self) -> bool {
        self.methods.iter().all(MethodReport::matches_expected)
    }
}

struct SizeTrial {
    matrix: FlowMatrix,
    spec: CloneSpec,
}

struct BridgeTrial {
    inst: BridgeInstance,
    perturbed: FlowMatrix,
}

fn size_trial<R: Rng>(rng: &mut R) -> SizeTrial {
    let n = rng.random_range(3..=8);
    let codes = synth::codes("E", n);
    let matrix = synth::random_instance(rng, &codes, 100);
    let base = codes[rng.random_range(0..n)].clone();
    let factor = rng.random_range(0.1f64.ln()..10f64.ln()).exp();
    SizeTrial { matrix, spec: CloneSpec::new(base, format!("E{n}"), factor).expect("valid code") }
}

fn bridge_trial<R: Rng>(rng: &mut R) -> BridgeTrial {
    let left: Vec<String> = synth::codes("L", rng.random_range(1..=4)).into_iter().chain(["B".to_owned()]).collect();
    let right: Vec<String> = ["B".to_owned()].into_iter().chain(synth::codes("R", rng.random_range(1..=4))).collect();
    let one = synth::random_instance(rng, &left, 100);
    let two = synth::random_instance(rng, &right, 100);
    let perturbed = synth::random_instance(rng, &right, 100);
    BridgeTrial { inst: build_bridge(&one, &two, "B").expect("disjoint sides"), perturbed }
}

/// Runs the fixed witnesses and `config.trials` random instances of each
/// property for every method in `methods`.
///
/// Trial instances depend only on the seed, so every method sees the same
/// instances and a restricted method list reproduces the same cells.
pub fn run_suite(methods: &[Method], config: &SuiteConfig) -> Result<SuiteReport> {
    let mut rng = synth::rng(config.seed);
    let sizes: Vec<SizeTrial> = (0..config.trials).map(|_| size_trial(&mut rng)).collect();
    let bridges: Vec<BridgeTrial> = (0..config.trials).map(|_| bridge_trial(&mut rng)).collect();
    let tol = config.tie_tolerance;

    let mut reports = Vec::with_capacity(methods.len());
    for &method in methods {
        let mut size = AxiomOutcome::new();
        let (base, spec) = size_witness();
        size.record("witness", check_size_invariance_with(method, &base, &spec, tol)?);
        for (k, t) in sizes.iter().enumerate() {
            size.record(&format!("trial {k}"), check_size_invariance_with(method, &t.matrix, &t.spec, tol)?);
        }
        if let Some(extra) = &config.extra {
            for (i, code) in extra.registry().codes().enumerate() {
                if extra.volume(i) == 0.0 {
                    continue;
                }
                let clone = unused_code(extra.registry(), code);
                let spec = CloneSpec::new(code, clone, 2.0)?;
                size.record(&format!("input {code}"), check_size_invariance_with(method, extra, &spec, tol)?);
            }
        }

        let mut bridge = AxiomOutcome::new();
        let (inst, perturbed) = bridge_witness();
        bridge.record("witness", check_bridge_independence_with(method, &inst, &perturbed, tol)?);
        for (k, t) in bridges.iter().enumerate() {
            bridge.record(
                &format!("trial {k}"),
                check_bridge_independence_with(method, &t.inst, &t.perturbed, tol)?,
            );
        }
        reports.push(MethodReport { method, size_invariance: size, bridge_independence: bridge });
    }
    Ok(SuiteReport { seed: config.seed, trials: config.trials, methods: reports })
}

fn unused_code(registry: &Registry, base: &str) -> String {
    let mut code = format!("{base}'");
    while registry.contains(&code) {
        code.push('\'');
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::build_flow_matrix;

    #[test]
    fn clone_reproduces_second_country() {
        let (base, spec) = size_witness();
        let cloned = add_clone(&base, &spec).unwrap();
        assert!(cloned.same_flows(&fixtures::four_country()));
        assert_eq!(cloned.flow("B", "C"), Some(30.0));
        assert_eq!(cloned.flow("C", "B"), Some(10.0));
    }

    #[test]
    fn unit_clone_copies_flows() {
        let reg = Registry::from_codes(["X", "Y"]).unwrap();
        let a = build_flow_matrix(reg, [("X", "Y", 7.0)]).unwrap();
        let c = add_clone(&a, &CloneSpec::new("X", "X2", 1.0).unwrap()).unwrap();
        assert_eq!(c.flow("X2", "Y"), Some(7.0));
        assert_eq!(c.flow("X2", "X"), Some(0.0));
    }

    #[test]
    fn clone_of_isolated_entity_is_isolated() {
        let reg = Registry::from_codes(["X", "Y", "Z"]).unwrap();
        let a = build_flow_matrix(reg, [("X", "Y", 7.0)]).unwrap();
        let c = add_clone(&a, &CloneSpec::new("Z", "Z2", 3.0).unwrap()).unwrap();
        assert_eq!(c.volume(3), 0.0);
        assert!(matches!(
            check_size_invariance(Method::LeastSquares, &a, &CloneSpec::new("Z", "Z2", 3.0).unwrap()),
            Err(Error::DisconnectedGraph { .. })
        ));
    }

    #[test]
    fn invalid_clone_specs() {
        let a = fixtures::four_country();
        for spec in [
            CloneSpec::new("A", "E", 0.0).unwrap(),
            CloneSpec::new("A", "E", f64::INFINITY).unwrap(),
            CloneSpec::new("Z", "E", 1.0).unwrap(),
            CloneSpec::new("A", "B", 1.0).unwrap(),
        ] {
            assert!(matches!(add_clone(&a, &spec), Err(Error::InvalidCloneSpec(_))), "{spec:?}");
        }
    }

    #[test]
    fn size_invariance_on_witness() {
        let (base, spec) = size_witness();
        assert!(check_size_invariance(Method::LeastSquares, &base, &spec).unwrap().holds());
        assert!(check_size_invariance(Method::Ratio, &base, &spec).unwrap().holds());
        match check_size_invariance(Method::Net, &base, &spec).unwrap() {
            Verdict::Violated(v) => {
                assert_eq!((v.base_score, v.clone_score), (10.0, 20.0));
                assert_eq!((v.base_rank, v.clone_rank), (2, 1));
            }
            Verdict::Holds => panic!("net scores are not size invariant"),
        }
    }

    #[test]
    fn bridge_decomposition_of_example() {
        let (inst, _) = bridge_witness();
        assert!(inst.matrix().same_flows(&fixtures::four_country()));
        assert_eq!(inst.side_one(), ["A", "B", "C"]);
        assert_eq!(inst.side_two(), ["C", "D"]);
    }

    #[test]
    fn bridge_errors() {
        let a = fixtures::four_country();
        let one = a.restrict(&["A", "B", "C"]).unwrap();
        let two = a.restrict(&["B", "C", "D"]).unwrap();
        assert!(matches!(build_bridge(&one, &two, "C"), Err(Error::SharedNonBridgeEntity(c)) if c == "B"));
        let three = a.restrict(&["A", "D"]).unwrap();
        assert!(matches!(build_bridge(&one, &three, "C"), Err(Error::UnknownBridge(_))));
    }

    #[test]
    fn bridge_with_silent_partner() {
        let a = fixtures::four_country();
        let one = a.restrict(&["A", "B", "C"]).unwrap();
        let two = FlowMatrix::zeros(Registry::from_codes(["C", "Z"]).unwrap()).unwrap();
        let inst = build_bridge(&one, &two, "C").unwrap();
        assert_eq!(inst.matrix().restrict(&["A", "B", "C"]).unwrap(), one);
        assert_eq!(inst.matrix().volume(3), 0.0);
    }

    #[test]
    fn bridge_verdicts_on_witness() {
        let (inst, perturbed) = bridge_witness();
        assert!(check_bridge_independence(Method::LeastSquares, &inst, &perturbed).unwrap().holds());
        let ratio = check_bridge_independence(Method::Ratio, &inst, &perturbed).unwrap();
        assert_eq!(
            ratio,
            Verdict::Violated(BridgeViolation {
                first: "A".into(),
                second: "C".into(),
                before: Ordering::Less,
                after: Ordering::Greater,
            })
        );
        assert!(!check_bridge_independence(Method::Net, &inst, &perturbed).unwrap().holds());
        for m in Method::ALL {
            assert!(check_bridge_independence(m, &inst, &inst.side_two_flows()).unwrap().holds());
        }
    }

    #[test]
    fn perturbation_must_cover_side_two() {
        let (inst, _) = bridge_witness();
        let wrong = FlowMatrix::zeros(Registry::from_codes(["C", "E"]).unwrap()).unwrap();
        assert!(matches!(
            check_bridge_independence(Method::Net, &inst, &wrong),
            Err(Error::PerturbationMismatch)
        ));
    }

    #[test]
    fn suite_matches_expected_pattern() {
        let config = SuiteConfig { trials: 20, ..SuiteConfig::default() };
        let report = run_suite(&Method::ALL, &config).unwrap();
        assert!(report.matches_expected(), "{report:#?}");
        let single = run_suite(&[Method::LeastSquares], &config).unwrap();
        assert_eq!(single.methods[0], report.methods[2]);
    }
}
