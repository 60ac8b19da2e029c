//! The bilateral flow matrix and the matrices derived from it.
//!
//! A [`FlowMatrix`] holds `a_ij`, the amount sent from entity `i` to entity
//! `j`. From it follow the skew-symmetric results matrix `R = A - A^T` and
//! the symmetric matches matrix `M = A + A^T` ([`DerivedMatrices`]).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A short code (e.g. an ISO 3166-1 alpha-2 country code) plus an optional
/// human-readable label.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EntityId {
    code: String,
    display_name: Option<String>,
}

impl EntityId {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        if code.trim().is_empty() {
            return Err(Error::EmptyCode);
        }
        Ok(EntityId { code, display_name: None })
    }

    pub fn with_display_name(mut self, name: impl Into<String>) -> Self {
        self.display_name = Some(name.into());
        self
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn display_name(&self) -> Option<&str> {
        self.display_name.as_deref()
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

/// An ordered list of entities with unique codes.
///
/// Cloning is cheap; the storage is shared. Two registries are equal when
/// they list the same codes in the same order.
#[derive(Clone)]
pub struct Registry {
    entities: Arc<[EntityId]>,
    index: Arc<HashMap<String, usize>>,
}

impl Registry {
    pub fn new(entities: impl IntoIterator<Item = EntityId>) -> Result<Self> {
        let entities: Vec<EntityId> = entities.into_iter().collect();
        let mut index = HashMap::with_capacity(entities.len());
        for (i, e) in entities.iter().enumerate() {
            if index.insert(e.code.clone(), i).is_some() {
                return Err(Error::DuplicateEntity(e.code.clone()));
            }
        }
        Ok(Registry { entities: entities.into(), index: Arc::new(index) })
    }

    pub fn from_codes<I, S>(codes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let entities = codes.into_iter().map(EntityId::new).collect::<Result<Vec<_>>>()?;
        Registry::new(entities)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn get(&self, i: usize) -> &EntityId {
        &self.entities[i]
    }

    pub fn code(&self, i: usize) -> &str {
        &self.entities[i].code
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.index.get(code).copied()
    }

    pub fn contains(&self, code: &str) -> bool {
        self.index.contains_key(code)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &EntityId> {
        self.entities.iter()
    }

    pub fn codes(&self) -> impl ExactSizeIterator<Item = &str> {
        self.entities.iter().map(|e| e.code.as_str())
    }

    fn require(&self, code: &str) -> Result<usize> {
        self.index_of(code).ok_or_else(|| Error::UnknownEntity(code.to_owned()))
    }
}

impl PartialEq for Registry {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.entities, &other.entities) || self.codes().eq(other.codes())
    }
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.codes()).finish()
    }
}

/// Nonnegative flows between `n >= 2` entities, zero on the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowMatrix {
    registry: Registry,
    /// Row-major, `flows[i * n + j] = a_ij`.
    flows: Vec<f64>,
}

impl FlowMatrix {
    /// Wraps a dense row-major matrix after checking every invariant.
    pub fn from_dense(registry: Registry, flows: Vec<f64>) -> Result<Self> {
        let n = registry.len();
        if n < 2 {
            return Err(Error::TooFewEntities(n));
        }
        if flows.len() != n * n {
            return Err(Error::NonSquare(format!(
                "{} entities but {} matrix entries",
                n,
                flows.len()
            )));
        }
        let mut flows = flows;
        for i in 0..n {
            for j in 0..n {
                let a = &mut flows[i * n + j];
                check_amount(&registry, i, j, *a)?;
                if i == j && *a > 0.0 {
                    return Err(Error::SelfFlow { code: registry.code(i).to_owned(), amount: *a });
                }
                // normalise -0.0
                *a += 0.0;
            }
        }
        Ok(FlowMatrix { registry, flows })
    }

    pub fn zeros(registry: Registry) -> Result<Self> {
        let n = registry.len();
        FlowMatrix::from_dense(registry, vec![0.0; n * n])
    }

    pub fn n(&self) -> usize {
        self.registry.len()
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// `a_ij` by index.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.flows[i * self.n() + j]
    }

    /// `a_ij` by entity code.
    pub fn flow(&self, from: &str, to: &str) -> Option<f64> {
        Some(self.get(self.registry.index_of(from)?, self.registry.index_of(to)?))
    }

    /// Row-major view of the whole matrix.
    pub fn as_slice(&self) -> &[f64] {
        &self.flows
    }

    pub fn total(&self) -> f64 {
        self.flows.iter().sum()
    }

    /// Total outflow plus total inflow of entity `i`.
    pub fn volume(&self, i: usize) -> f64 {
        (0..self.n()).map(|j| self.get(i, j) + self.get(j, i)).sum()
    }

    /// Nonzero entries as `(from, to, amount)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n();
        self.flows
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(move |(k, a)| (k / n, k % n, *a))
    }

    /// The submatrix on `codes`, in the order given.
    pub fn restrict<S: AsRef<str>>(&self, codes: &[S]) -> Result<FlowMatrix> {
        let idx = codes
            .iter()
            .map(|c| self.registry.require(c.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let registry = Registry::new(idx.iter().map(|&i| self.registry.get(i).clone()))?;
        let flows = idx
            .iter()
            .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        FlowMatrix::from_dense(registry, flows)
    }

    /// The same flows listed in the order of `registry`, which must hold
    /// exactly the same codes.
    pub fn aligned_to(&self, registry: &Registry) -> Result<FlowMatrix> {
        if registry.len() != self.n() || registry.codes().any(|c| !self.registry.contains(c)) {
            return Err(Error::RegistryMismatch);
        }
        let codes: Vec<&str> = registry.codes().collect();
        let mut out = self.restrict(&codes)?;
        out.registry = registry.clone();
        Ok(out)
    }

    /// True when both matrices have the same entity set and the same flow
    /// between every pair of codes, regardless of registry order.
    pub fn same_flows(&self, other: &FlowMatrix) -> bool {
        match other.aligned_to(&self.registry) {
            Ok(aligned) => aligned.flows == self.flows,
            Err(_) => false,
        }
    }

    /// Every flow multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<FlowMatrix> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::NonFiniteAmount { from: "*".into(), to: "*".into() });
        }
        FlowMatrix::from_dense(self.registry.clone(), self.flows.iter().map(|a| a * factor).collect())
    }
}

fn check_amount(registry: &Registry, i: usize, j: usize, amount: f64) -> Result<()> {
    if !amount.is_finite() {
        return Err(Error::NonFiniteAmount {
            from: registry.code(i).to_owned(),
            to: registry.code(j).to_owned(),
        });
    }
    if amount < 0.0 {
        return Err(Error::NegativeAmount {
            from: registry.code(i).to_owned(),
            to: registry.code(j).to_owned(),
            amount,
        });
    }
    Ok(())
}

/// Builds a flow matrix from `(from, to, amount)` records.
///
/// Repeated pairs are summed and pairs never mentioned are zero. A record
/// from an entity to itself is rejected unless its amount is zero.
pub fn build_flow_matrix<I, F, T>(registry: Registry, entries: I) -> Result<FlowMatrix>
where
    I: IntoIterator<Item = (F, T, f64)>,
    F: AsRef<str>,
    T: AsRef<str>,
{
    let n = registry.len();
    if n < 2 {
        return Err(Error::TooFewEntities(n));
    }
    let mut flows = vec![0.0; n * n];
    for (from, to, amount) in entries {
        let i = registry.require(from.as_ref())?;
        let j = registry.require(to.as_ref())?;
        check_amount(&registry, i, j, amount)?;
        if i == j {
            if amount > 0.0 {
                return Err(Error::SelfFlow { code: registry.code(i).to_owned(), amount });
            }
            continue;
        }
        flows[i * n + j] += amount;
    }
    FlowMatrix::from_dense(registry, flows)
}

/// The results matrix `R = A - A^T` and the matches matrix `M = A + A^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedMatrices {
    registry: Registry,
    results: Vec<f64>,
    matches: Vec<f64>,
}

impl DerivedMatrices {
    pub fn n(&self) -> usize {
        self.registry.len()
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// `r_ij`
    pub fn result(&self, i: usize, j: usize) -> f64 {
        self.results[i * self.n() + j]
    }

    /// `m_ij`
    pub fn matches(&self, i: usize, j: usize) -> f64 {
        self.matches[i * self.n() + j]
    }

    pub fn results_slice(&self) -> &[f64] {
        &self.results
    }

    pub fn matches_slice(&self) -> &[f64] {
        &self.matches
    }

    /// Row `i` of `R` summed: outflow minus inflow.
    pub fn net(&self, i: usize) -> f64 {
        let n = self.n();
        self.results[i * n..(i + 1) * n].iter().sum()
    }

    /// Row `i` of `M` summed: outflow plus inflow.
    pub fn volume(&self, i: usize) -> f64 {
        let n = self.n();
        self.matches[i * n..(i + 1) * n].iter().sum()
    }
}

pub fn derive(a: &FlowMatrix) -> DerivedMatrices {
    let n = a.n();
    let mut results = vec![0.0; n * n];
    let mut matches = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let (aij, aji) = (a.get(i, j), a.get(j, i));
            results[i * n + j] = aij - aji;
            matches[i * n + j] = aij + aji;
        }
    }
    DerivedMatrices { registry: a.registry.clone(), results, matches }
}

/// One merged entity: `members` are replaced by `id`.
#[derive(Clone, Debug, PartialEq)]
pub struct MergeGroup {
    pub id: EntityId,
    pub members: Vec<String>,
}

/// A set of disjoint merges. Flows between members of the same group are
/// discarded.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MergeSpec {
    groups: Vec<MergeGroup>,
}

impl MergeSpec {
    pub fn new(groups: Vec<MergeGroup>) -> Self {
        MergeSpec { groups }
    }

    /// No merges at all.
    pub fn identity() -> Self {
        MergeSpec::default()
    }

    /// Convenience for building from codes.
    pub fn from_codes<G, M, S>(groups: G) -> Result<Self>
    where
        G: IntoIterator<Item = (S, M)>,
        M: IntoIterator,
        M::Item: Into<String>,
        S: Into<String>,
    {
        let groups = groups
            .into_iter()
            .map(|(id, members)| {
                Ok(MergeGroup {
                    id: EntityId::new(id)?,
                    members: members.into_iter().map(Into::into).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MergeSpec { groups })
    }

    pub fn groups(&self) -> &[MergeGroup] {
        &self.groups
    }

    pub fn is_identity(&self) -> bool {
        self.groups.is_empty()
    }

    /// Codes that disappear from the registry after merging.
    pub fn merged_codes(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().flat_map(|g| g.members.iter().map(String::as_str))
    }

    pub fn validate(&self, registry: &Registry) -> Result<()> {
        let mut used: HashSet<&str> = HashSet::new();
        for g in &self.groups {
            if g.members.is_empty() {
                return Err(Error::InvalidMergeSpec(format!("group `{}` has no members", g.id)));
            }
            for m in &g.members {
                if !registry.contains(m) {
                    return Err(Error::InvalidMergeSpec(format!("unknown entity `{m}` in group `{}`", g.id)));
                }
                if !used.insert(m) {
                    return Err(Error::InvalidMergeSpec(format!("entity `{m}` is listed in more than one group")));
                }
            }
        }
        let mut ids: HashSet<&str> = HashSet::new();
        for g in &self.groups {
            let id = g.id.code();
            if !ids.insert(id) {
                return Err(Error::InvalidMergeSpec(format!("group code `{id}` is used twice")));
            }
            if registry.contains(id) && !used.contains(id) {
                return Err(Error::InvalidMergeSpec(format!(
                    "group code `{id}` collides with a surviving entity"
                )));
            }
        }
        Ok(())
    }
}

/// Replaces each group of entities by a single entity whose flows are the
/// sums of its members' flows.
///
/// Surviving entities keep their original order; group entities follow in
/// the order the spec lists them.
pub fn merge_entities(a: &FlowMatrix, spec: &MergeSpec) -> Result<FlowMatrix> {
    spec.validate(a.registry())?;
    let reg = a.registry();
    let mut target: Vec<Option<usize>> = vec![None; reg.len()];
    let mut group_of: HashMap<&str, usize> = HashMap::new();
    for (g, group) in spec.groups.iter().enumerate() {
        for m in &group.members {
            group_of.insert(m, g);
        }
    }
    let mut entities = Vec::new();
    for (i, e) in reg.iter().enumerate() {
        if !group_of.contains_key(e.code()) {
            target[i] = Some(entities.len());
            entities.push(e.clone());
        }
    }
    let survivors = entities.len();
    entities.extend(spec.groups.iter().map(|g| g.id.clone()));
    for (i, e) in reg.iter().enumerate() {
        if let Some(&g) = group_of.get(e.code()) {
            target[i] = Some(survivors + g);
        }
    }
    let registry = Registry::new(entities)?;
    let m = registry.len();
    let mut flows = vec![0.0; m * m];
    for (i, j, amount) in a.entries() {
        let (ti, tj) = (target[i].unwrap(), target[j].unwrap());
        if ti != tj {
            flows[ti * m + tj] += amount;
        }
    }
    FlowMatrix::from_dense(registry, flows)
}

/// Connected components of the graph with an edge `i - j` whenever
/// `m_ij > 0`.
///
/// Components are ordered by their smallest index and list indices in
/// increasing order.
pub fn connectivity_components(d: &DerivedMatrices) -> Vec<Vec<usize>> {
    let n = d.n();
    let mut dsu = DisjointSet::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if d.matches(i, j) > 0.0 {
                dsu.union(i, j);
            }
        }
    }
    let mut slot: HashMap<usize, usize> = HashMap::new();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = dsu.find(i);
        let k = *slot.entry(root).or_insert_with(|| {
            out.push(Vec::new());
            out.len() - 1
        });
        out[k].push(i);
    }
    out
}

/// Components from [`connectivity_components`] translated to codes.
pub fn component_codes(registry: &Registry, components: &[Vec<usize>]) -> Vec<Vec<String>> {
    components
        .iter()
        .map(|c| c.iter().map(|&i| registry.code(i).to_owned()).collect())
        .collect()
}

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}
