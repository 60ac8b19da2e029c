//! Score vectors and the rankings they induce.
//!
//! Three scores are available for every entity `i`:
//!
//! * net: `s_i = sum_j r_ij`, outflow minus inflow;
//! * ratio: `p_i = s_i / sum_j m_ij`, the net score per unit of volume;
//! * least squares: the sum-zero solution `q` of `L q = s`, where
//!   `L = diag(M 1) - M` is the Laplacian of the matches graph.
//!
//! `q` minimises `sum_{m_ij > 0} m_ij (r_ij / m_ij - q_i + q_j)^2`; pairs
//! with `m_ij = 0` never met and contribute nothing.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::flow::{component_codes, connectivity_components, derive, DerivedMatrices, FlowMatrix, Registry};
use crate::linalg::{conjugate_gradient, norm, Cholesky};

/// Largest system solved by dense factorization. Above it the solver
/// switches to preconditioned conjugate gradient.
pub const DENSE_SOLVER_LIMIT: usize = 2000;

/// Default absolute tolerance under which two scores are considered tied.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Net,
    Ratio,
    LeastSquares,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Net, Method::Ratio, Method::LeastSquares];

    /// Short label used in tables and on the command line.
    pub fn label(self) -> &'static str {
        match self {
            Method::Net => "net",
            Method::Ratio => "ratio",
            Method::LeastSquares => "ls",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "net" | "s" => Ok(Method::Net),
            "ratio" | "p" => Ok(Method::Ratio),
            "ls" | "least-squares" | "least_squares" | "q" => Ok(Method::LeastSquares),
            other => Err(format!("unknown method `{other}` (expected net, ratio or ls)")),
        }
    }
}

/// Scores aligned with a registry, tagged with the method that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    method: Method,
    registry: Registry,
    values: Vec<f64>,
}

impl WeightVector {
    pub fn new(method: Method, registry: Registry, values: Vec<f64>) -> Self {
        assert_eq!(registry.len(), values.len(), "one value per entity");
        WeightVector { method, registry, values }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, code: &str) -> Option<f64> {
        self.registry.index_of(code).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The scores of `codes` only, in the order given.
    pub fn restrict<S: AsRef<str>>(&self, codes: &[S]) -> Result<WeightVector> {
        let idx = codes
            .iter()
            .map(|c| self.registry.index_of(c.as_ref()).ok_or_else(|| Error::UnknownEntity(c.as_ref().to_owned())))
            .collect::<Result<Vec<_>>>()?;
        let registry = Registry::new(idx.iter().map(|&i| self.registry.get(i).clone()))?;
        Ok(WeightVector {
            method: self.method,
            registry,
            values: idx.iter().map(|&i| self.values[i]).collect(),
        })
    }
}

pub fn net_scores(d: &DerivedMatrices) -> WeightVector {
    let values = (0..d.n()).map(|i| d.net(i)).collect();
    WeightVector::new(Method::Net, d.registry().clone(), values)
}

pub fn ratio_scores(d: &DerivedMatrices) -> Result<WeightVector> {
    let values = (0..d.n())
        .map(|i| {
            let volume = d.volume(i);
            if volume > 0.0 {
                Ok(d.net(i) / volume)
            } else {
                Err(Error::IsolatedEntity(d.registry().code(i).to_owned()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightVector::new(Method::Ratio, d.registry().clone(), values))
}

/// Dense row-major Laplacian `diag(M 1) - M` of the matches matrix.
pub fn laplacian(d: &DerivedMatrices) -> Vec<f64> {
    let n = d.n();
    let mut l: Vec<f64> = d.matches_slice().iter().map(|m| -m).collect();
    for i in 0..n {
        l[i * n + i] = d.volume(i);
    }
    l
}

/// `L q - s`, the residual of the first-order conditions.
pub fn normal_equation_residual(d: &DerivedMatrices, q: &[f64]) -> Vec<f64> {
    let n = d.n();
    (0..n)
        .map(|i| {
            let lq: f64 = d.volume(i) * q[i] - (0..n).map(|j| d.matches(i, j) * q[j]).sum::<f64>();
            lq - d.net(i)
        })
        .collect()
}

/// `sum_{m_ij > 0} m_ij (r_ij / m_ij - q_i + q_j)^2` over ordered pairs.
pub fn least_squares_objective(d: &DerivedMatrices, q: &[f64]) -> f64 {
    let n = d.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let m = d.matches(i, j);
            if m > 0.0 {
                let dev = d.result(i, j) / m - q[i] + q[j];
                total += m * dev * dev;
            }
        }
    }
    total
}

/// Least-squares weights normalised to sum to zero.
///
/// The Laplacian is singular along the all-ones vector, so the solver works
/// with `L + J / n` instead (`J` the all-ones matrix). On a connected graph
/// that matrix is positive definite, and because `sum_i s_i = 0` its
/// solution also solves `L q = s` with `sum_i q_i = 0`.
pub fn least_squares_scores(d: &DerivedMatrices) -> Result<WeightVector> {
    let components = connectivity_components(d);
    if components.len() > 1 {
        return Err(Error::DisconnectedGraph { components: component_codes(d.registry(), &components) });
    }
    let n = d.n();
    let s: Vec<f64> = (0..n).map(|i| d.net(i)).collect();
    let mut q = if n <= DENSE_SOLVER_LIMIT { solve_dense(d, &s)? } else { solve_iterative(d, &s)? };
    let mean = q.iter().sum::<f64>() / n as f64;
    q.iter_mut().for_each(|v| *v -= mean);
    Ok(WeightVector::new(Method::LeastSquares, d.registry().clone(), q))
}

fn solve_dense(d: &DerivedMatrices, s: &[f64]) -> Result<Vec<f64>> {
    let n = d.n();
    let shift = 1.0 / n as f64;
    let mut k = laplacian(d);
    k.iter_mut().for_each(|v| *v += shift);
    let chol = Cholesky::factor(k, n).ok_or_else(|| Error::Solver("augmented Laplacian is not positive definite".into()))?;
    let mut q = chol.solve(s);
    // one step of iterative refinement against the original operator
    let mut r = normal_equation_residual(d, &q);
    let mean = q.iter().sum::<f64>() * shift;
    r.iter_mut().for_each(|v| *v = -(*v + mean));
    let dq = chol.solve(&r);
    q.iter_mut().zip(dq).for_each(|(a, b)| *a += b);
    Ok(q)
}

fn solve_iterative(d: &DerivedMatrices, s: &[f64]) -> Result<Vec<f64>> {
    let n = d.n();
    let shift = 1.0 / n as f64;
    let neighbours: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| (0..n).map(|j| (j, d.matches(i, j))).filter(|&(_, m)| m > 0.0).collect())
        .collect();
    let degree: Vec<f64> = (0..n).map(|i| d.volume(i)).collect();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mean = x.iter().sum::<f64>() * shift;
        (0..n)
            .map(|i| degree[i] * x[i] - neighbours[i].iter().map(|&(j, m)| m * x[j]).sum::<f64>() + mean)
            .collect()
    };
    let diag: Vec<f64> = degree.iter().map(|g| g + shift).collect();
    let tol = 1e-12 * norm(s).max(1.0);
    conjugate_gradient(apply, &diag, s, tol, 20 * n)
        .ok_or_else(|| Error::Solver("conjugate gradient did not converge".into()))
}

/// Derives `R` and `M` from `a` and computes the requested score.
pub fn score(a: &FlowMatrix, method: Method) -> Result<WeightVector> {
    score_derived(&derive(a), method)
}

pub fn score_derived(d: &DerivedMatrices, method: Method) -> Result<WeightVector> {
    match method {
        Method::Net => Ok(net_scores(d)),
        Method::Ratio => ratio_scores(d),
        Method::LeastSquares => least_squares_scores(d),
    }
}

/// Competition ranking ("1, 1, 3") derived from a score vector.
///
/// Higher scores rank better. Entities whose scores lie within the tie
/// tolerance of the best score of a group share that group and its rank.
#[derive(Clone, Debug, PartialEq)]
pub struct Ranking {
    registry: Registry,
    ranks: Vec<usize>,
    /// Best group first; members ordered by code.
    tie_groups: Vec<Vec<usize>>,
}

impl Ranking {
    /// Builds a ranking straight from competition ranks, e.g. ones read back
    /// from a table.
    pub fn from_ranks(registry: Registry, ranks: Vec<usize>) -> Result<Ranking> {
        if ranks.len() != registry.len() {
            return Err(Error::RegistryMismatch);
        }
        // negated ranks are scores with the same order
        let values: Vec<f64> = ranks.iter().map(|&r| -(r as f64)).collect();
        let ranking = to_ranking(&WeightVector::new(Method::Net, registry, values), 0.0);
        if ranking.ranks != ranks {
            return Err(Error::Parse { line: 0, reason: "ranks are not a competition ranking".into() });
        }
        Ok(ranking)
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn rank_of(&self, code: &str) -> Option<usize> {
        self.registry.index_of(code).map(|i| self.ranks[i])
    }

    pub fn tie_groups(&self) -> &[Vec<usize>] {
        &self.tie_groups
    }

    /// Tie groups as entity codes.
    pub fn tie_group_codes(&self) -> Vec<Vec<&str>> {
        self.tie_groups.iter().map(|g| g.iter().map(|&i| self.registry.code(i)).collect()).collect()
    }

    /// Entity indices best first, ties ordered by code.
    pub fn display_order(&self) -> impl Iterator<Item = usize> + '_ {
        self.tie_groups.iter().flatten().copied()
    }

    /// How entity `i` compares with entity `j`: `Less` means `i` is better.
    pub fn compare(&self, i: usize, j: usize) -> Ordering {
        self.ranks[i].cmp(&self.ranks[j])
    }
}

pub fn to_ranking(w: &WeightVector, tie_tolerance: f64) -> Ranking {
    assert!(tie_tolerance >= 0.0, "tie tolerance must be nonnegative");
    let reg = w.registry();
    let values = w.values();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then_with(|| reg.code(i).cmp(reg.code(j))));

    let mut ranks = vec![0; values.len()];
    let mut tie_groups: Vec<Vec<usize>> = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let head = values[order[start]];
        let mut end = start + 1;
        while end < order.len() && head - values[order[end]] <= tie_tolerance {
            end += 1;
        }
        let mut group = order[start..end].to_vec();
        group.sort_by(|&i, &j| reg.code(i).cmp(reg.code(j)));
        for &i in &group {
            ranks[i] = start + 1;
        }
        tie_groups.push(group);
        start = end;
    }
    Ranking { registry: reg.clone(), ranks, tie_groups }
}
