//! Comparing rankings across methods, merges and years.

use std::fmt;

use crate::error::{Error, Result};
use crate::flow::{merge_entities, FlowMatrix, MergeSpec, Registry};
use crate::io::FlowPanel;
use crate::ranker::{score, to_ranking, Method, Ranking};

/// How far apart two rankings of the same entities are.
///
/// Shifts are `rank_a - rank_b`, so a positive shift means the entity ranks
/// better in `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankComparison {
    pub kendall_tau: f64,
    pub spearman_footrule: u64,
    /// Entity with the largest absolute shift (smallest code on ties).
    pub max_shift: (String, i64),
    pub per_entity_shift: Vec<i64>,
}

pub fn compare_rankings(a: &Ranking, b: &Ranking) -> Result<RankComparison> {
    if a.registry() != b.registry() {
        return Err(Error::RegistryMismatch);
    }
    let reg = a.registry();
    let shifts: Vec<i64> = a.ranks().iter().zip(b.ranks()).map(|(&x, &y)| x as i64 - y as i64).collect();
    let footrule = shifts.iter().map(|s| s.unsigned_abs()).sum();
    let max_shift = (0..shifts.len())
        .max_by(|&i, &j| {
            shifts[i].abs().cmp(&shifts[j].abs()).then_with(|| reg.code(j).cmp(reg.code(i)))
        })
        .map(|i| (reg.code(i).to_owned(), shifts[i]))
        .unwrap_or_default();
    Ok(RankComparison {
        kendall_tau: kendall_tau_b(a.ranks(), b.ranks()),
        spearman_footrule: footrule,
        max_shift,
        per_entity_shift: shifts,
    })
}

/// Tie-adjusted Kendall tau in `O(n log n)` (Knight's algorithm).
///
/// When one side is entirely tied the coefficient is 0/0; it is reported as
/// 1 if both sides are entirely tied (they agree on every pair) and 0
/// otherwise.
pub fn kendall_tau_b(x: &[usize], y: &[usize]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as u64;
    let pairs = n * n.saturating_sub(1) / 2;
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by_key(|&i| (x[i], y[i]));

    let mut tied_x = 0u64;
    let mut tied_xy = 0u64;
    let mut run_x = 1u64;
    let mut run_xy = 1u64;
    for k in 1..=idx.len() {
        let same_x = k < idx.len() && x[idx[k]] == x[idx[k - 1]];
        let same_xy = same_x && y[idx[k]] == y[idx[k - 1]];
        if same_xy {
            run_xy += 1;
        } else {
            tied_xy += run_xy * (run_xy - 1) / 2;
            run_xy = 1;
        }
        if same_x {
            run_x += 1;
        } else {
            tied_x += run_x * (run_x - 1) / 2;
            run_x = 1;
        }
    }

    let mut ys: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = ys.clone();
    let swaps = merge_count(&mut ys, &mut buf);

    let mut tied_y = 0u64;
    let mut run = 1u64;
    for k in 1..=ys.len() {
        if k < ys.len() && ys[k] == ys[k - 1] {
            run += 1;
        } else {
            tied_y += run * (run - 1) / 2;
            run = 1;
        }
    }

    let untied_x = pairs - tied_x;
    let untied_y = pairs - tied_y;
    if untied_x == 0 || untied_y == 0 {
        return if untied_x == untied_y { 1.0 } else { 0.0 };
    }
    let numerator = pairs as f64 - tied_x as f64 - tied_y as f64 + tied_xy as f64 - 2.0 * swaps as f64;
    (numerator / ((untied_x as f64) * (untied_y as f64)).sqrt()).clamp(-1.0, 1.0)
}

/// Sorts `v` ascending and returns the number of inversions.
fn merge_count(v: &mut [usize], buf: &mut [usize]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (lo, hi) = v.split_at_mut(mid);
        let (blo, bhi) = buf.split_at_mut(mid);
        merge_count(lo, blo) + merge_count(hi, bhi)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Rank of a surviving entity before and after a merge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftRow {
    pub code: String,
    pub before: usize,
    pub after: usize,
    /// `before - after`; positive is an improvement.
    pub shift: i64,
}

/// Where a merged entity landed in the full post-merge ranking.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupRow {
    pub code: String,
    pub rank: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregationReport {
    pub method: Method,
    /// Surviving entities in registry order.
    pub rows: Vec<ShiftRow>,
    pub groups: Vec<GroupRow>,
}

impl AggregationReport {
    pub fn changes(&self) -> impl Iterator<Item = &ShiftRow> {
        self.rows.iter().filter(|r| r.shift != 0)
    }

    pub fn is_unchanged(&self) -> bool {
        self.changes().next().is_none()
    }
}

/// Shift marker: `+n` (better), `-n` (worse) or `=`.
pub struct Marker(pub i64);

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => f.write_str("="),
            s if s > 0 => write!(f, "+{s}"),
            s => write!(f, "{s}"),
        }
    }
}

/// Ranks entities before and after applying `spec`.
///
/// Both rankings are taken over the surviving entities only (merged members
/// and new group entities excluded), so shifts compare like with like. The
/// group entities are reported with their rank in the full post-merge
/// ranking.
pub fn aggregation_impact(a: &FlowMatrix, spec: &MergeSpec, method: Method, tie_tolerance: f64) -> Result<AggregationReport> {
    let merged = merge_entities(a, spec)?;
    let merged_away: std::collections::HashSet<&str> = spec.merged_codes().collect();
    let survivors: Vec<&str> = a.registry().codes().filter(|c| !merged_away.contains(c)).collect();

    let before_w = score(a, method)?;
    let after_w = score(&merged, method)?;
    let before = to_ranking(&before_w.restrict(&survivors)?, tie_tolerance);
    let after = to_ranking(&after_w.restrict(&survivors)?, tie_tolerance);
    let full_after = to_ranking(&after_w, tie_tolerance);

    let rows = survivors
        .iter()
        .enumerate()
        .map(|(i, code)| {
            let (b, f) = (before.ranks()[i], after.ranks()[i]);
            ShiftRow { code: (*code).to_owned(), before: b, after: f, shift: b as i64 - f as i64 }
        })
        .collect();
    let groups = spec
        .groups()
        .iter()
        .map(|g| {
            let code = g.id.code();
            GroupRow {
                code: code.to_owned(),
                rank: full_after.rank_of(code).expect("group in merged registry"),
                score: after_w.value(code).expect("group in merged registry"),
            }
        })
        .collect();
    Ok(AggregationReport { method, rows, groups })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YearCell {
    Rank(usize),
    /// No flows at all for this entity in this year.
    Absent,
    /// The year could not be ranked; see [`PanelTrajectory::failures`].
    Failed,
}

impl fmt::Display for YearCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YearCell::Rank(r) => write!(f, "{r}"),
            YearCell::Absent => f.write_str("absent"),
            YearCell::Failed => f.write_str("failed"),
        }
    }
}

#[derive(Debug)]
pub struct PanelTrajectory {
    pub method: Method,
    pub registry: Registry,
    pub years: Vec<i32>,
    /// One row per registry entity, one cell per year.
    pub cells: Vec<Vec<YearCell>>,
    pub failures: Vec<(i32, Error)>,
}

impl PanelTrajectory {
    /// `(year, cell)` series for one entity.
    pub fn series(&self, code: &str) -> Option<Vec<(i32, YearCell)>> {
        let i = self.registry.index_of(code)?;
        Some(self.years.iter().copied().zip(self.cells[i].iter().copied()).collect())
    }
}

/// Ranks every year of a panel separately.
///
/// An entity with no flows in a given year is left out of that year's
/// computation and marked absent. A year that cannot be ranked is recorded
/// in `failures`; the other years are still reported.
pub fn panel_trajectory(panel: &FlowPanel, method: Method, tie_tolerance: f64) -> PanelTrajectory {
    let years: Vec<i32> = panel.years().collect();
    let results: Vec<Result<Vec<YearCell>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = panel
            .iter()
            .map(|(_, m)| scope.spawn(move || rank_year(m, method, tie_tolerance)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("ranking thread panicked")).collect()
    });
    let n = panel.registry().len();
    let mut cells = vec![Vec::with_capacity(years.len()); n];
    let mut failures = Vec::new();
    for (year, result) in years.iter().zip(results) {
        match result {
            Ok(column) => cells.iter_mut().zip(column).for_each(|(row, c)| row.push(c)),
            Err(e) => {
                cells.iter_mut().for_each(|row| row.push(YearCell::Failed));
                failures.push((*year, e));
            }
        }
    }
    PanelTrajectory { method, registry: panel.registry().clone(), years, cells, failures }
}

fn rank_year(m: &FlowMatrix, method: Method, tie_tolerance: f64) -> Result<Vec<YearCell>> {
    let present: Vec<&str> = (0..m.n()).filter(|&i| m.volume(i) > 0.0).map(|i| m.registry().code(i)).collect();
    let sub = m.restrict(&present)?;
    let ranking = to_ranking(&score(&sub, method)?, tie_tolerance);
    Ok(m.registry()
        .codes()
        .map(|c| ranking.rank_of(c).map_or(YearCell::Absent, YearCell::Rank))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ranker::{WeightVector, DEFAULT_TIE_TOLERANCE};

    fn ranking(codes: &[&str], values: &[f64]) -> Ranking {
        let reg = Registry::from_codes(codes.iter().copied()).unwrap();
        to_ranking(&WeightVector::new(Method::Net, reg, values.to_vec()), 0.0)
    }

    #[test]
    fn identical_rankings() {
        let a = ranking(&["A", "B", "C"], &[3., 1., 2.]);
        let c = compare_rankings(&a, &a).unwrap();
        assert_eq!(c.kendall_tau, 1.0);
        assert_eq!(c.spearman_footrule, 0);
        assert_eq!(c.max_shift, ("A".to_owned(), 0));
    }

    #[test]
    fn reversal() {
        let a = ranking(&["A", "B", "C", "D"], &[4., 3., 2., 1.]);
        let b = ranking(&["A", "B", "C", "D"], &[1., 2., 3., 4.]);
        let c = compare_rankings(&a, &b).unwrap();
        assert_eq!(c.kendall_tau, -1.0);
        assert_eq!(c.spearman_footrule, 8);
        assert_eq!(c.per_entity_shift, vec![-3, -1, 1, 3]);
        assert_eq!(c.max_shift, ("A".to_owned(), -3));
    }

    #[test]
    fn net_versus_least_squares_on_example() {
        let a = fixtures::four_country();
        let s = to_ranking(&score(&a, Method::Net).unwrap(), DEFAULT_TIE_TOLERANCE);
        let q = to_ranking(&score(&a, Method::LeastSquares).unwrap(), DEFAULT_TIE_TOLERANCE);
        assert_eq!(s.ranks(), &[2, 1, 4, 3]);
        assert_eq!(q.ranks(), &[1, 1, 3, 3]);
        let c = compare_rankings(&s, &q).unwrap();
        assert_eq!(c.per_entity_shift, vec![1, 0, 1, 0]);
        assert_eq!(c.spearman_footrule, 2);
        assert_eq!(c.max_shift, ("A".to_owned(), 1));
    }

    #[test]
    fn mismatched_registries() {
        let a = ranking(&["A", "B"], &[1., 2.]);
        let b = ranking(&["A", "C"], &[1., 2.]);
        assert!(matches!(compare_rankings(&a, &b), Err(Error::RegistryMismatch)));
    }

    #[test]
    fn fully_tied_tau() {
        assert_eq!(kendall_tau_b(&[1, 1, 1], &[1, 1, 1]), 1.0);
        assert_eq!(kendall_tau_b(&[1, 1, 1], &[1, 2, 3]), 0.0);
        assert_eq!(kendall_tau_b(&[1], &[1]), 1.0);
    }

    #[test]
    fn merging_the_bridge_side() {
        let spec = MergeSpec::from_codes([("g", vec!["C", "D"])]).unwrap();
        let report = aggregation_impact(&fixtures::four_country(), &spec, Method::LeastSquares, DEFAULT_TIE_TOLERANCE).unwrap();
        assert_eq!(
            report.rows,
            vec![
                ShiftRow { code: "A".into(), before: 1, after: 1, shift: 0 },
                ShiftRow { code: "B".into(), before: 1, after: 1, shift: 0 },
            ]
        );
        assert_eq!(report.groups.len(), 1);
        assert_eq!(report.groups[0].rank, 3);
        assert!(report.is_unchanged());
    }

    #[test]
    fn identity_and_singleton_merges_change_nothing() {
        let a = fixtures::four_country();
        for spec in [MergeSpec::identity(), MergeSpec::from_codes([("d'", vec!["D"])]).unwrap()] {
            for m in Method::ALL {
                let report = aggregation_impact(&a, &spec, m, DEFAULT_TIE_TOLERANCE).unwrap();
                assert!(report.is_unchanged(), "{m} {spec:?}");
            }
        }
        let report = aggregation_impact(&a, &MergeSpec::identity(), Method::Net, 0.0).unwrap();
        assert!(report.groups.is_empty());
        assert_eq!(report.rows.len(), 4);
    }

    #[test]
    fn markers() {
        assert_eq!(Marker(2).to_string(), "+2");
        assert_eq!(Marker(-1).to_string(), "-1");
        assert_eq!(Marker(0).to_string(), "=");
    }

    #[test]
    fn panel_with_absent_and_failed_years() {
        use std::collections::BTreeMap;
        let reg = Registry::from_codes(["A", "B", "C", "D", "E"]).unwrap();
        let base: Vec<_> = fixtures::FOUR_COUNTRY_FLOWS.to_vec();
        let y1 = crate::flow::build_flow_matrix(reg.clone(), base.clone()).unwrap();
        let y2 = crate::flow::build_flow_matrix(reg.clone(), [("A", "B", 1.0), ("C", "D", 1.0)]).unwrap();
        let panel = FlowPanel::new(reg, BTreeMap::from([(2010, y1), (2011, y2)])).unwrap();
        let t = panel_trajectory(&panel, Method::LeastSquares, DEFAULT_TIE_TOLERANCE);
        assert_eq!(t.series("A").unwrap(), vec![(2010, YearCell::Rank(1)), (2011, YearCell::Failed)]);
        assert_eq!(t.series("E").unwrap()[0], (2010, YearCell::Absent));
        assert_eq!(t.failures.len(), 1);
        assert!(matches!(t.failures[0], (2011, Error::DisconnectedGraph { .. })));
    }
}
