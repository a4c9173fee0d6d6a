//! Stochastic intervention policies: one hypothetical treatment distribution
//! per outcome unit, over that unit's intervention set.

use crate::design::AssignmentDistribution;
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::numeric::{bit, bits_of_mask, in_unit_interval, to_f64, Prob};
use num::traits::{One, Signed, Zero};
use std::sync::Arc;

/// Exposure summaries available for target-exposure policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExposureFn {
    /// Fraction of the unit's exposure neighbourhood that is treated.
    ProportionTreated,
    /// Number of treated units in the exposure neighbourhood.
    CountTreated,
}

/// The local distribution h_m for one outcome unit.
#[derive(Debug, Clone)]
pub enum LocalPolicyKind {
    /// Independent coin flips with probability `alpha` on each unit of 𝒩_m.
    Bernoulli { alpha: Prob },
    /// A single local assignment.
    PointMass { local: Vec<u8> },
    /// A designated unit held at `arm`; the rest flipped independently.
    KeyAssociated { key_unit: usize, arm: u8, p: Prob },
    /// Explicit distribution over local assignments.
    Tabulated { rows: Vec<(Vec<u8>, Prob)> },
    /// The marginal that a full design implies on 𝒩_m.
    Implied { design: Arc<AssignmentDistribution> },
}

/// A family of local distributions, one per outcome unit.
#[derive(Debug, Clone)]
pub struct LocalPolicy {
    entries: Vec<LocalPolicyKind>,
}

impl LocalPolicy {
    /// One entry per outcome unit; validates parameters and normalizes any
    /// tabulated entries.
    pub fn from_entries(entries: Vec<LocalPolicyKind>) -> Result<Self> {
        let entries = entries
            .into_iter()
            .map(validate_entry)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    /// Independent flips with the same rate for every outcome unit.
    pub fn bernoulli(n_outcome: usize, alpha: Prob) -> Result<Self> {
        Self::from_entries(vec![LocalPolicyKind::Bernoulli { alpha }; n_outcome])
    }

    /// Point mass on the constant-arm local assignment of every unit.
    pub fn constant_arm(g: &BipartiteGraph, arm: u8) -> Result<Self> {
        let entries = (0..g.n_outcome())
            .map(|m| LocalPolicyKind::PointMass {
                local: vec![arm; g.intervention_set(m).len()],
            })
            .collect();
        Self::from_entries(entries)
    }

    /// The marginals a full design implies on each intervention set.
    pub fn implied(design: AssignmentDistribution, n_outcome: usize) -> Result<Self> {
        let design = Arc::new(design);
        Self::from_entries(vec![
            LocalPolicyKind::Implied {
                design: design.clone()
            };
            n_outcome
        ])
    }

    /// Key-associated policy: for each outcome unit, its first intervention
    /// unit is held at `arm` and the rest are flipped with rate `p`. Isolated
    /// units get the empty point mass.
    pub fn key_associated_first(g: &BipartiteGraph, arm: u8, p: Prob) -> Result<Self> {
        let entries = (0..g.n_outcome())
            .map(|m| match g.intervention_set(m).first() {
                Some(&key) => LocalPolicyKind::KeyAssociated {
                    key_unit: key,
                    arm,
                    p: p.clone(),
                },
                None => LocalPolicyKind::PointMass { local: Vec::new() },
            })
            .collect();
        Self::from_entries(entries)
    }

    /// Uniform-over-level-set policy targeting exposure `targets[m]` for
    /// every outcome unit; see [`target_exposure_local`].
    pub fn target_exposure(
        g: &BipartiteGraph,
        a_star: &BipartiteGraph,
        f: ExposureFn,
        targets: &[Prob],
        cap: usize,
    ) -> Result<Self> {
        if targets.len() != g.n_outcome() {
            return Err(Error::InvalidInput(format!(
                "{} exposure targets for {} outcome units",
                targets.len(),
                g.n_outcome()
            )));
        }
        let entries = (0..g.n_outcome())
            .map(|m| target_exposure_local(g, a_star, f, m, &targets[m], cap))
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(entries)
    }

    pub fn n_outcome(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, m: usize) -> &LocalPolicyKind {
        &self.entries[m]
    }

    /// h_m evaluated at a local assignment of 𝒩_m.
    pub fn prob(&self, g: &BipartiteGraph, m: usize, local: &[u8]) -> Result<Prob> {
        let set = g.intervention_set(m);
        if local.len() != set.len() {
            return Err(Error::InvalidInput(format!(
                "outcome unit {m} has {} intervention units but local vector has {}",
                set.len(),
                local.len()
            )));
        }
        if local.iter().any(|&x| x > 1) {
            return Err(Error::InvalidInput("treatment values must be 0 or 1".into()));
        }
        match &self.entries[m] {
            LocalPolicyKind::Bernoulli { alpha } => {
                let q = Prob::one() - alpha;
                let mut acc = Prob::one();
                for &ai in local {
                    acc *= if ai == 1 { alpha } else { &q };
                }
                Ok(acc)
            }
            LocalPolicyKind::PointMass { local: target } => {
                if target.len() != set.len() {
                    return Err(Error::InvalidInput(format!(
                        "point-mass entry for unit {m} has wrong length"
                    )));
                }
                Ok(if local == target.as_slice() {
                    Prob::one()
                } else {
                    Prob::zero()
                })
            }
            LocalPolicyKind::KeyAssociated { key_unit, arm, p } => {
                let pos = set.binary_search(key_unit).map_err(|_| {
                    Error::InvalidInput(format!(
                        "key unit {key_unit} is not in the intervention set of outcome unit {m}"
                    ))
                })?;
                if local[pos] != *arm {
                    return Ok(Prob::zero());
                }
                let q = Prob::one() - p;
                let mut acc = Prob::one();
                for (i, &ai) in local.iter().enumerate() {
                    if i == pos {
                        continue;
                    }
                    acc *= if ai == 1 { p } else { &q };
                }
                Ok(acc)
            }
            LocalPolicyKind::Tabulated { rows } => {
                if rows[0].0.len() != set.len() {
                    return Err(Error::InvalidInput(format!(
                        "tabulated entry for unit {m} has wrong length"
                    )));
                }
                Ok(rows
                    .iter()
                    .find(|(w, _)| w == local)
                    .map(|(_, p)| p.clone())
                    .unwrap_or_else(Prob::zero))
            }
            LocalPolicyKind::Implied { design } => {
                if design.n_units() != g.n_intervention() {
                    return Err(Error::InvalidInput(
                        "implied-policy design does not match the graph".into(),
                    ));
                }
                design.marginal_prob(set, local)
            }
        }
    }

    /// Positive-probability local assignments of h_m with exact
    /// probabilities, ordered by ascending mask.
    pub fn support(
        &self,
        g: &BipartiteGraph,
        m: usize,
        cap: usize,
    ) -> Result<Vec<(Vec<u8>, Prob)>> {
        let set = g.intervention_set(m);
        if set.len() > cap {
            return Err(Error::CapExceeded {
                needed: set.len(),
                cap,
            });
        }
        match &self.entries[m] {
            LocalPolicyKind::Bernoulli { alpha } => {
                Ok(coin_support(&vec![alpha.clone(); set.len()]))
            }
            LocalPolicyKind::PointMass { local } => {
                if local.len() != set.len() {
                    return Err(Error::InvalidInput(format!(
                        "point-mass entry for unit {m} has wrong length"
                    )));
                }
                Ok(vec![(local.clone(), Prob::one())])
            }
            LocalPolicyKind::KeyAssociated { key_unit, arm, p } => {
                let pos = set.binary_search(key_unit).map_err(|_| {
                    Error::InvalidInput(format!(
                        "key unit {key_unit} is not in the intervention set of outcome unit {m}"
                    ))
                })?;
                let coins: Vec<Prob> = (0..set.len())
                    .map(|i| {
                        if i == pos {
                            if *arm == 1 {
                                Prob::one()
                            } else {
                                Prob::zero()
                            }
                        } else {
                            p.clone()
                        }
                    })
                    .collect();
                Ok(coin_support(&coins))
            }
            LocalPolicyKind::Tabulated { rows } => {
                if rows[0].0.len() != set.len() {
                    return Err(Error::InvalidInput(format!(
                        "tabulated entry for unit {m} has wrong length"
                    )));
                }
                Ok(rows.clone())
            }
            LocalPolicyKind::Implied { design } => design.support_on(set, cap),
        }
    }

    /// True when every h_m equals the marginal that `candidate` implies on
    /// 𝒩_m, within [`crate::tolerances::IMPLEMENTABLE`].
    pub fn is_implementable(
        &self,
        g: &BipartiteGraph,
        candidate: &AssignmentDistribution,
        cap: usize,
    ) -> Result<bool> {
        if candidate.n_units() != g.n_intervention() {
            return Err(Error::InvalidInput(
                "candidate design does not match the graph".into(),
            ));
        }
        for m in 0..g.n_outcome() {
            let set = g.intervention_set(m);
            if set.len() > cap {
                return Err(Error::CapExceeded {
                    needed: set.len(),
                    cap,
                });
            }
            for mask in 0usize..(1 << set.len()) {
                let local = bits_of_mask(mask, set.len());
                let h = self.prob(g, m, &local)?;
                let implied = candidate.marginal_prob(set, &local)?;
                if to_f64(&(h - implied)).abs() > crate::tolerances::IMPLEMENTABLE {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn validate_entry(entry: LocalPolicyKind) -> Result<LocalPolicyKind> {
    match entry {
        LocalPolicyKind::Bernoulli { alpha } => {
            if !in_unit_interval(&alpha) {
                return Err(Error::InvalidInput(format!(
                    "policy rate {alpha} outside [0, 1]"
                )));
            }
            Ok(LocalPolicyKind::Bernoulli { alpha })
        }
        LocalPolicyKind::PointMass { local } => {
            if local.iter().any(|&x| x > 1) {
                return Err(Error::InvalidInput("assignment entries must be 0 or 1".into()));
            }
            Ok(LocalPolicyKind::PointMass { local })
        }
        LocalPolicyKind::KeyAssociated { key_unit, arm, p } => {
            if arm > 1 {
                return Err(Error::InvalidInput("key arm must be 0 or 1".into()));
            }
            if !in_unit_interval(&p) {
                return Err(Error::InvalidInput(format!(
                    "policy rate {p} outside [0, 1]"
                )));
            }
            Ok(LocalPolicyKind::KeyAssociated { key_unit, arm, p })
        }
        LocalPolicyKind::Tabulated { rows } => {
            let rows = normalize_table(rows)?;
            Ok(LocalPolicyKind::Tabulated { rows })
        }
        LocalPolicyKind::Implied { design } => Ok(LocalPolicyKind::Implied { design }),
    }
}

/// Validates and exactly renormalizes an explicit probability table.
fn normalize_table(rows: Vec<(Vec<u8>, Prob)>) -> Result<Vec<(Vec<u8>, Prob)>> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("empty probability table".into()));
    }
    let len = rows[0].0.len();
    let mut total = Prob::zero();
    for (w, p) in &rows {
        if w.len() != len {
            return Err(Error::InvalidInput("table rows of unequal length".into()));
        }
        if w.iter().any(|&x| x > 1) {
            return Err(Error::InvalidInput("assignment entries must be 0 or 1".into()));
        }
        if p.is_negative() {
            return Err(Error::InvalidInput(format!("negative probability {p}")));
        }
        total += p;
    }
    if (to_f64(&total) - 1.0).abs() > crate::tolerances::PROB_SUM {
        return Err(Error::InvalidInput(format!(
            "table probabilities sum to {}, not 1",
            to_f64(&total)
        )));
    }
    let mut merged: std::collections::BTreeMap<Vec<u8>, Prob> = std::collections::BTreeMap::new();
    for (w, p) in rows {
        if p.is_zero() {
            continue;
        }
        *merged.entry(w).or_insert_with(Prob::zero) += p;
    }
    if merged.is_empty() {
        return Err(Error::InvalidInput("table has all-zero probabilities".into()));
    }
    Ok(merged.into_iter().map(|(w, p)| (w, p / &total)).collect())
}

/// Support of independent coins, ascending mask order, degenerate coins
/// contributing one branch.
fn coin_support(ps: &[Prob]) -> Vec<(Vec<u8>, Prob)> {
    let mut rows: Vec<(Vec<u8>, Prob)> = vec![(Vec::new(), Prob::one())];
    for p in ps {
        let q = Prob::one() - p;
        let mut next = Vec::with_capacity(rows.len() * 2);
        if !q.is_zero() {
            for (w, pr) in &rows {
                let mut w = w.clone();
                w.push(0);
                next.push((w, pr * &q));
            }
        }
        if !p.is_zero() {
            for (w, pr) in &rows {
                let mut w = w.clone();
                w.push(1);
                next.push((w, pr * p));
            }
        }
        rows = next;
    }
    rows
}

/// The local policy that unit `m` inherits from a uniform draw over all
/// global assignments whose exposure (computed on the `a_star` graph) hits
/// the target exactly.
///
/// Intervention units outside 𝒩_m ∪ 𝒩*_m are unconstrained and cancel from
/// the marginal, so only the merged neighbourhood is enumerated.
pub fn target_exposure_local(
    g: &BipartiteGraph,
    a_star: &BipartiteGraph,
    f: ExposureFn,
    m: usize,
    target: &Prob,
    cap: usize,
) -> Result<LocalPolicyKind> {
    if a_star.n_intervention() != g.n_intervention() || a_star.n_outcome() != g.n_outcome() {
        return Err(Error::InvalidInput(
            "exposure graph shape does not match the interference graph".into(),
        ));
    }
    let set = g.intervention_set(m);
    let star = a_star.intervention_set(m);
    if star.is_empty() && matches!(f, ExposureFn::ProportionTreated) {
        return Err(Error::InvalidInput(format!(
            "outcome unit {m} has an empty exposure neighbourhood; proportion undefined"
        )));
    }

    let mut union = Vec::with_capacity(set.len() + star.len());
    let (mut i, mut j) = (0, 0);
    while i < set.len() && j < star.len() {
        match set[i].cmp(&star[j]) {
            std::cmp::Ordering::Less => {
                union.push(set[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                union.push(star[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                union.push(set[i]);
                i += 1;
                j += 1;
            }
        }
    }
    union.extend_from_slice(&set[i..]);
    union.extend_from_slice(&star[j..]);
    if union.len() > cap {
        return Err(Error::CapExceeded {
            needed: union.len(),
            cap,
        });
    }

    let star_pos: Vec<usize> = star
        .iter()
        .map(|u| union.binary_search(u).unwrap())
        .collect();
    let set_pos: Vec<usize> = set
        .iter()
        .map(|u| union.binary_search(u).unwrap())
        .collect();

    let mut counts: std::collections::BTreeMap<usize, u64> = std::collections::BTreeMap::new();
    let mut total: u64 = 0;
    for mask in 0usize..(1 << union.len()) {
        let treated = star_pos.iter().filter(|&&p| bit(mask, p) == 1).count();
        let exposure = match f {
            ExposureFn::CountTreated => Prob::from_integer(treated.into()),
            ExposureFn::ProportionTreated =>

                Prob::new(treated.into(), star.len().into()),
        };
        if exposure == *target {
            let local_mask = set_pos
                .iter()
                .enumerate()
                .fold(0usize, |acc, (k, &p)| acc | ((bit(mask, p) as usize) << k));
            *counts.entry(local_mask).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyLevelSet {
            unit: m,
            target: format!("{target}"),
        });
    }
    let rows: Vec<(Vec<u8>, Prob)> = counts
        .into_iter()
        .map(|(mask, c)| {
            (
                bits_of_mask(mask, set.len()),
                Prob::new(c.into(), total.into()),
            )
        })
        .collect();
    Ok(LocalPolicyKind::Tabulated { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;

    /// Three intervention units feeding eight outcome units; unit 4 (index 3)
    /// listens to {0, 1}.
    fn overlap_graph() -> BipartiteGraph {
        let edges = [
            (0, 0),
            (0, 1),
            (0, 2),
            (0, 3),
            (1, 3),
            (1, 4),
            (1, 5),
            (1, 6),
            (2, 5),
            (2, 6),
            (2, 7),
        ];
        BipartiteGraph::new(3, 8, &edges).unwrap()
    }

    #[test]
    fn bernoulli_policy_probability() {
        let g = overlap_graph();
        let h = LocalPolicy::bernoulli(8, ratio(1, 2)).unwrap();
        assert_eq!(h.prob(&g, 3, &[1, 1]).unwrap(), ratio(1, 4));
        assert_eq!(h.prob(&g, 0, &[0]).unwrap(), ratio(1, 2));
    }

    #[test]
    fn key_associated_policy() {
        let g = overlap_graph();
        let h = LocalPolicy::key_associated_first(&g, 1, ratio(3, 10)).unwrap();
        // Unit 3 has set {0, 1}; key unit 0 must be treated.
        assert_eq!(h.prob(&g, 3, &[0, 1]).unwrap(), ratio(0, 1));
        assert_eq!(h.prob(&g, 3, &[1, 1]).unwrap(), ratio(3, 10));
        assert_eq!(h.prob(&g, 3, &[1, 0]).unwrap(), ratio(7, 10));
        let support = h.support(&g, 3, 20).unwrap();
        let total: Prob = support.iter().map(|(_, p)| p.clone()).sum();
        assert!(total.is_one());
        assert!(support.iter().all(|(w, _)| w[0] == 1));
    }

    #[test]
    fn implied_policy_matches_design_marginal() {
        let g = overlap_graph();
        let d = AssignmentDistribution::crd(3, 1).unwrap();
        let h = LocalPolicy::implied(d.clone(), 8).unwrap();
        assert_eq!(h.prob(&g, 3, &[0, 0]).unwrap(), ratio(1, 3));
        let rows = h.support(&g, 3, 20).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(h.is_implementable(&g, &d, 20).unwrap());
    }

    #[test]
    fn point_mass_conflict_is_not_implementable() {
        let g = overlap_graph();
        // Unit 2 demands its set {0} all-treated; unit 3 demands {0, 1}
        // all-control. They disagree on shared unit 0, so no single design
        // matches both.
        let mut entries = Vec::new();
        for m in 0..8 {
            let len = g.intervention_set(m).len();
            entries.push(if m == 3 {
                LocalPolicyKind::PointMass {
                    local: vec![0; len],
                }
            } else {
                LocalPolicyKind::PointMass {
                    local: vec![1; len],
                }
            });
        }
        let h = LocalPolicy::from_entries(entries).unwrap();
        for candidate in [
            AssignmentDistribution::bernoulli(3, ratio(1, 2)).unwrap(),
            AssignmentDistribution::point_mass(vec![1, 0, 1]).unwrap(),
            AssignmentDistribution::point_mass(vec![1, 1, 1]).unwrap(),
        ] {
            assert!(!h.is_implementable(&g, &candidate, 20).unwrap());
        }
    }

    #[test]
    fn bernoulli_policy_is_implementable_by_bernoulli_design() {
        let g = overlap_graph();
        let h = LocalPolicy::bernoulli(8, ratio(1, 4)).unwrap();
        let d = AssignmentDistribution::bernoulli(3, ratio(1, 4)).unwrap();
        assert!(h.is_implementable(&g, &d, 20).unwrap());
        let other = AssignmentDistribution::bernoulli(3, ratio(1, 3)).unwrap();
        assert!(!h.is_implementable(&g, &other, 20).unwrap());
    }

    #[test]
    fn target_exposure_full_proportion_is_point_mass() {
        let g = overlap_graph();
        let entry = target_exposure_local(
            &g,
            &g,
            ExposureFn::ProportionTreated,
            3,
            &ratio(1, 1),
            20,
        )
        .unwrap();
        match entry {
            LocalPolicyKind::Tabulated { rows } => {
                assert_eq!(rows, vec![(vec![1, 1], ratio(1, 1))]);
            }
            other => panic!("expected table, got {other:?}"),
        }
    }

    #[test]
    fn target_exposure_count_one_is_uniform_pair() {
        let g = overlap_graph();
        let entry =
            target_exposure_local(&g, &g, ExposureFn::CountTreated, 3, &ratio(1, 1), 20).unwrap();
        match entry {
            LocalPolicyKind::Tabulated { rows } => {
                assert_eq!(
                    rows,
                    vec![
                        (vec![1, 0], ratio(1, 2)),
                        (vec![0, 1], ratio(1, 2)),
                    ]
                );
            }
            other => panic!("expected table, got {other:?}"),
        }
    }

    #[test]
    fn target_exposure_unattainable_level() {
        let g = overlap_graph();
        let err =
            target_exposure_local(&g, &g, ExposureFn::ProportionTreated, 3, &ratio(37, 100), 20)
                .unwrap_err();
        assert!(matches!(err, Error::EmptyLevelSet { unit: 3, .. }));
    }

    #[test]
    fn target_exposure_distinct_exposure_graph() {
        let g = overlap_graph();
        // Exposure graph links unit 3 to intervention units {1, 2} while the
        // interference set is {0, 1}: one shared unit, one exposure-only.
        let a_star = BipartiteGraph::new(3, 8, &[(1, 3), (2, 3)]).unwrap();
        let entry = target_exposure_local(
            &g,
            &a_star,
            ExposureFn::CountTreated,
            3,
            &ratio(1, 1),
            20,
        )
        .unwrap();
        // Level set over {0,1,2}: exactly one of {1,2} treated, unit 0 free.
        // Projection onto {0,1}: each of the four local vectors shows up
        // equally often.
        match entry {
            LocalPolicyKind::Tabulated { rows } => {
                assert_eq!(rows.len(), 4);
                for (_, p) in rows {
                    assert_eq!(p, ratio(1, 4));
                }
            }
            other => panic!("expected table, got {other:?}"),
        }
    }

    #[test]
    fn tabulated_entries_are_normalized() {
        let rows = vec![
            (vec![0, 1], ratio(1, 2)),
            (vec![1, 0], ratio(1, 4)),
            (vec![1, 0], ratio(1, 4)),
        ];
        let h = LocalPolicy::from_entries(vec![LocalPolicyKind::Tabulated { rows }]).unwrap();
        match h.entry(0) {
            LocalPolicyKind::Tabulated { rows } => {
                assert_eq!(rows.len(), 2);
                assert!(rows.iter().all(|(_, p)| *p == ratio(1, 2)));
            }
            other => panic!("expected table, got {other:?}"),
        }
    }
}
