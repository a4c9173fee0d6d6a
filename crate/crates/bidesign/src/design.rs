//! Experimental designs over the intervention units, with exact probability
//! queries for arbitrary sub-vectors of the assignment.
//!
//! Every query returns an exact rational, so downstream positivity checks can
//! distinguish a genuinely zero probability from a tiny one. Subset queries
//! take the unit ids in strictly increasing order, which is how
//! [`crate::graph::BipartiteGraph`] hands out intervention sets.

use crate::error::{Error, Result};
use crate::numeric::{binomial, bit, bits_of_mask, in_unit_interval, to_f64, Prob};
use itertools::Itertools;
use num::bigint::BigInt;
use num::traits::{One, Signed, Zero};
use rand::Rng;
use std::collections::BTreeMap;

/// Partition of the intervention units into named strata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strata {
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
    labels: Vec<String>,
}

impl Strata {
    /// Builds a partition from a per-unit stratum index and stratum labels.
    pub fn new(assignment: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("no strata given".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(Error::InvalidInput(format!("duplicate stratum label '{l}'")));
            }
        }
        let mut members = vec![Vec::new(); labels.len()];
        for (unit, &r) in assignment.iter().enumerate() {
            if r >= labels.len() {
                return Err(Error::InvalidInput(format!(
                    "unit {unit} assigned to unknown stratum index {r}"
                )));
            }
            members[r].push(unit);
        }
        for (r, m) in members.iter().enumerate() {
            if m.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "stratum '{}' has no units",
                    labels[r]
                )));
            }
        }
        Ok(Self {
            assignment,
            members,
            labels,
        })
    }

    /// Builds a partition from one label per unit, numbering strata in order
    /// of first appearance.
    pub fn from_labels(per_unit: &[String]) -> Result<Self> {
        let mut labels: Vec<String> = Vec::new();
        let mut assignment = Vec::with_capacity(per_unit.len());
        for l in per_unit {
            let r = match labels.iter().position(|x| x == l) {
                Some(r) => r,
                None => {
                    labels.push(l.clone());
                    labels.len() - 1
                }
            };
            assignment.push(r);
        }
        Self::new(assignment, labels)
    }

    pub fn n_units(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_strata(&self) -> usize {
        self.labels.len()
    }

    pub fn stratum_of(&self, unit: usize) -> usize {
        self.assignment[unit]
    }

    pub fn members(&self, r: usize) -> &[usize] {
        &self.members[r]
    }

    pub fn label(&self, r: usize) -> &str {
        &self.labels[r]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }
}

/// The supported families of assignment distributions.
#[derive(Debug, Clone)]
pub enum DesignKind {
    /// Independent coin flips with a common treatment probability.
    Bernoulli { p: Prob },
    /// Independent coin flips with one probability per stratum.
    StratifiedBernoulli { strata: Strata, p: Vec<Prob> },
    /// Exactly `n_treated` units treated, uniformly over such assignments.
    Crd { n_treated: usize },
    /// Independent complete randomization within each stratum.
    StratifiedCrd { strata: Strata, n_treated: Vec<usize> },
    /// A single deterministic assignment.
    PointMass { w: Vec<u8> },
    /// An explicit finite support with probabilities.
    Tabulated { rows: Vec<(Vec<u8>, Prob)> },
}

/// A distribution over treatment assignments of the intervention units.
#[derive(Debug, Clone)]
pub struct AssignmentDistribution {
    n_units: usize,
    kind: DesignKind,
}

impl AssignmentDistribution {
    pub fn bernoulli(n_units: usize, p: Prob) -> Result<Self> {
        if n_units == 0 {
            return Err(Error::InvalidInput("design over zero units".into()));
        }
        if !in_unit_interval(&p) {
            return Err(Error::InvalidInput(format!(
                "treatment probability {p} outside [0, 1]"
            )));
        }
        Ok(Self {
            n_units,
            kind: DesignKind::Bernoulli { p },
        })
    }

    pub fn stratified_bernoulli(strata: Strata, p: Vec<Prob>) -> Result<Self> {
        if p.len() != strata.n_strata() {
            return Err(Error::InvalidInput(format!(
                "{} strata but {} probabilities",
                strata.n_strata(),
                p.len()
            )));
        }
        for (r, pr) in p.iter().enumerate() {
            if !in_unit_interval(pr) {
                return Err(Error::InvalidInput(format!(
                    "stratum '{}' probability {pr} outside [0, 1]",
                    strata.label(r)
                )));
            }
        }
        Ok(Self {
            n_units: strata.n_units(),
            kind: DesignKind::StratifiedBernoulli { strata, p },
        })
    }

    pub fn crd(n_units: usize, n_treated: usize) -> Result<Self> {
        if n_units == 0 {
            return Err(Error::InvalidInput("design over zero units".into()));
        }
        if n_treated > n_units {
            return Err(Error::InvalidInput(format!(
                "cannot treat {n_treated} of {n_units} units"
            )));
        }
        Ok(Self {
            n_units,
            kind: DesignKind::Crd { n_treated },
        })
    }

    pub fn stratified_crd(strata: Strata, n_treated: Vec<usize>) -> Result<Self> {
        if n_treated.len() != strata.n_strata() {
            return Err(Error::InvalidInput(format!(
                "{} strata but {} treated counts",
                strata.n_strata(),
                n_treated.len()
            )));
        }
        for (r, &t) in n_treated.iter().enumerate() {
            if t > strata.members(r).len() {
                return Err(Error::InvalidInput(format!(
                    "stratum '{}' treats {t} of {} units",
                    strata.label(r),
                    strata.members(r).len()
                )));
            }
        }
        Ok(Self {
            n_units: strata.n_units(),
            kind: DesignKind::StratifiedCrd { strata, n_treated },
        })
    }

    pub fn point_mass(w: Vec<u8>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidInput("design over zero units".into()));
        }
        if w.iter().any(|&x| x > 1) {
            return Err(Error::InvalidInput("assignment entries must be 0 or 1".into()));
        }
        Ok(Self {
            n_units: w.len(),
            kind: DesignKind::PointMass { w },
        })
    }

    /// Builds an explicit-support design. Probabilities must be nonnegative
    /// and sum to one within [`crate::tolerances::PROB_SUM`]; they are then
    /// renormalized exactly. Zero-probability rows are dropped and duplicate
    /// assignments merged.
    pub fn tabulated(rows: Vec<(Vec<u8>, Prob)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("tabulated design with no rows".into()));
        }
        let n_units = rows[0].0.len();
        if n_units == 0 {
            return Err(Error::InvalidInput("design over zero units".into()));
        }
        let mut total = Prob::zero();
        for (w, p) in &rows {
            if w.len() != n_units {
                return Err(Error::InvalidInput(
                    "tabulated rows of unequal length".into(),
                ));
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
                "tabulated probabilities sum to {}, not 1",
                to_f64(&total)
            )));
        }
        let mut merged: BTreeMap<Vec<u8>, Prob> = BTreeMap::new();
        for (w, p) in rows {
            if p.is_zero() {
                continue;
            }
            *merged.entry(w).or_insert_with(Prob::zero) += p;
        }
        if merged.is_empty() {
            return Err(Error::InvalidInput(
                "tabulated design with all-zero probabilities".into(),
            ));
        }
        let rows = merged
            .into_iter()
            .map(|(w, p)| (w, p / &total))
            .collect();
        Ok(Self {
            n_units,
            kind: DesignKind::Tabulated { rows },
        })
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn kind(&self) -> &DesignKind {
        &self.kind
    }

    /// Total treated count when the design fixes it exactly.
    pub fn fixed_treated_count(&self) -> Option<usize> {
        match &self.kind {
            DesignKind::Bernoulli { p } => {
                if p.is_zero() {
                    Some(0)
                } else if p.is_one() {
                    Some(self.n_units)
                } else {
                    None
                }
            }
            DesignKind::StratifiedBernoulli { strata, p } => {
                let mut count = 0;
                for (r, pr) in p.iter().enumerate() {
                    if pr.is_zero() {
                        continue;
                    } else if pr.is_one() {
                        count += strata.members(r).len();
                    } else {
                        return None;
                    }
                }
                Some(count)
            }
            DesignKind::Crd { n_treated } => Some(*n_treated),
            DesignKind::StratifiedCrd { n_treated, .. } => Some(n_treated.iter().sum()),
            DesignKind::PointMass { w } => Some(w.iter().map(|&x| x as usize).sum()),
            DesignKind::Tabulated { rows } => {
                let count: usize = rows[0].0.iter().map(|&x| x as usize).sum();
                rows[1..]
                    .iter()
                    .all(|(w, _)| w.iter().map(|&x| x as usize).sum::<usize>() == count)
                    .then_some(count)
            }
        }
    }

    fn check_subset(&self, units: &[usize], a: &[u8]) -> Result<()> {
        if units.len() != a.len() {
            return Err(Error::InvalidInput(format!(
                "{} units but {} treatment values",
                units.len(),
                a.len()
            )));
        }
        if a.iter().any(|&x| x > 1) {
            return Err(Error::InvalidInput("treatment values must be 0 or 1".into()));
        }
        for w in units.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidInput(
                    "subset units must be strictly increasing".into(),
                ));
            }
        }
        if let Some(&last) = units.last() {
            if last >= self.n_units {
                return Err(Error::InvalidInput(format!(
                    "unit {last} out of range (design has {} units)",
                    self.n_units
                )));
            }
        }
        Ok(())
    }

    /// Probability that the units in `units` receive exactly the treatments
    /// in `a`. The empty subset has probability one.
    pub fn marginal_prob(&self, units: &[usize], a: &[u8]) -> Result<Prob> {
        self.check_subset(units, a)?;
        Ok(self.marginal_unchecked(units, a))
    }

    fn marginal_unchecked(&self, units: &[usize], a: &[u8]) -> Prob {
        match &self.kind {
            DesignKind::Bernoulli { p } => {
                let q = Prob::one() - p;
                let mut acc = Prob::one();
                for &ai in a {
                    acc *= if ai == 1 { p } else { &q };
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            DesignKind::StratifiedBernoulli { strata, p } => {
                let mut acc = Prob::one();
                for (&u, &ai) in units.iter().zip(a) {
                    let pr = &p[strata.stratum_of(u)];
                    if ai == 1 {
                        acc *= pr;
                    } else {
                        acc *= Prob::one() - pr;
                    }
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            DesignKind::Crd { n_treated } => {
                crd_marginal(self.n_units, *n_treated, units.len(), count_ones(a))
            }
            DesignKind::StratifiedCrd { strata, n_treated } => {
                let mut per: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
                for (&u, &ai) in units.iter().zip(a) {
                    let e = per.entry(strata.stratum_of(u)).or_insert((0, 0));
                    e.0 += 1;
                    e.1 += ai as usize;
                }
                let mut acc = Prob::one();
                for (r, (s_r, k_r)) in per {
                    acc *= crd_marginal(strata.members(r).len(), n_treated[r], s_r, k_r);
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            DesignKind::PointMass { w } => {
                if units.iter().zip(a).all(|(&u, &ai)| w[u] == ai) {
                    Prob::one()
                } else {
                    Prob::zero()
                }
            }
            DesignKind::Tabulated { rows } => {
                let mut acc = Prob::zero();
                for (w, p) in rows {
                    if units.iter().zip(a).all(|(&u, &ai)| w[u] == ai) {
                        acc += p;
                    }
                }
                acc
            }
        }
    }

    /// Probability that two subsets simultaneously receive the given
    /// treatments. Zero when the subsets assign conflicting values to a
    /// shared unit; otherwise the marginal on the merged subset.
    pub fn joint_prob(&self, units1: &[usize], a1: &[u8], units2: &[usize], a2: &[u8]) -> Result<Prob> {
        self.check_subset(units1, a1)?;
        self.check_subset(units2, a2)?;
        let mut units = Vec::with_capacity(units1.len() + units2.len());
        let mut a = Vec::with_capacity(units.capacity());
        let (mut i, mut j) = (0, 0);
        while i < units1.len() && j < units2.len() {
            match units1[i].cmp(&units2[j]) {
                std::cmp::Ordering::Less => {
                    units.push(units1[i]);
                    a.push(a1[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    units.push(units2[j]);
                    a.push(a2[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if a1[i] != a2[j] {
                        return Ok(Prob::zero());
                    }
                    units.push(units1[i]);
                    a.push(a1[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        while i < units1.len() {
            units.push(units1[i]);
            a.push(a1[i]);
            i += 1;
        }
        while j < units2.len() {
            units.push(units2[j]);
            a.push(a2[j]);
            j += 1;
        }
        Ok(self.marginal_unchecked(&units, &a))
    }

    /// Probability of a complete assignment vector.
    pub fn prob_of(&self, w: &[u8]) -> Result<Prob> {
        if w.len() != self.n_units {
            return Err(Error::InvalidInput(format!(
                "assignment has {} entries for {} units",
                w.len(),
                self.n_units
            )));
        }
        let units: Vec<usize> = (0..self.n_units).collect();
        self.marginal_prob(&units, w)
    }

    /// The positive-probability restrictions of the design to `units`,
    /// with their exact probabilities. Rows are ordered by the mask formed
    /// with `units[i]` at bit `i`, ascending.
    pub fn support_on(&self, units: &[usize], cap: usize) -> Result<Vec<(Vec<u8>, Prob)>> {
        let probe = vec![0u8; units.len()];
        self.check_subset(units, &probe)?;
        if units.len() > cap {
            return Err(Error::CapExceeded {
                needed: units.len(),
                cap,
            });
        }
        let s = units.len();
        Ok(match &self.kind {
            DesignKind::Bernoulli { p } => {
                let ps = vec![p.clone(); s];
                product_support(&ps)
            }
            DesignKind::StratifiedBernoulli { strata, p } => {
                let ps: Vec<Prob> = units
                    .iter()
                    .map(|&u| p[strata.stratum_of(u)].clone())
                    .collect();
                product_support(&ps)
            }
            DesignKind::Crd { n_treated } => {
                let table = crd_marginal_table(self.n_units, *n_treated, s);
                let mut rows = Vec::new();
                for mask in 0usize..(1 << s) {
                    let k = mask.count_ones() as usize;
                    if !table[k].is_zero() {
                        rows.push((bits_of_mask(mask, s), table[k].clone()));
                    }
                }
                rows
            }
            DesignKind::StratifiedCrd { strata, n_treated } => {
                let per_unit_stratum: Vec<usize> =
                    units.iter().map(|&u| strata.stratum_of(u)).collect();
                let touched: Vec<usize> = per_unit_stratum.iter().copied().unique().collect();
                let mut sizes_in_subset: BTreeMap<usize, usize> = BTreeMap::new();
                for &r in &per_unit_stratum {
                    *sizes_in_subset.entry(r).or_insert(0) += 1;
                }
                let tables: BTreeMap<usize, Vec<Prob>> = touched
                    .iter()
                    .map(|&r| {
                        (
                            r,
                            crd_marginal_table(
                                strata.members(r).len(),
                                n_treated[r],
                                sizes_in_subset[&r],
                            ),
                        )
                    })
                    .collect();
                let mut rows = Vec::new();
                let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
                for mask in 0usize..(1 << s) {
                    counts.clear();
                    for i in 0..s {
                        if bit(mask, i) == 1 {
                            *counts.entry(per_unit_stratum[i]).or_insert(0) += 1;
                        }
                    }
                    let mut p = Prob::one();
                    for &r in &touched {
                        let k = counts.get(&r).copied().unwrap_or(0);
                        p *= &tables[&r][k];
                        if p.is_zero() {
                            break;
                        }
                    }
                    if !p.is_zero() {
                        rows.push((bits_of_mask(mask, s), p));
                    }
                }
                rows
            }
            DesignKind::PointMass { w } => {
                vec![(units.iter().map(|&u| w[u]).collect(), Prob::one())]
            }
            DesignKind::Tabulated { rows } => {
                let mut acc: BTreeMap<usize, Prob> = BTreeMap::new();
                for (w, p) in rows {
                    let mut mask = 0usize;
                    for (i, &u) in units.iter().enumerate() {
                        mask |= (w[u] as usize) << i;
                    }
                    *acc.entry(mask).or_insert_with(Prob::zero) += p;
                }
                acc.into_iter()
                    .map(|(mask, p)| (bits_of_mask(mask, s), p))
                    .collect()
            }
        })
    }

    /// Number of assignments with positive probability.
    pub fn support_size(&self) -> BigInt {
        match &self.kind {
            DesignKind::Bernoulli { p } => {
                if p.is_zero() || p.is_one() {
                    BigInt::one()
                } else {
                    BigInt::from(2).pow(self.n_units as u32)
                }
            }
            DesignKind::StratifiedBernoulli { strata, p } => {
                let mut size = BigInt::one();
                for (r, pr) in p.iter().enumerate() {
                    if !pr.is_zero() && !pr.is_one() {
                        size *= BigInt::from(2).pow(strata.members(r).len() as u32);
                    }
                }
                size
            }
            DesignKind::Crd { n_treated } => binomial(self.n_units, *n_treated),
            DesignKind::StratifiedCrd { strata, n_treated } => {
                let mut size = BigInt::one();
                for (r, &t) in n_treated.iter().enumerate() {
                    size *= binomial(strata.members(r).len(), t);
                }
                size
            }
            DesignKind::PointMass { .. } => BigInt::one(),
            DesignKind::Tabulated { rows } => BigInt::from(rows.len()),
        }
    }

    /// All assignments with positive probability, or an error when there are
    /// more than `max_rows` of them.
    pub fn full_support(&self, max_rows: usize) -> Result<Vec<(Vec<u8>, Prob)>> {
        let size = self.support_size();
        if size > BigInt::from(max_rows) {
            return Err(Error::SupportCapExceeded {
                size: size.to_string(),
                cap: max_rows,
            });
        }
        Ok(match &self.kind {
            DesignKind::Bernoulli { p } => {
                let ps = vec![p.clone(); self.n_units];
                product_support(&ps)
            }
            DesignKind::StratifiedBernoulli { strata, p } => {
                let ps: Vec<Prob> = (0..self.n_units)
                    .map(|u| p[strata.stratum_of(u)].clone())
                    .collect();
                product_support(&ps)
            }
            DesignKind::Crd { n_treated } => {
                let total = binomial(self.n_units, *n_treated);
                let prob = Prob::new(BigInt::one(), total);
                (0..self.n_units)
                    .combinations(*n_treated)
                    .map(|treated| {
                        let mut w = vec![0u8; self.n_units];
                        for u in treated {
                            w[u] = 1;
                        }
                        (w, prob.clone())
                    })
                    .collect()
            }
            DesignKind::StratifiedCrd { strata, n_treated } => {
                let prob = Prob::new(BigInt::one(), self.support_size());
                let per_stratum: Vec<Vec<Vec<usize>>> = (0..strata.n_strata())
                    .map(|r| {
                        strata
                            .members(r)
                            .iter()
                            .copied()
                            .combinations(n_treated[r])
                            .collect()
                    })
                    .collect();
                per_stratum
                    .into_iter()
                    .multi_cartesian_product()
                    .map(|choice| {
                        let mut w = vec![0u8; self.n_units];
                        for treated in choice {
                            for u in treated {
                                w[u] = 1;
                            }
                        }
                        (w, prob.clone())
                    })
                    .collect()
            }
            DesignKind::PointMass { w } => vec![(w.clone(), Prob::one())],
            DesignKind::Tabulated { rows } => rows.clone(),
        })
    }

    /// Draws one assignment.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        match &self.kind {
            DesignKind::Bernoulli { p } => {
                let pf = to_f64(p);
                (0..self.n_units)
                    .map(|_| u8::from(rng.gen_bool(pf)))
                    .collect()
            }
            DesignKind::StratifiedBernoulli { strata, p } => {
                let pf: Vec<f64> = p.iter().map(to_f64).collect();
                (0..self.n_units)
                    .map(|u| u8::from(rng.gen_bool(pf[strata.stratum_of(u)])))
                    .collect()
            }
            DesignKind::Crd { n_treated } => {
                let mut w = vec![0u8; self.n_units];
                for i in rand::seq::index::sample(rng, self.n_units, *n_treated) {
                    w[i] = 1;
                }
                w
            }
            DesignKind::StratifiedCrd { strata, n_treated } => {
                let mut w = vec![0u8; self.n_units];
                for r in 0..strata.n_strata() {
                    let members = strata.members(r);
                    for i in rand::seq::index::sample(rng, members.len(), n_treated[r]) {
                        w[members[i]] = 1;
                    }
                }
                w
            }
            DesignKind::PointMass { w } => w.clone(),
            DesignKind::Tabulated { rows } => {
                let u: f64 = rng.gen();
                let mut cum = 0.0;
                for (w, p) in rows {
                    cum += to_f64(p);
                    if u < cum {
                        return w.clone();
                    }
                }
                rows.last().unwrap().0.clone()
            }
        }
    }
}

fn count_ones(a: &[u8]) -> usize {
    a.iter().map(|&x| x as usize).sum()
}

/// Probability that a fixed subset of `s` units shows `k` treated under
/// complete randomization of `t` among `n`.
fn crd_marginal(n: usize, t: usize, s: usize, k: usize) -> Prob {
    if k > t || s - k > n - t {
        return Prob::zero();
    }
    Prob::new(binomial(n - s, t - k), binomial(n, t))
}

fn crd_marginal_table(n: usize, t: usize, s: usize) -> Vec<Prob> {
    (0..=s).map(|k| crd_marginal(n, t, s, k)).collect()
}

/// Support of independent non-identical coin flips, in ascending mask order
/// with unit `i` at bit `i`. Degenerate coins contribute a single branch.
fn product_support(ps: &[Prob]) -> Vec<(Vec<u8>, Prob)> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;
    use rand::SeedableRng;

    fn strata_ab() -> Strata {
        // Units 0,1,2 in stratum "a"; units 3,4 in stratum "b".
        Strata::new(vec![0, 0, 0, 1, 1], vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn strata_validation() {
        assert!(Strata::new(vec![0, 2], vec!["a".into(), "b".into()]).is_err());
        assert!(Strata::new(vec![0, 0], vec!["a".into(), "b".into()]).is_err());
        assert!(Strata::new(vec![0], vec!["a".into(), "a".into()]).is_err());
        let s = Strata::from_labels(&["x".into(), "y".into(), "x".into()]).unwrap();
        assert_eq!(s.n_strata(), 2);
        assert_eq!(s.members(0), &[0, 2]);
        assert_eq!(s.label(1), "y");
    }

    #[test]
    fn bernoulli_marginals_multiply() {
        let d = AssignmentDistribution::bernoulli(4, ratio(1, 4)).unwrap();
        assert_eq!(d.marginal_prob(&[0], &[1]).unwrap(), ratio(1, 4));
        assert_eq!(d.marginal_prob(&[0, 2], &[1, 0]).unwrap(), ratio(3, 16));
        assert_eq!(d.marginal_prob(&[], &[]).unwrap(), ratio(1, 1));
        assert_eq!(d.prob_of(&[1, 1, 0, 0]).unwrap(), ratio(9, 256));
    }

    #[test]
    fn crd_marginal_matches_hypergeometric() {
        let d = AssignmentDistribution::crd(3, 1).unwrap();
        assert_eq!(d.marginal_prob(&[1], &[1]).unwrap(), ratio(1, 3));
        assert_eq!(d.marginal_prob(&[1], &[0]).unwrap(), ratio(2, 3));
        assert_eq!(d.marginal_prob(&[0, 1], &[1, 1]).unwrap(), ratio(0, 1));
        let d = AssignmentDistribution::crd(4, 2).unwrap();
        assert_eq!(d.marginal_prob(&[0, 1], &[1, 1]).unwrap(), ratio(1, 6));
        assert_eq!(d.prob_of(&[1, 0, 1, 0]).unwrap(), ratio(1, 6));
        assert_eq!(d.prob_of(&[1, 1, 1, 0]).unwrap(), ratio(0, 1));
    }

    #[test]
    fn stratified_designs_multiply_across_strata() {
        let d = AssignmentDistribution::stratified_crd(strata_ab(), vec![1, 1]).unwrap();
        // P(unit0 = 1) = 1/3 (stratum a), P(unit3 = 1) = 1/2 (stratum b).
        assert_eq!(d.marginal_prob(&[0], &[1]).unwrap(), ratio(1, 3));
        assert_eq!(d.marginal_prob(&[3], &[1]).unwrap(), ratio(1, 2));
        assert_eq!(d.marginal_prob(&[0, 3], &[1, 1]).unwrap(), ratio(1, 6));
        assert_eq!(d.marginal_prob(&[0, 1], &[1, 1]).unwrap(), ratio(0, 1));

        let d = AssignmentDistribution::stratified_bernoulli(
            strata_ab(),
            vec![ratio(1, 2), ratio(1, 5)],
        )
        .unwrap();
        assert_eq!(d.marginal_prob(&[2, 4], &[1, 0]).unwrap(), ratio(2, 5));
    }

    #[test]
    fn joint_prob_merges_and_detects_conflicts() {
        let d = AssignmentDistribution::crd(4, 2).unwrap();
        let j = d.joint_prob(&[0, 1], &[1, 0], &[1, 2], &[0, 1]).unwrap();
        assert_eq!(j, d.marginal_prob(&[0, 1, 2], &[1, 0, 1]).unwrap());
        let conflict = d.joint_prob(&[0, 1], &[1, 0], &[1, 2], &[1, 1]).unwrap();
        assert_eq!(conflict, ratio(0, 1));
    }

    #[test]
    fn point_mass_and_tabulated_queries() {
        let d = AssignmentDistribution::point_mass(vec![1, 0, 1]).unwrap();
        assert_eq!(d.marginal_prob(&[0, 2], &[1, 1]).unwrap(), ratio(1, 1));
        assert_eq!(d.marginal_prob(&[1], &[1]).unwrap(), ratio(0, 1));
        assert_eq!(d.fixed_treated_count(), Some(2));

        let d = AssignmentDistribution::tabulated(vec![
            (vec![1, 0], ratio(1, 4)),
            (vec![0, 1], ratio(1, 4)),
            (vec![0, 0], ratio(1, 2)),
        ])
        .unwrap();
        assert_eq!(d.marginal_prob(&[0], &[0]).unwrap(), ratio(3, 4));
        assert_eq!(d.marginal_prob(&[1], &[1]).unwrap(), ratio(1, 4));
        assert_eq!(d.fixed_treated_count(), None);
    }

    #[test]
    fn tabulated_rejects_bad_normalization_and_renormalizes_slop() {
        assert!(AssignmentDistribution::tabulated(vec![(vec![1], ratio(1, 2))]).is_err());
        // A hair off one is accepted and scaled back exactly.
        let eps = Prob::new(BigInt::one(), BigInt::from(10u64).pow(14));
        let d = AssignmentDistribution::tabulated(vec![
            (vec![1], ratio(1, 2) + &eps),
            (vec![0], ratio(1, 2)),
        ])
        .unwrap();
        let total: Prob = d
            .full_support(16)
            .unwrap()
            .into_iter()
            .map(|(_, p)| p)
            .sum();
        assert!(total.is_one());
    }

    #[test]
    fn support_on_restricts_correctly() {
        let d = AssignmentDistribution::crd(3, 1).unwrap();
        let rows = d.support_on(&[0, 1], 20).unwrap();
        assert_eq!(
            rows,
            vec![
                (vec![0, 0], ratio(1, 3)),
                (vec![1, 0], ratio(1, 3)),
                (vec![0, 1], ratio(1, 3)),
            ]
        );
        let sum: Prob = rows.into_iter().map(|(_, p)| p).sum();
        assert!(sum.is_one());
    }

    #[test]
    fn support_on_respects_cap() {
        let d = AssignmentDistribution::bernoulli(30, ratio(1, 2)).unwrap();
        let units: Vec<usize> = (0..25).collect();
        match d.support_on(&units, 20) {
            Err(Error::CapExceeded { needed: 25, cap: 20 }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn full_support_sums_to_one_for_every_kind() {
        let designs = vec![
            AssignmentDistribution::bernoulli(4, ratio(1, 3)).unwrap(),
            AssignmentDistribution::stratified_bernoulli(
                strata_ab(),
                vec![ratio(1, 2), ratio(1, 1)],
            )
            .unwrap(),
            AssignmentDistribution::crd(5, 2).unwrap(),
            AssignmentDistribution::stratified_crd(strata_ab(), vec![2, 1]).unwrap(),
            AssignmentDistribution::point_mass(vec![0, 1, 0]).unwrap(),
            AssignmentDistribution::tabulated(vec![
                (vec![1, 1], ratio(2, 3)),
                (vec![0, 0], ratio(1, 3)),
            ])
            .unwrap(),
        ];
        for d in designs {
            let rows = d.full_support(1 << 16).unwrap();
            let total: Prob = rows.iter().map(|(_, p)| p.clone()).sum();
            assert!(total.is_one(), "support of {:?} sums to {total}", d.kind());
            for (w, p) in &rows {
                assert_eq!(w.len(), d.n_units());
                assert!(!p.is_zero());
                assert_eq!(*p, d.prob_of(w).unwrap());
            }
        }
    }

    #[test]
    fn full_support_respects_cap() {
        let d = AssignmentDistribution::bernoulli(20, ratio(1, 2)).unwrap();
        assert!(matches!(
            d.full_support(1000),
            Err(Error::SupportCapExceeded { .. })
        ));
    }

    #[test]
    fn degenerate_bernoulli_support_is_tiny() {
        let d = AssignmentDistribution::bernoulli(40, ratio(1, 1)).unwrap();
        let rows = d.full_support(4).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].0, vec![1u8; 40]);
    }

    #[test]
    fn sampling_respects_design_constraints() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let d = AssignmentDistribution::stratified_crd(strata_ab(), vec![2, 1]).unwrap();
        for _ in 0..50 {
            let w = d.sample(&mut rng);
            let a: usize = w[..3].iter().map(|&x| x as usize).sum();
            let b: usize = w[3..].iter().map(|&x| x as usize).sum();
            assert_eq!((a, b), (2, 1));
        }
        let d = AssignmentDistribution::point_mass(vec![1, 0]).unwrap();
        assert_eq!(d.sample(&mut rng), vec![1, 0]);
    }

    #[test]
    fn subset_queries_validate_input() {
        let d = AssignmentDistribution::crd(4, 2).unwrap();
        assert!(d.marginal_prob(&[1, 0], &[0, 0]).is_err());
        assert!(d.marginal_prob(&[0, 0], &[0, 0]).is_err());
        assert!(d.marginal_prob(&[9], &[0]).is_err());
        assert!(d.marginal_prob(&[0], &[2]).is_err());
        assert!(d.marginal_prob(&[0, 1], &[0]).is_err());
    }
}
