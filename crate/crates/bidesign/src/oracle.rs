//! Brute-force enumeration over the full assignment distribution of small
//! instances: exact expectations, variances, and estimand values against a
//! complete potential-outcome table. Everything the estimator and variance
//! modules claim is checked against this independent path.

use crate::design::AssignmentDistribution;
use crate::error::{Error, Result};
use crate::estimators::point_estimate;
use crate::experiment::{Estimand, ObservedExperiment};
use crate::graph::BipartiteGraph;
use crate::numeric::{binomial, to_f64, KahanSum, Prob};
use crate::rng::{derive_rng, salt};
use itertools::Itertools;
use num::traits::ToPrimitive;
use rand::Rng;

/// Every potential outcome of every unit: `tables[m][mask]` is Y_m at the
/// local treatment whose bit i gives the arm of the i-th unit of 𝒩_m.
#[derive(Debug, Clone)]
pub struct PotentialOutcomeTable {
    tables: Vec<Vec<f64>>,
}

impl PotentialOutcomeTable {
    /// Validates one complete table of 2^{N_m} finite values per unit.
    pub fn new(g: &BipartiteGraph, tables: Vec<Vec<f64>>) -> Result<Self> {
        if tables.len() != g.n_outcome() {
            return Err(Error::InvalidInput(format!(
                "{} outcome tables for {} outcome units",
                tables.len(),
                g.n_outcome()
            )));
        }
        for (m, table) in tables.iter().enumerate() {
            let want = 1usize << g.intervention_set(m).len();
            if table.len() != want {
                return Err(Error::InvalidInput(format!(
                    "unit {m} needs {want} potential outcomes, got {}",
                    table.len()
                )));
            }
            if table.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "unit {m} has a non-finite potential outcome"
                )));
            }
        }
        Ok(Self { tables })
    }

    /// Builds the table by evaluating `f` at every local treatment vector.
    pub fn from_fn(g: &BipartiteGraph, f: impl Fn(usize, &[u8]) -> f64) -> Result<Self> {
        let tables = (0..g.n_outcome())
            .map(|m| {
                let len = g.intervention_set(m).len();
                (0..1usize << len)
                    .map(|mask| f(m, &crate::numeric::bits_of_mask(mask, len)))
                    .collect()
            })
            .collect();
        Self::new(g, tables)
    }

    pub fn n_outcome(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, m: usize) -> &[f64] {
        &self.tables[m]
    }

    /// Y_m at a local treatment vector over 𝒩_m.
    pub fn y_local(&self, m: usize, local: &[u8]) -> Result<f64> {
        let table = &self.tables[m];
        if 1usize << local.len() != table.len() {
            return Err(Error::InvalidInput(format!(
                "local vector of length {} against a table of {} rows for unit {m}",
                local.len(),
                table.len()
            )));
        }
        let mask = local
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | ((b as usize) << i));
        Ok(table[mask])
    }

    /// Largest outcome magnitude in the table.
    pub fn bound(&self) -> f64 {
        self.tables
            .iter()
            .flatten()
            .fold(0.0f64, |b, v| b.max(v.abs()))
    }

    /// The outcomes every unit would record under the full assignment `w`.
    pub fn realize(&self, g: &BipartiteGraph, w: &[u8]) -> Result<Vec<f64>> {
        (0..g.n_outcome())
            .map(|m| {
                let local: Vec<u8> = g.intervention_set(m).iter().map(|&n| w[n]).collect();
                self.y_local(m, &local)
            })
            .collect()
    }
}

/// Seeded outcome-table families for fixtures. None is linear in a way that
/// would let a biased estimator pass by accident, except the additive family
/// which exists to make hand computation possible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoFamily {
    /// Baseline plus a per-intervention-unit additive effect.
    Additive,
    /// Baseline plus a gain that saturates once enough neighbours are
    /// treated.
    Saturating,
    /// Additive effects plus pairwise products of treatments.
    Interaction,
    /// No effect at all: every unit responds identically under every
    /// assignment, so the sharp null holds and all contrasts are zero.
    SharpNull,
}

impl PoFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "additive" => Ok(Self::Additive),
            "saturating" => Ok(Self::Saturating),
            "interaction" => Ok(Self::Interaction),
            "sharp_null" => Ok(Self::SharpNull),
            other => Err(Error::InvalidInput(format!(
                "unknown outcome family '{other}'"
            ))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::Additive => "additive",
            Self::Saturating => "saturating",
            Self::Interaction => "interaction",
            Self::SharpNull => "sharp_null",
        }
    }
}

/// Draws a reproducible potential-outcome table from the named family.
pub fn generate_po_table(
    g: &BipartiteGraph,
    family: PoFamily,
    seed: u64,
) -> Result<PotentialOutcomeTable> {
    let mut rng = derive_rng(seed, salt::PO_TABLE, family.id().len() as u64);
    let beta: Vec<f64> = (0..g.n_intervention())
        .map(|_| rng.gen_range(-2.0..2.0))
        .collect();
    let gamma: Vec<f64> = (0..g.n_outcome())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let scale: Vec<f64> = (0..g.n_outcome())
        .map(|_| rng.gen_range(0.5..3.0))
        .collect();
    match family {
        PoFamily::Additive => PotentialOutcomeTable::from_fn(g, |m, local| {
            let set = g.intervention_set(m);
            gamma[m]
                + local
                    .iter()
                    .zip(set)
                    .map(|(&a, &n)| a as f64 * beta[n])
                    .sum::<f64>()
        }),
        PoFamily::Saturating => PotentialOutcomeTable::from_fn(g, |m, local| {
            let threshold = (g.intervention_set(m).len().div_ceil(2)).max(1);
            let count = local.iter().filter(|&&a| a == 1).count();
            gamma[m] + scale[m] * (count as f64 / threshold as f64).min(1.0)
        }),
        PoFamily::Interaction => PotentialOutcomeTable::from_fn(g, |m, local| {
            let set = g.intervention_set(m);
            let additive: f64 = local
                .iter()
                .zip(set)
                .map(|(&a, &n)| a as f64 * beta[n])
                .sum();
            let mut cross = 0.0;
            for i in 0..local.len() {
                for j in (i + 1)..local.len() {
                    if local[i] == 1 && local[j] == 1 {
                        cross += scale[m] * 0.5;
                    }
                }
            }
            gamma[m] + additive + cross
        }),
        PoFamily::SharpNull => {
            PotentialOutcomeTable::from_fn(g, |m, _local| gamma[m] + scale[m])
        }
    }
}

/// The estimand's value at one full assignment. Fixed estimands ignore `w`;
/// the status-quo and +K estimands depend on it.
pub fn estimand_value(
    g: &BipartiteGraph,
    po: &PotentialOutcomeTable,
    estimand: &Estimand,
    retained: &[usize],
    w: &[u8],
) -> Result<f64> {
    if retained.is_empty() {
        return Err(Error::EmptyRetainedSet {
            estimand: estimand.label(),
        });
    }
    let mean_at = |arm: u8| -> Result<f64> {
        let mut acc = KahanSum::new();
        for &m in retained {
            let len = g.intervention_set(m).len();
            acc.add(po.y_local(m, &vec![arm; len])?);
        }
        Ok(acc.value() / retained.len() as f64)
    };
    let realized_mean = |w: &[u8]| -> Result<f64> {
        let mut acc = KahanSum::new();
        for &m in retained {
            let local: Vec<u8> = g.intervention_set(m).iter().map(|&n| w[n]).collect();
            acc.add(po.y_local(m, &local)?);
        }
        Ok(acc.value() / retained.len() as f64)
    };
    let policy_mean = |policy: &crate::policy::LocalPolicy| -> Result<f64> {
        let mut acc = KahanSum::new();
        for &m in retained {
            let mut unit = KahanSum::new();
            for (a, h) in policy.support(g, m, crate::DEFAULT_ENUM_CAP)? {
                unit.add(to_f64(&h) * po.y_local(m, &a)?);
            }
            acc.add(unit.value());
        }
        Ok(acc.value() / retained.len() as f64)
    };
    match estimand {
        Estimand::AllOrNone => Ok(mean_at(1)? - mean_at(0)?),
        Estimand::MeanPo { arm } => mean_at(*arm),
        Estimand::StatusQuoVsNone => Ok(realized_mean(w)? - mean_at(0)?),
        Estimand::AllVsStatusQuo => Ok(mean_at(1)? - realized_mean(w)?),
        Estimand::Stochastic { policy } => policy_mean(policy),
        Estimand::StochasticContrast { from, to } => Ok(policy_mean(to)? - policy_mean(from)?),
        Estimand::PlusK { k } => {
            let controls: Vec<usize> = w
                .iter()
                .enumerate()
                .filter(|&(_, &x)| x == 0)
                .map(|(n, _)| n)
                .collect();
            if *k == 0 || *k > controls.len() {
                return Err(Error::InvalidInput(format!(
                    "K={k} infeasible with {} control units",
                    controls.len()
                )));
            }
            let n_subsets = binomial(controls.len(), *k)
                .to_usize()
                .ok_or_else(|| Error::InvalidInput("too many promotion subsets".into()))?;
            let mut acc = KahanSum::new();
            for subset in controls.iter().combinations(*k) {
                let mut promoted = w.to_vec();
                for &&n in &subset {
                    promoted[n] = 1;
                }
                acc.add(realized_mean(&promoted)?);
            }
            Ok(acc.value() / n_subsets as f64 - realized_mean(w)?)
        }
    }
}

/// Runs `f` at every assignment in the design's support, with its exact
/// probability.
pub fn for_each_assignment<T>(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    po: &PotentialOutcomeTable,
    max_rows: usize,
    mut f: impl FnMut(&ObservedExperiment, &Prob) -> Result<T>,
) -> Result<Vec<T>> {
    let support = d.full_support(max_rows)?;
    let mut out = Vec::with_capacity(support.len());
    for (w, p) in support {
        let y = po.realize(g, &w)?;
        let exp = ObservedExperiment::new(g.clone(), d.clone(), w, y)?;
        out.push(f(&exp, &p)?);
    }
    Ok(out)
}

/// Σ over the support of π(w) · estimator(dataset at w).
pub fn exact_expectation(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    po: &PotentialOutcomeTable,
    max_rows: usize,
    estimator: impl Fn(&ObservedExperiment) -> Result<f64>,
) -> Result<f64> {
    let terms = for_each_assignment(g, d, po, max_rows, |exp, p| {
        Ok(to_f64(p) * estimator(exp)?)
    })?;
    let mut acc = KahanSum::new();
    for t in terms {
        acc.add(t);
    }
    Ok(acc.value())
}

/// Enumeration variance of an estimator: E[(X − E[X])²].
pub fn exact_variance(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    po: &PotentialOutcomeTable,
    max_rows: usize,
    estimator: impl Fn(&ObservedExperiment) -> Result<f64>,
) -> Result<f64> {
    let values = for_each_assignment(g, d, po, max_rows, |exp, p| {
        Ok((estimator(exp)?, to_f64(p)))
    })?;
    let mut mean = KahanSum::new();
    for (x, p) in &values {
        mean.add(x * p);
    }
    let mu = mean.value();
    let mut var = KahanSum::new();
    for (x, p) in &values {
        var.add(p * (x - mu) * (x - mu));
    }
    Ok(var.value())
}

/// Enumeration mean of estimator-minus-estimand; zero for an unbiased
/// estimator, including the random estimands whose target moves with the
/// assignment.
pub fn exact_bias(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    po: &PotentialOutcomeTable,
    estimand: &Estimand,
    retained: &[usize],
    max_rows: usize,
    cap: usize,
) -> Result<f64> {
    let terms = for_each_assignment(g, d, po, max_rows, |exp, p| {
        let est = point_estimate(exp, estimand, retained, cap)?;
        let target = estimand_value(g, po, estimand, retained, exp.w())?;
        Ok(to_f64(p) * (est - target))
    })?;
    let mut acc = KahanSum::new();
    for t in terms {
        acc.add(t);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators;
    use crate::numeric::ratio;
    use crate::policy::LocalPolicy;

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
    fn constant_table_has_null_contrast() {
        let g = overlap_graph();
        let po = PotentialOutcomeTable::from_fn(&g, |_, _| 7.5).unwrap();
        let all: Vec<usize> = (0..8).collect();
        let v = estimand_value(&g, &po, &Estimand::AllOrNone, &all, &[0, 0, 0]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn unit_effect_contrast_is_mean_degree() {
        // Y_m(w) = number of treated neighbours, so the everyone-vs-nobody
        // contrast averages the intervention-set sizes: 11 edges over 8
        // units.
        let g = overlap_graph();
        let po = PotentialOutcomeTable::from_fn(&g, |_, local| {
            local.iter().filter(|&&a| a == 1).count() as f64
        })
        .unwrap();
        let all: Vec<usize> = (0..8).collect();
        let v = estimand_value(&g, &po, &Estimand::AllOrNone, &all, &[0, 0, 0]).unwrap();
        assert!((v - 11.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn all_ones_policy_matches_arm_mean() {
        let g = overlap_graph();
        let po = generate_po_table(&g, PoFamily::Interaction, 11).unwrap();
        let all: Vec<usize> = (0..8).collect();
        let h = LocalPolicy::constant_arm(&g, 1).unwrap();
        let a = estimand_value(&g, &po, &Estimand::Stochastic { policy: h }, &all, &[0; 3])
            .unwrap();
        let b = estimand_value(&g, &po, &Estimand::MeanPo { arm: 1 }, &all, &[0; 3]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mean_po_estimator_is_unbiased() {
        let g = overlap_graph();
        let d = AssignmentDistribution::crd(3, 1).unwrap();
        let po = generate_po_table(&g, PoFamily::Saturating, 5).unwrap();
        let all: Vec<usize> = (0..8).collect();
        // Ŷ(0) is estimable under crd(3,1); Ŷ(1) is not (two units always
        // stay control).
        let expect = exact_expectation(&g, &d, &po, 1 << 12, |exp| {
            estimators::estimate_mean_po(exp, 0, &all)
        })
        .unwrap();
        let target = estimand_value(&g, &po, &Estimand::MeanPo { arm: 0 }, &all, &[0; 3])
            .unwrap();
        assert!((expect - target).abs() < 1e-10);
    }

    #[test]
    fn point_mass_design_has_zero_variance() {
        let g = overlap_graph();
        let d = AssignmentDistribution::point_mass(vec![1, 0, 1]).unwrap();
        let po = generate_po_table(&g, PoFamily::Additive, 3).unwrap();
        let all: Vec<usize> = (0..8).collect();
        let v = exact_variance(&g, &d, &po, 1 << 12, |exp| exp.observed_mean(&all)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn status_quo_estimator_is_unbiased_for_random_estimand() {
        let g = overlap_graph();
        let d = AssignmentDistribution::bernoulli(3, ratio(1, 3)).unwrap();
        let po = generate_po_table(&g, PoFamily::Interaction, 9).unwrap();
        let all: Vec<usize> = (0..8).collect();
        let bias = exact_bias(
            &g,
            &d,
            &po,
            &Estimand::StatusQuoVsNone,
            &all,
            1 << 12,
            20,
        )
        .unwrap();
        assert!(bias.abs() < 1e-10);
    }

    #[test]
    fn plus_k_estimator_is_unbiased_for_random_estimand() {
        let g = overlap_graph();
        let d = AssignmentDistribution::crd(3, 1).unwrap();
        let po = generate_po_table(&g, PoFamily::Saturating, 21).unwrap();
        // Size-two sets fail the richer-vector condition under crd(3, 1):
        // one neighbour treated is possible, both treated is not.
        let report =
            estimators::screen_positivity_design(&g, &d, &Estimand::PlusK { k: 1 }, 20).unwrap();
        assert_eq!(report.retained_units, vec![0, 1, 2, 4, 7]);
        let bias = exact_bias(
            &g,
            &d,
            &po,
            &Estimand::PlusK { k: 1 },
            &report.retained_units,
            1 << 12,
            20,
        )
        .unwrap();
        assert!(bias.abs() < 1e-10);
    }

    #[test]
    fn table_round_trip_and_bound() {
        let g = BipartiteGraph::new(2, 1, &[(0, 0), (1, 0)]).unwrap();
        let po = PotentialOutcomeTable::new(&g, vec![vec![0.0, -5.0, 2.0, 3.0]]).unwrap();
        assert_eq!(po.y_local(0, &[1, 0]).unwrap(), -5.0);
        assert_eq!(po.y_local(0, &[0, 1]).unwrap(), 2.0);
        assert_eq!(po.bound(), 5.0);
        assert_eq!(po.realize(&g, &[1, 1]).unwrap(), vec![3.0]);
        assert!(PotentialOutcomeTable::new(&g, vec![vec![1.0, 2.0]]).is_err());
    }
}
