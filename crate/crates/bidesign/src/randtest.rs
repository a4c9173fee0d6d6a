//! Fisher randomization tests of the sharp null of no effect.
//!
//! Under the sharp null every outcome unit shows the same response no matter
//! which assignment is drawn, so the observed outcome vector can be held fixed
//! while treatment is re-randomized from the design. The test statistic is
//! recomputed for each draw and the two-sided p-value is the (add-one
//! corrected) fraction of draws at least as extreme as the observed one.
//! Designs with at most [`EXHAUSTIVE_SUPPORT_LIMIT`] support points are
//! enumerated exactly instead of sampled.

use num::bigint::BigInt;
use num::traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::experiment::ObservedExperiment;
use crate::graph::BipartiteGraph;
use crate::numeric::{ksum, to_f64, KahanSum};
use crate::rng::{derive_rng, salt};
use crate::Prob;

/// Support sizes at or below this are enumerated exactly instead of sampled.
pub const EXHAUSTIVE_SUPPORT_LIMIT: usize = 10_000;

/// Attempts per Monte Carlo slot before degenerate draws abort the test.
const REDRAW_CAP: usize = 1000;

/// Relative cushion when comparing |T| values, so draws that tie the observed
/// statistic up to float noise still count as at least as extreme.
const TIE_TOLERANCE: f64 = 1e-12;

/// Per-intervention-unit outcome summary used by the intervention-level statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryFn {
    Mean,
    Sum,
    Median,
}

impl SummaryFn {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "mean" => Ok(SummaryFn::Mean),
            "sum" => Ok(SummaryFn::Sum),
            "median" => Ok(SummaryFn::Median),
            other => Err(Error::InvalidInput(format!(
                "unknown summary function {other:?}; expected mean, sum, or median"
            ))),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            SummaryFn::Mean => "mean",
            SummaryFn::Sum => "sum",
            SummaryFn::Median => "median",
        }
    }

    fn apply(self, values: &[f64]) -> f64 {
        match self {
            SummaryFn::Mean => ksum(values.iter().copied()) / values.len() as f64,
            SummaryFn::Sum => ksum(values.iter().copied()),
            SummaryFn::Median => {
                let mut sorted = values.to_vec();
                sorted.sort_unstable_by(f64::total_cmp);
                let mid = sorted.len() / 2;
                if sorted.len() % 2 == 1 {
                    sorted[mid]
                } else {
                    (sorted[mid - 1] + sorted[mid]) / 2.0
                }
            }
        }
    }
}

/// Test statistic for [`randomization_test`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    /// OLS slope of outcomes on the count of treated connected units.
    OlsTotalExperience,
    /// OLS slope of outcomes on the fraction treated; isolated units excluded.
    OlsAverageExperience,
    /// Treated-minus-control difference of per-intervention-unit outcome summaries.
    InterventionDiffMeans(SummaryFn),
}

impl Statistic {
    /// Looks up a statistic by id; `summary` applies to the intervention-level one.
    pub fn parse(id: &str, summary: SummaryFn) -> Result<Self> {
        match id {
            "ols_total_experience" => Ok(Statistic::OlsTotalExperience),
            "ols_average_experience" => Ok(Statistic::OlsAverageExperience),
            "intervention_diff_means" => Ok(Statistic::InterventionDiffMeans(summary)),
            other => Err(Error::InvalidInput(format!(
                "unknown statistic {other:?}; expected ols_total_experience, \
                 ols_average_experience, or intervention_diff_means"
            ))),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Statistic::OlsTotalExperience => "ols_total_experience",
            Statistic::OlsAverageExperience => "ols_average_experience",
            Statistic::InterventionDiffMeans(_) => "intervention_diff_means",
        }
    }
}

/// Result of one randomization test.
#[derive(Debug, Clone, Serialize)]
pub struct TestResult {
    pub statistic_id: String,
    pub t_observed: f64,
    /// Monte Carlo draws, or enumerated support points in exhaustive mode.
    pub n_draws: usize,
    pub p_value: f64,
    /// Degenerate assignments that were redrawn (or skipped in exhaustive mode).
    pub n_degenerate_draws: usize,
}

/// Count of treated intervention units connected to each outcome unit.
pub fn total_experience(g: &BipartiteGraph, w: &[u8]) -> Vec<f64> {
    (0..g.n_outcome())
        .map(|m| {
            g.intervention_set(m)
                .iter()
                .map(|&n| u32::from(w[n]))
                .sum::<u32>() as f64
        })
        .collect()
}

/// Fraction treated among each outcome unit's connected intervention units.
///
/// Isolated outcome units have no defined average experience and yield `None`.
pub fn average_experience(g: &BipartiteGraph, w: &[u8]) -> Vec<Option<f64>> {
    (0..g.n_outcome())
        .map(|m| {
            let set = g.intervention_set(m);
            if set.is_empty() {
                return None;
            }
            let treated: u32 = set.iter().map(|&n| u32::from(w[n])).sum();
            Some(f64::from(treated) / set.len() as f64)
        })
        .collect()
}

/// Slope from regressing `y` on `x` by centered sums.
///
/// Returns `None` when `x` is constant or fewer than two points are available,
/// which callers treat as a degenerate draw.
pub fn statistic_ols(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let x_bar = ksum(x.iter().copied()) / n;
    let y_bar = ksum(y.iter().copied()) / n;
    let sxx = ksum(x.iter().map(|&v| (v - x_bar) * (v - x_bar)));
    if sxx == 0.0 {
        return None;
    }
    let sxy = ksum(x.iter().zip(y).map(|(&a, &b)| (a - x_bar) * (b - y_bar)));
    Some(sxy / sxx)
}

/// Treated-minus-control difference of per-intervention-unit outcome summaries.
///
/// Intervention units connected to no outcome unit are excluded from both
/// means; an all-treated or all-control draw yields `None`.
pub fn statistic_intervention_diff(
    g: &BipartiteGraph,
    w: &[u8],
    y: &[f64],
    f: SummaryFn,
) -> Option<f64> {
    let mut arms = [(KahanSum::new(), 0usize), (KahanSum::new(), 0usize)];
    for n in 0..g.n_intervention() {
        let set = g.outcome_set(n);
        if set.is_empty() {
            continue;
        }
        let values: Vec<f64> = set.iter().map(|&m| y[m]).collect();
        let arm = &mut arms[usize::from(w[n])];
        arm.0.add(f.apply(&values));
        arm.1 += 1;
    }
    let [(control, n0), (treated, n1)] = arms;
    if n0 == 0 || n1 == 0 {
        return None;
    }
    Some(treated.value() / n1 as f64 - control.value() / n0 as f64)
}

/// Statistic with its assignment-independent parts precomputed.
enum Prepared<'a> {
    Ols {
        g: &'a BipartiteGraph,
        /// Outcome-unit indices entering the regression, with their outcomes.
        units: Vec<(usize, f64)>,
        average: bool,
    },
    Diff {
        n_intervention: usize,
        /// Summaries for intervention units with at least one connected outcome.
        summaries: Vec<(usize, f64)>,
    },
}

impl<'a> Prepared<'a> {
    fn new(exp: &'a ObservedExperiment, statistic: Statistic) -> Self {
        let g = exp.graph();
        let y = exp.y();
        match statistic {
            Statistic::OlsTotalExperience | Statistic::OlsAverageExperience => {
                let average = statistic == Statistic::OlsAverageExperience;
                let units = (0..g.n_outcome())
                    .filter(|&m| !(average && g.intervention_set(m).is_empty()))
                    .map(|m| (m, y[m]))
                    .collect();
                Prepared::Ols { g, units, average }
            }
            Statistic::InterventionDiffMeans(f) => {
                let summaries = (0..g.n_intervention())
                    .filter(|&n| !g.outcome_set(n).is_empty())
                    .map(|n| {
                        let values: Vec<f64> = g.outcome_set(n).iter().map(|&m| y[m]).collect();
                        (n, f.apply(&values))
                    })
                    .collect();
                Prepared::Diff {
                    n_intervention: g.n_intervention(),
                    summaries,
                }
            }
        }
    }

    fn evaluate(&self, w: &[u8]) -> Option<f64> {
        match self {
            Prepared::Ols { g, units, average } => {
                let mut x = Vec::with_capacity(units.len());
                let mut y = Vec::with_capacity(units.len());
                for &(m, y_m) in units {
                    let set = g.intervention_set(m);
                    let treated: u32 = set.iter().map(|&n| u32::from(w[n])).sum();
                    let value = if *average {
                        f64::from(treated) / set.len() as f64
                    } else {
                        f64::from(treated)
                    };
                    x.push(value);
                    y.push(y_m);
                }
                statistic_ols(&x, &y)
            }
            Prepared::Diff {
                n_intervention,
                summaries,
            } => {
                debug_assert_eq!(w.len(), *n_intervention);
                let mut arms = [(KahanSum::new(), 0usize), (KahanSum::new(), 0usize)];
                for &(n, s) in summaries {
                    let arm = &mut arms[usize::from(w[n])];
                    arm.0.add(s);
                    arm.1 += 1;
                }
                let [(control, n0), (treated, n1)] = arms;
                if n0 == 0 || n1 == 0 {
                    return None;
                }
                Some(treated.value() / n1 as f64 - control.value() / n0 as f64)
            }
        }
    }
}

/// Runs a two-sided randomization test of the sharp null of no effect.
///
/// Draws re-randomized assignments from the experiment's design with the
/// outcomes held fixed. When the design's support has at most
/// [`EXHAUSTIVE_SUPPORT_LIMIT`] points the test enumerates it and reports the
/// exact probability-weighted p-value conditional on non-degenerate
/// assignments; otherwise it samples `n_draws` assignments (redrawing
/// degenerate ones) and applies the add-one correction. Deterministic given
/// `seed`.
pub fn randomization_test(
    exp: &ObservedExperiment,
    statistic: Statistic,
    n_draws: usize,
    seed: u64,
) -> Result<TestResult> {
    let prepared = Prepared::new(exp, statistic);
    let t_observed = prepared.evaluate(exp.w()).ok_or_else(|| {
        Error::DegenerateStatistic(format!(
            "statistic {} is undefined for the observed assignment",
            statistic.id()
        ))
    })?;
    // Anything within float noise of |T_obs| counts as at least as extreme.
    let cutoff = t_observed.abs() - TIE_TOLERANCE * (1.0 + t_observed.abs());
    let design = exp.design();

    if design.support_size() <= BigInt::from(EXHAUSTIVE_SUPPORT_LIMIT) {
        let rows = design.full_support(EXHAUSTIVE_SUPPORT_LIMIT)?;
        let stats = exec::ordered_map(rows.len(), |i| prepared.evaluate(&rows[i].0));
        let mut hit = Prob::zero();
        let mut kept = Prob::zero();
        let mut n_degenerate_draws = 0;
        for ((_, p), t) in rows.iter().zip(&stats) {
            match t {
                None => n_degenerate_draws += 1,
                Some(t) => {
                    kept += p;
                    if t.abs() >= cutoff {
                        hit += p;
                    }
                }
            }
        }
        if kept.is_zero() {
            return Err(Error::DegenerateStatistic(format!(
                "statistic {} is degenerate on the design's whole support",
                statistic.id()
            )));
        }
        return Ok(TestResult {
            statistic_id: statistic.id().to_string(),
            t_observed,
            n_draws: rows.len(),
            p_value: to_f64(&(hit / kept)),
            n_degenerate_draws,
        });
    }

    if n_draws == 0 {
        return Err(Error::InvalidInput(
            "randomization test needs at least one draw".into(),
        ));
    }
    let per_draw = exec::ordered_map(n_draws, |i| {
        let mut rng = derive_rng(seed, salt::RANDTEST, i as u64);
        let mut failures = 0usize;
        loop {
            let w = design.sample(&mut rng);
            if let Some(t) = prepared.evaluate(&w) {
                return Ok((t, failures));
            }
            failures += 1;
            if failures >= REDRAW_CAP {
                return Err(Error::DegenerateStatistic(format!(
                    "draw {i} stayed degenerate after {REDRAW_CAP} redraws"
                )));
            }
        }
    });
    let mut hits = 0usize;
    let mut n_degenerate_draws = 0;
    for row in per_draw {
        let (t, failures) = row?;
        n_degenerate_draws += failures;
        if t.abs() >= cutoff {
            hits += 1;
        }
    }
    Ok(TestResult {
        statistic_id: statistic.id().to_string(),
        t_observed,
        n_draws,
        p_value: (1 + hits) as f64 / (n_draws + 1) as f64,
        n_degenerate_draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::AssignmentDistribution;
    use crate::numeric::ratio;

    fn overlap_graph() -> BipartiteGraph {
        BipartiteGraph::new(
            3,
            8,
            &[
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
            ],
        )
        .unwrap()
    }

    #[test]
    fn experience_vectors_match_hand_counts() {
        let g = overlap_graph();
        let w = [1, 0, 1];
        let total = total_experience(&g, &w);
        assert_eq!(total, vec![1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0]);
        let average = average_experience(&g, &w);
        assert_eq!(average[3], Some(0.5));
        assert_eq!(average[4], Some(0.0));
        let isolated = BipartiteGraph::new(1, 2, &[(0, 0)]).unwrap();
        assert_eq!(average_experience(&isolated, &[1])[1], None);
    }

    #[test]
    fn ols_slope_hand_example() {
        let x = [0.0, 1.0, 2.0];
        assert_eq!(statistic_ols(&x, &[1.0, 2.0, 4.0]), Some(1.5));
        assert_eq!(statistic_ols(&x, &[5.0, 7.0, 9.0]), Some(2.0));
        assert_eq!(statistic_ols(&[3.0, 3.0], &[1.0, 2.0]), None);
        let flat = statistic_ols(&x, &[4.0, 4.0, 4.0]).unwrap();
        assert!(flat.abs() < 1e-12);
    }

    #[test]
    fn intervention_diff_hand_example() {
        let g = overlap_graph();
        let y: Vec<f64> = (1..=8).map(f64::from).collect();
        let t = statistic_intervention_diff(&g, &[1, 0, 0], &y, SummaryFn::Mean).unwrap();
        assert!((t - (-3.75)).abs() < 1e-12);
        let swapped = statistic_intervention_diff(&g, &[0, 1, 1], &y, SummaryFn::Mean).unwrap();
        assert!((swapped - 3.75).abs() < 1e-12);
        assert_eq!(
            statistic_intervention_diff(&g, &[1, 1, 1], &y, SummaryFn::Mean),
            None
        );
    }

    #[test]
    fn summary_functions() {
        assert_eq!(SummaryFn::Mean.apply(&[1.0, 2.0, 6.0]), 3.0);
        assert_eq!(SummaryFn::Sum.apply(&[1.0, 2.0, 6.0]), 9.0);
        assert_eq!(SummaryFn::Median.apply(&[5.0, 1.0, 3.0]), 3.0);
        assert_eq!(SummaryFn::Median.apply(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(SummaryFn::parse("max").is_err());
        assert_eq!(SummaryFn::parse("median").unwrap(), SummaryFn::Median);
    }

    #[test]
    fn exhaustive_mode_gives_exact_rank_p_value() {
        let g = overlap_graph();
        let d = AssignmentDistribution::crd(3, 1).unwrap();
        let y: Vec<f64> = (1..=8).map(f64::from).collect();
        let exp = ObservedExperiment::new(g, d, vec![1, 0, 0], y).unwrap();
        let stat = Statistic::InterventionDiffMeans(SummaryFn::Mean);
        let result = randomization_test(&exp, stat, 999, 7).unwrap();
        assert_eq!(result.n_draws, 3);
        assert_eq!(result.n_degenerate_draws, 0);
        // T over the three assignments is -3.75 (treat unit 0), 0.75 (unit 1),
        // and 3 (unit 2), so |T_obs| is the strict maximum.
        assert!((result.t_observed - (-3.75)).abs() < 1e-12);
        assert!((result.p_value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_outcomes_give_p_one() {
        let g = overlap_graph();
        let d = AssignmentDistribution::bernoulli(3, ratio(1, 2)).unwrap();
        let exp = ObservedExperiment::new(g, d, vec![1, 0, 0], vec![0.3; 8]).unwrap();
        for stat in [
            Statistic::OlsTotalExperience,
            Statistic::InterventionDiffMeans(SummaryFn::Median),
        ] {
            let result = randomization_test(&exp, stat, 100, 11).unwrap();
            assert_eq!(result.p_value, 1.0, "{}", stat.id());
        }
    }

    #[test]
    fn point_mass_design_gives_p_one() {
        let g = overlap_graph();
        let d = AssignmentDistribution::point_mass(vec![1, 0, 1]).unwrap();
        let y: Vec<f64> = (1..=8).map(f64::from).collect();
        let exp = ObservedExperiment::new(g, d, vec![1, 0, 1], y).unwrap();
        let result =
            randomization_test(&exp, Statistic::OlsTotalExperience, 50, 3).unwrap();
        assert_eq!(result.n_draws, 1);
        assert_eq!(result.p_value, 1.0);
    }

    #[test]
    fn degenerate_observed_statistic_is_an_error() {
        let g = overlap_graph();
        let d = AssignmentDistribution::point_mass(vec![1, 1, 1]).unwrap();
        let y: Vec<f64> = (1..=8).map(f64::from).collect();
        let exp = ObservedExperiment::new(g, d, vec![1, 1, 1], y).unwrap();
        let stat = Statistic::InterventionDiffMeans(SummaryFn::Mean);
        assert!(matches!(
            randomization_test(&exp, stat, 10, 1),
            Err(Error::DegenerateStatistic(_))
        ));
    }

    #[test]
    fn monte_carlo_mode_is_deterministic_and_counts_degenerate_redraws() {
        // 15 units makes the bernoulli support too large to enumerate, and a
        // heavily skewed p produces occasional all-treated draws that the
        // intervention-level statistic must redraw.
        let edges: Vec<(usize, usize)> = (0..15).map(|n| (n, n)).collect();
        let g = BipartiteGraph::new(15, 15, &edges).unwrap();
        let d = AssignmentDistribution::bernoulli(15, ratio(9, 10)).unwrap();
        let mut w = vec![1; 15];
        w[0] = 0;
        let y: Vec<f64> = (0..15).map(|m| (m as f64).sin()).collect();
        let exp = ObservedExperiment::new(g, d, w, y).unwrap();
        let stat = Statistic::InterventionDiffMeans(SummaryFn::Mean);
        let first = randomization_test(&exp, stat, 400, 42).unwrap();
        let second = randomization_test(&exp, stat, 400, 42).unwrap();
        assert_eq!(first.p_value, second.p_value);
        assert_eq!(first.n_degenerate_draws, second.n_degenerate_draws);
        assert!(first.n_degenerate_draws > 0);
        assert_eq!(first.n_draws, 400);
        assert!(first.p_value >= 1.0 / 401.0 && first.p_value <= 1.0);
        let other_seed = randomization_test(&exp, stat, 400, 43).unwrap();
        assert_eq!(other_seed.t_observed, first.t_observed);
    }

    #[test]
    fn statistic_ids_round_trip() {
        for id in [
            "ols_total_experience",
            "ols_average_experience",
            "intervention_diff_means",
        ] {
            let stat = Statistic::parse(id, SummaryFn::Mean).unwrap();
            assert_eq!(stat.id(), id);
        }
        assert!(Statistic::parse("t_test", SummaryFn::Mean).is_err());
    }
}
