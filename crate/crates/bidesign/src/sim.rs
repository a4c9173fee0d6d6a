//! Monte Carlo harness for repeated-experiment studies.
//!
//! A study fixes one or more graphs, a design, and a potential-outcome table,
//! then redraws the treatment assignment many times. Potential outcomes are
//! generated once per graph and held fixed, so all randomness across
//! replications comes from the design, and every estimate can be compared to
//! the estimand value it targets. Aggregates carry Monte Carlo standard
//! errors, and each graph cell reports the dependence summaries that govern
//! consistency, so trend claims across graph sizes can be audited.

use rand::Rng;
use serde::Serialize;

use crate::design::AssignmentDistribution;
use crate::error::{Error, Result};
use crate::estimators::{analyze_screened, screen_positivity_design, PositivityReport};
use crate::exec;
use crate::experiment::{Estimand, ObservedExperiment};
use crate::graph::{BipartiteGraph, GraphStats};
use crate::numeric::{ksum, to_f64};
use crate::oracle::{estimand_value, generate_po_table, PoFamily};
use crate::policy::LocalPolicy;
use crate::randtest::{randomization_test, Statistic};
use crate::rng::{derive_rng, mix64, salt};
use crate::variance::{
    consistency_statistics, ConsistencyStats, ConsistencyTarget, VarianceOptions,
};
use crate::Prob;

/// Graph families the study generator can build.
#[derive(Debug, Clone)]
pub enum GraphFamily {
    /// Identity graph: outcome unit i is affected by intervention unit i only.
    OneToOne { m: usize },
    /// Disjoint clusters: intervention unit j is the sole parent of
    /// `sizes[j]` consecutive outcome units.
    SingleParent { sizes: Vec<usize> },
    /// Random sets: each outcome unit draws `1 + Binomial(max_degree - 1,
    /// overlap_rate)` distinct parents from the `n` intervention units.
    General {
        n: usize,
        m: usize,
        max_degree: usize,
        overlap_rate: f64,
    },
}

impl GraphFamily {
    pub fn id(&self) -> &'static str {
        match self {
            GraphFamily::OneToOne { .. } => "one_to_one",
            GraphFamily::SingleParent { .. } => "single_parent",
            GraphFamily::General { .. } => "general",
        }
    }
}

/// Cluster sizes for a single-parent graph with `m` outcome units, cycling
/// the 3, 2, 4 pattern; the last cluster is truncated to land exactly on `m`.
pub fn cycling_cluster_sizes(m: usize) -> Vec<usize> {
    let pattern = [3usize, 2, 4];
    let mut sizes = Vec::new();
    let mut total = 0;
    while total < m {
        let take = pattern[sizes.len() % pattern.len()].min(m - total);
        sizes.push(take);
        total += take;
    }
    sizes
}

/// Builds a graph from the requested family; only `general` uses the seed.
pub fn generate_graph(family: &GraphFamily, seed: u64) -> Result<BipartiteGraph> {
    match family {
        GraphFamily::OneToOne { m } => {
            let edges: Vec<(usize, usize)> = (0..*m).map(|i| (i, i)).collect();
            BipartiteGraph::new(*m, *m, &edges)
        }
        GraphFamily::SingleParent { sizes } => {
            if sizes.iter().any(|&s| s == 0) {
                return Err(Error::InvalidInput(
                    "single_parent cluster sizes must be positive".into(),
                ));
            }
            let m_total: usize = sizes.iter().sum();
            let mut edges = Vec::with_capacity(m_total);
            let mut next = 0;
            for (j, &size) in sizes.iter().enumerate() {
                for _ in 0..size {
                    edges.push((j, next));
                    next += 1;
                }
            }
            BipartiteGraph::new(sizes.len(), m_total, &edges)
        }
        GraphFamily::General {
            n,
            m,
            max_degree,
            overlap_rate,
        } => {
            if *max_degree == 0 || max_degree > n {
                return Err(Error::InvalidInput(format!(
                    "max_degree must lie in 1..={n}, got {max_degree}"
                )));
            }
            if !(0.0..=1.0).contains(overlap_rate) {
                return Err(Error::InvalidInput(format!(
                    "overlap_rate must lie in [0, 1], got {overlap_rate}"
                )));
            }
            let mut rng = derive_rng(seed, salt::GRAPH, 0);
            let mut edges = Vec::new();
            for outcome in 0..*m {
                let mut degree = 1;
                for _ in 1..*max_degree {
                    if rng.gen_bool(*overlap_rate) {
                        degree += 1;
                    }
                }
                for parent in rand::seq::index::sample(&mut rng, *n, degree) {
                    edges.push((parent, outcome));
                }
            }
            BipartiteGraph::new(*n, *m, &edges)
        }
    }
}

/// Design family instantiated per graph once the intervention count is known.
#[derive(Debug, Clone)]
pub enum DesignSpec {
    Bernoulli { p: Prob },
    /// Complete randomization treating `floor(N * treated_fraction)` units,
    /// clamped to keep at least one unit in each arm.
    Crd { treated_fraction: Prob },
}

impl DesignSpec {
    pub fn instantiate(&self, n: usize) -> Result<AssignmentDistribution> {
        match self {
            DesignSpec::Bernoulli { p } => AssignmentDistribution::bernoulli(n, p.clone()),
            DesignSpec::Crd { treated_fraction } => {
                if n < 2 {
                    return Err(Error::InvalidInput(
                        "crd needs at least two intervention units".into(),
                    ));
                }
                let scaled = Prob::from_integer(n.into()) * treated_fraction;
                let t = to_f64(&scaled).floor() as usize;
                AssignmentDistribution::crd(n, t.clamp(1, n - 1))
            }
        }
    }

    pub fn label(&self, n: usize) -> String {
        match self {
            DesignSpec::Bernoulli { p } => format!("bernoulli({p})"),
            DesignSpec::Crd { treated_fraction } => {
                format!("crd({n}, fraction {treated_fraction})")
            }
        }
    }
}

/// Estimand family, turned into a concrete [`Estimand`] per graph.
#[derive(Debug, Clone)]
pub enum EstimandSpec {
    AllOrNone,
    StatusQuoVsNone,
    AllVsStatusQuo,
    MeanPo { arm: u8 },
    /// Hypothetical policy treating every neighbour independently at `alpha`.
    StochasticBernoulli { alpha: Prob },
    StochasticContrastBernoulli { from: Prob, to: Prob },
    PlusK { k: usize },
}

impl EstimandSpec {
    pub fn build(&self, g: &BipartiteGraph) -> Result<Estimand> {
        Ok(match self {
            EstimandSpec::AllOrNone => Estimand::AllOrNone,
            EstimandSpec::StatusQuoVsNone => Estimand::StatusQuoVsNone,
            EstimandSpec::AllVsStatusQuo => Estimand::AllVsStatusQuo,
            EstimandSpec::MeanPo { arm } => Estimand::MeanPo { arm: *arm },
            EstimandSpec::StochasticBernoulli { alpha } => Estimand::Stochastic {
                policy: LocalPolicy::bernoulli(g.n_outcome(), alpha.clone())?,
            },
            EstimandSpec::StochasticContrastBernoulli { from, to } => {
                Estimand::StochasticContrast {
                    from: LocalPolicy::bernoulli(g.n_outcome(), from.clone())?,
                    to: LocalPolicy::bernoulli(g.n_outcome(), to.clone())?,
                }
            }
            EstimandSpec::PlusK { k } => Estimand::PlusK { k: *k },
        })
    }
}

/// One randomization test run on every replication.
#[derive(Debug, Clone)]
pub struct TestSpec {
    pub statistic: Statistic,
    pub n_draws: usize,
    /// Nominal level; a replication rejects when p_value <= alpha.
    pub alpha: f64,
}

/// Full description of a simulation study.
#[derive(Debug, Clone)]
pub struct SimStudySpec {
    /// One cell per graph; sizes typically grow along the sequence.
    pub graphs: Vec<GraphFamily>,
    pub design: DesignSpec,
    pub po_family: PoFamily,
    pub po_seed: u64,
    pub seed: u64,
    pub n_replications: usize,
    pub estimands: Vec<EstimandSpec>,
    pub tests: Vec<TestSpec>,
    /// Output stem for report files; the library leaves writing to callers.
    pub output: Option<String>,
}

/// Aggregates for one estimand in one graph cell.
#[derive(Debug, Clone, Serialize)]
pub struct EstimandSummary {
    pub estimand_id: String,
    pub n_retained: usize,
    pub n_excluded: usize,
    pub mean_estimate: f64,
    pub mean_true_value: f64,
    pub bias: f64,
    pub bias_mc_se: f64,
    pub empirical_variance: f64,
    pub mse: f64,
    pub mse_mc_se: f64,
    pub mean_variance_bound: Option<f64>,
    pub variance_bound_mc_se: Option<f64>,
}

/// Aggregates for one randomization test in one graph cell.
///
/// A replication whose observed assignment leaves the statistic undefined
/// (for instance an all-treated Bernoulli draw with the intervention-level
/// statistic) cannot be tested at all; such replications are skipped and
/// counted, and the rejection rate conditions on the testable ones.
#[derive(Debug, Clone, Serialize)]
pub struct TestSummary {
    pub statistic_id: String,
    pub alpha: f64,
    pub n_draws: usize,
    pub n_tested: usize,
    pub n_degenerate_replications: usize,
    pub rejection_rate: f64,
    pub rejection_mc_se: f64,
    pub mean_degenerate_draws: f64,
}

/// Dependence summaries for one target, labelled for the report.
#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyRecord {
    pub target: String,
    pub stats: ConsistencyStats,
}

/// Everything recorded about one graph cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub graph_index: usize,
    pub family: String,
    pub graph: GraphStats,
    pub design: String,
    pub n_replications: usize,
    pub estimands: Vec<EstimandSummary>,
    pub tests: Vec<TestSummary>,
    pub consistency: Vec<ConsistencyRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudySummary {
    pub seed: u64,
    pub po_seed: u64,
    pub po_family: String,
    pub cells: Vec<CellSummary>,
}

/// Output of [`run_study`]: a long-format CSV (one row per replication and
/// estimand) plus structured aggregates.
#[derive(Debug, Clone)]
pub struct StudyReport {
    pub csv: String,
    pub summary: StudySummary,
}

struct RepRecord {
    /// (point estimate, variance bound, true estimand value) per estimand.
    estimates: Vec<(f64, Option<f64>, f64)>,
    /// Per test: rejection and redraw count, or None when the observed
    /// assignment left the statistic undefined.
    tests: Vec<Option<(bool, usize)>>,
}

fn mean(xs: &[f64]) -> f64 {
    ksum(xs.iter().copied()) / xs.len() as f64
}

/// Sample variance; zero when fewer than two observations.
fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let center = mean(xs);
    ksum(xs.iter().map(|&x| (x - center) * (x - center))) / (xs.len() - 1) as f64
}

fn mc_se(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

fn test_seed(study_seed: u64, draw_index: u64, test_index: usize) -> u64 {
    mix64(study_seed ^ mix64(draw_index) ^ ((test_index as u64) << 48))
}

/// Runs the study: per replication, redraws W from the design, realizes
/// outcomes from the fixed potential-outcome table, and computes every
/// requested estimate and test. Deterministic given the spec's seeds.
pub fn run_study(spec: &SimStudySpec) -> Result<StudyReport> {
    if spec.n_replications == 0 {
        return Err(Error::InvalidInput(
            "a study needs at least one replication".into(),
        ));
    }
    if spec.graphs.is_empty() {
        return Err(Error::InvalidInput("a study needs at least one graph".into()));
    }
    let opts = VarianceOptions::default();
    let mut csv = String::from(
        "graph_index,n_intervention,n_outcome,estimand_id,replication,\
         point_estimate,variance_bound,true_value,error\n",
    );
    let mut cells = Vec::with_capacity(spec.graphs.len());

    for (cell_index, family) in spec.graphs.iter().enumerate() {
        let g = generate_graph(family, spec.seed.wrapping_add(cell_index as u64))?;
        let po = generate_po_table(&g, spec.po_family, spec.po_seed.wrapping_add(cell_index as u64))?;
        let design = spec.design.instantiate(g.n_intervention())?;
        let prepared: Vec<(Estimand, PositivityReport)> = spec
            .estimands
            .iter()
            .map(|es| {
                let estimand = es.build(&g)?;
                let screen = screen_positivity_design(&g, &design, &estimand, opts.cap)?;
                if screen.retained_units.is_empty() {
                    return Err(Error::EmptyRetainedSet {
                        estimand: screen.estimand_id,
                    });
                }
                Ok((estimand, screen))
            })
            .collect::<Result<_>>()?;

        // Each cell gets its own block of the assignment stream.
        let stream_base = (cell_index as u64) << 32;
        let records = exec::ordered_map(spec.n_replications, |r| -> Result<RepRecord> {
            let draw_index = stream_base + r as u64;
            let mut rng = derive_rng(spec.seed, salt::SIM_ASSIGN, draw_index);
            let w = design.sample(&mut rng);
            let y = po.realize(&g, &w)?;
            let exp = ObservedExperiment::new(g.clone(), design.clone(), w, y)?;
            let mut estimates = Vec::with_capacity(prepared.len());
            for (estimand, screen) in &prepared {
                let report = analyze_screened(&exp, estimand, &opts, screen)?;
                let truth =
                    estimand_value(&g, &po, estimand, &screen.retained_units, exp.w())?;
                estimates.push((report.point_estimate, report.variance_bound, truth));
            }
            let mut tests = Vec::with_capacity(spec.tests.len());
            for (ti, test) in spec.tests.iter().enumerate() {
                let outcome = match randomization_test(
                    &exp,
                    test.statistic,
                    test.n_draws,
                    test_seed(spec.seed, draw_index, ti),
                ) {
                    Ok(result) => Some((result.p_value <= test.alpha, result.n_degenerate_draws)),
                    Err(Error::DegenerateStatistic(_)) => None,
                    Err(other) => return Err(other),
                };
                tests.push(outcome);
            }
            Ok(RepRecord { estimates, tests })
        });
        let records: Vec<RepRecord> = records.into_iter().collect::<Result<_>>()?;

        for (r, record) in records.iter().enumerate() {
            for ((estimand, _), &(point, bound, truth)) in
                prepared.iter().zip(&record.estimates)
            {
                let bound_field = bound.map(|b| b.to_string()).unwrap_or_default();
                csv.push_str(&format!(
                    "{cell_index},{},{},{},{r},{point},{bound_field},{truth},{}\n",
                    g.n_intervention(),
                    g.n_outcome(),
                    estimand.label(),
                    point - truth,
                ));
            }
        }

        let estimand_summaries = prepared
            .iter()
            .enumerate()
            .map(|(e, (estimand, screen))| {
                let points: Vec<f64> =
                    records.iter().map(|rec| rec.estimates[e].0).collect();
                let errors: Vec<f64> = records
                    .iter()
                    .map(|rec| rec.estimates[e].0 - rec.estimates[e].2)
                    .collect();
                let truths: Vec<f64> =
                    records.iter().map(|rec| rec.estimates[e].2).collect();
                let squared: Vec<f64> = errors.iter().map(|&d| d * d).collect();
                let bounds: Option<Vec<f64>> = records
                    .iter()
                    .map(|rec| rec.estimates[e].1)
                    .collect();
                let (mean_variance_bound, variance_bound_mc_se) = match &bounds {
                    Some(b) => (Some(mean(b)), Some(mc_se(b))),
                    None => (None, None),
                };
                EstimandSummary {
                    estimand_id: estimand.label(),
                    n_retained: screen.retained_units.len(),
                    n_excluded: screen.excluded_units.len(),
                    mean_estimate: mean(&points),
                    mean_true_value: mean(&truths),
                    bias: mean(&errors),
                    bias_mc_se: mc_se(&errors),
                    empirical_variance: sample_variance(&points),
                    mse: mean(&squared),
                    mse_mc_se: mc_se(&squared),
                    mean_variance_bound,
                    variance_bound_mc_se,
                }
            })
            .collect();

        let test_summaries = spec
            .tests
            .iter()
            .enumerate()
            .map(|(ti, test)| {
                let tested: Vec<(bool, usize)> =
                    records.iter().filter_map(|rec| rec.tests[ti]).collect();
                let n_tested = tested.len();
                let (rate, se, mean_degenerate) = if n_tested == 0 {
                    (0.0, 0.0, 0.0)
                } else {
                    let rate = tested.iter().filter(|(rejected, _)| *rejected).count() as f64
                        / n_tested as f64;
                    let degenerate: Vec<f64> =
                        tested.iter().map(|&(_, d)| d as f64).collect();
                    (
                        rate,
                        (rate * (1.0 - rate) / n_tested as f64).sqrt(),
                        mean(&degenerate),
                    )
                };
                TestSummary {
                    statistic_id: test.statistic.id().to_string(),
                    alpha: test.alpha,
                    n_draws: test.n_draws,
                    n_tested,
                    n_degenerate_replications: records.len() - n_tested,
                    rejection_rate: rate,
                    rejection_mc_se: se,
                    mean_degenerate_draws: mean_degenerate,
                }
            })
            .collect();

        let mut consistency = Vec::new();
        for arm in [0u8, 1] {
            consistency.push(ConsistencyRecord {
                target: format!("arm-{arm}"),
                stats: consistency_statistics(&g, &design, ConsistencyTarget::Arm(arm), opts.cap)?,
            });
        }

        cells.push(CellSummary {
            graph_index: cell_index,
            family: family.id().to_string(),
            graph: g.stats(),
            design: spec.design.label(g.n_intervention()),
            n_replications: spec.n_replications,
            estimands: estimand_summaries,
            tests: test_summaries,
            consistency,
        });
    }

    Ok(StudyReport {
        csv,
        summary: StudySummary {
            seed: spec.seed,
            po_seed: spec.po_seed,
            po_family: spec.po_family.id().to_string(),
            cells,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;
    use crate::randtest::SummaryFn;

    #[test]
    fn one_to_one_graph_is_identity() {
        let g = generate_graph(&GraphFamily::OneToOne { m: 5 }, 0).unwrap();
        assert_eq!(g.n_intervention(), 5);
        assert_eq!(g.n_outcome(), 5);
        for i in 0..5 {
            assert_eq!(g.intervention_set(i), &[i]);
        }
    }

    #[test]
    fn single_parent_graph_matches_cluster_sizes() {
        let family = GraphFamily::SingleParent {
            sizes: vec![3, 2, 4],
        };
        let g = generate_graph(&family, 0).unwrap();
        assert_eq!(g.n_intervention(), 3);
        assert_eq!(g.n_outcome(), 9);
        assert_eq!(g.outcome_set(0), &[0, 1, 2]);
        assert_eq!(g.outcome_set(1), &[3, 4]);
        assert_eq!(g.outcome_set(2), &[5, 6, 7, 8]);
        let stats = g.stats();
        assert_eq!(stats.max_intervention_set_size, 1);
        // Outcome units in the same cluster share their one parent.
        assert_eq!(stats.max_pairwise_overlap, 1);
    }

    #[test]
    fn cycling_sizes_cover_the_target_exactly() {
        assert_eq!(cycling_cluster_sizes(9), vec![3, 2, 4]);
        assert_eq!(cycling_cluster_sizes(11), vec![3, 2, 4, 2]);
        for m in [1, 7, 50, 200] {
            assert_eq!(cycling_cluster_sizes(m).iter().sum::<usize>(), m);
        }
    }

    #[test]
    fn general_graph_respects_degree_bound_and_is_reproducible() {
        let family = GraphFamily::General {
            n: 12,
            m: 40,
            max_degree: 3,
            overlap_rate: 0.4,
        };
        let a = generate_graph(&family, 9).unwrap();
        let b = generate_graph(&family, 9).unwrap();
        assert_eq!(a.stats(), b.stats());
        assert!(a.stats().max_intervention_set_size <= 3);
        assert_eq!(a.n_outcome(), 40);
        for m in 0..40 {
            assert!(!a.intervention_set(m).is_empty());
        }
    }

    #[test]
    fn crd_spec_clamps_to_both_arms() {
        let spec = DesignSpec::Crd {
            treated_fraction: ratio(1, 2),
        };
        let d = spec.instantiate(5).unwrap();
        assert_eq!(d.fixed_treated_count(), Some(2));
        let tiny = DesignSpec::Crd {
            treated_fraction: ratio(1, 100),
        };
        assert_eq!(tiny.instantiate(3).unwrap().fixed_treated_count(), Some(1));
    }

    #[test]
    fn sharp_null_study_has_zero_bias_and_valid_tests() {
        let spec = SimStudySpec {
            graphs: vec![GraphFamily::SingleParent {
                sizes: cycling_cluster_sizes(12),
            }],
            design: DesignSpec::Bernoulli { p: ratio(1, 2) },
            po_family: PoFamily::SharpNull,
            po_seed: 5,
            seed: 17,
            n_replications: 60,
            estimands: vec![EstimandSpec::AllOrNone, EstimandSpec::MeanPo { arm: 1 }],
            tests: vec![TestSpec {
                statistic: Statistic::InterventionDiffMeans(SummaryFn::Mean),
                n_draws: 50,
                alpha: 0.05,
            }],
            output: None,
        };
        let report = run_study(&spec).unwrap();
        let cell = &report.summary.cells[0];
        // Sharp null: tau-aon is exactly zero and every estimate of it is too.
        let aon = &cell.estimands[0];
        assert_eq!(aon.estimand_id, "aon");
        assert!(aon.bias.abs() <= 3.0 * aon.bias_mc_se + 1e-12);
        assert!(aon.mean_true_value.abs() < 1e-12);
        // The tiny support makes the smallest attainable p-value 1/14, so the
        // 0.05-level test never rejects.
        assert_eq!(cell.tests[0].rejection_rate, 0.0);
        // Same-cluster pairs are dependent under bernoulli: sizes 3,2,4,3
        // give 3*2 + 2*1 + 4*3 + 3*2 = 26 ordered pairs.
        assert_eq!(cell.consistency[1].stats.kappa, 26);
    }

    #[test]
    fn study_reports_are_byte_identical_given_the_seed() {
        let spec = SimStudySpec {
            graphs: vec![
                GraphFamily::OneToOne { m: 6 },
                GraphFamily::General {
                    n: 6,
                    m: 10,
                    max_degree: 2,
                    overlap_rate: 0.5,
                },
            ],
            design: DesignSpec::Crd {
                treated_fraction: ratio(1, 2),
            },
            po_family: PoFamily::Additive,
            po_seed: 2,
            seed: 3,
            n_replications: 25,
            estimands: vec![
                EstimandSpec::MeanPo { arm: 0 },
                EstimandSpec::StochasticBernoulli { alpha: ratio(1, 3) },
            ],
            tests: vec![],
            output: None,
        };
        let a = run_study(&spec).unwrap();
        let b = run_study(&spec).unwrap();
        assert_eq!(a.csv, b.csv);
        assert_eq!(
            serde_json::to_string(&a.summary).unwrap(),
            serde_json::to_string(&b.summary).unwrap()
        );
        let mut other = spec.clone();
        other.seed = 4;
        let c = run_study(&other).unwrap();
        assert_ne!(a.csv, c.csv);
    }

    #[test]
    fn estimates_in_the_csv_track_the_bias_summary() {
        let spec = SimStudySpec {
            graphs: vec![GraphFamily::SingleParent { sizes: vec![2, 3] }],
            design: DesignSpec::Bernoulli { p: ratio(1, 2) },
            po_family: PoFamily::Additive,
            po_seed: 1,
            seed: 1,
            n_replications: 40,
            estimands: vec![EstimandSpec::AllOrNone],
            tests: vec![],
            output: None,
        };
        let report = run_study(&spec).unwrap();
        let lines: Vec<&str> = report.csv.lines().collect();
        assert_eq!(lines.len(), 1 + 40);
        assert!(lines[0].starts_with("graph_index,"));
        let mut errors = Vec::new();
        for line in &lines[1..] {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 9);
            assert_eq!(fields[3], "aon");
            errors.push(fields[8].parse::<f64>().unwrap());
        }
        let bias = report.summary.cells[0].estimands[0].bias;
        assert!((mean(&errors) - bias).abs() < 1e-12);
    }

    #[test]
    fn infeasible_generators_error() {
        assert!(generate_graph(
            &GraphFamily::General {
                n: 3,
                m: 5,
                max_degree: 4,
                overlap_rate: 0.5
            },
            0
        )
        .is_err());
        assert!(generate_graph(
            &GraphFamily::SingleParent {
                sizes: vec![2, 0, 1]
            },
            0
        )
        .is_err());
        let spec = SimStudySpec {
            graphs: vec![],
            design: DesignSpec::Bernoulli { p: ratio(1, 2) },
            po_family: PoFamily::Additive,
            po_seed: 0,
            seed: 0,
            n_replications: 1,
            estimands: vec![],
            tests: vec![],
            output: None,
        };
        assert!(run_study(&spec).is_err());
    }
}
