//! Positivity screening and inverse-probability-weighted point estimators.
//!
//! Each estimator averages over the units that survive the positivity screen
//! for its estimand, so the estimand itself is redefined over that retained
//! subpopulation. The observed mean Ȳ inside the status-quo and +K contrasts
//! uses the same retained set as the weighted term.

use crate::design::AssignmentDistribution;
use crate::error::{Error, Result};
use crate::exec::ordered_map;
use crate::experiment::{Estimand, ObservedExperiment};
use crate::graph::BipartiteGraph;
use crate::numeric::{binomial, to_f64, KahanSum, Prob};
use crate::policy::LocalPolicy;
use crate::variance::{self, VarianceOptions};
use itertools::Itertools;
use num::traits::Zero;
use serde::Serialize;
use std::collections::HashSet;

/// An outcome unit dropped by the positivity screen, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct ExcludedUnit {
    pub unit: usize,
    pub condition: String,
}

/// Which outcome units support estimation of a given estimand.
#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub estimand_id: String,
    pub excluded_units: Vec<ExcludedUnit>,
    pub retained_units: Vec<usize>,
}

/// A point estimate with its conservative variance bound.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub estimand_id: String,
    pub point_estimate: f64,
    /// Upper bound on the sampling variance; absent where no estimator
    /// exists (the +K estimand).
    pub variance_bound: Option<f64>,
    pub n_retained: usize,
    pub n_excluded: usize,
    /// Retained units whose outcome enters the estimate with nonzero weight
    /// under the realized assignment.
    pub effective_units: usize,
}

fn arm_vec(len: usize, arm: u8) -> Vec<u8> {
    vec![arm; len]
}

fn bits_string(v: &[u8]) -> String {
    v.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

/// Positivity screen from the design alone; no realized data needed.
pub fn screen_positivity_design(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    estimand: &Estimand,
    cap: usize,
) -> Result<PositivityReport> {
    if d.n_units() != g.n_intervention() {
        return Err(Error::InvalidInput(
            "design does not match the graph".into(),
        ));
    }
    let mut excluded_units = Vec::new();
    let mut retained_units = Vec::new();
    fn push(
        m: usize,
        condition: Option<String>,
        excl: &mut Vec<ExcludedUnit>,
        ret: &mut Vec<usize>,
    ) {
        match condition {
            Some(condition) => excl.push(ExcludedUnit { unit: m, condition }),
            None => ret.push(m),
        }
    }

    match estimand {
        Estimand::AllOrNone => {
            for m in 0..g.n_outcome() {
                let set = g.intervention_set(m);
                let zero_bad = d.marginal_prob(set, &arm_vec(set.len(), 0))?.is_zero();
                let one_bad = d.marginal_prob(set, &arm_vec(set.len(), 1))?.is_zero();
                let cond = match (zero_bad, one_bad) {
                    (false, false) => None,
                    (true, false) => Some("π_{𝒩_m}(0)=0".to_string()),
                    (false, true) => Some("π_{𝒩_m}(1)=0".to_string()),
                    (true, true) => Some("π_{𝒩_m}(0)=0 and π_{𝒩_m}(1)=0".to_string()),
                };
                push(m, cond, &mut excluded_units, &mut retained_units);
            }
        }
        Estimand::StatusQuoVsNone => {
            for m in 0..g.n_outcome() {
                let set = g.intervention_set(m);
                let bad = d.marginal_prob(set, &arm_vec(set.len(), 0))?.is_zero();
                push(
                    m,
                    bad.then(|| "π_{𝒩_m}(0)=0".to_string()),
                    &mut excluded_units,
                    &mut retained_units,
                );
            }
        }
        Estimand::AllVsStatusQuo => {
            for m in 0..g.n_outcome() {
                let set = g.intervention_set(m);
                let bad = d.marginal_prob(set, &arm_vec(set.len(), 1))?.is_zero();
                push(
                    m,
                    bad.then(|| "π_{𝒩_m}(1)=0".to_string()),
                    &mut excluded_units,
                    &mut retained_units,
                );
            }
        }
        Estimand::MeanPo { arm } => {
            for m in 0..g.n_outcome() {
                let set = g.intervention_set(m);
                let bad = d.marginal_prob(set, &arm_vec(set.len(), *arm))?.is_zero();
                push(
                    m,
                    bad.then(|| format!("π_{{𝒩_m}}({arm})=0")),
                    &mut excluded_units,
                    &mut retained_units,
                );
            }
        }
        Estimand::Stochastic { policy } => {
            for m in 0..g.n_outcome() {
                let cond = stochastic_violation(g, d, policy, m, cap)?;
                push(m, cond, &mut excluded_units, &mut retained_units);
            }
        }
        Estimand::StochasticContrast { from, to } => {
            for m in 0..g.n_outcome() {
                let cond = match stochastic_violation(g, d, from, m, cap)? {
                    Some(c) => Some(c),
                    None => stochastic_violation(g, d, to, m, cap)?,
                };
                push(m, cond, &mut excluded_units, &mut retained_units);
            }
        }
        Estimand::PlusK { k } => {
            plus_k_counts(d, *k)?;
            for m in 0..g.n_outcome() {
                let bad = !richer_vector_holds(g, d, m, cap)?;
                push(
                    m,
                    bad.then(|| "richer-vector condition fails".to_string()),
                    &mut excluded_units,
                    &mut retained_units,
                );
            }
        }
    }
    Ok(PositivityReport {
        estimand_id: estimand.label(),
        excluded_units,
        retained_units,
    })
}

/// Positivity screen for the estimand on an observed experiment.
pub fn screen_positivity(
    exp: &ObservedExperiment,
    estimand: &Estimand,
    cap: usize,
) -> Result<PositivityReport> {
    screen_positivity_design(exp.graph(), exp.design(), estimand, cap)
}

/// First policy-support point with zero design probability, if any.
fn stochastic_violation(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    policy: &LocalPolicy,
    m: usize,
    cap: usize,
) -> Result<Option<String>> {
    let set = g.intervention_set(m);
    for (a, _) in policy.support(g, m, cap)? {
        if d.marginal_prob(set, &a)?.is_zero() {
            return Ok(Some(format!(
                "h(a)>0 but π_{{𝒩_m}}(a)=0 at a={}",
                bits_string(&a)
            )));
        }
    }
    Ok(None)
}

/// Whether every treatment vector richer than a possible one is possible.
///
/// The full condition quantifies over all richer vectors, but positivity is
/// closed under single increments, so checking one added treatment at a time
/// suffices.
fn richer_vector_holds(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    m: usize,
    cap: usize,
) -> Result<bool> {
    let set = g.intervention_set(m);
    let support = d.support_on(set, cap)?;
    let masks: HashSet<usize> = support
        .iter()
        .map(|(w, _)| w.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as usize) << i)))
        .collect();
    for &mask in &masks {
        for j in 0..set.len() {
            let richer = mask | (1 << j);
            if richer != mask && !masks.contains(&richer) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Validates the +K preconditions and returns (treated count, control count).
fn plus_k_counts(d: &AssignmentDistribution, k: usize) -> Result<(usize, usize)> {
    let t = d.fixed_treated_count().ok_or_else(|| {
        Error::InvalidInput(
            "the +K estimand requires a design that fixes the number of treated units".into(),
        )
    })?;
    let n_c = d.n_units() - t;
    if k == 0 {
        return Err(Error::InvalidInput("K must be at least 1".into()));
    }
    if k > n_c {
        return Err(Error::InvalidInput(format!(
            "K={k} exceeds the {n_c} control units"
        )));
    }
    Ok((t, n_c))
}

fn require_retained(retained: &[usize], estimand: &str) -> Result<()> {
    if retained.is_empty() {
        return Err(Error::EmptyRetainedSet {
            estimand: estimand.to_string(),
        });
    }
    Ok(())
}

/// Ŷ(a): mean potential outcome under everyone-at-`arm`, averaged over the
/// retained units.
pub fn estimate_mean_po(exp: &ObservedExperiment, arm: u8, retained: &[usize]) -> Result<f64> {
    require_retained(retained, &format!("mean-po-{arm}"))?;
    let terms = ordered_map(retained.len(), |i| -> Result<f64> {
        let m = retained[i];
        let local = exp.local_w(m);
        if local.iter().all(|&x| x == arm) {
            let set = exp.graph().intervention_set(m);
            let pi = exp.design().marginal_prob(set, &local)?;
            Ok(exp.y()[m] / to_f64(&pi))
        } else {
            Ok(0.0)
        }
    });
    let mut acc = KahanSum::new();
    for t in terms {
        acc.add(t?);
    }
    Ok(acc.value() / retained.len() as f64)
}

/// τ̂ for everyone-treated versus nobody-treated.
pub fn estimate_aon(exp: &ObservedExperiment, retained: &[usize]) -> Result<f64> {
    Ok(estimate_mean_po(exp, 1, retained)? - estimate_mean_po(exp, 0, retained)?)
}

/// τ̂ for the realized treatment versus nobody treated: Ȳ − Ŷ(0).
pub fn estimate_sq1(exp: &ObservedExperiment, retained: &[usize]) -> Result<f64> {
    require_retained(retained, "sq1")?;
    Ok(exp.observed_mean(retained)? - estimate_mean_po(exp, 0, retained)?)
}

/// τ̂ for everyone treated versus the realized treatment: Ŷ(1) − Ȳ.
pub fn estimate_sq0(exp: &ObservedExperiment, retained: &[usize]) -> Result<f64> {
    require_retained(retained, "sq0")?;
    Ok(estimate_mean_po(exp, 1, retained)? - exp.observed_mean(retained)?)
}

/// Ŷ_h: mean outcome under the hypothetical local policy `h`.
pub fn estimate_stochastic(
    exp: &ObservedExperiment,
    policy: &LocalPolicy,
    retained: &[usize],
) -> Result<f64> {
    require_retained(retained, "stoch")?;
    let terms = ordered_map(retained.len(), |i| -> Result<f64> {
        let m = retained[i];
        let local = exp.local_w(m);
        let h = policy.prob(exp.graph(), m, &local)?;
        if h.is_zero() {
            return Ok(0.0);
        }
        let set = exp.graph().intervention_set(m);
        let pi = exp.design().marginal_prob(set, &local)?;
        Ok(to_f64(&(h / pi)) * exp.y()[m])
    });
    let mut acc = KahanSum::new();
    for t in terms {
        acc.add(t?);
    }
    Ok(acc.value() / retained.len() as f64)
}

/// τ̂(α, α′) = Ŷ_{h′} − Ŷ_h on a common retained set.
pub fn estimate_stochastic_contrast(
    exp: &ObservedExperiment,
    from: &LocalPolicy,
    to: &LocalPolicy,
    retained: &[usize],
) -> Result<f64> {
    Ok(estimate_stochastic(exp, to, retained)? - estimate_stochastic(exp, from, retained)?)
}

/// Exact weight ρ_m for promoting K random controls to treatment.
///
/// Averages the marginal probability over every way the unit's realized
/// treatment could have arisen from a pre-promotion assignment, normalized by
/// the number of promotion subsets and the realized probability.
pub fn rho_weight(exp: &ObservedExperiment, m: usize, k: usize, cap: usize) -> Result<Prob> {
    let d = exp.design();
    let (_, n_c) = plus_k_counts(d, k)?;
    let set = exp.graph().intervention_set(m);
    if set.len() > cap {
        return Err(Error::CapExceeded {
            needed: set.len(),
            cap,
        });
    }
    let local = exp.local_w(m);
    let treated_pos: Vec<usize> = local
        .iter()
        .enumerate()
        .filter(|&(_, &x)| x == 1)
        .map(|(i, _)| i)
        .collect();
    let n_c_m = set.len() - treated_pos.len();
    let pi_w = d.marginal_prob(set, &local)?;
    if pi_w.is_zero() {
        return Err(Error::InvalidInput(format!(
            "realized treatment of outcome unit {m} has probability zero"
        )));
    }
    let mut total = Prob::zero();
    for flips in 0..=k.min(treated_pos.len()) {
        let coef = binomial(n_c - n_c_m, k - flips);
        if coef.is_zero() {
            continue;
        }
        let mut inner = Prob::zero();
        for combo in treated_pos.iter().combinations(flips) {
            let mut v = local.clone();
            for &&pos in &combo {
                v[pos] = 0;
            }
            inner += d.marginal_prob(set, &v)?;
        }
        total += Prob::from_integer(coef) * inner;
    }
    Ok(total / (Prob::from_integer(binomial(n_c, k)) * pi_w))
}

/// τ̂^{+K} = Ŷ^{+K} − Ȳ over the retained units.
pub fn estimate_plus_k(
    exp: &ObservedExperiment,
    k: usize,
    retained: &[usize],
    cap: usize,
) -> Result<f64> {
    require_retained(retained, &format!("plus-{k}"))?;
    let terms = ordered_map(retained.len(), |i| -> Result<f64> {
        let m = retained[i];
        Ok(to_f64(&rho_weight(exp, m, k, cap)?) * exp.y()[m])
    });
    let mut acc = KahanSum::new();
    for t in terms {
        acc.add(t?);
    }
    Ok(acc.value() / retained.len() as f64 - exp.observed_mean(retained)?)
}

/// Point estimate of any estimand on a fixed retained set.
pub fn point_estimate(
    exp: &ObservedExperiment,
    estimand: &Estimand,
    retained: &[usize],
    cap: usize,
) -> Result<f64> {
    match estimand {
        Estimand::AllOrNone => estimate_aon(exp, retained),
        Estimand::StatusQuoVsNone => estimate_sq1(exp, retained),
        Estimand::AllVsStatusQuo => estimate_sq0(exp, retained),
        Estimand::MeanPo { arm } => estimate_mean_po(exp, *arm, retained),
        Estimand::Stochastic { policy } => estimate_stochastic(exp, policy, retained),
        Estimand::StochasticContrast { from, to } => {
            estimate_stochastic_contrast(exp, from, to, retained)
        }
        Estimand::PlusK { k } => estimate_plus_k(exp, *k, retained, cap),
    }
}

/// How many retained units carry nonzero weight at the realized assignment.
fn effective_units(
    exp: &ObservedExperiment,
    estimand: &Estimand,
    retained: &[usize],
    cap: usize,
) -> Result<usize> {
    let mut count = 0;
    for &m in retained {
        let local = exp.local_w(m);
        let active = match estimand {
            Estimand::AllOrNone => {
                local.iter().all(|&x| x == 1) || local.iter().all(|&x| x == 0)
            }
            // The observed-mean term gives every retained unit weight.
            Estimand::StatusQuoVsNone | Estimand::AllVsStatusQuo => true,
            Estimand::MeanPo { arm } => local.iter().all(|&x| x == *arm),
            Estimand::Stochastic { policy } => {
                !policy.prob(exp.graph(), m, &local)?.is_zero()
            }
            Estimand::StochasticContrast { from, to } => {
                from.prob(exp.graph(), m, &local)? != to.prob(exp.graph(), m, &local)?
            }
            Estimand::PlusK { k } => !rho_weight(exp, m, *k, cap)?.is_zero(),
        };
        if active {
            count += 1;
        }
    }
    Ok(count)
}

/// Screens, estimates, and bounds the variance in one pass.
pub fn analyze(
    exp: &ObservedExperiment,
    estimand: &Estimand,
    opts: &VarianceOptions,
) -> Result<EstimateReport> {
    let screen = screen_positivity(exp, estimand, opts.cap)?;
    analyze_screened(exp, estimand, opts, &screen)
}

/// [`analyze`] with a positivity screen computed up front.
///
/// The screen depends only on the graph, design, and estimand, so repeated
/// analyses of re-randomized experiments can share one.
pub fn analyze_screened(
    exp: &ObservedExperiment,
    estimand: &Estimand,
    opts: &VarianceOptions,
    screen: &PositivityReport,
) -> Result<EstimateReport> {
    let retained = &screen.retained_units;
    require_retained(retained, &screen.estimand_id)?;
    let point_estimate = point_estimate(exp, estimand, retained, opts.cap)?;
    let variance_bound = match estimand {
        Estimand::AllOrNone => Some(variance::estimate_variance_aon(exp, retained, opts)?),
        Estimand::StatusQuoVsNone => {
            Some(variance::estimate_variance_mean_po(exp, 0, retained, opts)?)
        }
        Estimand::AllVsStatusQuo => {
            Some(variance::estimate_variance_mean_po(exp, 1, retained, opts)?)
        }
        Estimand::MeanPo { arm } => {
            Some(variance::estimate_variance_mean_po(exp, *arm, retained, opts)?)
        }
        Estimand::Stochastic { policy } => Some(variance::estimate_variance_stochastic(
            exp, policy, retained, opts,
        )?),
        Estimand::StochasticContrast { from, to } => {
            Some(variance::estimate_variance_stochastic_contrast(
                exp, from, to, retained, opts,
            )?)
        }
        Estimand::PlusK { .. } => None,
    };
    Ok(EstimateReport {
        estimand_id: screen.estimand_id.clone(),
        point_estimate,
        variance_bound,
        n_retained: retained.len(),
        n_excluded: screen.excluded_units.len(),
        effective_units: effective_units(exp, estimand, retained, opts.cap)?,
    })
}
