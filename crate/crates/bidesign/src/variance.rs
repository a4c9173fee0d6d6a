//! Sampling variances of the weighted estimators: exact values from a full
//! potential-outcome table, and conservative estimates from one realized
//! dataset.
//!
//! The estimators are upper bounds in expectation. Terms covering unit pairs
//! that can never share the required treatment event are replaced by
//! nonnegative pads, so the output can exceed the true variance but never
//! understates it in expectation.

use crate::design::{AssignmentDistribution, DesignKind};
use crate::error::{Error, Result};
use crate::exec::ordered_map;
use crate::experiment::ObservedExperiment;
use crate::graph::BipartiteGraph;
use crate::numeric::{to_f64, KahanSum, Prob};
use crate::oracle::PotentialOutcomeTable;
use crate::policy::LocalPolicy;
use num::traits::{One, Signed, Zero};

/// Knobs shared by the variance estimators.
#[derive(Debug, Clone)]
pub struct VarianceOptions {
    /// All potential outcomes share one sign, so the cross-unit pads that
    /// only guard against sign cancellation can be dropped for a sharper
    /// bound. Never inferred from the data; the realized outcomes cannot
    /// certify the sign of counterfactual ones.
    pub same_sign_hint: bool,
    /// Include the m = m' term in the covariance lower bound. The summation
    /// is written over all pairs, which covers the diagonal; the exclusive
    /// reading is kept available for comparison.
    pub cov_lb_includes_diagonal: bool,
    /// Neighbourhood-size cap for support enumeration.
    pub cap: usize,
}

impl Default for VarianceOptions {
    fn default() -> Self {
        Self {
            same_sign_hint: false,
            cov_lb_includes_diagonal: true,
            cap: crate::DEFAULT_ENUM_CAP,
        }
    }
}

/// Whether a pair of outcome units can jointly experience the arm event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairClassification {
    pub pair: (usize, usize),
    pub joint_possible: bool,
}

/// Classifies one ordered pair for the constant-arm event.
pub fn classify_pair(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    m1: usize,
    m2: usize,
    arm: u8,
) -> Result<PairClassification> {
    let s1 = g.intervention_set(m1);
    let s2 = g.intervention_set(m2);
    let joint = d.joint_prob(s1, &vec![arm; s1.len()], s2, &vec![arm; s2.len()])?;
    Ok(PairClassification {
        pair: (m1, m2),
        joint_possible: !joint.is_zero(),
    })
}

/// True if joint probabilities always factor across disjoint unit sets.
fn is_product_design(d: &AssignmentDistribution) -> bool {
    matches!(
        d.kind(),
        DesignKind::Bernoulli { .. }
            | DesignKind::StratifiedBernoulli { .. }
            | DesignKind::PointMass { .. }
    )
}

/// Truncates a realized variance estimate at zero.
///
/// The Horvitz-Thompson style estimators here are conservative in expectation
/// but not pointwise: negatively associated indicators (any fixed-margin
/// design) or mixed-sign outcomes can push a realized value below zero.
/// Truncation only raises the expectation, so the bound stays conservative.
fn truncate_variance_estimate(value: f64) -> f64 {
    value.max(0.0)
}

/// Exact variance of the everyone-at-`arm` mean estimator over `units`.
pub fn true_variance_mean_po(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    po: &PotentialOutcomeTable,
    arm: u8,
    units: &[usize],
) -> Result<f64> {
    if units.is_empty() {
        return Err(Error::InvalidInput("variance over an empty unit set".into()));
    }
    let mut pis = Vec::with_capacity(units.len());
    let mut ys = Vec::with_capacity(units.len());
    for &m in units {
        let set = g.intervention_set(m);
        let avec = vec![arm; set.len()];
        let pi = d.marginal_prob(set, &avec)?;
        if pi.is_zero() {
            return Err(Error::InvalidInput(format!(
                "unit {m} cannot experience arm {arm} under this design"
            )));
        }
        ys.push(po.y_local(m, &avec)?);
        pis.push(pi);
    }
    let rows = ordered_map(units.len(), |i| -> Result<f64> {
        let si = g.intervention_set(units[i]);
        let ai = vec![arm; si.len()];
        let mut acc = KahanSum::new();
        for j in 0..units.len() {
            let sj = g.intervention_set(units[j]);
            let aj = vec![arm; sj.len()];
            let joint = d.joint_prob(si, &ai, sj, &aj)?;
            let prod = &pis[i] * &pis[j];
            let factor = (joint - &prod) / prod;
            acc.add(to_f64(&factor) * ys[i] * ys[j]);
        }
        Ok(acc.value())
    });
    let mut acc = KahanSum::new();
    for r in rows {
        acc.add(r?);
    }
    Ok(acc.value() / (units.len() as f64).powi(2))
}

/// Exact variance of the all-or-none contrast estimator over `units`.
pub fn true_variance_aon(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    po: &PotentialOutcomeTable,
    units: &[usize],
) -> Result<f64> {
    let v0 = true_variance_mean_po(g, d, po, 0, units)?;
    let v1 = true_variance_mean_po(g, d, po, 1, units)?;

    let mut pi0 = Vec::with_capacity(units.len());
    let mut pi1 = Vec::with_capacity(units.len());
    let mut y0 = Vec::with_capacity(units.len());
    let mut y1 = Vec::with_capacity(units.len());
    for &m in units {
        let set = g.intervention_set(m);
        pi0.push(d.marginal_prob(set, &vec![0; set.len()])?);
        pi1.push(d.marginal_prob(set, &vec![1; set.len()])?);
        y0.push(po.y_local(m, &vec![0; set.len()])?);
        y1.push(po.y_local(m, &vec![1; set.len()])?);
    }
    let rows = ordered_map(units.len(), |i| -> Result<f64> {
        let si = g.intervention_set(units[i]);
        let zi = vec![0u8; si.len()];
        let mut acc = KahanSum::new();
        for j in 0..units.len() {
            let sj = g.intervention_set(units[j]);
            let oj = vec![1u8; sj.len()];
            let joint01 = d.joint_prob(si, &zi, sj, &oj)?;
            if joint01.is_zero() {
                acc.add(-y0[i] * y1[j]);
            } else {
                let prod = &pi0[i] * &pi1[j];
                let factor = (joint01 - &prod) / prod;
                acc.add(to_f64(&factor) * y0[i] * y1[j]);
            }
        }
        Ok(acc.value())
    });
    let mut acc = KahanSum::new();
    for r in rows {
        acc.add(r?);
    }
    let cov = acc.value() / (units.len() as f64).powi(2);
    Ok(v0 + v1 - 2.0 * cov)
}

/// Conservative estimate of the variance of the everyone-at-`arm` mean, from
/// the realized data alone. Truncated at zero.
pub fn estimate_variance_mean_po(
    exp: &ObservedExperiment,
    arm: u8,
    retained: &[usize],
    opts: &VarianceOptions,
) -> Result<f64> {
    Ok(truncate_variance_estimate(estimate_variance_mean_po_raw(
        exp, arm, retained, opts,
    )?))
}

/// Untruncated value, so composite bounds can sum pieces before truncating.
fn estimate_variance_mean_po_raw(
    exp: &ObservedExperiment,
    arm: u8,
    retained: &[usize],
    opts: &VarianceOptions,
) -> Result<f64> {
    if retained.is_empty() {
        return Err(Error::EmptyRetainedSet {
            estimand: format!("mean-po-{arm}"),
        });
    }
    let g = exp.graph();
    let d = exp.design();
    let mut pis = Vec::with_capacity(retained.len());
    let mut matches = Vec::with_capacity(retained.len());
    for &m in retained {
        let set = g.intervention_set(m);
        let avec = vec![arm; set.len()];
        let pi = d.marginal_prob(set, &avec)?;
        if pi.is_zero() {
            return Err(Error::InvalidInput(format!(
                "unit {m} cannot experience arm {arm} under this design"
            )));
        }
        matches.push(exp.local_w(m) == avec);
        pis.push(pi);
    }
    let same_sign = opts.same_sign_hint;
    let rows = ordered_map(retained.len(), |i| -> Result<f64> {
        let mi = retained[i];
        let si = g.intervention_set(mi);
        let ai = vec![arm; si.len()];
        let yi = exp.y()[mi];
        let mut acc = KahanSum::new();
        if matches[i] {
            let one_minus = Prob::one() - &pis[i];
            acc.add(to_f64(&(one_minus / (&pis[i] * &pis[i]))) * yi * yi);
        }
        for j in 0..retained.len() {
            if j == i {
                continue;
            }
            let mj = retained[j];
            let sj = g.intervention_set(mj);
            let aj = vec![arm; sj.len()];
            let yj = exp.y()[mj];
            let joint = d.joint_prob(si, &ai, sj, &aj)?;
            if !joint.is_zero() {
                if matches[i] && matches[j] {
                    let prod = &pis[i] * &pis[j];
                    let factor = (Prob::one() - &prod / joint) / prod;
                    acc.add(to_f64(&factor) * yi * yj);
                }
            } else if !same_sign {
                if matches[i] {
                    acc.add(0.5 * yi * yi * to_f64(&(Prob::one() / &pis[i])));
                }
                if matches[j] {
                    acc.add(0.5 * yj * yj * to_f64(&(Prob::one() / &pis[j])));
                }
            }
        }
        Ok(acc.value())
    });
    let mut acc = KahanSum::new();
    for r in rows {
        acc.add(r?);
    }
    let mm = (retained.len() as f64).powi(2);
    Ok(acc.value() / mm)
}

/// Lower bound on the covariance between the two arm means, including the
/// pads for pairs that can never realize control-here, treated-there.
fn cov_lower_bound(
    exp: &ObservedExperiment,
    retained: &[usize],
    opts: &VarianceOptions,
) -> Result<f64> {
    let g = exp.graph();
    let d = exp.design();
    let mut pi0 = Vec::with_capacity(retained.len());
    let mut pi1 = Vec::with_capacity(retained.len());
    let mut at0 = Vec::with_capacity(retained.len());
    let mut at1 = Vec::with_capacity(retained.len());
    for &m in retained {
        let set = g.intervention_set(m);
        let local = exp.local_w(m);
        let p0 = d.marginal_prob(set, &vec![0; set.len()])?;
        let p1 = d.marginal_prob(set, &vec![1; set.len()])?;
        if p0.is_zero() || p1.is_zero() {
            return Err(Error::InvalidInput(format!(
                "unit {m} lacks positivity for one arm"
            )));
        }
        at0.push(local.iter().all(|&x| x == 0));
        at1.push(local.iter().all(|&x| x == 1));
        pi0.push(p0);
        pi1.push(p1);
    }
    let include_diag = opts.cov_lb_includes_diagonal;
    let rows = ordered_map(retained.len(), |i| -> Result<f64> {
        let mi = retained[i];
        let si = g.intervention_set(mi);
        let zi = vec![0u8; si.len()];
        let yi = exp.y()[mi];
        let mut acc = KahanSum::new();
        for j in 0..retained.len() {
            if i == j && !include_diag {
                continue;
            }
            let mj = retained[j];
            let sj = g.intervention_set(mj);
            let oj = vec![1u8; sj.len()];
            let yj = exp.y()[mj];
            let joint01 = d.joint_prob(si, &zi, sj, &oj)?;
            if !joint01.is_zero() {
                if at0[i] && at1[j] {
                    let prod = &pi0[i] * &pi1[j];
                    let factor = (Prob::one() - &prod / joint01) / prod;
                    acc.add(to_f64(&factor) * yi * yj);
                }
            } else {
                let mut t = 0.0;
                if at0[i] {
                    t -= 0.5 * yi * yi * to_f64(&(Prob::one() / &pi0[i]));
                }
                if at1[j] {
                    t -= 0.5 * yj * yj * to_f64(&(Prob::one() / &pi1[j]));
                }
                acc.add(t);
            }
        }
        Ok(acc.value())
    });
    let mut acc = KahanSum::new();
    for r in rows {
        acc.add(r?);
    }
    Ok(acc.value() / (retained.len() as f64).powi(2))
}

/// Conservative estimate of the all-or-none contrast variance.
pub fn estimate_variance_aon(
    exp: &ObservedExperiment,
    retained: &[usize],
    opts: &VarianceOptions,
) -> Result<f64> {
    if retained.is_empty() {
        return Err(Error::EmptyRetainedSet {
            estimand: "aon".into(),
        });
    }
    let v0 = estimate_variance_mean_po_raw(exp, 0, retained, opts)?;
    let v1 = estimate_variance_mean_po_raw(exp, 1, retained, opts)?;
    let cov = cov_lower_bound(exp, retained, opts)?;
    Ok(truncate_variance_estimate(v0 + v1 - 2.0 * cov))
}

/// Per-unit inputs shared by the stochastic variance routines.
struct PolicyAtRealized {
    /// h_m at the realized local treatment, possibly signed for contrasts.
    weight: Prob,
    /// Design probability of the realized local treatment.
    pi: Prob,
    /// Positive-weight rows of the (possibly signed) policy on this unit.
    support: Vec<(Vec<u8>, Prob)>,
    /// Sum of |weight| over the support.
    total_abs: Prob,
}

fn policy_at_realized(
    exp: &ObservedExperiment,
    policy: &LocalPolicy,
    m: usize,
    cap: usize,
) -> Result<PolicyAtRealized> {
    let g = exp.graph();
    let local = exp.local_w(m);
    let set = g.intervention_set(m);
    let weight = policy.prob(g, m, &local)?;
    let pi = exp.design().marginal_prob(set, &local)?;
    let support = policy.support(g, m, cap)?;
    for (w, _) in &support {
        if exp.design().marginal_prob(set, w)?.is_zero() {
            return Err(Error::InvalidInput(format!(
                "policy puts weight on a treatment of unit {m} that the design cannot produce"
            )));
        }
    }
    let total_abs = support.iter().map(|(_, h)| h.abs()).sum();
    Ok(PolicyAtRealized {
        weight,
        pi,
        support,
        total_abs,
    })
}

/// Signed difference of two policies on one unit, merged over both supports.
fn contrast_at_realized(
    exp: &ObservedExperiment,
    from: &LocalPolicy,
    to: &LocalPolicy,
    m: usize,
    cap: usize,
) -> Result<PolicyAtRealized> {
    let g = exp.graph();
    let local = exp.local_w(m);
    let set = g.intervention_set(m);
    let weight = to.prob(g, m, &local)? - from.prob(g, m, &local)?;
    let pi = exp.design().marginal_prob(set, &local)?;
    let mut merged: std::collections::BTreeMap<Vec<u8>, Prob> = std::collections::BTreeMap::new();
    for (w, h) in to.support(g, m, cap)? {
        *merged.entry(w).or_insert_with(Prob::zero) += h;
    }
    for (w, h) in from.support(g, m, cap)? {
        *merged.entry(w).or_insert_with(Prob::zero) -= h;
    }
    let mut support = Vec::new();
    for (w, gw) in merged {
        if gw.is_zero() {
            continue;
        }
        if exp.design().marginal_prob(set, &w)?.is_zero() {
            return Err(Error::InvalidInput(format!(
                "policy puts weight on a treatment of unit {m} that the design cannot produce"
            )));
        }
        support.push((w, gw));
    }
    let total_abs = support.iter().map(|(_, h)| h.abs()).sum();
    Ok(PolicyAtRealized {
        weight,
        pi,
        support,
        total_abs,
    })
}

/// Weight mass of `other`'s support that can never co-occur with unit `mi`
/// sitting at its realized treatment.
fn incompatible_mass(
    exp: &ObservedExperiment,
    mi: usize,
    mj: usize,
    other: &PolicyAtRealized,
) -> Result<Prob> {
    let g = exp.graph();
    let si = g.intervention_set(mi);
    let sj = g.intervention_set(mj);
    let li = exp.local_w(mi);
    let mut lam = Prob::zero();
    for (w, h) in &other.support {
        if exp.design().joint_prob(si, &li, sj, w)?.is_zero() {
            lam += h.abs();
        }
    }
    Ok(lam)
}

/// Shared pair-and-diagonal accumulation for the stochastic and contrast
/// variance estimators.
///
/// `contrast` switches the per-unit spread pad from h(1−h) to
/// |g|·(Σ_{w≠W}|g|) and keeps every pad regardless of outcome signs.
fn estimate_variance_policy(
    exp: &ObservedExperiment,
    inputs: &[PolicyAtRealized],
    retained: &[usize],
    same_sign: bool,
    contrast: bool,
) -> Result<f64> {
    let g = exp.graph();
    let d = exp.design();
    let product_design = is_product_design(d);
    let rows = ordered_map(retained.len(), |i| -> Result<f64> {
        let mi = retained[i];
        let si = g.intervention_set(mi);
        let li = exp.local_w(mi);
        let yi = exp.y()[mi];
        let hi = &inputs[i].weight;
        let pii = &inputs[i].pi;
        let mut acc = KahanSum::new();

        if !hi.is_zero() {
            let one_minus = Prob::one() - pii;
            acc.add(to_f64(&(one_minus * hi * hi / (pii * pii))) * yi * yi);
        }
        if contrast {
            let spread = &inputs[i].total_abs - hi.abs();
            if !hi.is_zero() && !spread.is_zero() {
                acc.add(to_f64(&(hi.abs() / pii * spread)) * yi * yi);
            }
        } else if !same_sign && !hi.is_zero() {
            acc.add(to_f64(&(hi / pii * (Prob::one() - hi))) * yi * yi);
        }

        for j in 0..retained.len() {
            if j == i {
                continue;
            }
            let mj = retained[j];
            if product_design && !g.overlaps(mi, mj) {
                continue;
            }
            let sj = g.intervention_set(mj);
            let lj = exp.local_w(mj);
            let yj = exp.y()[mj];
            let hj = &inputs[j].weight;
            let pij = &inputs[j].pi;

            if !hi.is_zero() && !hj.is_zero() {
                let joint = d.joint_prob(si, &li, sj, &lj)?;
                debug_assert!(!joint.is_zero(), "realized pair treatment impossible");
                let prod = pii * pij;
                let factor = hi * hj * (Prob::one() / &prod - Prob::one() / &joint);
                acc.add(to_f64(&factor) * yi * yj);
            }

            if contrast || !same_sign {
                let lam_ij = incompatible_mass(exp, mi, mj, &inputs[j])?;
                if !lam_ij.is_zero() && !hi.is_zero() {
                    debug_assert!(lam_ij <= &inputs[j].total_abs + Prob::zero());
                    acc.add(
                        to_f64(&(hi.abs() / (Prob::from_integer(2.into()) * pii) * lam_ij))
                            * yi
                            * yi,
                    );
                }
                let lam_ji = incompatible_mass(exp, mj, mi, &inputs[i])?;
                if !lam_ji.is_zero() && !hj.is_zero() {
                    acc.add(
                        to_f64(&(hj.abs() / (Prob::from_integer(2.into()) * pij) * lam_ji))
                            * yj
                            * yj,
                    );
                }
            }
        }
        Ok(acc.value())
    });
    let mut acc = KahanSum::new();
    for r in rows {
        acc.add(r?);
    }
    let mm = (retained.len() as f64).powi(2);
    Ok(acc.value() / mm)
}

/// Conservative estimate of the variance of the policy-mean estimator.
pub fn estimate_variance_stochastic(
    exp: &ObservedExperiment,
    policy: &LocalPolicy,
    retained: &[usize],
    opts: &VarianceOptions,
) -> Result<f64> {
    if retained.is_empty() {
        return Err(Error::EmptyRetainedSet {
            estimand: "stoch".into(),
        });
    }
    let inputs = retained
        .iter()
        .map(|&m| policy_at_realized(exp, policy, m, opts.cap))
        .collect::<Result<Vec<_>>>()?;
    Ok(truncate_variance_estimate(estimate_variance_policy(
        exp,
        &inputs,
        retained,
        opts.same_sign_hint,
        false,
    )?))
}

/// Conservative estimate of the variance of a policy contrast. Every pad is
/// kept; the sign trick that sharpens the single-policy bound is not valid
/// for differences.
pub fn estimate_variance_stochastic_contrast(
    exp: &ObservedExperiment,
    from: &LocalPolicy,
    to: &LocalPolicy,
    retained: &[usize],
    opts: &VarianceOptions,
) -> Result<f64> {
    if retained.is_empty() {
        return Err(Error::EmptyRetainedSet {
            estimand: "stoch-contrast".into(),
        });
    }
    let inputs = retained
        .iter()
        .map(|&m| contrast_at_realized(exp, from, to, m, opts.cap))
        .collect::<Result<Vec<_>>>()?;
    Ok(truncate_variance_estimate(estimate_variance_policy(
        exp, &inputs, retained, false, true,
    )?))
}

/// Exact variance of the policy-mean estimator from a full outcome table.
pub fn true_variance_stochastic(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    po: &PotentialOutcomeTable,
    policy: &LocalPolicy,
    units: &[usize],
    cap: usize,
) -> Result<f64> {
    let supports = units
        .iter()
        .map(|&m| policy.support(g, m, cap))
        .collect::<Result<Vec<_>>>()?;
    true_variance_policy(g, d, po, &supports, units)
}

/// Exact variance of the policy-contrast estimator from a full outcome table.
pub fn true_variance_stochastic_contrast(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    po: &PotentialOutcomeTable,
    from: &LocalPolicy,
    to: &LocalPolicy,
    units: &[usize],
    cap: usize,
) -> Result<f64> {
    let mut supports = Vec::with_capacity(units.len());
    for &m in units {
        let mut merged: std::collections::BTreeMap<Vec<u8>, Prob> =
            std::collections::BTreeMap::new();
        for (w, h) in to.support(g, m, cap)? {
            *merged.entry(w).or_insert_with(Prob::zero) += h;
        }
        for (w, h) in from.support(g, m, cap)? {
            *merged.entry(w).or_insert_with(Prob::zero) -= h;
        }
        supports.push(
            merged
                .into_iter()
                .filter(|(_, gw)| !gw.is_zero())
                .collect::<Vec<_>>(),
        );
    }
    true_variance_policy(g, d, po, &supports, units)
}

/// Variance of (1/M) Σ_m weight_m(W) Y_m(W) / π_m(W) for per-unit weight
/// functions given by signed support rows.
fn true_variance_policy(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    po: &PotentialOutcomeTable,
    supports: &[Vec<(Vec<u8>, Prob)>],
    units: &[usize],
) -> Result<f64> {
    if units.is_empty() {
        return Err(Error::InvalidInput("variance over an empty unit set".into()));
    }
    // Per-unit design probabilities for each supported treatment.
    let mut pis: Vec<Vec<Prob>> = Vec::with_capacity(units.len());
    for (idx, &m) in units.iter().enumerate() {
        let set = g.intervention_set(m);
        let mut row = Vec::with_capacity(supports[idx].len());
        for (w, _) in &supports[idx] {
            let pi = d.marginal_prob(set, w)?;
            if pi.is_zero() {
                return Err(Error::InvalidInput(format!(
                    "policy puts weight on a treatment of unit {m} that the design cannot produce"
                )));
            }
            row.push(pi);
        }
        pis.push(row);
    }
    let rows = ordered_map(units.len(), |i| -> Result<f64> {
        let mi = units[i];
        let si = g.intervention_set(mi);
        let mut acc = KahanSum::new();
        // Within-unit: Σ_w π(1−π)(hY/π)² − Σ_{w≠w'} h h' Y Y'.
        for (a, (w, h)) in supports[i].iter().enumerate() {
            let y = po.y_local(mi, w)?;
            let pi = &pis[i][a];
            let t = to_f64(&((Prob::one() - pi) * h * h / (pi * pi))) * y * y;
            acc.add(t);
            for (b, (wb, hb)) in supports[i].iter().enumerate() {
                if a == b {
                    continue;
                }
                let yb = po.y_local(mi, wb)?;
                acc.add(-to_f64(&(h * hb)) * y * yb);
            }
        }
        // Cross-unit: Σ_{j≠i} Σ_{w,w'} (π_joint/(ππ') − 1) h h' Y Y'.
        for j in 0..units.len() {
            if j == i {
                continue;
            }
            let mj = units[j];
            let sj = g.intervention_set(mj);
            for (a, (wa, ha)) in supports[i].iter().enumerate() {
                let ya = po.y_local(mi, wa)?;
                for (b, (wb, hb)) in supports[j].iter().enumerate() {
                    let yb = po.y_local(mj, wb)?;
                    let joint = d.joint_prob(si, wa, sj, wb)?;
                    let prod = &pis[i][a] * &pis[j][b];
                    let factor = (joint / prod - Prob::one()) * ha * hb;
                    acc.add(to_f64(&factor) * ya * yb);
                }
            }
        }
        Ok(acc.value())
    });
    let mut acc = KahanSum::new();
    for r in rows {
        acc.add(r?);
    }
    Ok(acc.value() / (units.len() as f64).powi(2))
}

/// The design-dependence summaries that govern large-graph behaviour of the
/// estimators: worst-case arm probability γ, dependent-pair count κ, and the
/// dependence magnitudes γ* (constant-arm) or Δ and Γ* (policy weights),
/// along with the graph degrees they are compared against.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConsistencyStats {
    pub gamma: Option<f64>,
    pub gamma_star: Option<f64>,
    pub kappa: usize,
    pub delta: Option<f64>,
    pub big_gamma_star: Option<f64>,
    pub d_o: usize,
    pub d_kappa: usize,
}

/// What the consistency summaries are computed for.
pub enum ConsistencyTarget<'a> {
    Arm(u8),
    Policy(&'a LocalPolicy),
}

/// Computes the dependence summaries for one arm event or one policy.
pub fn consistency_statistics(
    g: &BipartiteGraph,
    d: &AssignmentDistribution,
    target: ConsistencyTarget<'_>,
    cap: usize,
) -> Result<ConsistencyStats> {
    let stats = g.stats();
    let mm = g.n_outcome();
    match target {
        ConsistencyTarget::Arm(arm) => {
            let mut pis = Vec::with_capacity(mm);
            for m in 0..mm {
                let set = g.intervention_set(m);
                pis.push(d.marginal_prob(set, &vec![arm; set.len()])?);
            }
            let gamma = pis.iter().map(to_f64).fold(f64::INFINITY, f64::min);
            let mut kappa = 0usize;
            let mut gamma_star = 0.0f64;
            let product_design = is_product_design(d);
            for i in 0..mm {
                let si = g.intervention_set(i);
                let ai = vec![arm; si.len()];
                for j in 0..mm {
                    if i == j {
                        continue;
                    }
                    // Independent coordinates factor exactly over disjoint sets.
                    if product_design && !g.overlaps(i, j) {
                        continue;
                    }
                    let sj = g.intervention_set(j);
                    let aj = vec![arm; sj.len()];
                    let joint = d.joint_prob(si, &ai, sj, &aj)?;
                    let prod = &pis[i] * &pis[j];
                    if joint != prod {
                        kappa += 1;
                        if !prod.is_zero() {
                            let dev = to_f64(&((joint - &prod) / prod)).abs();
                            gamma_star = gamma_star.max(dev);
                        }
                    }
                }
            }
            Ok(ConsistencyStats {
                gamma: Some(gamma),
                gamma_star: Some(gamma_star),
                kappa,
                delta: None,
                big_gamma_star: None,
                d_o: stats.max_intervention_set_size,
                d_kappa: stats.max_pairwise_overlap,
            })
        }
        ConsistencyTarget::Policy(policy) => {
            let mut supports = Vec::with_capacity(mm);
            let mut pis: Vec<Vec<Prob>> = Vec::with_capacity(mm);
            let mut delta = 0.0f64;
            for m in 0..mm {
                let set = g.intervention_set(m);
                let support = policy.support(g, m, cap)?;
                let mut row = Vec::with_capacity(support.len());
                let mut unit_delta = Prob::zero();
                for (w, h) in &support {
                    let pi = d.marginal_prob(set, w)?;
                    if pi.is_zero() {
                        return Err(Error::InvalidInput(format!(
                            "policy puts weight on a treatment of unit {m} that the design cannot produce"
                        )));
                    }
                    unit_delta += h * h / &pi;
                    row.push(pi);
                }
                delta = delta.max(to_f64(&unit_delta));
                supports.push(support);
                pis.push(row);
            }
            let mut kappa = 0usize;
            let mut big_gamma_star = 0.0f64;
            let product_design = is_product_design(d);
            for i in 0..mm {
                let si = g.intervention_set(i);
                for j in 0..mm {
                    if i == j {
                        continue;
                    }
                    if product_design && !g.overlaps(i, j) {
                        continue;
                    }
                    let sj = g.intervention_set(j);
                    let mut dependent = false;
                    let mut pair_sum = Prob::zero();
                    for (a, (wa, ha)) in supports[i].iter().enumerate() {
                        for (b, (wb, hb)) in supports[j].iter().enumerate() {
                            let joint = d.joint_prob(si, wa, sj, wb)?;
                            let prod = &pis[i][a] * &pis[j][b];
                            if joint != prod {
                                dependent = true;
                            }
                            if !joint.is_zero() {
                                let dev = (&joint / &prod - Prob::one()).abs();
                                pair_sum += joint * dev * ha * hb / prod;
                            }
                        }
                    }
                    if dependent {
                        kappa += 1;
                        big_gamma_star = big_gamma_star.max(to_f64(&pair_sum));
                    }
                }
            }
            Ok(ConsistencyStats {
                gamma: None,
                gamma_star: None,
                kappa,
                delta: Some(delta),
                big_gamma_star: Some(big_gamma_star),
                d_o: stats.max_intervention_set_size,
                d_kappa: stats.max_pairwise_overlap,
            })
        }
    }
}
