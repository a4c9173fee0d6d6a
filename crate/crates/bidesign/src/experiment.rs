//! A realized experiment: graph, design, drawn treatments, observed outcomes.

use crate::design::AssignmentDistribution;
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::policy::LocalPolicy;
use num::traits::Zero;

/// One dataset: who was treated and what each outcome unit recorded.
#[derive(Debug, Clone)]
pub struct ObservedExperiment {
    graph: BipartiteGraph,
    design: AssignmentDistribution,
    w: Vec<u8>,
    y: Vec<f64>,
}

impl ObservedExperiment {
    /// Validates dimensions, binary treatments, finite outcomes, and that the
    /// realized assignment is actually possible under the declared design.
    pub fn new(
        graph: BipartiteGraph,
        design: AssignmentDistribution,
        w: Vec<u8>,
        y: Vec<f64>,
    ) -> Result<Self> {
        if design.n_units() != graph.n_intervention() {
            return Err(Error::InvalidInput(format!(
                "design covers {} units but the graph has {} intervention units",
                design.n_units(),
                graph.n_intervention()
            )));
        }
        if w.len() != graph.n_intervention() {
            return Err(Error::InvalidInput(format!(
                "treatment vector has length {} but the graph has {} intervention units",
                w.len(),
                graph.n_intervention()
            )));
        }
        if y.len() != graph.n_outcome() {
            return Err(Error::InvalidInput(format!(
                "outcome vector has length {} but the graph has {} outcome units",
                y.len(),
                graph.n_outcome()
            )));
        }
        if w.iter().any(|&x| x > 1) {
            return Err(Error::InvalidInput("treatment values must be 0 or 1".into()));
        }
        if let Some(bad) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "outcome for unit {} is not finite",
                bad + 1
            )));
        }
        if design.prob_of(&w)?.is_zero() {
            return Err(Error::InvalidInput(
                "the observed assignment has probability zero under the declared design".into(),
            ));
        }
        Ok(Self {
            graph,
            design,
            w,
            y,
        })
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn design(&self) -> &AssignmentDistribution {
        &self.design
    }

    pub fn w(&self) -> &[u8] {
        &self.w
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n_treated(&self) -> usize {
        self.w.iter().filter(|&&x| x == 1).count()
    }

    pub fn n_control(&self) -> usize {
        self.w.len() - self.n_treated()
    }

    /// The realized treatments of outcome unit `m`'s intervention set, in
    /// ascending unit order.
    pub fn local_w(&self, m: usize) -> Vec<u8> {
        self.graph
            .intervention_set(m)
            .iter()
            .map(|&n| self.w[n])
            .collect()
    }

    /// Mean observed outcome over the given units.
    pub fn observed_mean(&self, units: &[usize]) -> Result<f64> {
        if units.is_empty() {
            return Err(Error::InvalidInput(
                "observed mean over an empty unit set".into(),
            ));
        }
        let mut acc = crate::numeric::KahanSum::new();
        for &m in units {
            acc.add(self.y[m]);
        }
        Ok(acc.value() / units.len() as f64)
    }
}

/// What is being estimated.
#[derive(Debug, Clone)]
pub enum Estimand {
    /// Everyone treated versus nobody treated.
    AllOrNone,
    /// Realized treatment versus nobody treated.
    StatusQuoVsNone,
    /// Everyone treated versus realized treatment.
    AllVsStatusQuo,
    /// Mean potential outcome when every neighbour sits at `arm`.
    MeanPo { arm: u8 },
    /// Mean outcome under a hypothetical local treatment policy.
    Stochastic { policy: LocalPolicy },
    /// Contrast of two hypothetical policies, `to` minus `from`.
    StochasticContrast { from: LocalPolicy, to: LocalPolicy },
    /// Promoting K extra control units to treatment versus the status quo.
    PlusK { k: usize },
}

impl Estimand {
    /// Stable identifier used in reports and CLI output.
    pub fn label(&self) -> String {
        match self {
            Estimand::AllOrNone => "aon".into(),
            Estimand::StatusQuoVsNone => "sq1".into(),
            Estimand::AllVsStatusQuo => "sq0".into(),
            Estimand::MeanPo { arm } => format!("mean-po-{arm}"),
            Estimand::Stochastic { .. } => "stoch".into(),
            Estimand::StochasticContrast { .. } => "stoch-contrast".into(),
            Estimand::PlusK { k } => format!("plus-{k}"),
        }
    }
}
