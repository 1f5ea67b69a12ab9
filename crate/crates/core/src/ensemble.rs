//! Ensembles of orthonormal pure states with priors, and their JSON file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Party, PureState, NORM_TOL};

/// Priors must sum to one within this tolerance.
pub const PRIOR_TOL: f64 = 1e-12;

/// Pairwise orthogonal, normalized states sharing one layout, with priors.
#[derive(Clone, Debug)]
pub struct Ensemble {
    states: Vec<PureState>,
    priors: Vec<f64>,
    labels: Vec<String>,
}

impl Ensemble {
    /// Uniform priors, labels `ψ1, ψ2, …`.
    pub fn uniform(states: Vec<PureState>) -> Result<Self> {
        let n = states.len();
        let labels = (1..=n).map(|k| format!("psi{k}")).collect();
        Self::new(states, vec![1.0 / n.max(1) as f64; n], labels)
    }

    pub fn new(states: Vec<PureState>, priors: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::InvalidEnsemble("no states".into()))?;
        if priors.len() != states.len() || labels.len() != states.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} states, {} priors, {} labels",
                states.len(),
                priors.len(),
                labels.len()
            )));
        }
        for (k, s) in states.iter().enumerate() {
            if s.dims() != first.dims() || s.ownership() != first.ownership() {
                return Err(Error::InvalidEnsemble(format!("state {k} has a different layout")));
            }
            if (s.norm_sqr() - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidEnsemble(format!("state {k} is not normalized")));
            }
        }
        for j in 0..states.len() {
            for k in j + 1..states.len() {
                let ip = states[j].inner(&states[k])?.norm();
                if ip > NORM_TOL {
                    return Err(Error::InvalidEnsemble(format!(
                        "states {j} and {k} are not orthogonal (|⟨·|·⟩| = {ip:e})"
                    )));
                }
            }
        }
        if priors.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidEnsemble("priors must be nonnegative".into()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > PRIOR_TOL {
            return Err(Error::InvalidEnsemble(format!("priors sum to {total}")));
        }
        Ok(Ensemble { states, priors, labels })
    }

    pub fn with_priors(self, priors: Vec<f64>) -> Result<Self> {
        Self::new(self.states, priors, self.labels)
    }

    pub fn with_labels(self, labels: Vec<String>) -> Result<Self> {
        Self::new(self.states, self.priors, labels)
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        self.states[0].dims()
    }

    pub fn ownership(&self) -> &[Party] {
        self.states[0].ownership()
    }

    pub fn parties(&self) -> Vec<Party> {
        self.states[0].parties()
    }

    /// The states at `indices`, in the given order, with uniform priors.
    pub fn subset(&self, indices: &[usize]) -> Result<Ensemble> {
        if indices.is_empty() {
            return Err(Error::InvalidEnsemble("empty selection".into()));
        }
        for (k, &i) in indices.iter().enumerate() {
            if i >= self.len() {
                return Err(Error::InvalidEnsemble(format!(
                    "index {i} out of range for {} states",
                    self.len()
                )));
            }
            if indices[..k].contains(&i) {
                return Err(Error::InvalidEnsemble(format!("index {i} selected twice")));
            }
        }
        let n = indices.len();
        Ensemble::new(
            indices.iter().map(|&i| self.states[i].clone()).collect(),
            vec![1.0 / n as f64; n],
            indices.iter().map(|&i| self.labels[i].clone()).collect(),
        )
    }

    pub fn to_document(&self) -> Result<EnsembleDocument> {
        if let Some(k) = self.states.iter().position(|s| !s.is_real()) {
            return Err(Error::Format(format!("state {k} has complex amplitudes")));
        }
        Ok(EnsembleDocument {
            dims: self.dims().to_vec(),
            ownership: self.ownership().to_vec(),
            states: self.states.iter().map(PureState::real_amps).collect(),
            priors: Some(self.priors.clone()),
            labels: Some(self.labels.clone()),
        })
    }

    pub fn from_document(doc: EnsembleDocument) -> Result<Self> {
        if doc.ownership.len() != doc.dims.len() {
            return Err(Error::Format(format!(
                "ownership has {} entries for {} subsystems",
                doc.ownership.len(),
                doc.dims.len()
            )));
        }
        let states = doc
            .states
            .iter()
            .map(|amps| PureState::from_real(doc.dims.clone(), amps, doc.ownership.clone()))
            .collect::<Result<Vec<_>>>()?;
        let n = states.len();
        let priors = doc.priors.unwrap_or_else(|| vec![1.0 / n.max(1) as f64; n]);
        let labels = doc
            .labels
            .unwrap_or_else(|| (1..=n).map(|k| format!("psi{k}")).collect());
        Ensemble::new(states, priors, labels)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document()?)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form of an ensemble: real amplitudes over `dims`, one party label
/// per subsystem, optional priors (uniform when absent).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnsembleDocument {
    pub dims: Vec<usize>,
    pub ownership: Vec<Party>,
    pub states: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}
