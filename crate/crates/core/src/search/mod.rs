//! Protocol search and construction: grid search over local projective
//! protocols, multi-copy schedule construction for product bases, one-cbit
//! teleportation protocols and a probe of entanglement-assisted protocols.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ensemble::Ensemble;

mod grid;
mod ictp;
mod probe;
mod schedule;

pub use grid::{grid_search_lp, GridSearchResult};
pub use ictp::{find_ictp_protocol, IctpSearchResult};
pub use probe::{lpse_optimality_probe, ProbeResult};
pub use schedule::construct_multicopy_schedule;

/// Caps every search budget, in seconds.
pub const BUDGET_ENV: &str = "LPDISCRIM_BUDGET_SECS";

/// Local dimensions `d₁ … d_m` of an `m`-party system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionProfile {
    dims: Vec<usize>,
}

impl DimensionProfile {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d < 2) {
            return Err(Error::Constraint(format!(
                "need at least two parties of dimension at least 2, got {dims:?}"
            )));
        }
        Ok(DimensionProfile { dims })
    }

    /// One entry per party: the product of the dimensions it holds.
    pub fn of(ensemble: &Ensemble) -> Result<Self> {
        let dims = ensemble
            .parties()
            .into_iter()
            .map(|p| {
                ensemble
                    .ownership()
                    .iter()
                    .zip(ensemble.dims())
                    .filter(|(&o, _)| o == p)
                    .map(|(_, &d)| d)
                    .product()
            })
            .collect();
        Self::new(dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }
}

/// `x + 1` with `x = ⌈(Π dᵢ − Σ (dᵢ − 1)) / m⌉`: enough copies to identify a
/// complete product basis with local projective measurements.
pub fn copy_bound(profile: &DimensionProfile) -> usize {
    let total: usize = profile.dims.iter().product();
    let eliminated: usize = profile.dims.iter().map(|d| d - 1).sum();
    let m = profile.parties();
    (total - eliminated).div_ceil(m) + 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Angle step in radians; `None` picks 1e-3 for searches over at most two
    /// angles and 5e-3 otherwise.
    pub resolution: Option<f64>,
    /// Upper limit on copies for schedule construction; the copy bound of the
    /// basis applies when smaller.
    pub max_copies: Option<usize>,
    /// Changes exploration order and random probes, never a grid maximum.
    pub seed: u64,
    pub budget: Duration,
    /// Angle divisions of `π` for the structured 4-dim probe bases.
    pub probe_divisions: usize,
    /// Random orthogonal perturbations tried around the best structured probes.
    pub probe_perturbations: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            resolution: None,
            max_copies: None,
            seed: 0,
            budget: Duration::from_secs(900),
            probe_divisions: 16,
            probe_perturbations: 400,
        }
    }
}

impl SearchConfig {
    pub fn with_resolution(mut self, resolution: f64) -> Self {
        self.resolution = Some(resolution);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.resolution {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Constraint(format!("resolution must be positive, got {r}")));
            }
        }
        if self.budget.is_zero() {
            return Err(Error::Constraint("budget must be positive".into()));
        }
        Ok(())
    }

    /// Grid step for a search over `angles` angles.
    pub fn resolution_for(&self, angles: usize) -> f64 {
        self.resolution
            .unwrap_or(if angles <= 2 { 1e-3 } else { 5e-3 })
    }

    /// The configured budget, capped by `LPDISCRIM_BUDGET_SECS` when set.
    pub fn effective_budget(&self) -> Duration {
        let cap = std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|s| *s > 0.0 && s.is_finite())
            .map(Duration::from_secs_f64);
        match cap {
            Some(cap) => self.budget.min(cap),
            None => self.budget,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Deadline {
    start: Instant,
    budget: Duration,
}

impl Deadline {
    pub(crate) fn start(config: &SearchConfig) -> Self {
        Deadline {
            start: Instant::now(),
            budget: config.effective_budget(),
        }
    }

    pub(crate) fn expired(&self) -> bool {
        self.start.elapsed() > self.budget
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.expired() {
            Err(Error::BudgetExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    pub(crate) fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

/// All maximal cliques of an undirected graph given by `adjacent`, each sorted,
/// in lexicographic order.
pub(crate) fn maximal_cliques(n: usize, adjacent: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i != j && adjacent(i, j)).collect())
        .collect();
    let mut out = Vec::new();
    bron_kerbosch(&adj, &mut Vec::new(), (0..n).collect(), Vec::new(), &mut out);
    for c in &mut out {
        c.sort_unstable();
    }
    out.sort();
    out
}

fn bron_kerbosch(
    adj: &[Vec<bool>],
    r: &mut Vec<usize>,
    mut p: Vec<usize>,
    mut x: Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() {
            out.push(r.clone());
        }
        return;
    }
    while let Some(v) = p.pop() {
        r.push(v);
        let np = p.iter().copied().filter(|&u| adj[v][u]).collect();
        let nx = x.iter().copied().filter(|&u| adj[v][u]).collect();
        bron_kerbosch(adj, r, np, nx, out);
        r.pop();
        x.push(v);
    }
}
