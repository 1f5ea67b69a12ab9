//! Exhaustive grid search over local projective protocols on qubits.
//!
//! Every party holds one qubit and measures a real basis `{|φ⟩, |φ⊥⟩}`; `φ`
//! and `φ + π/2` give the same basis, so each angle ranges over `[0, π/2)`.
//! A copy's setting is one angle per party. Copies are interchangeable, so
//! only nondecreasing tuples of settings are visited.

use std::f64::consts::FRAC_PI_2;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Duration;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Deadline, SearchConfig};
use crate::engine::evaluate_multicopy;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::protocol::{qubit_basis, LocalMeasurement, Protocol, Schedule};
use crate::tensor::Party;

/// Largest per-copy outcome table kept in memory, in entries.
const TABLE_LIMIT: usize = 1 << 23;

#[derive(Clone, Debug)]
pub struct GridSearchResult {
    pub protocol: Protocol,
    /// Engine value of the best protocol.
    pub success_probability: f64,
    /// The same value from the search's own outcome tables.
    pub grid_value: f64,
    /// `angles[copy][party]`.
    pub angles: Vec<Vec<f64>>,
    pub step: f64,
    pub evaluated: u64,
    pub elapsed: Duration,
}

struct Grid {
    n: usize,
    step: f64,
    parties: Vec<Party>,
    /// Subsystem of each party.
    subsystems: Vec<usize>,
    states: Vec<Vec<Complex64>>,
    priors: Vec<f64>,
    outcomes: usize,
    settings: usize,
    table: Option<Vec<f64>>,
    /// The same table by column: `columns[(o * N + i) * settings + s]`.
    columns: Option<Vec<f64>>,
}

impl Grid {
    fn new(ensemble: &Ensemble, step_hint: f64) -> Result<Self> {
        if ensemble.dims().iter().any(|&d| d != 2) {
            return Err(Error::Unsupported(
                "grid search needs every subsystem to be a qubit".into(),
            ));
        }
        let parties = ensemble.parties();
        let mut subsystems = Vec::new();
        for &p in &parties {
            let held: Vec<usize> = (0..ensemble.dims().len())
                .filter(|&k| ensemble.ownership()[k] == p)
                .collect();
            if held.len() != 1 {
                return Err(Error::Unsupported(format!(
                    "grid search needs one qubit per party; {p} holds {}",
                    held.len()
                )));
            }
            subsystems.push(held[0]);
        }
        let n = ((FRAC_PI_2 / step_hint) - 1e-9).ceil().max(1.0) as usize;
        let m = parties.len();
        let settings = n
            .checked_pow(m as u32)
            .ok_or_else(|| Error::Unsupported("grid too large".into()))?;
        Ok(Grid {
            n,
            step: FRAC_PI_2 / n as f64,
            parties,
            subsystems,
            states: ensemble.states().iter().map(|s| s.amps().to_vec()).collect(),
            priors: ensemble.priors().to_vec(),
            outcomes: 1 << m,
            settings,
            table: None,
            columns: None,
        })
    }

    fn width(&self) -> usize {
        self.outcomes * self.states.len()
    }

    fn angles(&self, setting: usize) -> Vec<f64> {
        let m = self.parties.len();
        (0..m)
            .map(|p| {
                let digit = setting / self.n.pow((m - 1 - p) as u32) % self.n;
                digit as f64 * self.step
            })
            .collect()
    }

    /// `out[o * N + i] = Pr(o | state i)` with `o` the outcome bits in
    /// subsystem order.
    fn fill(&self, setting: usize, out: &mut [f64]) {
        let m = self.parties.len();
        let angles = self.angles(setting);
        let mut rot = vec![(0.0, 0.0); m];
        for (p, &phi) in angles.iter().enumerate() {
            rot[self.subsystems[p]] = (phi.cos(), phi.sin());
        }
        let n_states = self.states.len();
        let mut buf = vec![Complex64::default(); self.outcomes];
        for (i, amps) in self.states.iter().enumerate() {
            buf.copy_from_slice(amps);
            for (k, &(c, s)) in rot.iter().enumerate() {
                let stride = 1 << (m - 1 - k);
                for base in 0..self.outcomes {
                    if base & stride != 0 {
                        continue;
                    }
                    let (x0, x1) = (buf[base], buf[base + stride]);
                    buf[base] = x0 * c + x1 * s;
                    buf[base + stride] = x1 * c - x0 * s;
                }
            }
            for (o, z) in buf.iter().enumerate() {
                out[o * n_states + i] = z.norm_sqr();
            }
        }
    }

    fn precompute(&mut self) {
        let w = self.width();
        let mut table = vec![0.0; self.settings * w];
        table
            .par_chunks_mut(w)
            .enumerate()
            .for_each(|(s, chunk)| self.fill(s, chunk));
        let mut columns = vec![0.0; table.len()];
        for (s, row) in table.chunks_exact(w).enumerate() {
            for (k, &x) in row.iter().enumerate() {
                columns[k * self.settings + s] = x;
            }
        }
        self.table = Some(table);
        self.columns = Some(columns);
    }

    fn probabilities<'a>(&'a self, setting: usize, scratch: &'a mut [f64]) -> &'a [f64] {
        match &self.table {
            Some(t) => {
                let w = self.width();
                &t[setting * w..(setting + 1) * w]
            }
            None => {
                self.fill(setting, scratch);
                scratch
            }
        }
    }

    /// `Σ_t Σ_o max_i weights[t][i] · Pr(o | i)`.
    fn score(&self, weights: &[f64], probs: &[f64]) -> f64 {
        let n = self.states.len();
        let mut total = 0.0;
        for w in weights.chunks_exact(n) {
            for p in probs.chunks_exact(n) {
                let mut best = 0.0;
                for (a, b) in w.iter().zip(p) {
                    let v = a * b;
                    if v > best {
                        best = v;
                    }
                }
                total += best;
            }
        }
        total
    }

    /// [`Self::score`] for every setting from `start` on, column by column.
    fn score_all(&self, weights: &[f64], columns: &[f64], start: usize) -> Vec<f64> {
        const BLOCK: usize = 256;
        let n = self.states.len();
        let len = self.settings - start;
        let mut acc = vec![0.0; len];
        let mut best = [0.0; BLOCK];
        for lo in (0..len).step_by(BLOCK) {
            let hi = (lo + BLOCK).min(len);
            let acc = &mut acc[lo..hi];
            let best = &mut best[..hi - lo];
            for w in weights.chunks_exact(n) {
                for o in 0..self.outcomes {
                    best.fill(0.0);
                    for (i, &wi) in w.iter().enumerate() {
                        let base = (o * n + i) * self.settings + start;
                        for (b, &p) in best.iter_mut().zip(&columns[base + lo..base + hi]) {
                            let v = wi * p;
                            *b = if v > *b { v } else { *b };
                        }
                    }
                    for (a, b) in acc.iter_mut().zip(best.iter()) {
                        *a += b;
                    }
                }
            }
        }
        acc
    }

    /// Best completion of a nondecreasing setting tuple whose last entry is
    /// `prefix.last()`; ties keep the lexicographically smallest tuple.
    fn best_from(
        &self,
        weights: &[f64],
        prefix: &mut Vec<usize>,
        copies: usize,
        counter: &mut u64,
        limits: &Limits<'_>,
    ) -> (f64, Vec<usize>) {
        let start = *prefix.last().unwrap_or(&0);
        let n = self.states.len();
        let mut scratch = vec![0.0; self.width()];
        let mut best = (f64::NEG_INFINITY, Vec::new());
        if prefix.len() + 1 == copies {
            if let Some(columns) = &self.columns {
                let scores = self.score_all(weights, columns, start);
                *counter += scores.len() as u64;
                for (k, &v) in scores.iter().enumerate() {
                    if v > best.0 {
                        prefix.push(start + k);
                        best = (v, prefix.clone());
                        prefix.pop();
                    }
                }
                return best;
            }
            for s in start..self.settings {
                let v = self.score(weights, self.probabilities(s, &mut scratch));
                *counter += 1;
                if v > best.0 {
                    prefix.push(s);
                    best = (v, prefix.clone());
                    prefix.pop();
                }
            }
            return best;
        }
        for s in start..self.settings {
            if limits.stop.load(Ordering::Relaxed) || limits.deadline.expired() {
                limits.stop.store(true, Ordering::Relaxed);
                break;
            }
            let probs = self.probabilities(s, &mut scratch);
            let mut next = Vec::with_capacity(weights.len() * self.outcomes);
            for w in weights.chunks_exact(n) {
                for p in probs.chunks_exact(n) {
                    next.extend(w.iter().zip(p).map(|(a, b)| a * b));
                }
            }
            prefix.push(s);
            let candidate = self.best_from(&next, prefix, copies, counter, limits);
            prefix.pop();
            if candidate.0 > best.0 {
                best = candidate;
            }
        }
        best
    }

    fn measurement(&self, party: usize, phi: f64) -> Result<LocalMeasurement> {
        LocalMeasurement::from_basis(
            self.parties[party],
            vec![self.subsystems[party]],
            vec![2],
            &qubit_basis(phi),
        )
    }
}

struct Limits<'a> {
    deadline: &'a Deadline,
    stop: &'a AtomicBool,
}

fn better(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Maximum MAP success probability over all local projective protocols with
/// real qubit bases on `copies` copies, on a grid of angle step at most the
/// configured resolution. The winner is re-evaluated by the engine.
pub fn grid_search_lp(
    ensemble: &Ensemble,
    copies: usize,
    config: &SearchConfig,
) -> Result<GridSearchResult> {
    config.validate()?;
    if copies == 0 {
        return Err(Error::Constraint("at least one copy".into()));
    }
    let deadline = Deadline::start(config);
    let angles_per_copy = ensemble.parties().len();
    let mut grid = Grid::new(ensemble, config.resolution_for(angles_per_copy * copies))?;
    if copies > 1 {
        if grid.settings.saturating_mul(grid.width()) > TABLE_LIMIT {
            return Err(Error::Unsupported(format!(
                "{} settings per copy is too many for a {copies}-copy search",
                grid.settings
            )));
        }
        grid.precompute();
    }

    let mut order: Vec<usize> = (0..grid.settings).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let stop = AtomicBool::new(false);
    let evaluated = AtomicU64::new(0);
    let chunk = if copies == 1 { 4096 } else { 1 };
    let best = order
        .par_chunks(chunk)
        .map(|firsts| {
            let mut best = (f64::NEG_INFINITY, Vec::new());
            if stop.load(Ordering::Relaxed) || deadline.expired() {
                stop.store(true, Ordering::Relaxed);
                return best;
            }
            let mut counter = 0;
            let mut scratch = vec![0.0; grid.width()];
            for &s in firsts {
                let probs = grid.probabilities(s, &mut scratch);
                let candidate = if copies == 1 {
                    counter += 1;
                    (grid.score(&grid.priors, probs), vec![s])
                } else {
                    let weights: Vec<f64> = probs
                        .chunks_exact(grid.states.len())
                        .flat_map(|p| p.iter().zip(&grid.priors).map(|(a, b)| a * b))
                        .collect();
                    let limits = Limits { deadline: &deadline, stop: &stop };
                    grid.best_from(&weights, &mut vec![s], copies, &mut counter, &limits)
                };
                if better(&candidate, &best) {
                    best = candidate;
                }
            }
            evaluated.fetch_add(counter, Ordering::Relaxed);
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, Vec::new()),
            |a, b| if better(&b, &a) { b } else { a },
        );
    if stop.load(Ordering::Relaxed) {
        return Err(Error::BudgetExceeded(config.effective_budget()));
    }

    let angles: Vec<Vec<f64>> = best.1.iter().map(|&s| grid.angles(s)).collect();
    let mut schedule = Schedule::new(copies)?;
    for (copy, row) in angles.iter().enumerate() {
        for (p, &phi) in row.iter().enumerate() {
            schedule = schedule.with(copy, grid.measurement(p, phi)?)?;
        }
    }
    let report = evaluate_multicopy(ensemble, &schedule)?;
    Ok(GridSearchResult {
        protocol: Protocol::local(schedule),
        success_probability: report.success_probability(),
        grid_value: best.0,
        angles,
        step: grid.step,
        evaluated: evaluated.into_inner(),
        elapsed: deadline.elapsed(),
    })
}
