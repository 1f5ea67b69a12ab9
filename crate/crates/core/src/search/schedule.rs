//! Multi-copy schedules for complete product bases.
//!
//! On a product state every party's outcome depends only on its own marginal,
//! so two states can share a transcript unless some measured party sees them
//! with disjoint outcome supports. The constructor therefore only has to pick,
//! for each party, a set of candidate bases (one per copy) such that every
//! pair of states is split by at least one of them; the copy count is the
//! largest number of bases any one party uses.

use nalgebra::DVector;
use num_complex::Complex64;

use super::{copy_bound, maximal_cliques, Deadline, DimensionProfile, SearchConfig};
use crate::engine::evaluate_multicopy;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result, ScheduleSearchFailure};
use crate::protocol::{LocalMeasurement, Schedule};
use crate::tensor::{left_factor, schmidt_rank, BipartitionSplit, Party, Projector, NORM_TOL};

/// A candidate basis of one party and which states it can tell apart.
struct Candidate {
    party: usize,
    basis: Vec<DVector<Complex64>>,
    /// `support[i]`: bit mask of outcomes state `i` can produce.
    support: Vec<u64>,
}

impl Candidate {
    fn separates(&self, i: usize, j: usize) -> bool {
        self.support[i] & self.support[j] == 0
    }
}

struct PartyInfo {
    party: Party,
    subsystems: Vec<usize>,
    dims: Vec<usize>,
}

/// Builds a fixed measurement schedule that identifies every state of a
/// complete product basis with certainty, using the fewest copies among the
/// candidate bases (each party's distinct marginals grouped into orthogonal
/// families and completed). The schedule is verified by the engine before it
/// is returned.
pub fn construct_multicopy_schedule(basis: &Ensemble, config: &SearchConfig) -> Result<Schedule> {
    config.validate()?;
    let deadline = Deadline::start(config);
    let profile = DimensionProfile::of(basis)?;
    let bound = copy_bound(&profile);
    let limit = config.max_copies.map_or(bound, |c| c.min(bound));
    if basis.len() > 64 {
        return Err(Error::Unsupported("at most 64 basis states".into()));
    }

    let parties: Vec<PartyInfo> = basis
        .parties()
        .into_iter()
        .map(|party| {
            let subsystems = basis.states()[0].subsystems_of(party);
            let dims = subsystems.iter().map(|&k| basis.dims()[k]).collect();
            PartyInfo {
                party,
                subsystems,
                dims,
            }
        })
        .collect();

    let mut marginals = Vec::new();
    for info in &parties {
        let split = BipartitionSplit::from_left(info.subsystems.clone(), basis.dims().len())?;
        let mut column = Vec::new();
        for (k, state) in basis.states().iter().enumerate() {
            if schmidt_rank(state, &split, 1e-9)? != 1 {
                return Err(Error::InvalidEnsemble(format!(
                    "state {k} is entangled across party {}",
                    info.party
                )));
            }
            column.push(left_factor(state, &split)?);
        }
        marginals.push(column);
    }

    let candidates = candidate_bases(&marginals);
    let n = basis.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    if let Some(&(i, j)) = pairs
        .iter()
        .find(|&&(i, j)| !candidates.iter().any(|c| c.separates(i, j)))
    {
        return Err(failure(
            format!("no candidate basis separates states {i} and {j}"),
            0,
            vec![(i, j)],
            Vec::new(),
        ));
    }

    let mut best_partial: (usize, Vec<usize>) = (usize::MAX, Vec::new());
    for copies in 1..=limit {
        deadline.check()?;
        let mut chosen = Vec::new();
        let mut search = Search {
            candidates: &candidates,
            pairs: &pairs,
            copies,
            parties: parties.len(),
            deadline: &deadline,
            best_partial: &mut best_partial,
        };
        if search.run(&mut chosen)? {
            let schedule = build_schedule(&candidates, &chosen, &parties, copies)?;
            let report = evaluate_multicopy(basis, &schedule)?;
            if !report.perfect() {
                return Err(failure(
                    format!(
                        "constructed schedule reaches only {}",
                        report.success_probability()
                    ),
                    copies,
                    Vec::new(),
                    vec![describe(&candidates, &chosen)],
                ));
            }
            return Ok(schedule);
        }
    }
    let unresolved = pairs
        .iter()
        .copied()
        .filter(|&(i, j)| !best_partial.1.iter().any(|&c| candidates[c].separates(i, j)))
        .collect();
    Err(failure(
        format!("no schedule within {limit} copies"),
        limit,
        unresolved,
        vec![describe(&candidates, &best_partial.1)],
    ))
}

fn failure(
    reason: String,
    copies_tried: usize,
    best_unresolved_pairs: Vec<(usize, usize)>,
    frontier: Vec<String>,
) -> Error {
    Error::ScheduleSearch(Box::new(ScheduleSearchFailure {
        reason,
        copies_tried,
        best_unresolved_pairs,
        frontier,
    }))
}

fn describe(candidates: &[Candidate], chosen: &[usize]) -> String {
    let parts: Vec<String> = chosen
        .iter()
        .map(|&c| format!("party {} basis #{c}", candidates[c].party))
        .collect();
    parts.join(", ")
}

fn same_ray(u: &DVector<Complex64>, v: &DVector<Complex64>) -> bool {
    u.dotc(v).norm() > 1.0 - NORM_TOL
}

fn orthogonal(u: &DVector<Complex64>, v: &DVector<Complex64>) -> bool {
    u.dotc(v).norm() < NORM_TOL
}

/// For each party: distinct marginals, their maximal orthogonal families,
/// each completed to a basis with standard basis vectors.
fn candidate_bases(marginals: &[Vec<DVector<Complex64>>]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (party, column) in marginals.iter().enumerate() {
        let mut distinct: Vec<DVector<Complex64>> = Vec::new();
        for v in column {
            if !distinct.iter().any(|u| same_ray(u, v)) {
                distinct.push(v.clone());
            }
        }
        let cliques = maximal_cliques(distinct.len(), |i, j| orthogonal(&distinct[i], &distinct[j]));
        for clique in cliques {
            let basis = complete(clique.iter().map(|&k| distinct[k].clone()).collect());
            let support = column
                .iter()
                .map(|v| {
                    basis
                        .iter()
                        .enumerate()
                        .filter(|(_, b)| b.dotc(v).norm_sqr() > 1e-12)
                        .fold(0u64, |mask, (k, _)| mask | 1 << k)
                })
                .collect();
            out.push(Candidate {
                party,
                basis,
                support,
            });
        }
    }
    out
}

/// Extends orthonormal vectors to a basis by Gram–Schmidt on standard basis
/// vectors.
fn complete(mut basis: Vec<DVector<Complex64>>) -> Vec<DVector<Complex64>> {
    let dim = basis[0].len();
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = DVector::from_fn(dim, |r, _| {
            if r == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        });
        for b in &basis {
            let c = b.dotc(&v);
            v -= b * c;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / Complex64::new(norm, 0.0));
        }
    }
    basis
}

struct Search<'a> {
    candidates: &'a [Candidate],
    pairs: &'a [(usize, usize)],
    copies: usize,
    parties: usize,
    deadline: &'a Deadline,
    best_partial: &'a mut (usize, Vec<usize>),
}

impl Search<'_> {
    /// Backtracking: take the first pair no chosen basis separates and branch
    /// on the candidates that separate it.
    fn run(&mut self, chosen: &mut Vec<usize>) -> Result<bool> {
        self.deadline.check()?;
        let open = self
            .pairs
            .iter()
            .filter(|&&(i, j)| !chosen.iter().any(|&c| self.candidates[c].separates(i, j)));
        let unresolved = open.clone().count();
        if unresolved < self.best_partial.0 {
            *self.best_partial = (unresolved, chosen.clone());
        }
        let Some(&(i, j)) = open.clone().next() else {
            return Ok(true);
        };
        let mut used = vec![0; self.parties];
        for &c in chosen.iter() {
            used[self.candidates[c].party] += 1;
        }
        for (k, cand) in self.candidates.iter().enumerate() {
            if chosen.contains(&k) || used[cand.party] >= self.copies || !cand.separates(i, j) {
                continue;
            }
            chosen.push(k);
            if self.run(chosen)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }
}

fn build_schedule(
    candidates: &[Candidate],
    chosen: &[usize],
    parties: &[PartyInfo],
    copies: usize,
) -> Result<Schedule> {
    let mut sorted = chosen.to_vec();
    sorted.sort_unstable();
    let used = (0..parties.len())
        .map(|p| sorted.iter().filter(|&&c| candidates[c].party == p).count())
        .max()
        .unwrap_or(0)
        .max(1);
    debug_assert!(used <= copies);
    let mut schedule = Schedule::new(used)?;
    let mut next_copy = vec![0; parties.len()];
    for &c in &sorted {
        let cand = &candidates[c];
        let info = &parties[cand.party];
        let outcomes = cand
            .basis
            .iter()
            .map(|v| Projector::from_vectors(info.dims.clone(), vec![v.clone()]))
            .collect::<Result<Vec<_>>>()?;
        let m = LocalMeasurement::new(info.party, info.subsystems.clone(), outcomes)?;
        schedule = schedule.with(next_copy[cand.party], m)?;
        next_copy[cand.party] += 1;
    }
    Ok(schedule)
}
