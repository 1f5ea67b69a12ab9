//! One-cbit teleportation protocols.
//!
//! Alice Bell-measures her state qubit with her half of a maximally entangled
//! pair; Bob's pair `(B′, B)` is then `(σ ⊗ I)|φᵢ⟩` for the Pauli `σ` fixed by
//! Alice's outcome. The bit narrows `σ` to two options, so Bob's useful
//! bases are built from the vectors `(σ ⊗ I)|φᵢ⟩`.

use super::{maximal_cliques, Deadline, SearchConfig};
use crate::engine::evaluate;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::protocol::{
    build_ictp, LocalMeasurement, MessagePartition, Protocol, BOB_RESOURCE, BOB_STATE,
};
use crate::tensor::{Party, NORM_TOL};

#[derive(Clone, Debug)]
pub struct IctpSearchResult {
    pub protocol: Protocol,
    pub success_probability: f64,
    pub perfect: bool,
    pub partition: MessagePartition,
    /// Distinct bases Bob could choose from.
    pub candidates: usize,
}

fn pauli(k: usize, v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    if k & 1 == 1 {
        // Z on the first qubit.
        for x in &mut out[2..] {
            *x = -*x;
        }
    }
    if k & 2 == 2 {
        out.rotate_left(2);
    }
    out
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn complete(mut basis: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for k in 0..4 {
        if basis.len() == 4 {
            break;
        }
        let mut v = vec![0.0; 4];
        v[k] = 1.0;
        for b in &basis {
            let c = dot(b, &v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 {
            basis.push(v.iter().map(|x| x / norm).collect());
        }
    }
    basis
}

/// Bob's candidate bases for a two-qubit ensemble: maximal orthonormal
/// families of Pauli-shifted ensemble vectors, completed.
pub(crate) fn bob_pool(ensemble: &Ensemble) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    for state in ensemble.states() {
        let v = state.real_amps();
        for k in 0..4 {
            let w = pauli(k, &v);
            if !vectors.iter().any(|u| dot(u, &w).abs() > 1.0 - NORM_TOL) {
                vectors.push(w);
            }
        }
    }
    let cliques = maximal_cliques(vectors.len(), |i, j| dot(&vectors[i], &vectors[j]).abs() < NORM_TOL);
    Ok(cliques
        .into_iter()
        .map(|c| complete(c.into_iter().map(|k| vectors[k].clone()).collect()))
        .collect())
}

/// Best one-cbit teleportation protocol over Bob's structured pool and the
/// three balanced message maps. Bob's two bases are chosen independently,
/// since each only affects the transcripts carrying its bit.
pub fn find_ictp_protocol(ensemble: &Ensemble, config: &SearchConfig) -> Result<IctpSearchResult> {
    config.validate()?;
    let deadline = Deadline::start(config);
    if ensemble.dims() != [2, 2] || ensemble.ownership() != [Party::ALICE, Party::BOB] {
        return Err(Error::Unsupported(
            "one-cbit search needs a two-qubit ensemble held by Alice and Bob".into(),
        ));
    }
    if ensemble.states().iter().any(|s| !s.is_real()) {
        return Err(Error::Unsupported("one-cbit search needs real states".into()));
    }
    let measurements = bob_pool(ensemble)?
        .iter()
        .map(|b| LocalMeasurement::from_basis(Party::BOB, vec![BOB_RESOURCE, BOB_STATE], vec![2, 2], b))
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<IctpSearchResult> = None;
    for partition in MessagePartition::ALL {
        let map = partition.message_map();
        let mut choice = [(f64::NEG_INFINITY, 0); 2];
        for (k, m) in measurements.iter().enumerate() {
            deadline.check()?;
            let report = evaluate(ensemble, &build_ictp(map.clone(), [m.clone(), m.clone()])?)?;
            for (bit, slot) in choice.iter_mut().enumerate() {
                let v = report.success_where(|t| t.bit == Some(bit as u8));
                if v > slot.0 {
                    *slot = (v, k);
                }
            }
        }
        let protocol = build_ictp(
            map,
            [
                measurements[choice[0].1].clone(),
                measurements[choice[1].1].clone(),
            ],
        )?;
        let report = evaluate(ensemble, &protocol)?;
        if best
            .as_ref()
            .is_none_or(|b| report.success_probability() > b.success_probability)
        {
            best = Some(IctpSearchResult {
                protocol,
                success_probability: report.success_probability(),
                perfect: report.perfect(),
                partition,
                candidates: measurements.len(),
            });
        }
    }
    best.ok_or_else(|| Error::Unsupported("empty candidate pool".into()))
}
