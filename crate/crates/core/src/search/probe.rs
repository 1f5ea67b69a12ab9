//! Numerical probe of entanglement-assisted local projective protocols: each
//! party measures one orthonormal basis of its (state, resource) pair.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Deadline, SearchConfig};
use crate::catalog::{kron, ResourceSpec};
use crate::engine::evaluate;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::protocol::{
    build_parity_then_bell, groisman_alice_basis, pair_measurement, qubit_basis, CommPlan,
    LocalMeasurement, Protocol, Schedule,
};
use crate::tensor::Party;

#[derive(Clone, Debug)]
pub struct ProbeResult {
    /// Parity-then-Bell value.
    pub achieved: f64,
    /// Largest value over all probed protocols.
    pub probe_max: f64,
    pub probes: usize,
    pub best: Protocol,
}

type Basis = Vec<Vec<f64>>;

/// `{cos t|00⟩ ± …, cos s|01⟩ ± …}`: Bell-like bases, computational at `t = s = 0`.
fn generalized_bell(t: f64, s: f64) -> Basis {
    let (ct, st, cs, ss) = (t.cos(), t.sin(), s.cos(), s.sin());
    vec![
        vec![ct, 0.0, 0.0, st],
        vec![st, 0.0, 0.0, -ct],
        vec![0.0, cs, ss, 0.0],
        vec![0.0, ss, -cs, 0.0],
    ]
}

fn structured_bases(divisions: usize) -> Vec<Basis> {
    let step = PI / divisions as f64;
    let mut out = Vec::new();
    for i in 0..divisions {
        for j in 0..divisions {
            out.push(generalized_bell(i as f64 * step, j as f64 * step));
        }
    }
    for i in 0..divisions / 2 {
        for j in 0..divisions / 2 {
            let (x, y) = (qubit_basis(i as f64 * step), qubit_basis(j as f64 * step));
            out.push(x.iter().flat_map(|u| y.iter().map(move |v| kron(u, v))).collect());
        }
    }
    out.push(groisman_alice_basis());
    out
}

fn cayley(rng: &mut ChaCha8Rng, scale: f64) -> Matrix4<f64> {
    let mut a = Matrix4::zeros();
    for i in 0..4 {
        for j in i + 1..4 {
            let x = scale * rng.gen_range(-1.0..1.0);
            a[(i, j)] = x;
            a[(j, i)] = -x;
        }
    }
    let id = Matrix4::identity();
    (id - a).try_inverse().expect("I − A is invertible for antisymmetric A") * (id + a)
}

fn rotate(basis: &Basis, q: &Matrix4<f64>) -> Basis {
    basis
        .iter()
        .map(|v| (0..4).map(|r| (0..4).map(|c| q[(r, c)] * v[c]).sum()).collect())
        .collect()
}

struct Prober<'a> {
    ensemble: &'a Ensemble,
    resource: ResourceSpec,
}

impl Prober<'_> {
    fn protocol(&self, alice: &LocalMeasurement, bob: &LocalMeasurement) -> Result<Protocol> {
        let schedule = Schedule::single(vec![alice.clone(), bob.clone()])?;
        Protocol::new(self.resource, schedule, CommPlan::None)
    }

    fn value(&self, alice: &LocalMeasurement, bob: &LocalMeasurement) -> Result<f64> {
        Ok(evaluate(self.ensemble, &self.protocol(alice, bob)?)?.success_probability())
    }
}

/// Compares the parity-then-Bell protocol against many other product
/// measurements of the (state, resource) pairs: a grid of Bell-like and
/// product bases for each party, followed by random orthogonal perturbations
/// around the best pairs found.
pub fn lpse_optimality_probe(
    ensemble: &Ensemble,
    resource: ResourceSpec,
    config: &SearchConfig,
) -> Result<ProbeResult> {
    config.validate()?;
    let deadline = Deadline::start(config);
    if ensemble.dims() != [2, 2] || resource.is_none() {
        return Err(Error::Unsupported(
            "the probe needs a two-qubit ensemble and a resource".into(),
        ));
    }
    let prober = Prober { ensemble, resource };
    let achieved = evaluate(ensemble, &build_parity_then_bell(resource)?)?.success_probability();

    let bases = structured_bases(config.probe_divisions.max(2));
    let alice = bases
        .iter()
        .map(|b| pair_measurement(Party::ALICE, b))
        .collect::<Result<Vec<_>>>()?;
    let bob = bases
        .iter()
        .map(|b| pair_measurement(Party::BOB, b))
        .collect::<Result<Vec<_>>>()?;

    let mut scored: Vec<(f64, usize, usize)> = (0..alice.len())
        .into_par_iter()
        .map(|i| {
            deadline.check()?;
            (0..bob.len())
                .map(|j| Ok((prober.value(&alice[i], &bob[j])?, i, j)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut probes = scored.len();
    let (mut probe_max, bi, bj) = scored[0];
    let mut best = prober.protocol(&alice[bi], &bob[bj])?;

    let seeds = 8.min(scored.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut current: Vec<(f64, Basis, Basis)> = scored[..seeds]
        .iter()
        .map(|&(v, i, j)| (v, bases[i].clone(), bases[j].clone()))
        .collect();
    for k in 0..config.probe_perturbations {
        if deadline.expired() {
            break;
        }
        let slot = k % seeds;
        let scale = [0.3, 0.1, 0.03][rng.gen_range(0..3)];
        let (_, a, b) = &current[slot];
        let (a, b) = match rng.gen_range(0..3) {
            0 => (rotate(a, &cayley(&mut rng, scale)), b.clone()),
            1 => (a.clone(), rotate(b, &cayley(&mut rng, scale))),
            _ => (rotate(a, &cayley(&mut rng, scale)), rotate(b, &cayley(&mut rng, scale))),
        };
        let (ma, mb) = (pair_measurement(Party::ALICE, &a)?, pair_measurement(Party::BOB, &b)?);
        let v = prober.value(&ma, &mb)?;
        probes += 1;
        if v > current[slot].0 {
            current[slot] = (v, a, b);
        }
        if v > probe_max {
            probe_max = v;
            best = prober.protocol(&ma, &mb)?;
        }
    }
    Ok(ProbeResult {
        achieved,
        probe_max,
        probes,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn structured_family_sizes_and_orthonormality() {
        let bases = structured_bases(4);
        assert_eq!(bases.len(), 16 + 4 + 1);
        for b in &bases {
            for (i, u) in b.iter().enumerate() {
                for (j, v) in b.iter().enumerate() {
                    let d: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
                    assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cayley_transform_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = cayley(&mut rng, 0.5);
        assert!((q.transpose() * q - Matrix4::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn small_probe_stays_below_parity_then_bell() {
        let config = SearchConfig {
            probe_divisions: 4,
            probe_perturbations: 40,
            ..SearchConfig::default()
        };
        let resource = ResourceSpec::from_product(0.3).unwrap();
        let r = lpse_optimality_probe(&catalog::bell().unwrap(), resource, &config).unwrap();
        assert!((r.achieved - 0.8).abs() < 1e-12);
        assert!(r.probe_max <= r.achieved + 1e-9);
        assert_eq!(r.probes, 21 * 21 + 40);
    }
}
