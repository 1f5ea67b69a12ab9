//! Exact protocol evaluation: every transcript, its Born probability under
//! each hypothesis, maximum-a-posteriori decoding and the resulting success
//! probability.
//!
//! Copies of the unknown state are measured one at a time and the
//! measurements on different copies are fixed in advance, so the likelihood
//! of a multi-copy transcript is the product of the per-copy likelihoods.
//! Each copy is enumerated exactly by applying the projectors of its steps to
//! the (unnormalized) state vector, pruning branches whose probability is at
//! most [`ZERO_PROB`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::catalog::ResourceSpec;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::protocol::{CommPlan, LocalMeasurement, MessageMap, Protocol, Schedule};
use crate::tensor::{apply_operator, Party, NORM_TOL, ZERO_PROB};

/// Success probabilities at or above `1 − PERFECT_TOL` count as perfect.
pub const PERFECT_TOL: f64 = 1e-9;

/// What produced one column of a transcript.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepLabel {
    pub copy: usize,
    pub party: Party,
    /// Chosen by the received bit.
    pub conditional: bool,
}

/// Outcome indices in step order, plus the communicated bit when the
/// protocol sends one.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transcript {
    pub outcomes: Vec<usize>,
    pub bit: Option<u8>,
}

#[derive(Clone, Debug)]
pub struct SuccessReport {
    steps: Vec<StepLabel>,
    labels: Vec<String>,
    priors: Vec<f64>,
    transcripts: Vec<Transcript>,
    /// `likelihoods[i][t] = Pr(transcripts[t] | state i)`.
    likelihoods: Vec<Vec<f64>>,
    decoding: Vec<usize>,
    success_probability: f64,
    per_state_success: Vec<f64>,
}

impl SuccessReport {
    pub fn steps(&self) -> &[StepLabel] {
        &self.steps
    }

    pub fn transcripts(&self) -> &[Transcript] {
        &self.transcripts
    }

    pub fn likelihoods(&self) -> &[Vec<f64>] {
        &self.likelihoods
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// MAP guess for each transcript.
    pub fn decoding(&self) -> &[usize] {
        &self.decoding
    }

    pub fn success_probability(&self) -> f64 {
        self.success_probability
    }

    pub fn perfect(&self) -> bool {
        self.success_probability >= 1.0 - PERFECT_TOL
    }

    /// `Pr(correct | state i)`.
    pub fn per_state_success(&self) -> &[f64] {
        &self.per_state_success
    }

    /// `Σ_t max_i prior_i · Pr(t | i)` recomputed from the table.
    pub fn recomputed_success(&self) -> f64 {
        self.success_where(|_| true)
    }

    /// Contribution to the success probability from transcripts matching `keep`.
    pub fn success_where(&self, keep: impl Fn(&Transcript) -> bool) -> f64 {
        (0..self.transcripts.len())
            .filter(|&t| keep(&self.transcripts[t]))
            .map(|t| {
                self.priors
                    .iter()
                    .zip(&self.likelihoods)
                    .map(|(p, row)| p * row[t])
                    .fold(0.0, f64::max)
            })
            .sum()
    }

    pub fn to_document(&self) -> ReportDocument {
        let transcripts = self
            .transcripts
            .iter()
            .enumerate()
            .map(|(t, transcript)| TranscriptRow {
                outcomes: transcript.outcomes.clone(),
                bit: transcript.bit,
                likelihoods: self
                    .likelihoods
                    .iter()
                    .enumerate()
                    .filter(|(_, row)| row[t] > ZERO_PROB)
                    .map(|(i, row)| (i, round_significant(row[t])))
                    .collect(),
                decoded: self.decoding[t],
            })
            .collect();
        ReportDocument {
            steps: self.steps.clone(),
            labels: self.labels.clone(),
            priors: self.priors.clone(),
            transcripts,
            success_probability: round_significant(self.success_probability),
            perfect: self.perfect(),
            per_state_success: self
                .per_state_success
                .iter()
                .map(|&x| round_significant(x))
                .collect(),
        }
    }
}

/// Serialized [`SuccessReport`]: sparse table (entries above the zero
/// threshold only), decoding map and success probability to 15 significant
/// digits.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportDocument {
    pub steps: Vec<StepLabel>,
    pub labels: Vec<String>,
    pub priors: Vec<f64>,
    pub transcripts: Vec<TranscriptRow>,
    pub success_probability: f64,
    pub perfect: bool,
    pub per_state_success: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TranscriptRow {
    pub outcomes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bit: Option<u8>,
    /// State index → likelihood.
    pub likelihoods: BTreeMap<usize, f64>,
    pub decoded: usize,
}

/// Rounds to 15 significant digits.
pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

/// Evaluation knobs that must not change the result.
#[derive(Clone, Copy, Debug, Default)]
pub struct EvalOptions {
    /// Apply the non-communicating steps of each copy in reverse party order.
    pub reverse_party_order: bool,
}

pub fn evaluate(ensemble: &Ensemble, protocol: &Protocol) -> Result<SuccessReport> {
    evaluate_with(ensemble, protocol, EvalOptions::default())
}

/// The plain multi-copy setting: no resource, no communication.
pub fn evaluate_multicopy(ensemble: &Ensemble, schedule: &Schedule) -> Result<SuccessReport> {
    evaluate(ensemble, &Protocol::local(schedule.clone()))
}

enum Stage<'a> {
    Fixed(&'a LocalMeasurement),
    Conditional {
        sender_step: usize,
        message: &'a MessageMap,
        options: &'a [LocalMeasurement; 2],
    },
}

struct CopyPlan<'a> {
    dims: Vec<usize>,
    stages: Vec<Stage<'a>>,
    /// Application order as indices into `stages`.
    order: Vec<usize>,
}

pub fn evaluate_with(
    ensemble: &Ensemble,
    protocol: &Protocol,
    options: EvalOptions,
) -> Result<SuccessReport> {
    let schedule = protocol.schedule();
    let mut plans = Vec::with_capacity(schedule.copies());
    let mut steps = Vec::new();
    for copy in 0..schedule.copies() {
        let plan = plan_copy(ensemble, protocol, copy, options)?;
        for stage in &plan.stages {
            let (party, conditional) = match stage {
                Stage::Fixed(m) => (m.party(), false),
                Stage::Conditional { options, .. } => (options[0].party(), true),
            };
            steps.push(StepLabel {
                copy,
                party,
                conditional,
            });
        }
        plans.push(plan);
    }

    let mut table: BTreeMap<Transcript, Vec<f64>> = BTreeMap::new();
    let n = ensemble.len();
    for (i, state) in ensemble.states().iter().enumerate() {
        let mut joint: Vec<(Vec<usize>, Option<u8>, f64)> = vec![(Vec::new(), None, 1.0)];
        for (copy, plan) in plans.iter().enumerate() {
            let amps = initial_amplitudes(state.amps(), protocol.resource(), copy);
            let branches = enumerate_copy(plan, amps);
            let mass: f64 = branches.iter().map(|b| b.2).sum();
            if (mass - 1.0).abs() > NORM_TOL {
                return Err(Error::ProbabilityMass { state: i, mass });
            }
            let mut next = Vec::with_capacity(joint.len() * branches.len());
            for (prefix, prefix_bit, p) in &joint {
                for (outcomes, bit, q) in &branches {
                    let prob = p * q;
                    if prob <= ZERO_PROB {
                        continue;
                    }
                    let mut all = prefix.clone();
                    all.extend_from_slice(outcomes);
                    next.push((all, prefix_bit.or(*bit), prob));
                }
            }
            joint = next;
        }
        let mut mass = 0.0;
        for (outcomes, bit, p) in joint {
            mass += p;
            table.entry(Transcript { outcomes, bit }).or_insert_with(|| vec![0.0; n])[i] += p;
        }
        if (mass - 1.0).abs() > NORM_TOL {
            return Err(Error::ProbabilityMass { state: i, mass });
        }
    }

    let priors = ensemble.priors().to_vec();
    let transcripts: Vec<Transcript> = table.keys().cloned().collect();
    let mut likelihoods = vec![vec![0.0; transcripts.len()]; n];
    for (t, row) in table.values().enumerate() {
        for (i, &p) in row.iter().enumerate() {
            likelihoods[i][t] = p;
        }
    }
    let mut decoding = Vec::with_capacity(transcripts.len());
    let mut success = 0.0;
    let mut per_state_success = vec![0.0; n];
    for t in 0..transcripts.len() {
        let mut best = 0;
        let mut best_weight = priors[0] * likelihoods[0][t];
        for i in 1..n {
            let w = priors[i] * likelihoods[i][t];
            if w > best_weight {
                best = i;
                best_weight = w;
            }
        }
        decoding.push(best);
        success += best_weight;
        per_state_success[best] += likelihoods[best][t];
    }

    Ok(SuccessReport {
        steps,
        labels: ensemble.labels().to_vec(),
        priors,
        transcripts,
        likelihoods,
        decoding,
        success_probability: success,
        per_state_success,
    })
}

fn initial_amplitudes(state: &[Complex64], resource: &ResourceSpec, copy: usize) -> Vec<Complex64> {
    match (copy, resource.amplitudes()) {
        (0, Some((a, b))) => state
            .iter()
            .flat_map(|x| [x * a, Complex64::default(), Complex64::default(), x * b])
            .collect(),
        _ => state.to_vec(),
    }
}

fn plan_copy<'a>(
    ensemble: &Ensemble,
    protocol: &'a Protocol,
    copy: usize,
    options: EvalOptions,
) -> Result<CopyPlan<'a>> {
    let mut dims = ensemble.dims().to_vec();
    let mut ownership = ensemble.ownership().to_vec();
    if copy == 0 && !protocol.resource().is_none() {
        dims.extend_from_slice(&[2, 2]);
        ownership.extend_from_slice(&protocol.resource().parties);
    }
    let schedule = protocol.schedule();
    let fixed = schedule.steps(copy);
    for m in &fixed {
        check_layout(m, &dims, &ownership, copy)?;
    }
    let mut stages = Vec::new();
    let mut order = Vec::new();
    match protocol.comm() {
        CommPlan::OneCbit(plan) if copy == 0 => {
            for m in &plan.conditional {
                check_layout(m, &dims, &ownership, copy)?;
            }
            let sender = fixed
                .iter()
                .find(|m| m.party() == plan.sender)
                .copied()
                .ok_or_else(|| Error::InvalidProtocol("sender does not measure".into()))?;
            stages.push(Stage::Fixed(sender));
            stages.extend(
                fixed
                    .iter()
                    .filter(|m| m.party() != plan.sender)
                    .map(|m| Stage::Fixed(m)),
            );
            stages.push(Stage::Conditional {
                sender_step: 0,
                message: &plan.message,
                options: &plan.conditional,
            });
            let others: Vec<usize> = (1..stages.len() - 1).collect();
            if options.reverse_party_order {
                order.extend(others.iter().rev());
                order.push(0);
            } else {
                order.push(0);
                order.extend(others);
            }
            order.push(stages.len() - 1);
        }
        _ => {
            stages.extend(fixed.iter().map(|m| Stage::Fixed(m)));
            order.extend(0..stages.len());
            if options.reverse_party_order {
                order.reverse();
            }
        }
    }
    Ok(CopyPlan { dims, stages, order })
}

fn check_layout(m: &LocalMeasurement, dims: &[usize], ownership: &[Party], copy: usize) -> Result<()> {
    for (&s, &d) in m.subsystems().iter().zip(m.local_dims()) {
        if s >= dims.len() {
            return Err(Error::Layout(format!(
                "party {} measures subsystem {s} on copy {copy}, which has {} subsystems",
                m.party(),
                dims.len()
            )));
        }
        if ownership[s] != m.party() {
            return Err(Error::Layout(format!(
                "party {} measures subsystem {s} owned by {} on copy {copy}",
                m.party(),
                ownership[s]
            )));
        }
        if dims[s] != d {
            return Err(Error::Layout(format!(
                "subsystem {s} has dimension {}, measurement expects {d}",
                dims[s]
            )));
        }
    }
    Ok(())
}

/// All branches `(outcomes in stage order, bit, probability)` of one copy.
fn enumerate_copy(plan: &CopyPlan<'_>, amps: Vec<Complex64>) -> Vec<(Vec<usize>, Option<u8>, f64)> {
    let mut out = Vec::new();
    let mut outcomes = vec![0; plan.stages.len()];
    descend(plan, 0, amps, &mut outcomes, None, &mut out);
    out
}

fn descend(
    plan: &CopyPlan<'_>,
    depth: usize,
    amps: Vec<Complex64>,
    outcomes: &mut Vec<usize>,
    bit: Option<u8>,
    out: &mut Vec<(Vec<usize>, Option<u8>, f64)>,
) {
    if depth == plan.order.len() {
        let p = amps.iter().map(|a| a.norm_sqr()).sum();
        out.push((outcomes.clone(), bit, p));
        return;
    }
    let stage_index = plan.order[depth];
    let (measurement, sender_step) = match &plan.stages[stage_index] {
        Stage::Fixed(m) => (*m, None),
        Stage::Conditional {
            sender_step,
            message,
            options,
        } => {
            let b = message.bit(outcomes[*sender_step]);
            (&options[b as usize], Some((*sender_step, b)))
        }
    };
    let bit = sender_step.map(|(_, b)| b).or(bit);
    for (k, projector) in measurement.outcomes().iter().enumerate() {
        let projected = apply_operator(&amps, &plan.dims, measurement.subsystems(), projector.matrix());
        let p: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
        if p <= ZERO_PROB {
            continue;
        }
        outcomes[stage_index] = k;
        descend(plan, depth + 1, projected, outcomes, bit, out);
    }
}

/// `½[sin²((α + α′)/2) + cos²((α − α′)/2)]`: success probability of the α′
/// protocol on the general product basis with its stated decoding.
pub fn eq5_formula(alpha: f64, alpha_prime: f64) -> f64 {
    0.5 * (((alpha + alpha_prime) / 2.0).sin().powi(2) + ((alpha - alpha_prime) / 2.0).cos().powi(2))
}

/// `cos²(α/4)`: best local projective success probability on the general
/// product basis without resources or extra copies.
pub fn lp_baseline_formula(alpha: f64) -> f64 {
    (alpha / 4.0).cos().powi(2)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    use super::*;
    use crate::catalog::{self, amplitudes_from_square, ResourceSpec};
    use crate::protocol::{
        build_groisman_protocol, build_parity_then_bell, groisman_protocol, qubit_basis,
    };

    fn qubit_measurement(party: Party, subsystem: usize, theta: f64) -> LocalMeasurement {
        LocalMeasurement::from_basis(party, vec![subsystem], vec![2], &qubit_basis(theta)).unwrap()
    }

    #[test]
    fn groisman_on_eq1_with_mes_is_perfect() {
        let r = evaluate(&catalog::eq1().unwrap(), &build_groisman_protocol()).unwrap();
        assert!((r.success_probability() - 1.0).abs() < 1e-12);
        assert!(r.perfect());
    }

    #[test]
    fn groisman_with_nmes_matches_negativity_formula() {
        let resource = ResourceSpec::from_square(0.8).unwrap();
        let r = evaluate(&catalog::eq1().unwrap(), &groisman_protocol(resource).unwrap()).unwrap();
        assert!((r.success_probability() - 0.95).abs() < 1e-12);
    }

    #[test]
    fn bell_subsets_with_parity_then_bell() {
        let (a, b) = amplitudes_from_square(0.8).unwrap();
        let ab = a * b;
        let protocol = build_parity_then_bell(ResourceSpec::nmes(a, b).unwrap()).unwrap();
        let four = catalog::bell().unwrap();
        let r = evaluate(&four, &protocol).unwrap();
        assert!((r.success_probability() - (0.5 + ab)).abs() < 1e-12);
        let three = four.subset(&[0, 1, 2]).unwrap();
        let r = evaluate(&three, &protocol).unwrap();
        assert!((r.success_probability() - (2.0 / 3.0 + 2.0 / 3.0 * ab)).abs() < 1e-12);
    }

    #[test]
    fn single_state_is_always_identified() {
        let e = catalog::bell().unwrap().subset(&[2]).unwrap();
        let r = evaluate(&e, &build_groisman_protocol()).unwrap();
        assert!((r.success_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_copy_eq1_local_baseline() {
        // States 1, 2 are fixed by Alice's outcome 0 and Bob's; states 3, 4 give
        // Bob uniform outcomes in {|0⟩, |1⟩}: (1 + 1 + ½ + ½)/4 = 3/4.
        let schedule = Schedule::single(vec![
            qubit_measurement(Party::ALICE, 0, 0.0),
            qubit_measurement(Party::BOB, 1, 0.0),
        ])
        .unwrap();
        let r = evaluate_multicopy(&catalog::eq1().unwrap(), &schedule).unwrap();
        assert!((r.success_probability() - 0.75).abs() < 1e-12);
        let r = evaluate_multicopy(&catalog::eq4(0.0, 0.4).unwrap(), &{
            Schedule::single(vec![
                qubit_measurement(Party::ALICE, 0, 0.0),
                qubit_measurement(Party::BOB, 1, 0.4),
            ])
            .unwrap()
        })
        .unwrap();
        assert!((r.success_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_copy_schedule_for_general_product_basis() {
        let (alpha, theta) = (FRAC_PI_3, 0.25);
        let tilde = theta + alpha / 2.0;
        let schedule = Schedule::new(2)
            .unwrap()
            .with(0, qubit_measurement(Party::ALICE, 0, 0.0))
            .unwrap()
            .with(0, qubit_measurement(Party::BOB, 1, theta))
            .unwrap()
            .with(1, qubit_measurement(Party::BOB, 1, tilde))
            .unwrap();
        let r = evaluate_multicopy(&catalog::eq4(alpha, theta).unwrap(), &schedule).unwrap();
        assert!(r.perfect());
        assert_eq!(r.steps().len(), 3);
    }

    #[test]
    fn multicopy_matches_literal_tensor_power() {
        // Evaluate two copies as a single copy of |ψ⟩⊗|ψ⟩ on four subsystems.
        let e = catalog::eq1().unwrap();
        let schedule = Schedule::new(2)
            .unwrap()
            .with(0, qubit_measurement(Party::ALICE, 0, 0.3))
            .unwrap()
            .with(0, qubit_measurement(Party::BOB, 1, 0.2))
            .unwrap()
            .with(1, qubit_measurement(Party::BOB, 1, 1.1))
            .unwrap();
        let sequential = evaluate_multicopy(&e, &schedule).unwrap();

        let doubled: Vec<_> = e
            .states()
            .iter()
            .map(|s| crate::tensor::tensor(&[s.clone(), s.clone()]).unwrap())
            .collect();
        let doubled = Ensemble::uniform(doubled).unwrap();
        let joint = Schedule::single(vec![
            qubit_measurement(Party::ALICE, 0, 0.3),
            LocalMeasurement::from_basis(
                Party::BOB,
                vec![1, 3],
                vec![2, 2],
                &qubit_basis(0.2)
                    .iter()
                    .flat_map(|u| qubit_basis(1.1).into_iter().map(move |v| catalog::kron(u, &v)))
                    .collect::<Vec<_>>(),
            )
            .unwrap(),
        ])
        .unwrap();
        let literal = evaluate_multicopy(&doubled, &joint).unwrap();
        assert!((sequential.success_probability() - literal.success_probability()).abs() < 1e-12);
    }

    #[test]
    fn layout_errors() {
        let e = catalog::eq1().unwrap();
        // Bob measuring Alice's qubit.
        let s = Schedule::single(vec![qubit_measurement(Party::BOB, 0, 0.0)]).unwrap();
        assert!(matches!(evaluate_multicopy(&e, &s), Err(Error::Layout(_))));
        // Resource qubits referenced without a resource.
        let p = crate::protocol::build_parity_then_bell(ResourceSpec::none()).unwrap();
        assert!(matches!(evaluate(&e, &p), Err(Error::Layout(_))));
        // Qutrit measurement on a qubit.
        let q = LocalMeasurement::from_basis(
            Party::ALICE,
            vec![0],
            vec![3],
            &crate::protocol::computational_basis(3),
        )
        .unwrap();
        let s = Schedule::single(vec![q]).unwrap();
        assert!(matches!(evaluate_multicopy(&e, &s), Err(Error::Layout(_))));
    }

    #[test]
    fn report_invariants_and_document() {
        let e = catalog::eq4(1.0, 0.3).unwrap();
        let p = groisman_protocol(ResourceSpec::from_square(0.7).unwrap()).unwrap();
        let r = evaluate(&e, &p).unwrap();
        for row in r.likelihoods() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!((r.recomputed_success() - r.success_probability()).abs() < 1e-12);
        let doc = r.to_document();
        let text = serde_json::to_string(&doc).unwrap();
        let back: ReportDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        assert!(doc
            .transcripts
            .iter()
            .all(|row| row.likelihoods.values().all(|&p| p > ZERO_PROB)));
    }

    #[test]
    fn reverse_order_gives_identical_table() {
        let e = catalog::eq1().unwrap();
        let p = groisman_protocol(ResourceSpec::from_square(0.75).unwrap()).unwrap();
        let fwd = evaluate(&e, &p).unwrap();
        let rev = evaluate_with(&e, &p, EvalOptions { reverse_party_order: true }).unwrap();
        assert_eq!(fwd.transcripts(), rev.transcripts());
        for (a, b) in fwd.likelihoods().iter().zip(rev.likelihoods()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn formulas() {
        assert!((eq5_formula(FRAC_PI_2, FRAC_PI_2) - 1.0).abs() < 1e-15);
        assert!((eq5_formula(0.0, 0.0) - 0.5).abs() < 1e-15);
        let crossover = (PI / 12.0).cos().powi(2);
        assert!((eq5_formula(FRAC_PI_3, FRAC_PI_2) - crossover).abs() < 1e-15);
        assert!((lp_baseline_formula(FRAC_PI_3) - crossover).abs() < 1e-15);
        assert!((lp_baseline_formula(0.0) - 1.0).abs() < 1e-15);
        let target = 0.5 + 0.5 / 2f64.sqrt();
        assert!((lp_baseline_formula(FRAC_PI_2) - target).abs() < 1e-15);
    }

    #[test]
    fn significant_digit_rounding() {
        assert_eq!(round_significant(0.123456789012345678), 0.123456789012346);
        assert_eq!(round_significant(0.0), 0.0);
        assert_eq!(round_significant(1.0), 1.0);
    }
}
