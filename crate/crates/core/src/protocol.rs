//! Discrimination protocols: which party measures what on which copy, and
//! what (if anything) is communicated during the measurements.
//!
//! Subsystem indices in a [`LocalMeasurement`] refer to the per-copy layout:
//! the ensemble's subsystems, followed on the first copy only by the two
//! resource qubits. For two-qubit ensembles with a resource that layout is
//! `[A, B, A′, B′]`; see the `*_STATE` and `*_RESOURCE` constants.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::catalog::{bell_vectors, kron, theta_ket, theta_perp, ResourceSpec};
use crate::error::{Error, Result};
use crate::tensor::{max_abs, Party, Projector, NORM_TOL};

pub const ALICE_STATE: usize = 0;
pub const BOB_STATE: usize = 1;
pub const ALICE_RESOURCE: usize = 2;
pub const BOB_RESOURCE: usize = 3;

/// A complete projective measurement by one party on its own subsystems.
#[derive(Clone, Debug)]
pub struct LocalMeasurement {
    party: Party,
    subsystems: Vec<usize>,
    outcomes: Vec<Projector>,
}

impl LocalMeasurement {
    pub fn new(party: Party, subsystems: Vec<usize>, outcomes: Vec<Projector>) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::InvalidMeasurement("no subsystems".into()));
        }
        for (k, s) in subsystems.iter().enumerate() {
            if subsystems[..k].contains(s) {
                return Err(Error::InvalidMeasurement(format!("subsystem {s} listed twice")));
            }
        }
        let first = outcomes
            .first()
            .ok_or_else(|| Error::InvalidMeasurement("no outcomes".into()))?;
        if first.dims().len() != subsystems.len() {
            return Err(Error::InvalidMeasurement(format!(
                "projector dims {:?} for {} subsystems",
                first.dims(),
                subsystems.len()
            )));
        }
        if let Some(p) = outcomes.iter().find(|p| p.dims() != first.dims()) {
            return Err(Error::InvalidMeasurement(format!(
                "outcome dims {:?} differ from {:?}",
                p.dims(),
                first.dims()
            )));
        }
        for j in 0..outcomes.len() {
            for k in j + 1..outcomes.len() {
                let product = outcomes[j].matrix() * outcomes[k].matrix();
                if max_abs(&product) > NORM_TOL {
                    return Err(Error::InvalidMeasurement(format!(
                        "outcomes {j} and {k} are not orthogonal"
                    )));
                }
            }
        }
        let dim = first.dim();
        let mut total = DMatrix::<Complex64>::zeros(dim, dim);
        for p in &outcomes {
            total += p.matrix();
        }
        if max_abs(&(total - DMatrix::identity(dim, dim))) > NORM_TOL {
            return Err(Error::InvalidMeasurement("outcomes do not sum to the identity".into()));
        }
        Ok(LocalMeasurement {
            party,
            subsystems,
            outcomes,
        })
    }

    /// Rank-one outcomes, one per basis vector.
    pub fn from_basis(
        party: Party,
        subsystems: Vec<usize>,
        dims: Vec<usize>,
        basis: &[Vec<f64>],
    ) -> Result<Self> {
        let outcomes = basis
            .iter()
            .map(|v| Projector::from_real_vectors(dims.clone(), std::slice::from_ref(v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(party, subsystems, outcomes)
    }

    /// One outcome per group of orthonormal vectors.
    pub fn from_groups(
        party: Party,
        subsystems: Vec<usize>,
        dims: Vec<usize>,
        groups: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        let outcomes = groups
            .iter()
            .map(|g| Projector::from_real_vectors(dims.clone(), g))
            .collect::<Result<Vec<_>>>()?;
        Self::new(party, subsystems, outcomes)
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn subsystems(&self) -> &[usize] {
        &self.subsystems
    }

    pub fn outcomes(&self) -> &[Projector] {
        &self.outcomes
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn local_dims(&self) -> &[usize] {
        self.outcomes[0].dims()
    }

    pub fn is_real(&self) -> bool {
        self.outcomes.iter().all(Projector::is_real)
    }

    /// Merges outcomes: outcome `k` of the result is the sum of the outcomes
    /// `j` with `classes[j] == k`.
    pub fn coarse_grained(&self, classes: &[usize]) -> Result<Self> {
        if classes.len() != self.outcomes.len() {
            return Err(Error::InvalidMeasurement(format!(
                "{} classes for {} outcomes",
                classes.len(),
                self.outcomes.len()
            )));
        }
        let count = classes.iter().max().map_or(0, |m| m + 1);
        let mut merged = Vec::with_capacity(count);
        for class in 0..count {
            let vectors: Vec<_> = classes
                .iter()
                .zip(&self.outcomes)
                .filter(|(&c, _)| c == class)
                .flat_map(|(_, p)| p.vectors().iter().cloned())
                .collect();
            if vectors.is_empty() {
                return Err(Error::InvalidMeasurement(format!("class {class} is empty")));
            }
            merged.push(Projector::from_vectors(self.local_dims().to_vec(), vectors)?);
        }
        Self::new(self.party, self.subsystems.clone(), merged)
    }

    /// Every outcome conjugated by the local unitary `U`: `U P U†`.
    pub fn conjugated(&self, unitary: &DMatrix<Complex64>) -> Result<Self> {
        let outcomes = self
            .outcomes
            .iter()
            .map(|p| p.conjugated(unitary))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.party, self.subsystems.clone(), outcomes)
    }
}

/// Per-party measurements for each copy, fixed in advance. A party absent
/// from a copy is idle on it.
#[derive(Clone, Debug)]
pub struct Schedule {
    copies: usize,
    plans: BTreeMap<Party, Vec<Option<LocalMeasurement>>>,
}

impl Schedule {
    pub fn new(copies: usize) -> Result<Self> {
        if copies == 0 {
            return Err(Error::InvalidProtocol("a schedule needs at least one copy".into()));
        }
        Ok(Schedule {
            copies,
            plans: BTreeMap::new(),
        })
    }

    /// One copy with the given measurements.
    pub fn single(measurements: Vec<LocalMeasurement>) -> Result<Self> {
        measurements
            .into_iter()
            .try_fold(Self::new(1)?, |s, m| s.with(0, m))
    }

    /// Adds `measurement` on copy `copy` (0-based). A party measures at most
    /// once per copy.
    pub fn with(mut self, copy: usize, measurement: LocalMeasurement) -> Result<Self> {
        if copy >= self.copies {
            return Err(Error::InvalidProtocol(format!(
                "copy {copy} out of range for {} copies",
                self.copies
            )));
        }
        let plan = self
            .plans
            .entry(measurement.party)
            .or_insert_with(|| vec![None; self.copies]);
        if plan[copy].is_some() {
            return Err(Error::InvalidProtocol(format!(
                "party {} already measures on copy {copy}",
                measurement.party
            )));
        }
        plan[copy] = Some(measurement);
        Ok(self)
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn parties(&self) -> Vec<Party> {
        self.plans.keys().copied().collect()
    }

    pub fn measurement(&self, party: Party, copy: usize) -> Option<&LocalMeasurement> {
        self.plans.get(&party)?.get(copy)?.as_ref()
    }

    /// Measurements on `copy` in party order.
    pub fn steps(&self, copy: usize) -> Vec<&LocalMeasurement> {
        self.plans
            .values()
            .filter_map(|plan| plan.get(copy).and_then(Option::as_ref))
            .collect()
    }

    pub fn measurement_count(&self) -> usize {
        (0..self.copies).map(|c| self.steps(c).len()).sum()
    }
}

/// Outcome → bit table for a one-cbit message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageMap(Vec<u8>);

impl MessageMap {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() || bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidProtocol(format!("invalid message map {bits:?}")));
        }
        Ok(MessageMap(bits))
    }

    pub fn bit(&self, outcome: usize) -> u8 {
        self.0[outcome]
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Half of the outcomes map to each bit.
    pub fn is_balanced(&self) -> bool {
        2 * self.0.iter().filter(|&&b| b == 1).count() == self.0.len()
    }
}

/// The three ways of splitting the Bell outcomes `φ⁺, φ⁻, ψ⁺, ψ⁻` into two
/// pairs, with `φ⁺` always sent as bit 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessagePartition {
    /// `{φ⁺, ψ⁺} ↦ 0`, `{φ⁻, ψ⁻} ↦ 1`: the sign of the outcome.
    Sign,
    /// `{φ⁺, φ⁻} ↦ 0`, `{ψ⁺, ψ⁻} ↦ 1`.
    Parity,
    /// `{φ⁺, ψ⁻} ↦ 0`, `{φ⁻, ψ⁺} ↦ 1`.
    Cross,
}

impl MessagePartition {
    pub const ALL: [MessagePartition; 3] = [
        MessagePartition::Sign,
        MessagePartition::Parity,
        MessagePartition::Cross,
    ];

    pub fn message_map(self) -> MessageMap {
        let bits = match self {
            MessagePartition::Sign => vec![0, 1, 0, 1],
            MessagePartition::Parity => vec![0, 0, 1, 1],
            MessagePartition::Cross => vec![0, 1, 1, 0],
        };
        MessageMap(bits)
    }
}

/// One classical bit from `sender` to `receiver`, after the sender's first
/// copy measurement; the receiver then performs `conditional[bit]`.
#[derive(Clone, Debug)]
pub struct OneCbit {
    pub sender: Party,
    pub receiver: Party,
    pub message: MessageMap,
    pub conditional: [LocalMeasurement; 2],
}

#[derive(Clone, Debug, Default)]
pub enum CommPlan {
    #[default]
    None,
    OneCbit(Box<OneCbit>),
}

impl CommPlan {
    pub fn one_cbit(
        sender: Party,
        receiver: Party,
        message: MessageMap,
        conditional: [LocalMeasurement; 2],
    ) -> Result<Self> {
        if sender == receiver {
            return Err(Error::InvalidProtocol("sender and receiver coincide".into()));
        }
        if conditional.iter().any(|m| m.party() != receiver) {
            return Err(Error::InvalidProtocol(
                "conditional measurements must belong to the receiver".into(),
            ));
        }
        Ok(CommPlan::OneCbit(Box::new(OneCbit {
            sender,
            receiver,
            message,
            conditional,
        })))
    }

    pub fn cbits(&self) -> usize {
        match self {
            CommPlan::None => 0,
            CommPlan::OneCbit(_) => 1,
        }
    }

    /// `false` for an unbalanced one-cbit message map; such maps are allowed
    /// but flagged.
    pub fn message_is_balanced(&self) -> bool {
        match self {
            CommPlan::None => true,
            CommPlan::OneCbit(plan) => plan.message.is_balanced(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Protocol {
    resource: ResourceSpec,
    schedule: Schedule,
    comm: CommPlan,
}

impl Protocol {
    pub fn new(resource: ResourceSpec, schedule: Schedule, comm: CommPlan) -> Result<Self> {
        if let CommPlan::OneCbit(plan) = &comm {
            if schedule.copies() != 1 {
                return Err(Error::InvalidProtocol(
                    "one-cbit protocols act on a single copy".into(),
                ));
            }
            let sender = schedule.measurement(plan.sender, 0).ok_or_else(|| {
                Error::InvalidProtocol(format!("sender {} has no measurement", plan.sender))
            })?;
            if plan.message.len() != sender.outcome_count() {
                return Err(Error::InvalidProtocol(format!(
                    "message map covers {} of {} sender outcomes",
                    plan.message.len(),
                    sender.outcome_count()
                )));
            }
            if schedule.measurement(plan.receiver, 0).is_some() {
                return Err(Error::InvalidProtocol(
                    "the receiver measures only after the message".into(),
                ));
            }
        }
        Ok(Protocol {
            resource,
            schedule,
            comm,
        })
    }

    /// No resource, no communication.
    pub fn local(schedule: Schedule) -> Self {
        Protocol {
            resource: ResourceSpec::none(),
            schedule,
            comm: CommPlan::None,
        }
    }

    pub fn resource(&self) -> &ResourceSpec {
        &self.resource
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn comm(&self) -> &CommPlan {
        &self.comm
    }

    pub fn cbits(&self) -> usize {
        self.comm.cbits()
    }
}

/// Real orthonormal basis `{|θ⟩, |θ′⟩}`.
pub fn qubit_basis(theta: f64) -> Vec<Vec<f64>> {
    vec![theta_ket(theta).to_vec(), theta_perp(theta).to_vec()]
}

/// Computational basis of a `dim`-dimensional space.
pub fn computational_basis(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|k| (0..dim).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn bell_basis() -> Vec<Vec<f64>> {
    bell_vectors().iter().map(|v| v.to_vec()).collect()
}

/// `{|00⟩, |01⟩, (|10⟩ + |11⟩)/√2, (|10⟩ − |11⟩)/√2}`.
pub fn groisman_alice_basis() -> Vec<Vec<f64>> {
    let h = FRAC_1_SQRT_2;
    vec![
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, h, h],
        vec![0.0, 0.0, h, -h],
    ]
}

/// `ℙ₁ = |00⟩⟨00| + |11⟩⟨11|`, `ℙ₂ = |01⟩⟨01| + |10⟩⟨10|`.
pub fn parity_groups() -> Vec<Vec<Vec<f64>>> {
    vec![
        vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]],
        vec![vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]],
    ]
}

/// Parity class of a Bell outcome: `φ± ↦ 0 (ℙ₁)`, `ψ± ↦ 1 (ℙ₂)`.
pub const BELL_TO_PARITY: [usize; 4] = [0, 0, 1, 1];

fn pair(party: Party) -> (Vec<usize>, Vec<usize>) {
    let subsystems = if party == Party::ALICE {
        vec![ALICE_STATE, ALICE_RESOURCE]
    } else {
        vec![BOB_STATE, BOB_RESOURCE]
    };
    (subsystems, vec![2, 2])
}

/// Bell measurement by `party` on its (state qubit, resource qubit) pair.
pub fn bell_measurement(party: Party) -> Result<LocalMeasurement> {
    let (subsystems, dims) = pair(party);
    LocalMeasurement::from_basis(party, subsystems, dims, &bell_basis())
}

/// Two-outcome `{ℙ₁, ℙ₂}` measurement on `party`'s (state, resource) pair.
pub fn parity_measurement(party: Party) -> Result<LocalMeasurement> {
    let (subsystems, dims) = pair(party);
    LocalMeasurement::from_groups(party, subsystems, dims, &parity_groups())
}

/// Measurement of `party`'s (state, resource) pair in an arbitrary basis.
pub fn pair_measurement(party: Party, basis: &[Vec<f64>]) -> Result<LocalMeasurement> {
    let (subsystems, dims) = pair(party);
    LocalMeasurement::from_basis(party, subsystems, dims, basis)
}

/// Alice in `{|00⟩, |01⟩, |10⟩ ± |11⟩}`, Bob in the Bell basis, with the given
/// resource and no communication.
pub fn groisman_protocol(resource: ResourceSpec) -> Result<Protocol> {
    let schedule = Schedule::single(vec![
        pair_measurement(Party::ALICE, &groisman_alice_basis())?,
        bell_measurement(Party::BOB)?,
    ])?;
    Protocol::new(resource, schedule, CommPlan::None)
}

/// [`groisman_protocol`] with a maximally entangled resource.
pub fn build_groisman_protocol() -> Protocol {
    groisman_protocol(ResourceSpec::mes()).expect("fixed bases are valid")
}

/// Bob's entangled basis parameterized by `α′`:
/// `cos(α′/2)|θ0⟩ + sin(α′/2)|θ′1⟩`, `sin(α′/2)|θ0⟩ − cos(α′/2)|θ′1⟩`,
/// `cos(α′/2)|θ1⟩ + sin(α′/2)|θ′0⟩`, `sin(α′/2)|θ1⟩ − cos(α′/2)|θ′0⟩`.
pub fn alpha_prime_basis(alpha_prime: f64, theta: f64) -> Vec<Vec<f64>> {
    let t = theta_ket(theta);
    let tp = theta_perp(theta);
    let (c, s) = ((alpha_prime / 2.0).cos(), (alpha_prime / 2.0).sin());
    let e0 = [1.0, 0.0];
    let e1 = [0.0, 1.0];
    let combo = |x: f64, u: Vec<f64>, y: f64, v: Vec<f64>| -> Vec<f64> {
        u.iter().zip(&v).map(|(p, q)| x * p + y * q).collect()
    };
    vec![
        combo(c, kron(&t, &e0), s, kron(&tp, &e1)),
        combo(s, kron(&t, &e0), -c, kron(&tp, &e1)),
        combo(c, kron(&t, &e1), s, kron(&tp, &e0)),
        combo(s, kron(&t, &e1), -c, kron(&tp, &e0)),
    ]
}

/// Alice as in [`groisman_protocol`], Bob in [`alpha_prime_basis`], MES resource.
pub fn build_alpha_prime_protocol(alpha_prime: f64, theta: f64) -> Result<Protocol> {
    if !(-NORM_TOL..=std::f64::consts::FRAC_PI_2 + NORM_TOL).contains(&alpha_prime) {
        return Err(Error::Constraint(format!("α′ = {alpha_prime} outside [0, π/2]")));
    }
    let schedule = Schedule::single(vec![
        pair_measurement(Party::ALICE, &groisman_alice_basis())?,
        pair_measurement(Party::BOB, &alpha_prime_basis(alpha_prime, theta))?,
    ])?;
    Protocol::new(ResourceSpec::mes(), schedule, CommPlan::None)
}

/// Two copies of the general product basis: Alice measures `{|0⟩, |1⟩}` once;
/// Bob measures `{|θ⟩, |θ′⟩}` on the first copy and the rotated basis
/// `{|θ + α/2⟩, |θ + α/2⟩⊥}` on the second.
pub fn two_copy_schedule(alpha: f64, theta: f64) -> Result<Schedule> {
    let qubit = |party, subsystem, angle| {
        LocalMeasurement::from_basis(party, vec![subsystem], vec![2], &qubit_basis(angle))
    };
    Schedule::new(2)?
        .with(0, qubit(Party::ALICE, ALICE_STATE, 0.0)?)?
        .with(0, qubit(Party::BOB, BOB_STATE, theta)?)?
        .with(1, qubit(Party::BOB, BOB_STATE, theta + alpha / 2.0)?)
}

/// Both parties Bell-measure their (state, resource) pair. Coarse-graining
/// each party's outcome through [`BELL_TO_PARITY`] recovers the `{ℙ₁, ℙ₂}`
/// measurement, so this refines the parity step.
pub fn build_parity_then_bell(resource: ResourceSpec) -> Result<Protocol> {
    let schedule = Schedule::single(vec![
        bell_measurement(Party::ALICE)?,
        bell_measurement(Party::BOB)?,
    ])?;
    Protocol::new(resource, schedule, CommPlan::None)
}

/// Incomplete teleportation: MES resource, Alice Bell-measures (state,
/// resource) and sends one bit according to `message`, Bob then measures his
/// pair with `bob[bit]`.
///
/// Bob's conditional measurements must act on `[BOB_RESOURCE, BOB_STATE]` or
/// `[BOB_STATE, BOB_RESOURCE]`. Unbalanced message maps are accepted;
/// [`CommPlan::message_is_balanced`] flags them.
pub fn build_ictp(message: MessageMap, bob: [LocalMeasurement; 2]) -> Result<Protocol> {
    for m in &bob {
        let mut subs = m.subsystems().to_vec();
        subs.sort_unstable();
        if m.party() != Party::BOB || subs != [BOB_STATE, BOB_RESOURCE] {
            return Err(Error::InvalidProtocol(
                "Bob's conditional measurements act on his state and resource qubits".into(),
            ));
        }
    }
    let schedule = Schedule::single(vec![bell_measurement(Party::ALICE)?])?;
    let comm = CommPlan::one_cbit(Party::ALICE, Party::BOB, message, bob)?;
    Protocol::new(ResourceSpec::mes(), schedule, comm)
}

/// On-disk form of a [`Protocol`]. Each measurement outcome is listed as the
/// real orthonormal vectors spanning its projector; the message is an explicit
/// outcome → bit table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolDocument {
    pub resource: ResourceSpec,
    pub copies: usize,
    pub measurements: Vec<MeasurementDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<MessageDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementDocument {
    #[serde(default)]
    pub copy: usize,
    pub party: Party,
    pub subsystems: Vec<usize>,
    pub dims: Vec<usize>,
    pub outcomes: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageDocument {
    pub sender: Party,
    pub receiver: Party,
    pub bits: Vec<u8>,
    /// Receiver's measurement for bit 0 and bit 1.
    pub conditional: [MeasurementDocument; 2],
}

impl MeasurementDocument {
    fn from_measurement(copy: usize, m: &LocalMeasurement) -> Result<Self> {
        let outcomes = m
            .outcomes
            .iter()
            .map(|p| {
                p.vectors()
                    .iter()
                    .map(|v| {
                        // Rank-one outcomes may carry a global phase from diagonalization.
                        let phase = v
                            .iter()
                            .find(|z| z.norm() > 1e-9)
                            .map(|z| z.conj() / z.norm())
                            .unwrap_or(Complex64::new(1.0, 0.0));
                        v.iter()
                            .map(|z| {
                                let z = z * phase;
                                if z.im.abs() > 1e-12 {
                                    Err(Error::Format("measurement has complex vectors".into()))
                                } else {
                                    Ok(z.re)
                                }
                            })
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MeasurementDocument {
            copy,
            party: m.party,
            subsystems: m.subsystems.clone(),
            dims: m.local_dims().to_vec(),
            outcomes,
        })
    }

    fn to_measurement(&self) -> Result<LocalMeasurement> {
        LocalMeasurement::from_groups(self.party, self.subsystems.clone(), self.dims.clone(), &self.outcomes)
    }
}

impl Protocol {
    pub fn to_document(&self) -> Result<ProtocolDocument> {
        let mut measurements = Vec::new();
        for copy in 0..self.schedule.copies() {
            for m in self.schedule.steps(copy) {
                measurements.push(MeasurementDocument::from_measurement(copy, m)?);
            }
        }
        let message = match &self.comm {
            CommPlan::None => None,
            CommPlan::OneCbit(plan) => Some(MessageDocument {
                sender: plan.sender,
                receiver: plan.receiver,
                bits: plan.message.bits().to_vec(),
                conditional: [
                    MeasurementDocument::from_measurement(0, &plan.conditional[0])?,
                    MeasurementDocument::from_measurement(0, &plan.conditional[1])?,
                ],
            }),
        };
        Ok(ProtocolDocument {
            resource: self.resource,
            copies: self.schedule.copies(),
            measurements,
            message,
        })
    }

    pub fn from_document(doc: &ProtocolDocument) -> Result<Self> {
        let schedule = doc
            .measurements
            .iter()
            .try_fold(Schedule::new(doc.copies)?, |s, m| s.with(m.copy, m.to_measurement()?))?;
        let comm = match &doc.message {
            None => CommPlan::None,
            Some(msg) => CommPlan::one_cbit(
                msg.sender,
                msg.receiver,
                MessageMap::new(msg.bits.clone())?,
                [msg.conditional[0].to_measurement()?, msg.conditional[1].to_measurement()?],
            )?,
        };
        Protocol::new(doc.resource, schedule, comm)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document()?)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
