//! Constructors for the state families used throughout the reproductions and
//! for the shared entangled resource.
//!
//! Every two-qubit family lives on `2⊗2` with subsystem 0 owned by Alice and
//! subsystem 1 by Bob, and lists its states in a fixed order so transcript
//! tables stay comparable between runs.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::tensor::{Party, PureState, NORM_TOL};

/// `(cos θ, sin θ)`.
pub fn theta_ket(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

/// The real unit vector orthogonal to [`theta_ket`], equal to `|1⟩` at θ = 0.
pub fn theta_perp(theta: f64) -> [f64; 2] {
    [-theta.sin(), theta.cos()]
}

pub(crate) fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

fn axpy(alpha: f64, x: &[f64], beta: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| alpha * a + beta * b).collect()
}

fn two_qubit(amps: &[f64]) -> Result<PureState> {
    PureState::normalized_from_real(vec![2, 2], amps, vec![Party::ALICE, Party::BOB])
}

/// `(a, b)` with `a = √a2`, `b = √(1 − a2)`.
pub fn amplitudes_from_square(a2: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&a2) {
        return Err(Error::Constraint(format!("a² = {a2} outside [0, 1]")));
    }
    Ok((a2.sqrt(), (1.0 - a2).sqrt()))
}

/// The larger/smaller pair `(a, b)` with `a² + b² = 1` and product `ab`.
pub fn amplitudes_from_product(ab: f64) -> Result<(f64, f64)> {
    if !(ab > 0.0 && ab <= 0.5 + NORM_TOL) {
        return Err(Error::Constraint(format!("ab = {ab} outside (0, 1/2]")));
    }
    let disc = (1.0 - 4.0 * ab * ab).max(0.0).sqrt();
    amplitudes_from_square((1.0 + disc) / 2.0)
}

fn check_unit_pair(name: &str, x: f64, y: f64) -> Result<()> {
    if (x * x + y * y - 1.0).abs() > NORM_TOL {
        return Err(Error::Constraint(format!("{name}: squares sum to {}", x * x + y * y)));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0) {
        return Err(Error::Constraint(format!("{name} = {x} must be positive")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(-NORM_TOL..=std::f64::consts::FRAC_PI_2 + NORM_TOL).contains(&alpha) {
        return Err(Error::Constraint(format!("α = {alpha} outside [0, π/2]")));
    }
    Ok(())
}

/// Which two Bell states accompany the third state in a two-Bell ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TwoBellKind {
    /// `{φ⁺, φ⁻, a|01⟩ + b|10⟩}`
    PhiPair,
    /// `{ψ⁺, ψ⁻, a|00⟩ + b|11⟩}`
    PsiPair,
    /// `{φ⁺, ψ⁺, a φ⁻ + b ψ⁻}`
    Mixed,
}

impl TwoBellKind {
    pub const ALL: [TwoBellKind; 3] = [TwoBellKind::PhiPair, TwoBellKind::PsiPair, TwoBellKind::Mixed];
}

/// A state family and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// `|0⟩|0⟩, |0⟩|1⟩, |1⟩|0+1⟩, |1⟩|0−1⟩`.
    Eq1,
    /// General two-qubit product basis.
    Eq4 { alpha: f64, theta: f64 },
    /// Two orthogonal entangled states.
    Eq6 {
        alpha: f64,
        theta: f64,
        a1: f64,
        a2: f64,
        a3: f64,
        a4: f64,
    },
    /// One entangled and two product states.
    Eq7 { alpha: f64, theta: f64, a1: f64, a2: f64 },
    /// Four orthogonal nonmaximally entangled states. With `strict`, `a`, `c`
    /// and `d` must be pairwise distinct.
    Eq8 { a: f64, b: f64, c: f64, d: f64, strict: bool },
    /// `a|00⟩ + b|11⟩, b|00⟩ − a|11⟩`.
    Eq9 { a: f64, b: f64 },
    /// `φ⁺, φ⁻, ψ⁺, ψ⁻`.
    Bell,
    /// Two Bell states and a third orthogonal state.
    TwoBell { kind: TwoBellKind, a: f64, b: f64 },
    /// The nine-state `3⊗3` domino product basis.
    Domino,
}

impl Family {
    pub fn id(&self) -> &'static str {
        match self {
            Family::Eq1 => "eq1",
            Family::Eq4 { .. } => "eq4",
            Family::Eq6 { .. } => "eq6",
            Family::Eq7 { .. } => "eq7",
            Family::Eq8 { .. } => "eq8",
            Family::Eq9 { .. } => "eq9",
            Family::Bell => "bell",
            Family::TwoBell { .. } => "two-bell",
            Family::Domino => "domino-3x3",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    #[serde(flatten)]
    pub family: Family,
    /// Uniform when absent.
    #[serde(default)]
    pub priors: Option<Vec<f64>>,
}

impl From<Family> for FamilySpec {
    fn from(family: Family) -> Self {
        FamilySpec { family, priors: None }
    }
}

pub fn build_family(spec: &FamilySpec) -> Result<Ensemble> {
    let ensemble = match spec.family {
        Family::Eq1 => eq1(),
        Family::Eq4 { alpha, theta } => eq4(alpha, theta),
        Family::Eq6 { alpha, theta, a1, a2, a3, a4 } => eq6(alpha, theta, [a1, a2, a3, a4]),
        Family::Eq7 { alpha, theta, a1, a2 } => eq7(alpha, theta, a1, a2),
        Family::Eq8 { a, b, c, d, strict } => eq8(a, b, c, d, strict),
        Family::Eq9 { a, b } => eq9(a, b),
        Family::Bell => bell(),
        Family::TwoBell { kind, a, b } => two_bell(kind, a, b),
        Family::Domino => domino_basis(),
    }?;
    match &spec.priors {
        Some(priors) => ensemble.with_priors(priors.clone()),
        None => Ok(ensemble),
    }
}

fn labelled(states: Vec<PureState>, labels: &[&str]) -> Result<Ensemble> {
    Ensemble::uniform(states)?.with_labels(labels.iter().map(|s| s.to_string()).collect())
}

pub fn eq1() -> Result<Ensemble> {
    let h = FRAC_1_SQRT_2;
    labelled(
        vec![
            two_qubit(&[1.0, 0.0, 0.0, 0.0])?,
            two_qubit(&[0.0, 1.0, 0.0, 0.0])?,
            two_qubit(&[0.0, 0.0, h, h])?,
            two_qubit(&[0.0, 0.0, h, -h])?,
        ],
        &["psi1", "psi2", "psi3", "psi4"],
    )
}

/// Bob's vectors `|θ⟩, |θ′⟩, cos(α/2)|θ⟩ + sin(α/2)|θ′⟩, sin(α/2)|θ⟩ − cos(α/2)|θ′⟩`.
pub(crate) fn eq4_bob_vectors(alpha: f64, theta: f64) -> [[f64; 2]; 4] {
    let t = theta_ket(theta);
    let tp = theta_perp(theta);
    let (c, s) = ((alpha / 2.0).cos(), (alpha / 2.0).sin());
    let tilt = |x: f64, y: f64| [x * t[0] + y * tp[0], x * t[1] + y * tp[1]];
    [t, tp, tilt(c, s), tilt(s, -c)]
}

pub fn eq4(alpha: f64, theta: f64) -> Result<Ensemble> {
    check_alpha(alpha)?;
    let bob = eq4_bob_vectors(alpha, theta);
    labelled(
        vec![
            two_qubit(&kron(&[1.0, 0.0], &bob[0]))?,
            two_qubit(&kron(&[1.0, 0.0], &bob[1]))?,
            two_qubit(&kron(&[0.0, 1.0], &bob[2]))?,
            two_qubit(&kron(&[0.0, 1.0], &bob[3]))?,
        ],
        &["psi1", "psi2", "psi3", "psi4"],
    )
}

fn eq6_states(alpha: f64, theta: f64, a: [f64; 4]) -> (Vec<f64>, Vec<f64>) {
    let bob = eq4_bob_vectors(alpha, theta);
    let first = axpy(a[0], &kron(&[1.0, 0.0], &bob[0]), a[1], &kron(&[0.0, 1.0], &bob[2]));
    let second = axpy(a[2], &kron(&[1.0, 0.0], &bob[1]), a[3], &kron(&[0.0, 1.0], &bob[3]));
    (first, second)
}

pub fn eq6(alpha: f64, theta: f64, a: [f64; 4]) -> Result<Ensemble> {
    check_alpha(alpha)?;
    for (k, &x) in a.iter().enumerate() {
        check_positive(&format!("a{}", k + 1), x)?;
    }
    check_unit_pair("a1, a2", a[0], a[1])?;
    check_unit_pair("a3, a4", a[2], a[3])?;
    let (first, second) = eq6_states(alpha, theta, a);
    labelled(vec![two_qubit(&first)?, two_qubit(&second)?], &["psi1bar", "psi2bar"])
}

pub fn eq7(alpha: f64, theta: f64, a1: f64, a2: f64) -> Result<Ensemble> {
    check_alpha(alpha)?;
    check_positive("a1", a1)?;
    check_positive("a2", a2)?;
    check_unit_pair("a1, a2", a1, a2)?;
    let bob = eq4_bob_vectors(alpha, theta);
    let (first, _) = eq6_states(alpha, theta, [a1, a2, 1.0, 0.0]);
    labelled(
        vec![
            two_qubit(&first)?,
            two_qubit(&kron(&[1.0, 0.0], &bob[1]))?,
            two_qubit(&kron(&[0.0, 1.0], &bob[3]))?,
        ],
        &["psi1bar", "psi2tilde", "psi4tilde"],
    )
}

pub fn eq8(a: f64, b: f64, c: f64, d: f64, strict: bool) -> Result<Ensemble> {
    for (name, x) in [("a", a), ("b", b), ("c", c), ("d", d)] {
        if x == 0.0 || !x.is_finite() {
            return Err(Error::Constraint(format!("{name} must be a nonzero real")));
        }
    }
    if !(a > b) {
        return Err(Error::Constraint(format!("a > b required (a = {a}, b = {b})")));
    }
    if !(c > d) {
        return Err(Error::Constraint(format!("c > d required (c = {c}, d = {d})")));
    }
    check_unit_pair("a, b", a, b)?;
    check_unit_pair("c, d", c, d)?;
    // Given a > b and c > d on the unit circle, a = d would force c = b < a = d,
    // so only the a ≠ c check can fire here.
    if strict {
        for (name, x, y) in [("a ≠ c", a, c), ("a ≠ d", a, d), ("c ≠ d", c, d)] {
            if (x - y).abs() <= NORM_TOL {
                return Err(Error::Constraint(format!("{name} required ({x} vs {y})")));
            }
        }
    }
    labelled(
        vec![
            two_qubit(&[a, 0.0, 0.0, b])?,
            two_qubit(&[b, 0.0, 0.0, -a])?,
            two_qubit(&[0.0, c, d, 0.0])?,
            two_qubit(&[0.0, d, -c, 0.0])?,
        ],
        &["phi1", "phi2", "phi3", "phi4"],
    )
}

pub fn eq9(a: f64, b: f64) -> Result<Ensemble> {
    check_positive("b", b)?;
    if !(a > b) {
        return Err(Error::Constraint(format!("a > b required (a = {a}, b = {b})")));
    }
    check_unit_pair("a, b", a, b)?;
    labelled(
        vec![two_qubit(&[a, 0.0, 0.0, b])?, two_qubit(&[b, 0.0, 0.0, -a])?],
        &["phi1", "phi2"],
    )
}

/// Bell vectors in the order `φ⁺, φ⁻, ψ⁺, ψ⁻`.
pub fn bell_vectors() -> [[f64; 4]; 4] {
    let h = FRAC_1_SQRT_2;
    [
        [h, 0.0, 0.0, h],
        [h, 0.0, 0.0, -h],
        [0.0, h, h, 0.0],
        [0.0, h, -h, 0.0],
    ]
}

pub fn bell() -> Result<Ensemble> {
    let states = bell_vectors()
        .iter()
        .map(|v| two_qubit(v))
        .collect::<Result<Vec<_>>>()?;
    labelled(states, &["phi+", "phi-", "psi+", "psi-"])
}

pub fn two_bell(kind: TwoBellKind, a: f64, b: f64) -> Result<Ensemble> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    check_unit_pair("a, b", a, b)?;
    let [pp, pm, sp, sm] = bell_vectors();
    let (states, labels) = match kind {
        TwoBellKind::PhiPair => ([pp.to_vec(), pm.to_vec(), vec![0.0, a, b, 0.0]], ["phi+", "phi-", "chi"]),
        TwoBellKind::PsiPair => ([sp.to_vec(), sm.to_vec(), vec![a, 0.0, 0.0, b]], ["psi+", "psi-", "chi"]),
        TwoBellKind::Mixed => ([pp.to_vec(), sp.to_vec(), axpy(a, &pm, b, &sm)], ["phi+", "psi+", "chi"]),
    };
    let states = states.iter().map(|v| two_qubit(v)).collect::<Result<Vec<_>>>()?;
    labelled(states, &labels)
}

/// Nine orthonormal product states on `3⊗3` that cannot be perfectly
/// distinguished by LOCC: `|1⟩|1⟩, |0⟩|0±1⟩, |2⟩|1±2⟩, |1±2⟩|0⟩, |0±1⟩|2⟩`.
pub fn domino_basis() -> Result<Ensemble> {
    let h = FRAC_1_SQRT_2;
    let e = |k: usize| {
        let mut v = [0.0; 3];
        v[k] = 1.0;
        v
    };
    let sup = |j: usize, k: usize, sign: f64| {
        let mut v = [0.0; 3];
        v[j] = h;
        v[k] = sign * h;
        v
    };
    let pairs: [([f64; 3], [f64; 3]); 9] = [
        (e(1), e(1)),
        (e(0), sup(0, 1, 1.0)),
        (e(0), sup(0, 1, -1.0)),
        (e(2), sup(1, 2, 1.0)),
        (e(2), sup(1, 2, -1.0)),
        (sup(1, 2, 1.0), e(0)),
        (sup(1, 2, -1.0), e(0)),
        (sup(0, 1, 1.0), e(2)),
        (sup(0, 1, -1.0), e(2)),
    ];
    let own = vec![Party::ALICE, Party::BOB];
    let states = pairs
        .iter()
        .map(|(x, y)| PureState::from_real(vec![3, 3], &kron(x, y), own.clone()))
        .collect::<Result<Vec<_>>>()?;
    labelled(
        states,
        &["d1", "d2", "d3", "d4", "d5", "d6", "d7", "d8", "d9"],
    )
}

/// Shared two-qubit resource state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResourceKind {
    None,
    /// `a|00⟩ + b|11⟩` with `a > b > 0`.
    Nmes { a: f64, b: f64 },
    /// `(|00⟩ + |11⟩)/√2`.
    Mes,
}

/// A resource state and the two parties holding its qubits (first qubit to
/// `parties[0]`). The resource is appended after the ensemble's subsystems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceSpec {
    #[serde(flatten)]
    pub kind: ResourceKind,
    pub parties: [Party; 2],
}

impl ResourceSpec {
    pub fn none() -> Self {
        ResourceSpec {
            kind: ResourceKind::None,
            parties: [Party::ALICE, Party::BOB],
        }
    }

    pub fn mes() -> Self {
        ResourceSpec {
            kind: ResourceKind::Mes,
            parties: [Party::ALICE, Party::BOB],
        }
    }

    pub fn nmes(a: f64, b: f64) -> Result<Self> {
        check_positive("b", b)?;
        if !(a > b) {
            return Err(Error::Constraint(format!("a > b required (a = {a}, b = {b})")));
        }
        check_unit_pair("a, b", a, b)?;
        Ok(ResourceSpec {
            kind: ResourceKind::Nmes { a, b },
            parties: [Party::ALICE, Party::BOB],
        })
    }

    /// `a|00⟩ + b|11⟩` with `a² = a2`; `a2 = 1/2` gives the MES.
    pub fn from_square(a2: f64) -> Result<Self> {
        if (a2 - 0.5).abs() <= NORM_TOL {
            return Ok(Self::mes());
        }
        let (a, b) = amplitudes_from_square(a2)?;
        Self::nmes(a, b)
    }

    /// The resource with negativity `ab`; `ab = 1/2` gives the MES.
    pub fn from_product(ab: f64) -> Result<Self> {
        if (ab - 0.5).abs() <= NORM_TOL {
            return Ok(Self::mes());
        }
        let (a, b) = amplitudes_from_product(ab)?;
        Self::nmes(a, b)
    }

    pub fn with_parties(mut self, parties: [Party; 2]) -> Self {
        self.parties = parties;
        self
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, ResourceKind::None)
    }

    /// Schmidt coefficients `(a, b)`.
    pub fn amplitudes(&self) -> Option<(f64, f64)> {
        match self.kind {
            ResourceKind::None => None,
            ResourceKind::Nmes { a, b } => Some((a, b)),
            ResourceKind::Mes => Some((FRAC_1_SQRT_2, FRAC_1_SQRT_2)),
        }
    }

    pub fn state(&self) -> Option<PureState> {
        let (a, b) = self.amplitudes()?;
        Some(
            PureState::from_real(vec![2, 2], &[a, 0.0, 0.0, b], self.parties.to_vec())
                .expect("validated amplitudes"),
        )
    }
}
