//! Dense state vectors over an ordered list of subsystems, projectors acting on
//! a subset of those subsystems, and bipartite entanglement quantities.
//!
//! Amplitudes are stored row-major: subsystem 0 is the most significant digit
//! of the flat index, so `|ab⟩` in `2⊗2` lives at index `2a + b`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for normalization, orthogonality and idempotence checks.
pub const NORM_TOL: f64 = 1e-9;
/// Probabilities at or below this are treated as zero.
pub const ZERO_PROB: f64 = 1e-12;
/// Largest amplitude vector accepted by [`PureState`].
pub const MAX_AMPLITUDES: usize = 4096;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// A spatially separated party, labelled `A`, `B`, `C`, ...
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Party(u8);

impl Party {
    pub const ALICE: Party = Party(0);
    pub const BOB: Party = Party(1);
    pub const CHARLIE: Party = Party(2);

    pub fn new(index: usize) -> Result<Self> {
        if index < 26 {
            Ok(Party(index as u8))
        } else {
            Err(Error::InvalidState(format!("party index {index} exceeds 25")))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn label(self) -> char {
        (b'A' + self.0) as char
    }

    pub fn from_label(label: &str) -> Result<Self> {
        let mut chars = label.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii_uppercase() => Ok(Party(c as u8 - b'A')),
            _ => Err(Error::Format(format!("invalid party label {label:?}"))),
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl TryFrom<String> for Party {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Party::from_label(&value)
    }
}

impl From<Party> for String {
    fn from(value: Party) -> Self {
        value.label().to_string()
    }
}

/// A pure state on `d₁ ⊗ d₂ ⊗ …` with a party owning each subsystem.
///
/// Values returned by the public constructors are normalized within
/// [`NORM_TOL`]. The only unnormalized states are the post-measurement vectors
/// returned by [`apply_local_projector`] for zero-probability outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
    ownership: Vec<Party>,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amps: Vec<Complex64>, ownership: Vec<Party>) -> Result<Self> {
        let state = Self::unchecked_norm(dims, amps, ownership)?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn from_real(dims: Vec<usize>, amps: &[f64], ownership: Vec<Party>) -> Result<Self> {
        Self::new(dims, amps.iter().map(|&x| Complex64::new(x, 0.0)).collect(), ownership)
    }

    /// Builds a state from real amplitudes given up to normalization.
    pub fn normalized_from_real(
        dims: Vec<usize>,
        amps: &[f64],
        ownership: Vec<Party>,
    ) -> Result<Self> {
        let state = Self::unchecked_norm(
            dims,
            amps.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            ownership,
        )?;
        state
            .normalized()
            .ok_or_else(|| Error::InvalidState("zero vector".into()))
    }

    /// Computational basis state `|digits⟩`.
    pub fn basis(dims: Vec<usize>, digits: &[usize], ownership: Vec<Party>) -> Result<Self> {
        if digits.len() != dims.len() {
            return Err(Error::DimsMismatch {
                expected: dims,
                found: vec![digits.len()],
            });
        }
        let mut index = 0;
        for (&digit, &d) in digits.iter().zip(&dims) {
            if digit >= d {
                return Err(Error::InvalidState(format!("digit {digit} out of range for dimension {d}")));
            }
            index = index * d + digit;
        }
        let mut amps = vec![ZERO; dims.iter().product()];
        amps[index] = ONE;
        Self::new(dims, amps, ownership)
    }

    pub(crate) fn unchecked_norm(
        dims: Vec<usize>,
        amps: Vec<Complex64>,
        ownership: Vec<Party>,
    ) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidState("no subsystems".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidState(format!("subsystem dimension {d} < 2")));
        }
        let total = checked_product(&dims)?;
        if amps.len() != total {
            return Err(Error::InvalidState(format!(
                "{} amplitudes for dims {:?} (expected {total})",
                amps.len(),
                dims
            )));
        }
        if ownership.len() != dims.len() {
            return Err(Error::InvalidState(format!(
                "ownership lists {} subsystems, dims list {}",
                ownership.len(),
                dims.len()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        Ok(PureState { dims, amps, ownership })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn ownership(&self) -> &[Party] {
        &self.ownership
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_real(&self) -> bool {
        self.amps.iter().all(|a| a.im.abs() <= NORM_TOL)
    }

    /// Real parts of the amplitudes.
    pub fn real_amps(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.re).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.dims != other.dims {
            return Err(Error::DimsMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|` equal to 1 within `tol`: the states agree up to a global phase.
    pub fn equals_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        match self.inner(other) {
            Ok(ip) => (ip.norm() - 1.0).abs() <= tol && (self.norm_sqr() - 1.0).abs() <= tol,
            Err(_) => false,
        }
    }

    pub fn normalized(&self) -> Option<PureState> {
        let norm = self.norm_sqr().sqrt();
        if norm <= ZERO_PROB {
            return None;
        }
        Some(PureState {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|a| a / norm).collect(),
            ownership: self.ownership.clone(),
        })
    }

    pub fn with_ownership(mut self, ownership: Vec<Party>) -> Result<Self> {
        if ownership.len() != self.dims.len() {
            return Err(Error::InvalidState(format!(
                "ownership lists {} subsystems, state has {}",
                ownership.len(),
                self.dims.len()
            )));
        }
        self.ownership = ownership;
        Ok(self)
    }

    /// Subsystem indices owned by `party`, ascending.
    pub fn subsystems_of(&self, party: Party) -> Vec<usize> {
        subsystems_of(&self.ownership, party)
    }

    /// Distinct parties in label order.
    pub fn parties(&self) -> Vec<Party> {
        parties_of(&self.ownership)
    }
}

pub(crate) fn subsystems_of(ownership: &[Party], party: Party) -> Vec<usize> {
    ownership
        .iter()
        .enumerate()
        .filter(|(_, &p)| p == party)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn parties_of(ownership: &[Party]) -> Vec<Party> {
    let mut parties = ownership.to_vec();
    parties.sort();
    parties.dedup();
    parties
}

fn checked_product(dims: &[usize]) -> Result<usize> {
    let mut total: usize = 1;
    for &d in dims {
        total = total
            .checked_mul(d)
            .filter(|&t| t <= MAX_AMPLITUDES)
            .ok_or_else(|| {
                Error::Unsupported(format!("dims {dims:?} exceed {MAX_AMPLITUDES} amplitudes"))
            })?;
    }
    Ok(total)
}

/// Kronecker product of the factors, concatenating dims and ownership.
pub fn tensor(states: &[PureState]) -> Result<PureState> {
    let (first, rest) = states.split_first().ok_or(Error::NoFactors)?;
    let mut dims = first.dims.clone();
    let mut amps = first.amps.clone();
    let mut ownership = first.ownership.clone();
    for s in rest {
        dims.extend_from_slice(&s.dims);
        checked_product(&dims)?;
        ownership.extend_from_slice(&s.ownership);
        amps = amps
            .iter()
            .flat_map(|a| s.amps.iter().map(move |b| a * b))
            .collect();
    }
    PureState::new(dims, amps, ownership)
}

/// Orthogonal projector on the tensor product of `dims`, kept together with an
/// orthonormal set of vectors spanning its range.
#[derive(Clone, Debug)]
pub struct Projector {
    dims: Vec<usize>,
    vectors: Vec<DVector<Complex64>>,
    matrix: DMatrix<Complex64>,
}

impl Projector {
    /// Projector onto the span of `vectors`, which must be orthonormal.
    pub fn from_vectors(dims: Vec<usize>, vectors: Vec<DVector<Complex64>>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidProjector(format!("bad dims {dims:?}")));
        }
        if vectors.is_empty() {
            return Err(Error::InvalidProjector("rank 0".into()));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::InvalidProjector(format!(
                "vector of length {} in a {dim}-dimensional space",
                v.len()
            )));
        }
        for (j, u) in vectors.iter().enumerate() {
            for (k, v) in vectors.iter().enumerate().skip(j) {
                let ip = u.dotc(v);
                let target = if j == k { 1.0 } else { 0.0 };
                if (ip - Complex64::new(target, 0.0)).norm() > NORM_TOL {
                    return Err(Error::InvalidProjector(format!(
                        "generating vectors {j} and {k} have inner product {ip}"
                    )));
                }
            }
        }
        let mut matrix = DMatrix::zeros(dim, dim);
        for v in &vectors {
            matrix += v * v.adjoint();
        }
        Ok(Projector { dims, vectors, matrix })
    }

    pub fn from_real_vectors(dims: Vec<usize>, vectors: &[Vec<f64>]) -> Result<Self> {
        let vectors = vectors
            .iter()
            .map(|v| DVector::from_iterator(v.len(), v.iter().map(|&x| Complex64::new(x, 0.0))))
            .collect();
        Self::from_vectors(dims, vectors)
    }

    /// Validates a Hermitian idempotent matrix and recovers a generating set.
    pub fn from_matrix(dims: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidProjector(format!(
                "{}x{} matrix for dims {dims:?}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if max_abs(&(&matrix - matrix.adjoint())) > NORM_TOL {
            return Err(Error::InvalidProjector("not Hermitian".into()));
        }
        if max_abs(&(&matrix * &matrix - &matrix)) > NORM_TOL {
            return Err(Error::InvalidProjector("not idempotent".into()));
        }
        let trace = matrix.trace().re;
        let rank = trace.round();
        if (trace - rank).abs() > NORM_TOL || rank < 1.0 {
            return Err(Error::InvalidProjector(format!("trace {trace} is not a positive integer")));
        }
        let eigen = matrix.clone().symmetric_eigen();
        let vectors: Vec<DVector<Complex64>> = eigen
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &lambda)| lambda > 0.5)
            .map(|(k, _)| eigen.eigenvectors.column(k).into_owned())
            .collect();
        if vectors.len() != rank as usize {
            return Err(Error::InvalidProjector("eigenvalue count disagrees with trace".into()));
        }
        Ok(Projector { dims, vectors, matrix })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn vectors(&self) -> &[DVector<Complex64>] {
        &self.vectors
    }

    pub fn is_real(&self) -> bool {
        self.vectors
            .iter()
            .all(|v| v.iter().all(|z| z.im.abs() <= NORM_TOL))
    }

    /// `U P U†`.
    pub fn conjugated(&self, unitary: &DMatrix<Complex64>) -> Result<Self> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimsMismatch {
                expected: vec![self.dim(), self.dim()],
                found: vec![unitary.nrows(), unitary.ncols()],
            });
        }
        Self::from_vectors(
            self.dims.clone(),
            self.vectors.iter().map(|v| unitary * v).collect(),
        )
    }
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Post-measurement vector and Born probability of one outcome.
#[derive(Clone, Debug)]
pub struct Projection {
    /// The projected state, renormalized when `probability > ZERO_PROB`.
    pub state: PureState,
    pub probability: f64,
}

/// Born rule for a projector acting on the listed subsystems (in the listed
/// order) and the identity elsewhere.
pub fn apply_local_projector(
    state: &PureState,
    proj: &Projector,
    subsystems: &[usize],
) -> Result<Projection> {
    check_subsystems(state.dims(), subsystems)?;
    let local: Vec<usize> = subsystems.iter().map(|&s| state.dims[s]).collect();
    if local != proj.dims {
        return Err(Error::DimsMismatch {
            expected: proj.dims.clone(),
            found: local,
        });
    }
    let amps = apply_operator(&state.amps, &state.dims, subsystems, &proj.matrix);
    let probability: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let projected = PureState {
        dims: state.dims.clone(),
        amps,
        ownership: state.ownership.clone(),
    };
    let state = if probability > ZERO_PROB {
        projected.normalized().expect("nonzero norm")
    } else {
        projected
    };
    Ok(Projection { state, probability })
}

/// Applies a local unitary (or any square operator) to the listed subsystems.
pub fn apply_local_unitary(
    state: &PureState,
    unitary: &DMatrix<Complex64>,
    subsystems: &[usize],
) -> Result<PureState> {
    check_subsystems(state.dims(), subsystems)?;
    let dim: usize = subsystems.iter().map(|&s| state.dims[s]).product();
    if unitary.nrows() != dim || unitary.ncols() != dim {
        return Err(Error::DimsMismatch {
            expected: vec![dim, dim],
            found: vec![unitary.nrows(), unitary.ncols()],
        });
    }
    let amps = apply_operator(&state.amps, &state.dims, subsystems, unitary);
    PureState::new(state.dims.clone(), amps, state.ownership.clone())
}

pub(crate) fn check_subsystems(dims: &[usize], subsystems: &[usize]) -> Result<()> {
    if subsystems.is_empty() {
        return Err(Error::InvalidMeasurement("empty subsystem list".into()));
    }
    for (k, &s) in subsystems.iter().enumerate() {
        if s >= dims.len() {
            return Err(Error::SubsystemOutOfRange {
                index: s,
                count: dims.len(),
            });
        }
        if subsystems[..k].contains(&s) {
            return Err(Error::InvalidMeasurement(format!("subsystem {s} listed twice")));
        }
    }
    Ok(())
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    strides
}

/// Flat-index offsets of every local basis vector of `subsystems`, in
/// row-major order over the listed subsystems.
fn local_offsets(dims: &[usize], strides: &[usize], subsystems: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for &s in subsystems {
        offsets = offsets
            .iter()
            .flat_map(|&o| (0..dims[s]).map(move |digit| o + digit * strides[s]))
            .collect();
    }
    offsets
}

/// `(op on subsystems) ⊗ I` applied to a flat amplitude vector. Callers have
/// checked ranges and dimensions.
pub(crate) fn apply_operator(
    amps: &[Complex64],
    dims: &[usize],
    subsystems: &[usize],
    op: &DMatrix<Complex64>,
) -> Vec<Complex64> {
    let st = strides(dims);
    let local = local_offsets(dims, &st, subsystems);
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !subsystems.contains(k)).collect();
    let bases = local_offsets(dims, &st, &rest);
    let d = local.len();
    let mut out = vec![ZERO; amps.len()];
    let mut gathered = vec![ZERO; d];
    for &base in &bases {
        for (g, &off) in gathered.iter_mut().zip(&local) {
            *g = amps[base + off];
        }
        for (row, &off) in local.iter().enumerate() {
            let mut acc = ZERO;
            for (col, g) in gathered.iter().enumerate() {
                acc += op[(row, col)] * g;
            }
            out[base + off] = acc;
        }
    }
    out
}

/// A split of the subsystems into two nonempty complementary groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartitionSplit {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl BipartitionSplit {
    pub fn new(mut left: Vec<usize>, mut right: Vec<usize>, subsystem_count: usize) -> Result<Self> {
        left.sort_unstable();
        right.sort_unstable();
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidSplit("both sides must be nonempty".into()));
        }
        let mut all: Vec<usize> = left.iter().chain(&right).copied().collect();
        all.sort_unstable();
        if all != (0..subsystem_count).collect::<Vec<_>>() {
            return Err(Error::InvalidSplit(format!(
                "{left:?} | {right:?} is not a partition of {subsystem_count} subsystems"
            )));
        }
        Ok(BipartitionSplit { left, right })
    }

    /// `left` against everything else.
    pub fn from_left(left: Vec<usize>, subsystem_count: usize) -> Result<Self> {
        let right = (0..subsystem_count).filter(|k| !left.contains(k)).collect();
        Self::new(left, right, subsystem_count)
    }

    /// Subsystems of `party` against the rest of `state`.
    pub fn for_party(state: &PureState, party: Party) -> Result<Self> {
        Self::from_left(state.subsystems_of(party), state.dims.len())
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    fn check(&self, state: &PureState) -> Result<()> {
        if self.left.len() + self.right.len() != state.dims.len() {
            return Err(Error::InvalidSplit(format!(
                "split covers {} subsystems, state has {}",
                self.left.len() + self.right.len(),
                state.dims.len()
            )));
        }
        Ok(())
    }
}

/// Coefficient matrix `M[l, r]` of the state across the split.
fn coefficient_matrix(state: &PureState, split: &BipartitionSplit) -> DMatrix<Complex64> {
    let st = strides(&state.dims);
    let rows = local_offsets(&state.dims, &st, &split.left);
    let cols = local_offsets(&state.dims, &st, &split.right);
    DMatrix::from_fn(rows.len(), cols.len(), |l, r| state.amps[rows[l] + cols[r]])
}

/// Schmidt coefficients across the split, in descending order.
pub fn schmidt_coefficients(state: &PureState, split: &BipartitionSplit) -> Result<Vec<f64>> {
    split.check(state)?;
    let svd = coefficient_matrix(state, split).svd(false, false);
    let mut values: Vec<f64> = svd.singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Number of Schmidt coefficients above `tol`.
pub fn schmidt_rank(state: &PureState, split: &BipartitionSplit, tol: f64) -> Result<usize> {
    Ok(schmidt_coefficients(state, split)?
        .into_iter()
        .filter(|&s| s > tol)
        .count())
}

/// Leading Schmidt vector on the left side of the split. For a product state
/// this is the left factor up to phase.
pub(crate) fn left_factor(state: &PureState, split: &BipartitionSplit) -> Result<DVector<Complex64>> {
    split.check(state)?;
    let svd = coefficient_matrix(state, split).svd(true, false);
    let u = svd.u.expect("requested U");
    let best = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    Ok(u.column(best).into_owned())
}

/// Negativity: the absolute sum of the negative eigenvalues of the partial
/// transpose of `|ψ⟩⟨ψ|` taken on the right side of the split.
pub fn negativity(state: &PureState, split: &BipartitionSplit) -> Result<f64> {
    split.check(state)?;
    let m = coefficient_matrix(state, split);
    let (dl, dr) = (m.nrows(), m.ncols());
    let n = dl * dr;
    if n > 1024 {
        return Err(Error::Unsupported(format!("negativity of a {n}-dimensional state")));
    }
    // ρ^{T_R}[(l, r), (l', r')] = ρ[(l, r'), (l', r)] = M[l, r'] · conj(M[l', r])
    let pt = DMatrix::from_fn(n, n, |row, col| {
        let (l, r) = (row / dr, row % dr);
        let (lp, rp) = (col / dr, col % dr);
        m[(l, rp)] * m[(lp, r)].conj()
    });
    let eigenvalues = pt.symmetric_eigenvalues();
    Ok(eigenvalues.iter().filter(|&&x| x < 0.0).map(|x| -x).sum())
}
