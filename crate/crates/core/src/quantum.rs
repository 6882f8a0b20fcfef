//! Surface Hilbert space.
//!
//! Basis index convention: `index = Σ b_i 2^i`, where `b_i` is the field value
//! on the link cut at slot `i`. A pair `(i, i+1)` has local index
//! `2·b_i + b_{i+1}`; the same convention labels the rows (outgoing `L,R`)
//! and columns (ingoing `R,L`) of an R-matrix, since the outgoing links take
//! over the slots of the ingoing ones.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Allowed drift of `‖ψ‖²` from 1.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Allowed deviation of `U†U` from the identity.
pub const UNITARY_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    slots: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|b_0 b_1 ... b_{2N-1}⟩` with `bits[i]` the value at slot `i`.
    pub fn basis(bits: &[u8]) -> Result<Self> {
        check_slot_count(bits.len())?;
        let mut index = 0usize;
        for (slot, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(Error::InvalidState(format!("bit value {b} at slot {slot}")));
            }
            index |= (b as usize) << slot;
        }
        let mut amplitudes = vec![ZERO; 1 << bits.len()];
        amplitudes[index] = ONE;
        Ok(Self {
            slots: bits.len(),
            amplitudes,
        })
    }

    pub fn zero(slots: usize) -> Result<Self> {
        Self::basis(&vec![0; slots])
    }

    /// Tensor product of per-slot qubit states `(c0, c1)`, normalized.
    pub fn product(qubits: &[[Complex64; 2]]) -> Result<Self> {
        check_slot_count(qubits.len())?;
        let mut amplitudes = vec![ONE; 1 << qubits.len()];
        for (index, amp) in amplitudes.iter_mut().enumerate() {
            for (slot, q) in qubits.iter().enumerate() {
                *amp *= q[(index >> slot) & 1];
            }
        }
        Self::from_amplitudes(qubits.len(), amplitudes)
    }

    /// Normalizes an explicit amplitude list of length `2^slots`.
    pub fn from_amplitudes(slots: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_slot_count(slots)?;
        if amplitudes.len() != 1 << slots {
            return Err(Error::InvalidState(format!(
                "expected {} amplitudes for {slots} slots, got {}",
                1usize << slots,
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("state is not normalizable".into()));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self { slots, amplitudes })
    }

    /// Amplitudes taken verbatim; the caller vouches for normalization.
    pub(crate) fn from_raw(slots: usize, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << slots);
        Self { slots, amplitudes }
    }

    /// Haar-random state.
    pub fn random<R: Rng + ?Sized>(slots: usize, rng: &mut R) -> Result<Self> {
        check_slot_count(slots)?;
        let amplitudes = (0..1usize << slots)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::from_amplitudes(slots, amplitudes)
    }

    pub fn slot_count(&self) -> usize {
        self.slots
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Born weight of a basis configuration.
    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NormDrift(n));
        }
        Ok(())
    }

    pub fn max_abs_difference(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_pair(&self, pair: (usize, usize)) -> Result<()> {
        let (first, second) = pair;
        if first >= self.slots || second != (first + 1) % self.slots || first == second {
            return Err(Error::NotAdjacent { first, second });
        }
        Ok(())
    }

    /// Applies `u` on the pair in place and returns the pair marginals
    /// `P(b_i, b_{i+1})` of the result. Fails if the norm has drifted.
    pub fn apply_unitary_in_place(&mut self, pair: (usize, usize), u: &TwoQubitUnitary) -> Result<[f64; 4]> {
        self.check_pair(pair)?;
        let marginals = apply_local(&mut self.amplitudes, pair, &u.entries);
        let total: f64 = marginals.iter().sum();
        if (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NormDrift(total));
        }
        Ok(marginals)
    }

    /// Applies `u` without the norm check, for unnormalized operator products.
    pub(crate) fn apply_unitary_unchecked(&mut self, pair: (usize, usize), u: &TwoQubitUnitary) -> Result<()> {
        self.check_pair(pair)?;
        apply_local(&mut self.amplitudes, pair, &u.entries);
        Ok(())
    }

    /// `P(b_i, b_{i+1})` indexed by `2·b_i + b_{i+1}`.
    pub fn pair_marginals(&self, pair: (usize, usize)) -> Result<[f64; 4]> {
        self.check_pair(pair)?;
        let (i, j) = pair;
        let mut out = [0.0; 4];
        for (index, a) in self.amplitudes.iter().enumerate() {
            out[2 * ((index >> i) & 1) + ((index >> j) & 1)] += a.norm_sqr();
        }
        Ok(out)
    }

    /// Multiplies every amplitude by `factors[2·b_i + b_{i+1}]`.
    pub(crate) fn scale_pair(&mut self, pair: (usize, usize), factors: [f64; 4]) {
        let (i, j) = pair;
        for (index, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= factors[2 * ((index >> i) & 1) + ((index >> j) & 1)];
        }
    }
}

fn check_slot_count(slots: usize) -> Result<()> {
    if slots == 0 || slots % 2 != 0 || slots > 60 {
        return Err(Error::InvalidState(format!("slot count {slots} is not 2N with 1 ≤ N ≤ 30")));
    }
    Ok(())
}

/// Applies a 4×4 matrix on bits `pair` of an amplitude vector, returning the
/// squared-magnitude marginals of the result on that pair.
pub(crate) fn apply_local(amps: &mut [Complex64], pair: (usize, usize), m: &[[Complex64; 4]; 4]) -> [f64; 4] {
    let (i, j) = pair;
    let (bi, bj) = (1usize << i, 1usize << j);
    let mask = bi | bj;
    let offsets = [0, bj, bi, bi | bj];
    let mut marginals = [0.0; 4];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        let v = [
            amps[base + offsets[0]],
            amps[base + offsets[1]],
            amps[base + offsets[2]],
            amps[base + offsets[3]],
        ];
        for (row, off) in offsets.iter().enumerate() {
            let r = &m[row];
            let out = r[0] * v[0] + r[1] * v[1] + r[2] * v[2] + r[3] * v[3];
            marginals[row] += out.norm_sqr();
            amps[base + off] = out;
        }
    }
    marginals
}

pub fn apply_unitary(psi: &StateVector, pair: (usize, usize), u: &TwoQubitUnitary) -> Result<StateVector> {
    let mut out = psi.clone();
    out.apply_unitary_in_place(pair, u)?;
    Ok(out)
}

/// A unitary R-matrix: rows are the outgoing `(L, R)` pair, columns the
/// ingoing `(R, L)` pair, each indexed `2·(first slot) + (second slot)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitUnitary {
    entries: [[Complex64; 4]; 4],
}

impl TwoQubitUnitary {
    pub fn new(entries: [[Complex64; 4]; 4]) -> Result<Self> {
        let candidate = Self { entries };
        let deviation = candidate.unitarity_deviation();
        if !(deviation <= UNITARY_TOLERANCE) {
            return Err(Error::NotUnitary(deviation));
        }
        Ok(candidate)
    }

    pub fn identity() -> Self {
        let mut entries = [[ZERO; 4]; 4];
        for (k, row) in entries.iter_mut().enumerate() {
            row[k] = ONE;
        }
        Self { entries }
    }

    /// Exchanges the values of the two slots.
    pub fn swap() -> Self {
        let mut entries = [[ZERO; 4]; 4];
        entries[0][0] = ONE;
        entries[1][2] = ONE;
        entries[2][1] = ONE;
        entries[3][3] = ONE;
        Self { entries }
    }

    /// Haar-random unitary: Gram-Schmidt on a complex Gaussian matrix.
    pub fn haar_random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut cols = [[ZERO; 4]; 4];
            for col in cols.iter_mut() {
                for z in col.iter_mut() {
                    *z = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                }
            }
            if let Some(entries) = gram_schmidt(cols) {
                return Self { entries };
            }
        }
    }

    pub fn entries(&self) -> &[[Complex64; 4]; 4] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let mut entries = [[ZERO; 4]; 4];
        for (r, row) in entries.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = self.entries[c][r].conj();
            }
        }
        Self { entries }
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = ZERO;
                for k in 0..4 {
                    acc += self.entries[k][r].conj() * self.entries[k][c];
                }
                let target = if r == c { ONE } else { ZERO };
                let d = (acc - target).norm();
                if d.is_nan() {
                    return f64::NAN;
                }
                worst = worst.max(d);
            }
        }
        worst
    }
}

fn gram_schmidt(cols: [[Complex64; 4]; 4]) -> Option<[[Complex64; 4]; 4]> {
    let mut q: Vec<[Complex64; 4]> = Vec::with_capacity(4);
    for mut v in cols {
        for _ in 0..2 {
            for e in &q {
                let proj: Complex64 = e.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for k in 0..4 {
                    v[k] -= proj * e[k];
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return None;
        }
        for z in v.iter_mut() {
            *z /= norm;
        }
        q.push(v);
    }
    let mut entries = [[ZERO; 4]; 4];
    for (c, col) in q.iter().enumerate() {
        for r in 0..4 {
            entries[r][c] = col[r];
        }
    }
    Some(entries)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpSpec {
    x: f64,
}

impl JumpSpec {
    pub fn new(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidJump(x));
        }
        Ok(Self { x })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn factor(&self, alpha: u8, alpha_hat: u8) -> f64 {
        let scale = 1.0 / (1.0 + self.x * self.x).sqrt();
        if alpha == alpha_hat {
            scale
        } else {
            self.x * scale
        }
    }

    /// Diagonal of the vertex jump operator on the pair, indexed `2·b_L + b_R`.
    pub fn pair_diagonal(&self, outcome: VertexOutcome) -> [f64; 4] {
        let mut d = [0.0; 4];
        for (k, slot) in d.iter_mut().enumerate() {
            let (a, b) = ((k >> 1) as u8, (k & 1) as u8);
            *slot = self.factor(a, outcome.alpha_l) * self.factor(b, outcome.alpha_r);
        }
        d
    }
}

/// GRW jump factor: `1/√(1+X²)` when the link value agrees with the
/// realized one, `X/√(1+X²)` otherwise.
pub fn jump_factor(spec: JumpSpec, alpha: u8, alpha_hat: u8) -> f64 {
    spec.factor(alpha, alpha_hat)
}

/// Realized values on the two links leaving a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexOutcome {
    pub alpha_l: u8,
    pub alpha_r: u8,
}

impl VertexOutcome {
    pub const ALL: [VertexOutcome; 4] = [
        VertexOutcome::new(0, 0),
        VertexOutcome::new(0, 1),
        VertexOutcome::new(1, 0),
        VertexOutcome::new(1, 1),
    ];

    pub const fn new(alpha_l: u8, alpha_r: u8) -> Self {
        Self { alpha_l, alpha_r }
    }

    /// `2·α_L + α_R`.
    pub fn index(self) -> usize {
        2 * self.alpha_l as usize + self.alpha_r as usize
    }

    pub fn from_index(index: usize) -> Self {
        Self::ALL[index]
    }
}

impl fmt::Display for VertexOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.alpha_l, self.alpha_r)
    }
}

impl FromStr for VertexOutcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "00" => Ok(Self::new(0, 0)),
            "01" => Ok(Self::new(0, 1)),
            "10" => Ok(Self::new(1, 0)),
            "11" => Ok(Self::new(1, 1)),
            other => Err(Error::Config(format!("invalid vertex outcome {other:?}"))),
        }
    }
}

/// Per-link normalizations of a vertex event, realized L first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexNorms {
    pub left: f64,
    pub right: f64,
}

impl VertexNorms {
    /// `N(α̂_v) = N_L · N_R`.
    pub fn joint(&self) -> f64 {
        self.left * self.right
    }
}

/// Hit on a single link: multiply by the jump factor and renormalize.
/// Returns the hit state and its normalization `N`.
pub fn link_hit(psi: &StateVector, slot: usize, alpha_hat: u8, spec: JumpSpec) -> Result<(StateVector, f64)> {
    if slot >= psi.slot_count() {
        return Err(Error::Precondition(format!("slot {slot} out of range")));
    }
    let factors = [spec.factor(0, alpha_hat), spec.factor(1, alpha_hat)];
    let mut amplitudes: Vec<Complex64> = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(index, a)| a * factors[(index >> slot) & 1])
        .collect();
    let n2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if !(n2 > 0.0) {
        return Err(Error::ImpossibleOutcome(format!("value {alpha_hat} at slot {slot}")));
    }
    let n = n2.sqrt();
    for a in amplitudes.iter_mut() {
        *a /= n;
    }
    Ok((StateVector::from_raw(psi.slot_count(), amplitudes), n))
}

/// `N(α̂_v)²` for the four outcomes at a vertex, indexed by
/// [`VertexOutcome::index`].
pub fn vertex_jump_distribution(psi: &StateVector, pair: (usize, usize), spec: JumpSpec) -> Result<[f64; 4]> {
    let marginals = psi.pair_marginals(pair)?;
    Ok(distribution_from_marginals(&marginals, spec))
}

pub(crate) fn distribution_from_marginals(marginals: &[f64; 4], spec: JumpSpec) -> [f64; 4] {
    let mut out = [0.0; 4];
    for outcome in VertexOutcome::ALL {
        let d = spec.pair_diagonal(outcome);
        out[outcome.index()] = (0..4).map(|k| d[k] * d[k] * marginals[k]).sum();
    }
    out
}

/// Vertex event: hit the L link (first slot), then the R link.
pub fn vertex_hit(
    psi: &StateVector,
    pair: (usize, usize),
    outcome: VertexOutcome,
    spec: JumpSpec,
) -> Result<(StateVector, VertexNorms)> {
    psi.check_pair(pair)?;
    let (after_l, left) = link_hit(psi, pair.0, outcome.alpha_l, spec)?;
    let (after_r, right) = link_hit(&after_l, pair.1, outcome.alpha_r, spec)?;
    Ok((after_r, VertexNorms { left, right }))
}

/// Applies the unnormalized jump operator `J(α̂)` on the pair.
pub fn apply_jump(psi: &mut StateVector, pair: (usize, usize), outcome: VertexOutcome, spec: JumpSpec) -> Result<()> {
    psi.check_pair(pair)?;
    psi.scale_pair(pair, spec.pair_diagonal(outcome));
    Ok(())
}

/// Born distribution of the `free` pair conditioned on the `fixed` slot
/// values, indexed `2·b_first + b_second`. Slots in neither set are
/// marginalized; a free slot that is also fixed is constrained to its value.
pub fn born_conditional(psi: &StateVector, fixed: &BTreeMap<usize, u8>, free: (usize, usize)) -> Result<[f64; 4]> {
    let (i, j) = free;
    let slots = psi.slot_count();
    if i >= slots || j >= slots || i == j {
        return Err(Error::Precondition(format!("free pair ({i}, {j}) is not two distinct slots")));
    }
    let mut mask = 0usize;
    let mut want = 0usize;
    for (&slot, &value) in fixed {
        if slot >= slots || value > 1 {
            return Err(Error::Precondition(format!("fixed value {value} at slot {slot}")));
        }
        mask |= 1 << slot;
        want |= (value as usize) << slot;
    }
    let mut out = [0.0; 4];
    for (index, a) in psi.amplitudes().iter().enumerate() {
        if index & mask == want {
            out[2 * ((index >> i) & 1) + ((index >> j) & 1)] += a.norm_sqr();
        }
    }
    let total: f64 = out.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NullCondition);
    }
    for p in out.iter_mut() {
        *p /= total;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> StateVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::from_amplitudes(2, vec![c(h), c(0.0), c(0.0), c(h)]).unwrap()
    }

    #[test]
    fn unitary_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = StateVector::random(4, &mut rng).unwrap();
        let same = apply_unitary(&psi, (1, 2), &TwoQubitUnitary::identity()).unwrap();
        assert_eq!(same, psi);

        // |b_0 = 0, b_1 = 1⟩ → |b_0 = 1, b_1 = 0⟩
        let basis = StateVector::basis(&[0, 1]).unwrap();
        let swapped = apply_unitary(&basis, (0, 1), &TwoQubitUnitary::swap()).unwrap();
        assert_eq!(swapped, StateVector::basis(&[1, 0]).unwrap());

        let u = TwoQubitUnitary::haar_random(&mut rng);
        assert!(u.unitarity_deviation() <= 1e-12);
        let out = apply_unitary(&psi, (3, 0), &u).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() <= 1e-12);

        assert!(matches!(apply_unitary(&psi, (0, 2), &u), Err(Error::NotAdjacent { .. })));
    }

    #[test]
    fn wrapped_pair_uses_first_slot_as_high_bit() {
        // pair (3, 0): local index 2·b_3 + b_0
        let psi = StateVector::basis(&[1, 0, 0, 0]).unwrap();
        let out = apply_unitary(&psi, (3, 0), &TwoQubitUnitary::swap()).unwrap();
        assert_eq!(out, StateVector::basis(&[0, 0, 0, 1]).unwrap());
    }

    #[test]
    fn non_unitary_rejected() {
        let mut m = *TwoQubitUnitary::identity().entries();
        m[0][0] = c(1.0 + 1e-9);
        assert!(matches!(TwoQubitUnitary::new(m), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn jump_factor_values() {
        let x1 = JumpSpec::new(1.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((jump_factor(x1, a, b) - h).abs() < 1e-15);
        }
        let x0 = JumpSpec::new(0.0).unwrap();
        assert_eq!(jump_factor(x0, 1, 1), 1.0);
        assert_eq!(jump_factor(x0, 0, 1), 0.0);
        let half = JumpSpec::new(0.5).unwrap();
        assert!((jump_factor(half, 0, 0) - 0.894_427_190_999_916).abs() < 1e-12);
        assert!((jump_factor(half, 1, 0) - 0.447_213_595_499_958).abs() < 1e-12);
        assert!(JumpSpec::new(1.5).is_err());
        assert!(JumpSpec::new(-0.1).is_err());
        assert!(JumpSpec::new(f64::NAN).is_err());
    }

    #[test]
    fn jump_matrix_for_realized_one() {
        // acting on a link with realized value 1: diag(X, 1)/√(1+X²) in the (0, 1) basis
        let spec = JumpSpec::new(0.3).unwrap();
        let s = 1.0 / (1.0f64 + 0.09).sqrt();
        assert!((spec.factor(1, 1) - s).abs() < 1e-15);
        assert!((spec.factor(0, 1) - 0.3 * s).abs() < 1e-15);
    }

    #[test]
    fn link_hit_examples() {
        let x0 = JumpSpec::new(0.0).unwrap();
        let psi = StateVector::basis(&[0, 1]).unwrap();
        let (out, n) = link_hit(&psi, 1, 1, x0).unwrap();
        assert_eq!(out, psi);
        assert_eq!(n, 1.0);
        assert!(matches!(link_hit(&psi, 1, 0, x0), Err(Error::ImpossibleOutcome(_))));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi = StateVector::random(4, &mut rng).unwrap();
        let (out, n) = link_hit(&psi, 2, 0, JumpSpec::new(1.0).unwrap()).unwrap();
        assert!(out.max_abs_difference(&psi) < 1e-15);
        assert!((n - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn link_hit_on_bell_state() {
        let spec = JumpSpec::new(0.5).unwrap();
        let (out, n) = link_hit(&bell(), 0, 0, spec).unwrap();
        // N² = ½·(1/1.25) + ½·(0.25/1.25)
        assert!((n * n - 0.5).abs() < 1e-15);
        let probs: Vec<f64> = (0..4).map(|k| out.probability(k)).collect();
        // basis index = b_0 + 2 b_1, so 00 → 0 and 11 → 3
        for (p, want) in probs.iter().zip([0.8, 0.0, 0.0, 0.2]) {
            assert!((p - want).abs() < 1e-14, "{probs:?}");
        }
    }

    #[test]
    fn vertex_distribution_examples() {
        let psi = StateVector::basis(&[0, 0]).unwrap();
        let p = vertex_jump_distribution(&psi, (0, 1), JumpSpec::new(0.5).unwrap()).unwrap();
        for (got, want) in p.iter().zip([0.64, 0.16, 0.16, 0.04]) {
            assert!((got - want).abs() < 1e-15);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = StateVector::random(6, &mut rng).unwrap();
        let p = vertex_jump_distribution(&psi, (5, 0), JumpSpec::new(1.0).unwrap()).unwrap();
        assert!(p.iter().all(|q| (q - 0.25).abs() < 1e-15));

        let psi = StateVector::basis(&[0, 1, 1, 0]).unwrap();
        let p = vertex_jump_distribution(&psi, (1, 2), JumpSpec::new(0.0).unwrap()).unwrap();
        assert_eq!(p, [0.0, 0.0, 0.0, 1.0]);
        let p = vertex_jump_distribution(&psi, (3, 0), JumpSpec::new(0.0).unwrap()).unwrap();
        assert_eq!(p, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn vertex_hit_rejects_impossible() {
        let psi = StateVector::basis(&[1, 1]).unwrap();
        let spec = JumpSpec::new(0.0).unwrap();
        assert!(vertex_hit(&psi, (0, 1), VertexOutcome::new(1, 0), spec).is_err());
        let (out, norms) = vertex_hit(&psi, (0, 1), VertexOutcome::new(1, 1), spec).unwrap();
        assert_eq!(out, psi);
        assert_eq!(norms.joint(), 1.0);
    }

    #[test]
    fn born_conditional_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = StateVector::random(2, &mut rng).unwrap();
        let p = born_conditional(&psi, &BTreeMap::new(), (0, 1)).unwrap();
        for k in 0..4 {
            let index = ((k >> 1) & 1) | ((k & 1) << 1);
            assert!((p[k] - psi.probability(index)).abs() < 1e-15);
        }

        let q = |a: f64, b: f64| [c(a), c(b)];
        let product = StateVector::product(&[q(0.6, 0.8), q(1.0, 1.0), q(0.3, 0.7), q(2.0, 1.0)]).unwrap();
        let given0 = born_conditional(&product, &BTreeMap::from([(0, 0), (3, 1)]), (1, 2)).unwrap();
        let given1 = born_conditional(&product, &BTreeMap::from([(0, 1), (3, 0)]), (1, 2)).unwrap();
        for k in 0..4 {
            assert!((given0[k] - given1[k]).abs() < 1e-15);
        }

        let p = born_conditional(&bell(), &BTreeMap::from([(0, 0)]), (0, 1)).unwrap();
        assert_eq!(p, [1.0, 0.0, 0.0, 0.0]);

        let basis = StateVector::basis(&[0, 0]).unwrap();
        assert!(matches!(
            born_conditional(&basis, &BTreeMap::from([(0, 1)]), (0, 1)),
            Err(Error::NullCondition)
        ));
    }

    #[test]
    fn x_one_hits_leave_states_alone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = StateVector::random(4, &mut rng).unwrap();
        let spec = JumpSpec::new(1.0).unwrap();
        for o in VertexOutcome::ALL {
            let (out, _) = vertex_hit(&psi, (2, 3), o, spec).unwrap();
            assert!(out.max_abs_difference(&psi) < 1e-15);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn state(slots: usize, seed: u64) -> StateVector {
            StateVector::random(slots, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
        }

        proptest! {
            #[test]
            fn kraus_completeness(n in 1usize..4, seed in any::<u64>(), x in 0.0f64..=1.0, slot in 0usize..6) {
                let psi = state(2 * n, seed);
                let spec = JumpSpec::new(x).unwrap();
                let pair = (slot % (2 * n), (slot % (2 * n) + 1) % (2 * n));
                let p = vertex_jump_distribution(&psi, pair, spec).unwrap();
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                for k in 0..4 {
                    let sum: f64 = VertexOutcome::ALL.iter().map(|o| spec.pair_diagonal(*o)[k].powi(2)).sum();
                    prop_assert!((sum - 1.0).abs() <= 1e-14);
                }
            }

            #[test]
            fn chain_rule(n in 1usize..4, seed in any::<u64>(), x in 0.01f64..=1.0, slot in 0usize..6) {
                let psi = state(2 * n, seed);
                let spec = JumpSpec::new(x).unwrap();
                let pair = (slot % (2 * n), (slot % (2 * n) + 1) % (2 * n));
                let joint = vertex_jump_distribution(&psi, pair, spec).unwrap();
                for o in VertexOutcome::ALL {
                    let (after, norms) = vertex_hit(&psi, pair, o, spec).unwrap();
                    prop_assert!((norms.joint().powi(2) - joint[o.index()]).abs() <= 1e-12);
                    // single-pass scaling agrees with the two sequential hits
                    let mut direct = psi.clone();
                    apply_jump(&mut direct, pair, o, spec).unwrap();
                    let scale = 1.0 / joint[o.index()].sqrt();
                    for (a, b) in direct.amplitudes().iter().zip(after.amplitudes()) {
                        prop_assert!((a * scale - b).norm() <= 1e-12);
                    }
                }
            }

            #[test]
            fn hits_on_different_slots_commute(seed in any::<u64>(), x in 0.01f64..=1.0, a in 0u8..2, b in 0u8..2) {
                let psi = state(4, seed);
                let spec = JumpSpec::new(x).unwrap();
                let (s1, _) = link_hit(&psi, 0, a, spec).unwrap();
                let (s1, _) = link_hit(&s1, 2, b, spec).unwrap();
                let (s2, _) = link_hit(&psi, 2, b, spec).unwrap();
                let (s2, _) = link_hit(&s2, 0, a, spec).unwrap();
                prop_assert!(s1.max_abs_difference(&s2) <= 1e-13);
            }

            #[test]
            fn unitaries_preserve_norm(seed in any::<u64>(), slot in 0usize..6) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let psi = StateVector::random(6, &mut rng).unwrap();
                let u = TwoQubitUnitary::haar_random(&mut rng);
                prop_assert!(u.unitarity_deviation() <= 1e-12);
                let out = apply_unitary(&psi, (slot, (slot + 1) % 6), &u).unwrap();
                prop_assert!((out.norm_sqr() - 1.0).abs() <= 1e-12);
                let back = apply_unitary(&out, (slot, (slot + 1) % 6), &u.adjoint()).unwrap();
                prop_assert!(back.max_abs_difference(&psi) <= 1e-12);
            }
        }
    }
}
