//! Heisenberg-picture jump operators on the initial surface's Hilbert space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{History, Instance};
use crate::error::{Error, Result};
use crate::lattice::NaturalLabeling;
use crate::quantum::{apply_local, VertexOutcome};

/// Largest `N` for which operators are built as explicit matrices.
pub const EXPLICIT_MAX_HALF_WIDTH: usize = 5;

fn check_explicit(instance: &Instance) -> Result<usize> {
    let n = instance.geometry().half_width();
    if n > EXPLICIT_MAX_HALF_WIDTH {
        return Err(Error::Guardrail {
            what: "explicit operator half width",
            size: n,
            limit: EXPLICIT_MAX_HALF_WIDTH,
        });
    }
    Ok(1 << (2 * n))
}

/// `U(v_k) ... U(v_1)` for the first `k` vertices of the labeling.
fn evolution(instance: &Instance, labeling: &NaturalLabeling, k: usize) -> Result<DMatrix<Complex64>> {
    let dim = check_explicit(instance)?;
    let vertices = instance.walk(labeling)?;
    if k > vertices.len() {
        return Err(Error::Precondition(format!("k = {k} exceeds the labeling length {}", vertices.len())));
    }
    let mut w = DMatrix::<Complex64>::identity(dim, dim);
    for vertex in &vertices[..k] {
        let u = instance.r_matrices.unitary_for_vertex(vertex);
        for column in w.as_mut_slice().chunks_mut(dim) {
            apply_local(column, vertex.slot_pair, u.entries());
        }
    }
    Ok(w)
}

/// `J_{v_k}(α̂) = U(v_1)^{-1} ... U(v_k)^{-1} J(α̂) U(v_k) ... U(v_1)` with
/// `k` counted from 1 along the labeling.
pub fn heisenberg_jump(
    instance: &Instance,
    labeling: &NaturalLabeling,
    k: usize,
    outcome: VertexOutcome,
) -> Result<DMatrix<Complex64>> {
    if k == 0 {
        return Err(Error::Precondition("k counts from 1".into()));
    }
    let w = evolution(instance, labeling, k)?;
    let vertex = *instance.dag.vertex(labeling.sequence()[k - 1])?;
    let diag = instance.jump.pair_diagonal(outcome);
    let (i, j) = vertex.slot_pair;
    let mut dw = w.clone();
    for (r, mut row) in dw.row_iter_mut().enumerate() {
        row *= Complex64::new(diag[2 * ((r >> i) & 1) + ((r >> j) & 1)], 0.0);
    }
    Ok(w.adjoint() * dw)
}

/// `‖J_{v_n}(α̂_{v_n}) ... J_{v_1}(α̂_{v_1}) Ψ₀‖²` from explicit matrices.
pub fn heisenberg_history_probability(
    instance: &Instance,
    labeling: &NaturalLabeling,
    history: &History,
) -> Result<f64> {
    check_explicit(instance)?;
    instance.check_enumerable(labeling.len())?;
    let mut psi = DVector::from_column_slice(instance.psi0.amplitudes());
    for (k, &v) in labeling.sequence().iter().enumerate() {
        let j = heisenberg_jump(instance, labeling, k + 1, history.outcome(v)?)?;
        psi = j * psi;
    }
    Ok(psi.norm_squared())
}

/// Largest entrywise difference of two operators.
pub fn max_entry_difference(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
