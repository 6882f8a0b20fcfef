//! Exact history probabilities by enumeration.
//!
//! For a natural labeling `v_1, ..., v_n` the probability of realized values
//! `α̂_{v_1}, ..., α̂_{v_n}` is `‖J(α̂_{v_n}) U(v_n) ... J(α̂_{v_1}) U(v_1) Ψ₀‖²`.
//! It is computed three independent ways: the unnormalized operator product
//! ([`history_probability`]), the sequential conditional recursion
//! ([`enumerate_distribution`]) and the Heisenberg-picture product
//! ([`heisenberg::heisenberg_history_probability`]).

pub mod heisenberg;
pub mod random;
pub mod samols;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::RMatrixRule;
use crate::error::{Error, Result};
use crate::lattice::{
    causal_past, linear_extensions, CausalDag, LatticeGeometry, NaturalLabeling, PartialStem, Surface, Vertex,
};
use crate::quantum::{apply_jump, apply_local, vertex_jump_distribution, JumpSpec, StateVector, VertexOutcome};

/// Largest stem whose `4^n` outcome assignments are enumerated.
pub const ENUMERATION_LIMIT: usize = 8;
/// Largest `N` whose state vectors the enumerations will handle.
pub const ENUMERATION_MAX_HALF_WIDTH: usize = 8;
/// Pass bar for labeling independence and no-signaling.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-10;

/// A swept piece of lattice together with everything the probabilities
/// depend on.
#[derive(Clone, Debug)]
pub struct Instance {
    pub dag: CausalDag,
    pub r_matrices: RMatrixRule,
    pub psi0: StateVector,
    pub jump: JumpSpec,
}

impl Instance {
    pub fn new(dag: CausalDag, r_matrices: RMatrixRule, psi0: StateVector, jump: JumpSpec) -> Result<Self> {
        if psi0.slot_count() != dag.geometry().slot_count() {
            return Err(Error::InvalidState(format!(
                "state on {} slots for a lattice with {}",
                psi0.slot_count(),
                dag.geometry().slot_count()
            )));
        }
        psi0.check_normalized()?;
        Ok(Self {
            dag,
            r_matrices,
            psi0,
            jump,
        })
    }

    pub fn from_motions(
        geometry: LatticeGeometry,
        motions: &[usize],
        r_matrices: RMatrixRule,
        psi0: StateVector,
        jump: JumpSpec,
    ) -> Result<Self> {
        let (_, dag) = CausalDag::from_motions(geometry, motions)?;
        Self::new(dag, r_matrices, psi0, jump)
    }

    pub fn geometry(&self) -> LatticeGeometry {
        self.dag.geometry()
    }

    /// Every swept vertex.
    pub fn stem(&self) -> PartialStem {
        PartialStem::full(&self.dag)
    }

    pub fn with_rule(&self, r_matrices: RMatrixRule) -> Self {
        Self {
            r_matrices,
            ..self.clone()
        }
    }

    /// The vertices of a labeling in order, after checking that it is a
    /// natural labeling of a stem of this dag and that each vertex sits on
    /// the surface reached by its predecessors in the labeling.
    fn walk(&self, labeling: &NaturalLabeling) -> Result<Vec<Vertex>> {
        let labeling = NaturalLabeling::new(&self.dag, labeling.sequence().to_vec())?;
        PartialStem::new(&self.dag, labeling.vertex_set())?;
        let mut surface = Surface::initial(self.geometry());
        let mut out = Vec::with_capacity(labeling.len());
        for &v in labeling.sequence() {
            let vertex = *self.dag.vertex(v)?;
            surface.cross(&vertex)?;
            out.push(vertex);
        }
        Ok(out)
    }

    fn check_enumerable(&self, size: usize) -> Result<()> {
        if size > ENUMERATION_LIMIT {
            return Err(Error::Guardrail {
                what: "enumeration stem",
                size,
                limit: ENUMERATION_LIMIT,
            });
        }
        let n = self.geometry().half_width();
        if n > ENUMERATION_MAX_HALF_WIDTH {
            return Err(Error::Guardrail {
                what: "enumeration half width",
                size: n,
                limit: ENUMERATION_MAX_HALF_WIDTH,
            });
        }
        Ok(())
    }
}

/// Realized values keyed by vertex.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct History {
    pub outcomes: BTreeMap<usize, VertexOutcome>,
}

impl History {
    pub fn new(outcomes: BTreeMap<usize, VertexOutcome>) -> Self {
        Self { outcomes }
    }

    fn outcome(&self, v: usize) -> Result<VertexOutcome> {
        self.outcomes
            .get(&v)
            .copied()
            .ok_or_else(|| Error::Precondition(format!("history has no outcome for vertex {v}")))
    }
}

/// Exact distribution over all outcome assignments of a vertex set.
///
/// Atoms are indexed in base 4 with the smallest vertex ordinal as the most
/// significant digit, so distributions computed along different labelings
/// line up atom by atom.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryDistribution {
    vertices: Vec<usize>,
    probabilities: Vec<f64>,
}

impl HistoryDistribution {
    fn zeros(vertices: Vec<usize>) -> Self {
        let probabilities = vec![0.0; 1 << (2 * vertices.len())];
        Self { vertices, probabilities }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    fn digit_weight(&self, position: usize) -> usize {
        1 << (2 * (self.vertices.len() - 1 - position))
    }

    pub fn index_of(&self, history: &History) -> Result<usize> {
        if history.outcomes.len() != self.vertices.len() {
            return Err(Error::Precondition("history does not cover the distribution's vertices".into()));
        }
        let mut index = 0;
        for (pos, &v) in self.vertices.iter().enumerate() {
            index += history.outcome(v)?.index() * self.digit_weight(pos);
        }
        Ok(index)
    }

    pub fn history(&self, index: usize) -> History {
        let outcomes = self
            .vertices
            .iter()
            .enumerate()
            .map(|(pos, &v)| (v, VertexOutcome::from_index((index / self.digit_weight(pos)) % 4)))
            .collect();
        History { outcomes }
    }

    pub fn probability(&self, history: &History) -> Result<f64> {
        Ok(self.probabilities[self.index_of(history)?])
    }

    /// Outcome strings in vertex order, joined by `.`.
    pub fn atom_label(&self, index: usize) -> String {
        let h = self.history(index);
        h.outcomes.values().map(|o| o.to_string()).collect::<Vec<_>>().join(".")
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Largest absolute atom difference.
    pub fn max_deviation(&self, other: &HistoryDistribution) -> Result<f64> {
        if self.vertices != other.vertices {
            return Err(Error::Precondition("distributions are over different vertex sets".into()));
        }
        Ok(self
            .probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Sums out every vertex not in `keep`.
    pub fn marginal(&self, keep: &BTreeSet<usize>) -> Result<HistoryDistribution> {
        if let Some(v) = keep.iter().find(|v| !self.vertices.contains(v)) {
            return Err(Error::UnknownVertex(*v));
        }
        let kept: Vec<usize> = keep.iter().copied().collect();
        let mut out = HistoryDistribution::zeros(kept);
        for (index, &p) in self.probabilities.iter().enumerate() {
            let full = self.history(index);
            let sub = History::new(keep.iter().map(|v| (*v, full.outcomes[v])).collect());
            let target = out.index_of(&sub)?;
            out.probabilities[target] += p;
        }
        Ok(out)
    }
}

/// Unnormalized operator product along the labeling.
pub fn history_probability(instance: &Instance, labeling: &NaturalLabeling, history: &History) -> Result<f64> {
    let vertices = instance.walk(labeling)?;
    instance.check_enumerable(vertices.len())?;
    if history.outcomes.len() != vertices.len() {
        return Err(Error::Precondition("history does not match the labeling".into()));
    }
    let mut psi = instance.psi0.clone();
    for vertex in &vertices {
        let u = instance.r_matrices.unitary_for_vertex(vertex);
        psi.apply_unitary_unchecked(vertex.slot_pair, u)?;
        apply_jump(&mut psi, vertex.slot_pair, history.outcome(vertex.ordinal)?, instance.jump)?;
    }
    Ok(psi.norm_sqr())
}

/// Exact distribution of a stem's outcomes along one labeling, built by the
/// sequential recursion: evolve, read off the four event probabilities of
/// the normalized state, hit, recurse.
pub fn enumerate_distribution(
    instance: &Instance,
    stem: &PartialStem,
    labeling: &NaturalLabeling,
) -> Result<HistoryDistribution> {
    instance.check_enumerable(stem.len())?;
    if labeling.vertex_set() != *stem.vertices() {
        return Err(Error::NotNaturalLabeling("labeling does not cover the stem".into()));
    }
    let vertices = instance.walk(labeling)?;
    let mut dist = HistoryDistribution::zeros(stem.vertices().iter().copied().collect());
    let weights: Vec<usize> = vertices
        .iter()
        .map(|v| {
            let pos = dist.vertices.iter().position(|&w| w == v.ordinal).expect("stem member");
            dist.digit_weight(pos)
        })
        .collect();
    let ctx = Recursion {
        instance,
        vertices: &vertices,
        weights: &weights,
    };
    ctx.descend(0, instance.psi0.clone(), 1.0, 0, &mut dist.probabilities)?;
    Ok(dist)
}

struct Recursion<'a> {
    instance: &'a Instance,
    vertices: &'a [Vertex],
    weights: &'a [usize],
}

impl Recursion<'_> {
    fn descend(&self, depth: usize, mut psi: StateVector, prob: f64, atom: usize, out: &mut [f64]) -> Result<()> {
        if depth == self.vertices.len() {
            out[atom] = prob;
            return Ok(());
        }
        let vertex = &self.vertices[depth];
        let u = self.instance.r_matrices.unitary_for_vertex(vertex);
        psi.apply_unitary_in_place(vertex.slot_pair, u)?;
        let p = vertex_jump_distribution(&psi, vertex.slot_pair, self.instance.jump)?;
        for outcome in VertexOutcome::ALL {
            let q = p[outcome.index()];
            if !(q > 0.0) {
                continue;
            }
            let mut next = psi.clone();
            let mut factors = self.instance.jump.pair_diagonal(outcome);
            let inv = 1.0 / q.sqrt();
            for f in factors.iter_mut() {
                *f *= inv;
            }
            next.scale_pair(vertex.slot_pair, factors);
            self.descend(
                depth + 1,
                next,
                prob * q,
                atom + outcome.index() * self.weights[depth],
                out,
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GammaReport {
    pub extensions: usize,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Compares the stem's distribution along every linear extension with the
/// one along the first.
pub fn gamma_independence_check(instance: &Instance, stem: &PartialStem) -> Result<GammaReport> {
    instance.check_enumerable(stem.len())?;
    let mut reference: Option<HistoryDistribution> = None;
    let mut extensions = 0;
    let mut max_deviation: f64 = 0.0;
    for labeling in linear_extensions(stem, &instance.dag)? {
        let dist = enumerate_distribution(instance, stem, &labeling)?;
        extensions += 1;
        match &reference {
            None => reference = Some(dist),
            Some(r) => max_deviation = max_deviation.max(r.max_deviation(&dist)?),
        }
    }
    Ok(GammaReport {
        extensions,
        max_deviation,
        passed: max_deviation <= DISTRIBUTION_TOLERANCE,
    })
}

/// Matrix of `J(α̂) U(v)` on the local space of `support`, bit `k` of the
/// local index holding the value at slot `support[k]`.
fn local_event_operator(instance: &Instance, vertex: &Vertex, outcome: VertexOutcome, support: &[usize]) -> DMatrix<Complex64> {
    let dim = 1 << support.len();
    let position = |slot: usize| support.iter().position(|&s| s == slot).expect("slot in support");
    let pair = (position(vertex.slot_pair.0), position(vertex.slot_pair.1));
    let u = instance.r_matrices.unitary_for_vertex(vertex);
    let diag = instance.jump.pair_diagonal(outcome);
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for c in 0..dim {
        let mut col = vec![Complex64::new(0.0, 0.0); dim];
        col[c] = Complex64::new(1.0, 0.0);
        apply_local(&mut col, pair, u.entries());
        for (r, z) in col.iter().enumerate() {
            m[(r, c)] = z * diag[2 * ((r >> pair.0) & 1) + ((r >> pair.1) & 1)];
        }
    }
    m
}

/// Operator norm of `[J(α̂_u) U(u), J(α̂_v) U(v)]` on the surface space. Both
/// factors act trivially outside the slots of the two vertices, so the norm
/// is computed on that local space.
pub fn commutator_norm(
    instance: &Instance,
    u: usize,
    v: usize,
    outcome_u: VertexOutcome,
    outcome_v: VertexOutcome,
) -> Result<f64> {
    let vu = *instance.dag.vertex(u)?;
    let vv = *instance.dag.vertex(v)?;
    let support: Vec<usize> = [vu.slot_pair.0, vu.slot_pair.1, vv.slot_pair.0, vv.slot_pair.1]
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let a = local_event_operator(instance, &vu, outcome_u, &support);
    let b = local_event_operator(instance, &vv, outcome_v, &support);
    let commutator = &a * &b - &b * &a;
    Ok(commutator.singular_values().iter().copied().fold(0.0, f64::max))
}

/// Largest commutator norm over all 16 outcome pairs.
pub fn commutator_check(instance: &Instance, u: usize, v: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for a in VertexOutcome::ALL {
        for b in VertexOutcome::ALL {
            worst = worst.max(commutator_norm(instance, u, v, a, b)?);
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct NoSignalingReport {
    /// Vertices of `B ∪ P(B)` whose joint distribution was compared.
    pub observed: BTreeSet<usize>,
    pub stem_size: usize,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Checks that the joint distribution on `B ∪ P(B)` is the same under the
/// instance's R-matrices and under `alternative`, which may differ only on
/// the vertices of `region_a`.
pub fn no_signaling_check(
    instance: &Instance,
    region_a: &BTreeSet<usize>,
    region_b: &BTreeSet<usize>,
    alternative: &RMatrixRule,
) -> Result<NoSignalingReport> {
    let dag = &instance.dag;
    for &a in region_a {
        for &b in region_b {
            if !dag.is_spacelike(a, b)? {
                return Err(Error::Precondition(format!("vertices {a} and {b} are not spacelike")));
            }
        }
    }
    let mut both = region_a.clone();
    both.extend(region_b.iter().copied());
    let stem = PartialStem::closure_of(dag, &both)?;
    instance.check_enumerable(stem.len())?;

    for &v in stem.vertices() {
        if region_a.contains(&v) {
            continue;
        }
        let vertex = dag.vertex(v)?;
        if instance.r_matrices.unitary_for_vertex(vertex) != alternative.unitary_for_vertex(vertex) {
            return Err(Error::Precondition(format!(
                "assignments differ at vertex {v}, which is outside region A"
            )));
        }
    }

    let mut observed = causal_past(dag, region_b)?;
    observed.extend(region_b.iter().copied());
    // P(B) and B first, then the rest; creation order within each group
    let mut sequence: Vec<usize> = observed.iter().copied().collect();
    sequence.extend(stem.vertices().iter().filter(|v| !observed.contains(v)));
    let labeling = NaturalLabeling::new(dag, sequence)?;

    let first = enumerate_distribution(instance, &stem, &labeling)?.marginal(&observed)?;
    let second = enumerate_distribution(&instance.with_rule(alternative.clone()), &stem, &labeling)?.marginal(&observed)?;
    let max_deviation = first.max_deviation(&second)?;
    Ok(NoSignalingReport {
        observed,
        stem_size: stem.len(),
        max_deviation,
        passed: max_deviation <= DISTRIBUTION_TOLERANCE,
    })
}
