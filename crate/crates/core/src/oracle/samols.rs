//! Brute-force checks of the Samols realization rule.
//!
//! A Samols history is an initial configuration on σ₀ plus one realized pair
//! per vertex. Its probability along a labeling is the Born weight of the
//! initial configuration times, at each vertex, the Born probability of the
//! realized pair in the evolved state given the realized values on every
//! other slot.

use std::collections::BTreeMap;

use super::{GammaReport, History, HistoryDistribution, Instance, DISTRIBUTION_TOLERANCE};
use crate::error::{Error, Result};
use crate::lattice::{linear_extensions, NaturalLabeling, PartialStem};
use crate::quantum::{born_conditional, VertexOutcome};

/// Largest `N` for which initial configurations are enumerated.
pub const SAMOLS_MAX_HALF_WIDTH: usize = 3;
/// Largest labeling enumerated.
pub const SAMOLS_MAX_VERTICES: usize = 6;

fn check_size(instance: &Instance, n: usize) -> Result<()> {
    let half = instance.geometry().half_width();
    if half > SAMOLS_MAX_HALF_WIDTH {
        return Err(Error::Guardrail {
            what: "Samols enumeration half width",
            size: half,
            limit: SAMOLS_MAX_HALF_WIDTH,
        });
    }
    if n > SAMOLS_MAX_VERTICES {
        return Err(Error::Guardrail {
            what: "Samols enumeration vertices",
            size: n,
            limit: SAMOLS_MAX_VERTICES,
        });
    }
    Ok(())
}

fn bits_of(index: usize, slots: usize) -> Vec<u8> {
    (0..slots).map(|s| ((index >> s) & 1) as u8).collect()
}

/// Probability of an initial configuration and realized pairs along a
/// labeling. Returns the realized configuration on the final surface too.
pub fn samols_history_probability(
    instance: &Instance,
    labeling: &NaturalLabeling,
    initial: &[u8],
    history: &History,
) -> Result<(f64, Vec<u8>)> {
    let vertices = instance.walk(labeling)?;
    check_size(instance, vertices.len())?;
    let slots = instance.geometry().slot_count();
    if initial.len() != slots || initial.iter().any(|&b| b > 1) {
        return Err(Error::Precondition("initial configuration does not fit the lattice".into()));
    }
    let index: usize = initial.iter().enumerate().map(|(s, &b)| (b as usize) << s).sum();
    let mut prob = instance.psi0.probability(index);
    let mut values = initial.to_vec();
    let mut psi = instance.psi0.clone();
    for vertex in &vertices {
        let outcome = history.outcome(vertex.ordinal)?;
        psi.apply_unitary_in_place(vertex.slot_pair, instance.r_matrices.unitary_for_vertex(vertex))?;
        let (i, j) = vertex.slot_pair;
        values[i] = outcome.alpha_l;
        values[j] = outcome.alpha_r;
        if prob == 0.0 {
            continue;
        }
        let fixed: BTreeMap<usize, u8> = (0..slots)
            .filter(|&s| s != i && s != j)
            .map(|s| (s, values[s]))
            .collect();
        prob *= born_conditional(&psi, &fixed, vertex.slot_pair)?[outcome.index()];
    }
    Ok((prob, values))
}

/// Calls `visit(initial index, atom history, final configuration index,
/// probability)` for every Samols history along the labeling.
fn for_each_history(
    instance: &Instance,
    labeling: &NaturalLabeling,
    mut visit: impl FnMut(usize, History, usize, f64),
) -> Result<()> {
    check_size(instance, labeling.len())?;
    let slots = instance.geometry().slot_count();
    let n = labeling.len();
    for initial in 0..1usize << slots {
        let bits = bits_of(initial, slots);
        for atom in 0..1usize << (2 * n) {
            let outcomes = labeling
                .sequence()
                .iter()
                .enumerate()
                .map(|(k, &v)| (v, VertexOutcome::from_index((atom >> (2 * k)) & 3)))
                .collect();
            let history = History::new(outcomes);
            let (p, last) = samols_history_probability(instance, labeling, &bits, &history)?;
            let last_index = last.iter().enumerate().map(|(s, &b)| (b as usize) << s).sum();
            visit(initial, history, last_index, p);
        }
    }
    Ok(())
}

/// Largest difference between the summed probability of each final-surface
/// configuration and its Born weight in the evolved state.
pub fn samols_marginal_deviation(instance: &Instance, labeling: &NaturalLabeling) -> Result<f64> {
    let slots = instance.geometry().slot_count();
    let mut marginal = vec![0.0; 1 << slots];
    for_each_history(instance, labeling, |_, _, last, p| marginal[last] += p)?;
    let mut psi = instance.psi0.clone();
    for vertex in instance.walk(labeling)? {
        psi.apply_unitary_in_place(vertex.slot_pair, instance.r_matrices.unitary_for_vertex(&vertex))?;
    }
    Ok(marginal
        .iter()
        .enumerate()
        .map(|(c, m)| (m - psi.probability(c)).abs())
        .fold(0.0, f64::max))
}

/// Distribution of the realized pairs of a stem along one labeling, with the
/// initial configuration summed out.
pub fn samols_distribution(
    instance: &Instance,
    stem: &PartialStem,
    labeling: &NaturalLabeling,
) -> Result<HistoryDistribution> {
    if labeling.vertex_set() != *stem.vertices() {
        return Err(Error::NotNaturalLabeling("labeling does not cover the stem".into()));
    }
    let mut dist = HistoryDistribution::zeros(stem.vertices().iter().copied().collect());
    let mut failure = None;
    for_each_history(instance, labeling, |_, history, _, p| match dist.index_of(&history) {
        Ok(i) => dist.probabilities[i] += p,
        Err(e) => failure = Some(e),
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(dist),
    }
}

/// Compares Samols distributions across every linear extension of a stem.
/// Unlike the collapse dynamics, this is expected to fail for entangling
/// unitaries.
pub fn samols_gamma_check(instance: &Instance, stem: &PartialStem) -> Result<GammaReport> {
    let mut reference: Option<HistoryDistribution> = None;
    let mut extensions = 0;
    let mut max_deviation: f64 = 0.0;
    for labeling in linear_extensions(stem, &instance.dag)? {
        let dist = samols_distribution(instance, stem, &labeling)?;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{RMatrixRule, RMatrixSpec};
    use crate::lattice::{CausalDag, LatticeGeometry};
    use crate::oracle::random;
    use crate::quantum::{JumpSpec, StateVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn jump() -> JumpSpec {
        JumpSpec::new(1.0).unwrap()
    }

    #[test]
    fn single_step_is_product_of_born_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let psi = StateVector::random(2, &mut rng).unwrap();
        let (_, dag) = CausalDag::from_motions(LatticeGeometry::new(1).unwrap(), &[0]).unwrap();
        let rule = RMatrixRule::uniform(RMatrixSpec::RandomUnitary { seed: 2 });
        let inst = Instance::new(dag, rule.clone(), psi.clone(), jump()).unwrap();
        let labeling = NaturalLabeling::creation_order(&inst.stem());
        let evolved = crate::quantum::apply_unitary(&psi, (0, 1), &rule.default_spec().resolve()).unwrap();
        for initial in 0..4usize {
            for outcome in VertexOutcome::ALL {
                let h = History::new(BTreeMap::from([(0, outcome)]));
                let (p, last) = samols_history_probability(&inst, &labeling, &bits_of(initial, 2), &h).unwrap();
                let index = outcome.alpha_l as usize + 2 * outcome.alpha_r as usize;
                assert!((p - psi.probability(initial) * evolved.probability(index)).abs() < 1e-14);
                assert_eq!(last, vec![outcome.alpha_l, outcome.alpha_r]);
            }
        }
    }

    #[test]
    fn surface_marginal_is_born() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for motions in [&[0][..], &[0, 2], &[2, 0, 1], &[0, 2, 3]] {
            let (_, dag) = CausalDag::from_motions(LatticeGeometry::new(2).unwrap(), motions).unwrap();
            let rule = random::random_rule(&mut rng, &dag);
            let inst = Instance::new(dag, rule, StateVector::random(4, &mut rng).unwrap(), jump()).unwrap();
            let labeling = NaturalLabeling::creation_order(&inst.stem());
            assert!(samols_marginal_deviation(&inst, &labeling).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn first_layer_orders_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let (_, dag) = CausalDag::from_motions(LatticeGeometry::new(2).unwrap(), &[0, 2]).unwrap();
        let rule = random::random_rule(&mut rng, &dag);
        let inst = Instance::new(dag, rule, StateVector::random(4, &mut rng).unwrap(), jump()).unwrap();
        assert!(samols_gamma_check(&inst, &inst.stem()).unwrap().passed);
    }

    #[test]
    fn labeling_dependence_witness() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (_, dag) = CausalDag::from_motions(LatticeGeometry::new(2).unwrap(), &[0, 2, 1, 3]).unwrap();
        let rule = random::random_rule(&mut rng, &dag);
        let inst = Instance::new(dag, rule, StateVector::random(4, &mut rng).unwrap(), jump()).unwrap();
        let report = samols_gamma_check(&inst, &inst.stem()).unwrap();
        assert_eq!(report.extensions, 4);
        assert!(report.max_deviation > 1e-6, "{}", report.max_deviation);
        let total = samols_distribution(&inst, &inst.stem(), &NaturalLabeling::creation_order(&inst.stem()))
            .unwrap()
            .total();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
