//! Random instances for the oracle test harnesses.

use std::collections::BTreeSet;

use rand::Rng;

use super::Instance;
use crate::dynamics::{RMatrixRule, RMatrixSpec, RegionOverride};
use crate::error::Result;
use crate::lattice::{CausalDag, LatticeGeometry, Surface};
use crate::quantum::{JumpSpec, StateVector};

/// `count` motions chosen uniformly among the RL pairs of each surface.
pub fn random_motions<R: Rng + ?Sized>(rng: &mut R, geometry: LatticeGeometry, count: usize) -> Result<Vec<usize>> {
    let mut surface = Surface::initial(geometry);
    let mut dag = CausalDag::untracked(geometry);
    let mut motions = Vec::with_capacity(count);
    for _ in 0..count {
        let pairs = surface.rl_pairs();
        let slot = pairs[rng.random_range(0..pairs.len())];
        surface.advance(slot, &mut dag)?;
        motions.push(slot);
    }
    Ok(motions)
}

/// An independent Haar-random R-matrix at every vertex of `dag`.
pub fn random_rule<R: Rng + ?Sized>(rng: &mut R, dag: &CausalDag) -> RMatrixRule {
    let overrides = dag
        .vertices()
        .iter()
        .map(|v| RegionOverride {
            slot: v.slot_pair.0,
            ordinals: v.pair_ordinal..v.pair_ordinal + 1,
            // seeds stay within the range a config file can carry
            spec: RMatrixSpec::RandomUnitary { seed: rng.random::<u64>() >> 1 },
        })
        .collect();
    RMatrixRule::new(RMatrixSpec::Identity, overrides)
}

/// Random motions, per-vertex unitaries, initial state and `X`.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, half_width: usize, vertices: usize) -> Result<Instance> {
    let geometry = LatticeGeometry::new(half_width)?;
    let motions = random_motions(rng, geometry, vertices)?;
    let (_, dag) = CausalDag::from_motions(geometry, &motions)?;
    let rule = random_rule(rng, &dag);
    let psi0 = StateVector::random(geometry.slot_count(), rng)?;
    let jump = JumpSpec::new(rng.random::<f64>())?;
    Instance::new(dag, rule, psi0, jump)
}

/// Picks one vertex `b` and a non-empty set `A` of vertices spacelike to it,
/// when such a pair exists.
pub fn random_spacelike_regions<R: Rng + ?Sized>(
    rng: &mut R,
    dag: &CausalDag,
) -> Result<Option<(BTreeSet<usize>, BTreeSet<usize>)>> {
    let mut candidates = Vec::new();
    for b in 0..dag.len() {
        let mut spacelike = Vec::new();
        for a in 0..dag.len() {
            if dag.is_spacelike(a, b)? {
                spacelike.push(a);
            }
        }
        if !spacelike.is_empty() {
            candidates.push((b, spacelike));
        }
    }
    if candidates.is_empty() {
        return Ok(None);
    }
    let (b, spacelike) = &candidates[rng.random_range(0..candidates.len())];
    let mut a: BTreeSet<usize> = spacelike.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
    if a.is_empty() {
        a.insert(spacelike[rng.random_range(0..spacelike.len())]);
    }
    Ok(Some((a, BTreeSet::from([*b]))))
}

/// Replaces the R-matrix at every vertex of `region` with a fresh random one.
pub fn perturb_region<R: Rng + ?Sized>(rng: &mut R, rule: &RMatrixRule, dag: &CausalDag, region: &BTreeSet<usize>) -> Result<RMatrixRule> {
    let mut out = rule.clone();
    for &v in region {
        let vertex = dag.vertex(v)?;
        out = out.with_override(RegionOverride {
            slot: vertex.slot_pair.0,
            ordinals: vertex.pair_ordinal..vertex.pair_ordinal + 1,
            spec: RMatrixSpec::RandomUnitary { seed: rng.random::<u64>() >> 1 },
        });
    }
    Ok(out)
}
