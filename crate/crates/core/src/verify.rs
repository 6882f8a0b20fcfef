//! Verification suites run by the `verify` subcommand.
//!
//! Every suite checks a configured instance, when one is given, and a batch
//! of randomized instances. Random instance `k` is generated from seed
//! `seed + k`, which is what a failing check reports as its witness.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::dynamics::{self, RunConfig};
use crate::error::{Error, Result};
use crate::lattice::{CausalDag, NaturalLabeling, PartialStem};
use crate::oracle::heisenberg::{heisenberg_history_probability, heisenberg_jump, max_entry_difference};
use crate::oracle::random::{perturb_region, random_instance, random_spacelike_regions};
use crate::oracle::samols::{samols_gamma_check, samols_marginal_deviation};
use crate::oracle::{
    commutator_check, enumerate_distribution, gamma_independence_check, history_probability, no_signaling_check,
    Instance, DISTRIBUTION_TOLERANCE,
};
use crate::quantum::{link_hit, vertex_hit, vertex_jump_distribution, JumpSpec, StateVector, VertexOutcome};

pub const EXACT_TOLERANCE: f64 = 1e-12;
/// Samols labeling dependence must exceed this to count as a witness.
pub const WITNESS_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Gamma,
    NoSignal,
    Kraus,
    Samols,
    Heisenberg,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Kraus, Suite::Gamma, Suite::NoSignal, Suite::Samols, Suite::Heisenberg];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Gamma => "gamma",
            Suite::NoSignal => "nosignal",
            Suite::Kraus => "kraus",
            Suite::Samols => "samols",
            Suite::Heisenberg => "heisenberg",
            Suite::All => "all",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gamma" => Suite::Gamma,
            "nosignal" => Suite::NoSignal,
            "kraus" => Suite::Kraus,
            "samols" => Suite::Samols,
            "heisenberg" => Suite::Heisenberg,
            "all" => Suite::All,
            other => return Err(Error::Config(format!("unknown suite {other:?}"))),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    /// Deviation for agreement checks; for witness searches the largest
    /// deviation found, which must exceed the tolerance instead.
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Instance that produced `max_deviation`.
    pub witness: String,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<10} {:<28} max_deviation={:.3e} tolerance={:.0e} witness: {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.max_deviation,
                c.tolerance,
                c.witness
            ));
        }
        out
    }
}

/// Running maximum of a deviation together with the instance that gave it.
struct Worst {
    value: f64,
    witness: String,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            witness: "-".into(),
        }
    }

    fn update(&mut self, value: f64, witness: impl FnOnce() -> String) {
        if value > self.value || self.witness == "-" {
            self.value = self.value.max(value);
            self.witness = witness();
        }
    }

    fn at_most(self, suite: Suite, name: &str, tolerance: f64) -> Check {
        Check {
            suite,
            name: name.into(),
            passed: self.value <= tolerance,
            max_deviation: self.value,
            tolerance,
            witness: self.witness,
        }
    }

    fn above(self, suite: Suite, name: &str, threshold: f64) -> Check {
        Check {
            suite,
            name: name.into(),
            passed: self.value > threshold,
            max_deviation: self.value,
            tolerance: threshold,
            witness: self.witness,
        }
    }
}

fn describe(instance: &Instance, seed: Option<u64>) -> String {
    let motions: Vec<usize> = instance.dag.vertices().iter().map(|v| v.slot_pair.0).collect();
    let origin = match seed {
        Some(s) => format!("instance_seed={s}"),
        None => "configured".into(),
    };
    format!(
        "{origin} n={} motions={motions:?} x={}",
        instance.geometry().half_width(),
        instance.jump.x()
    )
}

/// Instance swept by the configuration: the schedule if present, otherwise
/// the motions of a run, truncated to `max_vertices`.
pub fn configured_instance(config: &RunConfig, max_vertices: usize) -> Result<Instance> {
    let motions: Vec<usize> = match &config.schedule {
        Some(s) => s.iter().take(config.steps).copied().collect(),
        None => dynamics::run(config)?.motions(),
    };
    let motions = &motions[..motions.len().min(max_vertices)];
    let (_, dag) = CausalDag::from_motions(config.geometry, motions)?;
    Instance::new(
        dag,
        config.r_matrices.clone(),
        config.initial_state.build(config.geometry)?,
        config.jump,
    )
}

/// Runs one suite, or all of them.
pub fn run_suite(suite: Suite, config: Option<&RunConfig>, seed: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    for s in suites {
        match s {
            Suite::Kraus => kraus(&mut report, config, seed)?,
            Suite::Gamma => gamma(&mut report, config, seed)?,
            Suite::NoSignal => nosignal(&mut report, config, seed)?,
            Suite::Samols => samols(&mut report, config, seed)?,
            Suite::Heisenberg => heisenberg(&mut report, config, seed)?,
            Suite::All => unreachable!(),
        }
    }
    Ok(report)
}

const KRAUS_X: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

fn kraus(report: &mut VerifyReport, config: Option<&RunConfig>, seed: u64) -> Result<()> {
    let mut completeness = Worst::new();
    let mut chain = Worst::new();
    let mut states: Vec<(StateVector, (usize, usize), String)> = Vec::new();
    if let Some(c) = config.filter(|c| c.geometry.half_width() <= 8) {
        let psi = c.initial_state.build(c.geometry)?;
        for slot in 0..c.geometry.slot_count() {
            states.push((psi.clone(), c.geometry.pair(slot), format!("configured state, pair at slot {slot}")));
        }
    }
    for k in 0..100u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_add(k));
        let n = rng.random_range(1..=3usize);
        let psi = StateVector::random(2 * n, &mut rng)?;
        let slot = rng.random_range(0..2 * n);
        states.push((psi, (slot, (slot + 1) % (2 * n)), format!("instance_seed={} n={n} slot={slot}", seed.wrapping_add(k))));
    }
    for (psi, pair, label) in &states {
        for x in KRAUS_X {
            let jump = JumpSpec::new(x)?;
            let p = vertex_jump_distribution(psi, *pair, jump)?;
            completeness.update((p.iter().sum::<f64>() - 1.0).abs(), || format!("{label} x={x}"));
            for outcome in VertexOutcome::ALL {
                if p[outcome.index()] == 0.0 {
                    continue;
                }
                let (_, norms) = vertex_hit(psi, *pair, outcome, jump)?;
                let (after_l, nl) = link_hit(psi, pair.0, outcome.alpha_l, jump)?;
                let (_, nr) = link_hit(&after_l, pair.1, outcome.alpha_r, jump)?;
                let dev = ((nl * nr).powi(2) - p[outcome.index()]).abs().max((norms.joint().powi(2) - p[outcome.index()]).abs());
                chain.update(dev, || format!("{label} x={x} outcome={outcome}"));
            }
        }
    }
    report.checks.push(completeness.at_most(Suite::Kraus, "kraus_completeness", EXACT_TOLERANCE));
    report.checks.push(chain.at_most(Suite::Kraus, "chain_rule", EXACT_TOLERANCE));
    Ok(())
}

fn seeded_instance(seed: u64, k: u64, n_range: (usize, usize), vertices: (usize, usize)) -> Result<(Instance, u64)> {
    let s = seed.wrapping_add(k);
    let mut rng = ChaCha20Rng::seed_from_u64(s);
    let n = rng.random_range(n_range.0..=n_range.1);
    let v = rng.random_range(vertices.0..=vertices.1);
    Ok((random_instance(&mut rng, n, v)?, s))
}

fn gamma(report: &mut VerifyReport, config: Option<&RunConfig>, seed: u64) -> Result<()> {
    let mut worst = Worst::new();
    let mut commutes = Worst::new();
    let mut noncommuting = Worst::new();
    let mut instances = Vec::new();
    if let Some(c) = config {
        instances.push((configured_instance(c, 6)?, None));
    }
    for k in 0..20 {
        let (inst, s) = seeded_instance(seed, k, (2, 3), (4, 6))?;
        instances.push((inst, Some(s)));
    }
    for (inst, s) in &instances {
        let r = gamma_independence_check(inst, &inst.stem())?;
        worst.update(r.max_deviation, || format!("{} extensions={}", describe(inst, *s), r.extensions));
        for u in 0..inst.dag.len() {
            for v in u + 1..inst.dag.len() {
                let norm = commutator_check(inst, u, v)?;
                if inst.dag.is_spacelike(u, v)? {
                    commutes.update(norm, || format!("{} u={u} v={v}", describe(inst, *s)));
                } else {
                    noncommuting.update(norm, || format!("{} u={u} v={v}", describe(inst, *s)));
                }
            }
        }
    }
    report.checks.push(worst.at_most(Suite::Gamma, "labeling_independence", DISTRIBUTION_TOLERANCE));
    report.checks.push(commutes.at_most(Suite::Gamma, "spacelike_commutation", EXACT_TOLERANCE));
    report.checks.push(noncommuting.above(Suite::Gamma, "timelike_noncommutation", WITNESS_THRESHOLD));
    Ok(())
}

fn nosignal(report: &mut VerifyReport, config: Option<&RunConfig>, seed: u64) -> Result<()> {
    let mut worst = Worst::new();
    let mut tested = 0;
    let mut cases: Vec<(Instance, Option<u64>)> = Vec::new();
    if let Some(c) = config {
        cases.push((configured_instance(c, 8)?, None));
    }
    let mut k = 0;
    while tested < 50 {
        let candidate = cases.pop().map(Ok).unwrap_or_else(|| {
            k += 1;
            seeded_instance(seed, k, (2, 3), (3, 6)).map(|(i, s)| (i, Some(s)))
        })?;
        let (inst, s) = candidate;
        let mut rng = ChaCha20Rng::seed_from_u64(s.unwrap_or(seed) ^ 0x5eed);
        let Some((a, b)) = random_spacelike_regions(&mut rng, &inst.dag)? else {
            continue;
        };
        let mut both: BTreeSet<usize> = a.clone();
        both.extend(&b);
        if PartialStem::closure_of(&inst.dag, &both)?.len() > crate::oracle::ENUMERATION_LIMIT {
            continue;
        }
        let alternative = perturb_region(&mut rng, &inst.r_matrices, &inst.dag, &a)?;
        let r = no_signaling_check(&inst, &a, &b, &alternative)?;
        worst.update(r.max_deviation, || format!("{} A={a:?} B={b:?}", describe(&inst, s)));
        tested += 1;
    }
    report.checks.push(worst.at_most(Suite::NoSignal, "external_no_signaling", DISTRIBUTION_TOLERANCE));
    Ok(())
}

fn samols(report: &mut VerifyReport, config: Option<&RunConfig>, seed: u64) -> Result<()> {
    let mut marginal = Worst::new();
    let mut instances = Vec::new();
    if let Some(c) = config.filter(|c| c.geometry.half_width() <= 2) {
        instances.push((configured_instance(c, 3)?, None));
    }
    for k in 0..10 {
        let (inst, s) = seeded_instance(seed, k, (2, 2), (1, 3))?;
        instances.push((inst, Some(s)));
    }
    for (inst, s) in &instances {
        let labeling = NaturalLabeling::creation_order(&inst.stem());
        let dev = samols_marginal_deviation(inst, &labeling)?;
        marginal.update(dev, || describe(inst, *s));
    }
    report.checks.push(marginal.at_most(Suite::Samols, "surface_marginal_is_born", DISTRIBUTION_TOLERANCE));

    let mut witness = Worst::new();
    for k in 0..10 {
        let s = seed.wrapping_add(k);
        let mut rng = ChaCha20Rng::seed_from_u64(s);
        let motions = [0, 2, 1, 3];
        let (_, dag) = CausalDag::from_motions(crate::lattice::LatticeGeometry::new(2)?, &motions)?;
        let rule = crate::oracle::random::random_rule(&mut rng, &dag);
        let inst = Instance::new(dag, rule, StateVector::random(4, &mut rng)?, JumpSpec::new(1.0)?)?;
        let r = samols_gamma_check(&inst, &inst.stem())?;
        witness.update(r.max_deviation, || describe(&inst, Some(s)));
        if witness.value > WITNESS_THRESHOLD {
            break;
        }
    }
    report.checks.push(witness.above(Suite::Samols, "labeling_dependence_witness", WITNESS_THRESHOLD));
    Ok(())
}

fn heisenberg(report: &mut VerifyReport, config: Option<&RunConfig>, seed: u64) -> Result<()> {
    let mut routes = Worst::new();
    let mut instances = Vec::new();
    if let Some(c) = config.filter(|c| c.geometry.half_width() <= 3) {
        instances.push((configured_instance(c, 4)?, None));
    }
    for k in 0..5u64 {
        let s = seed.wrapping_add(k);
        let mut rng = ChaCha20Rng::seed_from_u64(s);
        let motions = crate::oracle::random::random_motions(&mut rng, crate::lattice::LatticeGeometry::new(2)?, 4)?;
        let (_, dag) = CausalDag::from_motions(crate::lattice::LatticeGeometry::new(2)?, &motions)?;
        let rule = crate::oracle::random::random_rule(&mut rng, &dag);
        let x = rng.random::<f64>();
        instances.push((Instance::new(dag, rule, StateVector::random(4, &mut rng)?, JumpSpec::new(x)?)?, Some(s)));
    }
    let mut invariance = Worst::new();
    for (inst, s) in &instances {
        let labeling = NaturalLabeling::creation_order(&inst.stem());
        let dist = enumerate_distribution(inst, &inst.stem(), &labeling)?;
        for index in 0..dist.len() {
            let h = dist.history(index);
            let a = history_probability(inst, &labeling, &h)?;
            let c = heisenberg_history_probability(inst, &labeling, &h)?;
            let b = dist.probabilities()[index];
            let dev = (a - b).abs().max((a - c).abs()).max((b - c).abs());
            routes.update(dev, || format!("{} atom={}", describe(inst, *s), dist.atom_label(index)));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(s.unwrap_or(seed) ^ 0xbeef);
        for (k, &v) in labeling.sequence().iter().enumerate() {
            let spacelike: BTreeSet<usize> = (0..inst.dag.len())
                .filter(|&u| inst.dag.is_spacelike(u, v).unwrap_or(false))
                .collect();
            if spacelike.is_empty() {
                continue;
            }
            let changed = inst.with_rule(perturb_region(&mut rng, &inst.r_matrices, &inst.dag, &spacelike)?);
            for outcome in VertexOutcome::ALL {
                let before = heisenberg_jump(inst, &labeling, k + 1, outcome)?;
                let after = heisenberg_jump(&changed, &labeling, k + 1, outcome)?;
                invariance.update(max_entry_difference(&before, &after), || {
                    format!("{} k={} changed={spacelike:?}", describe(inst, *s), k + 1)
                });
            }
        }
    }
    report.checks.push(routes.at_most(Suite::Heisenberg, "three_route_agreement", EXACT_TOLERANCE));
    report.checks.push(invariance.at_most(Suite::Heisenberg, "spacelike_invariance", EXACT_TOLERANCE));
    Ok(())
}
