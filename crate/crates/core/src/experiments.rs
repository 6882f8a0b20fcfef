//! Scripted investigations built on the simulator and the oracle.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::dynamics::{DynamicsKind, InitialState, RMatrixRule, RunConfig, Trajectory};
use crate::error::{Error, Result};
use crate::lattice::{CausalDag, NaturalLabeling};
use crate::oracle::{enumerate_distribution, Instance, ENUMERATION_LIMIT};
use crate::quantum::{vertex_hit, vertex_jump_distribution, JumpSpec, StateVector, VertexOutcome};
use crate::stats::{binary_correlation, proportion_sigma, total_variation};

/// A branch weight below this (or above one minus it) counts as collapsed.
pub const COLLAPSE_THRESHOLD: f64 = 1e-6;
const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Observational,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Observational => "observational",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: BTreeMap<String, String>,
    pub statistics: BTreeMap<String, f64>,
    /// Named numeric series, written as CSV.
    pub traces: BTreeMap<String, Vec<f64>>,
    pub verdict: Verdict,
}

impl ExperimentReport {
    fn new(name: &str, config: &RunConfig) -> Self {
        let mut parameters = BTreeMap::new();
        parameters.insert("n".into(), config.geometry.half_width().to_string());
        parameters.insert("steps".into(), config.steps.to_string());
        parameters.insert("x".into(), config.jump.x().to_string());
        parameters.insert("p".into(), config.collapse_probability.to_string());
        parameters.insert("seed".into(), config.seed.to_string());
        Self {
            name: name.into(),
            parameters,
            statistics: BTreeMap::new(),
            traces: BTreeMap::new(),
            verdict: Verdict::Observational,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("experiment = {}\nverdict = {}\n[parameters]\n", self.name, self.verdict);
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "{k} = {v}");
        }
        out.push_str("[statistics]\n");
        for (k, v) in &self.statistics {
            let _ = writeln!(out, "{k} = {v:.12e}");
        }
        out
    }

    pub fn traces_csv(&self) -> String {
        let mut out = String::from("series,index,value\n");
        for (name, values) in &self.traces {
            for (i, v) in values.iter().enumerate() {
                let _ = writeln!(out, "{name},{i},{v:.17e}");
            }
        }
        out
    }
}

fn seeded(config: &RunConfig, run: usize) -> RunConfig {
    let mut c = config.clone();
    c.seed = config.seed.wrapping_add(run as u64);
    c
}

/// `(|0…0⟩ + |1…1⟩)/√2` on the configured lattice.
pub fn cat_state(config: &RunConfig) -> InitialState {
    let dim = 1usize << config.geometry.slot_count();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[0] = Complex64::new(h, 0.0);
    amps[dim - 1] = Complex64::new(h, 0.0);
    InitialState::Amplitudes(amps)
}

/// Tracks the all-zeros branch weight of a cat state under GRW dynamics
/// with identity R-matrices, one trace per run.
pub fn macro_collapse(config: &RunConfig, runs: usize) -> Result<ExperimentReport> {
    let mut base = config.clone();
    base.dynamics = DynamicsKind::Grw;
    base.initial_state = cat_state(config);
    base.r_matrices = RMatrixRule::default();
    let mut report = ExperimentReport::new("macro_collapse", &base);
    report.parameters.insert("runs".into(), runs.to_string());

    let mut finals = Vec::with_capacity(runs);
    let mut mean_trace = vec![0.0; base.steps + 1];
    for r in 0..runs {
        let c = seeded(&base, r);
        let mut traj = Trajectory::new(&c)?;
        let mut rng = Trajectory::step_rng(c.seed);
        let mut trace = Vec::with_capacity(c.steps + 1);
        trace.push(traj.state().probability(0));
        for _ in 0..c.steps {
            traj.step(&mut rng)?;
            trace.push(traj.state().probability(0));
        }
        for (m, w) in mean_trace.iter_mut().zip(&trace) {
            *m += w / runs as f64;
        }
        finals.push(*trace.last().expect("initial weight"));
        report.traces.insert(format!("run{r:04}"), trace);
    }
    report.traces.insert("mean".into(), mean_trace);
    let collapsed = finals.iter().filter(|w| w.min(1.0 - **w) < COLLAPSE_THRESHOLD).count();
    let at_zero = finals.iter().filter(|w| **w > 1.0 - COLLAPSE_THRESHOLD).count();
    let n = runs.max(1) as f64;
    report.statistics.insert("collapsed_fraction".into(), collapsed as f64 / n);
    report.statistics.insert("collapsed_to_zeros_fraction".into(), at_zero as f64 / n);
    report.statistics.insert("mean_final_weight".into(), finals.iter().sum::<f64>() / n);
    Ok(report)
}

/// Largest difference, over basis configurations, between the prior Born
/// weight and its expectation after one GRW vertex event on `pair`.
pub fn branch_weight_martingale_deviation(psi: &StateVector, pair: (usize, usize), jump: JumpSpec) -> Result<f64> {
    let probs = vertex_jump_distribution(psi, pair, jump)?;
    let mut expected = vec![0.0; psi.dimension()];
    for outcome in VertexOutcome::ALL {
        let p = probs[outcome.index()];
        if p == 0.0 {
            continue;
        }
        let (post, _) = vertex_hit(psi, pair, outcome, jump)?;
        for (e, a) in expected.iter_mut().zip(post.amplitudes()) {
            *e += p * a.norm_sqr();
        }
    }
    Ok(expected
        .iter()
        .enumerate()
        .map(|(c, e)| (e - psi.probability(c)).abs())
        .fold(0.0, f64::max))
}

/// Empirical statistics of realized GRW values over `runs` runs: the
/// fraction of ones per slot and overall, and the correlation between the
/// L and R values of each event. At `X = 1` the values must look like fair
/// independent coins within 3σ.
pub fn noise_profile(config: &RunConfig, runs: usize) -> Result<ExperimentReport> {
    let mut base = config.clone();
    base.dynamics = DynamicsKind::Grw;
    let mut report = ExperimentReport::new("noise_profile", &base);
    report.parameters.insert("runs".into(), runs.to_string());

    let slots = base.geometry.slot_count();
    let mut ones = vec![0u64; slots];
    let mut counts = vec![0u64; slots];
    let mut pairs = Vec::new();
    for r in 0..runs {
        let record = crate::dynamics::run(&seeded(&base, r))?;
        for e in &record.events {
            if let Some(o) = e.outcome {
                pairs.push((o.alpha_l, o.alpha_r));
                for (slot, v) in [(e.slot_pair.0, o.alpha_l), (e.slot_pair.1, o.alpha_r)] {
                    counts[slot] += 1;
                    ones[slot] += v as u64;
                }
            }
        }
    }
    let values: u64 = counts.iter().sum();
    let events = pairs.len() as u64;
    let bias = ones.iter().sum::<u64>() as f64 / values.max(1) as f64;
    let correlation = binary_correlation(&pairs);
    report.statistics.insert("events".into(), events as f64);
    report.statistics.insert("bias".into(), bias);
    report.statistics.insert("lr_correlation".into(), correlation);
    report.traces.insert(
        "slot_bias".into(),
        ones.iter().zip(&counts).map(|(o, c)| *o as f64 / (*c).max(1) as f64).collect(),
    );

    if base.jump.x() == 1.0 && events > 0 {
        let bias_bound = 3.0 * proportion_sigma(0.5, values);
        let corr_bound = 3.0 / (events as f64).sqrt();
        report.statistics.insert("bias_bound".into(), bias_bound);
        report.statistics.insert("correlation_bound".into(), corr_bound);
        let ok = (bias - 0.5).abs() <= bias_bound && correlation.abs() <= corr_bound;
        report.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    }
    Ok(report)
}

/// Late-window outcome distribution given the early window, for one
/// initial state.
struct Conditional {
    probabilities: Vec<f64>,
    accepted: usize,
}

fn late_index(outcomes: &[VertexOutcome]) -> usize {
    outcomes.iter().fold(0, |acc, o| 4 * acc + o.index())
}

fn exact_conditional(config: &RunConfig, motions: &[usize], early: &[VertexOutcome], late: usize) -> Result<Conditional> {
    let (_, dag) = CausalDag::from_motions(config.geometry, motions)?;
    let psi0 = config.initial_state.build(config.geometry)?;
    let instance = Instance::new(dag, config.r_matrices.clone(), psi0, config.jump)?;
    let stem = instance.stem();
    let labeling = NaturalLabeling::creation_order(&stem);
    let dist = enumerate_distribution(&instance, &stem, &labeling)?;
    let mut joint = vec![0.0; 1 << (2 * late)];
    for (index, &p) in dist.probabilities().iter().enumerate() {
        let h = dist.history(index);
        let outcomes: Vec<VertexOutcome> = h.outcomes.values().copied().collect();
        if outcomes[..early.len()] == *early {
            joint[late_index(&outcomes[early.len()..])] += p;
        }
    }
    let mass: f64 = joint.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::IncompatibleHistory("early outcomes have probability 0".into()));
    }
    Ok(Conditional {
        probabilities: joint.iter().map(|p| p / mass).collect(),
        accepted: 0,
    })
}

fn sampled_conditional(config: &RunConfig, early: &[VertexOutcome], late: usize, samples: usize) -> Result<Conditional> {
    let mut counts = vec![0usize; 1 << (2 * late)];
    let mut accepted = 0;
    for k in 0..samples {
        let record = crate::dynamics::run(&seeded(config, k))?;
        let outcomes: Option<Vec<VertexOutcome>> = record.events.iter().map(|e| e.outcome).collect();
        let Some(outcomes) = outcomes else { continue };
        if outcomes[..early.len()] == *early {
            counts[late_index(&outcomes[early.len()..])] += 1;
            accepted += 1;
        }
    }
    if accepted == 0 {
        return Err(Error::IncompatibleHistory(format!("no run out of {samples} reproduced the early outcomes")));
    }
    Ok(Conditional {
        probabilities: counts.iter().map(|&c| c as f64 / accepted as f64).collect(),
        accepted,
    })
}

fn resample(rng: &mut ChaCha20Rng, probs: &[f64], n: usize) -> Vec<f64> {
    let Ok(dist) = WeightedIndex::new(probs) else {
        return probs.to_vec();
    };
    let mut counts = vec![0usize; probs.len()];
    for _ in 0..n {
        counts[dist.sample(rng)] += 1;
    }
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

/// Compares the late-window outcome distribution, conditioned on a shared
/// early history, under the configured initial state and `alternate`.
///
/// The motion sequence is taken from `config.schedule`. When the whole
/// window fits the oracle the conditionals are exact; otherwise they are
/// estimated by rejection sampling over `samples` seeds and the distance
/// carries a bootstrap 95% interval.
pub fn kent_state_dependence(
    config: &RunConfig,
    alternate: &InitialState,
    early: &[VertexOutcome],
    late: usize,
    samples: usize,
) -> Result<ExperimentReport> {
    let window = early.len() + late;
    let schedule = config
        .schedule
        .as_ref()
        .filter(|s| s.len() >= window)
        .ok_or_else(|| Error::Precondition(format!("a schedule of at least {window} motions is required")))?;
    if config.collapse_probability != 1.0 {
        return Err(Error::Precondition("every vertex must carry an event (p = 1)".into()));
    }
    let mut first = config.clone();
    first.dynamics = DynamicsKind::Grw;
    first.steps = window;
    first.schedule = Some(schedule[..window].to_vec());
    let mut second = first.clone();
    second.initial_state = alternate.clone();

    let mut report = ExperimentReport::new("kent", &first);
    report.parameters.insert(
        "early".into(),
        early.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(","),
    );
    report.parameters.insert("late".into(), late.to_string());

    let exact = window <= ENUMERATION_LIMIT && config.geometry.half_width() <= crate::oracle::ENUMERATION_MAX_HALF_WIDTH;
    let (a, b) = if exact {
        report.parameters.insert("method".into(), "exact".into());
        (
            exact_conditional(&first, &schedule[..window], early, late)?,
            exact_conditional(&second, &schedule[..window], early, late)?,
        )
    } else {
        report.parameters.insert("method".into(), "rejection".into());
        report.parameters.insert("samples".into(), samples.to_string());
        (
            sampled_conditional(&first, early, late, samples)?,
            sampled_conditional(&second, early, late, samples)?,
        )
    };
    let tv = total_variation(&a.probabilities, &b.probabilities);
    report.statistics.insert("tv_distance".into(), tv);
    report.traces.insert("late_given_early_a".into(), a.probabilities.clone());
    report.traces.insert("late_given_early_b".into(), b.probabilities.clone());
    if exact {
        report.statistics.insert("tv_ci_low".into(), tv);
        report.statistics.insert("tv_ci_high".into(), tv);
    } else {
        report.statistics.insert("accepted_a".into(), a.accepted as f64);
        report.statistics.insert("accepted_b".into(), b.accepted as f64);
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let mut tvs: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
            .map(|_| {
                let ra = resample(&mut rng, &a.probabilities, a.accepted);
                let rb = resample(&mut rng, &b.probabilities, b.accepted);
                total_variation(&ra, &rb)
            })
            .collect();
        tvs.sort_by(f64::total_cmp);
        report.statistics.insert("tv_ci_low".into(), tvs[BOOTSTRAP_RESAMPLES * 25 / 1000]);
        report.statistics.insert("tv_ci_high".into(), tvs[BOOTSTRAP_RESAMPLES * 975 / 1000]);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::RMatrixSpec;
    use crate::lattice::LatticeGeometry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(n: usize, steps: usize, x: f64) -> RunConfig {
        let mut c = RunConfig::new(LatticeGeometry::new(n).unwrap(), DynamicsKind::Grw, steps);
        c.jump = JumpSpec::new(x).unwrap();
        c.seed = 17;
        c
    }

    #[test]
    fn martingale_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for x in [0.0, 0.3, 1.0] {
            let psi = StateVector::random(4, &mut rng).unwrap();
            assert!(branch_weight_martingale_deviation(&psi, (3, 0), JumpSpec::new(x).unwrap()).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn macro_collapse_limits() {
        let flat = macro_collapse(&config(2, 10, 1.0), 3).unwrap();
        for w in &flat.traces["mean"] {
            assert!((w - 0.5).abs() < 1e-12);
        }
        let projective = macro_collapse(&config(2, 3, 0.0), 20).unwrap();
        assert_eq!(projective.statistics["collapsed_fraction"], 1.0);
        for r in 0..20 {
            let w = projective.traces[&format!("run{r:04}")][1];
            assert!(w == 0.0 || w == 1.0, "{w}");
        }
        assert_eq!(projective.verdict, Verdict::Observational);
    }

    #[test]
    fn noise_profile_verdicts() {
        let fair = noise_profile(&config(2, 50, 1.0), 40).unwrap();
        assert_eq!(fair.verdict, Verdict::Pass, "{}", fair.to_text());
        let mut echo = config(2, 20, 0.0);
        echo.initial_state = InitialState::Basis(vec![1, 0, 1, 1]);
        let report = noise_profile(&echo, 5).unwrap();
        assert_eq!(report.traces["slot_bias"], vec![1.0, 0.0, 1.0, 1.0]);
        assert_eq!(report.verdict, Verdict::Observational);
    }

    #[test]
    fn kent_identical_states_and_echo() {
        let mut c = config(2, 0, 0.4);
        c.r_matrices = RMatrixRule::uniform(RMatrixSpec::RandomUnitary { seed: 8 });
        c.schedule = Some(vec![0, 2, 1, 3, 0, 2]);
        let early = [VertexOutcome::new(0, 1), VertexOutcome::new(1, 0)];
        let same = kent_state_dependence(&c, &c.initial_state.clone(), &early, 3, 0).unwrap();
        assert_eq!(same.statistics["tv_distance"], 0.0);
        assert_eq!(same.parameters["method"], "exact");

        let mut echo = config(2, 0, 0.0);
        echo.schedule = Some(vec![0, 2, 1, 3]);
        echo.initial_state = InitialState::Basis(vec![1, 0, 1, 0]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Complex64::new(0.0, 0.0); 16];
        amps[0b0101] = Complex64::new(h, 0.0);
        amps[0b1010] = Complex64::new(0.0, h);
        let alt = InitialState::Amplitudes(amps);
        let e = [VertexOutcome::new(1, 0), VertexOutcome::new(1, 0)];
        let report = kent_state_dependence(&echo, &alt, &e, 2, 0).unwrap();
        assert_eq!(report.statistics["tv_distance"], 0.0);

        let impossible = [VertexOutcome::new(1, 1), VertexOutcome::new(1, 1)];
        assert!(matches!(
            kent_state_dependence(&echo, &alt, &impossible, 2, 0),
            Err(Error::IncompatibleHistory(_))
        ));
    }

    #[test]
    fn kent_sampled_identical_states() {
        let mut c = config(5, 0, 0.5);
        c.schedule = Some(vec![0, 2, 4, 6, 8, 1, 3, 5, 7]);
        let early = [VertexOutcome::new(0, 0); 5];
        let report = kent_state_dependence(&c, &c.initial_state.clone(), &early, 4, 200).unwrap();
        assert_eq!(report.parameters["method"], "rejection");
        assert_eq!(report.statistics["tv_distance"], 0.0);
    }
}
