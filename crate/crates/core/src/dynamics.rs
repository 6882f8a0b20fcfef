//! Stochastic trajectories on the null lattice.
//!
//! Every step consumes exactly four uniform draws from the run's generator,
//! in this order: motion choice, collapse gate, L value, R value. Draws that
//! a dynamics variant does not need are still taken, so the motion sequence
//! for a given seed is the same under GRW, Samols and unitary evolution.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::lattice::{CausalDag, LatticeGeometry, NaturalLabeling, Surface, Vertex};
use crate::quantum::{JumpSpec, StateVector, TwoQubitUnitary, VertexNorms, VertexOutcome};

/// Largest `N` accepted by [`run`].
pub const DEFAULT_MAX_HALF_WIDTH: usize = 13;

/// Identifies the pseudo-random generator and its seeding procedure.
pub const GENERATOR_ID: &str = "chacha20(rand_chacha-0.9,seed_from_u64)";

/// Stream used for the Samols initial configuration, kept apart from the
/// per-step draws.
const INITIAL_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DynamicsKind {
    Grw,
    Samols,
    Unitary,
}

impl fmt::Display for DynamicsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DynamicsKind::Grw => "grw",
            DynamicsKind::Samols => "samols",
            DynamicsKind::Unitary => "unitary",
        })
    }
}

impl FromStr for DynamicsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grw" => Ok(DynamicsKind::Grw),
            "samols" => Ok(DynamicsKind::Samols),
            "unitary" => Ok(DynamicsKind::Unitary),
            other => Err(Error::Config(format!("unknown dynamics {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RMatrixSpec {
    Identity,
    Swap,
    /// Haar-random matrix drawn from its own seed.
    RandomUnitary { seed: u64 },
    Explicit(TwoQubitUnitary),
}

impl RMatrixSpec {
    pub fn resolve(&self) -> TwoQubitUnitary {
        match self {
            RMatrixSpec::Identity => TwoQubitUnitary::identity(),
            RMatrixSpec::Swap => TwoQubitUnitary::swap(),
            RMatrixSpec::RandomUnitary { seed } => {
                TwoQubitUnitary::haar_random(&mut ChaCha20Rng::seed_from_u64(*seed))
            }
            RMatrixSpec::Explicit(u) => u.clone(),
        }
    }
}

/// Replaces the R-matrix for crossings at slot pair `(slot, slot+1)` whose
/// per-pair ordinal lies in `ordinals`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionOverride {
    pub slot: usize,
    pub ordinals: Range<u32>,
    pub spec: RMatrixSpec,
}

impl RegionOverride {
    pub fn covers(&self, slot: usize, pair_ordinal: u32) -> bool {
        self.slot == slot && self.ordinals.contains(&pair_ordinal)
    }
}

/// Assignment of R-matrices to vertices: a default plus region overrides,
/// the last matching override winning.
#[derive(Clone, Debug)]
pub struct RMatrixRule {
    default: RMatrixSpec,
    overrides: Vec<RegionOverride>,
    resolved_default: TwoQubitUnitary,
    resolved_overrides: Vec<TwoQubitUnitary>,
}

impl PartialEq for RMatrixRule {
    fn eq(&self, other: &Self) -> bool {
        self.default == other.default && self.overrides == other.overrides
    }
}

impl Default for RMatrixRule {
    fn default() -> Self {
        Self::uniform(RMatrixSpec::Identity)
    }
}

impl RMatrixRule {
    pub fn uniform(default: RMatrixSpec) -> Self {
        Self::new(default, Vec::new())
    }

    pub fn new(default: RMatrixSpec, overrides: Vec<RegionOverride>) -> Self {
        let resolved_default = default.resolve();
        let resolved_overrides = overrides.iter().map(|o| o.spec.resolve()).collect();
        Self {
            default,
            overrides,
            resolved_default,
            resolved_overrides,
        }
    }

    pub fn with_override(mut self, region: RegionOverride) -> Self {
        self.resolved_overrides.push(region.spec.resolve());
        self.overrides.push(region);
        self
    }

    pub fn default_spec(&self) -> &RMatrixSpec {
        &self.default
    }

    pub fn overrides(&self) -> &[RegionOverride] {
        &self.overrides
    }

    pub fn unitary_for(&self, slot: usize, pair_ordinal: u32) -> &TwoQubitUnitary {
        self.overrides
            .iter()
            .zip(&self.resolved_overrides)
            .rev()
            .find(|(o, _)| o.covers(slot, pair_ordinal))
            .map(|(_, u)| u)
            .unwrap_or(&self.resolved_default)
    }

    pub fn unitary_for_vertex(&self, vertex: &Vertex) -> &TwoQubitUnitary {
        self.unitary_for(vertex.slot_pair.0, vertex.pair_ordinal)
    }

    /// Whether any override targets this vertex.
    pub fn is_overridden(&self, vertex: &Vertex) -> bool {
        self.overrides
            .iter()
            .any(|o| o.covers(vertex.slot_pair.0, vertex.pair_ordinal))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Basis(Vec<u8>),
    Product(Vec<[Complex64; 2]>),
    Amplitudes(Vec<Complex64>),
}

impl InitialState {
    pub fn zeros(geometry: LatticeGeometry) -> Self {
        InitialState::Basis(vec![0; geometry.slot_count()])
    }

    pub fn build(&self, geometry: LatticeGeometry) -> Result<StateVector> {
        let slots = geometry.slot_count();
        let len = match self {
            InitialState::Basis(bits) => bits.len(),
            InitialState::Product(qubits) => qubits.len(),
            InitialState::Amplitudes(amps) => {
                return StateVector::from_amplitudes(slots, amps.clone());
            }
        };
        if len != slots {
            return Err(Error::InvalidState(format!("{len} slot values given for {slots} slots")));
        }
        match self {
            InitialState::Basis(bits) => StateVector::basis(bits),
            InitialState::Product(qubits) => StateVector::product(qubits),
            InitialState::Amplitudes(_) => unreachable!(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub geometry: LatticeGeometry,
    pub steps: usize,
    pub dynamics: DynamicsKind,
    pub jump: JumpSpec,
    /// Probability that a crossed vertex carries a GRW event.
    pub collapse_probability: f64,
    pub r_matrices: RMatrixRule,
    pub initial_state: InitialState,
    pub seed: u64,
    /// Forced motion slots, one per step, instead of uniform choice.
    pub schedule: Option<Vec<usize>>,
    pub record_final_state: bool,
    pub max_half_width: usize,
}

impl RunConfig {
    pub fn new(geometry: LatticeGeometry, dynamics: DynamicsKind, steps: usize) -> Self {
        Self {
            geometry,
            steps,
            dynamics,
            jump: JumpSpec::new(1.0).expect("1 is a valid X"),
            collapse_probability: 1.0,
            r_matrices: RMatrixRule::default(),
            initial_state: InitialState::zeros(geometry),
            seed: 0,
            schedule: None,
            record_final_state: false,
            max_half_width: DEFAULT_MAX_HALF_WIDTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.geometry.half_width() > self.max_half_width {
            return Err(Error::Guardrail {
                what: "lattice half width",
                size: self.geometry.half_width(),
                limit: self.max_half_width,
            });
        }
        if !(0.0..=1.0).contains(&self.collapse_probability) {
            return Err(Error::Config(format!(
                "collapse probability {} outside [0, 1]",
                self.collapse_probability
            )));
        }
        if let Some(schedule) = &self.schedule {
            if schedule.len() < self.steps {
                return Err(Error::Config(format!(
                    "schedule has {} motions for {} steps",
                    schedule.len(),
                    self.steps
                )));
            }
        }
        for o in self.r_matrices.overrides() {
            if o.slot >= self.geometry.slot_count() {
                return Err(Error::Config(format!("override slot {} out of range", o.slot)));
            }
        }
        Ok(())
    }
}

/// One crossed vertex in a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub ordinal: usize,
    pub slot_pair: (usize, usize),
    pub pair_ordinal: u32,
    /// Realized values, `None` for skipped GRW events and unitary runs.
    pub outcome: Option<VertexOutcome>,
    /// `(N_L, N_R)` of a realized GRW event.
    pub norms: Option<VertexNorms>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub config: RunConfig,
    pub generator: String,
    pub events: Vec<Event>,
    /// Realized configuration on the initial surface (Samols only).
    pub samols_initial: Option<Vec<u8>>,
    pub final_state: Option<StateVector>,
}

impl RunRecord {
    /// Slot of each elementary motion, in order.
    pub fn motions(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.slot_pair.0).collect()
    }

    /// Rebuilds the dag swept by the run.
    pub fn dag(&self) -> Result<CausalDag> {
        let (_, dag) = CausalDag::from_motions(self.config.geometry, &self.motions())?;
        Ok(dag)
    }

    /// The crossed vertices in run order, as a natural labeling.
    pub fn labeling(&self) -> Result<NaturalLabeling> {
        let dag = self.dag()?;
        NaturalLabeling::new(&dag, (0..dag.len()).collect())
    }

    /// Structural consistency of the events with the motion sequence.
    pub fn validate(&self) -> Result<()> {
        let dag = self.dag()?;
        if self.events.len() != self.config.steps {
            return Err(Error::Record(format!(
                "{} events for {} steps",
                self.events.len(),
                self.config.steps
            )));
        }
        for (k, (event, vertex)) in self.events.iter().zip(dag.vertices()).enumerate() {
            if event.ordinal != k || event.slot_pair != vertex.slot_pair || event.pair_ordinal != vertex.pair_ordinal {
                return Err(Error::Record(format!("event {k} does not match the swept lattice")));
            }
            let realized = event.outcome.is_some();
            let expects = match self.config.dynamics {
                DynamicsKind::Unitary => Some(false),
                DynamicsKind::Samols => Some(true),
                DynamicsKind::Grw => None,
            };
            if expects.is_some_and(|e| e != realized) {
                return Err(Error::Record(format!("event {k} realization does not fit the dynamics")));
            }
            if event.norms.is_some() && !(self.config.dynamics == DynamicsKind::Grw && realized) {
                return Err(Error::Record(format!("event {k} carries norms without a GRW event")));
            }
        }
        let samols = self.config.dynamics == DynamicsKind::Samols;
        if self.samols_initial.is_some() != samols {
            return Err(Error::Record("initial configuration present iff Samols dynamics".into()));
        }
        if let Some(initial) = &self.samols_initial {
            if initial.len() != self.config.geometry.slot_count() || initial.iter().any(|&b| b > 1) {
                return Err(Error::Record("malformed initial configuration".into()));
            }
        }
        if let Some(state) = &self.final_state {
            if state.slot_count() != self.config.geometry.slot_count() {
                return Err(Error::Record("final state has the wrong dimension".into()));
            }
        }
        Ok(())
    }
}

/// The four uniform draws of one step.
#[derive(Clone, Copy, Debug)]
pub struct StepDraws {
    pub motion: f64,
    pub gate: f64,
    pub left: f64,
    pub right: f64,
}

impl StepDraws {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            motion: rng.random(),
            gate: rng.random(),
            left: rng.random(),
            right: rng.random(),
        }
    }
}

/// Samples a binary value with `P(0) = p0 / (p0 + p1)`.
fn sample_binary(u: f64, p0: f64, p1: f64) -> u8 {
    if u * (p0 + p1) < p0 {
        0
    } else {
        1
    }
}

/// A run in progress.
#[derive(Clone, Debug)]
pub struct Trajectory {
    config: RunConfig,
    surface: Surface,
    state: StateVector,
    dag: CausalDag,
    events: Vec<Event>,
    realized: Option<Vec<u8>>,
    samols_initial: Option<Vec<u8>>,
}

impl Trajectory {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let state = config.initial_state.build(config.geometry)?;
        let mut traj = Self {
            config: config.clone(),
            surface: Surface::initial(config.geometry),
            dag: CausalDag::untracked(config.geometry),
            state,
            events: Vec::new(),
            realized: None,
            samols_initial: None,
        };
        if config.dynamics == DynamicsKind::Samols {
            let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
            rng.set_stream(INITIAL_STREAM);
            let initial = traj.sample_born_configuration(rng.random());
            traj.samols_initial = Some(initial.clone());
            traj.realized = Some(initial);
        }
        Ok(traj)
    }

    /// The per-step generator for a seed.
    pub fn step_rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn sample_born_configuration(&self, u: f64) -> Vec<u8> {
        let amps = self.state.amplitudes();
        let mut acc = 0.0;
        let target = u * self.state.norm_sqr();
        let mut chosen = amps.len() - 1;
        for (index, a) in amps.iter().enumerate() {
            acc += a.norm_sqr();
            if target < acc {
                chosen = index;
                break;
            }
        }
        // fall back to the last configuration with weight, in case rounding overshoots
        if amps[chosen].norm_sqr() == 0.0 {
            chosen = amps.iter().rposition(|a| a.norm_sqr() > 0.0).unwrap_or(0);
        }
        (0..self.state.slot_count()).map(|s| ((chosen >> s) & 1) as u8).collect()
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Realized values on the current surface (Samols only).
    pub fn realized(&self) -> Option<&[u8]> {
        self.realized.as_deref()
    }

    pub fn steps_taken(&self) -> usize {
        self.events.len()
    }

    /// Picks the next motion: uniform over the current RL pairs, or the
    /// scheduled slot when a schedule is configured.
    pub fn choose_motion(&self, draws: &StepDraws) -> Result<usize> {
        if let Some(schedule) = &self.config.schedule {
            let slot = *schedule
                .get(self.events.len())
                .ok_or_else(|| Error::Config("schedule exhausted".into()))?;
            if !self.surface.is_rl_pair(slot) {
                return Err(Error::NotAnRlPair {
                    slot,
                    pattern: self.surface.pattern_string(),
                });
            }
            return Ok(slot);
        }
        let pairs = self.surface.rl_pairs();
        let k = ((draws.motion * pairs.len() as f64) as usize).min(pairs.len() - 1);
        Ok(pairs[k])
    }

    /// Elementary motion at `slot` followed by the vertex's R-matrix. Returns
    /// the new vertex and the pair marginals of the evolved state.
    pub fn evolve(&mut self, slot: usize) -> Result<(usize, [f64; 4])> {
        let v = self.surface.advance(slot, &mut self.dag)?;
        let vertex = *self.dag.vertex(v)?;
        let u = self.config.r_matrices.unitary_for_vertex(&vertex);
        let marginals = self.state.apply_unitary_in_place(vertex.slot_pair, u)?;
        Ok((v, marginals))
    }

    fn push_event(&mut self, v: usize, outcome: Option<VertexOutcome>, norms: Option<VertexNorms>) {
        let vertex = self.dag.vertices()[v];
        self.events.push(Event {
            ordinal: v,
            slot_pair: vertex.slot_pair,
            pair_ordinal: vertex.pair_ordinal,
            outcome,
            norms,
        });
    }

    /// GRW event at the vertex just crossed: realize the L value from
    /// `N_L²`, hit, realize the R value from `N_R²`, hit.
    fn collapse(&mut self, v: usize, marginals: [f64; 4], draws: &StepDraws) -> Result<()> {
        let pair = self.dag.vertices()[v].slot_pair;
        if !(draws.gate < self.config.collapse_probability) {
            self.push_event(v, None, None);
            return Ok(());
        }
        let spec = self.config.jump;
        let j2 = |a: usize, hat: u8| spec.factor(a as u8, hat).powi(2);

        // N_L(α̂_L)² = Σ j²(b_L, α̂_L) P(b_L, b_R)
        let left_weight = |hat: u8| (0..4).map(|k| j2(k >> 1, hat) * marginals[k]).sum::<f64>();
        let (l0, l1) = (left_weight(0), left_weight(1));
        let alpha_l = sample_binary(draws.left, l0, l1);
        let nl2 = if alpha_l == 0 { l0 } else { l1 };
        if !(nl2 > 0.0) {
            return Err(Error::ImpossibleOutcome(format!("L value {alpha_l} at vertex {v}")));
        }

        // after the L hit, P'(b_L, b_R) = j²(b_L, α̂_L) P(b_L, b_R) / N_L²
        let right_weight =
            |hat: u8| (0..4).map(|k| j2(k & 1, hat) * j2(k >> 1, alpha_l) * marginals[k]).sum::<f64>() / nl2;
        let (r0, r1) = (right_weight(0), right_weight(1));
        let alpha_r = sample_binary(draws.right, r0, r1);
        let nr2 = if alpha_r == 0 { r0 } else { r1 };
        if !(nr2 > 0.0) {
            return Err(Error::ImpossibleOutcome(format!("R value {alpha_r} at vertex {v}")));
        }

        let outcome = VertexOutcome::new(alpha_l, alpha_r);
        let norms = VertexNorms {
            left: nl2.sqrt(),
            right: nr2.sqrt(),
        };
        let inv = 1.0 / norms.joint();
        let mut factors = spec.pair_diagonal(outcome);
        for f in factors.iter_mut() {
            *f *= inv;
        }
        self.state.scale_pair(pair, factors);
        self.push_event(v, Some(outcome), Some(norms));
        Ok(())
    }

    /// Samols realization on the new pair, conditioned on the realized
    /// values of every other slot of the surface.
    fn realize_samols(&mut self, v: usize, draws: &StepDraws) -> Result<()> {
        let (i, j) = self.dag.vertices()[v].slot_pair;
        let realized = self.realized.as_mut().expect("Samols trajectory carries realized values");
        let mut base = 0usize;
        for (slot, &b) in realized.iter().enumerate() {
            if slot != i && slot != j {
                base |= (b as usize) << slot;
            }
        }
        let amps = self.state.amplitudes();
        let weight = |k: usize| amps[base | ((k >> 1) << i) | ((k & 1) << j)].norm_sqr();
        let w: [f64; 4] = [weight(0), weight(1), weight(2), weight(3)];
        if !(w.iter().sum::<f64>() > 0.0) {
            return Err(Error::NullCondition);
        }
        let alpha_l = sample_binary(draws.left, w[0] + w[1], w[2] + w[3]);
        let (r0, r1) = if alpha_l == 0 { (w[0], w[1]) } else { (w[2], w[3]) };
        let alpha_r = sample_binary(draws.right, r0, r1);
        realized[i] = alpha_l;
        realized[j] = alpha_r;
        self.push_event(v, Some(VertexOutcome::new(alpha_l, alpha_r)), None);
        Ok(())
    }

    pub fn step_grw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let draws = StepDraws::draw(rng);
        let slot = self.choose_motion(&draws)?;
        let (v, marginals) = self.evolve(slot)?;
        self.collapse(v, marginals, &draws)
    }

    pub fn step_samols<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let draws = StepDraws::draw(rng);
        let slot = self.choose_motion(&draws)?;
        let (v, _) = self.evolve(slot)?;
        self.realize_samols(v, &draws)
    }

    pub fn step_unitary<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let draws = StepDraws::draw(rng);
        let slot = self.choose_motion(&draws)?;
        let (v, _) = self.evolve(slot)?;
        self.push_event(v, None, None);
        Ok(())
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        match self.config.dynamics {
            DynamicsKind::Grw => self.step_grw(rng),
            DynamicsKind::Samols => self.step_samols(rng),
            DynamicsKind::Unitary => self.step_unitary(rng),
        }
    }

    /// Takes one step with externally supplied draws.
    pub fn step_with(&mut self, draws: StepDraws) -> Result<()> {
        let slot = self.choose_motion(&draws)?;
        let (v, marginals) = self.evolve(slot)?;
        match self.config.dynamics {
            DynamicsKind::Grw => self.collapse(v, marginals, &draws),
            DynamicsKind::Samols => self.realize_samols(v, &draws),
            DynamicsKind::Unitary => {
                self.push_event(v, None, None);
                Ok(())
            }
        }
    }

    pub fn into_record(self) -> RunRecord {
        let final_state = self.config.record_final_state.then_some(self.state);
        RunRecord {
            config: self.config,
            generator: GENERATOR_ID.to_string(),
            events: self.events,
            samols_initial: self.samols_initial,
            final_state,
        }
    }
}

/// Executes `config.steps` steps of the configured dynamics. A pure function
/// of the configuration, including its seed.
pub fn run(config: &RunConfig) -> Result<RunRecord> {
    let mut traj = Trajectory::new(config)?;
    let mut rng = Trajectory::step_rng(config.seed);
    for _ in 0..config.steps {
        traj.step(&mut rng)?;
    }
    Ok(traj.into_record())
}

/// Re-runs the record's configuration and checks that every event and the
/// final state are reproduced exactly.
pub fn replay(record: &RunRecord) -> Result<()> {
    if record.generator != GENERATOR_ID {
        return Err(Error::Record(format!("record was produced by generator {:?}", record.generator)));
    }
    let again = run(&record.config)?;
    if again.events != record.events
        || again.samols_initial != record.samols_initial
        || again.final_state != record.final_state
    {
        return Err(Error::Record("replay diverges from the record".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::vertex_jump_distribution;

    fn geometry(n: usize) -> LatticeGeometry {
        LatticeGeometry::new(n).unwrap()
    }

    fn grw(n: usize, steps: usize, x: f64, seed: u64) -> RunConfig {
        let mut config = RunConfig::new(geometry(n), DynamicsKind::Grw, steps);
        config.jump = JumpSpec::new(x).unwrap();
        config.seed = seed;
        config
    }

    #[test]
    fn zero_steps_keeps_initial_state() {
        let mut config = grw(2, 0, 0.5, 1);
        config.record_final_state = true;
        let record = run(&config).unwrap();
        assert!(record.events.is_empty());
        assert_eq!(record.final_state.unwrap(), StateVector::zero(4).unwrap());
    }

    #[test]
    fn runs_are_deterministic() {
        for kind in [DynamicsKind::Grw, DynamicsKind::Samols, DynamicsKind::Unitary] {
            let mut config = grw(3, 40, 0.4, 77);
            config.dynamics = kind;
            config.r_matrices = RMatrixRule::uniform(RMatrixSpec::RandomUnitary { seed: 5 });
            config.record_final_state = true;
            let a = run(&config).unwrap();
            let b = run(&config).unwrap();
            assert_eq!(a, b);
            a.validate().unwrap();
            replay(&a).unwrap();
        }
    }

    #[test]
    fn recorded_motions_form_a_natural_labeling() {
        let record = run(&grw(3, 30, 0.3, 11)).unwrap();
        let labeling = record.labeling().unwrap();
        assert_eq!(labeling.len(), 30);
    }

    #[test]
    fn x_zero_echoes_basis_state() {
        let mut config = grw(2, 25, 0.0, 3);
        config.initial_state = InitialState::Basis(vec![1, 0, 1, 1]);
        let record = run(&config).unwrap();
        for e in &record.events {
            let o = e.outcome.unwrap();
            // identity R-matrices keep each slot's value in place
            assert_eq!(o.alpha_l, [1, 0, 1, 1][e.slot_pair.0]);
            assert_eq!(o.alpha_r, [1, 0, 1, 1][e.slot_pair.1]);
        }
    }

    #[test]
    fn collapse_gate_skips_events() {
        let mut config = grw(2, 200, 0.5, 8);
        config.collapse_probability = 0.0;
        let record = run(&config).unwrap();
        assert!(record.events.iter().all(|e| e.outcome.is_none() && e.norms.is_none()));

        config.collapse_probability = 0.5;
        let record = run(&config).unwrap();
        let skipped = record.events.iter().filter(|e| e.outcome.is_none()).count();
        assert!(skipped > 60 && skipped < 140, "{skipped}");
    }

    #[test]
    fn x_one_matches_unitary_trajectory() {
        let mut config = grw(3, 60, 1.0, 21);
        config.r_matrices = RMatrixRule::uniform(RMatrixSpec::RandomUnitary { seed: 2 });
        let mut unitary = config.clone();
        unitary.dynamics = DynamicsKind::Unitary;

        let mut a = Trajectory::new(&config).unwrap();
        let mut b = Trajectory::new(&unitary).unwrap();
        let mut ra = Trajectory::step_rng(21);
        let mut rb = Trajectory::step_rng(21);
        for _ in 0..60 {
            a.step(&mut ra).unwrap();
            b.step(&mut rb).unwrap();
            assert_eq!(a.surface(), b.surface());
            assert!(a.state().max_abs_difference(b.state()) <= 1e-12);
        }
    }

    #[test]
    fn grw_sampler_uses_pre_hit_distribution() {
        // instrumented replay: the norms recorded for each event reproduce the
        // exact vertex distribution of the state before the hit
        let mut config = grw(2, 30, 0.35, 4);
        config.r_matrices = RMatrixRule::uniform(RMatrixSpec::RandomUnitary { seed: 9 });
        let mut traj = Trajectory::new(&config).unwrap();
        let mut rng = Trajectory::step_rng(4);
        for _ in 0..30 {
            let draws = StepDraws::draw(&mut rng);
            let slot = traj.choose_motion(&draws).unwrap();
            let mut probe = traj.clone();
            let (v, _) = probe.evolve(slot).unwrap();
            let pair = probe.dag().vertices()[v].slot_pair;
            let exact = vertex_jump_distribution(probe.state(), pair, config.jump).unwrap();
            traj.step_with(draws).unwrap();
            let event = traj.events().last().unwrap();
            let p = event.norms.unwrap().joint().powi(2);
            assert!((p - exact[event.outcome.unwrap().index()]).abs() < 1e-12);
            assert!((traj.state().norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn samols_single_pair_uses_full_born_rule() {
        let mut config = RunConfig::new(geometry(1), DynamicsKind::Samols, 1);
        config.r_matrices = RMatrixRule::uniform(RMatrixSpec::RandomUnitary { seed: 1 });
        let mut counts = [0usize; 4];
        let runs = 20_000;
        for seed in 0..runs {
            config.seed = seed;
            let record = run(&config).unwrap();
            counts[record.events[0].outcome.unwrap().index()] += 1;
        }
        let evolved = crate::quantum::apply_unitary(
            &StateVector::zero(2).unwrap(),
            (0, 1),
            &RMatrixSpec::RandomUnitary { seed: 1 }.resolve(),
        )
        .unwrap();
        for (k, &count) in counts.iter().enumerate() {
            let index = (k >> 1) | ((k & 1) << 1);
            let p = evolved.probability(index);
            let sigma = (p * (1.0 - p) / runs as f64).sqrt();
            assert!((count as f64 / runs as f64 - p).abs() < 5.0 * sigma + 1e-9);
        }
    }

    #[test]
    fn schedule_forces_motions() {
        let mut config = grw(2, 4, 0.5, 1);
        config.schedule = Some(vec![2, 0, 3, 1]);
        let record = run(&config).unwrap();
        assert_eq!(record.motions(), vec![2, 0, 3, 1]);
        config.schedule = Some(vec![1, 0, 0, 0]);
        assert!(matches!(run(&config), Err(Error::NotAnRlPair { .. })));
    }

    #[test]
    fn size_guardrail() {
        let config = grw(14, 1, 0.5, 1);
        assert!(matches!(run(&config), Err(Error::Guardrail { size: 14, limit: 13, .. })));
    }

    #[test]
    fn overrides_pick_last_match() {
        let rule = RMatrixRule::uniform(RMatrixSpec::Identity)
            .with_override(RegionOverride {
                slot: 0,
                ordinals: 0..3,
                spec: RMatrixSpec::Swap,
            })
            .with_override(RegionOverride {
                slot: 0,
                ordinals: 1..2,
                spec: RMatrixSpec::RandomUnitary { seed: 4 },
            });
        assert_eq!(rule.unitary_for(0, 0), &TwoQubitUnitary::swap());
        assert_eq!(rule.unitary_for(0, 1), &RMatrixSpec::RandomUnitary { seed: 4 }.resolve());
        assert_eq!(rule.unitary_for(0, 3), &TwoQubitUnitary::identity());
        assert_eq!(rule.unitary_for(2, 0), &TwoQubitUnitary::identity());
    }

    #[test]
    fn explicit_amplitudes_are_normalized() {
        let g = geometry(1);
        let state = InitialState::Amplitudes(vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0), 0.0.into(), 0.0.into()]);
        let psi = state.build(g).unwrap();
        assert!((psi.probability(0) - 0.36).abs() < 1e-15);
        assert!(InitialState::Amplitudes(vec![0.0.into(); 4]).build(g).is_err());
        assert!(InitialState::Basis(vec![0, 1, 0]).build(g).is_err());
    }
}
