//! TOML configuration files.
//!
//! ```toml
//! [lattice]
//! n = 2                      # half width; the surface has 2n slots
//! max_n = 13                 # optional guardrail override
//!
//! [dynamics]
//! kind = "grw"               # grw | samols | unitary
//! steps = 4
//! x = 0.5                    # jump parameter, default 1
//! p = 1.0                    # probability that a vertex carries an event
//! seed = 7
//! schedule = [0, 2, 1, 3]    # optional forced motions
//!
//! [state]
//! kind = "basis"             # basis | product | amplitudes
//! bits = [0, 1, 0, 0]
//! # qubits = [[[re, im], [re, im]], ...]      for product
//! # amplitudes = [[re, im], ...]              for amplitudes
//!
//! [rmatrix]
//! kind = "random_unitary"    # identity | swap | random_unitary | explicit
//! seed = 3
//! # entries = [[[re, im] x4] x4]              for explicit
//!
//! [[rmatrix.override]]
//! slot = 0                   # pair (0, 1)
//! motions = [0, 2]           # per-pair crossing ordinals, half open
//! kind = "swap"
//!
//! [output]
//! dir = "out"
//! final_state = false
//! format = "text"
//!
//! [experiment]               # read only by the experiment subcommand
//! runs = 100
//! ```

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsKind, InitialState, RMatrixRule, RMatrixSpec, RegionOverride, RunConfig, DEFAULT_MAX_HALF_WIDTH};
use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;
use crate::quantum::{JumpSpec, TwoQubitUnitary, VertexOutcome};

type Pair = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub lattice: LatticeSection,
    pub dynamics: DynamicsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmatrix: Option<RMatrixSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub kind: String,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<Vec<[Pair; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<Pair>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RMatrixSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<Pair>>>,
    #[serde(default, rename = "override", skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<OverrideSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideSection {
    pub slot: usize,
    pub motions: [u32; 2],
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<Pair>>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_state: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

/// Parameters read by the experiment subcommand.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Independent runs, seeded `seed, seed+1, ...`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    /// Required outcomes of the first vertices, as `"LR"` strings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early: Option<Vec<String>>,
    /// Vertices after the early window whose outcomes are compared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub late: Option<usize>,
    /// The second initial state of a state-dependence comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternate_state: Option<StateSection>,
    /// Rejection-sampling attempts per configuration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

/// Seeds must fit a TOML integer.
const MAX_SEED: u64 = i64::MAX as u64;

fn check_seed(seed: u64) -> Result<u64> {
    if seed > MAX_SEED {
        return Err(Error::Config(format!("seed {seed} exceeds {MAX_SEED}")));
    }
    Ok(seed)
}

fn complex(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

fn parse_entries(entries: &[Vec<Pair>]) -> Result<TwoQubitUnitary> {
    if entries.len() != 4 || entries.iter().any(|row| row.len() != 4) {
        return Err(Error::Config("explicit R-matrix must be 4×4".into()));
    }
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (r, row) in entries.iter().enumerate() {
        for (c, &z) in row.iter().enumerate() {
            m[r][c] = complex(z);
        }
    }
    TwoQubitUnitary::new(m)
}

fn spec_from(kind: &str, seed: Option<u64>, entries: Option<&Vec<Vec<Pair>>>) -> Result<RMatrixSpec> {
    let unused = |what: &str, present: bool| {
        if present {
            Err(Error::Config(format!("R-matrix kind {kind:?} takes no {what}")))
        } else {
            Ok(())
        }
    };
    match kind {
        "identity" | "swap" => {
            unused("seed", seed.is_some())?;
            unused("entries", entries.is_some())?;
            Ok(if kind == "identity" { RMatrixSpec::Identity } else { RMatrixSpec::Swap })
        }
        "random_unitary" => {
            unused("entries", entries.is_some())?;
            let seed = seed.ok_or_else(|| Error::Config("random_unitary needs a seed".into()))?;
            Ok(RMatrixSpec::RandomUnitary { seed: check_seed(seed)? })
        }
        "explicit" => {
            unused("seed", seed.is_some())?;
            let entries = entries.ok_or_else(|| Error::Config("explicit R-matrix needs entries".into()))?;
            Ok(RMatrixSpec::Explicit(parse_entries(entries)?))
        }
        other => Err(Error::Config(format!("unknown R-matrix kind {other:?}"))),
    }
}

/// `(kind, seed, entries)` of a spec.
fn spec_to(spec: &RMatrixSpec) -> Result<(String, Option<u64>, Option<Vec<Vec<Pair>>>)> {
    Ok(match spec {
        RMatrixSpec::Identity => ("identity".into(), None, None),
        RMatrixSpec::Swap => ("swap".into(), None, None),
        RMatrixSpec::RandomUnitary { seed } => ("random_unitary".into(), Some(check_seed(*seed)?), None),
        RMatrixSpec::Explicit(u) => (
            "explicit".into(),
            None,
            Some(u.entries().iter().map(|row| row.iter().map(|&z| pair(z)).collect()).collect()),
        ),
    })
}

impl StateSection {
    pub fn to_initial_state(&self) -> Result<InitialState> {
        let fields = [self.bits.is_some(), self.qubits.is_some(), self.amplitudes.is_some()];
        if fields.iter().filter(|f| **f).count() != 1 {
            return Err(Error::Config("[state] needs exactly one of bits, qubits, amplitudes".into()));
        }
        match (self.kind.as_str(), &self.bits, &self.qubits, &self.amplitudes) {
            ("basis", Some(bits), _, _) => Ok(InitialState::Basis(bits.clone())),
            ("product", _, Some(q), _) => Ok(InitialState::Product(
                q.iter().map(|[a, b]| [complex(*a), complex(*b)]).collect(),
            )),
            ("amplitudes", _, _, Some(a)) => Ok(InitialState::Amplitudes(a.iter().map(|&z| complex(z)).collect())),
            (kind, ..) => Err(Error::Config(format!("state kind {kind:?} does not match its payload"))),
        }
    }

    pub fn from_initial_state(state: &InitialState) -> Self {
        let mut out = Self {
            kind: String::new(),
            bits: None,
            qubits: None,
            amplitudes: None,
        };
        match state {
            InitialState::Basis(bits) => {
                out.kind = "basis".into();
                out.bits = Some(bits.clone());
            }
            InitialState::Product(q) => {
                out.kind = "product".into();
                out.qubits = Some(q.iter().map(|[a, b]| [pair(*a), pair(*b)]).collect());
            }
            InitialState::Amplitudes(a) => {
                out.kind = "amplitudes".into();
                out.amplitudes = Some(a.iter().map(|&z| pair(z)).collect());
            }
        }
        out
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Validated run configuration.
    pub fn to_run_config(&self) -> Result<RunConfig> {
        let geometry = LatticeGeometry::new(self.lattice.n).map_err(|e| Error::Config(e.to_string()))?;
        let kind: DynamicsKind = self.dynamics.kind.parse()?;
        let mut config = RunConfig::new(geometry, kind, self.dynamics.steps);
        if let Some(max_n) = self.lattice.max_n {
            config.max_half_width = max_n;
        }
        if let Some(x) = self.dynamics.x {
            config.jump = JumpSpec::new(x).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(p) = self.dynamics.p {
            config.collapse_probability = p;
        }
        if let Some(seed) = self.dynamics.seed {
            config.seed = check_seed(seed)?;
        }
        config.schedule = self.dynamics.schedule.clone();
        if let Some(state) = &self.state {
            config.initial_state = state.to_initial_state()?;
            config.initial_state.build(geometry).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(r) = &self.rmatrix {
            let default = spec_from(&r.kind, r.seed, r.entries.as_ref())?;
            let mut overrides = Vec::with_capacity(r.overrides.len());
            for o in &r.overrides {
                if o.motions[0] >= o.motions[1] {
                    return Err(Error::Config(format!("empty override range {:?}", o.motions)));
                }
                overrides.push(RegionOverride {
                    slot: o.slot,
                    ordinals: o.motions[0]..o.motions[1],
                    spec: spec_from(&o.kind, o.seed, o.entries.as_ref())?,
                });
            }
            config.r_matrices = RMatrixRule::new(default, overrides);
        }
        if let Some(out) = &self.output {
            if let Some(format) = out.format.as_deref().filter(|f| *f != "text") {
                return Err(Error::Config(format!("unsupported record format {format:?}")));
            }
            config.record_final_state = out.final_state.unwrap_or(false);
        }
        config.validate().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })?;
        Ok(config)
    }

    /// Canonical file for a run configuration, with every field explicit.
    pub fn from_run_config(config: &RunConfig) -> Result<Self> {
        let (kind, seed, entries) = spec_to(config.r_matrices.default_spec())?;
        let mut overrides = Vec::new();
        for o in config.r_matrices.overrides() {
            let (kind, seed, entries) = spec_to(&o.spec)?;
            overrides.push(OverrideSection {
                slot: o.slot,
                motions: [o.ordinals.start, o.ordinals.end],
                kind,
                seed,
                entries,
            });
        }
        Ok(Self {
            lattice: LatticeSection {
                n: config.geometry.half_width(),
                max_n: (config.max_half_width != DEFAULT_MAX_HALF_WIDTH).then_some(config.max_half_width),
            },
            dynamics: DynamicsSection {
                kind: config.dynamics.to_string(),
                steps: config.steps,
                x: Some(config.jump.x()),
                p: Some(config.collapse_probability),
                seed: Some(check_seed(config.seed)?),
                schedule: config.schedule.clone(),
            },
            state: Some(StateSection::from_initial_state(&config.initial_state)),
            rmatrix: Some(RMatrixSection {
                kind,
                seed,
                entries,
                overrides,
            }),
            output: Some(OutputSection {
                dir: None,
                final_state: Some(config.record_final_state),
                format: None,
            }),
            experiment: None,
        })
    }
}

impl ExperimentSection {
    pub fn early_outcomes(&self) -> Result<Vec<VertexOutcome>> {
        self.early
            .iter()
            .flatten()
            .map(|s| s.parse::<VertexOutcome>().map_err(|e| Error::Config(e.to_string())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FULL: &str = r#"
[lattice]
n = 2

[dynamics]
kind = "grw"
steps = 4
x = 0.5
p = 0.75
seed = 7
schedule = [0, 2, 1, 3]

[state]
kind = "product"
qubits = [[[1.0, 0.0], [0.0, 0.0]], [[0.6, 0.0], [0.0, 0.8]], [[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]

[rmatrix]
kind = "random_unitary"
seed = 3

[[rmatrix.override]]
slot = 0
motions = [0, 2]
kind = "swap"

[output]
dir = "out"
final_state = true
format = "text"
"#;

    #[test]
    fn parses_full_file() {
        let file = ConfigFile::parse(FULL).unwrap();
        let config = file.to_run_config().unwrap();
        assert_eq!(config.steps, 4);
        assert_eq!(config.jump.x(), 0.5);
        assert_eq!(config.collapse_probability, 0.75);
        assert_eq!(config.schedule, Some(vec![0, 2, 1, 3]));
        assert!(config.record_final_state);
        assert_eq!(config.r_matrices.overrides().len(), 1);
        assert_eq!(config.r_matrices.default_spec(), &RMatrixSpec::RandomUnitary { seed: 3 });
    }

    #[test]
    fn defaults() {
        let file = ConfigFile::parse("[lattice]\nn = 1\n[dynamics]\nkind = \"unitary\"\nsteps = 0\n").unwrap();
        let config = file.to_run_config().unwrap();
        assert_eq!(config.jump.x(), 1.0);
        assert_eq!(config.seed, 0);
        assert_eq!(config.initial_state, InitialState::Basis(vec![0, 0]));
    }

    #[test]
    fn rejects_bad_files() {
        let bad = [
            "[lattice]\nn = 1\nm = 2\n[dynamics]\nkind = \"grw\"\nsteps = 1\n",
            "[lattice]\nn = 1\n[dynamics]\nkind = \"collapse\"\nsteps = 1\n",
            "[lattice]\nn = 0\n[dynamics]\nkind = \"grw\"\nsteps = 1\n",
            "[lattice]\nn = 1\n[dynamics]\nkind = \"grw\"\nsteps = 1\nx = 2.0\n",
            "[lattice]\nn = 1\n[dynamics]\nkind = \"grw\"\nsteps = 1\n[state]\nkind = \"basis\"\nbits = [0, 1, 1]\n",
            "[lattice]\nn = 1\n[dynamics]\nkind = \"grw\"\nsteps = 1\n[rmatrix]\nkind = \"random_unitary\"\n",
            "[lattice]\nn = 1\n[dynamics]\nkind = \"grw\"\nsteps = 1\n[rmatrix]\nkind = \"explicit\"\nentries = [[[1.0, 0.0]]]\n",
            "[lattice]\nn = 1\n[dynamics]\nkind = \"grw\"\nsteps = 3\nschedule = [0]\n",
        ];
        for text in bad {
            assert!(matches!(ConfigFile::parse(text).and_then(|f| f.to_run_config()), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn echo_round_trips() {
        let config = ConfigFile::parse(FULL).unwrap().to_run_config().unwrap();
        let text = ConfigFile::from_run_config(&config).unwrap().to_toml().unwrap();
        let again = ConfigFile::parse(&text).unwrap();
        assert_eq!(again.to_run_config().unwrap(), config);
        assert_eq!(again.to_toml().unwrap(), text);
    }

    proptest! {
        #[test]
        fn explicit_amplitudes_round_trip(re in prop::collection::vec(-1.0f64..1.0, 4), im in prop::collection::vec(-1.0f64..1.0, 4), seed in 0u64..=MAX_SEED) {
            let geometry = LatticeGeometry::new(1).unwrap();
            let mut config = RunConfig::new(geometry, DynamicsKind::Grw, 3);
            config.seed = seed;
            config.initial_state = InitialState::Amplitudes(re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect());
            let u = RMatrixSpec::RandomUnitary { seed: 5 }.resolve();
            config.r_matrices = RMatrixRule::new(RMatrixSpec::Explicit(u), vec![]);
            let text = ConfigFile::from_run_config(&config).unwrap().to_toml().unwrap();
            let parsed = ConfigFile::parse(&text).unwrap();
            // degenerate random draws are refused on both sides alike
            if let Ok(back) = parsed.to_run_config() {
                prop_assert_eq!(back, config);
            }
        }
    }
}
