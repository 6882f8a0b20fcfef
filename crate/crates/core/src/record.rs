//! Text serialization of run records.
//!
//! ```text
//! schema = 1
//! digest = <sha256 of everything below this line>
//! --- config
//! <canonical TOML configuration>
//! --- run
//! generator = chacha20(...)
//! samols_initial = 0110        (or -)
//! --- events
//! <ordinal> <i> <j> <pair ordinal> <outcome|skipped|-> <N_L|-> <N_R|->
//! --- final_state              (optional)
//! <index> <re> <im>
//! --- end
//! ```
//!
//! Reals are written with 17 significant digits, so parsing a serialized
//! record returns it exactly.

use std::fmt::Write as _;
use std::iter::Peekable;
use std::path::Path;
use std::str::Lines;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::config::ConfigFile;
use crate::dynamics::{DynamicsKind, Event, RunRecord};
use crate::error::{Error, Result};
use crate::quantum::{StateVector, VertexNorms, NORM_TOLERANCE};

pub const SCHEMA_VERSION: u32 = 1;

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn digest(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

pub fn serialize(record: &RunRecord) -> Result<String> {
    let mut body = String::new();
    body.push_str("--- config\n");
    body.push_str(&ConfigFile::from_run_config(&record.config)?.to_toml()?);
    if !body.ends_with('\n') {
        body.push('\n');
    }
    body.push_str("--- run\n");
    let _ = writeln!(body, "generator = {}", record.generator);
    let initial = match &record.samols_initial {
        Some(bits) => bits.iter().map(|b| char::from(b'0' + b)).collect(),
        None => "-".to_string(),
    };
    let _ = writeln!(body, "samols_initial = {initial}");
    body.push_str("--- events\n");
    for e in &record.events {
        let outcome = match (e.outcome, record.config.dynamics) {
            (Some(o), _) => o.to_string(),
            (None, DynamicsKind::Grw) => "skipped".to_string(),
            (None, _) => "-".to_string(),
        };
        let (nl, nr) = match e.norms {
            Some(n) => (real(n.left), real(n.right)),
            None => ("-".to_string(), "-".to_string()),
        };
        let _ = writeln!(
            body,
            "{} {} {} {} {} {} {}",
            e.ordinal, e.slot_pair.0, e.slot_pair.1, e.pair_ordinal, outcome, nl, nr
        );
    }
    if let Some(state) = &record.final_state {
        body.push_str("--- final_state\n");
        for (index, a) in state.amplitudes().iter().enumerate() {
            let _ = writeln!(body, "{index} {} {}", real(a.re), real(a.im));
        }
    }
    body.push_str("--- end\n");
    Ok(format!("schema = {SCHEMA_VERSION}\ndigest = {}\n{body}", digest(&body)))
}

fn err(msg: impl Into<String>) -> Error {
    Error::Record(msg.into())
}

fn field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    line.and_then(|l| l.strip_prefix(key))
        .and_then(|rest| rest.strip_prefix(" = "))
        .ok_or_else(|| err(format!("expected `{key} = ...`")))
}

fn parse_real(s: &str) -> Result<f64> {
    s.parse().map_err(|_| err(format!("invalid number {s:?}")))
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| err(format!("invalid integer {s:?}")))
}

fn take_section<'a>(lines: &mut Peekable<Lines<'a>>, name: &str) -> Result<Vec<&'a str>> {
    if lines.next() != Some(name) {
        return Err(err(format!("expected `{name}`")));
    }
    let mut out = Vec::new();
    while let Some(l) = lines.next_if(|l| !l.starts_with("--- ")) {
        out.push(l);
    }
    Ok(out)
}

/// Parses and validates a record, including its digest.
pub fn parse(text: &str) -> Result<RunRecord> {
    let mut head = text.splitn(3, '\n');
    let schema = field(head.next(), "schema")?;
    if parse_int::<u32>(schema)? != SCHEMA_VERSION {
        return Err(err(format!("unsupported schema {schema}")));
    }
    let stated = field(head.next(), "digest")?;
    let body = head.next().ok_or_else(|| err("missing body"))?;
    if digest(body) != stated {
        return Err(err("digest mismatch"));
    }

    let mut lines = body.lines().peekable();
    let config_text = take_section(&mut lines, "--- config")?.join("\n");
    let config = ConfigFile::parse(&config_text)
        .and_then(|c| c.to_run_config())
        .map_err(|e| err(format!("config: {e}")))?;

    let run = take_section(&mut lines, "--- run")?;
    let generator = field(run.first().copied(), "generator")?.to_string();
    let initial = field(run.get(1).copied(), "samols_initial")?;
    if run.len() != 2 {
        return Err(err("unexpected lines in run section"));
    }
    let samols_initial = if initial == "-" {
        None
    } else {
        Some(
            initial
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(err("initial configuration must be binary")),
                })
                .collect::<Result<Vec<u8>>>()?,
        )
    };

    let mut events = Vec::new();
    for line in take_section(&mut lines, "--- events")? {
        let cols: Vec<&str> = line.split(' ').collect();
        if cols.len() != 7 {
            return Err(err(format!("malformed event {line:?}")));
        }
        let outcome = match cols[4] {
            "skipped" | "-" => None,
            s => Some(s.parse().map_err(|_| err(format!("invalid outcome {s:?}")))?),
        };
        let norms = match (cols[5], cols[6]) {
            ("-", "-") => None,
            (l, r) => Some(VertexNorms {
                left: parse_real(l)?,
                right: parse_real(r)?,
            }),
        };
        events.push(Event {
            ordinal: parse_int(cols[0])?,
            slot_pair: (parse_int(cols[1])?, parse_int(cols[2])?),
            pair_ordinal: parse_int(cols[3])?,
            outcome,
            norms,
        });
    }

    let mut final_state = None;
    if lines.peek() == Some(&"--- final_state") {
        let rows = take_section(&mut lines, "--- final_state")?;
        let slots = config.geometry.slot_count();
        if rows.len() != 1 << slots {
            return Err(err("final state has the wrong length"));
        }
        let mut amps = Vec::with_capacity(rows.len());
        for (k, line) in rows.iter().enumerate() {
            let cols: Vec<&str> = line.split(' ').collect();
            if cols.len() != 3 || parse_int::<usize>(cols[0])? != k {
                return Err(err(format!("malformed amplitude row {line:?}")));
            }
            amps.push(Complex64::new(parse_real(cols[1])?, parse_real(cols[2])?));
        }
        let state = StateVector::from_raw(slots, amps);
        if (state.norm_sqr() - 1.0).abs() > NORM_TOLERANCE {
            return Err(err("final state is not normalized"));
        }
        final_state = Some(state);
    }
    if take_section(&mut lines, "--- end")?.len() != 0 || lines.next().is_some() {
        return Err(err("content after end marker"));
    }

    let record = RunRecord {
        config,
        generator,
        events,
        samols_initial,
        final_state,
    };
    record.validate()?;
    Ok(record)
}

pub fn write(path: &Path, record: &RunRecord) -> Result<()> {
    std::fs::write(path, serialize(record)?)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<RunRecord> {
    parse(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run, RMatrixRule, RMatrixSpec, RunConfig};
    use crate::lattice::LatticeGeometry;
    use crate::quantum::JumpSpec;

    fn sample(kind: DynamicsKind, p: f64, final_state: bool) -> RunRecord {
        let mut config = RunConfig::new(LatticeGeometry::new(2).unwrap(), kind, 12);
        config.jump = JumpSpec::new(0.3).unwrap();
        config.collapse_probability = p;
        config.seed = 99;
        config.r_matrices = RMatrixRule::uniform(RMatrixSpec::RandomUnitary { seed: 4 });
        config.record_final_state = final_state;
        run(&config).unwrap()
    }

    #[test]
    fn round_trips_every_kind() {
        for record in [
            sample(DynamicsKind::Grw, 0.5, true),
            sample(DynamicsKind::Samols, 1.0, false),
            sample(DynamicsKind::Unitary, 1.0, true),
        ] {
            let text = serialize(&record).unwrap();
            let back = parse(&text).unwrap();
            assert_eq!(back, record);
            assert_eq!(serialize(&back).unwrap(), text);
        }
    }

    #[test]
    fn detects_tampering() {
        let text = serialize(&sample(DynamicsKind::Grw, 1.0, false)).unwrap();
        let tampered = text.replacen("--- events\n0 ", "--- events\n1 ", 1);
        assert!(matches!(parse(&tampered), Err(Error::Record(_))));
        let truncated = &text[..text.len() - 4];
        assert!(parse(truncated).is_err());
        assert!(parse("schema = 2\n").is_err());
    }

    #[test]
    fn empty_run() {
        let mut config = RunConfig::new(LatticeGeometry::new(1).unwrap(), DynamicsKind::Grw, 0);
        config.seed = 1;
        let record = run(&config).unwrap();
        let text = serialize(&record).unwrap();
        assert!(text.contains("--- events\n--- end\n"));
        assert_eq!(parse(&text).unwrap(), record);
    }
}
