use nullcollapse::dynamics::{self, DynamicsKind, InitialState, RMatrixRule, RMatrixSpec, RunConfig};
use nullcollapse::lattice::LatticeGeometry;
use nullcollapse::quantum::JumpSpec;
use nullcollapse::record;
use proptest::prelude::*;

fn config(n: usize, kind: u8, steps: usize, x: f64, p: f64, seed: u64, final_state: bool) -> RunConfig {
    let geometry = LatticeGeometry::new(n).unwrap();
    let dynamics = [DynamicsKind::Grw, DynamicsKind::Samols, DynamicsKind::Unitary][kind as usize];
    let mut c = RunConfig::new(geometry, dynamics, steps);
    c.jump = JumpSpec::new(x).unwrap();
    c.collapse_probability = p;
    c.seed = seed;
    c.r_matrices = RMatrixRule::uniform(RMatrixSpec::RandomUnitary { seed: seed ^ 0x55 });
    c.initial_state = InitialState::Basis((0..geometry.slot_count()).map(|s| (s % 2) as u8).collect());
    c.record_final_state = final_state;
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn file_round_trip(
        n in 1usize..=3,
        kind in 0u8..3,
        steps in 0usize..20,
        x in 0.0f64..=1.0,
        p in 0.0f64..=1.0,
        seed in 0u64..=i64::MAX as u64,
        final_state in any::<bool>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.txt");
        let rec = dynamics::run(&config(n, kind, steps, x, p, seed, final_state)).unwrap();
        record::write(&path, &rec).unwrap();
        let back = record::read(&path).unwrap();
        prop_assert_eq!(&back, &rec);
        dynamics::replay(&back).unwrap();
    }
}

#[test]
fn every_line_is_covered_by_the_digest() {
    let rec = dynamics::run(&config(2, 0, 6, 0.5, 1.0, 17, true)).unwrap();
    let text = record::serialize(&rec).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let mut rejected = 0;
    let mut candidates = 0;
    for (k, line) in lines.iter().enumerate() {
        if line.starts_with("digest") || line.trim().is_empty() {
            continue;
        }
        candidates += 1;
        let mut altered = lines.clone();
        let changed = format!("{line}x");
        altered[k] = &changed;
        if record::parse(&(altered.join("\n") + "\n")).is_err() {
            rejected += 1;
        }
    }
    assert_eq!(rejected, candidates);
}
