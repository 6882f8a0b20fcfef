use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
[lattice]
n = 2

[dynamics]
kind = "grw"
steps = 4
x = 0.5
seed = 3
schedule = [0, 2, 1, 3]

[state]
kind = "product"
qubits = [[[0.6, 0.0], [0.8, 0.0]], [[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]], [[0.8, 0.0], [0.0, 0.6]]]

[rmatrix]
kind = "random_unitary"
seed = 5

[experiment]
runs = 20
"#;

fn nullcollapse(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nullcollapse"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn setup(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_writes_records_and_summary() {
    let dir = setup(CONFIG);
    let o = nullcollapse(&["simulate", "--config", "run.toml", "--count", "3", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for k in 0..3 {
        assert!(dir.path().join(format!("out/record_{k:04}.txt")).exists());
    }
    let summary = std::fs::read_to_string(dir.path().join("out/summary.tsv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "ordinal\t00\t01\t10\t11\tunrealized");
    assert_eq!(lines.len(), 5);
    for line in &lines[1..] {
        let total: usize = line.split('\t').skip(1).map(|c| c.parse::<usize>().unwrap()).sum();
        assert_eq!(total, 3);
    }
}

#[test]
fn simulate_is_deterministic() {
    let dir = setup(CONFIG);
    for out in ["a", "b"] {
        let o = nullcollapse(&["simulate", "--config", "run.toml", "--count", "2", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    for k in 0..2 {
        let name = format!("record_{k:04}.txt");
        assert_eq!(
            std::fs::read(dir.path().join("a").join(&name)).unwrap(),
            std::fs::read(dir.path().join("b").join(&name)).unwrap()
        );
    }
}

#[test]
fn oracle_table_sums_to_one() {
    let dir = setup(CONFIG);
    let o = nullcollapse(&["oracle", "--config", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# vertices [0, 1, 2, 3]\noutcome\tprobability\n"));
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 257);
    let sum: f64 = rows[..256].iter().map(|r| r.split('\t').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((sum - 1.0).abs() < 1e-9);
    assert!(rows[256].starts_with("total\t1.0000000000"));

    let o = nullcollapse(&["oracle", "--config", "run.toml", "--stem", "0,1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2 + 16 + 1);

    let o = nullcollapse(&["oracle", "--config", "run.toml", "--stem", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2), "a stem must be past-closed");
}

#[test]
fn verify_suites_pass() {
    let dir = setup(CONFIG);
    for suite in ["kraus", "gamma", "nosignal", "samols", "heisenberg"] {
        let o = nullcollapse(&["verify", suite, "--seed", "1"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{suite}: {}", stdout(&o));
        assert!(stdout(&o).contains("PASS"));
        assert!(!stdout(&o).contains("FAIL"));
    }
    let o = nullcollapse(&["verify", "gamma", "--config", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn render_text_and_image() {
    let dir = setup(CONFIG);
    assert_eq!(
        nullcollapse(&["simulate", "--config", "run.toml", "--out", "out"], dir.path()).status.code(),
        Some(0)
    );
    let o = nullcollapse(&["render", "out/record_0000.txt"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.matches('*').count(), 4, "{text}");
    assert!(text.chars().any(|c| c == '0' || c == '1'));

    let o = nullcollapse(&["render", "out/record_0000.txt", "--format", "image", "--out", "d.png"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let png = std::fs::read(dir.path().join("d.png")).unwrap();
    assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");
}

#[test]
fn tampered_record_fails_to_render() {
    let dir = setup(CONFIG);
    nullcollapse(&["simulate", "--config", "run.toml", "--out", "out"], dir.path());
    let path = dir.path().join("out/record_0000.txt");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("grw", "unitary", 1)).unwrap();
    let o = nullcollapse(&["render", "out/record_0000.txt"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn experiments_write_reports() {
    let config = CONFIG.replace("x = 0.5", "x = 1.0").replace("schedule = [0, 2, 1, 3]\n", "");
    let dir = setup(&config);
    for name in ["macro_collapse", "noise_profile"] {
        let o = nullcollapse(&["experiment", name, "--config", "run.toml", "--out", "exp"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{name}: {}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join(format!("exp/{name}_report.txt")).exists());
        let csv = std::fs::read_to_string(dir.path().join(format!("exp/{name}_traces.csv"))).unwrap();
        assert!(csv.lines().count() > 1);
    }
}

#[test]
fn kent_experiment() {
    let config = r#"
[lattice]
n = 2

[dynamics]
kind = "grw"
steps = 4
x = 0.5
seed = 9
schedule = [0, 2, 1, 3]

[state]
kind = "basis"
bits = [1, 0, 1, 0]

[rmatrix]
kind = "random_unitary"
seed = 4

[experiment]
early = ["10"]
late = 1
samples = 2000

[experiment.alternate_state]
kind = "amplitudes"
amplitudes = [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.7071067811865476, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.7071067811865476, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
"#;
    let dir = setup(config);
    let o = nullcollapse(&["experiment", "kent", "--config", "run.toml", "--out", "exp"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("tv_distance"));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = setup(&CONFIG.replace("n = 2", "n = 2\nwidth = 4"));
    let o = nullcollapse(&["simulate", "--config", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("width"));

    let dir = setup(&CONFIG.replace("n = 2", "n = 14"));
    assert_eq!(nullcollapse(&["simulate", "--config", "run.toml"], dir.path()).status.code(), Some(2));

    let dir = setup(CONFIG);
    assert_eq!(nullcollapse(&["simulate", "--config", "missing.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(nullcollapse(&["experiment", "bogus", "--config", "run.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(nullcollapse(&["render", "missing.txt"], dir.path()).status.code(), Some(1));
}
