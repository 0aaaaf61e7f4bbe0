use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn risvs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risvs")).args(args).output().unwrap()
}

fn shipped() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios/default.toml")
        .display()
        .to_string()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn acquire_writes_four_files_with_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = risvs(&["acquire", "--scenario", &shipped(), "--out", out, "--gamma", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for path in ["direct", "ris"] {
        let disp = String::from_utf8(read(dir.path(), &format!("{path}_displacement.csv"))).unwrap();
        assert!(disp.starts_with("time_s,displacement_m\n"));
        assert_eq!(disp.lines().count(), 241);
        assert!(!disp.contains('\r'));
        let spec = String::from_utf8(read(dir.path(), &format!("{path}_spectrum.csv"))).unwrap();
        assert!(spec.starts_with("freq_Hz,power\n"));
        let meta: serde_json::Value =
            serde_json::from_slice(&read(dir.path(), &format!("{path}_spectrum.csv.meta.json"))).unwrap();
        assert_eq!(meta["seed"], 1);
        assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
        assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    }
    let csvs = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 4);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = dir.path().to_str().unwrap();
        assert!(risvs(&["acquire", "--out", out, "--seed", "7"]).status.success());
        assert!(risvs(&["loop", "--out", out, "--seed", "7", "--windows", "2"]).status.success());
        assert!(risvs(&["sweep", "--out", out, "--seed", "7", "--gammas", "0.2,0.8", "--seeds", "2"])
            .status
            .success());
    }
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 2 * (4 + 1 + 2));
    for n in names {
        assert_eq!(read(a.path(), &n), read(b.path(), &n), "{n}");
    }
}

#[test]
fn sweep_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = risvs(&["sweep", "--out", out, "--strategy", "spatial", "--seeds", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(read(dir.path(), "sweep_spatial.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("gamma,path,seed,peak_freq_Hz,prominence_db"));
    assert_eq!(lines.count(), 2 * 11 * 20);
}

#[test]
fn single_gamma_sweep_matches_acquire() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(risvs(&["sweep", "--out", out, "--strategy", "spatial", "--gammas", "0.5", "--seeds", "1", "--seed", "3"])
        .status
        .success());
    assert!(risvs(&["acquire", "--out", out, "--strategy", "spatial", "--gamma", "0.5", "--seed", "3"])
        .status
        .success());
    let sweep = String::from_utf8(read(dir.path(), "sweep_spatial.csv")).unwrap();
    for line in sweep.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let spectrum = String::from_utf8(read(dir.path(), &format!("{}_spectrum.csv", f[1]))).unwrap();
        let peak: f64 = f[3].parse().unwrap();
        // the sweep's peak is the acquire spectrum's in-band maximum
        let best = spectrum
            .lines()
            .skip(1)
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap())
            })
            .filter(|(fr, _)| (0.05 - 1e-12..=0.7 + 1e-12).contains(fr))
            .fold((0.0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert_eq!(best.0, peak);
    }
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let o = risvs(&["acquire", "--scenario", "/no/such/scene.toml", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/scene.toml"));

    let o = risvs(&["sweep", "--out", out, "--gammas", ""]);
    assert_eq!(o.status.code(), Some(1));

    let o = risvs(&["acquire", "--out", out, "--gamma", "1.5"]);
    assert_eq!(o.status.code(), Some(1));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[radar]\ncarrier = 7.15e9\n").unwrap();
    let o = risvs(&["acquire", "--scenario", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.toml"));

    assert_eq!(risvs(&["frobnicate"]).status.code(), Some(1));

    // output path is a file: runtime error
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = risvs(&["acquire", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_subset_reports_lines() {
    let o = risvs(&["selftest", "--only", "3,4,6"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 3);
    assert!(text.contains("3 of 3 criteria passed"));
    assert_eq!(risvs(&["selftest", "--only", "42"]).status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let o = risvs(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("selftest"));
}
