use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bqo(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bqo")).args(args).current_dir(cwd).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const QSIM: &str = "seed = 4\n[qsim]\nd = 3\nomega_r = 1.0\nqubits = [{ delta = 1.0, g = 0.05 }]\ndt = 0.05\nt_max = 60.0\nrecord_stride = 20\ninitial_cavity = 1\ntruncation_tol = 0.02\n";

#[test]
fn perfect_detector_search_reaches_certainty() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.toml",
        "seed = 1\n[search]\nn_cells = 8\ntrue_cell = 6\np_detect = 1.0\np_false = 0.0\n",
    );
    let out = bqo(&["search", "--quiet", "--config", cfg.to_str().unwrap(), "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = tmp.path().join("o/search.csv");
    let (header, rows) = read_csv(&csv);
    assert_eq!(header, ["step", "action", "observation", "entropy", "max_belief"]);
    let h = column(&csv, "entropy");
    assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{h:?}");
    assert!(h.last().unwrap().abs() < 1e-12);
    assert_eq!(*column(&csv, "max_belief").last().unwrap(), 1.0);
    // each inspection clears one cell, so at most n - 1 are needed
    assert!(rows.len() <= 7);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "search");
    assert_eq!(meta["seed"], 1);
    assert_eq!(meta["details"]["found"], true);
}

#[test]
fn every_command_writes_finite_documented_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let configs = [
        ("search", "seed = 2\n[search]\nn_cells = 5\np_detect = 0.7\np_false = 0.2\npolicy = \"brute_force\"\nhorizon = 2\n"),
        ("tsp", "seed = 2\n[tsp]\ncities = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 1.4]]\n"),
        ("qsim", QSIM),
        (
            "noise",
            "seed = 2\n[noise]\nkernel = \"se\"\nvariance = 0.5\ncorrelation_time = 0.3\ndt = 0.05\nn_points = 40\nn_paths = 100\nmax_lag = 5\n[noise.mean]\nkind = \"sinusoid\"\namplitude = 1.0\nomega = 2.0\nphase = 0.0\n[noise.oscillator]\nomega0 = 1.0\n",
        ),
    ];
    let expected: [(&str, &[&str]); 4] = [
        ("search", &["search.csv"]),
        ("tsp", &["tsp_trace.csv", "tour.csv", "summary.csv"]),
        ("qsim", &["qsim.csv"]),
        ("noise", &["noise.csv", "noise_autocorrelation.csv", "noise_paths.csv", "oscillator.csv"]),
    ];
    for ((cmd, text), (_, files)) in configs.iter().zip(expected) {
        let cfg = write(tmp.path(), &format!("{cmd}.toml"), text);
        let out = bqo(&[cmd, "--quiet", "--config", cfg.to_str().unwrap(), "--out", cmd], tmp.path());
        assert!(out.status.success(), "{cmd}: {}", stderr(&out));
        for f in files {
            let (header, rows) = read_csv(&tmp.path().join(cmd).join(f));
            assert!(!rows.is_empty(), "{cmd}/{f} is empty");
            for row in &rows {
                assert_eq!(row.len(), header.len());
                // summary.csv leads with the method name
                let numeric = if *f == "summary.csv" { &row[1..] } else { &row[..] };
                for v in numeric {
                    let x: f64 = v.parse().unwrap_or_else(|_| panic!("{cmd}/{f}: {v:?} is not numeric"));
                    assert!(x.is_finite(), "{cmd}/{f}: {v}");
                }
            }
        }
    }
    let (header, _) = read_csv(&tmp.path().join("qsim/qsim.csv"));
    assert_eq!(
        header,
        ["time", "pop_0", "pop_1", "pop_2", "qubit_exc_1", "photon_number", "purity", "coherence_l1"]
    );
    let (header, rows) = read_csv(&tmp.path().join("tsp/summary.csv"));
    assert_eq!(header, ["method", "tour_length"]);
    let methods: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(methods, ["elastic_net", "nearest_neighbor", "two_opt"]);
}

#[test]
fn resets_lower_final_cavity_excitation() {
    let tmp = tempfile::tempdir().unwrap();
    let closed = write(tmp.path(), "closed.toml", QSIM);
    let open = write(tmp.path(), "open.toml", &QSIM.replace("[qsim]\n", "[qsim]\nrate = 0.2\n"));
    for (cfg, dir) in [(&closed, "closed"), (&open, "open")] {
        let out = bqo(&["qsim", "--quiet", "--config", cfg.to_str().unwrap(), "--out", dir], tmp.path());
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let final_excitation = |dir: &str| 1.0 - column(&tmp.path().join(dir).join("qsim.csv"), "pop_0").last().unwrap();
    let (closed, open) = (final_excitation("closed"), final_excitation("open"));
    assert!(open < closed, "with resets {open} vs without {closed}");
}

#[test]
fn tsplib_triangle_has_perimeter_twelve() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("data")).unwrap();
    write(
        &tmp.path().join("data"),
        "tri.tsp",
        "NAME : tri\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 0\n3 0 4\nEOF\n",
    );
    // instance paths resolve against the config's directory
    let cfg = write(&tmp.path().join("data"), "t.toml", "seed = 3\n[tsp]\ninstance = \"tri.tsp\"\n");
    let out = bqo(&["tsp", "--quiet", "--config", cfg.to_str().unwrap(), "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    for len in column(&tmp.path().join("o/summary.csv"), "tour_length") {
        assert!((len - 12.0).abs() < 1e-12);
    }
    let mut order: Vec<usize> = column(&tmp.path().join("o/tour.csv"), "city").iter().map(|&c| c as usize).collect();
    order.sort_unstable();
    assert_eq!(order, [0, 1, 2]);
}

#[test]
fn bad_tsplib_exits_with_parse_status() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "geo.tsp",
        "NAME : g\nTYPE : TSP\nDIMENSION : 1\nEDGE_WEIGHT_TYPE : GEO\nNODE_COORD_SECTION\n1 0 0\nEOF\n",
    );
    let cfg = write(tmp.path(), "t.toml", "seed = 3\n[tsp]\ninstance = \"geo.tsp\"\n");
    let out = bqo(&["tsp", "--config", cfg.to_str().unwrap(), "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("EUC_2D"));
}

#[test]
fn config_errors_are_all_reported_before_any_work() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.toml",
        "seed = 1\n[search]\nn_cells = 0\np_detect = 1.2\npolicy = \"fastest\"\ncolour = 3\n",
    );
    let out = bqo(&["search", "--config", cfg.to_str().unwrap(), "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    for needle in ["n_cells", "p_detect", "p_false", "policy", "colour"] {
        assert!(err.contains(needle), "missing {needle} in {err}");
    }
    assert!(err.contains("line 4"), "{err}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn subcommand_must_match_config_section() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "q.toml", QSIM);
    let out = bqo(&["noise", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("qsim"));
}

#[test]
fn batch_runs_each_config_in_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write(tmp.path(), "a.toml", "seed = 5\n[search]\nn_cells = 4\np_detect = 0.9\np_false = 0.1\n");
    let b = write(
        tmp.path(),
        "b.toml",
        "seed = 5\n[noise]\nkernel = \"white\"\nvariance = 1.0\ndt = 0.1\nn_points = 10\nn_paths = 20\n",
    );
    let out = bqo(
        &["batch", "--quiet", "--config", a.to_str().unwrap(), "--config", b.to_str().unwrap(), "--out", "runs"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let runs = tmp.path().join("runs");
    assert!(runs.join("000_a/search.csv").exists());
    assert!(runs.join("001_b/noise.csv").exists());
    assert!(!runs.join("000_a/noise.csv").exists());
    assert!(!runs.join("001_b/search.csv").exists());
}

#[test]
fn nothing_is_written_outside_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "n.toml", "seed = 9\noutput_path = \"results\"\n[noise]\nkernel = \"ou\"\nvariance = 1.0\ncorrelation_time = 0.5\ndt = 0.1\nn_points = 20\nn_paths = 30\n");
    let out = bqo(&["noise", "--quiet", "--config", cfg.to_str().unwrap()], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let mut entries: Vec<String> =
        std::fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    entries.sort();
    assert_eq!(entries, ["n.toml", "results"]);
    assert!(tmp.path().join("results/metadata.json").exists());
}

#[test]
fn seed_flag_overrides_config_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "n.toml",
        "seed = 1\n[noise]\nkernel = \"white\"\nvariance = 1.0\ndt = 0.1\nn_points = 10\nn_paths = 20\n",
    );
    let c = cfg.to_str().unwrap();
    for (dir, extra) in [("one", vec![]), ("flag", vec!["--seed", "1"]), ("other", vec!["--seed", "2"])] {
        let mut args = vec!["noise", "--quiet", "--config", c, "--out", dir];
        args.extend(extra);
        assert!(bqo(&args, tmp.path()).status.success());
    }
    let body = |dir: &str| std::fs::read(tmp.path().join(dir).join("noise_paths.csv")).unwrap();
    assert_eq!(body("one"), body("flag"));
    assert_ne!(body("one"), body("other"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("other/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 2);
}
