use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

fn rumorlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rumorlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

/// Parses CSV text into a header and rows of named fields.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn cases_on_grid(extra: &[&str]) -> BTreeSet<String> {
    let mut args = vec!["region-map", "--nc", "60", "--ny", "60"];
    args.extend_from_slice(extra);
    let out = rumorlab(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(&stdout(&out));
    let i = column(&header, "case");
    rows.into_iter().map(|r| r[i].clone()).collect()
}

#[test]
fn small_region_grid_has_one_row_per_cell() {
    let out = rumorlab(&["region-map", "--nc", "2", "--ny", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("c,y,beta,xbar,case,l,h,ttr,"));
    assert!(!text.contains('\r'));
}

#[test]
fn uncapped_region_map_shows_only_uncapped_cases() {
    let found = cases_on_grid(&["--beta", "0.65"]);
    let allowed: BTreeSet<String> = ["I", "II", "IV", "Invalid"].iter().map(|s| s.to_string()).collect();
    assert!(found.is_subset(&allowed), "{found:?}");
    for case in ["I", "II", "IV"] {
        assert!(found.contains(case), "{case} missing from {found:?}");
    }
}

#[test]
fn capped_region_map_shows_cap_cases() {
    let found = cases_on_grid(&["--beta", "0.75", "--xbar", "0.3"]);
    for case in ["III", "V", "VI"] {
        assert!(found.contains(case), "{case} missing from {found:?}");
    }
}

#[test]
fn heatmap_file_has_the_grid_size() {
    let dir = tempfile::tempdir().unwrap();
    let ppm = dir.path().join("map.ppm");
    let ppm_arg = ppm.to_str().unwrap();
    let out = rumorlab(&["region-map", "--nc", "3", "--ny", "2", "--ppm", ppm_arg, "--ppm-scale", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let bytes = std::fs::read(&ppm).unwrap();
    let header = b"P6\n6 4\n255\n";
    assert!(bytes.starts_with(header));
    assert_eq!(bytes.len(), header.len() + 6 * 4 * 3);
}

#[test]
fn region_map_needs_the_capped_family() {
    let out = rumorlab(&["region-map", "--fn", "rational", "--nc", "2", "--ny", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

fn sweep_column(args: &[&str], name: &str) -> Vec<f64> {
    let out = rumorlab(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(&stdout(&out));
    let status = column(&header, "status");
    assert!(rows.iter().all(|r| r[status] == "ok"));
    let i = column(&header, name);
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn ratio_ignores_the_diffusion_scale() {
    let ratios = sweep_column(&["sweep", "--sweep", "lk=1.5:5:6"], "ttr");
    assert_eq!(ratios.len(), 6);
    for r in &ratios {
        assert!((r - ratios[0]).abs() <= 1e-12, "{ratios:?}");
    }
}

#[test]
fn ratio_falls_with_homophily_when_only_opposing_messages_are_checked() {
    let ratios = sweep_column(
        &["sweep", "--y", "0.97", "--c", "0.02", "--sweep", "beta=0.55:0.95:9"],
        "ttr",
    );
    for pair in ratios.windows(2) {
        assert!(pair[1] < pair[0], "{ratios:?}");
    }
}

#[test]
fn ratio_ignores_the_partisan_share() {
    let ratios = sweep_column(
        &["sweep", "--beta", "0.7", "--y", "0.9", "--c", "0.095", "--xbar", "0.8", "--sweep", "gamma=0,0.2,0.4"],
        "ttr",
    );
    for r in &ratios {
        assert!((r - ratios[0]).abs() <= 1e-9, "{ratios:?}");
    }
}

#[test]
fn two_axis_sweep_is_a_full_grid() {
    let out = rumorlab(&["sweep", "--sweep", "beta=0.6,0.7", "--sweep", "c=0.05:0.1:3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 1 + 6);
}

#[test]
fn sweep_keeps_going_past_failed_points() {
    let out = rumorlab(&["sweep", "--y", "0.94", "--c", "0.04", "--beta", "0.7", "--sweep", "gamma=0,0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = table(&stdout(&out));
    let status = column(&header, "status");
    assert_eq!(rows[0][status], "ok");
    assert_ne!(rows[1][status], "ok");
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "beta = 0.7\ny = 0.9\nc = 0.095\nxbar = 0.8\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let (header, rows) = table(&stdout(&rumorlab(&["equilibrium", "--config", cfg])));
    assert_eq!(rows[0][column(&header, "beta")], "0.7");
    assert_eq!(rows[0][column(&header, "xbar")], "0.8");

    let (header, rows) = table(&stdout(&rumorlab(&["equilibrium", "--config", cfg, "--beta", "0.65"])));
    assert_eq!(rows[0][column(&header, "beta")], "0.65");
    assert_eq!(rows[0][column(&header, "y")], "0.9");
}

#[test]
fn outputs_go_to_files_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("eq.csv");
    let thr_path = dir.path().join("thr.csv");
    let out = rumorlab(&[
        "equilibrium",
        "--out",
        out_path.to_str().unwrap(),
        "--thresholds",
        thr_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let eq = std::fs::read_to_string(&out_path).unwrap();
    assert!(eq.starts_with("y,c,beta,gamma,xbar,l,h,kind,ttr,"));
    let thr = std::fs::read_to_string(&thr_path).unwrap();
    assert_eq!(thr.lines().next(), Some("c_bar,c_under,y_bar"));
}

#[test]
fn steady_state_for_given_rates() {
    let (header, rows) = table(&stdout(&rumorlab(&["steady", "--l", "0.2", "--h", "0.5", "--beta", "0.6"])));
    let iota: f64 = rows[0][column(&header, "iota")].parse().unwrap();
    assert!((iota - 0.5).abs() < 1e-12);
    let ttr: f64 = rows[0][column(&header, "ttr")].parse().unwrap();
    // (1 + h - 2 beta (h - l)) / (1 - h) at the given rates.
    assert!((ttr - (1.5 - 1.2 * 0.3) / 0.5).abs() < 1e-12);
}

#[test]
fn trajectory_ends_near_the_steady_state() {
    let text = stdout(&rumorlab(&["trajectory", "--l", "0.2", "--h", "0.5", "--record-every", "100000"]));
    let (header, rows) = table(&text);
    let iota: f64 = rows.last().unwrap()[column(&header, "iota")].parse().unwrap();
    assert!((iota - 0.5).abs() < 1e-9);
}

#[test]
fn abm_writes_runs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.csv");
    let out = rumorlab(&[
        "abm",
        "--l",
        "0.2",
        "--h",
        "0.5",
        "--population",
        "1000",
        "--horizon",
        "20",
        "--record-every",
        "40",
        "--replicas",
        "3",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(&stdout(&out));
    assert_eq!(header.last().map(String::as_str), Some("seed"));
    let seeds: BTreeSet<&str> = rows.iter().map(|r| r.last().unwrap().as_str()).collect();
    assert_eq!(seeds.len(), 3);
    assert!(Path::new(&summary).exists());
}

#[test]
fn abm_is_reproducible() {
    let args = ["abm", "--l", "0.1", "--h", "0.4", "--population", "1000", "--horizon", "10", "--seed", "9", "--replicas", "1"];
    assert_eq!(rumorlab(&args).stdout, rumorlab(&args).stdout);
}

#[test]
fn partisan_check_passes_on_an_interior_configuration() {
    let out = rumorlab(&["partisan-check", "--beta", "0.7", "--y", "0.9", "--c", "0.095", "--xbar", "0.8"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 4);
}

#[test]
fn exit_codes() {
    // Invalid parameter values and unknown flags.
    assert_eq!(rumorlab(&["equilibrium", "--beta", "1.5"]).status.code(), Some(1));
    assert_eq!(rumorlab(&["equilibrium", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(rumorlab(&["equilibrium", "--config", "/nonexistent/run.cfg"]).status.code(), Some(1));
    // Homophily at an extreme leaves the problem degenerate.
    assert_eq!(rumorlab(&["equilibrium", "--beta", "1"]).status.code(), Some(1));
    // Non-partisans would need to verify more than the cap allows.
    assert_eq!(
        rumorlab(&["equilibrium", "--y", "0.88", "--c", "0.1", "--beta", "0.95", "--gamma", "0.3"]).status.code(),
        Some(1)
    );
    // A zero rate tolerance makes rounding count as disagreement.
    let strict = rumorlab(&["region-map", "--nc", "4", "--ny", "4", "--tol", "0", "--max-disagreement", "0"]);
    assert_eq!(strict.status.code(), Some(3));
    assert_eq!(rumorlab(&["--help"]).status.code(), Some(0));
}
