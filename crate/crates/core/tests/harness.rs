use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;

use blowuplab::harness::report::{flags, read_csv, read_jsonl, summary_path, write_csv, COLUMNS};
use blowuplab::harness::scenario::viscous_coefficients;
use blowuplab::harness::{
    run_scenario, verify_scenario, DiagnosticsRecord, OutputFormat, Overrides, Scenario, ScenarioName, Settings,
};
use blowuplab::dynamics::Model;
use blowuplab::Error;

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("blowuplab-harness-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn small(name: ScenarioName, extra: &[(&str, &str)]) -> Scenario {
    let mut o = Overrides::default();
    for (k, v) in extra {
        o.set(k, v).unwrap();
    }
    Scenario::new(name, &o).unwrap()
}

#[test]
fn scenario_names_round_trip() {
    for n in ScenarioName::ALL {
        assert_eq!(n.as_str().parse::<ScenarioName>().unwrap(), n);
    }
    assert_eq!("sec6".parse::<ScenarioName>().unwrap(), ScenarioName::Regularity);
    assert!(matches!("thm9.9".parse::<ScenarioName>(), Err(Error::Config(_))));
}

#[test]
fn half_line_stream_function_matches_its_closed_form() {
    let s = small(ScenarioName::MixedHalfLine, &[("nx", "8"), ("nz", "64")]);
    let m = Model::new(s.model.clone()).unwrap();
    let st = s.initial_state(m.psi_solver()).unwrap();
    let g = *s.grid();
    for (i1, i2, j) in [(1, 1, 0), (3, 5, 7), (4, 4, 30)] {
        let (x1, x2, z) = (g.x(i1), g.x(i2), g.z(j));
        let exact = x1.sin() * x2.sin() * (-(-z).exp() - 4.0 * (-2.0 * z).exp());
        assert!((st.psi.get(i1, i2, j) - exact).abs() < 1e-14);
    }
}

#[test]
fn viscous_profile_meets_both_robin_conditions() {
    let (beta, gamma) = (1.8, 2.0 / 1.8);
    let (c2, c3) = viscous_coefficients(beta, gamma);
    // e^{-m z} contributes (beta - m) to g' + beta g at z = 0
    let robin = |k: f64, cs: [f64; 3]| cs.iter().zip([1.0, 2.0, 3.0]).map(|(c, m)| c * (k - m)).sum::<f64>();
    assert!(robin(beta, [-1.0, c2, c3]).abs() < 1e-12);
    // 2 g - g'' scales e^{-m z} by 2 - m^2
    assert!(robin(gamma, [-1.0, -2.0 * c2, -7.0 * c3]).abs() < 1e-12);
}

#[test]
fn overrides_parse_and_merge() {
    let o = Overrides::parse_str("# grid\nnx = 12\nt-end=0.5  # short\nL = 15\nformat = jsonl\n").unwrap();
    assert_eq!(o.nx, Some(12));
    assert_eq!(o.t_end, Some(0.5));
    assert_eq!(o.truncation, Some(15.0));
    assert_eq!(o.format, Some(OutputFormat::Jsonl));

    let mut cli = Overrides::default();
    cli.set("nx", "20").unwrap();
    let m = o.merged(&cli);
    assert_eq!(m.nx, Some(20));
    assert_eq!(m.t_end, Some(0.5));

    let s = Settings::resolve(ScenarioName::MixedBox, &Overrides::default());
    assert_eq!((s.nx, s.nz, s.beta, s.t_end), (32, 128, 1.8, 20.0));
    assert_eq!(s.height, PI);

    assert!(matches!(Overrides::parse_str("nx 3"), Err(Error::Config(_))));
    assert!(matches!(Overrides::parse_str("colour = red"), Err(Error::Config(_))));
    assert!(matches!(Overrides::parse_str("nx = -1"), Err(Error::Config(_))));
    assert!(matches!(Overrides::parse_str("format = xml"), Err(Error::Config(_))));
}

fn record(t: f64) -> DiagnosticsRecord {
    DiagnosticsRecord {
        t,
        dt: 1.0 / 3.0,
        int_u2_phi: 2.5e-7,
        int_psiz_phi: -1.0,
        int_logu_phi: f64::NAN,
        f: 0.1,
        df: 1e300,
        ddf: -0.0,
        e: f64::INFINITY,
        r: f64::NEG_INFINITY,
        h2_u: PI,
        min_u: 0.0,
        max_u: 7.0,
        flags: flags::BLOWUP | flags::CLIPPED,
    }
}

fn same(a: &DiagnosticsRecord, b: &DiagnosticsRecord, nonfinite_as_nan: bool) -> bool {
    let pairs = [
        (a.t, b.t),
        (a.dt, b.dt),
        (a.int_u2_phi, b.int_u2_phi),
        (a.int_psiz_phi, b.int_psiz_phi),
        (a.int_logu_phi, b.int_logu_phi),
        (a.f, b.f),
        (a.df, b.df),
        (a.ddf, b.ddf),
        (a.e, b.e),
        (a.r, b.r),
        (a.h2_u, b.h2_u),
        (a.min_u, b.min_u),
        (a.max_u, b.max_u),
    ];
    a.flags == b.flags
        && pairs.iter().all(|&(x, y)| {
            if !x.is_finite() && (nonfinite_as_nan || x.is_nan()) {
                y.is_nan() || (!nonfinite_as_nan && x == y)
            } else {
                x == y
            }
        })
}

#[test]
fn csv_and_jsonl_round_trip() {
    let dir = scratch("io");
    let recs = vec![record(0.0), record(0.125)];
    let csv = dir.join("r.csv");
    blowuplab::harness::report::emit(&recs, &csv, OutputFormat::Csv).unwrap();
    let back = read_csv(&csv).unwrap();
    assert_eq!(back.len(), 2);
    assert!(recs.iter().zip(&back).all(|(a, b)| same(a, b, false)));

    let jl = dir.join("r.jsonl");
    blowuplab::harness::report::emit(&recs, &jl, OutputFormat::Jsonl).unwrap();
    let back = read_jsonl(&jl).unwrap();
    assert!(recs.iter().zip(&back).all(|(a, b)| same(a, b, true)));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn csv_layout() {
    let mut buf = Vec::new();
    write_csv(&[], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), COLUMNS.join(",") + "\n");
    let mut buf = Vec::new();
    write_csv(&[DiagnosticsRecord::zero()], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row.split(',').count(), 14);
    assert!(row.ends_with(",0"));
    assert_eq!(summary_path(std::path::Path::new("out/x.csv")), PathBuf::from("out/x.summary.json"));
}

#[test]
fn low_amplitude_fails_the_log_hypothesis() {
    let s = small(ScenarioName::MixedHalfLine, &[("nx", "8"), ("nz", "64"), ("u_amplitude", "0.5")]);
    assert!(matches!(verify_scenario(&s), Err(Error::Hypothesis(m)) if m.contains("A =")));
    assert!(matches!(run_scenario(&s), Err(Error::Hypothesis(_))));
}

#[test]
fn verify_reports_constants() {
    let s = small(ScenarioName::MixedHalfLine, &[("nx", "8"), ("nz", "64")]);
    let v = verify_scenario(&s).unwrap();
    let c = v.constants.unwrap();
    assert!(c.a_positive && c.b_positive && c.t_star.unwrap() > 0.0);
    assert!(v.checks.hypotheses_ok);
    // the discrete identity holds up to the z-discretization error
    let res = |nz: &str| {
        let s = small(ScenarioName::MixedHalfLine, &[("nx", "8"), ("nz", nz)]);
        verify_scenario(&s).unwrap().identity.unwrap().relative_residual()
    };
    let (coarse, fine) = (res("128"), res("256"));
    assert!(fine < 1e-2, "{fine}");
    assert!((3.0..5.0).contains(&(coarse / fine)), "{}", coarse / fine);
}

#[test]
fn runs_are_deterministic_and_files_written() {
    let dir = scratch("det");
    let s = small(ScenarioName::Regularity, &[("t_end", "0.2")]);
    let (a, b) = (run_scenario(&s).unwrap(), run_scenario(&s).unwrap());
    assert!(a.blowup.is_none());
    let (pa, pb) = (dir.join("a.csv"), dir.join("b.csv"));
    a.write(&pa).unwrap();
    b.write(&pb).unwrap();
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    assert_eq!(std::fs::read(summary_path(&pa)).unwrap(), std::fs::read(summary_path(&pb)).unwrap());
    let recs = read_csv(&pa).unwrap();
    assert_eq!(recs.len(), a.records.len());
    assert!((recs.last().unwrap().t - 0.2).abs() < 1e-12);
    std::fs::remove_dir_all(dir).unwrap();
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blowuplab"))
}

#[test]
fn cli_verify_and_errors() {
    let out = cli().args(["verify", "--scenario", "thm3.1", "--nx", "8", "--nz", "64"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("hypotheses hold"));

    let out = cli().args(["verify", "--scenario", "nope"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));
}

#[test]
fn cli_run_writes_output() {
    let dir = scratch("cli");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "t_end = 5\ncadence = 2\n").unwrap();
    let out_path = dir.join("sec6.jsonl");
    let out = cli()
        .args(["run", "--scenario", "sec6", "--t-end", "0.1", "--format", "jsonl", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = read_jsonl(&out_path).unwrap();
    // the CLI flag beats the config file
    assert!((recs.last().unwrap().t - 0.1).abs() < 1e-12);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(summary_path(&out_path)).unwrap()).unwrap();
    assert_eq!(summary["scenario"], "sec6-regularity");
    assert_eq!(summary["settings"]["cadence"], 2);
    std::fs::remove_dir_all(dir).unwrap();
}
