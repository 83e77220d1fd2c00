use std::fs;
use stretch_chaos::cli::run;

fn s(p: &std::path::Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn olg_verification_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("olg");
    let code = run([
        "stretch-chaos", "verify", "olg2d", "--mu", "80", "--b", "2", "--beta", "1.3", "--K", "6", "--n-paths", "40",
        "--n-samples", "200", "--max-period", "2", "--out", &s(&out),
    ]);
    assert_eq!(code, 0);
    for f in ["conditions.json", "stretch.json", "certificate.json", "orbits.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let cert: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["schema"], "sc-report/1");
}

#[test]
fn entropy_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("golden.txt");
    fs::write(&good, "0 1\n1 1\n").unwrap();
    assert_eq!(run(["stretch-chaos", "entropy", &s(&good)]), 0);
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "0 x\n1 1\n").unwrap();
    assert_eq!(run(["stretch-chaos", "entropy", &s(&bad)]), 65);
    assert_eq!(run(["stretch-chaos", "entropy", &s(&dir.path().join("missing.txt"))]), 66);
}

#[test]
fn usage_errors() {
    assert_eq!(run(["stretch-chaos", "frobnicate"]), 64);
    assert_eq!(run(["stretch-chaos", "verify", "olg2d", "--mu", "80"]), 64);
}

#[test]
fn cutcheck_on_masks() {
    let dir = tempfile::tempdir().unwrap();
    let wall = dir.path().join("wall.pbm");
    fs::write(&wall, "P1\n4 3\n0 1 0 0\n0 1 0 0\n0 1 0 0\n").unwrap();
    assert_eq!(run(["stretch-chaos", "cutcheck", &s(&wall)]), 0);
    assert_eq!(run(["stretch-chaos", "cutcheck", &s(&wall), "--direction", "down-up"]), 1);
    let gap = dir.path().join("gap.pbm");
    fs::write(&gap, "P1\n4 3\n0 1 0 0\n0 0 0 0\n0 1 0 0\n").unwrap();
    assert_eq!(run(["stretch-chaos", "cutcheck", &s(&gap)]), 1);
}

#[test]
fn orbit_csv_for_logistic_word() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("orbit.csv");
    let code = run(["stretch-chaos", "orbit", "logistic", "--mu", "4.5", "--itinerary", "011", "--out", &s(&csv)]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows.len() >= 2, "{text}");
    assert!(rows[1].starts_with("011"), "{text}");
}

#[test]
fn itinerary_reports_escape() {
    assert_eq!(run(["stretch-chaos", "itinerary", "logistic", "--mu", "4.5", "--x0", "0.3", "--n", "20"]), 1);
}
