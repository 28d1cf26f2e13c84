use gll_cli::output::body_bytes;
use gll_cli::{run_with, EXIT_ACCEPTANCE, EXIT_MODULE, EXIT_OK, EXIT_USAGE};
use std::path::Path;

fn gll(args: &str) -> (i32, String, String) {
    let mut argv = vec!["gll"];
    argv.extend(args.split_whitespace());
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .flatten()
        .map(|e| (e.file_name().to_string_lossy().to_string(), std::fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn exit_codes() {
    assert_eq!(gll("measure --length 2").0, EXIT_OK);
    assert_eq!(gll("--help").0, EXIT_OK);
    assert_eq!(gll("measure --bogus").0, EXIT_USAGE);
    assert_eq!(gll("measure --length 2 --chi 0").0, EXIT_USAGE);
    assert_eq!(gll("pants-table --eta 1.0").0, EXIT_USAGE);
    assert_eq!(gll("pants-table --cuff 9").0, EXIT_USAGE);
    assert_eq!(gll("experiment counting --seeds 3..1").0, EXIT_USAGE);

    // an output directory that is a regular file cannot be written
    let f = tempfile::NamedTempFile::new().unwrap();
    let (code, _, err) = gll(&format!("measure --length 2 --out {}", f.path().display()));
    assert_eq!(code, EXIT_MODULE, "{err}");
}

#[test]
fn failing_rules_exit_with_acceptance_code() {
    // the asymptotic bracket is not met at l = 8
    let (code, _, err) = gll("experiment measure --samples 2000");
    assert_eq!(code, EXIT_ACCEPTANCE, "{err}");
    assert!(err.contains("FAIL measure: asymptotic ratio at l=8"));
    assert!(err.contains("PASS"));
}

#[test]
fn help_documents_units() {
    for sub in ["pants-table", "measure", "simulate", "close-up", "census", "enumerate", "experiment"] {
        let (code, out, _) = gll(&format!("{sub} --help"));
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("hyperbolic"), "{sub}: {out}");
        assert!(out.contains("flow time units"), "{sub}: {out}");
    }
}

#[test]
fn outputs_carry_a_header() {
    let (code, out, _) = gll("pants-table --lmax 6");
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("# gll "));
    assert!(lines[1].starts_with("# config-hash: "));
    assert!(lines[2].starts_with("# seeds:"));
    assert!(lines[3].starts_with("# config: {"));
    assert!(lines[4].starts_with("index,key,"));

    let (code, out, _) = gll("simulate --seed 7 --t-max 20 --format json");
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["header"]["seeds"], serde_json::json!([7]));
    assert_eq!(v["header"]["config"]["run"]["global"]["rho"], 1.0);
    assert!(v["header"]["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn equal_headers_give_equal_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let (code, _, err) = gll(&format!("experiment volume-bound --seeds 3 --t-max 300 --n-grid 10,100 --out {}", p.display()));
        assert_ne!(code, EXIT_MODULE, "{err}");
        assert_ne!(code, EXIT_USAGE, "{err}");
        files(&p)
    };
    let a = run("a");
    let b = run("b");
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let (code, out, _) = gll("experiment volume-bound --seeds 3 --t-max 300 --n-grid 10,100 --format json");
    assert_ne!(code, EXIT_USAGE);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["body"]["rules"].is_array());
}

#[test]
fn cache_hits_and_rebuilds_give_identical_bytes() {
    let cache = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = out.path().join(name);
        let (code, so, err) =
            gll(&format!("census --seed 2 --t 200 --step 50 --lmax 8 --cache-dir {} --out {}", cache.path().display(), p.display()));
        assert_eq!(code, EXIT_OK, "{err}");
        (files(&p), so)
    };
    let (first, s1) = run("miss");
    assert!(s1.contains("Miss"), "{s1}");
    let (second, s2) = run("hit");
    assert!(s2.contains("Hit"), "{s2}");
    assert_eq!(first, second);

    let dat: Vec<_> = std::fs::read_dir(cache.path())
        .unwrap()
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "dat"))
        .collect();
    assert!(!dat.is_empty());
    for p in &dat {
        std::fs::write(p, b"garbage").unwrap();
    }
    let (third, s3) = run("rebuilt");
    assert!(s3.contains("Rebuilt"), "{s3}");
    assert_eq!(first, third);
    for (a, b) in first.iter().zip(&third) {
        assert_eq!(body_bytes(&a.1), body_bytes(&b.1));
    }
}
