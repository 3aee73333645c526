//! End-to-end runs through the public entry point: golden JSON lines for
//! every subcommand and an exit-code table over representative misuses.

use sc_cli::run;

fn sc(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> =
        std::iter::once("sc").chain(args.iter().copied()).map(String::from).collect();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn stdout_of(args: &[&str]) -> String {
    let (code, out, err) = sc(args);
    assert_eq!(code, 0, "args {args:?} failed: {err}");
    out
}

#[test]
fn rank_commands_emit_golden_json() {
    assert_eq!(stdout_of(&["sch", "A(1^w)"]), "{\"sch\":\"w^0*1\"}\n");
    assert_eq!(stdout_of(&["sch", "1"]), "{\"sch\":\"0\"}\n");
    assert_eq!(stdout_of(&["van", "A(1^w)", "--oracle"]), "{\"oracle_agrees\":true,\"van\":\"w^0*2\"}\n");
    assert_eq!(stdout_of(&["ms", "A(1^w)"]), "{\"count\":1,\"rank\":1}\n");
    // Three disjoint copies keep the rank and triple the count.
    assert_eq!(
        stdout_of(&["ms", "F[(A(1^w), 3)]", "--oracle"]),
        "{\"count\":3,\"oracle_agrees\":true,\"rank\":1}\n"
    );
    assert_eq!(stdout_of(&["com", "A(1^w)"]), "{\"com\":\"w^0*1\"}\n");
    assert_eq!(stdout_of(&["normalize", "A(A(1^w)^1)"]), "{\"normalized\":\"A(1^w)\"}\n");
    assert_eq!(
        stdout_of(&["homeo", "A(1^w)", "A(A(1^w)^1)"]),
        "{\"homeomorphic\":true}\n"
    );
    assert_eq!(
        stdout_of(&["homeo", "A(1^w)", "F[(1, 1)]"]),
        "{\"homeomorphic\":false}\n"
    );
}

#[test]
fn pretty_output_is_indented() {
    assert_eq!(stdout_of(&["--pretty", "sch", "A(1^w)"]), "{\n  \"sch\": \"w^0*1\"\n}\n");
}

#[test]
fn compactify_reports_tree_witness_and_bound() {
    // An escaping sum gains exactly one added root.
    assert_eq!(
        stdout_of(&["compactify", "sum(pt^w)"]),
        concat!(
            "{\"actual\":\"w^0*1\",\"alpha\":\"w^0*1\",\"bound\":\"w^0*3\",",
            "\"case\":\"successor\",\"n\":1,\"ok\":true,\"tree\":\"A(1^w)\",",
            "\"witness\":{\"added\":[\".\"],\"points\":{\"p0\":\"0\"}}}\n"
        )
    );
    // A finite sum stays a forest and nothing is added.
    assert_eq!(
        stdout_of(&["compactify", "sum(pt^2)"]),
        concat!(
            "{\"actual\":\"w^0*1\",\"alpha\":\"w^0*1\",\"bound\":\"w^0*3\",",
            "\"case\":\"successor\",\"n\":1,\"ok\":true,\"tree\":\"F[(1, 2)]\",",
            "\"witness\":{\"added\":[],\"points\":{\"p0\":\"0\"}}}\n"
        )
    );
    // A tail tower family reaches the limit case at height w.
    assert_eq!(
        stdout_of(&["compactify", "sum(fam(pwb([; _]), pt))"]),
        concat!(
            "{\"actual\":\"w^1*1\",\"alpha\":\"w^1*1\",\"bound\":\"w^1*1 + w^0*1\",",
            "\"case\":\"limit\",\"n\":0,\"ok\":true,\"tree\":\"A(fam(A(_^w), 1))\",",
            "\"witness\":{\"added\":[\".\"],\"points\":{\"b0\":\"0/b\",\"c0.0/pt\":\"0/f0\"}}}\n"
        )
    );
}

#[test]
fn embeddings_emit_exact_coordinates() {
    assert_eq!(
        stdout_of(&["embed-sigma", "A(1^w)", "0.3"]),
        "{\"coords\":{\".\":1,\"0.3\":1},\"node\":\"0.3\"}\n"
    );
    assert_eq!(
        stdout_of(&["embed-hilbert", "A(1^w)", "0.3", "--weight", "1/3"]),
        "{\"coords\":{\"0.3\":\"1/3\"},\"node\":\"0.3\",\"norm_sq\":\"1/9\"}\n"
    );
    // The root maps to the origin.
    assert_eq!(
        stdout_of(&["embed-hilbert", "A(1^w)", "."]),
        "{\"coords\":{},\"node\":\".\",\"norm_sq\":\"0\"}\n"
    );
}

#[test]
fn hedgehog_points_land_on_the_unit_sphere() {
    let out = stdout_of(&["hedgehog", "--kappa", "256", "--t", "0.6", "--spine", "9"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let coords = v["coords"].as_object().unwrap();
    let keys: Vec<&str> = coords.keys().map(String::as_str).collect();
    assert_eq!(keys, ["256", "257", "9"]);
    assert!((v["norm_sq"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    // The center needs only the polar coordinate.
    let out = stdout_of(&["hedgehog", "--kappa", "256", "--t", "0", "--spine", "9"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["coords"].as_object().unwrap().len(), 1);
}

#[test]
fn weaklimit_classifies_and_detects_divergence() {
    assert_eq!(
        stdout_of(&["weaklimit", r#"{"fixed": [[3, {"const": 0.5}]]}"#, "--kappa", "256"]),
        "{\"class\":\"added_part\",\"limit\":{\"3\":0.5}}\n"
    );
    assert_eq!(
        stdout_of(&["weaklimit", r#"{"fixed": [[3, {"oscillating": {"lo": 0.1, "hi": 0.9}}]]}"#]),
        "{\"divergent\":true}\n"
    );
}

#[test]
fn seeded_runs_are_reproducible() {
    let a = stdout_of(&["hedgehog", "--kappa", "256", "--trials", "60", "--seed", "11"]);
    let b = stdout_of(&["hedgehog", "--kappa", "256", "--trials", "60", "--seed", "11"]);
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["mismatches"], 0);

    let a = stdout_of(&["verify-all", "--seed", "5", "--trials", "20"]);
    let b = stdout_of(&["verify-all", "--seed", "5", "--trials", "20"]);
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["all_pass"], true);

    let csv = stdout_of(&["verify-all", "--seed", "5", "--trials", "20", "--csv"]);
    assert_eq!(csv.lines().count(), 7);
    for line in csv.lines() {
        assert_eq!(line.split(',').count(), 3, "line {line:?}");
        assert!(line.split(',').nth(1) == Some("true"), "line {line:?}");
    }
}

#[test]
fn exit_codes_separate_syntax_domain_and_success() {
    let cases: &[(&[&str], i32)] = &[
        // Successes.
        (&["sch", "A(1^w)"], 0),
        (&["com", "F[]"], 0),
        (&["hedgehog", "--kappa", "4", "--t", "0.5", "--spine", "1"], 0),
        // Domain errors: well-formed inputs outside a command's domain.
        (&["ms", "F[]"], 1),
        (&["ms", "A(1^a1)"], 1),
        (&["homeo", "A(1^a1)", "A(1^w)"], 1),
        (&["compactify", "sum(fam(_, pt))"], 1),
        (&["compactify", "sum(fam(sum(_), pt))"], 1),
        (&["embed-sigma", "A(1^2)", "0.5"], 1),
        (&["embed-hilbert", "A(1^w)", "0.1", "--weight", "3/2"], 1),
        (&["hedgehog", "--kappa", "4", "--t", "0.5", "--spine", "9"], 1),
        (&["hedgehog", "--kappa", "4", "--t", "1.5", "--spine", "1"], 1),
        (&["weaklimit", r#"{"fixed": [[3, {"const": 0.5}], [3, "unbounded"]]}"#], 1),
        // Syntax and usage errors.
        (&["sch", "A(1^"], 2),
        (&["sch", "A(1^0)"], 2),
        (&["sch", "A(1^w) extra"], 2),
        (&["sch", "B(1)"], 2),
        (&["compactify", "pwb([pt)"], 2),
        (&["embed-sigma", "A(1^w)", "zz"], 2),
        (&["embed-hilbert", "A(1^w)", ".", "--weight", "abc"], 2),
        (&["hedgehog", "--kappa", "4", "--t", "0.5"], 2),
        (&["weaklimit", "not json"], 2),
        (&["frobnicate", "1"], 2),
        (&["verify-all"], 2),
    ];
    for (args, want) in cases {
        let (code, out, err) = sc(args);
        assert_eq!(code, *want, "args {args:?}: out {out:?} err {err:?}");
        if *want == 0 {
            assert!(err.is_empty(), "args {args:?} wrote to stderr: {err}");
        } else {
            assert!(out.is_empty(), "args {args:?} wrote to stdout: {out}");
            assert!(!err.is_empty(), "args {args:?} was silent on stderr");
        }
        // Expression failures stay machine-readable.
        if *want != 0 && err.starts_with('{') {
            let v: serde_json::Value = serde_json::from_str(&err).unwrap();
            assert!(v["error"].is_string());
        }
    }
}

#[test]
fn help_and_version_exit_cleanly() {
    let (code, out, _) = sc(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("verify-all"));
    let (code, out, _) = sc(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("sc "));
}
