use std::path::PathBuf;
use std::process::Command;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn gasp(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gasp")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

const HYDRALAZINE: &str = "hydralazine_and_isosorbide_dinitrate";

#[test]
fn solve_even_loops() {
    let p = fixture("even_loops.asp");
    assert_eq!(gasp(&["solve", "-p", &p, "-q", "q"]), (0, "{ q, not p }\n".into(), String::new()));
    assert_eq!(gasp(&["solve", "-p", &p, "-q", "q, s"]).1, "{ q, not p, s, not r }\n");
}

#[test]
fn solve_without_answers_prints_false() {
    let (code, out, _) = gasp(&["solve", "-p", &fixture("odd_loop.asp"), "-q", "p"]);
    assert_eq!((code, out.as_str()), (1, "false\n"));
}

#[test]
fn solve_uses_program_query_and_prints_bindings() {
    let (code, out, _) = gasp(&["solve", "-p", &fixture("paths.asp")]);
    assert_eq!(code, 0);
    assert_eq!(out, "Z = b\n{ path(a,b), edge(a,b) }\nZ = c\n{ path(a,c), edge(a,b), path(b,c), edge(b,c) }\n");
    let (_, out, _) = gasp(&["solve", "-p", &fixture("paths.asp"), "--max-answers", "1"]);
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn abduce_prints_abducibles() {
    let expected = "{ p, not q, a, not b, not c }\n\nAbducibles: { a, not b, not c }\n";
    assert_eq!(gasp(&["abduce", "-p", &fixture("abc.asp"), "-q", "p"]), (0, expected.into(), String::new()));
    assert_eq!(gasp(&["abduce", "-p", &fixture("abcd.asp"), "-q", "p"]).1, expected);
}

#[test]
fn check_rejected_and_repairable() {
    let profile = fixture("patient1.facts");
    let (code, out, _) = gasp(&["check", "--profile", &profile, "--treatment", HYDRALAZINE, "--class", "class_1"]);
    assert_eq!(code, 1);
    assert!(out.contains("Verdict: Rejected\n"));
    assert!(!out.contains("Abducibles:"));

    let (code, out, _) = gasp(&["check", "--profile", &profile, "--treatment", HYDRALAZINE, "--class", "class_2a"]);
    assert_eq!(code, 0);
    assert!(out.contains("Verdict: Repairable with evidence\n"));
    let lines: Vec<&str> = out.lines().filter(|l| l.starts_with("Abducibles:")).collect();
    assert_eq!(lines, ["Abducibles: { history(angioedema), contraindication(arbs) }"]);
}

#[test]
fn check_json_report() {
    let profile = fixture("patient1.facts");
    let (code, out, _) =
        gasp(&["check", "--profile", &profile, "--treatment", HYDRALAZINE, "--class", "IIa", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "repairable_with_evidence");
    assert_eq!(
        v["explanations"][0]["assumed_true"],
        serde_json::json!(["history(angioedema)", "contraindication(arbs)"])
    );
    assert!(v["timings_ms"]["abduction"].is_number());
}

#[test]
fn timing_goes_to_stderr() {
    let profile = fixture("patient1.facts");
    let (_, out, err) =
        gasp(&["check", "--profile", &profile, "--treatment", HYDRALAZINE, "--class", "class_2a", "--timing"]);
    assert!(!out.contains(" ms"));
    assert!(err.contains("enumeration: ") && err.contains("abduction: "));
}

#[test]
fn recommend_lists_compliant_set() {
    let (code, out, _) = gasp(&["recommend", "--profile", &fixture("patient1.facts")]);
    assert_eq!(code, 0);
    assert!(!out.contains(&format!("recommendation({HYDRALAZINE},class_1)")));
    assert!(out.lines().all(|l| l.starts_with("recommendation(")));
}

#[test]
fn oracle_lists_models() {
    assert_eq!(gasp(&["oracle", "-p", &fixture("even_loops.asp")]).1, "{ p, r }\n{ p, s }\n{ q, r }\n{ q, s }\n");
    assert_eq!(gasp(&["oracle", "-p", &fixture("odd_loop.asp")]), (1, "false\n".into(), String::new()));
}

#[test]
fn errors_exit_with_two() {
    assert_eq!(gasp(&["solve", "-p", "/nonexistent/file.asp", "-q", "p"]).0, 2);
    assert_eq!(gasp(&["solve", "-p", &fixture("even_loops.asp"), "-q", "p("]).0, 2);
    assert_eq!(gasp(&["solve", "-p", &fixture("even_loops.asp")]).0, 2);
    assert_eq!(gasp(&["frobnicate"]).0, 2);
    let profile = fixture("patient1.facts");
    let (code, _, err) = gasp(&["check", "--profile", &profile, "--treatment", "aspirin", "--class", "class_1"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown treatment"));
    assert_eq!(gasp(&["check", "--profile", &profile, "--treatment", HYDRALAZINE, "--class", "class_9"]).0, 2);
}

#[test]
fn output_is_deterministic() {
    let profile = fixture("patient1.facts");
    let args = ["check", "--profile", &profile, "--treatment", HYDRALAZINE, "--class", "class_2a"];
    assert_eq!(gasp(&args), gasp(&args));
    let args = ["abduce", "-p", &fixture("abcd.asp"), "-q", "p", "--json"];
    assert_eq!(gasp(&args), gasp(&args));
}
