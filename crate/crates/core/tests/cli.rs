use std::path::Path;
use std::process::{Command, Output};

use clap::CommandFactory;
use idforge::cli::Cli;
use idforge::padmetrics::PadReport;

fn idforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idforge"))
        .args(args)
        .env_remove("IDFORGE_PROFILE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const EER_FIXTURE: &str = "id,true_class,score\na,bonafide,0.2\nb,bonafide,0.6\nc,print,0.4\nd,print,0.8\n";

#[test]
fn every_flag_is_documented() {
    let mut cmd = Cli::command();
    cmd.build();
    for sub in cmd.get_subcommands() {
        assert!(sub.get_about().is_some(), "{} lacks help", sub.get_name());
        for arg in sub.get_arguments() {
            let id = arg.get_id().as_str();
            if id == "help" || id == "version" {
                continue;
            }
            assert!(arg.get_help().is_some(), "{} --{id} lacks help", sub.get_name());
        }
        let help = sub.clone().render_long_help().to_string();
        for arg in sub.get_arguments().filter_map(|a| a.get_long()) {
            assert!(
                help.contains(&format!("--{arg}")),
                "{} help omits --{arg}",
                sub.get_name()
            );
        }
    }
}

#[test]
fn validate_builtin_layout() {
    let o = idforge(&["validate-layout", "--layout", "builtin:extranjero"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "OK");
}

#[test]
fn invalid_layout_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut layout = idforge::layout::builtin_template("citizen").unwrap();
    layout.components[0].opacity = 2.0;
    let path = dir.path().join("bad.json");
    std::fs::write(&path, idforge::layout::serialize_layout(&layout)).unwrap();
    let o = idforge(&["validate-layout", "--layout", p(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("opacity"));
    let o = idforge(&["validate-layout", "--layout", p(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(idforge(&["generate"]).status.code(), Some(2));
    assert_eq!(idforge(&["prompts", "--mode", "poster"]).status.code(), Some(2));
}

#[test]
fn card_prompt() {
    let o = idforge(&["prompts", "--seed", "4", "--mode", "card"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("Chile ID card with surnames"));
    let face = stdout(&idforge(&["prompts", "--seed", "4"]));
    assert_eq!(face.lines().count(), 2);
    assert_eq!(face.lines().nth(1).unwrap(), idforge::persona::NEGATIVE_FACE_PROMPT);
}

#[test]
fn pad_metrics_report() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.csv");
    std::fs::write(&scores, EER_FIXTURE).unwrap();
    let out = dir.path().join("report");
    let o = idforge(&["pad-metrics", "--scores", p(&scores), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: PadReport = serde_json::from_slice(&std::fs::read(out.join("pad_report.json")).unwrap()).unwrap();
    assert_eq!(report.eer, 0.5);
    assert!(report.violations().is_empty());
    let det = std::fs::read_to_string(out.join("det.csv")).unwrap();
    assert_eq!(det.lines().count(), 7);

    let bona_only = dir.path().join("bona.csv");
    std::fs::write(&bona_only, "id,true_class,score\na,bonafide,0.1\nb,bonafide,0.3\n").unwrap();
    let o = idforge(&["pad-metrics", "--scores", p(&bona_only), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no attack records"));
}

#[test]
fn det_export_rows() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.csv");
    std::fs::write(&scores, EER_FIXTURE).unwrap();
    let svg = dir.path().join("det.svg");
    let o = idforge(&["det-export", "--scores", p(&scores), "--svg", p(&svg)]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "threshold,apcer,bpcer");
    assert_eq!(lines.len() - 1, 6);
    assert_eq!(lines[1], "-inf,0,1");
    assert_eq!(lines[6], "inf,1,0");
    assert!(std::fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn fid_command() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    std::fs::write(&a, "f\n-1\n0\n1\n").unwrap();
    std::fs::write(&b, "f\n1\n3\n5\n").unwrap();
    std::fs::write(&c, "f,g\n1,2\n3,4\n").unwrap();
    assert_eq!(
        stdout(&idforge(&["fid", "--features-a", p(&a), "--features-b", p(&b)])).trim(),
        "10.0000"
    );
    assert_eq!(
        stdout(&idforge(&["fid", "--features-a", p(&a), "--features-b", p(&a)])).trim(),
        "0.0000"
    );
    assert_eq!(
        idforge(&["fid", "--features-a", p(&a), "--features-b", p(&c)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn tsne_and_embed() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool");
    assert!(
        idforge(&["fixtures", "--out", p(&pool), "--faces", "14", "--signatures", "1"])
            .status
            .success()
    );
    let feats = dir.path().join("f.fset");
    assert!(
        idforge(&["embed", "--images", p(&pool.join("faces")), "--out", p(&feats)])
            .status
            .success()
    );
    let out = dir.path().join("xy.csv");
    let args = [
        "tsne",
        "--features",
        p(&feats),
        "--perplexity",
        "3",
        "--iters",
        "120",
        "--seed",
        "2",
        "--out",
        p(&out),
    ];
    assert!(idforge(&args).status.success());
    let first = std::fs::read(&out).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 15);
    assert!(idforge(&args).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), first);
    let bad = ["tsne", "--features", p(&feats), "--perplexity", "30"];
    assert_eq!(idforge(&bad).status.code(), Some(1));
}

#[test]
fn generate_zero_and_exhausted() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool");
    assert!(
        idforge(&["fixtures", "--out", p(&pool), "--faces", "2", "--signatures", "1"])
            .status
            .success()
    );
    let faces = pool.join("faces");
    let sigs = pool.join("signatures");
    let csv = pool.join("ofiq.csv");
    let out = dir.path().join("zero");
    let o = idforge(&[
        "generate",
        "--count",
        "0",
        "--faces-dir",
        p(&faces),
        "--signatures-dir",
        p(&sigs),
        "--ofiq-csv",
        p(&csv),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(out.join("manifest.jsonl")).unwrap(), "");

    let o = idforge(&[
        "generate",
        "--count",
        "3",
        "--faces-dir",
        p(&faces),
        "--signatures-dir",
        p(&sigs),
        "--ofiq-csv",
        p(&csv),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn threshold_profile_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool");
    assert!(
        idforge(&["fixtures", "--out", p(&pool), "--faces", "2", "--signatures", "1"])
            .status
            .success()
    );
    let strict = dir.path().join("strict.json");
    std::fs::write(&strict, r#"{"UnifiedQualityScore.scalar": 95}"#).unwrap();
    let lenient = dir.path().join("lenient.json");
    std::fs::write(&lenient, r#"{"UnifiedQualityScore.scalar": 10}"#).unwrap();
    let base = |out: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_idforge"));
        c.args(["generate", "--count", "1", "--faces-dir"])
            .arg(pool.join("faces"))
            .arg("--signatures-dir")
            .arg(pool.join("signatures"))
            .arg("--ofiq-csv")
            .arg(pool.join("ofiq.csv"))
            .arg("--out")
            .arg(dir.path().join(out));
        c
    };
    // Builtin profile: fixture scores of 90 pass.
    assert_eq!(
        base("a").env_remove("IDFORGE_PROFILE").status().unwrap().code(),
        Some(0)
    );
    // Environment profile rejects everything.
    assert_eq!(
        base("b").env("IDFORGE_PROFILE", &strict).status().unwrap().code(),
        Some(4)
    );
    // Flag beats environment.
    let o = base("c")
        .env("IDFORGE_PROFILE", &strict)
        .arg("--profile")
        .arg(&lenient)
        .status()
        .unwrap();
    assert_eq!(o.code(), Some(0));
}
