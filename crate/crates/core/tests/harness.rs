use std::fs;
use std::path::Path;
use std::process::Command;

use pgpo_core::harness::corpus::{GOLD_FILE, PERTURBED_FILE, QUERIES_FILE, TABLES_FILE};
use pgpo_core::harness::train::{MANIFEST_FILE, METRICS_FILE, SNAPSHOT_FILE};
use pgpo_core::harness::{
    build_report, cmd_train, discover_runs, gen_corpus, verify_file, CorpusConfig, Manifest, PerturbedRecord,
    RunConfig, TrajectoryRecord, VerifyRecord,
};
use pgpo_core::optimizer::Variant;
use pgpo_core::vcot::PerturbKind;
use pgpo_core::verifier::Path as Label;
use pgpo_core::{RewardConfig, ARTIFACT_VERSION};

fn read(p: &Path) -> Vec<u8> {
    fs::read(p).unwrap()
}

fn small(out: &Path) -> RunConfig {
    RunConfig {
        steps: 4,
        batch_size: 3,
        out: out.to_path_buf(),
        ..RunConfig::default()
    }
}

#[test]
fn corpus_is_deterministic_and_flag_rate_matches() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let s = gen_corpus(&cfg, &a).unwrap();
    gen_corpus(&cfg, &b).unwrap();
    for f in [TABLES_FILE, QUERIES_FILE, GOLD_FILE] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f} differs");
    }
    assert_eq!(s.queries, 1000);
    assert!((672..=728).contains(&s.flagged), "flagged {}", s.flagged);
}

#[test]
fn invalid_table_shape_fails_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.env.cols.lo = 0;
    cfg.env.cols.hi = 0;
    let dir = tmp.path().join("c");
    let err = gen_corpus(&cfg, &dir).unwrap_err();
    assert!(err.is_validation(), "{err}");
    assert!(!dir.exists());
}

#[test]
fn training_is_reproducible_and_manifest_first() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(&tmp.path().join("one"));
    cfg.variants = vec![Variant::Grpo, Variant::Pgpo];
    let arts = cmd_train(&cfg).unwrap();
    assert_eq!(arts.len(), 2);
    cfg.out = tmp.path().join("two");
    cmd_train(&cfg).unwrap();
    for v in ["GRPO", "PGPO"] {
        let (a, b) = (tmp.path().join("one").join(v), tmp.path().join("two").join(v));
        for f in [METRICS_FILE, SNAPSHOT_FILE] {
            assert_eq!(read(&a.join(f)), read(&b.join(f)), "{v}/{f} differs");
        }
        let m: Manifest = serde_json::from_slice(&read(&a.join(MANIFEST_FILE))).unwrap();
        assert_eq!(m.artifact_version, ARTIFACT_VERSION);
        assert_eq!(m.config.digest(), m.config_sha256);
        assert_eq!(m.config.optimizer.variant.name(), v);
        let lines = String::from_utf8(read(&a.join(METRICS_FILE))).unwrap().lines().count();
        assert_eq!(lines, cfg.steps);
    }
}

#[test]
fn zero_steps_writes_manifest_and_empty_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg.steps = 0;
    cfg.variants = vec![Variant::Dapo];
    cmd_train(&cfg).unwrap();
    let dir = tmp.path().join("DAPO");
    assert!(dir.join(MANIFEST_FILE).exists());
    assert!(read(&dir.join(METRICS_FILE)).is_empty());
}

#[test]
fn report_orders_rows_and_counts_csv_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg.steps = 3;
    cfg.variants = vec![Variant::Pgpo, Variant::Grpo, Variant::PgpoNoProcess, Variant::Dapo];
    cmd_train(&cfg).unwrap();
    let report = build_report(&discover_runs(tmp.path()));
    let order: Vec<Variant> = report.rows.iter().map(|r| r.variant).collect();
    assert_eq!(order, Variant::ALL);
    assert!(report.excluded.is_empty());
    assert_eq!(report.to_csv().lines().count(), 1 + 3 * 4);
    assert!(report.to_markdown().contains("Δ reward"));

    // A truncated run is named and dropped.
    let m = tmp.path().join("DAPO").join(METRICS_FILE);
    let text = fs::read_to_string(&m).unwrap();
    fs::write(&m, text.lines().next().unwrap().to_string() + "\n").unwrap();
    let report = build_report(&discover_runs(tmp.path()));
    assert_eq!(report.rows.len(), 3);
    assert!(report.to_markdown().contains("DAPO: metrics has 1 records"));
}

#[test]
fn verify_clean_and_perturbed_corpora() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        corpus: CorpusConfig {
            queries: 300,
            perturb_severities: vec![0.5],
            perturb_kinds: vec![PerturbKind::CorruptAnchor],
        },
        ..RunConfig::default()
    };
    let dir = tmp.path().join("corpus");
    gen_corpus(&cfg, &dir).unwrap();

    let gold: Vec<TrajectoryRecord> = pgpo_core::harness::jsonl::read_all(&dir.join(GOLD_FILE)).unwrap();
    let three = tmp.path().join("three.jsonl");
    fs::write(
        &three,
        gold[..3]
            .iter()
            .map(|r| serde_json::to_string(r).unwrap() + "\n")
            .collect::<String>(),
    )
    .unwrap();
    let out = tmp.path().join("three.out.jsonl");
    let s = verify_file(&dir, &three, &out, &RewardConfig::default()).unwrap();
    assert_eq!((s.records, s.verified), (3, 3));
    let recs: Vec<VerifyRecord> = pgpo_core::harness::jsonl::read_all(&out).unwrap();
    assert!(recs
        .iter()
        .all(|r| r.breakdown.as_ref().unwrap().path == Label::Rigorous));

    let perturbed: Vec<PerturbedRecord> = pgpo_core::harness::jsonl::read_all(&dir.join(PERTURBED_FILE)).unwrap();
    let out = tmp.path().join("p.out.jsonl");
    let s = verify_file(&dir, &dir.join(PERTURBED_FILE), &out, &RewardConfig::default()).unwrap();
    assert_eq!(s.verified, perturbed.len());
    let recs: Vec<VerifyRecord> = pgpo_core::harness::jsonl::read_all(&out).unwrap();
    let mut bound = 0.0;
    for (p, r) in perturbed.iter().zip(&recs) {
        let got = r.breakdown.as_ref().unwrap().r_proc;
        let k = p.steps as f64;
        assert!(
            (got - p.target_process_score).abs() <= 1.0 / k + 1e-12,
            "{} steps: {got}",
            p.steps
        );
        bound += 1.0 / k;
    }
    bound /= perturbed.len() as f64;
    assert!(
        (s.mean_process - 0.5).abs() <= bound,
        "mean r_proc {} vs bound {bound}",
        s.mean_process
    );
}

fn pgpo(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pgpo")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path().to_str().unwrap();
    assert_eq!(pgpo(&["--help"]).0, 0);
    assert_eq!(pgpo(&["train", "--steps", "nope"]).0, 1);
    assert_eq!(pgpo(&["--variant", "PPO", "train"]).0, 1);

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[env]\nbogus = 1\n").unwrap();
    assert_eq!(pgpo(&["--config", bad.to_str().unwrap(), "print-config"]).0, 1);

    let (code, text) = pgpo(&["--seed", "7", "print-config"]);
    assert_eq!(code, 0);
    assert_eq!(RunConfig::from_toml(&text).unwrap().seed, 7);

    let (code, _) = pgpo(&["--out", t, "--steps", "2", "--variant", "grpo,pgpo", "train"]);
    assert_eq!(code, 0);
    let (code, table) = pgpo(&["--out", t, "report"]);
    assert_eq!(code, 0);
    assert!(table.contains("| GRPO |") && table.contains("| PGPO |"));

    // Report with nothing to report is a runtime failure.
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(pgpo(&["--out", empty.to_str().unwrap(), "report"]).0, 2);

    let corpus = tmp.path().join("corpus");
    assert_eq!(pgpo(&["gen-corpus", "--dir", corpus.to_str().unwrap()]).0, 0);
    let input = tmp.path().join("in.jsonl");
    fs::write(&input, "{\"query_id\":\"missing\",\"text\":\"\"}\n").unwrap();
    let args = [
        "verify",
        "--corpus",
        corpus.to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
    ];
    assert_eq!(pgpo(&args).0, 0);
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(pgpo(&strict).0, 1);
    // Missing corpus is a runtime failure.
    assert_eq!(
        pgpo(&["verify", "--corpus", "/nonexistent", "--input", input.to_str().unwrap()]).0,
        2
    );
}

#[test]
fn worker_count_does_not_change_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let out = tmp.path().join(format!("t{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_pgpo"))
            .env("RAYON_NUM_THREADS", threads)
            .args([
                "--out",
                out.to_str().unwrap(),
                "--steps",
                "3",
                "--variant",
                "PGPO",
                "train",
            ])
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        (
            read(&out.join("PGPO").join(METRICS_FILE)),
            read(&out.join("PGPO").join(SNAPSHOT_FILE)),
        )
    };
    assert_eq!(run("1"), run("4"));
}
