use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dbs_core::bridge::{self, Endpoint};
use dbs_core::{LanguageModel, NgramModel};

const BIN: &str = env!("CARGO_BIN_EXE_dbs");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

const CORPUS: &str = "the whale swam in the sea . the ship sailed on the sea . \
    a sailor saw the whale from the ship . the sea was calm and the night was dark . \
    the captain called the crew to the deck . the crew hunted the whale at night .";

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("corpus.txt"), CORPUS).unwrap();
        let f = Fixture { dir };
        let out = f.run(&[
            "synth-embeddings",
            "--corpus",
            f.arg("corpus.txt").as_str(),
            "--dim",
            "16",
            "--out",
            f.arg("emb.txt").as_str(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(BIN)
            .args(args)
            .env_remove("DBS_SEED")
            .env("RUST_LOG", "error")
            .output()
            .unwrap()
    }

    fn generate(&self, extra: &[&str]) -> Output {
        let corpus = self.arg("corpus.txt");
        let emb = self.arg("emb.txt");
        let mut args = vec![
            "generate",
            "--corpus",
            &corpus,
            "--embeddings",
            &emb,
            "--context",
            "the",
            "--max-tokens",
            "20",
        ];
        args.extend_from_slice(extra);
        self.run(&args)
    }

    fn evaluate(&self, sub: &str, out_dir: &str, extra: &[&str]) -> Output {
        let corpus = data("moby-dick.txt").to_string_lossy().into_owned();
        let words = data("words-1000.txt").to_string_lossy().into_owned();
        let emb = self.arg("emb.txt");
        let out = self.arg(out_dir);
        let mut args = vec![
            sub,
            "--corpus",
            &corpus,
            "--embeddings",
            &emb,
            "--words",
            &words,
            "--out-dir",
            &out,
            "--sets",
            "2",
            "--max-tokens",
            "10",
            "-b",
            "2",
            "-s",
            "2",
            "--seed",
            "5",
        ];
        args.extend_from_slice(extra);
        self.run(&args)
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// CSV contents with the wall-clock column dropped.
fn csv_without_seconds(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "seconds").unwrap();
    text.lines()
        .map(|l| {
            let mut cells: Vec<&str> = l.split(',').collect();
            cells.remove(col);
            cells.join(",")
        })
        .collect()
}

fn jsonl_without_seconds(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            v.as_object_mut().unwrap().remove("seconds");
            v
        })
        .collect()
}

#[test]
fn generate_is_reproducible_and_guided() {
    let f = Fixture::new();
    let a = f.generate(&["--keywords", "whale,ship", "--seed", "11"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = f.generate(&["--keywords", "whale,ship", "--seed", "11"]);
    assert_eq!(stdout(&a), stdout(&b));
    let text = stdout(&a);
    assert!(text.starts_with("the "));
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn seed_falls_back_to_environment() {
    let f = Fixture::new();
    let flag = f.generate(&["--seed", "9"]);
    let corpus = f.arg("corpus.txt");
    let env = Command::new(BIN)
        .args([
            "generate",
            "--corpus",
            &corpus,
            "--context",
            "the",
            "--max-tokens",
            "20",
        ])
        .env("DBS_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(stdout(&flag), stdout(&env));
}

#[test]
fn trace_has_one_line_per_candidate() {
    let f = Fixture::new();
    let trace = f.arg("trace.jsonl");
    let out = f.generate(&[
        "--keywords",
        "whale",
        "-b",
        "2",
        "-s",
        "3",
        "-k",
        "5",
        "--trace",
        &trace,
    ]);
    assert_eq!(code(&out), 0);
    let lines = std::fs::read_to_string(&trace).unwrap();
    // 2 initial chunks, then 3 steps of 2 x 3 candidates
    assert_eq!(lines.lines().count(), 2 + 3 * 6);
    for l in lines.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert!(v["quality"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn configuration_errors_exit_2() {
    let f = Fixture::new();
    let corpus = f.arg("corpus.txt");
    assert_eq!(code(&f.run(&["generate"])), 2);
    assert_eq!(code(&f.run(&["generate", "--corpus", "/no/such/file"])), 2);
    assert_eq!(
        code(&f.run(&["generate", "--corpus", &corpus, "--keywords", "whale"])),
        2
    );
    assert_eq!(
        code(&f.run(&[
            "generate",
            "--corpus",
            &corpus,
            "--keywords",
            "whale",
            "--embeddings",
            "/no/such/file"
        ])),
        2
    );
    assert_eq!(
        code(&f.run(&["generate", "--corpus", &corpus, "--top-p", "1.5"])),
        2
    );
    assert_eq!(
        code(&f.run(&[
            "generate",
            "--corpus",
            &corpus,
            "-k",
            "50",
            "--max-tokens",
            "10"
        ])),
        2
    );
    assert_eq!(
        code(&f.run(&["generate", "--corpus", &corpus, "--keywords", "two words"])),
        2
    );
    let conf = f.path("bad.conf");
    std::fs::write(&conf, "lambda = 3\nno_such_key = 1\n").unwrap();
    assert_eq!(
        code(&f.run(&[
            "generate",
            "--corpus",
            &corpus,
            "--config",
            conf.to_str().unwrap()
        ])),
        2
    );
    assert_eq!(code(&f.evaluate("sweep", "sw", &["--lambdas", ""])), 2);
    assert_eq!(code(&f.evaluate("sweep", "sw", &["--bs", "2,x"])), 2);
}

#[test]
fn backend_errors_exit_3() {
    let f = Fixture::new();
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    drop(listener);
    let spec = format!("tcp:127.0.0.1:{port}");
    let out = f.run(&["generate", "--bridge", &spec, "--bridge-timeout-ms", "500"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_supplies_defaults() {
    let f = Fixture::new();
    let conf = f.path("run.conf");
    std::fs::write(
        &conf,
        format!(
            "# generation settings\ncorpus = {}\nembeddings = {}\ncontext = the\nmax-tokens = 20\nseed = 11\nkeywords = whale,ship\n",
            f.arg("corpus.txt"),
            f.arg("emb.txt")
        ),
    )
    .unwrap();
    let from_file = f.run(&["generate", "--config", conf.to_str().unwrap()]);
    let from_flags = f.generate(&["--keywords", "whale,ship", "--seed", "11"]);
    assert_eq!(
        code(&from_file),
        0,
        "{}",
        String::from_utf8_lossy(&from_file.stderr)
    );
    assert_eq!(stdout(&from_file), stdout(&from_flags));
    let overridden = f.run(&[
        "generate",
        "--config",
        conf.to_str().unwrap(),
        "--seed",
        "12",
    ]);
    let flags12 = f.generate(&["--keywords", "whale,ship", "--seed", "12"]);
    assert_eq!(stdout(&overridden), stdout(&flags12));
}

#[test]
fn evaluation_is_deterministic_apart_from_timing() {
    let f = Fixture::new();
    for dir in ["a", "b"] {
        let out = f.evaluate("evaluate", dir, &[]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (a, b) = (f.path("a"), f.path("b"));
    assert_eq!(
        csv_without_seconds(&a.join("results.csv")),
        csv_without_seconds(&b.join("results.csv"))
    );
    let rows = jsonl_without_seconds(&a.join("results.jsonl"));
    assert_eq!(rows, jsonl_without_seconds(&b.join("results.jsonl")));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r["keywords"].as_array().unwrap().len(), 5);
        assert_eq!(r["config"]["run"]["b"], 2);
        assert_eq!(r["config"]["run"]["seed"], 5);
    }
}

#[test]
fn sweep_writes_every_repetition() {
    let f = Fixture::new();
    let out = f.evaluate(
        "sweep",
        "sw",
        &[
            "--lambdas",
            "0,10",
            "--bs",
            "2",
            "--ss",
            "2",
            "--ks",
            "5,10",
            "--repeat",
            "3",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = csv_without_seconds(&f.path("sw").join("results.csv"));
    let points = 4;
    let runs = csv.iter().filter(|l| !l.contains(",mean,")).count() - 1;
    assert_eq!(runs, points * 2 * 3);
    assert_eq!(csv.iter().filter(|l| l.contains(",mean,")).count(), points);
    // one summary line per grid point after the header
    assert_eq!(stdout(&out).lines().count(), 1 + points);
    let rows = jsonl_without_seconds(&f.path("sw").join("results.jsonl"));
    let mut seeds: Vec<u64> = rows.iter().map(|r| r["seed"].as_u64().unwrap()).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), rows.len());
}

#[test]
fn stdio_server_matches_in_process_model() {
    let f = Fixture::new();
    let corpus = f.arg("corpus.txt");
    let endpoint =
        Endpoint::parse(&format!("stdio:{BIN} serve --stdio --corpus {corpus}")).unwrap();
    let remote = bridge::connect(&endpoint).unwrap();
    let local = NgramModel::from_file(f.path("corpus.txt"), 2, 1e-4).unwrap();
    assert_eq!(remote.vocab().len(), local.vocab().len());
    let ctx = local.tokenize("the whale").unwrap();
    assert_eq!(remote.tokenize("the whale").unwrap(), ctx);
    let a = remote.next_logits(&ctx).unwrap();
    let b = local.next_logits(&ctx).unwrap();
    assert_eq!(a.len(), b.len());
    assert!(a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(
        remote.detokenize(&ctx).unwrap(),
        local.detokenize(&ctx).unwrap()
    );
}

#[test]
fn generation_through_stdio_bridge_matches_local() {
    let f = Fixture::new();
    let corpus = f.arg("corpus.txt");
    let spec = format!("stdio:{BIN} serve --stdio --corpus {corpus}");
    let emb = f.arg("emb.txt");
    let args = [
        "--embeddings",
        emb.as_str(),
        "--keywords",
        "whale,ship",
        "--context",
        "the",
        "--max-tokens",
        "20",
        "--seed",
        "4",
    ];
    let mut bridged = vec!["generate", "--bridge", spec.as_str()];
    bridged.extend_from_slice(&args);
    let mut local = vec!["generate", "--corpus", corpus.as_str()];
    local.extend_from_slice(&args);
    let a = f.run(&bridged);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a), stdout(&f.run(&local)));
}
