//! Command-line front end. Every command prints one JSON report on stdout and a
//! one-line summary on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::ahe::{keygen, AheParams, PublicKey, SecretKey};
use crate::bench::bench_encryption;
use crate::config::Config;
use crate::dispense::{dispense_batch, reconstruct, ServerVault};
use crate::error::{Error, Result};
use crate::pipeline::Pipeline;
use crate::transport::{Bus, Transcript};
use crate::triplegen::{read_jsonl, reconstruct_triple, stream_digest, to_json_line, Party, TripleGenerator};

/// Exit code for invalid parameters or configuration.
pub const EXIT_PARAMS: i32 = 3;
/// Exit code for a protocol abort (lost message, exhausted triples, failed check).
pub const EXIT_PROTOCOL: i32 = 4;
/// Exit code for file-system and decoding failures.
pub const EXIT_IO: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Params(_) | Error::Mismatch(_) | Error::OutOfRange { .. } | Error::InnerProductTooLong { .. } => {
            EXIT_PARAMS
        }
        Error::State(_) | Error::Abort(_) | Error::TripleReused(_) | Error::Depleted { .. } | Error::Timeout { .. } => {
            EXIT_PROTOCOL
        }
        Error::Decode(_) | Error::Io(_) => EXIT_IO,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match exit_code(e) {
        EXIT_PARAMS => "params",
        EXIT_PROTOCOL => "protocol",
        _ => "io",
    }
}

#[derive(Parser, Debug)]
#[command(name = "beaver-forge", version, about = "Beaver triples from additive RLWE encryption, and a SPDZ online phase")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// Key-value config file; falls back to $BEAVER_FORGE_CONFIG.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed, up to 64 hex digits.
    #[arg(long, global = true, value_name = "HEX")]
    pub seed: Option<String>,
    /// Online parties (m).
    #[arg(long, global = true, value_name = "M")]
    pub parties: Option<usize>,
    /// Servers receiving dispensed triples (l).
    #[arg(long, global = true, value_name = "L")]
    pub servers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write pk.bin and sk.bin.
    Keygen {
        /// Overwrite existing key files.
        #[arg(long)]
        force: bool,
    },
    /// Generate triples, write per-party share files and per-server vaults.
    Triples {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Read the files back and check every triple.
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        force: bool,
    },
    /// Encryption throughput.
    BenchEnc {
        #[arg(long, default_value_t = 1_000_000)]
        count: u64,
    },
    /// Run the full pipeline on a small computation.
    Demo {
        #[arg(value_enum)]
        demo: DemoKind,
        #[command(flatten)]
        inputs: DemoInputs,
    },
    /// Check triple files and vaults in the output directory.
    Verify,
    /// Run a demo and write its transcript as JSON lines.
    ExportTranscript {
        #[arg(value_enum, default_value_t = DemoKind::SpdzMul)]
        demo: DemoKind,
        #[command(flatten)]
        inputs: DemoInputs,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum DemoKind {
    SpdzMul,
    DotProduct,
}

#[derive(Args, Debug, Clone, Default)]
pub struct DemoInputs {
    /// Number of demo instances.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Include inputs and the cleartext result in the report.
    #[arg(long)]
    pub reveal: bool,
    /// spdz-mul: party 1's input (random if absent).
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<i64>,
    /// spdz-mul: party 2's input (random if absent).
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<i64>,
    /// dot-product: party 1's bias.
    #[arg(long, allow_negative_numbers = true)]
    pub bias: Option<i64>,
    /// dot-product: party 1's weights, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub weights: Option<Vec<i64>>,
    /// dot-product: party 2's vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub input: Option<Vec<i64>>,
    /// dot-product: vector length when inputs are random.
    #[arg(long, default_value_t = 3)]
    pub len: usize,
}

/// A finished command: the JSON report and a human summary.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub summary: String,
}

impl GlobalArgs {
    /// Config file (explicit or from the environment) with flags applied on top.
    pub fn config(&self) -> Result<Config> {
        let mut cfg = Config::load(Config::resolve_path(self.config.clone()).as_deref())?;
        if let Some(s) = &self.seed {
            cfg.seed = s.parse()?;
        }
        if let Some(m) = self.parties {
            cfg.parties = m;
        }
        if let Some(l) = self.servers {
            cfg.servers = l;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        Ok(cfg)
    }
}

fn io_err(what: &str, path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{what} {}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err("creating", dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_err("writing", path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_err("reading", path, e))
}

fn refuse_overwrite(paths: &[PathBuf], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(Error::Io(format!("{} exists; pass --force to overwrite", p.display()))),
        None => Ok(()),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn pk_path(cfg: &Config) -> PathBuf {
    cfg.out.join("pk.bin")
}

pub fn sk_path(cfg: &Config) -> PathBuf {
    cfg.out.join("sk.bin")
}

pub fn triples_path(cfg: &Config, party: Party) -> PathBuf {
    cfg.out.join(format!("triples-{}.jsonl", party.endpoint()))
}

pub fn vault_path(cfg: &Config, server: u32) -> PathBuf {
    cfg.out.join(format!("vault-{server}.jsonl"))
}

pub fn transcript_path(cfg: &Config) -> PathBuf {
    cfg.out.join("transcript.jsonl")
}

fn params_json(p: &AheParams) -> Value {
    json!({
        "n": p.n(),
        "q": p.q(),
        "t": p.t(),
        "sigma": p.ring().sigma(),
        "tail_bound": p.ring().tail_bound(),
        "max_inner_product_len": p.max_inner_product_len(),
    })
}

fn cmd_keygen(cfg: &Config, force: bool) -> Result<Outcome> {
    let params = cfg.params()?;
    let (pk_file, sk_file) = (pk_path(cfg), sk_path(cfg));
    refuse_overwrite(&[pk_file.clone(), sk_file.clone()], force)?;
    let (pk, sk) = keygen(&params, &mut cfg.seed.derive("alice-keygen", 0));
    let (pk_bytes, sk_bytes) = (pk.to_bytes(), sk.to_bytes());
    write_file(&pk_file, &pk_bytes)?;
    write_file(&sk_file, &sk_bytes)?;
    write_file(&cfg.out.join("config.txt"), cfg.to_text().as_bytes())?;
    Ok(Outcome {
        report: json!({
            "command": "keygen",
            "params": params_json(&params),
            "pk": pk_file,
            "sk": sk_file,
            "pk_sha256": sha256_hex(&pk_bytes),
            "sk_sha256": sha256_hex(&sk_bytes),
        }),
        summary: format!("wrote {} and {}", pk_file.display(), sk_file.display()),
    })
}

/// Key files from `keygen` if both exist, else keys derived from the seed.
fn load_keys(cfg: &Config, params: &AheParams) -> Result<Option<(PublicKey, SecretKey)>> {
    let (pk_file, sk_file) = (pk_path(cfg), sk_path(cfg));
    if !(pk_file.exists() && sk_file.exists()) {
        return Ok(None);
    }
    let pk = PublicKey::from_bytes(params, &read_file(&pk_file)?)?;
    let sk = SecretKey::from_bytes(params, &read_file(&sk_file)?)?;
    Ok(Some((pk, sk)))
}

fn cmd_triples(cfg: &Config, count: usize, verify: bool, force: bool) -> Result<Outcome> {
    let params = cfg.params()?;
    if params.max_inner_product_len() < 1 {
        return Err(Error::Params("noise budget at these parameters does not allow a single product".into()));
    }
    if count == 0 {
        return Err(Error::Params("--count must be at least 1".into()));
    }
    let mut outputs = vec![triples_path(cfg, Party::Alice), triples_path(cfg, Party::Bob)];
    outputs.extend((1..=cfg.servers as u32).map(|j| vault_path(cfg, j)));
    refuse_overwrite(&outputs, force)?;

    let (generator, key_source) = match load_keys(cfg, &params)? {
        Some((pk, sk)) => (TripleGenerator::with_keys(cfg.seed, pk, sk)?, "files"),
        None => (TripleGenerator::new(&params, cfg.seed), "seed"),
    };
    let start = Instant::now();
    let triples = generator.batch_generate(0, count)?;
    let seconds = start.elapsed().as_secs_f64();
    let digest = stream_digest(&triples);

    let alice: String = triples.iter().map(|(a, _)| to_json_line(a)).collect();
    let bob: String = triples.iter().map(|(_, b)| to_json_line(b)).collect();
    write_file(&outputs[0], alice.as_bytes())?;
    write_file(&outputs[1], bob.as_bytes())?;

    let mut bus = Bus::new(cfg.seed);
    bus.set_recording(false);
    let vaults = dispense_batch(&params, &triples, cfg.servers, &mut bus, &mut cfg.seed.derive("dispense", 0))?;
    for v in &vaults {
        v.save(&vault_path(cfg, v.server_id()))?;
    }
    write_file(&cfg.out.join("config.txt"), cfg.to_text().as_bytes())?;

    let mut report = json!({
        "command": "triples",
        "params": params_json(&params),
        "keys": key_source,
        "count": count,
        "servers": cfg.servers,
        "seconds": seconds,
        "triples_per_sec": if seconds > 0.0 { count as f64 / seconds } else { 0.0 },
        "digest": digest,
        "files": outputs,
        "dispense_digest": bus.digest(),
    });
    let mut summary = format!("{count} triples in {seconds:.3} s, {} servers", cfg.servers);
    if verify {
        let v = verify_dir(cfg, &params)?;
        summary.push_str(&format!("; verified {}/{}", v["valid"], v["triples"]));
        report["verify"] = v;
    }
    Ok(Outcome { report, summary })
}

/// Checks party share files and any vaults in the output directory.
fn verify_dir(cfg: &Config, params: &AheParams) -> Result<Value> {
    let read = |party| -> Result<_> {
        let path = triples_path(cfg, party);
        let text = String::from_utf8(read_file(&path)?).map_err(|e| Error::Decode(e.to_string()))?;
        read_jsonl(&text)
    };
    let (alice, bob) = (read(Party::Alice)?, read(Party::Bob)?);
    if alice.len() != bob.len() {
        return Err(Error::Abort(format!("{} alice shares but {} bob shares", alice.len(), bob.len())));
    }
    let mut invalid = Vec::new();
    let mut clear = std::collections::BTreeMap::new();
    for (a, b) in alice.iter().zip(&bob) {
        if a.triple_id != b.triple_id || a.party != Party::Alice || b.party != Party::Bob || a.t != params.t() {
            invalid.push(a.triple_id);
            continue;
        }
        let (x, y, z) = reconstruct_triple(params, &[*a, *b]);
        if params.reduce_plain(x as i128 * y as i128) != z {
            invalid.push(a.triple_id);
        }
        clear.insert(a.triple_id, (x, y, z));
    }

    let mut vaults = Vec::new();
    for j in 1u32.. {
        let path = vault_path(cfg, j);
        if !path.exists() {
            break;
        }
        vaults.push(ServerVault::load(j, params.t(), &path)?);
    }
    let mut vault_checked = 0;
    if !vaults.is_empty() {
        for id in vaults[0].ready_ids() {
            let got = reconstruct(params, id, &vaults)?;
            if clear.get(&id) != Some(&got) {
                invalid.push(id);
            }
            vault_checked += 1;
        }
    }
    invalid.sort_unstable();
    invalid.dedup();
    let report = json!({
        "triples": alice.len(),
        "valid": alice.len().saturating_sub(invalid.len()),
        "vaults": vaults.len(),
        "vault_triples_checked": vault_checked,
        "invalid_ids": invalid.iter().take(20).collect::<Vec<_>>(),
    });
    if !invalid.is_empty() {
        return Err(Error::Abort(format!("{} invalid triples, first {:?}", invalid.len(), &invalid[..invalid.len().min(5)])));
    }
    Ok(report)
}

fn cmd_verify(cfg: &Config) -> Result<Outcome> {
    let params = cfg.params()?;
    let v = verify_dir(cfg, &params)?;
    let summary = format!("{} triples valid, {} vault entries match", v["triples"], v["vault_triples_checked"]);
    let mut report = json!({ "command": "verify" });
    report.as_object_mut().unwrap().extend(v.as_object().unwrap().clone());
    Ok(Outcome { report, summary })
}

fn cmd_bench(cfg: &Config, count: u64) -> Result<Outcome> {
    let params = cfg.params()?;
    let r = bench_encryption(&params, count, cfg.seed)?;
    let summary = format!(
        "{} encryptions in {:.3} s: {:.0} enc/s (reference {:.0} enc/s, informational)",
        r.count, r.seconds, r.enc_per_sec, r.reference_enc_per_sec
    );
    let mut report = serde_json::to_value(&r).expect("plain struct");
    report["command"] = json!("bench-enc");
    report["params"] = params_json(&params);
    report["note"] = json!(
        "the reference rate comes from a pure-Python implementation on a laptop CPU and is context, not a target; \
         no Paillier implementation is included, so no Paillier comparison is measured"
    );
    Ok(Outcome { report, summary })
}

/// Runs a demo end to end and returns the report plus the finished pipeline.
pub fn run_demo(cfg: &Config, kind: DemoKind, inputs: &DemoInputs) -> Result<(Value, Pipeline)> {
    let params = cfg.params()?;
    if inputs.count == 0 {
        return Err(Error::Params("--count must be at least 1".into()));
    }
    let mut pipe = Pipeline::new(&params, cfg.parties, cfg.servers, cfg.seed)?;
    let mut rng = cfg.seed.derive("demo-inputs", 0);
    let pick = |given: Option<i64>, rng: &mut rand_chacha::ChaCha20Rng| match given {
        Some(v) => params.check_plain(v),
        None => Ok(params.sample_plain(rng)),
    };
    let mut instances = Vec::with_capacity(inputs.count);
    match kind {
        DemoKind::SpdzMul => {
            pipe.provision(inputs.count)?;
            for _ in 0..inputs.count {
                let (x, y) = (pick(inputs.x, &mut rng)?, pick(inputs.y, &mut rng)?);
                let r = pipe.mul(x, y)?;
                let mut item = json!({ "output": r.value, "triple_id": r.triple_id, "rounds": r.rounds });
                if inputs.reveal {
                    let oracle = params.reduce_plain(x as i128 * y as i128);
                    item["inputs"] = json!({ "x": x, "y": y });
                    item["oracle"] = json!(oracle);
                    item["matches_oracle"] = json!(oracle == r.value);
                }
                instances.push(item);
            }
        }
        DemoKind::DotProduct => {
            let len = match (&inputs.weights, &inputs.input) {
                (Some(w), Some(x)) if w.len() != x.len() => {
                    return Err(Error::Params(format!("{} weights for {} inputs", w.len(), x.len())))
                }
                (Some(w), _) => w.len(),
                (None, Some(x)) => x.len(),
                (None, None) => inputs.len,
            };
            pipe.provision(inputs.count * (len + 1))?;
            for _ in 0..inputs.count {
                let bias = pick(inputs.bias, &mut rng)?;
                let vec_of = |given: &Option<Vec<i64>>, rng: &mut rand_chacha::ChaCha20Rng| -> Result<Vec<i64>> {
                    match given {
                        Some(v) => v.iter().map(|&e| params.check_plain(e)).collect(),
                        None => Ok((0..len).map(|_| params.sample_plain(rng)).collect()),
                    }
                };
                let w = vec_of(&inputs.weights, &mut rng)?;
                let x = vec_of(&inputs.input, &mut rng)?;
                let r = pipe.dot_product(bias, &w, &x)?;
                let mut item = json!({ "output": r.value, "triples": r.triples, "rounds": r.rounds });
                if inputs.reveal {
                    let dot: i128 = bias as i128 + w.iter().zip(&x).map(|(&a, &b)| a as i128 * b as i128).sum::<i128>();
                    let oracle = params.reduce_plain(dot);
                    item["inputs"] = json!({ "bias": bias, "weights": w, "x": x });
                    item["oracle"] = json!(oracle);
                    item["matches_oracle"] = json!(oracle == r.value);
                }
                instances.push(item);
            }
        }
    }
    let stats = pipe.stats();
    let bytes_per_party: serde_json::Map<String, Value> = stats
        .traffic
        .iter()
        .map(|(k, v)| (k.clone(), json!(v.bytes_sent + v.bytes_received)))
        .collect();
    let report = json!({
        "command": "demo",
        "demo": kind.to_possible_value().unwrap().get_name(),
        "params": params_json(&params),
        "parties": cfg.parties,
        "servers": cfg.servers,
        "instances": instances,
        "triples_generated": stats.triples_generated,
        "triples_consumed": stats.triples_consumed,
        "rounds": stats.rounds,
        "messages": stats.messages,
        "bytes_per_party": bytes_per_party,
        "traffic": stats.traffic,
        "transcript_digest": stats.transcript_digest,
    });
    if inputs.reveal && instances.iter().any(|i| i["matches_oracle"] == json!(false)) {
        return Err(Error::Abort("opened output differs from the cleartext result".into()));
    }
    Ok((report, pipe))
}

fn demo_summary(report: &Value) -> String {
    let outputs: Vec<String> = report["instances"]
        .as_array()
        .map(|a| a.iter().take(5).map(|i| i["output"].to_string()).collect())
        .unwrap_or_default();
    format!(
        "{} with {} parties: output {}{}; {} triples, {} rounds",
        report["demo"].as_str().unwrap_or("demo"),
        report["parties"],
        outputs.join(", "),
        if report["instances"].as_array().map_or(0, |a| a.len()) > 5 { ", ..." } else { "" },
        report["triples_consumed"],
        report["rounds"],
    )
}

fn cmd_export(cfg: &Config, kind: DemoKind, inputs: &DemoInputs, force: bool) -> Result<Outcome> {
    let path = transcript_path(cfg);
    refuse_overwrite(std::slice::from_ref(&path), force)?;
    let (demo, pipe) = run_demo(cfg, kind, inputs)?;
    let transcript = pipe.into_bus().into_transcript();
    let text = transcript.to_jsonl();
    write_file(&path, text.as_bytes())?;
    let back = Transcript::from_jsonl(&String::from_utf8(read_file(&path)?).map_err(|e| Error::Decode(e.to_string()))?)?;
    if back.digest() != transcript.digest() {
        return Err(Error::Decode("transcript did not read back identically".into()));
    }
    let summary = format!("{} envelopes to {}, digest {}", transcript.envelopes.len(), path.display(), transcript.digest());
    Ok(Outcome {
        report: json!({
            "command": "export-transcript",
            "path": path,
            "envelopes": transcript.envelopes.len(),
            "digest": transcript.digest(),
            "demo": demo,
        }),
        summary,
    })
}

/// Runs a parsed command.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = cli.global.config()?;
    match &cli.command {
        Command::Keygen { force } => cmd_keygen(&cfg, *force),
        Command::Triples { count, verify, force } => cmd_triples(&cfg, *count, *verify, *force),
        Command::BenchEnc { count } => cmd_bench(&cfg, *count),
        Command::Demo { demo, inputs } => {
            let (report, _) = run_demo(&cfg, *demo, inputs)?;
            let summary = demo_summary(&report);
            Ok(Outcome { report, summary })
        }
        Command::Verify => cmd_verify(&cfg),
        Command::ExportTranscript { demo, inputs, force } => cmd_export(&cfg, *demo, inputs, *force),
    }
}

/// Parses `args`, runs the command, writes the report and summary, and returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return 2;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    match run(&cli) {
        Ok(out) => {
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&out.report).expect("json"));
            let _ = writeln!(stderr, "{}", out.summary);
            0
        }
        Err(e) => {
            let report = json!({ "error": e.to_string(), "kind": error_kind(&e) });
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&report).expect("json"));
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    main_with(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
