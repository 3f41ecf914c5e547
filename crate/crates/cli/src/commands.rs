//! Subcommand implementations. Each writes its artifacts and a manifest
//! into the output directory and returns the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use symdec_codes::{builtin, code_distance, from_text, to_text, CheckMatrix, BUILTIN_NAMES};
use symdec_core::artifact::{load_decoder, load_oracle, save_decoder, save_oracle, sha256_file, sha256_hex, ModelKind, ModelMeta};
use symdec_core::dataset::{make_training_set, Dataset};
use symdec_core::decoder::train_decoder;
use symdec_core::evalbench::{
    difference_csv, difference_svg, sweep_paired, sweeps_to_csv, sweeps_to_svg, NamedTransformer, SweepResult,
    SyndromeDecoder, ZeroDecoder,
};
use symdec_core::lut::build_lut_decoder;
use symdec_core::metrics::{oracle_quality, structural_metrics};
use symdec_core::oracle::{train_oracle, Oracle};
use symdec_core::reopt::run_reopt;
use symdec_core::seeding::{derived_seed, stream};

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::manifest::{make_run_id, output_ref, ArtifactRef, RunManifest, MANIFEST_FILE};

/// Shared settings of one invocation.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub config: Config,
    pub deterministic: bool,
    pub quiet: bool,
}

impl RunOptions {
    fn log(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Strict-deterministic mode: single-threaded kernels and thread pool.
pub fn enable_deterministic() {
    symdec_autodiff::set_deterministic(true);
    // Fails harmlessly if the global pool already exists.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
}

pub struct ResolvedCode {
    pub code: CheckMatrix,
    pub name: String,
    pub input: ArtifactRef,
}

/// A built-in name or a path to a code definition file.
pub fn resolve_code(spec: &str) -> Result<ResolvedCode> {
    let spec = spec.strip_prefix("builtin:").unwrap_or(spec);
    if BUILTIN_NAMES.contains(&spec) {
        let code = builtin(spec)?;
        let sha256 = sha256_hex(to_text(&code).as_bytes());
        return Ok(ResolvedCode {
            code,
            name: spec.to_string(),
            input: ArtifactRef { role: "code".into(), path: format!("builtin:{spec}"), sha256 },
        });
    }
    let path = PathBuf::from(spec);
    let text = fs::read_to_string(&path).map_err(|e| CliError::Config(format!("cannot read code file {spec}: {e}")))?;
    let code = from_text(&text)?;
    let abs = absolute(&path)?;
    Ok(ResolvedCode {
        code,
        name: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        input: ArtifactRef { role: "code".into(), path: abs.to_string_lossy().into_owned(), sha256: sha256_hex(text.as_bytes()) },
    })
}

fn absolute(path: &Path) -> Result<PathBuf> {
    fs::canonicalize(path).map_err(|e| CliError::Config(format!("missing input {}: {e}", path.display())))
}

fn input_file(role: &str, path: &Path) -> Result<ArtifactRef> {
    let abs = absolute(path)?;
    Ok(ArtifactRef { role: role.into(), path: abs.to_string_lossy().into_owned(), sha256: sha256_file(&abs)? })
}

fn prepare_out(opts: &RunOptions) -> Result<()> {
    fs::create_dir_all(&opts.out)?;
    Ok(())
}

struct Run<'a> {
    opts: &'a RunOptions,
    subcommand: &'static str,
    start: Instant,
    inputs: Vec<ArtifactRef>,
    outputs: Vec<ArtifactRef>,
    options: BTreeMap<String, String>,
    metrics: BTreeMap<String, f64>,
}

impl<'a> Run<'a> {
    fn new(opts: &'a RunOptions, subcommand: &'static str) -> Result<Self> {
        opts.config.validate()?;
        prepare_out(opts)?;
        Ok(Self {
            opts,
            subcommand,
            start: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            options: BTreeMap::new(),
            metrics: BTreeMap::new(),
        })
    }

    fn write(&mut self, role: &str, file: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        fs::write(self.opts.out.join(file), contents)?;
        self.record(role, file)
    }

    fn record(&mut self, role: &str, file: &str) -> Result<()> {
        self.outputs.push(output_ref(&self.opts.out, role, file)?);
        Ok(())
    }

    fn finish(self) -> Result<RunManifest> {
        let seed = self.opts.config.seed()?;
        let config = self.opts.config.entries().clone();
        let manifest = RunManifest {
            run_id: make_run_id(self.subcommand, &self.opts.config.to_text()),
            subcommand: self.subcommand.into(),
            config,
            seeds: [("run".to_string(), seed)].into(),
            deterministic: self.opts.deterministic,
            options: self.options,
            inputs: self.inputs,
            outputs: self.outputs,
            duration_secs: self.start.elapsed().as_secs_f64(),
            metrics: self.metrics,
        };
        manifest.save(&self.opts.out)?;
        Ok(manifest)
    }
}

fn meta(kind: ModelKind, code: &ResolvedCode, opts: &RunOptions) -> Result<ModelMeta> {
    Ok(ModelMeta {
        kind,
        code: code.name.clone(),
        code_sha256: code.input.sha256.clone(),
        n: code.code.n(),
        syndrome_len: code.code.num_rows(),
        hidden: None,
        arch: None,
        seed: opts.config.seed()?,
        config: opts.config.entries().clone(),
        metrics: BTreeMap::new(),
    })
}

fn check_model_code(m: &ModelMeta, code: &ResolvedCode, path: &Path) -> Result<()> {
    if m.code_sha256 != code.input.sha256 {
        return Err(CliError::Validation(format!("{} was trained on a different code ({})", path.display(), m.code)));
    }
    Ok(())
}

pub fn train_oracle_cmd(opts: &RunOptions, code_spec: &str) -> Result<RunManifest> {
    let mut run = Run::new(opts, "train-oracle")?;
    let code = resolve_code(code_spec)?;
    run.inputs.push(code.input.clone());
    let cfg = opts.config.oracle()?;
    opts.log(format!("training oracle on {} ({} samples x {} epochs)", code.name, cfg.train_samples, cfg.epochs));
    let (mlp, log) = train_oracle(&code.code, &cfg, |e| {
        opts.log(format!("epoch {} train_mse {:.6} test_mse {:.6}", e.epoch, e.train_loss, e.test_loss))
    })?;
    let mut csv = String::from("epoch,train_loss,test_loss\n");
    for e in &log {
        csv += &format!("{},{},{}\n", e.epoch, e.train_loss, e.test_loss);
    }
    let quality = oracle_quality(&Oracle::Mlp(mlp.clone()), &code.code, opts.config.metrics_samples()?, cfg.seed)?;
    let last = log.last().expect("at least one epoch");
    run.metrics.insert("final_train_loss".into(), last.train_loss);
    run.metrics.insert("final_test_loss".into(), last.test_loss);
    run.metrics.insert("cosine".into(), quality.cosine);
    run.metrics.insert("mse".into(), quality.mse);
    run.metrics.insert("mae".into(), quality.mae);
    let mut m = meta(ModelKind::Oracle, &code, opts)?;
    m.hidden = Some(cfg.hidden);
    m.metrics = run.metrics.clone();
    save_oracle(&opts.out.join("oracle.ckpt"), &mlp, &m)?;
    run.record("oracle", "oracle.ckpt")?;
    run.record("oracle-meta", "oracle.ckpt.json")?;
    run.write("log", "oracle_log.csv", csv)?;
    opts.log(format!("cosine {:.5} mse {:.5} mae {:.5}", quality.cosine, quality.mse, quality.mae));
    run.finish()
}

pub fn train_decoder_cmd(opts: &RunOptions, code_spec: &str) -> Result<RunManifest> {
    let mut run = Run::new(opts, "train-decoder")?;
    let code = resolve_code(code_spec)?;
    run.inputs.push(code.input.clone());
    let cfg = opts.config.decoder()?;
    let schedule = opts.config.p_schedule()?;
    let train = make_training_set(&code.code, cfg.train_pairs, &schedule, cfg.seed)?;
    let test = make_training_set(&code.code, cfg.test_pairs, &schedule, derived_seed(cfg.seed, &[stream::DECODER_TEST]))?;
    train.save(&opts.out.join("train.usdd"))?;
    test.save(&opts.out.join("test.usdd"))?;
    run.record("train-set", "train.usdd")?;
    run.record("test-set", "test.usdd")?;
    opts.log(format!("training decoder on {} ({} pairs x {} epochs)", code.name, cfg.train_pairs, cfg.epochs));
    let (model, log) = train_decoder(&train, &test, &cfg, |e| {
        opts.log(format!("epoch {} train_bce {:.6} test_bce {:.6}", e.epoch, e.train_bce, e.test_bce))
    })?;
    let mut csv = String::from("epoch,train_bce,test_bce\n");
    for e in &log {
        csv += &format!("{},{},{}\n", e.epoch, e.train_bce, e.test_bce);
    }
    let last = log.last().expect("at least one epoch");
    run.metrics.insert("epochs_run".into(), log.len() as f64);
    run.metrics.insert("final_train_bce".into(), last.train_bce);
    run.metrics.insert("final_test_bce".into(), last.test_bce);
    let mut m = meta(ModelKind::Decoder, &code, opts)?;
    m.arch = Some(cfg.arch.clone());
    m.metrics = run.metrics.clone();
    save_decoder(&opts.out.join("decoder.ckpt"), &model, &m)?;
    run.record("decoder", "decoder.ckpt")?;
    run.record("decoder-meta", "decoder.ckpt.json")?;
    run.write("log", "decoder_log.csv", csv)?;
    run.finish()
}

fn resolve_oracle(spec: &str, code: &ResolvedCode) -> Result<(Oracle, ArtifactRef)> {
    if spec == "exact" {
        return Ok((Oracle::Exact, ArtifactRef { role: "oracle".into(), path: "exact".into(), sha256: String::new() }));
    }
    let path = Path::new(spec);
    let input = input_file("oracle", path)?;
    let (mlp, m) = load_oracle(path)?;
    check_model_code(&m, code, path)?;
    Ok((Oracle::Mlp(mlp), input))
}

pub fn reopt_cmd(opts: &RunOptions, code_spec: &str, decoder: &Path, dataset: &Path, oracle_spec: &str) -> Result<RunManifest> {
    let mut run = Run::new(opts, "reopt")?;
    let code = resolve_code(code_spec)?;
    run.inputs.push(code.input.clone());
    run.inputs.push(input_file("decoder", decoder)?);
    run.inputs.push(input_file("dataset", dataset)?);
    let (oracle, oracle_ref) = resolve_oracle(oracle_spec, &code)?;
    run.inputs.push(oracle_ref);
    run.options.insert("oracle".into(), oracle.id().into());
    let (mut model, mut m) = load_decoder(decoder)?;
    check_model_code(&m, &code, decoder)?;
    let data = Dataset::load(dataset, &code.code)?;
    let cfg = opts.config.reopt()?;
    opts.log(format!("re-optimizing with {} oracle ({} pairs x {} epochs, lr {})", oracle.id(), data.len(), cfg.epochs, cfg.lr));
    let log = run_reopt(&code.code, &mut model, &oracle, &data, &cfg, |e| {
        opts.log(format!("epoch {} loss {:.8}", e.epoch, e.loss))
    })?;
    let mut csv = String::from("epoch,loss\n");
    for e in &log {
        csv += &format!("{},{}\n", e.epoch, e.loss);
    }
    run.metrics.insert("first_epoch_loss".into(), log[0].loss);
    run.metrics.insert("last_epoch_loss".into(), log[log.len() - 1].loss);
    m.seed = cfg.seed;
    m.config = opts.config.entries().clone();
    m.metrics = run.metrics.clone();
    save_decoder(&opts.out.join("decoder_reopt.ckpt"), &model, &m)?;
    run.record("decoder", "decoder_reopt.ckpt")?;
    run.record("decoder-meta", "decoder_reopt.ckpt.json")?;
    run.write("log", "reopt_log.csv", csv)?;
    run.finish()
}

enum LoadedDecoder {
    Zero(ZeroDecoder),
    Lut(Box<symdec_core::lut::LutDecoder>),
    Model(Box<symdec_core::decoder::TransformerDecoder>, String),
}

pub fn sweep_cmd(opts: &RunOptions, code_spec: &str, decoders: &[String], paired: bool, svg: bool) -> Result<RunManifest> {
    let mut run = Run::new(opts, "sweep")?;
    let code = resolve_code(code_spec)?;
    run.inputs.push(code.input.clone());
    if decoders.is_empty() {
        return Err(CliError::Config("sweep needs at least one decoder".into()));
    }
    if paired && decoders.len() != 2 {
        return Err(CliError::Config("--paired takes exactly two decoders".into()));
    }
    let mut loaded = Vec::new();
    for (i, spec) in decoders.iter().enumerate() {
        loaded.push(match spec.as_str() {
            "zero" => LoadedDecoder::Zero(ZeroDecoder { n: code.code.n() }),
            "lut" => LoadedDecoder::Lut(Box::new(build_lut_decoder(&code.code)?)),
            path => {
                let p = Path::new(path);
                run.inputs.push(input_file(&format!("decoder{i}"), p)?);
                let (model, m) = load_decoder(p)?;
                check_model_code(&m, &code, p)?;
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                LoadedDecoder::Model(Box::new(model), format!("{i}:{stem}"))
            }
        });
    }
    let named: Vec<Option<NamedTransformer<'_>>> = loaded
        .iter()
        .map(|d| match d {
            LoadedDecoder::Model(m, name) => Some(NamedTransformer { name: name.clone(), model: m }),
            _ => None,
        })
        .collect();
    let refs: Vec<&dyn SyndromeDecoder> = loaded
        .iter()
        .zip(&named)
        .map(|(d, nt)| match (d, nt) {
            (LoadedDecoder::Zero(z), _) => z as &dyn SyndromeDecoder,
            (LoadedDecoder::Lut(l), _) => l.as_ref() as &dyn SyndromeDecoder,
            (_, Some(nt)) => nt as &dyn SyndromeDecoder,
            _ => unreachable!("model decoders are named"),
        })
        .collect();
    run.options.insert("decoders".into(), decoders.join(","));
    run.options.insert("paired".into(), paired.to_string());
    run.options.insert("svg".into(), svg.to_string());
    let grid = opts.config.grid()?;
    let trials = opts.config.trials()?;
    let seed = opts.config.seed()?;
    opts.log(format!("sweeping {} decoder(s) over {} p values x {trials} trials", refs.len(), grid.len()));
    let results = sweep_paired(&code.code, &refs, &grid, trials, seed)?;
    for r in &results {
        for p in &r.points {
            opts.log(format!("{} p={} rate={} [{}, {}]", r.decoder_id, p.p, p.rate, p.ci_low, p.ci_high));
            run.metrics.insert(format!("rate.{}.{}", r.decoder_id, p.p), p.rate);
        }
    }
    run.write("sweep", "sweep.csv", sweeps_to_csv(&results))?;
    if svg {
        run.write("plot", "sweep.svg", sweeps_to_svg(&results, &format!("{} logical error rate", code.name)))?;
    }
    if paired {
        run.write("difference", "difference.csv", difference_csv(&results[0], &results[1])?)?;
        if svg {
            let pair: Vec<(SweepResult, SweepResult)> = vec![(results[0].clone(), results[1].clone())];
            run.write("difference-plot", "difference.svg", difference_svg(&pair, "change in logical error rate")?)?;
        }
    }
    run.finish()
}

pub fn metrics_cmd(opts: &RunOptions, code_spec: &str, oracle_spec: &str) -> Result<RunManifest> {
    let mut run = Run::new(opts, "metrics")?;
    let code = resolve_code(code_spec)?;
    run.inputs.push(code.input.clone());
    let (oracle, oracle_ref) = resolve_oracle(oracle_spec, &code)?;
    run.inputs.push(oracle_ref);
    run.options.insert("oracle".into(), oracle.id().into());
    let samples = opts.config.metrics_samples()?;
    let m = structural_metrics(&oracle, &code.code, samples, opts.config.seed()?)?;
    run.metrics.insert("cosine".into(), m.quality.cosine);
    run.metrics.insert("mse".into(), m.quality.mse);
    run.metrics.insert("mae".into(), m.quality.mae);
    run.metrics.insert("dirichlet_ratio".into(), m.dirichlet.ratio);
    run.metrics.insert("group_invariance_mean".into(), m.invariance.mean);
    let text = m.to_kv();
    opts.log(text.trim_end());
    run.write("metrics", "metrics.txt", text)?;
    run.finish()
}

/// Runs the manifest's subcommand again in strict-deterministic mode and
/// compares every output hash. Returns the new manifest and a report.
pub fn rerun_cmd(manifest_path: &Path, out: Option<PathBuf>, quiet: bool) -> Result<(RunManifest, Vec<String>)> {
    let original = RunManifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let out = out.unwrap_or_else(|| dir.join("rerun"));
    if out == dir {
        return Err(CliError::Config("rerun output directory must differ from the original".into()));
    }
    for a in &original.inputs {
        if a.path.starts_with("builtin:") || a.path == "exact" {
            continue;
        }
        let h = sha256_file(Path::new(&a.path)).map_err(|_| CliError::Validation(format!("input {} is missing", a.path)))?;
        if h != a.sha256 {
            return Err(CliError::Validation(format!("input {} changed since the run", a.path)));
        }
    }
    enable_deterministic();
    let opts = RunOptions { out: out.clone(), config: Config::from_entries(&original.config)?, deterministic: true, quiet };
    let code = original
        .input("code")
        .map(|a| a.path.clone())
        .ok_or_else(|| CliError::Validation("manifest lacks a code input".into()))?;
    let path_of = |role: &str| -> Result<PathBuf> {
        original
            .input(role)
            .map(|a| PathBuf::from(&a.path))
            .ok_or_else(|| CliError::Validation(format!("manifest lacks a `{role}` input")))
    };
    let oracle_spec = || original.input("oracle").map(|a| a.path.clone()).unwrap_or_else(|| "exact".into());
    let fresh = match original.subcommand.as_str() {
        "train-oracle" => train_oracle_cmd(&opts, &code)?,
        "train-decoder" => train_decoder_cmd(&opts, &code)?,
        "reopt" => reopt_cmd(&opts, &code, &path_of("decoder")?, &path_of("dataset")?, &oracle_spec())?,
        "metrics" => metrics_cmd(&opts, &code, &oracle_spec())?,
        "sweep" => {
            let decoders: Vec<String> = original
                .options
                .get("decoders")
                .map(|s| s.split(',').map(str::to_string).collect())
                .unwrap_or_default();
            let mut files = original.inputs.iter().filter(|a| a.role.starts_with("decoder")).map(|a| a.path.clone());
            let specs: Vec<String> = decoders
                .iter()
                .map(|d| if d == "zero" || d == "lut" { d.clone() } else { files.next().unwrap_or_else(|| d.clone()) })
                .collect();
            let flag = |k: &str| original.options.get(k).is_some_and(|v| v == "true");
            sweep_cmd(&opts, &code, &specs, flag("paired"), flag("svg"))?
        }
        other => return Err(CliError::Validation(format!("cannot rerun subcommand `{other}`"))),
    };
    let mut report = Vec::new();
    let mut mismatches = Vec::new();
    for a in &original.outputs {
        let status = match fresh.output(&a.role).filter(|b| b.path == a.path) {
            Some(b) if b.sha256 == a.sha256 => "IDENTICAL",
            Some(_) => "DIFFERENT",
            None => "MISSING",
        };
        if status != "IDENTICAL" {
            mismatches.push(a.path.clone());
        }
        report.push(format!("{status} {}", a.path));
    }
    if fresh.outputs.len() != original.outputs.len() {
        mismatches.push("output set".into());
    }
    if mismatches.is_empty() {
        Ok((fresh, report))
    } else {
        Err(CliError::Validation(format!(
            "rerun of {} differs in: {} (new run in {})",
            manifest_path.display(),
            mismatches.join(", "),
            out.join(MANIFEST_FILE).display()
        )))
    }
}

/// Commutation, rank and distance checks. Returns report lines.
pub fn verify_code(code_spec: &str) -> Result<Vec<String>> {
    let code = resolve_code(code_spec)?;
    // Rebuilding from the rows repeats the commutation and rank checks.
    let rebuilt = CheckMatrix::new(code.code.rows().to_vec())?;
    let text_round_trip = from_text(&to_text(&rebuilt))? == rebuilt;
    if !text_round_trip {
        return Err(CliError::Validation("definition does not round-trip through the text format".into()));
    }
    let d = code_distance(&code.code)?;
    Ok(vec![
        format!("code {}", code.name),
        format!("n={} rows={} d={}", code.code.n(), code.code.num_rows(), d),
        "commutation OK, rank OK, logicals OK, round-trip OK".into(),
        "PASS".into(),
    ])
}
