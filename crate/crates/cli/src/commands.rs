use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use geomnet::counting::{self, CountReport, EmpiricalOptions};
use geomnet::filters::enumerate_invariant_filters;
use geomnet::format;
use geomnet::net::{check_equivariance, presets, train, Model, ModelSpec, TrainConfig, TrainStatus};
use geomnet::physics::{
    ChargeConfig, Dataset, GravityConfig, Problem, ProblemConfig, SamplePair, SplitSizes, SPLIT_NAMES,
};
use geomnet::Parity;
use serde::Serialize;
use serde_json::json;

use crate::manifest::{emit, read_text, sidecar, RunManifest, DIR_MANIFEST};
use crate::*;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn input_err(path: &Path) -> impl FnOnce(geomnet::Error) -> CliError + '_ {
    move |source| CliError::Input { context: path.display().to_string(), source }
}

fn ok(text: String, json: serde_json::Value) -> CliResult<Outcome> {
    Ok(Outcome { text, json, failure: None })
}

pub(crate) fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Filters(a) => filters(cli, a),
        Command::Count(a) => count(cli, a),
        Command::CheckEquivariance(a) => check(cli, a),
        Command::GenData(a) => gen_data(cli, a),
        Command::Train(a) => train_cmd(cli, a),
        Command::Eval(a) => eval(cli, a),
        Command::Preset(a) => preset(cli, a),
        Command::Sweep(a) => sweep(cli, a),
    }
}

fn filters(cli: &Cli, a: &FiltersArgs) -> CliResult<Outcome> {
    let parity =
        Parity::from_sign(a.parity).or_else(|_| usage(format!("--parity must be 1 or -1, got {}", a.parity)))?;
    if a.m.is_multiple_of(2) {
        return usage(format!("--M must be odd, got {}", a.m));
    }
    if a.d == 0 || a.d > 3 || a.k > 4 || a.m > 9 {
        return usage("supported ranges are 1 <= d <= 3, k <= 4, M <= 9");
    }
    let bank = enumerate_invariant_filters(a.m, a.d, a.k, parity)?;
    if let Some(out) = &a.out {
        let mut m = RunManifest::new("filters", cli, vec![]);
        emit(&mut m, out, format::bank_to_json(&bank).as_bytes())?;
        m.write(&sidecar(out))?;
    }
    let text = format!("d={} M={} k={} parity={}: {} invariant filters\n", a.d, a.m, a.k, parity, bank.len());
    ok(text, json!({"d": a.d, "M": a.m, "k": a.k, "parity": a.parity, "count": bank.len(), "out": a.out}))
}

fn count(cli: &Cli, a: &CountArgs) -> CliResult<Outcome> {
    if a.n.is_multiple_of(2) {
        return usage(format!("--N must be odd, got {}", a.n));
    }
    let want = |m: CountMode| a.mode == m || a.mode == CountMode::All;
    let closed = counting::dimension_closed_form(a.n, a.degree)?;
    let molien = if want(CountMode::Molien) { Some(counting::dimension_molien(a.n, a.degree)?) } else { None };
    let empirical = if want(CountMode::Empirical) {
        let opts = EmpiricalOptions {
            seed: a.seed,
            probes: a.probes,
            max_candidates: a.max_candidates,
            max_seconds: a.max_seconds,
        };
        Some(counting::count_empirical(a.n, a.degree, &opts)?)
    } else {
        None
    };
    let mut consistent = molien.as_ref().is_none_or(|m| *m == closed);
    if let Some(e) = &empirical {
        consistent &= e.complete() && closed == e.found.into();
    }
    let report = CountReport {
        n: a.n,
        degree: a.degree,
        closed_form: want(CountMode::Closed).then(|| closed.to_string()),
        molien: molien.map(|m| m.to_string()),
        empirical,
        seed: a.seed,
        consistent,
    };
    let body = format::to_json(&report);
    if let Some(out) = &a.out {
        let mut m = RunManifest::new("count", cli, vec![a.seed]);
        emit(&mut m, out, body.as_bytes())?;
        m.write(&sidecar(out))?;
    }
    let mut text = format!("N={} degree={}\n", a.n, a.degree);
    if let Some(c) = &report.closed_form {
        let _ = writeln!(text, "  closed form: {c}");
    }
    if let Some(m) = &report.molien {
        let _ = writeln!(text, "  Molien:      {m}");
    }
    if let Some(e) = &report.empirical {
        let flag = if e.budget_exhausted { " (budget exhausted)" } else { "" };
        let _ = writeln!(text, "  empirical:   {} of {}{flag}", e.found, e.target);
    }
    let _ = writeln!(text, "  consistent:  {}", report.consistent);
    let failure = (!report.consistent).then(|| "counts disagree or the empirical search is incomplete".to_string());
    Ok(Outcome { text, json: serde_json::to_value(&report).expect("json"), failure })
}

/// Reads either a model document or a bare architecture document.
fn load_spec(path: &Path) -> CliResult<(ModelSpec, Option<Vec<f64>>)> {
    let text = read_text(path)?;
    if let Ok((spec, params)) = format::parse_model(&text) {
        return Ok((spec, Some(params)));
    }
    Ok((format::parse_net(&text).map_err(input_err(path))?, None))
}

fn load_params(path: &Path) -> CliResult<Vec<f64>> {
    let text = read_text(path)?;
    if let Ok((_, params)) = format::parse_model(&text) {
        return Ok(params);
    }
    serde_json::from_str::<Vec<f64>>(&text).map_err(|e| CliError::Input {
        context: path.display().to_string(),
        source: geomnet::Error::Format(e.to_string()),
    })
}

fn check(cli: &Cli, a: &CheckArgs) -> CliResult<Outcome> {
    if a.n.is_multiple_of(2) {
        return usage(format!("--N must be odd, got {}", a.n));
    }
    if !(a.init_std.is_finite() && a.init_std >= 0.0) {
        return usage("--init-std must be non-negative");
    }
    let mut manifest = RunManifest::new("check-equivariance", cli, vec![a.seed]);
    let (spec, embedded) = match (&a.net, &a.preset) {
        (Some(p), _) => {
            manifest.input(p)?;
            load_spec(p)?
        }
        (None, Some(name)) => (presets::preset(name)?, None),
        (None, None) => return usage("one of --net or --preset is required"),
    };
    let params = match &a.params {
        Some(p) => {
            manifest.input(p)?;
            Some(load_params(p)?)
        }
        None => embedded,
    };
    let model = Model::new(spec)?;
    if let Some(p) = &params {
        if p.len() != model.param_count() {
            return Err(geomnet::Error::ParamCount { expected: model.param_count(), found: p.len() }.into());
        }
    }
    let report = check_equivariance(&model, params.as_deref(), a.n, a.trials, a.translations, a.init_std, a.seed)?;
    let pass = report.passes(a.tolerance);
    let summary = json!({"report": report, "tolerance": a.tolerance, "pass": pass, "param_count": model.param_count()});
    if let Some(out) = &a.out {
        emit(&mut manifest, out, format::to_json(&summary).as_bytes())?;
        manifest.write(&sidecar(out))?;
    }
    let text = format!(
        "max relative violation {:.3e} over {} checks ({} trials, {} group elements, {} translations): {}\n",
        report.max_violation,
        report.checks,
        report.trials,
        report.group_elements,
        report.translations,
        if pass { "pass" } else { "FAIL" }
    );
    let failure = (!pass).then(|| format!("violation {:.3e} exceeds {:.1e}", report.max_violation, a.tolerance));
    Ok(Outcome { text, json: summary, failure })
}

fn problem_config(problem: ProblemArg, p: &PhysicsArgs) -> CliResult<ProblemConfig> {
    let cfg = match problem {
        ProblemArg::Gravity => ProblemConfig::Gravity(GravityConfig { n: p.n, masses: p.masses }),
        ProblemArg::Charge => ProblemConfig::Charge(ChargeConfig {
            n: p.n,
            charges: p.charges,
            dt: p.dt,
            steps: p.steps,
            squash_scale: p.squash,
        }),
    };
    cfg.validate().or_else(|e| usage(e.to_string()))?;
    Ok(cfg)
}

/// Writes the split files and the dataset manifest into `dir`.
fn write_dataset(m: &mut RunManifest, dir: &Path, ds: &Dataset) -> CliResult<()> {
    let mut files = BTreeMap::new();
    let problem = ds.config.problem();
    for (i, name) in SPLIT_NAMES.iter().enumerate() {
        let file = format!("{name}.json");
        let samples = ds.split(name).expect("known split");
        let body = format::split_to_json(problem, name, geomnet::physics::split_seed(ds.seed, i), samples);
        emit(m, &dir.join(&file), body.as_bytes())?;
        files.insert(name.to_string(), file);
    }
    let doc = format::DatasetManifest {
        schema_version: format::SCHEMA_VERSION,
        seed: ds.seed,
        config: ds.config.clone(),
        sizes: ds.sizes(),
        files,
    };
    emit(m, &dir.join("manifest.json"), format::to_json(&doc).as_bytes())
}

fn gen_data(cli: &Cli, a: &GenDataArgs) -> CliResult<Outcome> {
    let cfg = problem_config(a.problem, &a.physics)?;
    let ds = Dataset::generate(cfg, a.seed, SplitSizes { train: a.train, val: a.val, test: a.test })?;
    let mut m = RunManifest::new("gen-data", cli, vec![a.seed]);
    write_dataset(&mut m, &a.out, &ds)?;
    m.write(&a.out.join(DIR_MANIFEST))?;
    let text = format!(
        "{} dataset: {} train, {} val, {} test samples in {}\n",
        ds.config.problem(),
        a.train,
        a.val,
        a.test,
        a.out.display()
    );
    ok(text, json!({"problem": ds.config.problem(), "sizes": ds.sizes(), "out": a.out}))
}

/// Loads a dataset directory, recording every file read.
fn load_dataset(m: &mut RunManifest, dir: &Path) -> CliResult<Dataset> {
    let mpath = dir.join("manifest.json");
    m.input(&mpath)?;
    let doc = format::parse_dataset_manifest(&read_text(&mpath)?).map_err(input_err(&mpath))?;
    let mut splits: BTreeMap<&str, Vec<SamplePair>> = BTreeMap::new();
    for name in SPLIT_NAMES {
        let Some(file) = doc.files.get(name) else {
            splits.insert(name, Vec::new());
            continue;
        };
        let path = dir.join(file);
        m.input(&path)?;
        let samples = format::parse_split(&read_text(&path)?).map_err(input_err(&path))?;
        if samples.iter().any(|s| s.meta.problem != doc.config.problem()) {
            return Err(CliError::Input {
                context: path.display().to_string(),
                source: geomnet::Error::Format("split problem differs from the manifest".into()),
            });
        }
        splits.insert(name, samples);
    }
    let ds = Dataset {
        config: doc.config,
        seed: doc.seed,
        train: splits.remove("train").unwrap_or_default(),
        val: splits.remove("val").unwrap_or_default(),
        test: splits.remove("test").unwrap_or_default(),
    };
    if ds.sizes() != doc.sizes {
        return Err(CliError::Input {
            context: mpath.display().to_string(),
            source: geomnet::Error::Format("split sizes differ from the manifest".into()),
        });
    }
    Ok(ds)
}

fn default_preset(problem: Problem, kind: ModelKind) -> &'static str {
    match (problem, kind) {
        (Problem::Gravity, ModelKind::Ginet) => "gravity",
        (Problem::Gravity, ModelKind::Baseline) => "gravity-baseline",
        (Problem::Charge, ModelKind::Ginet) => "charge",
        (Problem::Charge, ModelKind::Baseline) => "charge-baseline",
    }
}

fn choose_model(m: &mut RunManifest, choice: &ModelChoice, problem: Problem) -> CliResult<ModelSpec> {
    if let Some(p) = &choice.net {
        m.input(p)?;
        return Ok(load_spec(p)?.0);
    }
    let name = choice.preset.as_deref().unwrap_or_else(|| default_preset(problem, choice.model));
    Ok(presets::preset(name)?)
}

/// The default training configuration, with the lower starting rate the
/// charge baseline needs.
fn base_config(problem: Problem, spec: &ModelSpec) -> TrainConfig {
    let mut cfg = TrainConfig::default();
    if problem == Problem::Charge && matches!(spec, ModelSpec::Baseline(_)) {
        cfg.learning_rate = 0.001;
    }
    cfg
}

fn train_config(m: &mut RunManifest, o: &TrainOverrides, problem: Problem, spec: &ModelSpec) -> CliResult<TrainConfig> {
    let mut cfg = match &o.config {
        Some(p) => {
            m.input(p)?;
            format::parse_train_config(&read_text(p)?).map_err(input_err(p))?
        }
        None => base_config(problem, spec),
    };
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(e) = o.max_epochs {
        cfg.max_epochs = e;
    }
    if let Some(p) = o.patience {
        cfg.patience = p;
    }
    if let Some(lr) = o.learning_rate {
        cfg.learning_rate = lr;
    }
    cfg.validate().or_else(|e| usage(e.to_string()))?;
    Ok(cfg)
}

#[derive(Serialize)]
struct TrainReport {
    status: TrainStatus,
    epochs: usize,
    best_epoch: usize,
    param_count: usize,
    train_rmse: f64,
    val_rmse: f64,
    test_rmse: Option<f64>,
    config: TrainConfig,
}

fn train_cmd(cli: &Cli, a: &TrainArgs) -> CliResult<Outcome> {
    let mut m = RunManifest::new("train", cli, vec![]);
    let ds = load_dataset(&mut m, &a.data)?;
    let problem = ds.config.problem();
    let spec = choose_model(&mut m, &a.model, problem)?;
    let cfg = train_config(&mut m, &a.train, problem, &spec)?;
    m.seeds = vec![ds.seed, cfg.seed];
    let model = Model::new(spec.clone())?;
    let result = train(&model, &ds.train, &ds.val, &cfg)?;
    emit(&mut m, &a.out.join("history.csv"), result.history_csv().as_bytes())?;
    if let TrainStatus::Diverged { epoch } = result.status {
        let dump = json!({
            "schema_version": format::SCHEMA_VERSION,
            "status": result.status,
            "spec": spec,
            "last_params": result.last_params,
            "best_params": result.params,
            "history": result.history,
        });
        emit(&mut m, &a.out.join("state_dump.json"), format::to_json(&dump).as_bytes())?;
        m.write(&a.out.join(DIR_MANIFEST))?;
        return Ok(Outcome {
            text: format!(
                "training diverged at epoch {epoch}; state written to {}\n",
                a.out.join("state_dump.json").display()
            ),
            json: dump,
            failure: Some(format!("non-finite loss at epoch {epoch}")),
        });
    }
    let eval = model.evaluator(ds.train[0].input.n())?;
    let test_rmse = if ds.test.is_empty() { None } else { Some(train::rmse(&eval, &result.params, &ds.test)?) };
    let report = TrainReport {
        status: result.status.clone(),
        epochs: result.history.len(),
        best_epoch: result.best_epoch,
        param_count: model.param_count(),
        train_rmse: train::rmse(&eval, &result.params, &ds.train)?,
        val_rmse: result.best_val_rmse,
        test_rmse,
        config: cfg,
    };
    emit(&mut m, &a.out.join("model.json"), format::model_to_json(&spec, &result.params).as_bytes())?;
    emit(&mut m, &a.out.join("report.json"), format::to_json(&report).as_bytes())?;
    m.write(&a.out.join(DIR_MANIFEST))?;
    let mut text = format!(
        "{} params, {} epochs ({:?}), best epoch {}\n  train RMSE {:.6}\n  val RMSE   {:.6}\n",
        report.param_count, report.epochs, report.status, report.best_epoch, report.train_rmse, report.val_rmse
    );
    if let Some(t) = report.test_rmse {
        let _ = writeln!(text, "  test RMSE  {t:.6}");
    }
    ok(text, serde_json::to_value(&report).expect("json"))
}

fn eval(cli: &Cli, a: &EvalArgs) -> CliResult<Outcome> {
    let mut m = RunManifest::new("eval", cli, vec![]);
    m.input(&a.model_file)?;
    let (spec, params) = format::parse_model(&read_text(&a.model_file)?).map_err(input_err(&a.model_file))?;
    let ds = load_dataset(&mut m, &a.data)?;
    let samples = ds.split(&a.split).ok_or_else(|| CliError::Usage(format!("unknown split {:?}", a.split)))?;
    if samples.is_empty() {
        return usage(format!("split {} is empty", a.split));
    }
    let model = Model::new(spec)?;
    let ev = model.evaluator(samples[0].input.n())?;
    let per_sample = samples
        .iter()
        .map(|s| {
            let pred = ev.forward(&params, &s.input)?;
            let n = s.target.data().len() as f64;
            let sse: f64 = pred.data().iter().zip(s.target.data()).map(|(p, t)| (p - t) * (p - t)).sum();
            Ok(json!({"index": s.meta.index, "rmse": (sse / n).sqrt()}))
        })
        .collect::<geomnet::Result<Vec<_>>>()?;
    let mean = per_sample.iter().map(|v| v["rmse"].as_f64().expect("number")).sum::<f64>() / per_sample.len() as f64;
    let pooled = train::rmse(&ev, &params, samples)?;
    let summary = json!({"split": a.split, "samples": per_sample, "mean_rmse": mean, "pooled_rmse": pooled});
    if let Some(out) = &a.out {
        emit(&mut m, out, format::to_json(&summary).as_bytes())?;
        m.write(&sidecar(out))?;
    }
    let text = format!("{} split: {} samples, mean RMSE {mean:.6}, pooled RMSE {pooled:.6}\n", a.split, samples.len());
    ok(text, summary)
}

/// Parameter counts reported for the named architectures in the original
/// experiments.
fn reference_count(name: &str) -> Option<usize> {
    match name {
        "gravity" => Some(3085),
        "charge" => Some(22986),
        "gravity-baseline" => Some(4345),
        "charge-baseline" => Some(25920),
        _ => None,
    }
}

fn preset(cli: &Cli, a: &PresetArgs) -> CliResult<Outcome> {
    let spec = presets::preset(&a.name).or_else(|e| usage(e.to_string()))?;
    let model = Model::new(spec.clone())?;
    if let Some(out) = &a.out {
        let mut m = RunManifest::new("preset", cli, vec![]);
        emit(&mut m, out, format::net_to_json(&spec).as_bytes())?;
        m.write(&sidecar(out))?;
    }
    let reference = reference_count(&a.name);
    let mut text = format!("{}: {} parameters", a.name, model.param_count());
    if let Some(r) = reference {
        let _ = write!(text, " (reference {r})");
    }
    text.push('\n');
    ok(text, json!({"name": a.name, "param_count": model.param_count(), "reference_count": reference, "out": a.out}))
}

fn sweep(cli: &Cli, a: &SweepArgs) -> CliResult<Outcome> {
    let cfg = problem_config(a.problem, &a.physics)?;
    let problem = cfg.problem();
    let val = a.val.unwrap_or(match problem {
        Problem::Gravity => 5,
        Problem::Charge => 10,
    });
    if a.sizes.is_empty() || a.sizes.contains(&0) || val == 0 || a.test == 0 {
        return usage("sizes, --val and --test must be positive");
    }
    let mut m = RunManifest::new("sweep", cli, std::iter::once(a.seed).chain(a.train_seeds.iter().copied()).collect());
    let file_cfg = match &a.config {
        Some(p) => {
            m.input(p)?;
            Some(format::parse_train_config(&read_text(p)?).map_err(input_err(p))?)
        }
        None => None,
    };
    let mut csv =
        String::from("problem,model,train_size,seed,epochs,best_epoch,status,train_rmse,val_rmse,test_rmse\n");
    let mut rows = Vec::new();
    for &size in &a.sizes {
        let ds = Dataset::generate(cfg.clone(), a.seed, SplitSizes { train: size, val, test: a.test })?;
        for &kind in &a.models {
            let spec = presets::preset(default_preset(problem, kind))?;
            let model = Model::new(spec.clone())?;
            let ev = model.evaluator(ds.train[0].input.n())?;
            for &seed in &a.train_seeds {
                let mut tc = file_cfg.clone().unwrap_or_else(|| base_config(problem, &spec));
                tc.seed = seed;
                if let Some(e) = a.max_epochs {
                    tc.max_epochs = e;
                }
                let r = train(&model, &ds.train, &ds.val, &tc)?;
                let status = match r.status {
                    TrainStatus::EarlyStopped => "early_stopped",
                    TrainStatus::MaxEpochs => "max_epochs",
                    TrainStatus::Diverged { .. } => "diverged",
                };
                let tr = train::rmse(&ev, &r.params, &ds.train)?;
                let te = train::rmse(&ev, &r.params, &ds.test)?;
                let name = match kind {
                    ModelKind::Ginet => "ginet",
                    ModelKind::Baseline => "baseline",
                };
                let _ = writeln!(
                    csv,
                    "{problem},{name},{size},{seed},{},{},{status},{tr},{},{te}",
                    r.history.len(),
                    r.best_epoch,
                    r.best_val_rmse
                );
                rows.push(json!({"model": name, "train_size": size, "seed": seed, "status": status,
                    "train_rmse": tr, "val_rmse": r.best_val_rmse, "test_rmse": te}));
            }
        }
    }
    let path: PathBuf = a.out.join("sweep.csv");
    emit(&mut m, &path, csv.as_bytes())?;
    m.write(&a.out.join(DIR_MANIFEST))?;
    ok(csv, json!({"problem": problem, "rows": rows, "out": path}))
}
