use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pricepref::datagen::{self, GenConfig};
use pricepref::eval::{grid_sweep, time_split, GridAxis, PahMode};
use pricepref::io::{dataset_hash, item_line, read_catalog_lines, read_interactions, sha256_hex, write_dataset};
use pricepref::mf::{fit, load_model, write_model};
use pricepref::{
    build_customer_profiles, validate_dataset, CustomerId, Dataset, Error, EvalContext, EvalOptions, HyperParams,
    MfModel, PriceProfiles, Recommender, Result, SplitSpec, TrainConfig, Violation,
};
use serde::{Deserialize, Serialize};

use crate::config::{read_toml, RunConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MODEL_FILE: &str = "model.json";

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

fn load_dataset(cfg: &RunConfig) -> Result<(Dataset, Vec<(u64, pricepref::ItemRecord)>)> {
    let interactions = cfg.input("interactions", &cfg.interactions)?;
    let catalog = cfg.input("catalog", &cfg.catalog)?;
    let events = read_interactions(&interactions)?;
    let lines = read_catalog_lines(&catalog)?;
    let dataset = Dataset::new(
        events,
        Dataset::catalog_from_records(lines.iter().map(|(_, r)| r.clone())),
    );
    Ok((dataset, lines))
}

fn violation_report(violations: &[Violation], lines: &[(u64, pricepref::ItemRecord)], catalog: &Path) -> String {
    let mut out = String::new();
    for v in violations {
        let location = match v {
            Violation::NonPositivePrice { item_id, .. } => item_line(lines, item_id)
                .map(|line| format!("{}:{line}: ", catalog.display()))
                .unwrap_or_default(),
            _ => String::new(),
        };
        out.push_str(&format!("{location}{v}\n"));
    }
    out
}

fn require_valid(cfg: &RunConfig, dataset: &Dataset, lines: &[(u64, pricepref::ItemRecord)]) -> Result<()> {
    let violations = validate_dataset(dataset);
    if violations.is_empty() {
        return Ok(());
    }
    let catalog = cfg.catalog.clone().unwrap_or_default();
    eprint!("{}", violation_report(&violations, lines, &catalog));
    Err(Error::Validation(format!(
        "dataset has {} violation(s)",
        violations.len()
    )))
}

/// Prints every violation; `Ok(false)` when there were any.
pub fn validate(cfg: &RunConfig) -> Result<bool> {
    let (dataset, lines) = load_dataset(cfg)?;
    let violations = validate_dataset(&dataset);
    let catalog = cfg.catalog.clone().unwrap_or_default();
    print!("{}", violation_report(&violations, &lines, &catalog));
    if violations.is_empty() {
        eprintln!(
            "ok: {} interactions, {} catalog items",
            dataset.interactions.len(),
            dataset.catalog.len()
        );
    }
    Ok(violations.is_empty())
}

#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub gen_config: Option<PathBuf>,
    pub preset: Option<String>,
    pub customers: Option<usize>,
    pub items: Option<usize>,
}

pub fn generate(cfg: &RunConfig, args: &GenerateArgs) -> Result<()> {
    let mut gen: GenConfig = match (&args.gen_config, &args.preset) {
        (Some(path), _) => read_toml(path)?,
        (None, preset) => GenConfig::preset(preset.as_deref().unwrap_or("ds1"), 5_000, 1_000, 42)?,
    };
    if let Some(n) = args.customers {
        gen.n_customers = n;
    }
    if let Some(n) = args.items {
        gen.n_items = n;
    }
    if let Some(seed) = cfg.seed {
        gen.seed = seed;
    }
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Validation("--out is required".into()))?;
    let dataset = datagen::generate(&gen)?;
    create_dir(&out)?;
    write_dataset(&out, &dataset)?;
    let stats = datagen::describe(&dataset);
    write_file(&out.join("stats.json"), &to_json(&stats))?;
    write_file(&out.join("gen_config.json"), &to_json(&gen))?;
    io::stdout()
        .write_all(&to_json(&stats))
        .map_err(io_err(Path::new("<stdout>")))
}

/// Written next to the model so later commands can rebuild the same split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub train_config: TrainConfig,
    pub split: SplitSpec,
    pub dataset_sha256: String,
    pub train_sha256: String,
    pub test_sha256: String,
    pub n_train_interactions: usize,
    pub n_test_interactions: usize,
    pub n_model_customers: usize,
    pub n_model_items: usize,
    pub model_sha256: String,
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let (dataset, lines) = load_dataset(cfg)?;
    require_valid(cfg, &dataset, &lines)?;
    let split = cfg.split();
    let train_config = cfg.train_config();
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Validation("--out is required".into()))?;

    let (train, test) = time_split(&dataset, &split)?;
    let started = Instant::now();
    let model = fit(&train, &train_config)?;
    eprintln!(
        "trained {} customers x {} items, {} epochs in {:.1}s",
        model.customers.len(),
        model.items.len(),
        train_config.epochs,
        started.elapsed().as_secs_f64()
    );

    let mut model_bytes = Vec::new();
    write_model(&mut model_bytes, &model).map_err(io_err(Path::new(MODEL_FILE)))?;
    let manifest = Manifest {
        seed: train_config.seed,
        train_config: train_config.clone(),
        split,
        dataset_sha256: dataset_hash(&dataset),
        train_sha256: dataset_hash(&train),
        test_sha256: dataset_hash(&test),
        n_train_interactions: train.interactions.len(),
        n_test_interactions: test.interactions.len(),
        n_model_customers: model.customers.len(),
        n_model_items: model.items.len(),
        model_sha256: sha256_hex(&model_bytes),
    };
    create_dir(&out)?;
    write_file(&out.join(MODEL_FILE), &model_bytes)?;
    write_file(&out.join(MANIFEST_FILE), &to_json(&manifest))?;
    println!("{}", out.join(MODEL_FILE).display());
    Ok(())
}

/// Model, manifest and the train/test split they were built from.
pub struct Session {
    pub model: MfModel,
    pub manifest: Manifest,
    pub dataset: Dataset,
    pub train: Dataset,
    pub test: Dataset,
    pub profiles: PriceProfiles,
}

impl Session {
    pub fn open(cfg: &RunConfig) -> Result<Self> {
        let model_path = cfg.input("model", &cfg.model)?;
        let manifest_path = model_path.with_file_name(MANIFEST_FILE);
        let manifest_bytes = fs::read(&manifest_path).map_err(io_err(&manifest_path))?;
        let manifest: Manifest = serde_json::from_slice(&manifest_bytes).map_err(|e| Error::Parse {
            path: manifest_path.clone(),
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        let model_bytes = fs::read(&model_path).map_err(io_err(&model_path))?;
        if sha256_hex(&model_bytes) != manifest.model_sha256 {
            return Err(Error::Validation(format!(
                "{} does not match the checksum in {}",
                model_path.display(),
                manifest_path.display()
            )));
        }
        let model = load_model(&model_path)?;

        let (dataset, lines) = load_dataset(cfg)?;
        require_valid(cfg, &dataset, &lines)?;
        if dataset_hash(&dataset) != manifest.dataset_sha256 {
            return Err(Error::Validation(
                "interactions/catalog differ from the dataset the model was trained on".into(),
            ));
        }
        let (train, test) = time_split(&dataset, &manifest.split)?;
        let profiles = build_customer_profiles(&train)?;
        Ok(Session {
            model,
            manifest,
            dataset,
            train,
            test,
            profiles,
        })
    }

    pub fn recommender(&self) -> Result<Recommender<'_>> {
        Recommender::new(&self.model, &self.profiles, &self.dataset.catalog, &self.train)
    }
}

fn hyper(cfg: &RunConfig) -> Result<HyperParams> {
    HyperParams::new(cfg.alpha.unwrap_or(0.0), cfg.beta.unwrap_or(0.0))
}

pub fn recommend(cfg: &RunConfig, customer: &str, n: usize, baseline_only: bool) -> Result<()> {
    let session = Session::open(cfg)?;
    let recommender = session.recommender()?;
    let customer = CustomerId::from(customer);
    let rec = if baseline_only {
        recommender.recommend_baseline(&customer, n)?
    } else {
        recommender.recommend(&customer, hyper(cfg)?, n)?
    };
    if rec.cold_start {
        eprintln!("warning: customer '{customer}' has no training purchases; using item popularity only");
    }
    let mut out = String::from("customer_id,rank,item_id,baseline_score,multiplier,final_score\n");
    for (rank, item) in rec.items.iter().enumerate() {
        out.push_str(&format!(
            "{customer},{},{},{},{},{}\n",
            rank + 1,
            item.item_id,
            item.baseline_score,
            item.adjusted_multiplier,
            item.final_score
        ));
    }
    io::stdout()
        .write_all(out.as_bytes())
        .map_err(io_err(Path::new("<stdout>")))
}

pub fn evaluate(cfg: &RunConfig) -> Result<()> {
    let session = Session::open(cfg)?;
    let recommender = session.recommender()?;
    let ctx = EvalContext::new(&recommender, &session.test, cfg.eval_options())?;
    let row = ctx.evaluate(hyper(cfg)?)?;
    let report = pricepref::SweepReport { rows: vec![row] };
    let mut out = Vec::new();
    report.write_csv(&mut out).map_err(io_err(Path::new("<stdout>")))?;
    io::stdout().write_all(&out).map_err(io_err(Path::new("<stdout>")))
}

#[derive(Serialize)]
struct SweepMetadata<'a> {
    seed: u64,
    dataset_sha256: &'a str,
    model_sha256: &'a str,
    split: SplitSpec,
    k: usize,
    pah_mode: PahMode,
    alpha: GridAxis,
    beta: GridAxis,
    n_users: usize,
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    let session = Session::open(cfg)?;
    let recommender = session.recommender()?;
    let options: EvalOptions = cfg.eval_options();
    let ctx = EvalContext::new(&recommender, &session.test, options)?;
    let (alphas, betas) = cfg.axes();
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Validation("--out is required".into()))?;

    let started = Instant::now();
    let workers = cfg
        .workers
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()));
    let report = grid_sweep(&ctx, &alphas, &betas, workers)?;
    eprintln!(
        "{} cells over {} users in {:.1}s",
        report.rows.len(),
        ctx.n_users(),
        started.elapsed().as_secs_f64()
    );

    let metadata = SweepMetadata {
        seed: session.manifest.seed,
        dataset_sha256: &session.manifest.dataset_sha256,
        model_sha256: &session.manifest.model_sha256,
        split: session.manifest.split,
        k: options.k,
        pah_mode: options.pah_mode,
        alpha: alphas,
        beta: betas,
        n_users: ctx.n_users(),
    };
    create_dir(&out)?;
    let (mut csv, mut json, mut long) = (Vec::new(), Vec::new(), Vec::new());
    let io_fail = io_err(&out);
    report
        .write_csv(&mut csv)
        .and_then(|_| report.write_json(&mut json, &metadata))
        .and_then(|_| report.write_long_csv(&mut long))
        .map_err(io_fail)?;
    write_file(&out.join("sweep.csv"), &csv)?;
    write_file(&out.join("sweep.json"), &json)?;
    write_file(&out.join("sweep_long.csv"), &long)?;
    println!("{}", out.join("sweep.csv").display());
    Ok(())
}
