use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::json;
use warpwatch::eval::{
    detect_baseline_set, evaluate, generate_synthetic, ingest_csv, simulate_hitl, write_csv,
    EvalReport, SynthConfig,
};
use warpwatch::model::{deserialize_model_set, serialize_model_set};
use warpwatch::training::DEFAULT_GROUP;
use warpwatch::{
    rebuild_with_window, score_set, train as train_models, validate_model_visual, Band, Execution,
    ModelSet, TimeSeries, TrainConfig, TrainingSet,
};
use warpwatch_service::{AppState, ServiceConfig};

use crate::{
    Classify, DetectArgs, EvalArgs, Failure, Format, HitlArgs, ServeArgs, SynthArgs, TrainArgs,
};

fn load_series(path: &Path) -> Result<Vec<TimeSeries>, Failure> {
    ingest_csv(path).input(format!("reading dataset {}", path.display()))
}

fn load_models(path: &Path) -> Result<ModelSet, Failure> {
    let what = || format!("reading model {}", path.display());
    let text = fs::read_to_string(path).input(what())?;
    deserialize_model_set(&text).input(what())
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| {
        Failure::general(anyhow::Error::from(e).context(format!("writing {}", path.display())))
    })
}

fn band(pair: Option<(f64, f64)>) -> Result<Band, Failure> {
    match pair {
        Some((low, high)) => Band::new(low, high).input("--band"),
        None => Ok(Band::none()),
    }
}

/// `series_id,group` rows.
fn load_partition(path: &Path) -> Result<HashMap<String, String>, Failure> {
    let what = || format!("reading partition {}", path.display());
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .input(what())?;
    let mut partition = HashMap::new();
    for record in rdr.records() {
        let record = record.input(what())?;
        match (record.get(0), record.get(1)) {
            (Some(id), Some(group)) if record.len() == 2 => {
                partition.insert(id.to_string(), group.to_string());
            }
            _ => {
                let line = record.position().map_or(0, |p| p.line());
                return Err(anyhow::anyhow!("line {line}: expected series_id,group")).input(what());
            }
        }
    }
    Ok(partition)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn train(args: TrainArgs, exec: Execution) -> Result<(), Failure> {
    let series = load_series(&args.data)?;
    let mut ts = TrainingSet::new(series).input(format!("dataset {}", args.data.display()))?;
    let partition = args.partition.as_deref().map(load_partition).transpose()?;
    if let Some(p) = partition.clone() {
        ts = ts.with_partition(p).input("applying partition")?;
    }

    let mut representatives = BTreeMap::new();
    if let Some(path) = &args.representative {
        let reps = load_series(path)?;
        let single = reps.len() == 1 && partition.is_none();
        for rep in reps {
            let group = if single {
                DEFAULT_GROUP.to_string()
            } else {
                partition
                    .as_ref()
                    .and_then(|p| p.get(&rep.id).cloned())
                    .unwrap_or_else(|| rep.id.clone())
            };
            representatives.insert(group, rep);
        }
    }

    let config = TrainConfig {
        window: args.window,
        aggregator: args.aggregator,
        threshold_mode: args.threshold_mode,
        score_threshold: args.score_threshold,
        execution: exec,
    };
    let models = train_models(&ts, &representatives, &config).training()?;
    let models = ModelSet::new(models).training()?;
    write_file(&args.out, &serialize_model_set(&models))?;

    let mut out = io::stdout().lock();
    for m in models.models() {
        let (rows, cols) = m.dims();
        let mut scores = m.training_scores().to_vec();
        scores.sort_by(f64::total_cmp);
        let heat = validate_model_visual(m);
        let _ = writeln!(
            out,
            "pattern {}: {} training series, lattice {rows}x{cols}, window {}",
            m.pattern_id(),
            m.training_count(),
            m.window()
        );
        if let (Some(lo), Some(hi)) = (scores.first(), scores.last()) {
            let _ = writeln!(
                out,
                "  training scores: min {lo:.4}  median {:.4}  max {hi:.4}",
                median(&scores)
            );
        }
        let _ = writeln!(out, "  score threshold {:.4}", m.score_threshold());
        if let Some(b) = m.baseline_threshold() {
            let _ = writeln!(out, "  baseline distance threshold {b:.6}");
        }
        let _ = writeln!(
            out,
            "  path mass near the diagonal {:.4}",
            heat.diagonal_mass
        );
    }
    let _ = writeln!(out, "wrote {}", args.out.display());
    Ok(())
}

pub fn detect(args: DetectArgs, exec: Execution) -> Result<(), Failure> {
    let models = load_models(&args.model)?;
    let series = load_series(&args.data)?;
    let band = band(args.band)?;
    let outcomes = exec
        .try_map(&series, |q| score_set(q, &models, &band))
        .general()?;
    let mut out = BufWriter::new(io::stdout().lock());
    for (q, o) in series.iter().zip(outcomes) {
        let mut line = json!({
            "id": q.id,
            "score": o.score,
            "classification": o.classification,
        });
        if args.explain {
            line["pattern_id"] = json!(o.pattern_id);
            line["infeasible"] = json!(o.infeasible);
            line["per_step_flags"] = json!(o.per_step_flags);
            line["path"] = json!(o.path);
        }
        writeln!(out, "{line}").general()?;
    }
    out.flush().general()
}

fn report_row(name: &str, r: &EvalReport) -> String {
    let c = r.confusion;
    format!(
        "{name:<10} {:>6} {:>6} {:>6} {:>6} {:>8.4} {:>8.4}",
        c.tn, c.fp, c.fn_, c.tp, r.f1, r.accuracy
    )
}

fn table_header(first: &str) -> String {
    format!(
        "{first:<10} {:>6} {:>6} {:>6} {:>6} {:>8} {:>8}",
        "TN", "FP", "FN", "TP", "F1", "Acc"
    )
}

pub fn eval(args: EvalArgs, exec: Execution) -> Result<(), Failure> {
    let models = load_models(&args.model)?;
    let data = load_series(&args.data)?;
    let edtwa = |m: &ModelSet| {
        evaluate(
            |q| score_set(q, m, &Band::none()).map(|o| o.is_anomalous()),
            &data,
            exec,
        )
        .general()
    };

    if let Some((start, end, step)) = args.sweep_window {
        let mut rows = Vec::new();
        for window in (start..=end).step_by(step) {
            let rebuilt: Result<Vec<_>, _> = models
                .models()
                .iter()
                .map(|m| rebuild_with_window(m, window, exec))
                .collect();
            match rebuilt {
                Ok(ms) => rows.push((window, edtwa(&ModelSet::new(ms).general()?)?)),
                Err(e) => {
                    tracing::warn!(window, error = %e, "sweep stopped");
                    break;
                }
            }
        }
        match args.format {
            Format::Json => {
                let sweep: Vec<_> = rows
                    .iter()
                    .map(|(w, r)| {
                        let mut v = r.to_json();
                        v["window"] = json!(w);
                        v
                    })
                    .collect();
                println!("{}", json!({ "sweep": sweep }));
            }
            Format::Table => {
                println!("{}", table_header("window"));
                for (w, r) in &rows {
                    println!("{}", report_row(&w.to_string(), r));
                }
            }
        }
        return Ok(());
    }

    let report = edtwa(&models)?;
    let baseline = if args.baseline {
        Some(evaluate(|q| detect_baseline_set(q, &models), &data, exec).general()?)
    } else {
        None
    };
    match args.format {
        Format::Json => {
            let mut v = json!({ "edtwa": report.to_json() });
            if let Some(b) = &baseline {
                v["baseline"] = b.to_json();
            }
            println!("{v}");
        }
        Format::Table => {
            println!("{}", table_header("method"));
            println!("{}", report_row("E-DTWA", &report));
            if let Some(b) = &baseline {
                println!("{}", report_row("DTW_base", b));
            }
        }
    }
    Ok(())
}

pub fn synth(args: SynthArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let what = || format!("reading config {}", path.display());
            let text = fs::read_to_string(path).input(what())?;
            serde_json::from_str::<SynthConfig>(&text).input(what())?
        }
        None => SynthConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let data = generate_synthetic(&config).input("synthetic config")?;
    let what = || format!("writing {}", args.out.display());
    let file = File::create(&args.out)
        .map_err(|e| Failure::general(anyhow::Error::from(e).context(what())))?;
    write_csv(BufWriter::new(file), &data)
        .map_err(|e| Failure::general(anyhow::Error::from(e).context(what())))?;
    let anomalous = data
        .iter()
        .filter(|s| s.label == Some(warpwatch::Label::Anomalous))
        .count();
    println!(
        "wrote {} series ({anomalous} anomalous) to {}",
        data.len(),
        args.out.display()
    );
    Ok(())
}

pub fn hitl(args: HitlArgs, exec: Execution) -> Result<(), Failure> {
    let models = load_models(&args.model)?;
    let stream = load_series(&args.data)?;
    let band = band(Some(args.band))?;
    let (report, updated) = simulate_hitl(&models, &stream, band, exec).general()?;
    if let Some(path) = &args.out_model {
        write_file(path, &serialize_model_set(&updated))?;
    }
    println!("{}", serde_json::to_string(&report).general()?);
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<(), Failure> {
    let mut config = ServiceConfig::from_env()
        .map_err(anyhow::Error::msg)
        .input("service environment")?;
    if let Some(dir) = args.data_dir {
        config.data_dir = Some(dir);
    }
    if let Some(pair) = args.band {
        config.band = band(Some(pair))?;
    }
    if let Some(secs) = args.ttl_secs {
        config.ttl = Some(std::time::Duration::try_from_secs_f64(secs).input("--ttl-secs")?);
    }
    let state = AppState::new(config).input("opening data directory")?;
    if let Some(path) = &args.model {
        let models = load_models(path)?;
        state.load_model(models).general()?;
    }
    let runtime = tokio::runtime::Runtime::new().general()?;
    runtime
        .block_on(warpwatch_service::serve(state, args.port))
        .general()
}
