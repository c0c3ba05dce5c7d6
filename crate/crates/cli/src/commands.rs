use crate::manifest::{read_manifest, Manifest};
use crate::settings::Settings;
use clap::Args;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use sttcl::io::{
    self, atomic_write, read_checkpoint, read_eegr, read_segb, write_checkpoint, write_eegr,
    write_segb, CsvMetadata, SegbDataset,
};
use sttcl::model::ModelConfig;
use sttcl::signal::{extract_features, PreprocessConfig, RawRecording};
use sttcl::synth::{generate_synthetic, SyntheticSpec};
use sttcl::curriculum::CurriculumConfig;
use sttcl::train::{train_run, TrainConfig};
use sttcl::{Error, Result};

// ── synth ────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct SynthArgs {
    /// Output directory for the generated .eegr trials.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub channels: Option<usize>,
    /// Sampling rate in Hz.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub trials_per_class: Option<usize>,
    #[arg(long)]
    pub trial_seconds: Option<f64>,
    /// Comma-separated per-trial intensities in (0,1], cycled per class.
    #[arg(long)]
    pub intensity: Option<String>,
    #[arg(long)]
    pub noise_std: Option<f32>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_intensities(raw: &str) -> Result<Vec<f32>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f32>()
                .map_err(|_| Error::Config(format!("bad intensity value \"{s}\"")))
        })
        .collect()
}

pub fn synth(args: SynthArgs, settings: &Settings) -> Result<()> {
    let defaults = SyntheticSpec::default();
    let intensity_raw = settings.resolve_opt(args.intensity, "intensity")?;
    let spec = SyntheticSpec {
        classes: settings.resolve(args.classes, "classes", defaults.classes)?,
        channels: settings.resolve(args.channels, "channels", defaults.channels)?,
        sample_rate: settings.resolve(args.rate, "rate", defaults.sample_rate)?,
        trials_per_class: settings.resolve(
            args.trials_per_class,
            "trials-per-class",
            defaults.trials_per_class,
        )?,
        trial_seconds: settings.resolve(args.trial_seconds, "trial-seconds", defaults.trial_seconds)?,
        intensities: match intensity_raw {
            Some(raw) => parse_intensities(&raw)?,
            None => defaults.intensities.clone(),
        },
        noise_std: settings.resolve(args.noise_std, "noise-std", defaults.noise_std)?,
        seed: settings.resolve(args.seed, "seed", defaults.seed)?,
    };
    spec.validate()?;
    std::fs::create_dir_all(&args.out)?;

    let mut manifest = Manifest::new("synth");
    manifest.set("seed", spec.seed);
    manifest.set("classes", spec.classes);
    manifest.set("channels", spec.channels);
    manifest.set("rate", spec.sample_rate);
    manifest.set("trials-per-class", spec.trials_per_class);
    manifest.set("trial-seconds", spec.trial_seconds);
    manifest.set(
        "intensity",
        spec.intensities.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","),
    );
    manifest.set("noise-std", spec.noise_std);
    manifest.output("dir", &args.out);
    manifest.write(&args.out.join("manifest.txt"))?;

    let recordings = generate_synthetic(&spec)?;
    for rec in &recordings {
        let path = args.out.join(format!("trial_{:03}.eegr", rec.trial_id));
        write_eegr(&path, rec)?;
    }
    println!(
        "wrote {} recordings ({} classes × {} trials) to {}",
        recordings.len(),
        spec.classes,
        spec.trials_per_class,
        args.out.display()
    );
    Ok(())
}

// ── preprocess ───────────────────────────────────────────────────────

#[derive(Args)]
pub struct PreprocessArgs {
    /// Input .eegr or .csv files, or directories containing them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output .segb dataset path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub bandpass_low: Option<f64>,
    #[arg(long)]
    pub bandpass_high: Option<f64>,
    #[arg(long)]
    pub filter_order: Option<usize>,
    /// Feature window length in seconds.
    #[arg(long)]
    pub window_seconds: Option<f64>,
    #[arg(long)]
    pub segment_seconds: Option<f64>,
    /// Welch sub-window in samples (default: half the feature window).
    #[arg(long)]
    pub welch_subwindow: Option<usize>,
    #[arg(long)]
    pub welch_overlap: Option<f64>,
    /// Class count for the output header (default: max label + 1).
    #[arg(long)]
    pub classes: Option<usize>,
}

fn collect_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(path)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| {
                    matches!(
                        p.extension().and_then(|e| e.to_str()),
                        Some("eegr") | Some("csv")
                    )
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    if files.is_empty() {
        return Err(Error::Config("no .eegr or .csv inputs found".into()));
    }
    Ok(files)
}

fn read_meta_sidecar(csv_path: &Path) -> Result<CsvMetadata> {
    let meta_path = csv_path.with_extension("meta");
    let text = std::fs::read_to_string(&meta_path).map_err(|_| {
        Error::Config(format!(
            "CSV input {} needs a sidecar {} with sample-rate, trial-id, label",
            csv_path.display(),
            meta_path.display()
        ))
    })?;
    let mut sample_rate = None;
    let mut trial_id = None;
    let mut label = None;
    let mut intensity = 1.0f32;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Format(format!("{}: expected key=value", meta_path.display())));
        };
        let (k, v) = (k.trim(), v.trim());
        let parse_err =
            || Error::Format(format!("{}: bad value for {k}", meta_path.display()));
        match k {
            "sample-rate" => sample_rate = Some(v.parse::<f64>().map_err(|_| parse_err())?),
            "trial-id" => trial_id = Some(v.parse::<u32>().map_err(|_| parse_err())?),
            "label" => label = Some(v.parse::<usize>().map_err(|_| parse_err())?),
            "intensity" => intensity = v.parse::<f32>().map_err(|_| parse_err())?,
            _ => {
                return Err(Error::Format(format!(
                    "{}: unknown key \"{k}\"",
                    meta_path.display()
                )))
            }
        }
    }
    match (sample_rate, trial_id, label) {
        (Some(sample_rate), Some(trial_id), Some(label)) => {
            Ok(CsvMetadata { sample_rate, trial_id, label, intensity })
        }
        _ => Err(Error::Config(format!(
            "{}: sample-rate, trial-id and label are all required",
            meta_path.display()
        ))),
    }
}

fn load_recording(path: &Path) -> Result<RawRecording> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("eegr") => read_eegr(path),
        Some("csv") => {
            let meta = read_meta_sidecar(path)?;
            let text = std::fs::read_to_string(path)?;
            let rec = io::parse_recording_csv(&text, &meta)
                .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
            // persist the validated internal binary form next to the CSV
            write_eegr(&path.with_extension("eegr"), &rec)?;
            Ok(rec)
        }
        _ => Err(Error::Config(format!("unsupported input {}", path.display()))),
    }
}

pub fn preprocess(args: PreprocessArgs, settings: &Settings) -> Result<()> {
    let defaults = PreprocessConfig::default();
    let cfg = PreprocessConfig {
        bandpass_low: settings.resolve(args.bandpass_low, "bandpass-low", defaults.bandpass_low)?,
        bandpass_high: settings.resolve(args.bandpass_high, "bandpass-high", defaults.bandpass_high)?,
        filter_order: settings.resolve(args.filter_order, "filter-order", defaults.filter_order)?,
        window_seconds: settings.resolve(args.window_seconds, "window-seconds", defaults.window_seconds)?,
        segment_seconds: settings.resolve(
            args.segment_seconds,
            "segment-seconds",
            defaults.segment_seconds,
        )?,
        welch_subwindow: settings.resolve_opt(args.welch_subwindow, "welch-subwindow")?,
        welch_overlap: settings.resolve(args.welch_overlap, "welch-overlap", defaults.welch_overlap)?,
        bands: defaults.bands.clone(),
    };

    let files = collect_inputs(&args.inputs)?;
    let mut manifest = Manifest::new("preprocess");
    manifest.set("bandpass-low", cfg.bandpass_low);
    manifest.set("bandpass-high", cfg.bandpass_high);
    manifest.set("filter-order", cfg.filter_order);
    manifest.set("window-seconds", cfg.window_seconds);
    manifest.set("segment-seconds", cfg.segment_seconds);
    manifest.set("welch-overlap", cfg.welch_overlap);
    for (i, f) in files.iter().enumerate() {
        manifest.input(&format!("raw{i}"), f)?;
    }
    manifest.output("segb", &args.out);
    let manifest_path = args.out.with_extension("manifest.txt");
    manifest.write(&manifest_path)?;

    let mut segments = Vec::new();
    let mut floored = 0usize;
    let mut max_label = 0usize;
    for file in &files {
        let rec = load_recording(file)?;
        max_label = max_label.max(rec.label);
        let fx = extract_features(&rec, &cfg)?;
        floored += fx.floored_bands;
        segments.extend(fx.segments);
    }
    let classes = settings.resolve(args.classes, "classes", max_label + 1)?;
    let dataset = SegbDataset::new(classes, segments)?;
    write_segb(&args.out, &dataset)?;
    if floored > 0 {
        eprintln!("warning: {floored} silent band measurements hit the variance floor");
    }
    println!(
        "wrote {} segments of {}×{}×{} ({} classes) to {}",
        dataset.segments.len(),
        dataset.windows,
        dataset.channels,
        dataset.bands,
        dataset.classes,
        args.out.display()
    );
    Ok(())
}

// ── train ────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct TrainArgs {
    /// Input .segb dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for checkpoints, logs, and the report.
    #[arg(long)]
    pub out: PathBuf,
    /// Curriculum learning: on or off.
    #[arg(long)]
    pub curriculum: Option<String>,
    /// Encoder layers in each of the two encoders.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Feature-window seconds the dataset was preprocessed with; recorded
    /// for window-size sweeps in plot-data.
    #[arg(long)]
    pub window_seconds: Option<f64>,
    /// History weight β in the difficulty metric.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Initial subset fraction α₀.
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f32>,
    /// sgd or adam.
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub spatial_dim: Option<usize>,
    #[arg(long)]
    pub temporal_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    /// Odd attention window width, in feature windows.
    #[arg(long)]
    pub attention_window: Option<usize>,
}

fn parse_switch(raw: &str) -> Result<bool> {
    match raw {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        _ => Err(Error::Config(format!("expected on|off, got \"{raw}\""))),
    }
}

fn write_train_logs(dir: &Path, fold: &sttcl::train::FoldOutcome) -> Result<()> {
    let mut csv = String::from("epoch,train_loss,train_accuracy,test_accuracy,test_macro_f1\n");
    for row in &fold.epochs {
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{:.6},{:.6}",
            row.epoch, row.train_loss, row.train_accuracy, row.test_accuracy, row.test_macro_f1
        );
    }
    atomic_write(&dir.join(format!("train_fold{}.csv", fold.split.fold_id)), csv.as_bytes())?;

    if !fold.curriculum.is_empty() {
        let mut csv = String::from(
            "epoch,mu,sigma,alpha,subset_size,mean_difficulty,median_difficulty",
        );
        for b in 0..sttcl::train::HIST_BINS {
            let _ = write!(csv, ",hist_{b}");
        }
        csv.push('\n');
        for row in &fold.curriculum {
            let _ = write!(
                csv,
                "{},{:.6},{:.6},{:.6},{},{:.6},{:.6}",
                row.epoch,
                row.mu,
                row.sigma,
                row.alpha,
                row.subset_size,
                row.mean_difficulty,
                row.median_difficulty
            );
            for count in &row.histogram {
                let _ = write!(csv, ",{count}");
            }
            csv.push('\n');
        }
        atomic_write(
            &dir.join(format!("curriculum_fold{}.csv", fold.split.fold_id)),
            csv.as_bytes(),
        )?;
    }
    Ok(())
}

pub fn train(args: TrainArgs, settings: &Settings) -> Result<()> {
    let dataset = read_segb(&args.data)?;
    let td = TrainConfig::default();
    let optimizer_raw =
        settings.resolve(args.optimizer, "optimizer", "adam".to_string())?;
    let tc = TrainConfig {
        learning_rate: settings.resolve(args.learning_rate, "learning-rate", td.learning_rate)?,
        total_epochs: settings.resolve(args.epochs, "epochs", td.total_epochs)?,
        batch_size: settings.resolve(args.batch_size, "batch-size", td.batch_size)?,
        seed: settings.resolve(args.seed, "seed", td.seed)?,
        optimizer: match optimizer_raw.as_str() {
            "sgd" => sttcl::train::OptimizerKind::Sgd,
            "adam" => sttcl::train::OptimizerKind::Adam,
            other => return Err(Error::Config(format!("unknown optimizer \"{other}\""))),
        },
        curriculum_enabled: parse_switch(&settings.resolve(
            args.curriculum,
            "curriculum",
            "on".to_string(),
        )?)?,
        folds: settings.resolve(args.folds, "folds", td.folds)?,
    };
    let cd = CurriculumConfig::default();
    let cc = CurriculumConfig {
        beta: settings.resolve(args.beta, "beta", cd.beta)?,
        alpha0: settings.resolve(args.alpha0, "alpha0", cd.alpha0)?,
        mu_quantile_start: settings.resolve(None, "mu-quantile-start", cd.mu_quantile_start)?,
        mu_quantile_end: settings.resolve(None, "mu-quantile-end", cd.mu_quantile_end)?,
        sigma_frac_start: settings.resolve(None, "sigma-frac-start", cd.sigma_frac_start)?,
        sigma_frac_end: settings.resolve(None, "sigma-frac-end", cd.sigma_frac_end)?,
        total_epochs: tc.total_epochs,
    };

    let md = ModelConfig::new(dataset.channels, dataset.windows, dataset.bands, dataset.classes);
    let heads = settings.resolve(args.heads, "heads", md.spatial_heads)?;
    let mc = ModelConfig {
        spatial_dim: settings.resolve(args.spatial_dim, "spatial-dim", md.spatial_dim)?,
        temporal_dim: settings.resolve(args.temporal_dim, "temporal-dim", md.temporal_dim)?,
        hidden_dim: settings.resolve(args.hidden_dim, "hidden-dim", md.hidden_dim)?,
        spatial_heads: heads,
        temporal_heads: heads,
        encoder_layers: settings.resolve(args.layers, "layers", md.encoder_layers)?,
        attention_window: settings.resolve(
            args.attention_window,
            "attention-window",
            md.attention_window,
        )?,
        ..md
    };
    mc.validate()?;
    tc.validate()?;
    cc.validate()?;
    let window_seconds = settings.resolve(args.window_seconds, "window-seconds", 0.5)?;

    std::fs::create_dir_all(&args.out)?;
    let mut manifest = Manifest::new("train");
    manifest.input("data", &args.data)?;
    manifest.set("seed", tc.seed);
    manifest.set("curriculum", if tc.curriculum_enabled { "on" } else { "off" });
    manifest.set("layers", mc.encoder_layers);
    manifest.set("window-seconds", window_seconds);
    manifest.set("beta", cc.beta);
    manifest.set("alpha0", cc.alpha0);
    manifest.set("epochs", tc.total_epochs);
    manifest.set("batch-size", tc.batch_size);
    manifest.set("learning-rate", tc.learning_rate);
    manifest.set("optimizer", optimizer_raw);
    manifest.set("folds", tc.folds);
    manifest.set("spatial-dim", mc.spatial_dim);
    manifest.set("temporal-dim", mc.temporal_dim);
    manifest.set("hidden-dim", mc.hidden_dim);
    manifest.set("heads", heads);
    manifest.set("attention-window", mc.attention_window);
    for fold in 0..tc.folds {
        manifest.output(
            &format!("checkpoint_fold{fold}"),
            &args.out.join(format!("model_fold{fold}.sttc")),
        );
    }
    manifest.output("report", &args.out.join("report.txt"));
    manifest.write(&args.out.join("manifest.txt"))?;

    let result = train_run(&dataset.segments, &mc, &tc, &cc)?;

    let mut report = String::new();
    let _ = writeln!(report, "folds={}", result.folds.len());
    for fold in &result.folds {
        write_train_logs(&args.out, fold)?;
        write_checkpoint(
            &args.out.join(format!("model_fold{}.sttc", fold.split.fold_id)),
            &mc,
            &fold.params,
        )?;
        let _ = writeln!(
            report,
            "fold{}.accuracy={:.6}",
            fold.split.fold_id, fold.report.accuracy
        );
        let _ = writeln!(
            report,
            "fold{}.macro_f1={:.6}",
            fold.split.fold_id, fold.report.macro_f1
        );
        if fold.starved {
            let _ = writeln!(report, "fold{}.selection_starved=true", fold.split.fold_id);
        }
    }
    let _ = writeln!(
        report,
        "accuracy={:.4}\u{00b1}{:.4}",
        result.mean_accuracy, result.std_accuracy
    );
    let _ = writeln!(
        report,
        "macro_f1={:.4}\u{00b1}{:.4}",
        result.mean_macro_f1, result.std_macro_f1
    );
    atomic_write(&args.out.join("report.txt"), report.as_bytes())?;
    print!("{report}");
    Ok(())
}

// ── evaluate ─────────────────────────────────────────────────────────

#[derive(Args)]
pub struct EvaluateArgs {
    /// Model checkpoint (.sttc).
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset (.segb).
    #[arg(long)]
    pub data: PathBuf,
    /// Optional report output path (printed to stdout regardless).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn evaluate(args: EvaluateArgs, _settings: &Settings) -> Result<()> {
    let (cfg, params) = read_checkpoint(&args.model)?;
    let dataset = read_segb(&args.data)?;
    if cfg.classes != dataset.classes {
        return Err(Error::Config(format!(
            "checkpoint expects {} classes but the dataset declares {}",
            cfg.classes, dataset.classes
        )));
    }
    if (cfg.windows, cfg.channels, cfg.bands)
        != (dataset.windows, dataset.channels, dataset.bands)
    {
        return Err(Error::Config(format!(
            "checkpoint expects {}×{}×{} segments but the dataset holds {}×{}×{}",
            cfg.windows, cfg.channels, cfg.bands, dataset.windows, dataset.channels, dataset.bands
        )));
    }
    let report = sttcl::train::evaluate(&params, &cfg, &dataset.segments)?;
    let mut text = String::new();
    let _ = writeln!(text, "segments={}", dataset.segments.len());
    let _ = writeln!(text, "accuracy={:.6}", report.accuracy);
    let _ = writeln!(text, "macro_f1={:.6}", report.macro_f1);
    for (c, f1) in report.per_class_f1.iter().enumerate() {
        let _ = writeln!(text, "class{c}.f1={f1:.6}");
    }
    for (label, row) in report.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(text, "confusion.label{label}={}", cells.join(","));
    }
    print!("{text}");
    if let Some(out) = args.out {
        atomic_write(&out, text.as_bytes())?;
    }
    Ok(())
}

// ── plot-data ────────────────────────────────────────────────────────

#[derive(Args)]
pub struct PlotDataArgs {
    /// Run directories produced by `train`.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn push_rows_from_csv(
    out: &mut String,
    run: &str,
    series: &str,
    path: &Path,
) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let Some(header) = lines.next() else {
        return Ok(());
    };
    let keys: Vec<&str> = header.split(',').collect();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != keys.len() || cells.is_empty() {
            continue;
        }
        let epoch = cells[0];
        for (key, value) in keys.iter().zip(&cells).skip(1) {
            let _ = writeln!(out, "{run},{series},{epoch},{key},{value}");
        }
    }
    Ok(())
}

pub fn plot_data(args: PlotDataArgs) -> Result<()> {
    let mut out = String::from("run,series,epoch,key,value\n");
    for run_dir in &args.runs {
        let run = run_dir
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| run_dir.display().to_string());

        let manifest_path = run_dir.join("manifest.txt");
        if manifest_path.exists() {
            for (k, v) in read_manifest(&manifest_path)? {
                if !k.starts_with("input.") && !k.starts_with("output.") {
                    let _ = writeln!(out, "{run},manifest,0,{k},{v}");
                }
            }
        }
        let report_path = run_dir.join("report.txt");
        if report_path.exists() {
            for (k, v) in read_manifest(&report_path)? {
                match v.split_once('\u{00b1}') {
                    Some((mean, std)) => {
                        let _ = writeln!(out, "{run},report,0,{k}.mean,{mean}");
                        let _ = writeln!(out, "{run},report,0,{k}.std,{std}");
                    }
                    None => {
                        let _ = writeln!(out, "{run},report,0,{k},{v}");
                    }
                }
            }
        }
        let mut entries: Vec<PathBuf> = std::fs::read_dir(run_dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .collect();
        entries.sort();
        for path in entries {
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if name.starts_with("train_fold") && name.ends_with(".csv") {
                let series = name.trim_end_matches(".csv");
                push_rows_from_csv(&mut out, &run, series, &path)?;
            } else if name.starts_with("curriculum_fold") && name.ends_with(".csv") {
                let series = name.trim_end_matches(".csv");
                push_rows_from_csv(&mut out, &run, series, &path)?;
            }
        }
    }
    match args.out {
        Some(path) => atomic_write(&path, out.as_bytes())?,
        None => print!("{out}"),
    }
    Ok(())
}

// ── inspect ──────────────────────────────────────────────────────────

#[derive(Args)]
pub struct InspectArgs {
    /// Files to inspect (.eegr, .segb, .sttc).
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

pub fn inspect(args: InspectArgs) -> Result<()> {
    for path in &args.files {
        let bytes = std::fs::read(path)?;
        let magic = bytes.get(0..4).unwrap_or_default();
        match magic {
            b"EEGR" => {
                let rec = read_eegr(path)?;
                println!(
                    "{}: EEGR v1 channels={} samples={} rate={} trial={} label={} intensity={}",
                    path.display(),
                    rec.channels,
                    rec.samples,
                    rec.sample_rate,
                    rec.trial_id,
                    rec.label,
                    rec.intensity
                );
            }
            b"SEGB" => {
                let ds = read_segb(path)?;
                println!(
                    "{}: SEGB v1 windows={} channels={} bands={} classes={} segments={}",
                    path.display(),
                    ds.windows,
                    ds.channels,
                    ds.bands,
                    ds.classes,
                    ds.segments.len()
                );
            }
            b"STTC" => {
                let (cfg, params) = read_checkpoint(path)?;
                println!(
                    "{}: STTC v1 channels={} windows={} bands={} d_c={} d_t={} d_h={} classes={} heads={}/{} layers={} attention_window={} parameters={}",
                    path.display(),
                    cfg.channels,
                    cfg.windows,
                    cfg.bands,
                    cfg.spatial_dim,
                    cfg.temporal_dim,
                    cfg.hidden_dim,
                    cfg.classes,
                    cfg.spatial_heads,
                    cfg.temporal_heads,
                    cfg.encoder_layers,
                    cfg.attention_window,
                    params.num_params()
                );
            }
            _ => {
                return Err(Error::Format(format!(
                    "{}: unrecognized magic {:?}",
                    path.display(),
                    String::from_utf8_lossy(magic)
                )))
            }
        }
    }
    Ok(())
}
