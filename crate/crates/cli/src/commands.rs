use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use soforest::calibrate::calibrate_split_paths;
use soforest::data::{read_csv_table, CsvOptions};
use soforest::split::SplitSettings;
use soforest::{
    generate_trunk, load_csv, load_libsvm, load_model, save_model, train_forest, Breakeven, ColumnarDataset, Forest,
    Real, TrainConfig,
};
use soforest_bench::{
    bench_binning_comparison, bench_depth_profile, bench_mode_comparison, bench_phase_profile, BenchMode,
};

use crate::args::{
    BenchArgs, BenchKind, CalibrateArgs, DataArgs, ForestArgs, Format, GenDataArgs, PredictArgs, Precision,
    TrainArgs,
};

fn train_config(f: &ForestArgs) -> TrainConfig {
    TrainConfig {
        n_trees: f.trees,
        bin_count: f.bins,
        binning: f.binning.into(),
        split_mode: f.mode.into(),
        breakeven: f.breakeven,
        bootstrap_fraction: f.bootstrap,
        max_depth: f.max_depth,
        min_samples: f.min_samples,
        seed: f.seed,
        n_workers: f.threads,
        ..Default::default()
    }
}

fn load_dataset<T: Real>(d: &DataArgs, n_features: Option<usize>) -> Result<ColumnarDataset<T>> {
    let ds = match d.format {
        Format::Csv => load_csv(
            &d.data,
            &CsvOptions {
                has_header: !d.no_header,
                label: d.label.clone(),
            },
        ),
        Format::Libsvm => {
            let Some(n) = n_features.or(d.features) else {
                bail!("--features is required to read libsvm data");
            };
            load_libsvm(&d.data, n)
        }
    };
    ds.with_context(|| format!("cannot load {}", d.data.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn train(args: TrainArgs) -> Result<()> {
    match args.data.precision {
        Precision::F32 => train_as::<f32>(&args),
        Precision::F64 => train_as::<f64>(&args),
    }
}

fn train_as<T: Real>(args: &TrainArgs) -> Result<()> {
    let config = train_config(&args.forest);
    config.validate()?;
    let ds = load_dataset::<T>(&args.data, None)?;
    log::info!(
        "loaded {} rows, {} features, {} classes",
        ds.n_samples(),
        ds.n_features(),
        ds.class_count()
    );
    let start = Instant::now();
    let forest = train_forest(&ds, &config)?;
    let elapsed = start.elapsed();
    save_model(&forest, &args.out)?;
    let breakeven = match (config.breakeven, &forest.calibration) {
        (Breakeven::Fixed(n), _) => format!("{n} (fixed)"),
        (Breakeven::Auto, Some(_)) => format!("{} (calibrated)", forest.breakeven),
        (Breakeven::Auto, None) => format!("{} (default)", forest.breakeven),
    };
    println!(
        "trained {} trees on {} rows in {:.3}s, mode {}, breakeven {breakeven}; model written to {}",
        forest.trees.len(),
        ds.n_samples(),
        elapsed.as_secs_f64(),
        config.split_mode,
        args.out.display()
    );
    Ok(())
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let forest = load_model(&args.model)
        .with_context(|| format!("cannot load model {}", args.model.display()))?;
    match args.data.precision {
        Precision::F32 => predict_as::<f32>(&args, &forest),
        Precision::F64 => predict_as::<f64>(&args, &forest),
    }
}

fn predict_as<T: Real>(args: &PredictArgs, forest: &Forest) -> Result<()> {
    let d = &args.data;
    let (columns, labels): (Vec<Vec<T>>, Option<Vec<String>>) = match d.format {
        Format::Csv => {
            let label = (!args.unlabeled).then_some(&d.label);
            let t = read_csv_table::<T>(&d.data, !d.no_header, label)
                .with_context(|| format!("cannot load {}", d.data.display()))?;
            (t.columns, t.labels)
        }
        Format::Libsvm => {
            let ds = load_dataset::<T>(d, Some(forest.n_features))?;
            let names: Vec<String> = ds
                .labels()
                .iter()
                .map(|&l| ds.label_names()[l as usize].clone())
                .collect();
            (ds.columns().to_vec(), Some(names))
        }
    };
    let predictions = forest.predict_columns(&columns)?;

    let mut out = output(args.out.as_deref())?;
    let mut header = vec!["prediction".to_string()];
    if args.votes {
        header.extend(forest.label_names.iter().map(|n| format!("votes_{n}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for p in &predictions {
        write!(out, "{}", forest.label_names[p.class as usize])?;
        if args.votes {
            for v in &p.votes {
                write!(out, ",{v}")?;
            }
        }
        writeln!(out)?;
    }
    out.flush()?;

    if let Some(labels) = labels {
        let hits = predictions
            .iter()
            .zip(&labels)
            .filter(|(p, l)| forest.label_names[p.class as usize] == **l)
            .count();
        eprintln!(
            "accuracy {:.4} ({hits}/{} correct)",
            hits as f64 / labels.len().max(1) as f64,
            labels.len()
        );
    }
    Ok(())
}

pub fn calibrate(args: CalibrateArgs) -> Result<()> {
    let settings = SplitSettings {
        bin_count: args.bins,
        binning: args.binning.into(),
    };
    let budget = Duration::from_millis(args.budget_ms);
    let result = match args.precision {
        Precision::F32 => calibrate_split_paths::<f32>(settings, args.n_min, args.n_max, budget),
        Precision::F64 => calibrate_split_paths::<f64>(settings, args.n_min, args.n_max, budget),
    }?;
    if let Some(p) = &args.samples_out {
        std::fs::write(p, result.samples_csv()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    let status = if result.is_measured_crossing() {
        format!("histograms win from n = {}", result.breakeven_n + result.probe_step)
    } else if result.breakeven_n <= args.n_min {
        "histograms won at every probed size".to_string()
    } else {
        "histograms never won".to_string()
    };
    println!(
        "breakeven {} ({status}; {} probes)",
        result.breakeven_n,
        result.samples.len()
    );
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let config = train_config(&args.forest);
    config.validate()?;
    let ds: ColumnarDataset = match &args.data {
        Some(p) => load_csv(p, &CsvOptions::default()).with_context(|| format!("cannot load {}", p.display()))?,
        None => generate_trunk(args.samples, args.features, args.forest.seed)?,
    };
    eprintln!(
        "benchmarking on {} rows x {} features, {} trees, {} worker(s)",
        ds.n_samples(),
        ds.n_features(),
        config.n_trees,
        config.worker_count()
    );
    let mut out = output(args.out.as_deref())?;
    match args.kind {
        BenchKind::Depth => {
            let p = bench_depth_profile(&ds, &config)?;
            write!(out, "{}", p.to_csv())?;
            eprintln!("breakeven {}", p.breakeven);
        }
        BenchKind::Phase => {
            write!(out, "{}", bench_phase_profile(&ds, &config)?.to_csv())?;
        }
        BenchKind::Binning => {
            let (scalar, two_level) = bench_binning_comparison(&ds, &config)?;
            writeln!(out, "binning,phase,depth_bucket,seconds")?;
            for p in [&scalar, &two_level] {
                for line in p.to_csv().lines().skip(1) {
                    writeln!(out, "{:?},{line}", p.binning)?;
                }
            }
            let fill = |p: &soforest_bench::PhaseProfile| {
                p.phases.total_of(soforest::profile::Phase::BuildHistogram).as_secs_f64()
            };
            eprintln!(
                "build_histogram: scalar {:.3}s, two-level {:.3}s ({:.2}x)",
                fill(&scalar),
                fill(&two_level),
                fill(&scalar) / fill(&two_level)
            );
            if !two_level.large_nodes.depths.is_empty() {
                let (s, t) = (
                    scalar.large_nodes.build_histogram.as_secs_f64(),
                    two_level.large_nodes.build_histogram.as_secs_f64(),
                );
                eprintln!(
                    "build_histogram at depths {:?}: scalar {s:.3}s, two-level {t:.3}s ({:.2}x)",
                    two_level.large_nodes.depths,
                    s / t
                );
            }
        }
        BenchKind::Modes => {
            let c = bench_mode_comparison(&ds, &config, &BenchMode::ALL)?;
            write!(out, "{}", c.to_csv())?;
            eprintln!("breakeven {}", c.breakeven);
        }
    }
    out.flush()?;
    Ok(())
}

pub fn gen_data(args: GenDataArgs) -> Result<()> {
    let ds: ColumnarDataset = generate_trunk(args.samples, args.features, args.seed)?;
    ds.write_csv(&args.out)?;
    println!(
        "wrote {} rows x {} features to {}",
        ds.n_samples(),
        ds.n_features(),
        args.out.display()
    );
    Ok(())
}
