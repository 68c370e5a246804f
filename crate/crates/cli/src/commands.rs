//! The five subcommands. Every command loads (or generates) the dataset,
//! applies the bounds filter, writes its outputs into the configured
//! directory, and drops a provenance record beside them.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use gazegrid::data::{
    filter_out_of_bounds, load_salient_mask, load_trials, write_pgm_to_path, write_trials_to_path,
    Dataset, SalientMask, Trial,
};
use gazegrid::encoding::{write_encoded_csv, EncodingConfig};
use gazegrid::evaluation::{
    evaluate_cell, format_metric_tables, read_raw_records_csv, sweep_cells, write_aggregates_csv,
    write_raw_records_csv, CellSpec, EvalInputs, RunRecord, SweepReport,
};
use gazegrid::features::write_traditional_csv;
use gazegrid::synth::{generate_dataset, render_mask_pixels};

use crate::config::{Provenance, RunConfig};
use crate::AppError;

fn out_path(config: &RunConfig, name: &str) -> PathBuf {
    config.output_dir.join(name)
}

fn create(config: &RunConfig, name: &str) -> Result<BufWriter<File>, AppError> {
    let path = out_path(config, name);
    let file = File::create(&path)
        .map_err(|e| AppError::Config(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

/// Load the configured input files, or generate the synthetic dataset.
fn load_or_generate(config: &RunConfig) -> Result<(Dataset, SalientMask, String), AppError> {
    if let Some(input) = &config.input {
        let dataset = load_trials(&input.fixations_csv)?;
        let mask = load_salient_mask(&input.mask_pgm, config.mask_threshold)?;
        let tag = input
            .fixations_csv
            .file_stem()
            .map_or_else(|| "input".to_string(), |s| s.to_string_lossy().into_owned());
        Ok((dataset, mask, tag))
    } else {
        let synth = config.synth.as_ref().expect("validated: input xor synth");
        let (dataset, mask) = generate_dataset(synth)?;
        Ok((dataset, mask, "synthetic".to_string()))
    }
}

/// The shared preprocessing front: bounds filter (report written to the
/// output dir) and the empty-trial policy.
fn prepare(config: &RunConfig) -> Result<(Dataset, SalientMask, String), AppError> {
    let (raw, mask, tag) = load_or_generate(config)?;
    let (filtered, report) = filter_out_of_bounds(&raw);
    report.write_csv(create(config, "filter_report.csv")?)?;
    let dataset = if config.keep_empty_trials {
        filtered
    } else {
        let kept: Vec<Trial> = filtered
            .trials()
            .iter()
            .filter(|t| !t.fixations().is_empty())
            .cloned()
            .collect();
        let dropped = filtered.len() - kept.len();
        if dropped > 0 {
            eprintln!("note: dropped {dropped} trial(s) left empty by the bounds filter");
        }
        Dataset::new(kept).expect("filtering preserves unique ids")
    };
    Ok((dataset, mask, tag))
}

pub fn synth(config: &RunConfig, dry_run: bool) -> Result<(), AppError> {
    let synth = config.synth.as_ref().ok_or_else(|| {
        AppError::Config("synth subcommand needs a \"synth\" config block".into())
    })?;
    if dry_run {
        println!(
            "would generate {} trials per class on a {}x{} image (seed {})",
            synth.trials_per_class, synth.image_width, synth.image_height, synth.seed
        );
        return Ok(());
    }
    let (dataset, _mask) = generate_dataset(synth)?;
    write_trials_to_path(&dataset, out_path(config, "fixations.csv"))?;
    let pixels = render_mask_pixels(synth);
    write_pgm_to_path(
        out_path(config, "mask.pgm"),
        synth.image_width as usize,
        synth.image_height as usize,
        &pixels,
    )?;
    Provenance::for_command("synth", config).write(&out_path(config, "provenance-synth.json"))?;
    let counts = dataset.class_counts();
    println!(
        "wrote fixations.csv ({} trials: {} faculty, {} trainee) and mask.pgm",
        dataset.len(),
        counts.faculty,
        counts.trainee
    );
    Ok(())
}

pub fn encode(config: &RunConfig, dry_run: bool) -> Result<(), AppError> {
    if dry_run {
        for axis in &config.encodings {
            println!("would encode grid {0}x{0}, t={1}", axis.grid, axis.t_groups);
        }
        return Ok(());
    }
    let (dataset, _mask, _tag) = prepare(config)?;
    if dataset.is_empty() {
        eprintln!("warning: dataset has no trials; encoded matrices will be header-only");
    }
    for axis in &config.encodings {
        let cfg = EncodingConfig::square(axis.grid, axis.t_groups);
        let name = format!("encoded_g{}_t{}.csv", axis.grid, axis.t_groups);
        write_encoded_csv(&dataset, cfg, create(config, &name)?)?;
        println!(
            "wrote {name} ({} rows x {} features)",
            dataset.len(),
            cfg.len()
        );
    }
    Provenance::for_command("encode", config).write(&out_path(config, "provenance-encode.json"))?;
    Ok(())
}

pub fn features(config: &RunConfig, dry_run: bool) -> Result<(), AppError> {
    if dry_run {
        println!("would compute traditional features ({:?})", config.trad);
        return Ok(());
    }
    let (dataset, mask, _tag) = prepare(config)?;
    write_traditional_csv(
        &dataset,
        &mask,
        &config.trad.params(),
        create(config, "traditional_features.csv")?,
    )
    .map_err(|e| AppError::Data(e.to_string()))?;
    Provenance::for_command("features", config)
        .write(&out_path(config, "provenance-features.json"))?;
    println!("wrote traditional_features.csv ({} rows)", dataset.len());
    Ok(())
}

/// Cache file for one sweep cell, keyed by cell identity and config hash.
fn cache_path(dir: &Path, cell: &CellSpec, config_hash: &str) -> PathBuf {
    let short = &config_hash["sha256:".len()..][..16];
    dir.join(format!("{}-{short}.json", cell.key()))
}

pub fn sweep(config: &RunConfig, jobs: Option<usize>, dry_run: bool) -> Result<(), AppError> {
    let space = config.sweep_space()?;
    let cells = sweep_cells(&space);

    if dry_run {
        let mut seen = Vec::new();
        for cell in &cells {
            let mut key = cell.key();
            if let Some(pos) = key.rfind("_s") {
                key.truncate(pos);
            }
            if !seen.contains(&key) {
                seen.push(key);
            }
        }
        println!(
            "sweep plan: {} configurations x {} seed(s) = {} cells",
            seen.len(),
            space.seeds.len(),
            cells.len()
        );
        for key in seen {
            println!("  {key}");
        }
        return Ok(());
    }

    let (dataset, mask, tag) = prepare(config)?;
    let inputs = EvalInputs {
        acquisition: &tag,
        dataset: &dataset,
        mask: &mask,
    };
    let config_hash = config.hash();

    let cache_dir = out_path(config, "cache");
    std::fs::create_dir_all(&cache_dir)
        .map_err(|e| AppError::Config(format!("cannot create cache dir: {e}")))?;

    // Resume: load completed cells from the cache.
    let mut cached: HashMap<usize, RunRecord> = HashMap::new();
    for (i, cell) in cells.iter().enumerate() {
        let path = cache_path(&cache_dir, cell, &config_hash);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(record) = serde_json::from_str::<RunRecord>(&text) {
                cached.insert(i, record);
            }
        }
    }
    let todo: Vec<usize> = (0..cells.len())
        .filter(|i| !cached.contains_key(i))
        .collect();
    eprintln!(
        "sweep: {} cells total, {} cached, {} to evaluate",
        cells.len(),
        cached.len(),
        todo.len()
    );

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| AppError::Config(format!("cannot build worker pool: {e}")))?;
    let fresh: Vec<(usize, Result<RunRecord, AppError>)> = pool.install(|| {
        todo.par_iter()
            .map(|&i| {
                let record =
                    evaluate_cell(inputs, &cells[i], &space.settings).map_err(AppError::from);
                (i, record)
            })
            .collect()
    });

    let mut records: Vec<Option<RunRecord>> = vec![None; cells.len()];
    for (i, record) in cached {
        records[i] = Some(record);
    }
    for (i, result) in fresh {
        let record = result?;
        let path = cache_path(&cache_dir, &cells[i], &config_hash);
        let json = serde_json::to_string(&record).expect("record serializes");
        std::fs::write(&path, json)
            .map_err(|e| AppError::Config(format!("cannot write cache {}: {e}", path.display())))?;
        records[i] = Some(record);
    }
    let records: Vec<RunRecord> = records
        .into_iter()
        .map(|r| r.expect("all cells done"))
        .collect();

    let report = SweepReport::from_records(records)?;
    write_reports(config, &report)?;
    Provenance::for_command("sweep", config).write(&out_path(config, "provenance-sweep.json"))?;

    for best in &report.best_per_classifier {
        println!(
            "best {}: {} {} grid={} t={} mean AUC {:.4}",
            best.classifier,
            best.data_type,
            best.extraction,
            best.grid_size.map_or_else(|| "-".into(), |v| v.to_string()),
            best.t_groups.map_or_else(|| "-".into(), |v| v.to_string()),
            best.mean_auc
        );
    }
    Ok(())
}

pub fn report(config: &RunConfig, records: Option<&Path>) -> Result<(), AppError> {
    let default_path = out_path(config, "raw_records.csv");
    let path = records.unwrap_or(&default_path);
    let file = File::open(path)
        .map_err(|e| AppError::Data(format!("cannot open {}: {e}", path.display())))?;
    let records = read_raw_records_csv(file)?;
    let report = SweepReport::from_records(records)?;
    write_reports(config, &report)?;
    println!(
        "re-aggregated {} records from {}",
        report.records.len(),
        path.display()
    );
    Ok(())
}

fn write_reports(config: &RunConfig, report: &SweepReport) -> Result<(), AppError> {
    write_raw_records_csv(&report.records, create(config, "raw_records.csv")?)?;
    write_aggregates_csv(&report.aggregates, create(config, "aggregates.csv")?)?;
    let tables = format_metric_tables(&report.records)?;
    std::fs::write(out_path(config, "metric_tables.txt"), tables)
        .map_err(|e| AppError::Config(format!("cannot write metric tables: {e}")))?;
    let best =
        serde_json::to_string_pretty(&report.best_per_classifier).expect("selections serialize");
    std::fs::write(out_path(config, "best_per_classifier.json"), best)
        .map_err(|e| AppError::Config(format!("cannot write selections: {e}")))?;
    Ok(())
}
