//! The full-factorial sweep over encodings, reductions, and classifiers,
//! plus report assembly: raw-record CSV, aggregate tables, and the
//! best-configuration selection per classifier.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierFamily, ClassifierSpec};
use crate::data::DataError;
use crate::dimred::ReductionSpec;
use crate::encoding::EncodingConfig;
use crate::evaluation::{
    aggregate, evaluate_config, AggregateRow, DataType, EvalError, EvalInputs, EvalSettings,
    FeatureSpace, GroupKey, MetricSet, RunRecord,
};

/// Axes of the factorial sweep. The encoded data type is crossed with every
/// `(grid, t)` pair; the traditional data type ignores those two axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpace {
    pub grid_sizes: Vec<usize>,
    pub t_groups: Vec<usize>,
    pub extractions: Vec<ReductionSpec>,
    pub classifiers: Vec<ClassifierSpec>,
    pub data_types: Vec<DataType>,
    pub seeds: Vec<u64>,
    pub settings: EvalSettings,
}

impl SweepSpace {
    /// The protocol's factorial axes: square grids {5, 7, 10, 15}, temporal
    /// groups {3, 5, 10, 20}, nine extraction modes, all four classifier
    /// families with their default grids, both data types.
    pub fn protocol_defaults(seeds: Vec<u64>) -> SweepSpace {
        SweepSpace {
            grid_sizes: vec![5, 7, 10, 15],
            t_groups: vec![3, 5, 10, 20],
            extractions: default_extractions(),
            classifiers: vec![
                ClassifierSpec::default_grid(ClassifierFamily::Knn),
                ClassifierSpec::default_grid(ClassifierFamily::LogReg),
                ClassifierSpec::default_grid(ClassifierFamily::Gp),
                ClassifierSpec::default_grid(ClassifierFamily::GBoost),
            ],
            data_types: vec![DataType::Encoded, DataType::Traditional],
            seeds,
            settings: EvalSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let nonempty = !self.grid_sizes.is_empty()
            && !self.t_groups.is_empty()
            && !self.extractions.is_empty()
            && !self.classifiers.is_empty()
            && !self.data_types.is_empty()
            && !self.seeds.is_empty();
        if !nonempty {
            return Err(EvalError::InvalidSettings(
                "sweep space has an empty axis".into(),
            ));
        }
        Ok(())
    }
}

/// The nine extraction modes of the protocol.
pub fn default_extractions() -> Vec<ReductionSpec> {
    [
        "none", "pca-2", "pca-50%", "pca-90%", "pca-99%", "kpca-2", "kpca-50%", "kpca-90%",
        "kpca-99%",
    ]
    .iter()
    .map(|s| ReductionSpec::parse_label(s).unwrap())
    .collect()
}

/// One evaluation cell of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub feature: FeatureSpace,
    pub extraction: ReductionSpec,
    pub classifier: ClassifierSpec,
    pub seed: u64,
}

impl CellSpec {
    /// Stable identity string (used for cache file names and dry-run output).
    pub fn key(&self) -> String {
        let (grid, t) = match self.feature {
            FeatureSpace::Encoded(cfg) => (cfg.x_div.to_string(), cfg.t_groups.to_string()),
            FeatureSpace::Traditional => ("-".into(), "-".into()),
        };
        format!(
            "{}_g{}_t{}_{}_{}_s{}",
            self.feature.data_type(),
            grid,
            t,
            self.extraction.label(),
            self.classifier.family,
            self.seed
        )
    }
}

/// Enumerate every cell in canonical order: data type, then grid, then
/// temporal groups (encoded only), then extraction, then classifier, then
/// seed. This order also defines tie-breaking for best-configuration
/// selection.
pub fn sweep_cells(space: &SweepSpace) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for &data_type in &space.data_types {
        let features: Vec<FeatureSpace> = match data_type {
            DataType::Encoded => {
                let mut v = Vec::new();
                for &g in &space.grid_sizes {
                    for &t in &space.t_groups {
                        v.push(FeatureSpace::Encoded(EncodingConfig::square(g, t)));
                    }
                }
                v
            }
            DataType::Traditional => vec![FeatureSpace::Traditional],
        };
        for feature in features {
            for &extraction in &space.extractions {
                for classifier in &space.classifiers {
                    for &seed in &space.seeds {
                        cells.push(CellSpec {
                            feature,
                            extraction,
                            classifier: classifier.clone(),
                            seed,
                        });
                    }
                }
            }
        }
    }
    cells
}

/// Evaluate one cell (the sweep's unit of work).
pub fn evaluate_cell(
    inputs: EvalInputs<'_>,
    cell: &CellSpec,
    settings: &EvalSettings,
) -> Result<RunRecord, EvalError> {
    evaluate_config(
        inputs,
        cell.feature,
        cell.extraction,
        &cell.classifier,
        settings,
        cell.seed,
    )
}

/// The best configuration of one classifier family by mean AUC pooled over
/// seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSelection {
    pub classifier: ClassifierFamily,
    pub data_type: DataType,
    pub grid_size: Option<usize>,
    pub t_groups: Option<usize>,
    pub extraction: String,
    pub mean_auc: f64,
}

/// All records of a sweep plus the derived selections and the standing
/// aggregate keyed by (classifier, data type, extraction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub records: Vec<RunRecord>,
    pub best_per_classifier: Vec<BestSelection>,
    pub aggregates: Vec<AggregateRow>,
}

impl SweepReport {
    /// Assemble the report from raw records (kept in their given order).
    pub fn from_records(records: Vec<RunRecord>) -> Result<SweepReport, EvalError> {
        if records.is_empty() {
            return Err(EvalError::EmptyGroup);
        }
        let best_per_classifier = best_per_classifier(&records);
        let aggregates = aggregate(
            &records,
            &[
                GroupKey::Classifier,
                GroupKey::DataType,
                GroupKey::Extraction,
            ],
        )?;
        Ok(SweepReport {
            records,
            best_per_classifier,
            aggregates,
        })
    }
}

/// Pool records by configuration (in record order) and pick, per classifier,
/// the configuration with the highest mean AUC over its pooled fold values.
/// Ties keep the earliest configuration in record order.
fn best_per_classifier(records: &[RunRecord]) -> Vec<BestSelection> {
    let mut families: Vec<ClassifierFamily> = Vec::new();
    for r in records {
        if !families.contains(&r.classifier) {
            families.push(r.classifier);
        }
    }

    let mut out = Vec::new();
    for family in families {
        let mut config_order: Vec<String> = Vec::new();
        let mut pooled: std::collections::HashMap<String, (Vec<f64>, &RunRecord)> =
            std::collections::HashMap::new();
        for r in records.iter().filter(|r| r.classifier == family) {
            let key = r.config_key();
            let entry = pooled.entry(key.clone()).or_insert_with(|| {
                config_order.push(key);
                (Vec::new(), r)
            });
            entry.0.extend(r.fold_metrics.iter().map(|m| m.auc));
        }
        let mut best: Option<(f64, &RunRecord)> = None;
        for key in &config_order {
            let (aucs, rep) = &pooled[key];
            let mean = super::mean_of(aucs);
            if best.is_none_or(|(b, _)| mean > b) {
                best = Some((mean, rep));
            }
        }
        let (mean_auc, rep) = best.expect("family has records");
        out.push(BestSelection {
            classifier: family,
            data_type: rep.data_type,
            grid_size: rep.grid_size,
            t_groups: rep.t_groups,
            extraction: rep.extraction.clone(),
            mean_auc,
        });
    }
    out
}

/// Serial sweep driver: evaluates every cell in canonical order. Callers
/// that parallelize (the CLI) use [`sweep_cells`] + [`evaluate_cell`] and
/// assemble with [`SweepReport::from_records`]; results are identical
/// because each cell is a pure function of `(inputs, cell, settings)`.
pub fn run_sweep(inputs: EvalInputs<'_>, space: &SweepSpace) -> Result<SweepReport, EvalError> {
    space.validate()?;
    let cells = sweep_cells(space);
    let mut records = Vec::with_capacity(cells.len());
    for cell in &cells {
        records.push(evaluate_cell(inputs, cell, &space.settings)?);
    }
    SweepReport::from_records(records)
}

const RAW_HEADER: [&str; 13] = [
    "acquisition",
    "data_type",
    "classifier",
    "extraction",
    "grid_size",
    "t_groups",
    "seed",
    "fold",
    "auc",
    "f1",
    "accuracy",
    "sensitivity",
    "specificity",
];

/// Write the raw records as CSV, one row per (configuration, fold).
pub fn write_raw_records_csv<W: Write>(records: &[RunRecord], w: W) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(RAW_HEADER)?;
    for r in records {
        for (fold, m) in r.fold_metrics.iter().enumerate() {
            wtr.write_record([
                r.acquisition.clone(),
                r.data_type.to_string(),
                r.classifier.to_string(),
                r.extraction.clone(),
                r.grid_size.map_or_else(String::new, |v| v.to_string()),
                r.t_groups.map_or_else(String::new, |v| v.to_string()),
                r.seed.to_string(),
                fold.to_string(),
                m.auc.to_string(),
                m.f1.to_string(),
                m.accuracy.to_string(),
                m.sensitivity.to_string(),
                m.specificity.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Read a raw-record CSV back into records (inverse of
/// [`write_raw_records_csv`]); consecutive rows of one configuration+seed
/// are reassembled into a single record.
pub fn read_raw_records_csv<R: Read>(r: R) -> Result<Vec<RunRecord>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let malformed = |line: u64, reason: &str| DataError::MalformedRow {
        line,
        reason: reason.to_string(),
    };

    struct Pending {
        key: (
            String,
            DataType,
            ClassifierFamily,
            String,
            Option<usize>,
            Option<usize>,
            u64,
        ),
        folds: Vec<MetricSet>,
    }
    let mut out: Vec<RunRecord> = Vec::new();
    let mut pending: Option<Pending> = None;
    let flush = |p: Option<Pending>, out: &mut Vec<RunRecord>| {
        if let Some(p) = p {
            let (acq, dt, fam, ext, grid, t, seed) = p.key;
            out.push(RunRecord::from_folds(
                acq, fam, dt, ext, grid, t, seed, p.folds,
            ));
        }
    };

    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != RAW_HEADER.len() {
            return Err(malformed(line, "wrong column count"));
        }
        let get = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64, DataError> {
            get(i)
                .parse()
                .map_err(|_| malformed(line, &format!("bad number in {}", RAW_HEADER[i])))
        };
        let opt_usize = |i: usize| -> Result<Option<usize>, DataError> {
            let s = get(i);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| malformed(line, "bad integer"))
            }
        };
        let key = (
            get(0).to_string(),
            DataType::parse(get(1)).ok_or_else(|| malformed(line, "bad data_type"))?,
            ClassifierFamily::parse(get(2)).ok_or_else(|| malformed(line, "bad classifier"))?,
            get(3).to_string(),
            opt_usize(4)?,
            opt_usize(5)?,
            get(6)
                .parse::<u64>()
                .map_err(|_| malformed(line, "bad seed"))?,
        );
        let metrics = MetricSet {
            auc: num(8)?,
            f1: num(9)?,
            accuracy: num(10)?,
            sensitivity: num(11)?,
            specificity: num(12)?,
        };
        match &mut pending {
            Some(p) if p.key == key => p.folds.push(metrics),
            _ => {
                flush(pending.take(), &mut out);
                pending = Some(Pending {
                    key,
                    folds: vec![metrics],
                });
            }
        }
    }
    flush(pending, &mut out);
    Ok(out)
}

/// Write aggregate rows as CSV. Metric columns carry explicit `_mean` /
/// `_variance` suffixes.
pub fn write_aggregates_csv<W: Write>(rows: &[AggregateRow], w: W) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = rows
        .first()
        .map(|r| r.keys.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    header.push("n_fold_values".into());
    for m in super::metrics::METRIC_NAMES {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_variance"));
    }
    wtr.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<String> = row.keys.iter().map(|(_, v)| v.clone()).collect();
        rec.push(row.n_fold_values.to_string());
        for m in super::metrics::METRIC_NAMES {
            rec.push(row.mean.get(m).unwrap().to_string());
            rec.push(row.variance.get(m).unwrap().to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Render one text table per metric, rows = (classifier, data type) and
/// columns = extraction modes, cells formatted `mean (± variance)`.
pub fn format_metric_tables(records: &[RunRecord]) -> Result<String, EvalError> {
    let rows = aggregate(
        records,
        &[
            GroupKey::Classifier,
            GroupKey::DataType,
            GroupKey::Extraction,
        ],
    )?;
    let mut classifiers: Vec<String> = Vec::new();
    let mut extractions: Vec<String> = Vec::new();
    let mut data_types: Vec<String> = Vec::new();
    for r in &rows {
        let c = &r.keys[0].1;
        let d = &r.keys[1].1;
        let e = &r.keys[2].1;
        if !classifiers.contains(c) {
            classifiers.push(c.clone());
        }
        if !data_types.contains(d) {
            data_types.push(d.clone());
        }
        if !extractions.contains(e) {
            extractions.push(e.clone());
        }
    }
    let lookup = |c: &str, d: &str, e: &str| -> Option<&AggregateRow> {
        rows.iter()
            .find(|r| r.keys[0].1 == c && r.keys[1].1 == d && r.keys[2].1 == e)
    };

    let acquisition = records
        .first()
        .map(|r| r.acquisition.clone())
        .unwrap_or_default();
    let mut out = String::new();
    out.push_str("cells are mean (± population variance) over fold-level values\n\n");
    let cell_width = 18;
    for metric in super::metrics::METRIC_NAMES {
        out.push_str(&format!(
            "Metric: {} (dataset {})\n",
            metric.to_uppercase(),
            acquisition
        ));
        out.push_str(&format!("{:<12}{:<14}", "classifier", "data_type"));
        for e in &extractions {
            out.push_str(&format!("{e:<cell_width$}"));
        }
        out.push('\n');
        for c in &classifiers {
            for d in &data_types {
                out.push_str(&format!("{c:<12}{d:<14}"));
                for e in &extractions {
                    let cell = match lookup(c, d, e) {
                        Some(row) => format!(
                            "{:.3} (± {:.3})",
                            row.mean.get(metric).unwrap(),
                            row.variance.get(metric).unwrap()
                        ),
                        None => "-".to_string(),
                    };
                    out.push_str(&format!("{cell:<cell_width$}"));
                }
                out.push('\n');
            }
        }
        out.push('\n');
    }
    Ok(out)
}
