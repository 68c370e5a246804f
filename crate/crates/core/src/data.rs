//! Fixation data model, CSV ingestion, bounds filtering, and salient-region
//! masks from PGM stimulus images.
//!
//! The on-disk fixation format is a headered CSV, one row per fixation:
//!
//! ```text
//! trial_id,subject_id,label,image_id,rect_x0,rect_y0,rect_w,rect_h,onset_ms,duration_ms,x_px,y_px
//! ```
//!
//! `label` is `faculty` or `trainee`; the `rect_*` columns describe the
//! display rectangle and must repeat identically on every row of a trial.
//! Coordinates are absolute screen pixels; downstream geometry normalizes
//! against the display rectangle.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

/// Expertise class of a trial's reader. `Trainee` is the positive class
/// throughout the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Faculty,
    Trainee,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Faculty => "faculty",
            Label::Trainee => "trainee",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "faculty" => Some(Label::Faculty),
            "trainee" => Some(Label::Trainee),
            _ => None,
        }
    }

    /// The other class.
    pub fn flipped(self) -> Label {
        match self {
            Label::Faculty => Label::Trainee,
            Label::Trainee => Label::Faculty,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One fixation: position in screen pixels, onset and duration in
/// milliseconds since trial start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixationRecord {
    pub x_px: f64,
    pub y_px: f64,
    pub onset_ms: f64,
    pub duration_ms: f64,
}

/// Axis-aligned display rectangle in screen pixels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    /// Closed-rectangle containment: points exactly on the border count as
    /// inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x0 + self.width && y >= self.y0 && y <= self.y0 + self.height
    }
}

/// One reader's ordered fixation sequence over one stimulus image.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    trial_id: String,
    subject_id: String,
    label: Label,
    image_id: String,
    display_rect: Rect,
    fixations: Vec<FixationRecord>,
}

impl Trial {
    /// Validates the trial invariants: positive display rectangle, finite
    /// fields, positive durations, and strictly increasing onsets.
    pub fn new(
        trial_id: String,
        subject_id: String,
        label: Label,
        image_id: String,
        display_rect: Rect,
        fixations: Vec<FixationRecord>,
    ) -> Result<Trial, DataError> {
        if !(display_rect.width > 0.0 && display_rect.height > 0.0)
            || !display_rect.x0.is_finite()
            || !display_rect.y0.is_finite()
            || !display_rect.width.is_finite()
            || !display_rect.height.is_finite()
        {
            return Err(DataError::InvalidTrial {
                trial_id,
                reason: "display rectangle must be finite with positive width and height".into(),
            });
        }
        for f in &fixations {
            if !(f.x_px.is_finite()
                && f.y_px.is_finite()
                && f.onset_ms.is_finite()
                && f.duration_ms.is_finite())
            {
                return Err(DataError::InvalidTrial {
                    trial_id,
                    reason: "fixation fields must be finite".into(),
                });
            }
            if f.onset_ms < 0.0 {
                return Err(DataError::InvalidTrial {
                    trial_id,
                    reason: "onset_ms must be >= 0".into(),
                });
            }
            if !(f.duration_ms > 0.0) {
                return Err(DataError::InvalidTrial {
                    trial_id,
                    reason: "duration_ms must be > 0".into(),
                });
            }
        }
        for pair in fixations.windows(2) {
            if pair[1].onset_ms == pair[0].onset_ms {
                return Err(DataError::DuplicateOnset {
                    trial_id,
                    onset_ms: pair[0].onset_ms,
                });
            }
            if pair[1].onset_ms < pair[0].onset_ms {
                return Err(DataError::InvalidTrial {
                    trial_id,
                    reason: "fixations must be sorted by onset_ms".into(),
                });
            }
        }
        Ok(Trial {
            trial_id,
            subject_id,
            label,
            image_id,
            display_rect,
            fixations,
        })
    }

    pub fn trial_id(&self) -> &str {
        &self.trial_id
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn display_rect(&self) -> Rect {
        self.display_rect
    }

    pub fn fixations(&self) -> &[FixationRecord] {
        &self.fixations
    }
}

/// Per-class trial counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub faculty: usize,
    pub trainee: usize,
}

impl ClassCounts {
    pub fn of(&self, label: Label) -> usize {
        match label {
            Label::Faculty => self.faculty,
            Label::Trainee => self.trainee,
        }
    }
}

/// An ordered collection of trials with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    trials: Vec<Trial>,
}

impl Dataset {
    pub fn new(trials: Vec<Trial>) -> Result<Dataset, DataError> {
        let mut seen = HashMap::new();
        for t in &trials {
            if seen.insert(t.trial_id.clone(), ()).is_some() {
                return Err(DataError::DuplicateTrialId(t.trial_id.clone()));
            }
        }
        Ok(Dataset { trials })
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.trials.iter().map(|t| t.label).collect()
    }

    pub fn class_counts(&self) -> ClassCounts {
        let mut c = ClassCounts::default();
        for t in &self.trials {
            match t.label {
                Label::Faculty => c.faculty += 1,
                Label::Trainee => c.trainee += 1,
            }
        }
        c
    }
}

/// Boolean salient-region mask derived from a grayscale stimulus image.
#[derive(Debug, Clone, PartialEq)]
pub struct SalientMask {
    width: usize,
    height: usize,
    mask: Vec<bool>,
    salient_count: usize,
}

impl SalientMask {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> SalientMask {
        assert_eq!(mask.len(), width * height, "mask length mismatch");
        let salient_count = mask.iter().filter(|&&b| b).count();
        SalientMask {
            width,
            height,
            mask,
            salient_count,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn salient_count(&self) -> usize {
        self.salient_count
    }

    /// Salience of pixel (column `x`, row `y`).
    #[inline]
    pub fn salient(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }
}

/// Per-trial removal counts from [`filter_out_of_bounds`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterReport {
    pub entries: Vec<FilterEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterEntry {
    pub trial_id: String,
    pub removed_count: usize,
    pub kept_count: usize,
}

impl FilterReport {
    pub fn total_removed(&self) -> usize {
        self.entries.iter().map(|e| e.removed_count).sum()
    }

    /// CSV with columns `trial_id,removed_count,kept_count`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DataError> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["trial_id", "removed_count", "kept_count"])?;
        for e in &self.entries {
            wtr.write_record([
                e.trial_id.as_str(),
                &e.removed_count.to_string(),
                &e.kept_count.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("trial {trial_id}: two fixations share onset {onset_ms} ms")]
    DuplicateOnset { trial_id: String, onset_ms: f64 },
    #[error("line {line}: unknown label {label:?} (expected \"faculty\" or \"trainee\")")]
    UnknownLabel { line: u64, label: String },
    #[error("duplicate trial id {0:?}")]
    DuplicateTrialId(String),
    #[error("trial {trial_id}: {reason}")]
    InvalidTrial { trial_id: String, reason: String },
    #[error("not a binary PGM (P5): {0}")]
    NotPgm(String),
    #[error("unsupported PGM maxval {0} (only 255 supported)")]
    UnsupportedMaxval(u32),
    #[error("mask has no salient pixels at this threshold")]
    AllBackground,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const CSV_HEADER: [&str; 12] = [
    "trial_id",
    "subject_id",
    "label",
    "image_id",
    "rect_x0",
    "rect_y0",
    "rect_w",
    "rect_h",
    "onset_ms",
    "duration_ms",
    "x_px",
    "y_px",
];

/// Load a fixation CSV from disk. See the module docs for the schema.
pub fn load_trials<P: AsRef<Path>>(path: P) -> Result<Dataset, DataError> {
    load_trials_from_reader(BufReader::new(File::open(path)?))
}

/// Load a fixation CSV from any reader.
///
/// Rows are grouped by `trial_id` in order of first appearance and sorted
/// stably by onset within each trial. Exactly-equal onsets within a trial
/// are rejected rather than silently reordered.
pub fn load_trials_from_reader<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    {
        let headers = rdr.headers()?;
        if headers.len() != CSV_HEADER.len()
            || headers
                .iter()
                .zip(CSV_HEADER)
                .any(|(got, want)| got != want)
        {
            return Err(DataError::MalformedRow {
                line: 1,
                reason: format!("bad header, expected {}", CSV_HEADER.join(",")),
            });
        }
    }

    struct PendingTrial {
        subject_id: String,
        label: Label,
        image_id: String,
        rect: Rect,
        fixations: Vec<FixationRecord>,
    }

    let mut order: Vec<String> = Vec::new();
    let mut pending: HashMap<String, PendingTrial> = HashMap::new();

    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != CSV_HEADER.len() {
            return Err(DataError::MalformedRow {
                line,
                reason: format!(
                    "expected {} columns, found {}",
                    CSV_HEADER.len(),
                    record.len()
                ),
            });
        }
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64, DataError> {
            let raw = field(i);
            let v: f64 = raw.trim().parse().map_err(|_| DataError::MalformedRow {
                line,
                reason: format!(
                    "column {:?}: cannot parse {:?} as a number",
                    CSV_HEADER[i], raw
                ),
            })?;
            if !v.is_finite() {
                return Err(DataError::MalformedRow {
                    line,
                    reason: format!("column {:?}: value {:?} is not finite", CSV_HEADER[i], raw),
                });
            }
            Ok(v)
        };

        let trial_id = field(0).to_string();
        let subject_id = field(1).to_string();
        let label = Label::parse(field(2)).ok_or_else(|| DataError::UnknownLabel {
            line,
            label: field(2).to_string(),
        })?;
        let image_id = field(3).to_string();
        let rect = Rect {
            x0: num(4)?,
            y0: num(5)?,
            width: num(6)?,
            height: num(7)?,
        };
        if !(rect.width > 0.0 && rect.height > 0.0) {
            return Err(DataError::MalformedRow {
                line,
                reason: "display rectangle must have positive width and height".into(),
            });
        }
        let fix = FixationRecord {
            onset_ms: num(8)?,
            duration_ms: num(9)?,
            x_px: num(10)?,
            y_px: num(11)?,
        };
        if fix.onset_ms < 0.0 {
            return Err(DataError::MalformedRow {
                line,
                reason: "onset_ms must be >= 0".into(),
            });
        }
        if !(fix.duration_ms > 0.0) {
            return Err(DataError::MalformedRow {
                line,
                reason: "duration_ms must be > 0".into(),
            });
        }

        match pending.get_mut(&trial_id) {
            Some(t) => {
                if t.subject_id != subject_id
                    || t.label != label
                    || t.image_id != image_id
                    || t.rect != rect
                {
                    return Err(DataError::MalformedRow {
                        line,
                        reason: format!(
                            "trial {trial_id:?}: subject/label/image/rect columns differ from an earlier row of the same trial"
                        ),
                    });
                }
                t.fixations.push(fix);
            }
            None => {
                order.push(trial_id.clone());
                pending.insert(
                    trial_id,
                    PendingTrial {
                        subject_id,
                        label,
                        image_id,
                        rect,
                        fixations: vec![fix],
                    },
                );
            }
        }
    }

    let mut trials = Vec::with_capacity(order.len());
    for id in order {
        let mut t = pending.remove(&id).expect("pending trial");
        t.fixations
            .sort_by(|a, b| a.onset_ms.partial_cmp(&b.onset_ms).unwrap());
        trials.push(Trial::new(
            id,
            t.subject_id,
            t.label,
            t.image_id,
            t.rect,
            t.fixations,
        )?);
    }
    Dataset::new(trials)
}

/// Write a dataset back to the fixation CSV schema. Trials with no
/// fixations produce no rows (the schema is one row per fixation).
pub fn write_trials<W: Write>(dataset: &Dataset, w: W) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for t in dataset.trials() {
        let r = t.display_rect();
        for f in t.fixations() {
            wtr.write_record([
                t.trial_id(),
                t.subject_id(),
                t.label().as_str(),
                t.image_id(),
                &r.x0.to_string(),
                &r.y0.to_string(),
                &r.width.to_string(),
                &r.height.to_string(),
                &f.onset_ms.to_string(),
                &f.duration_ms.to_string(),
                &f.x_px.to_string(),
                &f.y_px.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_trials_to_path<P: AsRef<Path>>(dataset: &Dataset, path: P) -> Result<(), DataError> {
    write_trials(dataset, BufWriter::new(File::create(path)?))
}

/// Drop fixations falling outside each trial's display rectangle.
///
/// Trials left with zero fixations are retained; the encoder maps them to
/// the all-zero vector. Idempotent by construction.
pub fn filter_out_of_bounds(dataset: &Dataset) -> (Dataset, FilterReport) {
    let mut trials = Vec::with_capacity(dataset.len());
    let mut entries = Vec::with_capacity(dataset.len());
    for t in dataset.trials() {
        let rect = t.display_rect();
        let kept: Vec<FixationRecord> = t
            .fixations()
            .iter()
            .copied()
            .filter(|f| rect.contains(f.x_px, f.y_px))
            .collect();
        entries.push(FilterEntry {
            trial_id: t.trial_id().to_string(),
            removed_count: t.fixations().len() - kept.len(),
            kept_count: kept.len(),
        });
        trials.push(
            Trial::new(
                t.trial_id().to_string(),
                t.subject_id().to_string(),
                t.label(),
                t.image_id().to_string(),
                rect,
                kept,
            )
            .expect("filtering preserves trial invariants"),
        );
    }
    let filtered = Dataset::new(trials).expect("filtering preserves unique ids");
    (filtered, FilterReport { entries })
}

/// Load an 8-bit binary PGM (P5, maxval 255) and threshold it into a
/// salient mask: a pixel is salient when its intensity is strictly greater
/// than `threshold`.
pub fn load_salient_mask<P: AsRef<Path>>(path: P, threshold: u8) -> Result<SalientMask, DataError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    salient_mask_from_bytes(&bytes, threshold)
}

/// [`load_salient_mask`] over an in-memory PGM image.
pub fn salient_mask_from_bytes(bytes: &[u8], threshold: u8) -> Result<SalientMask, DataError> {
    let (width, height, pixels) = parse_pgm(bytes)?;
    let mask: Vec<bool> = pixels.iter().map(|&p| p > threshold).collect();
    let m = SalientMask::new(width, height, mask);
    if m.salient_count() == 0 {
        return Err(DataError::AllBackground);
    }
    Ok(m)
}

/// Parse a binary PGM (P5), returning `(width, height, pixels)` row-major.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, &[u8]), DataError> {
    let mut pos = 0usize;

    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(DataError::NotPgm("missing P5 magic".into()));
    }
    pos += 2;

    // Header tokens may be separated by whitespace and '#' comments.
    let next_token = |pos: &mut usize| -> Result<u64, DataError> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if *pos == start {
            return Err(DataError::NotPgm("truncated or non-numeric header".into()));
        }
        std::str::from_utf8(&bytes[start..*pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DataError::NotPgm("header value out of range".into()))
    };

    let width = next_token(&mut pos)?;
    let height = next_token(&mut pos)?;
    let maxval = next_token(&mut pos)?;
    if maxval != 255 {
        return Err(DataError::UnsupportedMaxval(
            maxval.min(u32::MAX as u64) as u32
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(DataError::NotPgm("missing raster separator".into()));
    }
    pos += 1;

    let npixels = (width as usize)
        .checked_mul(height as usize)
        .ok_or_else(|| DataError::NotPgm("image dimensions overflow".into()))?;
    if width == 0 || height == 0 {
        return Err(DataError::NotPgm("zero image dimension".into()));
    }
    let raster = &bytes[pos..];
    if raster.len() < npixels {
        return Err(DataError::NotPgm(format!(
            "raster truncated: expected {npixels} bytes, found {}",
            raster.len()
        )));
    }
    Ok((width as usize, height as usize, &raster[..npixels]))
}

/// Write an 8-bit binary PGM (P5, maxval 255).
pub fn write_pgm<W: Write>(
    mut w: W,
    width: usize,
    height: usize,
    pixels: &[u8],
) -> Result<(), DataError> {
    assert_eq!(pixels.len(), width * height, "pixel buffer mismatch");
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(pixels)?;
    w.flush()?;
    Ok(())
}

pub fn write_pgm_to_path<P: AsRef<Path>>(
    path: P,
    width: usize,
    height: usize,
    pixels: &[u8],
) -> Result<(), DataError> {
    write_pgm(BufWriter::new(File::create(path)?), width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fix(onset: f64, x: f64, y: f64) -> FixationRecord {
        FixationRecord {
            x_px: x,
            y_px: y,
            onset_ms: onset,
            duration_ms: 100.0,
        }
    }

    fn rect100() -> Rect {
        Rect {
            x0: 0.0,
            y0: 0.0,
            width: 100.0,
            height: 100.0,
        }
    }

    pub(crate) fn trial(id: &str, label: Label, fixations: Vec<FixationRecord>) -> Trial {
        Trial::new(
            id.into(),
            format!("s-{id}"),
            label,
            "img-1".into(),
            rect100(),
            fixations,
        )
        .unwrap()
    }

    const HEADER: &str =
        "trial_id,subject_id,label,image_id,rect_x0,rect_y0,rect_w,rect_h,onset_ms,duration_ms,x_px,y_px\n";

    #[test]
    fn empty_file_loads_zero_trials() {
        let ds = load_trials_from_reader(HEADER.as_bytes()).unwrap();
        assert_eq!(ds.len(), 0);
        assert_eq!(ds.class_counts(), ClassCounts::default());
    }

    #[test]
    fn two_trials_grouped_and_counted() {
        let mut s = String::from(HEADER);
        for (tid, label, onsets) in [
            ("t1", "faculty", [0.0, 50.0, 120.0]),
            ("t2", "trainee", [10.0, 60.0, 90.0]),
        ] {
            for o in onsets {
                s.push_str(&format!("{tid},s1,{label},img,0,0,100,100,{o},30,10,10\n"));
            }
        }
        let ds = load_trials_from_reader(s.as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(
            ds.class_counts(),
            ClassCounts {
                faculty: 1,
                trainee: 1
            }
        );
        assert_eq!(ds.trials()[0].fixations().len(), 3);
    }

    #[test]
    fn nan_coordinate_is_malformed_with_line() {
        let s = format!("{HEADER}t1,s1,faculty,img,0,0,100,100,0,30,NaN,10\n");
        match load_trials_from_reader(s.as_bytes()) {
            Err(DataError::MalformedRow { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn bad_column_count_is_malformed() {
        let s = format!("{HEADER}t1,s1,faculty,img,0,0,100,100,0,30,10\n");
        assert!(matches!(
            load_trials_from_reader(s.as_bytes()),
            Err(DataError::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn unknown_label_rejected() {
        let s = format!("{HEADER}t1,s1,attending,img,0,0,100,100,0,30,10,10\n");
        match load_trials_from_reader(s.as_bytes()) {
            Err(DataError::UnknownLabel { line, label }) => {
                assert_eq!(line, 2);
                assert_eq!(label, "attending");
            }
            other => panic!("expected UnknownLabel, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_onset_rejected() {
        let mut s = String::from(HEADER);
        s.push_str("t1,s1,faculty,img,0,0,100,100,50,30,10,10\n");
        s.push_str("t1,s1,faculty,img,0,0,100,100,50,30,20,20\n");
        assert!(matches!(
            load_trials_from_reader(s.as_bytes()),
            Err(DataError::DuplicateOnset { .. })
        ));
    }

    #[test]
    fn unsorted_rows_are_sorted_on_load() {
        let mut s = String::from(HEADER);
        s.push_str("t1,s1,faculty,img,0,0,100,100,90,30,3,3\n");
        s.push_str("t1,s1,faculty,img,0,0,100,100,10,30,1,1\n");
        let ds = load_trials_from_reader(s.as_bytes()).unwrap();
        let onsets: Vec<f64> = ds.trials()[0]
            .fixations()
            .iter()
            .map(|f| f.onset_ms)
            .collect();
        assert_eq!(onsets, vec![10.0, 90.0]);
    }

    #[test]
    fn inconsistent_rect_rejected() {
        let mut s = String::from(HEADER);
        s.push_str("t1,s1,faculty,img,0,0,100,100,10,30,1,1\n");
        s.push_str("t1,s1,faculty,img,0,0,200,100,20,30,1,1\n");
        assert!(matches!(
            load_trials_from_reader(s.as_bytes()),
            Err(DataError::MalformedRow { line: 3, .. })
        ));
    }

    #[test]
    fn csv_round_trip_identity() {
        let ds = Dataset::new(vec![
            trial(
                "a",
                Label::Faculty,
                vec![fix(0.0, 1.25, 2.5), fix(100.0, 99.0, 0.125)],
            ),
            trial("b", Label::Trainee, vec![fix(3.0, 50.0, 50.0)]),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_trials(&ds, &mut buf).unwrap();
        let back = load_trials_from_reader(buf.as_slice()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn filter_identity_when_all_inside() {
        let ds =
            Dataset::new(vec![trial("a", Label::Faculty, vec![fix(0.0, 10.0, 10.0)])]).unwrap();
        let (out, report) = filter_out_of_bounds(&ds);
        assert_eq!(out, ds);
        assert_eq!(report.total_removed(), 0);
    }

    #[test]
    fn filter_drops_out_of_rect() {
        let ds = Dataset::new(vec![trial(
            "a",
            Label::Faculty,
            vec![
                fix(0.0, 10.0, 10.0),
                fix(10.0, -5.0, 10.0),
                fix(20.0, 50.0, 50.0),
                fix(30.0, 10.0, 101.0),
                fix(40.0, 100.0, 100.0), // border counts as inside
            ],
        )])
        .unwrap();
        let (out, report) = filter_out_of_bounds(&ds);
        assert_eq!(out.trials()[0].fixations().len(), 3);
        assert_eq!(report.entries[0].removed_count, 2);
        assert_eq!(report.entries[0].kept_count, 3);
    }

    #[test]
    fn filter_keeps_emptied_trials() {
        let ds =
            Dataset::new(vec![trial("a", Label::Trainee, vec![fix(0.0, -1.0, -1.0)])]).unwrap();
        let (out, report) = filter_out_of_bounds(&ds);
        assert_eq!(out.len(), 1);
        assert!(out.trials()[0].fixations().is_empty());
        assert_eq!(report.entries[0].removed_count, 1);
    }

    #[test]
    fn filter_idempotent() {
        let ds = Dataset::new(vec![trial(
            "a",
            Label::Faculty,
            vec![fix(0.0, -3.0, 10.0), fix(10.0, 5.0, 5.0)],
        )])
        .unwrap();
        let (once, _) = filter_out_of_bounds(&ds);
        let (twice, report) = filter_out_of_bounds(&once);
        assert_eq!(once, twice);
        assert_eq!(report.total_removed(), 0);
    }

    fn pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
        let mut v = format!("P5\n{width} {height}\n255\n").into_bytes();
        v.extend_from_slice(pixels);
        v
    }

    #[test]
    fn uniform_bright_mask_is_all_salient() {
        let img = pgm(4, 3, &[255u8; 12]);
        let m = salient_mask_from_bytes(&img, 10).unwrap();
        assert_eq!(m.salient_count(), 12);
    }

    #[test]
    fn uniform_dark_mask_is_all_background() {
        let img = pgm(4, 3, &[0u8; 12]);
        assert!(matches!(
            salient_mask_from_bytes(&img, 10),
            Err(DataError::AllBackground)
        ));
    }

    #[test]
    fn half_bright_mask_counts_left_half() {
        // 4x4, left half 200, right half 0.
        let mut pixels = Vec::new();
        for _row in 0..4 {
            pixels.extend_from_slice(&[200, 200, 0, 0]);
        }
        let img = pgm(4, 4, &pixels);
        let m = salient_mask_from_bytes(&img, 10).unwrap();
        assert_eq!(m.salient_count(), 8);
        assert!(m.salient(0, 0));
        assert!(!m.salient(3, 3));
    }

    #[test]
    fn threshold_monotone() {
        let pixels: Vec<u8> = (0..64).map(|i| (i * 4) as u8).collect();
        let img = pgm(8, 8, &pixels);
        let mut prev = usize::MAX;
        for t in [0u8, 50, 100, 200] {
            let count = match salient_mask_from_bytes(&img, t) {
                Ok(m) => m.salient_count(),
                Err(DataError::AllBackground) => 0,
                Err(e) => panic!("{e}"),
            };
            assert!(count <= prev);
            prev = count;
        }
    }

    #[test]
    fn pgm_rejects_bad_magic_and_maxval() {
        assert!(matches!(
            salient_mask_from_bytes(b"P6\n2 2\n255\nxxxx", 10),
            Err(DataError::NotPgm(_))
        ));
        assert!(matches!(
            salient_mask_from_bytes(b"P5\n2 2\n65535\nxxxxxxxx", 10),
            Err(DataError::UnsupportedMaxval(65535))
        ));
        assert!(matches!(
            salient_mask_from_bytes(b"P5\n2 2\n255\nxx", 10),
            Err(DataError::NotPgm(_))
        ));
    }

    #[test]
    fn pgm_round_trip() {
        let pixels: Vec<u8> = (0..20).map(|i| (i * 12) as u8).collect();
        let mut buf = Vec::new();
        write_pgm(&mut buf, 5, 4, &pixels).unwrap();
        let (w, h, px) = parse_pgm(&buf).unwrap();
        assert_eq!((w, h), (5, 4));
        assert_eq!(px, &pixels[..]);
    }
}
