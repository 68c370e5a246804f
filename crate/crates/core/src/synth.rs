//! Seeded generator of two-archetype synthetic fixation datasets.
//!
//! Two behavioral archetypes are modeled: a *uniform* scanner whose
//! fixations spread over the whole salient ellipse, and a *focal* scanner
//! who concentrates on a few suspected regions per trial. The defaults make
//! faculty readers uniform scanners with fewer fixations and shorter trials
//! and trainees focal scanners, so the generated data carries the expected
//! class structure without matching any clinical effect size.
//!
//! Randomness: every trial draws from its own ChaCha8 stream
//! (`ChaCha8Rng::seed_from_u64(seed)` with the stream id set to the trial
//! index), so generation is a pure function of the config and is stable
//! under per-trial parallel generation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, FixationRecord, Label, Rect, SalientMask, Trial};

/// How one archetype places fixations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanStyle {
    /// Fixations drawn uniformly over the salient ellipse.
    Uniform,
    /// Fixations drawn from a per-trial mixture of isotropic Gaussians.
    Focal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeParams {
    pub style: ScanStyle,
    /// Inclusive range of fixations per trial.
    pub n_fixations_range: (u32, u32),
    /// Number of Gaussian clusters (focal style only).
    #[serde(default = "default_n_clusters")]
    pub n_clusters: u32,
    /// Isotropic positional spread of each cluster (focal style only).
    #[serde(default = "default_cluster_sigma")]
    pub cluster_sigma_px: f64,
    /// Cluster centers are drawn uniformly over the salient ellipse shrunk
    /// by this factor (focal style only; 1.0 = the whole ellipse).
    #[serde(default = "default_cluster_region_scale")]
    pub cluster_region_scale: f64,
    /// Inclusive range of the gap between consecutive onsets (ms).
    pub inter_fixation_ms_range: (f64, f64),
    /// Inclusive range of fixation durations (ms).
    pub duration_ms_range: (f64, f64),
}

fn default_n_clusters() -> u32 {
    3
}

fn default_cluster_sigma() -> f64 {
    40.0
}

fn default_cluster_region_scale() -> f64 {
    1.0
}

/// Axis-aligned ellipse in image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = (x - self.cx) / self.rx;
        let dy = (y - self.cy) / self.ry;
        dx * dx + dy * dy <= 1.0
    }

    fn scaled(&self, factor: f64) -> Ellipse {
        Ellipse {
            cx: self.cx,
            cy: self.cy,
            rx: self.rx * factor,
            ry: self.ry * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub trials_per_class: usize,
    pub image_width: u32,
    pub image_height: u32,
    pub salient_ellipse: Ellipse,
    pub faculty_params: ArchetypeParams,
    pub trainee_params: ArchetypeParams,
}

impl Default for GeneratorConfig {
    /// The seeded default dataset: 55 trials per class over a 1024x768
    /// stimulus, mirroring the class balance of a 110-trial two-reader
    /// study. Faculty scan the whole salient ellipse with fewer fixations;
    /// trainees revisit three tight clusters near the center.
    fn default() -> Self {
        GeneratorConfig {
            seed: 42,
            trials_per_class: 55,
            image_width: 1024,
            image_height: 768,
            salient_ellipse: Ellipse {
                cx: 512.0,
                cy: 384.0,
                rx: 400.0,
                ry: 280.0,
            },
            faculty_params: ArchetypeParams {
                style: ScanStyle::Uniform,
                n_fixations_range: (40, 80),
                n_clusters: 1,
                cluster_sigma_px: 40.0,
                cluster_region_scale: 1.0,
                inter_fixation_ms_range: (100.0, 250.0),
                duration_ms_range: (120.0, 350.0),
            },
            trainee_params: ArchetypeParams {
                style: ScanStyle::Focal,
                n_fixations_range: (50, 90),
                n_clusters: 3,
                cluster_sigma_px: 40.0,
                cluster_region_scale: 0.45,
                inter_fixation_ms_range: (100.0, 250.0),
                duration_ms_range: (120.0, 350.0),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error(
        "rejection sampling overflow: {0} consecutive samples fell outside the image (cluster sigma too large?)"
    )]
    RejectionOverflow(usize),
}

const MAX_REJECTIONS: usize = 1000;

fn validate(config: &GeneratorConfig) -> Result<(), SynthError> {
    let err = |msg: &str| Err(SynthError::InvalidConfig(msg.into()));
    if config.trials_per_class < 1 {
        return err("trials_per_class must be >= 1");
    }
    if config.image_width == 0 || config.image_height == 0 {
        return err("image dimensions must be positive");
    }
    let e = &config.salient_ellipse;
    if !(e.rx > 0.0 && e.ry > 0.0) {
        return err("ellipse semi-axes must be positive");
    }
    if e.cx - e.rx < 0.0
        || e.cy - e.ry < 0.0
        || e.cx + e.rx > config.image_width as f64
        || e.cy + e.ry > config.image_height as f64
    {
        return err("salient ellipse must fit inside the image");
    }
    for (name, p) in [
        ("faculty", &config.faculty_params),
        ("trainee", &config.trainee_params),
    ] {
        if p.n_fixations_range.0 > p.n_fixations_range.1 || p.n_fixations_range.0 == 0 {
            return err(&format!(
                "{name}: n_fixations_range must be positive and ordered"
            ));
        }
        for (rname, r) in [
            ("inter_fixation_ms", p.inter_fixation_ms_range),
            ("duration_ms", p.duration_ms_range),
        ] {
            if !(r.0 > 0.0) || r.0 > r.1 || !r.1.is_finite() {
                return err(&format!(
                    "{name}: {rname}_range must be positive and ordered"
                ));
            }
        }
        if p.style == ScanStyle::Focal {
            if p.n_clusters < 1 {
                return err(&format!("{name}: focal style needs n_clusters >= 1"));
            }
            if !(p.cluster_sigma_px > 0.0) {
                return err(&format!("{name}: cluster_sigma_px must be positive"));
            }
            if !(p.cluster_region_scale > 0.0 && p.cluster_region_scale <= 1.0) {
                return err(&format!("{name}: cluster_region_scale must be in (0, 1]"));
            }
        }
    }
    Ok(())
}

fn sample_in_ellipse(rng: &mut ChaCha8Rng, e: &Ellipse) -> Result<(f64, f64), SynthError> {
    for _ in 0..MAX_REJECTIONS {
        let x = rng.random_range(e.cx - e.rx..=e.cx + e.rx);
        let y = rng.random_range(e.cy - e.ry..=e.cy + e.ry);
        if e.contains(x, y) {
            return Ok((x, y));
        }
    }
    Err(SynthError::RejectionOverflow(MAX_REJECTIONS))
}

fn generate_trial(
    rng: &mut ChaCha8Rng,
    params: &ArchetypeParams,
    ellipse: &Ellipse,
    width: f64,
    height: f64,
) -> Result<Vec<FixationRecord>, SynthError> {
    let n = rng.random_range(params.n_fixations_range.0..=params.n_fixations_range.1) as usize;

    let centers: Vec<(f64, f64)> = match params.style {
        ScanStyle::Uniform => Vec::new(),
        ScanStyle::Focal => {
            let region = ellipse.scaled(params.cluster_region_scale);
            (0..params.n_clusters)
                .map(|_| sample_in_ellipse(rng, &region))
                .collect::<Result<_, _>>()?
        }
    };
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut fixations = Vec::with_capacity(n);
    let mut clock = 0.0f64;
    for _ in 0..n {
        let interval =
            rng.random_range(params.inter_fixation_ms_range.0..=params.inter_fixation_ms_range.1);
        clock += interval;
        let duration = rng.random_range(params.duration_ms_range.0..=params.duration_ms_range.1);

        let (x, y) = match params.style {
            ScanStyle::Uniform => sample_in_ellipse(rng, ellipse)?,
            ScanStyle::Focal => {
                let (cx, cy) = centers[rng.random_range(0..centers.len())];
                let mut accepted = None;
                for _ in 0..MAX_REJECTIONS {
                    let x = cx + params.cluster_sigma_px * normal.sample(rng);
                    let y = cy + params.cluster_sigma_px * normal.sample(rng);
                    if x >= 0.0 && x <= width && y >= 0.0 && y <= height {
                        accepted = Some((x, y));
                        break;
                    }
                }
                accepted.ok_or(SynthError::RejectionOverflow(MAX_REJECTIONS))?
            }
        };
        fixations.push(FixationRecord {
            x_px: x,
            y_px: y,
            onset_ms: clock,
            duration_ms: duration,
        });
    }
    Ok(fixations)
}

/// Render the 255/0 grayscale image of the salient ellipse, row-major.
/// A pixel is salient when its center falls inside the ellipse.
pub fn render_mask_pixels(config: &GeneratorConfig) -> Vec<u8> {
    let (w, h) = (config.image_width as usize, config.image_height as usize);
    let mut px = vec![0u8; w * h];
    for row in 0..h {
        for col in 0..w {
            if config
                .salient_ellipse
                .contains(col as f64 + 0.5, row as f64 + 0.5)
            {
                px[row * w + col] = 255;
            }
        }
    }
    px
}

/// Generate a class-balanced dataset of `2 * trials_per_class` trials plus
/// the salient-ellipse mask. Deterministic in the config.
pub fn generate_dataset(config: &GeneratorConfig) -> Result<(Dataset, SalientMask), SynthError> {
    validate(config)?;
    let (w, h) = (config.image_width as f64, config.image_height as f64);
    let rect = Rect {
        x0: 0.0,
        y0: 0.0,
        width: w,
        height: h,
    };

    let mut trials = Vec::with_capacity(2 * config.trials_per_class);
    for (label, params) in [
        (Label::Faculty, &config.faculty_params),
        (Label::Trainee, &config.trainee_params),
    ] {
        for i in 0..config.trials_per_class {
            let trial_index = trials.len() as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial_index);
            let fixations = generate_trial(&mut rng, params, &config.salient_ellipse, w, h)?;
            let trial = Trial::new(
                format!("{label}-{i:03}"),
                format!("{label}-sim"),
                label,
                "synthetic-ellipse".into(),
                rect,
                fixations,
            )
            .expect("generated trials satisfy the invariants");
            trials.push(trial);
        }
    }

    let pixels = render_mask_pixels(config);
    let mask = SalientMask::new(
        config.image_width as usize,
        config.image_height as usize,
        pixels.iter().map(|&p| p > 10).collect(),
    );
    let dataset = Dataset::new(trials).expect("generated trial ids are unique");
    Ok((dataset, mask))
}
