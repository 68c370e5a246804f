//! Manual diagnostics (run with --ignored): class separability of the default
//! synthetic dataset and worst-cell runtime.

use std::time::Instant;

use gazegrid::classifiers::{ClassifierFamily, ClassifierSpec};
use gazegrid::dimred::ReductionSpec;
use gazegrid::encoding::EncodingConfig;
use gazegrid::evaluation::{evaluate_config, EvalInputs, EvalSettings, FeatureSpace};
use gazegrid::synth::{generate_dataset, GeneratorConfig};

#[test]
#[ignore]
fn diag_separability_and_timing() {
    let cfg = GeneratorConfig::default();
    let (dataset, mask) = generate_dataset(&cfg).unwrap();
    let inputs = EvalInputs {
        acquisition: "synthetic",
        dataset: &dataset,
        mask: &mask,
    };
    let settings = EvalSettings::default();

    for (family, feature, reduction) in [
        (
            ClassifierFamily::LogReg,
            FeatureSpace::Encoded(EncodingConfig::square(5, 3)),
            "none",
        ),
        (
            ClassifierFamily::Gp,
            FeatureSpace::Encoded(EncodingConfig::square(5, 3)),
            "none",
        ),
        (
            ClassifierFamily::LogReg,
            FeatureSpace::Encoded(EncodingConfig::square(10, 5)),
            "none",
        ),
        (
            ClassifierFamily::Gp,
            FeatureSpace::Encoded(EncodingConfig::square(10, 5)),
            "none",
        ),
        (
            ClassifierFamily::Knn,
            FeatureSpace::Encoded(EncodingConfig::square(10, 5)),
            "none",
        ),
        (
            ClassifierFamily::GBoost,
            FeatureSpace::Encoded(EncodingConfig::square(10, 5)),
            "none",
        ),
        (
            ClassifierFamily::GBoost,
            FeatureSpace::Encoded(EncodingConfig::square(15, 20)),
            "none",
        ),
        (
            ClassifierFamily::Gp,
            FeatureSpace::Encoded(EncodingConfig::square(15, 20)),
            "none",
        ),
        (
            ClassifierFamily::LogReg,
            FeatureSpace::Encoded(EncodingConfig::square(15, 20)),
            "none",
        ),
        (ClassifierFamily::LogReg, FeatureSpace::Traditional, "none"),
        (ClassifierFamily::Gp, FeatureSpace::Traditional, "none"),
        (ClassifierFamily::Knn, FeatureSpace::Traditional, "none"),
        (ClassifierFamily::GBoost, FeatureSpace::Traditional, "none"),
        (
            ClassifierFamily::LogReg,
            FeatureSpace::Encoded(EncodingConfig::square(10, 5)),
            "pca-2",
        ),
        (
            ClassifierFamily::Gp,
            FeatureSpace::Encoded(EncodingConfig::square(10, 5)),
            "kpca-90%",
        ),
        (
            ClassifierFamily::GBoost,
            FeatureSpace::Encoded(EncodingConfig::square(15, 20)),
            "pca-99%",
        ),
    ] {
        let spec = ClassifierSpec::default_grid(family);
        let red = ReductionSpec::parse_label(reduction).unwrap();
        let t0 = Instant::now();
        let rec = evaluate_config(inputs, feature, red, &spec, &settings, 0).unwrap();
        let dt = t0.elapsed();
        let tag = match feature {
            FeatureSpace::Encoded(c) => format!("enc {}x{}x{}", c.x_div, c.y_div, c.t_groups),
            FeatureSpace::Traditional => "trad".to_string(),
        };
        println!(
            "{family:<7} {tag:<14} {reduction:<9} mean_auc={:.4} acc={:.3} time={dt:?}",
            rec.mean.auc, rec.mean.accuracy
        );
    }
}
