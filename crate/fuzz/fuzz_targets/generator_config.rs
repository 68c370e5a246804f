#![no_main]

use libfuzzer_sys::fuzz_target;

use gazegrid::synth::{generate_dataset, GeneratorConfig};

// JSON configs come from users; deserialization plus generation must never
// panic. Generation is skipped for configs large enough to be slow rather
// than incorrect.
fuzz_target!(|data: &[u8]| {
    let Ok(config) = serde_json::from_slice::<GeneratorConfig>(data) else {
        return;
    };
    let small = config.trials_per_class <= 4
        && config.image_width <= 256
        && config.image_height <= 256
        && config.faculty_params.n_fixations_range.1 <= 64
        && config.trainee_params.n_fixations_range.1 <= 64
        && config.trainee_params.n_clusters <= 16
        && config.faculty_params.n_clusters <= 16;
    if !small {
        return;
    }
    if let Ok((dataset, mask)) = generate_dataset(&config) {
        assert_eq!(dataset.len(), 2 * config.trials_per_class);
        assert!(mask.salient_count() > 0);
    }
});
