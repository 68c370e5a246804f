#![no_main]

use libfuzzer_sys::fuzz_target;

use gazegrid::data::{filter_out_of_bounds, load_trials_from_reader, write_trials};
use gazegrid::encoding::{encode_trial, EncodingConfig};

// The fixation CSV loader must never panic, and any dataset it accepts must
// survive the downstream pipeline: a lossless CSV round-trip, the bounds
// filter, and the encoder's mass-conservation law.
fuzz_target!(|data: &[u8]| {
    let Ok(dataset) = load_trials_from_reader(data) else {
        return;
    };

    let mut buf = Vec::new();
    write_trials(&dataset, &mut buf).expect("in-memory serialization");
    let reloaded = load_trials_from_reader(buf.as_slice()).expect("round-trip reload");
    let no_empty_trials = dataset.trials().iter().all(|t| !t.fixations().is_empty());
    if no_empty_trials {
        assert_eq!(dataset, reloaded);
    }

    let (filtered, report) = filter_out_of_bounds(&dataset);
    assert_eq!(filtered.len(), dataset.len());
    let cfg = EncodingConfig::new(3, 2, 4);
    for (trial, entry) in filtered.trials().iter().zip(&report.entries) {
        let v = encode_trial(trial, cfg);
        assert_eq!(v.total_count(), entry.kept_count as u64);
    }
});
