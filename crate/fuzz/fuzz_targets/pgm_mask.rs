#![no_main]

use libfuzzer_sys::fuzz_target;

use gazegrid::data::{parse_pgm, salient_mask_from_bytes};

// The PGM parser must never panic and never report more pixels than the
// input can hold; thresholding must be monotone.
fuzz_target!(|data: &[u8]| {
    if let Ok((w, h, pixels)) = parse_pgm(data) {
        assert_eq!(pixels.len(), w * h);
        assert!(pixels.len() <= data.len());
    }

    let low = salient_mask_from_bytes(data, 10)
        .map(|m| m.salient_count())
        .unwrap_or(0);
    let high = salient_mask_from_bytes(data, 200)
        .map(|m| m.salient_count())
        .unwrap_or(0);
    assert!(low >= high);
});
