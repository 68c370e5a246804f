#![no_main]

use libfuzzer_sys::fuzz_target;

use gazegrid::evaluation::{read_raw_records_csv, write_raw_records_csv};

// The report reader ingests raw-record CSVs written by earlier runs (or
// edited by hand); it must never panic, and whatever it accepts must
// serialize back and reload to the same records.
fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_raw_records_csv(data) else {
        return;
    };
    let mut buf = Vec::new();
    write_raw_records_csv(&records, &mut buf).expect("in-memory serialization");
    let reloaded = read_raw_records_csv(buf.as_slice()).expect("round-trip reload");
    assert_eq!(records, reloaded);
});
