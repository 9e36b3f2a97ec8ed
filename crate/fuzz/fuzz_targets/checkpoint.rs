#![no_main]

use libfuzzer_sys::fuzz_target;
use seqnet::checkpoint::{decode, encode};

fuzz_target!(|data: &[u8]| {
    if let Ok(w) = decode(data) {
        // Degenerate scaler ranges are widened on load, so compare the
        // re-encoded form rather than the input.
        let bytes = encode(&w);
        assert_eq!(encode(&decode(&bytes).expect("encoded checkpoint decodes")), bytes);
        assert_eq!(decode(&bytes).unwrap().params(), w.params());
    }
});
