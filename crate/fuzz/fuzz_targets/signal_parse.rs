#![no_main]

use libfuzzer_sys::fuzz_target;
use msmooth::signal::{encode_signal, parse_signal};

fuzz_target!(|data: &[u8]| {
    match parse_signal(data, 1.0) {
        Ok(f) => {
            let text = encode_signal(&f).unwrap();
            assert_eq!(parse_signal(text.as_bytes(), 1.0).unwrap().values(), f.values());
        }
        Err(msmooth::Error::Parse { offset, .. }) => assert!(offset <= data.len()),
        Err(e) => panic!("unexpected error kind: {e}"),
    }
});
