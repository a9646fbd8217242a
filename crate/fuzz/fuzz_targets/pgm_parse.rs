#![no_main]

use libfuzzer_sys::fuzz_target;
use msmooth::pgm::{encode_pgm, parse_pgm};

fuzz_target!(|data: &[u8]| {
    // Errors must point inside the input; accepted images must survive
    // a write/read cycle unchanged.
    match parse_pgm(data) {
        Ok(img) => {
            let bytes = encode_pgm(&img.field, img.maxval, true).unwrap();
            assert_eq!(parse_pgm(&bytes).unwrap(), img);
        }
        Err(msmooth::Error::Parse { offset, .. }) => assert!(offset <= data.len()),
        Err(e) => panic!("unexpected error kind: {e}"),
    }
});
