use msmooth::pgm::{encode_pgm, parse_pgm};
use msmooth::signal::{encode_signal, parse_signal};
use msmooth::Field;
use proptest::prelude::*;

proptest! {
    #[test]
    fn pgm_round_trip_is_lossless(
        (w, h, values, binary) in (2usize..12, 2usize..12, any::<bool>()).prop_flat_map(|(w, h, b)| {
            (Just(w), Just(h), prop::collection::vec(0u16..=255, w * h), Just(b))
        })
    ) {
        let f = Field::new(&[w, h], 1.0, values.iter().map(|&v| f64::from(v)).collect()).unwrap();
        let img = parse_pgm(&encode_pgm(&f, 255, binary).unwrap()).unwrap();
        prop_assert_eq!(img.field.values(), f.values());
        prop_assert_eq!(img.maxval, 255);
    }

    #[test]
    fn sixteen_bit_round_trip(values in prop::collection::vec(0u16..=65535, 9)) {
        let f = Field::new(&[3, 3], 1.0, values.iter().map(|&v| f64::from(v)).collect()).unwrap();
        let img = parse_pgm(&encode_pgm(&f, 65535, true).unwrap()).unwrap();
        prop_assert_eq!(img.field.values(), f.values());
    }

    #[test]
    fn pgm_parser_never_panics(data in prop::collection::vec(any::<u8>(), 0..64)) {
        let _ = parse_pgm(&data);
        let mut with_magic = b"P5 3 2 255\n".to_vec();
        with_magic.extend_from_slice(&data);
        let _ = parse_pgm(&with_magic);
    }

    #[test]
    fn signal_round_trip_is_exact(values in prop::collection::vec(-1e12f64..1e12, 2..40)) {
        let f = Field::new(&[values.len()], 0.5, values).unwrap();
        let g = parse_signal(encode_signal(&f).unwrap().as_bytes(), 0.5).unwrap();
        prop_assert_eq!(g.values(), f.values());
    }

    #[test]
    fn signal_errors_point_inside_the_input(text in "[0-9 .eE#x\n+-]{0,40}") {
        if let Err(msmooth::Error::Parse { offset, .. }) = parse_signal(text.as_bytes(), 1.0) {
            prop_assert!(offset <= text.len());
        }
    }
}

/// The fuzz corpus seeds obey the same invariants the fuzz targets assert.
#[test]
fn fuzz_corpus_seeds() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let mut seen = 0;
    for target in ["pgm_parse", "signal_parse"] {
        for entry in std::fs::read_dir(root.join(target)).unwrap() {
            let data = std::fs::read(entry.unwrap().path()).unwrap();
            seen += 1;
            let result = if target == "pgm_parse" {
                parse_pgm(&data).map(|img| {
                    let again = parse_pgm(&encode_pgm(&img.field, img.maxval, true).unwrap()).unwrap();
                    assert_eq!(again, img);
                })
            } else {
                parse_signal(&data, 1.0).map(|f| {
                    let again = parse_signal(encode_signal(&f).unwrap().as_bytes(), 1.0).unwrap();
                    assert_eq!(again.values(), f.values());
                })
            };
            match result {
                Ok(()) => {}
                Err(msmooth::Error::Parse { offset, .. }) => assert!(offset <= data.len()),
                Err(e) => panic!("{e}"),
            }
        }
    }
    assert!(seen >= 8);
}
