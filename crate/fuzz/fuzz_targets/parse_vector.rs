#![no_main]

use libfuzzer_sys::fuzz_target;
use noncolliding::io::{format_number, parse_vector, parse_weyl};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(v) = parse_vector(text) {
            assert!(v.iter().all(|x| x.is_finite()));
            let again: Vec<String> = v.iter().map(|x| format_number(*x)).collect();
            assert_eq!(parse_vector(&again.join(",")).unwrap(), v);
        }
        if let Ok(w) = parse_weyl(text) {
            assert!(w.as_slice().windows(2).all(|p| p[0] <= p[1]));
        }
    }
});
