#![no_main]

use libfuzzer_sys::fuzz_target;
use noncolliding::io::{parse_complex, parse_hermitian};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_complex(text);
        if let Ok(h) = parse_hermitian(text) {
            let e = h.entries();
            for i in 0..h.dim() {
                for j in 0..h.dim() {
                    assert_eq!(e[(i, j)], e[(j, i)].conj());
                }
            }
        }
    }
});
