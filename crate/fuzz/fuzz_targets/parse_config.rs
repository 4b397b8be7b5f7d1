#![no_main]

use libfuzzer_sys::fuzz_target;
use noncolliding::io::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(map) = parse_config(text) {
            let rendered: String = map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
            assert_eq!(parse_config(&rendered).expect("rendered config parses"), map);
        }
    }
});
