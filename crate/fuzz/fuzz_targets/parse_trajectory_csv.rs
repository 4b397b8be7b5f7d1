#![no_main]

use libfuzzer_sys::fuzz_target;
use noncolliding::io::{parse_csv_table, parse_trajectory_csv, write_trajectory_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_csv_table(text);
        if let Ok(traj) = parse_trajectory_csv(text) {
            if traj.states.iter().all(|s| s.len() == traj.states[0].len()) {
                let mut buf = Vec::new();
                write_trajectory_csv(&mut buf, &traj).unwrap();
                let back = parse_trajectory_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
                assert_eq!(back.times, traj.times);
                assert_eq!(back.states, traj.states);
            }
        }
    }
});
