#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = invdet::io::parse_matrix_json(text) {
        // accepted matrices survive a write/read cycle
        let again = invdet::io::parse_matrix_json(&invdet::io::matrix_to_json(&m)).unwrap();
        assert_eq!(again.order(), m.order());
    }
});
