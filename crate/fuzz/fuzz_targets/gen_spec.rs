#![no_main]

use invdet::generate::GenSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = text.parse::<GenSpec>() {
        let again: GenSpec = spec.to_string().parse().unwrap();
        assert_eq!(again, spec);
    }
});
