#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(law) = htcp::distributions::parse_law(s) {
            // Whatever parses must print back to an equal law.
            let again = htcp::distributions::parse_law(&law.to_string()).expect("canonical form parses");
            assert_eq!(again, law);
        }
    }
});
