#![no_main]

use gpmemory::cli::parse_config_str;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = parse_config_str(text) {
        // anything accepted must echo back to an equal config
        let echoed = serde_json::to_string(&config).expect("config serializes");
        assert_eq!(parse_config_str(&echoed).expect("echo parses"), config);
    }
});
