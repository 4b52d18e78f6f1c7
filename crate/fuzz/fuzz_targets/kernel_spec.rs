#![no_main]

use gpmemory::cli::KernelSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<KernelSpec>(data) else { return };
    let Ok(kernel) = spec.build() else { return };
    // construction succeeded, so evaluation and the transform must not panic
    let _ = kernel.eval(0.5);
    if let Ok(zeros) = kernel.khat_zeros() {
        assert!(zeros.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }
});
