#![no_main]

use libfuzzer_sys::fuzz_target;
use torus_pde::scenario::{decode_kernel_sidecar, encode_kernel_sidecar};

fuzz_target!(|data: &[u8]| {
    let Some((&n, bytes)) = data.split_first() else { return };
    let n_points = n as usize;
    if let Ok(values) = decode_kernel_sidecar(bytes, n_points) {
        assert_eq!(values.len(), n_points * n_points);
        assert_eq!(encode_kernel_sidecar(&values), bytes);
    }
});
