//! The matrix reader must never panic on arbitrary text, and anything it
//! accepts must survive a write/read round trip unchanged.

#![no_main]

use libfuzzer_sys::fuzz_target;

use hypersystolic::{read_matrix, write_matrix, Matrix};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };

    if let Ok(m) = read_matrix::<i64>(text) {
        let again: Matrix<i64> = read_matrix(&write_matrix(&m)).expect("rewrite parses");
        assert_eq!(m, again, "integer round trip changed the matrix");
    }

    if let Ok(m) = read_matrix::<f64>(text) {
        let again: Matrix<f64> = read_matrix(&write_matrix(&m)).expect("rewrite parses");
        assert_eq!(m.rows(), again.rows());
        assert_eq!(m.cols(), again.cols());
        // bitwise: shortest-round-trip formatting must be lossless, and
        // NaN == NaN is false under PartialEq
        for (a, b) in m.as_slice().iter().zip(again.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits(), "float round trip changed a value");
        }
    }
});
