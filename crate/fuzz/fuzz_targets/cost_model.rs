//! Cost model strings come straight from CLI flags: parsing must never
//! panic, accepted models must round-trip through Display, and costing
//! any stride must be total.

#![no_main]

use std::str::FromStr;

use libfuzzer_sys::fuzz_target;

use hypersystolic::CostModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };

    if let Ok(model) = CostModel::from_str(text) {
        let shown = model.to_string();
        let again = CostModel::from_str(&shown).expect("display form parses");
        // compare the canonical forms; Vec<f64> equality would trip on NaN
        assert_eq!(shown, again.to_string(), "display round trip drifted");

        // costing and validation are total for any inputs
        for p in [1usize, 2, 5, 64] {
            let _ = model.validate(p);
            for stride in [i64::MIN, -7, -1, 0, 1, 3, i64::MAX] {
                let _ = model.cost(stride, p);
            }
        }
    }
});
