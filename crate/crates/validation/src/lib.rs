//! Holds the `acceptance` test target. It prints one PASS/FAIL line per
//! criterion; run it with `cargo test -p blowlab-validation --test acceptance`.
