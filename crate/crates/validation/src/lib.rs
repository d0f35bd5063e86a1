//! Holds the `acceptance` test target, which reruns the reference
//! experiments and prints one PASS/FAIL line per criterion.
//!
//! It lives in its own package so that `cargo test --workspace` reaches it
//! after every other suite has reported.
