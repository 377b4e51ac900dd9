//! Holds the `acceptance` test target. Run it with
//! `cargo test -p tritter-qcm-validation --test acceptance`.
