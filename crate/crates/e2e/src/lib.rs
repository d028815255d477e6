//! Holds the `acceptance` test target, which drives the `etpa` command line
//! in-process together with the library API. Run it with
//! `cargo test -p etpa-e2e --test acceptance`.
