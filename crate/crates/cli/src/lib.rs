//! Support pieces for the `newman` binary: the append-only JSONL result
//! cache and argument parsing for eta-quotient specs.

pub mod cache;
pub mod etaspec;

/// Exit codes shared by the binary and its tests.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 2;
    pub const EXHAUSTED: i32 = 3;
    pub const TRUNCATION: i32 = 4;
}
