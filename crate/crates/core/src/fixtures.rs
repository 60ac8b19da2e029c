//! Small hand-made instances.

use crate::flow::{build_flow_matrix, FlowMatrix, Registry};

/// Four entities `A, B, C, D`: `A` and `B` each send to `C` and receive
/// from it in a 3:1 ratio, `B` at twice the scale of `A`, and `C` and `D`
/// exchange equal amounts.
///
/// Scores: net `(10, 20, -30, 0)`, ratio `(1/2, 1/2, -3/8, 0)`,
/// least squares `(1/4, 1/4, -1/4, -1/4)`.
pub fn four_country() -> FlowMatrix {
    let registry = Registry::from_codes(["A", "B", "C", "D"]).expect("distinct codes");
    build_flow_matrix(registry, FOUR_COUNTRY_FLOWS.iter().copied()).expect("valid flows")
}

pub const FOUR_COUNTRY_FLOWS: [(&str, &str, f64); 6] = [
    ("A", "C", 15.0),
    ("B", "C", 30.0),
    ("C", "A", 5.0),
    ("C", "B", 10.0),
    ("C", "D", 10.0),
    ("D", "C", 10.0),
];
