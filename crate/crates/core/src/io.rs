//! Mechanism/network text files.
//!
//! A file is one JSON document:
//!
//! ```text
//! {
//!   "n": 3,
//!   "input_dim": 2,
//!   "hidden_sizes": [2],
//!   "weights": [[[w, w], [w, w]], [[w, w]]],
//!   "biases": [[b, b], [b]],
//!   "skip": [w, w],
//!   "shift": s
//! }
//! ```
//!
//! `weights[l][row][col]` is row-major per layer, the last layer being the
//! single output node. `skip` is omitted when the network has no direct
//! input-to-output term. Every real is written with 17 significant digits so
//! that reading a file back yields bit-identical parameters.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{contract, Error, Result};
use crate::net::{Dense, Mlp};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    n: usize,
    input_dim: usize,
    hidden_sizes: Vec<usize>,
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
    #[serde(default)]
    skip: Option<Vec<f64>>,
    shift: f64,
}

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_list(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&fmt_real(*v));
    }
    out.push(']');
}

pub fn write_network(net: &Mlp, n: usize, shift: f64) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"n\": {n},");
    let _ = writeln!(out, "  \"input_dim\": {},", net.input_dim());
    let sizes: Vec<String> = net.hidden_sizes().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "  \"hidden_sizes\": [{}],", sizes.join(", "));

    out.push_str("  \"weights\": [\n");
    let layers = net.layers();
    for (li, layer) in layers.iter().enumerate() {
        out.push_str("    [\n");
        for r in 0..layer.outputs() {
            out.push_str("      ");
            write_list(&mut out, layer.row(r));
            out.push_str(if r + 1 < layer.outputs() { ",\n" } else { "\n" });
        }
        out.push_str(if li + 1 < layers.len() { "    ],\n" } else { "    ]\n" });
    }
    out.push_str("  ],\n");

    out.push_str("  \"biases\": [\n");
    for (li, layer) in layers.iter().enumerate() {
        out.push_str("    ");
        write_list(&mut out, layer.biases());
        out.push_str(if li + 1 < layers.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ],\n");

    if let Some(skip) = net.skip() {
        out.push_str("  \"skip\": ");
        write_list(&mut out, skip);
        out.push_str(",\n");
    }
    let _ = writeln!(out, "  \"shift\": {}", fmt_real(shift));
    out.push_str("}\n");
    out
}

/// Parses a mechanism file into `(net, n, shift)`.
pub fn read_network(text: &str) -> Result<(Mlp, usize, f64)> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if raw.n < 2 || raw.input_dim != raw.n - 1 {
        return Err(contract(format!(
            "input_dim {} does not equal n - 1 for n = {}",
            raw.input_dim, raw.n
        )));
    }
    if raw.weights.len() != raw.hidden_sizes.len() + 1 || raw.biases.len() != raw.weights.len() {
        return Err(contract("weights/biases must list every hidden layer plus the output layer"));
    }
    let mut layers = Vec::with_capacity(raw.weights.len());
    for (i, (rows, biases)) in raw.weights.into_iter().zip(raw.biases).enumerate() {
        let expected = raw.hidden_sizes.get(i).copied().unwrap_or(1);
        if rows.len() != expected {
            return Err(contract(format!(
                "layer {i} has {} rows, hidden_sizes says {expected}",
                rows.len()
            )));
        }
        layers.push(Dense::from_rows(rows, biases)?);
    }
    if !raw.shift.is_finite() {
        return Err(contract("shift must be finite"));
    }
    let net = Mlp::new(raw.input_dim, layers, raw.skip)?;
    Ok((net, raw.n, raw.shift))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let net = Mlp::init_random(3, &[5, 4], 42).unwrap();
        let text = write_network(&net, 4, 0.012345678901234567);
        let (back, n, shift) = read_network(&text).unwrap();
        assert_eq!(n, 4);
        assert_eq!(shift.to_bits(), 0.012345678901234567f64.to_bits());
        let a: Vec<u64> = net.params().map(f64::to_bits).collect();
        let b: Vec<u64> = back.params().map(f64::to_bits).collect();
        assert_eq!(a, b);
        assert_eq!(write_network(&back, n, shift), text);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let net = Mlp::init_random(2, &[2], 0).unwrap();
        let text = write_network(&net, 3, 0.0);
        let cut = &text[..text.len() / 2];
        match read_network(cut) {
            Err(Error::Parse { line, .. }) => assert!(line > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_dims_rejected() {
        let net = Mlp::init_random(2, &[2], 0).unwrap();
        let text = write_network(&net, 4, 0.0);
        assert!(matches!(read_network(&text), Err(Error::Contract(_))));
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_real(2.0 / 3.0), "6.6666666666666663e-1");
        assert_eq!(fmt_real(0.0), "0.0000000000000000e0");
    }
}
