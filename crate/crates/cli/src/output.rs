//! Deterministic serialization of results.
//!
//! JSON bodies are pretty-printed `serde_json` (shortest round-trip
//! float form, fixed key order from the struct definitions), so
//! reruns of an identical config produce bit-identical files. CSV
//! bodies print every float with 17 significant digits, which
//! round-trips through `f64` exactly and diffs cleanly.

use serde::Serialize;

/// One float cell: 17 significant digits, round-trip safe.
pub fn cell(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON body with a trailing newline.
pub fn json_body<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    Ok(body)
}

/// CSV body: a header line plus one line per row, every float cell
/// through [`cell`].
pub fn csv_body(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut body = String::from(header);
    body.push('\n');
    for row in rows {
        body.push_str(&row.join(","));
        body.push('\n');
    }
    body
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_round_trip_exactly() {
        for v in [0.0, 1.0 / 3.0, -2.718281828459045e-12, 6.02214076e23] {
            let parsed: f64 = cell(v).parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn csv_layout_is_header_plus_rows() {
        let body = csv_body(
            "a,b",
            [
                vec!["1".to_string(), "2".to_string()],
                vec!["3".to_string(), "4".to_string()],
            ],
        );
        assert_eq!(body, "a,b\n1,2\n3,4\n");
    }
}
