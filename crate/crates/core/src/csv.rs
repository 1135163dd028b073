//! Tail-trajectory CSV shared by simulated and fluid paths.
//!
//! Header `t,x1,...,xB`; one row per sample instant. Every number is
//! written in scientific notation with 17 significant digits so values
//! round-trip exactly. `x0` is always 1 and is not written.

use crate::error::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_tail_csv(b: usize, rows: &[(f64, &[f64])]) -> String {
    let mut out = String::from("t");
    for i in 1..=b {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for (t, x) in rows {
        out.push_str(&fmt_f64(*t));
        for v in &x[1..=b] {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// A tail path read back from CSV; each row includes the implicit `x0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSeries {
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl TailSeries {
    pub fn truncation(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len() - 1)
    }
}

pub fn parse_tail_csv(text: &str) -> Result<TailSeries> {
    let perr = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"t") || cols.len() < 2 {
        return Err(perr(1, format!("expected header `t,x1,...`, got `{header}`")));
    }
    for (i, c) in cols.iter().enumerate().skip(1) {
        if *c != format!("x{i}") {
            return Err(perr(1, format!("column {i} should be `x{i}`, got `{c}`")));
        }
    }
    let b = cols.len() - 1;
    let mut series = TailSeries { times: Vec::new(), rows: Vec::new() };
    for (i, line) in lines {
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| perr(i + 1, e.to_string()))?;
        if vals.len() != b + 1 {
            return Err(perr(i + 1, format!("expected {} fields, found {}", b + 1, vals.len())));
        }
        if series.times.last().is_some_and(|&t| vals[0] <= t) {
            return Err(perr(i + 1, "times must be strictly increasing".into()));
        }
        series.times.push(vals[0]);
        let mut row = Vec::with_capacity(b + 1);
        row.push(1.0);
        row.extend_from_slice(&vals[1..]);
        series.rows.push(row);
    }
    if series.times.is_empty() {
        return Err(perr(2, "no data rows".into()));
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_row_layout() {
        let text = format_tail_csv(2, &[(0.0, &[1.0, 0.5, 0.25])]);
        assert_eq!(
            text,
            "t,x1,x2\n0.0000000000000000e0,5.0000000000000000e-1,2.5000000000000000e-1\n"
        );
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(parse_tail_csv("").is_err());
        assert!(parse_tail_csv("t,x2\n0,1\n").is_err());
        assert!(parse_tail_csv("t,x1\n0,1,2\n").is_err());
        assert!(parse_tail_csv("t,x1\n1,1\n0,1\n").is_err());
        assert!(parse_tail_csv("t,x1\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trips_exactly(rows in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 4), 1..20)) {
            let times: Vec<f64> = (0..rows.len()).map(|i| i as f64 * 0.1).collect();
            let full: Vec<Vec<f64>> = rows.iter().map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect()).collect();
            let view: Vec<(f64, &[f64])> = times.iter().zip(&full).map(|(&t, r)| (t, r.as_slice())).collect();
            let parsed = parse_tail_csv(&format_tail_csv(4, &view)).unwrap();
            prop_assert_eq!(parsed.times, times);
            prop_assert_eq!(parsed.rows, full);
        }
    }
}
