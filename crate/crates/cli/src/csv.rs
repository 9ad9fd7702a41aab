//! RFC-4180 CSV writing with round-trip-exact float formatting.
//!
//! Reports must be byte-reproducible, so every real is rendered with 17
//! significant digits (enough that `parse(format(x)) == x` for any finite
//! `f64`), lines end with LF, and fields are quoted exactly when RFC 4180
//! requires it.

/// A table of records with a fixed column schema.
pub struct CsvTable {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        CsvTable {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    /// Serialize: header row, then records, LF endings throughout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        append_record(&mut out, &self.columns);
        for row in &self.rows {
            append_record(&mut out, row);
        }
        out.into_bytes()
    }
}

fn append_record(out: &mut String, fields: &[String]) {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&quote_field(f));
    }
    out.push('\n');
}

/// Quote a field when it contains a comma, a quote, or a line break.
fn quote_field(f: &str) -> String {
    if f.contains(',') || f.contains('"') || f.contains('\n') || f.contains('\r') {
        let mut q = String::with_capacity(f.len() + 2);
        q.push('"');
        for c in f.chars() {
            if c == '"' {
                q.push('"');
            }
            q.push(c);
        }
        q.push('"');
        q
    } else {
        f.to_string()
    }
}

/// Fixed 17-significant-digit scientific rendering; round-trip exact for
/// finite doubles. Non-finite values render as `inf`/`-inf`/`nan`.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

/// Render an optional value, empty when absent.
pub fn format_opt_f64(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_when_no_records() {
        let t = CsvTable::new(vec!["a", "b"]);
        assert_eq!(t.to_bytes(), b"a,b\n");
    }

    #[test]
    fn fields_with_commas_and_quotes_are_quoted() {
        let mut t = CsvTable::new(vec!["x"]);
        t.push_row(vec!["a,b".to_string()]);
        t.push_row(vec!["say \"hi\"".to_string()]);
        let s = String::from_utf8(t.to_bytes()).unwrap();
        assert_eq!(s, "x\n\"a,b\"\n\"say \"\"hi\"\"\"\n");
    }

    #[test]
    fn floats_round_trip() {
        for &x in &[
            0.0,
            -0.0,
            1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            -2.2250738585072014e-308,
            12345.6789,
            f64::MAX,
        ] {
            let s = format_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s} -> {back}");
        }
        assert_eq!(format_f64(f64::INFINITY), "inf");
        assert_eq!(format_f64(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_f64(f64::NAN), "nan");
    }
}
