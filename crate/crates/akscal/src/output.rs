//! CSV tables and number formatting.

use std::io::Write;
use std::path::{Path, PathBuf};

use akscal_core::Rational;

/// 17 significant digits, with `-0` folded into `0` and non-finite values spelled out.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else if v == 0.0 {
        format!("{:.16e}", 0.0)
    } else {
        format!("{v:.16e}")
    }
}

/// Values that can appear in a curvature table.
pub trait CsvValue {
    fn csv(&self) -> String;
}

impl CsvValue for f64 {
    fn csv(&self) -> String {
        fmt_f64(*self)
    }
}

impl CsvValue for Rational {
    fn csv(&self) -> String {
        self.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.header.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("tables are UTF-8")
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.to_csv_string())
    }
}

/// Where a table goes: an explicit file, `<dir>/<name>.csv`, or stdout.
pub fn destination(table: &Table, explicit: Option<&Path>, out_dir: Option<&Path>) -> Option<PathBuf> {
    match (explicit, out_dir) {
        (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(dir)) => Some(dir.join(format!("{}.csv", table.name))),
        (None, None) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formats() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(-0.0), fmt_f64(0.0));
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(Rational::new(-3, 4).csv(), "-3/4");
        assert_eq!(Rational::new(4, 2).csv(), "2");
    }

    #[test]
    fn tables_round_trip_through_csv() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(["x,y", "1"]);
        let s = t.to_csv_string();
        assert_eq!(s, "a,b\n\"x,y\",1\n");
        assert_eq!(destination(&t, None, Some(Path::new("o"))), Some(PathBuf::from("o/t.csv")));
        assert_eq!(destination(&t, Some(Path::new("f.csv")), Some(Path::new("o"))), Some(PathBuf::from("o/f.csv")));
        assert_eq!(destination(&t, None, None), None);
    }
}
