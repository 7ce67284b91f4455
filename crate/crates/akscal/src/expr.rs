//! Functions on the circle given either as an expression in `x` or as a
//! CSV of samples.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("cannot parse expression `{text}`: {message}")]
    Expression { text: String, message: String },
    #[error("{path}: {message}")]
    Samples { path: String, message: String },
}

/// A real function of one variable, periodic with the given period.
pub struct Signal {
    label: String,
    eval: Box<dyn Fn(f64) -> f64>,
}

impl std::fmt::Debug for Signal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Signal").field("label", &self.label).finish()
    }
}

impl Signal {
    /// Reads `source` as a sample file when a file of that name exists, and
    /// as an expression otherwise.
    pub fn parse(source: &str, period: f64) -> Result<Self, SignalError> {
        let path = Path::new(source);
        if path.is_file() {
            Self::from_csv(path, period)
        } else {
            Self::expression(source)
        }
    }

    pub fn expression(text: &str) -> Result<Self, SignalError> {
        let err = |message: String| SignalError::Expression { text: text.to_string(), message };
        let expr: meval::Expr = text.parse().map_err(|e: meval::Error| err(e.to_string()))?;
        let f = expr.bind("x").map_err(|e| err(e.to_string()))?;
        Ok(Self { label: text.to_string(), eval: Box::new(f) })
    }

    /// One column of values on an equispaced grid of `[0, period)`, or two
    /// columns `x, value`. A non-numeric first row is taken as a header.
    pub fn from_csv(path: &Path, period: f64) -> Result<Self, SignalError> {
        let err = |message: String| SignalError::Samples { path: path.display().to_string(), message };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| err(e.to_string()))?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => rows.push(v),
                _ if i == 0 => continue,
                _ => return Err(err(format!("row {} is not numeric", i + 1))),
            }
        }
        if rows.is_empty() {
            return Err(err("no samples".into()));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) || width > 2 {
            return Err(err("expected one or two columns in every row".into()));
        }
        let mut pts: Vec<(f64, f64)> = if width == 1 {
            let n = rows.len() as f64;
            rows.iter().enumerate().map(|(k, r)| (period * k as f64 / n, r[0])).collect()
        } else {
            rows.iter().map(|r| (r[0].rem_euclid(period), r[1])).collect()
        };
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(err("duplicate sample positions".into()));
        }
        let label = path.display().to_string();
        Ok(Self { label, eval: Box::new(move |x| interpolate(&pts, period, x)) })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }
}

/// Periodic piecewise-linear interpolation through sorted samples.
fn interpolate(pts: &[(f64, f64)], period: f64, x: f64) -> f64 {
    let x = x.rem_euclid(period);
    let k = pts.partition_point(|p| p.0 <= x);
    let (a, b) = match k {
        0 => ((pts[pts.len() - 1].0 - period, pts[pts.len() - 1].1), pts[0]),
        k if k == pts.len() => (pts[k - 1], (pts[0].0 + period, pts[0].1)),
        k => (pts[k - 1], pts[k]),
    };
    if b.0 == a.0 {
        return a.1;
    }
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use std::io::Write;

    #[test]
    fn expressions() {
        let f = Signal::expression("sin(x) + 2*cos(3*x)").unwrap();
        assert!((f.eval(0.4) - (0.4f64.sin() + 2.0 * (1.2f64).cos())).abs() < 1e-15);
        assert!(Signal::expression("0").unwrap().eval(3.0) == 0.0);
        assert!(Signal::expression("sin(").is_err());
        assert!(Signal::expression("y + 1").is_err());
    }

    #[test]
    fn sample_files_interpolate_periodically() {
        let dir = tempfile::tempdir().unwrap();
        let one = dir.path().join("one.csv");
        writeln!(std::fs::File::create(&one).unwrap(), "value\n0\n1\n0\n-1").unwrap();
        let f = Signal::from_csv(&one, 2.0 * PI).unwrap();
        assert!((f.eval(PI / 4.0) - 0.5).abs() < 1e-15);
        assert!((f.eval(2.0 * PI - PI / 4.0) + 0.5).abs() < 1e-15);
        assert!((f.eval(-PI / 4.0) + 0.5).abs() < 1e-15);

        let two = dir.path().join("two.csv");
        writeln!(std::fs::File::create(&two).unwrap(), "1,2\n0,0").unwrap();
        let g = Signal::from_csv(&two, 2.0).unwrap();
        assert!((g.eval(0.5) - 1.0).abs() < 1e-15);
        assert!((g.eval(1.5) - 1.0).abs() < 1e-15);

        let bad = dir.path().join("bad.csv");
        writeln!(std::fs::File::create(&bad).unwrap(), "a\n1\nx").unwrap();
        assert!(Signal::from_csv(&bad, 1.0).is_err());
        assert!(Signal::parse(bad.to_str().unwrap(), 1.0).is_err());
    }
}
