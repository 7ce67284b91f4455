//! Line-oriented input formats for frame specs and cohomology models.
//!
//! See `FORMATS.md` at the crate root for the grammar and full examples.

use std::path::Path;

use akscal_core::lie::{LieError, LieFrameSpec};
use akscal_core::scalar::parse_rational;
use akscal_core::zbound::{CohomologyModel, SymplecticClass, ZError};
use akscal_core::Rational;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("input is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `{0}` line")]
    Missing(&'static str),
    #[error("both {0} given")]
    Conflict(&'static str),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Model(#[from] ZError),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, message: message.into() }
}

/// Non-empty, comment-stripped lines with 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then(|| (i + 1, body.split_whitespace().collect()))
    })
}

fn number(line: usize, tok: &str) -> Result<f64, FormatError> {
    if let Some(r) = parse_rational(tok) {
        return Ok(*r.numer() as f64 / *r.denom() as f64);
    }
    tok.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| syntax(line, format!("not a number: `{tok}`")))
}

fn integer(line: usize, tok: &str) -> Result<i64, FormatError> {
    tok.parse().map_err(|_| syntax(line, format!("not an integer: `{tok}`")))
}

fn index(line: usize, tok: &str, dim: usize) -> Result<usize, FormatError> {
    let i: usize = tok.parse().map_err(|_| syntax(line, format!("not an index: `{tok}`")))?;
    if i == 0 || i > dim {
        return Err(syntax(line, format!("index {i} outside 1..={dim}")));
    }
    Ok(i - 1)
}

/// A parsed frame spec: always available in floating point, and exactly when
/// every number is a rational literal.
#[derive(Debug, Clone)]
pub struct SpecFile {
    pub float: LieFrameSpec<f64>,
    pub exact: Option<LieFrameSpec<Rational>>,
}

pub fn parse_spec(text: &str) -> Result<SpecFile, FormatError> {
    let mut name = None;
    let mut dim = None;
    let mut brackets: Vec<(usize, [String; 3], String)> = Vec::new();
    let mut j_rows: Vec<(usize, Vec<String>)> = Vec::new();
    let mut volumes = Vec::new();
    let mut any = false;
    for (ln, toks) in lines(text) {
        any = true;
        match toks[0] {
            "name" => name = Some(toks[1..].join(" ")),
            "dim" => {
                let [_, d] = toks[..] else { return Err(syntax(ln, "expected `dim <n>`")) };
                dim = Some(d.parse::<usize>().map_err(|_| syntax(ln, "dimension must be a positive integer"))?);
            }
            "c" => {
                let [_, i, j, k, v] = toks[..] else { return Err(syntax(ln, "expected `c <i> <j> <k> <value>`")) };
                brackets.push((ln, [i.into(), j.into(), k.into()], v.into()));
            }
            "J" => j_rows.push((ln, toks[1..].iter().map(|s| s.to_string()).collect())),
            "volume" => {
                let [_, v] = toks[..] else { return Err(syntax(ln, "expected `volume <value>`")) };
                volumes.push(number(ln, v)?);
            }
            other => return Err(syntax(ln, format!("unknown keyword `{other}`"))),
        }
    }
    if !any {
        return Err(FormatError::Empty);
    }
    let dim = dim.ok_or(FormatError::Missing("dim"))?;
    let name = name.unwrap_or_else(|| "unnamed".to_string());
    if j_rows.len() != dim {
        return Err(FormatError::Missing("J (one row per frame vector)"));
    }
    let mut idx = Vec::with_capacity(brackets.len());
    for (ln, ijk, _) in &brackets {
        idx.push((index(*ln, &ijk[0], dim)?, index(*ln, &ijk[1], dim)?, index(*ln, &ijk[2], dim)?));
    }
    let mut j_text = Vec::with_capacity(dim * dim);
    for (ln, row) in &j_rows {
        if row.len() != dim {
            return Err(syntax(*ln, format!("J row needs {dim} entries")));
        }
        j_text.extend(row.iter().map(|s| (*ln, s.as_str())));
    }

    let float_brackets: Vec<(usize, usize, usize, f64)> = brackets
        .iter()
        .zip(&idx)
        .map(|((ln, _, v), &(i, j, k))| Ok((i, j, k, number(*ln, v)?)))
        .collect::<Result<_, FormatError>>()?;
    let float_j: Vec<f64> = j_text.iter().map(|&(ln, s)| number(ln, s)).collect::<Result<_, _>>()?;
    let float = LieFrameSpec::from_brackets(name.clone(), dim, &float_brackets, float_j, volumes.clone())?;

    let exact_brackets: Option<Vec<(usize, usize, usize, Rational)>> =
        brackets.iter().zip(&idx).map(|((_, _, v), &(i, j, k))| Some((i, j, k, parse_rational(v)?))).collect();
    let exact_j: Option<Vec<Rational>> = j_text.iter().map(|&(_, s)| parse_rational(s)).collect();
    let exact = match (exact_brackets, exact_j) {
        (Some(b), Some(j)) => Some(LieFrameSpec::from_brackets(name, dim, &b, j, volumes)?),
        _ => None,
    };
    Ok(SpecFile { float, exact })
}

/// A cohomology model together with the optional seed class stored in the file.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: CohomologyModel,
    pub seed: Option<SymplecticClass>,
}

pub fn parse_model(text: &str) -> Result<ModelFile, FormatError> {
    let mut name = None;
    let mut rank = None;
    let mut q_rows: Vec<(usize, Vec<i64>)> = Vec::new();
    let mut q_diag: Option<Vec<i64>> = None;
    let mut c1 = None;
    let mut fiber = None;
    let mut chi = None;
    let mut tau = None;
    let mut n = None;
    let mut seed: Option<(usize, Vec<f64>)> = None;
    let mut any = false;
    for (ln, toks) in lines(text) {
        any = true;
        let ints = |toks: &[&str]| toks.iter().map(|t| integer(ln, t)).collect::<Result<Vec<_>, _>>();
        let one = |toks: &[&str]| match toks {
            [_, v] => integer(ln, v),
            _ => Err(syntax(ln, format!("expected `{} <integer>`", toks[0]))),
        };
        match toks[0] {
            "name" => name = Some(toks[1..].join(" ")),
            "rank" => rank = Some(one(&toks)?),
            "Q" => q_rows.push((ln, ints(&toks[1..])?)),
            "Qdiag" => q_diag = Some(ints(&toks[1..])?),
            "c1" => c1 = Some(ints(&toks[1..])?),
            "fiber" => fiber = Some(one(&toks)?),
            "chi" => chi = Some(one(&toks)?),
            "tau" => tau = Some(one(&toks)?),
            "n" => n = Some(one(&toks)?),
            "seed" => seed = Some((ln, toks[1..].iter().map(|t| number(ln, t)).collect::<Result<_, _>>()?)),
            other => return Err(syntax(ln, format!("unknown keyword `{other}`"))),
        }
    }
    if !any {
        return Err(FormatError::Empty);
    }
    let rank = rank.ok_or(FormatError::Missing("rank"))?;
    if rank <= 0 {
        return Err(FormatError::Model(ZError::BadForm { rank: 0 }));
    }
    let rank = rank as usize;
    let q = match (q_diag, q_rows.is_empty()) {
        (Some(d), true) => {
            if d.len() != rank {
                return Err(FormatError::Missing("Qdiag with one entry per basis class"));
            }
            let mut q = vec![0; rank * rank];
            for (i, v) in d.into_iter().enumerate() {
                q[i * rank + i] = v;
            }
            q
        }
        (None, false) => {
            if q_rows.len() != rank {
                return Err(FormatError::Missing("Q (one row per basis class)"));
            }
            let mut q = Vec::with_capacity(rank * rank);
            for (ln, row) in q_rows {
                if row.len() != rank {
                    return Err(syntax(ln, format!("Q row needs {rank} entries")));
                }
                q.extend(row);
            }
            q
        }
        (Some(_), false) => return Err(FormatError::Conflict("`Q` rows and `Qdiag`")),
        (None, true) => return Err(FormatError::Missing("Q or Qdiag")),
    };
    let n = n.unwrap_or(2);
    if !(n == 2 || n == 3) {
        return Err(FormatError::Model(ZError::BadHalfDimension(n.max(0) as usize)));
    }
    let model = CohomologyModel::new(
        name.unwrap_or_else(|| "unnamed".to_string()),
        rank,
        q,
        c1.ok_or(FormatError::Missing("c1"))?,
        fiber,
        chi.ok_or(FormatError::Missing("chi"))?,
        tau.ok_or(FormatError::Missing("tau"))?,
        n as usize,
    )?;
    let seed = match seed {
        None => None,
        Some((ln, v)) => {
            let has_fiber = model.n() == 3;
            let expected = rank + usize::from(has_fiber);
            if v.len() != expected {
                return Err(syntax(ln, format!("seed needs {expected} numbers")));
            }
            Some(if has_fiber {
                SymplecticClass::product(v[..rank].to_vec(), v[rank])
            } else {
                SymplecticClass::four(v)
            })
        }
    };
    Ok(ModelFile { model, seed })
}

pub fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn load_spec(path: &Path) -> Result<SpecFile, FormatError> {
    parse_spec(&read(path)?)
}

pub fn load_model(path: &Path) -> Result<ModelFile, FormatError> {
    parse_model(&read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const KT: &str = include_str!("../data/kt.spec");
    const BARLOW: &str = include_str!("../data/barlow.model");

    #[test]
    fn shipped_kt_spec_matches_catalog() {
        let spec = parse_spec(KT).unwrap();
        let catalog = akscal_core::lie::kodaira_thurston::<Rational>(1.0).unwrap();
        let exact = spec.exact.unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(exact.j(i, j), catalog.j(i, j));
                for k in 0..4 {
                    assert_eq!(exact.c(i, j, k), catalog.c(i, j, k));
                }
            }
        }
        assert_eq!(exact.total_volume().unwrap(), 1.0);
    }

    #[test]
    fn decimals_stay_exact_and_scientific_falls_back() {
        let text = KT.replace("c 1 2 3 1", "c 1 2 3 0.5");
        assert!(parse_spec(&text).unwrap().exact.is_some());
        let text = KT.replace("c 1 2 3 1", "c 1 2 3 5e-1");
        let spec = parse_spec(&text).unwrap();
        assert!(spec.exact.is_none());
        assert_eq!(spec.float.c(0, 1, 2), 0.5);
    }

    #[test]
    fn spec_errors() {
        assert!(matches!(parse_spec(""), Err(FormatError::Empty)));
        assert!(matches!(parse_spec("# only a comment\n"), Err(FormatError::Empty)));
        assert!(matches!(parse_spec("dim 4\nfoo 1"), Err(FormatError::Syntax { line: 2, .. })));
        assert!(matches!(parse_spec(&KT.replace("c 1 2 3 1", "c 1 2 5 1")), Err(FormatError::Syntax { .. })));
        assert!(matches!(parse_spec(&KT.replace("J 0 1 0 0", "J 0 2 0 0")), Err(FormatError::Lie(_))));
    }

    #[test]
    fn shipped_barlow_matches_preset() {
        let file = parse_model(BARLOW).unwrap();
        let preset = CohomologyModel::barlow();
        assert_eq!(file.model.rank(), preset.rank());
        assert_eq!(file.model.c1(), preset.c1());
        assert_eq!(file.model.fiber_chern(), preset.fiber_chern());
        assert_eq!(file.seed.unwrap(), preset.default_seed().unwrap());
    }

    #[test]
    fn model_errors() {
        assert!(matches!(parse_model(""), Err(FormatError::Empty)));
        assert!(matches!(parse_model("rank 1\nQdiag 0\nc1 3\nchi 3\ntau 1"), Err(FormatError::Model(ZError::DegenerateForm))));
        assert!(matches!(parse_model("rank 1\nQdiag 1\nc1 3\nchi 3"), Err(FormatError::Missing("tau"))));
        assert!(matches!(parse_model("rank 1\nQdiag 1\nc1 3\nchi 3\ntau 1\nseed 1 2"), Err(FormatError::Syntax { line: 6, .. })));
        let full = parse_model("rank 2\nQ 0 1\nQ 1 0\nc1 0 0\nchi 0\ntau 0").unwrap();
        assert_eq!(full.model.q(0, 1), 1);
    }
}
