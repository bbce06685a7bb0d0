//! Plain-text curve files: one directive per line.
//!
//! ```text
//! # comment
//! p 7
//! n 1
//! modulus 0 1          # optional, ascending coefficients, monic implied
//! term 1 0 1           # term i j c_0 ... c_{n-1}
//! term -1 0 1
//! ```

use crate::arith::{FieldSpec, FqElement};
use crate::error::{Error, Result};
use crate::laurent::LaurentPolynomial;
use crate::polytope::pt;

#[derive(Debug, Clone)]
pub struct CurveFile {
    pub field: FieldSpec,
    pub f: LaurentPolynomial<FieldSpec>,
}

pub fn parse_curve(text: &str) -> Result<CurveFile> {
    let mut p: Option<u64> = None;
    let mut n: Option<usize> = None;
    let mut modulus: Option<Vec<u64>> = None;
    let mut terms: Vec<(i64, i64, Vec<u64>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap();
        let rest: Vec<&str> = parts.collect();
        let parse_err = |msg: &str| Error::Parse {
            line: line_no,
            msg: msg.to_string(),
        };
        match head {
            "p" => {
                let v: u64 = rest
                    .first()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| parse_err("expected `p <prime>`"))?;
                p = Some(v);
            }
            "n" => {
                let v: usize = rest
                    .first()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| parse_err("expected `n <degree>`"))?;
                if v == 0 {
                    return Err(parse_err("n must be at least 1"));
                }
                n = Some(v);
            }
            "modulus" => {
                let coeffs: Option<Vec<u64>> = rest.iter().map(|s| s.parse().ok()).collect();
                modulus = Some(coeffs.ok_or_else(|| parse_err("bad modulus coefficients"))?);
            }
            "term" => {
                if rest.len() < 3 {
                    return Err(parse_err("expected `term i j c_0 ...`"));
                }
                let i: i64 = rest[0]
                    .parse()
                    .map_err(|_| parse_err("bad x-exponent"))?;
                let j: i64 = rest[1]
                    .parse()
                    .map_err(|_| parse_err("bad y-exponent"))?;
                let coeffs: Option<Vec<u64>> =
                    rest[2..].iter().map(|s| s.parse().ok()).collect();
                terms.push((i, j, coeffs.ok_or_else(|| parse_err("bad coefficient"))?));
            }
            other => {
                return Err(parse_err(&format!("unknown directive `{other}`")));
            }
        }
    }
    let p = p.ok_or(Error::Parse {
        line: 0,
        msg: "missing `p` directive".into(),
    })?;
    let n = n.unwrap_or(1);
    let field = match modulus {
        Some(mut coeffs) => {
            // monic implied: accept either n or n+1 coefficients
            if coeffs.len() == n {
                coeffs.push(1);
            }
            if coeffs.len() != n + 1 {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("modulus needs {n} coefficients (monic implied)"),
                });
            }
            FieldSpec::new(p, n, coeffs)?
        }
        None => FieldSpec::with_default_modulus(p, n)?,
    };
    let mut f = LaurentPolynomial::zero();
    for (i, j, coeffs) in terms {
        if f.get(pt(i, j)).is_some() {
            return Err(Error::DuplicateTerm { i, j });
        }
        if coeffs.len() != n {
            return Err(Error::Parse {
                line: 0,
                msg: format!("term ({i}, {j}) needs {n} coefficients"),
            });
        }
        let c: FqElement = coeffs.iter().map(|&c| c % field.p).collect();
        if !field.is_zero(&c) {
            f.insert_add(&field, pt(i, j), c);
        }
    }
    if f.is_zero() {
        return Err(Error::Parse {
            line: 0,
            msg: "curve polynomial is zero".into(),
        });
    }
    Ok(CurveFile { field, f })
}

/// Emits the canonical file form; parsing it back gives the same curve.
pub fn emit_curve(curve: &CurveFile) -> String {
    let mut out = String::new();
    out.push_str(&format!("p {}\n", curve.field.p));
    out.push_str(&format!("n {}\n", curve.field.n));
    if curve.field.n > 1 {
        let coeffs: Vec<String> = curve.field.rbar[..curve.field.n]
            .iter()
            .map(|c| c.to_string())
            .collect();
        out.push_str(&format!("modulus {}\n", coeffs.join(" ")));
    }
    for (q, c) in curve.f.iter() {
        let digits: Vec<String> = c.iter().map(|d| d.to_string()).collect();
        out.push_str(&format!("term {} {} {}\n", q.x, q.y, digits.join(" ")));
    }
    out
}
