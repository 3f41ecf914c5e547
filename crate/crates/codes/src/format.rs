//! Plain-text code definition files.
//!
//! ```text
//! n=3 rows=2
//! 000110
//! 000011
//! ```
//!
//! Each row line holds `2n` characters `0`/`1`, X-part first.

use crate::code::CheckMatrix;
use crate::error::{CodeError, Result};
use crate::pauli::PauliVector;

pub fn to_text(code: &CheckMatrix) -> String {
    let mut out = format!("n={} rows={}\n", code.n(), code.num_rows());
    for row in code.rows() {
        for b in row.to_bits() {
            out.push(if b == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

/// Parses the generator rows of a definition file without validating them
/// as a code.
pub fn parse_rows(text: &str) -> Result<Vec<PauliVector>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(CodeError::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let (n, count) = parse_header(header).ok_or_else(|| CodeError::Parse {
        line: hline,
        msg: format!("expected `n=<int> rows=<int>`, got {header:?}"),
    })?;
    if n == 0 {
        return Err(CodeError::Parse {
            line: hline,
            msg: "n must be positive".into(),
        });
    }
    let mut rows = Vec::with_capacity(count);
    for (line, l) in lines {
        if l.len() != 2 * n {
            return Err(CodeError::Parse {
                line,
                msg: format!("row has {} characters, expected {}", l.len(), 2 * n),
            });
        }
        let bits = l
            .bytes()
            .map(|c| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                other => Err(CodeError::Parse {
                    line,
                    msg: format!("invalid character {:?}", other as char),
                }),
            })
            .collect::<Result<Vec<u8>>>()?;
        rows.push(PauliVector::from_bits(&bits)?);
    }
    if rows.len() != count {
        return Err(CodeError::Parse {
            line: hline,
            msg: format!("header declares {count} rows, found {}", rows.len()),
        });
    }
    Ok(rows)
}

pub fn from_text(text: &str) -> Result<CheckMatrix> {
    CheckMatrix::new(parse_rows(text)?)
}

fn parse_header(header: &str) -> Option<(usize, usize)> {
    let mut n = None;
    let mut rows = None;
    for field in header.split_whitespace() {
        let (k, v) = field.split_once('=')?;
        match k {
            "n" => n = Some(v.parse().ok()?),
            "rows" => rows = Some(v.parse().ok()?),
            _ => return None,
        }
    }
    Some((n?, rows?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::build_custom;

    #[test]
    fn text_round_trip() {
        let rows = ["ZZI", "IZZ"].map(|s| PauliVector::from_pauli_str(s).unwrap()).to_vec();
        let code = build_custom(rows).unwrap();
        let text = to_text(&code);
        assert_eq!(text, "n=3 rows=2\n000110\n000011\n");
        assert_eq!(from_text(&text).unwrap(), code);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(from_text(""), Err(CodeError::Parse { .. })));
        assert!(matches!(from_text("n=3\n000110\n"), Err(CodeError::Parse { .. })));
        assert!(matches!(from_text("n=3 rows=1\n00011\n"), Err(CodeError::Parse { line: 2, .. })));
        assert!(matches!(from_text("n=3 rows=2\n000110\n"), Err(CodeError::Parse { .. })));
        assert!(matches!(from_text("n=1 rows=1\n1x\n"), Err(CodeError::Parse { .. })));
    }
}
