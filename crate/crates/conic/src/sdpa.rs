//! Sparse SDPA text format (`.dat-s`).
//!
//! SDPA describes the pair
//!
//! ```text
//! (P) min  Σ cᵢ xᵢ   s.t. Σ Fᵢ xᵢ − F₀ ⪰ 0
//! (D) max  <F₀, Y>   s.t. <Fᵢ, Y> = cᵢ,  Y ⪰ 0
//! ```
//!
//! A [`ConicProgram`] is written as the dual side: `Fᵢ` are the equality
//! matrices, the SDPA `c` vector holds the right-hand sides and `F₀ = −C`.
//! An SDPA solver therefore reports the negated objective of the program.
//! Negative block sizes denote diagonal (nonnegative) blocks. Entries are
//! `matno blkno i j value` with 1-based `i <= j`; values are printed with 17
//! significant digits.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use thiserror::Error;

use crate::program::{Block, Cone, ConicProgram, ProgramError, SparseRow};

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `program` in sparse SDPA format.
pub fn export_standard_form(program: &ConicProgram) -> String {
    let mut out = String::new();
    let labels: Vec<&str> = program.blocks().iter().map(|b| b.label.as_str()).collect();
    let _ = writeln!(out, "* blocks: {}", labels.join(" "));
    let _ = writeln!(out, "{}", program.num_constraints());
    let _ = writeln!(out, "{}", program.blocks().len());
    let sizes: Vec<String> = program
        .blocks()
        .iter()
        .map(|b| match b.cone {
            Cone::Psd(s) => s.to_string(),
            Cone::Nonneg(f) => format!("-{f}"),
        })
        .collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let rhs: Vec<String> = program.rhs().iter().map(|&v| fmt_f64(v)).collect();
    let _ = writeln!(out, "{}", rhs.join(" "));

    let emit = |out: &mut String, matno: usize, col: usize, coef: f64| {
        let (b, i, j) = program.locate(col);
        let value = if i == j { coef } else { coef / SQRT_2 };
        let _ = writeln!(out, "{} {} {} {} {}", matno, b + 1, i + 1, j + 1, fmt_f64(value));
    };
    for (col, &c) in program.cost().iter().enumerate() {
        if c != 0.0 {
            emit(&mut out, 0, col, -c);
        }
    }
    for (r, row) in program.rows().iter().enumerate() {
        for &(col, a) in &row.entries {
            emit(&mut out, r + 1, col, a);
        }
    }
    out
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: unexpected end of input, expected {expected}")]
    UnexpectedEof { line: usize, expected: &'static str },
    #[error("line {line}: invalid {what} '{token}'")]
    InvalidNumber {
        line: usize,
        what: &'static str,
        token: String,
    },
    #[error("line {line}: expected {expected} values, found {found}")]
    WrongCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("assembled program is invalid: {0}")]
    Program(#[from] ProgramError),
}

fn header_tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || "{}(),".contains(c))
        .filter(|t| !t.is_empty())
        .collect()
}

/// Parses a sparse SDPA document into a [`ConicProgram`].
pub fn parse_standard_form(text: &str) -> Result<ConicProgram, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .skip_while(|(_, l)| l.starts_with('*') || l.starts_with('"'))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let mut next_line = |expected: &'static str| -> Result<(usize, &str), ParseError> {
        lines.next().ok_or(ParseError::UnexpectedEof {
            line: text.lines().count(),
            expected,
        })
    };

    let parse_usize = |line: usize, tok: &str, what: &'static str| -> Result<i64, ParseError> {
        tok.parse::<i64>().map_err(|_| ParseError::InvalidNumber {
            line,
            what,
            token: tok.to_string(),
        })
    };
    let parse_f64 = |line: usize, tok: &str| -> Result<f64, ParseError> {
        tok.replace(['d', 'D'], "e")
            .parse::<f64>()
            .map_err(|_| ParseError::InvalidNumber {
                line,
                what: "number",
                token: tok.to_string(),
            })
    };

    let (ln, l) = next_line("number of constraints")?;
    let toks = header_tokens(l);
    let m = parse_usize(ln, toks.first().copied().unwrap_or(""), "constraint count")?;
    if m < 0 {
        return Err(ParseError::Invalid {
            line: ln,
            message: "negative constraint count".into(),
        });
    }
    let m = m as usize;

    let (ln, l) = next_line("number of blocks")?;
    let toks = header_tokens(l);
    let nblocks = parse_usize(ln, toks.first().copied().unwrap_or(""), "block count")?;
    if nblocks <= 0 {
        return Err(ParseError::Invalid {
            line: ln,
            message: "block count must be positive".into(),
        });
    }
    let nblocks = nblocks as usize;

    let (ln, l) = next_line("block structure")?;
    let toks = header_tokens(l);
    if toks.len() < nblocks {
        return Err(ParseError::WrongCount {
            line: ln,
            expected: nblocks,
            found: toks.len(),
        });
    }
    let mut blocks = Vec::with_capacity(nblocks);
    for (k, tok) in toks.iter().take(nblocks).enumerate() {
        let s = parse_usize(ln, tok, "block size")?;
        let cone = match s {
            0 => {
                return Err(ParseError::Invalid {
                    line: ln,
                    message: format!("block {} has size 0", k + 1),
                })
            }
            s if s > 0 => Cone::Psd(s as usize),
            s => Cone::Nonneg((-s) as usize),
        };
        blocks.push(Block {
            cone,
            label: format!("block{}", k + 1),
        });
    }

    // The right-hand side may span several lines.
    let mut rhs = Vec::with_capacity(m);
    while rhs.len() < m {
        let (ln, l) = next_line("right-hand side")?;
        for tok in header_tokens(l) {
            if rhs.len() == m {
                return Err(ParseError::WrongCount {
                    line: ln,
                    expected: m,
                    found: rhs.len() + 1,
                });
            }
            rhs.push(parse_f64(ln, tok)?);
        }
    }
    // An empty right-hand-side line is allowed when m = 0.

    let mut offsets = Vec::with_capacity(nblocks);
    let mut dim = 0;
    for b in &blocks {
        offsets.push(dim);
        dim += b.cone.dim();
    }
    let mut cost = vec![0.0; dim];
    let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); m];
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(ParseError::WrongCount {
                line: ln,
                expected: 5,
                found: toks.len(),
            });
        }
        let matno = parse_usize(ln, toks[0], "matrix number")?;
        let blkno = parse_usize(ln, toks[1], "block number")?;
        let i = parse_usize(ln, toks[2], "row index")?;
        let j = parse_usize(ln, toks[3], "column index")?;
        let v = parse_f64(ln, toks[4])?;
        if matno < 0 || matno as usize > m {
            return Err(ParseError::Invalid {
                line: ln,
                message: format!("matrix number {matno} outside 0..={m}"),
            });
        }
        if blkno < 1 || blkno as usize > nblocks {
            return Err(ParseError::Invalid {
                line: ln,
                message: format!("block number {blkno} outside 1..={nblocks}"),
            });
        }
        let b = blkno as usize - 1;
        let cone = blocks[b].cone;
        let order = cone.order() as i64;
        if i < 1 || j < 1 || i > order || j > order {
            return Err(ParseError::Invalid {
                line: ln,
                message: format!("entry ({i}, {j}) outside block {blkno} of order {order}"),
            });
        }
        let (i, j) = (i as usize - 1, j as usize - 1);
        let (col, coef) = match cone {
            Cone::Psd(_) => {
                let col = offsets[b] + crate::program::svec_offset(i, j);
                (col, if i == j { v } else { v * SQRT_2 })
            }
            Cone::Nonneg(_) => {
                if i != j {
                    return Err(ParseError::Invalid {
                        line: ln,
                        message: "off-diagonal entry in a diagonal block".into(),
                    });
                }
                (offsets[b] + i, v)
            }
        };
        if matno == 0 {
            cost[col] -= coef;
        } else {
            *rows[matno as usize - 1].entry(col).or_insert(0.0) += coef;
        }
    }
    let rows = rows
        .into_iter()
        .map(|r| SparseRow {
            entries: r.into_iter().collect(),
        })
        .collect();
    Ok(ConicProgram::new(blocks, cost, rows, rhs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::ProgramBuilder;

    fn trivial() -> ConicProgram {
        let mut pb = ProgramBuilder::new();
        let b = pb.add_block(Cone::Psd(1), "x");
        pb.add_cost(b, 0, 0, 1.0);
        pb.build().unwrap()
    }

    #[test]
    fn trivial_program_has_four_header_sections() {
        let doc = export_standard_form(&trivial());
        let lines: Vec<&str> = doc.lines().filter(|l| !l.starts_with('*')).collect();
        assert_eq!(lines[0], "0");
        assert_eq!(lines[1], "1");
        assert_eq!(lines[2], "1");
        assert_eq!(lines[3], "");
        assert_eq!(lines[4], "0 1 1 1 -1.0000000000000000e0");
        assert_eq!(lines.len(), 5);
        assert_eq!(parse_standard_form(&doc).unwrap().cost(), &[1.0]);
    }

    #[test]
    fn reports_line_numbers() {
        let doc = "1\n1\n2\n1.0\n1 1 1 x 1.0\n";
        match parse_standard_form(doc) {
            Err(ParseError::InvalidNumber { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        let doc = "1\n1\n2\n1.0\n1 1 3 1 1.0\n";
        assert!(matches!(
            parse_standard_form(doc),
            Err(ParseError::Invalid { line: 5, .. })
        ));
        assert!(matches!(
            parse_standard_form("1\n"),
            Err(ParseError::UnexpectedEof { .. })
        ));
    }

    #[test]
    fn accepts_punctuated_headers_and_diagonal_blocks() {
        let doc = "\"comment\n1 =mdim\n2 =nblocks\n{2, -2}\n{1.0}\n0 1 1 1 -1\n0 2 2 2 -3\n1 1 1 1 1\n1 2 1 1 1\n1 1 1 2 0.5\n";
        let p = parse_standard_form(doc).unwrap();
        assert_eq!(p.blocks()[0].cone, Cone::Psd(2));
        assert_eq!(p.blocks()[1].cone, Cone::Nonneg(2));
        assert_eq!(p.dim(), 5);
        // off-diagonal 0.5 in matrix terms -> sqrt(2)/2 in svec terms
        let x = [0.0, 1.0, 0.0, 0.0, 0.0];
        assert!((p.rows()[0].dot(&x) - 0.5 * SQRT_2).abs() < 1e-15);
        assert_eq!(p.cost()[3], 0.0);
        assert_eq!(p.cost()[4], 3.0);
    }
}
