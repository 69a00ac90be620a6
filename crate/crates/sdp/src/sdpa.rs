//! Reader and writer for the SDPA sparse format (`.dat-s`).
//!
//! Numbers are written with 17 significant digits so that a written problem
//! parses back to exactly the same coefficients.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::SdpError;
use crate::problem::{BlockKind, SdpaProblem};

/// Render a float with 17 significant digits.
pub fn render_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_string(problem: &SdpaProblem) -> Result<String, SdpError> {
    problem.validate()?;
    let mut canon = problem.clone();
    canon.canonicalize();

    let mut out = String::new();
    if let Some(comment) = &canon.comment {
        for line in comment.lines() {
            let _ = writeln!(out, "\"{line}");
        }
    }
    let _ = writeln!(out, "{}", canon.num_vars());
    let _ = writeln!(out, "{}", canon.blocks.len());
    let sizes: Vec<String> = canon
        .blocks
        .iter()
        .map(|b| b.sdpa_size().to_string())
        .collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let costs: Vec<String> = canon.objective.iter().map(|&c| render_f64(c)).collect();
    let _ = writeln!(out, "{}", costs.join(" "));
    for e in &canon.entries {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            e.matrix,
            e.block + 1,
            e.row + 1,
            e.col + 1,
            render_f64(e.value)
        );
    }
    Ok(out)
}

pub fn write<W: Write>(problem: &SdpaProblem, mut writer: W) -> Result<(), SdpError> {
    let text = to_string(problem)?;
    writer.write_all(text.as_bytes())?;
    Ok(())
}

pub fn write_file(problem: &SdpaProblem, path: impl AsRef<Path>) -> Result<(), SdpError> {
    let text = to_string(problem)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_file(path: impl AsRef<Path>) -> Result<SdpaProblem, SdpError> {
    let file = std::fs::File::open(path)?;
    read(file)
}

/// Tokenizer over the numeric content of an SDPA file, tracking line numbers.
struct Tokens {
    items: Vec<(usize, String)>,
    pos: usize,
}

impl Tokens {
    fn next(&mut self, what: &str) -> Result<(usize, &str), SdpError> {
        let last_line = self.items.last().map_or(0, |t| t.0);
        match self.items.get(self.pos) {
            Some((line, tok)) => {
                self.pos += 1;
                Ok((*line, tok.as_str()))
            }
            None => Err(SdpError::Parse {
                line: last_line,
                message: format!("unexpected end of input, expected {what}"),
            }),
        }
    }

    fn next_int(&mut self, what: &str) -> Result<(usize, i64), SdpError> {
        let (line, tok) = self.next(what)?;
        // Some writers emit integers as "1.0".
        let parsed = tok.parse::<i64>().ok().or_else(|| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0)
                .map(|v| v as i64)
        });
        parsed.map(|v| (line, v)).ok_or_else(|| SdpError::Parse {
            line,
            message: format!("expected integer {what}, found {tok:?}"),
        })
    }

    fn next_float(&mut self, what: &str) -> Result<(usize, f64), SdpError> {
        let (line, tok) = self.next(what)?;
        tok.parse::<f64>()
            .map(|v| (line, v))
            .map_err(|_| SdpError::Parse {
                line,
                message: format!("expected number {what}, found {tok:?}"),
            })
    }

    fn line_tokens_remaining(&self, line: usize) -> bool {
        self.items.get(self.pos).is_some_and(|t| t.0 == line)
    }
}

pub fn read<R: Read>(reader: R) -> Result<SdpaProblem, SdpError> {
    let mut comment_lines = Vec::new();
    let mut items = Vec::new();
    let mut in_header = true;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_start();
        if in_header && (trimmed.starts_with('"') || trimmed.starts_with('*')) {
            comment_lines.push(trimmed[1..].to_string());
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        in_header = false;
        for tok in line
            .split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
            .filter(|t| !t.is_empty())
        {
            items.push((idx + 1, tok.to_string()));
        }
    }
    let mut toks = Tokens { items, pos: 0 };

    let (line, m) = toks.next_int("variable count")?;
    if m <= 0 {
        return Err(SdpError::Parse {
            line,
            message: format!("variable count must be positive, got {m}"),
        });
    }
    let (line, nblocks) = toks.next_int("block count")?;
    if nblocks <= 0 {
        return Err(SdpError::Parse {
            line,
            message: format!("block count must be positive, got {nblocks}"),
        });
    }
    let mut blocks = Vec::with_capacity(nblocks as usize);
    for _ in 0..nblocks {
        let (line, s) = toks.next_int("block size")?;
        let kind = match s {
            s if s > 0 => BlockKind::Psd(s as usize),
            s if s < 0 => BlockKind::Diagonal((-s) as usize),
            _ => {
                return Err(SdpError::Parse {
                    line,
                    message: "block size 0".into(),
                })
            }
        };
        blocks.push(kind);
    }
    let mut problem = SdpaProblem::new(m as usize, blocks);
    for c in problem.objective.iter_mut() {
        *c = toks.next_float("objective coefficient")?.1;
    }
    while toks.pos < toks.items.len() {
        let (line, mat) = toks.next_int("matrix index")?;
        let (_, blk) = toks.next_int("block index")?;
        let (_, i) = toks.next_int("row index")?;
        let (_, j) = toks.next_int("column index")?;
        let (_, v) = toks.next_float("entry value")?;
        if toks.line_tokens_remaining(line) {
            return Err(SdpError::Parse {
                line,
                message: "trailing tokens after entry".into(),
            });
        }
        if mat < 0 || mat > m || blk < 1 || blk > nblocks || i < 1 || j < 1 {
            return Err(SdpError::Parse {
                line,
                message: format!("index out of range in entry {mat} {blk} {i} {j}"),
            });
        }
        problem.push(
            mat as usize,
            (blk - 1) as usize,
            (i - 1) as usize,
            (j - 1) as usize,
            v,
        );
    }
    if !comment_lines.is_empty() {
        problem.comment = Some(comment_lines.join("\n"));
    }
    problem.canonicalize();
    problem.validate().map_err(|e| SdpError::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(problem)
}
