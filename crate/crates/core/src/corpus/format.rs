//! Line-oriented `.sig` text format.
//!
//! ```text
//! #sig v1
//! #user 12 sample 3 kind skilled forger 14 rate 100
//! 0 6350 4850 512 1800 600
//! 1 6352 4851 530 1800 600
//! ```

use std::fmt::Write as _;

use super::{Sample, Signature, SignatureError, SignatureKind};

pub const MAGIC: &str = "#sig v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: sample times must be strictly increasing")]
    NonMonotonic { line: usize },
    #[error("line {line}: channel {channel} out of range")]
    OutOfRange { line: usize, channel: &'static str },
    #[error("line {line}: signature needs at least 2 samples, got {count}")]
    TooShort { line: usize, count: usize },
    #[error("line 2: {0}")]
    Header(SignatureError),
}

impl FormatError {
    fn malformed(line: usize, message: impl Into<String>) -> Self {
        FormatError::Malformed {
            line,
            message: message.into(),
        }
    }
}

fn parse_int<T: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<T, FormatError> {
    token
        .parse()
        .map_err(|_| FormatError::malformed(line, format!("invalid {what} '{token}'")))
}

struct Header {
    user_id: u32,
    sample_index: u32,
    kind: SignatureKind,
    forger_id: Option<u32>,
    rate: u32,
}

fn parse_header(text: &str) -> Result<Header, FormatError> {
    const LINE: usize = 2;
    let rest = text
        .strip_prefix('#')
        .ok_or_else(|| FormatError::malformed(LINE, "header must start with '#'"))?;
    let tokens: Vec<&str> = rest.split(' ').collect();
    let keys = ["user", "sample", "kind", "forger", "rate"];
    if tokens.len() != 2 * keys.len() {
        return Err(FormatError::malformed(
            LINE,
            "expected 'user .. sample .. kind .. forger .. rate ..'",
        ));
    }
    for (i, key) in keys.iter().enumerate() {
        if tokens[2 * i] != *key {
            return Err(FormatError::malformed(
                LINE,
                format!("expected key '{key}', found '{}'", tokens[2 * i]),
            ));
        }
    }
    let kind = SignatureKind::from_token(tokens[5])
        .ok_or_else(|| FormatError::malformed(LINE, format!("unknown kind '{}'", tokens[5])))?;
    let forger_id = match tokens[7] {
        "-" => None,
        tok => Some(parse_int(tok, LINE, "forger id")?),
    };
    Ok(Header {
        user_id: parse_int(tokens[1], LINE, "user id")?,
        sample_index: parse_int(tokens[3], LINE, "sample index")?,
        kind,
        forger_id,
        rate: parse_int(tokens[9], LINE, "rate")?,
    })
}

/// Parses a `.sig` byte stream. Errors carry the 1-based line number.
pub fn parse_signature(bytes: &[u8]) -> Result<Signature, FormatError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| FormatError::malformed(1, format!("not UTF-8: {e}")))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l == MAGIC => {}
        Some(l) => {
            return Err(FormatError::malformed(
                1,
                format!("expected '{MAGIC}', found '{l}'"),
            ))
        }
        None => return Err(FormatError::malformed(1, "empty file")),
    }
    let header = parse_header(
        lines
            .next()
            .ok_or_else(|| FormatError::malformed(2, "missing header line"))?,
    )?;

    let mut samples = Vec::new();
    let mut last_line = 2;
    for (offset, row) in lines.enumerate() {
        let line = offset + 3;
        last_line = line;
        let fields: Vec<&str> = row.split(' ').collect();
        if fields.len() != 6 {
            return Err(FormatError::malformed(
                line,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let t: u32 = parse_int(fields[0], line, "t")?;
        let mut vals = [0i32; 5];
        for (v, (tok, name)) in vals
            .iter_mut()
            .zip(fields[1..].iter().zip(["x", "y", "p", "az", "al"]))
        {
            *v = parse_int(tok, line, name)?;
        }
        let sample = Sample {
            t,
            x: vals[0],
            y: vals[1],
            p: vals[2],
            az: vals[3],
            al: vals[4],
        };
        if let Some(channel) = sample.out_of_range_channel() {
            return Err(FormatError::OutOfRange { line, channel });
        }
        if samples
            .last()
            .is_some_and(|prev: &Sample| sample.t <= prev.t)
        {
            return Err(FormatError::NonMonotonic { line });
        }
        samples.push(sample);
    }
    if samples.len() < 2 {
        return Err(FormatError::TooShort {
            line: last_line,
            count: samples.len(),
        });
    }
    Signature::new(
        header.user_id,
        header.sample_index,
        header.kind,
        header.forger_id,
        header.rate,
        samples,
    )
    .map_err(FormatError::Header)
}

/// Canonical serialization; `parse_signature` is its left inverse.
pub fn write_signature(sig: &Signature) -> Vec<u8> {
    let mut out = String::with_capacity(32 * (sig.samples.len() + 2));
    out.push_str(MAGIC);
    out.push('\n');
    let forger = sig
        .forger_id
        .map_or_else(|| "-".to_string(), |f| f.to_string());
    let _ = writeln!(
        out,
        "#user {} sample {} kind {} forger {} rate {}",
        sig.user_id, sig.sample_index, sig.kind, forger, sig.sample_rate_hz
    );
    for s in &sig.samples {
        let _ = writeln!(out, "{} {} {} {} {} {}", s.t, s.x, s.y, s.p, s.az, s.al);
    }
    out.into_bytes()
}
