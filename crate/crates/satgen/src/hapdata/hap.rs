//! HAP text format:
//!
//! ```text
//! HAP <S> <M>
//! id1<TAB>id2<TAB>...<TAB>idM
//! site_id<TAB>tok1<TAB>...<TAB>tokM     (S such lines)
//! ```
//!
//! UTF-8, LF line endings, tokens and identifiers matching
//! `[A-Za-z0-9_.*-]+`. Writing then parsing is the identity.

use super::{valid_token, AlleleMatrix};
use crate::error::{Error, Result};

pub fn parse(text: &str) -> Result<AlleleMatrix> {
    let mut lines = text.lines().enumerate();

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty input"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != "HAP" {
        return Err(Error::parse(line_no + 1, "expected header `HAP <S> <M>`"));
    }
    let s: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(line_no + 1, "bad site count"))?;
    let m: usize = fields[2]
        .parse()
        .map_err(|_| Error::parse(line_no + 1, "bad sample count"))?;
    if s == 0 || m == 0 {
        return Err(Error::parse(line_no + 1, "counts must be at least 1"));
    }

    let (line_no, id_line) = lines
        .next()
        .ok_or_else(|| Error::parse(2, "missing sample id line"))?;
    let sample_ids: Vec<String> = id_line.split('\t').map(str::to_string).collect();
    if sample_ids.len() != m {
        return Err(Error::parse(
            line_no + 1,
            format!("expected {m} sample ids, found {}", sample_ids.len()),
        ));
    }
    for id in &sample_ids {
        if !valid_token(id) {
            return Err(Error::parse(line_no + 1, format!("invalid sample id `{id}`")));
        }
    }

    let mut site_ids = Vec::with_capacity(s);
    let mut rows: Vec<Vec<&str>> = Vec::with_capacity(s);
    for _ in 0..s {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(s + 2, "missing site rows"))?;
        let mut fields = line.split('\t');
        let site_id = fields.next().unwrap_or("");
        if !valid_token(site_id) {
            return Err(Error::parse(
                line_no + 1,
                format!("invalid site id `{site_id}`"),
            ));
        }
        let tokens: Vec<&str> = fields.collect();
        if tokens.len() != m {
            return Err(Error::parse(
                line_no + 1,
                format!("ragged row: expected {m} tokens, found {}", tokens.len()),
            ));
        }
        for tok in &tokens {
            if !valid_token(tok) {
                return Err(Error::parse(line_no + 1, format!("invalid token `{tok}`")));
            }
        }
        site_ids.push(site_id.to_string());
        rows.push(tokens);
    }
    if let Some((line_no, extra)) = lines.next() {
        if !extra.is_empty() {
            return Err(Error::parse(line_no + 1, "trailing content after site rows"));
        }
    }

    AlleleMatrix::from_rows(site_ids, sample_ids, &rows)
}

pub fn write(matrix: &AlleleMatrix) -> String {
    let mut out = String::new();
    out.push_str(&format!("HAP {} {}\n", matrix.sites(), matrix.samples()));
    out.push_str(&matrix.sample_ids().join("\t"));
    out.push('\n');
    for j in 0..matrix.sites() {
        out.push_str(&matrix.site_ids()[j]);
        for i in 0..matrix.samples() {
            out.push('\t');
            out.push_str(matrix.cell_token(j, i));
        }
        out.push('\n');
    }
    out
}
