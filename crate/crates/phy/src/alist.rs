//! Plain-text alist parity-check matrix files (MacKay format).

use std::path::Path;

use crate::ldpc::CodeConfig;
use crate::{PhyError, Result};

/// Load a parity-check matrix from an alist file and build the code.
pub fn load_alist(path: &Path) -> Result<CodeConfig> {
    parse_alist(&std::fs::read_to_string(path)?)
}

pub fn parse_alist(text: &str) -> Result<CodeConfig> {
    let mut nums = text
        .split_whitespace()
        .map(|tok| tok.parse::<i64>().map_err(|e| PhyError::Alist(format!("bad token {tok:?}: {e}"))));
    let mut next = |what: &str| -> Result<i64> {
        nums.next()
            .ok_or_else(|| PhyError::Alist(format!("unexpected end of file at {what}")))?
    };
    let n = next("n")? as usize;
    let r = next("m")? as usize;
    let max_col_w = next("max col weight")? as usize;
    let max_row_w = next("max row weight")? as usize;
    let col_w: Vec<usize> = (0..n).map(|_| next("col weight").map(|x| x as usize)).collect::<Result<_>>()?;
    let row_w: Vec<usize> = (0..r).map(|_| next("row weight").map(|x| x as usize)).collect::<Result<_>>()?;
    // column lists (1-based check indices, zero padded); we only need rows,
    // but consume them to reach the row section
    for &w in &col_w {
        for j in 0..max_col_w.max(w) {
            let v = next("col entry")?;
            if j < w && (v < 1 || v as usize > r) {
                return Err(PhyError::Alist(format!("check index {v} out of 1..={r}")));
            }
        }
    }
    let mut checks = Vec::with_capacity(r);
    for &w in &row_w {
        let mut row = Vec::with_capacity(w);
        for j in 0..max_row_w.max(w) {
            let v = next("row entry")?;
            if j < w {
                if v < 1 || v as usize > n {
                    return Err(PhyError::Alist(format!("variable index {v} out of 1..={n}")));
                }
                row.push(v as usize - 1);
            }
        }
        row.sort_unstable();
        checks.push(row);
    }
    CodeConfig::from_checks(n, checks)
}

/// Serialize a code's parity-check matrix to alist text.
pub fn to_alist(code: &CodeConfig) -> String {
    let n = code.n;
    let r = code.checks.len();
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ci, row) in code.checks.iter().enumerate() {
        for &v in row {
            cols[v].push(ci + 1);
        }
    }
    let max_col = cols.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = code.checks.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = format!("{n} {r}\n{max_col} {max_row}\n");
    out.push_str(&cols.iter().map(|c| c.len().to_string()).collect::<Vec<_>>().join(" "));
    out.push('\n');
    out.push_str(&code.checks.iter().map(|c| c.len().to_string()).collect::<Vec<_>>().join(" "));
    out.push('\n');
    for c in &cols {
        let mut line: Vec<String> = c.iter().map(|x| x.to_string()).collect();
        line.resize(max_col, "0".into());
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    for row in &code.checks {
        let mut line: Vec<String> = row.iter().map(|&v| (v + 1).to_string()).collect();
        line.resize(max_row, "0".into());
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::generate_qc;

    #[test]
    fn roundtrip_through_alist_text() {
        let code = generate_qc(4, 8, 5, 1).unwrap();
        let text = to_alist(&code);
        let back = parse_alist(&text).unwrap();
        assert_eq!(back.n, code.n);
        assert_eq!(back.k, code.k);
        assert_eq!(back.checks, code.checks);
        // encoders agree
        let info: Vec<u8> = (0..code.k).map(|i| (i % 2) as u8).collect();
        assert_eq!(code.encode(&info).unwrap(), back.encode(&info).unwrap());
    }

    #[test]
    fn truncated_file_is_an_error() {
        assert!(parse_alist("12 6\n3 6\n").is_err());
    }
}
