//! Matrix Market coordinate format (ASCII, 1-based, `real general`).

use std::io::{BufRead, Write};

use super::{SparseMatrixCsr, TripletBuilder};
use crate::error::{GeneoError, Result};

pub fn write<W: Write>(a: &SparseMatrixCsr, mut out: W) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.dim(), a.dim(), a.nnz())?;
    for i in 0..a.dim() {
        let (cols, vals) = a.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            writeln!(out, "{} {} {:.17e}", i + 1, c + 1, v)?;
        }
    }
    Ok(())
}

pub fn read<R: BufRead>(input: R) -> Result<SparseMatrixCsr> {
    let mut lines = input.lines();
    let header = next_line(&mut lines)?;
    if !header.starts_with("%%MatrixMarket") {
        return Err(GeneoError::Parse("missing %%MatrixMarket banner".into()));
    }
    let lower = header.to_ascii_lowercase();
    if !lower.contains("coordinate") || !lower.contains("real") {
        return Err(GeneoError::Parse(format!("unsupported banner: {header}")));
    }
    let symmetric = lower.contains("symmetric");

    let size = loop {
        let l = next_line(&mut lines)?;
        let t = l.trim();
        if !t.is_empty() && !t.starts_with('%') {
            break t.to_string();
        }
    };
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|s| {
            s.parse()
                .map_err(|_| GeneoError::Parse(format!("bad size line: {size}")))
        })
        .collect::<Result<_>>()?;
    if dims.len() != 3 || dims[0] != dims[1] {
        return Err(GeneoError::Parse(format!(
            "expected square size line, got {size}"
        )));
    }
    let (n, nnz) = (dims[0], dims[2]);
    let mut b = TripletBuilder::with_capacity(n, nnz);
    let mut seen = 0;
    for line in lines {
        let line = line.map_err(|e| GeneoError::Parse(e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut it = t.split_whitespace();
        let mut field = |name: &str| {
            it.next()
                .ok_or_else(|| GeneoError::Parse(format!("missing {name} in `{t}`")))
        };
        let i: usize = field("row")?
            .parse()
            .map_err(|_| GeneoError::Parse(format!("bad row in `{t}`")))?;
        let j: usize = field("col")?
            .parse()
            .map_err(|_| GeneoError::Parse(format!("bad col in `{t}`")))?;
        let v: f64 = field("value")?
            .parse()
            .map_err(|_| GeneoError::Parse(format!("bad value in `{t}`")))?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(GeneoError::Parse(format!("index out of range in `{t}`")));
        }
        b.push(i - 1, j - 1, v);
        if symmetric && i != j {
            b.push(j - 1, i - 1, v);
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(GeneoError::Parse(format!(
            "expected {nnz} entries, found {seen}"
        )));
    }
    Ok(b.build())
}

fn next_line<I: Iterator<Item = std::io::Result<String>>>(lines: &mut I) -> Result<String> {
    lines
        .next()
        .ok_or_else(|| GeneoError::Parse("unexpected end of file".into()))?
        .map_err(|e| GeneoError::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read() {
        let mut b = TripletBuilder::new(3);
        b.push(0, 0, 2.0);
        b.push(0, 2, -0.1);
        b.push(2, 0, -0.1);
        b.push(1, 1, 1.0 / 3.0);
        let a = b.build();
        let mut buf = Vec::new();
        write(&a, &mut buf).unwrap();
        let back = read(buf.as_slice()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn symmetric_banner_mirrors_entries() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 4\n2 1 1\n";
        let a = read(text.as_bytes()).unwrap();
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.get(1, 0), 1.0);
    }
}
