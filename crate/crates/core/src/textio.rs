//! Matrix text format for CLI interchange: a header line `n p` followed by
//! n whitespace-separated rows. Values are written in shortest
//! round-trippable decimal form.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Result, StiefelError};

pub fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix<R: BufRead>(r: &mut R) -> Result<DMatrix<f64>> {
    let mut header = String::new();
    r.read_line(&mut header)
        .map_err(|e| StiefelError::invalid(format!("cannot read header: {e}")))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| StiefelError::invalid(format!("bad matrix header {header:?}")))?;
    if dims.len() != 2 {
        return Err(StiefelError::invalid(format!(
            "matrix header must be `n p`, got {header:?}"
        )));
    }
    let (n, p) = (dims[0], dims[1]);
    if n == 0 || p == 0 {
        return Err(StiefelError::invalid("matrix dimensions must be positive"));
    }
    let mut entries = Vec::with_capacity(n * p);
    let mut line = String::new();
    while entries.len() < n * p {
        line.clear();
        let read = r
            .read_line(&mut line)
            .map_err(|e| StiefelError::invalid(format!("cannot read row: {e}")))?;
        if read == 0 {
            return Err(StiefelError::invalid(format!(
                "matrix ends early: expected {} values, got {}",
                n * p,
                entries.len()
            )));
        }
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| StiefelError::invalid(format!("bad matrix entry {tok:?}")))?;
            entries.push(v);
        }
    }
    if entries.len() != n * p {
        return Err(StiefelError::invalid(format!(
            "matrix has {} values, expected {}",
            entries.len(),
            n * p
        )));
    }
    Ok(DMatrix::from_row_slice(n, p, &entries))
}

pub fn read_matrix_file(path: &std::path::Path) -> Result<DMatrix<f64>> {
    let file = std::fs::File::open(path)
        .map_err(|e| StiefelError::invalid(format!("cannot open {}: {e}", path.display())))?;
    read_matrix(&mut std::io::BufReader::new(file))
}

pub fn write_matrix_file(path: &std::path::Path, m: &DMatrix<f64>) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| StiefelError::invalid(format!("cannot create {}: {e}", path.display())))?;
    write_matrix(&mut file, m)
        .map_err(|e| StiefelError::invalid(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RandomSource;

    #[test]
    fn roundtrip_preserves_bits() {
        let mut rng = RandomSource::new(50);
        let m = rng.gaussian_matrix(4, 3);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        let back = read_matrix(&mut std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rejects_malformed_input() {
        let cases = ["2\n1 2\n3 4\n", "2 2\n1 2\n", "2 2\n1 2\n3 x\n", "0 2\n"];
        for text in cases {
            let mut r = std::io::BufReader::new(text.as_bytes());
            assert!(read_matrix(&mut r).is_err(), "accepted {text:?}");
        }
    }
}
