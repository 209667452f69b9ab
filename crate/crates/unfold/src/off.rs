//! OFF triangle meshes and singular-vertex sidecars.
//!
//! Accepted layout: an `OFF` header (optionally followed on the same line by
//! the counts), a counts line `vertices faces edges`, one `x y z` line per
//! vertex and one `3 i j k` line per face. Blank lines and `#` comments are
//! skipped. Only triangles are accepted.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OffError {
    #[error("missing OFF header")]
    MissingHeader,
    #[error("line {line}: malformed counts line")]
    BadCounts { line: usize },
    #[error("line {line}: cannot parse `{token}`")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: expected 3 coordinates, found {found}")]
    BadVertex { line: usize, found: usize },
    #[error("line {line}: only triangular faces are supported (found a {sides}-gon)")]
    NotTriangle { line: usize, sides: usize },
    #[error("line {line}: face lists {found} indices, header says {sides}")]
    BadFace { line: usize, sides: usize, found: usize },
    #[error("file ends after {found} of {expected} {what}")]
    Truncated { what: &'static str, expected: usize, found: usize },
    #[error("line {line}: face index {index} out of range ({count} vertices)")]
    IndexOutOfRange { line: usize, index: usize, count: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OffMesh {
    pub positions: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn number<T: std::str::FromStr>(line: usize, token: &str) -> Result<T, OffError> {
    token.parse().map_err(|_| OffError::BadNumber { line, token: token.to_string() })
}

pub fn parse_off(text: &str) -> Result<OffMesh, OffError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or(OffError::MissingHeader)?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("OFF") {
        return Err(OffError::MissingHeader);
    }
    let rest: Vec<&str> = tokens.collect();
    let (cline, counts): (usize, Vec<&str>) = if rest.is_empty() {
        let (l, c) = lines.next().ok_or(OffError::BadCounts { line: hline + 1 })?;
        (l, c.split_whitespace().collect())
    } else {
        (hline, rest)
    };
    if counts.len() < 2 || counts.len() > 3 {
        return Err(OffError::BadCounts { line: cline });
    }
    let nv: usize = number(cline, counts[0]).map_err(|_| OffError::BadCounts { line: cline })?;
    let nf: usize = number(cline, counts[1]).map_err(|_| OffError::BadCounts { line: cline })?;

    let mut positions = Vec::with_capacity(nv);
    for found in 0..nv {
        let (line, l) = lines.next().ok_or(OffError::Truncated { what: "vertices", expected: nv, found })?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 3 {
            return Err(OffError::BadVertex { line, found: t.len() });
        }
        positions.push([number(line, t[0])?, number(line, t[1])?, number(line, t[2])?]);
    }
    let mut faces = Vec::with_capacity(nf);
    for found in 0..nf {
        let (line, l) = lines.next().ok_or(OffError::Truncated { what: "faces", expected: nf, found })?;
        let t: Vec<&str> = l.split_whitespace().collect();
        let sides: usize = number(line, t[0])?;
        if sides != 3 {
            return Err(OffError::NotTriangle { line, sides });
        }
        if t.len() != 4 {
            return Err(OffError::BadFace { line, sides, found: t.len() - 1 });
        }
        let mut f = [0usize; 3];
        for (k, slot) in f.iter_mut().enumerate() {
            let index: usize = number(line, t[k + 1])?;
            if index >= nv {
                return Err(OffError::IndexOutOfRange { line, index, count: nv });
            }
            *slot = index;
        }
        faces.push(f);
    }
    Ok(OffMesh { positions, faces })
}

pub fn write_off(positions: &[[f64; 3]], faces: &[[usize; 3]]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", positions.len(), faces.len());
    for p in positions {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    for f in faces {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

/// Whitespace-separated vertex indices; `#` starts a comment.
pub fn parse_singular(text: &str) -> Result<Vec<usize>, OffError> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        for tok in l.split_whitespace() {
            out.push(number(line, tok)?);
        }
    }
    Ok(out)
}

pub fn write_singular(indices: &[usize]) -> String {
    let mut s = String::from("# singular vertex indices\n");
    for i in indices {
        let _ = writeln!(s, "{i}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const TETRA: &str = "OFF\n# tetrahedron\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";

    #[test]
    fn round_trip() {
        let m = parse_off(TETRA).unwrap();
        assert_eq!(m.positions.len(), 4);
        assert_eq!(m.faces[3], [1, 2, 3]);
        assert_eq!(parse_off(&write_off(&m.positions, &m.faces)).unwrap(), m);
    }

    #[test]
    fn counts_on_header_line() {
        let m = parse_off("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(m.faces.len(), 1);
    }

    #[test]
    fn quad_rejected() {
        let e = parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n").unwrap_err();
        assert_eq!(e, OffError::NotTriangle { line: 7, sides: 4 });
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(parse_off("PLY\n").unwrap_err(), OffError::MissingHeader);
        assert_eq!(parse_off("OFF\nthree 1 0\n").unwrap_err(), OffError::BadCounts { line: 2 });
        assert!(matches!(parse_off("OFF\n3 1 0\n0 0 0\n1 0\n"), Err(OffError::BadVertex { line: 4, found: 2 })));
        assert!(matches!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n"), Err(OffError::Truncated { what: "faces", .. })));
        assert!(matches!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n"), Err(OffError::IndexOutOfRange { index: 7, .. })));
    }

    #[test]
    fn sidecar() {
        assert_eq!(parse_singular("# tips\n0 12\n 40\n").unwrap(), vec![0, 12, 40]);
        assert!(parse_singular("x").is_err());
        assert_eq!(parse_singular(&write_singular(&[3, 5])).unwrap(), vec![3, 5]);
    }
}
