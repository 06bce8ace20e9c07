//! Text edge-list files.
//!
//! ```text
//! mnw v1 <d> <n> <alpha> <beta> <sigma> <zeta> <seed>
//! <u> <v>
//! ...
//! ```
//!
//! Only long edges are listed, one per line with `u < v`, ascending. Torus
//! edges are implied by the header. Floats are written in shortest round-trip
//! form so a file reproduces its parameters bit for bit. Original-NW samples
//! use the header `onw v1 <n> <p> <seed> <raw_stub_count>`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gen::{EdgeList, Model, OriginalNwParams};
use crate::torus::{ModelParams, Torus, VertexId};

pub fn write_edge_list<W: Write>(edges: &EdgeList, mut out: W) -> std::io::Result<()> {
    match edges.model {
        Model::ModifiedNw(p) => writeln!(
            out,
            "mnw v1 {} {} {} {} {} {} {}",
            p.d, p.n, p.alpha, p.beta, p.sigma, p.zeta, p.seed
        )?,
        Model::OriginalNw(p) => writeln!(
            out,
            "onw v1 {} {} {} {}",
            p.n,
            p.p,
            p.seed,
            edges.raw_stub_count.unwrap_or(0)
        )?,
    }
    for (u, v) in &edges.long_edges {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

pub fn save_edge_list(edges: &EdgeList, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_edge_list(edges, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_edge_list(path: &Path) -> Result<EdgeList> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_edge_list(BufReader::new(file), path)
}

pub fn read_edge_list<R: Read>(reader: BufReader<R>, path: &Path) -> Result<EdgeList> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(parse_err(1, "empty file".into())),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();

    fn field<T: std::str::FromStr>(fields: &[&str], i: usize, name: &str) -> std::result::Result<T, String> {
        fields
            .get(i)
            .ok_or_else(|| format!("header is missing {name}"))?
            .parse()
            .map_err(|_| format!("header field {name} = {:?} is not valid", fields[i]))
    }

    let (model, raw_stub_count) = match fields.as_slice() {
        ["mnw", "v1", ..] if fields.len() == 9 => {
            let p = (|| -> std::result::Result<ModelParams, String> {
                Ok(ModelParams {
                    d: field(&fields, 2, "d")?,
                    n: field(&fields, 3, "n")?,
                    alpha: field(&fields, 4, "alpha")?,
                    beta: field(&fields, 5, "beta")?,
                    sigma: field(&fields, 6, "sigma")?,
                    zeta: field(&fields, 7, "zeta")?,
                    seed: field(&fields, 8, "seed")?,
                })
            })()
            .map_err(|m| parse_err(1, m))?;
            p.validate()?;
            (Model::ModifiedNw(p), None)
        }
        ["onw", "v1", ..] if fields.len() == 6 => {
            let (p, raw) = (|| -> std::result::Result<(OriginalNwParams, u64), String> {
                Ok((
                    OriginalNwParams {
                        n: field(&fields, 2, "n")?,
                        p: field(&fields, 3, "p")?,
                        seed: field(&fields, 4, "seed")?,
                    },
                    field(&fields, 5, "raw_stub_count")?,
                ))
            })()
            .map_err(|m| parse_err(1, m))?;
            Torus::new(1, p.n)?;
            (Model::OriginalNw(p), Some(raw))
        }
        _ => {
            return Err(parse_err(
                1,
                format!("expected `mnw v1 d n alpha beta sigma zeta seed` header, got {header:?}"),
            ))
        }
    };

    let mut long_edges = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let pair = (|| {
            let u: u32 = it.next()?.parse().ok()?;
            let v: u32 = it.next()?.parse().ok()?;
            it.next().is_none().then_some((VertexId(u), VertexId(v)))
        })();
        match pair {
            Some(p) => long_edges.push(p),
            None => return Err(parse_err(i + 2, format!("expected `u v`, got {trimmed:?}"))),
        }
    }

    let torus = match model {
        Model::ModifiedNw(p) => p.torus(),
        Model::OriginalNw(p) => Torus { d: 1, n: p.n },
    };
    let list = EdgeList {
        model,
        torus_edge_count: torus.d as u64 * torus.vertex_count() as u64,
        long_edges,
        raw_stub_count,
    };
    list.validate()?;
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate, generate_original_nw};

    fn roundtrip(e: &EdgeList) -> EdgeList {
        let mut buf = Vec::new();
        write_edge_list(e, &mut buf).unwrap();
        read_edge_list(BufReader::new(&buf[..]), Path::new("mem")).unwrap()
    }

    #[test]
    fn header_layout() {
        let p = ModelParams::new(1, 100, 0.1, 0.4, 1.0, 0.0, 7).unwrap();
        let e = generate(&p).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&e, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mnw v1 1 100 0.1 0.4 1 0 7\n"));
        assert_eq!(text.lines().count(), 1 + e.long_edges.len());
    }

    #[test]
    fn roundtrips_bit_exactly() {
        let p = ModelParams::new(2, 30, 0.123456789, 0.3333333333333333, 2.5, 1.7, u64::MAX).unwrap();
        let e = generate(&p).unwrap();
        assert_eq!(roundtrip(&e), e);
        let o = generate_original_nw(200, 0.7, 3).unwrap();
        assert_eq!(roundtrip(&o), o);
    }

    #[test]
    fn rejects_malformed() {
        let bad = |s: &str| read_edge_list(BufReader::new(s.as_bytes()), Path::new("mem"));
        assert!(bad("").is_err());
        assert!(bad("mnw v2 1 100 0.1 0.4 1 0 7\n").is_err());
        assert!(bad("mnw v1 1 100 0.1 0.4 1 0\n").is_err());
        assert!(bad("mnw v1 1 100 0.1 0.4 1 0 7\n0 1\n").is_err(), "distance 1 is outside window");
        assert!(bad("mnw v1 1 100 0.1 0.4 1 0 7\n30 0\n").is_err(), "u > v");
        assert!(bad("mnw v1 1 100 0.1 0.4 1 0 7\n0 30\n0 30\n").is_err(), "duplicate");
        assert!(bad("mnw v1 1 100 0.1 0.4 1 0 7\n0 x\n").is_err());
        assert!(bad("mnw v1 1 100 0.1 0.4 1 0 7\n0 300\n").is_err());
        assert!(bad("mnw v1 1 100 0.1 0.4 1 0 7\n0 30\n1 31\n").is_ok());
    }
}
