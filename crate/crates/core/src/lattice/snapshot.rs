//! Plain-text metric snapshots: a short `key value` header followed by one
//! line per site holding `re im` pairs of `g_{k̄j}` in row-major `(k, j)`
//! order. Floats use Rust's shortest round-trip formatting, so a write/read
//! cycle is bit-exact.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{MetricField, TorusLattice};
use crate::error::{Error, Result};

const MAGIC: &str = "# hermflow-snapshot v1";

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub metric: MetricField,
    pub time: f64,
    pub tag: String,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Snapshot(msg.into())
}

impl Snapshot {
    pub fn new(metric: MetricField, time: f64, tag: impl Into<String>) -> Self {
        Self { metric, time, tag: tag.into() }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let lat = self.metric.lattice();
        let m = lat.m();
        let mut head = String::new();
        writeln!(head, "{MAGIC}").unwrap();
        writeln!(head, "m {m}").unwrap();
        writeln!(head, "n {}", lat.n()).unwrap();
        writeln!(head, "active {}", lat.reduction_label()).unwrap();
        writeln!(head, "time {:e}", self.time).unwrap();
        writeln!(head, "tag {}", self.tag.replace('\n', " ")).unwrap();
        writeln!(head, "sites {}", lat.len()).unwrap();
        w.write_all(head.as_bytes())?;
        let comps = self.metric.components();
        let mut line = String::new();
        for s in 0..lat.len() {
            line.clear();
            for (i, c) in comps.iter().enumerate() {
                let z = c.at(s);
                if i > 0 {
                    line.push(' ');
                }
                write!(line, "{:e} {:e}", z.re, z.im).unwrap();
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let mut next = || -> Result<String> { lines.next().ok_or_else(|| bad("unexpected end of file"))?.map_err(Error::from) };
        if next()?.trim() != MAGIC {
            return Err(bad("missing header line"));
        }
        let mut field = |key: &str| -> Result<String> {
            let l = next()?;
            let (k, v) = l.split_once(' ').unwrap_or((l.as_str(), ""));
            if k != key {
                return Err(bad(format!("expected '{key}', found '{k}'")));
            }
            Ok(v.trim().to_string())
        };
        let num = |s: String, key: &str| s.parse::<usize>().map_err(|_| bad(format!("bad {key}")));
        let m = num(field("m")?, "m")?;
        let n = num(field("n")?, "n")?;
        let active = field("active")?;
        let time: f64 = field("time")?.parse().map_err(|_| bad("bad time"))?;
        let tag = field("tag")?;
        let sites = num(field("sites")?, "sites")?;
        let lat = TorusLattice::reduced(m, n, &TorusLattice::parse_reduction(m, &active)?)?;
        if lat.len() != sites {
            return Err(bad(format!("header says {sites} sites, lattice has {}", lat.len())));
        }
        let mut g = Vec::with_capacity(sites);
        for s in 0..sites {
            let l = next()?;
            let v: Vec<f64> = l.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad(format!("bad number on site {s}")))?;
            if v.len() != 2 * m * m {
                return Err(bad(format!("site {s}: expected {} numbers, found {}", 2 * m * m, v.len())));
            }
            g.push(DMatrix::from_fn(m, m, |k, j| Complex64::new(v[2 * (k * m + j)], v[2 * (k * m + j) + 1])));
        }
        Ok(Self { metric: MetricField::from_sites(&lat, &g)?, time, tag })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }

    pub fn lattice(&self) -> &Arc<TorusLattice> {
        self.metric.lattice()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn round_trip_is_bit_exact() {
        let lat = TorusLattice::reduced(2, 8, &[0, 3]).unwrap();
        let g = MetricField::from_fn(&lat, |x| {
            let a = 2.0 * PI * x[0] + 0.1;
            let off = Complex64::new(0.1 * a.sin() / 3.0, 1e-17 * a.cos());
            DMatrix::from_row_slice(2, 2, &[Complex64::new(1.0 + a.cos() / 7.0, 0.0), off, off.conj(), Complex64::new(1.1, 0.0)])
        })
        .unwrap();
        let snap = Snapshot::new(g, 0.125, "round trip");
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        let back = Snapshot::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.time, 0.125);
        assert_eq!(back.tag, "round trip");
        assert_eq!(back.lattice().reduction_label(), "x1,y2");
        assert_eq!(back.metric.sup_distance(&snap.metric), 0.0);
    }

    #[test]
    fn rejects_truncated_and_malformed_input() {
        let lat = TorusLattice::full(1, 8).unwrap();
        let snap = Snapshot::new(MetricField::flat(&lat), 0.0, "");
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut = &text[..text.len() - 20];
        assert!(matches!(Snapshot::read_from(cut.as_bytes()), Err(Error::Snapshot(_))));
        let broken = text.replacen("n 8", "n 7", 1);
        assert!(Snapshot::read_from(broken.as_bytes()).is_err());
        assert!(Snapshot::read_from("hello".as_bytes()).is_err());
    }
}
