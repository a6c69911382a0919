//! Channel-spec parsing, coefficient files (JSON and binary), dimension
//! tables and benchmark records.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::dims::{dim_ge, dim_gepi};
use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::index::{LChannel, LVector};
use crate::solver::{build_mup_from_sets, mup_index_sets, solve_kernel, CouplingBasis, Group, Kind, Parity};

/// Current coefficient file format version.
pub const FORMAT_VERSION: u32 = 1;
pub const MAGIC: &[u8; 4] = b"GEPI";

fn parse_ell(s: &str, doubled: bool) -> Result<HalfInt> {
    let s = s.trim();
    let l = if doubled {
        s.parse::<i32>().map(HalfInt::from_twice).map_err(|_| Error::Parse(format!("bad doubled l '{s}'")))?
    } else {
        s.parse::<HalfInt>().map_err(|e| Error::Parse(e.to_string()))?
    };
    if l.twice() < 0 {
        return Err(Error::NegativeEll(l));
    }
    Ok(l)
}

/// Splits at commas outside parentheses.
fn split_top(s: &str) -> Result<Vec<&str>> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(Error::Parse(format!("unbalanced parentheses in '{s}'")));
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced parentheses in '{s}'")));
    }
    out.push(&s[start..]);
    Ok(out)
}

/// Parses a channel list: `1,1,1`, `2x3`, or `(tag,l)xCount` groups such as
/// `(0,1)x2,(1,1)x1`. With `doubled`, numbers are `2l`.
pub fn parse_channels(spec: &str, doubled: bool) -> Result<LVector> {
    let spec = spec.trim();
    if spec.is_empty() {
        return LVector::new(Vec::new());
    }
    let mut entries = Vec::new();
    for item in split_top(spec)? {
        let item = item.trim();
        let (body, count) = match item.rsplit_once(['x', 'X']) {
            Some((b, c)) if !b.trim().is_empty() => {
                let n: usize = c.trim().parse().map_err(|_| Error::Parse(format!("bad count in '{item}'")))?;
                (b.trim(), n)
            }
            _ => (item, 1),
        };
        let channel = if let Some(inner) = body.strip_prefix('(').and_then(|b| b.strip_suffix(')')) {
            let parts: Vec<&str> = inner.split(',').collect();
            let (ell, tags) = parts.split_last().ok_or_else(|| Error::Parse(format!("empty group '{item}'")))?;
            let tags = tags
                .iter()
                .map(|t| t.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad tag '{t}'"))))
                .collect::<Result<Vec<_>>>()?;
            LChannel::new(tags, parse_ell(ell, doubled)?)
        } else {
            LChannel::untagged(parse_ell(body, doubled)?)
        };
        entries.extend(std::iter::repeat_n(channel, count));
    }
    LVector::new(entries)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexEncoding {
    Mtuple,
    Class,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub tags: Vec<u32>,
    pub twice_ell: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileHeader {
    pub format_version: u32,
    pub group: Group,
    pub kind: Kind,
    pub lvec: Vec<ChannelRecord>,
    pub twice_l: i32,
    pub parity: Option<Parity>,
    pub n_vectors: usize,
    pub index_encoding: IndexEncoding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    /// Doubled projections `2m_i` of the m-tuple or class representative.
    pub index: Vec<i32>,
    pub twice_k: i32,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub header: FileHeader,
    pub vectors: Vec<Vec<Entry>>,
}

impl CoefficientFile {
    /// Stores every support entry of every vector.
    pub fn from_basis(b: &CouplingBasis) -> Self {
        let header = FileHeader {
            format_version: FORMAT_VERSION,
            group: b.group,
            kind: b.kind,
            lvec: b
                .lvec
                .entries()
                .iter()
                .map(|c| ChannelRecord { tags: c.tags.clone(), twice_ell: c.ell.twice() })
                .collect(),
            twice_l: b.l.twice(),
            parity: b.parity,
            n_vectors: b.dim(),
            index_encoding: match b.kind {
                Kind::Ge => IndexEncoding::Mtuple,
                Kind::Gepi => IndexEncoding::Class,
            },
        };
        let vectors = b
            .vectors
            .iter()
            .map(|v| {
                b.support
                    .iter()
                    .zip(v)
                    .map(|(m, &c)| Entry {
                        index: m.iter().map(|x| x.twice()).collect(),
                        twice_k: m.iter().copied().sum::<HalfInt>().twice(),
                        coefficient: c,
                    })
                    .collect()
            })
            .collect();
        CoefficientFile { header, vectors }
    }

    /// Validates the file and rebuilds the basis over the canonical support.
    pub fn to_basis(&self) -> Result<CouplingBasis> {
        let h = &self.header;
        if h.format_version != FORMAT_VERSION {
            return Err(Error::Version(h.format_version));
        }
        let expected = match h.kind {
            Kind::Ge => IndexEncoding::Mtuple,
            Kind::Gepi => IndexEncoding::Class,
        };
        if h.index_encoding != expected {
            return Err(Error::InvalidIndex(format!("{:?} encoding for kind {}", h.index_encoding, h.kind)));
        }
        if h.twice_l < 0 {
            return Err(Error::NegativeEll(HalfInt::from_twice(h.twice_l)));
        }
        let lvec = LVector::new(
            h.lvec.iter().map(|c| LChannel::new(c.tags.clone(), HalfInt::from_twice(c.twice_ell))).collect(),
        )?;
        if lvec.entries().iter().zip(&h.lvec).any(|(a, b)| a.tags != b.tags || a.ell.twice() != b.twice_ell) {
            return Err(Error::InvalidIndex("channels are not in canonical order".into()));
        }
        if self.vectors.len() != h.n_vectors {
            return Err(Error::InvalidIndex(format!("header lists {} vectors, found {}", h.n_vectors, self.vectors.len())));
        }
        let l = HalfInt::from_twice(h.twice_l);
        let support = CouplingBasis::canonical_support(h.kind, &lvec, l);
        let mut b = CouplingBasis { group: h.group, kind: h.kind, lvec, l, parity: h.parity, support, vectors: Vec::new() };
        let index = b.support_index();
        let mut vectors = Vec::with_capacity(self.vectors.len());
        for entries in &self.vectors {
            let mut v = vec![0.0; b.support.len()];
            for e in entries {
                let m: Vec<HalfInt> = e.index.iter().map(|&x| HalfInt::from_twice(x)).collect();
                let k: HalfInt = m.iter().copied().sum();
                let pos = index.get(m.as_slice()).copied().filter(|_| k.twice() == e.twice_k);
                let Some(pos) = pos else {
                    return Err(Error::InvalidIndex(format!("{:?} with 2K = {}", e.index, e.twice_k)));
                };
                if !e.coefficient.is_finite() {
                    return Err(Error::NonFinite);
                }
                v[pos] = e.coefficient;
            }
            vectors.push(v);
        }
        b.vectors = vectors;
        Ok(b)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        let h = &self.header;
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(h.format_version)?;
        w.write_u8(match h.group {
            Group::So3 => 0,
            Group::Su2 => 1,
            Group::O3 => 2,
        })?;
        w.write_u8(match h.kind {
            Kind::Ge => 0,
            Kind::Gepi => 1,
        })?;
        w.write_u8(match h.parity {
            None => 0,
            Some(Parity::Even) => 1,
            Some(Parity::Odd) => 2,
        })?;
        w.write_u8(match h.index_encoding {
            IndexEncoding::Mtuple => 0,
            IndexEncoding::Class => 1,
        })?;
        w.write_u32::<LittleEndian>(h.lvec.len() as u32)?;
        for c in &h.lvec {
            w.write_u32::<LittleEndian>(c.tags.len() as u32)?;
            for &t in &c.tags {
                w.write_u32::<LittleEndian>(t)?;
            }
            w.write_i32::<LittleEndian>(c.twice_ell)?;
        }
        w.write_i32::<LittleEndian>(h.twice_l)?;
        w.write_u32::<LittleEndian>(h.n_vectors as u32)?;
        for entries in &self.vectors {
            w.write_u32::<LittleEndian>(entries.len() as u32)?;
            for e in entries {
                for &m in &e.index {
                    w.write_i32::<LittleEndian>(m)?;
                }
                w.write_i32::<LittleEndian>(e.twice_k)?;
                w.write_f64::<LittleEndian>(e.coefficient)?;
            }
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        read_binary_inner(r).map_err(|e| match e {
            Error::Io(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => Error::Truncated,
            other => other,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_binary(&mut out)?;
        Ok(out)
    }
}

fn read_binary_inner(r: &mut impl Read) -> Result<CoefficientFile> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let format_version = r.read_u32::<LittleEndian>()?;
    if format_version != FORMAT_VERSION {
        return Err(Error::Version(format_version));
    }
    let bad = |what: &str, v: u8| Error::InvalidIndex(format!("{what} code {v}"));
    let group = match r.read_u8()? {
        0 => Group::So3,
        1 => Group::Su2,
        2 => Group::O3,
        v => return Err(bad("group", v)),
    };
    let kind = match r.read_u8()? {
        0 => Kind::Ge,
        1 => Kind::Gepi,
        v => return Err(bad("kind", v)),
    };
    let parity = match r.read_u8()? {
        0 => None,
        1 => Some(Parity::Even),
        2 => Some(Parity::Odd),
        v => return Err(bad("parity", v)),
    };
    let index_encoding = match r.read_u8()? {
        0 => IndexEncoding::Mtuple,
        1 => IndexEncoding::Class,
        v => return Err(bad("encoding", v)),
    };
    let n_channels = r.read_u32::<LittleEndian>()? as usize;
    let mut lvec = Vec::with_capacity(n_channels.min(1024));
    for _ in 0..n_channels {
        let n_tags = r.read_u32::<LittleEndian>()? as usize;
        let tags = (0..n_tags).map(|_| r.read_u32::<LittleEndian>()).collect::<std::io::Result<Vec<_>>>()?;
        lvec.push(ChannelRecord { tags, twice_ell: r.read_i32::<LittleEndian>()? });
    }
    let twice_l = r.read_i32::<LittleEndian>()?;
    let n_vectors = r.read_u32::<LittleEndian>()? as usize;
    let mut vectors = Vec::with_capacity(n_vectors.min(1 << 16));
    for _ in 0..n_vectors {
        let n_entries = r.read_u32::<LittleEndian>()? as usize;
        let mut entries = Vec::with_capacity(n_entries.min(1 << 20));
        for _ in 0..n_entries {
            let index = (0..n_channels).map(|_| r.read_i32::<LittleEndian>()).collect::<std::io::Result<Vec<_>>>()?;
            let twice_k = r.read_i32::<LittleEndian>()?;
            entries.push(Entry { index, twice_k, coefficient: r.read_f64::<LittleEndian>()? });
        }
        vectors.push(entries);
    }
    let header = FileHeader { format_version, group, kind, lvec, twice_l, parity, n_vectors, index_encoding };
    Ok(CoefficientFile { header, vectors })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileFormat {
    Json,
    Binary,
}

pub fn save_basis(path: &Path, basis: &CouplingBasis, format: FileFormat) -> Result<()> {
    let file = CoefficientFile::from_basis(basis);
    match format {
        FileFormat::Json => std::fs::write(path, file.to_json()?)?,
        FileFormat::Binary => std::fs::write(path, file.to_bytes()?)?,
    }
    Ok(())
}

/// Loads a coefficient file, detecting the format from its first bytes.
pub fn load_basis(path: &Path) -> Result<CouplingBasis> {
    let bytes = std::fs::read(path)?;
    let file = if bytes.starts_with(MAGIC) {
        CoefficientFile::read_binary(&mut bytes.as_slice())?
    } else if bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{') {
        CoefficientFile::from_json(std::str::from_utf8(&bytes).map_err(|e| Error::Parse(e.to_string()))?)?
    } else {
        return Err(Error::BadMagic);
    };
    file.to_basis()
}

/// Dimension table in the layout of the appendix tables: one row per `L`,
/// one (GE-PI, GE) column pair per varied parameter, blank where `L > Σl`.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionTable {
    pub title: String,
    /// Name of the varied parameter (`N` or `l`).
    pub parameter: String,
    pub values: Vec<u32>,
    /// `cells[L][column]`, `None` where `L` exceeds `Σl`.
    pub cells: Vec<Vec<Option<(BigUint, BigUint)>>>,
}

fn build_table(title: String, parameter: &str, values: Vec<u32>, lvec_of: impl Fn(u32) -> LVector) -> DimensionTable {
    let lvecs: Vec<LVector> = values.iter().map(|&v| lvec_of(v)).collect();
    let max_l = lvecs.iter().map(|v| v.sum_ell().twice() / 2).max().unwrap_or(0);
    let cells = (0..=max_l)
        .map(|l| {
            let l = HalfInt::from_int(l);
            lvecs
                .iter()
                .map(|v| (l <= v.sum_ell()).then(|| (dim_gepi(v, l), dim_ge(v, l))))
                .collect()
        })
        .collect();
    DimensionTable { title, parameter: parameter.into(), values, cells }
}

/// Homogeneous `l = (ell, ..., ell)` for `N = 1..=n_max`.
pub fn table_fixed_ell(ell: u32, n_max: u32) -> DimensionTable {
    let l = HalfInt::from_int(ell as i32);
    build_table(format!("l = ({ell}, ..., {ell})"), "N", (1..=n_max).collect(), |n| LVector::homogeneous(l, n as usize))
}

/// Homogeneous `l` of fixed length `n` for `ell = 0..=ell_max`.
pub fn table_fixed_n(n: u32, ell_max: u32) -> DimensionTable {
    build_table(format!("N = {n}"), "l", (0..=ell_max).collect(), |ell| {
        LVector::homogeneous(HalfInt::from_int(ell as i32), n as usize)
    })
}

impl DimensionTable {
    pub fn to_markdown(&self) -> String {
        let mut s = format!("### {}\n\n| L/{} |", self.title, self.parameter);
        for v in &self.values {
            let _ = write!(s, " {v} GE-PI | {v} GE |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---|---|".repeat(self.values.len()));
        s.push('\n');
        for (l, row) in self.cells.iter().enumerate() {
            let _ = write!(s, "| {l} |");
            for c in row {
                match c {
                    Some((p, g)) => {
                        let _ = write!(s, " {p} | {g} |");
                    }
                    None => s.push_str("  |  |"),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![format!("L/{}", self.parameter)];
        for v in &self.values {
            header.push(format!("{v} GE-PI"));
            header.push(format!("{v} GE"));
        }
        w.write_record(&header).map_err(csv_err)?;
        for (l, row) in self.cells.iter().enumerate() {
            let mut rec = vec![l.to_string()];
            for c in row {
                match c {
                    Some((p, g)) => rec.extend([p.to_string(), g.to_string()]),
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Timing breakdown of one direct basis construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub lvec: String,
    #[serde(rename = "L")]
    pub l: String,
    pub kind: Kind,
    /// Columns of `M^up`: index tuples with `|Σm| ≤ L`.
    pub n_classes: usize,
    pub n_basis: usize,
    pub t_classes_ms: f64,
    pub t_build_ms: f64,
    pub t_kernel_ms: f64,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Builds the basis for `(kind, lvec, L)` and records the time spent in index
/// enumeration, matrix assembly and the kernel solve.
pub fn bench_one(kind: Kind, lvec: &LVector, l: HalfInt) -> Result<(BenchRecord, Vec<Vec<f64>>)> {
    let t = Instant::now();
    let (blocks, top) = mup_index_sets(kind, lvec, l);
    let t_classes_ms = ms(t);
    let t = Instant::now();
    let m = build_mup_from_sets(kind, lvec, l, blocks, top);
    let t_build_ms = ms(t);
    let t = Instant::now();
    let vectors = solve_kernel(&m)?;
    let t_kernel_ms = ms(t);
    let record = BenchRecord {
        lvec: lvec.to_string(),
        l: l.to_string(),
        kind,
        n_classes: m.ncols(),
        n_basis: vectors.len(),
        t_classes_ms,
        t_build_ms,
        t_kernel_ms,
    };
    Ok((record, vectors))
}

pub fn bench_csv(records: &[BenchRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    if records.is_empty() {
        w.write_record(["lvec", "L", "kind", "n_classes", "n_basis", "t_classes_ms", "t_build_ms", "t_kernel_ms"])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Least-squares slope of `ln y` against `ln x` over points with positive coordinates.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
