//! Grid files: a short text header followed by a little-endian binary
//! payload of 64-bit floats, plus CSV export.
//!
//! ```text
//! exciton2des-grid 1
//! name beatmap
//! dtype float64 | complex128
//! endian little
//! quantity <name> <unit>
//! axis <name> <unit> <n> <v0> <v1> ...
//! attr <key> <value...>
//! end_header
//! <payload>
//! ```
//!
//! Axes appear in storage order; the last axis varies fastest. Complex
//! values are stored as interleaved (re, im) pairs. Axis values are written
//! in shortest round-trip decimal form, so reading restores them exactly.
//! The payload length is always (Π nᵢ) × 8 bytes for float64 and twice that
//! for complex128.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAGIC: &str = "exciton2des-grid 1";

/// One labelled grid axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, unit: &str, values: Vec<f64>) -> Self {
        Self { name: name.into(), unit: unit.into(), values }
    }
}

/// Real or complex payload.
#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl GridData {
    pub fn len(&self) -> usize {
        match self {
            GridData::Real(v) => v.len(),
            GridData::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dtype(&self) -> &'static str {
        match self {
            GridData::Real(_) => "float64",
            GridData::Complex(_) => "complex128",
        }
    }
}

/// A named multi-dimensional grid with axes, units and free-form attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub name: String,
    pub quantity: String,
    pub unit: String,
    pub axes: Vec<Axis>,
    pub attrs: Vec<(String, String)>,
    pub data: GridData,
}

fn token(s: &str, what: &str) -> Result<()> {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(Error::Grid(format!("{what} '{s}' must be a non-empty token without whitespace")));
    }
    Ok(())
}

impl GridFile {
    pub fn new(name: &str, quantity: &str, unit: &str, axes: Vec<Axis>, data: GridData) -> Result<Self> {
        let g = Self { name: name.into(), quantity: quantity.into(), unit: unit.into(), axes, attrs: Vec::new(), data };
        g.validate()?;
        Ok(g)
    }

    /// Adds a metadata attribute (value may contain spaces, not newlines).
    pub fn with_attr(mut self, key: &str, value: impl ToString) -> Self {
        self.attrs.push((key.into(), value.to_string()));
        self
    }

    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    /// Checks names, axis monotonicity and payload size.
    pub fn validate(&self) -> Result<()> {
        token(&self.name, "grid name")?;
        token(&self.quantity, "quantity")?;
        token(&self.unit, "unit")?;
        if self.axes.is_empty() {
            return Err(Error::Grid("a grid needs at least one axis".into()));
        }
        for a in &self.axes {
            token(&a.name, "axis name")?;
            token(&a.unit, "axis unit")?;
            if a.values.is_empty() {
                return Err(Error::Grid(format!("axis {} is empty", a.name)));
            }
            if a.values.iter().any(|v| !v.is_finite()) || a.values.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Grid(format!("axis {} must be finite and strictly increasing", a.name)));
            }
        }
        for (k, v) in &self.attrs {
            token(k, "attribute key")?;
            if v.contains('\n') {
                return Err(Error::Grid(format!("attribute {k} contains a newline")));
            }
        }
        let n: usize = self.shape().iter().product();
        if n != self.data.len() {
            return Err(Error::Grid(format!("axes imply {n} values but the payload has {}", self.data.len())));
        }
        Ok(())
    }

    /// Serializes header and payload.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut h = String::new();
        h.push_str(MAGIC);
        h.push('\n');
        h.push_str(&format!("name {}\n", self.name));
        h.push_str(&format!("dtype {}\n", self.data.dtype()));
        h.push_str("endian little\n");
        h.push_str(&format!("quantity {} {}\n", self.quantity, self.unit));
        for a in &self.axes {
            h.push_str(&format!("axis {} {} {}", a.name, a.unit, a.values.len()));
            for v in &a.values {
                h.push_str(&format!(" {v:?}"));
            }
            h.push('\n');
        }
        for (k, v) in &self.attrs {
            h.push_str(&format!("attr {k} {v}\n"));
        }
        h.push_str("end_header\n");
        let mut out = h.into_bytes();
        match &self.data {
            GridData::Real(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            GridData::Complex(v) => v.iter().for_each(|z| {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }),
        }
        Ok(out)
    }

    /// Parses header and payload.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const END: &[u8] = b"\nend_header\n";
        let pos = bytes
            .windows(END.len())
            .position(|w| w == END)
            .ok_or_else(|| Error::Grid("missing end_header line".into()))?;
        let header = std::str::from_utf8(&bytes[..pos]).map_err(|_| Error::Grid("header is not UTF-8".into()))?;
        let payload = &bytes[pos + END.len()..];
        let mut lines = header.lines();
        if lines.next() != Some(MAGIC) {
            return Err(Error::Grid(format!("not a grid file (expected '{MAGIC}')")));
        }
        let (mut name, mut dtype, mut quantity, mut unit) = (None, None, None, None);
        let mut axes = Vec::new();
        let mut attrs = Vec::new();
        for (no, line) in lines.enumerate() {
            let bad = |m: &str| Error::Grid(format!("header line {}: {m}: '{line}'", no + 2));
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("name") => name = parts.next().map(str::to_string),
                Some("dtype") => dtype = parts.next().map(str::to_string),
                Some("endian") => {
                    if parts.next() != Some("little") {
                        return Err(bad("only little-endian payloads are supported"));
                    }
                }
                Some("quantity") => {
                    quantity = parts.next().map(str::to_string);
                    unit = parts.next().map(str::to_string);
                }
                Some("axis") => {
                    let an = parts.next().ok_or_else(|| bad("axis name missing"))?;
                    let au = parts.next().ok_or_else(|| bad("axis unit missing"))?;
                    let n: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("axis length missing"))?;
                    let values: Vec<f64> = parts.map(|s| s.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad("bad axis value"))?;
                    if values.len() != n {
                        return Err(bad("axis length does not match its values"));
                    }
                    axes.push(Axis::new(an, au, values));
                }
                Some("attr") => {
                    let k = parts.next().ok_or_else(|| bad("attribute key missing"))?;
                    let v = line.trim_start()["attr".len()..].trim_start()[k.len()..].trim().to_string();
                    attrs.push((k.to_string(), v));
                }
                Some(_) => return Err(bad("unknown header field")),
                None => {}
            }
        }
        let missing = |f: &str| Error::Grid(format!("header field '{f}' missing"));
        let n: usize = axes.iter().map(|a: &Axis| a.values.len()).product();
        let dtype = dtype.ok_or_else(|| missing("dtype"))?;
        let width = match dtype.as_str() {
            "float64" => 8,
            "complex128" => 16,
            other => return Err(Error::Grid(format!("unknown dtype {other}"))),
        };
        if payload.len() != n * width {
            return Err(Error::Grid(format!("payload has {} bytes, header implies {}", payload.len(), n * width)));
        }
        let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
        let data = if width == 8 {
            GridData::Real(payload.chunks_exact(8).map(f).collect())
        } else {
            GridData::Complex(payload.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect())
        };
        let g = GridFile {
            name: name.ok_or_else(|| missing("name"))?,
            quantity: quantity.ok_or_else(|| missing("quantity"))?,
            unit: unit.ok_or_else(|| missing("quantity unit"))?,
            axes,
            attrs,
            data,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// CSV with one row per grid point: axis coordinates, then the value
    /// (`re,im` columns for complex data).
    pub fn to_csv(&self) -> Result<String> {
        self.validate()?;
        let mut s = String::new();
        let names: Vec<String> = self.axes.iter().map(|a| format!("{}_{}", a.name, a.unit)).collect();
        s.push_str(&names.join(","));
        match self.data {
            GridData::Real(_) => s.push_str(&format!(",{}\n", self.quantity)),
            GridData::Complex(_) => s.push_str(&format!(",{q}_re,{q}_im\n", q = self.quantity)),
        }
        let shape = self.shape();
        let mut index = vec![0usize; shape.len()];
        for flat in 0..self.data.len() {
            let mut rem = flat;
            for d in (0..shape.len()).rev() {
                index[d] = rem % shape[d];
                rem /= shape[d];
            }
            let coords: Vec<String> = index.iter().zip(&self.axes).map(|(&i, a)| format!("{:?}", a.values[i])).collect();
            s.push_str(&coords.join(","));
            match &self.data {
                GridData::Real(v) => s.push_str(&format!(",{:?}\n", v[flat])),
                GridData::Complex(v) => s.push_str(&format!(",{:?},{:?}\n", v[flat].re, v[flat].im)),
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridFile {
        let axes = vec![Axis::new("omega1", "cm-1", vec![12400.0, 12500.1, 12600.0]), Axis::new("omega3", "cm-1", vec![-1.0, 0.1])];
        let data = GridData::Complex((0..6).map(|i| Complex64::new(i as f64 * 0.1, -1.0 / (i as f64 + 3.0))).collect());
        GridFile::new("spectrum", "S", "arb", axes, data).unwrap().with_attr("t2_fs", 0.0).with_attr("note", "two words")
    }

    #[test]
    fn round_trip_is_exact() {
        let g = sample();
        let bytes = g.to_bytes().unwrap();
        let back = GridFile::from_bytes(&bytes).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.attr("note"), Some("two words"));
        let pos = bytes.windows(11).position(|w| w == b"end_header\n").unwrap();
        assert_eq!(bytes.len() - pos - 11, 6 * 16);
    }

    #[test]
    fn file_round_trip_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.grid");
        let g = GridFile::new("trace", "amp", "arb", vec![Axis::new("omega2", "cm-1", vec![-1.0, 0.0, 2.5])], GridData::Real(vec![0.5, 1.0, 0.25]))
            .unwrap();
        g.write(&p).unwrap();
        assert_eq!(GridFile::read(&p).unwrap(), g);
        let csv = g.to_csv().unwrap();
        assert_eq!(csv, "omega2_cm-1,amp\n-1.0,0.5\n0.0,1.0\n2.5,0.25\n");
        let c = sample().to_csv().unwrap();
        assert_eq!(c.lines().count(), 7);
        assert!(c.starts_with("omega1_cm-1,omega3_cm-1,S_re,S_im\n"));
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let bad_axis = GridFile::new("x", "q", "u", vec![Axis::new("a", "u", vec![1.0, 1.0])], GridData::Real(vec![0.0, 0.0]));
        assert!(bad_axis.is_err());
        let short = GridFile::new("x", "q", "u", vec![Axis::new("a", "u", vec![1.0, 2.0])], GridData::Real(vec![0.0]));
        assert!(short.is_err());
        let mut bytes = sample().to_bytes().unwrap();
        bytes.pop();
        assert!(GridFile::from_bytes(&bytes).is_err());
        assert!(GridFile::from_bytes(b"hello\nend_header\n").is_err());
        assert!(GridFile::from_bytes(b"end_header\n").is_err());
    }
}
