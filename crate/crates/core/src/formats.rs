// Copyright 2026 The ARMC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! On-disk formats.
//!
//! * COO text: header `# n=<n> p=<p>`, then one `i,j,value` line per entry
//!   with 0-based indices. Values are printed in shortest round-trip form.
//! * Factor binary: `ARMCF1`, `n` and `r` as u64 LE, then `U` (n x r,
//!   row-major), `sigma` (r), `V` (n x r, row-major) as f64 LE.
//! * Dense binary: `ARMCM1`, rows and cols as u64 LE, then row-major f64 LE.
//! * Instance metadata: `key=value` lines.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::LowRankFactors;
use crate::observations::ObservationSet;
use crate::synthgen::{InstanceParams, ProblemInstance};

pub const FACTORS_MAGIC: &[u8; 6] = b"ARMCF1";
pub const DENSE_MAGIC: &[u8; 6] = b"ARMCM1";

pub const OBS_FILE: &str = "obs.coo";
pub const OUTLIERS_FILE: &str = "outliers.coo";
pub const META_FILE: &str = "meta.txt";
pub const TRUTH_FILE: &str = "truth.bin";

pub fn write_coo<W, I>(mut w: W, n: usize, p: f64, triplets: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (usize, usize, f64)>,
{
    writeln!(w, "# n={n} p={p}")?;
    for (i, j, v) in triplets {
        writeln!(w, "{i},{j},{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// A parsed COO file: dimension, rate and raw triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct CooFile {
    pub n: usize,
    pub p: f64,
    pub triplets: Vec<(usize, usize, f64)>,
}

pub fn read_coo<R: BufRead>(r: R) -> Result<CooFile> {
    let mut lines = r.lines().enumerate();
    let (n, p) = match lines.next() {
        Some((_, line)) => parse_header(&line?)?,
        None => return Err(Error::Parse { line: 1, msg: "missing header".into() }),
    };
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: lineno, msg };
        let mut parts = text.split(',');
        let (Some(a), Some(b), Some(c), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad(format!("expected 'i,j,value', got '{text}'")));
        };
        let i: usize = a.trim().parse().map_err(|_| bad(format!("bad row index '{a}'")))?;
        let j: usize = b.trim().parse().map_err(|_| bad(format!("bad column index '{b}'")))?;
        let v: f64 = c.trim().parse().map_err(|_| bad(format!("bad value '{c}'")))?;
        if i >= n || j >= n {
            return Err(bad(format!("index ({i}, {j}) out of range for n = {n}")));
        }
        if !v.is_finite() {
            return Err(bad(format!("non-finite value '{c}'")));
        }
        triplets.push((i, j, v));
    }
    Ok(CooFile { n, p, triplets })
}

fn parse_header(line: &str) -> Result<(usize, f64)> {
    let bad = |msg: &str| Error::Parse { line: 1, msg: msg.to_string() };
    let body = line.trim().strip_prefix('#').ok_or_else(|| bad("header must start with '#'"))?;
    let (mut n, mut p) = (None, None);
    for tok in body.split_whitespace() {
        match tok.split_once('=') {
            Some(("n", v)) => n = Some(v.parse::<usize>().map_err(|_| bad("bad n in header"))?),
            Some(("p", v)) => p = Some(v.parse::<f64>().map_err(|_| bad("bad p in header"))?),
            _ => return Err(bad(&format!("unexpected header token '{tok}'"))),
        }
    }
    match (n, p) {
        (Some(n), Some(p)) => Ok((n, p)),
        _ => Err(bad("header needs n=<n> p=<p>")),
    }
}

pub fn write_observations(path: &Path, obs: &ObservationSet) -> Result<()> {
    write_coo(BufWriter::new(File::create(path)?), obs.n(), obs.p(), obs.iter())
}

pub fn read_observations(path: &Path) -> Result<ObservationSet> {
    let coo = read_coo(BufReader::new(File::open(path)?))?;
    ObservationSet::from_triplets(coo.n, coo.p, coo.triplets)
}

fn put_u64(w: &mut impl Write, x: u64) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn put_f64s<'a>(w: &mut impl Write, xs: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut b = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut b).map_err(truncated)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("unexpected end of file".into())
    } else {
        Error::Io(e)
    }
}

fn check_magic(r: &mut impl Read, magic: &[u8; 6]) -> Result<()> {
    let mut b = [0u8; 6];
    r.read_exact(&mut b).map_err(truncated)?;
    if &b != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&b),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

fn expect_eof(r: &mut impl Read) -> Result<()> {
    let mut b = [0u8; 1];
    match r.read(&mut b)? {
        0 => Ok(()),
        _ => Err(Error::Format("trailing bytes after payload".into())),
    }
}

pub fn write_factors<W: Write>(mut w: W, f: &LowRankFactors) -> Result<()> {
    w.write_all(FACTORS_MAGIC)?;
    put_u64(&mut w, f.n() as u64)?;
    put_u64(&mut w, f.rank() as u64)?;
    put_f64s(&mut w, f.u().iter())?;
    put_f64s(&mut w, f.sigma().iter())?;
    put_f64s(&mut w, f.v().iter())?;
    w.flush()?;
    Ok(())
}

pub fn read_factors<R: Read>(mut r: R) -> Result<LowRankFactors> {
    check_magic(&mut r, FACTORS_MAGIC)?;
    let n = get_u64(&mut r)? as usize;
    let k = get_u64(&mut r)? as usize;
    if k == 0 || k > n {
        return Err(Error::Format(format!("factor header n = {n}, r = {k}")));
    }
    let u = Array2::from_shape_vec((n, k), get_f64s(&mut r, n * k)?).expect("sized");
    let sigma = Array1::from(get_f64s(&mut r, k)?);
    let v = Array2::from_shape_vec((n, k), get_f64s(&mut r, n * k)?).expect("sized");
    expect_eof(&mut r)?;
    LowRankFactors::new(u, sigma, v).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_dense<W: Write>(mut w: W, m: &Array2<f64>) -> Result<()> {
    w.write_all(DENSE_MAGIC)?;
    put_u64(&mut w, m.nrows() as u64)?;
    put_u64(&mut w, m.ncols() as u64)?;
    put_f64s(&mut w, m.iter())?;
    w.flush()?;
    Ok(())
}

/// Reads a dense matrix of any shape; callers decide whether non-square
/// input is acceptable.
pub fn read_dense<R: Read>(mut r: R) -> Result<Array2<f64>> {
    check_magic(&mut r, DENSE_MAGIC)?;
    let rows = get_u64(&mut r)? as usize;
    let cols = get_u64(&mut r)? as usize;
    let data = get_f64s(&mut r, rows.checked_mul(cols).ok_or_else(|| Error::Format("size overflow".into()))?)?;
    expect_eof(&mut r)?;
    Ok(Array2::from_shape_vec((rows, cols), data).expect("sized"))
}

pub fn write_meta<W: Write>(mut w: W, p: &InstanceParams) -> Result<()> {
    writeln!(w, "n={}", p.n)?;
    writeln!(w, "r={}", p.r)?;
    writeln!(w, "kappa={}", p.kappa)?;
    writeln!(w, "p={}", p.p)?;
    writeln!(w, "alpha={}", p.alpha)?;
    writeln!(w, "sigma={}", p.sigma)?;
    writeln!(w, "seed={}", p.seed)?;
    w.flush()?;
    Ok(())
}

pub fn read_meta<R: BufRead>(r: R) -> Result<InstanceParams> {
    let mut get = std::collections::HashMap::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let (k, v) = text
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: idx + 1, msg: format!("expected key=value, got '{text}'") })?;
        get.insert(k.trim().to_string(), (idx + 1, v.trim().to_string()));
    }
    fn field<T: std::str::FromStr>(m: &std::collections::HashMap<String, (usize, String)>, key: &str) -> Result<T> {
        let (line, v) = m.get(key).ok_or_else(|| Error::Format(format!("metadata is missing '{key}'")))?;
        v.parse().map_err(|_| Error::Parse { line: *line, msg: format!("bad value for '{key}': '{v}'") })
    }
    Ok(InstanceParams {
        n: field(&get, "n")?,
        r: field(&get, "r")?,
        kappa: field(&get, "kappa")?,
        p: field(&get, "p")?,
        alpha: field(&get, "alpha")?,
        sigma: field(&get, "sigma")?,
        seed: field(&get, "seed")?,
    })
}

/// Writes `obs.coo`, `outliers.coo`, `meta.txt` and `truth.bin` into `dir`.
pub fn write_instance(dir: &Path, inst: &ProblemInstance) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_observations(&dir.join(OBS_FILE), &inst.obs)?;
    write_coo(
        BufWriter::new(File::create(dir.join(OUTLIERS_FILE))?),
        inst.obs.n(),
        inst.obs.p(),
        inst.outliers(),
    )?;
    write_meta(BufWriter::new(File::create(dir.join(META_FILE))?), &inst.params)?;
    write_factors(BufWriter::new(File::create(dir.join(TRUTH_FILE))?), &inst.truth)?;
    Ok(())
}

pub fn read_instance(dir: &Path) -> Result<ProblemInstance> {
    let obs = read_observations(&dir.join(OBS_FILE))?;
    let truth = read_factors(BufReader::new(File::open(dir.join(TRUTH_FILE))?))?;
    let params = read_meta(BufReader::new(File::open(dir.join(META_FILE))?))?;
    let outliers = match File::open(dir.join(OUTLIERS_FILE)) {
        Ok(f) => read_coo(BufReader::new(f))?.triplets,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    ProblemInstance::from_parts(truth, obs, &outliers, params)
}
