//! Text and binary formats for tables, grid functions, kernels and snapshots.
//!
//! Floating-point fields are written with 17 significant digits so that a value
//! read back is bit-identical to the one written.
//!
//! `phi_matrix.bin` layout, little-endian:
//!
//! | offset | size | content                     |
//! |--------|------|-----------------------------|
//! | 0      | 4    | magic `DWPH`                |
//! | 4      | 4    | u32 rows (frequencies)      |
//! | 8      | 4    | u32 cols (x samples)        |
//! | 12     | 4    | reserved, zero              |
//! | 16     | 8·rows·cols | f64 row-major, row j = φ(·, ξ_j²) |

use crate::error::{Error, Result};
use crate::evolution::WaveState;
use crate::spectral::SpectralTable;
use crate::transform::{GridFunction, Parity};
use crate::vectorfield::BKernel;
use std::io::{Read, Write};

pub const PHI_MAGIC: &[u8; 4] = b"DWPH";
pub const SPECTRUM_HEADER: [&str; 7] = ["xi", "rho", "rho_tilde", "re_m", "im_m", "re_a", "im_a"];

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse(field: &str, line: u64) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Io(format!("line {line}: cannot parse {field:?} as a number")))
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub xi: f64,
    pub rho: f64,
    pub rho_tilde: f64,
    pub m: num_complex::Complex64,
    pub a: num_complex::Complex64,
}

pub fn write_spectrum_csv<W: Write>(w: W, table: &SpectralTable) -> Result<()> {
    let mut out = writer(w);
    out.write_record(SPECTRUM_HEADER)?;
    for p in &table.points {
        out.write_record(
            [p.xi, p.rho, p.rho_tilde, p.m.re, p.m.im, p.a_coeff.re, p.a_coeff.im].map(fmt_f64),
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_spectrum_csv<R: Read>(r: R) -> Result<Vec<SpectrumRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header != SPECTRUM_HEADER {
        return Err(Error::Io(format!("unexpected spectrum header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let v: Vec<f64> = rec.iter().map(|f| parse(f, line)).collect::<Result<_>>()?;
        if v.len() != 7 {
            return Err(Error::Io(format!("line {line}: expected 7 fields")));
        }
        rows.push(SpectrumRow {
            xi: v[0],
            rho: v[1],
            rho_tilde: v[2],
            m: num_complex::Complex64::new(v[3], v[4]),
            a: num_complex::Complex64::new(v[5], v[6]),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

pub fn write_phi_matrix<W: Write>(mut w: W, table: &SpectralTable) -> Result<()> {
    let (rows, cols) = (table.n_xi(), table.n_x());
    let to_u32 = |v: usize| u32::try_from(v).map_err(|_| Error::Io(format!("dimension {v} exceeds u32")));
    w.write_all(PHI_MAGIC)?;
    w.write_all(&to_u32(rows)?.to_le_bytes())?;
    w.write_all(&to_u32(cols)?.to_le_bytes())?;
    w.write_all(&[0u8; 4])?;
    let mut buf = Vec::with_capacity(8 * cols);
    for j in 0..rows {
        buf.clear();
        for v in table.column(j) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_phi_matrix<R: Read>(mut r: R) -> Result<PhiMatrix> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[0..4] != PHI_MAGIC {
        return Err(Error::Io("bad magic in phi matrix".into()));
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * rows * cols {
        return Err(Error::Io(format!(
            "phi matrix payload has {} bytes, expected {}",
            bytes.len(),
            8 * rows * cols
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(PhiMatrix { rows, cols, data })
}

/// Two columns `coord,value`.
pub fn write_grid_function_csv<W: Write>(w: W, f: &GridFunction) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["coord", "value"])?;
    for (c, v) in f.coords.iter().zip(&f.values) {
        out.write_record([fmt_f64(*c), fmt_f64(*v)])?;
    }
    out.flush()?;
    Ok(())
}

/// Three columns `coord,re,im`.
pub fn write_complex_csv<W: Write>(w: W, coords: &[f64], values: &[num_complex::Complex64]) -> Result<()> {
    if coords.len() != values.len() {
        return Err(Error::GridMismatch("coordinate and value lengths differ".into()));
    }
    let mut out = writer(w);
    out.write_record(["coord", "re", "im"])?;
    for (c, v) in coords.iter().zip(values) {
        out.write_record([fmt_f64(*c), fmt_f64(v.re), fmt_f64(v.im)])?;
    }
    out.flush()?;
    Ok(())
}

/// Columns (coordinate, re, im); a two-column file has im = 0.
pub fn read_complex_csv<R: Read>(r: R) -> Result<(Vec<f64>, Vec<num_complex::Complex64>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(r);
    let width = rdr.headers()?.len();
    if !(2..=3).contains(&width) {
        return Err(Error::Io(format!("expected 2 or 3 columns, found {width}")));
    }
    let (mut coords, mut values) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        coords.push(parse(&rec[0], line)?);
        let im = if width == 3 { parse(&rec[2], line)? } else { 0.0 };
        values.push(num_complex::Complex64::new(parse(&rec[1], line)?, im));
    }
    if coords.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Io("coordinates must be strictly increasing".into()));
    }
    Ok((coords, values))
}

/// Reads a real grid function; a third column must vanish.
pub fn read_grid_function_csv<R: Read>(r: R, parity: Parity) -> Result<GridFunction> {
    let (coords, values) = read_complex_csv(r)?;
    if let Some(v) = values.iter().find(|v| v.im != 0.0) {
        return Err(Error::InvalidArgument(format!(
            "grid functions are real; found imaginary part {}",
            v.im
        )));
    }
    Ok(GridFunction::new(coords, values.iter().map(|v| v.re).collect(), parity))
}

/// Triples `xi,eta,F`; `stride` thins both axes.
pub fn write_kernel_csv<W: Write>(w: W, kernel: &BKernel, stride: usize) -> Result<()> {
    let stride = stride.max(1);
    let mut out = writer(w);
    out.write_record(["xi", "eta", "F"])?;
    for a in (0..kernel.n()).step_by(stride) {
        for b in (0..kernel.n()).step_by(stride) {
            out.write_record([kernel.xi[a], kernel.xi[b], kernel.get(a, b)].map(fmt_f64))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Long format `t,x,u,ut`, every `stride`-th x sample.
pub fn write_snapshots_csv<W: Write>(w: W, states: &[WaveState], stride: usize) -> Result<()> {
    let stride = stride.max(1);
    let mut out = writer(w);
    out.write_record(["t", "x", "u", "ut"])?;
    for s in states {
        for i in (0..s.x.len()).step_by(stride) {
            out.write_record([s.t, s.x[i], s.u[i], s.ut[i]].map(fmt_f64))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Generic numeric table with a header row.
pub fn write_rows_csv<W: Write, const N: usize>(w: W, header: [&str; N], rows: &[[f64; N]]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(r.map(fmt_f64))?;
    }
    out.flush()?;
    Ok(())
}
