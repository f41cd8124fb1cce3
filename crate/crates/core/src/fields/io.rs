use std::io::{Read, Write};

use super::{Grid, SampledField};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"OSF1";

/// Little-endian binary layout: magic, dimension (u32), points per axis
/// (u64), half-width L (f64), spacing h (f64), then the values row-major.
pub fn write_binary<W: Write>(f: &SampledField, mut out: W) -> Result<()> {
    let g = f.grid();
    out.write_all(MAGIC)?;
    out.write_all(&(g.dim as u32).to_le_bytes())?;
    out.write_all(&(g.points as u64).to_le_bytes())?;
    out.write_all(&g.half_width.to_le_bytes())?;
    out.write_all(&g.spacing().to_le_bytes())?;
    for v in f.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<SampledField> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidArgument("not a field file".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    input.read_exact(&mut b8)?;
    let points = u64::from_le_bytes(b8) as usize;
    input.read_exact(&mut b8)?;
    let half_width = f64::from_le_bytes(b8);
    input.read_exact(&mut b8)?;
    let h = f64::from_le_bytes(b8);
    let grid = Grid::new(dim, half_width, points)?;
    if (grid.spacing() - h).abs() > 1e-12 * h {
        return Err(Error::InvalidArgument(format!("header spacing {h} inconsistent with L and points")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        input.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    SampledField::new(grid, values)
}

/// Debug CSV: one row per grid point with its coordinates and value.
pub fn write_csv<W: Write>(f: &SampledField, out: W) -> Result<()> {
    let g = f.grid();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string()];
    header.extend((0..g.dim).map(|a| format!("x{a}")));
    header.push("value".into());
    w.write_record(&header)?;
    for (i, v) in f.values().iter().enumerate() {
        let x = g.point(i);
        let mut row = vec![i.to_string()];
        row.extend(x[..g.dim].iter().map(|c| format!("{c:?}")));
        row.push(format!("{v:?}"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_csv`] back onto `grid`.
pub fn read_csv<R: Read>(grid: Grid, input: R) -> Result<SampledField> {
    let mut r = csv::Reader::from_reader(input);
    let mut values = vec![0.0; grid.len()];
    let mut seen = 0;
    for rec in r.records() {
        let rec = rec?;
        let parse = |k: usize| -> Result<&str> {
            rec.get(k).ok_or_else(|| Error::InvalidArgument("short csv row".into()))
        };
        let i: usize = parse(0)?.parse().map_err(|_| Error::InvalidArgument("bad index".into()))?;
        let v: f64 = parse(grid.dim + 1)?.parse().map_err(|_| Error::InvalidArgument("bad value".into()))?;
        if i >= grid.len() {
            return Err(Error::InvalidArgument(format!("index {i} outside grid")));
        }
        values[i] = v;
        seen += 1;
    }
    if seen != grid.len() {
        return Err(Error::InvalidArgument(format!("{seen} rows for {} points", grid.len())));
    }
    SampledField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let g = Grid::with_spacing(2, 1.0, 0.125).unwrap();
        let f = SampledField::from_fn(g, |x| (x[0] * 3.1).sin() * x[1] + 1.0 / 3.0).unwrap();
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 + 8 + 8 + 8 * g.len());
        assert_eq!(read_binary(buf.as_slice()).unwrap(), f);
        buf[0] = b'X';
        assert!(read_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::with_spacing(1, 1.0, 0.125).unwrap();
        let f = SampledField::from_fn(g, |x| x[0] / 7.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        assert_eq!(read_csv(g, buf.as_slice()).unwrap(), f);
    }
}
