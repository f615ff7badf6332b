//! Field serialization.
//!
//! Binary layout: a 16-byte magic, a little-endian u32 header length, a JSON
//! header `{"n", "L", "N", "T", "M", "kind"}`, then the sample values as
//! little-endian 64-bit floats in time-major, row-major spatial order.
//!
//! The CSV form carries the same JSON header on its first line, then one
//! comma-separated row of spatial values per time slice.

use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind, SpaceTimeGrid};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const FIELD_MAGIC: [u8; 16] = *b"FRACLAB-FIELD\0\0\0";

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    #[serde(flatten)]
    grid: SpaceTimeGrid,
    kind: FieldKind,
}

pub fn write_field_binary(field: &Field, mut w: impl Write) -> Result<()> {
    let header = FieldHeader { grid: field.grid, kind: field.kind };
    let json = serde_json::to_vec(&header)?;
    w.write_all(&FIELD_MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field_binary(mut r: impl Read) -> Result<Field> {
    let mut magic = [0u8; 16];
    r.read_exact(&mut magic)?;
    if magic != FIELD_MAGIC {
        return Err(Error::MalformedField("bad magic".into()));
    }
    let mut len_bytes = [0u8; 4];
    r.read_exact(&mut len_bytes)?;
    let len = u32::from_le_bytes(len_bytes) as usize;
    if len > 1 << 20 {
        return Err(Error::MalformedField(format!("unreasonable header length {len}")));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: FieldHeader = serde_json::from_slice(&json)?;
    let expect = match header.kind {
        FieldKind::Full => header.grid.time_len() * header.grid.spatial_len(),
        FieldKind::Slice => header.grid.spatial_len(),
    };
    let mut values = Vec::with_capacity(expect);
    let mut buf = [0u8; 8];
    for _ in 0..expect {
        r.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Field::from_values(header.grid, header.kind, values)
}

pub fn write_field_csv(field: &Field, mut w: impl Write) -> Result<()> {
    let header = FieldHeader { grid: field.grid, kind: field.kind };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    let s = field.grid.spatial_len();
    for chunk in field.values().chunks(s) {
        let row: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_field_csv(r: impl Read) -> Result<Field> {
    let mut content = String::new();
    let mut r = std::io::BufReader::new(r);
    r.read_to_string(&mut content)?;
    let mut lines = content.lines();
    let header: FieldHeader = serde_json::from_str(
        lines.next().ok_or_else(|| Error::MalformedField("empty file".into()))?,
    )?;
    let mut values = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|e| Error::MalformedField(format!("bad value {tok:?}: {e}")))?;
            values.push(v);
        }
    }
    Field::from_values(header.grid, header.kind, values)
}

/// Extension-dispatched write: `.csv` is text, anything else binary.
pub fn write_field_path(field: &Field, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let w = std::io::BufWriter::new(file);
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        write_field_csv(field, w)
    } else {
        write_field_binary(field, w)
    }
}

pub fn read_field_path(path: &Path) -> Result<Field> {
    let file = std::fs::File::open(path)?;
    let r = std::io::BufReader::new(file);
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        read_field_csv(r)
    } else {
        read_field_binary(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use proptest::prelude::*;

    #[test]
    fn binary_roundtrip_preserves_bits() {
        let g = make_grid(2, 4.0, 8, 1.0, 3).unwrap();
        let f = Field::full_from_fn(g, |t, x| (t * 31.0 + x[0] * 7.0 - x[1]).sin());
        let mut buf = Vec::new();
        write_field_binary(&f, &mut buf).unwrap();
        let back = read_field_binary(buf.as_slice()).unwrap();
        assert_eq!(back.grid, f.grid);
        assert_eq!(back.kind, f.kind);
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn rejects_foreign_bytes() {
        assert!(read_field_binary(&b"not a field file at all....."[..]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn csv_roundtrip_is_lossless(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = make_grid(1, 2.0, 8, 1.0, 2).unwrap();
            let f = Field::slice_from_fn(g, |_| rng.gen_range(-1e3..1e3));
            let mut buf = Vec::new();
            write_field_csv(&f, &mut buf).unwrap();
            let back = read_field_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.values(), f.values());
        }
    }
}
