//! Descriptor cache files: a 16-byte header (`CVADDESC` magic, rows, cols as
//! little-endian u32) followed by row-major little-endian f32 values.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::binio;

const MAGIC: &[u8; 8] = b"CVADDESC";

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl DescriptorMatrix {
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| v as f64).collect()
    }
}

pub fn write_matrix(path: &Path, m: &DescriptorMatrix) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    binio::write_u32(&mut w, m.rows as u32)?;
    binio::write_u32(&mut w, m.cols as u32)?;
    binio::write_f32s(&mut w, m.data.iter().copied())?;
    w.flush()
}

pub fn read_matrix(path: &Path) -> io::Result<DescriptorMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "not a descriptor cache file",
        ));
    }
    let rows = binio::read_u32(&mut r)? as usize;
    let cols = binio::read_u32(&mut r)? as usize;
    let data = binio::read_f32s(&mut r, rows * cols)?;
    Ok(DescriptorMatrix { rows, cols, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_16_bytes_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let m = DescriptorMatrix {
            rows: 2,
            cols: 3,
            data: vec![0.0, 0.25, 0.5, 1.0, 2.0, 3.0],
        };
        write_matrix(&p, &m).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 16 + 6 * 4);
        assert_eq!(read_matrix(&p).unwrap(), m);
    }
}
