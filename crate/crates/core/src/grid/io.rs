use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GridMask, Window};
use crate::error::{Error, Result};

/// Geometry header stored next to raw raster payloads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub n: usize,
    pub origin: Vec<f64>,
    pub extent: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl From<&Window> for GridHeader {
    fn from(w: &Window) -> Self {
        GridHeader {
            n: w.n(),
            origin: w.origin().to_vec(),
            extent: w.extent().to_vec(),
            resolution: w.resolution().to_vec(),
        }
    }
}

impl GridHeader {
    pub fn window(&self) -> Result<Window> {
        if self.origin.len() != self.n {
            return Err(Error::Format("header dimension mismatch".into()));
        }
        Window::new(
            self.origin.clone(),
            self.extent.clone(),
            self.resolution.clone(),
        )
    }
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Binary PGM of a 2D mask: first row is the highest `y`, 255 = inside.
pub fn mask_to_pgm(mask: &GridMask) -> Result<Vec<u8>> {
    let w = mask.window();
    if w.n() != 2 {
        return Err(Error::Format("PGM output needs a 2D mask".into()));
    }
    let (nx, ny) = (w.resolution()[0], w.resolution()[1]);
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    out.reserve(nx * ny);
    for y in (0..ny).rev() {
        for x in 0..nx {
            out.push(if mask.get(&[x, y]) { 255 } else { 0 });
        }
    }
    Ok(out)
}

/// Inverse of [`mask_to_pgm`]; any nonzero pixel counts as inside.
pub fn pgm_to_mask(bytes: &[u8], window: &Window) -> Result<GridMask> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(Error::Format(format!("not a binary PGM: {}", fields[0])));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PGM field {s}")))
    };
    let (nx, ny) = (parse(&fields[1])?, parse(&fields[2])?);
    if window.n() != 2 || window.resolution() != [nx, ny] {
        return Err(Error::Format(format!(
            "PGM is {nx}x{ny}, window is {:?}",
            window.resolution()
        )));
    }
    let pixels = bytes
        .get(pos..pos + nx * ny)
        .ok_or_else(|| Error::Format("truncated PGM data".into()))?;
    let mut mask = GridMask::empty(window);
    for (row, y) in (0..ny).rev().enumerate() {
        for x in 0..nx {
            if pixels[row * nx + x] != 0 {
                mask.set(&[x, y], true);
            }
        }
    }
    Ok(mask)
}

/// Bits packed LSB-first in linear (axis 0 fastest) order.
pub fn pack_bits(mask: &GridMask) -> Vec<u8> {
    let mut out = vec![0u8; mask.bits().len().div_ceil(8)];
    for (i, &b) in mask.bits().iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

pub fn unpack_bits(bytes: &[u8], window: &Window) -> Result<GridMask> {
    let len = window.len();
    if bytes.len() != len.div_ceil(8) {
        return Err(Error::Format(format!(
            "bit sidecar has {} bytes, expected {}",
            bytes.len(),
            len.div_ceil(8)
        )));
    }
    let bits = (0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
    GridMask::from_bits(window, bits)
}

/// Writes `stem.json` plus `stem.pgm` (2D) or `stem.bits` (other dimensions).
pub fn write_mask(mask: &GridMask, stem: &Path) -> Result<Vec<PathBuf>> {
    let header = with_ext(stem, "json");
    fs::write(
        &header,
        serde_json::to_vec_pretty(&GridHeader::from(mask.window()))?,
    )?;
    let payload = if mask.window().n() == 2 {
        let p = with_ext(stem, "pgm");
        fs::write(&p, mask_to_pgm(mask)?)?;
        p
    } else {
        let p = with_ext(stem, "bits");
        fs::write(&p, pack_bits(mask))?;
        p
    };
    Ok(vec![header, payload])
}

pub fn read_mask(stem: &Path) -> Result<GridMask> {
    let header: GridHeader = serde_json::from_slice(&fs::read(with_ext(stem, "json"))?)?;
    let window = header.window()?;
    if window.n() == 2 {
        pgm_to_mask(&fs::read(with_ext(stem, "pgm"))?, &window)
    } else {
        unpack_bits(&fs::read(with_ext(stem, "bits"))?, &window)
    }
}

/// Writes `stem.json` plus `stem.f64` (little-endian, linear order).
pub fn write_field(window: &Window, values: &[f64], stem: &Path) -> Result<Vec<PathBuf>> {
    let header = with_ext(stem, "json");
    fs::write(&header, serde_json::to_vec_pretty(&GridHeader::from(window))?)?;
    let data = with_ext(stem, "f64");
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&data, bytes)?;
    Ok(vec![header, data])
}

pub fn read_field(stem: &Path) -> Result<(Window, Vec<f64>)> {
    let header: GridHeader = serde_json::from_slice(&fs::read(with_ext(stem, "json"))?)?;
    let window = header.window()?;
    let bytes = fs::read(with_ext(stem, "f64"))?;
    if bytes.len() != 8 * window.len() {
        return Err(Error::Format("field payload length mismatch".into()));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((window, values))
}
