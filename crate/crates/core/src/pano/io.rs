//! File formats: Radiance RGBE panoramas, raw float maps, false-color PNG.
//!
//! Raw maps are little-endian: an 8-byte magic, `u32` width, `u32` height,
//! then row-major `f64` samples (interleaved RGB for the colour variant).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::codecs::hdr::{HdrDecoder, HdrEncoder};
use image::ImageDecoder;

use super::{false_color, HdrPanorama, ScalarMap};
use crate::{Error, Result};

pub const MAP_MAGIC: &[u8; 8] = b"PHMAP64\0";
pub const RGB_MAGIC: &[u8; 8] = b"PHRGB64\0";

/// Reads a Radiance picture. Stored values are divided by the product of all
/// `EXPOSURE` header entries to recover physical radiance.
pub fn read_rgbe(path: &Path) -> Result<HdrPanorama> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = HdrDecoder::new(BufReader::new(file))
        .map_err(|e| Error::format(path, e.to_string()))?;
    let meta = decoder.metadata();
    let (w, h) = (meta.width as usize, meta.height as usize);
    let mut buf = vec![0u8; decoder.total_bytes() as usize];
    decoder
        .read_image(&mut buf)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let pixels = buf
        .chunks_exact(12)
        .map(|px| {
            let mut rgb = [0.0; 3];
            for (c, v) in rgb.iter_mut().enumerate() {
                let b: [u8; 4] = px[4 * c..4 * c + 4].try_into().unwrap();
                *v = f32::from_ne_bytes(b) as f64;
            }
            rgb
        })
        .collect();
    let exposure = meta.exposure.map(f64::from).unwrap_or(1.0);
    if !(exposure.is_finite() && exposure > 0.0) {
        return Err(Error::format(path, format!("invalid EXPOSURE {exposure}")));
    }
    HdrPanorama::new(w, h, pixels, 1.0 / exposure)
}

/// Encodes a Radiance picture in memory, with an `EXPOSURE` header when the
/// panorama scale is not one.
pub fn encode_rgbe(pano: &HdrPanorama) -> Result<Vec<u8>> {
    let rgb: Vec<image::Rgb<f32>> = pano
        .pixels()
        .iter()
        .map(|p| image::Rgb([p[0] as f32, p[1] as f32, p[2] as f32]))
        .collect();
    let mut bytes = Vec::new();
    HdrEncoder::new(&mut bytes)
        .encode(&rgb, pano.width(), pano.height())
        .map_err(|e| Error::format("<rgbe encoder>", e.to_string()))?;
    if pano.scale() != 1.0 {
        let marker = b"FORMAT=32-bit_rle_rgbe\n";
        let at = bytes
            .windows(marker.len())
            .position(|w| w == marker)
            .ok_or_else(|| Error::format("<rgbe encoder>", "missing FORMAT line"))?
            + marker.len();
        let line = format!("EXPOSURE={:e}\n", 1.0 / pano.scale());
        bytes.splice(at..at, line.into_bytes());
    }
    Ok(bytes)
}

pub fn write_rgbe(path: &Path, pano: &HdrPanorama) -> Result<()> {
    let bytes = encode_rgbe(pano)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_raw(path: &Path, magic: &[u8; 8], w: usize, h: usize, samples: impl Iterator<Item = f64>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut header = [0u8; 16];
    header[..8].copy_from_slice(magic);
    header[8..12].copy_from_slice(&(w as u32).to_le_bytes());
    header[12..].copy_from_slice(&(h as u32).to_le_bytes());
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        out.write_all(&header)?;
        for s in samples {
            out.write_all(&s.to_le_bytes())?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

/// Parses one raw block from `bytes`, returning dims, samples, and bytes consumed.
pub fn parse_raw_block(
    bytes: &[u8],
    magic: &[u8; 8],
    channels: usize,
) -> std::result::Result<(usize, usize, Vec<f64>, usize), String> {
    if bytes.len() < 16 || &bytes[..8] != magic {
        return Err("bad magic".into());
    }
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let n = w * h * channels;
    let end = 16 + 8 * n;
    if bytes.len() < end {
        return Err(format!("truncated: {w}x{h} needs {end} bytes, have {}", bytes.len()));
    }
    let data = bytes[16..end]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((w, h, data, end))
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

pub fn write_map(path: &Path, map: &ScalarMap) -> Result<()> {
    write_raw(path, MAP_MAGIC, map.width(), map.height(), map.data().iter().copied())
}

pub fn read_map(path: &Path) -> Result<ScalarMap> {
    let bytes = read_all(path)?;
    let (w, h, data, used) = parse_raw_block(&bytes, MAP_MAGIC, 1).map_err(|e| Error::format(path, e))?;
    if used != bytes.len() {
        return Err(Error::format(path, "trailing bytes after map data"));
    }
    ScalarMap::new(w, h, data)
}

/// Plain float RGB importer; the physical scale is taken as one.
pub fn read_float_rgb(path: &Path) -> Result<HdrPanorama> {
    let bytes = read_all(path)?;
    let (w, h, data, used) = parse_raw_block(&bytes, RGB_MAGIC, 3).map_err(|e| Error::format(path, e))?;
    if used != bytes.len() {
        return Err(Error::format(path, "trailing bytes after image data"));
    }
    let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    HdrPanorama::new(w, h, pixels, 1.0)
}

/// Writes stored values multiplied by the scale, so the file is in physical units.
pub fn write_float_rgb(path: &Path, pano: &HdrPanorama) -> Result<()> {
    let s = pano.scale();
    write_raw(
        path,
        RGB_MAGIC,
        pano.width(),
        pano.height(),
        pano.pixels().iter().flat_map(|p| p.map(|c| c * s)),
    )
}

/// Loads a panorama by extension: `.hdr`/`.pic` as RGBE, anything else as raw float RGB.
pub fn read_panorama(path: &Path) -> Result<HdrPanorama> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("hdr") | Some("pic") => read_rgbe(path),
        _ => read_float_rgb(path),
    }
}

pub fn write_false_color_png(path: &Path, map: &ScalarMap, lo: f64, hi: f64) -> Result<()> {
    false_color(map, lo, hi)
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::format(path, other.to_string()),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient_pano(scale: f64) -> HdrPanorama {
        let (w, h) = (64, 32);
        let pixels = (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                [0.5 + x / 8.0, 0.25 + y / 16.0, 3.0]
            })
            .collect();
        HdrPanorama::new(w, h, pixels, scale).unwrap()
    }

    #[test]
    fn rgbe_roundtrip_within_mantissa_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.hdr");
        let pano = gradient_pano(1.0);
        write_rgbe(&path, &pano).unwrap();
        let back = read_rgbe(&path).unwrap();
        assert_eq!(back.width(), 64);
        assert_eq!(back.scale(), 1.0);
        for (a, b) in pano.pixels().iter().zip(back.pixels()) {
            // RGBE keeps 8 mantissa bits relative to the largest channel
            let m = a.iter().cloned().fold(0.0, f64::max);
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= m / 128.0, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn exposure_header_sets_scale() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.hdr");
        let pano = gradient_pano(4.0);
        let bytes = encode_rgbe(&pano).unwrap();
        let text = String::from_utf8_lossy(&bytes[..80]);
        assert!(text.contains("EXPOSURE=2.5e-1"), "{text}");
        std::fs::write(&path, bytes).unwrap();
        let back = read_rgbe(&path).unwrap();
        assert!((back.scale() - 4.0).abs() < 1e-6);
    }

    #[test]
    fn raw_map_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let map = ScalarMap::from_fn(5, 3, |x, y| (x as f64).sin() * 1e3 + y as f64 / 7.0);
        write_map(&path, &map).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 16 + 8 * 15);
        assert_eq!(read_map(&path).unwrap(), map);
        // a map is not an RGB image
        assert!(read_float_rgb(&path).is_err());
    }

    #[test]
    fn float_rgb_bakes_in_scale() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.bin");
        let pano = gradient_pano(2.0);
        write_float_rgb(&path, &pano).unwrap();
        let back = read_panorama(&path).unwrap();
        assert_eq!(back.scale(), 1.0);
        assert_eq!(back.pixels()[10][0], pano.pixels()[10][0] * 2.0);
    }

    #[test]
    fn truncated_map_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let map = ScalarMap::filled(4, 4, 1.0);
        write_map(&path, &map).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_map(&path), Err(Error::Format { .. })));
    }
}
