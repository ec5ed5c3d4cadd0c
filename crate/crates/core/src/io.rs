//! File formats: PNG and binary PGM images, mask run-length text, raw
//! k-space dumps, and the 16-bit signed-offset estimate format.
//!
//! Grayscale values map linearly between stored integers and `[0, 1]` with
//! no gamma handling; pixel storage order is row-major, top row first.
//! Saving after loading at the same bit depth is lossless.

use std::fs;
use std::io::{Read, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{ErrorEstimate, EstimateMeta};
use crate::error::{Error, Result};
use crate::img::{clamp01, ColorImage, GrayImage};
use crate::kspace::KSpace;
use crate::sampling::{MaskKind, SamplingMask};

/// Stored integer width for grayscale output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitDepth {
    Eight,
    Sixteen,
}

fn read_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Read {
        path: path.to_path_buf(),
        source,
    }
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Write {
        path: path.to_path_buf(),
        source,
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Loads an 8- or 16-bit grayscale PNG or binary PGM, mapping stored values
/// linearly onto `[0, 1]`.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    match extension(path).as_str() {
        "png" => load_gray_png(path),
        "pgm" => load_gray_pgm(path),
        other => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!("unknown extension {other:?}, expected png or pgm"),
        }),
    }
}

fn load_gray_png(path: &Path) -> Result<GrayImage> {
    let dynamic = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(source) => Error::Read {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })?;
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    let pixels: Vec<f64> = match &dynamic {
        image::DynamicImage::ImageLuma8(buf) => {
            buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect()
        }
        image::DynamicImage::ImageLuma16(buf) => {
            buf.pixels().map(|p| p.0[0] as f64 / 65535.0).collect()
        }
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                reason: format!(
                    "grayscale loader cannot handle color type {:?}",
                    other.color()
                ),
            })
        }
    };
    GrayImage::new(h, w, pixels)
}

/// Saves a grayscale image at the requested bit depth; the format follows
/// the extension (`.png` or `.pgm`). Values are clamped to `[0, 1]` before
/// quantization.
pub fn save_gray(img: &GrayImage, path: &Path, depth: BitDepth) -> Result<()> {
    match extension(path).as_str() {
        "png" => save_gray_png(img, path, depth),
        "pgm" => save_gray_pgm(img, path, depth),
        other => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!("unknown extension {other:?}, expected png or pgm"),
        }),
    }
}

fn quantize(v: f64, max: f64) -> f64 {
    (clamp01(v) * max).round()
}

fn save_gray_png(img: &GrayImage, path: &Path, depth: BitDepth) -> Result<()> {
    let (h, w) = img.dims();
    let map_err = |e: image::ImageError| Error::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    match depth {
        BitDepth::Eight => {
            let buf = image::ImageBuffer::<image::Luma<u8>, Vec<u8>>::from_fn(
                w as u32,
                h as u32,
                |x, y| image::Luma([quantize(img.get(y as usize, x as usize), 255.0) as u8]),
            );
            buf.save(path).map_err(map_err)
        }
        BitDepth::Sixteen => {
            let buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_fn(
                w as u32,
                h as u32,
                |x, y| image::Luma([quantize(img.get(y as usize, x as usize), 65535.0) as u16]),
            );
            buf.save(path).map_err(map_err)
        }
    }
}

/// Saves an RGB color image as 8-bit PNG.
pub fn save_color(img: &ColorImage, path: &Path) -> Result<()> {
    if extension(path) != "png" {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: "color output is 8-bit RGB PNG only".into(),
        });
    }
    let (h, w) = img.dims();
    let buf =
        image::ImageBuffer::<image::Rgb<u8>, Vec<u8>>::from_fn(w as u32, h as u32, |x, y| {
            let [r, g, b] = img.get(y as usize, x as usize);
            image::Rgb([
                quantize(r, 255.0) as u8,
                quantize(g, 255.0) as u8,
                quantize(b, 255.0) as u8,
            ])
        });
    buf.save(path).map_err(|e| Error::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })
}

fn save_gray_pgm(img: &GrayImage, path: &Path, depth: BitDepth) -> Result<()> {
    let (h, w) = img.dims();
    let maxval: u32 = match depth {
        BitDepth::Eight => 255,
        BitDepth::Sixteen => 65535,
    };
    let mut bytes = format!("P5\n{w} {h}\n{maxval}\n").into_bytes();
    for &v in img.pixels() {
        let q = quantize(v, maxval as f64) as u32;
        match depth {
            BitDepth::Eight => bytes.push(q as u8),
            BitDepth::Sixteen => bytes.extend_from_slice(&(q as u16).to_be_bytes()),
        }
    }
    fs::write(path, bytes).map_err(write_err(path))
}

fn load_gray_pgm(path: &Path) -> Result<GrayImage> {
    let data = fs::read(path).map_err(read_err(path))?;
    let decode = |reason: &str| Error::Decode {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if !data.starts_with(b"P5") {
        return Err(decode("not a binary PGM (missing P5 magic)"));
    }
    // Header: three whitespace-separated tokens after the magic, with
    // comment lines allowed.
    let mut pos = 2usize;
    let mut tokens: Vec<u64> = Vec::new();
    while tokens.len() < 3 {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < data.len() && data[pos] == b'#' {
            while pos < data.len() && data[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(decode("malformed PGM header"));
        }
        let text = std::str::from_utf8(&data[start..pos]).unwrap();
        tokens.push(text.parse().map_err(|_| decode("oversized header field"))?);
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let (w, h, maxval) = (tokens[0] as usize, tokens[1] as usize, tokens[2]);
    if w == 0 || h == 0 || h.checked_mul(w).is_none() {
        return Err(decode("bad dimensions"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!("PGM maxval {maxval} outside 1..=65535"),
        });
    }
    let wide = maxval > 255;
    let expected = h * w * if wide { 2 } else { 1 };
    let raster = &data[pos.min(data.len())..];
    if raster.len() < expected {
        return Err(decode("truncated raster"));
    }
    let pixels: Vec<f64> = if wide {
        raster[..expected]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / maxval as f64)
            .collect()
    } else {
        raster[..expected]
            .iter()
            .map(|&b| b as f64 / maxval as f64)
            .collect()
    };
    GrayImage::new(h, w, pixels)
}

/// Saves a mask as an 8-bit binary PGM, white for retained bins.
pub fn save_mask_pgm(mask: &SamplingMask, path: &Path) -> Result<()> {
    let img = GrayImage::from_fn(mask.height(), mask.width(), |r, c| {
        if mask.is_retained(r, c) {
            1.0
        } else {
            0.0
        }
    });
    save_gray_pgm(&img, path, BitDepth::Eight)
}

/// Compact run-length text encoding of a mask, exact for reuse:
///
/// ```text
/// maskrle 1
/// horizontal 128 128
/// 7552x0 128x1 ...
/// ```
pub fn mask_to_rle(mask: &SamplingMask) -> String {
    let mut out = format!(
        "maskrle 1\n{} {} {}\n",
        mask.kind(),
        mask.height(),
        mask.width()
    );
    let grid = mask.grid();
    let mut i = 0usize;
    let mut runs: Vec<String> = Vec::new();
    while i < grid.len() {
        let value = grid[i];
        let start = i;
        while i < grid.len() && grid[i] == value {
            i += 1;
        }
        runs.push(format!("{}x{}", i - start, u8::from(value)));
    }
    out.push_str(&runs.join(" "));
    out.push('\n');
    out
}

/// Parses the run-length text produced by [`mask_to_rle`].
pub fn mask_from_rle(text: &str) -> Result<SamplingMask> {
    let bad = |reason: &str| Error::InvalidMask(format!("RLE parse: {reason}"));
    let mut lines = text.lines();
    match lines.next() {
        Some("maskrle 1") => {}
        _ => return Err(bad("missing 'maskrle 1' header")),
    }
    let dims = lines.next().ok_or_else(|| bad("missing dimension line"))?;
    let mut parts = dims.split_whitespace();
    let kind = match parts.next() {
        Some("horizontal") => MaskKind::Horizontal,
        Some("radial") => MaskKind::Radial,
        Some("full") => MaskKind::Full,
        Some("custom") => MaskKind::Custom,
        other => return Err(bad(&format!("unknown kind {other:?}"))),
    };
    let height: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("bad height"))?;
    let width: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("bad width"))?;
    let runs = lines.next().ok_or_else(|| bad("missing run line"))?;
    let mut grid = Vec::with_capacity(height * width);
    for run in runs.split_whitespace() {
        let (count, value) = run.split_once('x').ok_or_else(|| bad("malformed run"))?;
        let count: usize = count.parse().map_err(|_| bad("bad run count"))?;
        let value = match value {
            "0" => false,
            "1" => true,
            _ => return Err(bad("run value must be 0 or 1")),
        };
        grid.extend(std::iter::repeat_n(value, count));
    }
    if grid.len() != height * width {
        return Err(bad(&format!(
            "runs cover {} bins, expected {}",
            grid.len(),
            height * width
        )));
    }
    SamplingMask::with_kind(height, width, grid, kind)
}

const KSPACE_MAGIC: &[u8] = b"KSP1\n";

/// Raw k-space dump: `KSP1` magic, text dimensions, then row-major
/// little-endian f64 (re, im) pairs.
pub fn save_kspace(k: &KSpace, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(k.values().len() * 16 + 32);
    bytes.extend_from_slice(KSPACE_MAGIC);
    bytes.extend_from_slice(format!("{} {}\n", k.height(), k.width()).as_bytes());
    for v in k.values() {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    fs::write(path, bytes).map_err(write_err(path))
}

pub fn load_kspace(path: &Path) -> Result<KSpace> {
    let mut file = fs::File::open(path).map_err(read_err(path))?;
    let mut data = Vec::new();
    file.read_to_end(&mut data).map_err(read_err(path))?;
    let decode = |reason: &str| Error::Decode {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if !data.starts_with(KSPACE_MAGIC) {
        return Err(decode("missing KSP1 magic"));
    }
    let rest = &data[KSPACE_MAGIC.len()..];
    let newline = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| decode("missing dimension line"))?;
    let header = std::str::from_utf8(&rest[..newline]).map_err(|_| decode("bad header"))?;
    let mut parts = header.split_whitespace();
    let height: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| decode("bad height"))?;
    let width: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| decode("bad width"))?;
    let body = &rest[newline + 1..];
    let expected = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(16))
        .ok_or_else(|| decode("dimension overflow"))?;
    if body.len() != expected {
        return Err(decode(&format!(
            "expected {expected} raster bytes, got {}",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(16)
        .map(|chunk| {
            let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
            rustfft::num_complex::Complex64::new(re, im)
        })
        .collect();
    KSpace::new(height, width, values)
}

/// Debug view of k-space: real and imaginary parts normalized to `[0, 1]`
/// and written as paired 16-bit PGMs (`<stem>_re.pgm`, `<stem>_im.pgm`).
/// Lossy; for inspection only.
pub fn save_kspace_debug_pgm(k: &KSpace, stem: &Path) -> Result<()> {
    let (h, w) = k.dims();
    for (suffix, part) in [("re", 0usize), ("im", 1usize)] {
        let img = GrayImage::from_fn(h, w, |r, c| {
            let v = k.get(r, c);
            if part == 0 {
                v.re
            } else {
                v.im
            }
        });
        let normalized = crate::img::normalize_unit(&img);
        let mut path = stem.to_path_buf();
        let name = format!(
            "{}_{suffix}.pgm",
            stem.file_name().and_then(|n| n.to_str()).unwrap_or("kspace")
        );
        path.set_file_name(name);
        save_gray_pgm(&normalized, &path, BitDepth::Sixteen)?;
    }
    Ok(())
}

/// Sidecar stored next to a serialized estimate; carries the exact value
/// scale needed to decode the 16-bit pixels back into signed errors.
#[derive(Debug, Serialize, Deserialize)]
pub struct EstimateSidecar {
    pub meta: EstimateMeta,
    /// Half-range of the encoding: stored 0 maps to `-max_abs`, 65535 to
    /// `+max_abs`, 32768 near zero.
    pub max_abs: f64,
    pub encoding: String,
}

const ESTIMATE_ENCODING: &str = "u16 = round((d / (2 * max_abs) + 0.5) * 65535)";

/// Writes an estimate as a 16-bit signed-offset PNG plus a JSON sidecar at
/// `<path with .json extension>`. Quantization to 16 bits is the only loss.
pub fn save_estimate(est: &ErrorEstimate, png_path: &Path) -> Result<()> {
    let max_abs = {
        let m = est.image.max_abs();
        if m > 0.0 {
            m
        } else {
            1.0
        }
    };
    let encoded = est.image.map(|d| d / (2.0 * max_abs) + 0.5);
    save_gray_png(&encoded, png_path, BitDepth::Sixteen)?;
    let sidecar = EstimateSidecar {
        meta: est.meta.clone(),
        max_abs,
        encoding: ESTIMATE_ENCODING.into(),
    };
    let json_path = png_path.with_extension("json");
    let mut file = fs::File::create(&json_path).map_err(write_err(&json_path))?;
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serialization");
    file.write_all(text.as_bytes()).map_err(write_err(&json_path))?;
    file.write_all(b"\n").map_err(write_err(&json_path))
}

/// Reads back an estimate written by [`save_estimate`].
pub fn load_estimate(png_path: &Path) -> Result<ErrorEstimate> {
    let json_path = png_path.with_extension("json");
    let text = fs::read_to_string(&json_path).map_err(read_err(&json_path))?;
    let sidecar: EstimateSidecar = serde_json::from_str(&text).map_err(|e| Error::Decode {
        path: json_path.clone(),
        reason: e.to_string(),
    })?;
    let encoded = load_gray_png(png_path)?;
    let image = encoded.map(|u| (u - 0.5) * 2.0 * sidecar.max_abs);
    Ok(ErrorEstimate {
        image,
        meta: sidecar.meta,
    })
}
