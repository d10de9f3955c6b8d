//! Raster I/O and the preprocessing stage: Netpbm parsing, luma collapse,
//! Otsu binarization and isolated-pixel removal.

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dim {
                expected: width * height,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.data[row * self.width + col] = value;
    }
}

/// Foreground mask; `true` marks ink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dim {
                expected: width * height,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Number of foreground pixels among the up-to-eight neighbours.
    pub fn neighbour_count(&self, row: usize, col: usize) -> usize {
        let mut n = 0;
        for r in row.saturating_sub(1)..=(row + 1).min(self.height - 1) {
            for c in col.saturating_sub(1)..=(col + 1).min(self.width - 1) {
                if (r, c) != (row, col) && self.get(r, c) {
                    n += 1;
                }
            }
        }
        n
    }

    /// Renders ink as 0 and background as 255, the scanner convention.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&b| if b { 0 } else { 255 }).collect(),
        }
    }
}

/// ITU-R BT.601 luma, rounded half up.
pub fn rgb_to_gray(r: u8, g: u8, b: u8) -> u8 {
    // Integer weights in thousandths keep the rounding exact.
    let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((weighted + 500) / 1000).min(255) as u8
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    /// Next decimal field and the offset it starts at.
    fn number(&mut self, what: &str) -> Result<(usize, usize)> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if start >= self.bytes.len() {
                Error::format(start, format!("unexpected end of data reading {what}"))
            } else {
                Error::format(start, format!("expected decimal {what}"))
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .map(|v| (v, start))
            .ok_or_else(|| Error::format(start, format!("{what} out of range")))
    }
}

/// Parses a P2, P3, P5 or P6 Netpbm file into grayscale.
pub fn load_netpbm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 {
        return Err(Error::format(0, "missing magic number"));
    }
    let magic = &bytes[..2];
    let (ascii, rgb) = match magic {
        b"P2" => (true, false),
        b"P3" => (true, true),
        b"P5" => (false, false),
        b"P6" => (false, true),
        _ => {
            return Err(Error::format(
                0,
                format!("unsupported magic {:?}", String::from_utf8_lossy(magic)),
            ))
        }
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    if cur.pos < bytes.len() && !bytes[cur.pos].is_ascii_whitespace() && bytes[cur.pos] != b'#' {
        return Err(Error::format(2, "expected whitespace after magic"));
    }
    let (width, _) = cur.number("width")?;
    let (height, _) = cur.number("height")?;
    let (maxval, maxval_at) = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(maxval_at, "zero image dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(
            maxval_at,
            format!("maxval {maxval} not in 1..=255"),
        ));
    }
    let channels = if rgb { 3 } else { 1 };
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format(maxval_at, "image dimensions overflow"))?;

    let mut samples = Vec::with_capacity(count);
    if ascii {
        for _ in 0..count {
            let (v, at) = cur.number("sample")?;
            if v > maxval {
                return Err(Error::format(at, format!("sample {v} exceeds maxval {maxval}")));
            }
            samples.push(v as u32);
        }
    } else {
        // Exactly one whitespace byte separates maxval from the raster.
        if cur.pos >= bytes.len() {
            return Err(Error::format(cur.pos, "truncated raster"));
        }
        let start = cur.pos + 1;
        let end = start + count;
        if end > bytes.len() {
            return Err(Error::format(
                bytes.len(),
                format!("truncated raster: need {count} bytes, have {}", bytes.len() - start.min(bytes.len())),
            ));
        }
        for (i, &b) in bytes[start..end].iter().enumerate() {
            if b as usize > maxval {
                return Err(Error::format(start + i, format!("sample {b} exceeds maxval {maxval}")));
            }
            samples.push(b as u32);
        }
    }

    let scale = |v: u32| -> u8 {
        if maxval == 255 {
            v as u8
        } else {
            ((v * 255 + maxval as u32 / 2) / maxval as u32) as u8
        }
    };
    let data = if rgb {
        samples
            .chunks_exact(3)
            .map(|px| rgb_to_gray(scale(px[0]), scale(px[1]), scale(px[2])))
            .collect()
    } else {
        samples.into_iter().map(scale).collect()
    };
    Ok(GrayImage {
        width,
        height,
        data,
    })
}

/// Binary P5 encoding with maxval 255.
pub fn save_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.data.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.data);
    out
}

/// Otsu's global threshold. Returns the smallest level maximizing the
/// between-class variance, where class 0 holds pixels `<= t`.
///
/// Candidates are compared exactly: with `n0`, `s0` the count and intensity
/// sum at or below `t`, the variance is proportional to
/// `(s0*N - S*n0)^2 / (n0*n1)`, so two levels compare by cross-multiplying
/// in arbitrary precision and ties resolve without rounding noise.
#[allow(clippy::needless_range_loop)]
pub fn otsu_threshold(img: &GrayImage) -> u8 {
    let mut hist = [0u64; 256];
    for &p in &img.data {
        hist[p as usize] += 1;
    }
    let total = img.data.len() as u64;
    let total_sum: u64 = hist.iter().enumerate().map(|(v, &n)| v as u64 * n).sum();

    let mut best_t = 0u8;
    // Best score as numerator/denominator; 0/1 stands for "empty class".
    let mut best_num = BigUint::from(0u32);
    let mut best_den = BigUint::from(1u32);
    let mut n0 = 0u64;
    let mut s0 = 0u64;
    for t in 0..=255usize {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let diff = (s0 as i128 * total as i128 - total_sum as i128 * n0 as i128).unsigned_abs();
        let num = BigUint::from(diff) * BigUint::from(diff);
        let den = BigUint::from(n0) * BigUint::from(n1);
        if &num * &best_den > &best_num * &den {
            best_num = num;
            best_den = den;
            best_t = t as u8;
        }
    }
    best_t
}

/// Ink is dark: a pixel is foreground iff its intensity is `<= t`.
pub fn binarize(img: &GrayImage, t: u8) -> BinaryImage {
    BinaryImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&p| p <= t).collect(),
    }
}

/// One pass clearing foreground pixels with no foreground 8-neighbour.
pub fn denoise(img: &BinaryImage) -> BinaryImage {
    let mut out = img.clone();
    for row in 0..img.height {
        for col in 0..img.width {
            if img.get(row, col) && img.neighbour_count(row, col) == 0 {
                out.set(row, col, false);
            }
        }
    }
    out
}
