//! The 58-dimensional glyph descriptor and variance-based feature selection.
//!
//! Layout of a [`FeatureVector`]:
//!
//! | index    | meaning                                             |
//! |----------|-----------------------------------------------------|
//! | 0..16    | 4x4 zone densities, zone `(zr, zc)` at `4*zr + zc`  |
//! | 16..32   | row projections, top to bottom                      |
//! | 32..48   | column projections, left to right                   |
//! | 48       | aspect, `w / (w + h)` of the source bbox            |
//! | 49       | global ink density                                  |
//! | 50, 51   | centroid column and row, scaled by 1/15             |
//! | 52..55   | crossings along rows 3, 7, 11, scaled by 1/8        |
//! | 55..58   | crossings along columns 3, 7, 11, scaled by 1/8     |

use crate::error::{Error, Result};
use crate::segmentation::{NormalizedGlyph, GRID};

pub const FEATURE_COUNT: usize = 58;

pub const ZONES: usize = 0;
pub const ROW_PROJECTIONS: usize = 16;
pub const COL_PROJECTIONS: usize = 32;
pub const ASPECT: usize = 48;
pub const DENSITY: usize = 49;
pub const CENTROID_COL: usize = 50;
pub const CENTROID_ROW: usize = 51;
pub const ROW_CROSSINGS: usize = 52;
pub const COL_CROSSINGS: usize = 55;

/// Scan lines sampled for crossing counts.
const CROSSING_LINES: [usize; 3] = [3, 7, 11];

/// Variances at or below this are treated as constant features.
pub const VARIANCE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector([f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn new(values: [f64; FEATURE_COUNT]) -> Self {
        Self(values)
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; FEATURE_COUNT] = values.try_into().map_err(|_| Error::Dim {
            expected: FEATURE_COUNT,
            got: values.len(),
        })?;
        Ok(Self(arr))
    }

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Which feature dimensions survive selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMask {
    keep: [bool; FEATURE_COUNT],
    kept_count: usize,
}

impl FeatureMask {
    pub fn new(keep: [bool; FEATURE_COUNT]) -> Result<Self> {
        let kept_count = keep.iter().filter(|&&k| k).count();
        if kept_count == 0 {
            return Err(Error::Degenerate);
        }
        Ok(Self { keep, kept_count })
    }

    pub fn all() -> Self {
        Self {
            keep: [true; FEATURE_COUNT],
            kept_count: FEATURE_COUNT,
        }
    }

    /// Keeps the first `n` features, `1 <= n <= 58`.
    pub fn first(n: usize) -> Result<Self> {
        if n == 0 || n > FEATURE_COUNT {
            return Err(Error::Dim {
                expected: FEATURE_COUNT,
                got: n,
            });
        }
        let mut keep = [false; FEATURE_COUNT];
        keep[..n].fill(true);
        Self::new(keep)
    }

    pub fn keep(&self) -> &[bool; FEATURE_COUNT] {
        &self.keep
    }

    pub fn kept_count(&self) -> usize {
        self.kept_count
    }

    /// `0`/`1` string, one character per feature.
    pub fn to_bit_string(&self) -> String {
        self.keep.iter().map(|&k| if k { '1' } else { '0' }).collect()
    }

    pub fn from_bit_string(s: &str) -> Result<Self> {
        if s.len() != FEATURE_COUNT {
            return Err(Error::Dim {
                expected: FEATURE_COUNT,
                got: s.len(),
            });
        }
        let mut keep = [false; FEATURE_COUNT];
        for (slot, ch) in keep.iter_mut().zip(s.chars()) {
            *slot = match ch {
                '1' => true,
                '0' => false,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "mask character {other:?} is not 0 or 1"
                    )))
                }
            };
        }
        Self::new(keep)
    }
}

fn crossings(line: impl Iterator<Item = bool>) -> usize {
    let mut prev = false;
    let mut count = 0;
    for bit in line {
        if bit && !prev {
            count += 1;
        }
        prev = bit;
    }
    count
}

pub fn extract_features(g: &NormalizedGlyph) -> Result<FeatureVector> {
    let grid = g.grid();
    let total = grid.iter().flatten().filter(|&&b| b).count();
    if total == 0 {
        return Err(Error::Empty);
    }
    let mut f = [0.0; FEATURE_COUNT];
    let (mut row_sum, mut col_sum) = (0usize, 0usize);
    for (r, row) in grid.iter().enumerate() {
        for (c, &on) in row.iter().enumerate() {
            if on {
                f[ZONES + 4 * (r / 4) + c / 4] += 1.0;
                f[ROW_PROJECTIONS + r] += 1.0;
                f[COL_PROJECTIONS + c] += 1.0;
                row_sum += r;
                col_sum += c;
            }
        }
    }
    for v in &mut f[..ASPECT] {
        *v /= 16.0;
    }
    let (w, h) = (g.src_width() as f64, g.src_height() as f64);
    f[ASPECT] = w / (w + h);
    f[DENSITY] = total as f64 / (GRID * GRID) as f64;
    f[CENTROID_COL] = col_sum as f64 / total as f64 / 15.0;
    f[CENTROID_ROW] = row_sum as f64 / total as f64 / 15.0;
    for (k, &line) in CROSSING_LINES.iter().enumerate() {
        f[ROW_CROSSINGS + k] = crossings(grid[line].iter().copied()) as f64 / 8.0;
        f[COL_CROSSINGS + k] = crossings(grid.iter().map(|row| row[line])) as f64 / 8.0;
    }
    Ok(FeatureVector(f))
}

/// Keeps every feature whose population variance over the training set
/// exceeds [`VARIANCE_EPSILON`].
pub fn fit_feature_mask(vectors: &[FeatureVector]) -> Result<FeatureMask> {
    if vectors.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = vectors.len() as f64;
    let mut keep = [false; FEATURE_COUNT];
    for (j, slot) in keep.iter_mut().enumerate() {
        let mean = vectors.iter().map(|v| v.0[j]).sum::<f64>() / n;
        let var = vectors.iter().map(|v| (v.0[j] - mean).powi(2)).sum::<f64>() / n;
        *slot = var > VARIANCE_EPSILON;
    }
    FeatureMask::new(keep)
}

/// Kept entries in ascending index order.
pub fn apply_mask(v: &FeatureVector, m: &FeatureMask) -> Vec<f64> {
    v.0.iter()
        .zip(m.keep.iter())
        .filter_map(|(&x, &k)| k.then_some(x))
        .collect()
}
