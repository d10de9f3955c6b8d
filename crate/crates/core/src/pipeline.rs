//! Image-to-features glue shared by training, evaluation and recognition.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureVector};
use crate::imaging::{binarize, denoise, load_netpbm, otsu_threshold, BinaryImage, GrayImage};
use crate::segmentation::{
    connected_components, crop_normalize, group_diacritics_with_ratio, sort_reading_order, Glyph,
    DEFAULT_SECONDARY_RATIO,
};

/// Otsu threshold, binarize, then one isolated-pixel pass.
pub fn preprocess(img: &GrayImage) -> BinaryImage {
    denoise(&binarize(img, otsu_threshold(img)))
}

/// Glyphs of a cleaned mask in component (primary) order.
pub fn glyphs(mask: &BinaryImage, secondary_ratio: f64) -> Vec<Glyph> {
    group_diacritics_with_ratio(connected_components(mask), secondary_ratio)
}

/// Largest glyph by total ink, earliest on ties.
pub fn largest_glyph(glyphs: &[Glyph]) -> Option<&Glyph> {
    glyphs
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.area().cmp(&b.area()).then(ib.cmp(ia)))
        .map(|(_, g)| g)
}

pub fn glyph_features(glyph: &Glyph) -> Result<FeatureVector> {
    extract_features(&crop_normalize(glyph)?)
}

/// Features of a single-character image: the largest glyph is measured.
pub fn character_features(img: &GrayImage) -> Result<FeatureVector> {
    let glyphs = glyphs(&preprocess(img), DEFAULT_SECONDARY_RATIO);
    glyph_features(largest_glyph(&glyphs).ok_or(Error::Empty)?)
}

/// Every glyph of a page in right-to-left reading order, with features.
pub fn page_features(img: &GrayImage, secondary_ratio: f64) -> Result<Vec<(Glyph, FeatureVector)>> {
    let glyphs = sort_reading_order(glyphs(&preprocess(img), secondary_ratio));
    glyphs
        .into_iter()
        .map(|g| {
            let f = glyph_features(&g)?;
            Ok((g, f))
        })
        .collect()
}

pub fn read_image(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    load_netpbm(&bytes)
}

pub fn file_features(path: &Path) -> Result<FeatureVector> {
    character_features(&read_image(path)?)
}
