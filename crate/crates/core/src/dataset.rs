//! Class labels, the CSV manifest, and the deterministic synthetic corpus.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imaging::{load_netpbm, save_pgm, GrayImage};
use crate::network::CLASS_COUNT;
use crate::rng::Rng;
use crate::segmentation::GRID;

/// Isolated letter forms, in registry order.
pub const ARABIC_LABELS: [&str; CLASS_COUNT] = [
    "alef", "baa", "taa", "thaa", "jeem", "hah", "khah", "dal", "thal", "reh", "zain", "seen",
    "sheen", "sad", "dad", "tah", "zah", "ain", "ghain", "feh", "qaf", "kaf", "lam", "meem",
    "noon", "heh", "waw", "yeh",
];

pub const MANIFEST_HEADER: &str = "path,label,split";
pub const MANIFEST_FILE: &str = "manifest.csv";

/// Side of a generated sample image.
pub const SAMPLE_SIZE: usize = 24;
/// Offset of an unshifted template inside a sample.
const SAMPLE_MARGIN: usize = 4;
/// Ink probability of a procedural template cell before smoothing.
const TEMPLATE_INK: f64 = 0.45;

/// The 28 class labels, index `0..28`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassRegistry {
    labels: Vec<String>,
}

impl Default for ClassRegistry {
    fn default() -> Self {
        Self {
            labels: ARABIC_LABELS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ClassRegistry {
    /// Exactly 28 unique, non-empty lowercase ASCII labels.
    pub fn from_labels(labels: Vec<String>) -> Result<Self> {
        if labels.len() != CLASS_COUNT {
            return Err(Error::Dim {
                expected: CLASS_COUNT,
                got: labels.len(),
            });
        }
        for (i, label) in labels.iter().enumerate() {
            let valid = !label.is_empty()
                && label
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_');
            if !valid {
                return Err(Error::InvalidArgument(format!("invalid class label {label:?}")));
            }
            if labels[..i].contains(label) {
                return Err(Error::InvalidArgument(format!("duplicate class label {label:?}")));
            }
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Image path, already resolved against the manifest's base directory.
    pub path: PathBuf,
    pub label: String,
    /// Registry index of `label`.
    pub class: usize,
    pub split: Split,
}

/// Parses a manifest and resolves each row's path against `base_dir`.
/// Row numbers in errors count the header as row 1.
pub fn load_manifest(bytes: &[u8], base_dir: &Path) -> Result<Vec<ManifestEntry>> {
    let first_line = bytes.split(|&b| b == b'\n').next().unwrap_or(&[]);
    let first_line = first_line.strip_suffix(b"\r").unwrap_or(first_line);
    if first_line != MANIFEST_HEADER.as_bytes() {
        return Err(Error::Header {
            found: String::from_utf8_lossy(first_line).into_owned(),
        });
    }

    let registry = ClassRegistry::default();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Manifest {
            row,
            message: e.to_string(),
        })?;
        if record.len() != 3 {
            return Err(Error::Manifest {
                row,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let label = &record[1];
        let class = registry.index_of(label).ok_or_else(|| Error::Label {
            row,
            label: label.to_string(),
        })?;
        let split = match &record[2] {
            "train" => Split::Train,
            "test" => Split::Test,
            other => {
                return Err(Error::Split {
                    row,
                    split: other.to_string(),
                })
            }
        };
        let path = base_dir.join(&record[0]);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        entries.push(ManifestEntry {
            path,
            label: label.to_string(),
            class,
            split,
        });
    }
    Ok(entries)
}

/// A 16x16 ink pattern, `[row][col]`.
pub type Template = [[bool; GRID]; GRID];

/// Random field of density 0.45 with one 3x3 majority pass, seeded by the
/// class index. Never empty: a blank result gets a 2x2 center block.
#[allow(clippy::needless_range_loop)]
pub fn procedural_template(class: usize) -> Template {
    let mut rng = Rng::for_template(class);
    let mut raw = [[false; GRID]; GRID];
    for cell in raw.iter_mut().flatten() {
        *cell = rng.next_unit() < TEMPLATE_INK;
    }
    let mut smooth = [[false; GRID]; GRID];
    for r in 0..GRID {
        for c in 0..GRID {
            let mut votes = 0;
            for nr in r.saturating_sub(1)..=(r + 1).min(GRID - 1) {
                for nc in c.saturating_sub(1)..=(c + 1).min(GRID - 1) {
                    votes += raw[nr][nc] as usize;
                }
            }
            smooth[r][c] = votes >= 5;
        }
    }
    if !smooth.iter().flatten().any(|&b| b) {
        for (r, c) in [(7, 7), (7, 8), (8, 7), (8, 8)] {
            smooth[r][c] = true;
        }
    }
    smooth
}

/// Reads a 16x16 template image; pixels darker than mid-gray are ink.
pub fn template_from_image(img: &GrayImage) -> Result<Template> {
    if img.width() != GRID || img.height() != GRID {
        return Err(Error::InvalidArgument(format!(
            "templates must be {GRID}x{GRID}, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let mut t = [[false; GRID]; GRID];
    for (r, row) in t.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = img.get(r, c) < 128;
        }
    }
    if !t.iter().flatten().any(|&b| b) {
        return Err(Error::Empty);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplateSource {
    Procedural,
    /// Directory holding one `<label>.pgm` per class.
    Directory(PathBuf),
}

impl TemplateSource {
    pub fn load(&self, registry: &ClassRegistry) -> Result<Vec<Template>> {
        match self {
            TemplateSource::Procedural => Ok((0..CLASS_COUNT).map(procedural_template).collect()),
            TemplateSource::Directory(dir) => registry
                .labels()
                .iter()
                .map(|label| {
                    let path = dir.join(format!("{label}.pgm"));
                    let bytes = fs::read(&path).map_err(|_| Error::TemplateMissing {
                        label: label.clone(),
                        path: path.clone(),
                    })?;
                    template_from_image(&load_netpbm(&bytes)?)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub source: TemplateSource,
    pub per_class: usize,
    pub noise_p: f64,
    pub max_shift: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            source: TemplateSource::Procedural,
            per_class: 100,
            noise_p: 0.02,
            max_shift: 2,
            train_fraction: 0.8,
            seed: 1,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.per_class == 0 {
            return Err(Error::InvalidArgument("per-class count must be at least 1".into()));
        }
        if !(0.0..=0.5).contains(&self.noise_p) {
            return Err(Error::InvalidArgument(format!(
                "noise probability {} outside [0, 0.5]",
                self.noise_p
            )));
        }
        if self.max_shift > 4 {
            return Err(Error::InvalidArgument(format!(
                "shift {} outside [0, 4]",
                self.max_shift
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// Samples per class that land in the training split.
    pub fn train_count(&self) -> usize {
        (self.per_class as f64 * self.train_fraction).floor() as usize
    }
}

/// Places `template` at `(4 + dy, 4 + dx)` on a 24x24 page and flips each
/// pixel with probability `noise_p`, drawing shift then noise from `rng`.
pub fn render_sample(template: &Template, rng: &mut Rng, max_shift: usize, noise_p: f64) -> GrayImage {
    let span = 2 * max_shift as u64 + 1;
    let dx = rng.below(span) as isize - max_shift as isize;
    let dy = rng.below(span) as isize - max_shift as isize;
    let mut ink = [[false; SAMPLE_SIZE]; SAMPLE_SIZE];
    let row0 = (SAMPLE_MARGIN as isize + dy) as usize;
    let col0 = (SAMPLE_MARGIN as isize + dx) as usize;
    for (r, row) in template.iter().enumerate() {
        for (c, &on) in row.iter().enumerate() {
            ink[row0 + r][col0 + c] = on;
        }
    }
    for cell in ink.iter_mut().flatten() {
        if rng.next_unit() < noise_p {
            *cell = !*cell;
        }
    }
    let data = ink
        .iter()
        .flatten()
        .map(|&on| if on { 0 } else { 255 })
        .collect();
    GrayImage::new(SAMPLE_SIZE, SAMPLE_SIZE, data).expect("24x24 sample")
}

/// Writes `<label>_<idx>.pgm` for every class and sample, plus
/// `manifest.csv`, into `out_dir`. Returns the manifest entries.
pub fn generate_dataset(cfg: &SynthConfig, out_dir: &Path) -> Result<Vec<ManifestEntry>> {
    cfg.validate()?;
    let registry = ClassRegistry::default();
    let templates = cfg.source.load(&registry)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut rng = Rng::new(cfg.seed);
    let train_count = cfg.train_count();
    let mut manifest = format!("{MANIFEST_HEADER}\n");
    let mut entries = Vec::with_capacity(CLASS_COUNT * cfg.per_class);
    for (class, template) in templates.iter().enumerate() {
        let label = registry.label(class);
        for idx in 0..cfg.per_class {
            let img = render_sample(template, &mut rng, cfg.max_shift, cfg.noise_p);
            let name = format!("{label}_{idx}.pgm");
            let path = out_dir.join(&name);
            fs::write(&path, save_pgm(&img)).map_err(|e| Error::io(&path, e))?;
            let split = if idx < train_count { Split::Train } else { Split::Test };
            manifest.push_str(&format!("{name},{label},{split}\n"));
            entries.push(ManifestEntry {
                path,
                label: label.to_string(),
                class,
                split,
            });
        }
    }
    let manifest_path = out_dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(entries)
}
