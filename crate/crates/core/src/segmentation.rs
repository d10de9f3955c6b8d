//! Glyph isolation: 8-connected component labeling, attachment of dots to
//! their letter bodies, right-to-left ordering and 16x16 normalization.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::imaging::BinaryImage;

/// Side of the normalized glyph grid.
pub const GRID: usize = 16;

/// Default area ratio below which a component counts as a diacritic.
pub const DEFAULT_SECONDARY_RATIO: f64 = 0.25;

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub row0: usize,
    pub col0: usize,
    pub row1: usize,
    pub col1: usize,
}

impl BBox {
    pub fn point(row: usize, col: usize) -> Self {
        Self {
            row0: row,
            col0: col,
            row1: row,
            col1: col,
        }
    }

    pub fn width(&self) -> usize {
        self.col1 - self.col0 + 1
    }

    pub fn height(&self) -> usize {
        self.row1 - self.row0 + 1
    }

    pub fn include(&mut self, row: usize, col: usize) {
        self.row0 = self.row0.min(row);
        self.col0 = self.col0.min(col);
        self.row1 = self.row1.max(row);
        self.col1 = self.col1.max(col);
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            row0: self.row0.min(other.row0),
            col0: self.col0.min(other.col0),
            row1: self.row1.max(other.row1),
            col1: self.col1.max(other.col1),
        }
    }

    /// Columns shared by the two horizontal extents.
    pub fn horizontal_overlap(&self, other: &BBox) -> usize {
        let lo = self.col0.max(other.col0);
        let hi = self.col1.min(other.col1);
        if hi >= lo {
            hi - lo + 1
        } else {
            0
        }
    }

    /// Twice the horizontal center, kept integral.
    fn center2(&self) -> usize {
        self.col0 + self.col1
    }
}

/// A maximal 8-connected set of foreground pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// `(row, col)` pairs in raster order.
    pub pixels: Vec<(usize, usize)>,
    pub bbox: BBox,
}

impl Component {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}

/// A letter body together with any diacritics attached to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glyph {
    /// Primary component first, then attached secondaries in input order.
    pub members: Vec<Component>,
    pub bbox: BBox,
}

impl Glyph {
    pub fn from_component(c: Component) -> Self {
        Self {
            bbox: c.bbox,
            members: vec![c],
        }
    }

    pub fn area(&self) -> usize {
        self.members.iter().map(Component::area).sum()
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.members.iter().flat_map(|m| m.pixels.iter().copied())
    }

    fn attach(&mut self, c: Component) {
        self.bbox = self.bbox.union(&c.bbox);
        self.members.push(c);
    }
}

/// A glyph resampled onto a 16x16 bit grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedGlyph {
    grid: [[bool; GRID]; GRID],
    src_width: usize,
    src_height: usize,
}

impl NormalizedGlyph {
    pub fn new(grid: [[bool; GRID]; GRID], src_width: usize, src_height: usize) -> Result<Self> {
        if src_width == 0 || src_height == 0 {
            return Err(Error::InvalidArgument(
                "source dimensions must be positive".into(),
            ));
        }
        if !grid.iter().flatten().any(|&b| b) {
            return Err(Error::Empty);
        }
        Ok(Self {
            grid,
            src_width,
            src_height,
        })
    }

    pub fn grid(&self) -> &[[bool; GRID]; GRID] {
        &self.grid
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.grid[row][col]
    }

    pub fn src_width(&self) -> usize {
        self.src_width
    }

    pub fn src_height(&self) -> usize {
        self.src_height
    }

    pub fn to_binary(&self) -> BinaryImage {
        let bits = self.grid.iter().flatten().copied().collect();
        BinaryImage::from_bits(GRID, GRID, bits).expect("grid is 16x16")
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new() -> Self {
        Self { parent: Vec::new() }
    }

    fn make(&mut self) -> usize {
        let id = self.parent.len();
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // Smaller id wins so roots stay the earliest provisional label.
        match ra.cmp(&rb) {
            Ordering::Less => self.parent[rb] = ra,
            Ordering::Greater => self.parent[ra] = rb,
            Ordering::Equal => {}
        }
    }
}

/// Two-pass 8-connected labeling with union-find.
///
/// Components are returned in raster order of their first pixel.
pub fn connected_components(img: &BinaryImage) -> Vec<Component> {
    let (w, h) = (img.width(), img.height());
    const UNLABELED: usize = usize::MAX;
    let mut labels = vec![UNLABELED; w * h];
    let mut sets = DisjointSets::new();

    for row in 0..h {
        for col in 0..w {
            if !img.get(row, col) {
                continue;
            }
            // Already-visited neighbours: W, NW, N, NE.
            let mut neighbours = [UNLABELED; 4];
            if col > 0 {
                neighbours[0] = labels[row * w + col - 1];
            }
            if row > 0 {
                let up = (row - 1) * w;
                if col > 0 {
                    neighbours[1] = labels[up + col - 1];
                }
                neighbours[2] = labels[up + col];
                if col + 1 < w {
                    neighbours[3] = labels[up + col + 1];
                }
            }
            let mut label = UNLABELED;
            for &n in neighbours.iter().filter(|&&n| n != UNLABELED) {
                if label == UNLABELED {
                    label = n;
                } else {
                    sets.union(label, n);
                }
            }
            if label == UNLABELED {
                label = sets.make();
            }
            labels[row * w + col] = label;
        }
    }

    // Roots are the smallest provisional label in each set, and provisional
    // labels are issued in raster order, so ordering by root id is ordering
    // by first pixel.
    let mut slot_of_root = vec![UNLABELED; sets.parent.len()];
    let mut components: Vec<Component> = Vec::new();
    for row in 0..h {
        for col in 0..w {
            let label = labels[row * w + col];
            if label == UNLABELED {
                continue;
            }
            let root = sets.find(label);
            if slot_of_root[root] == UNLABELED {
                slot_of_root[root] = components.len();
                components.push(Component {
                    pixels: Vec::new(),
                    bbox: BBox::point(row, col),
                });
            }
            let comp = &mut components[slot_of_root[root]];
            comp.pixels.push((row, col));
            comp.bbox.include(row, col);
        }
    }
    components
}

/// Attaches diacritics to letter bodies using the default 0.25 area ratio.
pub fn group_diacritics(components: Vec<Component>) -> Vec<Glyph> {
    group_diacritics_with_ratio(components, DEFAULT_SECONDARY_RATIO)
}

/// A component is secondary when its area is below `ratio` times the
/// largest area. Each secondary joins the primary whose horizontal extent
/// overlaps it most; ties and non-overlapping secondaries go to the primary
/// with the nearest horizontal center, then the lowest index. With no
/// primary at all every component stands alone.
pub fn group_diacritics_with_ratio(components: Vec<Component>, ratio: f64) -> Vec<Glyph> {
    let max_area = components.iter().map(Component::area).max().unwrap_or(0);
    let is_secondary = |c: &Component| (c.area() as f64) < ratio * max_area as f64;

    let (primaries, secondaries): (Vec<_>, Vec<_>) =
        components.into_iter().partition(|c| !is_secondary(c));
    if primaries.is_empty() {
        return secondaries.into_iter().map(Glyph::from_component).collect();
    }

    let mut glyphs: Vec<Glyph> = primaries.into_iter().map(Glyph::from_component).collect();
    for dot in secondaries {
        let target = glyphs
            .iter()
            .enumerate()
            .min_by(|(ia, a), (ib, b)| {
                let (pa, pb) = (&a.members[0].bbox, &b.members[0].bbox);
                let overlap = pb
                    .horizontal_overlap(&dot.bbox)
                    .cmp(&pa.horizontal_overlap(&dot.bbox));
                let distance = pa
                    .center2()
                    .abs_diff(dot.bbox.center2())
                    .cmp(&pb.center2().abs_diff(dot.bbox.center2()));
                overlap.then(distance).then(ia.cmp(ib))
            })
            .map(|(i, _)| i)
            .expect("at least one primary");
        glyphs[target].attach(dot);
    }
    glyphs
}

/// Right-to-left order: descending right edge, then ascending top row,
/// then original position.
pub fn sort_reading_order(glyphs: Vec<Glyph>) -> Vec<Glyph> {
    let mut glyphs = glyphs;
    // `sort_by` is stable, which supplies the final tie-break.
    glyphs.sort_by(|a, b| {
        b.bbox
            .col1
            .cmp(&a.bbox.col1)
            .then(a.bbox.row0.cmp(&b.bbox.row0))
    });
    glyphs
}

/// Crops the glyph's own pixels to its bounding box and resamples them to
/// 16x16 by nearest neighbour, `out(i, j) = in(i*h/16, j*w/16)`.
///
/// Downsampling can step over every ink pixel of a thin stroke. When that
/// happens the first member pixel is plotted at its scaled position so the
/// grid is never blank.
pub fn crop_normalize(glyph: &Glyph) -> Result<NormalizedGlyph> {
    let first = glyph.pixels().next().ok_or(Error::Empty)?;
    let bbox = glyph.bbox;
    let (w, h) = (bbox.width(), bbox.height());
    let mut crop = vec![false; w * h];
    for (r, c) in glyph.pixels() {
        crop[(r - bbox.row0) * w + (c - bbox.col0)] = true;
    }
    let mut grid = [[false; GRID]; GRID];
    for (i, row) in grid.iter_mut().enumerate() {
        let sr = i * h / GRID;
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = crop[sr * w + j * w / GRID];
        }
    }
    if !grid.iter().flatten().any(|&b| b) {
        let (r, c) = (first.0 - bbox.row0, first.1 - bbox.col0);
        grid[r * GRID / h][c * GRID / w] = true;
    }
    NormalizedGlyph::new(grid, w, h)
}
