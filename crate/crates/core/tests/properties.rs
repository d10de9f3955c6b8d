use aocr_core::features::{extract_features, FEATURE_COUNT};
use aocr_core::imaging::{load_netpbm, save_pgm, BinaryImage, GrayImage};
use aocr_core::network::Mlp;
use aocr_core::pipeline::character_features;
use aocr_core::segmentation::{
    connected_components, crop_normalize, group_diacritics, sort_reading_order, BBox, Component,
    Glyph, NormalizedGlyph, GRID,
};
use aocr_core::{FeatureVector, Rng};
use proptest::prelude::*;

fn random_bits(seed: u64, n: usize, density: f64) -> Vec<bool> {
    let mut rng = Rng::new(seed);
    (0..n).map(|_| rng.next_unit() < density).collect()
}

fn grid_from(bits: &[bool]) -> [[bool; GRID]; GRID] {
    std::array::from_fn(|r| std::array::from_fn(|c| bits[r * GRID + c]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pgm_roundtrip(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let img = GrayImage::new(w, h, (0..w * h).map(|_| rng.below(256) as u8).collect()).unwrap();
        prop_assert_eq!(load_netpbm(&save_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn grouping_conserves_ink(seed in any::<u64>(), density in 0.05f64..0.7) {
        let bits = random_bits(seed, 24 * 24, density);
        let img = BinaryImage::from_bits(24, 24, bits).unwrap();
        let comps = connected_components(&img);
        let glyphs = group_diacritics(comps.clone());
        let ink: usize = glyphs.iter().map(Glyph::area).sum();
        prop_assert_eq!(ink, img.foreground_count());
        for g in &glyphs {
            let bbox = g.members.iter().skip(1).fold(g.members[0].bbox, |b, m| b.union(&m.bbox));
            prop_assert_eq!(g.bbox, bbox);
        }
    }

    #[test]
    fn reading_order_is_idempotent_permutation(seed in any::<u64>(), n in 0usize..12) {
        let mut rng = Rng::new(seed);
        let glyphs: Vec<Glyph> = (0..n)
            .map(|i| {
                let (r, c) = (rng.below(5) as usize, rng.below(6) as usize);
                let bbox = BBox { row0: r, col0: c, row1: r + 1, col1: c + rng.below(3) as usize };
                // Column 100 + i tags each glyph so the permutation is visible.
                Glyph { members: vec![Component { pixels: vec![(r, 100 + i)], bbox }], bbox }
            })
            .collect();
        let once = sort_reading_order(glyphs.clone());
        let twice = sort_reading_order(once.clone());
        prop_assert_eq!(&once, &twice);
        let mut tags: Vec<usize> = once.iter().map(|g| g.members[0].pixels[0].1).collect();
        tags.sort();
        prop_assert_eq!(tags, (100..100 + n).collect::<Vec<_>>());
        for pair in once.windows(2) {
            let (a, b) = (pair[0].bbox, pair[1].bbox);
            prop_assert!(a.col1 > b.col1 || (a.col1 == b.col1 && a.row0 <= b.row0));
        }
    }

    #[test]
    fn normalized_glyph_never_blank(seed in any::<u64>(), w in 1usize..70, h in 1usize..70, density in 0.01f64..0.5) {
        let bits = random_bits(seed, w * h, density);
        let mut pixels: Vec<(usize, usize)> = (0..w * h).filter(|&i| bits[i]).map(|i| (i / w, i % w)).collect();
        pixels.push((0, 0));
        pixels.push((h - 1, w - 1));
        pixels.sort();
        pixels.dedup();
        let bbox = BBox { row0: 0, col0: 0, row1: h - 1, col1: w - 1 };
        let g = Glyph { members: vec![Component { pixels, bbox }], bbox };
        let n = crop_normalize(&g).unwrap();
        prop_assert!(n.grid().iter().flatten().any(|&b| b));
        prop_assert_eq!((n.src_width(), n.src_height()), (w, h));
    }

    #[test]
    fn features_are_bounded_and_consistent(seed in any::<u64>(), density in 0.02f64..1.0, sw in 1usize..100, sh in 1usize..100) {
        let mut bits = random_bits(seed, GRID * GRID, density);
        bits[0] = true;
        let g = NormalizedGlyph::new(grid_from(&bits), sw, sh).unwrap();
        let f = extract_features(&g).unwrap();
        prop_assert!(f.values().iter().all(|v| (0.0..=1.0).contains(v)));

        // Count the ink three independent ways.
        let count = bits.iter().filter(|&&b| b).count() as f64;
        let zones: f64 = f.values()[0..16].iter().sum();
        let rows: f64 = f.values()[16..32].iter().sum();
        let cols: f64 = f.values()[32..48].iter().sum();
        prop_assert_eq!(16.0 * zones, count);
        prop_assert_eq!(16.0 * rows, count);
        prop_assert_eq!(16.0 * cols, count);
        prop_assert_eq!(256.0 * f[49], count);
    }

    #[test]
    fn features_ignore_glyph_position(seed in any::<u64>(), dr in 0usize..40, dc in 0usize..40) {
        // A 12x9 blob plus a detached dot, drawn at two offsets of a 64x64 page.
        let bits = random_bits(seed, 12 * 9, 0.6);
        let draw = |r0: usize, c0: usize| {
            let mut img = GrayImage::filled(64, 64, 255);
            for r in 0..12 {
                for c in 0..9 {
                    if bits[r * 9 + c] || c == 4 {
                        img.set(r0 + 3 + r, c0 + c, 0);
                    }
                }
            }
            img.set(r0, c0 + 4, 0);
            img.set(r0, c0 + 5, 0);
            img
        };
        prop_assert_eq!(character_features(&draw(0, 0)).unwrap(), character_features(&draw(dr, dc)).unwrap());
    }

    #[test]
    fn persisted_models_predict_identically(seed in any::<u64>(), hidden in 1usize..12) {
        let mut m = Mlp::<f64>::init(seed, hidden, FEATURE_COUNT).unwrap();
        let mut rng = Rng::new(seed ^ 1);
        for b in m.b2_mut() {
            *b = rng.next_unit() * 3.0 - 1.5;
        }
        let loaded = Mlp::<f64>::load(&m.save()).unwrap();
        prop_assert_eq!(&loaded, &m);
        for _ in 0..10 {
            let v = FeatureVector::new(std::array::from_fn(|_| rng.next_unit()));
            let (a, pa) = m.predict(&v);
            let (b, pb) = loaded.predict(&v);
            prop_assert_eq!(a, b);
            prop_assert_eq!(pa.to_bits(), pb.to_bits());
        }
    }
}
