use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use aocr_core::dataset::{
    generate_dataset, load_manifest, procedural_template, ClassRegistry, SynthConfig,
    TemplateSource, MANIFEST_FILE,
};
use aocr_core::imaging::{load_netpbm, save_pgm, GrayImage};
use aocr_core::pipeline::file_features;
use aocr_core::{Error, Split};

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn five_per_class_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig { per_class: 5, ..Default::default() };
    let entries = generate_dataset(&cfg, dir.path()).unwrap();
    assert_eq!(entries.len(), 140);
    let files = tree(dir.path());
    assert_eq!(files.len(), 141);
    assert!(files.contains_key("alef_0.pgm") && files.contains_key("yeh_4.pgm"));

    let manifest = String::from_utf8(files[MANIFEST_FILE].clone()).unwrap();
    let lines: Vec<&str> = manifest.lines().collect();
    assert_eq!(lines.len(), 141);
    assert_eq!(lines[0], "path,label,split");
    assert_eq!(lines[1], "alef_0.pgm,alef,train");
    // floor(5 * 0.8) = 4 training samples per class.
    assert_eq!(lines[4], "alef_3.pgm,alef,train");
    assert_eq!(lines[5], "alef_4.pgm,alef,test");

    let loaded = load_manifest(&files[MANIFEST_FILE], dir.path()).unwrap();
    assert_eq!(loaded, entries);
    for class in 0..28 {
        let of_class: Vec<_> = loaded.iter().filter(|e| e.class == class).collect();
        assert_eq!(of_class.len(), 5);
        assert_eq!(of_class.iter().filter(|e| e.split == Split::Train).count(), 4);
    }
}

#[test]
fn split_sizes_follow_floor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig { per_class: 7, train_fraction: 0.5, ..Default::default() };
    let entries = generate_dataset(&cfg, dir.path()).unwrap();
    assert_eq!(entries.iter().filter(|e| e.split == Split::Train).count(), 28 * 3);
}

#[test]
fn generation_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = SynthConfig { per_class: 3, ..Default::default() };
    generate_dataset(&cfg, a.path()).unwrap();
    generate_dataset(&cfg, b.path()).unwrap();
    assert_eq!(tree(a.path()), tree(b.path()));

    let c = tempfile::tempdir().unwrap();
    generate_dataset(&SynthConfig { seed: 2, ..cfg }, c.path()).unwrap();
    assert_ne!(tree(a.path()), tree(c.path()));
}

#[test]
fn unperturbed_samples_equal_templates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig { per_class: 2, noise_p: 0.0, max_shift: 0, ..Default::default() };
    let entries = generate_dataset(&cfg, dir.path()).unwrap();
    for e in entries {
        let img = load_netpbm(&fs::read(&e.path).unwrap()).unwrap();
        let t = procedural_template(e.class);
        for r in 0..24 {
            for c in 0..24 {
                let ink = (4..20).contains(&r) && (4..20).contains(&c) && t[r - 4][c - 4];
                assert_eq!(img.get(r, c) == 0, ink, "{} at ({r},{c})", e.path.display());
            }
        }
    }
}

#[test]
fn noisy_corpus_survives_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig { per_class: 4, noise_p: 0.1, max_shift: 4, ..Default::default() };
    for e in generate_dataset(&cfg, dir.path()).unwrap() {
        let f = file_features(&e.path).unwrap();
        assert!(f.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn template_directory_source() {
    let tdir = tempfile::tempdir().unwrap();
    let registry = ClassRegistry::default();
    for (k, label) in registry.labels().iter().enumerate() {
        let mut img = GrayImage::filled(16, 16, 255);
        for i in 0..=k.min(15) {
            img.set(i, 15 - i, 0);
            img.set(i, 3, 0);
        }
        fs::write(tdir.path().join(format!("{label}.pgm")), save_pgm(&img)).unwrap();
    }
    let out = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        source: TemplateSource::Directory(tdir.path().to_path_buf()),
        per_class: 1,
        noise_p: 0.0,
        max_shift: 0,
        ..Default::default()
    };
    let entries = generate_dataset(&cfg, out.path()).unwrap();
    assert_eq!(entries.len(), 28);
    let img = load_netpbm(&fs::read(&entries[0].path).unwrap()).unwrap();
    assert_eq!(img.get(4, 4 + 15), 0);
    assert_eq!(img.get(4, 4 + 3), 0);

    fs::remove_file(tdir.path().join("kaf.pgm")).unwrap();
    match generate_dataset(&cfg, out.path()) {
        Err(Error::TemplateMissing { label, .. }) => assert_eq!(label, "kaf"),
        other => panic!("expected missing template, got {other:?}"),
    }
}

#[test]
fn manifest_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.pgm"), b"P2 1 1 255 0").unwrap();
    fs::write(dir.path().join("b.pgm"), b"P2 1 1 255 0").unwrap();

    let ok = load_manifest(b"path,label,split\na.pgm,baa,train\nb.pgm,yeh,test\n", dir.path()).unwrap();
    assert_eq!(ok.len(), 2);
    assert_eq!(ok[0].path, dir.path().join("a.pgm"));
    assert_eq!((ok[0].class, ok[0].split), (1, Split::Train));
    assert_eq!((ok[1].class, ok[1].split), (27, Split::Test));

    assert!(matches!(
        load_manifest(b"path,label,split\na.pgm,zz,train\n", dir.path()),
        Err(Error::Label { row: 2, .. })
    ));
    let err = load_manifest(b"path,label,split\na.pgm,alef,train\nb.pgm,zz,test\n", dir.path()).unwrap_err();
    assert!(err.to_string().contains("row 3"), "{err}");
    assert!(matches!(load_manifest(b"path,label\na.pgm,alef\n", dir.path()), Err(Error::Header { .. })));
    assert!(matches!(
        load_manifest(b"path,label,split\na.pgm,alef,dev\n", dir.path()),
        Err(Error::Split { row: 2, .. })
    ));
    assert!(matches!(
        load_manifest(b"path,label,split\nmissing.pgm,alef,train\n", dir.path()),
        Err(Error::MissingFile(_))
    ));
    assert!(load_manifest(b"path,label,split\n", dir.path()).unwrap().is_empty());
}
