//! The `aocr` command line: synthesize a corpus, train, evaluate, segment
//! pages and recognize characters.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use aocr_core::dataset::{self, generate_dataset, load_manifest, MANIFEST_FILE};
use aocr_core::evaluation::{evaluate, render_report};
use aocr_core::features::{apply_mask, fit_feature_mask};
use aocr_core::network::{format_value, train};
use aocr_core::pipeline::{self, file_features, page_features, read_image};
use aocr_core::segmentation::DEFAULT_SECONDARY_RATIO;
use aocr_core::{Error, Mlp, Split, SynthConfig, TemplateSource, TrainConfig};
use clap::{Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "aocr", version, about = "Offline Arabic handwritten character recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic labeled corpus with manifest.csv.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        per_class: usize,
        #[arg(long, default_value_t = 0.02)]
        noise: f64,
        #[arg(long, default_value_t = 2)]
        shift: usize,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Directory of 16x16 `<label>.pgm` templates instead of procedural ones.
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Train a model on the train split of a corpus.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Manifest path; defaults to manifest.csv inside --data.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        model: PathBuf,
    },
    /// Recognize the character in an image, or every glyph with --page.
    Recognize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        page: bool,
        #[arg(long, default_value_t = DEFAULT_SECONDARY_RATIO)]
        secondary_ratio: f64,
    },
    /// Score a model on the test split of a corpus.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Write the confusion matrix as CSV here.
        #[arg(long)]
        confusion: Option<PathBuf>,
    },
    /// Write each glyph of a page as glyph_<k>.pgm in reading order.
    Segment {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SECONDARY_RATIO)]
        secondary_ratio: f64,
    },
    /// Print the 58 features of a character image.
    Features {
        #[arg(long)]
        image: PathBuf,
    },
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Empty
        | Error::Degenerate
        | Error::Dim { .. }
        | Error::EmptyDataset
        | Error::EmptySplit => EXIT_PIPELINE,
        _ => EXIT_USAGE,
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_split(data: &Path, manifest: Option<PathBuf>, split: Split) -> Result<Vec<dataset::ManifestEntry>, Error> {
    let manifest = manifest.unwrap_or_else(|| data.join(MANIFEST_FILE));
    let entries = load_manifest(&read_file(&manifest)?, data)?;
    Ok(entries.into_iter().filter(|e| e.split == split).collect())
}

fn load_model(path: &Path) -> Result<Mlp, Error> {
    Mlp::load(&read_file(path)?)
}

fn check_ratio(ratio: f64) -> Result<(), Error> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidArgument(format!(
            "secondary ratio {ratio} outside [0, 1]"
        )));
    }
    Ok(())
}

fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    let stdout = |e: std::io::Error| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match command {
        Command::Synth {
            out: dir,
            per_class,
            noise,
            shift,
            train_fraction,
            seed,
            templates,
        } => {
            let cfg = SynthConfig {
                source: templates.map_or(TemplateSource::Procedural, TemplateSource::Directory),
                per_class,
                noise_p: noise,
                max_shift: shift,
                train_fraction,
                seed,
            };
            let entries = generate_dataset(&cfg, &dir)?;
            let train_count = entries.iter().filter(|e| e.split == Split::Train).count();
            writeln!(
                out,
                "images {}\ttrain {}\ttest {}",
                entries.len(),
                train_count,
                entries.len() - train_count
            )
            .map_err(stdout)?;
        }
        Command::Train {
            data,
            manifest,
            hidden,
            lr,
            epochs,
            seed,
            model,
        } => {
            let entries = load_split(&data, manifest, Split::Train)?;
            let mut vectors = Vec::with_capacity(entries.len());
            let mut labels = Vec::with_capacity(entries.len());
            for entry in &entries {
                match file_features(&entry.path) {
                    Ok(v) => {
                        vectors.push(v);
                        labels.push(entry.class);
                    }
                    Err(e @ (Error::Empty | Error::Format { .. })) => {
                        let _ = writeln!(err, "skipping {}: {e}", entry.path.display());
                    }
                    Err(e) => return Err(e),
                }
            }
            if vectors.is_empty() {
                return Err(Error::EmptyDataset);
            }
            let mask = fit_feature_mask(&vectors)?;
            let samples: Vec<(Vec<f64>, usize)> = vectors
                .iter()
                .zip(&labels)
                .map(|(v, &y)| (apply_mask(v, &mask), y))
                .collect();
            let cfg = TrainConfig {
                hidden,
                lr,
                epochs,
                seed,
            };
            let (mlp, history) = train(&samples, mask, &cfg)?;
            write_file(&model, &mlp.save())?;
            for (epoch, loss) in history.iter().enumerate() {
                writeln!(out, "epoch {}\tloss {}", epoch + 1, format_value(*loss)).map_err(stdout)?;
            }
        }
        Command::Recognize {
            model,
            image,
            page,
            secondary_ratio,
        } => {
            check_ratio(secondary_ratio)?;
            let mlp = load_model(&model)?;
            let img = read_image(&image)?;
            let vectors = if page {
                page_features(&img, secondary_ratio)?
                    .into_iter()
                    .map(|(_, v)| v)
                    .collect()
            } else {
                let glyphs = pipeline::glyphs(&pipeline::preprocess(&img), secondary_ratio);
                let glyph = pipeline::largest_glyph(&glyphs).ok_or(Error::Empty)?;
                vec![pipeline::glyph_features(glyph)?]
            };
            if vectors.is_empty() {
                return Err(Error::Empty);
            }
            for (i, v) in vectors.iter().enumerate() {
                let (class, confidence) = mlp.predict(v);
                writeln!(out, "{i}\t{}\t{confidence:.4}", mlp.classes().label(class))
                    .map_err(stdout)?;
            }
        }
        Command::Evaluate {
            model,
            data,
            manifest,
            confusion,
        } => {
            let mlp = load_model(&model)?;
            let entries = load_split(&data, manifest, Split::Test)?;
            let report = evaluate(&mlp, &entries)?;
            for (path, reason) in &report.failures {
                let _ = writeln!(err, "failed {}: {reason}", path.display());
            }
            let (summary, csv) = render_report(&report);
            out.write_all(summary.as_bytes()).map_err(stdout)?;
            if let Some(path) = confusion {
                write_file(&path, &csv)?;
            }
        }
        Command::Segment {
            image,
            out_dir,
            secondary_ratio,
        } => {
            check_ratio(secondary_ratio)?;
            let img = read_image(&image)?;
            let glyphs = page_features(&img, secondary_ratio)?;
            fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
                path: out_dir.clone(),
                source: e,
            })?;
            for (k, (glyph, _)) in glyphs.iter().enumerate() {
                let normalized = aocr_core::segmentation::crop_normalize(glyph)?;
                let path = out_dir.join(format!("glyph_{k}.pgm"));
                write_file(&path, &aocr_core::imaging::save_pgm(&normalized.to_binary().to_gray()))?;
                let b = glyph.bbox;
                writeln!(
                    out,
                    "{}\t{} {} {} {}",
                    path.display(),
                    b.row0,
                    b.col0,
                    b.row1,
                    b.col1
                )
                .map_err(stdout)?;
            }
        }
        Command::Features { image } => {
            let v = file_features(&image)?;
            for &x in v.values() {
                writeln!(out, "{}", format_value(x)).map_err(stdout)?;
            }
        }
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the subcommand and returns
/// the process exit code: 0 success, 2 usage or input error, 3 pipeline
/// error.
pub fn run_cli<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(rendered.as_bytes());
            } else {
                let _ = out.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match run(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
