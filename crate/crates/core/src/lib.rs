//! Offline recognition of isolated handwritten Arabic letters.
//!
//! The pipeline runs grayscale page → Otsu binary mask → isolated-pixel
//! cleanup → connected components with diacritic grouping → 16x16 glyphs →
//! 58 features → two-layer perceptron. Training and synthetic data
//! generation are fully deterministic given a seed.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod imaging;
pub mod network;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod segmentation;

pub use dataset::{ClassRegistry, ManifestEntry, Split, SynthConfig, TemplateSource};
pub use error::{Error, Result};
pub use evaluation::EvalReport;
pub use features::{FeatureMask, FeatureVector, FEATURE_COUNT};
pub use imaging::{BinaryImage, GrayImage};
pub use network::{Gradients, TrainConfig, CLASS_COUNT};
pub use rng::Rng;
pub use scalar::Scalar;
pub use segmentation::{BBox, Component, Glyph, NormalizedGlyph};

/// Double-precision classifier; the model-file and determinism contracts
/// are stated for this type.
pub type Mlp = network::Mlp<f64>;
pub type MlpF32 = network::Mlp<f32>;
