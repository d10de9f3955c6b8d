//! Two-layer perceptron: sigmoid hidden layer, softmax output, trained by
//! per-sample SGD on cross-entropy.
//!
//! Every floating-point reduction runs in a fixed sequential order, so a
//! given seed, configuration and sample order always yields the same bits.

use std::fmt::Write as _;

use crate::dataset::ClassRegistry;
use crate::error::{Error, Result};
use crate::features::{apply_mask, FeatureMask, FeatureVector, FEATURE_COUNT};
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Number of output classes.
pub const CLASS_COUNT: usize = 28;

const MAGIC: &str = "AOCR1";

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            lr: 0.1,
            epochs: 30,
            seed: 1,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::InvalidArgument("hidden must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Weights of the network plus the feature mask and labels it was trained
/// with. `w1` is `hidden x d_in` and `w2` is `28 x hidden`, both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    d_in: usize,
    hidden: usize,
    w1: Vec<T>,
    b1: Vec<T>,
    w2: Vec<T>,
    b2: Vec<T>,
    mask: FeatureMask,
    classes: ClassRegistry,
}

/// Gradients with the same layout as the parameters of [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

/// Intermediate values of one forward pass.
struct Activations<T> {
    hidden: Vec<T>,
    /// Log-sum-exp of the shifted logits and the shifted logits themselves.
    log_norm: T,
    shifted: Vec<T>,
    probs: Vec<T>,
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Softmax after subtracting the maximum logit. Probabilities that
/// underflow are raised to the smallest positive normal value so every
/// entry stays strictly positive.
fn softmax<T: Scalar>(logits: &[T]) -> (Vec<T>, Vec<T>, T) {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let shifted: Vec<T> = logits.iter().map(|&z| z - max).collect();
    let exps: Vec<T> = shifted.iter().map(|&z| z.exp()).collect();
    let mut sum = T::zero();
    for &e in &exps {
        sum += e;
    }
    let probs = exps
        .iter()
        .map(|&e| (e / sum).max(T::min_positive_value()))
        .collect();
    (probs, shifted, sum.ln())
}

impl<T: Scalar> Mlp<T> {
    /// Seeded Xavier-uniform initialization. Draws fill `w1` then `w2` in
    /// row-major order; biases start at zero. The mask keeps the first
    /// `d_in` features; replace it with [`Mlp::with_mask`].
    pub fn init(seed: u64, hidden: usize, d_in: usize) -> Result<Self> {
        let mut rng = Rng::new(seed);
        Self::init_with(&mut rng, hidden, d_in)
    }

    fn init_with(rng: &mut Rng, hidden: usize, d_in: usize) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidArgument("hidden must be at least 1".into()));
        }
        let mask = FeatureMask::first(d_in)?;
        let mut draw = |n: usize, bound: f64| -> Vec<T> {
            (0..n)
                .map(|_| T::of(bound * (2.0 * rng.next_unit() - 1.0)))
                .collect()
        };
        let a1 = (6.0 / (d_in + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + CLASS_COUNT) as f64).sqrt();
        let w1 = draw(hidden * d_in, a1);
        let w2 = draw(CLASS_COUNT * hidden, a2);
        Ok(Self {
            d_in,
            hidden,
            w1,
            b1: vec![T::zero(); hidden],
            w2,
            b2: vec![T::zero(); CLASS_COUNT],
            mask,
            classes: ClassRegistry::default(),
        })
    }

    /// All-zero network; its output is uniform over the classes.
    pub fn zeros(hidden: usize, mask: FeatureMask) -> Self {
        let d_in = mask.kept_count();
        Self {
            d_in,
            hidden,
            w1: vec![T::zero(); hidden * d_in],
            b1: vec![T::zero(); hidden],
            w2: vec![T::zero(); CLASS_COUNT * hidden],
            b2: vec![T::zero(); CLASS_COUNT],
            mask,
            classes: ClassRegistry::default(),
        }
    }

    pub fn with_mask(mut self, mask: FeatureMask) -> Result<Self> {
        if mask.kept_count() != self.d_in {
            return Err(Error::Dim {
                expected: self.d_in,
                got: mask.kept_count(),
            });
        }
        self.mask = mask;
        Ok(self)
    }

    pub fn with_classes(mut self, classes: ClassRegistry) -> Self {
        self.classes = classes;
        self
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn mask(&self) -> &FeatureMask {
        &self.mask
    }

    pub fn classes(&self) -> &ClassRegistry {
        &self.classes
    }

    pub fn w1(&self) -> &[T] {
        &self.w1
    }

    pub fn b1(&self) -> &[T] {
        &self.b1
    }

    pub fn w2(&self) -> &[T] {
        &self.w2
    }

    pub fn b2(&self) -> &[T] {
        &self.b2
    }

    pub fn w1_mut(&mut self) -> &mut [T] {
        &mut self.w1
    }

    pub fn b1_mut(&mut self) -> &mut [T] {
        &mut self.b1
    }

    pub fn w2_mut(&mut self) -> &mut [T] {
        &mut self.w2
    }

    pub fn b2_mut(&mut self) -> &mut [T] {
        &mut self.b2
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.d_in {
            return Err(Error::Dim {
                expected: self.d_in,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn activations(&self, x: &[T]) -> Activations<T> {
        let hidden: Vec<T> = self
            .w1
            .chunks_exact(self.d_in)
            .zip(&self.b1)
            .map(|(row, &b)| {
                let mut acc = b;
                for (&w, &xi) in row.iter().zip(x) {
                    acc += w * xi;
                }
                sigmoid(acc)
            })
            .collect();
        let logits: Vec<T> = self
            .w2
            .chunks_exact(self.hidden)
            .zip(&self.b2)
            .map(|(row, &b)| {
                let mut acc = b;
                for (&w, &h) in row.iter().zip(&hidden) {
                    acc += w * h;
                }
                acc
            })
            .collect();
        let (probs, shifted, log_norm) = softmax(&logits);
        Activations {
            hidden,
            log_norm,
            shifted,
            probs,
        }
    }

    /// Class probabilities for a reduced (masked) feature vector.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        Ok(self.activations(x).probs)
    }

    /// Cross-entropy `-ln p[y]` and its gradient with respect to every
    /// parameter, by backpropagation.
    pub fn loss_and_gradients(&self, x: &[T], y: usize) -> Result<(T, Gradients<T>)> {
        self.check_input(x)?;
        check_class(y)?;
        let act = self.activations(x);
        let loss = act.log_norm - act.shifted[y];

        let mut dz = act.probs.clone();
        dz[y] -= T::one();

        let mut w2 = vec![T::zero(); CLASS_COUNT * self.hidden];
        for (grow, &d) in w2.chunks_exact_mut(self.hidden).zip(&dz) {
            for (g, &h) in grow.iter_mut().zip(&act.hidden) {
                *g = d * h;
            }
        }
        let mut da = vec![T::zero(); self.hidden];
        for (row, &d) in self.w2.chunks_exact(self.hidden).zip(&dz) {
            for (acc, &w) in da.iter_mut().zip(row) {
                *acc += w * d;
            }
        }
        for (a, &h) in da.iter_mut().zip(&act.hidden) {
            *a = *a * h * (T::one() - h);
        }
        let mut w1 = vec![T::zero(); self.hidden * self.d_in];
        for (grow, &a) in w1.chunks_exact_mut(self.d_in).zip(&da) {
            for (g, &xi) in grow.iter_mut().zip(x) {
                *g = a * xi;
            }
        }
        Ok((
            loss,
            Gradients {
                w1,
                b1: da,
                w2,
                b2: dz,
            },
        ))
    }

    /// `theta <- theta - lr * g` for every parameter.
    pub fn apply_gradients(&mut self, grads: &Gradients<T>, lr: T) {
        let step = |params: &mut [T], g: &[T]| {
            for (p, &d) in params.iter_mut().zip(g) {
                *p -= lr * d;
            }
        };
        step(&mut self.w1, &grads.w1);
        step(&mut self.b1, &grads.b1);
        step(&mut self.w2, &grads.w2);
        step(&mut self.b2, &grads.b2);
    }

    /// Masks a full feature vector, runs the network and returns the most
    /// probable class (lowest index on exact ties) with its probability.
    pub fn predict(&self, v: &FeatureVector) -> (usize, T) {
        let x: Vec<T> = apply_mask(v, &self.mask).into_iter().map(T::of).collect();
        let probs = self.activations(&x).probs;
        let mut best = 0;
        for (k, &p) in probs.iter().enumerate().skip(1) {
            if p > probs[best] {
                best = k;
            }
        }
        (best, probs[best])
    }

    /// Like [`Mlp::predict`] but checks the vector length first.
    pub fn predict_slice(&self, values: &[f64]) -> Result<(usize, T)> {
        if values.len() != FEATURE_COUNT {
            return Err(Error::Dim {
                expected: FEATURE_COUNT,
                got: values.len(),
            });
        }
        Ok(self.predict(&FeatureVector::from_slice(values)?))
    }

    /// Serializes to the line-oriented `AOCR1` text format.
    pub fn save(&self) -> Vec<u8> {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "dims {} {} {}", self.d_in, self.hidden, CLASS_COUNT);
        let _ = writeln!(out, "mask {}", self.mask.to_bit_string());
        let _ = writeln!(out, "classes {}", self.classes.labels().join(","));
        for &v in self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2) {
            let _ = writeln!(out, "{}", format_value(v.widen()));
        }
        out.into_bytes()
    }

    pub fn load(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::ModelSyntax {
            line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
            message: "model file is not valid UTF-8".into(),
        })?;
        let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            let expected_line = lines.clone().next().map(|(n, _)| n);
            match lines.next() {
                Some((n, l)) if !(l.is_empty() && lines.clone().next().is_none()) => Ok((n, l)),
                _ => Err(Error::Truncated {
                    line: expected_line.unwrap_or(0),
                    message: format!("missing {what}"),
                }),
            }
        };

        let (n, magic) = next("magic")?;
        if magic != MAGIC {
            return Err(Error::Magic { line: n });
        }

        let (n, dims) = next("dims line")?;
        let fields: Vec<&str> = dims.split(' ').collect();
        if fields.len() != 4 || fields[0] != "dims" {
            return Err(Error::ModelSyntax {
                line: n,
                message: format!("expected \"dims <d_in> <hidden> 28\", found {dims:?}"),
            });
        }
        let parse_dim = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::ModelSyntax {
                line: n,
                message: format!("bad dimension {s:?}"),
            })
        };
        let (d_in, hidden, d_out) = (
            parse_dim(fields[1])?,
            parse_dim(fields[2])?,
            parse_dim(fields[3])?,
        );
        if d_out != CLASS_COUNT || hidden == 0 || d_in == 0 || d_in > FEATURE_COUNT {
            return Err(Error::DimMismatch {
                line: n,
                message: format!("unsupported dims {d_in} {hidden} {d_out}"),
            });
        }

        let (n, mask_line) = next("mask line")?;
        let bits = mask_line.strip_prefix("mask ").ok_or_else(|| Error::ModelSyntax {
            line: n,
            message: "expected \"mask <58 bits>\"".into(),
        })?;
        let mask = FeatureMask::from_bit_string(bits).map_err(|e| Error::DimMismatch {
            line: n,
            message: e.to_string(),
        })?;
        if mask.kept_count() != d_in {
            return Err(Error::DimMismatch {
                line: n,
                message: format!("mask keeps {} features but d_in is {d_in}", mask.kept_count()),
            });
        }

        let (n, class_line) = next("classes line")?;
        let labels = class_line.strip_prefix("classes ").ok_or_else(|| Error::ModelSyntax {
            line: n,
            message: "expected \"classes <labels>\"".into(),
        })?;
        let classes = ClassRegistry::from_labels(labels.split(',').map(str::to_owned).collect())
            .map_err(|e| Error::DimMismatch {
                line: n,
                message: e.to_string(),
            })?;

        let mut read = |count: usize, what: &str| -> Result<Vec<T>> {
            (0..count)
                .map(|_| {
                    let (n, l) = next(what)?;
                    let v: f64 = l.parse().map_err(|_| Error::ModelSyntax {
                        line: n,
                        message: format!("bad number {l:?} in {what}"),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::ModelSyntax {
                            line: n,
                            message: format!("non-finite value in {what}"),
                        });
                    }
                    Ok(T::of(v))
                })
                .collect()
        };
        let w1 = read(hidden * d_in, "W1")?;
        let b1 = read(hidden, "b1")?;
        let w2 = read(CLASS_COUNT * hidden, "W2")?;
        let b2 = read(CLASS_COUNT, "b2")?;
        if let Ok((n, _)) = next("end") {
            return Err(Error::DimMismatch {
                line: n,
                message: "unexpected data after b2".into(),
            });
        }
        Ok(Self {
            d_in,
            hidden,
            w1,
            b1,
            w2,
            b2,
            mask,
            classes,
        })
    }
}

fn check_class(y: usize) -> Result<()> {
    if y >= CLASS_COUNT {
        return Err(Error::InvalidArgument(format!(
            "class index {y} outside 0..{CLASS_COUNT}"
        )));
    }
    Ok(())
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Per-sample SGD over `(reduced vector, class)` pairs.
///
/// The network is initialized from `cfg.seed`; the same generator then
/// drives a Fisher-Yates shuffle of the visiting order before every epoch.
/// Returns the model and the mean loss of each epoch.
pub fn train<T: Scalar>(
    samples: &[(Vec<T>, usize)],
    mask: FeatureMask,
    cfg: &TrainConfig,
) -> Result<(Mlp<T>, Vec<T>)> {
    cfg.validate()?;
    let d_in = samples.first().ok_or(Error::EmptyDataset)?.0.len();
    if mask.kept_count() != d_in {
        return Err(Error::Dim {
            expected: mask.kept_count(),
            got: d_in,
        });
    }
    for (x, y) in samples {
        if x.len() != d_in {
            return Err(Error::Dim {
                expected: d_in,
                got: x.len(),
            });
        }
        check_class(*y)?;
    }

    let mut rng = Rng::new(cfg.seed);
    let mut model = Mlp::init_with(&mut rng, cfg.hidden, d_in)?.with_mask(mask)?;
    let lr = T::of(cfg.lr);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            order.swap(i, j);
        }
        let mut total = T::zero();
        for &idx in &order {
            let (x, y) = &samples[idx];
            let (loss, grads) = model.loss_and_gradients(x, *y)?;
            total += loss;
            model.apply_gradients(&grads, lr);
        }
        history.push(total / T::of(samples.len() as f64));
    }
    Ok((model, history))
}
