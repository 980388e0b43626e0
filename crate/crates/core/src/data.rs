//! Dataset construction: the synthetic orthogonal task, binary-class image
//! subsets loaded from raw IDX / CIFAR binary files, and a procedural
//! stroke-rendered digit generator used when the real archives are not
//! available.
//!
//! Normalization convention: every kernel recursion consumes Gram values
//! `(1/N_0) x . x'`, and the per-vector mode scales each flattened input so
//! its self-Gram is exactly 1. The global mode divides all vectors by one
//! shared constant (the root mean self-Gram), which keeps relative norm
//! information between examples. Pixels are not centered; inputs stay
//! nonnegative.

use crate::error::{CoreError, Result};
use crate::kernels::{input_gram, Activation};
use crate::prior::DynamicsParams;
use crate::solver::{LearningProblem, TestPoint};
use flate2::read::GzDecoder;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Synthetic orthogonal task: P orthonormal training inputs with balanced
/// labels and one test input overlapping training point 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub p: usize,
    pub o_test: f64,
}

impl SyntheticSpec {
    pub fn new(p: usize, o_test: f64) -> Result<Self> {
        if p < 2 || p % 2 != 0 {
            return Err(CoreError::InvalidParameter(format!(
                "P must be even and >= 2, got {p}"
            )));
        }
        if !(o_test > 0.0 && o_test <= 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "O_test must lie in (0, 1], got {o_test}"
            )));
        }
        Ok(Self { p, o_test })
    }
}

/// Builds the synthetic LearningProblem directly in Gram space.
pub fn synthetic_problem(
    spec: &SyntheticSpec,
    act: Activation,
    depth: u32,
    params: &DynamicsParams,
) -> Result<LearningProblem> {
    crate::solver::synthetic_learning_problem(spec.p, spec.o_test, act, depth, params)
}

/// How loaded vectors are scaled into the kernel-input domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalize {
    /// Each vector scaled so `(1/N_0) |x|^2 = 1`.
    PerVector,
    /// All vectors divided by the root mean self-Gram of the slice;
    /// self-Grams average to 1 but individual norms stay informative.
    Global,
}

/// A binary-class subset of an image dataset, flattened and normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSlice {
    pub inputs: Vec<DVector<f64>>,
    /// +1 for class_a, -1 for class_b, balanced.
    pub labels: Vec<f64>,
    pub test_inputs: Vec<DVector<f64>>,
    pub test_labels: Vec<f64>,
    /// Source file, class pair and selected record indices.
    pub provenance: String,
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|source| CoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|source| CoreError::Io {
                path: path.display().to_string(),
                source,
            })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

struct IdxCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> IdxCursor<'a> {
    fn u32(&mut self) -> Result<u32> {
        let bytes: [u8; 4] = self
            .data
            .get(self.pos..self.pos + 4)
            .ok_or(CoreError::Format {
                offset: self.pos as u64,
                message: "truncated header".into(),
            })?
            .try_into()
            .unwrap();
        self.pos += 4;
        Ok(u32::from_be_bytes(bytes))
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        let out = self.data.get(self.pos..self.pos + n).ok_or(CoreError::Format {
            offset: self.pos as u64,
            message: format!("truncated payload, wanted {n} bytes"),
        })?;
        self.pos += n;
        Ok(out)
    }
}

fn parse_idx_images(data: &[u8]) -> Result<(usize, usize, Vec<&[u8]>)> {
    let mut cur = IdxCursor { data, pos: 0 };
    let magic = cur.u32()?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(CoreError::Format {
            offset: 0,
            message: format!("bad image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        });
    }
    let n = cur.u32()? as usize;
    let rows = cur.u32()? as usize;
    let cols = cur.u32()? as usize;
    let mut images = Vec::with_capacity(n);
    for _ in 0..n {
        images.push(cur.bytes(rows * cols)?);
    }
    Ok((rows, cols, images))
}

fn parse_idx_labels(data: &[u8]) -> Result<Vec<u8>> {
    let mut cur = IdxCursor { data, pos: 0 };
    let magic = cur.u32()?;
    if magic != IDX_LABELS_MAGIC {
        return Err(CoreError::Format {
            offset: 0,
            message: format!("bad label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        });
    }
    let n = cur.u32()? as usize;
    Ok(cur.bytes(n)?.to_vec())
}

fn select_and_normalize(
    records: Vec<(usize, Vec<f64>, u8)>,
    class_a: u8,
    class_b: u8,
    n_per_class: usize,
    normalize: Normalize,
    provenance: String,
    total: usize,
) -> Result<DatasetSlice> {
    if n_per_class == 0 {
        return Err(CoreError::InvalidParameter("n_per_class must be >= 1".into()));
    }
    let mut chosen: Vec<(usize, Vec<f64>, f64)> = Vec::with_capacity(2 * n_per_class);
    let (mut na, mut nb) = (0usize, 0usize);
    for (idx, pixels, label) in records {
        let want = if label == class_a && na < n_per_class {
            na += 1;
            Some(1.0)
        } else if label == class_b && nb < n_per_class {
            nb += 1;
            Some(-1.0)
        } else {
            None
        };
        if let Some(y) = want {
            chosen.push((idx, pixels, y));
        }
        if na == n_per_class && nb == n_per_class {
            break;
        }
    }
    if na < n_per_class || nb < n_per_class {
        return Err(CoreError::Format {
            offset: total as u64,
            message: format!(
                "class exhausted: found {na} of class {class_a} and {nb} of class {class_b}, \
                 wanted {n_per_class} each"
            ),
        });
    }

    let n0 = chosen[0].1.len();
    let mut inputs: Vec<DVector<f64>> = Vec::with_capacity(chosen.len());
    let mut labels = Vec::with_capacity(chosen.len());
    let mut indices = Vec::with_capacity(chosen.len());
    for (idx, pixels, y) in chosen {
        let v = DVector::from_vec(pixels);
        if v.norm_squared() == 0.0 {
            return Err(CoreError::DegenerateInput(format!(
                "record {idx} is a zero vector and cannot be normalized"
            )));
        }
        inputs.push(v);
        labels.push(y);
        indices.push(idx);
    }
    match normalize {
        Normalize::PerVector => {
            for v in &mut inputs {
                let g = input_gram(v.as_slice(), v.as_slice(), n0)?;
                *v /= g.sqrt();
            }
        }
        Normalize::Global => {
            let mean_gram = inputs
                .iter()
                .map(|v| input_gram(v.as_slice(), v.as_slice(), n0))
                .sum::<Result<f64>>()?
                / inputs.len() as f64;
            let s = mean_gram.sqrt();
            for v in &mut inputs {
                *v /= s;
            }
        }
    }
    Ok(DatasetSlice {
        inputs,
        labels,
        test_inputs: vec![],
        test_labels: vec![],
        provenance: format!("{provenance} classes {class_a}/{class_b} indices {indices:?}"),
    })
}

/// Loads a binary-class subset from an IDX image file plus its label file
/// (both optionally gzip-compressed). Selects the first `n_per_class`
/// examples of each class in file order; `class_a` maps to label +1.
pub fn load_idx(
    images_path: &Path,
    labels_path: &Path,
    class_a: u8,
    class_b: u8,
    n_per_class: usize,
    normalize: Normalize,
) -> Result<DatasetSlice> {
    let img_bytes = read_maybe_gz(images_path)?;
    let lbl_bytes = read_maybe_gz(labels_path)?;
    let (_, _, images) = parse_idx_images(&img_bytes)?;
    let labels = parse_idx_labels(&lbl_bytes)?;
    if images.len() != labels.len() {
        return Err(CoreError::Format {
            offset: 4,
            message: format!(
                "image count {} does not match label count {}",
                images.len(),
                labels.len()
            ),
        });
    }
    let records = images
        .iter()
        .zip(&labels)
        .enumerate()
        .map(|(i, (img, &l))| (i, img.iter().map(|&b| b as f64).collect(), l))
        .collect();
    select_and_normalize(
        records,
        class_a,
        class_b,
        n_per_class,
        normalize,
        format!("idx:{}", images_path.display()),
        img_bytes.len(),
    )
}

/// Loads a binary-class subset from a CIFAR-10 binary batch (3073-byte
/// records: one label byte then 3072 channel-major pixels).
pub fn load_cifar_binary(
    path: &Path,
    class_a: u8,
    class_b: u8,
    n_per_class: usize,
    normalize: Normalize,
) -> Result<DatasetSlice> {
    const RECORD: usize = 3073;
    let bytes = read_maybe_gz(path)?;
    if bytes.is_empty() || bytes.len() % RECORD != 0 {
        return Err(CoreError::Format {
            offset: bytes.len() as u64,
            message: format!("file length {} is not a multiple of {RECORD}", bytes.len()),
        });
    }
    let records = bytes
        .chunks_exact(RECORD)
        .enumerate()
        .map(|(i, rec)| (i, rec[1..].iter().map(|&b| b as f64).collect(), rec[0]))
        .collect();
    select_and_normalize(
        records,
        class_a,
        class_b,
        n_per_class,
        normalize,
        format!("cifar:{}", path.display()),
        bytes.len(),
    )
}

/// Writes images and labels as a pair of IDX files (uncompressed).
pub fn write_idx(
    images_path: &Path,
    labels_path: &Path,
    images: &[Vec<u8>],
    labels: &[u8],
    rows: usize,
    cols: usize,
) -> Result<()> {
    if images.len() != labels.len() {
        return Err(CoreError::Dimension {
            expected: images.len(),
            got: labels.len(),
        });
    }
    let mut img_out = Vec::with_capacity(16 + images.len() * rows * cols);
    img_out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    img_out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    img_out.extend_from_slice(&(rows as u32).to_be_bytes());
    img_out.extend_from_slice(&(cols as u32).to_be_bytes());
    for (i, img) in images.iter().enumerate() {
        if img.len() != rows * cols {
            return Err(CoreError::DegenerateInput(format!(
                "image {i} has {} pixels, expected {}",
                img.len(),
                rows * cols
            )));
        }
        img_out.extend_from_slice(img);
    }
    let mut lbl_out = Vec::with_capacity(8 + labels.len());
    lbl_out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lbl_out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lbl_out.extend_from_slice(labels);
    for (path, data) in [(images_path, img_out), (labels_path, lbl_out)] {
        std::fs::write(path, data).map_err(|source| CoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

/// Builds a LearningProblem from a slice: P x P train Gram plus one Gram row
/// per held-out test input.
pub fn build_problem(
    slice: &DatasetSlice,
    act: Activation,
    depth: u32,
    params: &DynamicsParams,
) -> Result<LearningProblem> {
    let p = slice.inputs.len();
    if p == 0 {
        return Err(CoreError::DegenerateInput("empty slice".into()));
    }
    let n0 = slice.inputs[0].len();
    let mut gram = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let g = input_gram(slice.inputs[i].as_slice(), slice.inputs[j].as_slice(), n0)?;
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let tests = slice
        .test_inputs
        .iter()
        .zip(&slice.test_labels)
        .map(|(x, &y)| {
            let row = DVector::from_fn(p, |mu, _| {
                input_gram(x.as_slice(), slice.inputs[mu].as_slice(), n0).unwrap()
            });
            Ok(TestPoint {
                row,
                self_gram: input_gram(x.as_slice(), x.as_slice(), n0)?,
                target: y,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LearningProblem::new(
        gram,
        tests,
        DVector::from_vec(slice.labels.clone()),
        act,
        depth,
        params.clone(),
    )
}

// ---------------------------------------------------------------------------
// Procedural stroke-rendered digits.
//
// Each digit is a small set of control curves (ellipse arcs and line
// segments) jittered per sample, mapped through a random rotation, shear and
// scale, then rendered on a 28x28 grid as a signed-distance field of the
// stroke. The norm statistics mimic handwritten digits: ones are short thin
// strokes (small norm), zeros long wide loops (large norm), while fours and
// nines have overlapping norm distributions.
// ---------------------------------------------------------------------------

pub const DIGIT_SIDE: usize = 28;

fn push_ellipse(pts: &mut Vec<(f64, f64)>, cx: f64, cy: f64, rx: f64, ry: f64) {
    const N: usize = 80;
    for i in 0..N {
        let t = 2.0 * PI * i as f64 / (N - 1) as f64;
        pts.push((cx + rx * t.cos(), cy + ry * t.sin()));
    }
}

fn push_line(pts: &mut Vec<(f64, f64)>, p: (f64, f64), q: (f64, f64), n: usize) {
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        pts.push((p.0 * (1.0 - t) + q.0 * t, p.1 * (1.0 - t) + q.1 * t));
    }
}

fn jitter(rng: &mut ChaCha8Rng, s: f64) -> f64 {
    s * rng.sample::<f64, _>(StandardNormal)
}

fn digit_points(digit: u8, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(160);
    match digit {
        0 => {
            let rx = (5.5 + jitter(rng, 0.8)).max(3.0);
            let ry = (8.5 + jitter(rng, 0.8)).max(5.0);
            let (cx, cy) = (14.0 + jitter(rng, 1.2), 14.0 + jitter(rng, 1.2));
            push_ellipse(&mut pts, cx, cy, rx, ry);
        }
        1 => {
            let top = (14.0 + jitter(rng, 1.2), 4.5 + jitter(rng, 1.2));
            let bot = (14.0 + jitter(rng, 1.2), 23.5 + jitter(rng, 1.2));
            push_line(&mut pts, top, bot, 30);
            if rng.gen::<f64>() < 0.4 {
                let flag = (
                    top.0 - 3.0 + jitter(rng, 0.8),
                    top.1 + 3.0 + jitter(rng, 0.8),
                );
                push_line(&mut pts, flag, top, 10);
            }
        }
        4 => {
            let a = (16.0 + jitter(rng, 1.2), 4.5 + jitter(rng, 1.2));
            let b = (7.5 + jitter(rng, 1.2), 16.0 + jitter(rng, 1.2));
            let c = (20.0 + jitter(rng, 1.2), 16.0 + jitter(rng, 1.2));
            let d = (15.5 + jitter(rng, 1.2), 8.0 + jitter(rng, 1.2));
            let e = (15.5 + jitter(rng, 1.2), 23.5 + jitter(rng, 1.2));
            push_line(&mut pts, a, b, 30);
            push_line(&mut pts, b, c, 30);
            push_line(&mut pts, d, e, 30);
        }
        9 => {
            let cx = 14.0 + jitter(rng, 1.2);
            let cy = 10.0 + jitter(rng, 0.8);
            let r = (4.8 + jitter(rng, 0.5)).max(3.0);
            let ry = (r + jitter(rng, 0.5)).max(3.0);
            push_ellipse(&mut pts, cx, cy, r, ry);
            let tail_end = (12.0 + jitter(rng, 1.2), 23.5 + jitter(rng, 1.2));
            push_line(&mut pts, (cx + r, cy), tail_end, 30);
        }
        other => panic!("no stroke model for digit {other}"),
    }
    pts
}

/// Renders one jittered sample of a supported digit (0, 1, 4, 9) as a 28x28
/// grayscale image, row-major.
pub fn render_stroke_digit(digit: u8, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let pts = digit_points(digit, rng);
    let ang = rng.gen_range(-10.0f64..10.0) * PI / 180.0;
    let shear = rng.gen_range(-0.15f64..0.15);
    let scale = rng.gen_range(0.92f64..1.08);
    let (dx, dy) = (
        0.7 * rng.sample::<f64, _>(StandardNormal),
        0.7 * rng.sample::<f64, _>(StandardNormal),
    );
    let width = rng.gen_range(2.0f64..3.0);
    // rotation composed with shear, applied about the image center
    let (s, c) = ang.sin_cos();
    let m = [
        scale * c,
        scale * (c * shear - s),
        scale * s,
        scale * (s * shear + c),
    ];
    let pts: Vec<(f64, f64)> = pts
        .into_iter()
        .map(|(x, y)| {
            let (u, v) = (x - 14.0, y - 14.0);
            (
                m[0] * u + m[1] * v + 14.0 + dx,
                m[2] * u + m[3] * v + 14.0 + dy,
            )
        })
        .collect();
    let mut img = vec![0u8; DIGIT_SIDE * DIGIT_SIDE];
    for py in 0..DIGIT_SIDE {
        for px in 0..DIGIT_SIDE {
            let (fx, fy) = (px as f64, py as f64);
            let d2 = pts
                .iter()
                .map(|&(x, y)| (fx - x) * (fx - x) + (fy - y) * (fy - y))
                .fold(f64::INFINITY, f64::min);
            let val = (width / 2.0 + 0.5 - d2.sqrt()).clamp(0.0, 1.0);
            img[py * DIGIT_SIDE + px] = (val * 255.0).round() as u8;
        }
    }
    img
}

/// Generates `n_per_class` samples of each listed digit, interleaved by
/// class, deterministically from the seed.
pub fn generate_stroke_digits(
    classes: &[u8],
    n_per_class: usize,
    seed: u64,
) -> (Vec<Vec<u8>>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(classes.len() * n_per_class);
    let mut labels = Vec::with_capacity(classes.len() * n_per_class);
    for _ in 0..n_per_class {
        for &d in classes {
            images.push(render_stroke_digit(d, &mut rng));
            labels.push(d);
        }
    }
    (images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> DynamicsParams {
        DynamicsParams::new(1e-2, 1.0, 1.0, 0.01, 1.0).unwrap()
    }

    #[test]
    fn synthetic_spec_validation() {
        assert!(SyntheticSpec::new(2, 0.75).is_ok());
        assert!(SyntheticSpec::new(3, 0.75).is_err());
        assert!(SyntheticSpec::new(0, 0.75).is_err());
        assert!(SyntheticSpec::new(4, 0.0).is_err());
        assert!(SyntheticSpec::new(4, 1.5).is_err());
    }

    #[test]
    fn synthetic_problem_grams() {
        let spec = SyntheticSpec::new(4, 0.75).unwrap();
        let p = synthetic_problem(&spec, Activation::Relu, 1, &params()).unwrap();
        assert_eq!(p.train_gram, DMatrix::identity(4, 4));
        assert_eq!(p.tests[0].row.as_slice(), &[0.75, 0.0, 0.0, 0.0]);
        assert_eq!(p.tests[0].self_gram, 1.0);
        assert_eq!(p.tests[0].target, 1.0);
        assert_eq!(p.targets[0], 1.0);
        assert_eq!(p.targets.iter().sum::<f64>(), 0.0);
    }

    fn fixture_paths(dir: &tempfile::TempDir) -> (std::path::PathBuf, std::path::PathBuf) {
        (dir.path().join("img.idx"), dir.path().join("lbl.idx"))
    }

    #[test]
    fn idx_roundtrip_and_normalization() {
        let dir = tempfile::tempdir().unwrap();
        let (imgs, lbls) = fixture_paths(&dir);
        let (images, labels) = generate_stroke_digits(&[0, 1], 5, 7);
        write_idx(&imgs, &lbls, &images, &labels, 28, 28).unwrap();

        let slice = load_idx(&imgs, &lbls, 0, 1, 5, Normalize::PerVector).unwrap();
        assert_eq!(slice.inputs.len(), 10);
        assert_eq!(slice.labels.iter().sum::<f64>(), 0.0);
        for v in &slice.inputs {
            assert_relative_eq!(input_gram(v.as_slice(), v.as_slice(), 784).unwrap(), 1.0, epsilon = 1e-10);
        }

        let slice = load_idx(&imgs, &lbls, 0, 1, 5, Normalize::Global).unwrap();
        let mean: f64 = slice
            .inputs
            .iter()
            .map(|v| input_gram(v.as_slice(), v.as_slice(), 784).unwrap())
            .sum::<f64>()
            / 10.0;
        assert_relative_eq!(mean, 1.0, epsilon = 1e-10);
        // global scaling keeps norm differences between classes
        let g0 = input_gram(slice.inputs[0].as_slice(), slice.inputs[0].as_slice(), 784).unwrap();
        let g1 = input_gram(slice.inputs[1].as_slice(), slice.inputs[1].as_slice(), 784).unwrap();
        assert!((g0 - g1).abs() > 1e-3);
    }

    #[test]
    fn idx_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let (imgs, lbls) = fixture_paths(&dir);
        let (images, labels) = generate_stroke_digits(&[4, 9], 3, 1);
        write_idx(&imgs, &lbls, &images, &labels, 28, 28).unwrap();
        let a = load_idx(&imgs, &lbls, 4, 9, 3, Normalize::PerVector).unwrap();
        let b = load_idx(&imgs, &lbls, 4, 9, 3, Normalize::PerVector).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn idx_error_paths() {
        let dir = tempfile::tempdir().unwrap();
        let (imgs, lbls) = fixture_paths(&dir);
        let (images, labels) = generate_stroke_digits(&[0, 1], 2, 2);
        write_idx(&imgs, &lbls, &images, &labels, 28, 28).unwrap();

        // zero requested
        assert!(matches!(
            load_idx(&imgs, &lbls, 0, 1, 0, Normalize::PerVector),
            Err(CoreError::InvalidParameter(_))
        ));
        // class exhausted
        assert!(matches!(
            load_idx(&imgs, &lbls, 0, 1, 3, Normalize::PerVector),
            Err(CoreError::Format { .. })
        ));
        // absent class
        assert!(matches!(
            load_idx(&imgs, &lbls, 0, 7, 1, Normalize::PerVector),
            Err(CoreError::Format { .. })
        ));
        // corrupted magic reports offset 0
        let mut bytes = std::fs::read(&imgs).unwrap();
        bytes[0] = 0xff;
        let bad = dir.path().join("bad.idx");
        std::fs::write(&bad, &bytes).unwrap();
        match load_idx(&bad, &lbls, 0, 1, 1, Normalize::PerVector) {
            Err(CoreError::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
        // truncated payload
        let short = dir.path().join("short.idx");
        std::fs::write(&short, &std::fs::read(&imgs).unwrap()[..200]).unwrap();
        assert!(matches!(
            load_idx(&short, &lbls, 0, 1, 1, Normalize::PerVector),
            Err(CoreError::Format { .. })
        ));
    }

    #[test]
    fn gzip_transparent() {
        use flate2::write::GzEncoder;
        use flate2::Compression;
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let (imgs, lbls) = fixture_paths(&dir);
        let (images, labels) = generate_stroke_digits(&[0, 1], 3, 3);
        write_idx(&imgs, &lbls, &images, &labels, 28, 28).unwrap();
        let gz = dir.path().join("img.idx.gz");
        let mut enc = GzEncoder::new(std::fs::File::create(&gz).unwrap(), Compression::fast());
        enc.write_all(&std::fs::read(&imgs).unwrap()).unwrap();
        enc.finish().unwrap();
        let a = load_idx(&imgs, &lbls, 0, 1, 3, Normalize::PerVector).unwrap();
        let mut b = load_idx(&gz, &lbls, 0, 1, 3, Normalize::PerVector).unwrap();
        b.provenance = a.provenance.clone();
        assert_eq!(a, b);
    }

    #[test]
    fn cifar_roundtrip_and_record_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("batch.bin");
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut bytes = Vec::new();
        for i in 0..10u8 {
            bytes.push(if i % 2 == 0 { 3 } else { 5 });
            for _ in 0..3072 {
                bytes.push(rng.gen_range(1..=255u8));
            }
        }
        std::fs::write(&path, &bytes).unwrap();
        let slice = load_cifar_binary(&path, 3, 5, 4, Normalize::PerVector).unwrap();
        assert_eq!(slice.inputs.len(), 8);
        assert_eq!(slice.inputs[0].len(), 3072);
        for v in &slice.inputs {
            assert_relative_eq!(input_gram(v.as_slice(), v.as_slice(), 3072).unwrap(), 1.0, epsilon = 1e-10);
        }
        let twice = load_cifar_binary(&path, 3, 5, 4, Normalize::PerVector).unwrap();
        assert_eq!(slice, twice);

        std::fs::write(&path, &bytes[..3073 * 2 + 100]).unwrap();
        assert!(matches!(
            load_cifar_binary(&path, 3, 5, 1, Normalize::PerVector),
            Err(CoreError::Format { .. })
        ));
    }

    #[test]
    fn zero_vector_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (imgs, lbls) = fixture_paths(&dir);
        write_idx(
            &imgs,
            &lbls,
            &[vec![0u8; 784], vec![10u8; 784]],
            &[0, 1],
            28,
            28,
        )
        .unwrap();
        assert!(matches!(
            load_idx(&imgs, &lbls, 0, 1, 1, Normalize::PerVector),
            Err(CoreError::DegenerateInput(_))
        ));
    }

    #[test]
    fn build_problem_matches_synthetic() {
        // orthonormal unit vectors through the generic Gram path
        let n0 = 6;
        let mut inputs = Vec::new();
        for i in 0..4 {
            let mut v = DVector::zeros(n0);
            v[i] = (n0 as f64).sqrt();
            inputs.push(v);
        }
        let mut test = DVector::zeros(n0);
        test[0] = 0.75 * (n0 as f64).sqrt();
        test[4] = (1.0 - 0.75f64 * 0.75).sqrt() * (n0 as f64).sqrt();
        let slice = DatasetSlice {
            inputs,
            labels: vec![1.0, -1.0, 1.0, -1.0],
            test_inputs: vec![test],
            test_labels: vec![1.0],
            provenance: "constructed".into(),
        };
        let a = build_problem(&slice, Activation::Relu, 2, &params()).unwrap();
        let spec = SyntheticSpec::new(4, 0.75).unwrap();
        let b = synthetic_problem(&spec, Activation::Relu, 2, &params()).unwrap();
        assert_relative_eq!(a.train_gram, b.train_gram, epsilon = 1e-12);
        assert_relative_eq!(a.tests[0].row, b.tests[0].row, epsilon = 1e-12);
        assert_relative_eq!(a.tests[0].self_gram, b.tests[0].self_gram, epsilon = 1e-12);
    }

    #[test]
    fn stroke_digits_deterministic_and_nonempty() {
        let (a, la) = generate_stroke_digits(&[0, 1, 4, 9], 2, 5);
        let (b, _) = generate_stroke_digits(&[0, 1, 4, 9], 2, 5);
        assert_eq!(a, b);
        assert_eq!(la, &[0, 1, 4, 9, 0, 1, 4, 9]);
        for img in &a {
            assert!(img.iter().any(|&p| p > 128));
        }
    }

    #[test]
    fn stroke_digit_norm_ordering() {
        // ones are thin strokes, zeros wide loops; norms must separate
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mean_norm = |d: u8, rng: &mut ChaCha8Rng| {
            (0..30)
                .map(|_| {
                    render_stroke_digit(d, rng)
                        .iter()
                        .map(|&p| (p as f64).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .sum::<f64>()
                / 30.0
        };
        let n0 = mean_norm(0, &mut rng);
        let n1 = mean_norm(1, &mut rng);
        assert!(n0 > 1.3 * n1, "zero norm {n0} vs one norm {n1}");
    }
}
