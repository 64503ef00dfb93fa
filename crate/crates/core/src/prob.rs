//! Finite-alphabet probability primitives: distributions, joint tensors, and
//! the information measures every bound evaluation is built from.
//!
//! All entropies and mutual informations are in bits (log base 2). Probability
//! mass below [`PROB_FLOOR`] is treated as exactly zero inside entropy sums so
//! that `0 log 0 = 0` holds without NaN traffic.

use thiserror::Error;

/// Mass below this is treated as zero in entropy sums.
pub const PROB_FLOOR: f64 = 1e-12;

/// Tolerance on total mass when validating a distribution.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ProbError {
    #[error("negative probability {value:.3e} at index {index}")]
    NegativeMass { index: usize, value: f64 },
    #[error("total mass {mass} deviates from 1 by more than {MASS_TOL:e}")]
    MassNotOne { mass: f64 },
    #[error("expected a {expected}-dimensional joint, got {actual} dimensions")]
    WrongArity { expected: usize, actual: usize },
    #[error("tensor has {len} entries but dims imply {expected}")]
    ShapeMismatch { len: usize, expected: usize },
    #[error("axis {axis} out of range for {ndim}-dimensional joint")]
    AxisOutOfRange { axis: usize, ndim: usize },
    #[error("joint over sequence pairs needs an even dimension count, got {ndim}")]
    OddArity { ndim: usize },
    #[error("value {value} outside [0, 1]")]
    OutOfRange { value: f64 },
    #[error("empty distribution")]
    Empty,
}

fn check_mass(probs: &[f64]) -> Result<(), ProbError> {
    if probs.is_empty() {
        return Err(ProbError::Empty);
    }
    for (index, &value) in probs.iter().enumerate() {
        if value < -PROB_FLOOR {
            return Err(ProbError::NegativeMass { index, value });
        }
    }
    let mass: f64 = probs.iter().sum();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(ProbError::MassNotOne { mass });
    }
    Ok(())
}

/// Shannon entropy in bits of a bare probability slice.
///
/// Callers are responsible for validity; entries below [`PROB_FLOOR`]
/// contribute zero.
pub fn entropy_slice(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > PROB_FLOOR {
            h -= p * p.log2();
        }
    }
    h
}

/// A probability distribution over one finite alphabet.
///
/// Validity (non-negative entries, unit mass) is checked at construction, so
/// every held value is a genuine distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist {
    probs: Vec<f64>,
}

impl Dist {
    pub fn new(probs: Vec<f64>) -> Result<Self, ProbError> {
        check_mass(&probs)?;
        Ok(Self { probs })
    }

    /// Point mass on `symbol` over an alphabet of `len` symbols.
    pub fn point_mass(symbol: usize, len: usize) -> Self {
        let mut probs = vec![0.0; len];
        probs[symbol] = 1.0;
        Self { probs }
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Shannon entropy H(d) in bits.
pub fn entropy(d: &Dist) -> f64 {
    entropy_slice(d.probs())
}

/// Binary entropy h(x) in bits.
pub fn binary_entropy(x: f64) -> Result<f64, ProbError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(ProbError::OutOfRange { value: x });
    }
    Ok(entropy_slice(&[x, 1.0 - x]))
}

/// A joint distribution over several finite alphabets, stored densely in
/// row-major order (last axis varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    dims: Vec<usize>,
    probs: Vec<f64>,
    labels: Vec<String>,
}

impl JointDist {
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self, ProbError> {
        let expected: usize = dims.iter().product();
        if probs.len() != expected {
            return Err(ProbError::ShapeMismatch {
                len: probs.len(),
                expected,
            });
        }
        check_mass(&probs)?;
        let labels = (0..dims.len()).map(|i| format!("A{i}")).collect();
        Ok(Self { dims, probs, labels })
    }

    pub fn with_labels(mut self, labels: &[&str]) -> Self {
        assert_eq!(labels.len(), self.dims.len(), "one label per axis");
        self.labels = labels.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Mass at a multi-index.
    pub fn at(&self, idx: &[usize]) -> f64 {
        self.probs[self.flat_index(idx)]
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut flat = 0;
        for (i, &d) in self.dims.iter().enumerate() {
            debug_assert!(idx[i] < d);
            flat = flat * d + idx[i];
        }
        flat
    }

    /// Marginal tensor over the given axes (kept in the order listed), as a
    /// bare vector of size `prod(dims[axes])`.
    fn marginal_probs(&self, axes: &[usize]) -> Result<Vec<f64>, ProbError> {
        for &axis in axes {
            if axis >= self.ndim() {
                return Err(ProbError::AxisOutOfRange {
                    axis,
                    ndim: self.ndim(),
                });
            }
        }
        let out_len: usize = axes.iter().map(|&a| self.dims[a]).product();
        let mut out = vec![0.0; out_len.max(1)];
        let mut idx = vec![0usize; self.ndim()];
        for &p in self.probs.iter() {
            let mut flat = 0;
            for &a in axes {
                flat = flat * self.dims[a] + idx[a];
            }
            out[flat] += p;
            // odometer increment over the full multi-index
            for d in (0..self.ndim()).rev() {
                idx[d] += 1;
                if idx[d] < self.dims[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(out)
    }

    /// Marginal joint over the given axes, preserving labels.
    pub fn marginalize(&self, axes: &[usize]) -> Result<JointDist, ProbError> {
        let probs = self.marginal_probs(axes)?;
        let dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let labels: Vec<String> = axes.iter().map(|&a| self.labels[a].clone()).collect();
        let mut j = JointDist::new(dims, probs)?;
        j.labels = labels;
        Ok(j)
    }

    /// Entropy in bits of the marginal over `axes`; the empty set has
    /// entropy zero.
    pub fn entropy_of(&self, axes: &[usize]) -> Result<f64, ProbError> {
        if axes.is_empty() {
            return Ok(0.0);
        }
        Ok(entropy_slice(&self.marginal_probs(axes)?))
    }
}

/// Mutual information I(A;B) in bits of a two-axis joint.
pub fn mutual_information(j: &JointDist) -> Result<f64, ProbError> {
    if j.ndim() != 2 {
        return Err(ProbError::WrongArity {
            expected: 2,
            actual: j.ndim(),
        });
    }
    Ok(j.entropy_of(&[0])? + j.entropy_of(&[1])? - j.entropy_of(&[0, 1])?)
}

/// Conditional mutual information I(A;B|C) in bits of a three-axis joint with
/// axes ordered (A, B, C).
pub fn conditional_mutual_information(j: &JointDist) -> Result<f64, ProbError> {
    if j.ndim() != 3 {
        return Err(ProbError::WrongArity {
            expected: 3,
            actual: j.ndim(),
        });
    }
    conditional_mi_axes(j, &[0], &[1], &[2])
}

/// I(A;B|C) in bits for arbitrary disjoint axis groups of any joint,
/// via H(A,C) + H(B,C) - H(A,B,C) - H(C). Empty A or B gives zero.
pub fn conditional_mi_axes(
    j: &JointDist,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<f64, ProbError> {
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let union = |xs: &[usize], ys: &[usize]| {
        let mut v: Vec<usize> = xs.iter().chain(ys).copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let ac = union(a, c);
    let bc = union(b, c);
    let abc = union(&ac, b);
    Ok(j.entropy_of(&ac)? + j.entropy_of(&bc)? - j.entropy_of(&abc)? - j.entropy_of(c)?)
}

/// Residual of the Csiszár sum identity on a joint over (Y_1..Y_n, Z_1..Z_n):
/// |Σ_i I(Y^{i-1}; Z_i | Z_{i+1}^n) - Σ_i I(Z_{i+1}^n; Y_i | Y^{i-1})|.
///
/// The identity holds for every distribution, so the residual is pure
/// floating-point noise; anything above ~1e-9 indicates a broken input.
pub fn csiszar_identity_residual(j: &JointDist) -> Result<f64, ProbError> {
    if !j.ndim().is_multiple_of(2) || j.ndim() == 0 {
        return Err(ProbError::OddArity { ndim: j.ndim() });
    }
    let n = j.ndim() / 2;
    let y = |i: usize| i; // axis of Y_{i+1}
    let z = |i: usize| n + i; // axis of Z_{i+1}
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    for i in 0..n {
        let y_past: Vec<usize> = (0..i).map(y).collect();
        let z_future: Vec<usize> = (i + 1..n).map(z).collect();
        sum_a += conditional_mi_axes(j, &y_past, &[z(i)], &z_future)?;
        sum_b += conditional_mi_axes(j, &z_future, &[y(i)], &y_past)?;
    }
    Ok((sum_a - sum_b).abs())
}
