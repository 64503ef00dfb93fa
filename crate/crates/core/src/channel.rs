//! Two-receiver broadcast channel model: the transition tensor p(y,z|x), its
//! per-receiver marginals, the binary skew-symmetric channel constructor, and
//! JSON file I/O.

use crate::prob::{entropy_slice, Dist, JointDist, ProbError, MASS_TOL, PROB_FLOOR};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("channel parameter {value} outside [0, 1]")]
    ParameterOutOfRange { value: f64 },
    #[error("input distribution has {len} entries, channel expects {nx}")]
    InputSizeMismatch { len: usize, nx: usize },
    #[error("channel invariants violated:\n{report}")]
    Invalid { report: ValidationReport },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// One invariant violation found by [`BroadcastChannel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeEntry { x: usize, y: usize, z: usize, value: f64 },
    RowMass { x: usize, mass: f64 },
    ShapeMismatch { detail: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NegativeEntry { x, y, z, value } => {
                write!(f, "negative entry w[{x},{y},{z}] = {value:.3e}")
            }
            Violation::RowMass { x, mass } => {
                write!(f, "slice w[{x},*,*] has mass {mass:.12} (expected 1)")
            }
            Violation::ShapeMismatch { detail } => write!(f, "shape mismatch: {detail}"),
        }
    }
}

/// Outcome of validating a channel; empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// A discrete memoryless broadcast channel p(y,z|x) over finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastChannel {
    nx: usize,
    ny: usize,
    nz: usize,
    /// Flat tensor, index (x, y, z) row-major: w[(x*ny + y)*nz + z].
    w: Vec<f64>,
}

/// One receiver's view p(out|in) of a broadcast channel.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalChannel {
    nin: usize,
    nout: usize,
    rows: Vec<f64>,
}

impl MarginalChannel {
    pub fn nin(&self) -> usize {
        self.nin
    }

    pub fn nout(&self) -> usize {
        self.nout
    }

    /// Transition row p(·|x).
    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.nout..(x + 1) * self.nout]
    }

    pub fn row_dist(&self, x: usize) -> Result<Dist, ProbError> {
        Dist::new(self.row(x).to_vec())
    }

    /// Output distribution induced by an input distribution.
    pub fn push_forward(&self, px: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nout];
        for (x, &p) in px.iter().enumerate() {
            for (o, &t) in self.row(x).iter().enumerate() {
                out[o] += p * t;
            }
        }
        out
    }

    /// Entropy of the output row for each input symbol, in bits.
    pub fn row_entropies(&self) -> Vec<f64> {
        (0..self.nin).map(|x| entropy_slice(self.row(x))).collect()
    }
}

impl BroadcastChannel {
    pub fn new(nx: usize, ny: usize, nz: usize, w: Vec<f64>) -> Result<Self, ChannelError> {
        let c = Self { nx, ny, nz, w };
        let report = c.validate();
        if report.is_valid() {
            Ok(c)
        } else {
            Err(ChannelError::Invalid { report })
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    /// Transition mass p(y,z|x).
    pub fn at(&self, x: usize, y: usize, z: usize) -> f64 {
        self.w[(x * self.ny + y) * self.nz + z]
    }

    pub fn tensor(&self) -> &[f64] {
        &self.w
    }

    /// Checks every invariant and reports all violations found.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.w.len() != self.nx * self.ny * self.nz {
            violations.push(Violation::ShapeMismatch {
                detail: format!(
                    "{} entries, dims {}x{}x{} imply {}",
                    self.w.len(),
                    self.nx,
                    self.ny,
                    self.nz,
                    self.nx * self.ny * self.nz
                ),
            });
            return ValidationReport { violations };
        }
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            violations.push(Violation::ShapeMismatch {
                detail: "alphabet sizes must be positive".into(),
            });
            return ValidationReport { violations };
        }
        for x in 0..self.nx {
            let mut mass = 0.0;
            for y in 0..self.ny {
                for z in 0..self.nz {
                    let value = self.at(x, y, z);
                    if value < -PROB_FLOOR {
                        violations.push(Violation::NegativeEntry { x, y, z, value });
                    }
                    mass += value;
                }
            }
            if (mass - 1.0).abs() > MASS_TOL {
                violations.push(Violation::RowMass { x, mass });
            }
        }
        ValidationReport { violations }
    }

    /// Receiver-Y view p(y|x).
    pub fn marginal_y(&self) -> MarginalChannel {
        let mut rows = vec![0.0; self.nx * self.ny];
        for x in 0..self.nx {
            for y in 0..self.ny {
                for z in 0..self.nz {
                    rows[x * self.ny + y] += self.at(x, y, z);
                }
            }
        }
        MarginalChannel {
            nin: self.nx,
            nout: self.ny,
            rows,
        }
    }

    /// Receiver-Z view p(z|x).
    pub fn marginal_z(&self) -> MarginalChannel {
        let mut rows = vec![0.0; self.nx * self.nz];
        for x in 0..self.nx {
            for y in 0..self.ny {
                for z in 0..self.nz {
                    rows[x * self.nz + z] += self.at(x, y, z);
                }
            }
        }
        MarginalChannel {
            nin: self.nx,
            nout: self.nz,
            rows,
        }
    }

    /// Joint law p(x,y,z) = px(x) w(y,z|x) induced by an input distribution.
    pub fn push_forward(&self, px: &Dist) -> Result<JointDist, ChannelError> {
        if px.len() != self.nx {
            return Err(ChannelError::InputSizeMismatch {
                len: px.len(),
                nx: self.nx,
            });
        }
        let mut probs = vec![0.0; self.w.len()];
        for x in 0..self.nx {
            let p = px.probs()[x];
            for i in 0..self.ny * self.nz {
                probs[x * self.ny * self.nz + i] = p * self.w[x * self.ny * self.nz + i];
            }
        }
        Ok(JointDist::new(vec![self.nx, self.ny, self.nz], probs)?.with_labels(&["X", "Y", "Z"]))
    }
}

/// The binary skew-symmetric channel.
///
/// Input 1 reaches Y noiselessly while Z sees it through a crossover of
/// 1 - p; input 0 reaches Z noiselessly while Y sees a crossover of 1 - p.
/// Y and Z are conditionally independent given X. At p = 1/2 the tensor is
/// invariant under the relabeling (x, y, z) -> (1-x, 1-z, 1-y).
pub fn bssc(p: f64) -> Result<BroadcastChannel, ChannelError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ChannelError::ParameterOutOfRange { value: p });
    }
    let py = [[p, 1.0 - p], [0.0, 1.0]]; // p(y|x)
    let pz = [[1.0, 0.0], [1.0 - p, p]]; // p(z|x)
    let mut w = vec![0.0; 8];
    for x in 0..2 {
        for y in 0..2 {
            for z in 0..2 {
                w[(x * 2 + y) * 2 + z] = py[x][y] * pz[x][z];
            }
        }
    }
    BroadcastChannel::new(2, 2, 2, w)
}

// --- JSON I/O ---------------------------------------------------------------

#[derive(serde::Deserialize)]
struct ChannelFile {
    nx: usize,
    ny: usize,
    nz: usize,
    w: Vec<Vec<Vec<f64>>>,
}

/// Serializes a channel as JSON with 17 significant digits, enough for exact
/// f64 round-trips.
pub fn channel_to_json(c: &BroadcastChannel) -> String {
    let mut s = String::new();
    let _ = write!(s, "{{\n  \"nx\": {},\n  \"ny\": {},\n  \"nz\": {},\n  \"w\": [",
        c.nx, c.ny, c.nz);
    for x in 0..c.nx {
        if x > 0 {
            s.push(',');
        }
        s.push_str("\n    [");
        for y in 0..c.ny {
            if y > 0 {
                s.push(',');
            }
            s.push_str("\n      [");
            for z in 0..c.nz {
                if z > 0 {
                    s.push_str(", ");
                }
                let _ = write!(s, "{:.16e}", c.at(x, y, z));
            }
            s.push(']');
        }
        s.push_str("\n    ]");
    }
    s.push_str("\n  ]\n}\n");
    s
}

pub fn save_channel(c: &BroadcastChannel, path: &Path) -> Result<(), ChannelError> {
    std::fs::write(path, channel_to_json(c)).map_err(|source| ChannelError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_channel(path: &Path) -> Result<BroadcastChannel, ChannelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ChannelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ChannelFile =
        serde_json::from_str(&text).map_err(|e| ChannelError::Parse {
            path: path.display().to_string(),
            detail: format!("{e} (line {}, column {})", e.line(), e.column()),
        })?;
    if file.w.len() != file.nx {
        return Err(ChannelError::Parse {
            path: path.display().to_string(),
            detail: format!("w has {} x-slices, nx = {}", file.w.len(), file.nx),
        });
    }
    let mut w = Vec::with_capacity(file.nx * file.ny * file.nz);
    for (x, slice) in file.w.iter().enumerate() {
        if slice.len() != file.ny {
            return Err(ChannelError::Parse {
                path: path.display().to_string(),
                detail: format!("slice at x={x} has {} rows, ny = {}", slice.len(), file.ny),
            });
        }
        for (y, row) in slice.iter().enumerate() {
            if row.len() != file.nz {
                return Err(ChannelError::Parse {
                    path: path.display().to_string(),
                    detail: format!(
                        "row at x={x}, y={y} has {} entries, nz = {}",
                        row.len(),
                        file.nz
                    ),
                });
            }
            w.extend_from_slice(row);
        }
    }
    BroadcastChannel::new(file.nx, file.ny, file.nz, w)
}
