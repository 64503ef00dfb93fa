//! Auxiliary-variable joint laws and their canonical transformations.
//!
//! The central type is [`AuxTriple`], a joint law `p(u,v)p(x|u,v)` feeding a
//! broadcast channel input. [`split_construction`] rewrites any triple into
//! one with deterministic `X` while preserving every first-order statistic
//! the rate evaluators consume; [`canonical_coupling`] merges two
//! single-auxiliary pairs with consistent input marginals into a triple; the
//! skew-symmetry helpers implement the receiver-exchange tricks available on
//! binary-input channels with symmetric output roles.

use std::fmt::Write as _;
use std::path::Path;

use crate::channel::BroadcastChannel;
use crate::prob::{Dist, JointDist, ProbError};

/// Tolerance for cross-checking input marginals between two auxiliary pairs.
pub const MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum AuxError {
    #[error("auxiliary conditionals have {actual} input symbols, channel expects {expected}")]
    AlphabetMismatch { expected: usize, actual: usize },
    #[error("operation requires a binary input alphabet, got {nx} symbols")]
    NonBinaryInput { nx: usize },
    #[error("conditional rows disagree in arity: {first} vs {second}")]
    RowArityMismatch { first: usize, second: usize },
    #[error("got {rows} conditional rows for {cells} cells")]
    RowCountMismatch { rows: usize, cells: usize },
    #[error("joint over the auxiliaries must have two axes, got {ndim}")]
    BadJointArity { ndim: usize },
    #[error(
        "input marginals disagree: |p_a(x) - p_b(x)| = {discrepancy:.3e} at x={x}, tolerance {MARGINAL_TOL:.0e}"
    )]
    InconsistentMarginals { x: usize, discrepancy: f64 },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {detail}")]
    Parse { path: String, detail: String },
    #[error(transparent)]
    Prob(#[from] ProbError),
}

// --- AuxTriple ----------------------------------------------------------------

/// Joint law `p(u,v)p(x|u,v)` over a pair of auxiliaries and the channel input.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxTriple {
    nu: usize,
    nv: usize,
    nx: usize,
    puv: JointDist,
    /// Conditional rows indexed `u * nv + v`.
    px_given_uv: Vec<Dist>,
    deterministic: bool,
}

impl AuxTriple {
    /// Builds a triple from a two-axis joint and one conditional row per cell.
    pub fn new(puv: JointDist, px_given_uv: Vec<Dist>) -> Result<Self, AuxError> {
        if puv.ndim() != 2 {
            return Err(AuxError::BadJointArity { ndim: puv.ndim() });
        }
        let nu = puv.dims()[0];
        let nv = puv.dims()[1];
        if px_given_uv.len() != nu * nv {
            return Err(AuxError::RowCountMismatch {
                rows: px_given_uv.len(),
                cells: nu * nv,
            });
        }
        let nx = px_given_uv[0].len();
        for row in &px_given_uv {
            if row.len() != nx {
                return Err(AuxError::RowArityMismatch {
                    first: nx,
                    second: row.len(),
                });
            }
        }
        let deterministic = px_given_uv
            .iter()
            .flat_map(|row| row.probs())
            .all(|&p| p == 0.0 || p == 1.0);
        let puv = puv.with_labels(&["U", "V"]);
        Ok(AuxTriple {
            nu,
            nv,
            nx,
            puv,
            px_given_uv,
            deterministic,
        })
    }

    /// Builds a triple from nested vectors: `puv[u][v]` and `rows[u][v][x]`.
    pub fn from_nested(puv: &[Vec<f64>], rows: &[Vec<Vec<f64>>]) -> Result<Self, AuxError> {
        let nu = puv.len();
        let nv = puv.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(nu * nv);
        for r in puv {
            if r.len() != nv {
                return Err(AuxError::RowArityMismatch {
                    first: nv,
                    second: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        let joint = JointDist::new(vec![nu, nv], flat)?;
        if rows.len() != nu {
            return Err(AuxError::RowCountMismatch {
                rows: rows.len(),
                cells: nu,
            });
        }
        let mut dists = Vec::with_capacity(nu * nv);
        for per_u in rows {
            if per_u.len() != nv {
                return Err(AuxError::RowCountMismatch {
                    rows: per_u.len(),
                    cells: nv,
                });
            }
            for row in per_u {
                dists.push(Dist::new(row.clone())?);
            }
        }
        AuxTriple::new(joint, dists)
    }

    /// Degenerate triple with both auxiliaries constant and `X ~ px`.
    pub fn constant_uv(px: Dist) -> Self {
        let puv = JointDist::new(vec![1, 1], vec![1.0]).expect("unit mass");
        AuxTriple::new(puv, vec![px]).expect("single valid row")
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// True iff every conditional entry is exactly 0 or 1.
    pub fn deterministic(&self) -> bool {
        self.deterministic
    }

    pub fn puv(&self) -> &JointDist {
        &self.puv
    }

    /// Mass of the auxiliary cell `(u, v)`.
    pub fn mass(&self, u: usize, v: usize) -> f64 {
        self.puv.at(&[u, v])
    }

    /// Conditional input row at cell `(u, v)`.
    pub fn row(&self, u: usize, v: usize) -> &Dist {
        &self.px_given_uv[u * self.nv + v]
    }

    pub fn rows(&self) -> &[Dist] {
        &self.px_given_uv
    }

    /// Input marginal `p(x)`.
    pub fn px(&self) -> Dist {
        let mut px = vec![0.0; self.nx];
        for u in 0..self.nu {
            for v in 0..self.nv {
                let m = self.mass(u, v);
                if m == 0.0 {
                    continue;
                }
                for (x, p) in self.row(u, v).probs().iter().enumerate() {
                    px[x] += m * p;
                }
            }
        }
        Dist::new(px).expect("marginal of a valid joint")
    }

    /// Marginal pair `(U, X)`; cells with zero mass get a point-mass row.
    pub fn u_pair(&self) -> AuxPair {
        self.pair_marginal(true)
    }

    /// Marginal pair `(V, X)`.
    pub fn v_pair(&self) -> AuxPair {
        self.pair_marginal(false)
    }

    fn pair_marginal(&self, over_u: bool) -> AuxPair {
        let n = if over_u { self.nu } else { self.nv };
        let other = if over_u { self.nv } else { self.nu };
        let mut pa = vec![0.0; n];
        let mut rows = vec![vec![0.0; self.nx]; n];
        for a in 0..n {
            for b in 0..other {
                let (u, v) = if over_u { (a, b) } else { (b, a) };
                let m = self.mass(u, v);
                pa[a] += m;
                if m == 0.0 {
                    continue;
                }
                for (x, p) in self.row(u, v).probs().iter().enumerate() {
                    rows[a][x] += m * p;
                }
            }
        }
        let rows = rows
            .into_iter()
            .zip(&pa)
            .map(|(row, &m)| {
                if m > 0.0 {
                    Dist::new(row.iter().map(|p| p / m).collect()).expect("normalized row")
                } else {
                    Dist::point_mass(0, self.nx)
                }
            })
            .collect();
        AuxPair::new(Dist::new(pa).expect("marginal mass"), rows).expect("consistent shapes")
    }
}

// --- AuxPair ------------------------------------------------------------------

/// Joint law `p(u)p(x|u)` over a single auxiliary and the channel input.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxPair {
    pu: Dist,
    px_given_u: Vec<Dist>,
    nx: usize,
}

impl AuxPair {
    pub fn new(pu: Dist, px_given_u: Vec<Dist>) -> Result<Self, AuxError> {
        if px_given_u.len() != pu.len() {
            return Err(AuxError::RowCountMismatch {
                rows: px_given_u.len(),
                cells: pu.len(),
            });
        }
        let nx = px_given_u[0].len();
        for row in &px_given_u {
            if row.len() != nx {
                return Err(AuxError::RowArityMismatch {
                    first: nx,
                    second: row.len(),
                });
            }
        }
        Ok(AuxPair {
            pu,
            px_given_u,
            nx,
        })
    }

    /// Builds a pair from nested vectors.
    pub fn from_nested(pu: &[f64], rows: &[Vec<f64>]) -> Result<Self, AuxError> {
        let pu = Dist::new(pu.to_vec())?;
        let rows = rows
            .iter()
            .map(|r| Dist::new(r.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        AuxPair::new(pu, rows)
    }

    pub fn n(&self) -> usize {
        self.pu.len()
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn pu(&self) -> &Dist {
        &self.pu
    }

    pub fn row(&self, u: usize) -> &Dist {
        &self.px_given_u[u]
    }

    pub fn rows(&self) -> &[Dist] {
        &self.px_given_u
    }

    /// Input marginal `p(x)`.
    pub fn marginal_x(&self) -> Dist {
        let mut px = vec![0.0; self.nx];
        for (u, &m) in self.pu.probs().iter().enumerate() {
            for (x, p) in self.px_given_u[u].probs().iter().enumerate() {
                px[x] += m * p;
            }
        }
        Dist::new(px).expect("marginal of a valid pair")
    }

    /// Relabels a binary input by exchanging the two symbols in every row.
    pub fn flip_binary_x(&self) -> Result<AuxPair, AuxError> {
        if self.nx != 2 {
            return Err(AuxError::NonBinaryInput { nx: self.nx });
        }
        let rows = self
            .px_given_u
            .iter()
            .map(|r| Dist::new(vec![r.probs()[1], r.probs()[0]]).expect("permuted row"))
            .collect();
        AuxPair::new(self.pu.clone(), rows)
    }
}

// --- CommonInfoAux -------------------------------------------------------------

/// Joint law `p(u)p(v)p(w|u,v)p(x|u,v,w)` with independent `U` and `V`.
///
/// The nested-conditional representation makes the independence of `U` and
/// `V` hold exactly by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonInfoAux {
    pu: Dist,
    pv: Dist,
    nw: usize,
    nx: usize,
    /// Rows indexed `u * nv + v`.
    pw_given_uv: Vec<Dist>,
    /// Rows indexed `(u * nv + v) * nw + w`.
    px_given_uvw: Vec<Dist>,
}

impl CommonInfoAux {
    pub fn new(
        pu: Dist,
        pv: Dist,
        pw_given_uv: Vec<Dist>,
        px_given_uvw: Vec<Dist>,
    ) -> Result<Self, AuxError> {
        let (nu, nv) = (pu.len(), pv.len());
        if pw_given_uv.len() != nu * nv {
            return Err(AuxError::RowCountMismatch {
                rows: pw_given_uv.len(),
                cells: nu * nv,
            });
        }
        let nw = pw_given_uv[0].len();
        for row in &pw_given_uv {
            if row.len() != nw {
                return Err(AuxError::RowArityMismatch {
                    first: nw,
                    second: row.len(),
                });
            }
        }
        if px_given_uvw.len() != nu * nv * nw {
            return Err(AuxError::RowCountMismatch {
                rows: px_given_uvw.len(),
                cells: nu * nv * nw,
            });
        }
        let nx = px_given_uvw[0].len();
        for row in &px_given_uvw {
            if row.len() != nx {
                return Err(AuxError::RowArityMismatch {
                    first: nx,
                    second: row.len(),
                });
            }
        }
        Ok(CommonInfoAux {
            pu,
            pv,
            nw,
            nx,
            pw_given_uv,
            px_given_uvw,
        })
    }

    pub fn nu(&self) -> usize {
        self.pu.len()
    }

    pub fn nv(&self) -> usize {
        self.pv.len()
    }

    pub fn nw(&self) -> usize {
        self.nw
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Joint law over `(U, V, W, X, Y, Z)` induced through a channel.
    #[allow(clippy::needless_range_loop)]
    pub fn induced_joint(&self, c: &BroadcastChannel) -> Result<JointDist, AuxError> {
        if self.nx != c.nx() {
            return Err(AuxError::AlphabetMismatch {
                expected: c.nx(),
                actual: self.nx,
            });
        }
        let (nu, nv, nw, nx) = (self.nu(), self.nv(), self.nw, self.nx);
        let (ny, nz) = (c.ny(), c.nz());
        let mut probs = vec![0.0; nu * nv * nw * nx * ny * nz];
        for u in 0..nu {
            for v in 0..nv {
                let cell = self.pu.probs()[u] * self.pv.probs()[v];
                if cell == 0.0 {
                    continue;
                }
                let pw = self.pw_given_uv[u * nv + v].probs();
                for w in 0..nw {
                    let px = self.px_given_uvw[(u * nv + v) * nw + w].probs();
                    for x in 0..nx {
                        let m = cell * pw[w] * px[x];
                        if m == 0.0 {
                            continue;
                        }
                        for y in 0..ny {
                            for z in 0..nz {
                                let idx = ((((u * nv + v) * nw + w) * nx + x) * ny + y) * nz + z;
                                probs[idx] = m * c.at(x, y, z);
                            }
                        }
                    }
                }
            }
        }
        Ok(JointDist::new(vec![nu, nv, nw, nx, ny, nz], probs)?
            .with_labels(&["U", "V", "W", "X", "Y", "Z"]))
    }
}

// --- Transformations -----------------------------------------------------------

/// Joint law over `(U, V, X, Y, Z)` induced by a triple through a channel.
pub fn induced_joint(a: &AuxTriple, c: &BroadcastChannel) -> Result<JointDist, AuxError> {
    if a.nx() != c.nx() {
        return Err(AuxError::AlphabetMismatch {
            expected: c.nx(),
            actual: a.nx(),
        });
    }
    let (nu, nv, nx) = (a.nu(), a.nv(), a.nx());
    let (ny, nz) = (c.ny(), c.nz());
    let mut probs = vec![0.0; nu * nv * nx * ny * nz];
    for u in 0..nu {
        for v in 0..nv {
            let cell = a.mass(u, v);
            if cell == 0.0 {
                continue;
            }
            let row = a.row(u, v).probs();
            for x in 0..nx {
                let m = cell * row[x];
                if m == 0.0 {
                    continue;
                }
                for y in 0..ny {
                    for z in 0..nz {
                        probs[(((u * nv + v) * nx + x) * ny + y) * nz + z] = m * c.at(x, y, z);
                    }
                }
            }
        }
    }
    Ok(JointDist::new(vec![nu, nv, nx, ny, nz], probs)?.with_labels(&["U", "V", "X", "Y", "Z"]))
}

/// Rewrites a triple into one with deterministic input, preserving the pair
/// statistics the rate evaluators consume.
///
/// Each auxiliary symbol splits into `m = nx` shifted copies; the cell
/// `(u_i, v_j)` carries mass `p(u, v, x = (i - j) mod m) / m` and emits
/// `x = (i - j) mod m` with certainty.
pub fn split_construction(a: &AuxTriple) -> AuxTriple {
    let m = a.nx();
    let (nu, nv) = (a.nu(), a.nv());
    let (snu, snv) = (m * nu, m * nv);
    let mut puv = vec![0.0; snu * snv];
    let mut rows = Vec::with_capacity(snu * snv);
    for u in 0..nu {
        for i in 0..m {
            for v in 0..nv {
                for j in 0..m {
                    // (i - j) mod m, normalized to [0, m)
                    let x = (i + m - j) % m;
                    let mass = a.mass(u, v) * a.row(u, v).probs()[x] / m as f64;
                    puv[(u * m + i) * snv + v * m + j] = mass;
                    rows.push(Dist::point_mass(x, m));
                }
            }
        }
    }
    let joint = JointDist::new(vec![snu, snv], puv).expect("split preserves total mass");
    AuxTriple::new(joint, rows).expect("split rows are valid")
}

/// Couples two single-auxiliary pairs sharing an input marginal into a triple
/// with `U` and `V` conditionally independent given `X`.
#[allow(clippy::needless_range_loop)]
pub fn canonical_coupling(
    ay: &AuxPair,
    az: &AuxPair,
    c: &BroadcastChannel,
) -> Result<AuxTriple, AuxError> {
    if ay.nx() != az.nx() {
        return Err(AuxError::RowArityMismatch {
            first: ay.nx(),
            second: az.nx(),
        });
    }
    if ay.nx() != c.nx() {
        return Err(AuxError::AlphabetMismatch {
            expected: c.nx(),
            actual: ay.nx(),
        });
    }
    let nx = ay.nx();
    let px_y = ay.marginal_x();
    let px_z = az.marginal_x();
    let mut worst = (0usize, 0.0f64);
    for x in 0..nx {
        let d = (px_y.probs()[x] - px_z.probs()[x]).abs();
        if d > worst.1 {
            worst = (x, d);
        }
    }
    if worst.1 > MARGINAL_TOL {
        return Err(AuxError::InconsistentMarginals {
            x: worst.0,
            discrepancy: worst.1,
        });
    }
    let (nu, nv) = (ay.n(), az.n());
    // p(u,v,x) = p(x) p(u|x) p(v|x) with each Bayes inversion taken against
    // its own pair's marginal, so the conditionals stay normalized.
    let mut cells = vec![0.0; nu * nv];
    let mut rows = vec![vec![0.0; nx]; nu * nv];
    for x in 0..nx {
        let px = 0.5 * (px_y.probs()[x] + px_z.probs()[x]);
        if px_y.probs()[x] <= 0.0 || px_z.probs()[x] <= 0.0 {
            continue;
        }
        for u in 0..nu {
            let pu_x = ay.pu().probs()[u] * ay.row(u).probs()[x] / px_y.probs()[x];
            if pu_x == 0.0 {
                continue;
            }
            for v in 0..nv {
                let pv_x = az.pu().probs()[v] * az.row(v).probs()[x] / px_z.probs()[x];
                let m = px * pu_x * pv_x;
                cells[u * nv + v] += m;
                rows[u * nv + v][x] += m;
            }
        }
    }
    // Tiny marginal disagreements can leak mass; renormalize it away.
    let total: f64 = cells.iter().sum();
    let dists = rows
        .iter()
        .zip(&cells)
        .map(|(row, &m)| {
            if m > 0.0 {
                Dist::new(row.iter().map(|p| p / m).collect()).expect("normalized row")
            } else {
                Dist::point_mass(0, nx)
            }
        })
        .collect();
    let joint = JointDist::new(vec![nu, nv], cells.iter().map(|m| m / total).collect())?;
    AuxTriple::new(joint, dists)
}

/// Exchanges the receiver roles of a binary-input triple: the auxiliaries swap
/// and the input symbols flip.
pub fn skew_symmetry_swap(a: &AuxTriple) -> Result<AuxTriple, AuxError> {
    if a.nx() != 2 {
        return Err(AuxError::NonBinaryInput { nx: a.nx() });
    }
    let (nu, nv) = (a.nv(), a.nu());
    let mut puv = vec![0.0; nu * nv];
    let mut rows = Vec::with_capacity(nu * nv);
    for u in 0..nu {
        for v in 0..nv {
            puv[u * nv + v] = a.mass(v, u);
            let old = a.row(v, u).probs();
            rows.push(Dist::new(vec![old[1], old[0]]).expect("permuted row"));
        }
    }
    let joint = JointDist::new(vec![nu, nv], puv)?;
    AuxTriple::new(joint, rows)
}

/// Equal mixture of a triple and its receiver swap, with the mixing bit folded
/// into both auxiliary alphabets; the output input-marginal is exactly
/// symmetric.
///
/// When the two auxiliary alphabets differ the smaller is padded with
/// zero-mass symbols, which are inert in every information measure.
pub fn symmetrize_timeshare(a: &AuxTriple) -> Result<AuxTriple, AuxError> {
    let swapped = skew_symmetry_swap(a)?;
    let m = a.nu().max(a.nv());
    let (nu, nv) = (2 * m, 2 * m);
    let mut puv = vec![0.0; nu * nv];
    let mut rows = vec![Dist::point_mass(0, 2); nu * nv];
    for (q, comp) in [(0, a), (1, &swapped)] {
        for u in 0..comp.nu() {
            for v in 0..comp.nv() {
                let idx = (q * m + u) * nv + q * m + v;
                puv[idx] = 0.5 * comp.mass(u, v);
                rows[idx] = comp.row(u, v).clone();
            }
        }
    }
    let joint = JointDist::new(vec![nu, nv], puv)?;
    AuxTriple::new(joint, rows)
}

// --- Reference distributions ----------------------------------------------------

/// Mixing weight `1/2 - sqrt(105)/30` used by the reference constructions.
pub fn reference_alpha() -> f64 {
    0.5 - 105f64.sqrt() / 30.0
}

/// Classical benchmark triple for [`crate::channel::bssc`] at `p = 1/2`; its
/// two-auxiliary outer-bound constraints evaluate to singles near 0.2280 and
/// sums near 0.3711 bits/use.
pub fn bssc_reference_triple() -> AuxTriple {
    let a = reference_alpha();
    let heavy = (0.5 - a) / (1.0 - a);
    let puv = vec![
        vec![a / (1.0 - a), heavy], //
        vec![heavy, 0.0],
    ];
    let rows = vec![
        vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
    ];
    AuxTriple::from_nested(&puv, &rows).expect("reference triple is valid")
}

/// Classical benchmark single-auxiliary pair for `bssc(0.5)`: evaluating the
/// receiver-2 half at it gives `I(U;Y)` near 0.18616 and `I(X;Z|U)` near
/// 0.18614 bits/use.
pub fn bssc_reference_pair() -> AuxPair {
    AuxPair::from_nested(&[0.6372, 0.3628], &[vec![0.7535, 0.2465], vec![0.0, 1.0]])
        .expect("reference pair is valid")
}

/// Benchmark pair with an exactly symmetric input marginal, the natural mate
/// for [`canonical_coupling`] with its own mirror image on `bssc(0.5)`.
pub fn bssc_reference_symmetric_pair() -> AuxPair {
    let a = reference_alpha();
    AuxPair::from_nested(
        &[0.5 / (1.0 - a), (0.5 - a) / (1.0 - a)],
        &[vec![1.0 - a, a], vec![0.0, 1.0]],
    )
    .expect("reference pair is valid")
}

/// Classical benchmark time-sharing scheme for `bssc(0.5)`: a fair coin `W`
/// picks the favored receiver and the input biases toward that receiver's
/// clean symbol. Returns `(p(w), rows p(x|w))`.
pub fn bssc_reference_timeshare() -> (Dist, Vec<Dist>) {
    let a = reference_alpha();
    let pw = Dist::new(vec![0.5, 0.5]).expect("fair coin");
    let rows = vec![
        Dist::new(vec![a, 1.0 - a]).expect("row 0"),
        Dist::new(vec![1.0 - a, a]).expect("row 1"),
    ];
    (pw, rows)
}

// --- JSON I/O --------------------------------------------------------------------

#[derive(serde::Deserialize)]
struct AuxTripleFile {
    nu: usize,
    nv: usize,
    nx: usize,
    puv: Vec<Vec<f64>>,
    px_given_uv: Vec<Vec<Vec<f64>>>,
}

fn write_row(s: &mut String, row: &[f64]) {
    s.push('[');
    for (i, p) in row.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{p:.16e}");
    }
    s.push(']');
}

/// Serializes a triple as JSON with enough digits for exact f64 round-trips.
pub fn aux_to_json(a: &AuxTriple) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{{\n  \"nu\": {},\n  \"nv\": {},\n  \"nx\": {},\n  \"puv\": [",
        a.nu(),
        a.nv(),
        a.nx()
    );
    for u in 0..a.nu() {
        if u > 0 {
            s.push(',');
        }
        s.push_str("\n    ");
        let row: Vec<f64> = (0..a.nv()).map(|v| a.mass(u, v)).collect();
        write_row(&mut s, &row);
    }
    s.push_str("\n  ],\n  \"px_given_uv\": [");
    for u in 0..a.nu() {
        if u > 0 {
            s.push(',');
        }
        s.push_str("\n    [");
        for v in 0..a.nv() {
            if v > 0 {
                s.push_str(", ");
            }
            write_row(&mut s, a.row(u, v).probs());
        }
        s.push(']');
    }
    s.push_str("\n  ]\n}\n");
    s
}

pub fn save_aux_triple(a: &AuxTriple, path: &Path) -> Result<(), AuxError> {
    std::fs::write(path, aux_to_json(a)).map_err(|source| AuxError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_aux_triple(path: &Path) -> Result<AuxTriple, AuxError> {
    let text = std::fs::read_to_string(path).map_err(|source| AuxError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let parse = |detail: String| AuxError::Parse {
        path: path.display().to_string(),
        detail,
    };
    let file: AuxTripleFile = serde_json::from_str(&text)
        .map_err(|e| parse(format!("{e} (line {}, column {})", e.line(), e.column())))?;
    if file.puv.len() != file.nu {
        return Err(parse(format!(
            "puv has {} rows, nu = {}",
            file.puv.len(),
            file.nu
        )));
    }
    for (u, row) in file.puv.iter().enumerate() {
        if row.len() != file.nv {
            return Err(parse(format!(
                "puv row at u={u} has {} entries, nv = {}",
                row.len(),
                file.nv
            )));
        }
    }
    if file.px_given_uv.len() != file.nu {
        return Err(parse(format!(
            "px_given_uv has {} u-slices, nu = {}",
            file.px_given_uv.len(),
            file.nu
        )));
    }
    for (u, per_u) in file.px_given_uv.iter().enumerate() {
        if per_u.len() != file.nv {
            return Err(parse(format!(
                "px_given_uv slice at u={u} has {} rows, nv = {}",
                per_u.len(),
                file.nv
            )));
        }
        for (v, row) in per_u.iter().enumerate() {
            if row.len() != file.nx {
                return Err(parse(format!(
                    "px_given_uv row at u={u}, v={v} has {} entries, nx = {}",
                    row.len(),
                    file.nx
                )));
            }
        }
    }
    AuxTriple::from_nested(&file.puv, &file.px_given_uv)
}

#[derive(serde::Deserialize)]
struct AuxPairFile {
    n: usize,
    nx: usize,
    pu: Vec<f64>,
    px_given_u: Vec<Vec<f64>>,
}

/// Serializes a pair as JSON.
pub fn pair_to_json(a: &AuxPair) -> String {
    let mut s = String::new();
    let _ = write!(s, "{{\n  \"n\": {},\n  \"nx\": {},\n  \"pu\": ", a.n(), a.nx());
    write_row(&mut s, a.pu().probs());
    s.push_str(",\n  \"px_given_u\": [");
    for u in 0..a.n() {
        if u > 0 {
            s.push(',');
        }
        s.push_str("\n    ");
        write_row(&mut s, a.row(u).probs());
    }
    s.push_str("\n  ]\n}\n");
    s
}

pub fn save_aux_pair(a: &AuxPair, path: &Path) -> Result<(), AuxError> {
    std::fs::write(path, pair_to_json(a)).map_err(|source| AuxError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_aux_pair(path: &Path) -> Result<AuxPair, AuxError> {
    let text = std::fs::read_to_string(path).map_err(|source| AuxError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let parse = |detail: String| AuxError::Parse {
        path: path.display().to_string(),
        detail,
    };
    let file: AuxPairFile = serde_json::from_str(&text)
        .map_err(|e| parse(format!("{e} (line {}, column {})", e.line(), e.column())))?;
    if file.pu.len() != file.n {
        return Err(parse(format!(
            "pu has {} entries, n = {}",
            file.pu.len(),
            file.n
        )));
    }
    if file.px_given_u.len() != file.n {
        return Err(parse(format!(
            "px_given_u has {} rows, n = {}",
            file.px_given_u.len(),
            file.n
        )));
    }
    for (u, row) in file.px_given_u.iter().enumerate() {
        if row.len() != file.nx {
            return Err(parse(format!(
                "px_given_u row at u={u} has {} entries, nx = {}",
                row.len(),
                file.nx
            )));
        }
    }
    AuxPair::from_nested(&file.pu, &file.px_given_u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bssc;
    use crate::prob::conditional_mi_axes;
    use crate::testutil::{cond_ent, mi_axes, random_channel, random_triple};
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Axis order of induced_joint: U=0, V=1, X=2, Y=3, Z=4.
    const U: usize = 0;
    const V: usize = 1;
    const X: usize = 2;
    const Y: usize = 3;
    const Z: usize = 4;

    #[test]
    fn induced_joint_with_constant_aux_reduces_to_push_forward() {
        let c = bssc(0.5).unwrap();
        let px = Dist::new(vec![0.3, 0.7]).unwrap();
        let a = AuxTriple::constant_uv(px.clone());
        let j = induced_joint(&a, &c).unwrap();
        let xyz = j.marginalize(&[X, Y, Z]).unwrap();
        let direct = c.push_forward(&px).unwrap();
        for (a, b) in xyz.probs().iter().zip(direct.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn induced_joint_rejects_alphabet_mismatch() {
        let c = bssc(0.5).unwrap();
        let a = AuxTriple::constant_uv(Dist::uniform(3));
        assert!(matches!(
            induced_joint(&a, &c),
            Err(AuxError::AlphabetMismatch {
                expected: 2,
                actual: 3
            })
        ));
    }

    #[test]
    fn reference_triple_has_symmetric_input_marginal() {
        let a = bssc_reference_triple();
        assert!((a.px().probs()[1] - 0.5).abs() < 1e-12);
        assert!(!a.deterministic());
    }

    #[test]
    fn split_preserves_pair_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = random_triple(&mut rng, 3, 2, 3);
            let s = split_construction(&a);
            let m = a.nx();
            assert!(s.deterministic());
            assert_eq!(s.nu(), m * a.nu());
            assert_eq!(s.nv(), m * a.nv());
            let (up, sup) = (a.u_pair(), s.u_pair());
            let (vp, svp) = (a.v_pair(), s.v_pair());
            for u in 0..a.nu() {
                for i in 0..m {
                    let mass = sup.pu().probs()[u * m + i];
                    assert!((mass - up.pu().probs()[u] / m as f64).abs() < 1e-12);
                    if mass == 0.0 {
                        continue;
                    }
                    for x in 0..m {
                        let got = sup.row(u * m + i).probs()[x];
                        assert!((got - up.row(u).probs()[x]).abs() < 1e-12);
                    }
                }
            }
            for v in 0..a.nv() {
                for j in 0..m {
                    let mass = svp.pu().probs()[v * m + j];
                    assert!((mass - vp.pu().probs()[v] / m as f64).abs() < 1e-12);
                    if mass == 0.0 {
                        continue;
                    }
                    for x in 0..m {
                        let got = svp.row(v * m + j).probs()[x];
                        assert!((got - vp.row(v).probs()[x]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn split_preserves_conditional_output_entropies() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..60 {
            let nx = 2 + (rng.next_u32() % 2) as usize;
            let a = random_triple(&mut rng, 2, 3, nx);
            let c = random_channel(&mut rng, nx, 2, 3);
            let s = split_construction(&a);
            let ja = induced_joint(&a, &c).unwrap();
            let js = induced_joint(&s, &c).unwrap();
            for (x, p) in a.px().probs().iter().enumerate() {
                assert!((p - s.px().probs()[x]).abs() < 1e-12);
            }
            for (axes_out, axes_in) in [(Y, U), (Z, U), (Y, V), (Z, V)] {
                let before = cond_ent(&ja, &[axes_out], &[axes_in]);
                let after = cond_ent(&js, &[axes_out], &[axes_in]);
                assert!(
                    (before - after).abs() < 1e-10,
                    "H(out|aux) drifted: {before} vs {after}"
                );
            }
            // the split collapses residual input randomness
            for out in [Y, Z] {
                let after = cond_ent(&js, &[out], &[U, V]);
                let channel_only = cond_ent(&ja, &[out], &[X]);
                let before = cond_ent(&ja, &[out], &[U, V]);
                assert!((after - channel_only).abs() < 1e-10);
                assert!(before - after > -1e-10);
            }
        }
    }

    #[test]
    fn split_preserves_information_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..60 {
            let a = random_triple(&mut rng, 2, 2, 2);
            let c = random_channel(&mut rng, 2, 2, 2);
            let s = split_construction(&a);
            let ja = induced_joint(&a, &c).unwrap();
            let js = induced_joint(&s, &c).unwrap();
            assert!((mi_axes(&ja, &[U], &[Y]) - mi_axes(&js, &[U], &[Y])).abs() < 1e-10);
            assert!((mi_axes(&ja, &[V], &[Z]) - mi_axes(&js, &[V], &[Z])).abs() < 1e-10);
            let before = conditional_mi_axes(&ja, &[X], &[Y], &[V]).unwrap();
            let after = conditional_mi_axes(&js, &[X], &[Y], &[V]).unwrap();
            assert!((before - after).abs() < 1e-10);
            let before = conditional_mi_axes(&ja, &[X], &[Z], &[U]).unwrap();
            let after = conditional_mi_axes(&js, &[X], &[Z], &[U]).unwrap();
            assert!((before - after).abs() < 1e-10);
            // cross-auxiliary terms can only grow
            let grow_a = conditional_mi_axes(&js, &[U], &[Y], &[V]).unwrap()
                - conditional_mi_axes(&ja, &[U], &[Y], &[V]).unwrap();
            let grow_b = conditional_mi_axes(&js, &[V], &[Z], &[U]).unwrap()
                - conditional_mi_axes(&ja, &[V], &[Z], &[U]).unwrap();
            assert!(grow_a > -1e-10);
            assert!(grow_b > -1e-10);
        }
    }

    #[test]
    fn canonical_coupling_of_copies_sits_on_diagonal() {
        let c = bssc(0.5).unwrap();
        let px = Dist::new(vec![0.4, 0.6]).unwrap();
        let rows = vec![Dist::point_mass(0, 2), Dist::point_mass(1, 2)];
        let pair = AuxPair::new(px.clone(), rows).unwrap();
        let t = canonical_coupling(&pair, &pair, &c).unwrap();
        for u in 0..2 {
            for v in 0..2 {
                let m = t.mass(u, v);
                if u == v {
                    assert!((m - px.probs()[u]).abs() < 1e-12);
                    assert!((t.row(u, v).probs()[u] - 1.0).abs() < 1e-12);
                } else {
                    assert!(m.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn canonical_coupling_reproduces_pair_marginals() {
        let c = bssc(0.5).unwrap();
        let up = bssc_reference_symmetric_pair();
        assert!((up.marginal_x().probs()[1] - 0.5).abs() < 1e-15);
        let vp = up.flip_binary_x().unwrap();
        let t = canonical_coupling(&up, &vp, &c).unwrap();
        assert!((t.px().probs()[1] - 0.5).abs() < 1e-9);
        let (tu, tv) = (t.u_pair(), t.v_pair());
        for u in 0..2 {
            assert!((tu.pu().probs()[u] - up.pu().probs()[u]).abs() < 1e-9);
            assert!((tv.pu().probs()[u] - vp.pu().probs()[u]).abs() < 1e-9);
            for x in 0..2 {
                assert!((tu.row(u).probs()[x] - up.row(u).probs()[x]).abs() < 1e-9);
                assert!((tv.row(u).probs()[x] - vp.row(u).probs()[x]).abs() < 1e-9);
            }
        }
        // U and V are conditionally independent given X
        let j = induced_joint(&t, &c).unwrap();
        let r = conditional_mi_axes(&j, &[U], &[V], &[X]).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn canonical_coupling_rejects_inconsistent_marginals() {
        let c = bssc(0.5).unwrap();
        let a = AuxPair::from_nested(&[1.0], &[vec![0.5, 0.5]]).unwrap();
        let b = AuxPair::from_nested(&[1.0], &[vec![0.6, 0.4]]).unwrap();
        match canonical_coupling(&a, &b, &c) {
            Err(AuxError::InconsistentMarginals { x: _, discrepancy }) => {
                assert!((discrepancy - 0.1).abs() < 1e-12);
            }
            other => panic!("expected marginal mismatch, got {other:?}"),
        }
        // an asymmetric pair cannot couple with its own mirror
        let p = bssc_reference_pair();
        let mirrored = p.flip_binary_x().unwrap();
        assert!(matches!(
            canonical_coupling(&p, &mirrored, &c),
            Err(AuxError::InconsistentMarginals { .. })
        ));
    }

    #[test]
    fn swap_exchanges_receiver_roles_on_symmetric_channel() {
        let c = bssc(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let a = random_triple(&mut rng, 2, 3, 2);
            let b = skew_symmetry_swap(&a).unwrap();
            let ja = induced_joint(&a, &c).unwrap();
            let jb = induced_joint(&b, &c).unwrap();
            assert!((mi_axes(&jb, &[U], &[Y]) - mi_axes(&ja, &[V], &[Z])).abs() < 1e-10);
            assert!((mi_axes(&jb, &[V], &[Z]) - mi_axes(&ja, &[U], &[Y])).abs() < 1e-10);
            let swapped = conditional_mi_axes(&jb, &[X], &[Z], &[U]).unwrap();
            let original = conditional_mi_axes(&ja, &[X], &[Y], &[V]).unwrap();
            assert!((swapped - original).abs() < 1e-10);
            let swapped = conditional_mi_axes(&jb, &[X], &[Y], &[V]).unwrap();
            let original = conditional_mi_axes(&ja, &[X], &[Z], &[U]).unwrap();
            assert!((swapped - original).abs() < 1e-10);
        }
    }

    #[test]
    fn swap_twice_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let a = random_triple(&mut rng, 3, 2, 2);
            let b = skew_symmetry_swap(&skew_symmetry_swap(&a).unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn swap_rejects_nonbinary_input() {
        let a = AuxTriple::constant_uv(Dist::uniform(3));
        assert!(matches!(
            skew_symmetry_swap(&a),
            Err(AuxError::NonBinaryInput { nx: 3 })
        ));
    }

    #[test]
    fn symmetrize_forces_fair_input_and_concavity_gain() {
        let c = bssc(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..60 {
            let a = random_triple(&mut rng, 2, 3, 2);
            let s = symmetrize_timeshare(&a).unwrap();
            assert!((s.px().probs()[1] - 0.5).abs() < 1e-12);
            assert_eq!(s.nu(), 2 * a.nu().max(a.nv()));
            let b = skew_symmetry_swap(&a).unwrap();
            let (ja, jb, js) = (
                induced_joint(&a, &c).unwrap(),
                induced_joint(&b, &c).unwrap(),
                induced_joint(&s, &c).unwrap(),
            );
            // each single-auxiliary information term dominates the average
            // of its constituents; the conditional term matches it exactly
            let avg =
                0.5 * (mi_axes(&ja, &[U], &[Y]) + mi_axes(&jb, &[U], &[Y]));
            assert!(mi_axes(&js, &[U], &[Y]) - avg > -1e-12);
            let avg_cond = 0.5
                * (conditional_mi_axes(&ja, &[X], &[Z], &[U]).unwrap()
                    + conditional_mi_axes(&jb, &[X], &[Z], &[U]).unwrap());
            let cond = conditional_mi_axes(&js, &[X], &[Z], &[U]).unwrap();
            assert!((cond - avg_cond).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetrize_keeps_values_of_symmetric_triple() {
        let c = bssc(0.5).unwrap();
        let a = bssc_reference_triple();
        let s = symmetrize_timeshare(&a).unwrap();
        let (ja, js) = (
            induced_joint(&a, &c).unwrap(),
            induced_joint(&s, &c).unwrap(),
        );
        assert!((mi_axes(&ja, &[U], &[Y]) - mi_axes(&js, &[U], &[Y])).abs() < 1e-10);
        assert!((mi_axes(&ja, &[V], &[Z]) - mi_axes(&js, &[V], &[Z])).abs() < 1e-10);
        let before = conditional_mi_axes(&ja, &[X], &[Z], &[U]).unwrap();
        let after = conditional_mi_axes(&js, &[X], &[Z], &[U]).unwrap();
        assert!((before - after).abs() < 1e-10);
    }

    #[test]
    fn common_info_aux_keeps_u_v_independent() {
        let c = bssc(0.5).unwrap();
        let pu = Dist::new(vec![0.3, 0.7]).unwrap();
        let pv = Dist::new(vec![0.6, 0.4]).unwrap();
        let pw = vec![
            Dist::new(vec![0.2, 0.8]).unwrap(),
            Dist::new(vec![0.5, 0.5]).unwrap(),
            Dist::new(vec![0.9, 0.1]).unwrap(),
            Dist::new(vec![0.4, 0.6]).unwrap(),
        ];
        let px = (0..8)
            .map(|i| Dist::new(vec![0.1 * i as f64 / 7.0 + 0.05, 0.95 - 0.1 * i as f64 / 7.0]))
            .collect::<Result<Vec<_>, _>>()
            .unwrap();
        let g = CommonInfoAux::new(pu.clone(), pv.clone(), pw, px).unwrap();
        let j = g.induced_joint(&c).unwrap();
        let uv = j.marginalize(&[0, 1]).unwrap();
        for u in 0..2 {
            for v in 0..2 {
                let expect = pu.probs()[u] * pv.probs()[v];
                assert!((uv.at(&[u, v]) - expect).abs() < 1e-15);
            }
        }
        assert!((j.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triple_json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("triple.json");
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let a = random_triple(&mut rng, 3, 2, 2);
            save_aux_triple(&a, &path).unwrap();
            let b = load_aux_triple(&path).unwrap();
            assert_eq!(a, b);
        }
        let r = bssc_reference_triple();
        save_aux_triple(&r, &path).unwrap();
        assert_eq!(load_aux_triple(&path).unwrap(), r);
    }

    #[test]
    fn pair_json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pair.json");
        let p = bssc_reference_pair();
        save_aux_pair(&p, &path).unwrap();
        assert_eq!(load_aux_pair(&path).unwrap(), p);
    }

    #[test]
    fn triple_load_reports_shape_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"nu": 2, "nv": 2, "nx": 2,
                "puv": [[0.5, 0.5]],
                "px_given_uv": [[[1.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [1.0, 0.0]]]}"#,
        )
        .unwrap();
        match load_aux_triple(&path) {
            Err(AuxError::Parse { detail, .. }) => assert!(detail.contains("nu = 2")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn reference_pair_input_marginal() {
        let p = bssc_reference_pair();
        let expect = 0.6372 * 0.2465 + 0.3628;
        assert!((p.marginal_x().probs()[1] - expect).abs() < 1e-12);
    }
}
