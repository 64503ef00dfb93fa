//! Constraint-set evaluators for each bound at a fixed auxiliary law, plus the
//! polygonal region artifact produced by tracing.
//!
//! Every 2D bound is expressed in one shape, [`RateConstraintSet2`]: caps on
//! `R1`, `R2`, and two sum caps. Bounds with a single structural sum
//! constraint carry the singles-sum in the unused slot, which can never bind;
//! [`Provenance`] records which slots are structural.

use std::fmt::Write as _;

use crate::auxdist::{induced_joint, AuxError, AuxPair, AuxTriple, CommonInfoAux};
use crate::channel::BroadcastChannel;
use crate::prob::{conditional_mi_axes, mutual_information, Dist, JointDist, ProbError};

/// Default tolerance for rate-point membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum RegionError {
    #[error("polygon has no vertices")]
    EmptyPolygon,
    #[error("time-sharing auxiliary must be binary, got {nw} symbols")]
    NonBinaryW { nw: usize },
    #[error("conditional rows have {actual} input symbols, channel expects {expected}")]
    AlphabetMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Aux(#[from] AuxError),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

// Axis order of auxdist::induced_joint.
const U: usize = 0;
const V: usize = 1;
const X: usize = 2;
const Y: usize = 3;
const Z: usize = 4;

// --- Constraint sets ------------------------------------------------------------

/// Where a constraint set came from and which sum slots actually constrain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    /// Evaluator name: `ne-lemma`, `ne-theorem31`, `km-oy`, `km-oz`, `cvdm-rts`.
    pub bound: String,
    /// Short description of the auxiliary distribution.
    pub auxiliary: String,
    pub sum_a_structural: bool,
    pub sum_b_structural: bool,
}

/// Caps on `R1`, `R2`, and `R1 + R2` (two sum slots), in bits per use.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConstraintSet2 {
    pub r1_max: f64,
    pub r2_max: f64,
    pub sum_max_a: f64,
    pub sum_max_b: f64,
    pub provenance: Provenance,
}

impl RateConstraintSet2 {
    /// Clamps sub-epsilon negatives (information quantities are nonnegative;
    /// float noise is not).
    pub fn new(
        r1_max: f64,
        r2_max: f64,
        sum_max_a: f64,
        sum_max_b: f64,
        provenance: Provenance,
    ) -> Self {
        RateConstraintSet2 {
            r1_max: r1_max.max(0.0),
            r2_max: r2_max.max(0.0),
            sum_max_a: sum_max_a.max(0.0),
            sum_max_b: sum_max_b.max(0.0),
            provenance,
        }
    }

    /// The binding sum cap.
    pub fn min_sum(&self) -> f64 {
        self.sum_max_a.min(self.sum_max_b)
    }
}

/// Caps for the three-rate bound with a common-message auxiliary.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConstraintSet3 {
    pub r0_max: f64,
    pub r01_max: f64,
    pub r02_max: f64,
    pub sum_max_a: f64,
    pub sum_max_b: f64,
}

/// A point in the rate plane, optionally carrying a common-message rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub r1: f64,
    pub r2: f64,
    pub r0: Option<f64>,
}

impl RatePoint {
    pub fn new(r1: f64, r2: f64) -> Self {
        RatePoint { r1, r2, r0: None }
    }
}

// --- Evaluators -------------------------------------------------------------------

fn triple_desc(a: &AuxTriple) -> String {
    format!(
        "triple nu={} nv={} nx={} deterministic={}",
        a.nu(),
        a.nv(),
        a.nx(),
        a.deterministic()
    )
}

/// Two-auxiliary outer-bound constraints in the sum form
/// `R1 + R2 <= I(U;Y) + I(X;Z|U)` (and its mirror).
///
/// As a region union over all triples this form is justified by rewriting any
/// triple through [`crate::auxdist::split_construction`]; at a fixed
/// randomized triple it can exceed the theorem-form sums.
pub fn ne_outer_constraints(
    a: &AuxTriple,
    c: &BroadcastChannel,
) -> Result<RateConstraintSet2, RegionError> {
    let j = induced_joint(a, c)?;
    let iuy = conditional_mi_axes(&j, &[U], &[Y], &[])?;
    let ivz = conditional_mi_axes(&j, &[V], &[Z], &[])?;
    let ixz_u = conditional_mi_axes(&j, &[X], &[Z], &[U])?;
    let ixy_v = conditional_mi_axes(&j, &[X], &[Y], &[V])?;
    Ok(RateConstraintSet2::new(
        iuy,
        ivz,
        iuy + ixz_u,
        ivz + ixy_v,
        Provenance {
            bound: "ne-lemma".into(),
            auxiliary: triple_desc(a),
            sum_a_structural: true,
            sum_b_structural: true,
        },
    ))
}

/// Two-auxiliary outer-bound constraints in the sum form
/// `R1 + R2 <= I(U;Y) + I(V;Z|U)` (and its mirror).
pub fn ne_outer_constraints_theorem31_form(
    a: &AuxTriple,
    c: &BroadcastChannel,
) -> Result<RateConstraintSet2, RegionError> {
    let j = induced_joint(a, c)?;
    let iuy = conditional_mi_axes(&j, &[U], &[Y], &[])?;
    let ivz = conditional_mi_axes(&j, &[V], &[Z], &[])?;
    let ivz_u = conditional_mi_axes(&j, &[V], &[Z], &[U])?;
    let iuy_v = conditional_mi_axes(&j, &[U], &[Y], &[V])?;
    Ok(RateConstraintSet2::new(
        iuy,
        ivz,
        iuy + ivz_u,
        ivz + iuy_v,
        Provenance {
            bound: "ne-theorem31".into(),
            auxiliary: triple_desc(a),
            sum_a_structural: true,
            sum_b_structural: true,
        },
    ))
}

/// Three-rate outer-bound constraints at a common-information auxiliary.
///
/// Independence of `U` and `V` holds by construction of [`CommonInfoAux`], so
/// no factorization check is needed here.
pub fn ne_outer_constraints_3d(
    g: &CommonInfoAux,
    c: &BroadcastChannel,
) -> Result<RateConstraintSet3, RegionError> {
    let j = g.induced_joint(c)?;
    // axes: U=0, V=1, W=2, X=3, Y=4, Z=5
    let iwy = conditional_mi_axes(&j, &[2], &[4], &[])?;
    let iwz = conditional_mi_axes(&j, &[2], &[5], &[])?;
    let iuwy = conditional_mi_axes(&j, &[0, 2], &[4], &[])?;
    let ivwz = conditional_mi_axes(&j, &[1, 2], &[5], &[])?;
    let ivz_uw = conditional_mi_axes(&j, &[1], &[5], &[0, 2])?;
    let iuy_vw = conditional_mi_axes(&j, &[0], &[4], &[1, 2])?;
    Ok(RateConstraintSet3 {
        r0_max: iwy.min(iwz).max(0.0),
        r01_max: iuwy.max(0.0),
        r02_max: ivwz.max(0.0),
        sum_max_a: (iuwy + ivz_uw).max(0.0),
        sum_max_b: (ivwz + iuy_vw).max(0.0),
    })
}

fn pair_joint(p: &AuxPair, c: &BroadcastChannel) -> Result<JointDist, RegionError> {
    if p.nx() != c.nx() {
        return Err(RegionError::AlphabetMismatch {
            expected: c.nx(),
            actual: p.nx(),
        });
    }
    let (n, nx, ny, nz) = (p.n(), c.nx(), c.ny(), c.nz());
    let mut probs = vec![0.0; n * nx * ny * nz];
    for a in 0..n {
        let pa = p.pu().probs()[a];
        if pa == 0.0 {
            continue;
        }
        for (x, px) in p.row(a).probs().iter().enumerate() {
            let m = pa * px;
            if m == 0.0 {
                continue;
            }
            for y in 0..ny {
                for z in 0..nz {
                    probs[((a * nx + x) * ny + y) * nz + z] = m * c.at(x, y, z);
                }
            }
        }
    }
    Ok(JointDist::new(vec![n, nx, ny, nz], probs)?.with_labels(&["A", "X", "Y", "Z"]))
}

fn pair_desc(p: &AuxPair) -> String {
    format!("pair n={} nx={}", p.n(), p.nx())
}

/// Receiver-1 half of the intersection bound, evaluated at a `(V, X)` pair:
/// `R1 <= I(X;Y)`, `R2 <= I(V;Z)`, `R1 + R2 <= I(V;Z) + I(X;Y|V)`.
///
/// The unused sum slot carries the singles sum, which never binds.
pub fn km_oy_constraints(
    av: &AuxPair,
    c: &BroadcastChannel,
) -> Result<RateConstraintSet2, RegionError> {
    let j = pair_joint(av, c)?;
    let ixy = conditional_mi_axes(&j, &[1], &[2], &[])?;
    let ivz = conditional_mi_axes(&j, &[0], &[3], &[])?;
    let ixy_v = conditional_mi_axes(&j, &[1], &[2], &[0])?;
    Ok(RateConstraintSet2::new(
        ixy,
        ivz,
        ixy + ivz,
        ivz + ixy_v,
        Provenance {
            bound: "km-oy".into(),
            auxiliary: pair_desc(av),
            sum_a_structural: false,
            sum_b_structural: true,
        },
    ))
}

/// Receiver-2 half of the intersection bound, evaluated at a `(U, X)` pair:
/// `R1 <= I(U;Y)`, `R2 <= I(X;Z)`, `R1 + R2 <= I(U;Y) + I(X;Z|U)`.
pub fn km_oz_constraints(
    au: &AuxPair,
    c: &BroadcastChannel,
) -> Result<RateConstraintSet2, RegionError> {
    let j = pair_joint(au, c)?;
    let iuy = conditional_mi_axes(&j, &[0], &[2], &[])?;
    let ixz = conditional_mi_axes(&j, &[1], &[3], &[])?;
    let ixz_u = conditional_mi_axes(&j, &[1], &[3], &[0])?;
    Ok(RateConstraintSet2::new(
        iuy,
        ixz,
        iuy + ixz_u,
        iuy + ixz,
        Provenance {
            bound: "km-oz".into(),
            auxiliary: pair_desc(au),
            sum_a_structural: true,
            sum_b_structural: false,
        },
    ))
}

/// Randomized time-sharing inner-bound constraints for a binary scheduler `W`:
/// all three caps share the prefix `min(I(W;Y), I(W;Z))`, and the single sum
/// constraint occupies both sum slots.
pub fn cvdm_rts_constraints(
    pw: &Dist,
    px_given_w: &[Dist],
    c: &BroadcastChannel,
) -> Result<RateConstraintSet2, RegionError> {
    if pw.len() != 2 {
        return Err(RegionError::NonBinaryW { nw: pw.len() });
    }
    if px_given_w.len() != 2 {
        return Err(RegionError::NonBinaryW {
            nw: px_given_w.len(),
        });
    }
    for row in px_given_w {
        if row.len() != c.nx() {
            return Err(RegionError::AlphabetMismatch {
                expected: c.nx(),
                actual: row.len(),
            });
        }
    }
    let pair = AuxPair::new(pw.clone(), px_given_w.to_vec())?;
    let j = pair_joint(&pair, c)?;
    let iwy = conditional_mi_axes(&j, &[0], &[2], &[])?;
    let iwz = conditional_mi_axes(&j, &[0], &[3], &[])?;
    let base = iwy.min(iwz);
    // per-slot mutual information conditioned on the scheduler value
    let slot_mi = |w: usize, marginal: &crate::channel::MarginalChannel| -> Result<f64, RegionError> {
        if pw.probs()[w] == 0.0 {
            return Ok(0.0);
        }
        let row = px_given_w[w].probs();
        let nout = marginal.nout();
        let mut probs = vec![0.0; row.len() * nout];
        for (x, px) in row.iter().enumerate() {
            for (o, po) in marginal.row(x).iter().enumerate() {
                probs[x * nout + o] = px * po;
            }
        }
        let joint = JointDist::new(vec![row.len(), nout], probs)?;
        Ok(mutual_information(&joint)?)
    };
    let iy0 = slot_mi(0, &c.marginal_y())?;
    let iz1 = slot_mi(1, &c.marginal_z())?;
    let r1 = base + pw.probs()[0] * iy0;
    let r2 = base + pw.probs()[1] * iz1;
    let sum = base + pw.probs()[0] * iy0 + pw.probs()[1] * iz1;
    Ok(RateConstraintSet2::new(
        r1,
        r2,
        sum,
        sum,
        Provenance {
            bound: "cvdm-rts".into(),
            auxiliary: format!("timeshare pw0={:.6}", pw.probs()[0]),
            sum_a_structural: true,
            sum_b_structural: true,
        },
    ))
}

// --- Membership --------------------------------------------------------------------

/// Membership at the default tolerance.
pub fn point_in_constraints(p: &RatePoint, s: &RateConstraintSet2) -> bool {
    point_in_constraints_with_tol(p, s, MEMBERSHIP_TOL)
}

pub fn point_in_constraints_with_tol(p: &RatePoint, s: &RateConstraintSet2, tol: f64) -> bool {
    p.r1 <= s.r1_max + tol && p.r2 <= s.r2_max + tol && p.r1 + p.r2 <= s.min_sum() + tol
}

// --- Polygon artifact -----------------------------------------------------------------

/// Upper-right boundary of a traced region: vertices sorted by decreasing
/// `r1` with strictly increasing `r2`, bounding a down-closed set.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonRegion {
    vertices: Vec<RatePoint>,
    angles: Vec<f64>,
}

impl PolygonRegion {
    /// Builds the boundary from candidate vertices: sorts by decreasing `r1`,
    /// merges near-duplicate abscissae, and drops dominated points.
    pub fn from_pareto_vertices(
        mut pts: Vec<RatePoint>,
        angles: Vec<f64>,
    ) -> Result<Self, RegionError> {
        if pts.is_empty() {
            return Err(RegionError::EmptyPolygon);
        }
        pts.sort_by(|a, b| b.r1.total_cmp(&a.r1).then(a.r2.total_cmp(&b.r2)));
        let mut vertices: Vec<RatePoint> = Vec::new();
        for p in pts {
            match vertices.last_mut() {
                Some(last) if (p.r1 - last.r1).abs() <= 1e-12 => {
                    if p.r2 > last.r2 {
                        last.r2 = p.r2;
                    }
                }
                Some(last) if p.r2 <= last.r2 + 1e-12 => {}
                _ => vertices.push(p),
            }
        }
        Ok(PolygonRegion { vertices, angles })
    }

    pub fn vertices(&self) -> &[RatePoint] {
        &self.vertices
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// CSV artifact: `r1,r2` header, one vertex per line, 12 significant
    /// digits, decreasing `r1`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r1,r2\n");
        for v in &self.vertices {
            let _ = writeln!(s, "{:.11e},{:.11e}", v.r1, v.r2);
        }
        s
    }

    /// Parses the CSV artifact produced by [`PolygonRegion::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, RegionError> {
        let mut pts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                continue;
            }
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let (a, b) = (it.next(), it.next());
            if let (Some(a), Some(b)) = (a, b) {
                if let (Ok(r1), Ok(r2)) = (a.trim().parse(), b.trim().parse()) {
                    pts.push(RatePoint::new(r1, r2));
                }
            }
        }
        PolygonRegion::from_pareto_vertices(pts, Vec::new())
    }
}

/// How far a point sticks out of the down-closure of a traced boundary:
/// `0` inside, otherwise the largest single-coordinate excess.
pub fn polygon_excess(outer: &PolygonRegion, p: &RatePoint) -> Result<f64, RegionError> {
    let vs = outer.vertices();
    if vs.is_empty() {
        return Err(RegionError::EmptyPolygon);
    }
    let mut excess = (-p.r1).max(-p.r2).max(p.r1 - vs[0].r1);
    let last = vs[vs.len() - 1];
    let cap = if p.r1 <= last.r1 {
        last.r2
    } else {
        let x = p.r1.min(vs[0].r1);
        let mut cap = vs[0].r2;
        for w in vs.windows(2) {
            let (hi, lo) = (w[0], w[1]);
            if x >= lo.r1 {
                let t = (x - lo.r1) / (hi.r1 - lo.r1);
                cap = lo.r2 + t * (hi.r2 - lo.r2);
                break;
            }
        }
        cap
    };
    excess = excess.max(p.r2 - cap);
    Ok(excess.max(0.0))
}

/// Membership in the down-closure of a traced boundary.
pub fn polygon_contains(
    outer: &PolygonRegion,
    p: &RatePoint,
    tol: f64,
) -> Result<bool, RegionError> {
    Ok(polygon_excess(outer, p)? <= tol)
}
