//! Stadium billiard: boundary chart and collision map.
//!
//! The table is the convex hull of two unit discs centered at (-l/2, 0) and
//! (l/2, 0). Configurations are (r, phi): arclength along the boundary
//! (counterclockwise, r = 0 at the point (l/2, -1)) and the angle between the
//! reflected direction and the inward normal. Positive phi tilts the outgoing
//! ray toward increasing arclength.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Departure-point guard: intersection parameters below this are treated as
/// floating-point residue of the current reflection point.
const T_MIN: f64 = 1e-10;
/// Arc/segment junction tolerance; hits this close to a junction go to the arc.
const JUNCTION_TOL: f64 = 1e-12;

/// Which stretch of the boundary a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Bottom,
    Top,
    RightArc,
    LeftArc,
}

/// A boundary point in plane coordinates with its inward unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub position: (f64, f64),
    pub inward_normal: (f64, f64),
    pub segment_kind: SegmentKind,
}

/// Total boundary length, 2 pi + 2 l.
pub fn perimeter(ell: f64) -> f64 {
    2.0 * (PI + ell)
}

fn check_ell(ell: f64) -> Result<()> {
    if !(ell > 0.0) {
        return Err(Error::Parameter(format!("stadium needs ell > 0, got {ell}")));
    }
    Ok(())
}

/// Arclength chart of the boundary.
///
/// r in [0, pi): right arc from (l/2, -1) up to (l/2, 1); [pi, pi+l): top
/// segment right to left; [pi+l, 2pi+l): left arc; [2pi+l, 2pi+2l): bottom
/// segment left to right. Any real r is reduced modulo the perimeter.
pub fn stadium_boundary_point(r: f64, ell: f64) -> Result<BoundaryPoint> {
    check_ell(ell)?;
    let half = ell / 2.0;
    let r = r.rem_euclid(perimeter(ell));
    let (position, inward_normal, segment_kind) = if r < PI {
        let ang = r - PI / 2.0;
        let (sin, cos) = ang.sin_cos();
        ((half + cos, sin), (-cos, -sin), SegmentKind::RightArc)
    } else if r < PI + ell {
        ((half - (r - PI), 1.0), (0.0, -1.0), SegmentKind::Top)
    } else if r < 2.0 * PI + ell {
        let ang = r - PI - ell + PI / 2.0;
        let (sin, cos) = ang.sin_cos();
        ((-half + cos, sin), (-cos, -sin), SegmentKind::LeftArc)
    } else {
        ((-half + (r - 2.0 * PI - ell), -1.0), (0.0, 1.0), SegmentKind::Bottom)
    };
    Ok(BoundaryPoint {
        position,
        inward_normal,
        segment_kind,
    })
}

fn dot(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

/// Clockwise rotation by 90 degrees: the unit tangent of increasing arclength
/// is rot_cw90 of the inward normal everywhere on a counterclockwise boundary.
fn rot_cw90(v: (f64, f64)) -> (f64, f64) {
    (v.1, -v.0)
}

struct Candidate {
    t: f64,
    hit: (f64, f64),
    kind: SegmentKind,
}

fn segment_candidate(
    p: (f64, f64),
    v: (f64, f64),
    y: f64,
    half: f64,
    kind: SegmentKind,
) -> Option<Candidate> {
    if v.1 == 0.0 {
        return None;
    }
    let t = (y - p.1) / v.1;
    if t <= T_MIN {
        return None;
    }
    let x = p.0 + t * v.0;
    if x.abs() > half + JUNCTION_TOL {
        return None;
    }
    Some(Candidate {
        t,
        hit: (x, y),
        kind,
    })
}

fn arc_candidates(
    p: (f64, f64),
    v: (f64, f64),
    cx: f64,
    right_half: bool,
    kind: SegmentKind,
    out: &mut Vec<Candidate>,
) {
    // |p + t v - c|^2 = 1 with |v| = 1: t^2 + 2 b t + c0 = 0.
    let d = (p.0 - cx, p.1);
    let b = dot(d, v);
    let c0 = dot(d, d) - 1.0;
    let disc = b * b - c0;
    if disc < 0.0 {
        return;
    }
    let sq = disc.sqrt();
    for t in [-b - sq, -b + sq] {
        if t <= T_MIN {
            continue;
        }
        let hit = (p.0 + t * v.0, p.1 + t * v.1);
        let on_arc = if right_half {
            hit.0 >= cx - JUNCTION_TOL
        } else {
            hit.0 <= cx + JUNCTION_TOL
        };
        if on_arc {
            out.push(Candidate { t, hit, kind });
        }
    }
}

fn arclength_of_hit(hit: (f64, f64), kind: SegmentKind, ell: f64) -> f64 {
    let half = ell / 2.0;
    let r = match kind {
        SegmentKind::RightArc => {
            let a = hit.1.atan2(hit.0 - half).clamp(-PI / 2.0, PI / 2.0);
            a + PI / 2.0
        }
        SegmentKind::Top => PI + (half - hit.0.clamp(-half, half)),
        SegmentKind::LeftArc => {
            let mut a = hit.1.atan2(hit.0 + half);
            if a < 0.0 {
                a += 2.0 * PI;
            }
            PI + ell + (a.clamp(PI / 2.0, 3.0 * PI / 2.0) - PI / 2.0)
        }
        SegmentKind::Bottom => 2.0 * PI + ell + (hit.0.clamp(-half, half) + half),
    };
    r.rem_euclid(perimeter(ell))
}

fn inward_normal_at(hit: (f64, f64), kind: SegmentKind, ell: f64) -> (f64, f64) {
    let half = ell / 2.0;
    match kind {
        SegmentKind::Top => (0.0, -1.0),
        SegmentKind::Bottom => (0.0, 1.0),
        SegmentKind::RightArc => {
            let d = (half - hit.0, -hit.1);
            let n = dot(d, d).sqrt();
            (d.0 / n, d.1 / n)
        }
        SegmentKind::LeftArc => {
            let d = (-half - hit.0, -hit.1);
            let n = dot(d, d).sqrt();
            (d.0 / n, d.1 / n)
        }
    }
}

/// One reflection of the billiard map.
///
/// Shoots the ray leaving (r, phi), finds the next boundary hit and returns
/// the arriving configuration (r', phi').
pub fn stadium_map(r: f64, phi: f64, ell: f64) -> Result<(f64, f64)> {
    check_ell(ell)?;
    if !(phi.abs() < PI / 2.0) {
        return Err(Error::Domain(format!("|phi|={} must be < pi/2", phi.abs())));
    }
    let start = stadium_boundary_point(r, ell)?;
    let n = start.inward_normal;
    let (sin_phi, cos_phi) = phi.sin_cos();
    let tangent = rot_cw90(n);
    let v = (
        cos_phi * n.0 + sin_phi * tangent.0,
        cos_phi * n.1 + sin_phi * tangent.1,
    );

    let half = ell / 2.0;
    let mut candidates = Vec::with_capacity(6);
    if let Some(c) = segment_candidate(start.position, v, -1.0, half, SegmentKind::Bottom) {
        candidates.push(c);
    }
    if let Some(c) = segment_candidate(start.position, v, 1.0, half, SegmentKind::Top) {
        candidates.push(c);
    }
    arc_candidates(start.position, v, half, true, SegmentKind::RightArc, &mut candidates);
    arc_candidates(start.position, v, -half, false, SegmentKind::LeftArc, &mut candidates);

    let mut best: Option<Candidate> = None;
    for c in candidates {
        best = match best {
            None => Some(c),
            Some(b) => {
                let is_arc =
                    matches!(c.kind, SegmentKind::RightArc | SegmentKind::LeftArc);
                let b_is_arc =
                    matches!(b.kind, SegmentKind::RightArc | SegmentKind::LeftArc);
                // Junction hits land on both an arc and a segment; take the arc.
                if c.t < b.t - JUNCTION_TOL || ((c.t - b.t).abs() <= JUNCTION_TOL && is_arc && !b_is_arc) {
                    Some(c)
                } else {
                    Some(b)
                }
            }
        };
    }
    let hit = best.ok_or_else(|| {
        Error::Geometry(format!("no boundary intersection from r={r}, phi={phi}"))
    })?;

    let nq = inward_normal_at(hit.hit, hit.kind, ell);
    let vn = dot(v, nq);
    let reflected = (v.0 - 2.0 * vn * nq.0, v.1 - 2.0 * vn * nq.1);
    let phi_out = dot(reflected, rot_cw90(nq)).atan2(dot(reflected, nq));
    Ok((arclength_of_hit(hit.hit, hit.kind, ell), phi_out))
}
