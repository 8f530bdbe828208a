//! Brute-force reference implementations used to cross-check the closed-form
//! geometry and the analytic gradients.

use crate::geometry::{Disk, OcclusionVerdict, Vec2};

/// Points on the target boundary.
pub const BOUNDARY_SAMPLES: usize = 576;
/// Interior points on concentric rings.
pub const INTERIOR_RINGS: usize = 4;
pub const RING_SAMPLES: usize = 36;
/// Total sample count.
pub const SAMPLES: usize = BOUNDARY_SAMPLES + INTERIOR_RINGS * RING_SAMPLES;

/// Exact segment-versus-open-disk test with no tolerance.
fn segment_meets_interior(a: Vec2, b: Vec2, disk: &Disk) -> bool {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    let t = if len_sq == 0.0 {
        0.0
    } else {
        ((disk.center - a).dot(ab) / len_sq).clamp(0.0, 1.0)
    };
    (a + ab * t).distance(disk.center) < disk.radius
}

/// Point-light shadow test: the sight line from `viewer` to `p` passes
/// through the occluder's interior and `p` is not part of the occluder.
pub fn shadowed(viewer: Vec2, occluder: &Disk, p: Vec2) -> bool {
    p.distance(occluder.center) > occluder.radius && segment_meets_interior(viewer, p, occluder)
}

/// Sample points of a disk: its boundary plus interior rings.
pub fn sample_points(disk: &Disk) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(SAMPLES);
    let ring = |radius: f64, count: usize, phase: f64, out: &mut Vec<Vec2>| {
        for k in 0..count {
            let theta = std::f64::consts::TAU * (k as f64 + phase) / count as f64;
            out.push(disk.center + Vec2::new(theta.cos(), theta.sin()) * radius);
        }
    };
    ring(disk.radius, BOUNDARY_SAMPLES, 0.0, &mut out);
    for r in 1..=INTERIOR_RINGS {
        let radius = disk.radius * r as f64 / (INTERIOR_RINGS + 1) as f64;
        ring(radius, RING_SAMPLES, 0.5 * (r % 2) as f64, &mut out);
    }
    out
}

/// Verdict by counting shadowed sample points.
pub fn sampled_verdict(viewer: Vec2, occluder: Disk, target: Disk) -> OcclusionVerdict {
    let pts = sample_points(&target);
    let hidden = pts.iter().filter(|&&p| shadowed(viewer, &occluder, p)).count();
    if hidden == 0 {
        OcclusionVerdict::FullyVisible
    } else if hidden == pts.len() {
        OcclusionVerdict::FullyOccluded
    } else {
        OcclusionVerdict::PartiallyOccluded
    }
}

/// Distance in world units from the nearest configuration where the verdict
/// can change: the target touching a tangent ray of the occluder, either from
/// outside or from inside the shadow cone, or the two disks touching.
pub fn tangency_margin(viewer: Vec2, occluder: Disk, target: Disk) -> f64 {
    let to_occ = occluder.center - viewer;
    let to_tgt = target.center - viewer;
    let a_occ = (occluder.radius / to_occ.norm()).min(1.0).asin();
    let a_tgt = (target.radius / to_tgt.norm()).min(1.0).asin();
    let gap = to_occ.cross(to_tgt).atan2(to_occ.dot(to_tgt)).abs();
    let d = to_tgt.norm();
    let outer = (gap - (a_occ + a_tgt)).abs() * d;
    let inner = (gap + a_tgt - a_occ).abs() * d;
    let contact = occluder.center.distance(target.center) - occluder.radius - target.radius;
    outer.min(inner).min(contact.abs())
}

/// Central finite differences of `f` at `params` with step `h`.
pub fn central_difference<F: FnMut(&[f64]) -> f64>(params: &[f64], h: f64, mut f: F) -> Vec<f64> {
    let mut x = params.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Smallest gradient magnitude that central differences with step `h` can
/// resolve to relative precision `tol` for a function of size `value`.
/// Rounding of the two evaluations leaves about `eps * |value| / h` of noise.
pub fn difference_floor(value: f64, h: f64, tol: f64) -> f64 {
    f64::EPSILON * value.abs().max(1.0) / (h * tol)
}

/// Largest `|a - b| / max(|a|, |b|)` over paired entries. Pairs where both
/// magnitudes are below `floor` are compared against `floor` instead.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max)
}
