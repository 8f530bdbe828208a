//! Exact disk geometry for fat opaque robots.
//!
//! Every robot is an opaque disk. A disk is occluded from a viewer when part
//! of it lies in the shadow that another disk casts from a point light at the
//! viewer. Shadows are formalized as: `p` is shadowed by `occluder` iff the
//! segment from the viewer to `p` passes through the occluder's open interior
//! and `p` itself is outside the occluder.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance, in world units, used for tangency and touching decisions.
pub const TANGENCY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("viewer lies inside the occluding disk")]
    ViewerInsideOccluder,
    #[error("viewer lies inside one of the disks")]
    ViewerInsideDisk,
    #[error("occluder and target disks overlap")]
    OverlappingDisks,
    #[error("robot index {index} out of range for swarm of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotates counter-clockwise by `angle` radians.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Vec2,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Vec2, radius: f64) -> Self {
        debug_assert!(radius > 0.0, "disk radius must be positive");
        Self { center, radius }
    }

    /// True when `p` is in the closed disk.
    pub fn contains(&self, p: Vec2) -> bool {
        p.distance(self.center) <= self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OcclusionVerdict {
    FullyVisible,
    PartiallyOccluded,
    FullyOccluded,
}

/// Shadow cast by an opaque disk from a point light.
///
/// The region is bounded by the two tangent rays from the apex and by the far
/// side of the occluder along each sight line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowRegion {
    pub apex: Vec2,
    pub occluder: Disk,
}

impl ShadowRegion {
    /// Half-angle of the shadow cone at the apex.
    pub fn half_angle(&self) -> f64 {
        angular_radius(self.apex, &self.occluder)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        if self.occluder.contains(p) {
            return false;
        }
        segment_hits_interior(self.apex, p, &self.occluder)
    }
}

/// True when the closed segment `a`-`b` meets the open interior of `disk`
/// by more than [`TANGENCY_TOL`].
pub fn segment_hits_interior(a: Vec2, b: Vec2, disk: &Disk) -> bool {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    let t = if len_sq == 0.0 {
        0.0
    } else {
        ((disk.center - a).dot(ab) / len_sq).clamp(0.0, 1.0)
    };
    let closest = a + ab * t;
    closest.distance(disk.center) < disk.radius - TANGENCY_TOL
}

pub fn shadow_of(viewer: Vec2, occluder: Disk) -> Result<ShadowRegion, GeometryError> {
    if !viewer.is_finite() || !occluder.center.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if viewer.distance(occluder.center) <= occluder.radius + TANGENCY_TOL {
        return Err(GeometryError::ViewerInsideOccluder);
    }
    Ok(ShadowRegion {
        apex: viewer,
        occluder,
    })
}

fn angular_radius(viewer: Vec2, disk: &Disk) -> f64 {
    let d = viewer.distance(disk.center);
    (disk.radius / d).min(1.0).asin()
}

/// Entry and exit distances of the ray `origin + s*dir` through `disk`.
fn ray_chord(origin: Vec2, dir: Vec2, disk: &Disk) -> (f64, f64) {
    let rel = disk.center - origin;
    let along = rel.dot(dir);
    let perp_sq = (rel.norm_sq() - along * along).max(0.0);
    let half = (disk.radius * disk.radius - perp_sq).max(0.0).sqrt();
    (along - half, along + half)
}

/// Classifies how much of `target` is shadowed by `occluder` as seen from
/// `viewer`.
pub fn occlusion_verdict(
    viewer: Vec2,
    occluder: Disk,
    target: Disk,
) -> Result<OcclusionVerdict, GeometryError> {
    if !(viewer.is_finite() && occluder.center.is_finite() && target.center.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    if viewer.distance(occluder.center) <= occluder.radius + TANGENCY_TOL
        || viewer.distance(target.center) <= target.radius + TANGENCY_TOL
    {
        return Err(GeometryError::ViewerInsideDisk);
    }
    if occluder.center.distance(target.center) < occluder.radius + target.radius - TANGENCY_TOL {
        return Err(GeometryError::OverlappingDisks);
    }
    Ok(verdict_unchecked(viewer, &occluder, &target))
}

/// Verdict without precondition checks. Degenerate inputs that can arise in
/// colliding states get a conservative answer: a viewer inside the occluder
/// sees nothing, and a target inside the viewer's own body is visible.
pub(crate) fn verdict_unchecked(viewer: Vec2, occluder: &Disk, target: &Disk) -> OcclusionVerdict {
    let to_occ = occluder.center - viewer;
    let to_tgt = target.center - viewer;
    let d_occ = to_occ.norm();
    let d_tgt = to_tgt.norm();
    if d_occ <= occluder.radius {
        return OcclusionVerdict::FullyOccluded;
    }
    if d_tgt <= target.radius {
        return OcclusionVerdict::FullyVisible;
    }

    let a_occ = (occluder.radius / d_occ).asin();
    let a_tgt = (target.radius / d_tgt).asin();
    // Signed angle from the occluder's bearing to the target's bearing.
    let sep = to_occ.cross(to_tgt).atan2(to_occ.dot(to_tgt));
    let gap = sep.abs();
    // Angular tolerance equivalent to TANGENCY_TOL at the target's range.
    let tol = TANGENCY_TOL / d_tgt;

    if gap >= a_occ + a_tgt - tol {
        return OcclusionVerdict::FullyVisible;
    }

    // Sight lines through both disks see them in a fixed order because the
    // disks do not overlap. Probe the middle of the shared angular window.
    let lo = (-a_occ).max(sep - a_tgt);
    let hi = a_occ.min(sep + a_tgt);
    let dir = (to_occ * (1.0 / d_occ)).rotate(0.5 * (lo + hi));
    let (occ_in, occ_out) = ray_chord(viewer, dir, occluder);
    let (tgt_in, tgt_out) = ray_chord(viewer, dir, target);
    if tgt_in + tgt_out <= occ_in + occ_out {
        return OcclusionVerdict::FullyVisible;
    }

    if gap + a_tgt < a_occ - tol {
        OcclusionVerdict::FullyOccluded
    } else {
        OcclusionVerdict::PartiallyOccluded
    }
}

fn check_index(i: usize, len: usize) -> Result<(), GeometryError> {
    if i >= len {
        Err(GeometryError::IndexOutOfRange { index: i, len })
    } else {
        Ok(())
    }
}

/// True when no robot other than `viewer` and `target` shadows any part of
/// `target` as seen from `viewer`'s center.
pub(crate) fn sees_fully(positions: &[Vec2], r_bot: f64, viewer: usize, target: usize) -> bool {
    let eye = positions[viewer];
    let tgt = Disk::new(positions[target], r_bot);
    positions.iter().enumerate().all(|(k, &c)| {
        k == viewer
            || k == target
            || verdict_unchecked(eye, &Disk::new(c, r_bot), &tgt) == OcclusionVerdict::FullyVisible
    })
}

/// Mutual visibility between robots `i` and `j`. Every other robot in the
/// world acts as a potential occluder, whether or not it is in sensing range.
pub fn mutually_visible(
    positions: &[Vec2],
    r_bot: f64,
    i: usize,
    j: usize,
) -> Result<bool, GeometryError> {
    check_index(i, positions.len())?;
    check_index(j, positions.len())?;
    if i == j {
        return Ok(true);
    }
    Ok(sees_fully(positions, r_bot, i, j) && sees_fully(positions, r_bot, j, i))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NeighborCounts {
    pub g_all: usize,
    pub g_vis: usize,
    pub g_occ: usize,
}

/// Per-robot sensor census. Invariant: `g_all == g_vis + g_occ`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VisibilityCensus {
    pub counts: Vec<NeighborCounts>,
}

impl VisibilityCensus {
    pub fn total_all(&self) -> usize {
        self.counts.iter().map(|c| c.g_all).sum()
    }

    pub fn total_visible(&self) -> usize {
        self.counts.iter().map(|c| c.g_vis).sum()
    }
}

/// Neighbors are robots with center distance `<= r_scan` (`None` means
/// unbounded range).
pub fn visibility_census(positions: &[Vec2], r_bot: f64, r_scan: Option<f64>) -> VisibilityCensus {
    let n = positions.len();
    let mut counts = vec![NeighborCounts::default(); n];
    for (viewer, count) in counts.iter_mut().enumerate() {
        for target in 0..n {
            if target == viewer {
                continue;
            }
            let in_range = r_scan.is_none_or(|r| positions[viewer].distance(positions[target]) <= r);
            if !in_range {
                continue;
            }
            count.g_all += 1;
            if sees_fully(positions, r_bot, viewer, target) {
                count.g_vis += 1;
            } else {
                count.g_occ += 1;
            }
        }
    }
    VisibilityCensus { counts }
}

/// Unordered pairs whose bodies overlap. Touching disks do not collide.
pub fn collision_pairs(positions: &[Vec2], r_bot: f64) -> Vec<(usize, usize)> {
    let limit = 2.0 * r_bot - TANGENCY_TOL;
    let mut pairs = Vec::new();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            if positions[i].distance(positions[j]) < limit {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

pub fn has_collision(positions: &[Vec2], r_bot: f64) -> bool {
    let limit = 2.0 * r_bot - TANGENCY_TOL;
    (0..positions.len()).any(|i| {
        ((i + 1)..positions.len()).any(|j| positions[i].distance(positions[j]) < limit)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(x: f64, y: f64, r: f64) -> Disk {
        Disk::new(Vec2::new(x, y), r)
    }

    #[test]
    fn shadow_examples() {
        let s = shadow_of(Vec2::ZERO, disk(5.0, 0.0, 1.0)).unwrap();
        assert!(s.contains(Vec2::new(10.0, 0.0)));
        assert!(!s.contains(Vec2::new(0.0, 5.0)));
        assert!(!s.contains(Vec2::new(4.0, 0.0)));
        // inside the occluder itself
        assert!(!s.contains(Vec2::new(5.0, 0.0)));
    }

    #[test]
    fn shadow_rejects_viewer_inside() {
        assert_eq!(
            shadow_of(Vec2::new(5.5, 0.0), disk(5.0, 0.0, 1.0)),
            Err(GeometryError::ViewerInsideOccluder)
        );
    }

    #[test]
    fn verdict_examples() {
        let occ = disk(5.0, 0.0, 1.0);
        let v = |t| occlusion_verdict(Vec2::ZERO, occ, t).unwrap();
        assert_eq!(v(disk(10.0, 0.0, 1.0)), OcclusionVerdict::FullyOccluded);
        assert_eq!(v(disk(10.0, 6.0, 1.0)), OcclusionVerdict::FullyVisible);
        assert_eq!(v(disk(10.0, 2.0, 1.0)), OcclusionVerdict::PartiallyOccluded);
        // target in front of the occluder, same bearing
        assert_eq!(
            occlusion_verdict(Vec2::ZERO, disk(10.0, 0.0, 1.0), disk(5.0, 0.0, 1.0)).unwrap(),
            OcclusionVerdict::FullyVisible
        );
    }

    #[test]
    fn verdict_errors() {
        let occ = disk(5.0, 0.0, 1.0);
        assert_eq!(
            occlusion_verdict(Vec2::new(5.2, 0.0), occ, disk(10.0, 0.0, 1.0)),
            Err(GeometryError::ViewerInsideDisk)
        );
        assert_eq!(
            occlusion_verdict(Vec2::ZERO, occ, disk(6.0, 0.0, 1.0)),
            Err(GeometryError::OverlappingDisks)
        );
        assert_eq!(
            occlusion_verdict(Vec2::new(f64::NAN, 0.0), occ, disk(10.0, 0.0, 1.0)),
            Err(GeometryError::NonFinite)
        );
    }

    #[test]
    fn grazing_tangent_counts_as_visible() {
        // Target touches the tangent ray of the occluder's shadow exactly.
        let occ = disk(5.0, 0.0, 1.0);
        let a_occ = (1.0f64 / 5.0).asin();
        let d = 12.0;
        let a_tgt = (1.0f64 / d).asin();
        let t = Vec2::new(d, 0.0).rotate(a_occ + a_tgt);
        assert_eq!(
            occlusion_verdict(Vec2::ZERO, occ, Disk::new(t, 1.0)).unwrap(),
            OcclusionVerdict::FullyVisible
        );
    }

    #[test]
    fn mutual_visibility_examples() {
        let pair = [Vec2::new(0.0, 0.0), Vec2::new(3.0, 0.0)];
        assert!(mutually_visible(&pair, 1.0, 0, 1).unwrap());

        let line = [Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0), Vec2::new(10.0, 0.0)];
        assert!(!mutually_visible(&line, 1.0, 0, 2).unwrap());
        assert!(mutually_visible(&line, 1.0, 0, 1).unwrap());

        let h = 10.0 * 3f64.sqrt() / 2.0;
        let tri = [Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(5.0, h)];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(mutually_visible(&tri, 1.0, i, j).unwrap());
                }
            }
        }
        assert_eq!(
            mutually_visible(&tri, 1.0, 0, 3),
            Err(GeometryError::IndexOutOfRange { index: 3, len: 3 })
        );
    }

    #[test]
    fn census_examples() {
        let one = visibility_census(&[Vec2::ZERO], 1.0, Some(6.0));
        assert_eq!(one.counts, vec![NeighborCounts::default()]);

        let two = visibility_census(&[Vec2::ZERO, Vec2::new(3.0, 0.0)], 1.0, Some(6.0));
        for c in &two.counts {
            assert_eq!((c.g_all, c.g_vis, c.g_occ), (1, 1, 0));
        }

        let line = [Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0), Vec2::new(10.0, 0.0)];
        let c = visibility_census(&line, 1.0, None);
        let tuples: Vec<_> = c.counts.iter().map(|c| (c.g_all, c.g_vis, c.g_occ)).collect();
        assert_eq!(tuples, vec![(2, 1, 1), (2, 2, 0), (2, 1, 1)]);
    }

    #[test]
    fn scan_boundary_is_inclusive() {
        let c = visibility_census(&[Vec2::ZERO, Vec2::new(6.0, 0.0)], 1.0, Some(6.0));
        assert_eq!(c.counts[0].g_all, 1);
    }

    #[test]
    fn occluders_outside_scan_range_still_block() {
        // Robot 1 is out of robot 0's scan range but still shadows robot 2.
        let pos = [Vec2::new(0.0, 0.0), Vec2::new(2.5, 0.0), Vec2::new(5.0, 0.0)];
        let c = visibility_census(&pos, 1.0, Some(5.0));
        assert_eq!(c.counts[0].g_all, 2);
        assert_eq!(c.counts[0].g_vis, 1);
    }

    #[test]
    fn collision_examples() {
        assert!(collision_pairs(&[Vec2::ZERO, Vec2::new(2.0, 0.0)], 1.0).is_empty());
        assert_eq!(collision_pairs(&[Vec2::ZERO, Vec2::new(1.0, 0.0)], 1.0), vec![(0, 1)]);
        let spread: Vec<_> = (0..5).map(|i| Vec2::new(3.0 * i as f64, 0.0)).collect();
        assert!(collision_pairs(&spread, 1.0).is_empty());
        assert!(!has_collision(&spread, 1.0));
    }
}
