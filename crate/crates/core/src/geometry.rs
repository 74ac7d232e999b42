//! Forward channel-parameter model and the inverse segment constructions.
//!
//! Conventions: lengths in meters, angles in radians, TOA normalized by the
//! speed of light (so it is a length), azimuths in `[0, 2π)` and elevations in
//! `[-π/2, π/2]`. The clock bias is a length added to every TOA.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Hypothesis;

/// Wraps an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Smallest absolute angular difference, in `[0, π]`.
#[inline]
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// Reflects an elevation back into `[-π/2, π/2]`.
///
/// Going over a pole flips the azimuth by π; callers that track the azimuth
/// should use [`reflect_direction`] instead.
#[inline]
pub fn reflect_elevation(el: f64) -> f64 {
    reflect_direction(0.0, el).1
}

/// Reflects an (azimuth, elevation) pair so the elevation is in range, keeping
/// the pointing direction continuous across the poles.
pub fn reflect_direction(az: f64, el: f64) -> (f64, f64) {
    if (-FRAC_PI_2..=FRAC_PI_2).contains(&el) {
        return (wrap_angle(az), el);
    }
    // fold onto [-π, π): values beyond ±π/2 pass over the pole
    let e = (el + PI).rem_euclid(TAU) - PI;
    if e > FRAC_PI_2 {
        (wrap_angle(az + PI), PI - e)
    } else if e < -FRAC_PI_2 {
        (wrap_angle(az + PI), -PI - e)
    } else {
        (wrap_angle(az), e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance(self, o: Point3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Linear interpolation `self + t (o - self)`.
    #[inline]
    pub fn lerp(self, o: Point3, t: f64) -> Point3 {
        self + (o - self) * t
    }

    /// Unit vector with the given azimuth and elevation.
    #[inline]
    pub fn from_angles(az: f64, el: f64) -> Point3 {
        let (sa, ca) = az.sin_cos();
        let (se, ce) = el.sin_cos();
        Point3::new(ce * ca, ce * sa, se)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        p.to_array()
    }
}

impl Add for Point3 {
    type Output = Point3;
    #[inline]
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    #[inline]
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Position, orientation about the vertical axis, and clock bias of the UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeState {
    pub position: Point3,
    /// Radians, canonical range `[0, 2π)`.
    pub orientation_alpha: f64,
    /// Meters.
    pub bias_b: f64,
}

impl UeState {
    pub fn new(position: Point3, alpha: f64, bias: f64) -> Self {
        Self {
            position,
            orientation_alpha: wrap_angle(alpha),
            bias_b: bias,
        }
    }
}

/// Channel parameters of one path. Also used for noisy samples of them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathTruth {
    pub toa: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub aod_az: f64,
    pub aod_el: f64,
}

impl PathTruth {
    pub fn to_array(self) -> [f64; 5] {
        [self.toa, self.aoa_az, self.aoa_el, self.aod_az, self.aod_el]
    }

    pub fn from_array(z: [f64; 5]) -> Self {
        Self {
            toa: z[0],
            aoa_az: z[1],
            aoa_el: z[2],
            aod_az: z[3],
            aod_el: z[4],
        }
    }
}

/// Closed 3D segment `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment3 {
    pub a: Point3,
    pub b: Point3,
}

impl Segment3 {
    pub const fn new(a: Point3, b: Point3) -> Self {
        Self { a, b }
    }

    /// Point at parameter `t ∈ [0, 1]`.
    #[inline]
    pub fn at(&self, t: f64) -> Point3 {
        self.a.lerp(self.b, t)
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    /// Euclidean distance from `p` to the closest point of the segment.
    pub fn distance_to_point(&self, p: Point3) -> f64 {
        let d = self.b - self.a;
        let dd = d.norm_squared();
        let t = if dd > 0.0 {
            ((p - self.a).dot(d) / dd).clamp(0.0, 1.0)
        } else {
            0.0
        };
        self.at(t).distance(p)
    }
}

/// Closest-approach record for a pair of UE segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPoint {
    /// Minimum distance between the two segments.
    pub distance: f64,
    /// Midpoint of the shortest connecting segment.
    pub midpoint: Point3,
    /// Path indices with `pair.0 < pair.1`.
    pub pair: (usize, usize),
    pub sample_index: usize,
}

/// Channel parameters of the single-bounce path BS → `sp` → UE.
pub fn forward_path(bs: Point3, ue: &UeState, sp: Point3) -> Result<PathTruth> {
    let to_bs = sp - bs;
    let to_ue = sp - ue.position;
    let d_bs = to_bs.norm();
    let d_ue = to_ue.norm();
    if d_bs == 0.0 {
        return Err(Error::DegenerateGeometry("scatter point coincides with the BS".into()));
    }
    if d_ue == 0.0 {
        return Err(Error::DegenerateGeometry("scatter point coincides with the UE".into()));
    }
    Ok(PathTruth {
        toa: d_bs + d_ue + ue.bias_b,
        aoa_az: wrap_angle(PI + to_ue.y.atan2(to_ue.x) - ue.orientation_alpha),
        aoa_el: (to_ue.z / d_ue).clamp(-1.0, 1.0).asin(),
        aod_az: wrap_angle(to_bs.y.atan2(to_bs.x)),
        aod_el: (to_bs.z / d_bs).clamp(-1.0, 1.0).asin(),
    })
}

/// Far end of the departure segment: `bs + rho · u(aod)`.
///
/// The scatter point lies on `[bs, aod_endpoint]` when `rho` is the true
/// path length.
pub fn aod_endpoint(bs: Point3, aod_az: f64, aod_el: f64, rho: f64) -> Result<Point3> {
    if !(rho > 0.0) {
        return Err(Error::InfeasibleRange { rho });
    }
    Ok(bs + Point3::from_angles(aod_az, aod_el) * rho)
}

/// Far end of the arrival segment: `bs + rho · v`, with `v` the global-frame
/// unit vector pointing from the scatterer towards the UE.
///
/// The AOA is measured in the UE frame pointing towards the scatterer, so
/// the reversed direction has azimuth `aoa_az + alpha` and z-component
/// `-sin(aoa_el)`. With this choice the UE lies on the segment between
/// [`aod_endpoint`] and `aoa_endpoint`, at parameter `‖sp - ue‖ / rho`.
pub fn aoa_endpoint(bs: Point3, aoa_az: f64, aoa_el: f64, alpha: f64, rho: f64) -> Result<Point3> {
    if !(rho > 0.0) {
        return Err(Error::InfeasibleRange { rho });
    }
    let (sa, ca) = (aoa_az + alpha).sin_cos();
    let (se, ce) = aoa_el.sin_cos();
    Ok(bs + Point3::new(ce * ca, ce * sa, -se) * rho)
}

/// Segment on which the UE must lie under `hypothesis`, given one (sampled)
/// set of channel parameters.
///
/// Returns [`Error::InfeasibleRange`] when `toa - bias ≤ 0`.
pub fn ue_segment(bs: Point3, sample: &PathTruth, hypothesis: &Hypothesis) -> Result<Segment3> {
    let rho = sample.toa - hypothesis.bias;
    let a = aod_endpoint(bs, sample.aod_az, sample.aod_el, rho)?;
    let b = aoa_endpoint(bs, sample.aoa_az, sample.aoa_el, hypothesis.alpha, rho)?;
    Ok(Segment3::new(a, b))
}

/// Minimum distance between two closed segments and the midpoint of the
/// shortest connecting segment.
///
/// Exact clamped-parametric solution. The result is symmetric in its
/// arguments: when the minimizer is not unique (parallel overlap) the
/// midpoint of the overlapping parameter interval is used, and the pair is
/// put in a canonical order before solving so `(p, q)` and `(q, p)` go
/// through identical arithmetic.
pub fn segment_closest(p: &Segment3, q: &Segment3) -> PairPoint {
    let (p, q) = if seg_key(p) <= seg_key(q) { (p, q) } else { (q, p) };
    let (s, t) = closest_params(p, q);
    let cp = p.at(s);
    let cq = q.at(t);
    PairPoint {
        distance: cp.distance(cq),
        midpoint: (cp + cq) * 0.5,
        pair: (0, 0),
        sample_index: 0,
    }
}

fn seg_key(s: &Segment3) -> [f64; 6] {
    [s.a.x, s.a.y, s.a.z, s.b.x, s.b.y, s.b.z]
}

/// Parameters `(s, t) ∈ [0,1]²` of the closest points on `p` and `q`.
fn closest_params(p: &Segment3, q: &Segment3) -> (f64, f64) {
    let d1 = p.b - p.a;
    let d2 = q.b - q.a;
    let r = p.a - q.a;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(r);

    // relative to the segment scale; degenerate segments collapse to points
    let scale = (a.max(e)).max(r.norm_squared()).max(f64::MIN_POSITIVE);
    let eps = 1e-24 * scale;

    if a <= eps && e <= eps {
        return (0.0, 0.0);
    }
    if a <= eps {
        return (0.0, (f / e).clamp(0.0, 1.0));
    }
    let c = d1.dot(r);
    if e <= eps {
        return ((-c / a).clamp(0.0, 1.0), 0.0);
    }

    let b = d1.dot(d2);
    let denom = a * e - b * b;
    if denom <= 1e-14 * a * e {
        return parallel_params(p, q, a, e, b, c);
    }

    let mut s = ((b * f - c * e) / denom).clamp(0.0, 1.0);
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    (s, t)
}

/// Closest parameters for (numerically) parallel segments.
///
/// Projects `q`'s endpoints onto `p`'s parameter line; if the projected
/// interval overlaps `[0, 1]` the midpoint of the overlap is used, otherwise
/// the nearest pair of endpoints.
fn parallel_params(p: &Segment3, q: &Segment3, a: f64, e: f64, b: f64, c: f64) -> (f64, f64) {
    // s-coordinates of q.a and q.b on p's line
    let s0 = -c / a;
    let s1 = s0 + b / a;
    let (lo, hi) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
    let ov_lo = lo.max(0.0);
    let ov_hi = hi.min(1.0);
    let s = if ov_lo <= ov_hi {
        0.5 * (ov_lo + ov_hi)
    } else if hi < 0.0 {
        0.0
    } else {
        1.0
    };
    let cp = p.at(s);
    let t = ((cp - q.a).dot(q.b - q.a) / e).clamp(0.0, 1.0);
    (s, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn planar() -> (Point3, UeState, Point3) {
        (
            Point3::ORIGIN,
            UeState::new(Point3::new(10.0, 0.0, 0.0), 0.0, 0.0),
            Point3::new(5.0, 5.0, 0.0),
        )
    }

    #[test]
    fn forward_planar_symmetric() {
        let (bs, ue, sp) = planar();
        let p = forward_path(bs, &ue, sp).unwrap();
        assert_abs_diff_eq!(p.toa, 2.0 * 50f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.aod_az, FRAC_PI_4, epsilon = 1e-12);
        assert_abs_diff_eq!(p.aod_el, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.aoa_az, 7.0 * FRAC_PI_4, epsilon = 1e-12);
        assert_abs_diff_eq!(p.aoa_el, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn forward_bias_is_additive() {
        let (bs, mut ue, sp) = planar();
        let p0 = forward_path(bs, &ue, sp).unwrap();
        ue.bias_b = 20.0;
        let p = forward_path(bs, &ue, sp).unwrap();
        assert_abs_diff_eq!(p.toa, 34.142135623730951, epsilon = 1e-9);
        assert_eq!(p.aoa_az, p0.aoa_az);
        assert_eq!(p.aod_el, p0.aod_el);
    }

    #[test]
    fn forward_matches_reference_evaluation() {
        // values from an independent numpy evaluation (tests/oracle/forward_oracle.py)
        let bs = Point3::new(1.5, -2.0, 10.0);
        let ue = UeState::new(Point3::new(30.0, 12.0, 1.5), 1.0471975511965976, 20.0);
        let p = forward_path(bs, &ue, Point3::new(-7.0, 25.0, 6.0)).unwrap();
        let want = [88.062260143997, 4.8981095677427104, 0.114245497988971, 1.8757886736093012, -0.14038150781634376];
        for (g, w) in p.to_array().iter().zip(want) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-12);
        }

        let ue = UeState::new(Point3::new(-12.0, -40.0, -3.0), 5.5, 3.25);
        let p = forward_path(Point3::ORIGIN, &ue, Point3::new(22.0, -8.0, 14.0)).unwrap();
        let want = [80.21539638919108, 4.679882364248053, 0.3491804284202508, 5.93441430359568, 0.538984708611476];
        for (g, w) in p.to_array().iter().zip(want) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-12);
        }
    }

    #[test]
    fn forward_rejects_coincident_points() {
        let (bs, ue, _) = planar();
        assert!(matches!(forward_path(bs, &ue, bs), Err(Error::DegenerateGeometry(_))));
        assert!(matches!(
            forward_path(bs, &ue, ue.position),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn aod_endpoint_examples() {
        let p = aod_endpoint(Point3::ORIGIN, FRAC_PI_4, 0.0, 14.1421).unwrap();
        assert_abs_diff_eq!(p.x, 10.0, epsilon = 1e-4);
        assert_abs_diff_eq!(p.y, 10.0, epsilon = 1e-4);
        assert_abs_diff_eq!(p.z, 0.0, epsilon = 1e-12);

        let p = aod_endpoint(Point3::ORIGIN, 0.0, FRAC_PI_2, 5.0).unwrap();
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.z, 5.0, epsilon = 1e-12);

        let p = aod_endpoint(Point3::new(1.0, 2.0, 3.0), 0.3, -0.2, 7.0).unwrap();
        assert_abs_diff_eq!(p.x, 7.554053545089395, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 4.027406343378608, epsilon = 1e-12);
        assert_abs_diff_eq!(p.z, 1.6093146844345716, epsilon = 1e-12);

        assert_eq!(
            aod_endpoint(Point3::ORIGIN, 0.0, 0.0, 0.0),
            Err(Error::InfeasibleRange { rho: 0.0 })
        );
        assert!(aod_endpoint(Point3::ORIGIN, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn aoa_endpoint_examples() {
        let p = aoa_endpoint(Point3::ORIGIN, 7.0 * FRAC_PI_4, 0.0, 0.0, 14.1421).unwrap();
        assert_abs_diff_eq!(p.x, 10.0, epsilon = 1e-4);
        assert_abs_diff_eq!(p.y, -10.0, epsilon = 1e-4);

        let bs = Point3::new(3.0, -1.0, 7.0);
        let p = aoa_endpoint(bs, 1.2, FRAC_PI_2, 0.4, 4.0).unwrap();
        assert_abs_diff_eq!(p.z, bs.z - 4.0, epsilon = 1e-12);
        assert!(aoa_endpoint(bs, 0.0, 0.0, 0.0, -0.5).is_err());
    }

    #[test]
    fn ue_segment_planar_truth() {
        let (bs, ue, sp) = planar();
        let m = forward_path(bs, &ue, sp).unwrap();
        let s = ue_segment(bs, &m, &Hypothesis::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(s.a.x, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.a.y, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.b.x, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.b.y, -10.0, epsilon = 1e-12);
        assert!(s.distance_to_point(ue.position) < 1e-12);
    }

    #[test]
    fn ue_segment_infeasible_at_zero_length() {
        let (bs, ue, sp) = planar();
        let m = forward_path(bs, &ue, sp).unwrap();
        let r = ue_segment(bs, &m, &Hypothesis::new(0.0, m.toa));
        assert!(matches!(r, Err(Error::InfeasibleRange { .. })));
    }

    #[test]
    fn ue_segment_orientation_rotates_arrival_end() {
        let bs = Point3::new(1.0, 1.0, 2.0);
        let ue = UeState::new(Point3::new(-8.0, 12.0, 0.0), 0.7, 4.0);
        let m = forward_path(bs, &ue, Point3::new(9.0, 3.0, 6.0)).unwrap();
        let delta = 0.25;
        let s0 = ue_segment(bs, &m, &Hypothesis::new(0.7, 4.0)).unwrap();
        let s1 = ue_segment(bs, &m, &Hypothesis::new(0.7 + delta, 4.0)).unwrap();
        assert_eq!(s0.a, s1.a);
        let (v0, v1) = (s0.b - bs, s1.b - bs);
        let rot = v1.y.atan2(v1.x) - v0.y.atan2(v0.x);
        assert_abs_diff_eq!(angle_distance(rot, delta), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v0.z, v1.z, epsilon = 1e-12);
        assert_abs_diff_eq!(v0.norm(), v1.norm(), epsilon = 1e-12);
    }

    #[test]
    fn closest_perpendicular_skew() {
        let p = Segment3::new(Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0));
        let q = Segment3::new(Point3::new(0.5, -1.0, 1.0), Point3::new(0.5, 1.0, 1.0));
        let r = segment_closest(&p, &q);
        assert_abs_diff_eq!(r.distance, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.midpoint.x, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.midpoint.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.midpoint.z, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn closest_identical_segments() {
        let p = Segment3::new(Point3::new(1.0, 2.0, 3.0), Point3::new(-4.0, 0.5, 9.0));
        let r = segment_closest(&p, &p);
        assert_eq!(r.distance, 0.0);
        assert!(p.distance_to_point(r.midpoint) < 1e-12);
    }

    #[test]
    fn closest_parallel_overlap_uses_overlap_midpoint() {
        let p = Segment3::new(Point3::ORIGIN, Point3::new(4.0, 0.0, 0.0));
        let q = Segment3::new(Point3::new(6.0, 0.0, 2.0), Point3::new(2.0, 0.0, 2.0));
        let r = segment_closest(&p, &q);
        assert_abs_diff_eq!(r.distance, 2.0, epsilon = 1e-12);
        // overlap is x ∈ [2, 4]
        assert_abs_diff_eq!(r.midpoint.x, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.midpoint.z, 1.0, epsilon = 1e-12);
        assert_eq!(segment_closest(&q, &p), r);
    }

    #[test]
    fn closest_parallel_disjoint() {
        let p = Segment3::new(Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0));
        let q = Segment3::new(Point3::new(3.0, 1.0, 0.0), Point3::new(5.0, 1.0, 0.0));
        let r = segment_closest(&p, &q);
        assert_abs_diff_eq!(r.distance, 5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn closest_point_segments() {
        let p = Segment3::new(Point3::new(1.0, 1.0, 1.0), Point3::new(1.0, 1.0, 1.0));
        let q = Segment3::new(Point3::ORIGIN, Point3::new(2.0, 0.0, 0.0));
        let r = segment_closest(&p, &q);
        assert_abs_diff_eq!(r.distance, 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.midpoint.x, 1.0, epsilon = 1e-12);
        let r = segment_closest(&p, &p);
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.midpoint, p.a);
    }

    #[test]
    fn reflection_keeps_direction() {
        for &(az, el) in &[(0.3, 1.9), (5.0, -1.7), (1.0, 4.0), (2.0, -3.5), (0.1, 0.2)] {
            let (a2, e2) = reflect_direction(az, el);
            assert!((-FRAC_PI_2..=FRAC_PI_2).contains(&e2));
            let u = Point3::from_angles(az, el);
            let v = Point3::from_angles(a2, e2);
            assert!(u.distance(v) < 1e-12, "{az} {el}");
        }
        assert_abs_diff_eq!(reflect_elevation(FRAC_PI_2 + 0.1), FRAC_PI_2 - 0.1, epsilon = 1e-15);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(-1e-300), 0.0);
        assert_abs_diff_eq!(wrap_angle(-PI / 2.0), 1.5 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(angle_distance(0.1, TAU - 0.1), 0.2, epsilon = 1e-12);
    }
}
