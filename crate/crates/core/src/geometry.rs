//! Cylinder bump configurations: points on the top and bottom circles of a cylinder
//! inscribed in a sphere, their pairwise distances and the angular sectors Ω_j.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Synchronized,
    Segregated,
    SignChangingSync,
    SignChangingSeg,
}

impl Family {
    pub fn is_segregated(self) -> bool {
        matches!(self, Family::Segregated | Family::SignChangingSeg)
    }

    pub fn is_sign_changing(self) -> bool {
        matches!(self, Family::SignChangingSync | Family::SignChangingSeg)
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::Synchronized => "synchronized",
            Family::Segregated => "segregated",
            Family::SignChangingSync => "sign-changing-sync",
            Family::SignChangingSeg => "sign-changing-seg",
        }
    }

    /// Factor picked up by the field under a rotation by 2π/k.
    pub fn rotation_sign(self) -> f64 {
        if self.is_sign_changing() { -1.0 } else { 1.0 }
    }
}

/// Which component a site carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Species {
    /// Synchronized site: both components, same center.
    Both,
    U,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub position: Point,
    pub species: Species,
    pub sign: f64,
}

/// Parametric configuration. Coordinates are materialized on demand from `(k, r, ρ, h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpConfiguration {
    pub family: Family,
    pub k: usize,
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub h: f64,
    pub signs: Vec<i8>,
    /// Rigid rotation about the z axis applied to every site.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub phase: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn check_common(k: usize, radius: f64, h: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidArgument(format!("h must lie in (0, 1), got {h}")));
    }
    Ok(())
}

fn circle_point(radius: f64, h: f64, angle: f64, up: bool) -> Point {
    let c = (1.0 - h * h).sqrt();
    let z = if up { h } else { -h };
    [radius * c * angle.cos(), radius * c * angle.sin(), radius * z]
}

/// Top circle at angles 2(j-1)π/k, then the bottom circle.
pub fn synchronized_positions(k: usize, r: f64, h: f64) -> Result<Vec<Point>> {
    check_common(k, r, h)?;
    let angle = |j: usize| 2.0 * j as f64 * PI / k as f64;
    let top = (0..k).map(|j| circle_point(r, h, angle(j), true));
    let bottom = (0..k).map(|j| circle_point(r, h, angle(j), false));
    Ok(top.chain(bottom).collect())
}

/// Second-species circles at the interleaved angles (2j-1)π/k.
pub fn segregated_positions(k: usize, rho: f64, h: f64) -> Result<Vec<Point>> {
    check_common(k, rho, h)?;
    let angle = |j: usize| (2 * j + 1) as f64 * PI / k as f64;
    let top = (0..k).map(|j| circle_point(rho, h, angle(j), true));
    let bottom = (0..k).map(|j| circle_point(rho, h, angle(j), false));
    Ok(top.chain(bottom).collect())
}

/// Distance between adjacent bumps on one circle.
pub fn neighbor_distance(k: usize, r: f64, h: f64) -> f64 {
    2.0 * r * (1.0 - h * h).sqrt() * (PI / k as f64).sin()
}

/// Distance between a top bump and the bottom bump below it.
pub fn vertical_distance(r: f64, h: f64) -> f64 {
    2.0 * r * h
}

/// Distance between the first top bumps of the two species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossDistance {
    pub exact: f64,
    /// Exact distance without the `h²(r-ρ)²` term.
    pub approx_sine: f64,
    /// Variant with `r²(π/k)²` in place of `r² sin²(π/k)`.
    pub approx_angle: f64,
}

pub fn cross_distance(k: usize, r: f64, rho: f64, h: f64) -> CrossDistance {
    let t = PI / k as f64;
    let c2 = 1.0 - h * h;
    let planar = r * r + rho * rho - 2.0 * r * rho * t.cos();
    CrossDistance {
        exact: (c2 * planar + h * h * (r - rho).powi(2)).sqrt(),
        approx_sine: (c2 * planar).max(0.0).sqrt(),
        approx_angle: (c2 * ((rho - r * t.cos()).powi(2) + r * r * t * t)).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectorMembership {
    pub inside: bool,
    /// +1 above the z = 0 plane, -1 below, 0 on it.
    pub z_sign: i8,
    /// Point on the z axis, where the cone test is undefined.
    pub on_axis: bool,
}

/// Cone test for Ω_j (1-based `j`).
pub fn sector_membership(point: Point, j: usize, k: usize) -> SectorMembership {
    let z_sign = if point[2] > 0.0 {
        1
    } else if point[2] < 0.0 {
        -1
    } else {
        0
    };
    let planar = point[0].hypot(point[1]);
    if planar == 0.0 {
        return SectorMembership { inside: false, z_sign, on_axis: true };
    }
    let a = 2.0 * (j as f64 - 1.0) * PI / k as f64;
    let cosine = (point[0] * a.cos() + point[1] * a.sin()) / planar;
    SectorMembership {
        inside: cosine >= (PI / k as f64).cos() - 1e-14,
        z_sign,
        on_axis: false,
    }
}

pub fn rotate_z(p: Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

pub fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn norm(a: Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Alternating signs `(-1)^{j-1}` around each circle, repeated for the bottom circle.
fn alternating(k: usize) -> Vec<i8> {
    (0..2 * k).map(|i| if (i % k) % 2 == 0 { 1 } else { -1 }).collect()
}

impl BumpConfiguration {
    pub fn synchronized(k: usize, r: f64, h: f64) -> Result<Self> {
        check_common(k, r, h)?;
        Ok(Self { family: Family::Synchronized, k, r, rho: None, h, signs: vec![1; 2 * k], phase: 0.0 })
    }

    pub fn segregated(k: usize, r: f64, rho: f64, h: f64) -> Result<Self> {
        check_common(k, r, h)?;
        check_common(k, rho, h)?;
        Ok(Self { family: Family::Segregated, k, r, rho: Some(rho), h, signs: vec![1; 4 * k], phase: 0.0 })
    }

    /// `k = 2l` alternating bumps per circle.
    pub fn sign_changing_sync(k: usize, r: f64, h: f64) -> Result<Self> {
        check_common(k, r, h)?;
        if k % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "sign-changing configurations need an even number of bumps per circle, got {k}"
            )));
        }
        Ok(Self { family: Family::SignChangingSync, k, r, rho: None, h, signs: alternating(k), phase: 0.0 })
    }

    pub fn sign_changing_seg(k: usize, r: f64, rho: f64, h: f64) -> Result<Self> {
        check_common(k, r, h)?;
        check_common(k, rho, h)?;
        if k % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "sign-changing configurations need an even number of bumps per circle, got {k}"
            )));
        }
        let mut signs = alternating(k);
        signs.extend(alternating(k));
        Ok(Self { family: Family::SignChangingSeg, k, r, rho: Some(rho), h, signs, phase: 0.0 })
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_common(self.k, self.r, self.h)?;
        let seg = self.family.is_segregated();
        match (seg, self.rho) {
            (true, Some(rho)) => check_common(self.k, rho, self.h)?,
            (true, None) => {
                return Err(Error::InvalidArgument("segregated families need rho".into()))
            }
            (false, Some(_)) => {
                return Err(Error::InvalidArgument("rho is only used by segregated families".into()))
            }
            (false, None) => {}
        }
        let want = if seg { 4 * self.k } else { 2 * self.k };
        if self.signs.len() != want {
            return Err(Error::InvalidArgument(format!(
                "expected {want} signs, got {}",
                self.signs.len()
            )));
        }
        if self.signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::InvalidArgument("signs must be +1 or -1".into()));
        }
        if self.family.is_sign_changing() && self.k % 2 != 0 {
            return Err(Error::InvalidArgument("sign-changing families need even k".into()));
        }
        Ok(())
    }

    /// All sites: first species (top circle, bottom circle), then for segregated families
    /// the second species.
    pub fn sites(&self) -> Result<Vec<Site>> {
        self.validate()?;
        let seg = self.family.is_segregated();
        let first = if seg { Species::U } else { Species::Both };
        let mut out: Vec<Site> = synchronized_positions(self.k, self.r, self.h)?
            .into_iter()
            .zip(&self.signs)
            .map(|(p, s)| Site { position: rotate_z(p, self.phase), species: first, sign: *s as f64 })
            .collect();
        if let (true, Some(rho)) = (seg, self.rho) {
            let second = segregated_positions(self.k, rho, self.h)?;
            out.extend(second.into_iter().zip(&self.signs[2 * self.k..]).map(|(p, s)| Site {
                position: rotate_z(p, self.phase),
                species: Species::V,
                sign: *s as f64,
            }));
        }
        Ok(out)
    }

    pub fn points(&self) -> Result<Vec<Point>> {
        Ok(self.sites()?.into_iter().map(|s| s.position).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn synchronized_example() {
        let p = synchronized_positions(4, 1.0, 0.6).unwrap();
        assert_eq!(p.len(), 8);
        let expect = [[0.8, 0.0, 0.6], [0.0, 0.8, 0.6], [-0.8, 0.0, 0.6], [0.0, -0.8, 0.6]];
        for (a, b) in p.iter().zip(expect) {
            assert!(distance(*a, b) < 1e-15);
        }
        assert!(p[4..].iter().all(|q| q[2] == -0.6));
    }

    #[test]
    fn degenerate_height() {
        let p = synchronized_positions(2, 1.0, 1e-9).unwrap();
        assert!(distance(p[0], p[2]) < 1e-8);
        assert!(distance(p[1], p[3]) < 1e-8);
        assert!(synchronized_positions(2, 1.0, 0.0).is_err());
        assert!(synchronized_positions(2, 1.0, 1.0).is_err());
    }

    #[test]
    fn segregated_examples() {
        let p = segregated_positions(2, 1.0, 0.6).unwrap();
        assert!((p[0][1].atan2(p[0][0]) - PI / 2.0).abs() < 1e-15);
        assert!((p[1][1].atan2(p[1][0]) + PI / 2.0).abs() < 1e-15);
        let q = segregated_positions(3, 2.0, 0.5).unwrap();
        assert_eq!(q.len(), 6);
        assert!(q.iter().all(|x| (norm(*x) - 2.0).abs() < 1e-15));
        // species-2 angles bisect species-1 angles
        let s1 = synchronized_positions(5, 1.0, 0.3).unwrap();
        let s2 = segregated_positions(5, 1.0, 0.3).unwrap();
        let a = |p: Point| p[1].atan2(p[0]);
        assert!((a(s2[0]) - 0.5 * (a(s1[0]) + a(s1[1]))).abs() < 1e-14);
    }

    #[test]
    fn distance_examples() {
        assert!((neighbor_distance(4, 1.0, 0.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((neighbor_distance(6, 1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((neighbor_distance(6, 1.0, 0.6) - 0.8).abs() < 1e-15);
        assert_eq!(vertical_distance(1.0, 0.5), 1.0);
        assert_eq!(vertical_distance(2.0, 0.25), 1.0);
        let c = cross_distance(2, 1.0, 2.0, 0.0);
        assert!((c.exact - 5f64.sqrt()).abs() < 1e-15);
        let d = cross_distance(7, 3.0, 3.0, 0.4);
        let want = 6.0 * (1.0 - 0.16f64).sqrt() * (PI / 14.0).sin();
        assert!((d.exact - want).abs() < 1e-14 && (d.approx_sine - want).abs() < 1e-14);
    }

    #[test]
    fn sectors() {
        let k = 7;
        let pts = synchronized_positions(k, 10.0, 0.3).unwrap();
        for j in 1..=k {
            let m = sector_membership(pts[j - 1], j, k);
            assert!(m.inside && m.z_sign == 1 && !m.on_axis);
        }
        let p = [3.0, 0.4, -1.0];
        assert!(sector_membership(p, 1, k).inside);
        let q = rotate_z(p, 2.0 * PI / k as f64);
        assert!(sector_membership(q, 2, k).inside && !sector_membership(q, 1, k).inside);
        assert!(sector_membership([0.0, 0.0, 1.0], 1, k).on_axis);
    }

    #[test]
    fn sign_changing_needs_even_k() {
        assert!(BumpConfiguration::sign_changing_sync(5, 10.0, 0.2).is_err());
        let c = BumpConfiguration::sign_changing_sync(4, 10.0, 0.2).unwrap();
        assert_eq!(c.signs, vec![1, -1, 1, -1, 1, -1, 1, -1]);
    }

    #[test]
    fn json_round_trip() {
        let c = BumpConfiguration::segregated(3, 10.0, 11.0, 0.2).unwrap();
        let t = c.to_json().unwrap();
        assert!(t.starts_with("{\"family\":\"Segregated\",\"k\":3,\"r\":10.0,\"rho\":11.0,\"h\":0.2,\"signs\":"));
        assert_eq!(BumpConfiguration::from_json(&t).unwrap(), c);
    }

    fn max_set_distance(a: &[Point], b: &[Point]) -> f64 {
        a.iter()
            .map(|p| b.iter().map(|q| distance(*p, *q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn points_lie_on_sphere(k in 2usize..20, r in 0.1f64..100.0, h in 0.01f64..0.99) {
            for p in synchronized_positions(k, r, h).unwrap() {
                prop_assert!((norm(p) - r).abs() <= 1e-12 * r);
            }
        }

        #[test]
        fn orbit_closure_and_reflection(k in 2usize..16, r in 0.5f64..50.0, rho in 0.5f64..50.0, h in 0.01f64..0.99) {
            let c = BumpConfiguration::segregated(k, r, rho, h).unwrap();
            let pts = c.points().unwrap();
            let rot: Vec<Point> = pts.iter().map(|p| rotate_z(*p, 2.0 * PI / k as f64)).collect();
            prop_assert!(max_set_distance(&rot, &pts) < 1e-12 * r.max(rho));
            let top = &pts[..k];
            let bottom = &pts[k..2 * k];
            let refl: Vec<Point> = top.iter().map(|p| [p[0], p[1], -p[2]]).collect();
            prop_assert!(max_set_distance(&refl, bottom) < 1e-12 * r);
        }

        #[test]
        fn closed_forms_match_point_distances(k in 2usize..30, r in 0.5f64..50.0, rho in 0.5f64..50.0, h in 0.01f64..0.99) {
            let s1 = synchronized_positions(k, r, h).unwrap();
            let s2 = segregated_positions(k, rho, h).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() / b.max(1e-300);
            prop_assert!(rel(neighbor_distance(k, r, h), distance(s1[0], s1[1])) < 1e-12);
            prop_assert!(rel(vertical_distance(r, h), distance(s1[0], s1[k])) < 1e-12);
            let c = cross_distance(k, r, rho, h);
            prop_assert!(rel(c.exact, distance(s1[0], s2[0])) < 1e-12);
            prop_assert!(c.exact >= c.approx_sine);
        }
    }
}
