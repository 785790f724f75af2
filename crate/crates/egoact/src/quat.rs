//! Unit-quaternion algebra.
//!
//! Every orientation in the pipeline is a canonical-sign unit quaternion.
//! Canonicalization resolves the double cover (q and -q encode the same
//! rotation) once at construction so that distances and averages can use
//! plain component arithmetic afterwards.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuatError {
    #[error("degenerate quaternion: norm {0} below threshold")]
    DegenerateQuaternion(f64),
    #[error("degenerate mean: inputs nearly antipodally spread (norm {0})")]
    DegenerateMean(f64),
}

/// A unit quaternion with canonical sign: `w > 0`, or `w == 0` and the
/// first nonzero of `(x, y, z)` positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalize and canonicalize a raw 4-vector.
    pub fn canonicalize(w: f64, x: f64, y: f64, z: f64) -> Result<UnitQuaternion, QuatError> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if norm <= 1e-12 {
            return Err(QuatError::DegenerateQuaternion(norm));
        }
        // skip the division when already unit; renormalizing an exact
        // round-trip value would perturb its last bits
        let mut q = if (norm - 1.0).abs() <= 1e-12 {
            UnitQuaternion { w, x, y, z }
        } else {
            UnitQuaternion {
                w: w / norm,
                x: x / norm,
                y: y / norm,
                z: z / norm,
            }
        };
        if q.w < 0.0
            || (q.w == 0.0
                && (q.x < 0.0 || (q.x == 0.0 && (q.y < 0.0 || (q.y == 0.0 && q.z < 0.0)))))
        {
            q = UnitQuaternion {
                w: -q.w,
                x: -q.x,
                y: -q.y,
                z: -q.z,
            };
        }
        // -0.0 would break bitwise comparisons in round trips
        if q.w == 0.0 {
            q.w = 0.0;
        }
        Ok(q)
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> UnitQuaternion {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        assert!(norm > 0.0, "axis must be nonzero");
        let half = angle / 2.0;
        let s = half.sin() / norm;
        UnitQuaternion::canonicalize(half.cos(), axis[0] * s, axis[1] * s, axis[2] * s)
            .expect("axis-angle quaternion is never degenerate")
    }

    pub fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &UnitQuaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn inverse(&self) -> UnitQuaternion {
        UnitQuaternion::canonicalize(self.w, -self.x, -self.y, -self.z)
            .expect("inverse of a unit quaternion is a unit quaternion")
    }

    /// Rotation angle in [0, pi].
    pub fn angle(&self) -> f64 {
        2.0 * self.w.abs().clamp(0.0, 1.0).acos()
    }
}

/// Hamilton product `a * b`, canonicalized.
pub fn multiply(a: &UnitQuaternion, b: &UnitQuaternion) -> UnitQuaternion {
    let w = a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z;
    let x = a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y;
    let y = a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x;
    let z = a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w;
    UnitQuaternion::canonicalize(w, x, y, z).expect("product of unit quaternions is unit")
}

/// Relative rotation taking `q1` to `q2`: `q1^-1 * q2`.
pub fn relative(q1: &UnitQuaternion, q2: &UnitQuaternion) -> UnitQuaternion {
    multiply(&q1.inverse(), q2)
}

// The cosine of the half angle between q1 and q2 is |<q1, q2>|, so the
// distance is 2*acos(|<q1, q2>|). acos cannot resolve angles below ~1e-8
// near cos = 1, so we evaluate the identical quantity from the relative
// quaternion with atan2, which stays accurate for small angles.
fn rotation_angle_between(q1: &UnitQuaternion, q2: &UnitQuaternion) -> f64 {
    let w = q1.w * q2.w + q1.x * q2.x + q1.y * q2.y + q1.z * q2.z;
    let x = q1.w * q2.x - q1.x * q2.w - q1.y * q2.z + q1.z * q2.y;
    let y = q1.w * q2.y + q1.x * q2.z - q1.y * q2.w - q1.z * q2.x;
    let z = q1.w * q2.z - q1.x * q2.y + q1.y * q2.x - q1.z * q2.w;
    let sin_half = (x * x + y * y + z * z).sqrt();
    2.0 * sin_half.atan2(w.abs())
}

/// Geodesic distance between two rotations: `2 * acos(|<q1, q2>|)` in [0, pi].
///
/// The absolute value folds the double cover so that q and -q are at
/// distance zero.
pub fn geodesic_distance(q1: &UnitQuaternion, q2: &UnitQuaternion) -> f64 {
    rotation_angle_between(q1, q2)
}

/// Continuous angular error `acos(2 <q_pred, q_gt>^2 - 1)` in [0, pi].
///
/// The double-angle identity makes this the same rotation angle as
/// `geodesic_distance`; the squared dot product is sign-invariant so no
/// canonicalization is needed on the inputs.
pub fn angular_error(q_pred: &UnitQuaternion, q_gt: &UnitQuaternion) -> f64 {
    rotation_angle_between(q_pred, q_gt)
}

/// Sign-aligned arithmetic mean, renormalized.
///
/// Every element is flipped to the hemisphere of the first; adequate for
/// tightly clustered inputs (sub-0.1 s sensor windows).
pub fn mean(qs: &[UnitQuaternion]) -> Result<UnitQuaternion, QuatError> {
    assert!(!qs.is_empty(), "mean of empty list");
    let first = &qs[0];
    let mut acc = [0.0f64; 4];
    for q in qs {
        let sign = if q.dot(first) < 0.0 { -1.0 } else { 1.0 };
        let c = q.components();
        for i in 0..4 {
            acc[i] += sign * c[i];
        }
    }
    let n = qs.len() as f64;
    let norm = (acc.iter().map(|v| v * v).sum::<f64>()).sqrt() / n;
    if norm < 1e-6 {
        return Err(QuatError::DegenerateMean(norm));
    }
    UnitQuaternion::canonicalize(acc[0], acc[1], acc[2], acc[3])
}

/// Spherical linear interpolation along the shorter arc.
pub fn slerp(q1: &UnitQuaternion, q2: &UnitQuaternion, t: f64) -> UnitQuaternion {
    assert!((0.0..=1.0).contains(&t), "slerp parameter out of [0,1]");
    let mut d = q1.dot(q2);
    let mut sign = 1.0;
    if d < 0.0 {
        d = -d;
        sign = -1.0;
    }
    let d = d.clamp(0.0, 1.0);
    let a = q1.components();
    let b = q2.components();
    let (s1, s2) = if d > 1.0 - 1e-12 {
        // nearly coincident: fall back to linear blend
        (1.0 - t, t)
    } else {
        let theta = d.acos();
        let sin_theta = theta.sin();
        (
            ((1.0 - t) * theta).sin() / sin_theta,
            (t * theta).sin() / sin_theta,
        )
    };
    UnitQuaternion::canonicalize(
        s1 * a[0] + sign * s2 * b[0],
        s1 * a[1] + sign * s2 * b[1],
        s1 * a[2] + sign * s2 * b[2],
        s1 * a[3] + sign * s2 * b[3],
    )
    .expect("slerp of unit quaternions is unit")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    pub fn random_unit(rng: &mut impl Rng) -> UnitQuaternion {
        loop {
            let v: [f64; 4] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            if let Ok(q) = UnitQuaternion::canonicalize(v[0], v[1], v[2], v[3]) {
                let n: f64 = v.iter().map(|x| x * x).sum::<f64>();
                if n > 1e-4 {
                    return q;
                }
            }
        }
    }

    fn z_rot(deg: f64) -> UnitQuaternion {
        UnitQuaternion::from_axis_angle([0.0, 0.0, 1.0], deg.to_radians())
    }

    #[test]
    fn canonicalize_examples() {
        let q = UnitQuaternion::canonicalize(-1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(q, UnitQuaternion::IDENTITY);
        let q = UnitQuaternion::canonicalize(0.0, 0.0, 0.0, 2.0).unwrap();
        assert_eq!(q.components(), [0.0, 0.0, 0.0, 1.0]);
        let q = UnitQuaternion::canonicalize(0.5, 0.5, 0.5, 0.5).unwrap();
        assert_eq!(q.components(), [0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn canonicalize_degenerate() {
        assert!(matches!(
            UnitQuaternion::canonicalize(0.0, 0.0, 0.0, 0.0),
            Err(QuatError::DegenerateQuaternion(_))
        ));
    }

    #[test]
    fn multiply_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let q = random_unit(&mut rng);
            assert!(geodesic_distance(&multiply(&UnitQuaternion::IDENTITY, &q), &q) < TOL);
            assert!(geodesic_distance(&multiply(&q, &q.inverse()), &UnitQuaternion::IDENTITY) < TOL);
        }
    }

    #[test]
    fn multiply_composes_z_rotations() {
        let q = multiply(&z_rot(90.0), &z_rot(90.0));
        // 180 degree z-rotation
        assert!((q.w - 0.0).abs() < TOL);
        assert!((q.z - 1.0).abs() < TOL);
    }

    #[test]
    fn relative_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_unit(&mut rng);
        assert!(geodesic_distance(&relative(&q, &q), &UnitQuaternion::IDENTITY) < TOL);
        assert!(geodesic_distance(&relative(&UnitQuaternion::IDENTITY, &q), &q) < TOL);
        let r = relative(&z_rot(90.0), &z_rot(92.0));
        assert!(geodesic_distance(&r, &z_rot(2.0)) < TOL);
    }

    #[test]
    fn geodesic_examples() {
        let q = z_rot(33.0);
        assert_eq!(geodesic_distance(&q, &q), 0.0);
        let d = geodesic_distance(&UnitQuaternion::IDENTITY, &z_rot(90.0));
        assert!((d - std::f64::consts::FRAC_PI_2).abs() < TOL);
        let neg = UnitQuaternion {
            w: -q.w,
            x: -q.x,
            y: -q.y,
            z: -q.z,
        };
        assert!(geodesic_distance(&q, &neg) < TOL);
    }

    #[test]
    fn angular_error_examples() {
        let q = z_rot(10.0);
        assert!(angular_error(&q, &q) < TOL);
        let e = angular_error(&UnitQuaternion::IDENTITY, &z_rot(90.0));
        assert!((e - std::f64::consts::FRAC_PI_2).abs() < TOL);
    }

    #[test]
    fn mean_examples() {
        let q = z_rot(17.0);
        assert!(geodesic_distance(&mean(&[q]).unwrap(), &q) < TOL);
        assert!(geodesic_distance(&mean(&[q, q, q]).unwrap(), &q) < TOL);
        let m = mean(&[z_rot(0.0), z_rot(10.0)]).unwrap();
        assert!(geodesic_distance(&m, &z_rot(5.0)) < TOL);
    }

    #[test]
    fn mean_of_canceling_tail_keeps_head_direction() {
        // elements 2..n cancel pairwise; the mean collapses to the first
        let head = UnitQuaternion::from_axis_angle([1.0, 0.0, 0.0], std::f64::consts::PI);
        let a = UnitQuaternion::canonicalize(0.0, 0.0, 1.0, 0.0).unwrap();
        let b = UnitQuaternion::canonicalize(1e-9, 0.0, -1.0, 0.0).unwrap();
        let m = mean(&[head, a, b]).unwrap();
        assert!(geodesic_distance(&m, &head) < 1e-6);
    }

    #[test]
    fn slerp_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q1 = random_unit(&mut rng);
        let q2 = random_unit(&mut rng);
        assert!(geodesic_distance(&slerp(&q1, &q2, 0.0), &q1) < TOL);
        assert!(geodesic_distance(&slerp(&q1, &q2, 1.0), &q2) < TOL);
        let mid = slerp(&UnitQuaternion::IDENTITY, &z_rot(90.0), 0.5);
        assert!(geodesic_distance(&mid, &z_rot(45.0)) < TOL);
    }

    #[test]
    fn slerp_proportionality() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let q1 = random_unit(&mut rng);
            let q2 = random_unit(&mut rng);
            let t: f64 = rng.gen_range(0.0..1.0);
            let d = geodesic_distance(&q1, &q2);
            let part = geodesic_distance(&q1, &slerp(&q1, &q2, t));
            assert!((part - t * d).abs() < 1e-8, "t={t} d={d} part={part}");
        }
    }

    #[test]
    fn distance_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let a = random_unit(&mut rng);
            let b = random_unit(&mut rng);
            let r = random_unit(&mut rng);
            let d = geodesic_distance(&a, &b);
            assert!((d - geodesic_distance(&b, &a)).abs() < TOL);
            assert!(d >= 0.0 && d <= std::f64::consts::PI + TOL);
            // left invariance
            let d2 = geodesic_distance(&multiply(&r, &a), &multiply(&r, &b));
            assert!((d - d2).abs() < TOL);
            // agreement between the two error formulas
            assert!((angular_error(&a, &b) - d).abs() < TOL);
            // round trip
            let rel = relative(&a, &b);
            assert!(geodesic_distance(&multiply(&a, &rel), &b) < TOL);
        }
    }
}
