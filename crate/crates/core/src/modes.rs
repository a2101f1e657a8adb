//! Propagation directions, their transverse polarization frames, and
//! finite detection mode sets.
//!
//! A direction is a point on the forward hemisphere, polar angle theta
//! measured from the +z axis of whatever frame it is used in, azimuth
//! phi from the +x axis. Every direction carries a right-handed local
//! frame whose third axis is the propagation direction itself; linear
//! polarization amplitudes are stored as components along the first two
//! axes of that frame.

use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::floatfmt::fmt_f64;
use crate::pauli::C64;

const TAU: f64 = std::f64::consts::TAU;
const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// A propagation direction on the forward hemisphere.
///
/// Invariants: `0 <= theta < pi/2`, `0 <= phi < 2*pi`, both finite.
/// theta = pi/2 (grazing) is excluded because the transverse-frame and
/// polarizer formulas degenerate there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::domain("direction angles must be finite"));
        }
        if !(0.0..HALF_PI).contains(&theta) {
            return Err(Error::domain(format!(
                "polar angle {theta} outside [0, pi/2)"
            )));
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Direction { theta, phi })
    }

    /// Recovers a direction from a unit vector expressed in the same frame.
    pub fn from_unit_vector(v: &Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n.is_finite() && (n - 1.0).abs() < 1e-9) {
            return Err(Error::domain("direction vector must have unit norm"));
        }
        let theta = (v.z / n).clamp(-1.0, 1.0).acos();
        if theta >= HALF_PI {
            return Err(Error::domain(
                "direction lies outside the forward hemisphere",
            ));
        }
        let phi = v.y.atan2(v.x);
        Direction::new(theta, phi)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Unit vector (sin t cos p, sin t sin p, cos t).
    pub fn unit_vector(&self) -> Vector3<f64> {
        let (st, ct) = (self.theta.sin(), self.theta.cos());
        let (sp, cp) = (self.phi.sin(), self.phi.cos());
        Vector3::new(st * cp, st * sp, ct)
    }
}

/// Right-handed orthonormal triad attached to a direction.
///
/// `z_axis` is the propagation direction; `x_axis` lies in the plane
/// spanned by the direction and the frame's +z axis (the meridian),
/// `y_axis` is horizontal. All three are expressed in the coordinates
/// of the frame the direction was given in.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFrame {
    pub x_axis: Vector3<f64>,
    pub y_axis: Vector3<f64>,
    pub z_axis: Vector3<f64>,
}

impl LocalFrame {
    /// The laboratory frame itself.
    pub fn identity() -> Self {
        LocalFrame {
            x_axis: Vector3::x(),
            y_axis: Vector3::y(),
            z_axis: Vector3::z(),
        }
    }

    /// Builds a frame from explicit axes, checking orthonormality and
    /// right-handedness to 1e-12.
    pub fn new(x_axis: Vector3<f64>, y_axis: Vector3<f64>, z_axis: Vector3<f64>) -> Result<Self> {
        let frame = LocalFrame {
            x_axis,
            y_axis,
            z_axis,
        };
        if frame.orthonormality_defect() > 1e-12 {
            return Err(Error::domain("frame axes are not orthonormal"));
        }
        if (frame.x_axis.cross(&frame.y_axis) - frame.z_axis).norm() > 1e-12 {
            return Err(Error::domain("frame is not right-handed"));
        }
        Ok(frame)
    }

    /// Max deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let axes = [&self.x_axis, &self.y_axis, &self.z_axis];
        let mut worst: f64 = 0.0;
        for (i, a) in axes.iter().enumerate() {
            for (j, b) in axes.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - want).abs());
            }
        }
        worst
    }

    /// Components of a global vector in this frame.
    pub fn coordinates_of(&self, v: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(self.x_axis.dot(v), self.y_axis.dot(v), self.z_axis.dot(v))
    }

    /// Global vector from components in this frame.
    pub fn to_global(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.x_axis * local.x + self.y_axis * local.y + self.z_axis * local.z
    }
}

/// Local frame of a direction:
/// x' = (cos t cos p, cos t sin p, -sin t),
/// y' = (-sin p, cos p, 0),
/// z' = (sin t cos p, sin t sin p, cos t).
pub fn local_frame(d: &Direction) -> LocalFrame {
    let (st, ct) = (d.theta.sin(), d.theta.cos());
    let (sp, cp) = (d.phi.sin(), d.phi.cos());
    LocalFrame {
        x_axis: Vector3::new(ct * cp, ct * sp, -st),
        y_axis: Vector3::new(-sp, cp, 0.0),
        z_axis: Vector3::new(st * cp, st * sp, ct),
    }
}

/// Circular polarization vectors f(s) = (x' + i s y') / sqrt(2), s = +-1.
#[derive(Debug, Clone)]
pub struct HelicityBasis {
    pub f_plus: Vector3<C64>,
    pub f_minus: Vector3<C64>,
}

pub fn helicity_basis(frame: &LocalFrame) -> HelicityBasis {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mk = |s: f64| {
        Vector3::new(
            Complex::new(frame.x_axis.x * inv_sqrt2, s * frame.y_axis.x * inv_sqrt2),
            Complex::new(frame.x_axis.y * inv_sqrt2, s * frame.y_axis.y * inv_sqrt2),
            Complex::new(frame.x_axis.z * inv_sqrt2, s * frame.y_axis.z * inv_sqrt2),
        )
    };
    HelicityBasis {
        f_plus: mk(1.0),
        f_minus: mk(-1.0),
    }
}

/// Amplitude change of basis from helicity components (psi+, psi-) to
/// linear components (psi_x', psi_y') in the same local frame.
pub fn helicity_to_linear(h: &Vector2<C64>) -> Vector2<C64> {
    let inv_sqrt2 = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i = Complex::new(0.0, 1.0);
    Vector2::new(
        (h.x + h.y) * inv_sqrt2,
        i * (h.x - h.y) * inv_sqrt2,
    )
}

/// Inverse of [`helicity_to_linear`].
pub fn linear_to_helicity(l: &Vector2<C64>) -> Vector2<C64> {
    let inv_sqrt2 = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i = Complex::new(0.0, 1.0);
    Vector2::new(
        (l.x - i * l.y) * inv_sqrt2,
        (l.x + i * l.y) * inv_sqrt2,
    )
}

/// An ordered set of detection directions inside an angular cap.
///
/// Invariants: every mode lies inside the cap (`k.k0 >= cos(aperture)`),
/// no two modes coincide, ordering is exactly as constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    reference: Direction,
    aperture: f64,
    modes: Vec<Direction>,
}

impl ModeSet {
    pub fn new(reference: Direction, aperture: f64, modes: Vec<Direction>) -> Result<Self> {
        if !aperture.is_finite() || !(0.0..HALF_PI).contains(&aperture) {
            return Err(Error::domain(format!(
                "aperture {aperture} outside [0, pi/2)"
            )));
        }
        if modes.is_empty() {
            return Err(Error::domain("mode set must contain at least one mode"));
        }
        let k0 = reference.unit_vector();
        let cos_cap = aperture.cos();
        for (i, m) in modes.iter().enumerate() {
            // Slack covers modes generated exactly on the cap boundary.
            if m.unit_vector().dot(&k0) < cos_cap - 1e-12 {
                return Err(Error::domain(format!("mode {i} lies outside the aperture")));
            }
        }
        for i in 0..modes.len() {
            for j in (i + 1)..modes.len() {
                if modes[i].unit_vector().dot(&modes[j].unit_vector()) > 1.0 - 1e-12 {
                    return Err(Error::domain(format!("modes {i} and {j} coincide")));
                }
            }
        }
        Ok(ModeSet {
            reference,
            aperture,
            modes,
        })
    }

    pub fn reference(&self) -> &Direction {
        &self.reference
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn mode(&self, i: usize) -> &Direction {
        &self.modes[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Direction> {
        self.modes.iter()
    }

    /// Index of a direction in this set, by exact angle equality.
    pub fn index_of(&self, d: &Direction) -> Option<usize> {
        self.modes.iter().position(|m| m == d)
    }

    /// Sharp-cone detection test against this set's reference and aperture.
    pub fn in_aperture(&self, d: &Direction) -> bool {
        d.unit_vector().dot(&self.reference.unit_vector()) >= self.aperture.cos()
    }

    /// Serializes to JSON with 17-significant-digit floats; output is
    /// byte-stable for equal inputs.
    pub fn to_json(&self) -> String {
        let dir = |d: &Direction| {
            format!(
                "{{\"theta\":{},\"phi\":{}}}",
                fmt_f64(d.theta),
                fmt_f64(d.phi)
            )
        };
        let body: Vec<String> = self.modes.iter().map(dir).collect();
        format!(
            "{{\"reference\":{},\"aperture\":{},\"modes\":[{}]}}",
            dir(&self.reference),
            fmt_f64(self.aperture),
            body.join(",")
        )
    }

    /// Parses the [`ModeSet::to_json`] format. Unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("mode set JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::config("mode set JSON must be an object"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "reference" | "aperture" | "modes") {
                return Err(Error::config(format!("unknown mode set key: {key}")));
            }
        }
        let dir = |v: &serde_json::Value, what: &str| -> Result<Direction> {
            let o = v
                .as_object()
                .ok_or_else(|| Error::config(format!("{what} must be an object")))?;
            for key in o.keys() {
                if !matches!(key.as_str(), "theta" | "phi") {
                    return Err(Error::config(format!("unknown {what} key: {key}")));
                }
            }
            let num = |k: &str| -> Result<f64> {
                o.get(k)
                    .and_then(|x| x.as_f64())
                    .ok_or_else(|| Error::config(format!("{what}.{k} must be a number")))
            };
            Direction::new(num("theta")?, num("phi")?)
        };
        let reference = dir(
            obj.get("reference")
                .ok_or_else(|| Error::config("missing reference"))?,
            "reference",
        )?;
        let aperture = obj
            .get("aperture")
            .and_then(|x| x.as_f64())
            .ok_or_else(|| Error::config("aperture must be a number"))?;
        let raw_modes = obj
            .get("modes")
            .and_then(|x| x.as_array())
            .ok_or_else(|| Error::config("modes must be an array"))?;
        let mut modes = Vec::with_capacity(raw_modes.len());
        for m in raw_modes {
            modes.push(dir(m, "mode")?);
        }
        ModeSet::new(reference, aperture, modes)
    }
}

/// Deterministic grid of directions covering the cap around `reference`:
/// the reference itself, then `n_theta` rings at polar offsets
/// `aperture * i / n_theta`, each holding `n_phi` equally spaced
/// azimuths around the reference axis. Ring azimuth zero lies along the
/// reference frame's first axis.
///
/// A zero aperture yields exactly the reference direction.
pub fn cap_grid(
    reference: &Direction,
    aperture: f64,
    n_theta: usize,
    n_phi: usize,
) -> Result<ModeSet> {
    if !aperture.is_finite() || !(0.0..HALF_PI).contains(&aperture) {
        return Err(Error::domain(format!(
            "aperture {aperture} outside [0, pi/2)"
        )));
    }
    if n_theta == 0 || n_phi == 0 {
        return Err(Error::domain("grid counts must be at least 1"));
    }
    let mut modes = vec![*reference];
    if aperture > 0.0 {
        let frame = local_frame(reference);
        for i in 1..=n_theta {
            let alpha = aperture * (i as f64) / (n_theta as f64);
            let (sa, ca) = (alpha.sin(), alpha.cos());
            for j in 0..n_phi {
                let az = TAU * (j as f64) / (n_phi as f64);
                let local = Vector3::new(sa * az.cos(), sa * az.sin(), ca);
                let v = frame.to_global(&local);
                let d = Direction::from_unit_vector(&v).map_err(|_| {
                    Error::domain("cap grid extends past the forward hemisphere")
                })?;
                modes.push(d);
            }
        }
    }
    ModeSet::new(*reference, aperture, modes)
}

/// Expresses a direction (given in laboratory coordinates) relative to
/// another frame, together with the 2x2 rotation carrying linear
/// amplitudes from the direction's laboratory local frame to the local
/// frame it gets in the target frame's coordinates.
///
/// Fails if the direction leaves the target frame's forward hemisphere.
pub fn direction_in_frame(d: &Direction, frame: &LocalFrame) -> Result<(Direction, Matrix2<f64>)> {
    let u = d.unit_vector();
    let local = frame.coordinates_of(&u);
    let theta = local.z.clamp(-1.0, 1.0).acos();
    if theta >= HALF_PI {
        return Err(Error::singular(
            "mode leaves the forward hemisphere of the polarizer frame",
        ));
    }
    let phi = local.y.atan2(local.x);
    let rel = Direction::new(theta, phi)?;

    let lab = local_frame(d);
    let rel_frame_local = local_frame(&rel);
    let rel_x = frame.to_global(&rel_frame_local.x_axis);
    let rel_y = frame.to_global(&rel_frame_local.y_axis);
    // Both pairs span the plane orthogonal to u; the map between them is
    // a rotation about u.
    let r2 = Matrix2::new(
        rel_x.dot(&lab.x_axis),
        rel_x.dot(&lab.y_axis),
        rel_y.dot(&lab.x_axis),
        rel_y.dot(&lab.y_axis),
    );
    Ok((rel, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn direction_canonicalizes_phi() {
        let d = Direction::new(0.3, -0.5).unwrap();
        assert_relative_eq!(d.phi(), TAU - 0.5, epsilon = 1e-12);
        let d = Direction::new(0.3, TAU + 0.25).unwrap();
        assert_relative_eq!(d.phi(), 0.25, epsilon = 1e-12);
        assert!(Direction::new(HALF_PI, 0.0).is_err());
        assert!(Direction::new(-0.1, 0.0).is_err());
        assert!(Direction::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn local_frame_example_at_pi_4() {
        let d = Direction::new(std::f64::consts::FRAC_PI_4, 0.0).unwrap();
        let f = local_frame(&d);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(f.x_axis.x, s, epsilon = 1e-15);
        assert_relative_eq!(f.x_axis.z, -s, epsilon = 1e-15);
        assert_relative_eq!(f.y_axis.y, 1.0, epsilon = 1e-15);
        assert_relative_eq!(f.z_axis.x, s, epsilon = 1e-15);
        assert_relative_eq!(f.z_axis.z, s, epsilon = 1e-15);
    }

    #[test]
    fn helicity_basis_at_normal_incidence() {
        let f = helicity_basis(&local_frame(&Direction::new(0.0, 0.0).unwrap()));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(f.f_plus.x.re, s, epsilon = 1e-15);
        assert_relative_eq!(f.f_plus.y.im, s, epsilon = 1e-15);
        assert_relative_eq!(f.f_minus.y.im, -s, epsilon = 1e-15);
    }

    #[test]
    fn helicity_conversion_round_trip() {
        let h = Vector2::new(Complex::new(0.3, -0.4), Complex::new(0.1, 0.86));
        let back = linear_to_helicity(&helicity_to_linear(&h));
        assert!((back - h).norm() < 1e-15);
        // unitarity
        let l = helicity_to_linear(&h);
        assert_relative_eq!(l.norm_squared(), h.norm_squared(), epsilon = 1e-14);
    }

    #[test]
    fn cap_grid_mode_count() {
        let reference = Direction::new(0.0, 0.0).unwrap();
        let set = cap_grid(&reference, 0.3, 3, 4).unwrap();
        assert_eq!(set.len(), 13);
        assert_eq!(set.mode(0), &reference);
        for m in set.iter() {
            assert!(set.in_aperture(m) || {
                // outer ring sits exactly on the cap; allow an ulp
                m.unit_vector().dot(&reference.unit_vector()) >= 0.3f64.cos() - 1e-12
            });
        }
    }

    #[test]
    fn cap_grid_zero_aperture() {
        let reference = Direction::new(0.2, 1.0).unwrap();
        let set = cap_grid(&reference, 0.0, 5, 7).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.mode(0), &reference);
    }

    #[test]
    fn cap_grid_rejects_bad_input() {
        let reference = Direction::new(0.0, 0.0).unwrap();
        assert!(cap_grid(&reference, 2.0, 3, 4).is_err());
        assert!(cap_grid(&reference, 0.3, 0, 4).is_err());
        // tilted reference whose cap would cross the hemisphere edge
        let tilted = Direction::new(1.4, 0.0).unwrap();
        assert!(cap_grid(&tilted, 0.4, 2, 8).is_err());
    }

    #[test]
    fn mode_set_rejects_duplicates_and_outliers() {
        let reference = Direction::new(0.0, 0.0).unwrap();
        let a = Direction::new(0.1, 0.0).unwrap();
        assert!(ModeSet::new(reference, 0.2, vec![a, a]).is_err());
        let far = Direction::new(0.5, 0.0).unwrap();
        assert!(ModeSet::new(reference, 0.2, vec![a, far]).is_err());
        // same unit vector through different phi at theta=0
        let z1 = Direction::new(0.0, 1.0).unwrap();
        let z2 = Direction::new(0.0, 2.0).unwrap();
        assert!(ModeSet::new(reference, 0.2, vec![z1, z2]).is_err());
    }

    #[test]
    fn mode_set_json_round_trip() {
        let reference = Direction::new(0.1, 0.2).unwrap();
        let set = cap_grid(&reference, 0.25, 2, 3).unwrap();
        let text = set.to_json();
        let back = ModeSet::from_json(&text).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.to_json(), text);
        assert!(ModeSet::from_json("{\"reference\":{\"theta\":0,\"phi\":0},\"aperture\":0.1,\"modes\":[{\"theta\":0,\"phi\":0}],\"extra\":1}").is_err());
    }

    #[test]
    fn direction_in_identity_frame_is_trivial() {
        let d = Direction::new(0.7, 2.3).unwrap();
        let (rel, r2) = direction_in_frame(&d, &LocalFrame::identity()).unwrap();
        assert_relative_eq!(rel.theta(), d.theta(), epsilon = 1e-12);
        assert_relative_eq!(rel.phi(), d.phi(), epsilon = 1e-12);
        assert!((r2 - Matrix2::identity()).norm() < 1e-12);
    }

    #[test]
    fn direction_in_tilted_frame_preserves_angle_to_axis() {
        let axis = Direction::new(0.4, 1.1).unwrap();
        let frame = local_frame(&axis);
        let d = Direction::new(0.55, 1.3).unwrap();
        let (rel, r2) = direction_in_frame(&d, &frame).unwrap();
        let expect = d.unit_vector().dot(&axis.unit_vector()).acos();
        assert_relative_eq!(rel.theta(), expect, epsilon = 1e-12);
        // r2 is a rotation
        assert_relative_eq!(r2.determinant(), 1.0, epsilon = 1e-12);
        assert!((r2.transpose() * r2 - Matrix2::identity()).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn frame_is_orthonormal_right_handed(theta in 0.0..1.5f64, phi in 0.0..TAU) {
            let d = Direction::new(theta, phi).unwrap();
            let f = local_frame(&d);
            prop_assert!(f.orthonormality_defect() < 1e-12);
            prop_assert!((f.x_axis.cross(&f.y_axis) - f.z_axis).norm() < 1e-12);
            prop_assert!((f.z_axis - d.unit_vector()).norm() < 1e-15);
        }

        #[test]
        fn unit_vector_round_trip(theta in 1e-6..1.5f64, phi in 0.0..TAU) {
            let d = Direction::new(theta, phi).unwrap();
            let back = Direction::from_unit_vector(&d.unit_vector()).unwrap();
            prop_assert!((back.unit_vector() - d.unit_vector()).norm() < 1e-12);
        }

        #[test]
        fn helicity_vectors_stay_orthonormal(theta in 0.0..1.5f64, phi in 0.0..TAU) {
            let f = helicity_basis(&local_frame(&Direction::new(theta, phi).unwrap()));
            let ip = |a: &Vector3<C64>, b: &Vector3<C64>| -> C64 {
                a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
            };
            prop_assert!((ip(&f.f_plus, &f.f_plus).re - 1.0).abs() < 1e-12);
            prop_assert!((ip(&f.f_minus, &f.f_minus).re - 1.0).abs() < 1e-12);
            prop_assert!(ip(&f.f_plus, &f.f_minus).norm() < 1e-12);
        }
    }

    #[test]
    fn cap_grid_is_bit_deterministic() {
        let reference = Direction::new(0.2, 1.1).unwrap();
        let a = cap_grid(&reference, 0.3, 3, 5).unwrap();
        let b = cap_grid(&reference, 0.3, 3, 5).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.theta().to_bits(), y.theta().to_bits());
            assert_eq!(x.phi().to_bits(), y.phi().to_bits());
        }
    }
}
