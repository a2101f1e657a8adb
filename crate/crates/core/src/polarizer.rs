//! An ideal linear polarizer crossed at an angle by the light it filters.
//!
//! The polarizer transmits the field component along its axis p =
//! (cos b, sin b, 0) and lives in the plane z = 0 of its own frame. A
//! photon arriving along direction z' at polar angle theta does not see
//! the clean 2D Malus projector; what survives is p projected onto the
//! plane transverse to z', renormalized. Everything in this module is
//! expressed in the arriving direction's local frame and depends on the
//! azimuth only through b - phi.

use nalgebra::{Matrix2, Vector3};

use crate::error::{Error, Result};
use crate::modes::{local_frame, Direction, LocalFrame};

/// Smallest transverse norm squared treated as non-degenerate.
/// Below this the incidence is within ~1e-9 of lying along the
/// polarizer axis and the transmitted polarization is undefined.
const DEGENERACY_FLOOR: f64 = 1e-18;

/// Linear polarizer: transmission axis at angle `beta` in its frame's
/// x-y plane, surface normal along the frame's z axis.
#[derive(Debug, Clone)]
pub struct Polarizer {
    beta: f64,
    frame: LocalFrame,
}

impl Polarizer {
    /// Polarizer in the laboratory frame.
    pub fn new(beta: f64) -> Result<Self> {
        Polarizer::with_frame(beta, LocalFrame::identity())
    }

    /// Polarizer whose surface normal is the frame's z axis.
    pub fn with_frame(beta: f64, frame: LocalFrame) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::domain("polarizer angle must be finite"));
        }
        Ok(Polarizer { beta, frame })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn frame(&self) -> &LocalFrame {
        &self.frame
    }

    /// Transmission axis in laboratory coordinates.
    pub fn orientation(&self) -> Vector3<f64> {
        self.frame.x_axis * self.beta.cos() + self.frame.y_axis * self.beta.sin()
    }

    /// Surface normal in laboratory coordinates.
    pub fn normal(&self) -> Vector3<f64> {
        self.frame.z_axis
    }
}

/// Transverse projector onto the transmitted polarization, expressed in
/// the incidence direction's local linear basis (x', y'). Real,
/// symmetric, idempotent, trace 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix {
    t: Matrix2<f64>,
}

impl JonesMatrix {
    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.t
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.t[(i, j)]
    }
}

fn check_incidence(beta: f64, d: &Direction) -> Result<(f64, f64)> {
    if !beta.is_finite() {
        return Err(Error::domain("polarizer angle must be finite"));
    }
    let bb = beta - d.phi();
    let st = d.theta().sin();
    // den = 1 - (z'.p)^2, the squared norm of p's transverse part.
    let den = 1.0 - st * st * bb.cos() * bb.cos();
    if den < DEGENERACY_FLOOR {
        return Err(Error::singular(
            "incidence direction lies along the polarizer axis",
        ));
    }
    Ok((bb, den))
}

/// Unit transmitted polarization vector and the transverse norm D of the
/// polarizer axis, for incidence along `d` (angles relative to the
/// polarizer frame). The vector is returned in polarizer-frame
/// coordinates; its components along the incidence local frame are
/// (p.x'/D, p.y'/D).
pub fn transmitted_polarization(pol: &Polarizer, d: &Direction) -> Result<(Vector3<f64>, f64)> {
    let (_, den) = check_incidence(pol.beta(), d)?;
    let p = Vector3::new(pol.beta().cos(), pol.beta().sin(), 0.0);
    let z = d.unit_vector();
    let dn = den.sqrt();
    let e = (p - z * z.dot(&p)) / dn;
    Ok((e, dn))
}

/// Jones projector for a polarizer at angle `beta` seen from incidence
/// direction `d` (angles relative to the polarizer frame), in the (x',
/// y') basis:
///
/// T = [ cos^2 t cos^2 B,  cos t sin B cos B ]  /  (1 - sin^2 t cos^2 B)
///     [ cos t sin B cos B,        sin^2 B   ]
///
/// with B = beta - phi. At normal incidence this is the Malus projector
/// onto (cos B, sin B).
pub fn jones_matrix(pol: &Polarizer, d: &Direction) -> Result<JonesMatrix> {
    let (bb, den) = check_incidence(pol.beta(), d)?;
    let ct = d.theta().cos();
    let (sb, cb) = (bb.sin(), bb.cos());
    let t = Matrix2::new(
        ct * ct * cb * cb,
        ct * sb * cb,
        ct * sb * cb,
        sb * sb,
    ) / den;
    Ok(JonesMatrix { t })
}

/// Overlap of the transmitted states for two polarizer angles at the
/// same incidence direction. Both states are unit vectors in the
/// incidence polarization plane, so the result lies in [-1, 1]; 1 at
/// alpha = beta. At normal incidence it reduces to cos(alpha - beta).
pub fn state_overlap(alpha: f64, beta: f64, d: &Direction) -> Result<f64> {
    let (bb, den_b) = check_incidence(beta, d)?;
    let (aa, den_a) = check_incidence(alpha, d)?;
    let ct2 = d.theta().cos().powi(2);
    let num = ct2 * aa.cos() * bb.cos() + aa.sin() * bb.sin();
    Ok(num / (den_a * den_b).sqrt())
}

/// Angular separation xi between a polarizer angle `beta` and the angle
/// `beta + xi` whose transmitted state is orthogonal to it, for
/// incidence tilted by `theta` at azimuth zero. Equals pi/2 at normal
/// incidence and drifts away from it as the tilt grows.
pub fn orthogonality_angle(beta: f64, theta: f64) -> f64 {
    let st2 = theta.sin().powi(2);
    let ct2 = theta.cos().powi(2);
    let (sb, cb) = (beta.sin(), beta.cos());
    let num = sb * cb * st2;
    let den = (1.0 - cb * cb * st2 * (1.0 + ct2)).sqrt();
    std::f64::consts::PI - (num / den).clamp(-1.0, 1.0).acos()
}

/// Change of basis between a tilted mode's linear polarization states
/// and the polarizer-frame x/y states.
///
/// Row s, column a' holds the overlap of the polarizer-frame state s
/// (the normalized transverse projection of x or y) with the mode's
/// local basis state a'. Rows are unit vectors; the matrix is real but
/// not orthogonal away from normal incidence. At theta = 0 it is the
/// rotation by the azimuth phi.
#[derive(Debug, Clone, PartialEq)]
pub struct WMatrix {
    w: Matrix2<f64>,
    incidence: Direction,
}

impl WMatrix {
    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.w
    }

    pub fn incidence(&self) -> &Direction {
        &self.incidence
    }
}

/// W matrix for incidence `d` (angles relative to the polarizer frame):
///
/// W = [ cos p cos t / sqrt(1 - cos^2 p sin^2 t),  -sin p / sqrt(1 - cos^2 p sin^2 t) ]
///     [ sin p cos t / sqrt(1 - sin^2 p sin^2 t),   cos p / sqrt(1 - sin^2 p sin^2 t) ]
pub fn w_matrix(d: &Direction) -> Result<WMatrix> {
    let (st, ct) = (d.theta().sin(), d.theta().cos());
    let (sp, cp) = (d.phi().sin(), d.phi().cos());
    let den_x = 1.0 - cp * cp * st * st;
    let den_y = 1.0 - sp * sp * st * st;
    if den_x < DEGENERACY_FLOOR || den_y < DEGENERACY_FLOOR {
        return Err(Error::singular(
            "polarizer-frame state has no transverse component at this incidence",
        ));
    }
    let (dx, dy) = (den_x.sqrt(), den_y.sqrt());
    let w = Matrix2::new(cp * ct / dx, -sp / dx, sp * ct / dy, cp / dy);
    Ok(WMatrix { w, incidence: *d })
}

/// Bloch vector of a Jones projector: (2 T12, 0, T11 - T22). Unit norm;
/// the y component vanishes because T is real symmetric. At normal
/// incidence this is (sin 2B, 0, cos 2B).
pub fn bloch_vector(j: &JonesMatrix) -> Vector3<f64> {
    let t = j.matrix();
    Vector3::new(2.0 * t[(0, 1)], 0.0, t[(0, 0)] - t[(1, 1)])
}

/// Convenience: the local frame a polarizer presents to modes given in
/// laboratory coordinates.
pub fn polarizer_frame(axis: &Direction) -> LocalFrame {
    local_frame(axis)
}
