//! Bell-CHSH machinery for polarization pairs behind tilted polarizers.
//!
//! The polarizer settings live on the Bloch sphere as analyzer vectors.
//! At normal incidence the polarizer angle beta maps to the familiar
//! (sin 2b, 0, cos 2b); at oblique incidence the map distorts, and the
//! optimum of the CHSH combination moves. Arm A keeps the fixed pair
//! a = z, a' = x (their polarizer angles 0 and pi/4); the search space
//! is the two arm-B angles (beta, delta).

use nalgebra::{Matrix3, Vector3, Vector4};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::pauli::{dot_sigma, hermiticity_defect4, sigma, C64, Mat4};
use crate::twophoton::MomentumMixture;

/// The four measurement directions of a CHSH run, as Bloch vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CHSHSettings {
    a: Vector3<f64>,
    a_prime: Vector3<f64>,
    b: Vector3<f64>,
    b_prime: Vector3<f64>,
}

impl CHSHSettings {
    pub fn new(
        a: Vector3<f64>,
        a_prime: Vector3<f64>,
        b: Vector3<f64>,
        b_prime: Vector3<f64>,
    ) -> Result<Self> {
        for (name, v) in [("a", &a), ("a_prime", &a_prime), ("b", &b), ("b_prime", &b_prime)] {
            if (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::domain(format!(
                    "setting {name} must be a unit vector, |{name}| = {}",
                    v.norm()
                )));
            }
        }
        Ok(CHSHSettings { a, a_prime, b, b_prime })
    }

    pub fn a(&self) -> &Vector3<f64> {
        &self.a
    }

    pub fn a_prime(&self) -> &Vector3<f64> {
        &self.a_prime
    }

    pub fn b(&self) -> &Vector3<f64> {
        &self.b
    }

    pub fn b_prime(&self) -> &Vector3<f64> {
        &self.b_prime
    }
}

/// Maximally entangled two-qubit basis state, index 1..=4, in the
/// (xx, xy, yx, yy) ordering.
pub fn bell_schmidt(index: usize) -> Result<Vector4<C64>> {
    let r = 1.0 / 2f64.sqrt();
    let v = match index {
        1 => Vector4::new(r, 0.0, 0.0, r),
        2 => Vector4::new(r, 0.0, 0.0, -r),
        3 => Vector4::new(0.0, r, r, 0.0),
        4 => Vector4::new(0.0, r, -r, 0.0),
        other => {
            return Err(Error::domain(format!(
                "Bell-Schmidt index must be 1..=4, got {other}"
            )))
        }
    };
    Ok(v.map(|x| C64::new(x, 0.0)))
}

pub fn bell_schmidt_density(index: usize) -> Result<Mat4> {
    let v = bell_schmidt(index)?;
    Ok(v * v.adjoint())
}

/// B = (a.s)(x)((b+b').s) + (a'.s)(x)((b-b').s). Hermitian with
/// spectrum inside [-2*sqrt(2), 2*sqrt(2)].
pub fn chsh_operator(s: &CHSHSettings) -> Mat4 {
    let plus = s.b + s.b_prime;
    let minus = s.b - s.b_prime;
    dot_sigma(&s.a).kronecker(&dot_sigma(&plus))
        + dot_sigma(&s.a_prime).kronecker(&dot_sigma(&minus))
}

fn validate_density4(rho: &Mat4) -> Result<()> {
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::domain("density matrix has non-finite entries"));
    }
    if hermiticity_defect4(rho) > 1e-9 {
        return Err(Error::domain("density matrix is not Hermitian"));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::domain(format!(
            "density matrix trace must be 1, got {} + {}i",
            tr.re, tr.im
        )));
    }
    Ok(())
}

/// Tr(rho B) for the given settings.
pub fn chsh_value(rho: &Mat4, s: &CHSHSettings) -> Result<f64> {
    validate_density4(rho)?;
    let product = rho * chsh_operator(s);
    let tr = product.trace();
    debug_assert!(tr.im.abs() < 1e-9);
    Ok(tr.re)
}

/// Bloch vector of the polarizer analyzer state for angle `beta` at
/// incidence tilt `theta` (azimuth `phi` of the incidence direction in
/// the polarizer frame). Unit norm by construction; singular where the
/// transmitted state degenerates (theta -> pi/2 with cos(beta - phi)
/// -> +-1).
pub fn analyzer_vector(beta: f64, theta: f64, phi: f64) -> Result<Vector3<f64>> {
    if !beta.is_finite() || !theta.is_finite() || !phi.is_finite() {
        return Err(Error::domain("analyzer angles must be finite"));
    }
    let bb = beta - phi;
    let (sb, cb) = bb.sin_cos();
    let (st, ct) = theta.sin_cos();
    let den = 1.0 - cb * cb * st * st;
    if den < 1e-12 {
        return Err(Error::singular(format!(
            "analyzer degenerates at beta-phi = {bb}, theta = {theta}"
        )));
    }
    Ok(Vector3::new(
        2.0 * ct * sb * cb / den,
        0.0,
        (ct * ct * cb * cb - sb * sb) / den,
    ))
}

/// The settings pair (b, b') for arm-B angles (beta, delta) at tilt
/// theta.
pub fn analyzer_vectors(
    beta: f64,
    delta: f64,
    theta: f64,
    phi: f64,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    Ok((
        analyzer_vector(beta, theta, phi)?,
        analyzer_vector(delta, theta, phi)?,
    ))
}

/// CHSH value of Bell state `which` at arm-B tilt theta, with both
/// arms' polarizer angles held at their theta = 0 optima. Closed form.
/// States 1 and 2 share a curve, as do 3 and 4.
pub fn closed_form_b(theta: f64, which: usize) -> Result<f64> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(Error::domain(format!(
            "tilt must lie in [0, pi/2], got {theta}"
        )));
    }
    let ct = theta.cos();
    let half = (theta / 2.0).cos().powi(2);
    let root8 = 2.0 * 2f64.sqrt();
    match which {
        1 | 2 => {
            let k = 3.0 + root8;
            Ok(-4.0 * half * (1.0 - k * ct) / (1.0 + k * ct * ct))
        }
        3 | 4 => {
            let k = 3.0 - root8;
            Ok(4.0 * half * (1.0 - k * ct) / (1.0 + k * ct * ct))
        }
        other => Err(Error::domain(format!(
            "curve index must be 1..=4, got {other}"
        ))),
    }
}

/// Arm-B polarizer angle that restores the maximal violation of Bell
/// state `which` at tilt theta (its partner angle is pi - beta). The
/// tangent of the optimal half-turn scales with cos(theta).
pub fn beta_optimal(theta: f64, which: usize) -> Result<f64> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(Error::domain(format!(
            "tilt must lie in [0, pi/2], got {theta}"
        )));
    }
    let ct = theta.cos();
    let r = 2f64.sqrt();
    match which {
        1 => Ok(((r - 1.0) * ct).atan()),
        2 => Ok(PI - ((r - 1.0) * ct).atan()),
        3 => Ok(((1.0 + r) * ct).atan()),
        4 => Ok(PI - ((1.0 + r) * ct).atan()),
        other => Err(Error::domain(format!(
            "state index must be 1..=4, got {other}"
        ))),
    }
}

/// What the optimizer runs against: either one density matrix with a
/// single arm-B tilt, or a momentum mixture whose terms carry their own
/// tilts. Arm A's polarizer angles stay at 0 and pi/4 throughout (its
/// azimuth is taken as 0).
#[derive(Debug, Clone)]
pub enum ChshTarget {
    State { rho: Mat4, tilt: f64 },
    Mixture(MomentumMixture),
}

impl ChshTarget {
    pub fn state(rho: Mat4, tilt: f64) -> Result<Self> {
        validate_density4(&rho)?;
        if !(tilt.is_finite() && (0.0..=FRAC_PI_2).contains(&tilt)) {
            return Err(Error::domain(format!(
                "tilt must lie in [0, pi/2], got {tilt}"
            )));
        }
        Ok(ChshTarget::State { rho, tilt })
    }

    pub fn mixture(m: MomentumMixture) -> Self {
        ChshTarget::Mixture(m)
    }

    fn for_each_term(&self, mut f: impl FnMut(f64, &Mat4, f64, f64) -> Result<()>) -> Result<()> {
        match self {
            ChshTarget::State { rho, tilt } => f(1.0, rho, 0.0, *tilt),
            ChshTarget::Mixture(m) => {
                for t in m.terms() {
                    f(t.weight, &t.rho, t.tilt_a, t.tilt_b)?;
                }
                Ok(())
            }
        }
    }
}

/// CHSH average of the target at arm-B angles (beta, delta): each term
/// is evaluated with its own tilts through the full operator and the
/// results are weight-averaged.
pub fn settings_value(target: &ChshTarget, beta: f64, delta: f64, phi: f64) -> Result<f64> {
    let mut total = 0.0;
    target.for_each_term(|w, rho, tilt_a, tilt_b| {
        let a = analyzer_vector(0.0, tilt_a, 0.0)?;
        let a_prime = analyzer_vector(FRAC_PI_4, tilt_a, 0.0)?;
        let (b, b_prime) = analyzer_vectors(beta, delta, tilt_b, phi)?;
        let s = CHSHSettings::new(a, a_prime, b, b_prime)?;
        total += w * chsh_value(rho, &s)?;
        Ok(())
    })?;
    Ok(total)
}

/// 3x3 correlation block M_ij = Tr(rho sigma_i (x) sigma_j), i, j in
/// 1..=3.
fn correlation_matrix(rho: &Mat4) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| {
        let op = sigma(i + 1).kronecker(&sigma(j + 1));
        (rho * op).trace().re
    })
}

/// Precomputed per-term geometry. Because arm A is fixed, the CHSH
/// average splits into a beta-only part plus a delta-only part:
/// value(beta, delta) = sum_j w_j u_j . b_j(beta) + sum_j w_j v_j .
/// b_j(delta), with u = M^T (a + a'), v = M^T (a - a').
struct SeparableEval {
    terms: Vec<(f64, Vector3<f64>, Vector3<f64>, f64)>,
    phi: f64,
}

impl SeparableEval {
    fn build(target: &ChshTarget, phi: f64) -> Result<Self> {
        let mut terms = Vec::new();
        target.for_each_term(|w, rho, tilt_a, tilt_b| {
            validate_density4(rho)?;
            let a = analyzer_vector(0.0, tilt_a, 0.0)?;
            let a_prime = analyzer_vector(FRAC_PI_4, tilt_a, 0.0)?;
            let m = correlation_matrix(rho);
            let u = m.transpose() * (a + a_prime);
            let v = m.transpose() * (a - a_prime);
            terms.push((w, u, v, tilt_b));
            Ok(())
        })?;
        Ok(SeparableEval { terms, phi })
    }

    fn beta_part(&self, beta: f64) -> Result<f64> {
        let mut total = 0.0;
        for (w, u, _, tilt) in &self.terms {
            total += w * u.dot(&analyzer_vector(beta, *tilt, self.phi)?);
        }
        Ok(total)
    }

    fn delta_part(&self, delta: f64) -> Result<f64> {
        let mut total = 0.0;
        for (w, _, v, tilt) in &self.terms {
            total += w * v.dot(&analyzer_vector(delta, *tilt, self.phi)?);
        }
        Ok(total)
    }

    fn value(&self, beta: f64, delta: f64) -> Result<f64> {
        Ok(self.beta_part(beta)? + self.delta_part(delta)?)
    }
}

/// A refined extremum of the CHSH average. The sign of `value` is kept:
/// the upper and lower series are distinct results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalPoint {
    pub beta: f64,
    pub delta: f64,
    pub value: f64,
}

fn golden_max(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn refine(
    eval: &SeparableEval,
    mut beta: f64,
    mut delta: f64,
    span: f64,
    tol: f64,
) -> Result<OptimalPoint> {
    let sign = if eval.value(beta, delta)? >= 0.0 { 1.0 } else { -1.0 };
    for _ in 0..64 {
        let nb = golden_max(&|x| Ok(sign * eval.beta_part(x)?), beta - span, beta + span, tol)?;
        let nd = golden_max(&|x| Ok(sign * eval.delta_part(x)?), delta - span, delta + span, tol)?;
        let moved = (nb - beta).abs().max((nd - delta).abs());
        beta = nb;
        delta = nd;
        if moved < tol {
            break;
        }
    }
    Ok(OptimalPoint {
        beta: beta.rem_euclid(PI),
        delta: delta.rem_euclid(PI),
        value: eval.value(beta, delta)?,
    })
}

fn torus_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % PI;
    d.min(PI - d)
}

/// Scans (beta, delta) in [0, pi)^2 at the given step (snapped so the
/// grid tiles the torus evenly), refines every local maximum of the
/// absolute CHSH average by alternating golden-section descent, and
/// returns the distinct extrema whose |value| comes within 1e-6 of the
/// best, sorted by beta. Both signs of the extremal value are reported.
pub fn optimize_settings(
    target: &ChshTarget,
    phi: f64,
    grid_step: f64,
    refine_tol: f64,
) -> Result<Vec<OptimalPoint>> {
    if !(grid_step > 0.0 && grid_step <= PI / 8.0 + 1e-12) {
        return Err(Error::domain(format!(
            "grid step must lie in (0, pi/8], got {grid_step}"
        )));
    }
    if !(refine_tol.is_finite() && refine_tol > 0.0) {
        return Err(Error::domain(format!(
            "refine tolerance must be positive, got {refine_tol}"
        )));
    }
    let eval = SeparableEval::build(target, phi)?;
    let n = ((PI / grid_step).round() as usize).max(4);
    let step = PI / n as f64;
    let angles: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    let beta_parts = angles
        .iter()
        .map(|&x| eval.beta_part(x))
        .collect::<Result<Vec<_>>>()?;
    let delta_parts = angles
        .iter()
        .map(|&x| eval.delta_part(x))
        .collect::<Result<Vec<_>>>()?;

    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    let mut grid_best: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = (beta_parts[i] + delta_parts[j]).abs();
            grid_best = grid_best.max(v);
            let mut local_max = true;
            'neighbors: for di in [n - 1, 0, 1] {
                for dj in [n - 1, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let w = (beta_parts[(i + di) % n] + delta_parts[(j + dj) % n]).abs();
                    if w > v {
                        local_max = false;
                        break 'neighbors;
                    }
                }
            }
            if local_max {
                candidates.push((i, j, v));
            }
        }
    }
    // a refinement step can lift a grid value by at most the local
    // curvature over one cell, well under this margin
    candidates.retain(|c| c.2 >= grid_best - 0.01);
    candidates.sort_by(|x, y| y.2.total_cmp(&x.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));
    candidates.truncate(64);

    let mut refined: Vec<OptimalPoint> = Vec::new();
    for (i, j, _) in candidates {
        let p = refine(&eval, angles[i], angles[j], step, refine_tol)?;
        let duplicate = refined.iter_mut().find(|q| {
            torus_distance(p.beta, q.beta).hypot(torus_distance(p.delta, q.delta)) < 1e-3
        });
        match duplicate {
            Some(q) => {
                if p.value.abs() > q.value.abs()
                    || (p.value.abs() == q.value.abs() && p.beta < q.beta)
                {
                    *q = p;
                }
            }
            None => refined.push(p),
        }
    }
    let best = refined.iter().fold(0.0f64, |m, p| m.max(p.value.abs()));
    refined.retain(|p| p.value.abs() >= best - 1e-6);
    refined.sort_by(|x, y| x.beta.total_cmp(&y.beta).then(x.delta.total_cmp(&y.delta)));
    Ok(refined)
}

/// Best achievable |CHSH average| for Bell state `state_index` detected
/// as an equal-settings mixture over the given arm-B tilts. Returns the
/// absolute optimum and the signed extremum it came from (ties resolved
/// toward the smallest beta).
pub fn degradation_curve(
    state_index: usize,
    tilts: &[f64],
    weights: &[f64],
    grid_step: f64,
    refine_tol: f64,
) -> Result<(f64, OptimalPoint)> {
    if tilts.is_empty() || tilts.len() != weights.len() {
        return Err(Error::domain(
            "mixture needs matching, nonempty tilt and weight lists",
        ));
    }
    let rho = bell_schmidt_density(state_index)?;
    let terms = tilts
        .iter()
        .zip(weights)
        .map(|(&tb, &w)| crate::twophoton::MixtureTerm::new(w, rho, 0.0, tb))
        .collect();
    let mixture = MomentumMixture::new(terms)?;
    let points = optimize_settings(&ChshTarget::mixture(mixture), 0.0, grid_step, refine_tol)?;
    let best = points
        .iter()
        .copied()
        .max_by(|x, y| x.value.abs().total_cmp(&y.value.abs()).then(y.beta.total_cmp(&x.beta)))
        .ok_or_else(|| Error::domain("no extremum found for the mixture"))?;
    Ok((best.value.abs(), best))
}
