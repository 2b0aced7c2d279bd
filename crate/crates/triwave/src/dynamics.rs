//! Closed-system propagation and the classical three-wave comparison.

use crate::action_space::{occupations, StateAmplitudes, SubspaceSpec, TriHamiltonian};
use crate::error::{Result, TriwaveError};
use crate::linalg::symtri_eigh;
use crate::C64;
use ndarray::{Array1, Array2};

/// A dense unitary, checked to satisfy U^dag U = I within 1e-10 (Frobenius).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    pub dim: usize,
    pub entries: Array2<C64>,
}

impl UnitaryMatrix {
    pub fn new(entries: Array2<C64>) -> Result<Self> {
        let dim = entries.nrows();
        if entries.ncols() != dim {
            return Err(TriwaveError::Shape(format!(
                "unitary must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let mut defect = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += entries[[k, i]].conj() * entries[[k, j]];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                defect += (acc - C64::new(target, 0.0)).norm_sqr();
            }
        }
        if defect.sqrt() > 1e-10 {
            return Err(TriwaveError::Domain(format!(
                "matrix is not unitary: ||U^dag U - I||_F = {:.3e}",
                defect.sqrt()
            )));
        }
        Ok(UnitaryMatrix { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryMatrix {
            dim,
            entries: Array2::<C64>::eye(dim),
        }
    }
}

/// Complex three-wave envelopes with their coupling constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub a1: C64,
    pub a2: C64,
    pub a3: C64,
    pub g: C64,
}

impl ClassicalState {
    /// Wave actions (|A1|^2, |A2|^2, |A3|^2).
    pub fn actions(&self) -> (f64, f64, f64) {
        (self.a1.norm_sqr(), self.a2.norm_sqr(), self.a3.norm_sqr())
    }

    /// Conserved combinations (I2, I3) = (|A1|^2+|A3|^2, |A1|^2+|A2|^2).
    pub fn invariants(&self) -> (f64, f64) {
        let (i1, i2, i3) = self.actions();
        (i1 + i3, i1 + i2)
    }

    fn is_finite(&self) -> bool {
        [self.a1, self.a2, self.a3]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// The analytic propagator for the three-level sector {s2=2, s3=s}.
///
/// `s` is allowed to be any real >= 2 so the interpolation family between
/// s = 2 and the large-s limit shares this code path. lambda = sqrt(2(2s-1))
/// is the positive eigenvalue of the sector Hamiltonian.
pub fn unitary_3level(tau: f64, theta: f64, s: f64) -> Result<UnitaryMatrix> {
    if !(s >= 2.0) {
        return Err(TriwaveError::Domain(format!(
            "three-level family needs s >= 2, got {s}"
        )));
    }
    let lam = (2.0 * (2.0 * s - 1.0)).sqrt();
    let (cc, sn) = ((lam * tau).cos(), (lam * tau).sin());
    let den = 2.0 * s - 1.0;
    let eit = C64::new(0.0, theta).exp();
    let e2it = C64::new(0.0, 2.0 * theta).exp();
    let ra = ((s - 1.0) / den).sqrt();
    let rb = (s / den).sqrt();
    let corner = (s * (s - 1.0)).sqrt() / den * (cc - 1.0);
    let mi = C64::new(0.0, -1.0);

    let mut u = Array2::<C64>::zeros((3, 3));
    u[[0, 0]] = C64::new(((s - 1.0) * cc + s) / den, 0.0);
    u[[0, 1]] = mi * eit * ra * sn;
    u[[0, 2]] = e2it * corner;
    u[[1, 0]] = mi * eit.conj() * ra * sn;
    u[[1, 1]] = C64::new(cc, 0.0);
    u[[1, 2]] = mi * eit * rb * sn;
    u[[2, 0]] = e2it.conj() * corner;
    u[[2, 1]] = mi * eit.conj() * rb * sn;
    u[[2, 2]] = C64::new((s * cc + s - 1.0) / den, 0.0);
    UnitaryMatrix::new(u)
}

/// exp(-i h tau) for a Hermitian tridiagonal h with zero diagonal.
///
/// A unit-modulus diagonal gauge absorbs the coupling phase, leaving a real
/// symmetric tridiagonal matrix for the QL eigensolver; the propagator is
/// reassembled from its spectrum.
pub fn expm_tridiagonal(h: &TriHamiltonian, tau: f64) -> UnitaryMatrix {
    let n = h.dim;
    if n == 1 {
        return UnitaryMatrix::identity(1);
    }
    let mut off = vec![0.0f64; n - 1];
    let mut q = vec![C64::new(1.0, 0.0); n];
    for j in 0..n - 1 {
        let t = h.super_diag[j];
        let w = t.norm();
        off[j] = w;
        q[j + 1] = if w > 0.0 { q[j] * t.conj() / w } else { q[j] };
    }
    let diag = vec![0.0f64; n];
    let (vals, vecs) = symtri_eigh(&diag, &off);
    let phases: Vec<C64> = vals.iter().map(|&l| C64::new(0.0, -l * tau).exp()).collect();

    let mut u = Array2::<C64>::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += phases[k] * vecs[[a, k]] * vecs[[b, k]];
            }
            u[[a, b]] = q[a] * acc * q[b].conj();
        }
    }
    UnitaryMatrix::new(u).expect("spectral reconstruction of exp(-i h tau) must be unitary")
}

/// Apply a propagator to sector amplitudes.
pub fn evolve_state(u: &UnitaryMatrix, psi: &StateAmplitudes) -> Result<StateAmplitudes> {
    if u.dim != psi.dim() {
        return Err(TriwaveError::Shape(format!(
            "propagator dimension {} does not match state dimension {}",
            u.dim,
            psi.dim()
        )));
    }
    let alpha = u.entries.dot(&psi.alpha);
    StateAmplitudes::new(alpha)
}

/// Occupation triples after each of N applications of the same gate.
pub fn repeated_application(
    spec: &SubspaceSpec,
    u: &UnitaryMatrix,
    psi0: &StateAmplitudes,
    n: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::with_capacity(n);
    let mut psi = psi0.clone();
    for _ in 0..n {
        psi = evolve_state(u, &psi)?;
        out.push(occupations(spec, &psi)?);
    }
    Ok(out)
}

/// Fixed-step RK4 trajectory of the classical three-wave equations
///
///   dA1/dtau =  g A2 A3
///   dA2/dtau = -g* A1 A3*
///   dA3/dtau = -g* A1 A2*
///
/// The returned trajectory includes the initial state (steps + 1 entries).
pub fn classical_threewave(
    init: &ClassicalState,
    dt: f64,
    steps: usize,
) -> Result<Vec<ClassicalState>> {
    if !(dt > 0.0) {
        return Err(TriwaveError::Domain(format!("step must be positive, got {dt}")));
    }
    let g = init.g;
    let deriv = |a1: C64, a2: C64, a3: C64| -> (C64, C64, C64) {
        (
            g * a2 * a3,
            -g.conj() * a1 * a3.conj(),
            -g.conj() * a1 * a2.conj(),
        )
    };
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = *init;
    out.push(y);
    let half = dt / 2.0;
    let sixth = dt / 6.0;
    for _ in 0..steps {
        let (k1a, k1b, k1c) = deriv(y.a1, y.a2, y.a3);
        let (k2a, k2b, k2c) = deriv(y.a1 + half * k1a, y.a2 + half * k1b, y.a3 + half * k1c);
        let (k3a, k3b, k3c) = deriv(y.a1 + half * k2a, y.a2 + half * k2b, y.a3 + half * k2c);
        let (k4a, k4b, k4c) = deriv(y.a1 + dt * k3a, y.a2 + dt * k3b, y.a3 + dt * k3c);
        y.a1 += sixth * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        y.a2 += sixth * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        y.a3 += sixth * (k1c + 2.0 * k2c + 2.0 * k3c + k4c);
        if !y.is_finite() {
            return Err(TriwaveError::Numerical(
                "classical trajectory left the finite domain".into(),
            ));
        }
        out.push(y);
    }
    Ok(out)
}

/// Quantum curvature d^2<n1>/dtau^2 evaluated algebraically:
/// 2 [ s2 s3 - (2 s2 + 2 s3 + 1) <n1> + 3 <n1^2> ], in units of |g|^2.
pub fn quantum_curvature(spec: &SubspaceSpec, psi: &StateAmplitudes) -> Result<f64> {
    let (n1, _, _) = occupations(spec, psi)?;
    let n1sq = crate::action_space::moment(spec, psi, 1, 2)?;
    let s2 = spec.s2 as f64;
    let s3 = spec.s3 as f64;
    Ok(2.0 * (s2 * s3 - (2.0 * s2 + 2.0 * s3 + 1.0) * n1 + 3.0 * n1sq))
}

/// Classical counterpart 2 [ s2 s3 - 2 (s2 + s3) I1 + 3 I1^2 ].
pub fn classical_curvature(i1: f64, s2: f64, s3: f64) -> f64 {
    2.0 * (s2 * s3 - 2.0 * (s2 + s3) * i1 + 3.0 * i1 * i1)
}

/// Localized packet matching classical seeds with |A1|^2 = p s on a
/// symmetric sector s2 = s3 = s: binomial magnitudes with a phase ramp,
/// alpha_j proportional to sqrt(C(s, j) p^(s-j) (1-p)^j) e^(i chi j).
///
/// The ramp chi plays the role of the classical combination phase
/// theta2 + theta3 - theta1. A nonzero value keeps the matching classical
/// orbit off the separatrix of the integrable flow; chi = pi/2 sits at the
/// extremum of the conserved energy, where the exchange orbit is periodic
/// and starts at a turning point of I1.
pub fn semiclassical_packet(s: u64, p: f64, chi: f64) -> Result<StateAmplitudes> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(TriwaveError::Domain(format!(
            "packet weight must lie in (0, 1], got {p}"
        )));
    }
    let d = (s + 1) as usize;
    let q = 1.0 - p;
    // w_j = C(s, j) p^(s-j) q^j built by the stable ratio recurrence.
    let mut w = vec![0.0f64; d];
    w[0] = p.powi(s as i32);
    for j in 0..d - 1 {
        let jf = j as f64;
        w[j + 1] = w[j] * (q / p) * ((s as f64 - jf) / (jf + 1.0));
    }
    let norm: f64 = w.iter().sum::<f64>().sqrt();
    let mut alpha = Array1::<C64>::zeros(d);
    for j in 0..d {
        alpha[j] = C64::new(0.0, chi * j as f64).exp() * (w[j].sqrt() / norm);
    }
    StateAmplitudes::new(alpha)
}
