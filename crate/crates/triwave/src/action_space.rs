//! Invariant-subspace encoding of the cubic three-wave interaction.
//!
//! The two conserved number combinations S2 = n1 + n3 and S3 = n1 + n2 slice
//! the bosonic Hilbert space into finite sectors. Fixing their eigenvalues
//! (s2, s3) leaves a ladder of dimension D = min(s2, s3) + 1, on which the
//! interaction acts as a Hermitian tridiagonal matrix with zero diagonal.

use crate::error::{Result, TriwaveError};
use crate::C64;
use ndarray::Array1;

/// One invariant sector, canonicalized so `s2 <= s3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubspaceSpec {
    pub s2: u64,
    pub s3: u64,
    /// Sector dimension, always `s2 + 1` after canonicalization.
    pub d: usize,
    /// True when the constructor swapped the inputs; callers that care about
    /// wave labels must relabel waves 2 and 3 in their outputs.
    pub swapped: bool,
}

/// Hermitian tridiagonal sector Hamiltonian, stored as its superdiagonal.
///
/// The diagonal is identically zero and the subdiagonal is the conjugate of
/// `super_diag`. The coupling phase satisfies exp(i theta) = i g / |g|; all
/// times are the dimensionless tau = |g| t.
#[derive(Debug, Clone, PartialEq)]
pub struct TriHamiltonian {
    pub dim: usize,
    pub theta: f64,
    pub super_diag: Vec<C64>,
}

/// Normalized pure-state coefficients on the sector ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct StateAmplitudes {
    pub alpha: Array1<C64>,
}

impl StateAmplitudes {
    /// Wrap a coefficient vector, enforcing unit norm within 1e-10.
    pub fn new(alpha: Array1<C64>) -> Result<Self> {
        let norm2: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-10 {
            return Err(TriwaveError::Domain(format!(
                "state norm^2 = {norm2}, expected 1 within 1e-10"
            )));
        }
        Ok(StateAmplitudes { alpha })
    }

    /// Basis state |j> of a D-dimensional sector.
    pub fn basis(d: usize, j: usize) -> Result<Self> {
        if j >= d {
            return Err(TriwaveError::Index(format!(
                "basis index {j} outside dimension {d}"
            )));
        }
        let mut alpha = Array1::<C64>::zeros(d);
        alpha[j] = C64::new(1.0, 0.0);
        Ok(StateAmplitudes { alpha })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }
}

/// Build the canonical sector for eigenvalues (s2, s3), swapping if needed.
pub fn make_subspace(s2: i64, s3: i64) -> Result<SubspaceSpec> {
    if s2 < 0 || s3 < 0 {
        return Err(TriwaveError::Domain(format!(
            "sector labels must be non-negative, got ({s2}, {s3})"
        )));
    }
    let (a, b, swapped) = if s2 <= s3 {
        (s2 as u64, s3 as u64, false)
    } else {
        (s3 as u64, s2 as u64, true)
    };
    Ok(SubspaceSpec {
        s2: a,
        s3: b,
        d: (a + 1) as usize,
        swapped,
    })
}

/// Fock labels (n1, n2, n3) of ladder site `j`: |s2-j, s3-s2+j, j>.
pub fn basis_fock_state(spec: &SubspaceSpec, j: usize) -> Result<(u64, u64, u64)> {
    if j as u64 > spec.s2 {
        return Err(TriwaveError::Index(format!(
            "ladder index {j} outside 0..={}",
            spec.s2
        )));
    }
    let j = j as u64;
    Ok((spec.s2 - j, spec.s3 - spec.s2 + j, j))
}

/// The sector Hamiltonian h with coupling phase theta.
///
/// Superdiagonal entry j has magnitude sqrt((j+1)(s2-j)(s3-s2+j+1)); the
/// products are formed in floating point so enormous s3 cannot overflow.
pub fn build_hamiltonian(spec: &SubspaceSpec, theta: f64) -> TriHamiltonian {
    let phase = C64::new(0.0, theta).exp();
    let d = spec.d;
    let mut super_diag = Vec::with_capacity(d.saturating_sub(1));
    for j in 0..d.saturating_sub(1) {
        let j = j as u64;
        let mag = ((j + 1) as f64 * (spec.s2 - j) as f64 * (spec.s3 - spec.s2 + j + 1) as f64)
            .sqrt();
        super_diag.push(phase * mag);
    }
    TriHamiltonian {
        dim: d,
        theta,
        super_diag,
    }
}

/// Occupation expectations (<n1>, <n2>, <n3>) of a sector state.
pub fn occupations(spec: &SubspaceSpec, psi: &StateAmplitudes) -> Result<(f64, f64, f64)> {
    if psi.dim() != spec.d {
        return Err(TriwaveError::Shape(format!(
            "state dimension {} does not match sector dimension {}",
            psi.dim(),
            spec.d
        )));
    }
    let (mut n1, mut n2, mut n3) = (0.0, 0.0, 0.0);
    for (j, a) in psi.alpha.iter().enumerate() {
        let w = a.norm_sqr();
        let j = j as u64;
        n1 += (spec.s2 - j) as f64 * w;
        n2 += (spec.s3 - spec.s2 + j) as f64 * w;
        n3 += j as f64 * w;
    }
    Ok((n1, n2, n3))
}

/// <n_wave^order> for wave in {1, 2, 3} and order >= 1.
pub fn moment(spec: &SubspaceSpec, psi: &StateAmplitudes, wave: u8, order: u32) -> Result<f64> {
    if order < 1 {
        return Err(TriwaveError::Domain(format!(
            "moment order must be >= 1, got {order}"
        )));
    }
    if !(1..=3).contains(&wave) {
        return Err(TriwaveError::Domain(format!(
            "wave label must be 1, 2 or 3, got {wave}"
        )));
    }
    if psi.dim() != spec.d {
        return Err(TriwaveError::Shape(format!(
            "state dimension {} does not match sector dimension {}",
            psi.dim(),
            spec.d
        )));
    }
    let mut acc = 0.0;
    for (j, a) in psi.alpha.iter().enumerate() {
        let (n1, n2, n3) = basis_fock_state(spec, j)?;
        let n = match wave {
            1 => n1,
            2 => n2,
            _ => n3,
        } as f64;
        acc += n.powi(order as i32) * a.norm_sqr();
    }
    Ok(acc)
}
