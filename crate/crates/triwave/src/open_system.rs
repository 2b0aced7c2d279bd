//! Lindblad propagation of the driven transmon qudit.
//!
//! The hardware description (bare spectrum, drive operator, decay and
//! dephasing Lindbladians) is loaded from a JSON document; evolution happens
//! in the |0>-|1> rotating frame with the rotating-wave approximation
//! applied, one piecewise-constant envelope slice at a time, by
//! exponentiating the (time-independent within a slice) superoperator.

use crate::error::{Result, TriwaveError};
use crate::linalg::{dagger, expm, frob_dist, hermitian_eigh, kron};
use crate::C64;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Substep used inside every envelope slice when exponentiating the
/// superoperator, in ns.
pub const SUBSTEP_NS: f64 = 0.1;

/// Measured transmon model: diagonal bare Hamiltonian (rad/ns), complex
/// drive operator, decay (L1) and dephasing (L2) Lindbladians in ns^(-1/2),
/// and the rotating-frame angular frequency (the |0>-|1> transition).
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareModel {
    pub levels: usize,
    pub h0_diag: Vec<f64>,
    pub c: Array2<C64>,
    pub l1: Array2<C64>,
    pub l2: Array2<C64>,
    pub frame_freq: f64,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    levels: usize,
    h0_diag: Vec<f64>,
    c_real: Vec<Vec<f64>>,
    c_imag: Vec<Vec<f64>>,
    l1: Vec<Vec<f64>>,
    l2: Vec<Vec<f64>>,
    frame_freq: f64,
}

fn matrix_from_rows(rows: &[Vec<f64>], n: usize, field: &str) -> Result<Array2<f64>> {
    if rows.len() != n {
        return Err(TriwaveError::config(
            field,
            format!("expected {n} rows, got {}", rows.len()),
        ));
    }
    let mut out = Array2::<f64>::zeros((n, n));
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(TriwaveError::config(
                format!("{field}[{r}]"),
                format!("expected {n} columns, got {}", row.len()),
            ));
        }
        for (c, &v) in row.iter().enumerate() {
            out[[r, c]] = v;
        }
    }
    Ok(out)
}

impl HardwareModel {
    fn from_raw(raw: RawModel) -> Result<Self> {
        let n = raw.levels;
        if n == 0 {
            return Err(TriwaveError::config("levels", "must be positive"));
        }
        if raw.h0_diag.len() != n {
            return Err(TriwaveError::config(
                "h0_diag",
                format!("expected {n} entries, got {}", raw.h0_diag.len()),
            ));
        }
        if raw.h0_diag[0] != 0.0 {
            return Err(TriwaveError::config(
                "h0_diag[0]",
                "bare spectrum must be referenced to the ground level (first entry 0)",
            ));
        }
        for k in 1..n {
            if raw.h0_diag[k] < raw.h0_diag[k - 1] {
                return Err(TriwaveError::config(
                    format!("h0_diag[{k}]"),
                    "bare spectrum must be nondecreasing",
                ));
            }
        }
        if !raw.frame_freq.is_finite() {
            return Err(TriwaveError::config("frame_freq", "must be finite"));
        }
        let c_re = matrix_from_rows(&raw.c_real, n, "c_real")?;
        let c_im = matrix_from_rows(&raw.c_imag, n, "c_imag")?;
        let l1_re = matrix_from_rows(&raw.l1, n, "l1")?;
        let l2_re = matrix_from_rows(&raw.l2, n, "l2")?;
        for r in 0..n {
            for c in 0..n {
                if l1_re[[r, c]] != 0.0 && c != r + 1 {
                    return Err(TriwaveError::config(
                        format!("l1[{r}][{c}]"),
                        "decay Lindbladian must be strictly upper bidiagonal",
                    ));
                }
                if l2_re[[r, c]] != 0.0 && c != r {
                    return Err(TriwaveError::config(
                        format!("l2[{r}][{c}]"),
                        "dephasing Lindbladian must be diagonal",
                    ));
                }
            }
        }
        if l2_re[[0, 0]] != 0.0 {
            return Err(TriwaveError::config(
                "l2[0][0]",
                "ground-level dephasing entry must be zero",
            ));
        }
        let mut c = Array2::<C64>::zeros((n, n));
        let mut l1 = Array2::<C64>::zeros((n, n));
        let mut l2 = Array2::<C64>::zeros((n, n));
        for r in 0..n {
            for col in 0..n {
                c[[r, col]] = C64::new(c_re[[r, col]], c_im[[r, col]]);
                l1[[r, col]] = C64::new(l1_re[[r, col]], 0.0);
                l2[[r, col]] = C64::new(l2_re[[r, col]], 0.0);
            }
        }
        Ok(HardwareModel {
            levels: n,
            h0_diag: raw.h0_diag,
            c,
            l1,
            l2,
            frame_freq: raw.frame_freq,
        })
    }

    fn to_raw(&self) -> RawModel {
        let n = self.levels;
        let grab = |m: &Array2<C64>, imag: bool| -> Vec<Vec<f64>> {
            (0..n)
                .map(|r| {
                    (0..n)
                        .map(|c| if imag { m[[r, c]].im } else { m[[r, c]].re })
                        .collect()
                })
                .collect()
        };
        RawModel {
            levels: n,
            h0_diag: self.h0_diag.clone(),
            c_real: grab(&self.c, false),
            c_imag: grab(&self.c, true),
            l1: grab(&self.l1, false),
            l2: grab(&self.l2, false),
            frame_freq: self.frame_freq,
        }
    }

    /// Canonical serialization, used for cache keying.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("model serialization cannot fail")
    }

    /// Drift in the rotating frame: diag(h0_diag[j] - j * frame_freq).
    pub fn frame_h0_diag(&self) -> Vec<f64> {
        self.h0_diag
            .iter()
            .enumerate()
            .map(|(j, &w)| w - j as f64 * self.frame_freq)
            .collect()
    }
}

/// Parse a hardware model from JSON text.
pub fn parse_hardware_model(document: &str) -> Result<HardwareModel> {
    let raw: RawModel = serde_json::from_str(document)?;
    HardwareModel::from_raw(raw)
}

/// Load a hardware model from a JSON file.
pub fn load_hardware_model(path: &Path) -> Result<HardwareModel> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        TriwaveError::config(
            path.display().to_string(),
            format!("cannot read model file: {e}"),
        )
    })?;
    parse_hardware_model(&text)
}

/// Control Hamiltonian in the rotating frame under the rotating-wave
/// approximation: eps * c + conj(eps) * c^dag.
///
/// The frame generator is the linear ladder frame_freq * diag(0, 1, 2, ...),
/// and the envelope is paired with the e^(+i frame_freq t) carrier
/// quadrature, so the surviving co-rotating term is time independent; `_t`
/// stays in the signature for interface symmetry with lab-frame variants.
pub fn control_hamiltonian(model: &HardwareModel, eps: C64, _t: f64) -> Array2<C64> {
    let cd = dagger(&model.c);
    let mut h = Array2::<C64>::zeros((model.levels, model.levels));
    for r in 0..model.levels {
        for c in 0..model.levels {
            h[[r, c]] = eps * model.c[[r, c]] + eps.conj() * cd[[r, c]];
        }
    }
    h
}

/// Piecewise-constant complex envelope with its amplitude bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnvelope {
    pub slice_ns: f64,
    pub samples: Vec<C64>,
    pub amp_bound: f64,
}

impl PulseEnvelope {
    pub fn new(slice_ns: f64, samples: Vec<C64>, amp_bound: f64) -> Result<Self> {
        if !(slice_ns > 0.0) {
            return Err(TriwaveError::Domain(format!(
                "slice duration must be positive, got {slice_ns}"
            )));
        }
        if !(amp_bound > 0.0) {
            return Err(TriwaveError::Domain(format!(
                "amplitude bound must be positive, got {amp_bound}"
            )));
        }
        for (k, s) in samples.iter().enumerate() {
            if s.norm() > amp_bound + 1e-12 {
                return Err(TriwaveError::Domain(format!(
                    "sample {k} has |eps| = {} above the bound {amp_bound}",
                    s.norm()
                )));
            }
        }
        Ok(PulseEnvelope {
            slice_ns,
            samples,
            amp_bound,
        })
    }

    pub fn zero(slice_ns: f64, n_slices: usize, amp_bound: f64) -> Self {
        PulseEnvelope {
            slice_ns,
            samples: vec![C64::new(0.0, 0.0); n_slices],
            amp_bound,
        }
    }

    pub fn total_t_ns(&self) -> f64 {
        self.slice_ns * self.samples.len() as f64
    }
}

/// Open-system state of the qudit.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub rho: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(rho: Array2<C64>) -> Result<Self> {
        let dm = DensityMatrix { rho };
        dm.validate()?;
        Ok(dm)
    }

    pub(crate) fn from_raw(rho: Array2<C64>) -> Self {
        DensityMatrix { rho }
    }

    /// |k><k| on a `levels`-dimensional system.
    pub fn pure(levels: usize, k: usize) -> Result<Self> {
        if k >= levels {
            return Err(TriwaveError::Index(format!(
                "level {k} outside 0..{levels}"
            )));
        }
        let mut rho = Array2::<C64>::zeros((levels, levels));
        rho[[k, k]] = C64::new(1.0, 0.0);
        Ok(DensityMatrix { rho })
    }

    pub fn maximally_mixed(levels: usize) -> Self {
        let mut rho = Array2::<C64>::zeros((levels, levels));
        for k in 0..levels {
            rho[[k, k]] = C64::new(1.0 / levels as f64, 0.0);
        }
        DensityMatrix { rho }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// Enforce Hermiticity (1e-10), unit trace (1e-8) and positivity
    /// (eigenvalues above -1e-8).
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.rho.ncols() != n {
            return Err(TriwaveError::Shape("density matrix must be square".into()));
        }
        let herm_defect = frob_dist(&self.rho, &dagger(&self.rho));
        if herm_defect > 1e-10 {
            return Err(TriwaveError::Domain(format!(
                "density matrix is not Hermitian: defect {herm_defect:.3e}"
            )));
        }
        let tr: C64 = (0..n).map(|k| self.rho[[k, k]]).sum();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(TriwaveError::Domain(format!(
                "density matrix trace {tr} differs from 1 beyond 1e-8"
            )));
        }
        let (vals, _) = hermitian_eigh(&self.rho);
        if vals.iter().any(|&v| v < -1e-8) {
            return Err(TriwaveError::Domain(format!(
                "density matrix has eigenvalue {:.3e} below -1e-8",
                vals[0]
            )));
        }
        Ok(())
    }
}

/// Diagonal populations; real parts of the diagonal.
pub fn populations(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim()).map(|k| rho.rho[[k, k]].re).collect()
}

fn vec_rho(rho: &Array2<C64>) -> Array1<C64> {
    let n = rho.nrows();
    let mut v = Array1::<C64>::zeros(n * n);
    for r in 0..n {
        for c in 0..n {
            v[r * n + c] = rho[[r, c]];
        }
    }
    v
}

fn unvec_rho(v: &Array1<C64>, n: usize) -> Array2<C64> {
    let mut rho = Array2::<C64>::zeros((n, n));
    for r in 0..n {
        for c in 0..n {
            rho[[r, c]] = v[r * n + c];
        }
    }
    rho
}

/// Lindblad generator at a fixed envelope value, as a dense superoperator on
/// row-major vec(rho):
///   d rho/dt = -i [H, rho] + sum_L ( L rho L^dag - (1/2){L^dag L, rho} ).
pub fn liouvillian(model: &HardwareModel, eps: C64) -> Array2<C64> {
    let n = model.levels;
    let mut h = control_hamiltonian(model, eps, 0.0);
    for (j, w) in model.frame_h0_diag().iter().enumerate() {
        h[[j, j]] += C64::new(*w, 0.0);
    }
    let eye = Array2::<C64>::eye(n);
    let mi = C64::new(0.0, -1.0);
    let mut s = (kron(&h, &eye) - kron(&eye, &h.t().to_owned())).mapv(|z| mi * z);
    for l in [&model.l1, &model.l2] {
        let ld = dagger(l);
        let ldl = ld.dot(l);
        let lconj = l.mapv(|z| z.conj());
        let jump = kron(l, &lconj);
        let anti = kron(&ldl, &eye) + kron(&eye, &ldl.t().to_owned());
        s = s + jump - anti.mapv(|z| C64::new(0.5, 0.0) * z);
    }
    s
}

/// Superoperator for one envelope slice, substepped at `SUBSTEP_NS`.
pub fn slice_superoperator(model: &HardwareModel, eps: C64, slice_ns: f64) -> Result<Array2<C64>> {
    let substeps = (slice_ns / SUBSTEP_NS).round().max(1.0) as usize;
    let dt = slice_ns / substeps as f64;
    let gen = liouvillian(model, eps).mapv(|z| z * C64::new(dt, 0.0));
    let g_sub = expm(&gen)?;
    let mut g = g_sub.clone();
    for _ in 1..substeps {
        g = g_sub.dot(&g);
    }
    Ok(g)
}

/// Superoperator for a whole pulse (product of its slice superoperators).
pub fn pulse_superoperator(model: &HardwareModel, pulse: &PulseEnvelope) -> Result<Array2<C64>> {
    let n2 = model.levels * model.levels;
    let mut g = Array2::<C64>::eye(n2);
    for &eps in &pulse.samples {
        g = slice_superoperator(model, eps, pulse.slice_ns)?.dot(&g);
    }
    Ok(g)
}

/// Diagonal drift correction exp(+i H0_frame t): removes the residual frame
/// phases accumulated over a window of length `t_ns`.
pub fn frame_drift_correction(model: &HardwareModel, t_ns: f64) -> Array2<C64> {
    let n = model.levels;
    let mut z = Array2::<C64>::zeros((n, n));
    for (j, w) in model.frame_h0_diag().iter().enumerate() {
        z[[j, j]] = C64::new(0.0, w * t_ns).exp();
    }
    z
}

/// Integrate the master equation over a pulse, recording the state after
/// every `record_every` slices (the initial state is always first and the
/// final state always last).
pub fn evolve_master(
    model: &HardwareModel,
    pulse: &PulseEnvelope,
    rho0: &DensityMatrix,
    record_every: usize,
) -> Result<Vec<DensityMatrix>> {
    if record_every == 0 {
        return Err(TriwaveError::Domain("record_every must be >= 1".into()));
    }
    if rho0.dim() != model.levels {
        return Err(TriwaveError::Shape(format!(
            "state dimension {} does not match model levels {}",
            rho0.dim(),
            model.levels
        )));
    }
    let n = model.levels;
    let mut v = vec_rho(&rho0.rho);
    let mut out = vec![rho0.clone()];
    for (k, &eps) in pulse.samples.iter().enumerate() {
        let g = slice_superoperator(model, eps, pulse.slice_ns)?;
        v = g.dot(&v);
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(TriwaveError::Numerical(format!(
                "master-equation state became non-finite at slice {k}"
            )));
        }
        let last = k + 1 == pulse.samples.len();
        if (k + 1) % record_every == 0 || last {
            out.push(DensityMatrix::from_raw(unvec_rho(&v, n)));
        }
    }
    Ok(out)
}

/// Apply a precomputed superoperator to a state.
pub fn apply_superoperator(g: &Array2<C64>, rho: &DensityMatrix) -> DensityMatrix {
    let n = rho.dim();
    let v = g.dot(&vec_rho(&rho.rho));
    DensityMatrix::from_raw(unvec_rho(&v, n))
}

/// Apply a superoperator to an arbitrary (not necessarily Hermitian) matrix;
/// the channel action extends linearly to the full matrix space.
pub fn apply_superoperator_matrix(g: &Array2<C64>, m: &Array2<C64>) -> Array2<C64> {
    let n = m.nrows();
    let v = g.dot(&vec_rho(m));
    unvec_rho(&v, n)
}
