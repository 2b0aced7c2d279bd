//! Command-line front end: experiment presets that emit plot-ready CSV
//! (with a leading `#` metadata line) and JSON sidecars. Identical inputs
//! produce byte-identical outputs.

use crate::action_space::{build_hamiltonian, make_subspace, occupations, StateAmplitudes};
use crate::dynamics::{
    classical_threewave, evolve_state, expm_tridiagonal, unitary_3level, ClassicalState,
    UnitaryMatrix,
};
use crate::error::{Result, TriwaveError};
use crate::gate_decomposer::{embed_two_qubit, givens_decompose, noisy_sequence_channel};
use crate::open_system::{
    apply_superoperator, evolve_master, load_hardware_model, populations, pulse_superoperator,
    DensityMatrix, HardwareModel, PulseEnvelope,
};
use crate::pulse_control::{
    average_gate_fidelity, grape_optimize, grape_optimize_seeded, interpolate_pulse,
    interpolation_family_target, limiting_hamiltonian, simulate_gate_repetition, state_fidelity,
    CompiledGate, OptimizationConfig,
};
use crate::C64;
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

/// Duration of one control slice in nanoseconds for all compiled pulses.
pub const SLICE_NS: f64 = 0.5;

/// Environment variable overriding where compiled pulses are cached.
pub const CACHE_DIR_ENV: &str = "TRIWAVE_CACHE_DIR";

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "triwave",
    version,
    about = "Three-wave interaction simulation and pulse compilation presets"
)]
pub struct Cli {
    /// Experiment preset to run
    #[arg(value_enum)]
    pub preset: Preset,
    /// Hardware model JSON (required by fig1c, fig2, fig3, pulse-opt)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output data file
    #[arg(long)]
    pub out: PathBuf,
    /// Dimensionless interaction time
    #[arg(long)]
    pub tau: Option<f64>,
    /// Coupling phase in radians (default pi/2)
    #[arg(long)]
    pub theta: Option<f64>,
    /// Family parameter s
    #[arg(long)]
    pub s: Option<f64>,
    /// Repetition / step / slice count (meaning depends on the preset)
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated s values for the fig3 sweep
    #[arg(long = "s-list", value_delimiter = ',')]
    pub s_list: Option<Vec<f64>>,
    /// Evaluate independent sweep points on worker threads
    #[arg(long)]
    pub parallel: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Fig1c,
    Fig2,
    Fig3,
    Evolve,
    Classical,
    Decompose,
    PulseOpt,
}

pub fn run(cli: &Cli) -> Result<()> {
    match cli.preset {
        Preset::Fig1c => run_fig1c(cli),
        Preset::Fig2 => run_fig2(cli),
        Preset::Fig3 => run_fig3(cli),
        Preset::Evolve => run_evolve(cli),
        Preset::Classical => run_classical(cli),
        Preset::Decompose => run_decompose(cli),
        Preset::PulseOpt => run_pulse_opt(cli),
    }
}

fn require_model(cli: &Cli) -> Result<(HardwareModel, String)> {
    let path = cli.model.as_ref().ok_or_else(|| {
        TriwaveError::config("model", "this preset needs --model <hardware model JSON>")
    })?;
    let model = load_hardware_model(path)?;
    let sha = short_sha(model.canonical_json().as_bytes());
    Ok((model, sha))
}

fn short_sha(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(16);
    for b in digest.iter().take(8) {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let stem = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(
        ".{stem}.tmp-{}-{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn cache_dir(cli: &Cli) -> PathBuf {
    if let Ok(dir) = std::env::var(CACHE_DIR_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    match cli.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// On-disk form of a compiled pulse; f64 values round-trip exactly through
/// JSON (shortest-roundtrip float encoding), so cache hits reproduce the
/// fresh computation bit-for-bit.
#[derive(Serialize, Deserialize)]
struct CachedPulse {
    slice_ns: f64,
    amp_bound: f64,
    eps_re: Vec<f64>,
    eps_im: Vec<f64>,
    target_re: Vec<f64>,
    target_im: Vec<f64>,
    achieved_fidelity: f64,
    iterations: usize,
    converged: bool,
}

fn pulse_cache_key(
    model: &HardwareModel,
    target: &UnitaryMatrix,
    cfg: &OptimizationConfig,
    seed: Option<&PulseEnvelope>,
) -> String {
    let mut h = Sha256::new();
    h.update(b"triwave-pulse-v1\n");
    for e in target.entries.iter() {
        h.update(e.re.to_bits().to_le_bytes());
        h.update(e.im.to_bits().to_le_bytes());
    }
    h.update(model.canonical_json().as_bytes());
    h.update((cfg.n_slices as u64).to_le_bytes());
    h.update(cfg.total_t_ns.to_bits().to_le_bytes());
    h.update(cfg.amp_bound.to_bits().to_le_bytes());
    h.update(cfg.fid_error_target.to_bits().to_le_bytes());
    h.update((cfg.max_iters as u64).to_le_bytes());
    h.update(cfg.guard_penalty_weight.to_bits().to_le_bytes());
    match seed {
        None => h.update(b"zero-init"),
        Some(p) => {
            h.update(b"seeded");
            for e in &p.samples {
                h.update(e.re.to_bits().to_le_bytes());
                h.update(e.im.to_bits().to_le_bytes());
            }
        }
    }
    let digest = h.finalize();
    let mut s = String::with_capacity(16);
    for b in digest.iter().take(8) {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn load_cached_gate(path: &Path, cfg: &OptimizationConfig) -> Option<CompiledGate> {
    let text = fs::read_to_string(path).ok()?;
    let raw: CachedPulse = serde_json::from_str(&text).ok()?;
    if raw.eps_re.len() != cfg.n_slices
        || raw.eps_im.len() != cfg.n_slices
        || raw.target_re.len() != 9
        || raw.target_im.len() != 9
    {
        return None;
    }
    let samples: Vec<C64> = raw
        .eps_re
        .iter()
        .zip(raw.eps_im.iter())
        .map(|(&re, &im)| C64::new(re, im))
        .collect();
    let pulse = PulseEnvelope::new(raw.slice_ns, samples, raw.amp_bound).ok()?;
    let mut entries = ndarray::Array2::<C64>::zeros((3, 3));
    for r in 0..3 {
        for c in 0..3 {
            entries[[r, c]] = C64::new(raw.target_re[3 * r + c], raw.target_im[3 * r + c]);
        }
    }
    let target = UnitaryMatrix::new(entries).ok()?;
    Some(CompiledGate {
        pulse,
        target,
        achieved_fidelity: raw.achieved_fidelity,
        iterations: raw.iterations,
        converged: raw.converged,
    })
}

/// Compile a target, consulting the on-disk pulse cache keyed by
/// (target, model, optimizer config, seed).
fn compile_cached(
    model: &HardwareModel,
    target: &UnitaryMatrix,
    cfg: &OptimizationConfig,
    seed: Option<&PulseEnvelope>,
    dir: &Path,
) -> Result<CompiledGate> {
    let key = pulse_cache_key(model, target, cfg, seed);
    let path = dir.join(format!("triwave-pulse-{key}.json"));
    if let Some(gate) = load_cached_gate(&path, cfg) {
        return Ok(gate);
    }
    let gate = match seed {
        Some(p) => grape_optimize_seeded(model, target, cfg, p)?,
        None => grape_optimize(model, target, cfg)?,
    };
    let raw = CachedPulse {
        slice_ns: gate.pulse.slice_ns,
        amp_bound: gate.pulse.amp_bound,
        eps_re: gate.pulse.samples.iter().map(|e| e.re).collect(),
        eps_im: gate.pulse.samples.iter().map(|e| e.im).collect(),
        target_re: gate.target.entries.iter().map(|e| e.re).collect(),
        target_im: gate.target.entries.iter().map(|e| e.im).collect(),
        achieved_fidelity: gate.achieved_fidelity,
        iterations: gate.iterations,
        converged: gate.converged,
    };
    write_atomic(&path, &serde_json::to_string(&raw)?)?;
    Ok(gate)
}

fn run_fig1c(cli: &Cli) -> Result<()> {
    let (model, msha) = require_model(cli)?;
    let tau = cli.tau.unwrap_or(0.1);
    let theta = cli.theta.unwrap_or(FRAC_PI_2);
    let s = cli.s.unwrap_or(2.0);
    let target = unitary_3level(tau, theta, s)?;
    let cfg = OptimizationConfig::for_duration(300, 150.0);
    let gate = compile_cached(&model, &target, &cfg, None, &cache_dir(cli))?;
    let rho0 = DensityMatrix::pure(model.levels, 0)?;
    let states = evolve_master(&model, &gate.pulse, &rho0, 1)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# triwave {VERSION} preset=fig1c model_sha={msha} tau={tau} theta={theta} s={s} n_slices={} total_t_ns={} slice_ns={} achieved_fidelity={} iterations={} converged={}",
        cfg.n_slices, cfg.total_t_ns, gate.pulse.slice_ns, gate.achieved_fidelity, gate.iterations, gate.converged
    );
    out.push_str("t_ns,p0,p1,p2,p_guard\n");
    for (k, rho) in states.iter().enumerate() {
        let p = populations(rho);
        let guard: f64 = p[3..].iter().sum();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            k as f64 * gate.pulse.slice_ns,
            p[0],
            p[1],
            p[2],
            guard
        );
    }
    let _ = writeln!(
        out,
        "# analytic_targets p0={} p1={} p2={}",
        target.entries[[0, 0]].norm_sqr(),
        target.entries[[1, 0]].norm_sqr(),
        target.entries[[2, 0]].norm_sqr()
    );
    write_atomic(&cli.out, &out)
}

fn run_fig2(cli: &Cli) -> Result<()> {
    let (model, msha) = require_model(cli)?;
    let n = cli.n.unwrap_or(150);
    if n == 0 {
        return Err(TriwaveError::config("n", "repetition count must be >= 1"));
    }
    let tau = cli.tau.unwrap_or(0.2);
    let theta = cli.theta.unwrap_or(FRAC_PI_2);
    let s = cli.s.unwrap_or(2.0);
    let target = unitary_3level(tau, theta, s)?;
    let cfg = OptimizationConfig::for_duration(160, 80.0);
    let gate = compile_cached(&model, &target, &cfg, None, &cache_dir(cli))?;

    let modular = simulate_gate_repetition(&model, &gate, n, &DensityMatrix::pure(model.levels, 0)?)?;

    let embedded = embed_two_qubit(&target)?;
    let report = givens_decompose(&embedded);
    let f_avg = average_gate_fidelity(&model, &gate)?;
    let p_native = (1.0 - f_avg).clamp(0.0, 1.0);
    let p_rot = 1.0 - (1.0 - p_native).powi(crate::gate_decomposer::NATIVE_EXPANSION_FACTOR as i32);
    let channel = noisy_sequence_channel(&report, p_rot)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "# triwave {VERSION} preset=fig2 model_sha={msha} tau={tau} theta={theta} s={s} n={n} n_slices={} total_t_ns={} avg_gate_fidelity={} per_rotation_error={} rotations={} native_gate_estimate={}",
        cfg.n_slices,
        cfg.total_t_ns,
        f_avg,
        p_rot,
        report.count,
        report.native_gate_estimate()
    );
    out.push_str(
        "N,exact_p0,exact_p1,exact_p2,modular_p0,modular_p1,modular_p2,sequence_p0,sequence_p1,sequence_p2\n",
    );
    let mut psi = StateAmplitudes::basis(3, 0)?;
    let mut rho4 = DensityMatrix::pure(4, 0)?;
    for k in 1..=n {
        psi = evolve_state(&target, &psi)?;
        rho4 = channel.apply(&rho4)?;
        let seq = populations(&rho4);
        let (m0, m1, m2) = modular[k - 1];
        let _ = writeln!(
            out,
            "{k},{},{},{},{m0},{m1},{m2},{},{},{}",
            psi.alpha[0].norm_sqr(),
            psi.alpha[1].norm_sqr(),
            psi.alpha[2].norm_sqr(),
            seq[0],
            seq[1],
            seq[2]
        );
    }
    write_atomic(&cli.out, &out)
}

/// Gate target for family parameter s at the fixed product tau*sqrt(2s) = 0.2.
fn family_gate_target(s: f64, theta: f64) -> Result<UnitaryMatrix> {
    if s.is_infinite() {
        Ok(expm_tridiagonal(&limiting_hamiltonian(theta), 0.2))
    } else {
        let h = interpolation_family_target(s, theta)?;
        Ok(expm_tridiagonal(&h, 0.2 / (2.0 * s).sqrt()))
    }
}

fn run_fig3(cli: &Cli) -> Result<()> {
    let (model, msha) = require_model(cli)?;
    let theta = cli.theta.unwrap_or(FRAC_PI_2);
    let s_list = cli
        .s_list
        .clone()
        .unwrap_or_else(|| vec![2.0, 3.0, 4.0, 8.0, 16.0, 64.0]);
    if s_list.is_empty() {
        return Err(TriwaveError::config("s-list", "need at least one s value"));
    }
    for &s in &s_list {
        if !(s >= 2.0) || s.is_nan() {
            return Err(TriwaveError::config(
                "s-list",
                format!("family parameters must satisfy s >= 2, got {s}"),
            ));
        }
    }
    let cfg = OptimizationConfig::for_duration(300, 150.0);
    let dir = cache_dir(cli);
    let anchor2 = compile_cached(&model, &family_gate_target(2.0, theta)?, &cfg, None, &dir)?;
    let anchor_inf = compile_cached(
        &model,
        &family_gate_target(f64::INFINITY, theta)?,
        &cfg,
        None,
        &dir,
    )?;

    let eval = |s: f64| -> Result<[f64; 3]> {
        let target_s = family_gate_target(s, theta)?;
        let optimized = compile_cached(&model, &target_s, &cfg, Some(&anchor2.pulse), &dir)?;
        let interpolated = interpolate_pulse(&anchor2.pulse, &anchor_inf.pulse, s)?;
        let g_opt = pulse_superoperator(&model, &optimized.pulse)?;
        let g_int = pulse_superoperator(&model, &interpolated)?;
        let mut f = [0.0f64; 3];
        for (k, slot) in f.iter_mut().enumerate() {
            let rho0 = DensityMatrix::pure(model.levels, k)?;
            let rho_opt = apply_superoperator(&g_opt, &rho0);
            let rho_int = apply_superoperator(&g_int, &rho0);
            *slot = state_fidelity(&rho_opt, &rho_int)?;
        }
        Ok(f)
    };

    let rows: Vec<Result<[f64; 3]>> = if cli.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = s_list.iter().map(|&s| scope.spawn(move || eval(s))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep worker panicked"))
                .collect()
        })
    } else {
        s_list.iter().map(|&s| eval(s)).collect()
    };

    let mut out = String::new();
    let s_join = s_list
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let _ = writeln!(
        out,
        "# triwave {VERSION} preset=fig3 model_sha={msha} theta={theta} s_list={s_join} n_slices={} total_t_ns={} tau_sqrt_2s=0.2",
        cfg.n_slices, cfg.total_t_ns
    );
    out.push_str("s,F0,F1,F2\n");
    for (s, row) in s_list.iter().zip(rows) {
        let f = row?;
        let _ = writeln!(out, "{s},{},{},{}", f[0], f[1], f[2]);
    }
    write_atomic(&cli.out, &out)
}

fn run_evolve(cli: &Cli) -> Result<()> {
    let tau = cli.tau.unwrap_or(1.0);
    let theta = cli.theta.unwrap_or(FRAC_PI_2);
    let s = cli.s.unwrap_or(2.0);
    let n = cli.n.unwrap_or(100);
    if n == 0 {
        return Err(TriwaveError::config("n", "sample count must be >= 1"));
    }
    if !(s.fract() == 0.0 && s >= 0.0 && s <= 2f64.powi(53)) {
        return Err(TriwaveError::config(
            "s",
            format!("evolve runs the {{s2=2, s3=s}} sector and needs integer s >= 0, got {s}"),
        ));
    }
    if !(tau > 0.0) {
        return Err(TriwaveError::config("tau", "total time must be positive"));
    }
    let spec = make_subspace(2, s as i64)?;
    let h = build_hamiltonian(&spec, theta);
    let psi0 = StateAmplitudes::basis(spec.d, 0)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# triwave {VERSION} preset=evolve s2=2 s3={s} theta={theta} tau={tau} samples={n} swapped={}",
        spec.swapped
    );
    out.push_str("tau,n1,n2,n3\n");
    for k in 0..=n {
        let t = tau * k as f64 / n as f64;
        let u = expm_tridiagonal(&h, t);
        let psi = evolve_state(&u, &psi0)?;
        let (n1, n2, n3) = occupations(&spec, &psi)?;
        let _ = writeln!(out, "{t},{n1},{n2},{n3}");
    }
    write_atomic(&cli.out, &out)
}

fn run_classical(cli: &Cli) -> Result<()> {
    let theta = cli.theta.unwrap_or(FRAC_PI_2);
    let n = cli.n.unwrap_or(10000);
    if n == 0 {
        return Err(TriwaveError::config("n", "step count must be >= 1"));
    }
    let dt = 1e-3;
    let init = ClassicalState {
        a1: C64::new(1.0, 0.0),
        a2: C64::new(0.0, 0.05),
        a3: C64::new(0.0, 0.05),
        g: C64::new(0.0, theta - FRAC_PI_2).exp(),
    };
    let traj = classical_threewave(&init, dt, n)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# triwave {VERSION} preset=classical theta={theta} dt={dt} steps={n} a1=1 a2=0.05i a3=0.05i"
    );
    out.push_str("tau,a1_abs2,a2_abs2,a3_abs2,inv2,inv3\n");
    for (k, state) in traj.iter().enumerate() {
        let (i1, i2, i3) = state.actions();
        let (c2, c3) = state.invariants();
        let _ = writeln!(out, "{},{i1},{i2},{i3},{c2},{c3}", k as f64 * dt);
    }
    write_atomic(&cli.out, &out)
}

fn run_decompose(cli: &Cli) -> Result<()> {
    let tau = cli.tau.unwrap_or(0.2);
    let theta = cli.theta.unwrap_or(FRAC_PI_2);
    let s = cli.s.unwrap_or(2.0);
    let u3 = unitary_3level(tau, theta, s)?;
    let u4 = embed_two_qubit(&u3)?;
    let report = givens_decompose(&u4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# triwave {VERSION} preset=decompose tau={tau} theta={theta} s={s} embedding=two-qubit"
    );
    out.push_str(&report.to_text());
    write_atomic(&cli.out, &out)
}

#[derive(Serialize)]
struct PulseSidecar {
    tau: f64,
    theta: f64,
    s: f64,
    total_t_ns: f64,
    slice_ns: f64,
    amp_bound: f64,
    achieved_fidelity: f64,
    iterations: usize,
    converged: bool,
}

fn run_pulse_opt(cli: &Cli) -> Result<()> {
    let (model, msha) = require_model(cli)?;
    let tau = cli.tau.unwrap_or(0.1);
    let theta = cli.theta.unwrap_or(FRAC_PI_2);
    let s = cli.s.unwrap_or(2.0);
    let n_slices = cli.n.unwrap_or(300);
    if n_slices == 0 {
        return Err(TriwaveError::config("n", "slice count must be >= 1"));
    }
    let total_t_ns = n_slices as f64 * SLICE_NS;
    let target = unitary_3level(tau, theta, s)?;
    let cfg = OptimizationConfig::for_duration(n_slices, total_t_ns);
    let gate = compile_cached(&model, &target, &cfg, None, &cache_dir(cli))?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# triwave {VERSION} preset=pulse-opt model_sha={msha} tau={tau} theta={theta} s={s} n_slices={n_slices} total_t_ns={total_t_ns} achieved_fidelity={} iterations={} converged={}",
        gate.achieved_fidelity, gate.iterations, gate.converged
    );
    out.push_str("t_ns,eps_re,eps_im\n");
    for (k, e) in gate.pulse.samples.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", k as f64 * gate.pulse.slice_ns, e.re, e.im);
    }
    write_atomic(&cli.out, &out)?;
    let sidecar = PulseSidecar {
        tau,
        theta,
        s,
        total_t_ns,
        slice_ns: gate.pulse.slice_ns,
        amp_bound: gate.pulse.amp_bound,
        achieved_fidelity: gate.achieved_fidelity,
        iterations: gate.iterations,
        converged: gate.converged,
    };
    write_atomic(
        &cli.out.with_extension("json"),
        &serde_json::to_string_pretty(&sidecar)?,
    )
}
