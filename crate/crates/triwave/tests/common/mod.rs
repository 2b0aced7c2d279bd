#![allow(dead_code)]

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use triwave::open_system::{load_hardware_model, HardwareModel};

pub fn model_path() -> &'static Path {
    Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../models/transmon5.json"
    ))
}

pub fn load_model() -> HardwareModel {
    load_hardware_model(model_path()).expect("hardware model should parse")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_c64(r: &mut ChaCha8Rng) -> C64 {
    C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
}

fn gram_schmidt(m: &Array2<C64>) -> Option<Array2<C64>> {
    let d = m.nrows();
    let mut q = m.clone();
    for c in 0..d {
        for prev in 0..c {
            let mut dot = C64::new(0.0, 0.0);
            for r in 0..d {
                dot += q[[r, prev]].conj() * q[[r, c]];
            }
            for r in 0..d {
                let sub = dot * q[[r, prev]];
                q[[r, c]] -= sub;
            }
        }
        let norm: f64 = (0..d).map(|r| q[[r, c]].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            return None;
        }
        for r in 0..d {
            q[[r, c]] /= norm;
        }
    }
    Some(q)
}

/// Random unitary via Gram-Schmidt (run twice for machine-precision
/// orthogonality) on a matrix of uniform complex entries.
pub fn random_unitary(r: &mut ChaCha8Rng, d: usize) -> Array2<C64> {
    loop {
        let mut m = Array2::<C64>::zeros((d, d));
        for row in 0..d {
            for col in 0..d {
                m[[row, col]] = random_c64(r);
            }
        }
        if let Some(q1) = gram_schmidt(&m) {
            if let Some(q2) = gram_schmidt(&q1) {
                return q2;
            }
        }
    }
}

pub fn random_state(r: &mut ChaCha8Rng, d: usize) -> Array1<C64> {
    loop {
        let mut v = Array1::<C64>::zeros(d);
        for k in 0..d {
            v[k] = random_c64(r);
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.mapv(|z| z / n);
        }
    }
}

pub fn frob(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    triwave::linalg::frob_dist(a, b)
}

pub fn eye(d: usize) -> Array2<C64> {
    Array2::<C64>::eye(d)
}

pub fn unitarity_defect(u: &Array2<C64>) -> f64 {
    let ud = triwave::linalg::dagger(u);
    frob(&ud.dot(u), &eye(u.nrows()))
}
