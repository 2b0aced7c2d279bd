//! Dense numerical kernels: eigensolvers, matrix exponentials, LU solves.
//!
//! Everything here is sized for the small matrices this toolkit actually
//! meets (subspace Hamiltonians, 5-level transmons, 25x25 superoperators),
//! so the implementations favor clarity and determinism over blocking or
//! parallelism.

use crate::error::{Result, TriwaveError};
use crate::C64;
use ndarray::Array2;

/// Eigendecomposition of a real symmetric tridiagonal matrix by the implicit
/// QL algorithm with Wilkinson shifts.
///
/// `diag` has length n, `off` length n-1 (`off[i]` couples rows i and i+1).
/// Returns eigenvalues in ascending order and the orthogonal matrix whose
/// columns are the matching eigenvectors.
pub fn symtri_eigh(diag: &[f64], off: &[f64]) -> (Vec<f64>, Array2<f64>) {
    let n = diag.len();
    assert!(n > 0, "empty matrix");
    assert_eq!(off.len(), n - 1, "off-diagonal length must be n-1");
    let mut d = diag.to_vec();
    let mut e = vec![0.0f64; n];
    e[..n - 1].copy_from_slice(off);
    let mut z = Array2::<f64>::eye(n);
    if n == 1 {
        return (d, z);
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Locate the end of the unreduced block starting at l.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tridiagonal QL failed to converge");

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[[k, i + 1]];
                    z[[k, i + 1]] = s * z[[k, i]] + c * f;
                    z[[k, i]] = c * z[[k, i]] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // Sort ascending, permuting eigenvector columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vecs = Array2::<f64>::zeros((n, n));
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vecs[[k, new]] = z[[k, old]];
        }
    }
    (vals, vecs)
}

/// Eigendecomposition of a dense complex Hermitian matrix.
///
/// Householder reflections reduce the matrix to Hermitian tridiagonal form,
/// a unit-modulus diagonal gauge makes the off-diagonal real, and the QL
/// solver above finishes the job. Returns ascending eigenvalues and the
/// unitary of column eigenvectors.
pub fn hermitian_eigh(a: &Array2<C64>) -> (Vec<f64>, Array2<C64>) {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "matrix must be square");
    let mut t = a.clone();
    let mut qacc = Array2::<C64>::eye(n);

    for k in 0..n.saturating_sub(2) {
        let mut col_norm2 = 0.0f64;
        for r in k + 1..n {
            col_norm2 += t[[r, k]].norm_sqr();
        }
        let mut below2 = 0.0f64;
        for r in k + 2..n {
            below2 += t[[r, k]].norm_sqr();
        }
        if below2 <= col_norm2 * 1e-30 || col_norm2 == 0.0 {
            continue;
        }
        let col_norm = col_norm2.sqrt();
        let x0 = t[[k + 1, k]];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut v = vec![C64::new(0.0, 0.0); n];
        for r in k + 1..n {
            v[r] = t[[r, k]];
        }
        v[k + 1] += phase * col_norm;
        let v_norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if v_norm2 == 0.0 {
            continue;
        }
        // P = I - 2 v v^dag / |v|^2, applied two-sided.
        let scale = C64::new(2.0 / v_norm2, 0.0);
        let mut p = Array2::<C64>::eye(n);
        for r in 0..n {
            for c in 0..n {
                p[[r, c]] -= scale * v[r] * v[c].conj();
            }
        }
        t = p.dot(&t).dot(&p);
        qacc = qacc.dot(&p);
    }

    // Gauge the tridiagonal off-diagonal to be real nonnegative.
    let mut diag = vec![0.0f64; n];
    let mut off = vec![0.0f64; n.saturating_sub(1)];
    let mut q = vec![C64::new(1.0, 0.0); n];
    for i in 0..n {
        diag[i] = t[[i, i]].re;
    }
    for i in 0..n.saturating_sub(1) {
        let ti = t[[i, i + 1]];
        let w = ti.norm();
        off[i] = w;
        q[i + 1] = if w > 0.0 { q[i] * ti.conj() / w } else { q[i] };
    }

    let (vals, v_real) = symtri_eigh(&diag, &off);
    // Eigenvectors of the input: qacc * diag(q) * v_real.
    let mut scaled = Array2::<C64>::zeros((n, n));
    for r in 0..n {
        for c in 0..n {
            scaled[[r, c]] = q[r] * C64::new(v_real[[r, c]], 0.0);
        }
    }
    let vecs = qacc.dot(&scaled);
    (vals, vecs)
}

/// Solve A X = B with partial-pivot LU; B may carry many right-hand sides.
pub fn lu_solve(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(TriwaveError::Shape(format!(
            "lu_solve expects square A and matching B, got A {}x{}, B {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let m = x.ncols();
    for col in 0..n {
        // Pivot.
        let mut piv = col;
        let mut best = lu[[col, col]].norm();
        for r in col + 1..n {
            let v = lu[[r, col]].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return Err(TriwaveError::Numerical(
                "singular matrix in linear solve".into(),
            ));
        }
        if piv != col {
            for c in 0..n {
                let tmp = lu[[col, c]];
                lu[[col, c]] = lu[[piv, c]];
                lu[[piv, c]] = tmp;
            }
            for c in 0..m {
                let tmp = x[[col, c]];
                x[[col, c]] = x[[piv, c]];
                x[[piv, c]] = tmp;
            }
        }
        let d = lu[[col, col]];
        for r in col + 1..n {
            let f = lu[[r, col]] / d;
            lu[[r, col]] = f;
            for c in col + 1..n {
                let sub = f * lu[[col, c]];
                lu[[r, c]] -= sub;
            }
            for c in 0..m {
                let sub = f * x[[col, c]];
                x[[r, c]] -= sub;
            }
        }
    }
    // Back substitution.
    for col in (0..n).rev() {
        let d = lu[[col, col]];
        for c in 0..m {
            x[[col, c]] /= d;
        }
        for r in 0..col {
            let f = lu[[r, col]];
            for c in 0..m {
                let sub = f * x[[col, c]];
                x[[r, c]] -= sub;
            }
        }
    }
    Ok(x)
}

/// Matrix exponential by degree-13 Pade approximation with scaling and
/// squaring (used for the Lindblad superoperator, which is not Hermitian).
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "matrix must be square");

    let mut norm1 = 0.0f64;
    for c in 0..n {
        let mut col_sum = 0.0;
        for r in 0..n {
            col_sum += a[[r, c]].norm();
        }
        norm1 = norm1.max(col_sum);
    }
    if !norm1.is_finite() {
        return Err(TriwaveError::Numerical(
            "non-finite entries in matrix exponential".into(),
        ));
    }
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / C64::new(2f64.powi(s as i32), 0.0));

    let eye = Array2::<C64>::eye(n);
    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let b = |i: usize| C64::new(B[i], 0.0);

    let u_inner = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u_poly = a6.dot(&u_inner) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &eye * b(1);
    let u = scaled.dot(&u_poly);
    let v_inner = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = a6.dot(&v_inner) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &eye * b(0);

    let num = &v + &u;
    let den = &v - &u;
    let mut x = lu_solve(&den, &num)?;
    for _ in 0..s {
        x = x.dot(&x);
    }
    Ok(x)
}

/// Kronecker product of two dense complex matrices.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Array2::<C64>::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Positive-semidefinite square root of a Hermitian matrix; tiny negative
/// eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let (vals, vecs) = hermitian_eigh(a);
    let mut out = Array2::<C64>::zeros((n, n));
    for (k, &lam) in vals.iter().enumerate() {
        let root = lam.max(0.0).sqrt();
        if root == 0.0 {
            continue;
        }
        for r in 0..n {
            for c in 0..n {
                out[[r, c]] += C64::new(root, 0.0) * vecs[[r, k]] * vecs[[c, k]].conj();
            }
        }
    }
    out
}

/// Frobenius distance between two complex matrices.
pub fn frob_dist(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += (x - y).norm_sqr();
    }
    acc.sqrt()
}

/// Hermitian conjugate (dagger).
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    let (r, c) = (a.nrows(), a.ncols());
    let mut out = Array2::<C64>::zeros((c, r));
    for i in 0..r {
        for j in 0..c {
            out[[j, i]] = a[[i, j]].conj();
        }
    }
    out
}
