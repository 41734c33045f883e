//! Dense complex linear algebra helpers.
//!
//! Everything here works on plain `ndarray` arrays; the dimensions in this
//! crate stay small enough (≲ 1000) that dense storage is the right call.

use ndarray::Array2;

use crate::C64;

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::<C64>::zeros((ar * br, ac * bc));
    for ((i, j), &av) in a.indexed_iter() {
        if av == C64::new(0.0, 0.0) {
            continue;
        }
        for ((k, l), &bv) in b.indexed_iter() {
            out[(i * br + k, j * bc + l)] = av * bv;
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// `a·b − b·a`.
pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// Largest entry magnitude.
pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max_ij |a - a†|_ij`.
pub fn hermiticity_deviation(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Hermiticity check relative to the matrix scale. The zero matrix counts
/// as Hermitian.
pub fn is_hermitian(a: &Array2<C64>, rel_tol: f64) -> bool {
    let scale = max_abs(a);
    if scale == 0.0 {
        return true;
    }
    hermiticity_deviation(a) <= rel_tol * scale
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// returned in ascending order.
///
/// Accuracy is limited by the off-diagonal sweep threshold (`~1e-14` times
/// the matrix scale), which is plenty for the positivity checks this crate
/// needs.
pub fn hermitian_eigenvalues(a: &Array2<C64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut m = a.clone();
    let scale = max_abs(&m);
    if scale == 0.0 || n == 1 {
        return m.diag().iter().map(|z| z.re).collect();
    }
    let tol = 1e-14 * scale;

    for _sweep in 0..60 {
        let mut off: f64 = 0.0;
        for p in 0..n - 1 {
            for q in p + 1..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let b = apq.norm();
                if b <= tol {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let phase = apq / b; // e^{i arg(a_pq)}
                let tau = (aqq - app) / (2.0 * b);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Columns: R = [[c, -s·phase], [s·conj(phase), c]] on (p, q).
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = c * mip + s * phase.conj() * miq;
                    m[(i, q)] = -s * phase * mip + c * miq;
                }
                // Rows with R†.
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = c * mpj + s * phase * mqj;
                    m[(q, j)] = -s * phase.conj() * mpj + c * mqj;
                }
            }
        }
    }

    let mut eigs: Vec<f64> = m.diag().iter().map(|z| z.re).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}
