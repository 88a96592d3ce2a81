//! Dense matrix kernels shared by the dynamics modules: scaling-and-squaring
//! Padé matrix exponential, symmetric square roots, a continuous Lyapunov
//! solver, and the augmented (Van Loan) exponential used to evaluate the
//! diffusion integral of the covariance-matrix solution in closed form.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

// Thresholds for the [m/m] diagonal Padé approximants (Higham 2005).
const THETA_3: f64 = 1.495_585_217_958_292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504_178_996_162_932e-1;
const THETA_9: f64 = 2.097_847_961_257_068;
const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_3: [f64; 4] = [120., 60., 12., 1.];
const PADE_5: [f64; 6] = [30240., 15120., 3360., 420., 30., 1.];
const PADE_7: [f64; 8] = [17_297_280., 8_648_640., 1_995_840., 277_200., 25_200., 1512., 56., 1.];
const PADE_9: [f64; 10] = [
    17_643_225_600.,
    8_821_612_800.,
    2_075_673_600.,
    302_702_400.,
    30_270_240.,
    2_162_160.,
    110_880.,
    3960.,
    90.,
    1.,
];
const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.,
    32_382_376_266_240_000.,
    7_771_770_303_897_600.,
    1_187_353_796_428_800.,
    129_060_195_264_000.,
    10_559_470_521_600.,
    670_442_572_800.,
    33_522_128_640.,
    1_323_241_920.,
    40_840_800.,
    960_960.,
    16_380.,
    182.,
    1.,
];

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solve the [m/m] Padé approximant r(A) = q(A)^{-1} p(A) given the even
/// powers of A, splitting p and q into even/odd parts.
fn pade_solve(a: &DMatrix<f64>, powers: &[&DMatrix<f64>], coeffs: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut u = DMatrix::<f64>::zeros(n, n); // odd part, before final A multiply
    let mut v = DMatrix::<f64>::zeros(n, n); // even part
    // powers[k] = A^{2k} with powers[0] = I.
    for (k, p) in powers.iter().enumerate() {
        let c_even = coeffs[2 * k];
        let c_odd = coeffs.get(2 * k + 1).copied().unwrap_or(0.0);
        v += *p * c_even;
        u += *p * c_odd;
    }
    let _ = id;
    let u = a * u;
    let q = &v - &u;
    let p = &v + &u;
    q.lu().solve(&p).expect("Pade denominator is nonsingular for scaled input")
}

/// Matrix exponential by scaling and squaring with diagonal Padé
/// approximants. Accurate to roughly unit roundoff for well-scaled inputs.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = one_norm(a);
    let id = DMatrix::<f64>::identity(n, n);
    if norm == 0.0 {
        return id;
    }

    let a2 = a * a;
    if norm <= THETA_3 {
        return pade_solve(a, &[&id, &a2], &PADE_3);
    }
    let a4 = &a2 * &a2;
    if norm <= THETA_5 {
        return pade_solve(a, &[&id, &a2, &a4], &PADE_5);
    }
    let a6 = &a4 * &a2;
    if norm <= THETA_7 {
        return pade_solve(a, &[&id, &a2, &a4, &a6], &PADE_7);
    }
    if norm <= THETA_9 {
        let a8 = &a6 * &a2;
        return pade_solve(a, &[&id, &a2, &a4, &a6, &a8], &PADE_9);
    }

    // Scale so that ||A/2^s|| <= theta_13, apply Pade-13, square back.
    let s = ((norm / THETA_13).log2().ceil().max(0.0)) as u32;
    let scale = 2f64.powi(-(s as i32));
    let a_s = a * scale;
    let a2 = &a_s * &a_s;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    // Pade-13 with the factored evaluation of Higham: split the coefficient
    // list around A^6 to avoid forming A^8..A^12 explicitly.
    let b = &PADE_13;
    let u_hi = &a6 * (b[13] * &a6 + b[11] * &a4 + b[9] * &a2);
    let u_lo = b[7] * &a6 + b[5] * &a4 + b[3] * &a2 + b[1] * &id;
    let u = &a_s * (u_hi + u_lo);
    let v_hi = &a6 * (b[12] * &a6 + b[10] * &a4 + b[8] * &a2);
    let v = v_hi + b[6] * &a6 + b[4] * &a4 + b[2] * &a2 + b[0] * &id;
    let q = &v - &u;
    let p = &v + &u;
    let mut r = q.lu().solve(&p).expect("Pade denominator is nonsingular for scaled input");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Symmetric eigendecomposition helper returning (eigenvalues, eigenvectors).
pub fn sym_eig(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let se = nalgebra::SymmetricEigen::new(m.clone());
    (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
}

/// Principal square root of a symmetric positive definite matrix, with
/// eigenvalue clamping at 1e-14 of the largest eigenvalue to guard roundoff.
/// Returns (M^{1/2}, M^{-1/2}).
pub fn sqrtm_spd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (vals, vecs) = sym_eig(m);
    let max = vals.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            eigenvalue: vals.iter().cloned().fold(f64::INFINITY, f64::min),
        });
    }
    let floor = 1e-14 * max;
    let n = m.nrows();
    let mut root = DMatrix::zeros(n, n);
    let mut inv_root = DMatrix::zeros(n, n);
    for k in 0..n {
        let lam = vals[k].max(floor);
        let s = lam.sqrt();
        let v = vecs.column(k);
        root += v * v.transpose() * s;
        inv_root += v * v.transpose() / s;
    }
    Ok((root, inv_root))
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn sym_eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    let (vals, _) = sym_eig(m);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Solve the continuous Lyapunov equation A X + X A^T + Q = 0 by
/// vectorization. Intended for the moderate dimensions of this engine
/// (phase spaces of a few tens of modes).
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::InvalidDimension(
            "Lyapunov solve needs square matrices of equal size".into(),
        ));
    }
    // (I (x) A + A (x) I) vec(X) = -vec(Q), column-major vec.
    let nn = n * n;
    let mut k = DMatrix::<f64>::zeros(nn, nn);
    for col in 0..n {
        for row in 0..n {
            let r = col * n + row;
            // vec(AX): block-diagonal copies of A.
            for j in 0..n {
                k[(r, col * n + j)] += a[(row, j)];
            }
            // vec(XA^T): (A (x) I).
            for j in 0..n {
                k[(r, j * n + row)] += a[(col, j)];
            }
        }
    }
    let rhs = nalgebra::DVector::from_iterator(nn, q.iter().map(|x| -x));
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidInput("singular Lyapunov operator".into()))?;
    let mut x = DMatrix::from_iterator(n, n, sol.iter().copied());
    // Symmetrize: the exact solution is symmetric for symmetric Q.
    x = (&x + x.transpose()) * 0.5;
    Ok(x)
}

/// One step of the covariance propagation over an interval dt: returns the
/// propagator E = exp(G dt) together with the accumulated diffusion
/// integral  I(dt) = ∫_0^dt exp(G s) D exp(G^T s) ds,
/// both obtained from a single augmented block exponential.
pub fn van_loan_step(gamma: &DMatrix<f64>, d: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = gamma.nrows();
    // M = [[-G, D], [0, G^T]] * dt;  exp(M) = [[F11, F12], [0, F22]]
    // with F22 = exp(G^T dt) and exp(G dt) = F22^T, and the integral
    // equal to F22^T F12.
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = -gamma[(i, j)] * dt;
            m[(i, n + j)] = d[(i, j)] * dt;
            m[(n + i, n + j)] = gamma[(j, i)] * dt;
        }
    }
    let f = expm(&m);
    let f12 = f.view((0, n), (n, n)).into_owned();
    let f22 = f.view((n, n), (n, n)).into_owned();
    let e = f22.transpose();
    let integral = &e * f12;
    // The integral is symmetric for symmetric D; enforce it.
    let integral = (&integral + integral.transpose()) * 0.5;
    (e, integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn expm_of_zero_is_identity() {
        let a = DMatrix::<f64>::zeros(4, 4);
        assert_eq!(expm(&a), DMatrix::identity(4, 4));
    }

    #[test]
    fn expm_matches_rotation_closed_form() {
        let th = 0.7;
        let a = dmatrix![0.0, -th; th, 0.0];
        let e = expm(&a);
        assert!((e[(0, 0)] - th.cos()).abs() < 1e-14);
        assert!((e[(1, 0)] - th.sin()).abs() < 1e-14);
    }

    #[test]
    fn expm_handles_large_norm_via_scaling() {
        let th = 200.0;
        let a = dmatrix![0.0, -th; th, 0.0];
        let e = expm(&a);
        assert!((e[(0, 0)] - th.cos()).abs() < 1e-10);
        assert!((e[(0, 1)] + th.sin()).abs() < 1e-10);
    }

    #[test]
    fn expm_semigroup() {
        let a = dmatrix![0.1, 0.3, -0.2; 0.0, -0.4, 0.5; 0.2, 0.1, -0.1];
        let lhs = expm(&(&a * 1.3));
        let rhs = expm(&(&a * 0.6)) * expm(&(&a * 0.7));
        assert!((lhs - rhs).amax() < 1e-13);
    }

    #[test]
    fn sqrtm_roundtrip() {
        let m = dmatrix![4.0, 1.0; 1.0, 3.0];
        let (r, ri) = sqrtm_spd(&m).unwrap();
        assert!((&r * &r - &m).amax() < 1e-12);
        assert!((&r * &ri - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn lyapunov_diagonal_balance() {
        // A = -(z/2) I, Q = z c I  =>  X = c I.
        let z = 0.3;
        let c = 1.7;
        let a = DMatrix::<f64>::identity(4, 4) * (-z / 2.0);
        let q = DMatrix::<f64>::identity(4, 4) * (z * c);
        let x = solve_lyapunov(&a, &q).unwrap();
        assert!((x - DMatrix::identity(4, 4) * c).amax() < 1e-12);
    }

    #[test]
    fn van_loan_matches_scalar_ode() {
        // G = -g I, D = d I: integral = d (1 - e^{-2 g t}) / (2 g).
        let g = 0.4;
        let d = 0.9;
        let t = 1.7;
        let gm = DMatrix::<f64>::identity(3, 3) * (-g);
        let dm = DMatrix::<f64>::identity(3, 3) * d;
        let (e, i) = van_loan_step(&gm, &dm, t);
        let expect_e = (-g * t).exp();
        let expect_i = d * (1.0 - (-2.0 * g * t).exp()) / (2.0 * g);
        assert!((e - DMatrix::identity(3, 3) * expect_e).amax() < 1e-13);
        assert!((i - DMatrix::identity(3, 3) * expect_i).amax() < 1e-13);
    }
}
