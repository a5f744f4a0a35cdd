//! Small dense linear algebra on fixed-size row-major arrays.
//!
//! Only what the Riccati solver and the stability test need: products,
//! a pivoted dense solve, a Lyapunov solve through the Kronecker form, and
//! eigenvalues through the characteristic polynomial.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat<const N: usize> = [[f64; N]; N];
pub type Mat4 = Mat<4>;

pub fn zeros<const N: usize>() -> Mat<N> {
    [[0.0; N]; N]
}

pub fn identity<const N: usize>() -> Mat<N> {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn diag<const N: usize>(d: [f64; N]) -> Mat<N> {
    let mut m = zeros();
    for i in 0..N {
        m[i][i] = d[i];
    }
    m
}

pub fn transpose<const N: usize>(a: &Mat<N>) -> Mat<N> {
    let mut t = zeros();
    for i in 0..N {
        for j in 0..N {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn mul<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    let mut c = zeros();
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            for j in 0..N {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn add<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    let mut c = *a;
    for i in 0..N {
        for j in 0..N {
            c[i][j] += b[i][j];
        }
    }
    c
}

pub fn sub<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    let mut c = *a;
    for i in 0..N {
        for j in 0..N {
            c[i][j] -= b[i][j];
        }
    }
    c
}

pub fn scale<const N: usize>(a: &Mat<N>, s: f64) -> Mat<N> {
    let mut c = *a;
    c.iter_mut().flatten().for_each(|v| *v *= s);
    c
}

pub fn outer<const N: usize>(u: &[f64; N], v: &[f64; N]) -> Mat<N> {
    let mut c = zeros();
    for i in 0..N {
        for j in 0..N {
            c[i][j] = u[i] * v[j];
        }
    }
    c
}

pub fn mat_vec<const N: usize>(a: &Mat<N>, x: &[f64; N]) -> [f64; N] {
    let mut y = [0.0; N];
    for i in 0..N {
        y[i] = (0..N).map(|j| a[i][j] * x[j]).sum();
    }
    y
}

/// Row vector times matrix, `xᵀ A`.
pub fn vec_mat<const N: usize>(x: &[f64; N], a: &Mat<N>) -> [f64; N] {
    let mut y = [0.0; N];
    for j in 0..N {
        y[j] = (0..N).map(|i| x[i] * a[i][j]).sum();
    }
    y
}

pub fn dot<const N: usize>(x: &[f64; N], y: &[f64; N]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn frobenius<const N: usize>(a: &Mat<N>) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn trace<const N: usize>(a: &Mat<N>) -> f64 {
    (0..N).map(|i| a[i][i]).sum()
}

pub fn symmetrize<const N: usize>(a: &Mat<N>) -> Mat<N> {
    scale(&add(a, &transpose(a)), 0.5)
}

/// ‖A − Aᵀ‖_F
pub fn asymmetry<const N: usize>(a: &Mat<N>) -> f64 {
    frobenius(&sub(a, &transpose(a)))
}

/// Solves the `n × n` row-major system `m x = rhs` by Gaussian elimination
/// with partial pivoting. Returns `None` for a numerically singular matrix.
pub fn solve_dense(mut m: Vec<f64>, mut rhs: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    assert_eq!(m.len(), n * n);
    assert_eq!(rhs.len(), n);
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a * n + col].abs().total_cmp(&m[b * n + col].abs()))
            .unwrap();
        if m[pivot * n + col].abs() <= scale * 1e-14 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
            }
            rhs.swap(col, pivot);
        }
        let d = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[row * n + j] -= f * m[col * n + j];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|j| m[row * n + j] * x[j]).sum();
        x[row] = (rhs[row] - s) / m[row * n + row];
    }
    Some(x)
}

/// Solves `Aᵀ X + X A + C = 0` for `X`. Unique whenever no two eigenvalues
/// of `A` sum to zero, which holds for Hurwitz `A`.
pub fn solve_lyapunov<const N: usize>(a: &Mat<N>, c: &Mat<N>) -> Option<Mat<N>> {
    let n2 = N * N;
    let mut m = vec![0.0; n2 * n2];
    for i in 0..N {
        for j in 0..N {
            let row = i * N + j;
            for k in 0..N {
                // (AᵀX)_ij = Σ_k A_ki X_kj
                m[row * n2 + k * N + j] += a[k][i];
                // (XA)_ij = Σ_k X_ik A_kj
                m[row * n2 + i * N + k] += a[k][j];
            }
        }
    }
    let rhs: Vec<f64> = c.iter().flatten().map(|v| -v).collect();
    let x = solve_dense(m, rhs, n2)?;
    let mut out = zeros();
    for i in 0..N {
        for j in 0..N {
            out[i][j] = x[i * N + j];
        }
    }
    Some(symmetrize(&out))
}

/// Monic characteristic polynomial coefficients, highest degree first:
/// `[1, c_{n-1}, ..., c_0]` (Faddeev–LeVerrier).
pub fn char_poly<const N: usize>(a: &Mat<N>) -> Vec<f64> {
    let mut coeffs = vec![0.0; N + 1];
    coeffs[0] = 1.0;
    let mut mk: Mat<N> = zeros();
    for k in 1..=N {
        let mut next = mul(a, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += coeffs[k - 1];
        }
        mk = next;
        coeffs[k] = -trace(&mul(a, &mk)) / k as f64;
    }
    coeffs
}

fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(coeffs[0], 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in &coeffs[1..] {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of a real polynomial (highest degree first, nonzero
/// leading coefficient) by Aberth–Ehrlich simultaneous iteration.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let lead = coeffs[0];
    if lead == 0.0 || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::RootFinder);
    }
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let n = monic.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    // Cauchy bound on root moduli.
    let radius = 1.0 + monic[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let phase = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
            Complex64::from_polar(0.5 * radius, phase)
        })
        .collect();

    let mut converged = false;
    for _ in 0..2000 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let (p, dp) = horner(&monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        // Clustered roots converge only linearly; accept if the residual is
        // at roundoff level for every root.
        let ok = z.iter().all(|&zi| {
            let (p, _) = horner(&monic, zi);
            let mag: f64 = monic
                .iter()
                .enumerate()
                .map(|(k, c)| c.abs() * zi.norm().powi((n - k) as i32))
                .sum();
            p.norm() <= 1e-10 * mag.max(1.0)
        });
        if !ok {
            return Err(Error::RootFinder);
        }
    }
    Ok(z)
}

/// Eigenvalues of a real square matrix via its characteristic polynomial.
/// The matrix is scaled to unit Frobenius norm first to keep the
/// coefficients well conditioned.
pub fn eigenvalues<const N: usize>(a: &Mat<N>) -> Result<Vec<Complex64>> {
    if a.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let norm = frobenius(a);
    if norm == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); N]);
    }
    let scaled = scale(a, 1.0 / norm);
    let roots = poly_roots(&char_poly(&scaled))?;
    let mut eig: Vec<Complex64> = roots.into_iter().map(|r| r * norm).collect();
    eig.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(eig)
}
