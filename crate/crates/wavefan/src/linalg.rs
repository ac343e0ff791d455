//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues of a real square matrix as complex numbers (unordered).
/// The underlying Schur iteration is capped; an unbounded iteration can
/// stall on nearly defective input.
pub fn complex_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Hyperbolicity("Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Real eigenvalues, sorted ascending. Fails if any eigenvalue has an
/// imaginary part larger than `tol_imag` relative to the matrix scale.
pub fn real_eigenvalues_sorted(a: &DMatrix<f64>, tol_imag: f64) -> Result<Vec<f64>> {
    let scale = a.norm().max(1.0);
    let mut out = Vec::with_capacity(a.nrows());
    for z in complex_eigenvalues(a)? {
        if z.im.abs() > tol_imag * scale {
            return Err(Error::Hyperbolicity(format!(
                "complex eigenvalue {} + {}i beyond tolerance {:.3e}",
                z.re,
                z.im,
                tol_imag * scale
            )));
        }
        out.push(z.re);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

/// Eigenvalues of a symmetric matrix, sorted ascending. More robust than
/// the general Schur path for symmetric input.
pub fn symmetric_eigenvalues_sorted(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut eigs: Vec<f64> = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Orthonormal basis of the (numerical) kernel of `a`, of prescribed
/// dimension. Returns the basis as matrix columns together with the largest
/// singular value assigned to the kernel, which measures how far `a` is from
/// having a kernel of that dimension.
pub fn nullspace_basis(a: &DMatrix<f64>, dim: usize) -> (DMatrix<f64>, f64) {
    let m = a.ncols();
    assert!(dim >= 1 && dim <= m);
    // svd() sorts singular values descending, so the kernel directions are
    // the last rows of V^T.
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("SVD requested V^T");
    let basis = v_t.rows(m - dim, dim).transpose();
    let residual = svd.singular_values[m - dim];
    (basis, residual)
}

/// Rotate an orthonormal column basis within its span so that it best matches
/// `reference` (orthogonal Procrustes). Returns the aligned basis and the
/// smallest singular value of `basis^T reference`; a value near 1 means the
/// two subspaces almost coincide, a value near 0 means they are nearly
/// orthogonal in some direction.
pub fn procrustes_align(basis: &DMatrix<f64>, reference: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let overlap = basis.transpose() * reference;
    let svd = overlap.clone().svd(true, true);
    let u = svd.u.expect("SVD requested U");
    let v_t = svd.v_t.expect("SVD requested V^T");
    let rotation = u * v_t;
    let quality = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    (basis * rotation, quality)
}

/// Gauss–Legendre nodes and weights on [0, 1], computed by the Golub–Welsch
/// eigenvalue method. Nodes come back sorted ascending.
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / (4.0 * (k as f64) * (k as f64) - 1.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let q0 = eig.eigenvectors[(0, i)];
            (0.5 * (x + 1.0), q0 * q0) // weight 2*q0^2 on [-1,1], halved for [0,1]
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    (
        pairs.iter().map(|p| p.0).collect(),
        pairs.iter().map(|p| p.1).collect(),
    )
}

/// Symmetric positive-definite square root `a^{1/2}`.
pub fn spd_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_power(a, 0.5)
}

/// Symmetric positive-definite inverse square root `a^{-1/2}`.
pub fn spd_inv_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_power(a, -0.5)
}

fn spd_power(a: &DMatrix<f64>, p: f64) -> Result<DMatrix<f64>> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let floor = 1e-14 * a.norm().max(1.0);
    if eig.eigenvalues.iter().any(|&l| l <= floor) {
        return Err(Error::Convexity(format!(
            "matrix not positive definite (min eigenvalue {:.3e})",
            eig.eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
        )));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(p)));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Central-difference derivative of a scalar function along a direction.
pub fn directional_derivative<F: Fn(&DVector<f64>) -> f64>(
    f: F,
    x: &DVector<f64>,
    dir: &DVector<f64>,
    h: f64,
) -> f64 {
    let plus = f(&(x + dir * h));
    let minus = f(&(x - dir * h));
    (plus - minus) / (2.0 * h)
}

/// Central-difference Jacobian of a vector-valued map.
pub fn fd_jacobian<F: Fn(&DVector<f64>) -> DVector<f64>>(
    f: F,
    x: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let n = x.len();
    let fx = f(x);
    let m = fx.len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let col = (f(&xp) - f(&xm)) / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}

/// Central-difference Hessian of a scalar function.
pub fn fd_hessian<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut hess = DMatrix::zeros(n, n);
    let fx = f(x);
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                (f(&xp) - 2.0 * fx + f(&xm)) / (h * h)
            } else {
                let mut xpp = x.clone();
                let mut xpm = x.clone();
                let mut xmp = x.clone();
                let mut xmm = x.clone();
                xpp[i] += h;
                xpp[j] += h;
                xpm[i] += h;
                xpm[j] -= h;
                xmp[i] -= h;
                xmp[j] += h;
                xmm[i] -= h;
                xmm[j] -= h;
                (f(&xpp) - f(&xpm) - f(&xmp) + f(&xmm)) / (4.0 * h * h)
            };
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}
