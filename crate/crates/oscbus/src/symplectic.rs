//! Symplectic linear algebra: the fundamental form, group membership tests,
//! the Williamson normal form of positive definite quadratic Hamiltonians,
//! and structural checks on their block layout.
//!
//! Phase-space ordering is (q_1…q_n, p_1…p_n) throughout, so the fundamental
//! form is the block matrix J = [[0, I], [-I, 0]].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{sqrtm_spd, sym_eig};

/// Symmetric Hessian of a quadratic Hamiltonian H = ½ xᵀ M x over the
/// (q…, p…) phase-space ordering. Entries carry angular-frequency units
/// under the mass convention M·Ω = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub n_modes: usize,
    pub matrix: DMatrix<f64>,
}

impl QuadraticForm {
    /// Validates dimensions and symmetry (1e-12 relative to the largest entry).
    pub fn new(n_modes: usize, matrix: DMatrix<f64>) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidDimension("quadratic form needs n_modes >= 1".into()));
        }
        let dim = 2 * n_modes;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidDimension(format!(
                "quadratic form for {n_modes} modes needs a {dim}x{dim} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInput(format!(
                "quadratic form is not symmetric (asymmetry {asym:.3e})"
            )));
        }
        Ok(Self { n_modes, matrix })
    }

    /// The n×n blocks (M_Q, M_C, M_P) of the (q…, p…) layout.
    pub fn blocks(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let n = self.n_modes;
        let mq = self.matrix.view((0, 0), (n, n)).into_owned();
        let mc = self.matrix.view((0, n), (n, n)).into_owned();
        let mp = self.matrix.view((n, n), (n, n)).into_owned();
        (mq, mc, mp)
    }
}

/// The fundamental antisymmetric form J of a 2n-dimensional phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticFormMatrix {
    pub n_modes: usize,
    pub matrix: DMatrix<f64>,
}

/// Builds J = [[0, I], [-I, 0]] with integer entries.
pub fn symplectic_form(n: usize) -> Result<SymplecticFormMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension("symplectic form needs n >= 1".into()));
    }
    let mut j = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = 1.0;
        j[(n + k, k)] = -1.0;
    }
    Ok(SymplecticFormMatrix { n_modes: n, matrix: j })
}

/// Bare J matrix for internal use.
pub(crate) fn j_matrix(n: usize) -> DMatrix<f64> {
    symplectic_form(n).expect("n >= 1").matrix
}

/// True iff ‖SᵀJS − J‖_max ≤ tol.
pub fn is_symplectic(s: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let dim = s.nrows();
    if s.ncols() != dim || dim % 2 != 0 || dim == 0 {
        return Err(Error::InvalidDimension(
            "symplecticity test needs a square even-dimensional matrix".into(),
        ));
    }
    let j = j_matrix(dim / 2);
    let resid = (s.transpose() * &j * s - &j).amax();
    Ok(resid <= tol)
}

/// Williamson normal form: a symplectic S with S M Sᵀ = Diag(ς…, ς…) in the
/// doubled-pair layout, the ascending symplectic spectrum, and the orthogonal
/// factor O of the decomposition S = Λ^{1/2} O M^{-1/2}.
#[derive(Debug, Clone)]
pub struct WilliamsonDecomposition {
    pub s: DMatrix<f64>,
    pub spectrum: Vec<f64>,
    pub o: DMatrix<f64>,
}

/// Report on the two block-structure conditions under which M can be brought
/// to normal form by a symplectic rotation composed with a positive diagonal
/// squeeze L ⊕ L^{-1}.
#[derive(Debug, Clone)]
pub struct NormalFormReport {
    pub conditions_hold: bool,
    /// Diagonal of the squeeze factor, when constructible from the
    /// decomposition (S Sᵀ diagonal).
    pub l: Option<Vec<f64>>,
    /// The symplectic-orthogonal factor R = (L ⊕ L^{-1}) S, when constructible.
    pub r: Option<DMatrix<f64>>,
    /// Max-norm residuals of the two conditions.
    pub residuals: [f64; 2],
}

/// Partition of mode indices (0-based) into degeneracy groups of the
/// symplectic spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrouping {
    pub groups: Vec<Vec<usize>>,
    pub tolerance: f64,
}

fn check_positive_definite(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (vals, _) = sym_eig(m);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 1e-12 * max.max(0.0)) {
        return Err(Error::NotPositiveDefinite { eigenvalue: min });
    }
    Ok(vals)
}

/// Deterministic basis canonicalization: sign-fix each vector so its first
/// component of magnitude > 1e-12 is positive, then sort descending by
/// lexicographic comparison of absolute component vectors.
fn canonicalize_basis(basis: &mut [DVector<f64>]) {
    for v in basis.iter_mut() {
        if let Some(x) = v.iter().find(|x| x.abs() > 1e-12) {
            if *x < 0.0 {
                *v = -&*v;
            }
        }
    }
    basis.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b.iter()) {
            match y.abs().partial_cmp(&x.abs()).unwrap() {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    });
}

/// Williamson decomposition of a positive definite quadratic form.
///
/// Algorithm: with K = M^{1/2} J M^{1/2} (antisymmetric), the symmetric
/// matrix KᵀK = −K² has each ς² as a doubly degenerate eigenvalue. Pairing
/// every unit eigenvector u with v = −K u / ς yields an orthonormal set with
/// uᵀKv = ς, so stacking the u rows over the v rows gives the orthogonal
/// factor O of O K Oᵀ = Λ J, and S = Λ^{1/2} O M^{-1/2}.
pub fn williamson(m: &QuadraticForm) -> Result<WilliamsonDecomposition> {
    let n = m.n_modes;
    check_positive_definite(&m.matrix)?;
    let (root, inv_root) = sqrtm_spd(&m.matrix)?;
    let j = j_matrix(n);
    let k = &root * &j * &root;

    let p = k.transpose() * &k;
    let (vals, vecs) = sym_eig(&p);
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
    let scale = vals[order[2 * n - 1]].abs().max(1e-300);

    // Cluster the (doubly degenerate) eigenvalues of KᵀK, then pair vectors
    // within each cluster.
    let mut us: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut vs: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut spectrum: Vec<f64> = Vec::with_capacity(n);
    let mut start = 0;
    while start < 2 * n {
        let mut end = start + 1;
        while end < 2 * n && (vals[order[end]] - vals[order[start]]).abs() <= 1e-8 * scale {
            end += 1;
        }
        let cluster = &order[start..end];
        if cluster.len() % 2 != 0 {
            return Err(Error::InvalidInput(
                "symplectic eigenvalue cluster of odd multiplicity; \
                 degeneracy tolerance split a doubled pair"
                    .into(),
            ));
        }
        let mut basis: Vec<DVector<f64>> =
            cluster.iter().map(|&i| vecs.column(i).into_owned()).collect();
        canonicalize_basis(&mut basis);

        let pairs = cluster.len() / 2;
        let mut taken: Vec<DVector<f64>> = Vec::with_capacity(cluster.len());
        let mut iter = basis.into_iter();
        while taken.len() < 2 * pairs {
            let mut w = iter.next().ok_or_else(|| {
                Error::InvalidInput("eigenspace basis exhausted during symplectic pairing".into())
            })?;
            // Project out the pairs already chosen in this cluster.
            for t in &taken {
                let c = t.dot(&w);
                w -= t * c;
            }
            let norm = w.norm();
            if norm < 1e-8 {
                continue; // dependent on chosen pairs; try the next basis vector
            }
            let u = w / norm;
            let ku = &k * &u;
            let s_val = ku.norm();
            let v = -ku / s_val;
            spectrum.push(s_val);
            taken.push(u.clone());
            taken.push(v.clone());
            us.push(u);
            vs.push(v);
        }
        start = end;
    }

    // Ascending order of the clusters is inherited from the eigenvalue sort.
    let mut o = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for (i, u) in us.iter().enumerate() {
        o.row_mut(i).copy_from(&u.transpose());
    }
    for (i, v) in vs.iter().enumerate() {
        o.row_mut(n + i).copy_from(&v.transpose());
    }

    let mut lam_sqrt = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        let r = spectrum[i].sqrt();
        lam_sqrt[(i, i)] = r;
        lam_sqrt[(n + i, n + i)] = r;
    }
    let s = &lam_sqrt * &o * &inv_root;
    Ok(WilliamsonDecomposition { s, spectrum, o })
}

/// Symplectic spectrum from the moduli of the imaginary eigenvalues of J·M,
/// sorted ascending.
pub fn symplectic_spectrum(m: &QuadraticForm) -> Result<Vec<f64>> {
    check_positive_definite(&m.matrix)?;
    let n = m.n_modes;
    let jm = j_matrix(n) * &m.matrix;
    let eig = jm.complex_eigenvalues();
    let mut mods: Vec<f64> = eig.iter().map(|z| z.im.abs()).collect();
    mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Eigenvalues come in ±iς pairs; keep one representative of each.
    Ok((0..n).map(|k| 0.5 * (mods[2 * k] + mods[2 * k + 1])).collect())
}

/// Evaluates the two block conditions under which a symplectic rotation
/// (composed with a diagonal squeeze) already brings M to normal form:
///   [M_Q, M_P] = M_C² − (M_Cᵀ)²   and
///   M_P M_C − M_Cᵀ M_P = M_C M_Q − M_Q M_Cᵀ.
/// When they hold and the Williamson S has diagonal S Sᵀ, the squeeze
/// diagonal L and the rotation R = (L ⊕ L^{-1}) S are returned.
pub fn check_normal_form_conditions(m: &QuadraticForm) -> Result<NormalFormReport> {
    let (mq, mc, mp) = m.blocks();
    let r1 = (&mq * &mp - &mp * &mq - &mc * &mc + mc.transpose() * mc.transpose()).amax();
    let r2 = (&mp * &mc - mc.transpose() * &mp - &mc * &mq + &mq * mc.transpose()).amax();
    let tol = 1e-10 * m.matrix.amax();
    let conditions_hold = r1 <= tol && r2 <= tol;

    let mut l_out = None;
    let mut r_out = None;
    if conditions_hold {
        if let Ok(w) = williamson(m) {
            let n = m.n_modes;
            let g = &w.s * w.s.transpose();
            // S Sᵀ must be L^{-2} ⊕ L² for the rotation factor to exist.
            let mut off = 0.0f64;
            for i in 0..2 * n {
                for jx in 0..2 * n {
                    if i != jx {
                        off = off.max(g[(i, jx)].abs());
                    }
                }
            }
            let mut consistent = off <= 1e-8 * g.amax();
            let mut l = vec![0.0; n];
            for i in 0..n {
                l[i] = g[(n + i, n + i)].sqrt();
                if (g[(i, i)] * g[(n + i, n + i)] - 1.0).abs() > 1e-8 {
                    consistent = false;
                }
            }
            if consistent {
                let mut lmat = DMatrix::<f64>::zeros(2 * n, 2 * n);
                for i in 0..n {
                    lmat[(i, i)] = l[i];
                    lmat[(n + i, n + i)] = 1.0 / l[i];
                }
                let r = lmat * &w.s;
                let orth = (&r * r.transpose() - DMatrix::identity(2 * n, 2 * n)).amax();
                if orth <= 1e-8 && is_symplectic(&r, 1e-8)? {
                    l_out = Some(l);
                    r_out = Some(r);
                }
            }
        }
    }
    Ok(NormalFormReport { conditions_hold, l: l_out, r: r_out, residuals: [r1, r2] })
}

/// Groups an ascending spectrum into degeneracy classes: a new group starts
/// wherever the gap between consecutive values exceeds the tolerance.
pub fn group_degenerate_modes(spectrum: &[f64], tol: f64) -> Result<ModeGrouping> {
    if tol < 0.0 {
        return Err(Error::InvalidArgument("degeneracy tolerance must be nonnegative".into()));
    }
    if spectrum.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("spectrum must be ascending".into()));
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &s) in spectrum.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (s - spectrum[*g.last().unwrap()]).abs() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    Ok(ModeGrouping { groups, tolerance: tol })
}

/// Default degeneracy tolerance: 1e-9 of the largest symplectic eigenvalue.
pub fn default_degeneracy_tol(spectrum: &[f64]) -> f64 {
    1e-9 * spectrum.iter().cloned().fold(0.0, f64::max)
}
