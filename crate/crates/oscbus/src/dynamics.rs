//! Exact Gaussian dynamics: covariance matrices and means evolving under
//! dV/dt = ΓV + VΓᵀ + D with drift Γ = JH − Im(Υ)J and diffusion D = ħ·Re(Υ)
//! for Lindblad operators linear in the phase-space coordinates.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{solve_lyapunov, van_loan_step};
use crate::symplectic::{is_symplectic, j_matrix, QuadraticForm};

type C64 = Complex<f64>;

/// Covariance matrix plus mean vector at a time stamp; the dynamical object
/// of the engine. V carries units of ħ.
#[derive(Debug, Clone)]
pub struct CovarianceState {
    pub v: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub t: f64,
}

impl CovarianceState {
    pub fn new(v: DMatrix<f64>, mean: DVector<f64>, t: f64) -> Result<Self> {
        let dim = v.nrows();
        if v.ncols() != dim || dim % 2 != 0 || dim == 0 {
            return Err(Error::InvalidDimension("CM must be square and even-dimensional".into()));
        }
        if mean.len() != dim {
            return Err(Error::InvalidDimension("mean vector length must match the CM".into()));
        }
        let scale = v.amax().max(1.0);
        if (&v - v.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidState("CM is not symmetric".into()));
        }
        Ok(Self { v, mean, t })
    }

    pub fn n_modes(&self) -> usize {
        self.v.nrows() / 2
    }

    /// Smallest eigenvalue of V + (iħ/2)J; nonnegative (up to roundoff) for
    /// physical states.
    pub fn uncertainty_margin(&self, hbar: f64) -> f64 {
        let n = self.n_modes();
        let j = j_matrix(n);
        let mut h = DMatrix::<C64>::zeros(2 * n, 2 * n);
        for r in 0..2 * n {
            for c in 0..2 * n {
                h[(r, c)] = C64::new(self.v[(r, c)], hbar / 2.0 * j[(r, c)]);
            }
        }
        let eig = nalgebra::SymmetricEigen::new(h);
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Checks the uncertainty relation within the stated tolerance.
    pub fn check_physical(&self, hbar: f64) -> Result<()> {
        let margin = self.uncertainty_margin(hbar);
        if margin < -1e-10 * self.v.amax().max(1.0) {
            return Err(Error::InvalidState(format!(
                "CM violates the uncertainty relation (margin {margin:.3e})"
            )));
        }
        Ok(())
    }
}

/// Thermal bath shorthand parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalBath {
    pub zeta: f64,
    pub n_th: f64,
}

/// Lindblad noise: coefficient vectors λ_(k) and their decoherence matrix
/// Υ = Σ λλ†. Drift and diffusion are obtained by binding to a Hessian via
/// `drift_and_diffusion`.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub lambdas: Vec<DVector<C64>>,
    pub upsilon: DMatrix<C64>,
    pub bath: Option<ThermalBath>,
}

impl NoiseModel {
    /// Builds Υ from the λ vectors directly.
    pub fn from_lambdas(lambdas: Vec<DVector<C64>>, dim: usize) -> Result<Self> {
        let mut upsilon = DMatrix::<C64>::zeros(dim, dim);
        for l in &lambdas {
            if l.len() != dim {
                return Err(Error::InvalidDimension("lambda vector length mismatch".into()));
            }
            upsilon += l * l.adjoint();
        }
        Ok(Self { lambdas, upsilon, bath: None })
    }

    /// No noise at all (closed system).
    pub fn closed(dim: usize) -> Self {
        Self {
            lambdas: Vec::new(),
            upsilon: DMatrix::zeros(dim, dim),
            bath: Some(ThermalBath { zeta: 0.0, n_th: 0.0 }),
        }
    }

    pub fn re_upsilon(&self) -> DMatrix<f64> {
        self.upsilon.map(|z| z.re)
    }

    pub fn im_upsilon(&self) -> DMatrix<f64> {
        self.upsilon.map(|z| z.im)
    }
}

/// Time grid and states of one propagation.
#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub times: Vec<f64>,
    pub states: Vec<CovarianceState>,
}

/// Local independent thermal baths on every oscillator of an n-mode phase
/// space: per site, an annihilation vector of weight √(ζ(n̄+1)/2) and a
/// creation vector of weight √(ζn̄/2), giving Υ = ζ(n̄+½)I − (i/2)ζJ.
pub fn thermal_bath_noise_for_dim(n_modes: usize, zeta: f64, n_th: f64) -> Result<NoiseModel> {
    if zeta < 0.0 || n_th < 0.0 {
        return Err(Error::InvalidArgument("bath parameters must be nonnegative".into()));
    }
    let dim = 2 * n_modes;
    let mut lambdas = Vec::with_capacity(2 * n_modes);
    let down = (zeta * (n_th + 1.0) / 2.0).sqrt();
    let up = (zeta * n_th / 2.0).sqrt();
    for k in 0..n_modes {
        if down > 0.0 {
            let mut l = DVector::<C64>::zeros(dim);
            l[k] = C64::new(0.0, down);
            l[n_modes + k] = C64::new(-down, 0.0);
            lambdas.push(l);
        }
        if up > 0.0 {
            let mut l = DVector::<C64>::zeros(dim);
            l[k] = C64::new(0.0, -up);
            l[n_modes + k] = C64::new(-up, 0.0);
            lambdas.push(l);
        }
    }
    let mut model = NoiseModel::from_lambdas(lambdas, dim)?;
    model.bath = Some(ThermalBath { zeta, n_th });
    Ok(model)
}

/// Thermal baths over the full system phase space (2 externals + network).
pub fn thermal_bath_noise(
    spec: &crate::network::SystemSpec,
    zeta: f64,
    n_th: f64,
) -> Result<NoiseModel> {
    thermal_bath_noise_for_dim(spec.network.n_sites() + 2, zeta, n_th)
}

/// Binds a noise model to a Hessian: Γ = JH − Im(Υ)J, D = ħ·Re(Υ).
pub fn drift_and_diffusion(
    h: &QuadraticForm,
    noise: &NoiseModel,
    hbar: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let dim = 2 * h.n_modes;
    if noise.upsilon.nrows() != dim {
        return Err(Error::InvalidDimension(format!(
            "noise dimension {} does not match Hessian dimension {dim}",
            noise.upsilon.nrows()
        )));
    }
    let j = j_matrix(h.n_modes);
    let gamma = &j * &h.matrix - noise.im_upsilon() * &j;
    let d = noise.re_upsilon() * hbar;
    Ok((gamma, d))
}

/// Propagates a covariance state over a sorted time grid. Each segment uses
/// the augmented block exponential, so the result is exact up to matrix-
/// exponential accuracy; the propagator for a repeated step length is reused.
pub fn propagate_cm(
    gamma: &DMatrix<f64>,
    d: &DMatrix<f64>,
    v0: &CovarianceState,
    times: &[f64],
) -> Result<PropagationResult> {
    let dim = v0.v.nrows();
    if gamma.nrows() != dim || d.nrows() != dim {
        return Err(Error::InvalidDimension("drift/diffusion dimension mismatch".into()));
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("time grid must be nondecreasing".into()));
    }
    if times[0] < v0.t {
        return Err(Error::InvalidArgument(
            "time grid starts before the initial state's time stamp".into(),
        ));
    }
    let horizon = times.last().unwrap() - v0.t;
    if gamma.amax() * horizon > 1e4 {
        log::warn!(
            "propagation horizon {horizon:.3e} with drift norm {:.3e} may be ill-conditioned",
            gamma.amax()
        );
    }

    let mut states = Vec::with_capacity(times.len());
    let mut v = v0.v.clone();
    let mut mean = v0.mean.clone();
    let mut t = v0.t;
    // One Van Loan exponential per distinct step length (uniform grids cost
    // a single exponential).
    let mut cache: Vec<(u64, DMatrix<f64>, DMatrix<f64>)> = Vec::new();
    for &tk in times {
        let dt = tk - t;
        if dt > 0.0 {
            let key = dt.to_bits();
            let (e, integral) = match cache.iter().find(|(k, _, _)| *k == key) {
                Some((_, e, i)) => (e.clone(), i.clone()),
                None => {
                    let (e, i) = van_loan_step(gamma, d, dt);
                    cache.push((key, e.clone(), i.clone()));
                    (e, i)
                }
            };
            v = &e * &v * e.transpose() + integral;
            v = (&v + v.transpose()) * 0.5;
            mean = &e * mean;
            t = tk;
        }
        states.push(CovarianceState { v: v.clone(), mean: mean.clone(), t: tk });
    }
    Ok(PropagationResult { times: times.to_vec(), states })
}

/// Unique steady state of ΓV + VΓᵀ + D = 0 for Hurwitz Γ.
pub fn steady_state(gamma: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<CovarianceState> {
    let eig = gamma.clone().complex_eigenvalues();
    let thresh = -1e-12 * gamma.amax();
    let offenders: Vec<f64> =
        eig.iter().filter(|z| z.re >= thresh).map(|z| z.re).collect();
    if !offenders.is_empty() {
        return Err(Error::NoSteadyState(offenders));
    }
    let v = solve_lyapunov(gamma, d)?;
    let resid = (gamma * &v + &v * gamma.transpose() + d).amax();
    if resid > 1e-10 * d.amax().max(1.0) {
        return Err(Error::InvalidState(format!("steady-state residual {resid:.3e} too large")));
    }
    let dim = v.nrows();
    CovarianceState::new(v, DVector::zeros(dim), f64::INFINITY)
}

/// Transforms a noise model into normal-mode coordinates: λ → S₀^{−ᵀ}λ and
/// Υ → S₀^{−ᵀ} Υ S₀^{−1}, using S^{−1} = Jᵀ Sᵀ J for symplectic S.
pub fn transform_noise_to_modes(noise: &NoiseModel, s0: &DMatrix<f64>) -> Result<NoiseModel> {
    if !is_symplectic(s0, 1e-10)? {
        return Err(Error::InvalidArgument("mode transform requires a symplectic matrix".into()));
    }
    let n = s0.nrows() / 2;
    let j = j_matrix(n);
    let s_inv = j.transpose() * s0.transpose() * &j;
    let s_inv_t = s_inv.transpose();
    let s_inv_c = s_inv.map(|x| C64::new(x, 0.0));
    let s_inv_t_c = s_inv_t.map(|x| C64::new(x, 0.0));

    let lambdas: Vec<DVector<C64>> = noise.lambdas.iter().map(|l| &s_inv_t_c * l).collect();
    let upsilon = &s_inv_t_c * &noise.upsilon * &s_inv_c;
    Ok(NoiseModel { lambdas, upsilon, bath: noise.bath })
}

/// Bath structure of one mode after transforming to normal coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeBathClass {
    /// Re Υ block proportional to the identity, no cross correlations.
    ThermalLocal,
    /// Diagonal but non-scalar block (position and momentum weighted
    /// unequally), no cross correlations.
    SqueezedLocal,
    /// Correlations with other modes (or within the block) survive.
    Nonlocal,
}

/// Per-mode classification plus the diagonal weights of the transformed
/// Re Υ block (q weight, p weight).
#[derive(Debug, Clone, Copy)]
pub struct ModeBathReport {
    pub class: ModeBathClass,
    pub q_weight: f64,
    pub p_weight: f64,
}

/// Classifies the bath seen by each normal mode after the S₀ transform.
pub fn classify_mode_baths(noise: &NoiseModel, s0: &DMatrix<f64>) -> Result<Vec<ModeBathReport>> {
    let transformed = transform_noise_to_modes(noise, s0)?;
    let re = transformed.re_upsilon();
    let n = re.nrows() / 2;
    let tol = 1e-10 * re.amax().max(1e-300);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let qw = re[(k, k)];
        let pw = re[(n + k, n + k)];
        let mut cross = re[(k, n + k)].abs();
        for jx in 0..n {
            if jx == k {
                continue;
            }
            cross = cross
                .max(re[(k, jx)].abs())
                .max(re[(k, n + jx)].abs())
                .max(re[(n + k, jx)].abs())
                .max(re[(n + k, n + jx)].abs());
        }
        let class = if cross > tol {
            ModeBathClass::Nonlocal
        } else if (qw - pw).abs() <= tol {
            ModeBathClass::ThermalLocal
        } else {
            ModeBathClass::SqueezedLocal
        };
        out.push(ModeBathReport { class, q_weight: qw, p_weight: pw });
    }
    Ok(out)
}
