//! Builders for the oscillator-network Hessians (linear chain, triangle,
//! momentum-coupled toy model, and user-supplied custom networks), assembly
//! of the full system Hessian with two external oscillators, and closed-form
//! Williamson decompositions for the structured topologies.
//!
//! Network sites are 1-based in specs and error messages, 0-based internally.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::sym_eig;
use crate::symplectic::{QuadraticForm, WilliamsonDecomposition};

/// Network topology and parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSpec {
    /// Open chain of N sites with equal frequencies and spring coupling κ.
    Chain { n: usize, omega: f64, kappa: f64 },
    /// Three sites: 1-2 and 1-3 coupled by κ, 2-3 by κ'.
    Triangle { omega: f64, kappa: f64, kappa_prime: f64 },
    /// Three sites with position-momentum cross couplings; requires
    /// ω > κ + γ for positive definiteness.
    MomentumCoupled { omega: f64, kappa: f64, gamma: f64 },
    /// Arbitrary network given by its (positive definite) Hessian.
    Custom { hessian: QuadraticForm },
}

impl NetworkSpec {
    pub fn n_sites(&self) -> usize {
        match self {
            NetworkSpec::Chain { n, .. } => *n,
            NetworkSpec::Triangle { .. } | NetworkSpec::MomentumCoupled { .. } => 3,
            NetworkSpec::Custom { hessian } => hessian.n_modes,
        }
    }

    /// The 2N-dimensional network Hessian.
    pub fn hessian(&self) -> Result<QuadraticForm> {
        match self {
            NetworkSpec::Chain { n, omega, kappa } => build_chain_hessian(*n, *omega, *kappa),
            NetworkSpec::Triangle { omega, kappa, kappa_prime } => {
                build_triangle_hessian(*omega, *kappa, *kappa_prime)
            }
            NetworkSpec::MomentumCoupled { omega, kappa, gamma } => {
                build_momentum_coupled_hessian(*omega, *kappa, *gamma)
            }
            NetworkSpec::Custom { hessian } => Ok(hessian.clone()),
        }
    }
}

/// Which external oscillator an attachment belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExternalId {
    A,
    B,
}

/// One spring ε/4·(q_site − q_ext)² between an external oscillator and a
/// network site (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    pub external: ExternalId,
    pub site: usize,
    pub epsilon: f64,
}

/// The full system: network, two external oscillators of frequency Ω
/// (mass convention M·Ω = 1), and their attachments.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub network: NetworkSpec,
    pub omega_ext: f64,
    pub attachments: Vec<Attachment>,
    pub hbar: f64,
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.omega_ext <= 0.0 {
            return Err(Error::InvalidArgument("external frequency must be positive".into()));
        }
        if self.hbar <= 0.0 {
            return Err(Error::InvalidArgument("hbar must be positive".into()));
        }
        let n = self.network.n_sites();
        for att in &self.attachments {
            if att.site == 0 || att.site > n {
                return Err(Error::InvalidArgument(format!(
                    "attachment site {} out of range 1..={n}",
                    att.site
                )));
            }
            if att.epsilon < 0.0 {
                return Err(Error::InvalidArgument("attachment strength must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

/// Chain potential matrix: diagonal ω+κ (ends ω+κ/2), off-diagonal −κ/2
/// on the two neighbor bands.
fn chain_potential(n: usize, omega: f64, kappa: f64) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        q[(j, j)] = omega + kappa;
        if j + 1 < n {
            q[(j, j + 1)] = -kappa / 2.0;
            q[(j + 1, j)] = -kappa / 2.0;
        }
    }
    q[(0, 0)] = omega + kappa / 2.0;
    q[(n - 1, n - 1)] = omega + kappa / 2.0;
    q
}

/// H_N = Q ⊕ ω·I for the open chain.
pub fn build_chain_hessian(n: usize, omega: f64, kappa: f64) -> Result<QuadraticForm> {
    if n < 2 {
        return Err(Error::InvalidArgument("chain needs at least 2 sites".into()));
    }
    if omega <= 0.0 || kappa < 0.0 {
        return Err(Error::InvalidArgument("chain needs omega > 0 and kappa >= 0".into()));
    }
    let q = chain_potential(n, omega, kappa);
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&q);
    for j in 0..n {
        h[(n + j, n + j)] = omega;
    }
    QuadraticForm::new(n, h)
}

fn triangle_potential(omega: f64, kappa: f64, kappa_prime: f64) -> DMatrix<f64> {
    let d = (kappa + kappa_prime) / 2.0 + omega;
    DMatrix::from_row_slice(
        3,
        3,
        &[
            kappa + omega,
            -kappa / 2.0,
            -kappa / 2.0,
            -kappa / 2.0,
            d,
            -kappa_prime / 2.0,
            -kappa / 2.0,
            -kappa_prime / 2.0,
            d,
        ],
    )
}

/// H_N = Q ⊕ ω·I₃ for the triangle (site 1 coupled to 2 and 3 by κ, sites
/// 2-3 coupled by κ').
pub fn build_triangle_hessian(omega: f64, kappa: f64, kappa_prime: f64) -> Result<QuadraticForm> {
    if omega <= 0.0 || kappa < 0.0 || kappa_prime < 0.0 {
        return Err(Error::InvalidArgument(
            "triangle needs omega > 0 and nonnegative couplings".into(),
        ));
    }
    let q = triangle_potential(omega, kappa, kappa_prime);
    let mut h = DMatrix::<f64>::zeros(6, 6);
    h.view_mut((0, 0), (3, 3)).copy_from(&q);
    for j in 0..3 {
        h[(3 + j, 3 + j)] = omega;
    }
    QuadraticForm::new(3, h)
}

fn momentum_cross_block(kappa: f64, gamma: f64) -> DMatrix<f64> {
    let k = kappa / 2f64.sqrt();
    DMatrix::from_row_slice(3, 3, &[gamma, -k, 0.0, -k, gamma, -k, 0.0, -k, gamma])
}

/// H_N = [[ω·I₃, C], [C, ω·I₃]] with C carrying a uniform q-p cross coupling
/// γ and nearest-neighbor cross couplings −κ/√2 through the middle site.
pub fn build_momentum_coupled_hessian(omega: f64, kappa: f64, gamma: f64) -> Result<QuadraticForm> {
    if omega <= 0.0 || kappa < 0.0 || gamma < 0.0 {
        return Err(Error::InvalidArgument(
            "momentum-coupled network needs omega > 0 and nonnegative couplings".into(),
        ));
    }
    if omega <= kappa + gamma {
        return Err(Error::NotPositiveDefinite { eigenvalue: omega - kappa - gamma });
    }
    let c = momentum_cross_block(kappa, gamma);
    let mut h = DMatrix::<f64>::zeros(6, 6);
    for j in 0..3 {
        h[(j, j)] = omega;
        h[(3 + j, 3 + j)] = omega;
    }
    h.view_mut((0, 3), (3, 3)).copy_from(&c);
    h.view_mut((3, 0), (3, 3)).copy_from(&c);
    QuadraticForm::new(3, h)
}

/// Full system Hessian over (q_a, q_b, q_1…q_N, p_a, p_b, p_1…p_N):
/// Ω·I₄ external block (M·Ω = 1), network block, and per attachment
/// (x, s, ε) the entries +ε/2 on (q_x,q_x), (q_s,q_s) and −ε/2 on the cross.
pub fn assemble_system_hessian(spec: &SystemSpec) -> Result<QuadraticForm> {
    spec.validate()?;
    let n = spec.network.n_sites();
    let hn = spec.network.hessian()?;
    let dim = 2 * (n + 2);
    let mut h = DMatrix::<f64>::zeros(dim, dim);

    // External block: q_a, q_b at 0, 1; p_a, p_b at n+2, n+3.
    for idx in [0, 1, n + 2, n + 3] {
        h[(idx, idx)] = spec.omega_ext;
    }
    // Network block: q_i at 2+i, p_i at n+4+i.
    let map = |i: usize| if i < n { 2 + i } else { n + 4 + (i - n) };
    for r in 0..2 * n {
        for c in 0..2 * n {
            h[(map(r), map(c))] += hn.matrix[(r, c)];
        }
    }
    for att in &spec.attachments {
        let qx = match att.external {
            ExternalId::A => 0,
            ExternalId::B => 1,
        };
        let qs = 2 + (att.site - 1);
        h[(qx, qx)] += att.epsilon / 2.0;
        h[(qs, qs)] += att.epsilon / 2.0;
        h[(qx, qs)] -= att.epsilon / 2.0;
        h[(qs, qx)] -= att.epsilon / 2.0;
    }

    let form = QuadraticForm::new(n + 2, h)?;
    let (vals, _) = sym_eig(&form.matrix);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 1e-12 * max) {
        return Err(Error::NotPositiveDefinite { eigenvalue: min });
    }
    Ok(form)
}

/// Sorts a mode-indexed closed-form solution ascending by symplectic
/// eigenvalue (stable, so degenerate modes keep their construction order).
fn sort_modes(spectrum: &mut [f64], s_diag: &mut [f64], o_small: &mut DMatrix<f64>) {
    let n = spectrum.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| spectrum[a].partial_cmp(&spectrum[b]).unwrap());
    let spec_old = spectrum.to_vec();
    let sd_old = s_diag.to_vec();
    let o_old = o_small.clone();
    for (new, &old) in idx.iter().enumerate() {
        spectrum[new] = spec_old[old];
        s_diag[new] = sd_old[old];
        o_small.row_mut(new).copy_from(&o_old.row(old));
    }
}

/// Closed-form Williamson decomposition of the network Hessian for the
/// structured topologies. Custom networks must go through the generic
/// `williamson`.
pub fn analytic_williamson(network: &NetworkSpec) -> Result<WilliamsonDecomposition> {
    match network {
        NetworkSpec::Chain { n, omega, kappa } => {
            if *n < 2 || *omega <= 0.0 || *kappa < 0.0 {
                return Err(Error::InvalidArgument("invalid chain parameters".into()));
            }
            let n = *n;
            // h_k = (ω+κ) − κ cos((k−1)π/N); ς_k = √(ω h_k);
            // O_jk = √((2−δ_j1)/N) cos((j−1)(2k−1)π/(2N)).
            let mut o_small = DMatrix::<f64>::zeros(n, n);
            let mut spectrum = vec![0.0; n];
            let mut s_diag = vec![0.0; n];
            for j in 0..n {
                let hk = omega + kappa - kappa * ((j as f64) * PI / n as f64).cos();
                spectrum[j] = (omega * hk).sqrt();
                s_diag[j] = (omega / hk).powf(0.25);
                let norm = if j == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                for k in 0..n {
                    let arg = (j as f64) * (2.0 * k as f64 + 1.0) * PI / (2.0 * n as f64);
                    o_small[(j, k)] = norm * arg.cos();
                }
            }
            // h_k ascending already; S = 𝑺O ⊕ 𝑺⁻¹O, orthogonal factor O ⊕ O.
            Ok(position_coupled_decomposition(&spectrum, &s_diag, &o_small))
        }
        NetworkSpec::Triangle { omega, kappa, kappa_prime } => {
            if *omega <= 0.0 || *kappa < 0.0 || *kappa_prime < 0.0 {
                return Err(Error::InvalidArgument("invalid triangle parameters".into()));
            }
            let (w, k, kp) = (*omega, *kappa, *kappa_prime);
            let mut spectrum =
                vec![w, (w * (w + k / 2.0 + kp)).sqrt(), (w * (w + 1.5 * k)).sqrt()];
            let s3 = 3f64.sqrt();
            let s2 = 2f64.sqrt();
            let s6 = 6f64.sqrt();
            let mut o_small = DMatrix::from_row_slice(
                3,
                3,
                &[
                    1.0 / s3,
                    1.0 / s3,
                    1.0 / s3,
                    0.0,
                    -1.0 / s2,
                    1.0 / s2,
                    -s2 / s3,
                    1.0 / s6,
                    1.0 / s6,
                ],
            );
            // 𝑺 = (ω/h_k)^{1/4} with h_k = ς_k²/ω, i.e. √(ω/ς_k).
            let mut s_diag: Vec<f64> = spectrum.iter().map(|s| (w / s).sqrt()).collect();
            sort_modes(&mut spectrum, &mut s_diag, &mut o_small);
            Ok(position_coupled_decomposition(&spectrum, &s_diag, &o_small))
        }
        NetworkSpec::MomentumCoupled { omega, kappa, gamma } => {
            let (w, k, g) = (*omega, *kappa, *gamma);
            if w <= k + g {
                return Err(Error::NotPositiveDefinite { eigenvalue: w - k - g });
            }
            // Eigenvalues of the cross block C in the order of the rows of 𝑶.
            let c_eigs = [k + g, g - k, g];
            let mut spectrum: Vec<f64> = c_eigs.iter().map(|c| (w * w - c * c).sqrt()).collect();
            let mut s_diag: Vec<f64> =
                c_eigs.iter().map(|c| ((w - c) / (w + c)).powf(0.25)).collect();
            let s2 = 2f64.sqrt();
            let mut o_small = DMatrix::from_row_slice(
                3,
                3,
                &[0.5, -1.0 / s2, 0.5, 0.5, 1.0 / s2, 0.5, -1.0 / s2, 0.0, 1.0 / s2],
            );
            sort_modes(&mut spectrum, &mut s_diag, &mut o_small);

            // S_N = (𝑺 ⊕ 𝑺⁻¹) R (𝑶 ⊕ 𝑶) with R the uniform 45° phase-space
            // rotation; the orthogonal factor collapses to R (𝑶 ⊕ 𝑶).
            let n = 3;
            let mut s = DMatrix::<f64>::zeros(2 * n, 2 * n);
            let mut o = DMatrix::<f64>::zeros(2 * n, 2 * n);
            for m in 0..n {
                for mu in 0..n {
                    let omm = o_small[(m, mu)];
                    s[(m, mu)] = s_diag[m] * omm / s2;
                    s[(m, n + mu)] = s_diag[m] * omm / s2;
                    s[(n + m, mu)] = -omm / (s_diag[m] * s2);
                    s[(n + m, n + mu)] = omm / (s_diag[m] * s2);
                    o[(m, mu)] = omm / s2;
                    o[(m, n + mu)] = omm / s2;
                    o[(n + m, mu)] = -omm / s2;
                    o[(n + m, n + mu)] = omm / s2;
                }
            }
            Ok(WilliamsonDecomposition { s, spectrum, o })
        }
        NetworkSpec::Custom { .. } => Err(Error::UnsupportedTopology(
            "custom networks have no closed-form decomposition; use the generic williamson".into(),
        )),
    }
}

/// Assembles S = 𝑺𝑶 ⊕ 𝑺⁻¹𝑶 (position-coupled networks, where the p-block of
/// the Hessian is ω·I) together with its orthogonal factor 𝑶 ⊕ 𝑶.
fn position_coupled_decomposition(
    spectrum: &[f64],
    s_diag: &[f64],
    o_small: &DMatrix<f64>,
) -> WilliamsonDecomposition {
    let n = spectrum.len();
    let mut s = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut o = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for m in 0..n {
        for mu in 0..n {
            s[(m, mu)] = s_diag[m] * o_small[(m, mu)];
            s[(n + m, n + mu)] = o_small[(m, mu)] / s_diag[m];
            o[(m, mu)] = o_small[(m, mu)];
            o[(n + m, n + mu)] = o_small[(m, mu)];
        }
    }
    WilliamsonDecomposition { s, spectrum: spectrum.to_vec(), o }
}

/// Embeds a 2N-dimensional network symplectic into the full system ordering
/// (q_a, q_b, q…, p_a, p_b, p…) with identity action on the externals
/// (their block is already in normal form under M·Ω = 1).
pub fn embed_network_symplectic(s_net: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s_net.nrows() / 2;
    let dim = 2 * (n + 2);
    let mut s = DMatrix::<f64>::zeros(dim, dim);
    for idx in [0, 1, n + 2, n + 3] {
        s[(idx, idx)] = 1.0;
    }
    let map = |i: usize| if i < n { 2 + i } else { n + 4 + (i - n) };
    for r in 0..2 * n {
        for c in 0..2 * n {
            s[(map(r), map(c))] = s_net[(r, c)];
        }
    }
    s
}
