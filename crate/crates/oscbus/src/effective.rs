//! RWA-reduced effective models: the few-body Hamiltonian obtained when the
//! external oscillators are resonant with one (or a degenerate group of)
//! network normal modes, the reduced drift/diffusion pair, closed-form
//! propagators and occupation formulas for position-coupled networks, and
//! validity reporting for the underlying rotating-wave approximation.
//!
//! Reduced phase-space ordering is (q_a, q_b, modes…, p_a, p_b, modes…).

use nalgebra::{Complex, DMatrix};

use crate::dynamics::{propagate_cm, CovarianceState, PropagationResult};
use crate::error::{Error, Result};
use crate::linalg::expm;
use crate::network::{Attachment, ExternalId, SystemSpec};
use crate::symplectic::{j_matrix, ModeGrouping, QuadraticForm, WilliamsonDecomposition};

type C64 = Complex<f64>;

/// Mode-m coupling coefficients extracted from the rows of the symplectic
/// diagonalizer: per attachment the complex amplitude 𝒟 = S_{m,s} − i·S_{m+N,s}
/// and self-energy weight ℰ = S²_{m,s} + S²_{m+N,s}.
#[derive(Debug, Clone)]
pub struct AttachmentCoefficient {
    pub external: ExternalId,
    pub site: usize,
    pub d: C64,
    pub d_bar: C64,
    pub e: f64,
}

/// Coefficients of the single-mode effective Hamiltonian. The time variable
/// of the closed-form propagator is τ = εt/4.
#[derive(Debug, Clone)]
pub struct EffectiveCoefficients {
    /// Mode self-energy weight: sum of ℰ over all attachments.
    pub c_ab: f64,
    pub per_attachment: Vec<AttachmentCoefficient>,
    /// χ = S²_{mα} + S²_{mβ} + 1 (sum over attachments of the real row
    /// entries squared, plus one).
    pub chi: f64,
}

/// Reduced effective model: resonant mode set (0-based normal-mode indices),
/// the assembled Hessian over (q_a, q_b, modes…, p_a, p_b, modes…), and its
/// q-q and q-p blocks.
#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub mode_set: Vec<usize>,
    pub h_eff: QuadraticForm,
    pub h_q: DMatrix<f64>,
    pub c_qp: DMatrix<f64>,
}

/// Quantitative RWA validity diagnostics.
#[derive(Debug, Clone)]
pub struct RWAReport {
    pub eps_over_omega: f64,
    pub min_offresonant_detuning: f64,
    pub degenerate_group: Vec<usize>,
    pub warnings: Vec<String>,
}

fn s_rows(w: &WilliamsonDecomposition, mode: usize, site_col: usize) -> (f64, f64) {
    let n = w.spectrum.len();
    (w.s[(mode, site_col)], w.s[(n + mode, site_col)])
}

/// Coupling coefficients of mode `m` for the given attachments.
pub fn effective_coefficients(
    w: &WilliamsonDecomposition,
    m: usize,
    attachments: &[Attachment],
) -> Result<EffectiveCoefficients> {
    let n = w.spectrum.len();
    if m >= n {
        return Err(Error::InvalidArgument(format!("mode index {m} out of range 0..{n}")));
    }
    if attachments.is_empty() {
        return Err(Error::InvalidArgument("at least one attachment is required".into()));
    }
    let mut per_attachment = Vec::with_capacity(attachments.len());
    let mut c_ab = 0.0;
    let mut chi = 1.0;
    for att in attachments {
        if att.site == 0 || att.site > n {
            return Err(Error::InvalidArgument(format!(
                "attachment site {} out of range 1..={n}",
                att.site
            )));
        }
        let (sm, sm_n) = s_rows(w, m, att.site - 1);
        let d = C64::new(sm, -sm_n);
        per_attachment.push(AttachmentCoefficient {
            external: att.external,
            site: att.site,
            d,
            d_bar: d.conj(),
            e: sm * sm + sm_n * sm_n,
        });
        c_ab += sm * sm + sm_n * sm_n;
        chi += sm * sm;
    }
    Ok(EffectiveCoefficients { c_ab, per_attachment, chi })
}

/// Builds the effective Hessian for a set of mutually degenerate resonant
/// modes. Per attachment (x, s, ε): ε/4 on the external's q and p diagonal;
/// per mode, ε/4·(S²_{ms}+S²_{m+N,s}) on the mode diagonal, −ε/4·S_{ms} on
/// the mode-external q-q and p-p cross, and ±ε/4·S_{m+N,s} on the q-p cross;
/// per mode pair, the exchange terms of the degenerate reduction.
pub fn build_effective_hessian(
    w: &WilliamsonDecomposition,
    mode_set: &[usize],
    attachments: &[Attachment],
) -> Result<EffectiveModel> {
    let n = w.spectrum.len();
    if attachments.is_empty() {
        return Err(Error::InvalidArgument("at least one attachment is required".into()));
    }
    if mode_set.is_empty() {
        return Err(Error::InvalidArgument("resonant mode set must be non-empty".into()));
    }
    for &m in mode_set {
        if m >= n {
            return Err(Error::InvalidArgument(format!("mode index {m} out of range 0..{n}")));
        }
    }
    let mut sorted = mode_set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != mode_set.len() {
        return Err(Error::InvalidArgument("duplicate mode indices in resonant set".into()));
    }
    // Near-degenerate sets are accepted (the degenerate reduction is the
    // right model whenever the splitting is small against the coupling);
    // a spread beyond 1% of the top eigenvalue means distinct groups.
    let tol = 1e-2 * w.spectrum.iter().cloned().fold(0.0, f64::max);
    let lo = mode_set.iter().map(|&m| w.spectrum[m]).fold(f64::INFINITY, f64::min);
    let hi = mode_set.iter().map(|&m| w.spectrum[m]).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > tol {
        return Err(Error::InvalidArgument(format!(
            "resonant modes span distinct degeneracy groups (spread {:.3e})",
            hi - lo
        )));
    }

    let g = mode_set.len();
    let half = 2 + g;
    let off = half; // p-sector offset
    let mut h = DMatrix::<f64>::zeros(2 * half, 2 * half);
    for att in attachments {
        if att.site == 0 || att.site > n {
            return Err(Error::InvalidArgument(format!(
                "attachment site {} out of range 1..={n}",
                att.site
            )));
        }
        let e4 = att.epsilon / 4.0;
        let x = match att.external {
            ExternalId::A => 0,
            ExternalId::B => 1,
        };
        h[(x, x)] += e4;
        h[(off + x, off + x)] += e4;
        let col = att.site - 1;
        for (gi, &m) in mode_set.iter().enumerate() {
            let (sm, sm_n) = s_rows(w, m, col);
            let (qm, pm) = (2 + gi, off + 2 + gi);
            h[(qm, qm)] += e4 * (sm * sm + sm_n * sm_n);
            h[(pm, pm)] += e4 * (sm * sm + sm_n * sm_n);
            h[(qm, x)] -= e4 * sm;
            h[(x, qm)] -= e4 * sm;
            h[(pm, off + x)] -= e4 * sm;
            h[(off + x, pm)] -= e4 * sm;
            h[(qm, off + x)] += e4 * sm_n;
            h[(off + x, qm)] += e4 * sm_n;
            h[(x, pm)] -= e4 * sm_n;
            h[(pm, x)] -= e4 * sm_n;
        }
        for gi in 0..g {
            for gj in (gi + 1)..g {
                let (si, si_n) = s_rows(w, mode_set[gi], col);
                let (sj, sj_n) = s_rows(w, mode_set[gj], col);
                let a = si * sj + si_n * sj_n;
                let b = si * sj_n - si_n * sj;
                let (qi, pi) = (2 + gi, off + 2 + gi);
                let (qj, pj) = (2 + gj, off + 2 + gj);
                h[(qi, qj)] += e4 * a;
                h[(qj, qi)] += e4 * a;
                h[(pi, pj)] += e4 * a;
                h[(pj, pi)] += e4 * a;
                h[(qi, pj)] -= e4 * b;
                h[(pj, qi)] -= e4 * b;
                h[(qj, pi)] += e4 * b;
                h[(pi, qj)] += e4 * b;
            }
        }
    }
    let h_q = h.view((0, 0), (half, half)).into_owned();
    let c_qp = h.view((0, half), (half, half)).into_owned();
    let h_eff = QuadraticForm::new(half, h)?;
    Ok(EffectiveModel { mode_set: mode_set.to_vec(), h_eff, h_q, c_qp })
}

/// Reduced drift and diffusion for local thermal baths: Γ̌ = J·H_eff − (ζ/2)I
/// and Ď = ħζ(n̄+½)·Diag(1, 1, w_q…, 1, 1, w_p…) with the mode weights read
/// from the diagonal of (S_N S_Nᵀ)^{-1}. Requires S_N S_Nᵀ diagonal; a
/// nonlocal bath structure is a structural violation.
pub fn build_effective_noise(
    model: &EffectiveModel,
    w: &WilliamsonDecomposition,
    zeta: f64,
    n_th: f64,
    hbar: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if zeta < 0.0 || n_th < 0.0 {
        return Err(Error::InvalidArgument("bath parameters must be nonnegative".into()));
    }
    let half = model.h_eff.n_modes;
    let dim = 2 * half;
    let gamma = j_matrix(half) * &model.h_eff.matrix
        - DMatrix::<f64>::identity(dim, dim) * (zeta / 2.0);
    if zeta == 0.0 {
        return Ok((gamma, DMatrix::zeros(dim, dim)));
    }

    let n = w.spectrum.len();
    let g = &w.s * w.s.transpose();
    let tol = 1e-10 * g.amax();
    for r in 0..2 * n {
        for c in 0..2 * n {
            if r != c && g[(r, c)].abs() > tol {
                let (rm, cm) = (r % n, c % n);
                return Err(Error::StructuralViolation(format!(
                    "normal modes {} and {} share bath correlations; \
                     S·Sᵀ is not diagonal, so the reduced baths are nonlocal",
                    rm + 1,
                    cm + 1
                )));
            }
        }
    }

    let base = hbar * zeta * (n_th + 0.5);
    let mut d = DMatrix::<f64>::zeros(dim, dim);
    for x in 0..2 {
        d[(x, x)] = base;
        d[(half + x, half + x)] = base;
    }
    for (gi, &m) in model.mode_set.iter().enumerate() {
        d[(2 + gi, 2 + gi)] = base / g[(m, m)];
        d[(half + 2 + gi, half + 2 + gi)] = base / g[(n + m, n + m)];
    }
    Ok((gamma, d))
}

/// Result of an effective propagation: the Van Loan series (authoritative)
/// plus the maximum deviation of the exponential-attenuation closed form
/// V̌(t) = e^{−ζt} E V̌₀ Eᵀ + ζ^{−1}(1−e^{−ζt}) Ď over the grid. The closed
/// form is exact when Ď is proportional to the identity.
#[derive(Debug, Clone)]
pub struct EffectivePropagation {
    pub result: PropagationResult,
    pub closed_form_discrepancy: f64,
    pub closed_form_is_exact: bool,
}

/// Propagates the reduced covariance matrix, cross-evaluating the closed form.
pub fn propagate_effective(
    model: &EffectiveModel,
    gamma_check: &DMatrix<f64>,
    d_check: &DMatrix<f64>,
    zeta: f64,
    v0: &CovarianceState,
    times: &[f64],
) -> Result<EffectivePropagation> {
    let result = propagate_cm(gamma_check, d_check, v0, times)?;

    // Ď ∝ I makes the closed form exact (E is orthogonal-symplectic only in
    // the C_qp = 0 case, but commutation with a scalar Ď always holds).
    let dim = d_check.nrows();
    let trace_avg = d_check.trace() / dim as f64;
    let is_scalar =
        (d_check - DMatrix::<f64>::identity(dim, dim) * trace_avg).amax() <= 1e-12 * trace_avg.abs().max(1e-300);

    let jh = j_matrix(model.h_eff.n_modes) * &model.h_eff.matrix;
    let mut discrepancy = 0.0f64;
    for (idx, &t) in times.iter().enumerate() {
        let dt = t - v0.t;
        let e = expm(&(&jh * dt));
        let mut v_cf = &e * &v0.v * e.transpose();
        if zeta > 0.0 {
            let damp = (-zeta * dt).exp();
            v_cf = v_cf * damp + d_check * ((1.0 - damp) / zeta);
        }
        discrepancy = discrepancy.max((&result.states[idx].v - v_cf).amax());
    }
    Ok(EffectivePropagation {
        result,
        closed_form_discrepancy: discrepancy,
        closed_form_is_exact: is_scalar || zeta == 0.0,
    })
}

/// Regularized entries of the closed-form 6×6 propagator for one resonant
/// mode of a position-coupled network (real S rows, C_qp = 0):
/// E(t) = [[C, S],[−S, C]] with C = cos(H_q·τ), S = sin(H_q·τ), τ = εt/4.
/// The printed entries carry 1/(χ−1) factors; they are absorbed into the
/// bounded ratios fα = S²_{mα}/(χ−1), fβ = S²_{mβ}/(χ−1), g = S_{mα}S_{mβ}/(χ−1)
/// (with the symmetric limit ½ at χ = 1), so every entry stays finite through
/// the decoupling point.
pub fn analytic_propagator_6x6(s_ma: f64, s_mb: f64, eps: f64, t: f64) -> DMatrix<f64> {
    let sa2 = s_ma * s_ma;
    let sb2 = s_mb * s_mb;
    let chi = sa2 + sb2 + 1.0;
    let u = chi - 1.0;
    let (fa, fb, gab) = if u > 1e-300 {
        (sa2 / u, sb2 / u, s_ma * s_mb / u)
    } else {
        (0.5, 0.5, 0.5)
    };
    let tau = eps * t / 4.0;
    let (ct, st) = (tau.cos(), tau.sin());
    let (cx, sx) = ((chi * tau).cos(), (chi * tau).sin());
    let half2 = (chi * tau / 2.0).sin().powi(2);

    // Entries in the (mode, a, b) index order of the closed-form solution.
    let c_m = DMatrix::from_row_slice(
        3,
        3,
        &[
            (1.0 + u * cx) / chi,
            2.0 * s_ma * half2 / chi,
            2.0 * s_mb * half2 / chi,
            2.0 * s_ma * half2 / chi,
            fb * ct + fa * (u + cx) / chi,
            gab * (u - chi * ct + cx) / chi,
            2.0 * s_mb * half2 / chi,
            gab * (u - chi * ct + cx) / chi,
            fa * ct + fb * (u + cx) / chi,
        ],
    );
    let s_m = DMatrix::from_row_slice(
        3,
        3,
        &[
            u * sx / chi,
            -s_ma * sx / chi,
            -s_mb * sx / chi,
            -s_ma * sx / chi,
            fa * sx / chi + fb * st,
            gab * (sx - chi * st) / chi,
            -s_mb * sx / chi,
            gab * (sx - chi * st) / chi,
            fb * sx / chi + fa * st,
        ],
    );

    // Permute to the reduced ordering (q_a, q_b, y_m): reduced index i maps
    // to closed-form index perm[i].
    let perm = [1usize, 2, 0];
    let mut e = DMatrix::<f64>::zeros(6, 6);
    for i in 0..3 {
        for jx in 0..3 {
            let (pi, pj) = (perm[i], perm[jx]);
            e[(i, jx)] = c_m[(pi, pj)];
            e[(3 + i, 3 + jx)] = c_m[(pi, pj)];
            e[(i, 3 + jx)] = s_m[(pi, pj)];
            e[(3 + i, jx)] = -s_m[(pi, pj)];
        }
    }
    e
}

/// Transfer function of the single-mode energy transport, with the symmetric
/// coupling split S²_{mα} = S²_{mβ} = (χ−1)/2 (exact for the lowest chain
/// mode, where both couplings are 1/N).
pub fn transfer_function_f(chi: f64, tau: f64) -> Result<f64> {
    let s2 = (chi - 1.0) / 2.0;
    transfer_function_f_general(s2, s2, tau)
}

/// Transfer function for general per-attachment couplings S²_{mα}, S²_{mβ}.
pub fn transfer_function_f_general(s_ma2: f64, s_mb2: f64, tau: f64) -> Result<f64> {
    let chi = s_ma2 + s_mb2 + 1.0;
    if chi <= 1.0 {
        return Err(Error::Domain(
            "transfer function undefined for chi <= 1 (decoupled externals)".into(),
        ));
    }
    let u = chi - 1.0;
    let bracket = (1.0 / chi - (u * tau).cos()) / u + (chi * tau).cos() / chi + (1.0 - tau.cos());
    Ok(s_ma2 * s_mb2 / (chi * u) * bracket)
}

/// Closed-form occupation of oscillator a for the single-mode reduction of a
/// position-coupled network:
/// ň_a = 2n̄_b·F(χ, εt/4) + 4χ^{−2}·S²_{mβ}·sin²(χεt/8)·n̄_network.
pub fn occupation_closed_form(
    coeffs: &EffectiveCoefficients,
    n_b: f64,
    n_network: f64,
    eps: f64,
    t: f64,
) -> Result<f64> {
    let mut s_ma2 = 0.0;
    let mut s_mb2 = 0.0;
    for att in &coeffs.per_attachment {
        if att.d.im.abs() > 1e-12 {
            return Err(Error::Domain(
                "closed-form occupation requires real coupling rows (position-coupled network)"
                    .into(),
            ));
        }
        match att.external {
            ExternalId::A => s_ma2 += att.d.re * att.d.re,
            ExternalId::B => s_mb2 += att.d.re * att.d.re,
        }
    }
    let chi = s_ma2 + s_mb2 + 1.0;
    let tau = eps * t / 4.0;
    let f = transfer_function_f_general(s_ma2, s_mb2, tau)?;
    let network = 4.0 / (chi * chi) * s_mb2 * (chi * eps * t / 8.0).sin().powi(2) * n_network;
    Ok(2.0 * n_b * f + network)
}

/// Finds the degeneracy group resonant with a target frequency. Refuses
/// matches that straddle more than one group.
pub fn match_resonant_group(
    spectrum: &[f64],
    grouping: &ModeGrouping,
    omega: f64,
    tol: f64,
) -> Result<Vec<usize>> {
    let matched: Vec<usize> = (0..spectrum.len())
        .filter(|&k| (spectrum[k] - omega).abs() <= tol)
        .collect();
    if matched.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no normal mode within {tol:.3e} of frequency {omega}"
        )));
    }
    let hits: Vec<&Vec<usize>> = grouping
        .groups
        .iter()
        .filter(|g| g.iter().any(|m| matched.contains(m)))
        .collect();
    if hits.len() > 1 {
        return Err(Error::InvalidArgument(format!(
            "frequency {omega} matches {} distinct degeneracy groups within {tol:.3e}",
            hits.len()
        )));
    }
    Ok(hits[0].clone())
}

/// Quantifies the RWA prerequisites: weak coupling (ε ≪ Ω) and resonance
/// isolation (off-resonant modes well detuned).
pub fn rwa_validity_report(
    spec: &SystemSpec,
    w: &WilliamsonDecomposition,
    mode_set: &[usize],
) -> RWAReport {
    let eps_max = spec.attachments.iter().map(|a| a.epsilon).fold(0.0, f64::max);
    let eps_over_omega = eps_max / spec.omega_ext;
    let min_offresonant_detuning = w
        .spectrum
        .iter()
        .enumerate()
        .filter(|(k, _)| !mode_set.contains(k))
        .map(|(_, s)| (s - spec.omega_ext).abs())
        .fold(f64::INFINITY, f64::min);
    let mut warnings = Vec::new();
    if eps_over_omega > 0.1 {
        warnings.push(format!(
            "coupling is not weak: eps/Omega = {eps_over_omega:.3} exceeds 0.1"
        ));
    }
    if min_offresonant_detuning < 10.0 * eps_max {
        warnings.push(format!(
            "off-resonant mode detuning {min_offresonant_detuning:.3e} is below 10x the coupling"
        ));
    }
    RWAReport {
        eps_over_omega,
        min_offresonant_detuning,
        degenerate_group: mode_set.to_vec(),
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{analytic_williamson, NetworkSpec};
    use crate::symplectic::is_symplectic;
    use nalgebra::DVector;

    fn chain_setup(n: usize) -> (WilliamsonDecomposition, Vec<Attachment>) {
        let net = NetworkSpec::Chain { n, omega: 1.0, kappa: 20.0 };
        let w = analytic_williamson(&net).unwrap();
        let atts = vec![
            Attachment { external: ExternalId::A, site: n, epsilon: 0.03 },
            Attachment { external: ExternalId::B, site: 1, epsilon: 0.03 },
        ];
        (w, atts)
    }

    #[test]
    fn chain_mode1_coefficients() {
        let (w, atts) = chain_setup(10);
        let c = effective_coefficients(&w, 0, &atts).unwrap();
        assert!((c.chi - 1.2).abs() < 1e-12);
        assert!((c.c_ab - 0.2).abs() < 1e-12);
        for att in &c.per_attachment {
            assert!(att.d.im.abs() < 1e-15);
            assert!((att.d.re - 0.1f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_effective_hessian_matches_block_form() {
        let (w, atts) = chain_setup(10);
        let model = build_effective_hessian(&w, &[0], &atts).unwrap();
        assert!(model.c_qp.amax() < 1e-15);
        // H_q/(ε/4) has unit external diagonal, −S_{mμ} cross, mode diag
        // S²_{mα}+S²_{mβ}.
        let hq = &model.h_q / (0.03 / 4.0);
        let s = 0.1f64.sqrt();
        assert!((hq[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((hq[(1, 1)] - 1.0).abs() < 1e-12);
        assert!((hq[(0, 2)] + s).abs() < 1e-12);
        assert!((hq[(1, 2)] + s).abs() < 1e-12);
        assert!((hq[(2, 2)] - 0.2).abs() < 1e-12);
        assert!(hq[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn translational_invariance_of_lowest_mode() {
        // For m = 1 the chain H_q is independent of the attachment sites.
        let net = NetworkSpec::Chain { n: 8, omega: 1.0, kappa: 5.0 };
        let w = analytic_williamson(&net).unwrap();
        let mut reference: Option<DMatrix<f64>> = None;
        for alpha in 1..=8usize {
            for beta in 1..=8usize {
                let atts = vec![
                    Attachment { external: ExternalId::A, site: alpha, epsilon: 0.02 },
                    Attachment { external: ExternalId::B, site: beta, epsilon: 0.02 },
                ];
                let m = build_effective_hessian(&w, &[0], &atts).unwrap();
                match &reference {
                    None => reference = Some(m.h_q),
                    Some(r) => assert_eq!(r, &m.h_q),
                }
            }
        }
    }

    #[test]
    fn node_attachment_decouples_external() {
        // The second mode of a 5-site chain has an exact node at the middle
        // site: O_{2,3} ∝ cos(π/2) = 0. Attaching a there decouples it.
        let net = NetworkSpec::Chain { n: 5, omega: 1.0, kappa: 3.0 };
        let w = analytic_williamson(&net).unwrap();
        let mut found = None;
        for m in 1..5 {
            for site in 1..=5 {
                if w.s[(m, site - 1)].abs() < 1e-12 {
                    found = Some((m, site));
                }
            }
        }
        let (m, site) = found.expect("chain of 5 sites has a node");
        let atts = vec![
            Attachment { external: ExternalId::A, site, epsilon: 0.02 },
            Attachment { external: ExternalId::B, site: 1, epsilon: 0.02 },
        ];
        let model = build_effective_hessian(&w, &[m], &atts).unwrap();
        // a couples to nothing: H_eff row 0 is diagonal-only.
        assert!(model.h_q[(0, 2)].abs() < 1e-14);
        assert!(model.c_qp.row(0).amax() < 1e-14);
    }

    #[test]
    fn effective_noise_chain_weights() {
        let (w, atts) = chain_setup(10);
        let model = build_effective_hessian(&w, &[1], &atts).unwrap();
        let (gamma, d) = build_effective_noise(&model, &w, 0.01, 1.0, 1.0).unwrap();
        let base = 0.015;
        let m = 1;
        assert!((d[(0, 0)] - base).abs() < 1e-15);
        assert!((d[(2, 2)] - base * w.spectrum[m] / 1.0).abs() < 1e-12);
        assert!((d[(5, 5)] - base / w.spectrum[m]).abs() < 1e-12);
        // Drift real parts are exactly −ζ/2.
        let eig = gamma.complex_eigenvalues();
        for z in eig.iter() {
            assert!((z.re + 0.005).abs() < 1e-9);
        }
    }

    #[test]
    fn effective_noise_zero_bath() {
        let (w, atts) = chain_setup(4);
        let model = build_effective_hessian(&w, &[0], &atts).unwrap();
        let (gamma, d) = build_effective_noise(&model, &w, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(d.amax(), 0.0);
        assert!((gamma - j_matrix(3) * &model.h_eff.matrix).amax() < 1e-15);
    }

    #[test]
    fn analytic_propagator_is_identity_at_zero_and_matches_expm() {
        let (w, atts) = chain_setup(10);
        let model = build_effective_hessian(&w, &[0], &atts).unwrap();
        let s = 0.1f64.sqrt();
        let e0 = analytic_propagator_6x6(s, s, 0.03, 0.0);
        assert!((&e0 - DMatrix::identity(6, 6)).amax() < 1e-15);
        let jh = j_matrix(3) * &model.h_eff.matrix;
        for k in 1..=20 {
            let t = 100.0 * k as f64;
            let e = analytic_propagator_6x6(s, s, 0.03, t);
            let oracle = expm(&(&jh * t));
            assert!((&e - oracle).amax() < 1e-10, "t = {t}");
            assert!(is_symplectic(&e, 1e-10).unwrap());
            assert!((&e * e.transpose() - DMatrix::identity(6, 6)).amax() < 1e-10);
        }
    }

    #[test]
    fn transfer_function_basics() {
        assert!(transfer_function_f(1.2, 0.0).unwrap().abs() < 1e-15);
        assert!(transfer_function_f(2.0, 0.0).unwrap().abs() < 1e-15);
        assert!(transfer_function_f(1.0, 1.0).is_err());
        // Nonnegative over a coarse scan (occupations cannot be negative).
        for k in 0..200 {
            let tau = 0.05 * k as f64;
            assert!(transfer_function_f(1.2, tau).unwrap() > -1e-12);
        }
    }

    #[test]
    fn occupation_closed_form_matches_propagation() {
        let (w, atts) = chain_setup(10);
        let model = build_effective_hessian(&w, &[0], &atts).unwrap();
        let coeffs = effective_coefficients(&w, 0, &atts).unwrap();
        let (gamma, d) = build_effective_noise(&model, &w, 0.0, 0.0, 1.0).unwrap();
        let n_b = 1.0;
        let n_net = 0.7;
        let mut v0 = DMatrix::<f64>::identity(6, 6) * 0.5;
        v0[(1, 1)] = 0.5 * (2.0 * n_b + 1.0);
        v0[(4, 4)] = 0.5 * (2.0 * n_b + 1.0);
        v0[(2, 2)] = 0.5 * (2.0 * n_net + 1.0);
        v0[(5, 5)] = 0.5 * (2.0 * n_net + 1.0);
        let state = CovarianceState::new(v0, DVector::zeros(6), 0.0).unwrap();
        let times: Vec<f64> = (0..=40).map(|k| 50.0 * k as f64).collect();
        let prop = propagate_effective(&model, &gamma, &d, 0.0, &state, &times).unwrap();
        for (idx, &t) in times.iter().enumerate() {
            let v = &prop.result.states[idx].v;
            let n_a = (v[(0, 0)] + v[(3, 3)]) / 2.0 - 0.5;
            let closed = occupation_closed_form(&coeffs, n_b, n_net, 0.03, t).unwrap();
            assert!((n_a - closed).abs() < 1e-9, "t = {t}: {n_a} vs {closed}");
        }
        // Closed-system propagation: the exponential closed form is exact.
        assert!(prop.closed_form_is_exact);
        assert!(prop.closed_form_discrepancy < 1e-9);
    }

    #[test]
    fn occupation_linearity_in_thermal_input() {
        let (w, atts) = chain_setup(10);
        let coeffs = effective_coefficients(&w, 0, &atts).unwrap();
        for k in 1..=10 {
            let t = 173.0 * k as f64;
            let one = occupation_closed_form(&coeffs, 1.0, 0.0, 0.03, t).unwrap();
            let two = occupation_closed_form(&coeffs, 2.0, 0.0, 0.03, t).unwrap();
            assert_eq!(two, 2.0 * one);
        }
    }

    #[test]
    fn degenerate_triangle_model_shape() {
        let net = NetworkSpec::Triangle { omega: 1.0, kappa: 1.0 / 3.0, kappa_prime: 1.0 / 3.0 };
        let w = analytic_williamson(&net).unwrap();
        let atts = vec![
            Attachment { external: ExternalId::A, site: 2, epsilon: 1.0 / 600.0 },
            Attachment { external: ExternalId::B, site: 3, epsilon: 1.0 / 600.0 },
        ];
        let model = build_effective_hessian(&w, &[1, 2], &atts).unwrap();
        assert_eq!(model.h_eff.matrix.nrows(), 8);
        // Cross term between the degenerate modes: S_{22}S_{32}+S_{23}S_{33}
        // summed over the two attachment columns.
        let e4 = (1.0 / 600.0) / 4.0;
        let expect = e4
            * (w.s[(1, 1)] * w.s[(2, 1)]
                + w.s[(1, 2)] * w.s[(2, 2)]);
        assert!((model.h_q[(2, 3)] - expect).abs() < 1e-15);
        // Mixing distinct groups is rejected.
        assert!(build_effective_hessian(&w, &[0, 1], &atts).is_err());
    }

    #[test]
    fn resonance_matcher() {
        let spectrum = [1.0, 1.224744871391589, 1.224744871391589];
        let grouping =
            crate::symplectic::group_degenerate_modes(&spectrum, 1e-9).unwrap();
        let g = match_resonant_group(&spectrum, &grouping, 1.224744871391589, 1e-9).unwrap();
        assert_eq!(g, vec![1, 2]);
        assert!(match_resonant_group(&spectrum, &grouping, 2.0, 1e-9).is_err());
        assert!(match_resonant_group(&spectrum, &grouping, 1.1, 0.2).is_err());
    }

    #[test]
    fn rwa_report_thresholds() {
        let spec = SystemSpec {
            network: NetworkSpec::Chain { n: 10, omega: 1.0, kappa: 20.0 },
            omega_ext: 1.0,
            attachments: vec![
                Attachment { external: ExternalId::A, site: 10, epsilon: 0.03 },
                Attachment { external: ExternalId::B, site: 1, epsilon: 0.03 },
            ],
            hbar: 1.0,
        };
        let w = analytic_williamson(&spec.network).unwrap();
        let rep = rwa_validity_report(&spec, &w, &[0]);
        assert!((rep.eps_over_omega - 0.03).abs() < 1e-15);
        assert!(rep.warnings.is_empty());

        let mut strong = spec.clone();
        for a in &mut strong.attachments {
            a.epsilon = 1.0;
        }
        let rep = rwa_validity_report(&strong, &w, &[0]);
        assert!(!rep.warnings.is_empty());
    }
}
