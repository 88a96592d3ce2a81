//! First-order perturbation analysis of two coupled oscillators: transition
//! probabilities between Fock states, the perturbation amplitudes that
//! justify dropping counter-rotating terms, and the resulting RWA
//! (beam-splitter) Hamiltonian.
//!
//! The interaction is Ĥ_I = ħ Σ_{j≠k} η_{jk} a_j†a_k
//! + ħ Σ_{j,k} (ξ_{jk} a_j a_k + ξ*_{jk} a_j†a_k†), with η₂₁ = η₁₂* for
//! Hermiticity.

use log::warn;
use nalgebra::Complex;

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Two harmonic oscillators with exchange coupling η = η₁₂ and pair-creation
/// coefficient table ξ_jk (j, k ∈ {1, 2}).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoOscillatorModel {
    pub omega1: f64,
    pub omega2: f64,
    pub eta: C64,
    pub xi: [[C64; 2]; 2],
}

impl TwoOscillatorModel {
    pub fn validate(&self) -> Result<()> {
        if self.omega1 <= 0.0 || self.omega2 <= 0.0 {
            return Err(Error::InvalidArgument("frequencies must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionClass {
    /// A quantum moves from one oscillator to the other (η terms).
    EnergyConserving,
    /// Two quanta are created or destroyed (ξ terms).
    NonEnergyConserving,
    /// No single interaction term connects the two Fock states.
    Forbidden,
}

/// First-order data for one Fock-state transition: the ħ-scaled free-energy
/// gap δ, the interaction matrix element (in frequency units), and the
/// perturbation amplitude Δ = |matrix element| / |δ| (infinite at exact
/// resonance of an energy-conserving transition).
#[derive(Debug, Clone)]
pub struct TransitionReport {
    pub delta_e: f64,
    pub matrix_element: C64,
    pub amplitude: f64,
    pub classification: TransitionClass,
}

impl TransitionReport {
    /// 𝒫(τ) = 2Δ²(1 − cos(δτ)), with the removable δ→0 limit |m|²τ².
    pub fn probability(&self, tau: f64) -> f64 {
        let m2 = self.matrix_element.norm_sqr();
        if m2 == 0.0 {
            return 0.0;
        }
        let x = self.delta_e * tau;
        let p = if x.abs() < 1e-8 {
            m2 * tau * tau
        } else {
            2.0 * m2 / (self.delta_e * self.delta_e) * (1.0 - x.cos())
        };
        if p > 1.0 {
            warn!(
                "transition probability {p:.3e} exceeds 1: first-order perturbation \
                 theory has broken down for this transition"
            );
        }
        p
    }
}

fn ladder_product(n: usize, k: usize) -> f64 {
    // √(n(n−1)…(n−k+1)): matrix element of a^k between |n⟩ and |n−k⟩.
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (n - i) as f64;
    }
    acc.sqrt()
}

/// Matrix element ⟨from|Ĥ_I|to⟩/ħ and the term class connecting the pair.
fn interaction_element(
    model: &TwoOscillatorModel,
    from: (usize, usize),
    to: (usize, usize),
) -> (C64, TransitionClass) {
    let d1 = to.0 as i64 - from.0 as i64;
    let d2 = to.1 as i64 - from.1 as i64;
    let zero = C64::new(0.0, 0.0);
    match (d1, d2) {
        // η₁₂ a₁†a₂ lowers |to⟩ into |from⟩ when from = (to₁+1, to₂−1).
        (-1, 1) => (model.eta * ladder_product(to.1, 1) * ladder_product(from.0, 1), TransitionClass::EnergyConserving),
        (1, -1) => (model.eta.conj() * ladder_product(to.0, 1) * ladder_product(from.1, 1), TransitionClass::EnergyConserving),
        (2, 0) => (model.xi[0][0] * ladder_product(to.0, 2), TransitionClass::NonEnergyConserving),
        (0, 2) => (model.xi[1][1] * ladder_product(to.1, 2), TransitionClass::NonEnergyConserving),
        (1, 1) => (
            (model.xi[0][1] + model.xi[1][0]) * ladder_product(to.0, 1) * ladder_product(to.1, 1),
            TransitionClass::NonEnergyConserving,
        ),
        (-2, 0) => (model.xi[0][0].conj() * ladder_product(from.0, 2), TransitionClass::NonEnergyConserving),
        (0, -2) => (model.xi[1][1].conj() * ladder_product(from.1, 2), TransitionClass::NonEnergyConserving),
        (-1, -1) => (
            (model.xi[0][1].conj() + model.xi[1][0].conj())
                * ladder_product(from.0, 1)
                * ladder_product(from.1, 1),
            TransitionClass::NonEnergyConserving,
        ),
        _ => (zero, TransitionClass::Forbidden),
    }
}

/// Full first-order analysis of the transition |from⟩ → |to⟩.
pub fn analyze_transition(
    model: &TwoOscillatorModel,
    from: (usize, usize),
    to: (usize, usize),
) -> Result<TransitionReport> {
    model.validate()?;
    let (element, mut class) = interaction_element(model, from, to);
    if element.norm() == 0.0 {
        class = TransitionClass::Forbidden;
    }
    // δ = ⟨from|H₀|from⟩ − ⟨to|H₀|to⟩, in units of ħ.
    let delta_e = model.omega1 * (from.0 as f64 - to.0 as f64)
        + model.omega2 * (from.1 as f64 - to.1 as f64);
    let amplitude = match class {
        TransitionClass::Forbidden => 0.0,
        _ if delta_e == 0.0 => f64::INFINITY,
        _ => element.norm() / delta_e.abs(),
    };
    Ok(TransitionReport { delta_e, matrix_element: element, amplitude, classification: class })
}

/// Transition probability 𝒫_{Ψ→Ψ′}(τ) at first order.
pub fn transition_probability(
    model: &TwoOscillatorModel,
    from: (usize, usize),
    to: (usize, usize),
    tau: f64,
) -> Result<f64> {
    Ok(analyze_transition(model, from, to)?.probability(tau))
}

/// Perturbation amplitude Δ(Ψ′): η-type over |ω_j − ω_k|, ξ-type over
/// ω_j + ω_k. Infinite at exact resonance of an η-type transition, where the
/// perturbation criterion is inapplicable (the probability itself remains
/// computable through the resonant limit).
pub fn perturbation_ratios(
    model: &TwoOscillatorModel,
    from: (usize, usize),
    to: (usize, usize),
) -> Result<f64> {
    Ok(analyze_transition(model, from, to)?.amplitude)
}

/// The RWA Hamiltonian: all counter-rotating (ξ) terms dropped, keeping the
/// free evolution and the beam-splitter exchange η.
pub fn rwa_hamiltonian(model: &TwoOscillatorModel) -> TwoOscillatorModel {
    let zero = C64::new(0.0, 0.0);
    TwoOscillatorModel { xi: [[zero; 2]; 2], ..model.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn model(eta: f64, xi12: f64) -> TwoOscillatorModel {
        let zero = C64::new(0.0, 0.0);
        let mut xi = [[zero; 2]; 2];
        xi[0][1] = C64::new(xi12, 0.0);
        TwoOscillatorModel {
            omega1: 1.0,
            omega2: 1.1,
            eta: C64::new(eta, 0.0),
            xi,
        }
    }

    #[test]
    fn eta_amplitude_example() {
        let m = model(0.01, 0.0);
        let d = perturbation_ratios(&m, (1, 0), (0, 1)).unwrap();
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn xi_amplitude_example() {
        let m = model(0.0, 0.01);
        let d = perturbation_ratios(&m, (0, 0), (1, 1)).unwrap();
        assert!((d - 0.01 / 2.1).abs() < 1e-15);
    }

    #[test]
    fn resonant_quadratic_growth() {
        let mut m = model(0.01, 0.0);
        m.omega2 = 1.0;
        let rep = analyze_transition(&m, (1, 0), (0, 1)).unwrap();
        assert_eq!(rep.classification, TransitionClass::EnergyConserving);
        assert!(rep.amplitude.is_infinite());
        for tau in [0.1, 1.0, 10.0] {
            let p = rep.probability(tau);
            assert!((p - (0.01 * tau).powi(2)).abs() < 1e-15, "tau = {tau}");
        }
    }

    #[test]
    fn pair_creation_bounded_oscillation() {
        let zero = C64::new(0.0, 0.0);
        let mut xi = [[zero; 2]; 2];
        xi[0][0] = C64::new(0.01, 0.0);
        let m = TwoOscillatorModel { omega1: 1.0, omega2: 1.1, eta: zero, xi };
        let rep = analyze_transition(&m, (0, 0), (2, 0)).unwrap();
        assert_eq!(rep.classification, TransitionClass::NonEnergyConserving);
        // Amplitude ∝ 1/(2ω₁); element √2.
        assert!((rep.amplitude - 0.01 * 2.0f64.sqrt() / 2.0).abs() < 1e-15);
        let bound = 4.0 * rep.amplitude * rep.amplitude;
        for k in 0..1000 {
            let p = rep.probability(0.37 * k as f64);
            assert!(p <= bound + 1e-15);
        }
    }

    #[test]
    fn forbidden_transitions() {
        let m = model(0.01, 0.01);
        for to in [(3, 0), (0, 0), (1, 2), (2, 1)] {
            let rep = analyze_transition(&m, (0, 0), to).unwrap();
            assert_eq!(rep.classification, TransitionClass::Forbidden);
            assert_eq!(rep.probability(5.0), 0.0);
        }
        // η-connected Fock pattern but η = 0 → forbidden as well.
        let rep = analyze_transition(&model(0.0, 0.01), (1, 0), (0, 1)).unwrap();
        assert_eq!(rep.classification, TransitionClass::Forbidden);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        // 𝒫 = |∫₀^τ m·e^{iδt} dt|² for the constant-amplitude integrand.
        let m = model(0.01, 0.007);
        for (from, to) in [((1, 0), (0, 1)), ((0, 0), (1, 1)), ((0, 0), (2, 0))] {
            let rep = analyze_transition(&m, from, to).unwrap();
            for tau in [0.5, 3.0, 20.0] {
                let steps = 20_000usize;
                let dt = tau / steps as f64;
                let mut acc = C64::new(0.0, 0.0);
                for s in 0..steps {
                    // Midpoint rule on m·e^{iδt}.
                    let t = (s as f64 + 0.5) * dt;
                    acc += rep.matrix_element * C64::new(0.0, rep.delta_e * t).exp() * dt;
                }
                let p = rep.probability(tau);
                assert!(
                    (acc.norm_sqr() - p).abs() < 1e-10,
                    "{from:?}->{to:?} tau={tau}: {} vs {p}",
                    acc.norm_sqr()
                );
            }
        }
    }

    #[test]
    fn envelope_ratio() {
        // Matched |η| = |ξ|: the maxima of the two probability envelopes
        // differ by ((ω₁+ω₂)/(ω₁−ω₂))².
        let m = model(0.01, 0.01);
        let rep_c = analyze_transition(&m, (1, 0), (0, 1)).unwrap();
        let rep_nc = analyze_transition(&m, (0, 0), (1, 1)).unwrap();
        let mut max_c = 0.0f64;
        let mut max_nc = 0.0f64;
        for k in 0..200_000 {
            let tau = 0.005 * k as f64;
            max_c = max_c.max(rep_c.probability(tau));
            max_nc = max_nc.max(rep_nc.probability(tau));
        }
        let expect = ((m.omega1 + m.omega2) / (m.omega1 - m.omega2)).powi(2);
        assert!((expect - 441.0).abs() < 1e-9);
        assert!((max_c / max_nc - expect).abs() / expect < 0.05);
    }

    #[test]
    fn rwa_drops_xi_only() {
        let m = model(0.01, 0.02);
        let r = rwa_hamiltonian(&m);
        assert_eq!(r.eta, m.eta);
        assert_eq!(r.omega1, m.omega1);
        assert!(r.xi.iter().flatten().all(|z| z.norm() == 0.0));
        let pure = model(0.01, 0.0);
        assert_eq!(rwa_hamiltonian(&pure), pure);
        let free = rwa_hamiltonian(&model(0.0, 0.02));
        assert_eq!(free.eta.norm(), 0.0);
    }

    #[test]
    fn rwa_conserves_total_excitation() {
        // Truncated Fock space, 5 levels per mode: Ĥ_RWA/ħ = ω₁n₁ + ω₂n₂ +
        // ηa₁†a₂ + η*a₂†a₁ commutes with n₁ + n₂.
        let d = 5usize;
        let dim = d * d;
        let idx = |n1: usize, n2: usize| n1 * d + n2;
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let mut ntot = DMatrix::<f64>::zeros(dim, dim);
        let m = model(0.01, 0.02);
        let r = rwa_hamiltonian(&m);
        for n1 in 0..d {
            for n2 in 0..d {
                let i = idx(n1, n2);
                h[(i, i)] = r.omega1 * n1 as f64 + r.omega2 * n2 as f64;
                ntot[(i, i)] = (n1 + n2) as f64;
                if n1 + 1 < d && n2 >= 1 {
                    // ⟨n1+1, n2−1| a₁†a₂ |n1, n2⟩
                    let el = r.eta.re * ((n1 + 1) as f64 * n2 as f64).sqrt();
                    h[(idx(n1 + 1, n2 - 1), i)] += el;
                    h[(i, idx(n1 + 1, n2 - 1))] += el;
                }
            }
        }
        let comm = &h * &ntot - &ntot * &h;
        assert_eq!(comm.amax(), 0.0);
    }
}
