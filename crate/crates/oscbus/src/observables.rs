//! Observables: initial-state construction, reduced single-oscillator states,
//! occupation numbers, and the Uhlmann fidelity between single-mode Gaussian
//! states.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::dynamics::CovarianceState;
use crate::error::{Error, Result};
use crate::network::ExternalId;

/// Thermal occupations of the initial product state. Oscillator a is fixed
/// to the vacuum; b and every network site (or resonant mode, in the reduced
/// picture) carry the listed occupations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialStateSpec {
    pub n_b: f64,
    pub n_network: f64,
}

impl InitialStateSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_b < 0.0 || self.n_network < 0.0 {
            return Err(Error::InvalidArgument(
                "thermal occupations must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Phase-space layout of a covariance matrix containing the two external
/// oscillators: either the full system over (q_a, q_b, q₁…q_N, p_a, p_b,
/// p₁…p_N) or the reduced effective model over (q_a, q_b, modes…, p_a, p_b,
/// modes…).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Full { n_sites: usize },
    Effective { n_modes: usize },
}

impl Layout {
    pub fn half_dim(&self) -> usize {
        match *self {
            Layout::Full { n_sites } => n_sites + 2,
            Layout::Effective { n_modes } => n_modes + 2,
        }
    }

    /// (q, p) index pair of an external oscillator.
    pub fn external_indices(&self, id: ExternalId) -> (usize, usize) {
        let x = match id {
            ExternalId::A => 0,
            ExternalId::B => 1,
        };
        (x, self.half_dim() + x)
    }

    /// (q, p) index pair of the k-th network site / resonant mode (0-based).
    pub fn mode_indices(&self, k: usize) -> (usize, usize) {
        (2 + k, self.half_dim() + 2 + k)
    }
}

/// 2×2 covariance matrix of a single oscillator extracted from a larger state.
#[derive(Debug, Clone)]
pub struct ReducedState {
    pub v2: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub label: String,
}

/// Initial covariance matrix: vacuum for a, a thermal state of occupation
/// n̄_b for b, and a common thermal occupation for every network degree of
/// freedom, V₀ = V_T ⊕ (ħ/2)(2n̄+1)I (in the layout's interleaved ordering).
pub fn build_initial_cm(
    spec: &InitialStateSpec,
    layout: Layout,
    hbar: f64,
) -> Result<CovarianceState> {
    spec.validate()?;
    if hbar <= 0.0 {
        return Err(Error::InvalidArgument("hbar must be positive".into()));
    }
    let half = layout.half_dim();
    let mut v = DMatrix::<f64>::identity(2 * half, 2 * half) * (hbar / 2.0);
    let (qb, pb) = layout.external_indices(ExternalId::B);
    v[(qb, qb)] = hbar / 2.0 * (2.0 * spec.n_b + 1.0);
    v[(pb, pb)] = hbar / 2.0 * (2.0 * spec.n_b + 1.0);
    for k in 0..half - 2 {
        let (qk, pk) = layout.mode_indices(k);
        v[(qk, qk)] = hbar / 2.0 * (2.0 * spec.n_network + 1.0);
        v[(pk, pk)] = hbar / 2.0 * (2.0 * spec.n_network + 1.0);
    }
    CovarianceState::new(v, DVector::zeros(2 * half), 0.0)
}

/// Marginal state of one external oscillator: the 2×2 block
/// [[V_qq, V_qp], [V_pq, V_pp]].
pub fn reduce_to_oscillator(
    state: &CovarianceState,
    layout: Layout,
    id: ExternalId,
) -> Result<ReducedState> {
    let (q, p) = layout.external_indices(id);
    let dim = state.v.nrows();
    if 2 * layout.half_dim() != dim {
        return Err(Error::InvalidDimension(format!(
            "layout expects dimension {}, state has {dim}",
            2 * layout.half_dim()
        )));
    }
    let v2 = DMatrix::from_row_slice(
        2,
        2,
        &[state.v[(q, q)], state.v[(q, p)], state.v[(p, q)], state.v[(p, p)]],
    );
    let mean = DVector::from_column_slice(&[state.mean[q], state.mean[p]]);
    Ok(ReducedState {
        v2,
        mean,
        label: match id {
            ExternalId::A => "a".into(),
            ExternalId::B => "b".into(),
        },
    })
}

/// Mean phonon number n̄ = (V_qq + V_pp)/(2ħ) − ½ of a reduced state.
pub fn occupation_number(r: &ReducedState, hbar: f64) -> Result<f64> {
    let n = (r.v2[(0, 0)] + r.v2[(1, 1)]) / (2.0 * hbar) - 0.5;
    if n < -1e-9 {
        return Err(Error::InvalidState(format!(
            "occupation {n:.3e} of oscillator {} is negative beyond roundoff",
            r.label
        )));
    }
    Ok(n.max(0.0))
}

fn sqrt_clamped(x: f64, what: &str) -> Result<f64> {
    if x < -1e-12 {
        return Err(Error::InvalidState(format!(
            "{what} = {x:.3e} is negative beyond the roundoff floor"
        )));
    }
    if x < 0.0 {
        warn!("fidelity: clamping {what} = {x:.3e} to 0");
    }
    Ok(x.max(0.0).sqrt())
}

/// Uhlmann fidelity between two zero-mean single-mode Gaussian states with
/// CMs A, B: with à = 2A/ħ, B̃ = 2B/ħ (vacuum = identity),
/// F = 2 / (√(Δ+δ) − √δ), Δ = det(Ã+B̃), δ = (det Ã − 1)(det B̃ − 1).
pub fn gaussian_fidelity(a: &ReducedState, b: &ReducedState, hbar: f64) -> Result<f64> {
    for (r, name) in [(a, "A"), (b, "B")] {
        if r.v2.nrows() != 2 || r.v2.ncols() != 2 {
            return Err(Error::InvalidDimension(format!("state {name} is not 2x2")));
        }
        if (r.v2[(0, 1)] - r.v2[(1, 0)]).abs() > 1e-10 * r.v2.amax().max(1.0) {
            return Err(Error::InvalidState(format!("state {name} CM is not symmetric")));
        }
        if r.mean.amax() > 1e-10 {
            return Err(Error::InvalidState(format!(
                "state {name} has nonzero mean; only zero-mean fidelity is supported"
            )));
        }
        // Purity bound det(2V/ħ) ≥ 1 up to roundoff.
        let det = (2.0 / hbar * &r.v2).determinant();
        if det < 1.0 - 1e-9 {
            return Err(Error::InvalidState(format!(
                "state {name} violates the uncertainty relation: det(2V/hbar) = {det}"
            )));
        }
    }
    let at = 2.0 / hbar * &a.v2;
    let bt = 2.0 / hbar * &b.v2;
    let big_delta = (&at + &bt).determinant();
    let small_delta = (at.determinant() - 1.0) * (bt.determinant() - 1.0);
    let root_sum = sqrt_clamped(big_delta + small_delta, "Delta + delta")?;
    let root_delta = sqrt_clamped(small_delta, "delta")?;
    let denom = root_sum - root_delta;
    if denom <= 0.0 {
        return Err(Error::InvalidState(
            "degenerate fidelity denominator; CMs are not valid states".into(),
        ));
    }
    let f = 2.0 / denom;
    if f > 1.0 {
        if f > 1.0 + 1e-9 {
            return Err(Error::InvalidState(format!(
                "fidelity {f} exceeds 1 beyond roundoff"
            )));
        }
        warn!("fidelity: clamping {:.3e} above 1 to 1", f - 1.0);
        return Ok(1.0);
    }
    Ok(f)
}
