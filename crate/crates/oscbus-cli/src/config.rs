//! Experiment configuration: strict TOML schema, figure presets, and the
//! merge of partial documents over preset defaults.
//!
//! Times are expressed as ωt (dimensionless), matching the figure axes.

use serde::{Deserialize, Serialize};

use oscbus::network::{Attachment, ExternalId, NetworkSpec, SystemSpec};

/// A configuration error (exit code 2 territory).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Chain,
    Triangle,
    MomentumCoupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    OccupationExact,
    OccupationEffective,
    OccupationClosedForm,
    Fidelity,
    CmDump,
    BathClassification,
    RwaReport,
}

/// Partial document as parsed from disk: every field optional so it can be
/// merged over a preset. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub preset: Option<String>,
    #[serde(default)]
    pub system: PartialSystem,
    #[serde(default)]
    pub initial: PartialInitial,
    pub baths: Option<BathSection>,
    #[serde(default)]
    pub run: PartialRun,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PartialSystem {
    pub topology: Option<Topology>,
    pub n_sites: Option<usize>,
    pub omega: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_prime: Option<f64>,
    pub gamma: Option<f64>,
    pub omega_ext: Option<f64>,
    pub site_a: Option<usize>,
    pub site_b: Option<usize>,
    pub epsilon: Option<f64>,
    pub hbar: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PartialInitial {
    pub n_b: Option<f64>,
    pub n_network: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub zeta: f64,
    pub n_th: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PartialRun {
    /// 1-based normal-mode index to set the resonance Ω := ς_m.
    pub resonant_mode: Option<usize>,
    /// Alternative to `resonant_mode`: match a frequency within a tolerance.
    pub resonant_frequency: Option<f64>,
    pub resonance_tolerance: Option<f64>,
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    pub outputs: Option<Vec<OutputKind>>,
    /// Also run the effective model with only the highest mode of the
    /// resonant degeneracy group (the "naive" single-mode contrast).
    pub naive_single_mode: Option<bool>,
}

/// Fully validated experiment.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub topology: Topology,
    pub n_sites: usize,
    pub omega: f64,
    pub kappa: f64,
    pub kappa_prime: f64,
    pub gamma: f64,
    pub omega_ext: f64,
    pub site_a: usize,
    pub site_b: usize,
    pub epsilon: f64,
    pub hbar: f64,
    pub n_b: f64,
    pub n_network: f64,
    pub baths: Option<BathSection>,
    pub resonant_mode: Option<usize>,
    pub resonant_frequency: Option<f64>,
    pub resonance_tolerance: f64,
    pub t_max: f64,
    pub samples: usize,
    pub outputs: Vec<OutputKind>,
    pub naive_single_mode: bool,
}

impl ExperimentConfig {
    pub fn network(&self) -> NetworkSpec {
        match self.topology {
            Topology::Chain => NetworkSpec::Chain {
                n: self.n_sites,
                omega: self.omega,
                kappa: self.kappa,
            },
            Topology::Triangle => NetworkSpec::Triangle {
                omega: self.omega,
                kappa: self.kappa,
                kappa_prime: self.kappa_prime,
            },
            Topology::MomentumCoupled => NetworkSpec::MomentumCoupled {
                omega: self.omega,
                kappa: self.kappa,
                gamma: self.gamma,
            },
        }
    }

    pub fn system_spec(&self) -> SystemSpec {
        SystemSpec {
            network: self.network(),
            omega_ext: self.omega_ext,
            attachments: vec![
                Attachment { external: ExternalId::A, site: self.site_a, epsilon: self.epsilon },
                Attachment { external: ExternalId::B, site: self.site_b, epsilon: self.epsilon },
            ],
            hbar: self.hbar,
        }
    }

    /// Canonical partial form (used for the round-trip guarantee and echo).
    pub fn to_partial(&self) -> PartialConfig {
        PartialConfig {
            preset: self.preset.clone(),
            system: PartialSystem {
                topology: Some(self.topology),
                n_sites: Some(self.n_sites),
                omega: Some(self.omega),
                kappa: Some(self.kappa),
                kappa_prime: Some(self.kappa_prime),
                gamma: Some(self.gamma),
                omega_ext: Some(self.omega_ext),
                site_a: Some(self.site_a),
                site_b: Some(self.site_b),
                epsilon: Some(self.epsilon),
                hbar: Some(self.hbar),
            },
            initial: PartialInitial {
                n_b: Some(self.n_b),
                n_network: Some(self.n_network),
            },
            baths: self.baths,
            run: PartialRun {
                resonant_mode: self.resonant_mode,
                resonant_frequency: self.resonant_frequency,
                resonance_tolerance: Some(self.resonance_tolerance),
                t_max: Some(self.t_max),
                samples: Some(self.samples),
                outputs: Some(self.outputs.clone()),
                naive_single_mode: Some(self.naive_single_mode),
            },
        }
    }
}

fn merge_opt<T: Clone>(over: &Option<T>, base: &Option<T>) -> Option<T> {
    over.clone().or_else(|| base.clone())
}

/// Overlays `over` on `base`: any field present in `over` wins.
pub fn merge(over: &PartialConfig, base: &PartialConfig) -> PartialConfig {
    PartialConfig {
        preset: merge_opt(&over.preset, &base.preset),
        system: PartialSystem {
            topology: merge_opt(&over.system.topology, &base.system.topology),
            n_sites: merge_opt(&over.system.n_sites, &base.system.n_sites),
            omega: merge_opt(&over.system.omega, &base.system.omega),
            kappa: merge_opt(&over.system.kappa, &base.system.kappa),
            kappa_prime: merge_opt(&over.system.kappa_prime, &base.system.kappa_prime),
            gamma: merge_opt(&over.system.gamma, &base.system.gamma),
            omega_ext: merge_opt(&over.system.omega_ext, &base.system.omega_ext),
            site_a: merge_opt(&over.system.site_a, &base.system.site_a),
            site_b: merge_opt(&over.system.site_b, &base.system.site_b),
            epsilon: merge_opt(&over.system.epsilon, &base.system.epsilon),
            hbar: merge_opt(&over.system.hbar, &base.system.hbar),
        },
        initial: PartialInitial {
            n_b: merge_opt(&over.initial.n_b, &base.initial.n_b),
            n_network: merge_opt(&over.initial.n_network, &base.initial.n_network),
        },
        baths: over.baths.or(base.baths),
        run: PartialRun {
            resonant_mode: merge_opt(&over.run.resonant_mode, &base.run.resonant_mode),
            resonant_frequency: merge_opt(
                &over.run.resonant_frequency,
                &base.run.resonant_frequency,
            ),
            resonance_tolerance: merge_opt(
                &over.run.resonance_tolerance,
                &base.run.resonance_tolerance,
            ),
            t_max: merge_opt(&over.run.t_max, &base.run.t_max),
            samples: merge_opt(&over.run.samples, &base.run.samples),
            outputs: merge_opt(&over.run.outputs, &base.run.outputs),
            naive_single_mode: merge_opt(
                &over.run.naive_single_mode,
                &base.run.naive_single_mode,
            ),
        },
    }
}

/// The figure presets. Every preset is total: it fills every field required
/// for validation, so `preset = "<name>"` alone is a runnable config.
///
/// All presets share the chain benchmark baseline (N = 10, ω = 1, κ = 20,
/// Ω = 1, ε = 0.03, a at site 10, b at site 1) unless stated:
/// - fig3: closed system, n̄_b = 1 — exact vs effective occupations.
/// - fig4: fig3 with n̄_b = 0 — residual exact occupation only.
/// - fig5: resonance with mode 2 — closed-form occupation (site_b sweeps show
///   the β dependence of the transfer function).
/// - fig6: n̄_b = 0, network thermal n̄ = 1 — network contribution.
/// - fig7: local baths ζ = 0.01, n̄_th = 1, ωt ≤ 1500.
/// - fig8: 1 − fidelity between exact and effective reduced states of a.
/// - fig10: degenerate triangle κ = κ′ = ω/3, ε = ω/600, Ω = ς₂ = ς₃,
///   a at site 2, b at site 3; includes the naive single-mode contrast.
/// - fig12: momentum-coupled network κ = 0.5, γ = 0.2, ε = 10⁻³, Ω = ς₁,
///   a at site 1, b at site 3.
pub fn preset(name: &str) -> Result<PartialConfig, ConfigError> {
    let chain = PartialConfig {
        preset: Some(name.to_string()),
        system: PartialSystem {
            topology: Some(Topology::Chain),
            n_sites: Some(10),
            omega: Some(1.0),
            kappa: Some(20.0),
            kappa_prime: None,
            gamma: None,
            omega_ext: Some(1.0),
            site_a: Some(10),
            site_b: Some(1),
            epsilon: Some(0.03),
            hbar: Some(1.0),
        },
        initial: PartialInitial { n_b: Some(1.0), n_network: Some(0.0) },
        baths: None,
        run: PartialRun {
            resonant_mode: Some(1),
            resonant_frequency: None,
            resonance_tolerance: None,
            t_max: Some(2000.0),
            samples: Some(801),
            outputs: Some(vec![OutputKind::OccupationExact, OutputKind::OccupationEffective]),
            naive_single_mode: Some(false),
        },
    };
    let mut cfg = chain.clone();
    match name {
        "fig3" => {}
        "fig4" => {
            cfg.initial.n_b = Some(0.0);
            cfg.run.outputs = Some(vec![OutputKind::OccupationExact]);
        }
        "fig5" => {
            cfg.run.resonant_mode = Some(2);
            cfg.run.outputs = Some(vec![OutputKind::OccupationClosedForm]);
        }
        "fig6" => {
            cfg.initial.n_b = Some(0.0);
            cfg.initial.n_network = Some(1.0);
            cfg.run.outputs = Some(vec![
                OutputKind::OccupationEffective,
                OutputKind::OccupationClosedForm,
            ]);
        }
        "fig7" => {
            cfg.baths = Some(BathSection { zeta: 0.01, n_th: 1.0 });
            cfg.run.t_max = Some(1500.0);
            cfg.run.outputs = Some(vec![
                OutputKind::OccupationExact,
                OutputKind::OccupationEffective,
                OutputKind::BathClassification,
            ]);
        }
        "fig8" => {
            cfg.run.outputs = Some(vec![OutputKind::Fidelity]);
        }
        "fig10" => {
            cfg.system.topology = Some(Topology::Triangle);
            cfg.system.n_sites = Some(3);
            cfg.system.kappa = Some(1.0 / 3.0);
            cfg.system.kappa_prime = Some(1.0 / 3.0);
            cfg.system.site_a = Some(2);
            cfg.system.site_b = Some(3);
            cfg.system.epsilon = Some(1.0 / 600.0);
            // Ω = ς₂ = ς₃ = √(ω(ω + κ/2 + κ′)) = √(3/2).
            cfg.system.omega_ext = Some(1.5f64.sqrt());
            cfg.run.resonant_mode = Some(2);
            cfg.run.t_max = Some(1.0e4);
            cfg.run.naive_single_mode = Some(true);
        }
        "fig12" => {
            cfg.system.topology = Some(Topology::MomentumCoupled);
            cfg.system.n_sites = Some(3);
            cfg.system.kappa = Some(0.5);
            cfg.system.gamma = Some(0.2);
            cfg.system.site_a = Some(1);
            cfg.system.site_b = Some(3);
            cfg.system.epsilon = Some(1.0e-3);
            // Ω = ς₁ = √(ω² − (κ+γ)²) = √0.51.
            cfg.system.omega_ext = Some(0.51f64.sqrt());
            cfg.run.resonant_mode = Some(1);
            cfg.run.t_max = Some(2.0e4);
        }
        other => return err(format!(
            "unknown preset {other:?}; available: fig3, fig4, fig5, fig6, fig7, fig8, fig10, fig12"
        )),
    }
    Ok(cfg)
}

/// Parses a TOML document into a partial config (strict: unknown keys error).
pub fn parse_partial(text: &str) -> Result<PartialConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
}

fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T, ConfigError> {
    v.ok_or_else(|| ConfigError(format!("missing required key `{key}`")))
}

/// Validates a (merged) partial config into a runnable experiment.
pub fn validate(p: &PartialConfig, allow_large: bool) -> Result<ExperimentConfig, ConfigError> {
    let topology = require(p.system.topology, "system.topology")?;
    let n_sites = match topology {
        Topology::Chain => require(p.system.n_sites, "system.n_sites")?,
        Topology::Triangle | Topology::MomentumCoupled => {
            if let Some(n) = p.system.n_sites {
                if n != 3 {
                    return err("system.n_sites must be 3 for this topology");
                }
            }
            3
        }
    };
    if n_sites > 200 && !allow_large {
        return err(format!(
            "system.n_sites = {n_sites} exceeds the exact-model guard of 200 \
             (dense exponentials scale cubically); pass --allow-large to override"
        ));
    }
    let omega = require(p.system.omega, "system.omega")?;
    let kappa = require(p.system.kappa, "system.kappa")?;
    let kappa_prime = match topology {
        Topology::Triangle => require(p.system.kappa_prime, "system.kappa_prime")?,
        _ => p.system.kappa_prime.unwrap_or(0.0),
    };
    let gamma = match topology {
        Topology::MomentumCoupled => require(p.system.gamma, "system.gamma")?,
        _ => p.system.gamma.unwrap_or(0.0),
    };
    let omega_ext = require(p.system.omega_ext, "system.omega_ext")?;
    let site_a = require(p.system.site_a, "system.site_a")?;
    let site_b = require(p.system.site_b, "system.site_b")?;
    let epsilon = require(p.system.epsilon, "system.epsilon")?;
    let hbar = p.system.hbar.unwrap_or(1.0);
    let n_b = require(p.initial.n_b, "initial.n_b")?;
    let n_network = require(p.initial.n_network, "initial.n_network")?;
    let t_max = require(p.run.t_max, "run.t_max")?;
    let samples = require(p.run.samples, "run.samples")?;
    let outputs = p
        .run
        .outputs
        .clone()
        .ok_or_else(|| ConfigError("missing required key `run.outputs`".into()))?;

    if omega <= 0.0 || omega_ext <= 0.0 {
        return err("frequencies must be positive");
    }
    if epsilon <= 0.0 {
        return err("system.epsilon must be positive");
    }
    if site_a == 0 || site_a > n_sites || site_b == 0 || site_b > n_sites {
        return err(format!("attachment sites must lie in 1..={n_sites}"));
    }
    if n_b < 0.0 || n_network < 0.0 {
        return err("initial occupations must be nonnegative");
    }
    if let Some(b) = &p.baths {
        if b.zeta < 0.0 || b.n_th < 0.0 {
            return err("bath parameters must be nonnegative");
        }
    }
    if t_max <= 0.0 {
        return err("run.t_max must be positive");
    }
    if samples < 2 {
        return err("run.samples must be at least 2");
    }
    if p.run.resonant_mode.is_none() && p.run.resonant_frequency.is_none() {
        return err("one of run.resonant_mode or run.resonant_frequency is required");
    }
    if let Some(m) = p.run.resonant_mode {
        if m == 0 || m > n_sites {
            return err(format!("run.resonant_mode must lie in 1..={n_sites}"));
        }
    }
    if outputs.is_empty() {
        return err("run.outputs must name at least one output");
    }

    Ok(ExperimentConfig {
        preset: p.preset.clone(),
        topology,
        n_sites,
        omega,
        kappa,
        kappa_prime,
        gamma,
        omega_ext,
        site_a,
        site_b,
        epsilon,
        hbar,
        n_b,
        n_network,
        baths: p.baths,
        resonant_mode: p.run.resonant_mode,
        resonant_frequency: p.run.resonant_frequency,
        resonance_tolerance: p.run.resonance_tolerance.unwrap_or(1e-9 * omega_ext),
        t_max,
        samples,
        outputs,
        naive_single_mode: p.run.naive_single_mode.unwrap_or(false),
    })
}

/// Loads a document, expanding its preset (or an externally forced one).
pub fn load(text: &str, forced_preset: Option<&str>, allow_large: bool)
    -> Result<ExperimentConfig, ConfigError>
{
    let partial = parse_partial(text)?;
    let preset_name = forced_preset
        .map(str::to_string)
        .or_else(|| partial.preset.clone());
    let merged = match preset_name {
        Some(name) => merge(&partial, &preset(&name)?),
        None => partial,
    };
    validate(&merged, allow_large)
}

/// Applies a dotted-key override (used by the sweep runner), e.g.
/// `system.epsilon = 0.01` or `initial.n_b = 2`.
pub fn apply_override(
    p: &mut PartialConfig,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    let parse_f64 = |v: &str| -> Result<f64, ConfigError> {
        v.parse().map_err(|_| ConfigError(format!("cannot parse `{v}` as a number for `{key}`")))
    };
    let parse_usize = |v: &str| -> Result<usize, ConfigError> {
        v.parse().map_err(|_| ConfigError(format!("cannot parse `{v}` as an integer for `{key}`")))
    };
    match key {
        "system.n_sites" => p.system.n_sites = Some(parse_usize(value)?),
        "system.omega" => p.system.omega = Some(parse_f64(value)?),
        "system.kappa" => p.system.kappa = Some(parse_f64(value)?),
        "system.kappa_prime" => p.system.kappa_prime = Some(parse_f64(value)?),
        "system.gamma" => p.system.gamma = Some(parse_f64(value)?),
        "system.omega_ext" => p.system.omega_ext = Some(parse_f64(value)?),
        "system.site_a" => p.system.site_a = Some(parse_usize(value)?),
        "system.site_b" => p.system.site_b = Some(parse_usize(value)?),
        "system.epsilon" => p.system.epsilon = Some(parse_f64(value)?),
        "initial.n_b" => p.initial.n_b = Some(parse_f64(value)?),
        "initial.n_network" => p.initial.n_network = Some(parse_f64(value)?),
        "baths.zeta" => {
            let zeta = parse_f64(value)?;
            let n_th = p.baths.map(|b| b.n_th).unwrap_or(0.0);
            p.baths = Some(BathSection { zeta, n_th });
        }
        "baths.n_th" => {
            let n_th = parse_f64(value)?;
            let zeta = p.baths.map(|b| b.zeta).unwrap_or(0.0);
            p.baths = Some(BathSection { zeta, n_th });
        }
        "run.resonant_mode" => p.run.resonant_mode = Some(parse_usize(value)?),
        "run.t_max" => p.run.t_max = Some(parse_f64(value)?),
        "run.samples" => p.run.samples = Some(parse_usize(value)?),
        other => return err(format!("unsupported sweep/override key `{other}`")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_fig3_expands_to_caption_parameters() {
        let cfg = validate(&preset("fig3").unwrap(), false).unwrap();
        assert_eq!(cfg.topology, Topology::Chain);
        assert_eq!(cfg.n_sites, 10);
        assert_eq!(cfg.omega, 1.0);
        assert_eq!(cfg.kappa, 20.0);
        assert_eq!(cfg.omega_ext, 1.0);
        assert_eq!(cfg.epsilon, 0.03);
        assert_eq!(cfg.site_a, 10);
        assert_eq!(cfg.site_b, 1);
        assert_eq!(cfg.n_b, 1.0);
        assert!(cfg.baths.is_none());
    }

    #[test]
    fn all_presets_validate() {
        for name in ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig10", "fig12"] {
            let cfg = validate(&preset(name).unwrap(), false)
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(cfg.samples >= 2);
            assert!(cfg.t_max > 0.0);
        }
        assert!(preset("fig999").is_err());
    }

    #[test]
    fn empty_document_lists_missing_key() {
        let e = load("", None, false).unwrap_err();
        assert!(e.0.contains("missing required key"), "{e}");
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let e = parse_partial("[system]\nfrobnicate = 3\n").unwrap_err();
        assert!(e.0.contains("frobnicate"), "{e}");
    }

    #[test]
    fn overrides_win_over_preset() {
        let cfg = load("preset = \"fig3\"\n[initial]\nn_b = 2.5\n", None, false).unwrap();
        assert_eq!(cfg.n_b, 2.5);
        assert_eq!(cfg.kappa, 20.0);
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = validate(&preset("fig7").unwrap(), false).unwrap();
        let text = toml::to_string(&cfg.to_partial()).unwrap();
        let cfg2 = load(&text, None, false).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn size_guard() {
        let mut p = preset("fig3").unwrap();
        p.system.n_sites = Some(500);
        assert!(validate(&p, false).is_err());
        assert!(validate(&p, true).is_ok());
    }

    #[test]
    fn sweep_override_keys() {
        let mut p = preset("fig3").unwrap();
        apply_override(&mut p, "system.epsilon", "0.01").unwrap();
        assert_eq!(p.system.epsilon, Some(0.01));
        apply_override(&mut p, "baths.zeta", "0.02").unwrap();
        assert_eq!(p.baths.unwrap().zeta, 0.02);
        assert!(apply_override(&mut p, "run.outputs", "x").is_err());
    }
}
