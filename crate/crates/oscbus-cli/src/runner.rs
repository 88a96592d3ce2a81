//! Experiment execution: exact and effective propagation pipelines on a
//! shared time grid, closed-form evaluation, and deterministic CSV/JSON
//! emission with a digest-carrying manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use oscbus::dynamics::{
    classify_mode_baths, drift_and_diffusion, propagate_cm, thermal_bath_noise,
    thermal_bath_noise_for_dim, NoiseModel,
};
use oscbus::effective::{
    build_effective_hessian, build_effective_noise, effective_coefficients,
    match_resonant_group, occupation_closed_form, propagate_effective, rwa_validity_report,
};
use oscbus::network::{analytic_williamson, assemble_system_hessian, ExternalId};
use oscbus::observables::{
    build_initial_cm, gaussian_fidelity, occupation_number, reduce_to_oscillator,
    InitialStateSpec, Layout,
};
use oscbus::symplectic::{default_degeneracy_tol, group_degenerate_modes};

use crate::config::{ExperimentConfig, OutputKind};

/// Failure of a run, split by exit-code class: configuration errors (2)
/// versus numeric/model errors (3).
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numeric(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<oscbus::Error> for RunError {
    fn from(e: oscbus::Error) -> Self {
        match &e {
            oscbus::Error::StructuralViolation(_) => RunError::Numeric(format!(
                "{e}; the reduced local-bath construction requires S·Sᵀ diagonal — \
                 choose a topology whose normal modes decouple the baths"
            )),
            _ => RunError::Numeric(e.to_string()),
        }
    }
}

/// In-memory result of one experiment: named series on the shared ωt grid,
/// auxiliary reports for the manifest, and accumulated warnings.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub columns: Vec<(String, Vec<f64>)>,
    pub reports: Map<String, Value>,
    pub warnings: Vec<String>,
    /// Final exact covariance matrix (row-major), when cm_dump is requested.
    pub cm_dump: Option<Vec<Vec<f64>>>,
}

fn wants(cfg: &ExperimentConfig, k: OutputKind) -> bool {
    cfg.outputs.contains(&k)
}

/// Executes all pipelines requested by the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult, RunError> {
    let spec = cfg.system_spec();
    spec.validate()?;
    let n = cfg.n_sites;
    let hbar = cfg.hbar;
    let initial = InitialStateSpec { n_b: cfg.n_b, n_network: cfg.n_network };
    let (zeta, n_th) = match cfg.baths {
        Some(b) => (b.zeta, b.n_th),
        None => (0.0, 0.0),
    };

    // Shared grid: ωt values, physical times t = ωt / ω.
    let t_omega: Vec<f64> = (0..cfg.samples)
        .map(|k| cfg.t_max * k as f64 / (cfg.samples - 1) as f64)
        .collect();
    let t_phys: Vec<f64> = t_omega.iter().map(|t| t / cfg.omega).collect();

    let mut warnings = Vec::new();
    let mut reports = Map::new();
    let mut columns: Vec<(String, Vec<f64>)> = vec![("t_omega".into(), t_omega.clone())];

    // Normal modes and the resonant set.
    let w = analytic_williamson(&cfg.network())?;
    let grouping = group_degenerate_modes(&w.spectrum, default_degeneracy_tol(&w.spectrum))?;
    let mode_set: Vec<usize> = match (cfg.resonant_mode, cfg.resonant_frequency) {
        (Some(m), _) => {
            let m0 = m - 1;
            grouping
                .groups
                .iter()
                .find(|g| g.contains(&m0))
                .cloned()
                .ok_or_else(|| RunError::Numeric(format!("mode {m} not found in any group")))?
        }
        (None, Some(f)) => {
            match_resonant_group(&w.spectrum, &grouping, f, cfg.resonance_tolerance)?
        }
        (None, None) => unreachable!("validated config carries a resonance selector"),
    };
    let detuning = mode_set
        .iter()
        .map(|&m| (w.spectrum[m] - cfg.omega_ext).abs())
        .fold(f64::NEG_INFINITY, f64::max);
    if detuning > 1e-6 * cfg.omega_ext {
        warnings.push(format!(
            "external frequency is detuned by {detuning:.3e} from the resonant group"
        ));
    }

    let rwa = rwa_validity_report(&spec, &w, &mode_set);
    warnings.extend(rwa.warnings.iter().cloned());
    if wants(cfg, OutputKind::RwaReport) {
        reports.insert(
            "rwa_report".into(),
            json!({
                "eps_over_omega": rwa.eps_over_omega,
                "min_offresonant_detuning": rwa.min_offresonant_detuning,
                "degenerate_group": rwa.degenerate_group,
                "warnings": rwa.warnings,
            }),
        );
    }

    let need_exact = wants(cfg, OutputKind::OccupationExact)
        || wants(cfg, OutputKind::Fidelity)
        || wants(cfg, OutputKind::CmDump);
    let need_effective =
        wants(cfg, OutputKind::OccupationEffective) || wants(cfg, OutputKind::Fidelity);

    // Exact pipeline: full (2N+4)-dimensional covariance propagation.
    let mut exact_a_states = Vec::new();
    let mut exact_series: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut cm_dump = None;
    if need_exact {
        let h = assemble_system_hessian(&spec)?;
        let noise = if zeta > 0.0 {
            thermal_bath_noise(&spec, zeta, n_th)?
        } else {
            NoiseModel::closed(2 * (n + 2))
        };
        let (gamma, d) = drift_and_diffusion(&h, &noise, hbar)?;
        let layout = Layout::Full { n_sites: n };
        let v0 = build_initial_cm(&initial, layout, hbar)?;
        let res = propagate_cm(&gamma, &d, &v0, &t_phys)?;
        let mut na = Vec::with_capacity(res.states.len());
        let mut nb = Vec::with_capacity(res.states.len());
        for st in &res.states {
            let ra = reduce_to_oscillator(st, layout, ExternalId::A)?;
            let rb = reduce_to_oscillator(st, layout, ExternalId::B)?;
            na.push(occupation_number(&ra, hbar)?);
            nb.push(occupation_number(&rb, hbar)?);
            exact_a_states.push(ra);
        }
        if wants(cfg, OutputKind::CmDump) {
            let v = &res.states.last().expect("samples >= 2").v;
            cm_dump = Some(
                (0..v.nrows())
                    .map(|r| (0..v.ncols()).map(|c| v[(r, c)]).collect())
                    .collect(),
            );
        }
        exact_series = Some((na, nb));
    }
    if wants(cfg, OutputKind::OccupationExact) {
        let (na, nb) = exact_series.clone().expect("exact pipeline ran");
        columns.push(("n_exact_a".into(), na));
        columns.push(("n_exact_b".into(), nb));
    }

    // Effective pipeline over the resonant mode set.
    let mut effective_a_states = Vec::new();
    if need_effective {
        let model = build_effective_hessian(&w, &mode_set, &spec.attachments)?;
        let (gamma_check, d_check) = build_effective_noise(&model, &w, zeta, n_th, hbar)?;
        let layout = Layout::Effective { n_modes: mode_set.len() };
        let v0 = build_initial_cm(&initial, layout, hbar)?;
        let prop = propagate_effective(&model, &gamma_check, &d_check, zeta, &v0, &t_phys)?;
        reports.insert(
            "closed_form".into(),
            json!({
                "is_exact": prop.closed_form_is_exact,
                "max_discrepancy": prop.closed_form_discrepancy,
            }),
        );
        if prop.closed_form_is_exact && prop.closed_form_discrepancy > 1e-9 {
            warnings.push(format!(
                "closed-form cross-check deviates by {:.3e}",
                prop.closed_form_discrepancy
            ));
        }
        let mut na = Vec::with_capacity(prop.result.states.len());
        for st in &prop.result.states {
            let ra = reduce_to_oscillator(st, layout, ExternalId::A)?;
            na.push(occupation_number(&ra, hbar)?);
            effective_a_states.push(ra);
        }
        if wants(cfg, OutputKind::OccupationEffective) {
            columns.push(("n_eff_a".into(), na));
        }
    }

    // Naive contrast: only the highest mode of the degenerate group.
    if cfg.naive_single_mode {
        let naive_set = vec![*mode_set.last().expect("non-empty mode set")];
        let model = build_effective_hessian(&w, &naive_set, &spec.attachments)?;
        let (gamma_check, d_check) = build_effective_noise(&model, &w, zeta, n_th, hbar)?;
        let layout = Layout::Effective { n_modes: 1 };
        let v0 = build_initial_cm(&initial, layout, hbar)?;
        let prop = propagate_effective(&model, &gamma_check, &d_check, zeta, &v0, &t_phys)?;
        let mut na = Vec::with_capacity(prop.result.states.len());
        for st in &prop.result.states {
            let ra = reduce_to_oscillator(st, layout, ExternalId::A)?;
            na.push(occupation_number(&ra, hbar)?);
        }
        columns.push(("n_naive_a".into(), na));
    }

    // Closed-form occupation (single resonant mode, position-coupled case).
    if wants(cfg, OutputKind::OccupationClosedForm) {
        if mode_set.len() != 1 {
            return Err(RunError::Numeric(
                "the closed-form occupation applies to a single resonant mode".into(),
            ));
        }
        if zeta > 0.0 {
            return Err(RunError::Numeric(
                "the closed-form occupation applies to the closed system".into(),
            ));
        }
        let coeffs = effective_coefficients(&w, mode_set[0], &spec.attachments)?;
        let na: Result<Vec<f64>, _> = t_phys
            .iter()
            .map(|&t| occupation_closed_form(&coeffs, cfg.n_b, cfg.n_network, cfg.epsilon, t))
            .collect();
        columns.push(("n_closed_a".into(), na?));
    }

    // Fidelity between the exact and effective reduced states of a.
    if wants(cfg, OutputKind::Fidelity) {
        let mut one_minus = Vec::with_capacity(exact_a_states.len());
        for (ea, fa) in exact_a_states.iter().zip(effective_a_states.iter()) {
            one_minus.push(1.0 - gaussian_fidelity(ea, fa, hbar)?);
        }
        columns.push(("one_minus_fidelity".into(), one_minus));
    }

    // Normal-mode bath classification of the bare network.
    if wants(cfg, OutputKind::BathClassification) {
        // Classification is about structure, not magnitude: use a unit rate
        // when the configured system is closed.
        let zc = if zeta > 0.0 { zeta } else { 1.0 };
        let noise = thermal_bath_noise_for_dim(n, zc, n_th)?;
        let class = classify_mode_baths(&noise, &w.s)?;
        reports.insert(
            "bath_classification".into(),
            Value::Array(
                class
                    .iter()
                    .enumerate()
                    .map(|(k, r)| {
                        json!({
                            "mode": k + 1,
                            "class": format!("{:?}", r.class),
                            "q_weight": r.q_weight,
                            "p_weight": r.p_weight,
                        })
                    })
                    .collect(),
            ),
        );
    }

    Ok(RunResult { columns, reports, warnings, cm_dump })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

fn fmt_value(x: f64) -> String {
    // 15 significant digits, deterministic.
    format!("{x:.14e}")
}

fn render_csv(columns: &[(String, Vec<f64>)]) -> String {
    let mut out = String::new();
    let header: Vec<&str> = columns.iter().map(|(n, _)| n.as_str()).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    let rows = columns.first().map(|(_, v)| v.len()).unwrap_or(0);
    for r in 0..rows {
        let row: Vec<String> = columns.iter().map(|(_, v)| fmt_value(v[r])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Writes the data files plus `manifest.json` into `out_dir`; returns the
/// emitted paths.
pub fn emit_series(
    cfg: &ExperimentConfig,
    result: &RunResult,
    out_dir: &Path,
    format: OutputFormat,
    started: Instant,
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();

    match format {
        OutputFormat::Csv => {
            files.push(("data.csv".into(), render_csv(&result.columns).into_bytes()));
        }
        OutputFormat::Json => {
            let mut cols = Map::new();
            for (name, vals) in &result.columns {
                cols.insert(name.clone(), json!(vals));
            }
            let doc = json!({ "columns": cols });
            let mut bytes = serde_json::to_vec_pretty(&doc)?;
            bytes.push(b'\n');
            files.push(("data.json".into(), bytes));
        }
    }
    if let Some(cm) = &result.cm_dump {
        let mut out = String::new();
        for row in cm {
            let cells: Vec<String> = row.iter().map(|&x| fmt_value(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        files.push(("cm_exact_final.csv".into(), out.into_bytes()));
    }

    let mut listed = Vec::new();
    let mut paths = Vec::new();
    for (name, bytes) in &files {
        let p = out_dir.join(name);
        fs::write(&p, bytes)?;
        listed.push(json!({
            "name": name,
            "sha256": sha256_hex(bytes),
            "bytes": bytes.len(),
        }));
        paths.push(p);
    }

    let manifest = json!({
        "engine": { "name": "oscbus", "version": env!("CARGO_PKG_VERSION") },
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "tolerances": {
            "propagation": "Van Loan block exponential, exact per uniform step",
            "degeneracy_grouping": "1e-9 x largest symplectic eigenvalue",
            "resonance_tolerance": cfg.resonance_tolerance,
            "closed_form_cross_check": 1e-9,
            "fidelity_clamp_floor": -1e-12,
        },
        "warnings": result.warnings,
        "reports": result.reports,
        "files": listed,
    });
    let manifest_path = out_dir.join("manifest.json");
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    fs::write(&manifest_path, bytes)?;
    paths.push(manifest_path);
    Ok(paths)
}
