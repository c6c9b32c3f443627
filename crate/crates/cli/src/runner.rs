//! Turns a scenario into protocol runs and executes them.

use rayon::prelude::*;

use ionparity::hilbert::{linspace, position_distribution, C64};
use ionparity::lindblad::{IntegrationDiagnostics, IntegratorConfig, NoiseParams};
use ionparity::measurement::{
    characteristic_function, reconstruct_distribution, spacetime_correlation, KGrid, ShotNoise,
};
use ionparity::oracle::{frame_density, Frame, WavepacketParams};
use ionparity::protocols::{
    build_galilean_boost, build_spatial_parity, build_time_parity, ProtocolKind, ProtocolSpec,
};
use ionparity::simulation::{run_protocol, RunOptions};

use crate::config::ScenarioConfig;
use crate::Error;

#[derive(Debug, Clone)]
pub struct RunPlan {
    pub label: String,
    pub spec: ProtocolSpec,
    pub options: RunOptions,
    pub sample_times: Vec<f64>,
}

/// `c` that gives the studied drive a sideband strength ηΩ̃.
///
/// Parities drive `cσˣ₁p` at ηΩ̃ = c/2Δ; the boost's ancilla term
/// `(c + v/2)σˣ₂p` sets ηΩ̃₁ = c(1 + r/2)/2Δ with r = v/c.
pub fn c_for_coupling(kind: ProtocolKind, eta_omega: f64, v_over_c: f64) -> f64 {
    match kind {
        ProtocolKind::GalileanBoost => 2.0 * eta_omega / (1.0 + v_over_c / 2.0),
        _ => 2.0 * eta_omega,
    }
}

fn build(kind: ProtocolKind, c: f64, cfg: &ScenarioConfig) -> Result<ProtocolSpec, Error> {
    let dev = cfg.device()?;
    let p0 = cfg.init.p0;
    let n = cfg.integrator.fock_cutoff;
    Ok(match kind {
        ProtocolKind::TimeParity => build_time_parity(c, p0, &dev, n)?,
        ProtocolKind::SpatialParity => build_spatial_parity(c, p0, &dev, n)?,
        ProtocolKind::GalileanBoost => {
            build_galilean_boost(c, cfg.evolution.v_over_c * c, p0, &dev, n)?
        }
        ProtocolKind::General => unreachable!("rejected by config validation"),
    })
}

fn format_omega(w: f64) -> String {
    let s = format!("{w}");
    s.replace('.', "p")
}

/// One run per protocol and Ω̃ value, in config order.
pub fn plan_runs(cfg: &ScenarioConfig) -> Result<Vec<RunPlan>, Error> {
    cfg.validate()?;
    let dev = cfg.device()?;
    let mut plans = Vec::new();
    for kind in cfg.protocol_kinds()? {
        let cases: Vec<(Option<f64>, f64)> = match (&cfg.evolution.c, &cfg.evolution.omega_tilde) {
            (Some(c), _) => vec![(None, *c)],
            (None, Some(list)) => list
                .iter()
                .map(|&w| {
                    (
                        Some(w),
                        c_for_coupling(kind, dev.lamb_dicke * w, cfg.evolution.v_over_c),
                    )
                })
                .collect(),
            (None, None) => unreachable!("rejected by config validation"),
        };
        for (omega, c) in cases {
            let spec = build(kind, c, cfg)?;
            let noise = if cfg.flags.noise_off {
                NoiseParams::none()
            } else {
                spec.device.noise()
            };
            let options = RunOptions {
                rwa_only: cfg.flags.rwa_only,
                noise,
                integrator: IntegratorConfig::with_dt(cfg.integrator.dt),
            };
            let t_final = cfg.evolution.ct_final / c;
            let n = cfg.evolution.samples;
            let sample_times = if n == 1 {
                vec![t_final]
            } else {
                linspace(0.0, t_final, n)
            };
            let label = match omega {
                Some(w) => format!("{}_omega{}", kind.name(), format_omega(w)),
                None => kind.name().to_string(),
            };
            plans.push(RunPlan {
                label,
                spec,
                options,
                sample_times,
            });
        }
    }
    Ok(plans)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityRow {
    pub t: f64,
    pub eta_omega_t: f64,
    pub fidelity: f64,
    pub x_mean_a: f64,
    pub x_mean_b: f64,
    pub correlation: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    pub sample: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub p_a: Vec<f64>,
    pub p_b: Vec<f64>,
    pub analytic_a: Vec<f64>,
    pub analytic_b: Vec<f64>,
}

/// Simulated A(k) readout of the final state.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub x: Vec<f64>,
    pub reconstructed: Vec<f64>,
    pub direct: Vec<f64>,
    pub correlation: C64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub plan: RunPlan,
    pub rows: Vec<FidelityRow>,
    pub distributions: Vec<DistributionTable>,
    pub readout: Option<Readout>,
    pub diagnostics: IntegrationDiagnostics,
    pub final_state: ionparity::hilbert::DensityMatrix,
}

impl RunOutput {
    pub fn final_fidelity(&self) -> f64 {
        self.rows.last().map(|r| r.fidelity).unwrap_or(f64::NAN)
    }
}

pub fn execute(plan: &RunPlan, cfg: &ScenarioConfig) -> Result<RunOutput, Error> {
    log::info!("running {} ({} samples)", plan.label, plan.sample_times.len());
    let result = run_protocol(&plan.spec, &plan.options, &plan.sample_times)?;
    let g = plan.spec.coupling_strength();
    let rows = result
        .samples
        .iter()
        .map(|s| FidelityRow {
            t: s.t,
            eta_omega_t: g * s.t,
            fidelity: s.fidelity,
            x_mean_a: s.frames.frame_a.mean_position(),
            x_mean_b: s.frames.frame_b.mean_position(),
            correlation: s.frames.correlation,
        })
        .collect();

    let out = &cfg.output;
    let x = linspace(out.x_min, out.x_max, out.x_points);
    let params = WavepacketParams::from_spec(&plan.spec);
    let mut distributions = Vec::new();
    for i in cfg.distribution_indices() {
        let s = &result.samples[i];
        distributions.push(DistributionTable {
            sample: i,
            t: s.t,
            p_a: s.frames.frame_a.distribution(&x),
            p_b: s.frames.frame_b.distribution(&x),
            analytic_a: frame_density(plan.spec.kind, Frame::A, &x, s.t, &params)?,
            analytic_b: frame_density(plan.spec.kind, Frame::B, &x, s.t, &params)?,
            x: x.clone(),
        });
    }

    let final_state = result
        .samples
        .last()
        .map(|s| s.rho.clone())
        .expect("at least one sample");
    let readout = if cfg.measurement.enabled {
        let m = &cfg.measurement;
        let grid = KGrid::new(m.k_max, m.k_points)?;
        let noise = cfg.flags.shot_noise.then_some(ShotNoise {
            shots: m.shots,
            seed: cfg.flags.seed,
        });
        let chi = characteristic_function(&final_state, &grid, noise)?;
        Some(Readout {
            reconstructed: reconstruct_distribution(&chi, &grid, &x)?,
            direct: position_distribution(&final_state, &x),
            correlation: spacetime_correlation(&final_state, &plan.spec)?,
            x,
        })
    } else {
        None
    };

    Ok(RunOutput {
        plan: plan.clone(),
        rows,
        distributions,
        readout,
        diagnostics: result.diagnostics,
        final_state,
    })
}

/// Executes every planned run in parallel; results keep plan order.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<RunOutput>, Error> {
    let plans = plan_runs(cfg)?;
    plans.par_iter().map(|p| execute(p, cfg)).collect()
}
