//! CSV emission. Files for one scenario go to `<out_dir>/<name>/`.

use std::path::{Path, PathBuf};

use crate::runner::RunOutput;
use crate::Error;

pub const FIDELITY_HEADER: [&str; 7] = [
    "t_over_nu",
    "eta_omega_t",
    "fidelity",
    "x_mean_frame_a",
    "x_mean_frame_b",
    "corr_re",
    "corr_im",
];

pub const DISTRIBUTION_HEADER: [&str; 5] = ["x", "p_frame_a", "p_frame_b", "p_analytic_a", "p_analytic_b"];

pub const READOUT_HEADER: [&str; 3] = ["x", "p_reconstructed", "p_direct"];

pub const SUMMARY_HEADER: [&str; 16] = [
    "label",
    "protocol",
    "device",
    "omega_tilde",
    "lamb_dicke",
    "c",
    "v",
    "fock_cutoff",
    "steps",
    "max_trace_drift",
    "max_hermiticity_drift",
    "min_eigenvalue",
    "final_fidelity",
    "readout_corr_re",
    "readout_corr_im",
    "rwa_only",
];

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn write_table(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every output file and returns their paths in a stable order.
pub fn write_outputs(
    name: &str,
    runs: &[RunOutput],
    fidelity_csv: bool,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, Error> {
    let dir = out_dir.join(name);
    std::fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    for run in runs {
        let label = &run.plan.label;
        if fidelity_csv {
            let path = dir.join(format!("{label}_fidelity.csv"));
            write_table(
                &path,
                &FIDELITY_HEADER,
                run.rows.iter().map(|r| {
                    vec![
                        num(r.t),
                        num(r.eta_omega_t),
                        num(r.fidelity),
                        num(r.x_mean_a),
                        num(r.x_mean_b),
                        num(r.correlation.re),
                        num(r.correlation.im),
                    ]
                }),
            )?;
            written.push(path);
        }
        for d in &run.distributions {
            let path = dir.join(format!("{label}_distribution_{}.csv", d.sample));
            write_table(
                &path,
                &DISTRIBUTION_HEADER,
                (0..d.x.len()).map(|i| {
                    vec![
                        num(d.x[i]),
                        num(d.p_a[i]),
                        num(d.p_b[i]),
                        num(d.analytic_a[i]),
                        num(d.analytic_b[i]),
                    ]
                }),
            )?;
            written.push(path);
        }
        if let Some(r) = &run.readout {
            let path = dir.join(format!("{label}_readout.csv"));
            write_table(
                &path,
                &READOUT_HEADER,
                (0..r.x.len()).map(|i| vec![num(r.x[i]), num(r.reconstructed[i]), num(r.direct[i])]),
            )?;
            written.push(path);
        }
    }
    let path = dir.join("summary.csv");
    write_table(
        &path,
        &SUMMARY_HEADER,
        runs.iter().map(|run| {
            let spec = &run.plan.spec;
            let d = &run.diagnostics;
            let (cr, ci) = run
                .readout
                .as_ref()
                .map(|r| (num(r.correlation.re), num(r.correlation.im)))
                .unwrap_or_default();
            vec![
                run.plan.label.clone(),
                spec.kind.name().to_string(),
                spec.device.label.clone(),
                num(spec.omega_tilde),
                num(spec.device.lamb_dicke),
                num(spec.transform.c),
                num(spec.transform.v),
                spec.space.fock_cutoff().to_string(),
                d.steps.to_string(),
                num(d.max_trace_drift),
                num(d.max_hermiticity_drift),
                num(d.min_eigenvalue),
                num(run.final_fidelity()),
                cr,
                ci,
                run.plan.options.rwa_only.to_string(),
            ]
        }),
    )?;
    written.push(path);
    Ok(written)
}
