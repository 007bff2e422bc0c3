// SPDX-License-Identifier: Apache-2.0

//! Scenario execution. Everything is computed before the first byte is
//! written.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use qbb_core::dynamics::mc::classical_mc_simulate;
use qbb_core::dynamics::semiclassical::{semiclassical_step, SemiclassicalKernels, SemiclassicalState};
use qbb_core::exec::Execution;
use qbb_core::figures::{run_figure_with, FigureData, FigureId, FigureOverrides};
use qbb_core::io::{curve_table, format_float, write_snapshot, Table};
use qbb_core::rates::rate_table;
use qbb_core::visibility::{elastic_curve, inelastic_curve, InelasticTwoLevel};
use qbb_core::Error;
use sha2::{Digest, Sha256};

use crate::config::{Scenario, SemiclassicalRun};

/// A file to be written.
pub enum Artifact {
    Csv(PathBuf, Table),
    Snapshot(PathBuf, Box<SemiclassicalState>),
}

impl Artifact {
    pub fn path(&self) -> &Path {
        match self {
            Artifact::Csv(p, _) | Artifact::Snapshot(p, _) => p,
        }
    }
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// One line for the terminal.
    pub summary: String,
}

pub fn config_hash(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn header(hash: &str) -> String {
    format!("qbb {} config-hash={hash}", env!("CARGO_PKG_VERSION"))
}

/// `dir/stem.ext` next to `path`, used for companion files.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn figure_table(data: &FigureData) -> Table {
    let mut t = Table::new(data.columns.iter().copied());
    for row in &data.rows {
        let mut row = row.clone();
        row[1] = row[1].clamp(0.0, 1.0);
        t.push_floats(&row);
    }
    t
}

fn summarize_curve(name: &str, v: &[f64]) -> String {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!("{name}: {} points, V in [{lo:.6}, {hi:.6}]", v.len())
}

fn figure(id: FigureId, overrides: &FigureOverrides, out: &Path) -> Result<Outcome, Error> {
    let data = run_figure_with(id, overrides, Execution::Parallel)?;
    let mut table = figure_table(&data);
    table.comments.extend(data.curve.parameters.iter().map(|(k, v)| format!("{k}={v}")));
    Ok(Outcome {
        summary: summarize_curve(&format!("figure {id}"), &data.curve.v),
        artifacts: vec![Artifact::Csv(out.to_path_buf(), table)],
    })
}

fn semiclassical(run: &SemiclassicalRun, out: &Path) -> Result<Outcome, Error> {
    let mut kernels = SemiclassicalKernels::classical(&run.set, run.grid, run.axis, run.max_offset)?.with_hbar(run.set.hbar())?;
    kernels.leak_bound = run.leak_bound;
    let n = run.set.len();
    let internal = DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(run.populations[i], 0.0) } else { Complex64::new(0.0, 0.0) });
    let mut state = SemiclassicalState::localized(run.grid, run.p_start, internal)?;
    let mut columns = vec!["t".to_string(), "trace".into(), "leaked".into(), "mean_p".into()];
    for i in 0..n {
        for j in i..n {
            columns.push(format!("rho{i}{j}_re"));
            columns.push(format!("rho{i}{j}_im"));
        }
    }
    let mut table = Table::new(columns);
    let record = |s: &SemiclassicalState, table: &mut Table| {
        let g = s.grid;
        let mean_p: f64 = s.rho.iter().enumerate().map(|(b, r)| g.center(b) * r.trace().re * g.dp).sum();
        let rho = s.internal();
        let mut row = vec![s.t, s.trace(), s.leaked, mean_p];
        for i in 0..n {
            for j in i..n {
                row.push(rho[(i, j)].re);
                row.push(rho[(i, j)].im);
            }
        }
        table.push_floats(&row);
    };
    record(&state, &mut table);
    for step in 1..=run.steps {
        state = semiclassical_step(&state, &kernels, run.dt)?;
        if step % run.every == 0 || step == run.steps {
            record(&state, &mut table);
        }
    }
    let summary = format!("semiclassical: {} steps to t = {}, trace {:.12}", run.steps, state.t, state.trace());
    let mut artifacts = vec![Artifact::Csv(out.to_path_buf(), table)];
    if run.snapshot {
        artifacts.push(Artifact::Snapshot(sibling(out, ".snapshot"), Box::new(state)));
    }
    Ok(Outcome { artifacts, summary })
}

/// Computes every artifact of `scenario`.
pub fn execute(scenario: &Scenario, seed: u64, out: &Path) -> Result<Outcome, Error> {
    match scenario {
        Scenario::Figure { id, overrides } => figure(*id, overrides, out),
        Scenario::Visibility { set, d, times, slit } => {
            let curve = if set.is_elastic() {
                elastic_curve(set, d, times, Execution::Parallel)?
            } else {
                inelastic_curve(&InelasticTwoLevel::from_set(set)?, d, times, Execution::Parallel)?
            };
            let curve = match slit {
                Some(g) => curve.with_far_field(g),
                None => curve,
            };
            let mut table = curve_table(&curve);
            table.comments.extend(curve.parameters.iter().map(|(k, v)| format!("{k}={v}")));
            Ok(Outcome {
                summary: summarize_curve(&format!("visibility ({})", curve.formula.as_str()), &curve.v),
                artifacts: vec![Artifact::Csv(out.to_path_buf(), table)],
            })
        }
        Scenario::Rates { params, requests } => {
            let results = rate_table(params, requests, Execution::Parallel);
            let mut table = Table::new([
                "i", "j", "k", "l", "Px", "Py", "Pz", "Px'", "Py'", "Pz'", "Qx", "Qy", "Qz", "ReM", "ImM", "err",
            ]);
            for r in results {
                let r = r?;
                let mut row: Vec<String> = r.indices.iter().map(|i| i.to_string()).collect();
                for v in [r.p, r.p_prime, r.q] {
                    row.extend(v.iter().map(|&x| format_float(x)));
                }
                row.extend([r.value.re, r.value.im, r.error].map(format_float));
                table.push_row(row);
            }
            Ok(Outcome {
                summary: format!("rates: {} entries", table.rows.len()),
                artifacts: vec![Artifact::Csv(out.to_path_buf(), table)],
            })
        }
        Scenario::Mc { set, trajectories, t_final, options } => {
            let stats = classical_mc_simulate(set, *trajectories, *t_final, seed, options)?;
            let n = set.len();
            let mut columns = vec!["t".to_string()];
            for i in 0..n {
                columns.push(format!("pop{i}"));
                columns.push(format!("pop{i}_err"));
            }
            for prefix in ["mean_dp", "mean_dp_err", "var_dp"] {
                columns.extend(["x", "y", "z"].map(|a| format!("{prefix}_{a}")));
            }
            let mut table = Table::new(columns);
            for (k, &t) in stats.times.iter().enumerate() {
                let mut row = vec![t];
                for i in 0..n {
                    row.push(stats.populations[k][i]);
                    row.push(stats.population_stderr[k][i]);
                }
                row.extend(stats.mean_dp[k].iter());
                row.extend(stats.mean_stderr(k).iter());
                row.extend(stats.var_dp[k].iter());
                table.push_floats(&row);
            }
            let mut artifacts = vec![Artifact::Csv(out.to_path_buf(), table)];
            if let Some(h) = &stats.histogram {
                let mut columns = vec!["p".to_string()];
                columns.extend((0..n).map(|i| format!("count{i}")));
                let mut ht = Table::new(columns);
                ht.comments.push(format!("out_of_range={}", h.out_of_range));
                for b in 0..h.spec.bins {
                    let mut row = vec![format_float(h.spec.lo + (b as f64 + 0.5) * h.spec.width())];
                    row.extend(h.counts.iter().map(|c| c[b].to_string()));
                    ht.push_row(row);
                }
                artifacts.push(Artifact::Csv(sibling(out, ".hist.csv"), ht));
            }
            Ok(Outcome {
                summary: format!("mc: {trajectories} trajectories to t = {t_final}, seed {seed}"),
                artifacts,
            })
        }
        Scenario::Semiclassical(run) => semiclassical(run, out),
    }
}

/// Writes every artifact with the provenance header prepended.
pub fn write(outcome: &mut Outcome, header_lines: &[String], seed: u64) -> Result<(), Error> {
    for a in &mut outcome.artifacts {
        match a {
            Artifact::Csv(path, table) => {
                let mut comments = header_lines.to_vec();
                comments.append(&mut table.comments);
                table.comments = comments;
                table.write(path)?;
            }
            Artifact::Snapshot(path, state) => write_snapshot(path, state, seed)?,
        }
    }
    Ok(())
}

/// Creates the parent directory of `path` if needed and checks that it
/// takes new files, without leaving anything behind.
pub fn prepare(path: &Path) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    tempfile::NamedTempFile::new_in(dir)?;
    Ok(())
}
