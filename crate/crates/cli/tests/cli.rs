// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use qbb_core::channels::{ChannelSpace, GasModel};
use qbb_core::exec::Execution;
use qbb_core::figures::{run_figure, FigureId};
use qbb_core::io::Table;
use qbb_core::scattering::{total_cross_section, ConstantAmplitudeModel};
use qbb_core::{PhysicalConstants, Vec3};
use tempfile::TempDir;

fn qbb(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qbb"));
    cmd.args(args).env_remove("QBB_OUT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const KICKS: &str = r#"
[channels]
weights = [0.3, 0.7]
gamma = [[0.8, 1.2], [0.5, 0.3]]
mass = 2.0

[[kick]]
i = 0
j = 0
mean = 0.3
sigma = 0.2

[[kick]]
i = 0
j = 1
mean = -0.5
sigma = 0.4

[[kick]]
i = 1
j = 0
mean = 0.8
sigma = 0.1

[[kick]]
i = 1
j = 1
mean = 0.0
sigma = 0.6
"#;

fn mc_config() -> String {
    format!(
        "scenario = \"mc\"\n{KICKS}\n[mc]\ntrajectories = 5000\nt_final = 1.0\nsamples = 4\n\
         histogram_axis = 2\nhistogram_lo = -3.0\nhistogram_hi = 3.0\nhistogram_bins = 12\n"
    )
}

#[test]
fn mc_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "mc.toml", &mc_config());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    for (out, seed) in [(&a, "11"), (&b, "11"), (&c, "12")] {
        let o = qbb(&["run", "--config", s(&cfg), "--seed", seed, "--out", s(out)], &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(read(&dir.path().join("a.hist.csv")), read(&dir.path().join("b.hist.csv")));
    assert_ne!(read(&a), read(&c));
    let text = String::from_utf8(read(&a)).unwrap();
    let first = text.lines().next().unwrap();
    assert!(first.starts_with(&format!("# qbb {} config-hash=", env!("CARGO_PKG_VERSION"))), "{first}");
    assert_eq!(first.len(), "# qbb  config-hash=".len() + env!("CARGO_PKG_VERSION").len() + 64);
    assert!(!text.contains('\r'));
}

#[test]
fn invalid_config_writes_nothing_and_lists_every_problem() {
    let dir = TempDir::new().unwrap();
    let text = mc_config()
        .replace("mass = 2.0", "mass = 0.0")
        .replace("samples = 4", "samples = 4\nsample = 3")
        .replace("sigma = 0.6", "sigma = -0.6");
    let cfg = write_config(&dir, "bad.toml", &text);
    let out = dir.path().join("sub").join("bad.csv");
    let o = qbb(&["run", "--config", s(&cfg), "--out", s(&out)], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for key in ["`channels.mass`", "`mc.sample`", "`kick[3]`"] {
        assert!(err.contains(key), "{key} missing from:\n{err}");
    }
    assert!(!out.exists());
    assert!(!dir.path().join("sub").exists());
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);

    let garbage = write_config(&dir, "garbage.toml", "scenario = [");
    let o = qbb(&["run", "--config", s(&garbage), "--out", s(&out)], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = qbb(&["figure", "2", "--out", s(&out)], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        "scenario = \"semiclassical\"\n{KICKS}\n[semiclassical]\np_min = -1.0\np_max = 1.0\nbins = 16\n\
         max_offset = 8\ndt = 0.05\nsteps = 200\n"
    );
    let cfg = write_config(&dir, "leak.toml", &text);
    let out = dir.path().join("leak.csv");
    let o = qbb(&["run", "--config", s(&cfg), "--out", s(&out)], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn empty_curve_exports_header_only() {
    let dir = TempDir::new().unwrap();
    let text = "scenario = \"visibility\"\n[channels]\nweights = [1.0]\ngamma = [[2.0]]\nmass = 1.0\n\
                [time]\nt_max = 1.0\npoints = 0\n";
    let cfg = write_config(&dir, "empty.toml", text);
    let out = dir.path().join("empty.csv");
    let o = qbb(&["run", "--config", s(&cfg), "--out", s(&out)], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = Table::read(&out).unwrap();
    assert_eq!(table.columns, ["t", "V", "formula", "far_field_margin"]);
    assert!(table.rows.is_empty());
}

#[test]
fn figure_export_round_trips_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let o = qbb(&["figure", "1a"], &[("QBB_OUT_DIR", dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = Table::read(&dir.path().join("figure1a.csv")).unwrap();
    assert_eq!(table.columns, ["t", "V", "env_low", "env_high"]);
    let data = run_figure(FigureId::Fig1a, Execution::Sequential).unwrap();
    let t = table.column("t").unwrap();
    let v = table.column("V").unwrap();
    let low = table.column("env_low").unwrap();
    let high = table.column("env_high").unwrap();
    assert_eq!(t.len(), data.rows.len());
    for (k, row) in data.rows.iter().enumerate() {
        assert_eq!(t[k].to_bits(), row[0].to_bits());
        assert_eq!(v[k].to_bits(), row[1].clamp(0.0, 1.0).to_bits());
        assert_eq!(low[k].to_bits(), row[2].to_bits());
        assert_eq!(high[k].to_bits(), row[3].to_bits());
    }
}

#[test]
fn single_channel_curve_is_log_linear() {
    let dir = TempDir::new().unwrap();
    let text = "scenario = \"visibility\"\n[channels]\nweights = [1.0]\ngamma = [[3.0]]\nmass = 1.0\n\
                [[kick]]\ni = 0\nj = 0\nmean = 0.7\nsigma = 0.4\n[time]\nt_max = 4.0\npoints = 60\n";
    let cfg = write_config(&dir, "one.toml", text);
    let out = dir.path().join("one.csv");
    let o = qbb(&["run", "--config", s(&cfg), "--out", s(&out)], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = Table::read(&out).unwrap();
    let t = table.column("t").unwrap();
    let y: Vec<f64> = table.column("V").unwrap().iter().map(|v| v.ln()).collect();
    let slope = (y[y.len() - 1] - y[0]) / (t[t.len() - 1] - t[0]);
    for (tk, yk) in t.iter().zip(&y) {
        assert!((yk - (y[0] + slope * tk)).abs() < 1e-10);
    }
    assert!(slope < 0.0);
}

fn rate_config(c: (f64, f64)) -> String {
    format!(
        "scenario = \"rates\"\n[gas]\ndensity = 1.0\ngas_mass = 1.0\ntest_mass = 5.0\ntemperature = 1.0\n\
         [model]\nkind = \"constant\"\namplitudes = [[[{}, {}]]]\n\
         [quadrature]\nrel_tol = 1e-10\n\
         [[rate]]\nindices = [0, 0, 0, 0]\np = [0.2, 0.0, 0.1]\nq = [0.0, 0.3, 0.9]\n\
         [[rate]]\nindices = [0, 0, 0, 0]\np = [0.0, 0.0, 0.0]\np_prime = [0.1, 0.0, 0.0]\nq = [1.1, 0.0, 0.4]\n",
        c.0, c.1
    )
}

#[test]
fn constant_amplitude_rates_scale_with_the_cross_section() {
    let dir = TempDir::new().unwrap();
    let amps = [(1.0, 0.0), (1.2, -1.6)];
    let mut values = Vec::new();
    for (k, c) in amps.iter().enumerate() {
        let cfg = write_config(&dir, &format!("r{k}.toml"), &rate_config(*c));
        let out = dir.path().join(format!("r{k}.csv"));
        let o = qbb(&["rates", "--config", s(&cfg), "--out", s(&out)], &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let table = Table::read(&out).unwrap();
        assert_eq!(
            table.columns,
            ["i", "j", "k", "l", "Px", "Py", "Pz", "Px'", "Py'", "Pz'", "Qx", "Qy", "Qz", "ReM", "ImM", "err"]
        );
        values.push(table.column("ReM").unwrap());
    }
    let gas = GasModel::new(1.0, 1.0, 5.0, 1.0, PhysicalConstants::default()).unwrap();
    let space = ChannelSpace::single();
    let sigma: Vec<f64> = amps
        .iter()
        .map(|&(re, im)| {
            let model = ConstantAmplitudeModel::scalar(Complex64::new(re, im));
            total_cross_section(&model, &gas, &space, &Vec3::new(0.3, 0.1, 0.7), 0).unwrap().value
        })
        .collect();
    let expected = sigma[1] / sigma[0];
    assert!((expected - 4.0).abs() < 1e-10);
    for (a, b) in values[0].iter().zip(&values[1]) {
        assert!(*a > 0.0);
        assert!((b / a - expected).abs() < 1e-8 * expected, "{} vs {expected}", b / a);
    }
}

#[test]
fn rates_command_needs_a_rates_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "mc.toml", &mc_config());
    let out = dir.path().join("r.csv");
    let o = qbb(&["rates", "--config", s(&cfg), "--out", s(&out)], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}
