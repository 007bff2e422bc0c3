// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a TOML document read into library types.
//!
//! Every key is checked before anything is computed. Problems are collected
//! rather than reported one at a time, and any key the schema does not know
//! is an error.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qbb_core::channels::{ChannelSpace, GasModel};
use qbb_core::dynamics::mc::{HistogramSpec, McOptions};
use qbb_core::dynamics::semiclassical::MomentumGrid;
use qbb_core::dynamics::{DecoherenceChannelSet, GaussianCf, SigmaConvention};
use qbb_core::figures::{FigureId, FigureOverrides};
use qbb_core::quadrature::Tolerance;
use qbb_core::rates::{JumpFunctionParams, RateQuadrature, RateRequest};
use qbb_core::scattering::{ConstantAmplitudeModel, GaussianAmplitudeModel, ScatteringAmplitudeModel};
use qbb_core::visibility::SlitGeometry;
use qbb_core::{PhysicalConstants, Vec3};
use toml::{Table, Value};

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
pub struct SemiclassicalRun {
    pub set: DecoherenceChannelSet,
    pub grid: MomentumGrid,
    pub axis: usize,
    pub max_offset: usize,
    pub dt: f64,
    pub steps: usize,
    /// Steps between output rows.
    pub every: usize,
    pub leak_bound: f64,
    pub p_start: f64,
    /// Initial channel populations.
    pub populations: Vec<f64>,
    pub snapshot: bool,
}

#[derive(Debug, Clone)]
pub enum Scenario {
    Figure {
        id: FigureId,
        overrides: FigureOverrides,
    },
    Visibility {
        set: DecoherenceChannelSet,
        d: Vec3,
        times: Vec<f64>,
        slit: Option<SlitGeometry>,
    },
    Rates {
        params: JumpFunctionParams,
        requests: Vec<RateRequest>,
    },
    Mc {
        set: DecoherenceChannelSet,
        trajectories: usize,
        t_final: f64,
        options: McOptions,
    },
    Semiclassical(Box<SemiclassicalRun>),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Figure { id: FigureId::Fig1a, .. } => "figure1a",
            Scenario::Figure { id: FigureId::Fig1b, .. } => "figure1b",
            Scenario::Figure { id: FigureId::Fig3, .. } => "figure3",
            Scenario::Visibility { .. } => "visibility",
            Scenario::Rates { .. } => "rates",
            Scenario::Mc { .. } => "mc",
            Scenario::Semiclassical(_) => "semiclassical",
        }
    }

    pub fn uses_seed(&self) -> bool {
        matches!(self, Scenario::Mc { .. } | Scenario::Semiclassical(_))
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub seed: Option<u64>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "a string",
        Value::Integer(_) => "an integer",
        Value::Float(_) => "a float",
        Value::Boolean(_) => "a boolean",
        Value::Datetime(_) => "a datetime",
        Value::Array(_) => "an array",
        Value::Table(_) => "a table",
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Integer(i) => Some(*i as f64),
        Value::Float(x) => Some(*x),
        _ => None,
    }
}

/// Typed access that records which keys were read and what went wrong.
#[derive(Default)]
struct Reader {
    used: BTreeSet<String>,
    errors: Vec<String>,
}

impl Reader {
    fn fail(&mut self, path: &str, msg: impl fmt::Display) {
        self.errors.push(format!("`{path}`: {msg}"));
    }

    fn get<'t>(&mut self, t: &'t Table, path: &str, key: &str) -> Option<&'t Value> {
        let v = t.get(key);
        if v.is_some() {
            self.used.insert(join(path, key));
        }
        v
    }

    fn missing<T>(&mut self, path: &str, key: &str) -> Option<T> {
        self.fail(&join(path, key), "missing");
        None
    }

    fn number(&mut self, t: &Table, path: &str, key: &str) -> Option<f64> {
        let v = self.get(t, path, key)?;
        match as_number(v) {
            Some(x) if x.is_finite() => Some(x),
            Some(_) => {
                self.fail(&join(path, key), "must be finite");
                None
            }
            None => {
                self.fail(&join(path, key), format!("expected a number, found {}", type_name(v)));
                None
            }
        }
    }

    fn req_number(&mut self, t: &Table, path: &str, key: &str) -> Option<f64> {
        if t.contains_key(key) {
            self.number(t, path, key)
        } else {
            self.missing(path, key)
        }
    }

    fn positive(&mut self, t: &Table, path: &str, key: &str, default: Option<f64>) -> Option<f64> {
        let x = match default {
            Some(d) if !t.contains_key(key) => return Some(d),
            _ => self.req_number(t, path, key)?,
        };
        if x > 0.0 {
            Some(x)
        } else {
            self.fail(&join(path, key), format!("must be positive, got {x}"));
            None
        }
    }

    fn count(&mut self, t: &Table, path: &str, key: &str, default: Option<usize>) -> Option<usize> {
        let Some(v) = self.get(t, path, key) else {
            return match default {
                Some(d) => Some(d),
                None => self.missing(path, key),
            };
        };
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            Value::Integer(i) => {
                self.fail(&join(path, key), format!("must be nonnegative, got {i}"));
                None
            }
            _ => {
                self.fail(&join(path, key), format!("expected a nonnegative integer, found {}", type_name(v)));
                None
            }
        }
    }

    fn boolean(&mut self, t: &Table, path: &str, key: &str, default: bool) -> Option<bool> {
        match self.get(t, path, key) {
            None => Some(default),
            Some(Value::Boolean(b)) => Some(*b),
            Some(v) => {
                self.fail(&join(path, key), format!("expected a boolean, found {}", type_name(v)));
                None
            }
        }
    }

    fn string<'t>(&mut self, t: &'t Table, path: &str, key: &str) -> Option<&'t str> {
        let v = self.get(t, path, key)?;
        match v {
            Value::String(s) => Some(s),
            _ => {
                self.fail(&join(path, key), format!("expected a string, found {}", type_name(v)));
                None
            }
        }
    }

    fn numbers_of(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let Value::Array(items) = v else {
            self.fail(path, format!("expected an array of numbers, found {}", type_name(v)));
            return None;
        };
        let out: Option<Vec<f64>> = items.iter().map(as_number).collect();
        match out {
            Some(xs) if xs.iter().all(|x| x.is_finite()) => Some(xs),
            _ => {
                self.fail(path, "expected an array of finite numbers");
                None
            }
        }
    }

    fn numbers(&mut self, t: &Table, path: &str, key: &str) -> Option<Vec<f64>> {
        let v = self.get(t, path, key)?;
        self.numbers_of(v, &join(path, key))
    }

    /// A three-vector, or a single number taken as the `z` component.
    fn vec3(&mut self, t: &Table, path: &str, key: &str) -> Option<Vec3> {
        let v = self.get(t, path, key)?;
        let full = join(path, key);
        if let Some(z) = as_number(v) {
            return Some(Vec3::new(0.0, 0.0, z));
        }
        let xs = self.numbers_of(v, &full)?;
        if xs.len() != 3 {
            self.fail(&full, format!("expected 3 components, found {}", xs.len()));
            return None;
        }
        Some(Vec3::new(xs[0], xs[1], xs[2]))
    }

    fn matrix(&mut self, t: &Table, path: &str, key: &str) -> Option<Vec<Vec<f64>>> {
        let v = self.get(t, path, key)?;
        let full = join(path, key);
        let Value::Array(rows) = v else {
            self.fail(&full, "expected an array of rows");
            return None;
        };
        let rows: Option<Vec<Vec<f64>>> = rows.iter().map(|r| self.numbers_of(r, &full)).collect();
        rows
    }

    /// Square matrix of `[re, im]` pairs.
    fn complex_matrix(&mut self, t: &Table, path: &str, key: &str) -> Option<DMatrix<Complex64>> {
        let v = self.get(t, path, key)?;
        let full = join(path, key);
        let bad = |r: &mut Reader| {
            r.fail(&full, "expected a square array of [re, im] pairs");
            None
        };
        let Value::Array(rows) = v else { return bad(self) };
        let n = rows.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            let Value::Array(cells) = row else { return bad(self) };
            if cells.len() != n {
                return bad(self);
            }
            for (j, cell) in cells.iter().enumerate() {
                let Value::Array(pair) = cell else { return bad(self) };
                match (pair.len(), pair.first().and_then(as_number), pair.get(1).and_then(as_number)) {
                    (2, Some(re), Some(im)) => m[(i, j)] = Complex64::new(re, im),
                    _ => return bad(self),
                }
            }
        }
        Some(m)
    }

    fn table<'t>(&mut self, t: &'t Table, path: &str, key: &str) -> Option<&'t Table> {
        let v = self.get(t, path, key)?;
        match v {
            Value::Table(s) => Some(s),
            _ => {
                self.fail(&join(path, key), format!("expected a section, found {}", type_name(v)));
                None
            }
        }
    }

    fn req_table<'t>(&mut self, t: &'t Table, key: &str) -> Option<&'t Table> {
        if t.contains_key(key) {
            self.table(t, "", key)
        } else {
            self.fail(key, "missing section");
            None
        }
    }

    fn tables<'t>(&mut self, t: &'t Table, key: &str) -> Vec<&'t Table> {
        let Some(v) = self.get(t, "", key) else { return vec![] };
        match v {
            Value::Array(items) if items.iter().all(Value::is_table) => {
                items.iter().filter_map(Value::as_table).collect()
            }
            _ => {
                self.fail(key, format!("expected [[{key}]] entries"));
                vec![]
            }
        }
    }

    /// Reports keys nobody read.
    fn unknown(&mut self, t: &Table, path: &str) {
        for (k, v) in t {
            let full = join(path, k);
            if !self.used.contains(&full) {
                self.fail(&full, "unknown key");
                continue;
            }
            match v {
                Value::Table(s) => self.unknown(s, &full),
                Value::Array(items) => {
                    for (i, item) in items.iter().enumerate() {
                        if let Value::Table(s) = item {
                            self.unknown(s, &format!("{full}[{i}]"));
                        }
                    }
                }
                _ => {}
            }
        }
    }

    fn lib<T>(&mut self, path: &str, r: qbb_core::Result<T>) -> Option<T> {
        r.map_err(|e| self.fail(path, e)).ok()
    }
}

/// Marks every key of an array-of-tables entry path so `unknown` descends.
fn entry_path(key: &str, i: usize) -> String {
    format!("{key}[{i}]")
}

fn convention(r: &mut Reader, doc: &Table, default: SigmaConvention) -> Option<SigmaConvention> {
    match r.string(doc, "", "sigma_convention") {
        None if !doc.contains_key("sigma_convention") => Some(default),
        None => None,
        Some("std") => Some(SigmaConvention::StdDev),
        Some("variance") => Some(SigmaConvention::Variance),
        Some(other) => {
            r.fail("sigma_convention", format!("expected \"std\" or \"variance\", got \"{other}\""));
            None
        }
    }
}

fn channel_set(r: &mut Reader, doc: &Table, conv: Option<SigmaConvention>) -> Option<DecoherenceChannelSet> {
    let t = r.req_table(doc, "channels")?;
    let p = "channels";
    let weights = if t.contains_key("weights") { r.numbers(t, p, "weights") } else { r.missing(p, "weights") };
    let gamma = if t.contains_key("gamma") { r.matrix(t, p, "gamma") } else { r.missing(p, "gamma") };
    let mass = r.positive(t, p, "mass", None);
    let hbar = r.positive(t, p, "hbar", Some(1.0));
    let p0 = if t.contains_key("p0") { r.vec3(t, p, "p0") } else { Some(Vec3::zeros()) };
    let mut kicks = Vec::new();
    for (k, e) in r.tables(doc, "kick").into_iter().enumerate() {
        let path = entry_path("kick", k);
        let i = r.count(e, &path, "i", None);
        let j = r.count(e, &path, "j", None);
        let mean = if e.contains_key("mean") { r.vec3(e, &path, "mean") } else { r.missing(&path, "mean") };
        let sigma = if e.contains_key("sigma") { r.vec3(e, &path, "sigma") } else { r.missing(&path, "sigma") };
        if let (Some(i), Some(j), Some(mean), Some(sigma), Some(conv)) = (i, j, mean, sigma, conv) {
            if let Some(cf) = r.lib(&path, GaussianCf::new(mean, sigma, conv)) {
                kicks.push((path, i, j, cf));
            }
        }
    }
    let (weights, gamma, mass, hbar, p0) = (weights?, gamma?, mass?, hbar?, p0?);
    let n = gamma.len();
    if gamma.iter().any(|row| row.len() != n) {
        r.fail("channels.gamma", "must be a square matrix");
        return None;
    }
    let g = DMatrix::from_fn(n, n, |i, j| gamma[i][j]);
    let mut set = r.lib(p, DecoherenceChannelSet::new(weights, g, mass))?;
    set = r.lib("channels.hbar", set.with_hbar(hbar))?.with_p0(p0);
    for (path, i, j, cf) in kicks {
        set = r.lib(&path, set.clone().with_phi(i, j, cf)).unwrap_or(set);
    }
    Some(set)
}

fn time_grid(r: &mut Reader, doc: &Table) -> Option<Vec<f64>> {
    let t = r.req_table(doc, "time")?;
    let t_max = r.positive(t, "time", "t_max", None);
    let points = r.count(t, "time", "points", Some(qbb_core::figures::POINTS));
    Some(qbb_core::figures::time_grid(t_max?, points?))
}

fn slit(r: &mut Reader, doc: &Table, set: Option<&DecoherenceChannelSet>) -> (Vec3, Option<SlitGeometry>) {
    let Some(t) = r.table(doc, "", "slit") else {
        return (Vec3::z(), None);
    };
    let p = "slit";
    let d = if t.contains_key("d") { r.vec3(t, p, "d").unwrap_or(Vec3::z()) } else { Vec3::z() };
    let far = ["sigma_slit", "p0", "t_flight"];
    if !far.iter().any(|k| t.contains_key(*k)) {
        return (d, None);
    }
    let sigma = r.req_number(t, p, "sigma_slit");
    let p0 = if t.contains_key("p0") { r.vec3(t, p, "p0") } else { r.missing(p, "p0") };
    let t_flight = r.positive(t, p, "t_flight", None);
    let geom = match (sigma, p0, t_flight, set) {
        (Some(s), Some(p0), Some(tf), Some(set)) => {
            r.lib(p, SlitGeometry::new(d, s, set.mass(), p0, tf, set.hbar()))
        }
        _ => None,
    };
    (d, geom)
}

fn figure(r: &mut Reader, doc: &Table, id: FigureId) -> Option<Scenario> {
    let mut o = FigureOverrides::default();
    let conv = convention(r, doc, o.convention);
    if let Some(t) = r.table(doc, "", "figure") {
        let p = "figure";
        if id == FigureId::Fig1b {
            o.channels = r.count(t, p, "n", Some(o.channels))?;
        }
        o.points = r.count(t, p, "points", Some(o.points))?;
        if t.contains_key("t_max") {
            o.t_max = Some(r.positive(t, p, "t_max", None)?);
        }
    }
    o.convention = conv?;
    if id == FigureId::Fig1b && o.channels < 2 {
        r.fail("figure.n", "at least two channels");
        return None;
    }
    Some(Scenario::Figure { id, overrides: o })
}

fn amplitude_model(r: &mut Reader, doc: &Table) -> Option<Arc<dyn ScatteringAmplitudeModel>> {
    let t = r.req_table(doc, "model")?;
    let p = "model";
    let kind = match r.string(t, p, "kind") {
        Some(k) => Some(k),
        None if !t.contains_key("kind") => r.missing(p, "kind"),
        None => None,
    };
    let c = if t.contains_key("amplitudes") { r.complex_matrix(t, p, "amplitudes") } else { r.missing(p, "amplitudes") };
    match kind? {
        "constant" => {
            let m = r.lib(p, ConstantAmplitudeModel::new(c?))?;
            Some(Arc::new(m))
        }
        "gaussian" => {
            let kappa = r.positive(t, p, "kappa", None);
            let m = r.lib(p, GaussianAmplitudeModel::new(c?, kappa?))?;
            Some(Arc::new(m))
        }
        other => {
            r.fail("model.kind", format!("expected \"constant\" or \"gaussian\", got \"{other}\""));
            None
        }
    }
}

fn gas(r: &mut Reader, doc: &Table) -> Option<GasModel> {
    let t = r.req_table(doc, "gas")?;
    let p = "gas";
    let density = r.positive(t, p, "density", None);
    let gas_mass = r.positive(t, p, "gas_mass", None);
    let test_mass = r.positive(t, p, "test_mass", None);
    let temperature = r.positive(t, p, "temperature", None);
    let hbar = r.positive(t, p, "hbar", Some(1.0));
    let k_b = r.positive(t, p, "k_b", Some(1.0));
    let constants = r.lib(p, PhysicalConstants::new(hbar?, k_b?))?;
    r.lib(p, GasModel::new(density?, gas_mass?, test_mass?, temperature?, constants))
}

fn rates(r: &mut Reader, doc: &Table) -> Option<Scenario> {
    let gas = gas(r, doc);
    let model = amplitude_model(r, doc);
    let energies = match r.table(doc, "", "levels") {
        Some(t) if t.contains_key("energies") => r.numbers(t, "levels", "energies"),
        Some(_) => r.missing("levels", "energies"),
        None => Some(vec![0.0]),
    };
    let mut quad = RateQuadrature::default();
    if let Some(t) = r.table(doc, "", "quadrature") {
        let p = "quadrature";
        let rel = r.positive(t, p, "rel_tol", Some(quad.tol.rel));
        let initial = r.count(t, p, "initial_order", Some(quad.initial_order));
        let max = r.count(t, p, "max_order", Some(quad.max_order));
        if let (Some(rel), Some(initial), Some(max)) = (rel, initial, max) {
            if initial == 0 || max < initial {
                r.fail(p, "need 0 < initial_order <= max_order");
            }
            quad = RateQuadrature {
                tol: Tolerance::new(rel, quad.tol.abs),
                initial_order: initial,
                max_order: max,
            };
        }
    }
    let n = energies.as_ref().map(Vec::len);
    let mut requests = Vec::new();
    for (k, e) in r.tables(doc, "rate").into_iter().enumerate() {
        let path = entry_path("rate", k);
        let idx = if e.contains_key("indices") { r.numbers(e, &path, "indices") } else { r.missing(&path, "indices") };
        let p = if e.contains_key("p") { r.vec3(e, &path, "p") } else { r.missing(&path, "p") };
        let pp = if e.contains_key("p_prime") { r.vec3(e, &path, "p_prime") } else { p };
        let q = if e.contains_key("q") { r.vec3(e, &path, "q") } else { r.missing(&path, "q") };
        let indices = idx.and_then(|v| {
            let ok = v.len() == 4 && v.iter().all(|x| x.fract() == 0.0 && *x >= 0.0 && n.is_none_or(|n| (*x as usize) < n));
            if !ok {
                r.fail(&join(&path, "indices"), "expected four channel indices in range");
                return None;
            }
            Some([v[0] as usize, v[1] as usize, v[2] as usize, v[3] as usize])
        });
        if let Some(q) = q {
            if q.norm() == 0.0 {
                r.fail(&join(&path, "q"), "momentum transfer must be nonzero");
                continue;
            }
        }
        if let (Some(indices), Some(p), Some(p_prime), Some(q)) = (indices, p, pp, q) {
            requests.push(RateRequest { indices, p, p_prime, q });
        }
    }
    let channels = r.lib("levels.energies", ChannelSpace::new(energies?))?;
    let params = r.lib("model", JumpFunctionParams::new(gas?, model?, channels))?;
    Some(Scenario::Rates {
        params: params.with_quadrature(quad),
        requests,
    })
}

fn mc(r: &mut Reader, doc: &Table, set: Option<DecoherenceChannelSet>) -> Option<Scenario> {
    let t = r.req_table(doc, "mc")?;
    let p = "mc";
    let trajectories = r.count(t, p, "trajectories", None);
    let t_final = r.positive(t, p, "t_final", None);
    let samples = r.count(t, p, "samples", Some(10));
    let hist_keys = ["histogram_axis", "histogram_lo", "histogram_hi", "histogram_bins"];
    let histogram = if hist_keys.iter().any(|k| t.contains_key(*k)) {
        let axis = r.count(t, p, "histogram_axis", None);
        let lo = r.req_number(t, p, "histogram_lo");
        let hi = r.req_number(t, p, "histogram_hi");
        let bins = r.count(t, p, "histogram_bins", None);
        match (axis, lo, hi, bins) {
            (Some(axis), Some(lo), Some(hi), Some(bins)) if axis < 3 && hi > lo && bins > 0 => {
                Some(Some(HistogramSpec { axis, lo, hi, bins }))
            }
            (Some(_), Some(_), Some(_), Some(_)) => {
                r.fail(p, "histogram needs axis in 0..3, histogram_lo < histogram_hi and histogram_bins > 0");
                None
            }
            _ => None,
        }
    } else {
        Some(None)
    };
    let (trajectories, samples) = (trajectories?, samples?);
    if trajectories == 0 || samples == 0 {
        r.fail(p, "trajectories and samples must be positive");
        return None;
    }
    Some(Scenario::Mc {
        set: set?,
        trajectories,
        t_final: t_final?,
        options: McOptions {
            n_samples: samples,
            histogram: histogram?,
            ..McOptions::default()
        },
    })
}

fn semiclassical(r: &mut Reader, doc: &Table, set: Option<DecoherenceChannelSet>) -> Option<Scenario> {
    let t = r.req_table(doc, "semiclassical")?;
    let p = "semiclassical";
    let p_min = r.req_number(t, p, "p_min");
    let p_max = r.req_number(t, p, "p_max");
    let bins = r.count(t, p, "bins", None);
    let axis = r.count(t, p, "axis", Some(2));
    let max_offset = r.count(t, p, "max_offset", None);
    let dt = r.positive(t, p, "dt", None);
    let steps = r.count(t, p, "steps", None);
    let every = r.count(t, p, "every", Some(1));
    let leak_bound = r.positive(t, p, "leak_bound", Some(1e-6));
    let p_start = r.number(t, p, "p_start");
    let populations = r.numbers(t, p, "populations");
    let snapshot = r.boolean(t, p, "snapshot", false);
    let grid = match (p_min, p_max, bins) {
        (Some(lo), Some(hi), Some(b)) => r.lib(p, MomentumGrid::new(lo, hi, b)),
        _ => None,
    };
    if axis.is_some_and(|a| a > 2) {
        r.fail("semiclassical.axis", "must be 0, 1 or 2");
    }
    if every == Some(0) {
        r.fail("semiclassical.every", "must be positive");
    }
    let set = set?;
    let axis = axis.filter(|&a| a <= 2)?;
    let p_start = p_start.unwrap_or(set.p0()[axis]);
    let populations = populations.unwrap_or_else(|| set.weights().to_vec());
    if populations.len() != set.len() || populations.iter().any(|x| *x < 0.0) || (populations.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        r.fail("semiclassical.populations", "need one nonnegative entry per channel, summing to 1");
        return None;
    }
    let grid = grid?;
    if grid.bin_of(p_start).is_none() {
        r.fail("semiclassical.p_start", "initial momentum is off the grid");
        return None;
    }
    Some(Scenario::Semiclassical(Box::new(SemiclassicalRun {
        set,
        grid,
        axis,
        max_offset: max_offset?,
        dt: dt?,
        steps: steps?,
        every: every.filter(|&e| e > 0)?,
        leak_bound: leak_bound?,
        p_start,
        populations,
        snapshot: snapshot?,
    })))
}

/// Parses and validates a configuration document.
pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| ConfigError(vec![e.to_string()]))?;
    let mut r = Reader::default();
    let seed = match r.get(&doc, "", "seed") {
        None => None,
        Some(Value::Integer(s)) if *s >= 0 => Some(*s as u64),
        Some(Value::Integer(s)) => {
            let msg = format!("must be nonnegative, got {s}");
            r.fail("seed", msg);
            None
        }
        Some(v) => {
            let msg = format!("expected a nonnegative integer, found {}", type_name(v));
            r.fail("seed", msg);
            None
        }
    };
    let kind = match r.string(&doc, "", "scenario") {
        Some(k) => Some(k.to_string()),
        None if !doc.contains_key("scenario") => r.missing("", "scenario"),
        None => None,
    };
    let scenario = match kind.as_deref() {
        Some("figure1a") => figure(&mut r, &doc, FigureId::Fig1a),
        Some("figure1b") => figure(&mut r, &doc, FigureId::Fig1b),
        Some("figure3") => figure(&mut r, &doc, FigureId::Fig3),
        Some("visibility") => {
            let conv = convention(&mut r, &doc, SigmaConvention::StdDev);
            let set = channel_set(&mut r, &doc, conv);
            let times = time_grid(&mut r, &doc);
            let (d, geom) = slit(&mut r, &doc, set.as_ref());
            match (set, times) {
                (Some(set), Some(times)) => Some(Scenario::Visibility { set, d, times, slit: geom }),
                _ => None,
            }
        }
        Some("rates") => rates(&mut r, &doc),
        Some("mc") => {
            let conv = convention(&mut r, &doc, SigmaConvention::StdDev);
            let set = channel_set(&mut r, &doc, conv);
            mc(&mut r, &doc, set)
        }
        Some("semiclassical") => {
            let conv = convention(&mut r, &doc, SigmaConvention::StdDev);
            let set = channel_set(&mut r, &doc, conv);
            semiclassical(&mut r, &doc, set)
        }
        Some(other) => {
            r.fail(
                "scenario",
                format!("unknown scenario \"{other}\"; expected figure1a, figure1b, figure3, visibility, rates, mc or semiclassical"),
            );
            None
        }
        None => None,
    };
    r.unknown(&doc, "");
    match scenario {
        Some(scenario) if r.errors.is_empty() => Ok(RunConfig { scenario, seed }),
        _ => {
            if r.errors.is_empty() {
                r.errors.push("invalid configuration".into());
            }
            Err(ConfigError(r.errors))
        }
    }
}
