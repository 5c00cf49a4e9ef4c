//! Design-of-experiments campaigns: sample the parameter box, deform the
//! base mesh, evaluate the objective (optionally through a time-resolved
//! transient truncated by DMD), persist one record per sample and analyze
//! the outputs with active subspaces.
//!
//! Run directory layout:
//!
//! ```text
//! manifest.json
//! samples/NNN/{mu.csv, mesh.obj, series.csv, record.json}
//! analysis/{eigenvalues.csv, bootstrap.csv, summary_1d.csv, summary_2d.csv,
//!           surface.json, report.json}
//! ```
//!
//! Nothing written depends on wall-clock time, absolute paths or completion
//! order, so reruns with the same configuration are byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activesubspace::{
    analyze, AnalysisReport, AnalysisSettings, AsAnalysis, PlotData, SampleTable, SurfaceDocument,
};
use crate::dmd::{fit, DmdModel, DmdOptions, RankRule, SnapshotSet};
use crate::error::{Error, Result};
use crate::ffd::{load_lattice, sample_parameters, FfdLattice, ParameterBinding, SamplingScheme};
use crate::geometry::{load_mesh, mesh_to_string, MeshFormat, TriMesh};
use crate::surrogate::{generate_timeseries, trim_proxy, EvalContext, ModeSpec, ObjectiveSpec, TimeSeriesSpec};

pub const RESISTANCE: &str = "resistance";
pub const TRIM: &str = "trim";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// Lattice + binding document; relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_mesh: Option<PathBuf>,
    /// Parameter box when no lattice binding is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    pub samples: SampleSettings,
    pub objective: ObjectiveSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmd: Option<DmdSettings>,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    /// Run directory; relative to the config file.
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSettings {
    pub count: usize,
    #[serde(default = "default_scheme")]
    pub scheme: SamplingScheme,
    #[serde(default)]
    pub seed: u64,
}

fn default_scheme() -> SamplingScheme {
    SamplingScheme::LatinHypercube
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmdSettings {
    pub window_start: f64,
    pub window_end: f64,
    pub dt: f64,
    pub rank: RankRule,
    pub horizon: f64,
    pub steady_window: f64,
    /// Synthetic transient for analytic objectives; `None` gives a constant series.
    pub transient: Option<TransientSettings>,
}

impl Default for DmdSettings {
    fn default() -> Self {
        Self {
            window_start: 7.0,
            window_end: 15.0,
            dt: 0.1,
            rank: RankRule::default(),
            horizon: 30.0,
            steady_window: 5.0,
            transient: Some(TransientSettings::default()),
        }
    }
}

/// Each tracked output `y_j` is observed as `y_j (1 + u_j(t))`, where `u` is a
/// sum of damped oscillations whose size at the window start is
/// `relative_amplitude * amplitude`. Auxiliary channels carry `1 + u_j(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransientSettings {
    pub relative_amplitude: f64,
    pub modes: Vec<ModeSpec>,
    pub aux_channels: usize,
}

impl Default for TransientSettings {
    fn default() -> Self {
        Self {
            relative_amplitude: 0.2,
            modes: vec![
                ModeSpec {
                    growth: -0.6,
                    frequency: 2.0,
                    amplitude: 1.0,
                    seed: 1,
                },
                ModeSpec {
                    growth: -0.45,
                    frequency: 5.0,
                    amplitude: 0.5,
                    seed: 2,
                },
            ],
            aux_channels: 6,
        }
    }
}

impl CampaignConfig {
    /// Reads a config; relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: Self = serde_json::from_str(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config, base))
    }

    fn resolve(base: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum SampleStatus {
    Ok,
    Failed { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmdSummary {
    pub rank: usize,
    pub eigenvalues: Vec<[f64; 2]>,
    pub training_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub mu: Vec<f64>,
    /// Relative to the run directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    /// Instantaneous objective values.
    #[serde(default)]
    pub raw: BTreeMap<String, f64>,
    /// Steady-state values (equal to `raw` without DMD).
    #[serde(default)]
    pub outputs: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmd: Option<DmdSummary>,
    pub status: SampleStatus,
}

impl SampleRecord {
    pub fn is_ok(&self) -> bool {
        self.status == SampleStatus::Ok
    }
}

/// All records of a campaign, ordered by index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub bounds: Vec<[f64; 2]>,
    pub output_names: Vec<String>,
    pub records: Vec<SampleRecord>,
}

impl ResultsTable {
    pub fn ok_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_ok()).count()
    }

    /// Sample table of one named output over the ok records.
    pub fn sample_table(&self, output: &str) -> Result<SampleTable<f64>> {
        let rows: Vec<&SampleRecord> = self
            .records
            .iter()
            .filter(|r| r.is_ok() && r.outputs.contains_key(output))
            .collect();
        let m = self.bounds.len();
        if rows.is_empty() {
            return Err(Error::InsufficientData(format!("no ok records carry `{output}`")));
        }
        let x = DMatrix::from_fn(rows.len(), m, |i, j| rows[i].mu[j]);
        let f = DVector::from_fn(rows.len(), |i, _| rows[i].outputs[output]);
        SampleTable::new(x, f, self.bounds.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub dir: String,
    pub status: SampleStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: CampaignConfig,
    pub parameter_dim: usize,
    pub bounds: Vec<[f64; 2]>,
    pub output_names: Vec<String>,
    pub samples: Vec<ManifestEntry>,
    pub ok: usize,
    pub failed: usize,
    pub complete: bool,
}

/// Writes through a sibling temporary file and a rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn sample_dir_name(index: usize) -> String {
    format!("samples/{index:03}")
}

/// Mean of the forecast over `[horizon - window, horizon]` on the model's
/// time grid, per state component.
pub fn extract_steady_state(model: &DmdModel<f64>, horizon: f64, window: f64) -> Result<DVector<f64>> {
    let (t0, dt) = (model.t0(), model.dt());
    if !(window >= 0.0) || horizon < t0 {
        return Err(Error::Domain(format!(
            "steady window [{}, {horizon}] is empty or precedes the data",
            horizon - window
        )));
    }
    let k_end = ((horizon - t0) / dt + 1e-9).floor() as usize;
    let start = ((horizon - window - t0).max(0.0) / dt - 1e-9).ceil().max(0.0) as usize;
    if start > k_end {
        return Err(Error::Domain("steady window holds no sample".into()));
    }
    let mut acc = DVector::zeros(model.state_dim());
    for k in start..=k_end {
        acc += model.reconstruct(k);
    }
    Ok(acc / (k_end - start + 1) as f64)
}

/// Everything needed to evaluate one parameter vector.
pub struct Campaign {
    pub config: CampaignConfig,
    pub run_dir: PathBuf,
    lattice: Option<(FfdLattice<f64>, ParameterBinding<f64>)>,
    mesh: Option<TriMesh<f64>>,
    bounds: Vec<[f64; 2]>,
    output_names: Vec<String>,
}

impl Campaign {
    /// Validates the configuration and loads its inputs; nothing is evaluated.
    pub fn prepare(config: CampaignConfig, base_dir: &Path) -> Result<Self> {
        let lattice = match &config.lattice {
            Some(p) => {
                let path = CampaignConfig::resolve(base_dir, p);
                let (lat, binding) = load_lattice::<f64>(&path)?;
                let binding = binding.ok_or_else(|| {
                    Error::Config(format!("lattice {} has no parameter binding", p.display()))
                })?;
                Some((lat, binding))
            }
            None => None,
        };
        let bounds: Vec<[f64; 2]> = match (&lattice, &config.bounds) {
            (Some((_, b)), None) => b.bounds().iter().map(|&(lo, hi)| [lo, hi]).collect(),
            (Some((_, b)), Some(given)) => {
                if given.len() != b.dimension() {
                    return Err(Error::Config("`bounds` disagrees with the lattice binding".into()));
                }
                given.clone()
            }
            (None, Some(given)) => given.clone(),
            (None, None) => return Err(Error::Config("either `lattice` or `bounds` is required".into())),
        };
        if bounds.is_empty() || bounds.iter().any(|&[lo, hi]| !(lo <= hi)) {
            return Err(Error::Config("parameter bounds must be non-empty with lo <= hi".into()));
        }
        let mesh = match &config.base_mesh {
            Some(p) => {
                if lattice.is_none() {
                    return Err(Error::Config("`base_mesh` needs a `lattice` to deform it".into()));
                }
                let path = CampaignConfig::resolve(base_dir, p);
                let format = MeshFormat::from_path(&path).unwrap_or(MeshFormat::Obj);
                Some(load_mesh::<f64>(&path, format, true)?)
            }
            None => None,
        };
        config.objective.validate(bounds.len())?;
        if (config.objective.needs_mesh() || config.objective.is_external()) && mesh.is_none() {
            return Err(Error::Config("this objective needs `base_mesh` and `lattice`".into()));
        }
        if config.samples.count == 0 {
            return Err(Error::Config("sample count must be positive".into()));
        }
        let a = &config.analysis;
        if !(a.split > 0.0 && a.split < 1.0) {
            return Err(Error::Config(format!("split fraction {} outside (0, 1)", a.split)));
        }
        if !(1..=6).contains(&a.degree) {
            return Err(Error::Config(format!("surface degree {} outside 1..=6", a.degree)));
        }
        if let Some(d) = &config.dmd {
            if !(d.dt > 0.0) || !(d.window_end > d.window_start) {
                return Err(Error::Config("DMD window needs dt > 0 and end > start".into()));
            }
            if d.horizon < d.window_end {
                return Err(Error::Config("forecast horizon precedes the window end".into()));
            }
            if !(d.steady_window >= 0.0) {
                return Err(Error::Config("steady window must be >= 0".into()));
            }
        }
        let mut output_names = vec![RESISTANCE.to_string()];
        if mesh.is_some() {
            output_names.push(TRIM.to_string());
        }
        let run_dir = CampaignConfig::resolve(base_dir, &config.output_dir);
        Ok(Self {
            config,
            run_dir,
            lattice,
            mesh,
            bounds,
            output_names,
        })
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    /// The `N` parameter vectors of this campaign.
    pub fn parameters(&self) -> Vec<Vec<f64>> {
        let s = &self.config.samples;
        match &self.lattice {
            Some((_, binding)) => sample_parameters(binding, s.count, s.scheme, s.seed),
            None => {
                let bounds = self.bounds.iter().map(|&[lo, hi]| (lo, hi)).collect();
                let binding = ParameterBinding::new(Vec::new(), bounds).expect("validated bounds");
                sample_parameters(&binding, s.count, s.scheme, s.seed)
            }
        }
    }

    fn deformed_mesh(&self, mu: &[f64]) -> Result<Option<TriMesh<f64>>> {
        match (&self.lattice, &self.mesh) {
            (Some((lat, binding)), Some(mesh)) => {
                let moved = lat.apply_parameters(binding, mu)?.deform_mesh(mesh);
                moved.validate()?;
                Ok(Some(moved))
            }
            _ => Ok(None),
        }
    }

    /// Instantaneous outputs at `mu` without writing anything. External
    /// objectives are not supported here.
    pub fn instant_outputs(&self, mu: &[f64]) -> Result<BTreeMap<String, f64>> {
        if self.config.objective.is_external() {
            return Err(Error::Config("external objectives need a run directory".into()));
        }
        let mesh = self.deformed_mesh(mu)?;
        let ctx = EvalContext {
            mesh: mesh.as_ref(),
            ..Default::default()
        };
        let mut out = BTreeMap::new();
        out.insert(RESISTANCE.to_string(), self.config.objective.evaluate(mu, &ctx)?.value);
        if let Some(m) = &mesh {
            out.insert(TRIM.to_string(), trim_proxy(m)?);
        }
        Ok(out)
    }

    fn evaluate_sample(&self, index: usize, mu: &[f64]) -> SampleRecord {
        let dir = sample_dir_name(index);
        let mut record = SampleRecord {
            index,
            mu: mu.to_vec(),
            mesh: None,
            series: None,
            raw: BTreeMap::new(),
            outputs: BTreeMap::new(),
            dmd: None,
            status: SampleStatus::Ok,
        };
        if let Err(e) = self.fill_record(&dir, mu, &mut record) {
            warn!("sample {index} failed: {e}");
            record.outputs.clear();
            record.status = SampleStatus::Failed { reason: format!("{}: {e}", e.code()) };
        }
        record
    }

    fn fill_record(&self, dir: &str, mu: &[f64], record: &mut SampleRecord) -> Result<()> {
        let abs_dir = self.run_dir.join(dir);
        let mu_path = abs_dir.join("mu.csv");
        let header: Vec<String> = (1..=mu.len()).map(|j| format!("mu_{j}")).collect();
        let values: Vec<String> = mu.iter().map(|x| x.to_string()).collect();
        atomic_write(&mu_path, format!("{}\n{}\n", header.join(","), values.join(",")).as_bytes())?;

        let mesh = self.deformed_mesh(mu)?;
        let mesh_path = abs_dir.join("mesh.obj");
        if let Some(m) = &mesh {
            atomic_write(&mesh_path, mesh_to_string(m, MeshFormat::Obj)?.as_bytes())?;
            record.mesh = Some(format!("{dir}/mesh.obj"));
        }
        let ctx = EvalContext {
            mesh: mesh.as_ref(),
            mu_path: Some(&mu_path),
            mesh_path: mesh.as_ref().map(|_| mesh_path.as_path()),
        };
        let eval = self.config.objective.evaluate(mu, &ctx)?;
        record.raw.insert(RESISTANCE.to_string(), eval.value);
        if let Some(m) = &mesh {
            record.raw.insert(TRIM.to_string(), trim_proxy(m)?);
        }

        let Some(settings) = &self.config.dmd else {
            record.outputs = record.raw.clone();
            return Ok(());
        };
        let names = &self.output_names;
        let series = match &eval.series {
            Some(path) => SnapshotSet::load_csv(path)?,
            None => {
                let y: Vec<f64> = names.iter().map(|n| record.raw[n]).collect();
                synthetic_transient(settings, &y)?
            }
        };
        let series_path = abs_dir.join("series.csv");
        atomic_write(&series_path, series.to_csv().as_bytes())?;
        record.series = Some(format!("{dir}/series.csv"));

        let model = fit(&series, DmdOptions::with_rank(settings.rank))?;
        let steady = extract_steady_state(&model, settings.horizon, settings.steady_window)?;
        record.dmd = Some(DmdSummary {
            rank: model.rank(),
            eigenvalues: model.eigenvalues().iter().map(|z| [z.re, z.im]).collect(),
            training_error: crate::dmd::training_error(&model, &series)?,
        });
        record.outputs = record.raw.clone();
        if eval.series.is_some() {
            // external series: first row is the resistance history
            record.outputs.insert(RESISTANCE.to_string(), steady[0]);
        } else {
            for (j, n) in names.iter().enumerate() {
                record.outputs.insert(n.clone(), steady[j]);
            }
        }
        if record.outputs.values().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("steady-state output".into()));
        }
        Ok(())
    }

    fn manifest(&self, records: &[SampleRecord], complete: bool) -> Manifest {
        let ok = records.iter().filter(|r| r.is_ok()).count();
        Manifest {
            config: self.config.clone(),
            parameter_dim: self.bounds.len(),
            bounds: self.bounds.clone(),
            output_names: self.output_names.clone(),
            samples: records
                .iter()
                .map(|r| ManifestEntry {
                    index: r.index,
                    dir: sample_dir_name(r.index),
                    status: r.status.clone(),
                })
                .collect(),
            ok,
            failed: records.len() - ok,
            complete,
        }
    }

    /// Evaluates every sample not already recorded as ok in the run
    /// directory. Per-sample failures are recorded, never propagated.
    pub fn run(&self) -> Result<ResultsTable> {
        fs::create_dir_all(&self.run_dir).map_err(|e| Error::io(&self.run_dir, e))?;
        let params = self.parameters();
        let existing: Vec<Option<SampleRecord>> = (0..params.len())
            .map(|i| {
                let p = self.run_dir.join(sample_dir_name(i)).join("record.json");
                fs::read_to_string(p)
                    .ok()
                    .and_then(|t| serde_json::from_str::<SampleRecord>(&t).ok())
                    .filter(|r| r.is_ok() && r.mu == params[i])
            })
            .collect();
        let pending: Vec<usize> = (0..params.len()).filter(|&i| existing[i].is_none()).collect();
        let skipped = params.len() - pending.len();
        if skipped > 0 {
            info!("resuming: {skipped} completed sample(s) skipped");
        }
        write_json(&self.run_dir.join("manifest.json"), &self.manifest(&[], false))?;

        let work = || -> Result<Vec<SampleRecord>> {
            pending
                .par_iter()
                .map(|&i| {
                    let record = self.evaluate_sample(i, &params[i]);
                    let path = self.run_dir.join(sample_dir_name(i)).join("record.json");
                    write_json(&path, &record)?;
                    Ok(record)
                })
                .collect()
        };
        let fresh = match self.config.workers {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?
                .install(work)?,
            None => work()?,
        };
        let mut records: Vec<SampleRecord> = existing.into_iter().flatten().chain(fresh).collect();
        records.sort_by_key(|r| r.index);
        write_json(&self.run_dir.join("manifest.json"), &self.manifest(&records, true))?;
        Ok(ResultsTable {
            bounds: self.bounds.clone(),
            output_names: self.output_names.clone(),
            records,
        })
    }
}

/// Snapshots `[y_1 (1 + u_1), ..., aux...]` over the configured window.
pub fn synthetic_transient(settings: &DmdSettings, outputs: &[f64]) -> Result<SnapshotSet<f64>> {
    let l = ((settings.window_end - settings.window_start) / settings.dt).round() as usize + 1;
    let (modes, aux, rel) = match &settings.transient {
        Some(t) => (t.modes.clone(), t.aux_channels, t.relative_amplitude),
        None => (Vec::new(), 1, 0.0),
    };
    let n = outputs.len() + aux;
    let scaled: Vec<ModeSpec> = modes
        .into_iter()
        .map(|m| ModeSpec {
            amplitude: rel * m.amplitude * (-m.growth * settings.window_start).exp(),
            ..m
        })
        .filter(|m| m.amplitude != 0.0)
        .collect();
    let spec = TimeSeriesSpec {
        state_dim: n,
        modes: scaled,
        offset: vec![1.0; n],
    };
    let unit = generate_timeseries(&spec, settings.window_start, settings.dt, l)?;
    let mut data = unit.data().clone();
    for (j, &y) in outputs.iter().enumerate() {
        data.row_mut(j).scale_mut(y);
    }
    SnapshotSet::new(data, settings.window_start, settings.dt)
}

/// Loads a run directory written by [`Campaign::run`].
pub fn load_results(run_dir: &Path) -> Result<(Manifest, ResultsTable)> {
    let mpath = run_dir.join("manifest.json");
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let mut records = Vec::with_capacity(manifest.samples.len());
    for entry in &manifest.samples {
        let p = run_dir.join(&entry.dir).join("record.json");
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        records.push(serde_json::from_str::<SampleRecord>(&text)?);
    }
    let table = ResultsTable {
        bounds: manifest.bounds.clone(),
        output_names: manifest.output_names.clone(),
        records,
    };
    Ok((manifest, table))
}

// ---- analysis --------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsReport {
    pub settings: AnalysisSettings,
    pub outputs: BTreeMap<String, AnalysisReport>,
}

/// Output-wise active-subspace analysis of the ok records.
pub fn analyze_campaign(
    results: &ResultsTable,
    settings: &AnalysisSettings,
    campaign: Option<&Campaign>,
) -> Result<(AsReport, BTreeMap<String, AsAnalysis<f64>>)> {
    let m = results.bounds.len();
    if results.ok_count() < m + 2 {
        return Err(Error::InsufficientData(format!(
            "analysis needs at least m+2 = {} ok records, got {}",
            m + 2,
            results.ok_count()
        )));
    }
    let mut outputs = BTreeMap::new();
    let mut analyses = BTreeMap::new();
    for name in &results.output_names {
        let table = results.sample_table(name)?;
        let eval = |mu: &DVector<f64>| -> Result<f64> {
            let c = campaign.ok_or_else(|| Error::Config("finite differences need the campaign inputs".into()))?;
            c.instant_outputs(mu.as_slice())?
                .get(name)
                .copied()
                .ok_or_else(|| Error::MissingField(name.clone()))
        };
        let a = analyze(&table, settings, Some(&eval))?;
        outputs.insert(name.clone(), AnalysisReport::from_analysis(&a));
        analyses.insert(name.clone(), a);
    }
    Ok((
        AsReport {
            settings: *settings,
            outputs,
        },
        analyses,
    ))
}

/// Writes the `analysis/` directory of a run.
pub fn write_analysis(
    run_dir: &Path,
    report: &AsReport,
    analyses: &BTreeMap<String, AsAnalysis<f64>>,
) -> Result<()> {
    let dir = run_dir.join("analysis");
    let mut plots = PlotData::default();
    let mut surfaces = BTreeMap::new();
    for (name, a) in analyses {
        plots.append(name, a);
        surfaces.insert(name.clone(), SurfaceDocument::from_surface(&a.surface));
    }
    let PlotData {
        eigenvalues: eig,
        bootstrap: boot,
        summary_1d: s1,
        summary_2d: s2,
    } = plots;
    atomic_write(&dir.join("eigenvalues.csv"), eig.as_bytes())?;
    atomic_write(&dir.join("bootstrap.csv"), boot.as_bytes())?;
    atomic_write(&dir.join("summary_1d.csv"), s1.as_bytes())?;
    atomic_write(&dir.join("summary_2d.csv"), s2.as_bytes())?;
    write_json(&dir.join("surface.json"), &surfaces)?;
    write_json(&dir.join("report.json"), report)
}

/// Loads the config, runs every sample and writes the analysis.
pub fn run_campaign(config_path: &Path) -> Result<(ResultsTable, AsReport)> {
    let (config, base) = CampaignConfig::load(config_path)?;
    let campaign = Campaign::prepare(config, &base)?;
    let results = campaign.run()?;
    let settings = campaign.config.analysis;
    let (report, analyses) = analyze_campaign(&results, &settings, Some(&campaign))?;
    write_analysis(&campaign.run_dir, &report, &analyses)?;
    Ok((results, report))
}
