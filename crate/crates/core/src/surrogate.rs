//! Analytic objectives and synthetic transients that stand in for a flow
//! solver, plus the contract for plugging in an external one.
//!
//! The volume-drag proxy is deliberately non-physical. It only exists so that
//! a deformed hull produces a smooth scalar that depends on its shape.

use std::path::{Path, PathBuf};
use std::process::Command;

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dmd::SnapshotSet;
use crate::error::{Error, Result};
use crate::geometry::{enclosed_volume, ittc57_drag, volume_centroid, TriMesh};
use crate::rng::{derived, stream};

/// Objective definition as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `h(cᵀmu)` with `h(x) = sum_k coefficients[k] x^k` (default `x²`).
    Ridge {
        direction: Vec<f64>,
        #[serde(default = "default_ridge_poly")]
        coefficients: Vec<f64>,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `(cᵀmu)⁴`.
    QuarticRidge {
        direction: Vec<f64>,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `½ rho U² (S C_f(Re) + c_w vol^(2/3))` on the deformed mesh.
    VolumeDragProxy {
        #[serde(default = "default_density")]
        density: f64,
        #[serde(default = "default_speed")]
        speed: f64,
        #[serde(default = "default_viscosity")]
        viscosity: f64,
        /// Reference length for `Re`; the mesh x-extent when absent.
        #[serde(default)]
        length: Option<f64>,
        #[serde(default = "default_wave_coefficient")]
        wave_coefficient: f64,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `program args... <mu.csv> <mesh.obj>`; stdout holds a scalar and
    /// optionally a snapshot CSV path.
    ExternalCommand {
        program: String,
        #[serde(default)]
        args: Vec<String>,
    },
}

fn default_ridge_poly() -> Vec<f64> {
    vec![0.0, 0.0, 1.0]
}
fn default_density() -> f64 {
    1025.0
}
fn default_speed() -> f64 {
    2.0
}
fn default_viscosity() -> f64 {
    1.19e-6
}
fn default_wave_coefficient() -> f64 {
    2e-3
}

/// What an evaluation may use besides `mu`.
#[derive(Clone, Copy, Debug, Default)]
pub struct EvalContext<'a> {
    pub mesh: Option<&'a TriMesh<f64>>,
    pub mu_path: Option<&'a Path>,
    pub mesh_path: Option<&'a Path>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Time series reported by an external evaluator.
    pub series: Option<PathBuf>,
}

impl ObjectiveSpec {
    pub fn validate(&self, m: usize) -> Result<()> {
        let check_dir = |c: &[f64]| -> Result<()> {
            if c.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: c.len(),
                });
            }
            if c.iter().all(|&x| x == 0.0) || c.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("ridge direction must be finite and nonzero".into()));
            }
            Ok(())
        };
        let check_noise = |n: f64| -> Result<()> {
            if n >= 0.0 && n.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("noise level must be >= 0, got {n}")))
            }
        };
        match self {
            Self::Ridge {
                direction,
                coefficients,
                noise,
                ..
            } => {
                check_dir(direction)?;
                if coefficients.is_empty() {
                    return Err(Error::Config("ridge polynomial has no coefficients".into()));
                }
                check_noise(*noise)
            }
            Self::QuarticRidge { direction, noise, .. } => {
                check_dir(direction)?;
                check_noise(*noise)
            }
            Self::VolumeDragProxy {
                density,
                speed,
                viscosity,
                noise,
                ..
            } => {
                if !(*density > 0.0 && *speed > 0.0 && *viscosity > 0.0) {
                    return Err(Error::Config("density, speed and viscosity must be positive".into()));
                }
                check_noise(*noise)
            }
            Self::ExternalCommand { program, .. } => {
                if program.is_empty() {
                    Err(Error::Config("external command is empty".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn needs_mesh(&self) -> bool {
        matches!(self, Self::VolumeDragProxy { .. })
    }

    pub fn is_external(&self) -> bool {
        matches!(self, Self::ExternalCommand { .. })
    }

    /// Deterministic in `(self, mu)`.
    pub fn evaluate(&self, mu: &[f64], ctx: &EvalContext<'_>) -> Result<Evaluation> {
        let value = match self {
            Self::Ridge {
                direction,
                coefficients,
                noise,
                seed,
            } => {
                let s = dot(direction, mu)?;
                let h = coefficients.iter().rev().fold(0.0, |acc, &a| acc * s + a);
                h + noise_term(mu, *noise, *seed)
            }
            Self::QuarticRidge { direction, noise, seed } => {
                let s = dot(direction, mu)?;
                s.powi(4) + noise_term(mu, *noise, *seed)
            }
            Self::VolumeDragProxy {
                density,
                speed,
                viscosity,
                length,
                wave_coefficient,
                noise,
                seed,
            } => {
                let mesh = ctx
                    .mesh
                    .ok_or_else(|| Error::Config("volume-drag-proxy needs a mesh".into()))?;
                volume_drag_proxy(mesh, *density, *speed, *viscosity, *length, *wave_coefficient)?
                    + noise_term(mu, *noise, *seed)
            }
            Self::ExternalCommand { program, args } => return run_external(program, args, ctx),
        };
        if !value.is_finite() {
            return Err(Error::NonFinite("objective value".into()));
        }
        Ok(Evaluation { value, series: None })
    }
}

fn dot(c: &[f64], mu: &[f64]) -> Result<f64> {
    if c.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            got: mu.len(),
        });
    }
    Ok(c.iter().zip(mu).map(|(a, b)| a * b).sum())
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Gaussian noise keyed on the bit pattern of `mu` and `seed`.
pub fn noise_term(mu: &[f64], level: f64, seed: u64) -> f64 {
    if level == 0.0 {
        return 0.0;
    }
    let key = mu.iter().fold(splitmix(seed), |h, x| splitmix(h ^ x.to_bits()));
    let mut rng = derived(key, stream::NOISE, 0);
    let z: f64 = rng.sample(StandardNormal);
    level * z
}

pub fn volume_drag_proxy(
    mesh: &TriMesh<f64>,
    density: f64,
    speed: f64,
    viscosity: f64,
    length: Option<f64>,
    wave_coefficient: f64,
) -> Result<f64> {
    let length = match length {
        Some(l) => l,
        None => hull_length(mesh)?,
    };
    let area = mesh.surface_area();
    let friction = ittc57_drag(speed * length / viscosity, density, speed, area)?;
    let volume = enclosed_volume(mesh)?;
    if volume <= 0.0 {
        return Err(Error::Domain(format!("enclosed volume {volume} is not positive")));
    }
    Ok(friction + 0.5 * density * speed * speed * wave_coefficient * volume.powf(2.0 / 3.0))
}

fn hull_length(mesh: &TriMesh<f64>) -> Result<f64> {
    let (lo, hi) = mesh
        .bounding_box()
        .ok_or_else(|| Error::InsufficientData("mesh has no vertices".into()))?;
    Ok(hi.x - lo.x)
}

/// Stand-in for the trim output: longitudinal position of the volume
/// centroid as a fraction of hull length, measured from the aft end.
pub fn trim_proxy(mesh: &TriMesh<f64>) -> Result<f64> {
    let (lo, hi) = mesh
        .bounding_box()
        .ok_or_else(|| Error::InsufficientData("mesh has no vertices".into()))?;
    Ok((volume_centroid(mesh)?.x - lo.x) / (hi.x - lo.x))
}

fn run_external(program: &str, args: &[String], ctx: &EvalContext<'_>) -> Result<Evaluation> {
    let (mu_path, mesh_path) = match (ctx.mu_path, ctx.mesh_path) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Config("external command needs mu and mesh files".into())),
    };
    let out = Command::new(program)
        .args(args)
        .arg(mu_path)
        .arg(mesh_path)
        .output()
        .map_err(|e| Error::Evaluator(format!("cannot run `{program}`: {e}")))?;
    if !out.status.success() {
        let stderr = String::from_utf8_lossy(&out.stderr);
        return Err(Error::Evaluator(format!(
            "`{program}` exited with {}: {}",
            out.status,
            stderr.trim()
        )));
    }
    parse_external_output(&String::from_utf8_lossy(&out.stdout), mu_path.parent())
}

/// First token: scalar. Optional second token: snapshot CSV path (relative
/// paths resolve against `base`).
pub fn parse_external_output(stdout: &str, base: Option<&Path>) -> Result<Evaluation> {
    let mut tokens = stdout.split_whitespace();
    let first = tokens
        .next()
        .ok_or_else(|| Error::Evaluator("external command printed nothing".into()))?;
    let value: f64 = first
        .parse()
        .map_err(|_| Error::Evaluator(format!("cannot parse `{first}` as a number")))?;
    if !value.is_finite() {
        return Err(Error::Evaluator("external command returned a non-finite value".into()));
    }
    let series = tokens.next().map(|p| {
        let p = PathBuf::from(p);
        match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p,
        }
    });
    if tokens.next().is_some() {
        return Err(Error::Evaluator("unexpected extra output from external command".into()));
    }
    Ok(Evaluation { value, series })
}

// ---- synthetic time series -------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    /// Growth rate `sigma` (1/s).
    pub growth: f64,
    /// Angular frequency `omega` (rad/s).
    pub frequency: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Seed of the spatial profile and phases.
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSeriesSpec {
    pub state_dim: usize,
    pub modes: Vec<ModeSpec>,
    /// Empty means zero.
    #[serde(default)]
    pub offset: Vec<f64>,
}

impl TimeSeriesSpec {
    /// Spatial profile `phi` (unit norm) and per-component phases `psi`.
    pub fn mode_shape(&self, mode: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.state_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(self.modes[mode].seed);
        rng.set_stream(stream::SPATIAL);
        let mut phi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
        phi.iter_mut().for_each(|x| *x /= norm);
        let psi = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        (phi, psi)
    }

    /// State at time `t`.
    pub fn state(&self, t: f64) -> Vec<f64> {
        let mut x = if self.offset.is_empty() {
            vec![0.0; self.state_dim]
        } else {
            self.offset.clone()
        };
        for (i, m) in self.modes.iter().enumerate() {
            let (phi, psi) = self.mode_shape(i);
            let env = m.amplitude * (m.growth * t).exp();
            for j in 0..self.state_dim {
                x[j] += env * phi[j] * (m.frequency * t + psi[j]).cos();
            }
        }
        x
    }

    /// `e^{(sigma ± i omega) dt}` per mode (one value for non-oscillating
    /// modes), plus 1 for a nonzero offset.
    pub fn exact_eigenvalues(&self, dt: f64) -> Vec<Complex<f64>> {
        let mut out = Vec::new();
        if self.offset.iter().any(|&x| x != 0.0) {
            out.push(Complex::new(1.0, 0.0));
        }
        for m in &self.modes {
            let z = Complex::new(m.growth * dt, m.frequency * dt).exp();
            out.push(z);
            if m.frequency != 0.0 {
                out.push(z.conj());
            }
        }
        out
    }
}

/// `x(t_k) = offset + sum_i a_i phi_i e^{sigma_i t} cos(omega_i t + psi_i)`
/// for `t_k = t0 + k dt`, `k = 0..l`. The phase `psi_i` varies per component,
/// so an oscillating mode spans two spatial directions.
pub fn generate_timeseries(spec: &TimeSeriesSpec, t0: f64, dt: f64, l: usize) -> Result<SnapshotSet<f64>> {
    if spec.state_dim == 0 {
        return Err(Error::Config("time series state dimension must be >= 1".into()));
    }
    if !spec.offset.is_empty() && spec.offset.len() != spec.state_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.state_dim,
            got: spec.offset.len(),
        });
    }
    if spec.modes.iter().any(|m| !(m.growth.is_finite() && m.frequency.is_finite() && m.amplitude.is_finite())) {
        return Err(Error::NonFinite("mode rates".into()));
    }
    let shapes: Vec<_> = (0..spec.modes.len()).map(|i| spec.mode_shape(i)).collect();
    let n = spec.state_dim;
    let mut data = DMatrix::zeros(n, l);
    for k in 0..l {
        let t = t0 + dt * k as f64;
        for j in 0..n {
            data[(j, k)] = spec.offset.get(j).copied().unwrap_or(0.0);
        }
        for (m, (phi, psi)) in spec.modes.iter().zip(&shapes) {
            let env = m.amplitude * (m.growth * t).exp();
            for j in 0..n {
                data[(j, k)] += env * phi[j] * (m.frequency * t + psi[j]).cos();
            }
        }
    }
    SnapshotSet::new(data, t0, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmd::{fit, DmdOptions};
    use crate::geometry::shapes::{axis_box, unit_cube};
    use crate::geometry::Point3;

    fn ridge(c: Vec<f64>) -> ObjectiveSpec {
        ObjectiveSpec::Ridge {
            direction: c,
            coefficients: default_ridge_poly(),
            noise: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn ridge_examples() {
        let spec = ridge(vec![1.0, 0.0, 0.0]);
        let v = spec.evaluate(&[0.2, 0.0, 0.0], &EvalContext::default()).unwrap();
        assert!((v.value - 0.04).abs() < 1e-15);
        let q = ObjectiveSpec::QuarticRidge {
            direction: vec![1.0, 2.0],
            noise: 0.0,
            seed: 0,
        };
        assert_eq!(q.evaluate(&[0.0, 0.0], &EvalContext::default()).unwrap().value, 0.0);
        assert!(spec.evaluate(&[0.2], &EvalContext::default()).is_err());
    }

    #[test]
    fn noise_is_deterministic() {
        let mk = |seed| ObjectiveSpec::Ridge {
            direction: vec![1.0, 1.0],
            coefficients: vec![0.0, 1.0],
            noise: 0.1,
            seed,
        };
        let ctx = EvalContext::default();
        let a = mk(3).evaluate(&[0.1, 0.2], &ctx).unwrap().value;
        let b = mk(3).evaluate(&[0.1, 0.2], &ctx).unwrap().value;
        let c = mk(4).evaluate(&[0.1, 0.2], &ctx).unwrap().value;
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, c);
    }

    #[test]
    fn validation() {
        assert!(ridge(vec![0.0, 0.0]).validate(2).is_err());
        assert!(ridge(vec![1.0, 0.0]).validate(3).is_err());
        assert!(ridge(vec![1.0, 0.0]).validate(2).is_ok());
        let spec: ObjectiveSpec = serde_json::from_str(r#"{"kind": "volume-drag-proxy"}"#).unwrap();
        assert!(spec.validate(8).is_ok() && spec.needs_mesh());
        assert!(serde_json::from_str::<ObjectiveSpec>(r#"{"kind": "ridge"}"#).is_err());
    }

    #[test]
    fn drag_proxy_composition() {
        let hull = axis_box(Point3::new(0.0, -0.1, -0.1), Point3::new(2.0, 0.1, 0.1));
        let spec: ObjectiveSpec = serde_json::from_str(r#"{"kind": "volume-drag-proxy"}"#).unwrap();
        let ctx = EvalContext {
            mesh: Some(&hull),
            ..Default::default()
        };
        let got = spec.evaluate(&[0.0], &ctx).unwrap().value;
        let s = hull.surface_area();
        let vol = enclosed_volume(&hull).unwrap();
        let expect = ittc57_drag(2.0 * 2.0 / 1.19e-6, 1025.0, 2.0, s).unwrap()
            + 0.5 * 1025.0 * 4.0 * 2e-3 * vol.powf(2.0 / 3.0);
        assert!((got - expect).abs() <= 1e-12 * expect);
        assert!(spec.evaluate(&[0.0], &EvalContext::default()).is_err());
    }

    #[test]
    fn trim_of_symmetric_box_is_half() {
        assert!((trim_proxy(&unit_cube()).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn external_output_parsing() {
        let e = parse_external_output("  3.5\n", None).unwrap();
        assert_eq!(e.value, 3.5);
        assert!(e.series.is_none());
        let e = parse_external_output("1e-3 series.csv", Some(Path::new("/run/s"))).unwrap();
        assert_eq!(e.series.unwrap(), PathBuf::from("/run/s/series.csv"));
        assert!(parse_external_output("", None).is_err());
        assert!(parse_external_output("abc", None).is_err());
        assert!(parse_external_output("1 a b", None).is_err());
    }

    #[test]
    fn external_command_needs_files() {
        let spec = ObjectiveSpec::ExternalCommand {
            program: "true".into(),
            args: vec![],
        };
        assert!(matches!(spec.evaluate(&[0.0], &EvalContext::default()), Err(Error::Config(_))));
    }

    #[test]
    fn constant_series_and_offset_mode() {
        let spec = TimeSeriesSpec {
            state_dim: 4,
            modes: vec![ModeSpec {
                growth: 0.0,
                frequency: 0.0,
                amplitude: 1.0,
                seed: 5,
            }],
            offset: vec![],
        };
        let s = generate_timeseries(&spec, 0.0, 0.1, 6).unwrap();
        for k in 1..6 {
            assert_eq!(s.data().column(k), s.data().column(0));
        }
        let offset_only = TimeSeriesSpec {
            state_dim: 3,
            modes: vec![],
            offset: vec![1.0, -2.0, 0.5],
        };
        let s = generate_timeseries(&offset_only, 7.0, 0.1, 10).unwrap();
        let model = fit(&s, DmdOptions::default()).unwrap();
        assert_eq!(model.rank(), 1);
        assert!((model.eigenvalues()[0] - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(offset_only.exact_eigenvalues(0.1), vec![Complex::new(1.0, 0.0)]);
    }

    #[test]
    fn damped_mode_eigenvalue() {
        let spec = TimeSeriesSpec {
            state_dim: 6,
            modes: vec![ModeSpec {
                growth: -0.1,
                frequency: 2.0,
                amplitude: 1.0,
                seed: 1,
            }],
            offset: vec![],
        };
        let s = generate_timeseries(&spec, 7.0, 0.1, 40).unwrap();
        let model = fit(&s, DmdOptions::default()).unwrap();
        assert_eq!(model.rank(), 2);
        let exact = Complex::new(-0.01, 0.2).exp();
        assert!((model.eigenvalues()[0] - exact).norm() < 1e-10);
        assert!((model.eigenvalues()[1] - exact.conj()).norm() < 1e-10);
        let direct = spec.state(7.0 + 0.1 * 5.0);
        for (a, b) in direct.iter().zip(s.data().column(5).iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
