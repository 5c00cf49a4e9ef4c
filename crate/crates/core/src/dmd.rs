//! Dynamic mode decomposition of equispaced snapshot sequences.
//!
//! Snapshots `x_1 .. x_l` are split into the shifted pair `S = [x_1 .. x_{l-1}]`,
//! `S' = [x_2 .. x_l]`. With the truncated SVD `S ~ U_r Sigma_r V_r^*` the
//! reduced operator is `A~ = U_r^* S' V_r Sigma_r^-1`; its eigenpairs
//! `A~ W = W Lambda` give exact modes `S' V_r Sigma_r^-1 W` or projected modes
//! `U_r W`. States are reconstructed as `Re(Theta Lambda^k b)` with amplitudes
//! `b = Theta^+ x_1`.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complex_lstsq, general_eigen};
use crate::scalar::{cabs, cexp, cln, Real};

/// Column-wise time series sampled every `dt` starting at `t0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSet<T: Real> {
    data: DMatrix<T>,
    t0: T,
    dt: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankRule {
    /// Exactly `r` modes (reduced with a warning if the data has lower rank).
    Explicit(usize),
    /// Smallest `r` whose leading singular values carry at least this
    /// fraction of `sum(sigma_i^2)`.
    Energy(f64),
    /// Every numerically nonzero singular value.
    Full,
}

impl Default for RankRule {
    fn default() -> Self {
        RankRule::Energy(DEFAULT_ENERGY)
    }
}

pub const DEFAULT_ENERGY: f64 = 1.0 - 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    #[default]
    Exact,
    Projected,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeRule {
    /// `b = Theta^+ x_1`.
    #[default]
    FirstSnapshot,
    /// Least squares over every training snapshot.
    AllSnapshots,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DmdOptions {
    pub rank: RankRule,
    pub modes: ModeKind,
    pub amplitudes: AmplitudeRule,
}

impl DmdOptions {
    pub fn with_rank(rank: RankRule) -> Self {
        Self {
            rank,
            ..Self::default()
        }
    }
}

/// Fitted decomposition. Immutable after [`fit`].
#[derive(Clone, Debug, PartialEq)]
pub struct DmdModel<T: Real> {
    modes: DMatrix<Complex<T>>,
    eigenvalues: Vec<Complex<T>>,
    amplitudes: Vec<Complex<T>>,
    singular_values: Vec<T>,
    /// `U_r`, the POD basis of `S`.
    pod_basis: DMatrix<T>,
    /// `S' V_r Sigma_r^-1`; together with `pod_basis` the factored operator.
    lifted_basis: DMatrix<T>,
    t0: T,
    dt: T,
    mode_kind: ModeKind,
}

impl<T: Real> SnapshotSet<T> {
    pub fn new(data: DMatrix<T>, t0: T, dt: T) -> Result<Self> {
        if data.ncols() < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 snapshots, got {}",
                data.ncols()
            )));
        }
        if data.nrows() == 0 {
            return Err(Error::InsufficientData("snapshots have zero length".into()));
        }
        if !(dt > T::zero()) || !dt.is_finite() || !t0.is_finite() {
            return Err(Error::Domain(format!("sampling interval must be positive, got {dt}")));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("snapshot data".into()));
        }
        Ok(Self { data, t0, dt })
    }

    /// Builds a set from column vectors.
    pub fn from_columns(columns: &[DVector<T>], t0: T, dt: T) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InsufficientData("no snapshots".into()));
        }
        Self::new(DMatrix::from_columns(columns), t0, dt)
    }

    pub fn data(&self) -> &DMatrix<T> {
        &self.data
    }

    /// State dimension `n`.
    pub fn state_dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of snapshots `l`.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn time(&self, k: usize) -> T {
        self.t0 + self.dt * T::from_count(k)
    }

    /// Reads the CSV layout: first line `t0,dt`, then one row per state
    /// component with one column per snapshot. A literal `t0,dt` name line
    /// before the values is also accepted.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (mut ln, mut header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
        if header.trim().replace(' ', "") == "t0,dt" {
            (ln, header) = lines
                .next()
                .ok_or_else(|| Error::parse(ln + 2, "missing t0,dt values"))?;
        }
        let head = parse_row(header, ln + 1)?;
        if head.len() != 2 {
            return Err(Error::parse(ln + 1, "header must be `t0,dt`"));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (n, line) in lines {
            let row = parse_row(line, n + 1)?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::parse(
                        n + 1,
                        format!("expected {} columns, got {}", first.len(), row.len()),
                    ));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::InsufficientData("no state rows".into()));
        }
        let (n, l) = (rows.len(), rows[0].len());
        let data = DMatrix::from_fn(n, l, |i, j| T::lit(rows[i][j]));
        Self::new(data, T::lit(head[0]), T::lit(head[1]))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.t0.as_f64(), self.dt.as_f64());
        for row in self.data.row_iter() {
            let cells: Vec<String> = row.iter().map(|x| x.as_f64().to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Raw little-endian layout: `n: u64`, `l: u64`, `dt: f64`, then `n * l`
    /// `f64` values snapshot by snapshot (column-major). `t0` is zero.
    pub fn load_binary(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() < 24 {
            return Err(Error::parse(0, "binary snapshot file shorter than its 24-byte header"));
        }
        let word = |i: usize| <[u8; 8]>::try_from(&bytes[8 * i..8 * i + 8]).expect("8 bytes");
        let n = u64::from_le_bytes(word(0)) as usize;
        let l = u64::from_le_bytes(word(1)) as usize;
        let dt = f64::from_le_bytes(word(2));
        let expected = n
            .checked_mul(l)
            .and_then(|c| c.checked_mul(8))
            .and_then(|c| c.checked_add(24))
            .ok_or_else(|| Error::parse(0, "header dimensions overflow"))?;
        if bytes.len() != expected {
            return Err(Error::parse(
                0,
                format!("expected {expected} bytes for n={n}, l={l}, found {}", bytes.len()),
            ));
        }
        let data = DMatrix::from_fn(n, l, |i, j| T::lit(f64::from_le_bytes(word(3 + j * n + i))));
        Self::new(data, T::zero(), T::lit(dt))
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(24 + 8 * self.data.len());
        buf.write_all(&(self.state_dim() as u64).to_le_bytes()).expect("vec write");
        buf.write_all(&(self.len() as u64).to_le_bytes()).expect("vec write");
        buf.write_all(&self.dt.as_f64().to_le_bytes()).expect("vec write");
        for x in self.data.iter() {
            buf.write_all(&x.as_f64().to_le_bytes()).expect("vec write");
        }
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

fn parse_row(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("bad number `{}`", tok.trim())))
        })
        .collect()
}

/// `(S, S')`: the first `l-1` and last `l-1` snapshots.
pub fn build_shift_pair<T: Real>(snapshots: &SnapshotSet<T>) -> (DMatrix<T>, DMatrix<T>) {
    let l = snapshots.len();
    let d = snapshots.data();
    (d.columns(0, l - 1).into_owned(), d.columns(1, l - 1).into_owned())
}

fn choose_rank<T: Real>(sigma: &[T], rule: RankRule, max_rank: usize) -> Result<usize> {
    let smax = sigma.first().copied().unwrap_or(T::zero());
    let tol = smax * T::eps() * T::from_count(sigma.len().max(1)) * T::lit(10.0);
    let numerical = sigma.iter().take_while(|&&s| s > tol).count();
    let r = match rule {
        RankRule::Explicit(r) => {
            if r == 0 || r > max_rank {
                return Err(Error::Config(format!(
                    "rank {r} outside 1..={max_rank} (min(n, l-1))"
                )));
            }
            if r > numerical {
                warn!("requested rank {r} but only {numerical} nonzero singular values; using {numerical}");
                numerical
            } else {
                r
            }
        }
        RankRule::Energy(tau) => {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(Error::Config(format!("energy threshold {tau} outside (0, 1]")));
            }
            let total = sigma.iter().fold(T::zero(), |a, &s| a + s * s);
            let target = total * T::lit(tau);
            let mut acc = T::zero();
            let mut r = sigma.len();
            for (i, &s) in sigma.iter().enumerate() {
                acc += s * s;
                if acc >= target {
                    r = i + 1;
                    break;
                }
            }
            r.min(numerical)
        }
        RankRule::Full => numerical,
    };
    Ok(r.max(1))
}

fn cpow<T: Real>(z: Complex<T>, mut k: usize) -> Complex<T> {
    let mut base = z;
    let mut acc = Complex::new(T::one(), T::zero());
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        base = base * base;
        k >>= 1;
    }
    acc
}

fn to_complex<T: Real>(m: &DMatrix<T>) -> DMatrix<Complex<T>> {
    m.map(|x| Complex::new(x, T::zero()))
}

/// Fits a DMD model to the snapshots.
pub fn fit<T: Real>(snapshots: &SnapshotSet<T>, options: DmdOptions) -> Result<DmdModel<T>> {
    let (s, s_next) = build_shift_pair(snapshots);
    if snapshots.data().iter().all(|&x| x == T::zero()) {
        return Err(Error::Domain("all-zero snapshot matrix".into()));
    }
    let max_rank = s.nrows().min(s.ncols());
    let svd = crate::linalg::svd(&s)?;
    let sigma: Vec<T> = svd.s.iter().copied().collect();
    let r = choose_rank(&sigma, options.rank, max_rank)?;

    let (u, v_t) = (&svd.u, &svd.v_t);
    let u_r = u.columns(0, r).into_owned();
    let v_r = v_t.rows(0, r).transpose();
    let sigma_inv = DMatrix::from_diagonal(&DVector::from_iterator(
        r,
        sigma[..r].iter().map(|&x| T::one() / x),
    ));
    let lifted = &s_next * v_r * sigma_inv;
    let reduced = u_r.transpose() * &lifted;

    let (values, w) = general_eigen(&reduced)?;
    let raw_modes = match options.modes {
        ModeKind::Exact => to_complex(&lifted) * &w,
        ModeKind::Projected => to_complex(&u_r) * &w,
    };

    // descending |lambda|, ties by descending imaginary part
    let scale = values.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)));
    let tie = scale * T::lit(1e-12);
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| {
        let (za, zb) = (values[a], values[b]);
        let (ma, mb) = (cabs(za), cabs(zb));
        if (ma - mb).abs() <= tie {
            zb.im.partial_cmp(&za.im).unwrap_or(std::cmp::Ordering::Equal)
        } else {
            mb.partial_cmp(&ma).unwrap_or(std::cmp::Ordering::Equal)
        }
    });
    let eigenvalues: Vec<Complex<T>> = order.iter().map(|&i| values[i]).collect();
    let mut modes = DMatrix::<Complex<T>>::zeros(raw_modes.nrows(), r);
    for (dst, &src) in order.iter().enumerate() {
        let col = raw_modes.column(src);
        let norm = col.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
        let col = if norm > T::zero() {
            col.map(|z| z / norm)
        } else {
            col.into_owned()
        };
        modes.set_column(dst, &col);
    }

    let amplitudes = match options.amplitudes {
        AmplitudeRule::FirstSnapshot => {
            let x1 = snapshots.data().column(0).map(|x| Complex::new(x, T::zero()));
            complex_lstsq(&modes, &x1)?.iter().copied().collect()
        }
        AmplitudeRule::AllSnapshots => {
            let (n, l) = (snapshots.state_dim(), snapshots.len());
            let mut big = DMatrix::<Complex<T>>::zeros(n * l, r);
            let mut rhs = DVector::<Complex<T>>::zeros(n * l);
            for k in 0..l {
                for j in 0..r {
                    let p = cpow(eigenvalues[j], k);
                    for i in 0..n {
                        big[(k * n + i, j)] = modes[(i, j)] * p;
                    }
                }
                for i in 0..n {
                    rhs[k * n + i] = Complex::new(snapshots.data()[(i, k)], T::zero());
                }
            }
            complex_lstsq(&big, &rhs)?.iter().copied().collect()
        }
    };

    Ok(DmdModel {
        modes,
        eigenvalues,
        amplitudes,
        singular_values: sigma,
        pod_basis: u_r,
        lifted_basis: lifted,
        t0: snapshots.t0(),
        dt: snapshots.dt(),
        mode_kind: options.modes,
    })
}

impl<T: Real> DmdModel<T> {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn state_dim(&self) -> usize {
        self.modes.nrows()
    }

    pub fn modes(&self) -> &DMatrix<Complex<T>> {
        &self.modes
    }

    /// Discrete-time eigenvalues, sorted by descending magnitude.
    pub fn eigenvalues(&self) -> &[Complex<T>] {
        &self.eigenvalues
    }

    /// Continuous-time rates `ln(lambda) / dt` (growth + i * frequency).
    pub fn continuous_eigenvalues(&self) -> Vec<Complex<T>> {
        self.eigenvalues.iter().map(|z| cln(*z) / self.dt).collect()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    /// All singular values of `S`, including the truncated ones.
    pub fn singular_values(&self) -> &[T] {
        &self.singular_values
    }

    pub fn mode_kind(&self) -> ModeKind {
        self.mode_kind
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn time(&self, k: usize) -> T {
        self.t0 + self.dt * T::from_count(k)
    }

    /// `Theta Lambda^k b` before taking the real part.
    pub fn reconstruct_complex(&self, k: usize) -> DVector<Complex<T>> {
        let coeffs = DVector::from_iterator(
            self.rank(),
            self.eigenvalues
                .iter()
                .zip(&self.amplitudes)
                .map(|(&l, &b)| cpow(l, k) * b),
        );
        &self.modes * coeffs
    }

    /// State at `t0 + k dt` (`k = 0` is the first snapshot); `k` may exceed
    /// the training window.
    pub fn reconstruct(&self, k: usize) -> DVector<T> {
        self.reconstruct_complex(k).map(|z| z.re)
    }

    /// Norm of the discarded imaginary part at step `k`.
    pub fn imaginary_residual(&self, k: usize) -> T {
        self.reconstruct_complex(k).iter().fold(T::zero(), |a, z| a + z.im * z.im).sqrt()
    }

    /// Columns `0..=k_max` of the reconstruction.
    pub fn reconstruct_series(&self, k_max: usize) -> DMatrix<T> {
        let cols: Vec<DVector<T>> = (0..=k_max).map(|k| self.reconstruct(k)).collect();
        DMatrix::from_columns(&cols)
    }

    /// State at an arbitrary time. Grid times use integer powers; other
    /// times use `lambda^s = exp(s ln lambda)`.
    pub fn predict_time(&self, t: T) -> Result<DVector<T>> {
        let s = (t - self.t0) / self.dt;
        if s < -T::lit(1e-9) {
            return Err(Error::Domain(format!("time {t} precedes the first snapshot")));
        }
        let k = s.round();
        if (s - k).abs() <= T::lit(1e-9) * s.abs().max(T::one()) {
            return Ok(self.reconstruct(k.as_f64() as usize));
        }
        let coeffs = DVector::from_iterator(
            self.rank(),
            self.eigenvalues.iter().zip(&self.amplitudes).map(|(&l, &b)| {
                if cabs(l) == T::zero() {
                    Complex::new(T::zero(), T::zero())
                } else {
                    cexp(cln(l) * s) * b
                }
            }),
        );
        Ok((&self.modes * coeffs).map(|z| z.re))
    }

    /// One application of the fitted low-rank operator,
    /// `S' V_r Sigma_r^-1 U_r^* x`, without forming the `n x n` matrix.
    pub fn advance(&self, x: &DVector<T>) -> DVector<T> {
        &self.lifted_basis * (self.pod_basis.transpose() * x)
    }

    pub fn pod_basis(&self) -> &DMatrix<T> {
        &self.pod_basis
    }
}

/// Relative Frobenius error of the reconstruction over the training window.
pub fn training_error<T: Real>(model: &DmdModel<T>, snapshots: &SnapshotSet<T>) -> Result<T> {
    if model.state_dim() != snapshots.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.state_dim(),
            got: snapshots.state_dim(),
        });
    }
    let rec = model.reconstruct_series(snapshots.len() - 1);
    let denom = snapshots.data().norm();
    let num = (rec - snapshots.data()).norm();
    Ok(if denom > T::zero() { num / denom } else { num })
}

// ---- JSON document -------------------------------------------------------

/// Serialized model; complex values as `[re, im]` pairs, matrices as lists of columns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DmdModelDocument {
    pub rank: usize,
    pub t0: f64,
    pub dt: f64,
    pub mode_kind: ModeKind,
    pub eigenvalues: Vec<[f64; 2]>,
    pub amplitudes: Vec<[f64; 2]>,
    pub singular_values: Vec<f64>,
    pub modes: Vec<Vec<[f64; 2]>>,
    pub pod_basis: Vec<Vec<f64>>,
    pub lifted_basis: Vec<Vec<f64>>,
}

impl DmdModelDocument {
    pub fn from_model<T: Real>(m: &DmdModel<T>) -> Self {
        let c = |z: &Complex<T>| [z.re.as_f64(), z.im.as_f64()];
        let real_cols = |mat: &DMatrix<T>| -> Vec<Vec<f64>> {
            mat.column_iter().map(|col| col.iter().map(|x| x.as_f64()).collect()).collect()
        };
        Self {
            rank: m.rank(),
            t0: m.t0.as_f64(),
            dt: m.dt.as_f64(),
            mode_kind: m.mode_kind,
            eigenvalues: m.eigenvalues.iter().map(c).collect(),
            amplitudes: m.amplitudes.iter().map(c).collect(),
            singular_values: m.singular_values.iter().map(|x| x.as_f64()).collect(),
            modes: m.modes.column_iter().map(|col| col.iter().map(c).collect()).collect(),
            pod_basis: real_cols(&m.pod_basis),
            lifted_basis: real_cols(&m.lifted_basis),
        }
    }

    pub fn model<T: Real>(&self) -> Result<DmdModel<T>> {
        let r = self.rank;
        let n = self.modes.first().map_or(0, Vec::len);
        let lens_ok = self.eigenvalues.len() == r
            && self.amplitudes.len() == r
            && self.modes.len() == r
            && self.modes.iter().all(|c| c.len() == n)
            && self.pod_basis.len() == r
            && self.lifted_basis.len() == r
            && self.pod_basis.iter().chain(&self.lifted_basis).all(|c| c.len() == n);
        if !lens_ok || r == 0 {
            return Err(Error::Config("inconsistent DMD model document".into()));
        }
        let cz = |p: &[f64; 2]| Complex::new(T::lit(p[0]), T::lit(p[1]));
        let real = |cols: &[Vec<f64>]| DMatrix::from_fn(n, r, |i, j| T::lit(cols[j][i]));
        Ok(DmdModel {
            modes: DMatrix::from_fn(n, r, |i, j| cz(&self.modes[j][i])),
            eigenvalues: self.eigenvalues.iter().map(cz).collect(),
            amplitudes: self.amplitudes.iter().map(cz).collect(),
            singular_values: self.singular_values.iter().map(|&x| T::lit(x)).collect(),
            pod_basis: real(&self.pod_basis),
            lifted_basis: real(&self.lifted_basis),
            t0: T::lit(self.t0),
            dt: T::lit(self.dt),
            mode_kind: self.mode_kind,
        })
    }
}
