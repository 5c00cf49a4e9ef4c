//! Trivariate free-form deformation on a Bernstein (Bézier) control lattice.
//!
//! A point is mapped to lattice reference coordinates `(s, t, u) = A^-1 (p - origin)`,
//! shifted by the tensor-product blend of control-point displacements, and
//! mapped back. Points whose reference coordinates fall outside `[0, 1]^3`
//! are left untouched.

use std::fs;
use std::path::Path;

use log::warn;
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, TriMesh};
use crate::scalar::Real;

/// Control lattice with per-point displacements in lattice-local coordinates
/// (fractions of the box edges).
#[derive(Clone, Debug, PartialEq)]
pub struct FfdLattice<T: Real> {
    origin: Point3<T>,
    /// Columns are the three box edge vectors.
    axes: Matrix3<T>,
    inverse: Matrix3<T>,
    counts: [usize; 3],
    displacements: Vec<Vector3<T>>,
}

/// One parameter-to-control-point link: `displacement[index][axis] += weight * mu[param]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BindingEntry<T> {
    pub index: [usize; 3],
    pub axis: usize,
    pub param: usize,
    pub weight: T,
}

/// Maps an `m`-vector of shape parameters onto lattice displacements.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterBinding<T: Real> {
    entries: Vec<BindingEntry<T>>,
    bounds: Vec<(T, T)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingScheme {
    UniformRandom,
    LatinHypercube,
}

impl<T: Real> FfdLattice<T> {
    /// Undisplaced lattice spanned by `axes` from `origin`.
    pub fn new(origin: Point3<T>, axes: [Vector3<T>; 3], counts: [usize; 3]) -> Result<Self> {
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::Config(format!(
                "lattice needs at least 2 control points per direction, got {counts:?}"
            )));
        }
        let a = Matrix3::from_columns(&axes);
        let scale = axes.iter().fold(T::one(), |acc, v| acc * v.norm());
        let det = a.determinant();
        if !(scale > T::zero()) || !(det.abs() >= T::lit(1e-12) * scale) {
            return Err(Error::Singular(format!(
                "lattice axes are (nearly) linearly dependent: det = {det}"
            )));
        }
        let inverse = a
            .try_inverse()
            .ok_or_else(|| Error::Singular("lattice axes not invertible".into()))?;
        Ok(Self {
            origin,
            axes: a,
            inverse,
            counts,
            displacements: vec![Vector3::zeros(); counts[0] * counts[1] * counts[2]],
        })
    }

    /// Axis-aligned lattice over the box `[lo, hi]`.
    pub fn from_box(lo: Point3<T>, hi: Point3<T>, counts: [usize; 3]) -> Result<Self> {
        let d = hi - lo;
        Self::new(
            lo,
            [
                Vector3::new(d.x, T::zero(), T::zero()),
                Vector3::new(T::zero(), d.y, T::zero()),
                Vector3::new(T::zero(), T::zero(), d.z),
            ],
            counts,
        )
    }

    pub fn origin(&self) -> Point3<T> {
        self.origin
    }

    pub fn axes(&self) -> [Vector3<T>; 3] {
        [
            self.axes.column(0).into_owned(),
            self.axes.column(1).into_owned(),
            self.axes.column(2).into_owned(),
        ]
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    fn flat(&self, [i, j, k]: [usize; 3]) -> Result<usize> {
        let [l, m, n] = self.counts;
        if i >= l || j >= m || k >= n {
            return Err(Error::IndexOutOfRange(format!(
                "control point {:?} outside lattice {:?}",
                [i, j, k],
                self.counts
            )));
        }
        Ok(i + l * (j + m * k))
    }

    pub fn displacement(&self, index: [usize; 3]) -> Result<Vector3<T>> {
        Ok(self.displacements[self.flat(index)?])
    }

    pub fn set_displacement(&mut self, index: [usize; 3], d: Vector3<T>) -> Result<()> {
        let f = self.flat(index)?;
        self.displacements[f] = d;
        Ok(())
    }

    /// Iterates `(index, displacement)` over every control point.
    pub fn displacements(&self) -> impl Iterator<Item = ([usize; 3], Vector3<T>)> + '_ {
        let [l, m, _] = self.counts;
        self.displacements
            .iter()
            .enumerate()
            .map(move |(f, d)| ([f % l, (f / l) % m, f / (l * m)], *d))
    }

    /// Physical point to reference coordinates `(s, t, u)`.
    pub fn to_reference(&self, p: &Point3<T>) -> Vector3<T> {
        self.inverse * (p - self.origin)
    }

    pub fn to_physical(&self, r: &Vector3<T>) -> Point3<T> {
        self.origin + self.axes * r
    }

    /// Blended displacement at reference coordinates `r` (assumed inside the box).
    pub fn blended_displacement(&self, r: &Vector3<T>) -> Vector3<T> {
        let [l, m, n] = self.counts;
        let bs = bernstein_all(l - 1, r.x);
        let bt = bernstein_all(m - 1, r.y);
        let bu = bernstein_all(n - 1, r.z);
        let mut acc = Vector3::zeros();
        for (k, &wk) in bu.iter().enumerate() {
            for (j, &wj) in bt.iter().enumerate() {
                let wjk = wj * wk;
                let row = l * (j + m * k);
                for (i, &wi) in bs.iter().enumerate() {
                    acc += self.displacements[row + i] * (wi * wjk);
                }
            }
        }
        acc
    }

    /// The morphing map. Written as `p + A * delta`, which equals
    /// `psi^-1(psi(p) + delta)` and is bit-exact identity for zero displacements.
    pub fn deform_point(&self, p: &Point3<T>) -> Point3<T> {
        let r = self.to_reference(p);
        if !inside_unit_box(&r) {
            return *p;
        }
        p + self.axes * self.blended_displacement(&r)
    }

    /// Maps every vertex; connectivity and fields are carried over.
    pub fn deform_mesh(&self, mesh: &TriMesh<T>) -> TriMesh<T> {
        let moved: Vec<Point3<T>> = mesh
            .vertices()
            .par_iter()
            .map(|p| self.deform_point(p))
            .collect();
        mesh.with_vertices(moved).expect("same vertex count")
    }

    /// Copy of the lattice with `weight * mu[param]` added at every bound entry.
    pub fn apply_parameters(&self, binding: &ParameterBinding<T>, mu: &[T]) -> Result<Self> {
        if mu.len() != binding.dimension() {
            return Err(Error::DimensionMismatch {
                expected: binding.dimension(),
                got: mu.len(),
            });
        }
        binding.check_against(self)?;
        for (j, (&x, &(lo, hi))) in mu.iter().zip(&binding.bounds).enumerate() {
            if x < lo || x > hi {
                warn!("parameter {j} = {x} outside bounds [{lo}, {hi}], evaluating anyway");
            }
        }
        let mut out = self.clone();
        for e in &binding.entries {
            let f = out.flat(e.index)?;
            out.displacements[f][e.axis] += e.weight * mu[e.param];
        }
        Ok(out)
    }
}

fn inside_unit_box<T: Real>(r: &Vector3<T>) -> bool {
    r.iter().all(|&c| c >= T::zero() && c <= T::one())
}

/// All Bernstein basis polynomials of the given degree evaluated at `x`.
pub fn bernstein_all<T: Real>(degree: usize, x: T) -> Vec<T> {
    let one_minus = T::one() - x;
    let mut out = Vec::with_capacity(degree + 1);
    let mut binom = 1.0f64;
    for i in 0..=degree {
        out.push(T::lit(binom) * x.powi(i as i32) * one_minus.powi((degree - i) as i32));
        binom = binom * (degree - i) as f64 / (i + 1) as f64;
    }
    out
}

impl<T: Real> ParameterBinding<T> {
    pub fn new(entries: Vec<BindingEntry<T>>, bounds: Vec<(T, T)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Config("binding needs at least one parameter".into()));
        }
        if let Some((j, _)) = bounds
            .iter()
            .enumerate()
            .find(|(_, (lo, hi))| !(lo <= hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::Config(format!("parameter {j} has an empty or non-finite interval")));
        }
        if let Some(e) = entries.iter().find(|e| e.axis > 2 || e.param >= bounds.len()) {
            return Err(Error::Config(format!(
                "binding entry {:?} axis {} param {} invalid for {} parameters",
                e.index,
                e.axis,
                e.param,
                bounds.len()
            )));
        }
        Ok(Self { entries, bounds })
    }

    /// Uniform box `[lo, hi]^m`.
    pub fn with_uniform_bounds(entries: Vec<BindingEntry<T>>, m: usize, lo: T, hi: T) -> Result<Self> {
        Self::new(entries, vec![(lo, hi); m])
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(T, T)] {
        &self.bounds
    }

    pub fn entries(&self) -> &[BindingEntry<T>] {
        &self.entries
    }

    /// Checks every referenced control point exists in `lattice`.
    pub fn check_against(&self, lattice: &FfdLattice<T>) -> Result<()> {
        for e in &self.entries {
            lattice.flat(e.index)?;
        }
        Ok(())
    }
}

/// Draws `n` parameter vectors inside the binding bounds, deterministic in `seed`.
pub fn sample_parameters<T: Real>(
    binding: &ParameterBinding<T>,
    n: usize,
    scheme: SamplingScheme,
    seed: u64,
) -> Vec<Vec<T>> {
    let m = binding.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit: Vec<Vec<f64>> = match scheme {
        SamplingScheme::UniformRandom => (0..n)
            .map(|_| (0..m).map(|_| rng.random::<f64>()).collect())
            .collect(),
        SamplingScheme::LatinHypercube => {
            let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
            for _ in 0..m {
                let mut strata: Vec<usize> = (0..n).collect();
                // Fisher-Yates
                for i in (1..n).rev() {
                    let j = rng.random_range(0..=i);
                    strata.swap(i, j);
                }
                cols.push(
                    strata
                        .iter()
                        .map(|&s| (s as f64 + rng.random::<f64>()) / n as f64)
                        .collect(),
                );
            }
            (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
        }
    };
    unit.into_iter()
        .map(|u| {
            u.iter()
                .zip(binding.bounds())
                .map(|(&x, &(lo, hi))| lo + (hi - lo) * T::lit(x))
                .collect()
        })
        .collect()
}

// ---- JSON document -------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DisplacementEntry {
    pub index: [usize; 3],
    pub value: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BindingDocument {
    pub entries: Vec<BindingEntry<f64>>,
    pub bounds: Vec<[f64; 2]>,
}

/// Serialized lattice plus optional parameter binding.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeDocument {
    pub origin: [f64; 3],
    /// Row vectors, one per lattice direction.
    pub axes: [[f64; 3]; 3],
    pub counts: [usize; 3],
    #[serde(default)]
    pub displacements: Vec<DisplacementEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<BindingDocument>,
}

impl LatticeDocument {
    pub fn from_parts<T: Real>(lattice: &FfdLattice<T>, binding: Option<&ParameterBinding<T>>) -> Self {
        let o = lattice.origin();
        let axes = lattice.axes().map(|a| [a.x.as_f64(), a.y.as_f64(), a.z.as_f64()]);
        let displacements = lattice
            .displacements()
            .filter(|(_, d)| d.iter().any(|c| *c != T::zero()))
            .map(|(index, d)| DisplacementEntry {
                index,
                value: [d.x.as_f64(), d.y.as_f64(), d.z.as_f64()],
            })
            .collect();
        let binding = binding.map(|b| BindingDocument {
            entries: b
                .entries()
                .iter()
                .map(|e| BindingEntry {
                    index: e.index,
                    axis: e.axis,
                    param: e.param,
                    weight: e.weight.as_f64(),
                })
                .collect(),
            bounds: b.bounds().iter().map(|&(lo, hi)| [lo.as_f64(), hi.as_f64()]).collect(),
        });
        Self {
            origin: [o.x.as_f64(), o.y.as_f64(), o.z.as_f64()],
            axes,
            counts: lattice.counts(),
            displacements,
            binding,
        }
    }

    pub fn lattice<T: Real>(&self) -> Result<FfdLattice<T>> {
        let v = |a: [f64; 3]| Vector3::new(T::lit(a[0]), T::lit(a[1]), T::lit(a[2]));
        let o = self.origin;
        let mut lattice = FfdLattice::new(
            Point3::new(T::lit(o[0]), T::lit(o[1]), T::lit(o[2])),
            self.axes.map(v),
            self.counts,
        )?;
        for d in &self.displacements {
            lattice.set_displacement(d.index, v(d.value))?;
        }
        Ok(lattice)
    }

    pub fn binding<T: Real>(&self) -> Result<Option<ParameterBinding<T>>> {
        let Some(b) = &self.binding else { return Ok(None) };
        let entries = b
            .entries
            .iter()
            .map(|e| BindingEntry {
                index: e.index,
                axis: e.axis,
                param: e.param,
                weight: T::lit(e.weight),
            })
            .collect();
        let bounds = b.bounds.iter().map(|&[lo, hi]| (T::lit(lo), T::lit(hi))).collect();
        ParameterBinding::new(entries, bounds).map(Some)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Loads a lattice document and checks its binding against it.
pub fn load_lattice<T: Real>(path: &Path) -> Result<(FfdLattice<T>, Option<ParameterBinding<T>>)> {
    let doc = LatticeDocument::load(path)?;
    let lattice = doc.lattice()?;
    let binding = doc.binding()?;
    if let Some(b) = &binding {
        b.check_against(&lattice)?;
    }
    Ok((lattice, binding))
}

/// Lattice around the bow of [`crate::geometry::shapes::demo_hull`] with an
/// eight-parameter binding on interior control points, bounds `[-0.3, 0.3]`.
/// The outer layer of control points on every face stays fixed.
pub fn demo_lattice<T: Real>() -> (FfdLattice<T>, ParameterBinding<T>) {
    let p = |x: f64, y: f64, z: f64| Point3::new(T::lit(x), T::lit(y), T::lit(z));
    let lattice = FfdLattice::from_box(p(0.5, -0.32, -0.26), p(1.06, 0.32, 0.2), [5, 5, 5])
        .expect("valid demo box");
    // metres of control-point travel per unit parameter
    let scale = 0.2;
    let e = |index: [usize; 3], axis: usize, param: usize, weight: f64| BindingEntry {
        index,
        axis,
        param,
        weight: T::lit(scale * weight),
    };
    let entries = vec![
        // bulb length and height
        e([3, 2, 1], 0, 0, 1.0),
        e([3, 2, 1], 2, 1, 1.0),
        e([2, 2, 1], 2, 2, 1.0),
        // bulb breadth, symmetric about the centre plane
        e([3, 1, 1], 1, 3, -1.0),
        e([3, 3, 1], 1, 3, 1.0),
        e([2, 1, 1], 1, 4, -1.0),
        e([2, 3, 1], 1, 4, 1.0),
        // upper stem rake
        e([3, 2, 2], 0, 5, 1.0),
        e([1, 2, 1], 2, 6, 1.0),
        e([3, 2, 3], 0, 7, 1.0),
    ];
    let binding = ParameterBinding::with_uniform_bounds(entries, 8, T::lit(-0.3), T::lit(0.3))
        .expect("valid demo binding");
    (lattice, binding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::icosphere;

    fn unit_lattice(counts: [usize; 3]) -> FfdLattice<f64> {
        FfdLattice::from_box(Point3::origin(), Point3::new(1.0, 1.0, 1.0), counts).unwrap()
    }

    #[test]
    fn reference_map_corners() {
        let lat = FfdLattice::new(
            Point3::new(1.0, 2.0, 3.0),
            [
                Vector3::new(2.0, 0.0, 0.0),
                Vector3::new(0.5, 1.0, 0.0),
                Vector3::new(0.0, 0.3, 4.0),
            ],
            [3, 2, 2],
        )
        .unwrap();
        assert_eq!(lat.to_reference(&Point3::new(1.0, 2.0, 3.0)), Vector3::zeros());
        let far = Point3::new(1.0 + 2.5, 2.0 + 1.3, 3.0 + 4.0);
        let r = lat.to_reference(&far);
        assert!((r - Vector3::new(1.0, 1.0, 1.0)).norm() < 1e-15);
        assert!((lat.to_physical(&r) - far).norm() < 1e-12);
        let unit = unit_lattice([2, 2, 2]);
        assert_eq!(
            unit.to_reference(&Point3::new(0.25, 0.5, 0.75)),
            Vector3::new(0.25, 0.5, 0.75)
        );
    }

    #[test]
    fn rejects_bad_lattices() {
        let axes = [Vector3::x(), Vector3::y(), Vector3::x() * 2.0];
        assert!(matches!(
            FfdLattice::<f64>::new(Point3::origin(), axes, [2, 2, 2]),
            Err(Error::Singular(_))
        ));
        assert!(matches!(
            FfdLattice::<f64>::new(Point3::origin(), [Vector3::x(), Vector3::y(), Vector3::z()], [1, 2, 2]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn bernstein_basis_values() {
        let b = bernstein_all(2, 0.5f64);
        assert_eq!(b, vec![0.25, 0.5, 0.25]);
        let b = bernstein_all(1, 0.3f64);
        assert!((b[0] - 0.7).abs() < 1e-16 && (b[1] - 0.3).abs() < 1e-16);
    }

    #[test]
    fn trilinear_midpoint_weight() {
        let mut lat = unit_lattice([2, 2, 2]);
        let delta = 0.4;
        lat.set_displacement([1, 1, 1], Vector3::new(delta, 0.0, 0.0)).unwrap();
        let q = lat.deform_point(&Point3::new(0.5, 0.5, 0.5));
        assert!((q - Point3::new(0.5 + delta / 8.0, 0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn outside_points_are_fixed() {
        let mut lat = unit_lattice([3, 3, 3]);
        lat.set_displacement([1, 1, 1], Vector3::new(0.2, -0.1, 0.3)).unwrap();
        let p = Point3::new(1.5, 0.0, 0.0);
        assert_eq!(lat.deform_point(&p), p);
    }

    #[test]
    fn apply_parameters_accumulates() {
        let lat = unit_lattice([3, 3, 3]);
        let single = ParameterBinding::with_uniform_bounds(
            vec![BindingEntry { index: [1, 1, 1], axis: 1, param: 0, weight: 1.0 }],
            1,
            -0.3,
            0.3,
        )
        .unwrap();
        let moved = lat.apply_parameters(&single, &[0.3]).unwrap();
        assert_eq!(moved.displacement([1, 1, 1]).unwrap().y, 0.3);
        let zero = lat.apply_parameters(&single, &[0.0]).unwrap();
        assert_eq!(zero, lat);

        let double = ParameterBinding::with_uniform_bounds(
            vec![
                BindingEntry { index: [1, 1, 1], axis: 1, param: 0, weight: 1.0 },
                BindingEntry { index: [1, 1, 1], axis: 1, param: 1, weight: 0.5 },
            ],
            2,
            -0.3,
            0.3,
        )
        .unwrap();
        let both = lat.apply_parameters(&double, &[0.2, 0.1]).unwrap();
        assert!((both.displacement([1, 1, 1]).unwrap().y - 0.25).abs() < 1e-16);
        assert!(matches!(
            lat.apply_parameters(&double, &[0.2]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn out_of_bounds_parameters_still_evaluate() {
        let lat = unit_lattice([3, 3, 3]);
        let b = ParameterBinding::with_uniform_bounds(
            vec![BindingEntry { index: [1, 1, 1], axis: 0, param: 0, weight: 1.0 }],
            1,
            -0.3,
            0.3,
        )
        .unwrap();
        let moved = lat.apply_parameters(&b, &[0.9]).unwrap();
        assert_eq!(moved.displacement([1, 1, 1]).unwrap().x, 0.9);
    }

    #[test]
    fn binding_outside_lattice_rejected() {
        let lat = unit_lattice([2, 2, 2]);
        let b = ParameterBinding::with_uniform_bounds(
            vec![BindingEntry { index: [2, 0, 0], axis: 0, param: 0, weight: 1.0 }],
            1,
            -1.0,
            1.0,
        )
        .unwrap();
        assert!(matches!(lat.apply_parameters(&b, &[0.1]), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn mesh_partially_inside() {
        let mut lat = FfdLattice::from_box(
            Point3::new(0.0, -1.5, -1.5),
            Point3::new(1.5, 1.5, 1.5),
            [3, 3, 3],
        )
        .unwrap();
        lat.set_displacement([1, 1, 1], Vector3::new(0.1, 0.05, 0.0)).unwrap();
        let sphere = icosphere::<f64>(2, 1.0);
        let out = lat.deform_mesh(&sphere);
        assert_eq!(out.triangles(), sphere.triangles());
        let mut moved = 0;
        for (p, q) in sphere.vertices().iter().zip(out.vertices()) {
            assert_eq!(*q, lat.deform_point(p));
            if p.x < 0.0 {
                assert_eq!(p, q);
            } else if p != q {
                moved += 1;
            }
        }
        assert!(moved > 0);
    }

    #[test]
    fn sampling_schemes() {
        let b = ParameterBinding::<f64>::with_uniform_bounds(vec![], 8, -0.3, 0.3).unwrap();
        for scheme in [SamplingScheme::UniformRandom, SamplingScheme::LatinHypercube] {
            let s = sample_parameters(&b, 130, scheme, 7);
            assert_eq!(s.len(), 130);
            assert!(s.iter().flatten().all(|&x| (-0.3..=0.3).contains(&x)));
            assert_eq!(s, sample_parameters(&b, 130, scheme, 7));
            assert_ne!(s, sample_parameters(&b, 130, scheme, 8));
        }
        let lhs = sample_parameters(&b, 10, SamplingScheme::LatinHypercube, 1);
        for d in 0..8 {
            let mut strata: Vec<usize> =
                lhs.iter().map(|v| ((v[d] + 0.3) / 0.6 * 10.0).floor() as usize).collect();
            strata.sort();
            assert_eq!(strata, (0..10).collect::<Vec<_>>());
        }
        let zero = ParameterBinding::<f64>::with_uniform_bounds(vec![], 3, 0.0, 0.0).unwrap();
        assert_eq!(
            sample_parameters(&zero, 1, SamplingScheme::UniformRandom, 3),
            vec![vec![0.0; 3]]
        );
    }

    #[test]
    fn document_round_trip() {
        let (mut lat, binding) = demo_lattice::<f64>();
        lat.set_displacement([2, 2, 2], Vector3::new(0.01, 0.0, -0.02)).unwrap();
        let doc = LatticeDocument::from_parts(&lat, Some(&binding));
        let text = serde_json::to_string(&doc).unwrap();
        let back: LatticeDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back.lattice::<f64>().unwrap(), lat);
        assert_eq!(back.binding::<f64>().unwrap().unwrap(), binding);
    }
}
