//! Triangulated surfaces, plain-text mesh I/O and the surface integrals used
//! on hulls: pressure force, enclosed volume and the ITTC-57 friction line.

mod io;
pub mod shapes;

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Matrix3, Vector3};

pub use self::io::{load_mesh, load_scalar_field_csv, mesh_to_string, save_mesh, MeshFormat};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Point3<T> = nalgebra::Point3<T>;

/// Indexed triangle surface with optional per-vertex fields.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh<T: Real> {
    vertices: Vec<Point3<T>>,
    triangles: Vec<[usize; 3]>,
    scalar_fields: BTreeMap<String, Vec<T>>,
    vector_fields: BTreeMap<String, Vec<Vector3<T>>>,
}

/// Net surface force and its X component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForceResult<T: Real> {
    pub force: Vector3<T>,
    pub resistance: T,
}

impl<T: Real> TriMesh<T> {
    /// Builds a mesh, checking that every triangle index refers to a vertex.
    pub fn new(vertices: Vec<Point3<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some((t, tri)) = triangles
            .iter()
            .enumerate()
            .find(|(_, tri)| tri.iter().any(|&i| i >= n))
        {
            return Err(Error::IndexOutOfRange(format!(
                "triangle {t} references {tri:?} but the mesh has {n} vertices"
            )));
        }
        Ok(Self {
            vertices,
            triangles,
            scalar_fields: BTreeMap::new(),
            vector_fields: BTreeMap::new(),
        })
    }

    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            triangles: Vec::new(),
            scalar_fields: BTreeMap::new(),
            vector_fields: BTreeMap::new(),
        }
    }

    /// Checks coordinates are finite and no triangle has zero area.
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self
            .vertices
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::NonFinite(format!("vertex {i} has a non-finite coordinate")));
        }
        let degenerate: Vec<usize> = (0..self.triangles.len())
            .filter(|&t| self.is_degenerate(t))
            .collect();
        if !degenerate.is_empty() {
            let shown: Vec<String> = degenerate.iter().take(10).map(|t| t.to_string()).collect();
            return Err(Error::DegenerateTriangle(format!(
                "{} zero-area triangle(s), first: {}",
                degenerate.len(),
                shown.join(", ")
            )));
        }
        Ok(())
    }

    fn is_degenerate(&self, t: usize) -> bool {
        let [a, b, c] = self.corners(t);
        let e1 = b - a;
        let e2 = c - a;
        let scale = e1.norm() * e2.norm();
        e1.cross(&e2).norm() <= T::eps() * scale || scale == T::zero()
    }

    pub fn vertices(&self) -> &[Point3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point3<T>; 3] {
        let [i, j, k] = self.triangles[t];
        [self.vertices[i], self.vertices[j], self.vertices[k]]
    }

    /// Attaches a named per-vertex scalar field.
    pub fn set_scalar_field(&mut self, name: impl Into<String>, values: Vec<T>) -> Result<()> {
        if values.len() != self.vertices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vertices.len(),
                got: values.len(),
            });
        }
        self.scalar_fields.insert(name.into(), values);
        Ok(())
    }

    pub fn with_scalar_field(mut self, name: impl Into<String>, values: Vec<T>) -> Result<Self> {
        self.set_scalar_field(name, values)?;
        Ok(self)
    }

    pub fn scalar_field(&self, name: &str) -> Option<&[T]> {
        self.scalar_fields.get(name).map(Vec::as_slice)
    }

    pub fn set_vector_field(
        &mut self,
        name: impl Into<String>,
        values: Vec<Vector3<T>>,
    ) -> Result<()> {
        if values.len() != self.vertices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vertices.len(),
                got: values.len(),
            });
        }
        self.vector_fields.insert(name.into(), values);
        Ok(())
    }

    pub fn vector_field(&self, name: &str) -> Option<&[Vector3<T>]> {
        self.vector_fields.get(name).map(Vec::as_slice)
    }

    /// Same connectivity and fields, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point3<T>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vertices.len(),
                got: vertices.len(),
            });
        }
        Ok(Self {
            vertices,
            ..self.clone()
        })
    }

    /// Applies `x -> rotation * x + translation` to every vertex.
    pub fn transformed(&self, rotation: &Matrix3<T>, translation: &Vector3<T>) -> Self {
        let vertices = self
            .vertices
            .iter()
            .map(|p| Point3::from(rotation * p.coords + translation))
            .collect();
        Self {
            vertices,
            ..self.clone()
        }
    }

    pub fn translated(&self, offset: &Vector3<T>) -> Self {
        self.transformed(&Matrix3::identity(), offset)
    }

    /// Reverses the winding of every triangle.
    pub fn flipped(&self) -> Self {
        Self {
            triangles: self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            ..self.clone()
        }
    }

    /// Area-weighted normal `0.5 * (b - a) x (c - a)` of triangle `t`.
    pub fn area_vector(&self, t: usize) -> Vector3<T> {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a)) * T::lit(0.5)
    }

    pub fn surface_area(&self) -> T {
        (0..self.triangles.len()).fold(T::zero(), |acc, t| acc + self.area_vector(t).norm())
    }

    pub fn max_edge_length(&self) -> T {
        let mut h = T::zero();
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.corners(t);
            h = h.max((b - a).norm()).max((c - b).norm()).max((a - c).norm());
        }
        h
    }

    /// Axis-aligned bounding box, `None` for a mesh without vertices.
    pub fn bounding_box(&self) -> Option<(Point3<T>, Point3<T>)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), p| {
            (lo.inf(p), hi.sup(p))
        }))
    }

    /// Number of undirected edges not shared by exactly two oppositely
    /// oriented triangles.
    pub fn boundary_edge_count(&self) -> usize {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for &[a, b, c] in &self.triangles {
            for e in [(a, b), (b, c), (c, a)] {
                *directed.entry(e).or_insert(0) += 1;
            }
        }
        let mut bad = 0;
        for (&(a, b), &count) in &directed {
            let reverse = directed.get(&(b, a)).copied().unwrap_or(0);
            if a < b || reverse == 0 {
                if count != 1 || reverse != 1 {
                    bad += 1;
                }
            }
        }
        bad
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edge_count() == 0
    }

    /// One-to-four midpoint subdivision; shared edges get a single midpoint.
    /// Scalar and vector fields are interpolated linearly.
    pub fn subdivided(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut parents: Vec<(usize, usize)> = Vec::new();
        let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
        let half = T::lit(0.5);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point3<T>>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                vertices.push(Point3::from((vertices[a].coords + vertices[b].coords) * half));
                parents.push(key);
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let scalar_fields = self
            .scalar_fields
            .iter()
            .map(|(k, v)| {
                let mut out = v.clone();
                out.extend(parents.iter().map(|&(a, b)| (v[a] + v[b]) * half));
                (k.clone(), out)
            })
            .collect();
        let vector_fields = self
            .vector_fields
            .iter()
            .map(|(k, v)| {
                let mut out = v.clone();
                out.extend(parents.iter().map(|&(a, b)| (v[a] + v[b]) * half));
                (k.clone(), out)
            })
            .collect();
        Self {
            vertices,
            triangles,
            scalar_fields,
            vector_fields,
        }
    }
}

/// Integrates `p n dA` over the surface with the one-point rule: each triangle
/// contributes the mean of its vertex pressures times its area vector.
///
/// `n` is the unit normal given by the triangle winding (outward for a
/// consistently oriented closed surface). The resistance is the X component.
pub fn integrate_pressure_force<T: Real>(mesh: &TriMesh<T>, field: &str) -> Result<ForceResult<T>> {
    let p = mesh
        .scalar_field(field)
        .ok_or_else(|| Error::MissingField(field.to_string()))?;
    let third = T::one() / T::lit(3.0);
    let mut force = Vector3::zeros();
    for (t, &[i, j, k]) in mesh.triangles().iter().enumerate() {
        let mean = (p[i] + p[j] + p[k]) * third;
        force += mesh.area_vector(t) * mean;
    }
    Ok(ForceResult {
        force,
        resistance: force.x,
    })
}

/// Volume enclosed by a closed, consistently oriented surface, via the
/// divergence theorem: `(1/3) * sum(centroid . n * area)`.
///
/// Positive for outward orientation, negative for inward.
pub fn enclosed_volume<T: Real>(mesh: &TriMesh<T>) -> Result<T> {
    let boundary_edges = mesh.boundary_edge_count();
    if boundary_edges > 0 {
        return Err(Error::OpenMesh { boundary_edges });
    }
    let third = T::one() / T::lit(3.0);
    let mut volume = T::zero();
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.corners(t);
        let centroid = (a.coords + b.coords + c.coords) * third;
        volume += centroid.dot(&mesh.area_vector(t));
    }
    Ok(volume * third)
}

/// Centroid of the enclosed volume (center of buoyancy for a fully immersed body).
pub fn volume_centroid<T: Real>(mesh: &TriMesh<T>) -> Result<Point3<T>> {
    let boundary_edges = mesh.boundary_edge_count();
    if boundary_edges > 0 {
        return Err(Error::OpenMesh { boundary_edges });
    }
    // signed tetrahedra against the origin
    let mut volume = T::zero();
    let mut moment = Vector3::zeros();
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.corners(t);
        let v = a.coords.dot(&b.coords.cross(&c.coords)) / T::lit(6.0);
        volume += v;
        moment += (a.coords + b.coords + c.coords) * (v / T::lit(4.0));
    }
    if volume == T::zero() {
        return Err(Error::Domain("zero enclosed volume".into()));
    }
    Ok(Point3::from(moment / volume))
}

/// ITTC-57 model-ship correlation line, `0.075 / (log10 Re - 2)^2`.
pub fn ittc57_coefficient<T: Real>(reynolds: T) -> Result<T> {
    if !(reynolds > T::lit(100.0)) {
        return Err(Error::Domain(format!(
            "ITTC-57 needs Re > 100, got {reynolds}"
        )));
    }
    let d = reynolds.log10() - T::lit(2.0);
    Ok(T::lit(0.075) / (d * d))
}

/// Frictional drag `0.5 rho V^2 S C_f` with the ITTC-57 coefficient.
pub fn ittc57_drag<T: Real>(reynolds: T, density: T, speed: T, wetted_area: T) -> Result<T> {
    let cf = ittc57_coefficient(reynolds)?;
    for (name, v) in [("density", density), ("speed", speed), ("wetted area", wetted_area)] {
        if !(v > T::zero()) {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(T::lit(0.5) * density * speed * speed * wetted_area * cf)
}
