//! Procedural closed meshes: cubes, icospheres and the demo hull.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::{Point3, TriMesh};
use crate::scalar::Real;

/// Unit cube `[0,1]^3`, 8 vertices, 12 outward-oriented triangles.
pub fn unit_cube<T: Real>() -> TriMesh<T> {
    axis_box(Point3::origin(), Point3::new(T::one(), T::one(), T::one()))
}

/// Axis-aligned box between two corners, outward winding.
pub fn axis_box<T: Real>(lo: Point3<T>, hi: Point3<T>) -> TriMesh<T> {
    let v = vec![
        Point3::new(lo.x, lo.y, lo.z),
        Point3::new(hi.x, lo.y, lo.z),
        Point3::new(hi.x, hi.y, lo.z),
        Point3::new(lo.x, hi.y, lo.z),
        Point3::new(lo.x, lo.y, hi.z),
        Point3::new(hi.x, lo.y, hi.z),
        Point3::new(hi.x, hi.y, hi.z),
        Point3::new(lo.x, hi.y, hi.z),
    ];
    let t = vec![
        [0, 3, 2],
        [0, 2, 1],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriMesh::new(v, t).expect("static connectivity")
}

/// Icosahedron refined `subdivisions` times with vertices projected on the
/// sphere of the given radius. Level `k` has `20 * 4^k` triangles.
pub fn icosphere<T: Real>(subdivisions: usize, radius: T) -> TriMesh<T> {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut verts: Vec<Vector3<f64>> = raw
        .iter()
        .map(|c| Vector3::new(c[0], c[1], c[2]).normalize())
        .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| -> usize {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        for &[a, b, c] in &tris {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    let r = radius.as_f64();
    let vertices = verts
        .iter()
        .map(|v| Point3::new(T::lit(v.x * r), T::lit(v.y * r), T::lit(v.z * r)))
        .collect();
    TriMesh::new(vertices, tris).expect("icosphere connectivity")
}

/// Closed, slender hull-like body used by the shipped demo campaign.
///
/// A level-3 icosphere stretched to half-length 1 m, half-beam 0.2 m and
/// half-depth 0.15 m, with the forward part fattened slightly below the
/// waterline so the bow has a bulb-like region for the lattice to act on.
pub fn demo_hull<T: Real>() -> TriMesh<T> {
    let sphere = icosphere::<f64>(3, 1.0);
    let vertices = sphere
        .vertices()
        .iter()
        .map(|p| {
            let below = 0.5 * (1.0 - (p.z / 0.3).tanh());
            let bulb = 1.0 + 0.35 * (-((p.x - 0.85) / 0.2).powi(2)).exp() * below;
            let (x, y, z) = (p.x, p.y * 0.2 * bulb, p.z * 0.15 * bulb);
            Point3::new(T::lit(x), T::lit(y), T::lit(z))
        })
        .collect();
    TriMesh::new(vertices, sphere.triangles().to_vec()).expect("hull connectivity")
}
