//! Uniform Cartesian background mesh split into tetrahedra.
//!
//! Every cube of the `N x N x N` grid is cut into five tetrahedra: four
//! trirectangular corner tets and one regular central tet. The split is
//! mirrored on cubes of odd index parity so that the face diagonals of
//! neighbouring cubes coincide.
//!
//! Orientation conventions:
//! * an edge `[a, b]` is stored with `a < b`; its tangent points from `a` to `b`;
//! * a face `[a, b, c]` is stored ascending; its normal is `(z_b - z_a) x (z_c - z_a)`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::Vec3;

/// Local edges of a tet as pairs of local vertex indices.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local faces of a tet; face `i` is opposite local vertex `i`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Local edges bounding each local face.
pub const FACE_EDGES: [[usize; 3]; 4] = [[3, 4, 5], [1, 2, 5], [0, 2, 4], [0, 1, 3]];

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl BoxDomain {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Self {
        Self {
            lo: Vec3::from(lo),
            hi: Vec3::from(hi),
        }
    }

    /// The cube `(-1, 1)^3`.
    pub fn symmetric_unit() -> Self {
        Self::new([-1.0; 3], [1.0; 3])
    }

    pub fn unit() -> Self {
        Self::new([0.0; 3], [1.0; 3])
    }

    pub fn extents(&self) -> Vec3 {
        self.hi - self.lo
    }

    pub fn volume(&self) -> f64 {
        let e = self.extents();
        e.x * e.y * e.z
    }
}

/// Cube splitting scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    /// Five tetrahedra per cube, no extra nodes.
    TypeI,
    /// 24 tetrahedra with face and cell centre nodes. Not supported.
    TypeII,
}

/// Shape class of a tetrahedron in the Type I split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TetShape {
    Trirectangular,
    Regular,
}

/// Tetrahedral mesh with oriented incidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub n: usize,
    pub domain: BoxDomain,
    pub h: f64,
    pub nodes: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub shapes: Vec<TetShape>,
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<[usize; 3]>,
    pub tet_edges: Vec<[usize; 6]>,
    pub tet_edge_signs: Vec<[i8; 6]>,
    pub tet_faces: Vec<[usize; 4]>,
    pub tet_face_signs: Vec<[i8; 4]>,
    pub boundary_nodes: Vec<bool>,
    pub boundary_edges: Vec<bool>,
    pub boundary_faces: Vec<bool>,
    /// Tets incident to each node.
    pub node_tets: Vec<Vec<usize>>,
    /// One or two tets per face.
    pub face_tets: Vec<Vec<usize>>,
}

// Corner numbering inside a cube: bit 0 = x, bit 1 = y, bit 2 = z.
const EVEN_CENTRAL: [usize; 4] = [0, 3, 5, 6];
const ODD_CENTRAL: [usize; 4] = [1, 2, 4, 7];
const EVEN_CORNERS: [[usize; 4]; 4] = [[1, 0, 3, 5], [2, 0, 3, 6], [4, 0, 5, 6], [7, 3, 5, 6]];
const ODD_CORNERS: [[usize; 4]; 4] = [[0, 1, 2, 4], [3, 1, 2, 7], [5, 1, 4, 7], [6, 2, 4, 7]];

/// Signed volume of the tet `(a, b, c, d)`.
pub fn signed_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

/// Builds the background mesh with `n` cubes per axis and the Type I split.
pub fn build_background_mesh(n: usize, domain: BoxDomain) -> Result<Mesh> {
    build_background_mesh_with(n, domain, Split::TypeI)
}

pub fn build_background_mesh_with(n: usize, domain: BoxDomain, split: Split) -> Result<Mesh> {
    if split == Split::TypeII {
        return Err(Error::InvalidArgument(
            "Type II (24-tet) splitting is not supported; use the 5-tet Type I split".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let ext = domain.extents();
    if !(ext.x > 0.0 && ext.y > 0.0 && ext.z > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "box must have positive extents, got {:?}",
            ext.as_slice()
        )));
    }
    let np = n + 1;
    let step = ext / n as f64;
    let h = step.max();

    let node_id = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    let mut nodes = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                nodes.push(domain.lo + Vec3::new(i as f64 * step.x, j as f64 * step.y, k as f64 * step.z));
            }
        }
    }
    // snap the far faces exactly onto the box
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                let p = &mut nodes[node_id(i, j, k)];
                if i == n {
                    p.x = domain.hi.x;
                }
                if j == n {
                    p.y = domain.hi.y;
                }
                if k == n {
                    p.z = domain.hi.z;
                }
            }
        }
    }

    let mut tets = Vec::with_capacity(5 * n * n * n);
    let mut shapes = Vec::with_capacity(5 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let corner = |c: usize| node_id(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                let even = (i + j + k) % 2 == 0;
                let (central, corners) = if even {
                    (EVEN_CENTRAL, EVEN_CORNERS)
                } else {
                    (ODD_CENTRAL, ODD_CORNERS)
                };
                for loc in corners {
                    tets.push(loc.map(corner));
                    shapes.push(TetShape::Trirectangular);
                }
                tets.push(central.map(corner));
                shapes.push(TetShape::Regular);
            }
        }
    }
    for t in tets.iter_mut() {
        let v = signed_volume(&nodes[t[0]], &nodes[t[1]], &nodes[t[2]], &nodes[t[3]]);
        if v < 0.0 {
            t.swap(2, 3);
        }
    }

    // edges
    let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut tet_edges = Vec::with_capacity(tets.len());
    let mut tet_edge_signs = Vec::with_capacity(tets.len());
    for t in &tets {
        let mut ids = [0usize; 6];
        let mut signs = [0i8; 6];
        for (le, [a, b]) in LOCAL_EDGES.iter().enumerate() {
            let (ga, gb) = (t[*a], t[*b]);
            let key = if ga < gb { [ga, gb] } else { [gb, ga] };
            let id = *edge_index.entry(key).or_insert_with(|| {
                edges.push(key);
                edges.len() - 1
            });
            ids[le] = id;
            signs[le] = if ga < gb { 1 } else { -1 };
        }
        tet_edges.push(ids);
        tet_edge_signs.push(signs);
    }

    // faces
    let mut face_index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut faces = Vec::new();
    let mut face_tets: Vec<Vec<usize>> = Vec::new();
    let mut tet_faces = Vec::with_capacity(tets.len());
    let mut tet_face_signs = Vec::with_capacity(tets.len());
    for (ti, t) in tets.iter().enumerate() {
        let mut ids = [0usize; 4];
        let mut signs = [0i8; 4];
        for (lf, verts) in LOCAL_FACES.iter().enumerate() {
            let mut key = verts.map(|v| t[v]);
            key.sort_unstable();
            let id = *face_index.entry(key).or_insert_with(|| {
                faces.push(key);
                face_tets.push(Vec::with_capacity(2));
                faces.len() - 1
            });
            face_tets[id].push(ti);
            ids[lf] = id;
            let [a, b, c] = key.map(|g| nodes[g]);
            let global_normal = (b - a).cross(&(c - a));
            let outward = a - nodes[t[lf]];
            signs[lf] = if global_normal.dot(&outward) > 0.0 { 1 } else { -1 };
        }
        tet_faces.push(ids);
        tet_face_signs.push(signs);
    }

    let on_box = |p: &Vec3| -> u8 {
        let tol = 1e-12 * h;
        let mut mask = 0u8;
        for ax in 0..3 {
            if (p[ax] - domain.lo[ax]).abs() < tol {
                mask |= 1 << (2 * ax);
            }
            if (p[ax] - domain.hi[ax]).abs() < tol {
                mask |= 1 << (2 * ax + 1);
            }
        }
        mask
    };

    let mut boundary_faces = vec![false; faces.len()];
    for (f, owners) in face_tets.iter().enumerate() {
        let common = faces[f].iter().fold(0xffu8, |m, &g| m & on_box(&nodes[g]));
        match owners.len() {
            1 if common != 0 => boundary_faces[f] = true,
            2 if common == 0 => {}
            cnt => {
                return Err(Error::Mesh(format!(
                    "face {:?} is shared by {cnt} tets (on box boundary: {}); adjacent cube splits do not match",
                    faces[f],
                    common != 0
                )))
            }
        }
    }
    let mut boundary_nodes = vec![false; nodes.len()];
    let mut boundary_edges = vec![false; edges.len()];
    for (ti, t) in tets.iter().enumerate() {
        for lf in 0..4 {
            if boundary_faces[tet_faces[ti][lf]] {
                for &v in &LOCAL_FACES[lf] {
                    boundary_nodes[t[v]] = true;
                }
                for &le in &FACE_EDGES[lf] {
                    boundary_edges[tet_edges[ti][le]] = true;
                }
            }
        }
    }

    let mut node_tets = vec![Vec::new(); nodes.len()];
    for (ti, t) in tets.iter().enumerate() {
        for &v in t {
            node_tets[v].push(ti);
        }
    }

    Ok(Mesh {
        n,
        domain,
        h,
        nodes,
        tets,
        shapes,
        edges,
        faces,
        tet_edges,
        tet_edge_signs,
        tet_faces,
        tet_face_signs,
        boundary_nodes,
        boundary_edges,
        boundary_faces,
        node_tets,
        face_tets,
    })
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    /// `V - E + F - T`.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_nodes() as i64 - self.num_edges() as i64 + self.num_faces() as i64
            - self.num_tets() as i64
    }

    pub fn tet_vertices(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|g| self.nodes[g])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tet_vertices(t);
        signed_volume(&a, &b, &c, &d)
    }

    pub fn edge_vector(&self, e: usize) -> Vec3 {
        let [a, b] = self.edges[e];
        self.nodes[b] - self.nodes[a]
    }

    /// Unnormalised global face normal (length = twice the area).
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f].map(|g| self.nodes[g]);
        (b - a).cross(&(c - a))
    }

    /// Sign converting the local orientation of a tet edge to the global one.
    pub fn edge_sign(&self, tet: usize, local_edge: usize) -> i8 {
        self.tet_edge_signs[tet][local_edge]
    }

    /// Sign converting the outward normal of a local face to the global normal.
    pub fn face_sign(&self, tet: usize, local_face: usize) -> i8 {
        self.tet_face_signs[tet][local_face]
    }

    /// Sign of the local edge `from -> to` (local vertex indices) relative to the
    /// stored global edge.
    pub fn incidence_sign(&self, tet: usize, from: usize, to: usize) -> i8 {
        let (ga, gb) = (self.tets[tet][from], self.tets[tet][to]);
        if ga < gb {
            1
        } else {
            -1
        }
    }

    /// Tets sharing at least one node with `tet` (sorted, includes `tet`).
    pub fn collect_entity_patch(&self, tet: usize) -> Vec<usize> {
        let mut patch: Vec<usize> = self.tets[tet]
            .iter()
            .flat_map(|&v| self.node_tets[v].iter().copied())
            .collect();
        patch.sort_unstable();
        patch.dedup();
        patch
    }

    pub fn interior_edges(&self) -> Vec<usize> {
        (0..self.num_edges()).filter(|&e| !self.boundary_edges[e]).collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&v| !self.boundary_nodes[v]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Mesh {
        build_background_mesh(n, BoxDomain::unit()).unwrap()
    }

    #[test]
    fn single_cube_counts() {
        let m = unit(1);
        assert_eq!(m.num_nodes(), 8);
        assert_eq!(m.num_tets(), 5);
        assert_eq!(m.num_edges(), 18);
        assert_eq!(m.num_faces(), 16);
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn two_cube_counts() {
        let m = unit(2);
        assert_eq!(m.num_nodes(), 27);
        assert_eq!(m.num_tets(), 40);
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn volumes_match_shapes() {
        let m = build_background_mesh(3, BoxDomain::symmetric_unit()).unwrap();
        let h3 = m.h.powi(3);
        let mut total = 0.0;
        for t in 0..m.num_tets() {
            let v = m.tet_volume(t);
            assert!(v > 0.0);
            let expect = match m.shapes[t] {
                TetShape::Trirectangular => h3 / 6.0,
                TetShape::Regular => h3 / 3.0,
            };
            assert!((v - expect).abs() < 1e-14 * h3, "tet {t}: {v} vs {expect}");
            total += v;
        }
        assert!((total - 8.0).abs() < 1e-12 * 8.0);
    }

    #[test]
    fn faces_shared_once_or_twice() {
        let m = unit(3);
        for (f, owners) in m.face_tets.iter().enumerate() {
            assert_eq!(owners.len(), if m.boundary_faces[f] { 1 } else { 2 });
        }
    }

    #[test]
    fn interior_face_signs_are_opposite() {
        let m = unit(2);
        for (f, owners) in m.face_tets.iter().enumerate() {
            if owners.len() != 2 {
                continue;
            }
            let sign_of = |t: usize| {
                let lf = m.tet_faces[t].iter().position(|&g| g == f).unwrap();
                m.face_sign(t, lf)
            };
            assert_eq!(sign_of(owners[0]), -sign_of(owners[1]));
        }
    }

    #[test]
    fn edge_signs() {
        let m = unit(1);
        // local traversal a -> b matches stored (a, b)
        for t in 0..m.num_tets() {
            for (le, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                let [ga, gb] = m.edges[m.tet_edges[t][le]];
                let s = m.edge_sign(t, le);
                if m.tets[t][*a] == ga {
                    assert_eq!(s, 1);
                    assert_eq!(m.tets[t][*b], gb);
                } else {
                    assert_eq!(s, -1);
                }
                assert_eq!(m.incidence_sign(t, *a, *b), s);
                assert_eq!(m.incidence_sign(t, *b, *a), -s);
            }
        }
    }

    #[test]
    fn patches() {
        let m = unit(1);
        for t in 0..5 {
            assert_eq!(m.collect_entity_patch(t), vec![0, 1, 2, 3, 4]);
        }
        let m3 = unit(3);
        // central cube (1,1,1) is the 14th cube; its regular tet is the 5th
        let central = 5 * (1 + 3 * (1 + 3)) + 4;
        assert_eq!(m3.shapes[central], TetShape::Regular);
        let p = m3.collect_entity_patch(central);
        assert!(p.len() > 5);
        assert!(p.contains(&central));
    }

    #[test]
    fn deterministic() {
        assert_eq!(unit(3), unit(3));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_background_mesh(0, BoxDomain::unit()).is_err());
        assert!(build_background_mesh(2, BoxDomain::new([0.0; 3], [1.0, 0.0, 1.0])).is_err());
        assert!(build_background_mesh_with(2, BoxDomain::unit(), Split::TypeII).is_err());
    }

    #[test]
    fn boundary_flags() {
        let m = unit(2);
        let nb = m.boundary_nodes.iter().filter(|&&b| b).count();
        assert_eq!(nb, 27 - 1);
        for (e, &b) in m.boundary_edges.iter().enumerate() {
            let [a, c] = m.edges[e];
            if b {
                assert!(m.boundary_nodes[a] && m.boundary_nodes[c]);
            }
        }
    }
}
