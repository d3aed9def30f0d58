use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{EcmError, Result};
use crate::fem::shape::{shape_trilinear, jacobian, NODE_XI};
use crate::geometry::hex::{element_volume, unit_cell_geom, UnitCellGeom};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Metal,
    Electrolyte,
}

/// Local node indices of the six faces, outward normals for a positive element.
pub const HEX_FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [2, 3, 7, 6],
    [0, 4, 7, 3],
    [1, 2, 6, 5],
];

#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<[f64; 3]>,
    pub elements: Vec<[usize; 8]>,
    pub regions: Vec<Region>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
}

impl Mesh {
    /// Validates indices and checks that every element is convex enough for
    /// positive corner Jacobians.
    pub fn new(
        nodes: Vec<[f64; 3]>,
        elements: Vec<[usize; 8]>,
        regions: Vec<Region>,
        node_sets: BTreeMap<String, Vec<usize>>,
    ) -> Result<Self> {
        if regions.len() != elements.len() {
            return Err(EcmError::Mesh(format!("{} elements but {} region tags", elements.len(), regions.len())));
        }
        if nodes.iter().flatten().any(|x| !x.is_finite()) {
            return Err(EcmError::Mesh("non-finite node coordinate".into()));
        }
        for (e, conn) in elements.iter().enumerate() {
            if let Some(&bad) = conn.iter().find(|&&n| n >= nodes.len()) {
                return Err(EcmError::Mesh(format!("element {e} references node {bad} of {}", nodes.len())));
            }
        }
        for (name, set) in &node_sets {
            if set.iter().any(|&n| n >= nodes.len()) {
                return Err(EcmError::Mesh(format!("node set {name} references a missing node")));
            }
        }
        let mesh = Self { nodes, elements, regions, node_sets };
        for e in 0..mesh.elements.len() {
            mesh.check_corners(e)?;
        }
        Ok(mesh)
    }

    fn check_corners(&self, e: usize) -> Result<()> {
        let x = self.element_coords(e);
        for xi in NODE_XI {
            let (_, dn) = shape_trilinear(xi);
            let det = jacobian(&x, &dn).determinant();
            if !(det > 0.0) {
                return Err(EcmError::Geometry {
                    element: e,
                    reason: format!("corner Jacobian {det:.3e} at {xi:?}; inverted or non-convex"),
                });
            }
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 3]; 8] {
        self.elements[e].map(|n| self.nodes[n])
    }

    pub fn centroid(&self, e: usize) -> [f64; 3] {
        let mut c = [0.0; 3];
        for n in self.elements[e] {
            for (c, x) in c.iter_mut().zip(self.nodes[n]) {
                *c += x / 8.0;
            }
        }
        c
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        self.node_sets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| EcmError::Mesh(format!("no node set named {name}")))
    }

    /// Elements sharing a full face with each element.
    pub fn face_neighbors(&self) -> Vec<Vec<usize>> {
        let mut owner: HashMap<[usize; 4], usize> = HashMap::new();
        let mut nb = vec![Vec::new(); self.elements.len()];
        for (e, conn) in self.elements.iter().enumerate() {
            for f in HEX_FACES {
                let mut key = f.map(|i| conn[i]);
                key.sort_unstable();
                if let Some(other) = owner.insert(key, e) {
                    nb[e].push(other);
                    nb[other].push(e);
                }
            }
        }
        nb
    }

    /// Faces referenced by exactly one element, as global node quadruples.
    pub fn boundary_faces(&self) -> Vec<[usize; 4]> {
        let mut count: HashMap<[usize; 4], ([usize; 4], usize)> = HashMap::new();
        for conn in &self.elements {
            for f in HEX_FACES {
                let face = f.map(|i| conn[i]);
                let mut key = face;
                key.sort_unstable();
                count.entry(key).or_insert((face, 0)).1 += 1;
            }
        }
        let mut out: Vec<_> = count.into_values().filter(|(_, c)| *c == 1).map(|(f, _)| f).collect();
        out.sort_unstable();
        out
    }

    pub fn volumes(&self) -> Result<Vec<f64>> {
        (0..self.n_elements()).map(|e| element_volume(&self.element_coords(e))).collect()
    }

    pub fn unit_cells(&self) -> Result<Vec<UnitCellGeom>> {
        (0..self.n_elements())
            .map(|e| {
                unit_cell_geom(&self.element_coords(e), 8).map_err(|err| match err {
                    EcmError::Geometry { reason, .. } => EcmError::Geometry { element: e, reason },
                    other => other,
                })
            })
            .collect()
    }

    /// Elements having a face whose four nodes all belong to `set`.
    pub fn elements_on_node_set(&self, set: &[usize]) -> Vec<usize> {
        let mut member = vec![false; self.nodes.len()];
        for &n in set {
            member[n] = true;
        }
        (0..self.elements.len())
            .filter(|&e| HEX_FACES.iter().any(|f| f.iter().all(|&i| member[self.elements[e][i]])))
            .collect()
    }
}
