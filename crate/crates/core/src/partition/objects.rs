use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::SpaceTimePartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Corner,
    Edge,
}

/// Connected set of interface nodes shared by the same spatial subdomains.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricObject {
    pub kind: ObjectKind,
    /// Grid coordinates, sorted lexicographically by `(j, i)`.
    pub nodes: Vec<(usize, usize)>,
    /// Spatial subdomains containing the object, sorted.
    pub neigh: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjectSet {
    pub objects: Vec<GeometricObject>,
    node_object: HashMap<(usize, usize), usize>,
}

impl ObjectSet {
    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn object_of(&self, i: usize, j: usize) -> Option<usize> {
        self.node_object.get(&(i, j)).copied()
    }

    pub fn count(&self, kind: ObjectKind) -> usize {
        self.objects.iter().filter(|o| o.kind == kind).count()
    }

    /// Objects touching spatial subdomain `s`, in global order.
    pub fn objects_of(&self, s: usize) -> impl Iterator<Item = (usize, &GeometricObject)> {
        self.objects.iter().enumerate().filter(move |(_, o)| o.neigh.binary_search(&s).is_ok())
    }

    /// Number of interface nodes (each belongs to exactly one object).
    pub fn interface_node_count(&self) -> usize {
        self.node_object.len()
    }
}

/// Groups the non-Dirichlet interface nodes by their set of neighboring
/// subdomains and splits each group into connected components. Components
/// shared by two subdomains are edges, all others corners.
pub fn classify_objects(partition: &SpaceTimePartition) -> ObjectSet {
    let nx = partition.px() * partition.cells_x();
    let ny = partition.py() * partition.cells_y();
    let mut groups: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
    for j in 1..ny {
        for i in 1..nx {
            let neigh = partition.node_neighbors(i, j);
            if neigh.len() >= 2 {
                groups.entry(neigh).or_default().push((i, j));
            }
        }
    }

    let mut found: Vec<GeometricObject> = Vec::new();
    for (neigh, nodes) in groups {
        let mut component = vec![usize::MAX; nodes.len()];
        let index: HashMap<(usize, usize), usize> = nodes.iter().enumerate().map(|(k, n)| (*n, k)).collect();
        for start in 0..nodes.len() {
            if component[start] != usize::MAX {
                continue;
            }
            let mut members = Vec::new();
            let mut stack = vec![start];
            component[start] = start;
            while let Some(k) = stack.pop() {
                members.push(nodes[k]);
                let (i, j) = nodes[k];
                let adjacent = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
                for n in adjacent {
                    if let Some(&m) = index.get(&n) {
                        if component[m] == usize::MAX {
                            component[m] = start;
                            stack.push(m);
                        }
                    }
                }
            }
            members.sort_by_key(|&(i, j)| (j, i));
            let kind = if neigh.len() == 2 { ObjectKind::Edge } else { ObjectKind::Corner };
            found.push(GeometricObject { kind, nodes: members, neigh: neigh.clone() });
        }
    }
    found.sort_by(|a, b| (a.nodes[0].1, a.nodes[0].0).cmp(&(b.nodes[0].1, b.nodes[0].0)));

    let mut node_object = HashMap::new();
    for (k, o) in found.iter().enumerate() {
        for n in &o.nodes {
            node_object.insert(*n, k);
        }
    }
    ObjectSet { objects: found, node_object }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::SpaceTimeMesh;

    fn objects(n: usize, px: usize, py: usize) -> ObjectSet {
        let mesh = SpaceTimeMesh::unit_square(n, 1.0, 1).unwrap();
        classify_objects(&SpaceTimePartition::new(&mesh, px, py, 1).unwrap())
    }

    #[test]
    fn single_subdomain_has_no_objects() {
        assert!(objects(6, 1, 1).is_empty());
    }

    #[test]
    fn three_by_one_gives_two_edges() {
        let o = objects(6, 3, 1);
        assert_eq!(o.count(ObjectKind::Edge), 2);
        assert_eq!(o.count(ObjectKind::Corner), 0);
        assert!(o.objects.iter().all(|e| e.nodes.len() == 5));
    }

    #[test]
    fn two_by_two_gives_corner_and_four_edges() {
        let o = objects(8, 2, 2);
        assert_eq!(o.count(ObjectKind::Corner), 1);
        assert_eq!(o.count(ObjectKind::Edge), 4);
        let corner = o.objects.iter().find(|c| c.kind == ObjectKind::Corner).unwrap();
        assert_eq!(corner.nodes, vec![(4, 4)]);
        assert_eq!(corner.neigh, vec![0, 1, 2, 3]);
        assert!(o.objects.iter().filter(|e| e.kind == ObjectKind::Edge).all(|e| e.neigh.len() == 2 && e.nodes.len() == 3));
    }

    #[test]
    fn interface_nodes_partitioned() {
        let o = objects(12, 3, 4);
        let total: usize = o.objects.iter().map(|x| x.nodes.len()).sum();
        assert_eq!(total, o.interface_node_count());
        // Interior interface lines: 2 vertical and 3 horizontal, 11 interior nodes each, 6 crossings.
        assert_eq!(total, 2 * 11 + 3 * 11 - 6);
        assert_eq!(o.count(ObjectKind::Corner), 2 * 3);
        assert_eq!(o.count(ObjectKind::Edge), 2 * 4 + 3 * 3);
    }
}
