//! Components of the backbone left after removing a clique.
//!
//! A component is named by its smallest vertex. Names are only meaningful
//! relative to the separator that produced them.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{BackboneTree, Clique, Vertex};

/// Connected components of `H - separator`, ordered by their smallest vertex.
#[derive(Clone, Debug)]
pub struct ComponentMap {
    separator: Clique,
    components: Vec<Vec<Vertex>>,
    component_of: Vec<Option<usize>>,
}

impl ComponentMap {
    pub fn separator(&self) -> &Clique {
        &self.separator
    }

    pub fn components(&self) -> &[Vec<Vertex>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Canonical ids, ascending.
    pub fn ids(&self) -> Vec<Vertex> {
        self.components.iter().map(|c| c[0]).collect()
    }

    pub fn component(&self, index: usize) -> &[Vertex] {
        &self.components[index]
    }

    pub fn index_of_vertex(&self, v: Vertex) -> Option<usize> {
        self.component_of.get(v).copied().flatten()
    }

    pub fn index_of_id(&self, id: Vertex) -> Option<usize> {
        self.index_of_vertex(id).filter(|&i| self.components[i][0] == id)
    }

    pub fn all_ids(&self) -> IdSet {
        IdSet(self.ids())
    }
}

/// A set of canonical component ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IdSet(Vec<Vertex>);

impl IdSet {
    pub fn new(ids: impl IntoIterator<Item = Vertex>) -> Self {
        let mut v: Vec<Vertex> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        IdSet(v)
    }

    pub fn ids(&self) -> &[Vertex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: Vertex) -> bool {
        self.0.binary_search(&id).is_ok()
    }
}

/// Partitions `V \ sep` into the connected components of `H - sep`.
pub fn separate(h: &BackboneTree, sep: &Clique) -> ComponentMap {
    let n = h.n();
    let mut blocked = vec![false; n];
    for v in sep.iter().filter(|&v| v < n) {
        blocked[v] = true;
    }
    let mut component_of = vec![None; n];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if blocked[start] || component_of[start].is_some() {
            continue;
        }
        let index = components.len();
        let mut members = vec![start];
        component_of[start] = Some(index);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &w in h.neighbors(u) {
                if !blocked[w] && component_of[w].is_none() {
                    component_of[w] = Some(index);
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    ComponentMap { separator: sep.clone(), components, component_of }
}

/// Upper bound on the number of components a (k+1)-set can cut a tree of
/// maximum degree `d` into.
pub fn component_count_bound(d: usize, k: usize) -> usize {
    d * (k + 1) - k
}

/// Whether `drop` can leave the clique when descending into `region`: it must
/// have no backbone neighbour there, since that edge could never be created later.
pub fn feasible_drop(h: &BackboneTree, parent: &Clique, drop: Vertex, region: &[Vertex]) -> bool {
    debug_assert!(parent.contains(drop));
    h.neighbors(drop).iter().all(|u| !region.contains(u))
}

pub(crate) fn feasible_drop_in(h: &BackboneTree, drop: Vertex, in_region: &[bool]) -> bool {
    h.neighbors(drop).iter().all(|&u| !in_region[u])
}

/// Ids of the components of `H - child` that lie inside `region \ {pivot}`.
///
/// Fails with [`Error::InconsistentPartition`] when those components do not
/// exactly cover `region \ {pivot}`.
pub fn child_id_set(h: &BackboneTree, child: &Clique, region: &[Vertex], pivot: Vertex) -> Result<IdSet> {
    let map = separate(h, child);
    let mut in_region = vec![false; h.n()];
    for &v in region {
        in_region[v] = true;
    }
    let mask = child_mask(&map, &in_region, region.len(), pivot, true)?;
    Ok(IdSet(mask_indices(mask).map(|i| map.component(i)[0]).collect()))
}

/// Same as [`child_id_set`] but returns a bitmask over `map`'s component indices.
///
/// With `exact` false only component minima and the covered size are checked,
/// which is O(components) rather than O(n). That is enough once the drop is
/// feasible: a component of `H - child` that meets the region cannot leave it,
/// because every backbone path out of the region passes through the parent and
/// the dropped vertex has no neighbour inside.
pub(crate) fn child_mask(map: &ComponentMap, in_region: &[bool], region_len: usize, pivot: Vertex, exact: bool) -> Result<u64> {
    if map.len() > 64 {
        return Err(Error::InstanceTooLarge(format!(
            "separator {} leaves {} backbone components (at most 64 supported)",
            map.separator(),
            map.len()
        )));
    }
    let inconsistent = || Error::InconsistentPartition { child: map.separator().members().to_vec() };
    let mut mask = 0u64;
    let mut covered = 0;
    for (i, comp) in map.components().iter().enumerate() {
        if !in_region[comp[0]] || comp[0] == pivot {
            continue;
        }
        if exact && comp.iter().any(|&v| !in_region[v]) {
            return Err(inconsistent());
        }
        mask |= 1 << i;
        covered += comp.len();
    }
    if covered + 1 != region_len {
        return Err(inconsistent());
    }
    Ok(mask)
}

pub(crate) fn mask_indices(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}
