//! Conforming refinement and coarsening.
//!
//! Segments are split at their midpoint. Triangles use newest-vertex
//! bisection: the refinement edge `(v1, v2)` of `[v0, v1, v2]` is split at
//! `m`, giving children `[m, v0, v1]` and `[m, v2, v0]`. Closure marks the
//! refinement edge of every triangle that has any marked edge, so the
//! result has no hanging nodes.
//!
//! Coarsening merges complete sibling pairs. In 2D the shared midpoint must
//! be removable, i.e. every element around it is a flagged child whose
//! newest vertex is that midpoint; pairs that fail this are left untouched.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Ancestor, SimplicialMesh};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefinementPlan {
    pub refine: BTreeSet<usize>,
    pub coarsen: BTreeSet<usize>,
    /// Refinement of a flagged element may not exceed this level. Closure
    /// bisections in 2D are not capped.
    pub max_level: u32,
}

impl RefinementPlan {
    pub fn refine_all(mesh: &SimplicialMesh, max_level: u32) -> Self {
        RefinementPlan {
            refine: (0..mesh.n_elements()).collect(),
            coarsen: BTreeSet::new(),
            max_level,
        }
    }

    pub fn refine_only(ids: impl IntoIterator<Item = usize>, max_level: u32) -> Self {
        RefinementPlan {
            refine: ids.into_iter().collect(),
            coarsen: BTreeSet::new(),
            max_level,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.refine.is_empty() && self.coarsen.is_empty()
    }
}

/// Applies `plan` and returns the new mesh. Coarsening runs first, then
/// refinement of the (renumbered) refine set.
pub fn refine(mesh: &SimplicialMesh, plan: &RefinementPlan) -> Result<SimplicialMesh> {
    let n = mesh.n_elements();
    if let Some(&e) = plan.refine.iter().chain(&plan.coarsen).find(|&&e| e >= n) {
        return Err(Error::InvalidPlan(format!("element {e} does not exist")));
    }
    if let Some(e) = plan.refine.intersection(&plan.coarsen).next() {
        return Err(Error::InvalidPlan(format!("element {e} flagged for both refine and coarsen")));
    }
    if let Some(&e) = plan.refine.iter().find(|&&e| mesh.level(e) >= plan.max_level) {
        return Err(Error::InvalidPlan(format!(
            "element {e} at level {} cannot be refined past max level {}",
            mesh.level(e),
            plan.max_level
        )));
    }
    if plan.is_empty() {
        return Ok(mesh.clone());
    }
    let (coarse, renumber) = coarsen(mesh, &plan.coarsen)?;
    let marked: Vec<usize> = plan.refine.iter().map(|&e| renumber[e]).collect();
    let out = match mesh.dim() {
        1 => bisect_segments(&coarse, &marked),
        _ => bisect_triangles(&coarse, &marked),
    };
    Ok(out)
}

/// Returns the coarsened mesh and a map from old element ids to new ones
/// (valid for elements that were not merged away).
fn coarsen(mesh: &SimplicialMesh, flagged: &BTreeSet<usize>) -> Result<(SimplicialMesh, Vec<usize>)> {
    let n = mesh.n_elements();
    let identity: Vec<usize> = (0..n).collect();
    if flagged.is_empty() {
        return Ok((mesh.clone(), identity));
    }
    let groups = mesh.sibling_groups();
    let mut pairs: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for &e in flagged {
        let p = mesh.parent(e).ok_or_else(|| {
            Error::InvalidPlan(format!("element {e} has no parent and cannot be coarsened"))
        })?;
        let group = &groups[&p];
        if group.len() != 2 || !group.iter().all(|k| flagged.contains(k)) {
            return Err(Error::InvalidPlan(format!(
                "element {e} belongs to a partial sibling group"
            )));
        }
        pairs.insert(p, (group[0].min(group[1]), group[0].max(group[1])));
    }

    // midpoint node created by each parent's bisection
    let midpoint = |(a, _b): (usize, usize)| match mesh.dim() {
        1 => mesh.element(a)[1],
        _ => mesh.element(a)[0],
    };

    let mut accepted: Vec<usize> = pairs.keys().copied().collect();
    if mesh.dim() == 2 {
        let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
        for e in 0..n {
            for &v in mesh.element(e) {
                incident.entry(v).or_default().push(e);
            }
        }
        accepted.retain(|p| {
            let pair = pairs[p];
            let m = midpoint(pair);
            incident[&m].iter().all(|&k| {
                flagged.contains(&k)
                    && mesh.element(k)[0] == m
                    && mesh.parent(k).is_some_and(|q| midpoint(pairs[&q]) == m)
            })
        });
    }
    if accepted.is_empty() {
        return Ok((mesh.clone(), identity));
    }

    let mut removed_nodes = BTreeSet::new();
    let mut merged_first: HashMap<usize, usize> = HashMap::new();
    let mut merged_second = BTreeSet::new();
    for &p in &accepted {
        let pair = pairs[&p];
        removed_nodes.insert(midpoint(pair));
        merged_first.insert(pair.0, p);
        merged_second.insert(pair.1);
    }

    let dim = mesh.dim();
    let mut cells = Vec::with_capacity(mesh.cells().len());
    let mut levels = Vec::with_capacity(n);
    let mut parents = Vec::with_capacity(n);
    let mut renumber = vec![usize::MAX; n];
    for e in 0..n {
        if merged_second.contains(&e) {
            continue;
        }
        renumber[e] = levels.len();
        if let Some(&p) = merged_first.get(&e) {
            let anc = mesh.ancestor(p);
            cells.extend_from_slice(&anc.nodes);
            levels.push(anc.level);
            parents.push(anc.parent);
        } else {
            cells.extend_from_slice(mesh.element(e));
            levels.push(mesh.level(e));
            parents.push(mesh.parent(e));
        }
    }

    let mut node_map = vec![usize::MAX; mesh.n_nodes()];
    let mut coords = Vec::with_capacity(mesh.coords().len());
    for i in 0..mesh.n_nodes() {
        if !removed_nodes.contains(&i) {
            node_map[i] = coords.len() / dim;
            coords.extend_from_slice(mesh.node(i));
        }
    }
    for c in cells.iter_mut() {
        *c = node_map[*c];
    }
    let history: Vec<Ancestor> = mesh
        .history()
        .iter()
        .map(|a| Ancestor {
            nodes: a.nodes.iter().map(|&v| node_map[v]).collect(),
            level: a.level,
            parent: a.parent,
        })
        .collect();
    let out = prune_history(dim, coords, cells, levels, parents, history);
    Ok((out, renumber))
}

/// Drops history entries no longer reachable from any leaf.
fn prune_history(
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    levels: Vec<u32>,
    mut parents: Vec<Option<usize>>,
    history: Vec<Ancestor>,
) -> SimplicialMesh {
    let mut live = vec![false; history.len()];
    for p in parents.iter().flatten() {
        let mut cur = Some(*p);
        while let Some(k) = cur {
            if live[k] {
                break;
            }
            live[k] = true;
            cur = history[k].parent;
        }
    }
    let mut map = vec![usize::MAX; history.len()];
    let mut kept = Vec::new();
    for (k, a) in history.into_iter().enumerate() {
        if live[k] {
            map[k] = kept.len();
            kept.push(a);
        }
    }
    for a in kept.iter_mut() {
        a.parent = a.parent.map(|p| map[p]);
    }
    for p in parents.iter_mut() {
        *p = p.map(|k| map[k]);
    }
    SimplicialMesh::from_parts(dim, coords, cells, levels, parents, kept)
}

fn bisect_segments(mesh: &SimplicialMesh, marked: &[usize]) -> SimplicialMesh {
    let marked: BTreeSet<usize> = marked.iter().copied().collect();
    let mut coords = mesh.coords().to_vec();
    let mut history = mesh.history().to_vec();
    let mut cells = Vec::new();
    let mut levels = Vec::new();
    let mut parents = Vec::new();
    for e in 0..mesh.n_elements() {
        let v = mesh.element(e);
        if marked.contains(&e) {
            let m = coords.len();
            coords.push(0.5 * (mesh.node(v[0])[0] + mesh.node(v[1])[0]));
            let h = history.len();
            history.push(Ancestor {
                nodes: v.to_vec(),
                level: mesh.level(e),
                parent: mesh.parent(e),
            });
            cells.extend_from_slice(&[v[0], m, m, v[1]]);
            levels.extend_from_slice(&[mesh.level(e) + 1; 2]);
            parents.extend_from_slice(&[Some(h); 2]);
        } else {
            cells.extend_from_slice(v);
            levels.push(mesh.level(e));
            parents.push(mesh.parent(e));
        }
    }
    SimplicialMesh::from_parts(1, coords, cells, levels, parents, history)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn bisect_triangles(mesh: &SimplicialMesh, marked: &[usize]) -> SimplicialMesh {
    let mut edge_elems: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for e in 0..mesh.n_elements() {
        let v = mesh.element(e);
        for i in 0..3 {
            edge_elems
                .entry(edge_key(v[i], v[(i + 1) % 3]))
                .or_default()
                .push(e);
        }
    }

    // closure
    let mut marked_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut queue: Vec<(usize, usize)> = Vec::new();
    for &e in marked {
        let v = mesh.element(e);
        let k = edge_key(v[1], v[2]);
        if marked_edges.insert(k) {
            queue.push(k);
        }
    }
    while let Some(edge) = queue.pop() {
        for &e in &edge_elems[&edge] {
            let v = mesh.element(e);
            let k = edge_key(v[1], v[2]);
            if marked_edges.insert(k) {
                queue.push(k);
            }
        }
    }

    let mut coords = mesh.coords().to_vec();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    for &(a, b) in &marked_edges {
        let (pa, pb) = (mesh.node(a), mesh.node(b));
        midpoint.insert((a, b), coords.len() / 2);
        coords.push(0.5 * (pa[0] + pb[0]));
        coords.push(0.5 * (pa[1] + pb[1]));
    }

    struct Out {
        cells: Vec<usize>,
        levels: Vec<u32>,
        parents: Vec<Option<usize>>,
        history: Vec<Ancestor>,
    }
    fn emit(
        tri: [usize; 3],
        level: u32,
        parent: Option<usize>,
        midpoint: &HashMap<(usize, usize), usize>,
        out: &mut Out,
    ) {
        match midpoint.get(&edge_key(tri[1], tri[2])) {
            Some(&m) => {
                let h = out.history.len();
                out.history.push(Ancestor {
                    nodes: tri.to_vec(),
                    level,
                    parent,
                });
                emit([m, tri[0], tri[1]], level + 1, Some(h), midpoint, out);
                emit([m, tri[2], tri[0]], level + 1, Some(h), midpoint, out);
            }
            None => {
                out.cells.extend_from_slice(&tri);
                out.levels.push(level);
                out.parents.push(parent);
            }
        }
    }

    let mut out = Out {
        cells: Vec::new(),
        levels: Vec::new(),
        parents: Vec::new(),
        history: mesh.history().to_vec(),
    };
    for e in 0..mesh.n_elements() {
        let v = mesh.element(e);
        emit([v[0], v[1], v[2]], mesh.level(e), mesh.parent(e), &midpoint, &mut out);
    }
    SimplicialMesh::from_parts(2, coords, out.cells, out.levels, out.parents, out.history)
}
