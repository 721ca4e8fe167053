//! Combinatorics of the transportation polytope: extreme points, faces,
//! minimal faces and the constraint-reduction sets used by the
//! identifiability systems.
//!
//! Extreme points are basic feasible solutions; their support graphs are
//! spanning forests of the complete bipartite graph on row and column nodes.
//! Enumeration walks all spanning trees with backtracking, solves each tree
//! system exactly by leaf peeling, keeps the nonnegative solutions and
//! deduplicates degenerate vertices by canonical matrix comparison.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::error::Error;
use crate::lp::rank_of;
use crate::rational::Rational;
use crate::types::{is_plan_for, MarginalPair, Matrix};

/// Size guards for enumeration. `max_cells` bounds `N * M`; `max_vertices`
/// caps the number of distinct extreme points collected.
#[derive(Clone, Copy, Debug)]
pub struct EnumLimits {
    pub max_cells: usize,
    pub max_vertices: usize,
}

impl Default for EnumLimits {
    fn default() -> Self {
        EnumLimits {
            max_cells: 36,
            max_vertices: 100_000,
        }
    }
}

/// The complete, duplicate-free vertex list of one transportation polytope,
/// in canonical (lexicographic) order.
#[derive(Clone, Debug)]
pub struct ExtremePointSet {
    pub marginals: MarginalPair,
    pub vertices: Vec<Matrix>,
}

impl ExtremePointSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Index of a plan among the vertices, if it is one.
    pub fn position(&self, plan: &Matrix) -> Option<usize> {
        self.vertices.binary_search(plan).ok()
    }
}

/// A face of the polytope, stored as indices into an [`ExtremePointSet`]
/// together with its affine dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub vertex_indices: Vec<usize>,
    pub dimension: usize,
}

// Union-find without path compression so that unions can be rolled back
// during the backtracking search.
struct Dsu {
    parent: Vec<usize>,
    rank: Vec<u8>,
    history: Vec<(usize, u8)>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
            rank: vec![0; n],
            history: Vec::new(),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (child, parent) = if self.rank[ra] < self.rank[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.history.push((child, self.rank[parent]));
        self.parent[child] = parent;
        if self.rank[child] == self.rank[parent] {
            self.rank[parent] += 1;
        }
        true
    }

    fn mark(&self) -> usize {
        self.history.len()
    }

    fn rollback(&mut self, mark: usize) {
        while self.history.len() > mark {
            let (child, parent_rank) = self.history.pop().unwrap();
            let parent = self.parent[child];
            self.parent[child] = child;
            self.rank[parent] = parent_rank;
        }
    }
}

/// Solves the system forced by a spanning tree of the bipartite support
/// graph: peel leaves, assign the remaining marginal, propagate. Returns
/// `None` when the forced solution has a negative entry.
fn solve_tree(
    n: usize,
    m: usize,
    edges: &[(usize, usize)],
    mu: &[Rational],
    nu: &[Rational],
) -> Option<Matrix> {
    let nodes = n + m;
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (e, &(i, j)) in edges.iter().enumerate() {
        incident[i].push(e);
        incident[n + j].push(e);
    }
    let mut degree: Vec<usize> = incident.iter().map(Vec::len).collect();
    let mut remaining: Vec<Rational> = mu.iter().chain(nu.iter()).cloned().collect();
    let mut used = vec![false; edges.len()];
    let mut values = vec![Rational::zero(); edges.len()];
    let mut stack: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    let mut assigned = 0;
    while let Some(v) = stack.pop() {
        if degree[v] != 1 {
            continue;
        }
        let e = *incident[v]
            .iter()
            .find(|&&e| !used[e])
            .expect("leaf must have a live edge");
        let (i, j) = edges[e];
        let other = if v == i { n + j } else { i };
        let value = remaining[v].clone();
        if value.is_negative() {
            return None;
        }
        used[e] = true;
        assigned += 1;
        remaining[v] = Rational::zero();
        remaining[other] -= &value;
        values[e] = value;
        degree[v] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            stack.push(other);
        }
    }
    debug_assert_eq!(assigned, edges.len(), "spanning tree peels completely");
    let mut plan = Matrix::zero(n, m);
    for (e, &(i, j)) in edges.iter().enumerate() {
        plan.set(i, j, values[e].clone());
    }
    Some(plan)
}

/// Connectivity of the graph formed by `chosen` edges plus all cells with
/// index >= `from`; pruning test for the exclude branch.
fn can_still_span(
    n: usize,
    m: usize,
    chosen: &[(usize, usize)],
    from: usize,
) -> bool {
    let nodes = n + m;
    let mut dsu = Dsu::new(nodes);
    let mut components = nodes;
    for &(i, j) in chosen {
        if dsu.union(i, n + j) {
            components -= 1;
        }
    }
    for e in from..n * m {
        let (i, j) = (e / m, e % m);
        if dsu.union(i, n + j) {
            components -= 1;
            if components == 1 {
                return true;
            }
        }
    }
    components == 1
}

/// Enumerates the complete set of extreme points of the transportation
/// polytope spanned by the marginals. Exact by construction; output is
/// canonically ordered and independent of traversal order.
pub fn enumerate_extreme_points(
    marg: &MarginalPair,
    limits: &EnumLimits,
) -> Result<ExtremePointSet, Error> {
    marg.check().map_err(Error::InvalidObservations)?;
    let (n, m) = (marg.n(), marg.m());
    if n * m > limits.max_cells {
        return Err(Error::SizeGuardExceeded {
            cells: n * m,
            cap: limits.max_cells,
        });
    }
    let needed = n + m - 1;
    let total_edges = n * m;
    let mut found: BTreeSet<Matrix> = BTreeSet::new();
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(needed);
    let mut dsu = Dsu::new(n + m);

    // Depth-first include/exclude over cells in lexicographic order.
    fn recurse(
        n: usize,
        m: usize,
        idx: usize,
        needed: usize,
        total_edges: usize,
        chosen: &mut Vec<(usize, usize)>,
        dsu: &mut Dsu,
        marg: &MarginalPair,
        found: &mut BTreeSet<Matrix>,
        limits: &EnumLimits,
    ) -> Result<(), Error> {
        if chosen.len() == needed {
            if let Some(plan) = solve_tree(n, m, chosen, &marg.mu, &marg.nu) {
                found.insert(plan);
                if found.len() > limits.max_vertices {
                    return Err(Error::VertexCapExceeded {
                        cap: limits.max_vertices,
                    });
                }
            }
            return Ok(());
        }
        if idx == total_edges || chosen.len() + (total_edges - idx) < needed {
            return Ok(());
        }
        let (i, j) = (idx / m, idx % m);
        // Include branch (only if acyclic).
        let mark = dsu.mark();
        if dsu.union(i, n + j) {
            chosen.push((i, j));
            recurse(
                n, m, idx + 1, needed, total_edges, chosen, dsu, marg, found, limits,
            )?;
            chosen.pop();
            dsu.rollback(mark);
        }
        // Exclude branch (only if a spanning tree is still reachable).
        if can_still_span(n, m, chosen, idx + 1) {
            recurse(
                n, m, idx + 1, needed, total_edges, chosen, dsu, marg, found, limits,
            )?;
        }
        Ok(())
    }

    recurse(
        n,
        m,
        0,
        needed,
        total_edges,
        &mut chosen,
        &mut dsu,
        marg,
        &mut found,
        limits,
    )?;
    Ok(ExtremePointSet {
        marginals: marg.clone(),
        vertices: found.into_iter().collect(),
    })
}

fn difference_rank(vertices: &[&Matrix]) -> usize {
    if vertices.len() <= 1 {
        return 0;
    }
    let base = vertices[0].to_col_major();
    let diffs: Vec<Vec<Rational>> = vertices[1..]
        .iter()
        .map(|v| {
            v.to_col_major()
                .iter()
                .zip(&base)
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect();
    rank_of(&diffs)
}

/// Affine dimension of the convex hull of the indexed vertices.
pub fn face_dimension(eps: &ExtremePointSet, vertex_indices: &[usize]) -> Result<usize, Error> {
    if vertex_indices.is_empty() {
        return Err(Error::EmptyVertexSet);
    }
    let verts: Vec<&Matrix> = vertex_indices.iter().map(|&i| &eps.vertices[i]).collect();
    Ok(difference_rank(&verts))
}

/// The smallest face of the polytope containing `plan`: exactly the vertices
/// whose support is contained in `supp(plan)`. The plan is a strictly
/// positive convex combination of these vertices.
pub fn minimal_face(plan: &Matrix, eps: &ExtremePointSet) -> Result<Face, Error> {
    if !is_plan_for(plan, &eps.marginals) {
        return Err(Error::PlanNotInPolytope(
            "marginals or nonnegativity violated".into(),
        ));
    }
    let vertex_indices: Vec<usize> = eps
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| {
            v.entries()
                .all(|(i, j, value)| value.is_zero() || !plan.get(i, j).is_zero())
        })
        .map(|(k, _)| k)
        .collect();
    if vertex_indices.is_empty() {
        return Err(Error::PlanNotInPolytope(
            "no vertex support is contained in the plan support".into(),
        ));
    }
    let dimension = face_dimension(eps, &vertex_indices)?;
    Ok(Face {
        vertex_indices,
        dimension,
    })
}

/// Proper faces of the polytope of maximal dimension among those containing
/// `face` (the polytope itself is excluded). Empty iff `face` already spans
/// every vertex.
pub fn maximal_proper_faces_containing(
    face: &Face,
    eps: &ExtremePointSet,
) -> Result<Vec<Face>, Error> {
    let (n, m) = (eps.marginals.n(), eps.marginals.m());
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut candidates: Vec<Face> = Vec::new();
    for i in 0..n {
        for j in 0..m {
            // The face must lie inside the cut, i.e. all its vertices avoid
            // cell (i, j).
            if !face
                .vertex_indices
                .iter()
                .all(|&k| eps.vertices[k].get(i, j).is_zero())
            {
                continue;
            }
            // Exposed face cut by the nonnegativity constraint of cell (i, j).
            let members: Vec<usize> = (0..eps.len())
                .filter(|&k| eps.vertices[k].get(i, j).is_zero())
                .collect();
            if members.is_empty() || members.len() == eps.len() {
                continue; // empty cut or the whole polytope
            }
            if seen.insert(members.clone()) {
                let dimension = face_dimension(eps, &members)?;
                candidates.push(Face {
                    vertex_indices: members,
                    dimension,
                });
            }
        }
    }
    let Some(max_dim) = candidates.iter().map(|f| f.dimension).max() else {
        return Ok(Vec::new());
    };
    let mut out: Vec<Face> = candidates
        .into_iter()
        .filter(|f| f.dimension == max_dim)
        .collect();
    out.sort_by(|a, b| a.vertex_indices.cmp(&b.vertex_indices));
    Ok(out)
}

/// The reduced constraint set of a face known to be optimal: vertices that
/// must satisfy the equality `<c, u> = alpha` and the smaller set of vertices
/// for which the inequality `<c, v> >= alpha` already implies the full
/// system.
///
/// When the face has a single maximal proper face above it, any one outside
/// vertex suffices; the canonically smallest is chosen (the solution set does
/// not depend on this choice).
pub fn reduced_constraint_set(
    face: &Face,
    eps: &ExtremePointSet,
) -> Result<(Vec<usize>, Vec<usize>), Error> {
    let equality = face.vertex_indices.clone();
    if equality.len() == eps.len() {
        return Ok((equality, Vec::new()));
    }
    let maximal = maximal_proper_faces_containing(face, eps)?;
    let in_face: BTreeSet<usize> = equality.iter().copied().collect();
    let inequality: Vec<usize> = if maximal.len() == 1 {
        let w = (0..eps.len())
            .find(|k| !in_face.contains(k))
            .expect("face is proper, so an outside vertex exists");
        vec![w]
    } else {
        let mut set: BTreeSet<usize> = BTreeSet::new();
        for g in &maximal {
            set.extend(g.vertex_indices.iter().copied());
        }
        set.difference(&in_face).copied().collect()
    };
    Ok((equality, inequality))
}
