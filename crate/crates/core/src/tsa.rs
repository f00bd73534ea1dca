//! Tree-structure dynamic programming over a discrete control set.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sorted, duplicate-free discretization `{a_1, ..., a_M}` of a scalar control interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid<T: Real> {
    values: Vec<T>,
}

impl<T: Real> ControlGrid<T> {
    pub fn new(mut values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("control grid must contain at least one control".into()));
        }
        if values.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter("control values must be finite".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        if values.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("control values must be distinct".into()));
        }
        Ok(Self { values })
    }

    /// `m` equispaced controls covering `[lo, hi]`; `m = 1` gives `{lo}`.
    pub fn uniform(lo: T, hi: T, m: usize) -> Result<Self> {
        if m == 0 || !(hi >= lo) {
            return Err(Error::InvalidParameter(format!("invalid control interval [{lo}, {hi}] with {m} controls")));
        }
        if m == 1 {
            return Self::new(vec![lo]);
        }
        let step = (hi - lo) / T::from_usize_lossy(m - 1);
        Self::new((0..m).map(|j| if j + 1 == m { hi } else { lo + step * T::from_usize_lossy(j) }).collect())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains_all(&self, other: &ControlGrid<T>) -> bool {
        other.values.iter().all(|a| self.values.contains(a))
    }
}

/// Number of nodes of the unpruned tree, `(M^(n_t+1) - 1) / (M - 1)`.
pub fn full_tree_cardinality(m: usize, n_t: usize) -> Option<u128> {
    if m == 0 {
        return None;
    }
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for n in 0..=n_t {
        total = total.checked_add(level)?;
        if n < n_t {
            level = level.checked_mul(m as u128)?;
        }
    }
    Some(total)
}

/// Nodes are stored level by level; ids are creation order.
#[derive(Debug, Clone)]
pub struct Tree<T: Real> {
    pub dt: T,
    pub eps: T,
    controls: Vec<T>,
    dim: usize,
    states: Vec<T>,
    parent: Vec<u32>,
    control: Vec<u16>,
    children: Vec<u32>,
    level_start: Vec<usize>,
}

const NO_PARENT: u32 = u32::MAX;

impl<T: Real> Tree<T> {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn n_levels(&self) -> usize {
        self.level_start.len() - 1
    }

    /// Index of the last level (`n_t`).
    pub fn n_t(&self) -> usize {
        self.n_levels() - 1
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn controls(&self) -> &[T] {
        &self.controls
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level_range(&self, level: usize) -> std::ops::Range<usize> {
        self.level_start[level]..self.level_start[level + 1]
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        (0..self.n_levels()).map(|n| self.level_range(n).len()).collect()
    }

    pub fn level_of(&self, id: usize) -> usize {
        self.level_start.partition_point(|&s| s <= id) - 1
    }

    pub fn state(&self, id: usize) -> &[T] {
        &self.states[id * self.dim..(id + 1) * self.dim]
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        (self.parent[id] != NO_PARENT).then_some(self.parent[id] as usize)
    }

    /// Control index on the edge that created `id`.
    pub fn creating_control(&self, id: usize) -> Option<usize> {
        self.parent(id).map(|_| self.control[id] as usize)
    }

    /// Child reached from `id` with control index `j`; `None` on the last level.
    pub fn child(&self, id: usize, j: usize) -> Option<usize> {
        let m = self.n_controls();
        (id * m + j < self.children.len()).then(|| self.children[id * m + j] as usize)
    }

    /// Whether the edge `(id, j)` was redirected to a node created by another edge.
    pub fn is_merged_edge(&self, id: usize, j: usize) -> bool {
        self.child(id, j).is_some_and(|c| self.parent(c) != Some(id) || self.creating_control(c) != Some(j))
    }

    /// Control indices along the creating edges from the root to `id`.
    pub fn control_path(&self, id: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            path.push(self.control[cur] as usize);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn pruning_ratio(&self) -> f64 {
        let full = full_tree_cardinality(self.n_controls(), self.n_t()).map_or(f64::INFINITY, |c| c as f64);
        full / self.len() as f64
    }

    /// CSV rows `node id, level, parent id, control index, value`; the root has
    /// empty parent and control fields.
    pub fn write_csv<W: Write>(&self, mut w: W, values: Option<&ValueTable<T>>) -> std::io::Result<()> {
        writeln!(w, "node_id,level,parent_id,control_index,value")?;
        for n in 0..self.n_levels() {
            for id in self.level_range(n) {
                let (p, c) = match self.parent(id) {
                    Some(p) => (p.to_string(), self.control[id].to_string()),
                    None => (String::new(), String::new()),
                };
                let v = values.map(|v| format!("{:e}", v.values[id].as_f64())).unwrap_or_default();
                writeln!(w, "{id},{n},{p},{c},{v}")?;
            }
        }
        Ok(())
    }
}

fn distance_sq<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

const GRID_AXES: usize = 4;

/// Uniform hash grid over the `GRID_AXES` coordinates of largest spread.
/// Two states within `eps` differ by at most one cell along every axis.
struct MergeGrid {
    axes: Vec<usize>,
    inv_cell: f64,
    cells: HashMap<[i64; GRID_AXES], Vec<u32>>,
}

impl MergeGrid {
    fn new<T: Real>(states: &[Vec<T>], dim: usize, eps: T) -> Self {
        let mut spread: Vec<(usize, f64)> = (0..dim)
            .map(|i| {
                let (lo, hi) = states.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    let v = x[i].as_f64();
                    (lo.min(v), hi.max(v))
                });
                (i, hi - lo)
            })
            .collect();
        spread.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let axes = spread.iter().take(GRID_AXES).map(|&(i, _)| i).collect();
        let e = eps.as_f64();
        let inv_cell = if e > 0.0 { 1.0 / (e * (1.0 + 1e-9)) } else { 0.0 };
        Self { axes, inv_cell, cells: HashMap::new() }
    }

    fn cell<T: Real>(&self, x: &[T]) -> [i64; GRID_AXES] {
        let mut c = [0i64; GRID_AXES];
        for (k, &i) in self.axes.iter().enumerate() {
            let v = x[i].as_f64();
            c[k] = if self.inv_cell > 0.0 { (v * self.inv_cell).floor() as i64 } else { (v + 0.0).to_bits() as i64 };
        }
        c
    }

    fn neighbours(&self, c: [i64; GRID_AXES]) -> impl Iterator<Item = &u32> + '_ {
        let reach: i64 = if self.inv_cell > 0.0 { 1 } else { 0 };
        let span = (2 * reach + 1) as usize;
        let n_axes = self.axes.len();
        (0..span.pow(n_axes as u32)).flat_map(move |mut code| {
            let mut key = c;
            for slot in key.iter_mut().take(n_axes) {
                *slot = slot.saturating_add((code % span) as i64 - reach);
                code /= span;
            }
            self.cells.get(&key).into_iter().flatten()
        })
    }

    fn insert(&mut self, c: [i64; GRID_AXES], id: u32) {
        self.cells.entry(c).or_default().push(id);
    }
}

/// Builds the tree from `x0` with `step(state, control, level) -> next state`.
/// A candidate is merged into the earliest-created node of its level within
/// Euclidean distance `eps`.
pub fn build_tree<T, F>(step: F, x0: &[T], controls: &[T], dt: T, n_t: usize, eps: T) -> Result<Tree<T>>
where
    T: Real,
    F: Fn(&[T], T, usize) -> Result<Vec<T>> + Sync,
{
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    if !(eps >= T::zero()) {
        return Err(Error::InvalidParameter(format!("pruning threshold must be non-negative, got {eps}")));
    }
    if controls.is_empty() || controls.len() > u16::MAX as usize {
        return Err(Error::InvalidParameter(format!("unsupported number of controls {}", controls.len())));
    }
    let m = controls.len();
    let dim = x0.len();
    if x0.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteState { level: 0, path: Vec::new() });
    }
    let eps_sq = eps * eps;

    let mut tree = Tree {
        dt,
        eps,
        controls: controls.to_vec(),
        dim,
        states: x0.to_vec(),
        parent: vec![NO_PARENT],
        control: vec![0],
        children: Vec::new(),
        level_start: vec![0, 1],
    };

    for n in 1..=n_t {
        let prev = tree.level_range(n - 1);
        let candidates: Vec<Result<Vec<T>>> = prev
            .clone()
            .into_par_iter()
            .flat_map_iter(|id| (0..m).map(move |j| (id, j)))
            .map(|(id, j)| step(tree.state(id), controls[j], n - 1))
            .collect();

        let candidates = candidates.into_iter().collect::<Result<Vec<_>>>()?;
        let mut grid = MergeGrid::new(&candidates, dim, eps);
        let mut new_states: Vec<T> = Vec::new();
        let first_new = tree.len();
        let mut new_parent = Vec::new();
        let mut new_control = Vec::new();
        for (c, cand) in candidates.into_iter().enumerate() {
            let parent_id = prev.start + c / m;
            let j = c % m;
            let x = cand;
            if x.len() != dim || x.iter().any(|v| !v.is_finite()) {
                let mut path = tree.control_path(parent_id);
                path.push(j);
                return Err(Error::NonFiniteState { level: n, path });
            }
            let cell = grid.cell(&x);
            let mut hit: Option<u32> = None;
            for &id in grid.neighbours(cell) {
                if hit.is_some_and(|h| h <= id) {
                    continue;
                }
                let local = id as usize - first_new;
                if distance_sq(&new_states[local * dim..(local + 1) * dim], &x) <= eps_sq {
                    hit = Some(id);
                }
            }
            let target = match hit {
                Some(id) => id,
                None => {
                    let id = u32::try_from(first_new + new_parent.len())
                        .map_err(|_| Error::InvalidParameter("tree exceeds 2^32 nodes".into()))?;
                    new_states.extend_from_slice(&x);
                    new_parent.push(parent_id as u32);
                    new_control.push(j as u16);
                    grid.insert(cell, id);
                    id
                }
            };
            tree.children.push(target);
        }
        tree.states.extend(new_states);
        tree.parent.extend(new_parent);
        tree.control.extend(new_control);
        tree.level_start.push(tree.parent.len());
    }
    Ok(tree)
}

/// Values `V` per node and the minimizing control index per non-terminal node.
#[derive(Debug, Clone)]
pub struct ValueTable<T: Real> {
    pub values: Vec<T>,
    pub policy: Vec<u16>,
}

impl<T: Real> ValueTable<T> {
    pub fn root(&self) -> T {
        self.values[0]
    }
}

/// Backward recursion `V^n(z) = min_j [dt L(z, a_j, n) + e^{-lambda dt} V^{n+1}(child_j)]`
/// with `V^{n_t} = g`; ties go to the lowest control index.
pub fn backward_dp<T, L, G>(tree: &Tree<T>, running: L, terminal: G, lambda: T) -> ValueTable<T>
where
    T: Real,
    L: Fn(&[T], T, usize) -> T + Sync,
    G: Fn(&Tree<T>, usize) -> T + Sync,
{
    let m = tree.n_controls();
    let dt = tree.dt;
    let discount = (-lambda * dt).exp();
    let mut values = vec![T::zero(); tree.len()];
    let mut policy = vec![0u16; tree.children.len() / m.max(1)];
    let last = tree.n_t();
    let range = tree.level_range(last);
    values[range.clone()].par_iter_mut().zip(range.into_par_iter()).for_each(|(v, id)| *v = terminal(tree, id));
    for n in (0..last).rev() {
        let range = tree.level_range(n);
        let (head, tail) = values.split_at_mut(range.end);
        let next = &*tail;
        let offset = range.end;
        head[range.clone()]
            .par_iter_mut()
            .zip(policy[range.clone()].par_iter_mut())
            .zip(range.into_par_iter())
            .for_each(|((v, p), id)| {
                let x = tree.state(id);
                let mut best: Option<(T, usize)> = None;
                for j in 0..m {
                    let child = tree.children[id * m + j] as usize;
                    let q = dt * running(x, tree.controls[j], n) + discount * next[child - offset];
                    if best.is_none_or(|(b, _)| q < b) {
                        best = Some((q, j));
                    }
                }
                let (b, j) = best.expect("at least one control");
                *v = b;
                *p = j as u16;
            });
    }
    ValueTable { values, policy }
}

/// Optimal control sequence and node path from the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis<T: Real> {
    pub controls: Vec<T>,
    pub indices: Vec<usize>,
    pub path: Vec<usize>,
}

pub fn synthesize_control<T: Real>(tree: &Tree<T>, values: &ValueTable<T>) -> Synthesis<T> {
    let mut path = vec![0];
    let mut indices = Vec::new();
    let mut cur = 0;
    for _ in 0..tree.n_t() {
        let j = values.policy[cur] as usize;
        indices.push(j);
        cur = tree.child(cur, j).expect("non-terminal node has children");
        path.push(cur);
    }
    Synthesis { controls: indices.iter().map(|&j| tree.controls[j]).collect(), indices, path }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(x: &[f64], a: f64, _: usize) -> Result<Vec<f64>> {
        Ok(vec![x[0] + 0.1 * (a - 0.3 * x[0])])
    }

    #[test]
    fn cardinality_formula() {
        assert_eq!(full_tree_cardinality(2, 10), Some(2047));
        assert_eq!(full_tree_cardinality(3, 10), Some(88_573));
        assert_eq!(full_tree_cardinality(5, 10), Some(12_207_031));
        assert_eq!(full_tree_cardinality(1, 7), Some(8));
        assert_eq!(full_tree_cardinality(4, 0), Some(1));
    }

    #[test]
    fn single_control_gives_a_path() {
        let t = build_tree(affine, &[1.0], &[0.5], 0.1, 6, 0.0).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(t.level_sizes(), vec![1; 7]);
    }

    #[test]
    fn duplicate_controls_merge_all_siblings() {
        let t = build_tree(affine, &[1.0], &[0.5, 0.5], 0.1, 4, 1e-300).unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.is_merged_edge(0, 1));
        assert!(!t.is_merged_edge(0, 0));
    }

    #[test]
    fn unpruned_two_level_tree() {
        let t = build_tree(affine, &[1.0], &[0.0, 1.0], 0.1, 2, 0.0).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(t.level_of(0), 0);
        assert_eq!(t.level_of(2), 1);
        assert_eq!(t.level_of(6), 2);
        assert_eq!(t.control_path(6), vec![1, 1]);
        assert!((t.pruning_ratio() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn blow_up_reports_level_and_path() {
        let step = |x: &[f64], a: f64, _: usize| Ok(vec![if a > 0.5 && x[0] > 1.05 { f64::NAN } else { x[0] + 0.1 * a }]);
        match build_tree(step, &[1.0], &[0.0, 1.0], 0.1, 3, 0.0) {
            Err(Error::NonFiniteState { level, path }) => {
                assert_eq!(level, 2);
                assert_eq!(path, vec![1, 1]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_steps_gives_terminal_value_at_root() {
        let t = build_tree(affine, &[2.0], &[0.0, 1.0], 0.1, 0, 0.0).unwrap();
        let v = backward_dp(&t, |_, _, _| 1.0, |t, id| t.state(id)[0] * 3.0, 0.0);
        assert_eq!(v.root(), 6.0);
        assert!(synthesize_control(&t, &v).controls.is_empty());
    }

    #[test]
    fn ties_pick_lowest_index() {
        let t = build_tree(|x: &[f64], _: f64, _: usize| Ok(vec![x[0]]), &[1.0], &[0.0, 1.0, 2.0], 0.1, 2, 0.0).unwrap();
        let v = backward_dp(&t, |_, _, _| 0.0, |_, _| 1.0, 0.0);
        let s = synthesize_control(&t, &v);
        assert_eq!(s.indices, vec![0, 0]);
    }

    #[test]
    fn control_grid_validation() {
        assert!(ControlGrid::new(vec![0.0, 0.0]).is_err());
        assert!(ControlGrid::<f64>::new(vec![]).is_err());
        let g = ControlGrid::uniform(0.0, 1.0, 5).unwrap();
        assert_eq!(g.values(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(g.contains_all(&ControlGrid::uniform(0.0, 1.0, 3).unwrap()));
        assert_eq!(ControlGrid::new(vec![1.0, 0.0]).unwrap().values(), &[0.0, 1.0]);
    }
}
