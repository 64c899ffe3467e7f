use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{check_arity, Dataset, SurrogateError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: Some(8),
            min_samples_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// `x[feature] < threshold` goes left, everything else right.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary regression tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    n_features: usize,
    params: TreeParams,
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, SurrogateError> {
        check_arity(self.n_features, x)?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] < threshold { left } else { right },
            }
        }
    }

    /// Structural checks used when loading persisted models.
    pub(crate) fn check(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match *n {
                Node::Leaf { value } if !value.is_finite() => {
                    return Err(format!("leaf {i} is not finite"))
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= self.n_features || !threshold.is_finite() {
                        return Err(format!("split {i} is malformed"));
                    }
                    // children always follow their parent in the arena
                    if left <= i || right <= i || left >= self.nodes.len() || right >= self.nodes.len() {
                        return Err(format!("split {i} has bad children"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Fits a tree on every row of `data`, honoring its sample weights.
pub fn fit_tree(data: &Dataset, params: &TreeParams) -> Result<RegressionTree, SurrogateError> {
    let rows: Vec<usize> = (0..data.len()).collect();
    fit_tree_on(data, &rows, data.weights(), params)
}

/// Fits on the rows listed in `sample` (repeats count as separate samples).
/// `weights` is indexed by row.
pub(crate) fn fit_tree_on(
    data: &Dataset,
    sample: &[usize],
    weights: Option<&[f64]>,
    params: &TreeParams,
) -> Result<RegressionTree, SurrogateError> {
    if sample.is_empty() {
        return Err(SurrogateError::TooFewRows { need: 1, got: 0 });
    }
    if params.min_samples_leaf == 0 {
        return Err(SurrogateError::InvalidParameter("min_samples_leaf must be at least 1".into()));
    }
    let n_features = data.n_features();
    let m = sample.len();
    let y: Vec<f64> = sample.iter().map(|&r| data.targets()[r]).collect();
    let w: Vec<f64> = match weights {
        Some(ws) => sample.iter().map(|&r| ws[r]).collect(),
        None => vec![1.0; m],
    };
    let columns: Vec<Vec<f64>> = (0..n_features)
        .map(|j| sample.iter().map(|&r| data.row(r)[j]).collect())
        .collect();

    // Per-feature orderings of sample slots. The (x, y, w) key makes every
    // running sum independent of the input row order.
    let mut order: Vec<Vec<u32>> = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..m as u32).collect();
            idx.sort_unstable_by(|&a, &b| {
                let (a, b) = (a as usize, b as usize);
                col[a]
                    .total_cmp(&col[b])
                    .then(y[a].total_cmp(&y[b]))
                    .then(w[a].total_cmp(&w[b]))
            });
            idx
        })
        .collect();
    // Feature-free fallback ordering for leaf means when there are no features.
    let by_target: Vec<u32> = {
        let mut idx: Vec<u32> = (0..m as u32).collect();
        idx.sort_unstable_by(|&a, &b| {
            y[a as usize]
                .total_cmp(&y[b as usize])
                .then(w[a as usize].total_cmp(&w[b as usize]))
        });
        idx
    };

    let builder = Builder {
        columns: &columns,
        y: &y,
        w: &w,
        params,
    };
    let mut nodes: Vec<Node> = Vec::new();
    let mut goes_left = vec![false; m];
    let mut scratch: Vec<u32> = Vec::with_capacity(m);

    // (node slot, start, end, depth)
    let mut stack = vec![(0usize, 0usize, m, 0usize)];
    nodes.push(Node::Leaf { value: 0.0 });
    while let Some((slot, start, end, depth)) = stack.pop() {
        let canonical: &[u32] = match order.first() {
            Some(o) => &o[start..end],
            None => &by_target[start..end],
        };
        let leaf_value = builder.mean(canonical);
        let can_split = params.max_depth.is_none_or(|d| depth < d)
            && end - start >= 2 * params.min_samples_leaf
            && !builder.is_pure(canonical);
        let best = if can_split {
            builder.best_split(&order, start, end)
        } else {
            None
        };
        let Some(split) = best else {
            nodes[slot] = Node::Leaf { value: leaf_value };
            continue;
        };

        let col = &columns[split.feature];
        for &s in &order[split.feature][start..end] {
            goes_left[s as usize] = col[s as usize] < split.threshold;
        }
        for ord in order.iter_mut() {
            stable_partition(&mut ord[start..end], &goes_left, &mut scratch);
        }
        let mid = start + split.n_left;
        let left = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        let right = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        stack.push((right, mid, end, depth + 1));
        stack.push((left, start, mid, depth + 1));
    }

    Ok(RegressionTree {
        n_features,
        params: *params,
        nodes,
    })
}

struct Builder<'a> {
    columns: &'a [Vec<f64>],
    y: &'a [f64],
    w: &'a [f64],
    params: &'a TreeParams,
}

struct Split {
    feature: usize,
    threshold: f64,
    n_left: usize,
}

impl Builder<'_> {
    fn mean(&self, slots: &[u32]) -> f64 {
        let (mut sw, mut swy) = (0.0, 0.0);
        for &s in slots {
            let s = s as usize;
            sw += self.w[s];
            swy += self.w[s] * self.y[s];
        }
        if sw > 0.0 {
            swy / sw
        } else {
            // all-zero weights: fall back to the plain mean
            slots.iter().map(|&s| self.y[s as usize]).sum::<f64>() / slots.len() as f64
        }
    }

    fn is_pure(&self, slots: &[u32]) -> bool {
        let first = self.y[slots[0] as usize];
        slots.iter().all(|&s| self.y[s as usize] == first)
    }

    /// Maximizes `S_L²/W_L + S_R²/W_R`, which is the same as minimizing the
    /// weighted within-child sum of squares. Ties keep the lowest feature,
    /// then the lowest threshold.
    fn best_split(&self, order: &[Vec<u32>], start: usize, end: usize) -> Option<Split> {
        let msl = self.params.min_samples_leaf;
        let n = end - start;
        let (mut tot_w, mut tot_s) = (0.0, 0.0);
        for &s in &order[0][start..end] {
            tot_w += self.w[s as usize];
            tot_s += self.w[s as usize] * self.y[s as usize];
        }
        let mut best: Option<(f64, Split)> = None;
        for (feature, ord) in order.iter().enumerate() {
            let col = &self.columns[feature];
            let ord = &ord[start..end];
            let (mut lw, mut ls) = (0.0, 0.0);
            for i in 0..n - 1 {
                let s = ord[i] as usize;
                lw += self.w[s];
                ls += self.w[s] * self.y[s];
                let (here, next) = (col[s], col[ord[i + 1] as usize]);
                if here == next {
                    continue;
                }
                let n_left = i + 1;
                if n_left < msl || n - n_left < msl {
                    continue;
                }
                let rw = tot_w - lw;
                let rs = tot_s - ls;
                if lw <= 0.0 || rw <= 0.0 {
                    continue;
                }
                let score = ls * ls / lw + rs * rs / rw;
                let better = match &best {
                    None => true,
                    Some((b, _)) => score.partial_cmp(b) == Some(Ordering::Greater),
                };
                if better {
                    let mut threshold = here + (next - here) / 2.0;
                    if threshold <= here {
                        threshold = next;
                    }
                    best = Some((
                        score,
                        Split {
                            feature,
                            threshold,
                            n_left,
                        },
                    ));
                }
            }
        }
        best.map(|(_, s)| s)
    }
}

fn stable_partition(slots: &mut [u32], goes_left: &[bool], scratch: &mut Vec<u32>) {
    scratch.clear();
    let mut write = 0;
    for i in 0..slots.len() {
        let s = slots[i];
        if goes_left[s as usize] {
            slots[write] = s;
            write += 1;
        } else {
            scratch.push(s);
        }
    }
    slots[write..].copy_from_slice(scratch);
}
