use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &FeatureVector) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if x.get(feature as usize) <= threshold { left } else { right } as usize;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, at: usize) -> usize {
            match t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, left as usize).max(walk(t, right as usize)),
            }
        }
        walk(self, 0)
    }
}

/// Additive per-row statistics: `(positives, count)` for Gini and
/// `(gradient, hessian)` for Newton boosting.
pub(crate) type Stat = (f64, f64);

#[derive(Debug, Clone, Copy)]
pub(crate) enum Criterion {
    Gini,
    Newton { lambda: f64 },
}

impl Criterion {
    /// Split gain is `score(left) + score(right) - score(parent)`.
    fn score(self, (a, b): Stat) -> f64 {
        match self {
            Criterion::Gini => {
                if b <= 0.0 {
                    0.0
                } else {
                    (a * a + (b - a) * (b - a)) / b
                }
            }
            Criterion::Newton { lambda } => a * a / (b + lambda),
        }
    }

    fn leaf(self, (a, b): Stat) -> f64 {
        match self {
            Criterion::Gini => {
                if 2.0 * a > b {
                    1.0
                } else {
                    0.0
                }
            }
            Criterion::Newton { lambda } => -a / (b + lambda),
        }
    }
}

pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split; `>= dim` means all.
    pub features_per_split: usize,
    pub criterion: Criterion,
}

struct Builder<'a, R: Rng> {
    xs: &'a [&'a FeatureVector],
    stats: &'a [Stat],
    dim: usize,
    params: &'a GrowParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
    buckets: Vec<Vec<(f64, Stat)>>,
    chosen: Vec<bool>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn add(a: Stat, b: Stat) -> Stat {
    (a.0 + b.0, a.1 + b.1)
}

fn sub(a: Stat, b: Stat) -> Stat {
    (a.0 - b.0, a.1 - b.1)
}

/// Grows one tree over `samples` (row indices, repeats allowed). Thresholds
/// are midpoints between adjacent distinct values; ties in gain go to the
/// lower feature index and then the lower threshold.
pub(crate) fn grow<R: Rng>(
    xs: &[&FeatureVector],
    stats: &[Stat],
    dim: usize,
    samples: Vec<usize>,
    params: &GrowParams,
    rng: &mut R,
) -> Tree {
    let mut b = Builder {
        xs,
        stats,
        dim,
        params,
        rng,
        nodes: Vec::new(),
        buckets: vec![Vec::new(); dim],
        chosen: vec![false; dim],
    };
    b.build(samples, 0);
    Tree { nodes: b.nodes }
}

impl<R: Rng> Builder<'_, R> {
    fn build(&mut self, samples: Vec<usize>, depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        let total = samples.iter().fold((0.0, 0.0), |acc, &i| add(acc, self.stats[i]));
        self.nodes.push(Node::Leaf { value: self.params.criterion.leaf(total) });
        if depth >= self.params.max_depth || samples.len() < 2 * self.params.min_leaf.max(1) {
            return id;
        }
        let Some(best) = self.best_split(&samples, total) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            samples.into_iter().partition(|&i| self.xs[i].get(best.feature) <= best.threshold);
        let l = self.build(left, depth + 1);
        let r = self.build(right, depth + 1);
        self.nodes[id as usize] =
            Node::Split { feature: best.feature as u32, threshold: best.threshold, left: l, right: r };
        id
    }

    fn choose_features(&mut self) -> bool {
        let k = self.params.features_per_split;
        if k >= self.dim {
            return false;
        }
        self.chosen.iter_mut().for_each(|c| *c = false);
        for j in sample(self.rng, self.dim, k.max(1)) {
            self.chosen[j] = true;
        }
        true
    }

    fn best_split(&mut self, samples: &[usize], total: Stat) -> Option<BestSplit> {
        let filtered = self.choose_features();
        let mut touched = Vec::new();
        for &i in samples {
            for (j, v) in self.xs[i].iter() {
                if v == 0.0 || (filtered && !self.chosen[j]) {
                    continue;
                }
                if self.buckets[j].is_empty() {
                    touched.push(j);
                }
                self.buckets[j].push((v, self.stats[i]));
            }
        }
        touched.sort_unstable();
        let crit = self.params.criterion;
        let parent = crit.score(total);
        let n = samples.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<BestSplit> = None;
        for j in touched {
            let mut entries = std::mem::take(&mut self.buckets[j]);
            let nonzero = entries.iter().fold((0.0, 0.0), |acc, e| add(acc, e.1));
            let zeros = n - entries.len();
            // Implicit zeros form one group; keep counts exact by tagging it.
            let zero_stat = sub(total, nonzero);
            let mut groups: Vec<(f64, Stat, usize)> = Vec::with_capacity(entries.len() + 1);
            if zeros > 0 {
                groups.push((0.0, zero_stat, zeros));
            }
            groups.extend(entries.drain(..).map(|(v, s)| (v, s, 1)));
            groups.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left: Stat = (0.0, 0.0);
            let mut left_n = 0usize;
            let mut k = 0;
            while k < groups.len() {
                let v = groups[k].0;
                while k < groups.len() && groups[k].0 == v {
                    left = add(left, groups[k].1);
                    left_n += groups[k].2;
                    k += 1;
                }
                if k == groups.len() {
                    break;
                }
                if left_n < min_leaf || n - left_n < min_leaf {
                    continue;
                }
                let gain = crit.score(left) + crit.score(sub(total, left)) - parent;
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(BestSplit { gain, feature: j, threshold: 0.5 * (v + groups[k].0) });
                }
            }
            self.buckets[j] = entries;
        }
        best
    }
}
