use serde::{Deserialize, Serialize};

/// A sparse `(index, weight)` vector with strictly increasing indices, or a
/// dense vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureVector {
    Sparse { dim: usize, entries: Vec<(u32, f64)> },
    Dense { values: Vec<f64> },
}

impl FeatureVector {
    pub fn dense(values: Vec<f64>) -> Self {
        Self::Dense { values }
    }

    /// Builds a sparse vector; entries are sorted and duplicate indices summed.
    pub fn sparse(dim: usize, mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        debug_assert!(merged.last().is_none_or(|e| (e.0 as usize) < dim));
        Self::Sparse { dim, entries: merged }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::Dense { values: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Sparse { dim, .. } => *dim,
            Self::Dense { values } => values.len(),
        }
    }

    pub fn get(&self, index: usize) -> f64 {
        match self {
            Self::Sparse { entries, .. } => entries
                .binary_search_by_key(&(index as u32), |e| e.0)
                .map_or(0.0, |pos| entries[pos].1),
            Self::Dense { values } => values.get(index).copied().unwrap_or(0.0),
        }
    }

    /// Iterates `(index, value)` over stored entries (all of them when dense).
    pub fn iter(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match self {
            Self::Sparse { entries, .. } => Box::new(entries.iter().map(|&(i, v)| (i as usize, v))),
            Self::Dense { values } => Box::new(values.iter().copied().enumerate()),
        }
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * weights[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            Self::Dense { values } => values.clone(),
            Self::Sparse { dim, entries } => {
                let mut out = vec![0.0; *dim];
                for &(i, v) in entries {
                    out[i as usize] = v;
                }
                out
            }
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        match self {
            Self::Dense { values } => Self::Dense { values: values.iter().map(|v| v * factor).collect() },
            Self::Sparse { dim, entries } => {
                Self::Sparse { dim: *dim, entries: entries.iter().map(|&(i, v)| (i, v * factor)).collect() }
            }
        }
    }

    /// `self + t * (other - self)`, keeping the representation of `self`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        match (self, other) {
            (Self::Sparse { dim, entries: a }, Self::Sparse { entries: b, .. }) => {
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() || j < b.len() {
                    let (idx, x, y) = match (a.get(i), b.get(j)) {
                        (Some(&(ia, va)), Some(&(ib, vb))) if ia == ib => {
                            i += 1;
                            j += 1;
                            (ia, va, vb)
                        }
                        (Some(&(ia, va)), Some(&(ib, _))) if ia < ib => {
                            i += 1;
                            (ia, va, 0.0)
                        }
                        (Some(&(ia, va)), None) => {
                            i += 1;
                            (ia, va, 0.0)
                        }
                        (_, Some(&(ib, vb))) => {
                            j += 1;
                            (ib, 0.0, vb)
                        }
                        (None, None) => unreachable!(),
                    };
                    let v = x + t * (y - x);
                    if v != 0.0 {
                        out.push((idx, v));
                    }
                }
                Self::Sparse { dim: *dim, entries: out }
            }
            _ => {
                let a = self.to_dense();
                let b = other.to_dense();
                Self::Dense { values: a.iter().zip(&b).map(|(x, y)| x + t * (y - x)).collect() }
            }
        }
    }

    pub fn squared_distance(&self, other: &Self) -> f64 {
        match (self, other) {
            (Self::Dense { values: a }, Self::Dense { values: b }) => {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
            }
            (Self::Sparse { entries: a, .. }, Self::Sparse { entries: b, .. }) => {
                let (mut i, mut j, mut acc) = (0, 0, 0.0);
                while i < a.len() || j < b.len() {
                    let d = match (a.get(i), b.get(j)) {
                        (Some(&(ia, va)), Some(&(ib, vb))) if ia == ib => {
                            i += 1;
                            j += 1;
                            va - vb
                        }
                        (Some(&(ia, va)), Some(&(ib, _))) if ia < ib => {
                            i += 1;
                            va
                        }
                        (Some(&(_, va)), None) => {
                            i += 1;
                            va
                        }
                        (_, Some(&(_, vb))) => {
                            j += 1;
                            vb
                        }
                        (None, None) => unreachable!(),
                    };
                    acc += d * d;
                }
                acc
            }
            _ => {
                let a = self.to_dense();
                a.iter().zip(other.to_dense()).map(|(x, y)| (x - y) * (x - y)).sum()
            }
        }
    }
}
