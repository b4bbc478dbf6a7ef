use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{class_name, Dataset, Example, LearnError};

/// Default neighbor count for SMOTE.
pub const SMOTE_K: usize = 5;

fn train_count(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64).round() as usize).clamp(1, n - 1)
}

/// Seeded train/test split. Stratified splits put `round(ratio * n_c)` rows
/// of each class (clamped to `1..n_c-1`) in train. Both halves keep the
/// input row order.
pub fn split_train_test(
    data: &Dataset,
    ratio: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Dataset, Dataset), LearnError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(LearnError::InvalidHyper(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; data.len()];
    let groups: Vec<Vec<usize>> = if stratified {
        [true, false]
            .iter()
            .map(|&c| (0..data.len()).filter(|&i| data.rows[i].positive == c).collect())
            .collect()
    } else {
        vec![(0..data.len()).collect()]
    };
    for (g, mut idx) in groups.into_iter().enumerate() {
        if idx.len() < 2 {
            let class = if stratified { class_name(g == 0) } else { "any" };
            return Err(LearnError::ClassTooSmall { class, count: idx.len(), needed: 2 });
        }
        idx.shuffle(&mut rng);
        for &i in &idx[..train_count(idx.len(), ratio)] {
            in_train[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (row, t) in data.rows.iter().zip(in_train) {
        if t {
            train.push(row.clone());
        } else {
            test.push(row.clone());
        }
    }
    Ok((Dataset { dim: data.dim, rows: train }, Dataset { dim: data.dim, rows: test }))
}

fn minority(data: &Dataset) -> Result<Option<(bool, usize)>, LearnError> {
    let (pos, neg) = data.class_counts();
    if pos == 0 || neg == 0 {
        return Err(LearnError::NeedBothClasses);
    }
    Ok(match pos.cmp(&neg) {
        std::cmp::Ordering::Less => Some((true, neg - pos)),
        std::cmp::Ordering::Greater => Some((false, pos - neg)),
        std::cmp::Ordering::Equal => None,
    })
}

/// Appends uniformly drawn copies of minority rows until the classes balance.
pub fn oversample_random(train: &Dataset, seed: u64) -> Result<Dataset, LearnError> {
    let Some((class, needed)) = minority(train)? else {
        return Ok(train.clone());
    };
    let pool: Vec<&Example> = train.rows.iter().filter(|r| r.positive == class).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = train.clone();
    for k in 0..needed {
        let src = pool[rng.random_range(0..pool.len())];
        out.rows.push(Example::new(format!("{}#dup{k}", src.id), src.x.clone(), class));
    }
    Ok(out)
}

/// Indices of the `k` nearest other points (Euclidean, ties by index).
pub(crate) fn nearest_neighbors(points: &[&Example], k: usize) -> Vec<Vec<usize>> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| (p.x.squared_distance(&q.x), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// SMOTE: synthetic minority rows `x_i + u (x_nn - x_i)` with `x_nn` drawn
/// from the `min(k, m-1)` nearest minority neighbors of a random minority
/// row `x_i`. Falls back to duplication when the minority has one row.
pub fn oversample_smote(train: &Dataset, k: usize, seed: u64) -> Result<Dataset, LearnError> {
    let Some((class, needed)) = minority(train)? else {
        return Ok(train.clone());
    };
    let pool: Vec<&Example> = train.rows.iter().filter(|r| r.positive == class).collect();
    if pool.len() < 2 || k == 0 {
        return oversample_random(train, seed);
    }
    let neighbors = nearest_neighbors(&pool, k.min(pool.len() - 1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = train.clone();
    for s in 0..needed {
        let i = rng.random_range(0..pool.len());
        let nn = neighbors[i][rng.random_range(0..neighbors[i].len())];
        let u: f64 = rng.random();
        let x = pool[i].x.lerp(&pool[nn].x, u);
        out.rows.push(Example::new(format!("{}#smote{s}", pool[i].id), x, class));
    }
    Ok(out)
}
