use std::collections::BTreeMap;

use super::ScoreError;

/// Embedding vectors keyed by sample id, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    vectors: BTreeMap<u64, Vec<f64>>,
}

impl EmbeddingSet {
    pub fn new(vectors: BTreeMap<u64, Vec<f64>>) -> Result<Self, ScoreError> {
        let dim = vectors.values().next().map_or(0, Vec::len);
        for (&id, v) in &vectors {
            if v.len() != dim || dim == 0 {
                return Err(ScoreError::DimensionMismatch {
                    id,
                    reason: format!("embedding has {} components, expected {}", v.len(), dim.max(1)),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(ScoreError::DimensionMismatch { id, reason: "non-finite component".into() });
            }
        }
        Ok(Self { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&[f64]> {
        self.vectors.get(&id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[f64])> {
        self.vectors.iter().map(|(&id, v)| (id, v.as_slice()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    /// `1 − cos(a, b)`; a zero vector is at distance 1 from everything.
    Cosine,
}

impl DistanceMetric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            DistanceMetric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            DistanceMetric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    1.0 - dot / (na * nb)
                }
            }
        }
    }
}

/// Greedy k-center selection.
///
/// Starts from the sample farthest from the mean embedding, then repeatedly
/// adds the sample farthest from its nearest selected center. Ties go to the
/// lowest sample id. Returns sample ids in selection order.
pub fn kcenter_select(emb: &EmbeddingSet, keep: usize, metric: DistanceMetric) -> Result<Vec<u64>, ScoreError> {
    if emb.is_empty() {
        return Err(ScoreError::EmptyEmbeddingSet);
    }
    if keep == 0 || keep > emb.len() {
        return Err(ScoreError::InvalidKeep { keep, available: emb.len() });
    }
    let ids: Vec<u64> = emb.vectors.keys().copied().collect();
    let points: Vec<&[f64]> = emb.vectors.values().map(Vec::as_slice).collect();

    let mut mean = vec![0.0; emb.dim];
    for p in &points {
        for (m, x) in mean.iter_mut().zip(p.iter()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= points.len() as f64;
    }

    // Ids are ascending, so a strict comparison keeps the lowest id on ties.
    let argmax = |dist: &[f64], taken: &[bool]| {
        let mut best: Option<usize> = None;
        for i in 0..dist.len() {
            if !taken[i] && best.map_or(true, |b| dist[i] > dist[b]) {
                best = Some(i);
            }
        }
        best.expect("at least one unselected point")
    };

    let mut taken = vec![false; points.len()];
    let from_mean: Vec<f64> = points.iter().map(|p| metric.distance(p, &mean)).collect();
    let first = argmax(&from_mean, &taken);
    taken[first] = true;
    let mut order = vec![ids[first]];
    let mut nearest: Vec<f64> = points.iter().map(|p| metric.distance(p, points[first])).collect();

    while order.len() < keep {
        let next = argmax(&nearest, &taken);
        taken[next] = true;
        order.push(ids[next]);
        for (i, p) in points.iter().enumerate() {
            let d = metric.distance(p, points[next]);
            if d < nearest[i] {
                nearest[i] = d;
            }
        }
    }
    Ok(order)
}

/// Largest distance from any sample to its nearest center in `centers`.
pub fn covering_radius(emb: &EmbeddingSet, centers: &[u64], metric: DistanceMetric) -> f64 {
    let centers: Vec<&[f64]> = centers.iter().filter_map(|&c| emb.get(c)).collect();
    emb.iter()
        .map(|(_, p)| centers.iter().map(|c| metric.distance(p, c)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}
