//! Binary CART classifier grown greedily on Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct values of
//! a feature; a sample goes left iff `x[feature] <= threshold`. Split quality
//! is compared with exact integer arithmetic so that equal-impurity candidates
//! really tie, and ties go to the lowest feature index, then the lowest
//! threshold.

use serde::{Deserialize, Serialize};

use crate::dataset::Matrix;
use crate::error::{Error, Result};

/// `1 - p0² - p1²` over `[negatives, positives]`.
pub fn gini(class_counts: [usize; 2]) -> Result<f64> {
    let total = class_counts[0] + class_counts[1];
    if total == 0 {
        return Err(Error::EmptyNode);
    }
    let t = total as f64;
    let p0 = class_counts[0] as f64 / t;
    let p1 = class_counts[1] as f64 / t;
    Ok(1.0 - p0 * p0 - p1 * p1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Root is depth 0; `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == Some(0) {
            return Err(Error::InvalidConfig("max_depth must be positive".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidConfig("min_samples_split must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        predicted_class: u8,
        class_counts: [usize; 2],
    },
    Split {
        feature_index: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    root: Node,
    params: TreeParams,
    n_features: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[u8], predicted: &[u8]) -> ConfusionMatrix {
        let mut cm = ConfusionMatrix::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (1, 1) => cm.tp += 1,
                (0, 1) => cm.fp += 1,
                (1, _) => cm.fn_ += 1,
                _ => cm.tn += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => (self.tp + self.tn) as f64 / t as f64,
        }
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(self, o: ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

/// `(S_l·n_r + S_r·n_l) / (n_l·n_r)` with `S = c0² + c1²`, i.e.
/// `S_l/n_l + S_r/n_r`. Larger means lower weighted child Gini.
#[derive(Debug, Clone, Copy)]
struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    fn new(left: [usize; 2], right: [usize; 2]) -> Self {
        let sq = |c: [usize; 2]| (c[0] as u128).pow(2) + (c[1] as u128).pow(2);
        let nl = (left[0] + left[1]) as u128;
        let nr = (right[0] + right[1]) as u128;
        SplitScore {
            num: sq(left) * nr + sq(right) * nl,
            den: nl * nr,
        }
    }

    fn parent(counts: [usize; 2]) -> Self {
        let n = (counts[0] + counts[1]) as u128;
        SplitScore {
            num: (counts[0] as u128).pow(2) + (counts[1] as u128).pow(2),
            den: n,
        }
    }

    fn beats(&self, other: &SplitScore) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: SplitScore,
}

fn class_counts(y: &[u8], idx: &[usize]) -> [usize; 2] {
    let pos = idx.iter().filter(|&&i| y[i] == 1).count();
    [idx.len() - pos, pos]
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= lo && m < hi {
        m
    } else {
        lo
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    params: TreeParams,
}

impl Builder<'_> {
    fn best_split(&self, idx: &[usize], counts: [usize; 2]) -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        let mut sorted = idx.to_vec();
        for feature in 0..self.x.cols() {
            sorted.sort_by(|&a, &b| {
                self.x
                    .get(a, feature)
                    .total_cmp(&self.x.get(b, feature))
                    .then(a.cmp(&b))
            });
            let mut left = [0usize; 2];
            for w in 0..sorted.len() - 1 {
                left[self.y[sorted[w]] as usize] += 1;
                let lo = self.x.get(sorted[w], feature);
                let hi = self.x.get(sorted[w + 1], feature);
                if lo >= hi {
                    continue;
                }
                let right = [counts[0] - left[0], counts[1] - left[1]];
                let score = SplitScore::new(left, right);
                if best.as_ref().is_none_or(|b| score.beats(&b.score)) {
                    best = Some(Candidate {
                        feature,
                        threshold: midpoint(lo, hi),
                        score,
                    });
                }
            }
        }
        best
    }

    fn grow(&self, idx: Vec<usize>, depth: usize) -> Node {
        let counts = class_counts(self.y, &idx);
        let leaf = Node::Leaf {
            predicted_class: u8::from(counts[1] > counts[0]),
            class_counts: counts,
        };
        if counts[0] == 0
            || counts[1] == 0
            || idx.len() < self.params.min_samples_split
            || self.params.max_depth.is_some_and(|m| depth >= m)
        {
            return leaf;
        }
        let Some(best) = self.best_split(&idx, counts) else {
            return leaf;
        };
        if !best.score.beats(&SplitScore::parent(counts)) {
            return leaf;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.x.get(i, best.feature) <= best.threshold);
        Node::Split {
            feature_index: best.feature,
            threshold: best.threshold,
            left: Box::new(self.grow(l, depth + 1)),
            right: Box::new(self.grow(r, depth + 1)),
        }
    }
}

impl DecisionTree {
    pub fn fit(x: &Matrix, y: &[u8], params: TreeParams) -> Result<DecisionTree> {
        params.validate()?;
        if x.rows() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        if x.cols() == 0 {
            return Err(Error::NoFeatures);
        }
        if y.len() != x.rows() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                found: y.len(),
            });
        }
        let builder = Builder { x, y, params };
        Ok(DecisionTree {
            root: builder.grow((0..x.rows()).collect(), 0),
            params,
            n_features: x.cols(),
        })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn n_leaves(&self) -> usize {
        self.root.leaves()
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<u8> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: row.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { predicted_class, .. } => return Ok(*predicted_class),
                Node::Split {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature_index] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        if x.cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.cols(),
            });
        }
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }

    /// Confusion matrix with class 1 as positive.
    pub fn evaluate(&self, x: &Matrix, y: &[u8]) -> Result<ConfusionMatrix> {
        if x.rows() == 0 {
            return Err(Error::EmptyEvaluationSet);
        }
        if y.len() != x.rows() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                found: y.len(),
            });
        }
        let predicted = self.predict(x)?;
        Ok(ConfusionMatrix::from_predictions(y, &predicted))
    }
}
