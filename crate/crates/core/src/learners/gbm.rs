//! Gradient-boosted regression trees on the logistic loss.

use serde::{Deserialize, Serialize};

use super::{sigmoid, LearnError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbmParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbmParams {
    fn default() -> Self {
        GbmParams {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 10,
        }
    }
}

impl GbmParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(LearnError::InvalidParam {
                name: "gbm.learning_rate",
                reason: "must be in (0, 1]".into(),
            });
        }
        if self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err(LearnError::InvalidParam {
                name: "gbm.max_depth/min_samples_leaf",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    /// Initial log-odds.
    pub init: f64,
    /// Trees with shrinkage already folded into the leaf values.
    pub trees: Vec<Tree>,
}

impl GbmModel {
    pub fn raw(&self, x: &[f64]) -> f64 {
        self.init + self.trees.iter().map(|t| t.eval(x)).sum::<f64>()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw(x))
    }
}

const MAX_LOG_ODDS: f64 = 30.0;

fn logistic_loss(f: &[f64], y: &[f64]) -> f64 {
    f.iter()
        .zip(y)
        .map(|(&f, &y)| f.max(0.0) + (-f.abs()).exp().ln_1p() - y * f)
        .sum()
}

/// Best least-squares split of `idx` as `(gain, feature, threshold, left, right)`.
pub(crate) fn best_split(
    x: &[Vec<f64>],
    r: &[f64],
    idx: &[usize],
    min_leaf: usize,
) -> Option<(f64, usize, f64, Vec<usize>, Vec<usize>)> {
    let n = idx.len();
    if n < 2 * min_leaf {
        return None;
    }
    let d = x[idx[0]].len();
    let total: f64 = idx.iter().map(|&i| r[i]).sum();
    let base = total * total / n as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted = idx.to_vec();
    for f in 0..d {
        sorted.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let mut left_sum = 0.0;
        for k in 1..n {
            left_sum += r[sorted[k - 1]];
            let (lo, hi) = (x[sorted[k - 1]][f], x[sorted[k]][f]);
            if k < min_leaf || n - k < min_leaf || lo == hi {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / k as f64 + right_sum * right_sum / (n - k) as f64 - base;
            if best.is_none_or(|b| gain > b.0) {
                let mut thr = lo + (hi - lo) / 2.0;
                if thr >= hi {
                    thr = lo;
                }
                best = Some((gain, f, thr));
            }
        }
    }
    let (gain, f, thr) = best?;
    if !(gain > 1e-12) {
        return None;
    }
    let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= thr);
    Some((gain, f, thr, left, right))
}

fn grow(
    x: &[Vec<f64>],
    r: &[f64],
    hess: &[f64],
    idx: &[usize],
    depth: usize,
    params: &GbmParams,
    nodes: &mut Vec<Node>,
) -> usize {
    let me = nodes.len();
    nodes.push(Node::Leaf { value: 0.0 });
    if depth < params.max_depth {
        if let Some((_, feature, threshold, left_idx, right_idx)) = best_split(x, r, idx, params.min_samples_leaf) {
            let left = grow(x, r, hess, &left_idx, depth + 1, params, nodes);
            let right = grow(x, r, hess, &right_idx, depth + 1, params, nodes);
            nodes[me] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
            return me;
        }
    }
    // One Newton step on the logistic loss.
    let num: f64 = idx.iter().map(|&i| r[i]).sum();
    let den: f64 = idx.iter().map(|&i| hess[i]).sum();
    let value = if den.abs() < 1e-150 { 0.0 } else { num / den };
    nodes[me] = Node::Leaf { value };
    me
}

fn scale_leaves(tree: &mut Tree, s: f64) {
    for n in &mut tree.nodes {
        if let Node::Leaf { value } = n {
            *value *= s;
        }
    }
}

/// Fits the ensemble and returns the training-loss trace, starting with the
/// loss of the constant model. A round whose shrunken step would raise the
/// loss is halved until it does not.
pub fn fit(x: &[Vec<f64>], y: &[bool], params: &GbmParams) -> Result<(GbmModel, Vec<f64>), LearnError> {
    let n = x.len();
    if n == 0 {
        return Err(LearnError::Empty);
    }
    let yv: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let rate = yv.iter().sum::<f64>() / n as f64;
    let init = if rate <= 0.0 {
        -MAX_LOG_ODDS
    } else if rate >= 1.0 {
        MAX_LOG_ODDS
    } else {
        (rate / (1.0 - rate)).ln().clamp(-MAX_LOG_ODDS, MAX_LOG_ODDS)
    };
    let mut f = vec![init; n];
    let mut loss = logistic_loss(&f, &yv);
    let mut trace = vec![loss];
    let mut trees = Vec::new();
    if rate <= 0.0 || rate >= 1.0 {
        return Ok((GbmModel { init, trees }, trace));
    }
    let all: Vec<usize> = (0..n).collect();
    for _ in 0..params.n_rounds {
        let p: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
        let r: Vec<f64> = yv.iter().zip(&p).map(|(y, p)| y - p).collect();
        let hess: Vec<f64> = p.iter().map(|p| p * (1.0 - p)).collect();
        let mut nodes = Vec::new();
        grow(x, &r, &hess, &all, 0, params, &mut nodes);
        let mut tree = Tree { nodes };
        let step: Vec<f64> = x.iter().map(|row| tree.eval(row)).collect();
        let mut s = params.learning_rate;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = f.iter().zip(&step).map(|(a, b)| a + s * b).collect();
            let c_loss = logistic_loss(&cand, &yv);
            if c_loss <= loss {
                accepted = Some((cand, c_loss));
                break;
            }
            s *= 0.5;
        }
        let Some((cand, c_loss)) = accepted else { break };
        scale_leaves(&mut tree, s);
        f = cand;
        loss = c_loss;
        trace.push(loss);
        trees.push(tree);
    }
    Ok((GbmModel { init, trees }, trace))
}
