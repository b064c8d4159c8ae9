//! Loss functions and per-example gradients.
//!
//! The dense gradient helpers share their derivative code with the SGD
//! trainer, so checking them against finite differences checks the trainer.

use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `max(0, 1 - y s)`, trained one-vs-rest.
    Hinge,
    /// `max(0, 1 - y s)^2`, trained one-vs-rest.
    SquaredHinge,
    /// Multinomial cross-entropy over softmax scores.
    Log,
}

impl Loss {
    pub fn is_one_vs_rest(self) -> bool {
        !matches!(self, Loss::Log)
    }

    /// Binary loss for score `s` and target `y` in {-1, +1}.
    pub fn binary<F: Scalar>(self, s: F, y: F) -> F {
        let z = F::one() - y * s;
        match self {
            Loss::Hinge => z.max(F::zero()),
            Loss::SquaredHinge => {
                let z = z.max(F::zero());
                z * z
            }
            Loss::Log => (F::one() + (-y * s).exp()).ln(),
        }
    }

    /// Derivative of [`Loss::binary`] with respect to `s`.
    pub fn binary_derivative<F: Scalar>(self, s: F, y: F) -> F {
        let z = F::one() - y * s;
        match self {
            Loss::Hinge => {
                if z > F::zero() {
                    -y
                } else {
                    F::zero()
                }
            }
            Loss::SquaredHinge => {
                if z > F::zero() {
                    -(F::one() + F::one()) * y * z
                } else {
                    F::zero()
                }
            }
            Loss::Log => {
                let m = y * s;
                -y / (F::one() + m.exp())
            }
        }
    }
}

/// Softmax probabilities, computed after subtracting the max score.
pub fn softmax<F: Scalar>(scores: &[F]) -> Vec<F> {
    let max = scores.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Cross-entropy of softmax scores against class `target`.
pub fn softmax_loss<F: Scalar>(scores: &[F], target: usize) -> F {
    let max = scores.iter().copied().fold(F::neg_infinity(), F::max);
    let log_total = scores.iter().map(|&s| (s - max).exp()).sum::<F>().ln() + max;
    log_total - scores[target]
}

/// Derivative of [`softmax_loss`] with respect to each score: `p - onehot`.
pub fn softmax_derivative<F: Scalar>(scores: &[F], target: usize) -> Vec<F> {
    let mut p = softmax(scores);
    p[target] = p[target] - F::one();
    p
}

fn dense_dot<F: Scalar>(w: &[F], x: &[F]) -> F {
    w.iter().zip(x).map(|(&a, &b)| a * b).sum()
}

/// Binary loss of a dense example.
pub fn binary_example_loss<F: Scalar>(loss: Loss, w: &[F], b: F, x: &[F], y: F) -> F {
    loss.binary(dense_dot(w, x) + b, y)
}

/// Gradient of [`binary_example_loss`] with respect to `(w, b)`.
pub fn binary_example_gradient<F: Scalar>(loss: Loss, w: &[F], b: F, x: &[F], y: F) -> (Vec<F>, F) {
    let d = loss.binary_derivative(dense_dot(w, x) + b, y);
    (x.iter().map(|&xi| d * xi).collect(), d)
}

fn class_scores<F: Scalar>(w: &[Vec<F>], b: &[F], x: &[F]) -> Vec<F> {
    w.iter().zip(b).map(|(row, &bk)| dense_dot(row, x) + bk).collect()
}

/// Multinomial loss of a dense example.
pub fn softmax_example_loss<F: Scalar>(w: &[Vec<F>], b: &[F], x: &[F], target: usize) -> F {
    softmax_loss(&class_scores(w, b, x), target)
}

/// Gradient of [`softmax_example_loss`] with respect to every weight row and intercept.
pub fn softmax_example_gradient<F: Scalar>(
    w: &[Vec<F>],
    b: &[F],
    x: &[F],
    target: usize,
) -> (Vec<Vec<F>>, Vec<F>) {
    let d = softmax_derivative(&class_scores(w, b, x), target);
    let grads = d
        .iter()
        .map(|&dk| x.iter().map(|&xi| dk * xi).collect())
        .collect();
    (grads, d)
}
