//! Action and object output heads, greedy selection, and the imitation loss.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::graph_nn::softmax;

/// Discrete agent actions, index order fixed by the head layout.
pub const ACTION_NAMES: [&str; 13] = [
    "Stop",
    "LookDown",
    "LookUp",
    "MoveAhead",
    "RotateLeft",
    "RotateRight",
    "PickupObject",
    "SliceObject",
    "OpenObject",
    "PutObject",
    "CloseObject",
    "ToggleObjectOn",
    "ToggleObjectOff",
];

pub const ACTION_COUNT: usize = 13;
/// Size of the interaction-object vocabulary the object head ranges over.
pub const OBJECT_HEAD_DIM: usize = 119;
/// Probability floor inside the loss; keeps the log finite.
pub const LOSS_PROB_FLOOR: f64 = 1e-12;

pub fn action_name(index: usize) -> &'static str {
    ACTION_NAMES[index]
}

/// Bias-free linear heads over the shared step embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadWeights {
    /// `13 x input_dim`.
    pub action: Array2<f64>,
    /// `119 x input_dim`.
    pub object: Array2<f64>,
}

impl HeadWeights {
    pub fn validate(&self) -> Result<()> {
        if self.action.nrows() != ACTION_COUNT {
            return Err(Error::dims("action head rows", ACTION_COUNT, self.action.nrows()));
        }
        if self.object.nrows() != OBJECT_HEAD_DIM {
            return Err(Error::dims(
                "object head rows",
                OBJECT_HEAD_DIM,
                self.object.nrows(),
            ));
        }
        if self.action.ncols() != self.object.ncols() {
            return Err(Error::dims(
                "head input dims",
                self.action.ncols(),
                self.object.ncols(),
            ));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.action.ncols()
    }
}

/// Softmax outputs of both heads for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutput {
    pub action_probs: Vec<f64>,
    pub object_probs: Vec<f64>,
}

/// Expert supervision for one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpertLabel {
    pub action: usize,
    pub object: usize,
}

pub fn head_forward(input: &[f64], weights: &HeadWeights) -> Result<HeadOutput> {
    weights.validate()?;
    if input.len() != weights.input_dim() {
        return Err(Error::dims("head input", weights.input_dim(), input.len()));
    }
    let x = ArrayView1::from(input);
    let action_logits = weights.action.dot(&x);
    let object_logits = weights.object.dot(&x);
    let out = HeadOutput {
        action_probs: softmax(action_logits.as_slice().expect("contiguous")),
        object_probs: softmax(object_logits.as_slice().expect("contiguous")),
    };
    if out
        .action_probs
        .iter()
        .chain(&out.object_probs)
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite {
            context: "head output".into(),
        });
    }
    Ok(out)
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Greedy selection from both heads.
pub fn select_action(output: &HeadOutput) -> (usize, usize) {
    (argmax(&output.action_probs), argmax(&output.object_probs))
}

/// Cross-entropy terms of one step against its expert labels, probabilities
/// floored at [`LOSS_PROB_FLOOR`]. Returns (action term, object term).
pub fn step_loss_terms(output: &HeadOutput, label: &ExpertLabel) -> Result<(f64, f64)> {
    if label.action >= output.action_probs.len() {
        return Err(Error::dims("expert action index", output.action_probs.len(), label.action));
    }
    if label.object >= output.object_probs.len() {
        return Err(Error::dims("expert object index", output.object_probs.len(), label.object));
    }
    let pa = output.action_probs[label.action].max(LOSS_PROB_FLOOR);
    let pc = output.object_probs[label.object].max(LOSS_PROB_FLOOR);
    Ok((-pa.ln(), -pc.ln()))
}

/// Both loss terms summed.
pub fn step_loss(output: &HeadOutput, label: &ExpertLabel) -> Result<f64> {
    let (action_term, object_term) = step_loss_terms(output, label)?;
    Ok(action_term + object_term)
}

/// Left-fold sum of step losses; matches accumulating [`step_loss`] values in
/// step order.
pub fn trajectory_loss<'a, I>(steps: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a HeadOutput, &'a ExpertLabel)>,
{
    let mut total = 0.0;
    for (output, label) in steps {
        total += step_loss(output, label)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn zero_weights(input_dim: usize) -> HeadWeights {
        HeadWeights {
            action: Array2::zeros((ACTION_COUNT, input_dim)),
            object: Array2::zeros((OBJECT_HEAD_DIM, input_dim)),
        }
    }

    #[test]
    fn action_names_fixed() {
        assert_eq!(ACTION_NAMES.len(), ACTION_COUNT);
        assert_eq!(action_name(0), "Stop");
        assert_eq!(action_name(3), "MoveAhead");
        assert_eq!(action_name(12), "ToggleObjectOff");
    }

    #[test]
    fn zero_weights_give_uniform_distributions() {
        let out = head_forward(&[1.0, -2.0, 0.5], &zero_weights(3)).unwrap();
        assert!(out.action_probs.iter().all(|&p| p == 1.0 / 13.0));
        assert!(out.object_probs.iter().all(|&p| p == 1.0 / 119.0));
    }

    #[test]
    fn uniform_selects_stop_by_tie_break() {
        let out = head_forward(&[0.0; 4], &zero_weights(4)).unwrap();
        assert_eq!(select_action(&out), (0, 0));
    }

    #[test]
    fn argmax_prefers_lowest_on_ties() {
        assert_eq!(argmax(&[0.1, 0.4, 0.2, 0.4]), 1);
        assert_eq!(argmax(&[0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.9, 0.1]), 1);
    }

    #[test]
    fn head_forward_checks_input_dim() {
        assert!(head_forward(&[0.0; 5], &zero_weights(4)).is_err());
    }

    #[test]
    fn uniform_step_loss_is_sum_of_logs() {
        let out = head_forward(&[0.0; 2], &zero_weights(2)).unwrap();
        let loss = step_loss(&out, &ExpertLabel { action: 4, object: 100 }).unwrap();
        let expected = 13.0f64.ln() + 119.0f64.ln();
        assert!((loss - expected).abs() < 1e-9);
        assert!((loss - 7.3440728506).abs() < 1e-6);
    }

    #[test]
    fn perfect_prediction_loses_nothing() {
        let mut action_probs = vec![0.0; ACTION_COUNT];
        action_probs[2] = 1.0;
        let mut object_probs = vec![0.0; OBJECT_HEAD_DIM];
        object_probs[7] = 1.0;
        let out = HeadOutput {
            action_probs,
            object_probs,
        };
        assert_eq!(step_loss(&out, &ExpertLabel { action: 2, object: 7 }).unwrap(), 0.0);
    }

    #[test]
    fn zero_probability_is_floored() {
        let mut action_probs = vec![0.0; ACTION_COUNT];
        action_probs[0] = 1.0;
        let mut object_probs = vec![0.0; OBJECT_HEAD_DIM];
        object_probs[0] = 1.0;
        let out = HeadOutput {
            action_probs,
            object_probs,
        };
        let loss = step_loss(&out, &ExpertLabel { action: 1, object: 1 }).unwrap();
        let expected = -2.0 * LOSS_PROB_FLOOR.ln();
        assert!((loss - expected).abs() < 1e-9);
        assert!(loss.is_finite());
    }

    #[test]
    fn expert_label_bounds_checked() {
        let out = head_forward(&[0.0; 2], &zero_weights(2)).unwrap();
        assert!(step_loss(&out, &ExpertLabel { action: 13, object: 0 }).is_err());
        assert!(step_loss(&out, &ExpertLabel { action: 0, object: 119 }).is_err());
    }

    #[test]
    fn trajectory_loss_matches_stepwise_fold() {
        let out = head_forward(&[0.0; 2], &zero_weights(2)).unwrap();
        let labels = [
            ExpertLabel { action: 0, object: 0 },
            ExpertLabel { action: 5, object: 60 },
            ExpertLabel { action: 12, object: 118 },
        ];
        let steps: Vec<(&HeadOutput, &ExpertLabel)> = labels.iter().map(|l| (&out, l)).collect();
        let total = trajectory_loss(steps.iter().copied()).unwrap();
        let mut fold = 0.0;
        for l in &labels {
            fold += step_loss(&out, l).unwrap();
        }
        assert_eq!(total, fold);
    }

    proptest! {
        /// A strictly increasing transform of one head's values never changes
        /// the selection.
        #[test]
        fn selection_invariant_to_monotone_transform(
            probs in proptest::collection::vec(0.0..1.0f64, 13),
            obj_probs in proptest::collection::vec(0.0..1.0f64, 119),
        ) {
            let out = HeadOutput { action_probs: probs.clone(), object_probs: obj_probs.clone() };
            let transformed = HeadOutput {
                action_probs: probs.iter().map(|v| v.exp() * 2.0 + 1.0).collect(),
                object_probs: obj_probs,
            };
            prop_assert_eq!(select_action(&out), select_action(&transformed));
        }

        /// Loss is finite and nonnegative for any probability vectors.
        #[test]
        fn loss_finite_nonnegative(
            a in 0usize..13,
            c in 0usize..119,
            pa in 0.0..=1.0f64,
            pc in 0.0..=1.0f64,
        ) {
            let mut action_probs = vec![0.0; ACTION_COUNT];
            action_probs[a] = pa;
            let mut object_probs = vec![0.0; OBJECT_HEAD_DIM];
            object_probs[c] = pc;
            let out = HeadOutput { action_probs, object_probs };
            let loss = step_loss(&out, &ExpertLabel { action: a, object: c }).unwrap();
            prop_assert!(loss.is_finite());
            prop_assert!(loss >= 0.0);
        }
    }
}
