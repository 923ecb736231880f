//! Reference implementations of the training losses.
//!
//! These are numeric oracles: exact, framework-free evaluations of each
//! loss term so a training stack in any library can be checked against
//! known values. Nothing here differentiates or optimizes.

use thiserror::Error;

use crate::grid::{BinaryMask, Grid2D, HoverMap, TypeMap};
use crate::sobel::{sobel_x, sobel_y, SobelKsize};

/// Floor applied to predicted probabilities before `ln`, so a confident
/// wrong prediction yields a large finite loss instead of infinity.
pub const LOG_FLOOR: f64 = 1e-7;

/// Smoothing constant in the soft Dice denominator/numerator.
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("gradient loss needs at least one nuclear pixel")]
    EmptyNuclearSet,
    #[error("class-label map supplied without a class probability stack")]
    MissingClassPredictions,
    #[error("class stack has {got} channels but the label map uses class {class}")]
    ClassOutOfRange { got: usize, class: u8 },
    #[error("probability stack does not sum to 1 at ({row}, {col}): {sum}")]
    NotNormalized { row: usize, col: usize, sum: f64 },
    #[error("{what} is {got:?}, expected {want:?}")]
    DimsMismatch {
        what: &'static str,
        got: (usize, usize),
        want: (usize, usize),
    },
}

/// Scalar weight per loss term. Defaults weight the gradient term
/// double and everything else 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub lambda_c: f64,
    pub lambda_d: f64,
    pub lambda_e: f64,
    pub lambda_f: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_a: 1.0,
            lambda_b: 2.0,
            lambda_c: 1.0,
            lambda_d: 1.0,
            lambda_e: 1.0,
            lambda_f: 1.0,
        }
    }
}

/// Everything the combined loss consumes. Class terms are optional and
/// both `pred_classes`/`gt_classes` must be present together.
#[derive(Debug, Clone)]
pub struct LossInputs {
    pub pred_hover: HoverMap,
    /// Foreground probability (the background channel is implied 1-q).
    pub pred_np: Grid2D<f64>,
    /// Per-class probability stack, channel 0 = background.
    pub pred_classes: Option<Vec<Grid2D<f64>>>,
    pub gt_hover: HoverMap,
    pub gt_np: BinaryMask,
    pub gt_classes: Option<TypeMap>,
    pub epsilon: f64,
}

impl LossInputs {
    fn validate(&self) -> Result<(), LossError> {
        let dims = self.pred_hover.dims();
        let check = |what: &'static str, got: (usize, usize)| {
            if got == dims {
                Ok(())
            } else {
                Err(LossError::DimsMismatch {
                    what,
                    got,
                    want: dims,
                })
            }
        };
        check("foreground prediction", self.pred_np.dims())?;
        check("ground-truth distance maps", self.gt_hover.dims())?;
        check("ground-truth mask", self.gt_np.dims())?;
        match (&self.pred_classes, &self.gt_classes) {
            (None, None) => {}
            (None, Some(_)) => return Err(LossError::MissingClassPredictions),
            (Some(stack), gt) => {
                for channel in stack {
                    check("class probability channel", channel.dims())?;
                }
                // per-pixel normalization of the class stack
                let (h, w) = dims;
                for row in 0..h {
                    for col in 0..w {
                        let sum: f64 = stack.iter().map(|ch| *ch.get(row, col)).sum();
                        if (sum - 1.0).abs() > 1e-5 {
                            return Err(LossError::NotNormalized { row, col, sum });
                        }
                    }
                }
                if let Some(gt) = gt {
                    check("ground-truth class map", gt.dims())?;
                    for &class in gt.grid().iter() {
                        if class as usize >= stack.len() {
                            return Err(LossError::ClassOutOfRange {
                                got: stack.len(),
                                class,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Mean squared error over both distance channels and every pixel
/// (n counts pixel-channel entries, i.e. 2 per pixel).
pub fn loss_a(pred: &HoverMap, gt: &HoverMap) -> f64 {
    assert!(pred.dims() == gt.dims(), "loss inputs must share dimensions");
    let n = (2 * pred.horizontal().len()) as f64;
    let mut acc = 0.0;
    for (p, g) in pred
        .horizontal()
        .iter()
        .zip(gt.horizontal().iter())
        .chain(pred.vertical().iter().zip(gt.vertical().iter()))
    {
        let d = p - g;
        acc += d * d;
    }
    acc / n
}

/// Mean squared error of the distance-map derivatives over nuclear
/// pixels: the horizontal channel is differentiated horizontally and the
/// vertical channel vertically, with the same 3-tap Sobel kernels and
/// mirrored borders the post-processing uses (raw, not normalized). Each
/// directional MSE is averaged over the nuclear set and the two are
/// summed. Adding a constant to a prediction map changes nothing.
pub fn loss_b(pred: &HoverMap, gt: &HoverMap, nuclear: &BinaryMask) -> Result<f64, LossError> {
    assert!(
        pred.dims() == gt.dims() && pred.dims() == nuclear.dims(),
        "loss inputs must share dimensions"
    );
    let m = nuclear.count_ones();
    if m == 0 {
        return Err(LossError::EmptyNuclearSet);
    }
    let dx_pred = sobel_x(pred.horizontal(), SobelKsize::Three);
    let dx_gt = sobel_x(gt.horizontal(), SobelKsize::Three);
    let dy_pred = sobel_y(pred.vertical(), SobelKsize::Three);
    let dy_gt = sobel_y(gt.vertical(), SobelKsize::Three);
    let mut acc_x = 0.0;
    let mut acc_y = 0.0;
    for (r, c, &bit) in nuclear.grid().indexed_iter() {
        if bit == 1 {
            let dx = dx_pred.get(r, c) - dx_gt.get(r, c);
            let dy = dy_pred.get(r, c) - dy_gt.get(r, c);
            acc_x += dx * dx;
            acc_y += dy * dy;
        }
    }
    Ok(acc_x / m as f64 + acc_y / m as f64)
}

/// Categorical cross-entropy `-1/n Σ_i Σ_k X_ik ln(Y_ik)` with Y floored
/// at [`LOG_FLOOR`]; n counts pixels.
pub fn cross_entropy(pred_stack: &[Grid2D<f64>], gt_onehot: &[Grid2D<f64>]) -> f64 {
    assert_eq!(
        pred_stack.len(),
        gt_onehot.len(),
        "stacks must have equal channel count"
    );
    assert!(!pred_stack.is_empty());
    let n = pred_stack[0].len() as f64;
    let mut acc = 0.0;
    for (pred, gt) in pred_stack.iter().zip(gt_onehot) {
        assert!(pred.same_dims(gt), "loss inputs must share dimensions");
        for (y, x) in pred.iter().zip(gt.iter()) {
            if *x != 0.0 {
                acc += x * y.max(LOG_FLOOR).ln();
            }
        }
    }
    -acc / n
}

/// Soft Dice loss `1 - (2Σ(Y·X) + ε) / (ΣY + ΣX + ε)`. Exactly zero
/// when Y = X and both are binary (including the all-empty case, where ε
/// rescues the ratio).
pub fn dice_loss(pred: &Grid2D<f64>, gt: &Grid2D<f64>, epsilon: f64) -> f64 {
    assert!(pred.same_dims(gt), "loss inputs must share dimensions");
    let mut inter = 0.0;
    let mut sum_pred = 0.0;
    let mut sum_gt = 0.0;
    for (y, x) in pred.iter().zip(gt.iter()) {
        inter += y * x;
        sum_pred += y;
        sum_gt += x;
    }
    1.0 - (2.0 * inter + epsilon) / (sum_pred + sum_gt + epsilon)
}

/// One-vs-rest soft Dice averaged over the foreground classes (channel
/// 0 is background and excluded).
pub fn multiclass_dice_loss(
    pred_stack: &[Grid2D<f64>],
    gt_onehot: &[Grid2D<f64>],
    epsilon: f64,
) -> f64 {
    assert_eq!(pred_stack.len(), gt_onehot.len());
    assert!(pred_stack.len() >= 2, "need background + foreground classes");
    let classes = pred_stack.len() - 1;
    let total: f64 = (1..=classes)
        .map(|k| dice_loss(&pred_stack[k], &gt_onehot[k], epsilon))
        .sum();
    total / classes as f64
}

/// Per-term values plus the weighted total. Class terms stay `None`
/// when no class labels were supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: Option<f64>,
    pub f: Option<f64>,
    pub total: f64,
}

/// Weighted combination of the individual terms; absent terms
/// contribute nothing.
fn combine(w: &LossWeights, a: f64, b: f64, c: f64, d: f64, e: Option<f64>, f: Option<f64>) -> f64 {
    w.lambda_a * a
        + w.lambda_b * b
        + w.lambda_c * c
        + w.lambda_d * d
        + w.lambda_e * e.unwrap_or(0.0)
        + w.lambda_f * f.unwrap_or(0.0)
}

fn binary_onehot(mask: &BinaryMask) -> [Grid2D<f64>; 2] {
    [
        mask.grid().map(|&v| 1.0 - v as f64),
        mask.grid().map(|&v| v as f64),
    ]
}

fn class_onehot(types: &TypeMap, channels: usize) -> Vec<Grid2D<f64>> {
    let mut stack = vec![Grid2D::new(types.height(), types.width(), 0.0); channels];
    for (r, c, &class) in types.grid().indexed_iter() {
        stack[class as usize].set(r, c, 1.0);
    }
    stack
}

/// Evaluates every applicable term and the weighted sum.
///
/// Terms: distance-map MSE (a), distance-gradient MSE over nuclear
/// pixels (b), foreground cross-entropy (c) and Dice (d), plus class
/// cross-entropy (e) and class Dice (f) when class labels are
/// available.
pub fn total_loss(inputs: &LossInputs, w: &LossWeights) -> Result<LossBreakdown, LossError> {
    inputs.validate()?;
    let a = loss_a(&inputs.pred_hover, &inputs.gt_hover);
    let b = loss_b(&inputs.pred_hover, &inputs.gt_hover, &inputs.gt_np)?;
    let np_pred = [
        inputs.pred_np.map(|&q| 1.0 - q),
        inputs.pred_np.clone(),
    ];
    let np_gt = binary_onehot(&inputs.gt_np);
    let c = cross_entropy(&np_pred, &np_gt);
    let d = dice_loss(
        &inputs.pred_np,
        &inputs.gt_np.grid().map(|&v| v as f64),
        inputs.epsilon,
    );
    let (e, f) = match (&inputs.pred_classes, &inputs.gt_classes) {
        (Some(stack), Some(gt)) => {
            let gt_stack = class_onehot(gt, stack.len());
            (
                Some(cross_entropy(stack, &gt_stack)),
                Some(multiclass_dice_loss(stack, &gt_stack, inputs.epsilon)),
            )
        }
        _ => (None, None),
    };
    Ok(LossBreakdown {
        a,
        b,
        c,
        d,
        e,
        f,
        total: combine(w, a, b, c, d, e, f),
    })
}
