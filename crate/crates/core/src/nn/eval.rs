use super::loss::row_nll;
use super::matrix::Matrix;
use super::mlp::{Batch, MlpModel};
use crate::error::{Error, Result};

const EVAL_CHUNK: usize = 2048;

/// Per-task mean loss and accuracy plus their unweighted (macro) means.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub per_task_loss: Vec<f64>,
    pub per_task_accuracy: Vec<f64>,
    pub per_task_count: Vec<usize>,
    pub macro_loss: f64,
    pub macro_accuracy: f64,
}

/// Predictions are the argmax over logits, ties going to the lower class.
pub fn evaluate(model: &MlpModel, batch: &Batch, num_tasks: usize) -> Result<EvalReport> {
    let mut loss_sum = vec![0.0; num_tasks];
    let mut correct = vec![0usize; num_tasks];
    let mut count = vec![0usize; num_tasks];
    let cols = batch.inputs.cols();
    for start in (0..batch.len()).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(batch.len());
        let chunk = Matrix::from_vec(
            end - start,
            cols,
            batch.inputs.as_slice()[start * cols..end * cols].to_vec(),
        )?;
        let logits = model.forward_pass(&chunk)?.logits;
        for r in 0..chunk.rows() {
            let task = batch.task_ids[start + r];
            if task >= num_tasks {
                return Err(Error::ShapeMismatch(format!(
                    "task id {task} outside 0..{num_tasks}"
                )));
            }
            let label = batch.labels[start + r] as usize;
            let row = logits.row(r);
            loss_sum[task] += row_nll(row, label);
            let predicted = row
                .iter()
                .enumerate()
                .fold(0, |best, (i, &v)| if v > row[best] { i } else { best });
            correct[task] += usize::from(predicted == label);
            count[task] += 1;
        }
    }
    if let Some(task) = count.iter().position(|&c| c == 0) {
        return Err(Error::ShapeMismatch(format!(
            "no evaluation examples for task {task}"
        )));
    }
    let per_task_loss: Vec<f64> = loss_sum
        .iter()
        .zip(&count)
        .map(|(l, &c)| l / c as f64)
        .collect();
    let per_task_accuracy: Vec<f64> = correct
        .iter()
        .zip(&count)
        .map(|(&k, &c)| k as f64 / c as f64)
        .collect();
    Ok(EvalReport {
        macro_loss: mean(&per_task_loss),
        macro_accuracy: mean(&per_task_accuracy),
        per_task_loss,
        per_task_accuracy,
        per_task_count: count,
    })
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_model, Dense};
    use crate::rng::RngStream;

    fn random_batch(rows: usize, cols: usize, tasks: usize, seed: u64) -> Batch {
        let mut rng = RngStream::new(seed, 9);
        let mut bits = vec![0u8; rows * cols];
        rng.fill_bits(&mut bits);
        let labels: Vec<u8> = (0..rows).map(|_| (rng.next_u64() & 1) as u8).collect();
        let inputs =
            Matrix::from_vec(rows, cols, bits.iter().map(|&b| b as f64).collect()).unwrap();
        Batch::new(inputs, labels, (0..rows).map(|r| r % tasks).collect()).unwrap()
    }

    #[test]
    fn zero_model_is_at_chance() {
        let model = init_model(8, 4, 2, &mut RngStream::new(0, 1))
            .unwrap()
            .zeros_like();
        let batch = random_batch(4000, 8, 4, 1);
        let report = evaluate(&model, &batch, 4).unwrap();
        // 1000 rows per task: 3 sigma of a fair coin is 0.0474.
        for t in 0..4 {
            assert!((report.per_task_loss[t] - std::f64::consts::LN_2).abs() < 1e-12);
            assert!((report.per_task_accuracy[t] - 0.5).abs() < 0.0474);
            assert_eq!(report.per_task_count[t], 1000);
        }
        let macro_loss = report.per_task_loss.iter().sum::<f64>() / 4.0;
        assert!((report.macro_loss - macro_loss).abs() < 1e-12);
    }

    #[test]
    fn exact_lookup_network_is_perfect() {
        // n=2 data bits, k=1 (bit 0), T=1 task id bit. Hidden unit copies
        // bit 0; logit1 - logit0 = 2 h - 1 is positive exactly when bit 0 is set.
        let model = MlpModel {
            layers: vec![
                Dense {
                    weights: Matrix::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap(),
                    bias: vec![0.0],
                },
                Dense {
                    weights: Matrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap(),
                    bias: vec![0.5, -0.5],
                },
            ],
        };
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|v| vec![(v & 1) as f64, ((v >> 1) & 1) as f64, 1.0])
            .collect();
        let labels: Vec<u8> = (0..4).map(|v| (v & 1) as u8).collect();
        let batch = Batch::new(Matrix::from_rows(&rows).unwrap(), labels, vec![0; 4]).unwrap();
        let report = evaluate(&model, &batch, 1).unwrap();
        assert_eq!(report.per_task_accuracy, vec![1.0]);
        assert_eq!(report.macro_accuracy, 1.0);
    }

    #[test]
    fn missing_task_is_an_error() {
        let model = init_model(8, 4, 2, &mut RngStream::new(0, 1)).unwrap();
        let batch = random_batch(10, 8, 2, 1);
        assert!(evaluate(&model, &batch, 3).is_err());
    }
}
