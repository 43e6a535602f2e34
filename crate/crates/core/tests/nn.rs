use imba_core::nn::{
    adam_step, evaluate, nll_loss, read_snapshot, write_snapshot, AdamState, Architecture, Matrix,
};
use imba_core::parity::{balanced_eval_set, generate_tasks, BitEncoding};
use imba_core::trainer::encode_batch;
use imba_core::{AdamConfig, MlpModel, ParityConfig, RngStream};

fn loss_of(model: &MlpModel, inputs: &Matrix, labels: &[u8]) -> f64 {
    let pass = model.forward_pass(inputs).unwrap();
    nll_loss(&pass.logits, labels).unwrap().0
}

#[test]
fn backprop_matches_finite_differences() {
    let arch = Architecture {
        input_dim: 6,
        hidden: 3,
        hidden_layers: 1,
        out: 2,
    };
    let mut rng = RngStream::new(5, 9);
    let model = arch.init(&mut rng).unwrap();
    let rows: Vec<Vec<f64>> = (0..8)
        .map(|_| (0..6).map(|_| rng.symmetric(1.0)).collect())
        .collect();
    let inputs = Matrix::from_rows(&rows).unwrap();
    let labels: Vec<u8> = (0..8).map(|i| (i % 2) as u8).collect();

    let pass = model.forward_pass(&inputs).unwrap();
    let (_, dlogits) = nll_loss(&pass.logits, &labels).unwrap();
    let grads = model.backward_pass(&inputs, &pass, &dlogits).unwrap();
    let analytic: Vec<f64> = grads
        .tensors()
        .iter()
        .flat_map(|(_, t)| t.to_vec())
        .collect();

    let h = 1e-5;
    let mut numeric = Vec::new();
    let sizes: Vec<usize> = model.tensors().iter().map(|(_, t)| t.len()).collect();
    for (ti, &len) in sizes.iter().enumerate() {
        for i in 0..len {
            let mut plus = model.clone();
            plus.tensors_mut()[ti][i] += h;
            let mut minus = model.clone();
            minus.tensors_mut()[ti][i] -= h;
            numeric.push(
                (loss_of(&plus, &inputs, &labels) - loss_of(&minus, &inputs, &labels)) / (2.0 * h),
            );
        }
    }
    assert_eq!(analytic.len(), numeric.len());
    for (a, n) in analytic.iter().zip(&numeric) {
        let rel = (a - n).abs() / (a.abs() + n.abs()).max(1e-8);
        assert!(
            rel < 1e-4 || (a - n).abs() < 1e-9,
            "analytic {a} numeric {n}"
        );
    }
}

#[test]
fn adam_memorizes_a_small_batch() {
    let parity = ParityConfig {
        n: 6,
        k: 2,
        num_tasks: 2,
        zipf_alpha: 1.5,
        zipf_offset: 0.0,
        subsets_disjoint: true,
    };
    let tasks = generate_tasks(&parity, &mut RngStream::new(3, 0)).unwrap();
    let examples = balanced_eval_set(&tasks, parity.n, 16, &mut RngStream::new(3, 1)).unwrap();
    let batch = encode_batch(&examples, parity.n, BitEncoding::ZeroOne).unwrap();
    assert_eq!(batch.len(), 32);

    let arch = Architecture {
        input_dim: parity.input_dim(),
        hidden: 64,
        hidden_layers: 1,
        out: 2,
    };
    let mut model = arch.init(&mut RngStream::new(3, 2)).unwrap();
    let config = AdamConfig {
        learning_rate: 0.02,
        ..AdamConfig::default()
    };
    let mut state = AdamState::new(&model, config);
    let mut loss = f64::INFINITY;
    for _ in 0..200 {
        let pass = model.forward_pass(&batch.inputs).unwrap();
        let (l, dlogits) = nll_loss(&pass.logits, &batch.labels).unwrap();
        loss = l;
        let grads = model.backward_pass(&batch.inputs, &pass, &dlogits).unwrap();
        adam_step(&mut model, &grads, &mut state).unwrap();
    }
    assert!(loss < 0.01, "final loss {loss}");
    let report = evaluate(&model, &batch, 2).unwrap();
    assert_eq!(report.macro_accuracy, 1.0);
}

#[test]
fn snapshot_round_trips_bitwise() {
    let arch = Architecture {
        input_dim: 60,
        hidden: 100,
        hidden_layers: 2,
        out: 2,
    };
    let model = arch.init(&mut RngStream::new(8, 1)).unwrap();
    let mut buf = Vec::new();
    write_snapshot(&mut buf, &model).unwrap();
    let back = read_snapshot(&buf[..]).unwrap();
    assert_eq!(back.dims(), model.dims());
    for ((_, a), (_, b)) in back.tensors().iter().zip(model.tensors()) {
        assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    buf.push(0);
    assert!(read_snapshot(&buf[..]).is_err());
}
