use imba_core::sampler::{
    draw_batch_tasks, schedule_temperature, temperature_distribution, temperature_distribution_raw,
};
use imba_core::{RngStream, ScheduleShape, ScheduleSpec, TaskSizes, Temperature};
use proptest::prelude::*;

fn sizes_strategy() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1u64..1_000_000, 1..12)
}

fn tau_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![0.05f64..1.0, 1.0f64..50.0]
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn distribution_is_normalized(sizes in sizes_strategy(), tau in tau_strategy()) {
        let plan = temperature_distribution_raw(&sizes, tau).unwrap();
        let sum: f64 = plan.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(plan.probs().iter().all(|&p| (0.0..=1.0).contains(&p)));
        prop_assert_eq!(*plan.cdf().last().unwrap(), 1.0);
    }

    #[test]
    fn unit_temperature_is_proportional(sizes in sizes_strategy()) {
        let plan = temperature_distribution_raw(&sizes, 1.0).unwrap();
        let total: u64 = sizes.iter().sum();
        for (p, &s) in plan.probs().iter().zip(&sizes) {
            prop_assert!(close(*p, s as f64 / total as f64, 1e-12));
        }
    }

    #[test]
    fn scaling_all_sizes_changes_nothing(sizes in sizes_strategy(), tau in tau_strategy(), c in 1u64..1000) {
        let scaled: Vec<u64> = sizes.iter().map(|s| s * c).collect();
        let a = temperature_distribution_raw(&sizes, tau).unwrap();
        let b = temperature_distribution_raw(&scaled, tau).unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            prop_assert!(close(*x, *y, 1e-10));
        }
    }

    #[test]
    fn permuting_sizes_permutes_probabilities(sizes in sizes_strategy(), tau in tau_strategy(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..sizes.len()).collect();
        RngStream::new(seed, 0).shuffle(&mut order);
        let permuted: Vec<u64> = order.iter().map(|&i| sizes[i]).collect();
        let a = temperature_distribution_raw(&sizes, tau).unwrap();
        let b = temperature_distribution_raw(&permuted, tau).unwrap();
        for (j, &i) in order.iter().enumerate() {
            prop_assert!(close(b.probs()[j], a.probs()[i], 1e-12));
        }
    }

    #[test]
    fn raising_temperature_flattens(sizes in sizes_strategy(), t1 in 0.1f64..10.0, dt in 0.01f64..10.0) {
        let cold = temperature_distribution_raw(&sizes, t1).unwrap();
        let hot = temperature_distribution_raw(&sizes, t1 + dt).unwrap();
        let largest = sizes.iter().enumerate().max_by_key(|&(_, s)| *s).unwrap().0;
        let smallest = sizes.iter().enumerate().min_by_key(|&(_, s)| *s).unwrap().0;
        prop_assert!(hot.probs()[largest] <= cold.probs()[largest] + 1e-12);
        prop_assert!(hot.probs()[smallest] >= cold.probs()[smallest] - 1e-12);
        let max_ratio = |p: &[f64]| p[largest] / p[smallest];
        prop_assert!(max_ratio(hot.probs()) <= max_ratio(cold.probs()) * (1.0 + 1e-12));
    }

    #[test]
    fn huge_temperature_is_uniform(sizes in sizes_strategy()) {
        let plan = temperature_distribution_raw(&sizes, 1e9).unwrap();
        let u = 1.0 / sizes.len() as f64;
        for &p in plan.probs() {
            prop_assert!((p - u).abs() < 1e-6);
        }
    }

    #[test]
    fn schedule_hits_endpoints_and_is_monotone(
        shape in prop::sample::select(ScheduleShape::ALL.to_vec()),
        a in 0.1f64..20.0,
        b in 0.1f64..20.0,
    ) {
        if shape == ScheduleShape::Constant {
            prop_assert!(ScheduleSpec::new(shape, a, a + 1.0).is_err());
            let spec = ScheduleSpec::constant(a).unwrap();
            prop_assert_eq!(schedule_temperature(&spec, 0.37).unwrap().value(), a);
            return Ok(());
        }
        let spec = ScheduleSpec::new(shape, a, b).unwrap();
        let at = |t: f64| schedule_temperature(&spec, t).unwrap().value();
        prop_assert_eq!(at(0.0), a);
        prop_assert_eq!(at(1.0), b);
        let mut prev = at(0.0);
        for i in 1..=100 {
            let cur = at(i as f64 / 100.0);
            if b >= a {
                prop_assert!(cur >= prev - 1e-12);
            } else {
                prop_assert!(cur <= prev + 1e-12);
            }
            prop_assert!(cur >= a.min(b) - 1e-12 && cur <= a.max(b) + 1e-12);
            prev = cur;
        }
    }
}

#[test]
fn schedule_rejects_progress_outside_unit_interval() {
    let spec = ScheduleSpec::new(ScheduleShape::Cosine, 1.0, 5.0).unwrap();
    for t in [-0.01, 1.01, f64::NAN] {
        assert!(schedule_temperature(&spec, t).is_err());
    }
}

#[test]
fn empirical_frequencies_match_plan() {
    let sizes = TaskSizes::new(vec![3000, 800, 200, 50, 5]).unwrap();
    let plan = temperature_distribution(&sizes, Temperature::new(3.0).unwrap());
    let draws = 1_000_000;
    let tasks = draw_batch_tasks(&plan, draws, &mut RngStream::new(11, 0)).unwrap();
    let mut counts = [0usize; 5];
    for t in tasks {
        counts[t] += 1;
    }
    for (c, &p) in counts.iter().zip(plan.probs()) {
        let freq = *c as f64 / draws as f64;
        let sd = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((freq - p).abs() < 5.0 * sd, "freq {freq} vs p {p}");
    }
}
