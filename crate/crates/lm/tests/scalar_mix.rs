use polyglot_core::gradcheck::grad_check_params;
use polyglot_core::{Graph, ParamStore, Tensor};
use polyglot_lm::{LayerStack, ScalarMix};
use proptest::prelude::*;

fn stack() -> LayerStack {
    let data: Vec<f32> = (0..2 * 3 * 4).map(|i| ((i * 7) % 11) as f32 - 5.0).collect();
    LayerStack::new(2, 3, 4, data).unwrap()
}

fn mixed(raw: [f64; 3], gamma: f64) -> (LayerStack, Vec<f64>) {
    let st = stack();
    let mut store = ParamStore::<f64>::new();
    let mix = ScalarMix::new(&mut store, "mix", 3);
    *store.value_mut(mix.raw) = Tensor::row(raw.to_vec());
    *store.value_mut(mix.gamma) = Tensor::full(&[1, 1], gamma);
    let mut g = Graph::new();
    let out = mix.forward_stack(&mut g, &store, &st).unwrap();
    let v = g.value(out).data().to_vec();
    (st, v)
}

#[test]
fn peaked_weights_select_a_layer() {
    let (st, v) = mixed([10.0, -10.0, -10.0], 1.0);
    for t in 0..2 {
        for (j, &x) in st.layer(t, 0).iter().enumerate() {
            assert!((v[t * 4 + j] - x as f64).abs() < 1e-3);
        }
    }
}

#[test]
fn equal_weights_average_layers() {
    let (st, v) = mixed([0.7, 0.7, 0.7], 2.0);
    for t in 0..2 {
        for j in 0..4 {
            let s: f64 = (0..3).map(|l| st.layer(t, l)[j] as f64).sum();
            assert!((v[t * 4 + j] - 2.0 / 3.0 * s).abs() < 1e-12);
        }
    }
}

#[test]
fn depth_mismatch_is_an_error() {
    let mut store = ParamStore::<f64>::new();
    let mix = ScalarMix::new(&mut store, "mix", 2);
    let mut g = Graph::new();
    assert!(mix.forward_stack(&mut g, &store, &stack()).is_err());
}

#[test]
fn gradients_of_weights_and_gamma() {
    let st = stack();
    let mut store = ParamStore::<f64>::new();
    let mix = ScalarMix::new(&mut store, "mix", 3);
    *store.value_mut(mix.raw) = Tensor::row(vec![0.3, -1.2, 0.5]);
    *store.value_mut(mix.gamma) = Tensor::full(&[1, 1], 1.7);
    let target = Tensor::from_f64(&[2, 4], &[0.5, -1.0, 2.0, 0.0, 1.0, 1.0, -3.0, 0.25]);
    let report = grad_check_params(
        &store,
        |g, s| {
            let out = mix.forward_stack(g, s, &st).unwrap();
            let t = g.constant(target.clone());
            let d = g.sub(out, t);
            let sq = g.mul(d, d);
            g.sum(sq)
        },
        1e-4,
        None,
    );
    assert!(report.passed(1e-3), "max rel err {}", report.max_rel_err());
}

proptest! {
    #[test]
    fn weights_are_a_distribution(raw in proptest::collection::vec(-50.0f64..50.0, 1..6)) {
        let mut store = ParamStore::<f64>::new();
        let mix = ScalarMix::new(&mut store, "m", raw.len());
        *store.value_mut(mix.raw) = Tensor::row(raw.clone());
        let w = mix.weights(&store);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&x| x >= 0.0));
    }
}
