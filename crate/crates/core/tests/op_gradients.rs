//! Every differentiable graph operation against central differences,
//! 20 random points per operation.

use polyglot_core::gradcheck::grad_check;
use polyglot_core::nn::init_uniform;
use polyglot_core::{seeded_rng, Graph, Tensor, Var};

const SEEDS: u64 = 20;
const EPS: f64 = 1e-4;
const TOL: f64 = 1e-3;

fn rand_t(seed: u64, salt: u64, shape: &[usize]) -> Tensor<f64> {
    let mut rng = seeded_rng(seed * 7919 + salt);
    init_uniform(&mut rng, shape, 1.0)
}

/// Values bounded away from zero, for ops with a kink or pole at 0.
fn away_from_zero(seed: u64, salt: u64, shape: &[usize]) -> Tensor<f64> {
    rand_t(seed, salt, shape).map(|x| if x >= 0.0 { x + 0.05 } else { x - 0.05 })
}

fn check<F>(name: &str, make: impl Fn(u64) -> Vec<Tensor<f64>>, f: F)
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Var + Copy,
{
    for seed in 0..SEEDS {
        let inputs = make(seed);
        let report = grad_check(f, &inputs, EPS);
        assert!(
            report.passed(TOL),
            "{} seed {}: max rel err {:e}",
            name,
            seed,
            report.max_rel_err()
        );
    }
}

// Reduces any matrix to a scalar through a fixed random weighting so every
// entry of the output matters.
fn weigh(g: &mut Graph<f64>, v: Var) -> Var {
    let shape = g.shape(v).to_vec();
    let n: usize = shape.iter().product();
    let w: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0 + 0.1).collect();
    let w = g.constant(Tensor::new(shape, w).unwrap());
    let p = g.mul(v, w);
    g.sum(p)
}

#[test]
fn elementwise_binary_ops() {
    let two = |s| vec![rand_t(s, 1, &[3, 4]), rand_t(s, 2, &[3, 4])];
    check("add", two, |g, v| {
        let y = g.add(v[0], v[1]);
        weigh(g, y)
    });
    check("sub", two, |g, v| {
        let y = g.sub(v[0], v[1]);
        weigh(g, y)
    });
    check("mul", two, |g, v| {
        let y = g.mul(v[0], v[1]);
        weigh(g, y)
    });
    check("row_dot", two, |g, v| {
        let y = g.row_dot(v[0], v[1]);
        weigh(g, y)
    });
}

#[test]
fn broadcast_ops() {
    check(
        "add_row",
        |s| vec![rand_t(s, 1, &[3, 4]), rand_t(s, 2, &[1, 4])],
        |g, v| {
            let y = g.add_row(v[0], v[1]);
            weigh(g, y)
        },
    );
    check(
        "mul_scalar",
        |s| vec![rand_t(s, 1, &[3, 4]), rand_t(s, 2, &[1, 1])],
        |g, v| {
            let y = g.mul_scalar(v[0], v[1]);
            weigh(g, y)
        },
    );
    check(
        "affine",
        |s| vec![rand_t(s, 1, &[2, 5])],
        |g, v| {
            let y = g.affine(v[0], -1.7, 0.3);
            weigh(g, y)
        },
    );
}

#[test]
fn unary_ops() {
    let one = |s| vec![rand_t(s, 1, &[3, 5])];
    check("tanh", one, |g, v| {
        let y = g.tanh(v[0]);
        weigh(g, y)
    });
    check("sigmoid", one, |g, v| {
        let y = g.sigmoid(v[0]);
        weigh(g, y)
    });
    check("exp", one, |g, v| {
        let y = g.exp(v[0]);
        weigh(g, y)
    });
    check("relu", |s| vec![away_from_zero(s, 1, &[3, 5])], |g, v| {
        let y = g.relu(v[0]);
        weigh(g, y)
    });
    check(
        "log",
        |s| vec![rand_t(s, 1, &[3, 5]).map(|x| x.abs() + 0.2)],
        |g, v| {
            let y = g.log(v[0]);
            weigh(g, y)
        },
    );
}

#[test]
fn matrix_products() {
    check(
        "matmul",
        |s| vec![rand_t(s, 1, &[3, 4]), rand_t(s, 2, &[4, 2])],
        |g, v| {
            let y = g.matmul(v[0], v[1]);
            weigh(g, y)
        },
    );
    check(
        "matmul_nt",
        |s| vec![rand_t(s, 1, &[3, 4]), rand_t(s, 2, &[5, 4])],
        |g, v| {
            let y = g.matmul_nt(v[0], v[1]);
            weigh(g, y)
        },
    );
    check("transpose", |s| vec![rand_t(s, 1, &[3, 4])], |g, v| {
        let y = g.transpose(v[0]);
        weigh(g, y)
    });
    check(
        "bilinear",
        |s| {
            vec![
                rand_t(s, 1, &[3, 4]),
                rand_t(s, 2, &[3, 2]),
                rand_t(s, 3, &[5 * 4, 2]),
            ]
        },
        |g, v| {
            let y = g.bilinear(v[0], v[1], v[2]);
            weigh(g, y)
        },
    );
}

#[test]
fn structural_ops() {
    check(
        "concat_cols",
        |s| vec![rand_t(s, 1, &[3, 2]), rand_t(s, 2, &[3, 4])],
        |g, v| {
            let y = g.concat_cols(&[v[0], v[1], v[0]]);
            weigh(g, y)
        },
    );
    check(
        "concat_rows",
        |s| vec![rand_t(s, 1, &[2, 3]), rand_t(s, 2, &[1, 3])],
        |g, v| {
            let y = g.concat_rows(&[v[0], v[1]]);
            weigh(g, y)
        },
    );
    check("slice_cols", |s| vec![rand_t(s, 1, &[3, 6])], |g, v| {
        let y = g.slice_cols(v[0], 2, 3);
        weigh(g, y)
    });
    check("slice_rows", |s| vec![rand_t(s, 1, &[5, 2])], |g, v| {
        let y = g.slice_rows(v[0], 1, 3);
        weigh(g, y)
    });
    check("gather_rows", |s| vec![rand_t(s, 1, &[4, 3])], |g, v| {
        let y = g.gather_rows(v[0], &[3, 0, 3, 1]);
        weigh(g, y)
    });
    check(
        "select_rows",
        |s| vec![rand_t(s, 1, &[4, 3]), rand_t(s, 2, &[4, 3])],
        |g, v| {
            let y = g.select_rows(&[true, false, false, true], v[0], v[1]);
            weigh(g, y)
        },
    );
}

#[test]
fn reductions_and_normalisers() {
    check("sum", |s| vec![rand_t(s, 1, &[3, 3])], |g, v| {
        let y = g.tanh(v[0]);
        g.sum(y)
    });
    check("mean", |s| vec![rand_t(s, 1, &[3, 3])], |g, v| {
        let y = g.exp(v[0]);
        g.mean(y)
    });
    check("softmax", |s| vec![rand_t(s, 1, &[3, 5])], |g, v| {
        let y = g.softmax(v[0]);
        weigh(g, y)
    });
    check("log_softmax", |s| vec![rand_t(s, 1, &[3, 5])], |g, v| {
        let y = g.log_softmax(v[0]);
        weigh(g, y)
    });
    check("cross_entropy", |s| vec![rand_t(s, 1, &[4, 5])], |g, v| {
        let y = g.cross_entropy(v[0], &[0, 4, 2, 2]);
        weigh(g, y)
    });
}

#[test]
fn convolution_and_pooling() {
    check(
        "conv1d",
        |s| {
            vec![
                rand_t(s, 1, &[2 * 5, 3]),
                rand_t(s, 2, &[2 * 3, 4]),
                rand_t(s, 3, &[1, 4]),
            ]
        },
        |g, v| {
            let y = g.conv1d(v[0], v[1], v[2], 5, 2);
            weigh(g, y)
        },
    );
    // Distinct, well separated values keep the arg-max stable under eps.
    check(
        "max_pool_groups",
        |s| {
            let mut t = rand_t(s, 1, &[6, 3]);
            for (i, x) in t.data_mut().iter_mut().enumerate() {
                *x += (i as f64) * 0.37 % 1.3;
            }
            vec![t]
        },
        |g, v| {
            let y = g.max_pool_groups(v[0], 3);
            weigh(g, y)
        },
    );
}

#[test]
fn constant_function_has_zero_gradients() {
    let inputs = vec![rand_t(0, 1, &[2, 2])];
    let report = grad_check(
        |g, _v| g.constant(Tensor::scalar(4.0)),
        &inputs,
        EPS,
    );
    assert!(report.passed(TOL));
    assert_eq!(report.entries[0].max_abs_err, 0.0);
}

#[test]
fn matmul_bias_tanh_chain() {
    for seed in 0..SEEDS {
        let inputs = vec![
            rand_t(seed, 1, &[4, 6]),
            rand_t(seed, 2, &[6, 3]),
            rand_t(seed, 3, &[1, 3]),
        ];
        let report = grad_check(
            |g, v| {
                let h = g.matmul(v[0], v[1]);
                let h = g.add_row(h, v[2]);
                let h = g.tanh(h);
                g.sum(h)
            },
            &inputs,
            EPS,
        );
        assert!(report.max_rel_err() < TOL, "seed {}: {:e}", seed, report.max_rel_err());
    }
}
