//! Known optimal and near-optimal mechanisms as ReLU networks.
//!
//! Max-based forms use `max{a, b} = b + ReLU(a - b)`. Direct linear terms go
//! into the network's skip weights and constants into the output bias.

use crate::error::{Error, Result};
use crate::mechanism::Mechanism;
use crate::net::{Dense, Mlp};

#[derive(Debug, Clone)]
pub struct KnownMechanism {
    pub name: &'static str,
    pub n: usize,
    pub mechanism: Mechanism,
    pub source: &'static str,
}

/// One hidden layer, single output, optional skip.
fn single_layer(
    input_dim: usize,
    hidden: &[(&[f64], f64)],
    out_weights: &[f64],
    out_bias: f64,
    skip: Option<Vec<f64>>,
) -> Mlp {
    let rows = hidden.iter().map(|(w, _)| w.to_vec()).collect();
    let biases = hidden.iter().map(|(_, b)| *b).collect();
    let layer = Dense::from_rows(rows, biases).expect("fixture rows are rectangular");
    let out = Dense::from_rows(vec![out_weights.to_vec()], vec![out_bias]).expect("fixture output is valid");
    debug_assert_eq!(layer.inputs(), input_dim);
    Mlp::new(input_dim, vec![layer, out], skip).expect("fixture network is valid")
}

fn n3(hidden: &[(&[f64], f64)], out_weights: &[f64], out_bias: f64, skip: Option<[f64; 2]>) -> Mechanism {
    let net = single_layer(2, hidden, out_weights, out_bias, skip.map(|s| s.to_vec()));
    Mechanism::new(3, net, 0.0).expect("n = 3 fixture")
}

/// `h(x, y) = 2/3 ReLU(x + y - 1) + 1/6 ReLU(5x + 3y - 2) + 2/3`.
pub fn closed_form_n3() -> Mechanism {
    n3(&[(&[1.0, 1.0], -1.0), (&[5.0, 3.0], -2.0)], &[2.0 / 3.0, 1.0 / 6.0], 2.0 / 3.0, None)
}

fn n3_list() -> Vec<KnownMechanism> {
    let t = 1.0 / 3.0;
    let entries: Vec<(&'static str, &'static str, Mechanism)> = vec![
        ("closed-form", "two-node closed form", closed_form_n3()),
        (
            "naroditskiy",
            "5/6 max{x+y,1} + 2/3 max{x+y,1/2} - 1/3 max{y,1/2} - 1/3 (Naroditskiy et al. 2012)",
            n3(
                &[(&[1.0, 1.0], -1.0), (&[1.0, 1.0], -0.5), (&[0.0, 1.0], -0.5)],
                &[5.0 / 6.0, 2.0 / 3.0, -t],
                2.0 / 3.0,
                None,
            ),
        ),
        (
            "guo",
            "max{x+y,2/3} + 1/2 max{x+y,1} - 1/2 max{y,2/3} - 1/6 (Guo 2019)",
            n3(
                &[(&[1.0, 1.0], -2.0 / 3.0), (&[1.0, 1.0], -1.0), (&[0.0, 1.0], -2.0 / 3.0)],
                &[1.0, 0.5, -0.5],
                2.0 / 3.0,
                None,
            ),
        ),
        (
            "relu-a",
            "1/2 ReLU(x+y-2/3) + 2/3 ReLU(x+y-1) + x/3 + 2/3",
            n3(&[(&[1.0, 1.0], -2.0 / 3.0), (&[1.0, 1.0], -1.0)], &[0.5, 2.0 / 3.0], 2.0 / 3.0, Some([t, 0.0])),
        ),
        (
            "relu-b",
            "1/2 ReLU(x+y-2/3) + 2/3 ReLU(1-x-y) + x + 2y/3",
            n3(&[(&[1.0, 1.0], -2.0 / 3.0), (&[-1.0, -1.0], 1.0)], &[0.5, 2.0 / 3.0], 0.0, Some([1.0, 2.0 / 3.0])),
        ),
        (
            "relu-c",
            "2/3 ReLU(x+y-1) + ReLU(7/10 x + 1/2 y - 1/3) + 2/15 x + 2/3",
            n3(&[(&[1.0, 1.0], -1.0), (&[0.7, 0.5], -t)], &[2.0 / 3.0, 1.0], 2.0 / 3.0, Some([2.0 / 15.0, 0.0])),
        ),
        (
            "relu-d",
            "5/6 x + 1/2 y + ReLU(-5/6 x - 1/2 y + 1/3) + 2/3 ReLU(x+y-1) + 1/3",
            n3(&[(&[-5.0 / 6.0, -0.5], t), (&[1.0, 1.0], -1.0)], &[1.0, 2.0 / 3.0], t, Some([5.0 / 6.0, 0.5])),
        ),
        (
            "relu-e",
            "3/2 x + 7/6 y + 2/3 ReLU(1-x-y) + ReLU(-5/6 x - 1/2 y + 1/3) - 1/3",
            n3(&[(&[-1.0, -1.0], 1.0), (&[-5.0 / 6.0, -0.5], t)], &[2.0 / 3.0, 1.0], -t, Some([1.5, 7.0 / 6.0])),
        ),
        (
            "relu-f",
            "2/3 ReLU(x+y-1) + ReLU(-1/2 x - 1/2 y + 1/3) + 5/6 x + 1/2 y + 1/3",
            n3(&[(&[1.0, 1.0], -1.0), (&[-0.5, -0.5], t)], &[2.0 / 3.0, 1.0], t, Some([5.0 / 6.0, 0.5])),
        ),
    ];
    entries
        .into_iter()
        .map(|(name, source, mechanism)| KnownMechanism { name, n: 3, mechanism, source })
        .collect()
}

/// Five-node network for four agents. The affine tail has positive
/// coefficients and bias, so it is carried by an always-active fifth node.
pub fn near_optimal_n4() -> Mechanism {
    let net = single_layer(
        3,
        &[
            (&[-0.72198910, -0.59272164, -0.59252590], 0.59262365),
            (&[-0.44851873, -0.59390205, -0.38576084], 0.38560897),
            (&[0.19248982, 0.45704255, 0.44363350], -0.22181663),
            (&[-0.48196214, -0.30973950, -0.09149375], 0.36671883),
            (&[0.91974893, 0.65584177, 0.66457125], 0.22181873),
        ],
        &[1.0, 1.0, 1.0, -1.0, 1.0],
        0.0,
        None,
    );
    Mechanism::new(4, net, 0.0).expect("n = 4 fixture")
}

const N5_NODES: [([f64; 4], f64, f64); 17] = [
    ([0.07415187, 0.07656296, -0.01386362, -0.02645663], 0.04038201, 1.0),
    ([-0.02817636, -0.02131834, 0.15407732, 0.10997507], 0.0, 1.0),
    ([-0.00030150, -0.19296961, -0.14009516, -0.13931695], 0.21839742, 1.0),
    ([0.09233555, 0.11879063, 0.22207867, 0.05774284], -0.09739726, 1.0),
    ([-0.02110755, -0.16953833, -0.08211072, -0.15426219], 0.07712195, 1.0),
    ([-0.09167415, -0.16804517, 0.01678468, -0.37599716], 0.12932928, -1.0),
    ([0.06884780, 0.04966597, 0.05180322, 0.01322317], -0.00402523, 1.0),
    ([-0.06963717, -0.05677436, 0.09816764, -0.03466703], -0.06411558, 1.0),
    ([-0.45287389, -0.43648976, -0.43619680, -0.43692699], 0.43656296, 1.0),
    ([0.25219166, 0.41010812, 0.28310004, 0.23790778], -0.23790598, 1.0),
    ([-0.22243375, -0.15597281, -0.21871096, -0.13584307], 0.12931196, 1.0),
    ([-0.01024520, 0.09695699, 0.10965593, 0.11288858], 0.06615839, 1.0),
    ([0.30046332, 0.24649654, 0.24621379, 0.24596024], -0.24610433, 1.0),
    ([-0.08688652, -0.07597235, -0.10597801, 0.04476466], 0.03060341, -1.0),
    ([0.36045450, 0.23456469, 0.14923730, 0.36828747], -0.18414603, 1.0),
    ([-0.00403373, 0.03397270, 0.09138362, 0.03633371], 0.05691386, 1.0),
    ([0.79493202, 0.54317321, 0.42426067, 0.36043567], -0.61394592, -1.0),
];

/// Seventeen ReLU terms plus an affine tail for five agents.
pub fn near_optimal_n5() -> Mechanism {
    let hidden: Vec<(&[f64], f64)> = N5_NODES.iter().map(|(w, b, _)| (&w[..], *b)).collect();
    let out: Vec<f64> = N5_NODES.iter().map(|(_, _, o)| *o).collect();
    let skip = vec![0.40339699, 0.48773447, 0.15870629, 0.27166277];
    let net = single_layer(4, &hidden, &out, -0.00777263, Some(skip));
    Mechanism::new(5, net, 0.0).expect("n = 5 fixture")
}

pub fn known_mechanisms(n: usize) -> Result<Vec<KnownMechanism>> {
    match n {
        3 => Ok(n3_list()),
        4 => Ok(vec![KnownMechanism {
            name: "near-optimal-4",
            n: 4,
            mechanism: near_optimal_n4(),
            source: "five hidden nodes, 8-decimal weights",
        }]),
        5 => Ok(vec![KnownMechanism {
            name: "near-optimal-5",
            n: 5,
            mechanism: near_optimal_n5(),
            source: "seventeen ReLU terms plus affine tail, 8-decimal weights",
        }]),
        _ => Err(Error::Domain(format!("no known mechanisms for n = {n}"))),
    }
}

/// Points per axis of the sorted grid used by [`distinctness_check`].
pub const DISTINCTNESS_GRID: usize = 201;

/// Pairwise `max |h_a - h_b|` over the sorted 201-point grid (n = 3 only,
/// since the inputs are pairs).
pub fn distinctness_check(list: &[KnownMechanism]) -> Result<Vec<Vec<f64>>> {
    if list.iter().any(|m| m.n != 3) {
        return Err(Error::Domain("distinctness check is defined for n = 3".into()));
    }
    let step = 1.0 / (DISTINCTNESS_GRID - 1) as f64;
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(list.len());
    for m in list {
        let mut v = Vec::new();
        for i in 0..DISTINCTNESS_GRID {
            for j in i..DISTINCTNESS_GRID {
                v.push(m.mechanism.h(&[i as f64 * step, j as f64 * step]));
            }
        }
        values.push(v);
    }
    Ok((0..list.len())
        .map(|a| {
            (0..list.len())
                .map(|b| values[a].iter().zip(&values[b]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
                .collect()
        })
        .collect())
}

/// Distinctness threshold for [`distinctness_check`] entries.
pub const DISTINCT_TOL: f64 = 1e-6;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn relu(x: f64) -> f64 {
        x.max(0.0)
    }

    #[test]
    fn counts_and_shapes() {
        assert!(known_mechanisms(3).unwrap().len() >= 9);
        assert_eq!(near_optimal_n4().net().hidden_count(), 5);
        assert_eq!(near_optimal_n5().net().hidden_count(), 17);
        assert!(matches!(known_mechanisms(6), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_values() {
        let m = closed_form_n3();
        assert!((m.h(&[0.5, 0.5]) - 1.0).abs() < 1e-15);
        assert!((m.h(&[0.0, 0.0]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn max_forms_match_closed_forms() {
        let list = known_mechanisms(3).unwrap();
        let forms: Vec<(&str, fn(f64, f64) -> f64)> = vec![
            ("naroditskiy", |x, y| {
                5.0 / 6.0 * (x + y).max(1.0) + 2.0 / 3.0 * (x + y).max(0.5) - y.max(0.5) / 3.0 - 1.0 / 3.0
            }),
            ("guo", |x, y| (x + y).max(2.0 / 3.0) + 0.5 * (x + y).max(1.0) - 0.5 * y.max(2.0 / 3.0) - 1.0 / 6.0),
            ("relu-a", |x, y| 0.5 * relu(x + y - 2.0 / 3.0) + 2.0 / 3.0 * relu(x + y - 1.0) + x / 3.0 + 2.0 / 3.0),
            ("relu-b", |x, y| 0.5 * relu(x + y - 2.0 / 3.0) + 2.0 / 3.0 * relu(1.0 - x - y) + x + 2.0 * y / 3.0),
            ("relu-c", |x, y| {
                2.0 / 3.0 * relu(x + y - 1.0) + relu(0.7 * x + 0.5 * y - 1.0 / 3.0) + 2.0 / 15.0 * x + 2.0 / 3.0
            }),
            ("relu-d", |x, y| {
                5.0 / 6.0 * x + 0.5 * y + relu(-5.0 / 6.0 * x - 0.5 * y + 1.0 / 3.0)
                    + 2.0 / 3.0 * relu(x + y - 1.0)
                    + 1.0 / 3.0
            }),
            ("relu-e", |x, y| {
                1.5 * x + 7.0 / 6.0 * y + 2.0 / 3.0 * relu(1.0 - x - y) + relu(-5.0 / 6.0 * x - 0.5 * y + 1.0 / 3.0)
                    - 1.0 / 3.0
            }),
            ("relu-f", |x, y| {
                2.0 / 3.0 * relu(x + y - 1.0) + relu(-0.5 * x - 0.5 * y + 1.0 / 3.0) + 5.0 / 6.0 * x + 0.5 * y + 1.0 / 3.0
            }),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (name, f) in forms {
            let m = &list.iter().find(|k| k.name == name).unwrap().mechanism;
            for _ in 0..10_000 {
                let (a, b): (f64, f64) = (rng.gen(), rng.gen());
                let (x, y) = (a.min(b), a.max(b));
                assert!((m.h(&[x, y]) - f(x, y)).abs() <= 1e-12, "{name} at ({x}, {y})");
            }
        }
    }

    #[test]
    fn printed_tails_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m4 = near_optimal_n4();
        let m5 = near_optimal_n5();
        for _ in 0..1000 {
            let mut a: Vec<f64> = (0..3).map(|_| rng.gen()).collect();
            a.sort_by(f64::total_cmp);
            let tail = 0.91974893 * a[0] + 0.65584177 * a[1] + 0.66457125 * a[2] + 0.22181873;
            let r = |w: [f64; 3], b: f64| relu(w[0] * a[0] + w[1] * a[1] + w[2] * a[2] + b);
            let direct = r([-0.72198910, -0.59272164, -0.59252590], 0.59262365)
                + r([-0.44851873, -0.59390205, -0.38576084], 0.38560897)
                + r([0.19248982, 0.45704255, 0.44363350], -0.22181663)
                - r([-0.48196214, -0.30973950, -0.09149375], 0.36671883)
                + tail;
            assert!((m4.h(&a) - direct).abs() < 1e-12);

            let mut b: Vec<f64> = (0..4).map(|_| rng.gen()).collect();
            b.sort_by(f64::total_cmp);
            let mut direct = 0.40339699 * b[0] + 0.48773447 * b[1] + 0.15870629 * b[2] + 0.27166277 * b[3] - 0.00777263;
            for (w, bias, sign) in N5_NODES {
                direct += sign * relu(w.iter().zip(&b).map(|(w, x)| w * x).sum::<f64>() + bias);
            }
            assert!((m5.h(&b) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn distinctness_classes() {
        // ReLU(t) - ReLU(-t) = t makes relu-a, relu-b and relu-f one function,
        // and 1/6 ReLU(5x+3y-2) = max(5/6 x + 1/2 y, 1/3) - 1/3 does the same
        // for closed-form, relu-d and relu-e.
        let classes: [&[&str]; 5] = [
            &["closed-form", "relu-d", "relu-e"],
            &["relu-a", "relu-b", "relu-f"],
            &["naroditskiy"],
            &["guo"],
            &["relu-c"],
        ];
        let class_of = |name: &str| classes.iter().position(|c| c.contains(&name)).unwrap();
        let list = known_mechanisms(3).unwrap();
        let d = distinctness_check(&list).unwrap();
        for a in 0..list.len() {
            assert_eq!(d[a][a], 0.0);
            for b in 0..list.len() {
                if class_of(list[a].name) == class_of(list[b].name) {
                    assert!(d[a][b] <= 1e-12, "{} vs {}", list[a].name, list[b].name);
                } else {
                    assert!(d[a][b] > DISTINCT_TOL, "{} vs {}", list[a].name, list[b].name);
                }
            }
        }
    }

    #[test]
    fn data_files_match() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        let regen = std::env::var_os("REDISTRIB_REGEN_DATA").is_some();
        for n in 3..=5 {
            for k in known_mechanisms(n).unwrap() {
                let path = dir.join(format!("n{n}-{}.json", k.name));
                let text = k.mechanism.to_text();
                if regen {
                    std::fs::write(&path, &text).unwrap();
                }
                let on_disk = std::fs::read_to_string(&path).unwrap_or_default();
                assert_eq!(on_disk, text, "{} is stale", path.display());
            }
        }
    }
}
