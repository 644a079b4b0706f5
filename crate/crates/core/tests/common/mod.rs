//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use netrel::network::{BridgeId, NodeId, Roadway, TransportNetwork};
use netrel::neural::{backward, Activation, Loss, Matrix, Mlp};
use netrel::rng::{Domain, StreamRng};

pub fn rng(seed: u64) -> StreamRng {
    StreamRng::new(seed, Domain::Split, 0xACCE)
}

pub fn below(rng: &mut StreamRng, n: usize) -> usize {
    ((rng.uniform() * n as f64) as usize).min(n - 1)
}

/// Random undirected multigraph with `2..=max_nodes` nodes and
/// `1..=max_links` links; source 0, terminal the last node.
pub fn random_network(rng: &mut StreamRng, max_nodes: usize, max_links: usize) -> TransportNetwork {
    let n = 2 + below(rng, max_nodes - 1);
    let l = 1 + below(rng, max_links);
    let links = (0..l)
        .map(|id| {
            let a = below(rng, n) as NodeId;
            let mut b = below(rng, n) as NodeId;
            if a == b {
                b = (b + 1) % n as NodeId;
            }
            Roadway {
                id,
                endpoints: [a, b],
                bridge_ids: vec![id as BridgeId],
            }
        })
        .collect();
    TransportNetwork::new((0..n as NodeId).collect(), links, 0, n as NodeId - 1).unwrap()
}

/// Every simple source–terminal path, as lists of link positions.
pub fn simple_paths(net: &TransportNetwork) -> Vec<Vec<usize>> {
    fn walk(
        net: &TransportNetwork,
        at: NodeId,
        visited: &mut Vec<NodeId>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == net.terminal() {
            out.push(path.clone());
            return;
        }
        for (k, link) in net.links().iter().enumerate() {
            let [a, b] = link.endpoints;
            let next = if a == at {
                b
            } else if b == at {
                a
            } else {
                continue;
            };
            if visited.contains(&next) {
                continue;
            }
            visited.push(next);
            path.push(k);
            walk(net, next, visited, path, out);
            path.pop();
            visited.pop();
        }
    }
    let mut out = Vec::new();
    walk(
        net,
        net.source(),
        &mut vec![net.source()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

pub fn connected_by_paths(paths: &[Vec<usize>], states: &[u8]) -> bool {
    paths.iter().any(|p| p.iter().all(|&k| states[k] == 1))
}

/// Reliability by summing state probabilities over path-connected states.
pub fn reliability_by_paths(net: &TransportNetwork, probs: &[f64]) -> f64 {
    let paths = simple_paths(net);
    let l = net.num_links();
    let mut states = vec![0u8; l];
    let mut total = 0.0;
    for mask in 0u64..1 << l {
        let mut w = 1.0;
        for k in 0..l {
            states[k] = (mask >> k & 1) as u8;
            w *= if states[k] == 1 {
                probs[k]
            } else {
                1.0 - probs[k]
            };
        }
        if connected_by_paths(&paths, &states) {
            total += w;
        }
    }
    total
}

/// `1/(2M) Σ (ŷ − y)²`
pub fn mse(pred: &[f64], y: &[f64], rows: usize) -> f64 {
    pred.iter()
        .zip(y)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / (2.0 * rows as f64)
}

/// `−Σ [y ln ŷ + (1 − y) ln(1 − ŷ)]`
pub fn bce(pred: &[f64], y: &[f64]) -> f64 {
    -pred
        .iter()
        .zip(y)
        .map(|(&p, &t)| t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        .sum::<f64>()
}

fn param(m: &mut Mlp, layer: usize, bias: bool, i: usize) -> &mut f64 {
    let l = &mut m.layers_mut()[layer];
    if bias {
        &mut l.bias_mut()[i]
    } else {
        &mut l.weights_mut()[i]
    }
}

/// Largest relative error between analytic gradients `(weights, bias)` per
/// layer and central differences of `loss`; `|a − n| / max(|a|, |n|, floor)`.
pub fn gradient_error(
    model: &Mlp,
    analytic: &[(Vec<f64>, Vec<f64>)],
    loss: &dyn Fn(&Mlp) -> f64,
    step: f64,
    floor: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for (li, (gw, gb)) in analytic.iter().enumerate() {
        for (bias, grads) in [(false, gw), (true, gb)] {
            for (i, &a) in grads.iter().enumerate() {
                let orig = *param(&mut probe, li, bias, i);
                *param(&mut probe, li, bias, i) = orig + step;
                let up = loss(&probe);
                *param(&mut probe, li, bias, i) = orig - step;
                let down = loss(&probe);
                *param(&mut probe, li, bias, i) = orig;
                let numeric = (up - down) / (2.0 * step);
                worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(floor));
            }
        }
    }
    worst
}

pub fn forward_all(model: &Mlp, x: &Matrix) -> Vec<f64> {
    model.forward_batch(x).unwrap().into_vec()
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Two-sample KS critical value at the 1% level.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Inverse of `cdf` on `[lo, hi]` by bisection.
pub fn invert(cdf: &dyn Fn(f64) -> f64, u: f64, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if cdf(mid) < u {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    0.5 * (a + b)
}

/// CDF of the truncated exponential with rate `beta` on `[lo, hi]`.
pub fn trunc_exp_cdf(beta: f64, lo: f64, hi: f64, m: f64) -> f64 {
    let m = m.clamp(lo, hi);
    (1.0 - (-beta * (m - lo)).exp()) / (1.0 - (-beta * (hi - lo)).exp())
}

/// Random model with 1..=4 layers of at most 16 units, a random batch, and
/// targets suited to `loss` (binary for BCE, which also gets a sigmoid output).
pub fn random_problem(seed: u64, loss: Loss) -> (Mlp, Matrix, Matrix) {
    let mut r = rng(seed);
    let acts = [
        Activation::Relu,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Identity,
    ];
    let input = 1 + below(&mut r, 16);
    let depth = 1 + below(&mut r, 4);
    let mut spec: Vec<(usize, Activation)> = (0..depth - 1)
        .map(|_| (1 + below(&mut r, 16), acts[below(&mut r, 4)]))
        .collect();
    let out_units = 1 + below(&mut r, 3);
    spec.push(match loss {
        Loss::Bce => (out_units, Activation::Sigmoid),
        Loss::Mse => (out_units, acts[below(&mut r, 4)]),
    });
    let mut model = Mlp::new(input, &spec, seed).unwrap();
    for layer in model.layers_mut() {
        for b in layer.bias_mut() {
            *b = r.uniform() - 0.5;
        }
    }
    let rows = 1 + below(&mut r, 6);
    let x: Vec<f64> = (0..rows * input).map(|_| 2.0 * r.uniform() - 1.0).collect();
    let y: Vec<f64> = (0..rows * out_units)
        .map(|_| match loss {
            Loss::Bce => (r.uniform() < 0.5) as u8 as f64,
            Loss::Mse => r.uniform(),
        })
        .collect();
    (
        model,
        Matrix::from_vec(rows, input, x).unwrap(),
        Matrix::from_vec(rows, out_units, y).unwrap(),
    )
}

/// Max relative error of `backward` against central differences (step 1e-6)
/// of an independently written loss.
pub fn gradient_check(seed: u64, loss: Loss, floor: f64) -> f64 {
    let (model, x, y) = random_problem(seed, loss);
    let g = backward(&model, &x, &y, loss).unwrap();
    let analytic: Vec<(Vec<f64>, Vec<f64>)> =
        g.layers.into_iter().map(|l| (l.weights, l.bias)).collect();
    let rows = x.rows();
    let f = |m: &Mlp| {
        let pred = forward_all(m, &x);
        match loss {
            Loss::Mse => mse(&pred, y.as_slice(), rows),
            Loss::Bce => bce(&pred, y.as_slice()),
        }
    };
    gradient_error(&model, &analytic, &f, 1e-6, floor)
}

/// Bridge ids of [`small_scenario`].
pub const CUT_BRIDGE: BridgeId = 1;
pub const REDUNDANT_BRIDGE: BridgeId = 2;
pub const DANGLING_BRIDGE: BridgeId = 4;

/// Five links on the shipped hazard model, all bridges identical HWB5 at one
/// site: link 0 (0–1) is a cut link with bridge 1, links 1 and 2 (1–2) are
/// parallel with bridges 2 and 3, link 3 (2–3) has no bridge, and link 4
/// (2–4) dangles off the path with bridge 4. Source 0, terminal 3.
pub fn small_scenario() -> netrel::Scenario {
    use netrel::fragility::{Bridge, FragilityTable};
    use netrel::hazard::{GmpeCoefficients, Site};
    use netrel::scenario::{shipped, LOMA_PRIETA};

    let road = |id, a, b, bridges: &[BridgeId]| Roadway {
        id,
        endpoints: [a, b],
        bridge_ids: bridges.to_vec(),
    };
    let links = vec![
        road(0, 0, 1, &[1]),
        road(1, 1, 2, &[2]),
        road(2, 1, 2, &[3]),
        road(3, 2, 3, &[]),
        road(4, 2, 4, &[4]),
    ];
    let net = TransportNetwork::new(vec![0, 1, 2, 3, 4], links, 0, 3).unwrap();
    let table = FragilityTable::from_csv(shipped::FRAGILITY).unwrap();
    let site = Site {
        lat: 37.30,
        lon: -121.90,
        vs30: 350.0,
        basin_depth: 0.5,
    };
    let bridges = (1..=4)
        .map(|id| Bridge {
            id,
            site,
            bridge_class: "HWB5".into(),
            curves: table.get("HWB5").unwrap().clone(),
        })
        .collect();
    netrel::Scenario::new(
        net,
        bridges,
        GmpeCoefficients::from_json(shipped::GMPE).unwrap(),
        LOMA_PRIETA,
    )
    .unwrap()
}

/// OAT improvement of `bridge` in percent with exact reliability per event.
pub fn oat_by_enumeration(
    scenario: &netrel::Scenario,
    magnitudes: &[f64],
    bridge: BridgeId,
    amplification: f64,
) -> f64 {
    let pos = scenario.bridge_position(bridge).unwrap();
    let net = scenario.network();
    let mut base = 0.0;
    let mut better = 0.0;
    for &m in magnitudes {
        let s = scenario.bridge_survivals(m, None).unwrap();
        let mut up = s.clone();
        up[pos] = (s[pos] * (1.0 + amplification)).min(1.0);
        base += reliability_by_paths(net, &scenario.roadway_probs_from(&s));
        better += reliability_by_paths(net, &scenario.roadway_probs_from(&up));
    }
    (better - base) / base * 100.0
}
