use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::contagion::{build_true_model, sample_with, DiffusionModel, EdgeParams, ModelDescriptor};
use crate::graph::{generate_er, Graph};
use crate::rng;

fn realization(n: usize, edges: &[(usize, usize, f64)]) -> Realization {
    let g = Arc::new(Graph::from_edges(n, edges.iter().map(|&(u, v, _)| (u, v))).unwrap().0);
    let live = edges.iter().map(|&(u, v, t)| (g.find_edge(u, v).unwrap(), t)).collect();
    Realization::from_live_edges(g, live).unwrap()
}

fn path3() -> Realization {
    realization(3, &[(0, 1, 1.0), (1, 2, 1.0)])
}

fn random_realization(n: usize, m: usize, seed: u64) -> Realization {
    let g = Arc::new(generate_er(n, m, seed).unwrap());
    let params = (0..g.edge_count()).map(|_| EdgeParams { p: 0.6, shape: 1.5, scale: 2.0 }).collect();
    let model = DiffusionModel::new(g, params, ModelDescriptor::Explicit).unwrap();
    sample_with(&model, &mut rng::rng(seed ^ 0xabc))
}

#[test]
fn task_tags() {
    assert_eq!("DE".parse::<TaskKind>().unwrap(), TaskKind::De);
    assert_eq!("dc".parse::<TaskKind>().unwrap(), TaskKind::Dc);
    assert!("xx".parse::<TaskKind>().is_err());
    assert_eq!(TaskKind::Dc.to_string(), "dc");
}

#[test]
fn earliest_arrival_examples() {
    let r = path3();
    assert_eq!(earliest_arrival(&r, &[]).unwrap(), vec![None; 3]);
    assert_eq!(earliest_arrival(&r, &[0]).unwrap(), vec![Some(0.0), Some(1.0), Some(2.0)]);
    assert!(earliest_arrival(&r, &[3]).is_err());
}

fn path_oracle(r: &Realization, u: NodeId, t: f64, seen: &mut Vec<bool>, best: &mut [Option<f64>]) {
    if best[u].is_none_or(|b| t < b) {
        best[u] = Some(t);
    }
    for (v, dt) in r.live_out(u) {
        if !seen[v] {
            seen[v] = true;
            path_oracle(r, v, t + dt, seen, best);
            seen[v] = false;
        }
    }
}

#[test]
fn earliest_arrival_matches_path_enumeration() {
    for seed in 0..30 {
        let r = random_realization(8, 20, seed);
        let sources: Vec<NodeId> = (0..8).filter(|v| (seed + *v as u64).is_multiple_of(3)).collect();
        let mut best = vec![None; 8];
        for &s in &sources {
            let mut seen = vec![false; 8];
            seen[s] = true;
            path_oracle(&r, s, 0.0, &mut seen, &mut best);
        }
        let got = earliest_arrival(&r, &sources).unwrap();
        for (a, b) in got.iter().zip(&best) {
            match (a, b) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9),
                (None, None) => {}
                _ => panic!("reachability mismatch {got:?} vs {best:?}"),
            }
        }
    }
}

#[test]
fn kernel_de_examples() {
    let r = path3();
    assert_eq!(kernel_de(&r, &[0, 1, 2], &[]), 0);
    assert_eq!(kernel_de(&r, &[0, 2], &[0, 2]), 2);
    assert_eq!(kernel_de(&r, &[2], &[0]), 1);
    assert_eq!(kernel_de(&r, &[0], &[2]), 0);
}

#[test]
fn kernel_dc_examples() {
    let r = path3();
    assert_eq!(kernel_dc(&r, &[], &[1]), 3);
    assert_eq!(kernel_dc(&r, &[0], &[]), 0);
    assert_eq!(kernel_dc(&r, &[0], &[2]), 1);
    assert_eq!(kernel_dc(&r, &[0], &[1]), 2);
    // overlap with X is ignored on the positive side
    assert_eq!(kernel_dc(&r, &[0], &[0]), 0);
}

#[test]
fn feature_map_examples() {
    let g = Arc::new(generate_er(30, 60, 4).unwrap());
    let m = build_true_model(g, 5).unwrap();
    let bank = sample_bank(&m, 6, 7).unwrap();
    let x = [1, 4, 9, 12];
    let y = [2, 3];
    let f = feature_map(&bank, TaskKind::Dc, &x, &y).unwrap();
    assert_eq!(f.values.len(), 6);
    let avg = bank.realizations().iter().map(|r| kernel_dc(r, &x, &y) as f64).sum::<f64>() / 6.0;
    assert!((f.dot(&[1.0; 6]) / 6.0 - avg).abs() < 1e-12);
    assert_eq!(feature_map(&bank, TaskKind::De, &x, &[]).unwrap().values, vec![0.0; 6]);
    let one = bank.prefix(1).unwrap();
    let f1 = feature_map(&one, TaskKind::De, &x, &y).unwrap();
    assert_eq!(f1.values, vec![kernel_de(&bank.realizations()[0], &x, &y) as f64]);
    assert!(feature_map(&bank, TaskKind::De, &[40], &y).is_err());
}

#[test]
fn estimate_examples() {
    let g = Arc::new(Graph::from_edges(4, [(0, 1), (1, 2), (3, 2)]).unwrap().0);
    let params = vec![EdgeParams { p: 1.0, shape: 2.0, scale: 3.0 }; 3];
    let m = DiffusionModel::new(g, params, ModelDescriptor::Explicit).unwrap();
    let e = estimate_objective(&m, TaskKind::De, &[1, 2, 3], &[0], 50, 1).unwrap();
    assert_eq!(e.mean, 2.0);
    assert_eq!(e.std_err, 0.0);
    assert_eq!(estimate_objective(&m, TaskKind::De, &[1, 2], &[], 10, 1).unwrap().mean, 0.0);
    assert_eq!(estimate_objective(&m, TaskKind::Dc, &[], &[1], 10, 1).unwrap().mean, 4.0);
    assert!(estimate_objective(&m, TaskKind::De, &[1], &[0], 0, 1).is_err());
    let a = estimate_objective(&m, TaskKind::Dc, &[0], &[3], 20, 9).unwrap();
    let b = estimate_objective(&m, TaskKind::Dc, &[0], &[3], 20, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn standard_error_shrinks_like_inverse_sqrt() {
    let g = Arc::new(generate_er(60, 150, 2).unwrap());
    let m = build_true_model(g, 3).unwrap();
    let x: Vec<NodeId> = (0..20).collect();
    let small = estimate_objective(&m, TaskKind::De, &x, &[20, 21, 22, 23], 400, 1).unwrap();
    let large = estimate_objective(&m, TaskKind::De, &x, &[20, 21, 22, 23], 6400, 2).unwrap();
    assert!(small.std_err > 0.0);
    let ratio = small.std_err / large.std_err;
    assert!((2.8..5.6).contains(&ratio), "ratio {ratio}");
    assert!((small.mean - large.mean).abs() < 4.0 * small.std_err);
}

fn random_sets(seed: u64, n: usize) -> (Vec<NodeId>, Vec<NodeId>, Vec<NodeId>, NodeId) {
    let mut r = rng::rng(seed);
    let x: Vec<NodeId> = (0..n).filter(|_| r.random_bool(0.3)).collect();
    let y: Vec<NodeId> = (0..n).filter(|_| r.random_bool(0.2)).collect();
    let mut y2 = y.clone();
    y2.extend((0..n).filter(|v| !y.contains(v) && r.random_bool(0.25)));
    let v = r.random_range(0..n);
    (x, y, y2, v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn kernels_are_monotone_and_submodular(seed in 0u64..100_000, dc in any::<bool>()) {
        let n = 9;
        let r = random_realization(n, 22, seed);
        let (x, y, y2, v) = random_sets(seed.wrapping_mul(31), n);
        prop_assume!(!y2.contains(&v));
        let task = if dc { TaskKind::Dc } else { TaskKind::De };
        let f = |s: &[NodeId]| kernel(&r, task, &x, s) as i64;
        let with = |s: &[NodeId]| { let mut t = s.to_vec(); t.push(v); f(&t) };
        prop_assert!(f(&y) <= f(&y2));
        prop_assert!(f(&y) <= with(&y));
        prop_assert!(with(&y) - f(&y) >= with(&y2) - f(&y2));
    }

    #[test]
    fn kernel_ranges(seed in 0u64..100_000) {
        let n = 12;
        let r = random_realization(n, 30, seed);
        let (x, y, _, _) = random_sets(seed, n);
        let reach = live_reach(&r, &x).iter().filter(|&&b| b).count();
        prop_assert!(kernel_de(&r, &x, &y) <= x.len());
        let dc = kernel_dc(&r, &x, &y);
        prop_assert!(n - reach <= dc && dc <= n);
    }
}
