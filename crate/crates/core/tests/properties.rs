use lppmirror_core::graph_gen::BitMatrix;
use lppmirror_core::isomap::iso_reduce;
use lppmirror_core::linalg::{polar_factor, Matrix};
use lppmirror_core::localizer::{fit_at_knot, forced_knot_minimum, localize};
use lppmirror_core::lpp_sim::{asymptotic_mirror, true_dmv_matrix, WalkConfig};
use lppmirror_core::mds_mirror::cmds;
use lppmirror_core::spectral_embed::{estimated_dmv, DissimilarityKind, DissimilarityMatrix, Embedding};
use lppmirror_core::summaries::{largest_common_component, network_summaries};
use proptest::prelude::*;

fn grid(m: usize) -> Vec<f64> {
    (1..=m).map(|i| i as f64 / m as f64).collect()
}

fn orthogonal(d: usize, seeds: &[f64]) -> Matrix {
    polar_factor(&Matrix::from_fn(d, d, |i, j| seeds[(i * d + j) % seeds.len()] - 0.5 + if i == j { 0.3 } else { 0.0 }))
        .unwrap()
}

fn up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let d = |s: f64| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - s * y).abs()));
    d(1.0).min(d(-1.0))
}

fn series_strategy() -> impl Strategy<Value = Vec<f64>> {
    (6usize..30).prop_flat_map(|m| prop::collection::vec(-1.0f64..1.0, m))
}

/// Undirected graph on `n` vertices from a mask over the upper triangle.
fn graph_from_mask(n: usize, mask: &[bool]) -> BitMatrix {
    let mut g = BitMatrix::new(n);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if mask[k % mask.len()] {
                g.set(i, j, true);
                g.set(j, i, true);
            }
            k += 1;
        }
    }
    g
}

fn connected_in(g: &BitMatrix, set: &[usize]) -> bool {
    let mut seen = vec![false; set.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(a) = stack.pop() {
        for b in 0..set.len() {
            if !seen[b] && g.get(set[a], set[b]) {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    seen.iter().all(|s| *s)
}

fn brute_force_lcc(series: &[BitMatrix]) -> usize {
    let n = series[0].n();
    (1u32..(1 << n))
        .map(|mask| (0..n).filter(|v| mask >> v & 1 == 1).collect::<Vec<usize>>())
        .filter(|s| s.len() >= 2 && series.iter().all(|g| connected_in(g, s)))
        .map(|s| s.len())
        .max()
        .unwrap_or(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn localizer_sign_invariance(ys in series_strategy()) {
        let ts = grid(ys.len());
        let a = localize(&ts, &ys).unwrap();
        let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
        let b = localize(&ts, &neg).unwrap();
        prop_assert_eq!(a.t_hat_index, b.t_hat_index);
        for (x, y) in a.per_knot_objectives.iter().zip(&b.per_knot_objectives) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn localizer_affine_invariance(ys in series_strategy(), a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let ts = grid(ys.len());
        let base = localize(&ts, &ys).unwrap();
        let moved: Vec<f64> = ys.iter().zip(&ts).map(|(y, t)| y + a + b * t).collect();
        let fit = localize(&ts, &moved).unwrap();
        prop_assert_eq!(base.t_hat_index, fit.t_hat_index);
        for (x, y) in base.per_knot_objectives.iter().zip(&fit.per_knot_objectives) {
            prop_assert!((x - y).abs() < 1e-10, "{} vs {}", x, y);
        }
    }

    #[test]
    fn localizer_scale_equivariance(ys in series_strategy(), c in 0.01f64..100.0) {
        let ts = grid(ys.len());
        let base = localize(&ts, &ys).unwrap();
        let scaled: Vec<f64> = ys.iter().map(|y| c * y).collect();
        let fit = localize(&ts, &scaled).unwrap();
        prop_assert_eq!(base.t_hat_index, fit.t_hat_index);
        for (x, y) in base.per_knot_objectives.iter().zip(&fit.per_knot_objectives) {
            prop_assert!((c * x - y).abs() < 1e-10 * c.max(1.0));
        }
    }

    #[test]
    fn dmv_orthogonal_invariance(
        d in 1usize..4,
        vals in prop::collection::vec(-1.0f64..1.0, 120),
        rot in prop::collection::vec(0.0f64..1.0, 9),
    ) {
        let n = 40;
        let x = Matrix::from_fn(n, d, |i, j| vals[(i * d + j) % vals.len()]);
        let q = orthogonal(d, &rot);
        let e1 = Embedding { coords: x.clone(), eigenvalues: vec![1.0; d] };
        let e2 = Embedding { coords: x.matmul(&q).unwrap(), eigenvalues: vec![1.0; d] };
        prop_assert!(estimated_dmv(&e1, &e2).unwrap() < 1e-8);
        let y = Matrix::from_fn(n, d, |i, j| vals[(i * d + j + 7) % vals.len()]);
        let e3 = Embedding { coords: y.clone(), eigenvalues: vec![1.0; d] };
        let e4 = Embedding { coords: y.matmul(&q).unwrap(), eigenvalues: vec![1.0; d] };
        let base = estimated_dmv(&e1, &e3).unwrap();
        prop_assert!((base - estimated_dmv(&e2, &e4).unwrap()).abs() < 1e-8);
        prop_assert!((base - estimated_dmv(&e3, &e1).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn cmds_homogeneity(vals in prop::collection::vec(-1.0f64..1.0, 30), s in 0.01f64..50.0) {
        let pts = Matrix::from_fn(10, 3, |i, j| vals[i * 3 + j]);
        let d = DissimilarityMatrix::euclidean(&pts);
        let sd = DissimilarityMatrix { values: d.values.scale(s), kind: DissimilarityKind::Euclidean };
        let a = cmds(&d, 3).unwrap();
        let b = cmds(&sd, 3).unwrap();
        for k in 0..3 {
            prop_assert!((a.spectrum[k] * s * s - b.spectrum[k]).abs() < 1e-10 * (s * s).max(1.0));
            // columns with a small eigenvalue gap may rotate; compare well-separated ones
            if k == 0 || (a.spectrum[k - 1] - a.spectrum[k]) > 1e-3 * a.spectrum[0] {
                if k + 1 == 3 || (a.spectrum[k] - a.spectrum[k + 1]) > 1e-3 * a.spectrum[0] {
                    let ca: Vec<f64> = a.coords.column(k).iter().map(|v| v * s).collect();
                    prop_assert!(up_to_sign(&ca, &b.coords.column(k)) < 1e-10 * s.max(1.0));
                }
            }
        }
    }

    #[test]
    fn iso_rigid_motion(
        bend in 0.0f64..2.0,
        rot in prop::collection::vec(0.0f64..1.0, 9),
        shift in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let m = 30;
        let pts = Matrix::from_fn(m, 3, |i, j| {
            let s = i as f64 / m as f64 * (1.0 + 0.02 * i as f64);
            [s, bend * s * s, 0.3 * (3.0 * s).sin()][j]
        });
        let q = orthogonal(3, &rot);
        let moved = pts.matmul(&q).unwrap();
        let moved = Matrix::from_fn(m, 3, |i, j| moved[(i, j)] + shift[j]);
        let a = iso_reduce(&pts).unwrap();
        let b = iso_reduce(&moved).unwrap();
        prop_assert_eq!(a.k_used, b.k_used);
        prop_assert!(up_to_sign(&a.values, &b.values) < 1e-8);
    }

    #[test]
    fn density_plus_path_length(n in 3usize..20, mask in prop::collection::vec(any::<bool>(), 1..200)) {
        // a hub joined to everyone bounds the diameter by 2
        let mut g = graph_from_mask(n, &mask);
        for v in 1..n {
            g.set(0, v, true);
            g.set(v, 0, true);
        }
        let s = network_summaries(&[g]).unwrap()[0];
        prop_assert!((s.edge_density + s.avg_path_length.unwrap() - 2.0).abs() < 1e-12);
        prop_assert_eq!(s.reciprocity, Some(1.0));
    }

    #[test]
    fn frobenius_single_edge(n in 2usize..30, mask in prop::collection::vec(any::<bool>(), 1..100), pick in any::<usize>()) {
        let a = graph_from_mask(n, &mask);
        let mut b = a.clone();
        let i = pick % n;
        let j = (i + 1 + (pick / n) % (n - 1)) % n;
        let flip = !b.get(i, j);
        b.set(i, j, flip);
        b.set(j, i, flip);
        let s = network_summaries(&[a, b]).unwrap();
        prop_assert!((s[1].frobenius_step - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn common_component_is_largest(
        n in 3usize..=12,
        masks in prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.45), 66), 1..4),
    ) {
        let series: Vec<BitMatrix> = masks.iter().map(|m| graph_from_mask(n, m)).collect();
        let (set, restricted) = largest_common_component(&series).unwrap();
        prop_assert_eq!(set.len(), brute_force_lcc(&series));
        if !set.is_empty() {
            for g in &series {
                prop_assert!(connected_in(g, &set));
            }
            prop_assert_eq!(restricted[0].n(), set.len());
        }
    }

    #[test]
    fn true_dmv_is_a_metric(m in 3usize..25, p in 0.0f64..1.0, q in 0.0f64..1.0, ts in 0.05f64..0.95) {
        let d = true_dmv_matrix(&WalkConfig::scaled(m, p, q, ts, 0.1, 0)).unwrap().values;
        for i in 0..m {
            prop_assert_eq!(d[(i, i)], 0.0);
            for j in 0..m {
                prop_assert_eq!(d[(i, j)], d[(j, i)]);
                for k in 0..m {
                    prop_assert!(d[(i, k)] <= d[(i, j)] + d[(j, k)] + 1e-12);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lp_matches_continuum_oracle(p in 0.2f64..0.9, q in 0.0f64..0.2, k in 100usize..1900) {
        let m = 2001;
        let ts: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| asymptotic_mirror(p, q, 0.5, *t)).collect();
        let fit = fit_at_knot(&ts, &ys, k).unwrap();
        let want = forced_knot_minimum(p - q, 0.5, ts[k], 1.0);
        prop_assert!((fit.objective - want).abs() <= 2.0 / m as f64 * (p - q));
    }
}
