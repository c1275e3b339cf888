use gba_core::adversaries::{Adversary, AdversarySpec};
use gba_core::approachability::{
    check_condition_c, prediction_payoff_matrix, r_set_vertices, run_game, rule_strategy,
};
use gba_core::geometry::{affine_hull, intersect, project_affine, Intersection};
use gba_core::predictor::{sample_category, PredictorState};
use gba_core::prism::{
    classify, project_oracle, project_to_target, psi, side_values, HyperplaneFamily, Region,
};
use gba_core::rule::{
    auxiliary_point, classic_blackwell2, decide, lemma2_projection, partition, randomize, RuleCase,
};
use gba_core::{Point, PrismPoint, SimplexDistribution, StateW, Tolerance};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS_TEST: f64 = 1e-8;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn simplex(weights: Vec<f64>) -> SimplexDistribution {
    let total: f64 = weights.iter().sum();
    SimplexDistribution::new(weights.iter().map(|w| w / total).collect(), tol()).unwrap()
}

/// `(q, γ)` with strictly positive weights for `q`.
fn state(d: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = StateW> {
    d.prop_flat_map(|d| (prop::collection::vec(0.01f64..1.0, d), 0.0f64..=1.0))
        .prop_map(|(w, g)| StateW::new(simplex(w), g).unwrap())
}

fn outside_state(d: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = PrismPoint> {
    state(d)
        .prop_map(|w| psi(&w))
        .prop_filter("outside the target", |v| {
            classify(v, Tolerance::default()) == Region::Outside
        })
}

fn points(d: usize, n: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(prop::collection::vec(-2.0f64..2.0, d), n)
        .prop_map(|ps| ps.into_iter().map(|c| Point::new(c).unwrap()).collect())
}

fn point_sets() -> impl Strategy<Value = (Vec<Point>, Point)> {
    (2usize..=6, 1usize..=5).prop_flat_map(|(d, n)| (points(d, n), points(d, 1)))
        .prop_map(|(ps, v)| (ps, v.into_iter().next().unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hull_basis_is_orthonormal((ps, _) in point_sets()) {
        let a = affine_hull(&ps, tol()).unwrap();
        for (i, b) in a.basis().iter().enumerate() {
            for (j, c) in a.basis().iter().enumerate() {
                let delta = if i == j { 1.0 } else { 0.0 };
                prop_assert!((b.dot(c) - delta).abs() <= EPS_TEST);
            }
        }
    }

    #[test]
    fn affine_projection_is_idempotent_and_orthogonal((ps, v) in point_sets()) {
        let a = affine_hull(&ps, tol()).unwrap();
        let once = project_affine(&v, &a);
        let twice = project_affine(&once, &a);
        prop_assert!(once.max_abs_diff(&twice) <= EPS_TEST);
        let r = v.sub(&once);
        for b in a.basis() {
            prop_assert!(r.dot(b).abs() <= EPS_TEST);
        }
    }

    #[test]
    fn intersection_is_symmetric(
        (a, b) in (2usize..=5, 1usize..=4, 1usize..=4)
            .prop_flat_map(|(d, n, m)| (points(d, n), points(d, m)))
    ) {
        let a = affine_hull(&a, tol()).unwrap();
        let b = affine_hull(&b, tol()).unwrap();
        let ab = intersect(&a, &b, tol()).unwrap();
        let ba = intersect(&b, &a, tol()).unwrap();
        prop_assert_eq!(ab.dim(), ba.dim());
        if let (Intersection::Point(x), Intersection::Point(y)) = (&ab, &ba) {
            prop_assert!(x.max_abs_diff(y) <= EPS_TEST);
        }
    }

    #[test]
    fn normals_are_orthonormal(d in 2usize..=16) {
        let fam = HyperplaneFamily::new(d).unwrap();
        for (k, a) in fam.normals().iter().enumerate() {
            for (l, b) in fam.normals().iter().enumerate() {
                let delta = if k == l { 1.0 } else { 0.0 };
                prop_assert!((a.dot(b) - delta).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn side_values_are_gamma_minus_q(w in state(2..=8)) {
        let sigma = side_values(&psi(&w));
        for (l, s) in sigma.iter().enumerate() {
            prop_assert!((s - (w.gamma - w.q[l])).abs() <= 1e-12);
        }
    }

    #[test]
    fn psi_distance_formula(pair in (2usize..=8).prop_flat_map(|d| (state(d..=d), state(d..=d)))) {
        let (z, zp) = pair;
        let d = z.q.len();
        let lhs = psi(&z).point().dist(psi(&zp).point()).powi(2);
        let rhs: f64 = (0..d).map(|i| (z.q[i] - zp.q[i]).powi(2)).sum::<f64>()
            + d as f64 * (z.gamma - zp.gamma).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn membership_matches_max_frequency_test(w in state(2..=8)) {
        let v = psi(&w);
        let max_q = w.q.probs().iter().copied().fold(0.0, f64::max);
        prop_assert_eq!(
            classify(&v, tol()) != Region::Outside,
            w.gamma >= max_q - tol().eps_geom
        );
    }

    #[test]
    fn projection_beats_feasible_points(v in outside_state(2..=6), seed in any::<u64>()) {
        let d = v.dim();
        let proj = project_to_target(&v, tol());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let q = simplex((0..d).map(|_| rng.gen::<f64>() + 1e-3).collect());
            let max_q = q.probs().iter().copied().fold(0.0, f64::max);
            let gamma = max_q + rng.gen::<f64>() * (1.0 - max_q);
            let y = psi(&StateW::new(q, gamma).unwrap());
            prop_assert!(proj.dist <= v.point().dist(y.point()) + EPS_TEST);
        }
    }

    #[test]
    fn projection_matches_oracle(w in state(2..=6)) {
        let v = psi(&w);
        let fast = project_to_target(&v, tol()).point;
        prop_assert!(fast.max_abs_diff(&project_oracle(&v)) <= EPS_TEST);
    }

    #[test]
    fn randomization_is_a_distribution_that_skips_above(v in outside_state(2..=8)) {
        let p = randomize(&v, tol()).unwrap();
        prop_assert!(p.probs().iter().all(|&x| x >= 0.0));
        prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for &l in &partition(&v, tol()).above {
            prop_assert_eq!(p[l], 0.0);
        }
    }

    #[test]
    fn two_category_rule_matches_classic(x in 0.0f64..=1.0, g in 0.0f64..=1.0) {
        let q = SimplexDistribution::new(vec![1.0 - x, x], tol()).unwrap();
        let v = psi(&StateW::new(q, g).unwrap());
        prop_assume!(classify(&v, tol()) == Region::Outside);
        let p = randomize(&v, tol()).unwrap();
        prop_assert!((p[1] - classic_blackwell2(x, g)).abs() <= 1e-12);
    }

    #[test]
    fn boundary_points_are_uniform_over_their_planes(w in state(2..=8), ties in 0usize..4) {
        // lift γ onto max q and copy the top frequency onto a few more categories
        let d = w.q.len();
        let mut q = w.q.probs().to_vec();
        let top = q.iter().copied().fold(0.0, f64::max);
        for x in q.iter_mut().take(ties.min(d)) {
            *x = top;
        }
        let q = simplex(q);
        let max_q = q.probs().iter().copied().fold(0.0, f64::max);
        let v = psi(&StateW::new(q, max_q).unwrap());
        let decision = decide(&v, tol()).unwrap();
        let Region::Boundary(planes) = classify(&v, tol()) else {
            return Err(TestCaseError::fail("expected a boundary point"));
        };
        prop_assert_eq!(decision.case, RuleCase::Case2);
        for l in 0..d {
            let expected = if planes.contains(&l) { 1.0 / planes.len() as f64 } else { 0.0 };
            prop_assert!((decision.dist[l] - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn unseen_category_is_never_predicted(
        w in state(3..=8),
        hidden in 0usize..8,
    ) {
        let d = w.q.len();
        let hidden = hidden % d;
        let mut q = w.q.probs().to_vec();
        q[hidden] = 0.0;
        let q = simplex(q.iter().map(|x| x.max(0.0)).collect());
        let gamma = w.gamma.max(1e-3);
        let v = psi(&StateW::new(q, gamma).unwrap());
        // strictly inside the target the rule has no geometry to follow
        prop_assume!(classify(&v, tol()) != Region::Interior);
        prop_assert_eq!(decide(&v, tol()).unwrap().dist[hidden], 0.0);
    }

    #[test]
    fn closed_form_chain_and_orthogonality(v in outside_state(2..=6)) {
        let d = v.dim();
        let p = randomize(&v, tol()).unwrap();
        let proj = project_to_target(&v, tol()).point;
        let aux = auxiliary_point(&v, &p, &proj, tol()).unwrap();
        let closed = lemma2_projection(&p, &aux.lambdas, &aux.partition);
        prop_assert!(closed.max_abs_diff(&proj) <= EPS_TEST);
        let offset = aux.v_tilde.sub(&closed);
        for &i in &aux.partition.below {
            let w = Point::unit(d, i).add_scaled(p[i], &Point::ones(d)).sub(&closed);
            prop_assert!(offset.dot(&w).abs() <= EPS_TEST);
        }
        for &i in &aux.partition.above {
            let w = Point::unit(d, i).sub(&closed);
            prop_assert!(offset.dot(&w).abs() <= EPS_TEST);
        }
    }

    #[test]
    fn condition_c_holds(v in outside_state(2..=6)) {
        let r = check_condition_c(&v, tol()).unwrap();
        prop_assert!(!r.violated, "{r:?}");
    }

    #[test]
    fn vertices_are_linear_in_the_mixed_action(
        pair in (2usize..=6).prop_flat_map(|d| (
            prop::collection::vec(0.01f64..1.0, d),
            prop::collection::vec(0.01f64..1.0, d),
        )),
        alpha in 0.0f64..=1.0,
    ) {
        let (a, b) = pair;
        let (p, pp) = (simplex(a), simplex(b));
        let mixed = simplex(
            p.probs().iter().zip(pp.probs()).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect(),
        );
        let m = prediction_payoff_matrix(p.len()).unwrap();
        let (vp, vpp, vm) = (
            r_set_vertices(&m, &p).unwrap(),
            r_set_vertices(&m, &pp).unwrap(),
            r_set_vertices(&m, &mixed).unwrap(),
        );
        for ((x, y), z) in vp.iter().zip(&vpp).zip(&vm) {
            let combo = x.scale(alpha).add(&y.scale(1.0 - alpha));
            prop_assert!(combo.max_abs_diff(z) <= 1e-12);
        }
    }

    #[test]
    fn game_average_stays_in_prism(d in 2usize..=5, seed in any::<u64>(), rounds in 1usize..200) {
        let m = prediction_payoff_matrix(d).unwrap();
        let mut adv = Adversary::new(&AdversarySpec::iid_uniform(), d, seed).unwrap();
        let t = run_game(&m, rule_strategy(d, 0, tol()), |_, p| adv.next(Some(p)), rounds, seed)
            .unwrap();
        prop_assert!(PrismPoint::new(t.average().unwrap(), tol()).is_ok());
    }

    #[test]
    fn omitted_category_never_appears(d in 2usize..=6, k in 0usize..6, seed in any::<u64>()) {
        let k = k % d;
        let spec = AdversarySpec::OmitCategory { omitted: k, inner: Box::new(AdversarySpec::iid_uniform()) };
        let mut a = Adversary::new(&spec, d, seed).unwrap();
        for _ in 0..500 {
            prop_assert_ne!(a.next(None).unwrap(), k);
        }
    }

    #[test]
    fn seeded_runs_are_reproducible(d in 2usize..=5, seed in any::<u64>()) {
        let run = || {
            let mut s = PredictorState::init(d, seed, 0).unwrap();
            let mut a = Adversary::new(&AdversarySpec::iid_uniform(), d, seed ^ 1).unwrap();
            (0..300).map(|_| {
                let pred = s.predict().unwrap();
                let x = a.next(Some(&pred.dist)).unwrap();
                s.observe(x, pred.y).unwrap()
            }).collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
    }
}

#[test]
fn sampling_frequencies_match_probabilities() {
    let p = SimplexDistribution::new(vec![0.1, 0.25, 0.05, 0.6], tol()).unwrap();
    let draws = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        counts[sample_category(&p, rng.gen())] += 1;
    }
    for (k, &c) in counts.iter().enumerate() {
        let freq = c as f64 / draws as f64;
        let se = (p[k] * (1.0 - p[k]) / draws as f64).sqrt();
        assert!((freq - p[k]).abs() <= 4.0 * se, "category {k}: {freq} vs {}", p[k]);
    }
}
