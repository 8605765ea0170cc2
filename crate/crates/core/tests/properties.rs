use proptest::prelude::*;
use rand::Rng;

use ftmetro::bits::BitVector;
use ftmetro::core_model::{binom_weight_prob, derive_effective_noise, rng_stream, EffectiveNoise, NoiseModel, NoiseParams};
use ftmetro::decoder::{brute_force_decode, build_matching_graph, decode, GraphNoise};
use ftmetro::fisher::{
    binary_fi, exact_small_n_fi, fi_qec, m2bar_of, mixture_distribution, qec_distribution, ParityVariant,
    ProtocolParams, StageRates,
};
use ftmetro::meas_sim::{majority_vote_exact_tail, majority_vote_union_bound};
use ftmetro::prep_sim::aggregate;
use ftmetro::rep_code::{
    chain_from_syndrome, detectors_from, phenomenological_history_with, syndrome_of, Detector, PhenomFault,
};
use ftmetro::threshold::{crossover_threshold, fit_finite_size, fit_finite_size_with_step, CurvePoint};

fn bits(max_len: usize) -> impl Strategy<Value = Vec<bool>> {
    (2..=max_len).prop_flat_map(|n| prop::collection::vec(any::<bool>(), n))
}

fn pair_of_bits(max_len: usize) -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    (2..=max_len).prop_flat_map(|n| (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n)))
}

fn weight_dist(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n + 1).prop_map(|v| {
        let s: f64 = v.iter().sum::<f64>().max(1e-12);
        v.iter().map(|x| x / s).collect()
    })
}

/// Truncates or pads a distribution to n + 1 entries and renormalizes.
fn resized(mut v: Vec<f64>, n: usize) -> Vec<f64> {
    v.resize(n + 1, 0.0);
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter().map(|x| x / s).collect()
    } else {
        let mut z = vec![0.0; n + 1];
        z[0] = 1.0;
        z
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn syndrome_is_linear((a, b) in pair_of_bits(150)) {
        let (a, b) = (BitVector::from_bools(&a), BitVector::from_bools(&b));
        prop_assert_eq!(syndrome_of(&a.xor(&b)), syndrome_of(&a).xor(&syndrome_of(&b)));
    }

    #[test]
    fn chain_reproduces_any_syndrome(s in bits(150)) {
        let s = BitVector::from_bools(&s);
        let chain = chain_from_syndrome(&s);
        prop_assert_eq!(chain.len(), s.len() + 1);
        prop_assert_eq!(syndrome_of(&chain), s);
    }

    #[test]
    fn complement_has_same_syndrome_and_dual_weight(b in bits(200)) {
        let b = BitVector::from_bools(&b);
        let c = b.complement();
        prop_assert_eq!(c.weight(), b.len() - b.weight());
        prop_assert_eq!(syndrome_of(&c), syndrome_of(&b));
        prop_assert!(syndrome_of(&BitVector::ones(b.len())).is_zero());
    }

    #[test]
    fn binomial_weights_sum_to_one(n in 0u64..=64, r in 0.0f64..=1.0) {
        let total: f64 = (0..=n).map(|w| binom_weight_prob(n, w, r).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn effective_noise_is_monotone(
        base in prop::array::uniform4(0.0f64..0.02),
        which in 0usize..4,
        bump in 0.0f64..0.02,
    ) {
        let params = |v: [f64; 4]| NoiseParams::new(v[0], v[1], v[2], v[3]).unwrap();
        let mut raised = base;
        raised[which] += bump;
        let lo = derive_effective_noise(&params(base)).unwrap();
        let hi = derive_effective_noise(&params(raised)).unwrap();
        prop_assert!(hi.p_eff >= lo.p_eff && hi.q_eff >= lo.q_eff && hi.q_x >= lo.q_x);
    }

    #[test]
    fn shot_streams_do_not_depend_on_order(seed in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        let draw = |i: u64| -> Vec<u64> { let mut r = rng_stream(seed, i); (0..4).map(|_| r.random()).collect() };
        let first = draw(a);
        let _ = draw(b);
        prop_assert_eq!(draw(a), first);
    }

    #[test]
    fn single_fault_detector_footprints(n in 3usize..12, rounds in 3usize..8, pick in any::<prop::sample::Index>(), data in any::<bool>()) {
        let fault = if data {
            PhenomFault::Data { round: 1 + pick.index(rounds - 1), qubit: pick.index(n) }
        } else {
            PhenomFault::Meas { round: pick.index(rounds), check: pick.index(n - 1) }
        };
        let grid = detectors_from(&phenomenological_history_with(n, rounds, &[fault]), NoiseModel::Phenomenological).unwrap();
        let fired = &grid.fired;
        match fault {
            PhenomFault::Data { round, qubit } => {
                let expected = usize::from(qubit > 0) + usize::from(qubit < n - 1);
                prop_assert_eq!(fired.len(), expected);
                prop_assert!(fired.iter().all(|d| d.row as usize == round - 1));
            }
            PhenomFault::Meas { round, check } => {
                prop_assert!(fired.iter().all(|d| d.col as usize == check));
                if round == 0 || round == rounds - 1 {
                    prop_assert_eq!(fired.len(), 1);
                } else {
                    prop_assert_eq!(fired.len(), 2);
                    prop_assert_eq!(fired[1].row, fired[0].row + 1);
                }
            }
        }
    }

    #[test]
    fn matching_is_optimal_on_small_grids(
        n in 3usize..=6,
        rounds in 2usize..=6,
        p in 0.005f64..0.2,
        q in 0.005f64..0.2,
        picks in prop::collection::vec(any::<prop::sample::Index>(), 0..=6),
    ) {
        let g = build_matching_graph(n, rounds, GraphNoise::Effective(EffectiveNoise::phenomenological(p, q).unwrap()), NoiseModel::Phenomenological).unwrap();
        let cells = g.rows() * g.cols();
        let mut idx: Vec<usize> = picks.iter().map(|i| i.index(cells)).collect();
        idx.sort_unstable();
        idx.dedup();
        let defects: Vec<Detector> = idx.iter().map(|&i| Detector::new(i / g.cols(), i % g.cols())).collect();
        let fast = decode(&g, &defects).unwrap();
        let slow = brute_force_decode(&g, &defects).unwrap();
        prop_assert_eq!(fast.iweight, slow.iweight);
    }

    #[test]
    fn moment_identity_and_ranges(n in 2usize..200, raw in prop::collection::vec(any::<prop::sample::Index>(), 1..300)) {
        let weights: Vec<usize> = raw.iter().map(|i| i.index(n / 2 + 1)).collect();
        let s = aggregate(n, 4, &weights, 3);
        let direct: f64 = weights.iter().map(|&w| ((n as f64) - 2.0 * w as f64).powi(2)).sum::<f64>() / weights.len() as f64;
        prop_assert!((s.m2bar - direct).abs() <= 1e-9 * direct.max(1.0));
        prop_assert!((0.0..=1.0).contains(&s.m_rms_over_n));
        prop_assert!(s.mean_w2 + 1e-9 >= s.mean_w * s.mean_w);
    }

    #[test]
    fn majority_tail_decreases_and_sits_below_union_bound(half in 0u32..15, q in 0.0001f64..0.4999) {
        let r = 2 * half + 1;
        let t = majority_vote_exact_tail(r, q);
        prop_assert!(majority_vote_exact_tail(r + 2, q) < t);
        prop_assert!(t <= majority_vote_union_bound(r, q) * (1.0 + 1e-12));
    }

    #[test]
    fn outcome_distributions_are_normalized(
        n in 1usize..=8,
        p in 0.0f64..0.2,
        wm in 0.0f64..0.2,
        wp in 0.0f64..0.2,
        theta in -0.1f64..0.1,
        w0 in (1usize..=8).prop_flat_map(weight_dist),
    ) {
        let w0 = resized(w0, n);
        let rates = StageRates { p, wp_meas: wm, wp_prep: wp };
        let d = qec_distribution(n, &rates, &w0, theta).unwrap();
        prop_assert!((d.p_plus + d.p_minus - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&d.p_plus));
        let mix: Vec<(i64, f64)> = w0.iter().enumerate().map(|(w, &pr)| (n as i64 - 2 * w as i64, pr)).collect();
        let m = mixture_distribution(&mix, theta, 0.9, ParityVariant::Cos);
        prop_assert!((m.p_plus + m.p_minus - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_central_difference(
        n in 2usize..=8,
        p in 0.0f64..0.1,
        wm in 0.0f64..0.1,
        theta in -0.1f64..0.1,
    ) {
        let rates = StageRates { p, wp_meas: wm, wp_prep: 0.01 };
        let w0: Vec<f64> = (0..=n).map(|w| binom_weight_prob(n as u64, w as u64, 0.05).unwrap()).collect();
        let h = 1e-6;
        let at = |t: f64| qec_distribution(n, &rates, &w0, t).unwrap();
        let fd = (at(theta + h).p_plus - at(theta - h).p_plus) / (2.0 * h);
        let an = at(theta).dp_plus;
        prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "fd {} analytic {}", fd, an);
    }

    #[test]
    fn closed_form_fi_matches_enumeration(
        n in 1usize..=10,
        p in 0.0f64..0.1,
        wm in 0.0f64..0.1,
        wp in 0.0f64..0.1,
        w0 in (1usize..=10).prop_flat_map(weight_dist),
    ) {
        let w0 = resized(w0, n);
        let rates = StageRates { p, wp_meas: wm, wp_prep: wp };
        let exact = exact_small_n_fi(n, &rates, &w0, 0.0).unwrap();
        let closed = fi_qec(&ProtocolParams { n, p, wp_meas: wm, wp_prep: wp, m2bar: m2bar_of(&w0), q: 0.0, k: 1 });
        prop_assert!((exact - closed).abs() <= 1e-10 * closed.abs().max(1e-12));
        prop_assert!(closed >= 0.0 && closed <= (n * n) as f64 * (1.0 + 1e-12));
        prop_assert!(binary_fi(&qec_distribution(n, &rates, &w0, 0.0).unwrap()).unwrap() >= 0.0);
    }

    #[test]
    fn fi_over_n_squared_is_size_independent(p in 0.0f64..0.1, wm in 0.0f64..0.2, wp in 0.0f64..0.2, ratio in 0.0f64..=1.0) {
        let at = |n: usize, p: f64| {
            let nn = (n * n) as f64;
            fi_qec(&ProtocolParams { n, p, wp_meas: wm, wp_prep: wp, m2bar: ratio * nn, q: 0.0, k: 1 }) / nn
        };
        let base = at(17, 0.0);
        for n in [33usize, 65, 257] {
            prop_assert!((at(n, 0.0) - base).abs() <= 1e-9 * base.max(1e-12));
        }
        // With p > 0 the flips add an O(1/n) term; the ratio approaches its limit monotonically.
        let a = (1.0 - 2.0 * wm) * (1.0 - 2.0 * wp) * (1.0 - 2.0 * p);
        let limit = (a * (1.0 - 2.0 * p).powi(2) * ratio).powi(2);
        let gaps: Vec<f64> = [17usize, 33, 65, 257, 4097].iter().map(|&n| (at(n, p) - limit).abs()).collect();
        prop_assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn grid_refinement_never_raises_the_objective(
        gamma in 0.0f64..0.5,
        c in -2.0f64..2.0,
        nu in 0.2f64..2.5,
        noise in prop::collection::vec(-0.01f64..0.01, 5),
    ) {
        let pts: Vec<(usize, f64)> = [9usize, 17, 33, 65, 129]
            .iter()
            .zip(&noise)
            .map(|(&n, e)| (n, 1.0 - gamma - c / (n as f64).powf(nu) + e))
            .collect();
        let coarse = fit_finite_size_with_step(&pts, 20).unwrap();
        let mid = fit_finite_size_with_step(&pts, 10).unwrap();
        let default = fit_finite_size(&pts).unwrap();
        let fine = fit_finite_size_with_step(&pts, 1).unwrap();
        prop_assert!(mid.sse <= coarse.sse + 1e-15);
        prop_assert!(default.sse <= mid.sse + 1e-15);
        prop_assert!(fine.sse <= default.sse + 1e-15);
    }

    #[test]
    fn denser_grid_keeps_the_crossing(p_th in 0.04f64..0.1, slope in 0.5f64..5.0, curve in 0.0f64..20.0) {
        let value = |n: usize, p: f64| 0.5 - slope * (p - p_th) * (n as f64).sqrt() / 10.0 - curve * (p - p_th).powi(2);
        let grid = |step: f64| -> Vec<CurvePoint> {
            let k = (0.1 / step).round() as usize;
            [9usize, 17, 33, 65]
                .iter()
                .flat_map(|&n| (0..=k).map(move |i| { let p = 0.02 + step * i as f64; CurvePoint { n, p, value: value(n, p) } }))
                .collect()
        };
        let coarse = crossover_threshold(&grid(0.01)).unwrap();
        let fine = crossover_threshold(&grid(0.0025)).unwrap();
        prop_assert!((fine.p_th - p_th).abs() < 1e-9);
        prop_assert!((coarse.p_th - fine.p_th).abs() <= 0.01);
    }
}
