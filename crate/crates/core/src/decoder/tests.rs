use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::core_model::{EffectiveNoise, NoiseModel, NoiseParams};
use crate::rep_code::{
    detectors_from, phenomenological_history_with, run_circuit_round, syndrome_of, CnotFault, InjectedFaults,
    Location, PhenomFault, RoundRecord,
};

fn phen(n: usize, rounds: usize, p: f64, q: f64) -> MatchingGraph {
    let e = EffectiveNoise::phenomenological(p, q).unwrap();
    build_matching_graph(n, rounds, GraphNoise::Effective(e), NoiseModel::Phenomenological).unwrap()
}

fn correlated(n: usize, rounds: usize, p: f64, p_cnot: f64) -> MatchingGraph {
    let np = NoiseParams::new(p, p, p, p_cnot).unwrap();
    build_matching_graph(n, rounds, GraphNoise::Physical(np), NoiseModel::CircuitCorrelated).unwrap()
}

fn random_defects(rng: &mut ChaCha8Rng, g: &MatchingGraph, max: usize) -> Vec<Detector> {
    let k = rng.random_range(0..=max.min(g.num_nodes()));
    let mut all: Vec<Detector> =
        (0..g.rows()).flat_map(|r| (0..g.cols()).map(move |c| Detector::new(r, c))).collect();
    for i in 0..k {
        let j = rng.random_range(i..all.len());
        all.swap(i, j);
    }
    all.truncate(k);
    all
}

fn e_total(records: &[RoundRecord]) -> BitVector {
    records.last().unwrap().frame.xor(&chain_from_syndrome(&records[0].reported))
}

#[test]
fn empty_defect_set_gives_identity() {
    let g = phen(5, 4, 0.02, 0.02);
    let c = decode(&g, &[]).unwrap();
    assert_eq!(c, Correction::identity(5));
    assert_eq!(brute_force_decode(&g, &[]).unwrap(), Correction::identity(5));
}

#[test]
fn adjacent_pair_in_one_row_flips_shared_qubit() {
    let g = phen(3, 3, 0.05, 0.05);
    let defects = [Detector::new(0, 0), Detector::new(0, 1)];
    let c = decode(&g, &defects).unwrap();
    assert_eq!(c.spatial_flips.to_string(), "010");
    assert!(c.last_round_meas.is_zero());
    let b = brute_force_decode(&g, &defects).unwrap();
    assert_eq!(b.spatial_flips, c.spatial_flips);
    assert_eq!(b.iweight, c.iweight);
}

#[test]
fn time_adjacent_pair_is_a_measurement_error() {
    let g = phen(5, 4, 0.01, 0.05);
    let defects = [Detector::new(1, 2), Detector::new(2, 2)];
    let c = decode(&g, &defects).unwrap();
    assert!(c.spatial_flips.is_zero());
    assert_eq!(c.meas_steps, 1);
    assert_eq!(brute_force_decode(&g, &defects).unwrap().iweight, c.iweight);
}

#[test]
fn single_defect_goes_to_cheapest_boundary() {
    let g = phen(6, 6, 0.02, 0.02);
    let c = brute_force_decode(&g, &[Detector::new(2, 0)]).unwrap();
    assert_eq!(c.spatial_flips.to_string(), "100000");
    assert_eq!(c.pairs, vec![(Detector::new(2, 0), None)]);
    let c = decode(&g, &[Detector::new(4, 2)]).unwrap();
    assert_eq!(c.last_round_meas.to_string(), "00100");
    assert!(c.spatial_flips.is_zero());
}

#[test]
fn brute_force_rejects_large_sets() {
    let g = phen(8, 4, 0.02, 0.02);
    let defects: Vec<_> = (0..13).map(|i| Detector::new(i / 7, i % 7)).collect();
    assert!(matches!(brute_force_decode(&g, &defects), Err(Error::SizeLimit(_))));
}

#[test]
fn defects_outside_grid_are_rejected() {
    let g = phen(4, 3, 0.02, 0.02);
    assert!(decode(&g, &[Detector::new(5, 0)]).is_err());
    assert!(decode(&g, &[Detector::new(0, 0), Detector::new(0, 0)]).is_err());
}

#[test]
fn decode_matches_brute_force_on_small_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let graphs = [
        phen(3, 3, 0.05, 0.05),
        phen(6, 6, 0.05, 0.05),
        phen(6, 6, 0.01, 0.08),
        phen(6, 6, 0.08, 0.01),
        phen(5, 4, 0.03, 0.0),
        phen(5, 4, 0.0, 0.03),
        correlated(6, 6, 0.004, 0.006),
        correlated(4, 5, 0.002, 0.02),
    ];
    for g in &graphs {
        for _ in 0..400 {
            let defects = random_defects(&mut rng, g, 6);
            let fast = decode(g, &defects).unwrap();
            let explicit = decode_on_explicit_graph(g, &defects).unwrap();
            let slow = brute_force_decode(g, &defects).unwrap();
            assert_eq!(fast.iweight, slow.iweight, "{defects:?}");
            assert_eq!(explicit.iweight, slow.iweight, "{defects:?}");
        }
    }
}

#[test]
fn decode_matches_brute_force_up_to_twelve_defects() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let graphs = [phen(9, 7, 0.04, 0.03), correlated(8, 7, 0.003, 0.01)];
    for g in &graphs {
        for _ in 0..150 {
            let defects = random_defects(&mut rng, g, 12);
            assert_eq!(decode(g, &defects).unwrap().iweight, brute_force_decode(g, &defects).unwrap().iweight);
        }
    }
}

#[test]
fn lattice_distances_agree_with_shortest_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (p, q) in [(0.02, 0.05), (0.05, 0.02), (0.03, 0.03), (0.02, 0.0), (0.0, 0.02)] {
        let g = phen(9, 8, p, q);
        let defects = {
            let mut d = random_defects(&mut rng, &g, 20);
            d.sort();
            d
        };
        let mut lat = LatticeMetric::new(g.lattice.unwrap(), &defects);
        let mut exp = GraphMetric::new(&g, &defects);
        for u in 0..defects.len() {
            assert_eq!(lat.boundary(u), exp.boundary(u));
            for v in 0..defects.len() {
                if u != v {
                    assert_eq!(lat.distance(u, v), exp.distance(u, v));
                }
            }
            let (mut a, mut b) = (Vec::new(), Vec::new());
            lat.within(u, 5 * quantize(3.0), &mut a);
            exp.within(u, 5 * quantize(3.0), &mut b);
            a.sort();
            b.sort();
            assert_eq!(a, b);
            lat.nearest(u, 3, &mut a);
            exp.nearest(u, 3, &mut b);
            let mut da: Vec<i64> = a.iter().map(|x| x.1).collect();
            let mut db: Vec<i64> = b.iter().map(|x| x.1).collect();
            da.sort();
            db.sort();
            assert_eq!(da, db);
        }
    }
}

#[test]
fn large_instance_is_certified_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let g = phen(65, 21, 0.06, 0.06);
    for _ in 0..5 {
        let defects = random_defects(&mut rng, &g, 300);
        let a = decode(&g, &defects).unwrap();
        let b = decode_on_explicit_graph(&g, &defects).unwrap();
        assert_eq!(a.iweight, b.iweight);
    }
}

/// Every footprint must satisfy: final-round estimate = column parity of the
/// matched defects plus the syndrome of the spatial flips.
fn check_footprint_identity(g: &MatchingGraph, defects: &[Detector], c: &Correction) {
    let mut colsum = BitVector::zeros(g.cols());
    for d in defects {
        colsum.flip(d.col as usize);
    }
    assert_eq!(c.last_round_meas, colsum.xor(&syndrome_of(&c.spatial_flips)));
}

#[test]
fn footprint_identity_holds_for_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for g in [phen(7, 6, 0.03, 0.04), correlated(7, 6, 0.003, 0.01)] {
        for _ in 0..300 {
            let defects = random_defects(&mut rng, &g, 10);
            check_footprint_identity(&g, &defects, &decode(&g, &defects).unwrap());
            check_footprint_identity(&g, &defects, &decode_on_explicit_graph(&g, &defects).unwrap());
        }
    }
}

#[test]
fn both_residual_routes_agree_on_simulated_histories() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (n, rounds) = (9, 7);
    let g = phen(n, rounds, 0.05, 0.05);
    let eff = EffectiveNoise::phenomenological(0.05, 0.05).unwrap();
    for _ in 0..300 {
        let mut frame = BitVector::zeros(n);
        let mut recs = Vec::new();
        for t in 0..rounds {
            let r = crate::rep_code::simulate_round_phenomenological(&frame, &eff, t == 0, &mut rng);
            frame = r.frame.clone();
            recs.push(r);
        }
        let det = detectors_from(&recs, NoiseModel::Phenomenological).unwrap();
        let c = decode(&g, &det.fired).unwrap();
        let (_, w1) = residual_after_correction(&e_total(&recs), &c).unwrap();
        let (_, w2) = physical_residual(&frame, &recs.last().unwrap().reported, &c);
        assert_eq!(w1, w2);
    }
}

#[test]
fn edge_effects_undo_their_phenomenological_fault() {
    let (n, rounds) = (5, 4);
    let g = phen(n, rounds, 0.02, 0.03);
    for f in crate::rep_code::all_phenomenological_faults(n, rounds) {
        let recs = phenomenological_history_with(n, rounds, &[f]);
        let det = detectors_from(&recs, NoiseModel::Phenomenological).unwrap();
        let want = match f {
            PhenomFault::Data { .. } => Mechanism::DataFlip,
            PhenomFault::Meas { .. } => Mechanism::MeasurementFlip,
        };
        let edge = g
            .edges
            .iter()
            .find(|e| {
                let mut ends = vec![e.a];
                ends.extend(e.b);
                ends.sort();
                ends == det.fired && e.mechanism == want
            })
            .unwrap_or_else(|| panic!("no edge for {f:?}"));
        let mut fp = metric::Footprint::new(n);
        fp.apply(&edge.effect, edge.mechanism);
        let c = Correction { spatial_flips: fp.spatial(), last_round_meas: fp.future.clone(), ..Correction::identity(n) };
        assert_eq!(residual_after_correction(&e_total(&recs), &c).unwrap().1, 0, "{f:?}");
        assert_eq!(physical_residual(&recs.last().unwrap().frame, &recs.last().unwrap().reported, &c).1, 0);
    }
}

#[test]
fn diagonal_edges_undo_correlated_faults() {
    let (n, rounds) = (5, 4);
    let g = correlated(n, rounds, 0.003, 0.009);
    for k in 0..rounds {
        for c in 0..n - 1 {
            let mut frame = BitVector::zeros(n);
            let mut recs = Vec::new();
            for t in 0..rounds {
                let mut faults = InjectedFaults::default();
                if t == k {
                    faults.cnots.push((Location::CnotB(c), CnotFault::XX));
                }
                let r = run_circuit_round(&frame, t == 0, &mut faults);
                frame = r.frame.clone();
                recs.push(r);
            }
            let det = detectors_from(&recs, NoiseModel::CircuitCorrelated).unwrap();
            if det.fired.is_empty() {
                continue;
            }
            let candidates: Vec<&GraphEdge> = g
                .edges
                .iter()
                .filter(|e| {
                    let mut ends = vec![e.a];
                    ends.extend(e.b);
                    ends.sort();
                    ends == det.fired
                })
                .collect();
            let undoes = |e: &GraphEdge| {
                let mut fp = metric::Footprint::new(n);
                fp.apply(&e.effect, e.mechanism);
                let corr =
                    Correction { spatial_flips: fp.spatial(), last_round_meas: fp.future.clone(), ..Correction::identity(n) };
                residual_after_correction(&e_total(&recs), &corr).unwrap().1 == 0
                    && physical_residual(&frame, &recs.last().unwrap().reported, &corr).1 == 0
            };
            assert!(candidates.iter().any(|e| undoes(e)), "XX at round {k} check {c}");
            for e in candidates.iter().filter(|e| e.mechanism == Mechanism::Correlated) {
                assert!(undoes(e), "diagonal for XX at round {k} check {c}");
            }
        }
    }
}

#[test]
fn walked_edges_reproduce_the_defects() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for g in [phen(6, 5, 0.03, 0.05), correlated(6, 5, 0.003, 0.01)] {
        for _ in 0..200 {
            let mut defects = random_defects(&mut rng, &g, 8);
            defects.sort();
            let mut m = GraphMetric::new(&g, &defects);
            let mates = match_defects(&mut m).unwrap();
            let mut fp = metric::Footprint::new(g.n);
            for (u, mate) in mates.iter().enumerate() {
                match *mate {
                    None => m.apply_boundary(u, &mut fp),
                    Some(v) if v > u => m.apply_pair(u, v, &mut fp),
                    _ => {}
                }
            }
            let mut parity = std::collections::BTreeMap::<Detector, bool>::new();
            for &e in &fp.path_edges {
                let edge = &g.edges[e as usize];
                for d in std::iter::once(edge.a).chain(edge.b) {
                    *parity.entry(d).or_default() ^= true;
                }
            }
            let hit: Vec<Detector> = parity.into_iter().filter(|x| x.1).map(|x| x.0).collect();
            assert_eq!(hit, defects);
        }
    }
}

#[test]
fn heavy_time_edges_are_never_used() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = phen(8, 6, 0.05, 1e-300);
    let g0 = phen(8, 6, 0.05, 0.0);
    for _ in 0..300 {
        let defects = random_defects(&mut rng, &g0, 8);
        let c = decode(&g0, &defects).unwrap();
        assert_eq!(c.meas_steps, 0);
        let defects: Vec<_> = defects.into_iter().filter(|d| d.row == 2).collect();
        assert_eq!(decode(&g, &defects).unwrap().meas_steps, 0);
    }
}

#[test]
fn residual_weight_examples() {
    let c = Correction { spatial_flips: "01100".parse().unwrap(), ..Correction::identity(5) };
    assert_eq!(residual_after_correction(&"01100".parse().unwrap(), &c).unwrap().1, 0);
    assert_eq!(residual_after_correction(&"10011".parse().unwrap(), &c).unwrap().1, 0);
    let id = Correction::identity(5);
    assert_eq!(residual_after_correction(&"00110".parse().unwrap(), &id).unwrap().1, 2);
    assert!(residual_after_correction(&"0011".parse().unwrap(), &id).is_err());
}
