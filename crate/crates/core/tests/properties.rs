use anongossip::adversary::observe;
use anongossip::experiments::fmt_sig;
use anongossip::gossip::{simulate, ProtocolKind, ProtocolSpec};
use anongossip::graph::{
    adversarial_density, generate_random_regular, induced_subgraph_connected, parse_edge_list, spectral_expansion,
    vertex_connectivity, write_edge_list,
};
use anongossip::privacy::{epsilon_upper_bound, exact_divergence_matrix, mixing_sanity};
use anongossip::spectral::{absorbing_probabilities, build_chain, resolvent, series_resolvent_oracle, spectral_summary};
use anongossip::{CuriousSet, Graph};
use proptest::prelude::*;
use proptest::sample::subsequence;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn regular(n: usize, d: usize, seed: u64) -> Graph {
    let n = if n * d % 2 == 1 { n + 1 } else { n };
    generate_random_regular(n, d, seed).expect("feasible parameters")
}

fn small_expander() -> impl Strategy<Value = Graph> {
    (10usize..36, 3usize..9, any::<u64>()).prop_map(|(n, d, seed)| regular(n, d, seed))
}

/// A graph plus a curious set whose honest part stays connected.
fn instance() -> impl Strategy<Value = (Graph, CuriousSet)> {
    small_expander().prop_flat_map(|g| {
        let n = g.n();
        (Just(g), subsequence((0..n).collect::<Vec<_>>(), 1..=(n / 4).max(1)))
            .prop_filter_map("honest part disconnected", |(g, members)| {
                let c = CuriousSet::new(g.n(), members).ok()?;
                induced_subgraph_connected(&g, &c).then_some((g, c))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expansion_is_relabel_invariant(g in small_expander(), seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..g.n()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let h = g.relabel(&perm).unwrap();
        let (a, b) = (spectral_expansion(&g).unwrap(), spectral_expansion(&h).unwrap());
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn connectivity_dominates_spectral_gap_times_degree(g in small_expander()) {
        let d = g.regular_degree().unwrap() as f64;
        let lambda = spectral_expansion(&g).unwrap();
        let kappa = vertex_connectivity(&g).unwrap() as f64;
        prop_assert!(kappa >= (1.0 - lambda) * d - 1e-9, "kappa={kappa} lambda={lambda} d={d}");
    }

    #[test]
    fn sparse_curious_sets_leave_honest_part_connected(g in small_expander(), seed in any::<u64>(), f in 1usize..6) {
        let lambda = spectral_expansion(&g).unwrap();
        let mut nodes: Vec<usize> = (0..g.n()).collect();
        nodes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let c = CuriousSet::new(g.n(), nodes[..f.min(g.n() - 2)].iter().copied()).unwrap();
        if adversarial_density(&g, &c).unwrap().passes_gate(lambda) {
            prop_assert!(induced_subgraph_connected(&g, &c));
        }
    }

    #[test]
    fn edge_list_round_trips(g in small_expander()) {
        let text = write_edge_list(&g);
        prop_assert_eq!(&parse_edge_list(&text).unwrap(), &g);
        prop_assert_eq!(write_edge_list(&parse_edge_list(&text).unwrap()), text);
    }

    #[test]
    fn absorption_is_total((g, c) in instance(), rho in 0.0f64..0.99) {
        let chain = build_chain(&g, &c, rho).unwrap();
        let b = absorbing_probabilities(&chain).unwrap();
        for j in 0..b.ncols() {
            prop_assert!((b.column(j).sum() - 1.0).abs() < 1e-9);
        }
        prop_assert!(b.iter().all(|&x| x >= -1e-15));
    }

    #[test]
    fn lu_resolvent_matches_neumann_series((g, c) in instance(), rho in 0.05f64..0.99) {
        let chain = build_chain(&g, &c, rho).unwrap();
        let lu = resolvent(&chain).unwrap();
        let series = series_resolvent_oracle(&chain, 1e-13).unwrap();
        prop_assert!((lu - series).amax() < 1e-9);
    }

    #[test]
    fn top_eigenvalue_of_q_stays_in_window((g, c) in instance(), rho in 0.0f64..1.0) {
        let chain = build_chain(&g, &c, rho).unwrap();
        let lambda = spectral_expansion(&g).unwrap();
        let s = spectral_summary(&chain);
        let (n, f) = (g.n() as f64, c.f() as f64);
        let alpha = adversarial_density(&g, &c).unwrap().value();
        let lo = (1.0 - alpha).max(1.0 - (1.0 + lambda) * f / n);
        prop_assert!(s.lambda1 >= lo - 1e-9 && s.lambda1 <= 1.0 - (1.0 - lambda) * f / n + 1e-9);
        prop_assert!(s.lambda_sub <= lambda + 1e-9);
    }

    #[test]
    fn divergence_matrix_has_zero_diagonal((g, c) in instance(), rho in 0.0f64..0.99) {
        let m = exact_divergence_matrix(&build_chain(&g, &c, rho).unwrap()).unwrap();
        for i in 0..m.nodes.len() {
            prop_assert_eq!(m.values[(i, i)], 0.0);
        }
        prop_assert!(m.values.iter().all(|&x| x >= 0.0));
        prop_assert!(m.values.iter().all(|&x| x <= m.epsilon));
    }

    #[test]
    fn upper_bound_increases_with_alpha(
        n in 8usize..2000, f_frac in 0.0f64..0.5, lambda in 0.0f64..0.9, rho in 0.0f64..0.99,
        a in 0.0f64..1.0, b in 0.0f64..1.0,
    ) {
        let f = ((n as f64 * f_frac) as usize).max(1);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (lo, hi) = (lo * (1.0 - lambda), hi * (1.0 - lambda));
        let e_lo = epsilon_upper_bound(n, f, lambda, rho, lo).unwrap();
        let e_hi = epsilon_upper_bound(n, f, lambda, rho, hi).unwrap();
        if let (Some(x), Some(y)) = (e_lo, e_hi) {
            prop_assert!(x.epsilon <= y.epsilon + 1e-9 * y.epsilon.abs());
            prop_assert!(x.t_tilde <= y.t_tilde + 1e-12);
        }
    }

    #[test]
    fn exact_leakage_below_both_bounds((g, c) in instance(), rho in 0.0f64..0.95) {
        let chain = build_chain(&g, &c, rho).unwrap();
        let lambda = spectral_expansion(&g).unwrap();
        let d = g.regular_degree().unwrap();
        let worst_alpha = c.f() as f64 / d as f64;
        if let Ok(m) = mixing_sanity(&chain, lambda) {
            prop_assert!(m.holds(), "slack {}", m.slack);
            if let Some(worst_case) = epsilon_upper_bound(g.n(), c.f(), lambda, rho, worst_alpha).unwrap() {
                prop_assert!(m.bound <= worst_case.epsilon + 1e-9);
            }
        }
    }

    #[test]
    fn simulated_executions_are_well_formed(g in small_expander(), kind in 0usize..4, rho in 0.0f64..1.0, seed in any::<u64>()) {
        let kind = [ProtocolKind::Cobra, ProtocolKind::Dandelion, ProtocolKind::MutingPush, ProtocolKind::DieOutWalk][kind];
        let exec = simulate(&g, ProtocolSpec::new(kind, rho).unwrap(), 0, 400, seed).unwrap();
        prop_assert!(exec.validate(&g).is_ok());
    }

    #[test]
    fn rho_zero_runs_are_single_walkers(g in small_expander(), kind in 0usize..3, seed in any::<u64>()) {
        let kind = [ProtocolKind::Cobra, ProtocolKind::Dandelion, ProtocolKind::MutingPush][kind];
        let exec = simulate(&g, ProtocolSpec::new(kind, 0.0).unwrap(), 0, 200, seed).unwrap();
        prop_assert!(exec.rounds.iter().all(|r| r.active.len() == 1 && r.comms.len() == 1 && r.anon));
    }

    #[test]
    fn views_touch_only_curious_nodes((g, c) in instance(), rho in 0.0f64..1.0, seed in any::<u64>()) {
        let exec = simulate(&g, ProtocolSpec::cobra(rho).unwrap(), c.honest_nodes()[0], 300, seed).unwrap();
        let view = observe(&exec, &c);
        for o in &view.observations {
            prop_assert!(o.comms.iter().all(|&(u, v)| c.contains(u) || c.contains(v)));
        }
    }

    #[test]
    fn sig_format_round_trips(x in prop::num::f64::NORMAL) {
        let back: f64 = fmt_sig(x).parse().unwrap();
        prop_assert!(((back - x) / x).abs() <= 5e-9, "{x} -> {}", fmt_sig(x));
    }
}
