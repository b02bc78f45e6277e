use proptest::prelude::*;
use vsched_core::adversaries::{max_mono_clique, Graph};
use vsched_core::oracles::{
    brute_force_opt, exact_potential_argmin, exhaustive_clique, opt_lower_bound_lr, Objective,
};
use vsched_core::schedulers::{
    baseline_greedy_makespan, vsall_i, vsany_u_greedy, vsmax_i_derandomized, vsmax_i_randomized,
    OnlineScheduler, VsanyUScheduler,
};
use vsched_core::transforms::{
    check_properties, clip_to_one, normalize_volume, vsmax_pipeline, PropertySet,
};
use vsched_core::{load_matrix, Entry, Instance, JobLoad, LoadMatrix, Norm, NormSpec};

fn job(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..10.0f64], d)
}

fn identical(max_m: usize, max_d: usize, max_n: usize) -> impl Strategy<Value = Instance> {
    (1..=max_m, 1..=max_d).prop_flat_map(move |(m, d)| {
        prop::collection::vec(job(d), 1..=max_n)
            .prop_map(move |jobs| Instance::identical(m, d, jobs).unwrap())
    })
}

fn column_sums(instance: &Instance) -> Vec<f64> {
    let jobs = instance.identical_jobs().unwrap();
    (0..instance.d)
        .map(|k| jobs.iter().map(|p| p[k]).sum())
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vsmax_pipeline_keeps_jobs_and_properties(inst in identical(8, 6, 40)) {
        let t = vsmax_pipeline(&inst).unwrap();
        prop_assert_eq!(t.n(), inst.n());
        prop_assert_eq!((t.m, t.d), (inst.m, inst.d));
        let report = check_properties(&t, PropertySet::VsmaxI).unwrap();
        prop_assert!(report.all_passed(), "{:?}", report);
        // A zero job stays zero; a nonzero job keeps its support's ordering of maxima.
        for (a, b) in inst.identical_jobs().unwrap().iter().zip(t.identical_jobs().unwrap()) {
            prop_assert_eq!(a.iter().all(|&x| x == 0.0), b.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn vsall_clipping_keeps_properties(inst in identical(8, 6, 40)) {
        let (clipped, large) = clip_to_one(&normalize_volume(&inst).unwrap()).unwrap();
        prop_assert_eq!(large.len(), inst.n());
        let report = check_properties(&clipped, PropertySet::VsallI).unwrap();
        prop_assert!(report.all_passed(), "{:?}", report);
    }

    #[test]
    fn normalized_volume_is_m_per_dimension(inst in identical(8, 6, 40)) {
        let before = column_sums(&inst);
        let after = column_sums(&normalize_volume(&inst).unwrap());
        for (b, a) in before.iter().zip(&after) {
            let want = if *b > 0.0 { inst.m as f64 } else { 0.0 };
            prop_assert!(close(*a, want), "{} vs {}", a, want);
        }
    }

    #[test]
    fn schedulers_conserve_volume(inst in identical(6, 5, 60), seed in any::<u64>()) {
        let t = vsmax_pipeline(&inst).unwrap();
        let want = column_sums(&t);
        let runs = [
            vsmax_i_derandomized(&t).unwrap().0,
            vsmax_i_randomized(&t, seed).unwrap().0,
        ];
        for s in runs {
            let recomputed = load_matrix(&t, &s.assignment).unwrap();
            for (k, &w) in want.iter().enumerate() {
                let total: f64 = s.loads.column(k).iter().sum();
                prop_assert!(close(total, w));
                for i in 0..t.m {
                    prop_assert!(close(s.loads.get(i, k), recomputed.get(i, k)));
                }
            }
        }
        let (s, _) = vsall_i(&inst).unwrap();
        prop_assert_eq!(s.assignment.len(), inst.n());
    }

    #[test]
    fn decisions_do_not_depend_on_future_jobs(
        inst in identical(5, 4, 30),
        extra in prop::collection::vec(job(4), 0..10),
    ) {
        let prefix = vsmax_i_derandomized(&inst).unwrap().0.assignment.machines;
        let mut longer = inst.clone();
        longer.jobs.extend(extra.into_iter().map(|p| JobLoad::Identical(p[..inst.d].to_vec())));
        // Keep the prior fixed so only the stream differs.
        let longer = Instance { jobs: longer.jobs, ..inst.clone() };
        let full = vsmax_i_derandomized(&longer).unwrap().0.assignment.machines;
        prop_assert_eq!(&full[..prefix.len()], &prefix[..]);
    }

    #[test]
    fn lower_bound_never_exceeds_optimum(inst in identical(3, 3, 6)) {
        let opt = brute_force_opt(&inst, &Objective::Makespan).unwrap().value;
        let mut lb = 0.0f64;
        for k in 0..inst.d {
            lb = lb.max(opt_lower_bound_lr(&inst, k, Norm::Makespan).unwrap());
        }
        prop_assert!(lb <= opt * (1.0 + 1e-12) + 1e-12);
        let greedy = load_matrix(&inst, &baseline_greedy_makespan(&inst).unwrap()).unwrap();
        prop_assert!(opt <= greedy.makespan() * (1.0 + 1e-12) + 1e-12);
        for k in 0..inst.d {
            for r in [1.0, 2.0, 3.0] {
                let norm = Norm::Lr(r);
                let best = brute_force_opt(&inst, &Objective::DimNorm { dim: k, norm }).unwrap().value;
                let lb = opt_lower_bound_lr(&inst, k, norm).unwrap();
                prop_assert!(lb <= best * (1.0 + 1e-12) + 1e-12, "r={} lb={} opt={}", r, lb, best);
            }
        }
    }

    #[test]
    fn clique_oracles_agree(
        n in 1usize..14,
        edges in prop::collection::vec(any::<bool>(), 91),
        colors in prop::collection::vec(0usize..3, 14),
    ) {
        let mut list = Vec::new();
        let mut e = edges.into_iter();
        for a in 0..n {
            for b in a + 1..n {
                if e.next().unwrap_or(false) {
                    list.push((a, b));
                }
            }
        }
        let g = Graph::from_edges(n, &list);
        let c = &colors[..n];
        prop_assert_eq!(max_mono_clique(&g, c).unwrap(), exhaustive_clique(&g, c).unwrap());
    }

    #[test]
    fn vsany_matches_exact_argmin(
        m in 1usize..=4,
        d_exp in 0u32..=1,
        r in prop::collection::vec(1u32..=2, 2),
        jobs in prop::collection::vec(prop::collection::vec(prop::collection::vec(0u8..6, 2), 4), 1..12),
    ) {
        let d = 1usize << d_exp;
        let cap = NormSpec::max_exponent(m).floor();
        let norms: Vec<Norm> = r[..d].iter().map(|&x| Norm::Lr((x as f64).min(cap))).collect();
        let spec = NormSpec::new(norms, vec![1.0; d], m).unwrap();
        let mut s = VsanyUScheduler::new(m, &spec).unwrap();
        let mut loads = LoadMatrix::zeros(m, d);
        for raw in jobs {
            let j = JobLoad::Unrelated(
                raw[..m].iter().map(|row| row[..d].iter().map(|&x| Entry::Load(x as f64)).collect()).collect(),
            );
            let exact = exact_potential_argmin(&loads, &j, &spec).unwrap();
            let chosen = s.step(&j).unwrap();
            prop_assert!(exact.decided);
            prop_assert_eq!(Some(chosen), exact.machine);
            loads.add(chosen, &j.row(chosen).unwrap());
        }
    }
}

#[test]
fn ties_go_to_lowest_index() {
    let inst = Instance::identical(4, 2, vec![vec![0.0, 0.0]; 3]).unwrap();
    assert_eq!(
        baseline_greedy_makespan(&inst).unwrap().machines,
        vec![0, 0, 0]
    );

    let spec = NormSpec::uniform(Norm::Lr(1.0), 1, 3).unwrap();
    let same = vec![vec![Entry::Load(1.0)]; 3];
    let inst = Instance::unrelated(3, 1, vec![same.clone()]).unwrap();
    assert_eq!(
        vsany_u_greedy(&inst, &spec).unwrap().0.assignment.machines,
        vec![0]
    );

    let mut forbid_first = same;
    forbid_first[0] = vec![Entry::Forbidden];
    let inst = Instance::unrelated(3, 1, vec![forbid_first]).unwrap();
    assert_eq!(
        vsany_u_greedy(&inst, &spec).unwrap().0.assignment.machines,
        vec![1]
    );
}
