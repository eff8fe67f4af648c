use std::collections::{BTreeMap, BTreeSet};

use gear_core::harness::{
    crossover_genome, describe_change, evaluate, hillclimb_step, mutate_genome, run_search, stream, Engine,
    Evaluation, Genome, Knob, LandscapeSpec, PolicyKind, Purpose, RunConfig, RunLog,
};
use gear_core::model::{improvement, NodeId, OperatorKind};
use gear_core::policy::{score_elite, Guards, MutationCategory, ScoreBreakdown};
use gear_core::text::tokenize;

/// Upper 0.999 quantiles of chi-square for 1..=4 degrees of freedom.
const CHI2_999: [f64; 4] = [10.828, 13.816, 16.266, 18.467];

fn chi_square(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

fn knob(name: &str, levels: usize) -> Knob {
    Knob {
        name: name.into(),
        group: MutationCategory::Other,
        levels: (0..levels).map(|l| format!("v{l}")).collect(),
        baseline: 0,
        bpb: vec![0.0; levels],
        vram: vec![0.0; levels],
        params: vec![0.0; levels],
    }
}

#[test]
fn mutation_picks_knobs_uniformly() {
    let schema = vec![knob("a", 2), knob("b", 3), knob("c", 5)];
    let parent = Genome(vec![1, 0, 4]);
    let mut counts = [0usize; 3];
    let mut levels: BTreeMap<usize, [usize; 5]> = BTreeMap::new();
    let draws = 10_000;
    for i in 0..draws {
        let (child, k) = mutate_genome(&parent, &schema, &mut stream(11, i, Purpose::Spawn)).unwrap();
        counts[k] += 1;
        levels.entry(k).or_insert([0; 5])[usize::from(child.0[k])] += 1;
    }
    for c in counts {
        assert!((c as f64 / f64::from(draws) - 1.0 / 3.0).abs() <= 0.02, "{counts:?}");
    }
    assert!(chi_square(&counts) < CHI2_999[1], "{counts:?}");
    // New level uniform among the other levels of the chosen knob.
    let c_levels = &levels[&2][..4];
    assert!(chi_square(c_levels) < CHI2_999[2], "{c_levels:?}");
    assert_eq!(levels[&2][4], 0);
}

#[test]
fn crossover_picks_differing_knob_uniformly() {
    let p1 = Genome(vec![0, 0, 0, 0, 0]);
    let p2 = Genome(vec![1, 0, 2, 3, 1]);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..10_000 {
        let (child, k) = crossover_genome(&p1, &p2, &mut stream(12, i, Purpose::Spawn)).unwrap();
        assert_eq!(child.hamming(&p1), 1);
        *counts.entry(k).or_default() += 1;
    }
    assert_eq!(counts.keys().copied().collect::<Vec<_>>(), vec![0, 2, 3, 4]);
    let c: Vec<usize> = counts.values().copied().collect();
    assert!(chi_square(&c) < CHI2_999[2], "{c:?}");
}

#[test]
fn descriptions_name_every_knob() {
    let l = LandscapeSpec::ladder();
    let base = l.baseline();
    for (i, k) in l.schema().iter().enumerate() {
        for level in 0..k.level_count() as u8 {
            if level == base.0[i] {
                continue;
            }
            let mut child = base.clone();
            child.0[i] = level;
            let text = describe_change(&base, &child, l.schema()).unwrap();
            let name_tokens = tokenize(&k.name);
            assert!(name_tokens.iter().any(|t| tokenize(&text).contains(t)), "{text}");
        }
    }
}

fn knob_index(l: &LandscapeSpec, name: &str) -> usize {
    l.schema().iter().position(|k| k.name == name).unwrap()
}

#[test]
fn ladder_interaction_shape() {
    let l = LandscapeSpec::ladder().with_noise(0.0);
    let (depth, batch) = (knob_index(&l, "depth"), knob_index(&l, "batch"));
    let max_depth = l.schema()[depth].level_count() as u8 - 1;
    let base = l.baseline();
    let large = base.0[batch];
    let mut checked = 0;
    // For every setting of the other knobs: deep+large batch is worse than shallow,
    // deep+small batch beats both.
    for g in l.genomes() {
        if g.0[depth] != 0 || g.0[batch] != large || l.crash_reason(&g).unwrap().is_some() {
            continue;
        }
        let shallow = l.noiseless_bpb(&g).unwrap();
        for d in 1..=max_depth {
            let mut deep_large = g.clone();
            deep_large.0[depth] = d;
            let mut deep_small = deep_large.clone();
            deep_small.0[batch] = 1;
            if l.crash_reason(&deep_large).unwrap().is_some()
                || l.crash_reason(&deep_small).unwrap().is_some()
            {
                continue;
            }
            let dl = l.noiseless_bpb(&deep_large).unwrap();
            let ds = l.noiseless_bpb(&deep_small).unwrap();
            assert!(dl > shallow, "{deep_large:?}");
            assert!(ds < shallow && ds < dl, "{deep_small:?}");
            checked += 1;
        }
    }
    assert!(checked > 50);
}

/// All genomes reachable from the baseline through strictly improving,
/// non-crashing single-knob moves: everything zero-noise hill climbing can visit.
fn improving_closure(l: &LandscapeSpec) -> BTreeSet<Genome> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![l.baseline()];
    seen.insert(l.baseline());
    while let Some(g) = stack.pop() {
        let here = l.noiseless_bpb(&g).unwrap();
        for (i, k) in l.schema().iter().enumerate() {
            for level in 0..k.level_count() as u8 {
                let mut n = g.clone();
                n.0[i] = level;
                if n == g || l.crash_reason(&n).unwrap().is_some() {
                    continue;
                }
                if l.noiseless_bpb(&n).unwrap() < here && seen.insert(n.clone()) {
                    stack.push(n);
                }
            }
        }
    }
    seen
}

#[test]
fn optimum_lies_beyond_the_valley() {
    let l = LandscapeSpec::ladder().with_noise(0.0);
    let mut best: Option<(Genome, f64)> = None;
    for g in l.genomes() {
        if l.crash_reason(&g).unwrap().is_none() {
            let bpb = l.noiseless_bpb(&g).unwrap();
            if best.as_ref().is_none_or(|(_, b)| bpb < *b) {
                best = Some((g, bpb));
            }
        }
    }
    let (opt, bpb) = best.unwrap();
    assert_eq!(l.global_optimum().unwrap(), (opt.clone(), bpb));
    let depth = knob_index(&l, "depth");
    assert!(opt.0[depth] > 0);
    let reachable = improving_closure(&l);
    assert!(!reachable.contains(&opt));
    assert!(reachable.iter().all(|g| g.0[depth] == 0), "hill climbing never deepens the model");
}

#[test]
fn crash_rules_fire_exactly() {
    let l = LandscapeSpec::ladder();
    let (depth, lr) = (knob_index(&l, "depth"), knob_index(&l, "lr"));
    let mut g = l.baseline();
    g.0[depth] = l.schema()[depth].level_count() as u8 - 1;
    g.0[lr] = l.schema()[lr].level_count() as u8 - 1;
    assert!(matches!(evaluate(&g, &l, &mut stream(0, 1, Purpose::Evaluate)).unwrap(), Evaluation::Crash(_)));
    assert!(matches!(
        evaluate(&l.baseline(), &l, &mut stream(0, 1, Purpose::Evaluate)).unwrap(),
        Evaluation::Success(_)
    ));
}

fn running_best(log: &RunLog) -> Vec<f64> {
    let mut best = log.root.metrics.bpb;
    log.records
        .iter()
        .map(|r| {
            if let Some(m) = r.outcome.metrics() {
                best = best.min(m.bpb);
            }
            best
        })
        .collect()
}

#[test]
fn hillclimb_running_best_is_monotone() {
    for seed in 0..10 {
        let log =
            run_search(RunConfig::new(PolicyKind::Hillclimb, 100, seed, LandscapeSpec::ladder())).unwrap();
        let rb = running_best(&log);
        assert!(rb.windows(2).all(|w| w[1] <= w[0]));
        // The incumbent only ever moves to strictly better children.
        let mut incumbent = log.root.metrics.bpb;
        for r in &log.records {
            if r.promotion.is_promotion() {
                let bpb = r.outcome.metrics().unwrap().bpb;
                assert!(bpb < incumbent);
                incumbent = bpb;
            }
        }
    }
}

#[test]
fn hillclimb_step_contract() {
    let l = LandscapeSpec::ladder();
    let root = l.baseline();
    let Evaluation::Success(m) = evaluate(&root, &l, &mut stream(1, 0, Purpose::Evaluate)).unwrap() else {
        panic!("baseline crashed")
    };
    let inc = (root, m);
    for step in 1..100 {
        let s = hillclimb_step(
            &inc,
            &l,
            &mut stream(1, step, Purpose::Spawn),
            &mut stream(1, step, Purpose::Evaluate),
        )
        .unwrap();
        match &s.evaluation {
            Evaluation::Success(cm) if cm.bpb < inc.1.bpb => assert_eq!(s.incumbent, (s.child.clone(), *cm)),
            _ => assert_eq!(s.incumbent, inc),
        }
    }
}

#[test]
fn runs_are_deterministic() {
    for kind in [PolicyKind::GearFixed, PolicyKind::Hillclimb] {
        let c = RunConfig::new(kind, 60, 7, LandscapeSpec::ladder());
        assert_eq!(run_search(c.clone()).unwrap(), run_search(c).unwrap());
    }
    let a = run_search(RunConfig::new(PolicyKind::GearFixed, 60, 7, LandscapeSpec::ladder())).unwrap();
    let b = run_search(RunConfig::new(PolicyKind::GearFixed, 60, 8, LandscapeSpec::ladder())).unwrap();
    assert_ne!(a.records, b.records);
}

/// Per-node statistics recomputed from scratch over the full log.
fn recompute(log: &RunLog, id: NodeId) -> (u32, f64, Option<u32>) {
    let bpb_of = |id: NodeId| {
        if id == NodeId::ROOT {
            log.root.metrics.bpb
        } else {
            log.records[id.0 as usize - 1].outcome.metrics().unwrap().bpb
        }
    };
    let own = bpb_of(id);
    let mut n = 0;
    let mut gains = Vec::new();
    let mut last = None;
    for r in &log.records {
        if r.parent1 == id {
            n += 1;
            if let Some(m) = r.outcome.metrics() {
                gains.push(improvement(own, m.bpb).unwrap());
            }
        }
        if r.parent1 == id || r.parent2 == Some(id) {
            last = Some(r.step);
        }
    }
    let mean = if gains.is_empty() { 0.0 } else { gains.iter().sum::<f64>() / gains.len() as f64 };
    (n, mean, last)
}

#[test]
fn incremental_stats_match_recomputation() {
    for seed in 0..20 {
        for guards in [Guards::all(), Guards::none()] {
            let mut c = RunConfig::new(PolicyKind::GearFixed, 100, seed, LandscapeSpec::ladder());
            c.policy.guards = guards;
            let mut engine = Engine::new(c).unwrap();
            while !engine.is_done() {
                // Score breakdowns sum exactly, in their documented order, for every member at every step.
                for m in engine.state().frontier().members() {
                    let b = score_elite(m, engine.state(), &engine.config().policy);
                    let again = ScoreBreakdown::new(
                        b.productivity,
                        b.exploration_bonus,
                        b.novelty_term,
                        b.coverage_term,
                        b.recency_term,
                    );
                    assert_eq!(b.total, again.total);
                    assert_eq!(
                        b.total,
                        b.productivity
                            + b.exploration_bonus
                            + b.novelty_term
                            + b.coverage_term
                            + b.recency_term
                    );
                }
                engine.step().unwrap();
            }
            let frontier = engine.state().frontier().clone();
            let log = engine.into_log();
            for m in frontier.members() {
                let (n, mean, last) = recompute(&log, m.id);
                assert_eq!(m.n_used, n, "seed {seed} node {}", m.id);
                assert!((m.mean_child_gain - mean).abs() < 1e-12, "seed {seed} node {}", m.id);
                assert_eq!(m.last_used_step, last);
            }
        }
    }
}

#[test]
fn gear_logs_are_structurally_valid() {
    for seed in 0..10 {
        let log =
            run_search(RunConfig::new(PolicyKind::GearFixed, 100, seed, LandscapeSpec::ladder())).unwrap();
        let mut crossovers = 0;
        for (i, r) in log.records.iter().enumerate() {
            r.validate().unwrap();
            assert_eq!(r.step as usize, i + 1);
            if r.operator == OperatorKind::Crossover {
                crossovers += 1;
                assert_ne!(r.parent2, Some(r.parent1));
            }
        }
        assert!(crossovers > 0);
    }
}
