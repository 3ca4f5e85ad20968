//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each and exits nonzero if any fails. Oracles here are written
//! independently of the library code they check.

// `!(x <= tol)` is deliberate: a NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pgpo_core::harness::{train_variant, RunConfig};
use pgpo_core::optimizer::{
    normalize_advantages, select_active_set, surrogate_and_grad, token_objective, train_step, Band, Clip, GroupBatch,
    OptimizerConfig, Variant,
};
use pgpo_core::policy::{sample_trajectory, PolicyConfig, PolicySnapshot};
use pgpo_core::reward::{apply, composite, RewardConfig};
use pgpo_core::table_env::{
    evaluate_program, generate_episode, generate_table, Answer, CellRef, CellValue, EnvSpec, GoldProgram, Num, Program,
    Query, SuperHeader, Table, TableSpec,
};
use pgpo_core::vcot::{canonical_chain, parse, perturb, serialize, OpToken, PerturbKind, PerturbationSpec, TraceStep};
use pgpo_core::verifier::{verify_text, verify_trajectory, Path};
use pgpo_core::{seed, Trajectory};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn normal(rng: &mut seed::Rng) -> f64 {
    StandardNormal.sample(rng)
}

// ---------------------------------------------------------------- 1

fn gated_oracle(f: f64, a: f64, p: f64) -> f64 {
    let base = f + a;
    if base <= 1.0 {
        return base;
    }
    if p > 0.9 {
        base + 0.5
    } else if p < 0.3 {
        f + 0.2
    } else {
        base + 0.5 * p
    }
}

fn criterion_1() -> Outcome {
    let cfg = RewardConfig::default();
    for (f, a, p, want) in [
        (1.0, 1.0, 0.95, 2.5),
        (1.0, 1.0, 0.1, 1.2),
        (1.0, 1.0, 0.6, 2.3),
        (0.8, 0.0, 1.0, 0.8),
    ] {
        let got = composite(f, a, p, &cfg);
        ensure!((got - want).abs() <= 1e-12, "R({f}, {a}, {p}) = {got}, want {want}");
    }
    let mut n = 0;
    for f in [0.0, 0.5, 0.8, 1.0] {
        for a in [0.0, 1.0] {
            for p in [0.0, 0.1, 0.3, 0.6, 0.9, 0.95, 1.0] {
                let (got, want) = (composite(f, a, p, &cfg), gated_oracle(f, a, p));
                ensure!(
                    (got - want).abs() <= 1e-12,
                    "grid ({f}, {a}, {p}): {got} vs oracle {want}"
                );
                n += 1;
            }
        }
    }
    Ok(format!("4 hand cases and {n} grid points exact to 1e-12"))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let mut rng = seed::rng(2);
    let mut worst_mean: f64 = 0.0;
    let mut worst_std: f64 = 0.0;
    for _ in 0..1000 {
        let g = rng.random_range(2..=64);
        let r: Vec<f64> = (0..g).map(|_| normal(&mut rng) * 3.0 + 1.0).collect();
        let adv = normalize_advantages(&r, 1e-8).map_err(|e| e.to_string())?;
        let n = g as f64;
        let mean = adv.iter().sum::<f64>() / n;
        let std = (adv.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        worst_mean = worst_mean.max(mean.abs());
        worst_std = worst_std.max((std - 1.0).abs());
        let (scale, shift) = (rng.random_range(0.1..10.0), rng.random_range(-5.0..5.0));
        let moved: Vec<f64> = r.iter().map(|x| scale * x + shift).collect();
        let adv2 = normalize_advantages(&moved, 1e-8).map_err(|e| e.to_string())?;
        let drift = adv.iter().zip(&adv2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure!(drift <= 1e-9, "affine transform moved advantages by {drift}");
    }
    ensure!(worst_mean <= 1e-9, "mean deviates by {worst_mean}");
    ensure!(worst_std <= 1e-9, "std deviates from 1 by {worst_std}");
    let flat = normalize_advantages(&[0.7; 8], 1e-8).map_err(|e| e.to_string())?;
    ensure!(flat.iter().all(|&x| x == 0.0), "degenerate group not zeroed: {flat:?}");
    let a = normalize_advantages(&[1.0, 2.0, 3.0], 1e-8).map_err(|e| e.to_string())?;
    let z = 1.0 / (2.0f64 / 3.0).sqrt();
    ensure!(
        (a[0] + z).abs() < 1e-12 && a[1].abs() < 1e-12 && (a[2] - z).abs() < 1e-12,
        "{{1,2,3}} -> {a:?}"
    );
    Ok(format!(
        "1000 groups: |mean| <= {worst_mean:.1e}, |std-1| <= {worst_std:.1e}; affine invariant; {{1,2,3}} -> +-{z:.6}"
    ))
}

// ---------------------------------------------------------------- 3

/// Straight-line surrogate: per-token min(rho A, clip(rho) A), mean over the
/// tokens of a rollout, mean over the active rollouts, mean over groups.
fn surrogate_oracle(batches: &[GroupBatch], theta: &[f64], lo: f64, hi: f64) -> f64 {
    let d = theta.len();
    let mut total = 0.0;
    for b in batches {
        let mut group = 0.0;
        for &i in &b.active.indices {
            let r = &b.rollouts[i];
            let mut sum = 0.0;
            for (ctx, tok) in r.contexts.iter().zip(&r.tokens) {
                let z: Vec<f64> = ctx
                    .features
                    .chunks(d)
                    .map(|f| f.iter().zip(theta).map(|(x, t)| x * t).sum())
                    .collect();
                let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                let rho = (z[ctx.chosen] - lse - tok.old_logprob).exp();
                let a = b.advantages[i];
                sum += (rho * a).min(rho.max(1.0 - lo).min(1.0 + hi) * a);
            }
            group += sum / r.tokens.len() as f64;
        }
        total += group / b.active.indices.len() as f64;
    }
    total / batches.len() as f64
}

fn random_batches(rng: &mut seed::Rng, old: &PolicySnapshot, bands: &[Band]) -> Vec<GroupBatch> {
    let spec = EnvSpec::default();
    (0..2)
        .map(|q| {
            let ep = generate_episode(rng.random(), &spec).unwrap();
            let rollouts: Vec<_> = (0..4)
                .map(|_| sample_trajectory(&ep.table, &ep.query, old, rng.random(), 12).unwrap())
                .collect();
            let lens: Vec<usize> = rollouts.iter().map(|r| r.token_len()).collect();
            let breakdowns = rollouts
                .iter()
                .map(|r| verify_trajectory(&r.trajectory, &ep.table, &ep.query))
                .collect();
            let advantages = (0..4).map(|_| normal(rng)).collect();
            GroupBatch {
                query_id: format!("q{q}"),
                rollouts,
                breakdowns,
                rewards: vec![0.0; 4],
                advantages,
                active: select_active_set(&lens, bands).unwrap(),
            }
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let mut rng = seed::rng(3);
    let clip = Clip {
        eps_low: 0.2,
        eps_high: 0.28,
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 100 {
        let old = PolicySnapshot::init(rng.random(), 0.5).unwrap();
        let batches = random_batches(&mut rng, &old, &[Band::full()]);
        let theta: Vec<f64> = old.theta.iter().map(|t| t + 0.01 * normal(&mut rng)).collect();
        // Keep every ratio well inside the clip range so the objective is smooth around theta.
        let far = batches
            .iter()
            .flat_map(|b| b.token_ratios(&theta))
            .flatten()
            .all(|r| r > 0.9 && r < 1.1);
        if !far {
            continue;
        }
        let (_, grad) = surrogate_and_grad(&batches, &old, &theta, clip).map_err(|e| e.to_string())?;
        let mut fd = vec![0.0; theta.len()];
        for (k, slot) in fd.iter_mut().enumerate() {
            let (mut up, mut dn) = (theta.clone(), theta.clone());
            up[k] += h;
            dn[k] -= h;
            let jp = surrogate_and_grad(&batches, &old, &up, clip).unwrap().0;
            let jm = surrogate_and_grad(&batches, &old, &dn, clip).unwrap().0;
            *slot = (jp - jm) / (2.0 * h);
        }
        let diff = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = grad
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(fd.iter().map(|a| a * a).sum::<f64>().sqrt());
        if scale < 1e-8 {
            continue;
        }
        worst = worst.max(diff / scale);
        checked += 1;
    }
    ensure!(worst < 1e-5, "worst relative gradient error {worst:.3e}");

    // Equal bounds collapse to the symmetric clip.
    for _ in 0..10_000 {
        let (rho, adv, e) = (
            rng.random_range(0.0..3.0),
            normal(&mut rng),
            rng.random_range(0.01..0.5),
        );
        let (v, _) = token_objective(
            rho,
            adv,
            Clip {
                eps_low: e,
                eps_high: e,
            },
        );
        let sym = (rho * adv).min(rho.clamp(1.0 - e, 1.0 + e) * adv);
        ensure!(v == sym, "eps_low = eps_high = {e}: {v} vs {sym} at rho {rho}");
    }
    let cfg_sym = OptimizerConfig {
        variant: Variant::Grpo,
        ..OptimizerConfig::default()
    };
    ensure!(
        cfg_sym.clip().eps_low == cfg_sym.clip().eps_high,
        "GRPO clip is not symmetric"
    );

    // Full band = plain group surrogate, at ratios that do get clipped.
    for _ in 0..50 {
        let old = PolicySnapshot::init(rng.random(), 0.5).unwrap();
        let batches = random_batches(&mut rng, &old, &[Band::full()]);
        for b in &batches {
            ensure!(
                b.active.indices == (0..b.rollouts.len()).collect::<Vec<_>>() && !b.active.fallback,
                "full band dropped rollouts"
            );
        }
        let theta: Vec<f64> = old.theta.iter().map(|t| t + 0.5 * normal(&mut rng)).collect();
        for (lo, hi) in [(0.2, 0.2), (0.2, 0.28)] {
            let clip = Clip {
                eps_low: lo,
                eps_high: hi,
            };
            let j = surrogate_and_grad(&batches, &old, &theta, clip).unwrap().0;
            let o = surrogate_oracle(&batches, &theta, lo, hi);
            ensure!((j - o).abs() <= 1e-9 * o.abs().max(1.0), "surrogate {j} vs oracle {o}");
        }
    }
    Ok(format!(
        "{checked} batches, worst FD relative error {worst:.2e}; symmetric and full-band reductions exact"
    ))
}

// ---------------------------------------------------------------- 4

fn selection_oracle(lens: &[usize], bands: &[(u32, u32)]) -> (Vec<usize>, bool) {
    let g = lens.len();
    let mut keep = Vec::new();
    for i in 0..g {
        let rank = (0..g)
            .filter(|&k| lens[k] < lens[i] || (lens[k] == lens[i] && k < i))
            .count();
        let pct100 = 100 * (rank + 1);
        if bands
            .iter()
            .any(|&(lo, hi)| pct100 > lo as usize * g && pct100 <= hi as usize * g)
        {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        ((0..g).collect(), true)
    } else {
        (keep, false)
    }
}

fn criterion_4() -> Outcome {
    let mut rng = seed::rng(4);
    let mut fallbacks = 0;
    for t in 0..10_000 {
        let g = rng.random_range(2..=64);
        let lens: Vec<usize> = (0..g).map(|_| rng.random_range(1..20)).collect();
        let bands: Vec<(u32, u32)> = if t % 2 == 0 {
            vec![(0, 30), (60, 90)]
        } else {
            let mut cuts: Vec<u32> = (0..4).map(|_| rng.random_range(0..=100)).collect();
            cuts.sort();
            cuts.dedup();
            cuts.windows(2).step_by(2).map(|w| (w[0], w[1])).collect()
        };
        if bands.is_empty() {
            continue;
        }
        let typed: Vec<Band> = bands.iter().map(|&(lo, hi)| Band::new(lo as f64, hi as f64)).collect();
        let got = select_active_set(&lens, &typed).map_err(|e| e.to_string())?;
        let mut idx = got.indices.clone();
        idx.sort();
        let (want, fb) = selection_oracle(&lens, &bands);
        ensure!(
            idx == want && got.fallback == fb,
            "lens {lens:?} bands {bands:?}: {idx:?} vs {want:?}"
        );
        fallbacks += fb as usize;
    }
    let mut lens: Vec<usize> = (1..=10).collect();
    lens.shuffle(&mut rng);
    let s = select_active_set(&lens, &Band::default_bands()).unwrap();
    let mut kept: Vec<usize> = s.indices.iter().map(|&i| lens[i]).collect();
    kept.sort();
    ensure!(kept == [1, 2, 3, 7, 8, 9], "G=10 canonical case kept lengths {kept:?}");
    let s = select_active_set(&[3, 5], &Band::default_bands()).unwrap();
    ensure!(s.fallback && s.indices == [0, 1], "G=2 did not fall back: {s:?}");

    let cfg = OptimizerConfig {
        group_size: 2,
        ..OptimizerConfig::default()
    };
    let eps: Vec<_> = (0..4)
        .map(|i| generate_episode(i, &EnvSpec::default()).unwrap())
        .collect();
    let (_, report) = train_step(
        &eps,
        &PolicySnapshot::zeros(),
        &cfg,
        &RewardConfig::default(),
        &PolicyConfig::default(),
        4,
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        report.fallback_events == 4,
        "step report logged {} fallbacks",
        report.fallback_events
    );
    Ok(format!(
        "10000 vectors match oracle ({fallbacks} fallbacks); G=10 keeps 6; G=2 fallback logged {} times in the step report",
        report.fallback_events
    ))
}

// ---------------------------------------------------------------- 5

fn query_for(table: &Table, tree: Program, question: &str) -> Query {
    let gold_program = GoldProgram::from_tree(table, tree).unwrap();
    let gold_answer = evaluate_program(table, &gold_program.tree).unwrap();
    Query {
        query_id: "q".into(),
        table_id: table.table_id.clone(),
        question: question.into(),
        op_kind: gold_program.tree.kind(),
        gold_program,
        gold_answer,
        shortcut_bias: false,
    }
}

fn career_table() -> Table {
    let cols = ["G", "GS", "Att", "Avg", "Yds", "Rec", "Rec Avg", "Rec Yds", "TD"];
    let mut rng = seed::rng(44);
    let mut cells: Vec<Vec<CellValue>> = (0..15)
        .map(|_| {
            (0..cols.len())
                .map(|_| CellValue::int(rng.random_range(1..999)))
                .collect()
        })
        .collect();
    cells[14][4] = CellValue::int(8189);
    cells[14][7] = CellValue::int(4911);
    let rows = (1..=14)
        .map(|y| format!("Season {y}"))
        .chain(["Total".to_string()])
        .collect();
    let sh = |label: &str, a, b| SuperHeader {
        label: label.into(),
        col_start: a,
        col_end: b,
    };
    Table::new(
        "career",
        rows,
        cols.iter().map(|c| c.to_string()).collect(),
        cells,
        vec![sh("Games", 0, 1), sh("Rushing", 2, 4), sh("Receiving", 5, 8)],
    )
    .unwrap()
}

fn criterion_5() -> Outcome {
    let severities = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut dev_sum = [0.0; 5];
    let mut worst: f64 = 0.0;
    let spec = TableSpec {
        n_rows: 10,
        n_cols: 3,
        ..TableSpec::default()
    };
    for c in 0..1000u64 {
        let table = generate_table(c, &spec).unwrap();
        let mut rng = seed::rng(seed::derive(5, &[c]));
        let mut rows: Vec<usize> = (0..10).collect();
        rows.shuffle(&mut rng);
        let col = rng.random_range(0..3);
        let cells = rows[..8].iter().map(|&r| CellRef::new(r, col)).collect();
        let query = query_for(&table, Program::Sum(cells), "");
        let chain = canonical_chain(&table, &query.gold_program).unwrap();
        ensure!(chain.steps.len() == 8, "chain has {} steps", chain.steps.len());
        for (k, &s) in severities.iter().enumerate() {
            let p = PerturbationSpec::new(s, &[PerturbKind::CorruptAnchor], seed::derive(5, &[c, k as u64]));
            let (t, target) = perturb(&chain, &p, &table).map_err(|e| e.to_string())?;
            let r = verify_trajectory(&t, &table, &query).r_proc;
            let dev = (r - target).abs();
            ensure!(
                dev <= 1.0 / 8.0 + 1e-12,
                "chain {c} severity {s}: r_proc {r} vs {target}"
            );
            worst = worst.max(dev);
            dev_sum[k] += dev;
        }
    }
    let mean_dev = dev_sum.iter().map(|d| d / 1000.0).fold(0.0, f64::max);
    ensure!(mean_dev <= 0.02, "mean deviation {mean_dev}");

    let table = career_table();
    let query = query_for(
        &table,
        Program::Lookup(CellRef::new(14, 4)),
        "What is the total rushing Yds?",
    );
    let bad = verify_text(
        "<step 0> <cell: Row 14, Col 7> value=4911 op=READ\n<answer> 4911.0",
        &table,
        &query,
    );
    ensure!(
        bad.path == Path::Hallucination && bad.r_acc == 0.0,
        "wrong-cell case: {:?}",
        bad.path
    );
    let good = verify_text(
        "<step 0> <cell: Row 14, Col 4> value=8189 op=READ\n<answer> 8189.0",
        &table,
        &query,
    );
    ensure!(
        good.path == Path::Rigorous && good.r_acc == 1.0,
        "clean case: {:?}",
        good.path
    );
    Ok(format!(
        "1000 chains x 5 severities: worst |dev| {worst:.3}, worst mean dev {mean_dev:.3}; 4911 -> HALLUCINATION, (14,4)=8189 -> RIGOROUS"
    ))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let cfg = RewardConfig::default();
    let spec = EnvSpec::default();
    let mut pairs = 0;
    for s in 0..500 {
        let ep = generate_episode(s, &spec).unwrap();
        let (table, query) = (&ep.table, &ep.query);
        let rigorous = canonical_chain(table, &query.gold_program).unwrap();
        let gold_cells: HashSet<CellRef> = query.gold_program.anchors().collect();
        // One READ of an unrelated cell, then the right answer.
        let off = table.cell_refs().find(|c| !gold_cells.contains(c)).unwrap();
        let guess = Trajectory::new(
            vec![TraceStep {
                step_index: 0,
                anchor: off,
                claimed_value: table.cell(off).unwrap().clone(),
                op_token: OpToken::Read,
                intermediate: None,
            }],
            Some(query.gold_answer.clone()),
        );
        // The full chain pointed at the wrong cells but keeping its answer.
        let rewired = perturb(
            &rigorous,
            &PerturbationSpec::new(1.0, &[PerturbKind::CorruptAnchor], s),
            table,
        )
        .unwrap()
        .0;
        let r = apply(verify_trajectory(&rigorous, table, query), &cfg);
        ensure!(r.path == Path::Rigorous, "seed {s}: gold chain labelled {:?}", r.path);
        for short in [guess, rewired] {
            let b = apply(verify_trajectory(&short, table, query), &cfg);
            ensure!(
                b.path == Path::Shortcut,
                "seed {s}: constructed shortcut labelled {:?}",
                b.path
            );
            ensure!(b.r_base == r.r_base, "seed {s}: R_base {} vs {}", b.r_base, r.r_base);
            ensure!(
                r.composite > b.composite,
                "seed {s}: composite {} !> {}",
                r.composite,
                b.composite
            );
            pairs += 1;
        }
    }
    Ok(format!(
        "{pairs} pairs: equal R_base, composite strictly favours RIGOROUS"
    ))
}

// ---------------------------------------------------------------- 7

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn criterion_7() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let variants = [Variant::Grpo, Variant::PgpoNoProcess, Variant::Pgpo];
    let mut reward = vec![Vec::new(); 3];
    let mut outcome = vec![Vec::new(); 3];
    let mut shortcut = vec![Vec::new(); 3];
    for s in 0..5u64 {
        let mut cfg = RunConfig {
            seed: s,
            steps: 50,
            batch_size: 16,
            out: tmp.path().join(format!("seed{s}")),
            variants: variants.to_vec(),
            ..RunConfig::default()
        };
        cfg.env.shortcut_bias_rate = 0.7;
        cfg.optimizer.group_size = 8;
        cfg.optimizer.learning_rate = 3.0;
        for (k, &v) in variants.iter().enumerate() {
            let art = train_variant(&cfg, v).map_err(|e| e.to_string())?;
            ensure!(art.reports.len() == 50, "{v}: {} metrics records", art.reports.len());
            let last = art.reports.last().unwrap();
            reward[k].push(last.mean_reward);
            outcome[k].push(last.mean_outcome_reward);
            shortcut[k].push(last.paths.frequency(Path::Shortcut));
        }
    }
    let r: Vec<(f64, f64)> = reward.iter().map(|x| mean_se(x)).collect();
    let sc: Vec<f64> = shortcut.iter().map(|x| mean_se(x).0).collect();
    let ob: Vec<f64> = outcome.iter().map(|x| mean_se(x).0).collect();
    let tol = |a: (f64, f64), b: (f64, f64)| (a.1 * a.1 + b.1 * b.1).sqrt();
    let summary = format!(
        "terminal reward GRPO {:.3}+-{:.3}, NO_PROCESS {:.3}+-{:.3}, PGPO {:.3}+-{:.3}; R_base {:.3}/{:.3}/{:.3}; SHORTCUT GRPO {:.3} vs PGPO {:.3}",
        r[0].0, r[0].1, r[1].0, r[1].1, r[2].0, r[2].1, ob[0], ob[1], ob[2], sc[0], sc[2]
    );
    ensure!(
        r[2].0 >= r[1].0 - tol(r[2], r[1]),
        "PGPO < PGPO_NO_PROCESS beyond one SE: {summary}"
    );
    ensure!(
        r[1].0 >= r[0].0 - tol(r[1], r[0]),
        "PGPO_NO_PROCESS < GRPO beyond one SE: {summary}"
    );
    ensure!(
        sc[0] - sc[2] >= 0.05,
        "SHORTCUT margin {:.3} < 0.05: {summary}",
        sc[0] - sc[2]
    );
    Ok(summary)
}

// ---------------------------------------------------------------- 8

fn random_num(rng: &mut seed::Rng) -> Num {
    let v = match rng.random_range(0..4) {
        0 => rng.random_range(-1000..1000),
        1 => rng.random_range(-1_000_000_000_000..1_000_000_000_000),
        2 => 0,
        _ => rng.random_range(i64::MIN / 2..i64::MAX / 2),
    };
    if rng.random_bool(0.5) {
        Num::Int(v)
    } else {
        Num::Dec(v)
    }
}

fn random_text(rng: &mut seed::Rng) -> String {
    const ALPHABET: &[&str] = &[
        "a", "Z", " ", "\"", "\\", "/", "<", ">", "=", "\t", "\n", "é", "表", "💡", "value=", "op=", "0", "-", ".",
    ];
    (0..rng.random_range(0..12))
        .map(|_| *ALPHABET.choose(rng).unwrap())
        .collect()
}

fn random_trajectory(rng: &mut seed::Rng) -> Trajectory {
    let steps = (0..rng.random_range(0..10))
        .map(|i| {
            let op = *OpToken::ALL.choose(rng).unwrap();
            TraceStep {
                step_index: i,
                anchor: CellRef::new(rng.random_range(0..200), rng.random_range(0..40)),
                claimed_value: if rng.random_bool(0.3) {
                    CellValue::text(random_text(rng))
                } else {
                    CellValue::Num(random_num(rng))
                },
                op_token: op,
                intermediate: if op == OpToken::Read {
                    None
                } else {
                    Some(random_num(rng))
                },
            }
        })
        .collect();
    let answer = match rng.random_range(0..3) {
        0 => Answer::Number(random_num(rng)),
        1 => Answer::Bool(rng.random_bool(0.5)),
        _ => Answer::Text(random_text(rng)),
    };
    Trajectory::new(steps, Some(answer))
}

fn mutate(text: &str, rng: &mut seed::Rng) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    for _ in 0..rng.random_range(1..6) {
        let pos = rng.random_range(0..=chars.len());
        match rng.random_range(0..3) {
            0 if pos < chars.len() => {
                chars.remove(pos);
            }
            1 => chars.insert(
                pos,
                *['<', '>', '"', '\\', '\n', 'x', '9', ' ', '=', '.', '-']
                    .choose(rng)
                    .unwrap(),
            ),
            _ => chars.truncate(pos),
        }
    }
    chars.into_iter().collect()
}

fn criterion_8() -> Outcome {
    let mut rng = seed::rng(8);
    for i in 0..10_000 {
        let t = random_trajectory(&mut rng);
        let text = serialize(&t);
        let back = parse(&text);
        ensure!(back.diagnostics.is_empty(), "case {i}: {:?}\n{text}", back.diagnostics);
        ensure!(
            back.trajectory == t,
            "case {i}: round trip changed the trajectory\n{text}"
        );
    }
    let mut diagnosed = 0;
    for i in 0..10_000 {
        let text = mutate(&serialize(&random_trajectory(&mut rng)), &mut rng);
        let outcome = catch_unwind(|| parse(&text)).map_err(|_| format!("parse aborted on mutated case {i}"))?;
        diagnosed += !outcome.diagnostics.is_empty() as usize;
    }
    Ok(format!(
        "10000 round trips exact; 10000 mutated inputs parsed without abort ({diagnosed} diagnosed)"
    ))
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 gated reward branches", criterion_1, Duration::from_secs(1)),
        ("2 group advantages", criterion_2, Duration::from_secs(1)),
        ("3 surrogate gradient", criterion_3, Duration::from_secs(30)),
        ("4 active-set selection", criterion_4, Duration::from_secs(5)),
        ("5 process calibration", criterion_5, Duration::from_secs(10)),
        ("6 rigor over shortcut", criterion_6, Duration::from_secs(1)),
        ("7 directional ablation", criterion_7, Duration::from_secs(300)),
        ("8 grammar round trip", criterion_8, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let slow = if took > budget {
            format!(" (over the {budget:?} runtime target)")
        } else {
            String::new()
        };
        match res {
            Ok(msg) => println!("PASS criterion {name}: {msg} [{took:.2?}{slow}]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg} [{took:.2?}]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
