use std::cell::Cell;
use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use optexp::games::{horizon_for, solve_game, verify_equilibrium, DenseGame, ZeroSumGame};
use optexp::harness::{run_experts, ExperimentSpec};
use optexp::instances::{lambda, AldousGame, BinaryClassification, HardExperts, HypercubeFunction};
use optexp::instances::{randomized_round, InstanceSpec, MultilinearExtension};
use optexp::model::{
    ActionId, CumulativeLeader, ExpertId, LeaderFeed, LossModel, OraclePair, SparseDist,
};
use optexp::mw::{Mw1, Mw2, Mw3, SlidingBuffer};
use optexp::{seed, Leaders, MainLearner, OnlineLearner, SelfOblivious};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Check = (bool, String);

fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn ln(x: f64) -> f64 {
    x.ln()
}

/// Windows `[k 2^j, (k + 1) 2^j)` inside `[0, t)`.
fn dyadic_windows(t: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut len = 1;
    while len <= t {
        out.extend((0..t / len).map(|k| (k * len, (k + 1) * len)));
        len *= 2;
    }
    out
}

/// Realized regret on every window, from prefix sums of the player's and
/// every expert's losses.
fn worst_window_regret(player: &[f64], experts: &[Vec<f64>], windows: &[(usize, usize)]) -> f64 {
    windows
        .iter()
        .map(|&(a, b)| {
            let best = experts
                .iter()
                .map(|c| c[b] - c[a])
                .fold(f64::INFINITY, f64::min);
            player[b] - player[a] - best
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn adversary_losses(
    kind: usize,
    t: usize,
    n: usize,
    probs: &[f64],
    params: &[f64],
    rng: &mut seed::Rng,
) -> Vec<f64> {
    match kind {
        0 => (0..n).map(|_| rng.gen()).collect(),
        1 => (0..n)
            .map(|x| (rng.gen::<f64>() < params[x]) as u8 as f64)
            .collect(),
        2 => {
            let block = 1usize << (6 + (params[0] * 7.0) as usize);
            let good = seed::derive(params[1].to_bits(), &[(t / block) as u64]) as usize % n;
            (0..n)
                .map(|x| {
                    if x == good {
                        0.0
                    } else {
                        (rng.gen::<f64>() < 0.5) as u8 as f64
                    }
                })
                .collect()
        }
        3 => probs
            .iter()
            .map(|&p| if p >= 1.0 / n as f64 { 1.0 } else { 0.0 })
            .collect(),
        _ => {
            let period = 500.0 + 4000.0 * params[0];
            (0..n)
                .map(|x| {
                    ((std::f64::consts::TAU * t as f64 / period + params[x + 1]).sin() + 1.0) / 2.0
                })
                .collect()
        }
    }
}

fn ac1() -> Check {
    let (n, t) = (16usize, 10_000usize);
    let eta = (2.0 * ln((n * t) as f64) / t as f64).sqrt();
    let bound = 2.0 * ln((n * t) as f64) / eta + eta * t as f64;
    let windows = dyadic_windows(t);
    let mut worst = f64::NEG_INFINITY;
    for adv in 0..20 {
        for s in 0..20u64 {
            let mut mw = Mw1::tuned(n, t).unwrap();
            assert_eq!(mw.eta(), eta);
            assert_eq!(mw.gamma(), 1.0 / t as f64);
            let mut play = seed::substream(s, &[1, adv as u64]);
            let mut adv_rng = seed::substream(s, &[2, adv as u64]);
            let params: Vec<f64> = (0..=n).map(|_| adv_rng.gen()).collect();
            let mut player = vec![0.0; t + 1];
            let mut experts = vec![vec![0.0; t + 1]; n];
            for r in 0..t {
                let losses =
                    adversary_losses(adv % 5, r, n, &mw.probabilities(), &params, &mut adv_rng);
                let x = mw.sample(&mut play).unwrap();
                player[r + 1] = player[r] + losses[x];
                for (c, l) in experts.iter_mut().zip(&losses) {
                    c[r + 1] = c[r] + l;
                }
                mw.update(&losses).unwrap();
            }
            worst = worst.max(worst_window_regret(&player, &experts, &windows));
        }
    }
    (
        worst <= bound,
        format!("max dyadic-window regret {worst:.2} <= {bound:.2}"),
    )
}

fn ac2() -> Check {
    let (n, t) = (16usize, 20_000usize);
    let nt = (n * t) as f64;
    let eta = 2.0 * (ln(nt) / nt).sqrt();
    let bound = 4.0 * ln(nt) / eta + eta * nt;
    let mut regrets = Vec::new();
    for s in 0..200u64 {
        let mut mw = Mw2::tuned(n, t).unwrap();
        assert_eq!(mw.eta(), eta);
        let mut rng = seed::substream(s, &[3]);
        let means: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.8)).collect();
        let (mut play, mut update) = (seed::substream(s, &[4]), seed::substream(s, &[5]));
        let mut sums = vec![0.0; n];
        let mut player = 0.0;
        for _ in 0..t {
            let losses: Vec<f64> = means
                .iter()
                .map(|&m| (rng.gen::<f64>() < m) as u8 as f64)
                .collect();
            player += losses[mw.play(&mut play).unwrap().index()];
            sums.iter_mut().zip(&losses).for_each(|(c, l)| *c += l);
            mw.observe(&mut |x| losses[x.index()], ExpertId(0), &mut update)
                .unwrap();
        }
        regrets.push(player - sums.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let mean = regrets.iter().sum::<f64>() / regrets.len() as f64;

    let (n, t) = (8usize, 500usize);
    let mut mw = Mw2::tuned(n, t).unwrap();
    let (eta, gamma) = (mw.eta(), mw.gamma());
    let mut dense = vec![1.0f64; n];
    let mut rng = seed::rng(77);
    let mut worst = 0.0f64;
    for _ in 0..t {
        let losses: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let mut queried = None;
        mw.observe(
            &mut |x| {
                queried = Some(x.index());
                losses[x.index()]
            },
            ExpertId(0),
            &mut rng,
        )
        .unwrap();
        let q = queried.unwrap();
        let total: f64 = dense.iter().sum();
        for (x, w) in dense.iter_mut().enumerate() {
            let estimate = if x == q { n as f64 * losses[q] } else { 0.0 };
            *w = *w * (-eta * estimate).exp() + gamma / n as f64 * total;
        }
        for (x, &w) in dense.iter().enumerate() {
            worst = worst.max((mw.weights().weight(x) - w).abs() / w);
        }
    }
    (
        mean <= bound && worst <= 1e-8,
        format!(
            "mean regret {mean:.1} <= {bound:.1}; weight trajectory rel err {worst:.1e} <= 1e-8"
        ),
    )
}

/// The `k` most recently activated distinct experts, starting from `0..k`.
fn most_recent_distinct(k: usize, activations: &[usize]) -> BTreeSet<usize> {
    let mut order: Vec<usize> = (0..k).collect();
    for &a in activations {
        order.retain(|&x| x != a);
        order.push(a);
    }
    order[order.len() - k..].iter().copied().collect()
}

fn ac3() -> Check {
    let mut mismatches = 0;
    for run in 0..100u64 {
        let mut rng = seed::substream(run, &[6]);
        let k = rng.gen_range(1..=8);
        let pool = rng.gen_range(k..=3 * k + 2);
        let mut buffer = SlidingBuffer::new(k).unwrap();
        let mut script = Vec::new();
        for step in 0..300 {
            let a = rng.gen_range(0..pool);
            let before = buffer.slot_of(ExpertId(a));
            buffer.activate(ExpertId(a), step);
            script.push(a);
            let got: BTreeSet<usize> = buffer.experts().iter().map(|x| x.index()).collect();
            let kept = before.map_or(true, |slot| buffer.slot_of(ExpertId(a)) == Some(slot));
            if got != most_recent_distinct(k, &script) || !kept {
                mismatches += 1;
            }
        }
    }

    let (n, k, t) = (64usize, 4usize, 1usize << 12);
    let kt = (k * t) as f64;
    let eta = 2.0 * (ln(kt) / kt).sqrt();
    let bound = 4.0 * ln(kt) / eta + eta * kt;
    let mut regrets = Vec::new();
    for s in 0..100u64 {
        let mut mw = Mw3::tuned(n, k, t).unwrap();
        assert_eq!(mw.eta(), eta);
        let mut rng = seed::substream(s, &[7]);
        let mut pool: Vec<usize> = Vec::new();
        while pool.len() < k {
            let x = rng.gen_range(0..n);
            if !pool.contains(&x) {
                pool.push(x);
            }
        }
        let pinned = pool[0];
        let (mut play, mut update) = (seed::substream(s, &[8]), seed::substream(s, &[9]));
        let mut regret = 0.0;
        for r in 0..t {
            let losses: Vec<f64> = (0..n)
                .map(|x| {
                    if x == pinned {
                        rng.gen_range(0.0..0.6)
                    } else {
                        rng.gen()
                    }
                })
                .collect();
            let x = mw.play(&mut play).unwrap();
            if r > 0 {
                regret += losses[x.index()] - losses[pinned];
            }
            mw.observe(
                &mut |e| losses[e.index()],
                ExpertId(pool[r % k]),
                &mut update,
            )
            .unwrap();
        }
        regrets.push(regret);
    }
    let mean = regrets.iter().sum::<f64>() / regrets.len() as f64;
    (
        mismatches == 0 && mean <= bound,
        format!(
            "buffer mismatches {mismatches} over 100 scripts; mean regret {mean:.1} <= {bound:.1}"
        ),
    )
}

fn ac4() -> Check {
    let (n, t, grid) = (64usize, 1usize << 14, 256usize);
    let points = t / grid;
    let mut ok = true;
    let mut detail = Vec::new();
    for budget in [2usize, 4, 8] {
        let bound = 25.0 * (budget as f64 * t as f64 * ln(2.0 * budget as f64 * t as f64)).sqrt();
        let mut sums = vec![vec![0.0; points + 1]; points + 1];
        let mut most_leaders = 0;
        let seeds = 100u64;
        for s in 0..seeds {
            let mut rng = seed::substream(s, &[10, budget as u64]);
            let mut phase_experts = Vec::new();
            while phase_experts.len() < budget {
                let x = rng.gen_range(0..n);
                if !phase_experts.contains(&x) {
                    phase_experts.push(x);
                }
            }
            let mut cuts: Vec<usize> = (1..budget).map(|_| rng.gen_range(1..t)).collect();
            cuts.sort_unstable();
            let mut learner = Leaders::new(n, budget, t).unwrap();
            let (mut play, mut update) = (seed::substream(s, &[11]), seed::substream(s, &[12]));
            let mut cumulative = CumulativeLeader::new(n);
            let mut totals = vec![0.0; n];
            let mut leaders = BTreeSet::new();
            let (mut player, mut player_at, mut best_at) =
                (0.0, vec![0.0; points + 1], vec![0.0; points + 1]);
            for r in 0..t {
                let phase = cuts.iter().filter(|&&c| c <= r).count();
                let losses: Vec<f64> = (0..n)
                    .map(|x| match phase_experts.iter().position(|&e| e == x) {
                        Some(j) if j == phase => 0.0,
                        Some(_) => rng.gen(),
                        None => 1.0,
                    })
                    .collect();
                player += losses[learner.play(&mut play).unwrap().index()];
                let leader = cumulative.push(&losses);
                leaders.insert(leader);
                totals.iter_mut().zip(&losses).for_each(|(c, l)| *c += l);
                learner
                    .observe(&mut |x| losses[x.index()], leader, &mut update)
                    .unwrap();
                if (r + 1) % grid == 0 {
                    let g = (r + 1) / grid;
                    player_at[g] = player;
                    best_at[g] = totals.iter().copied().fold(f64::INFINITY, f64::min);
                }
            }
            most_leaders = most_leaders.max(leaders.len());
            for a in 0..=points {
                for b in a + 1..=points {
                    sums[a][b] += (player_at[b] - player_at[a]) - (best_at[b] - best_at[a]);
                }
            }
        }
        let worst = (0..=points)
            .flat_map(|a| (a + 1..=points).map(move |b| (a, b)))
            .map(|(a, b)| sums[a][b] / seeds as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        ok &= worst <= bound && most_leaders <= budget;
        detail.push(format!(
            "L={budget}: {worst:.1} <= {bound:.0} ({most_leaders} leaders)"
        ));
    }
    (
        ok,
        format!("worst mean interval regret {}", detail.join(", ")),
    )
}

fn model_cost_per_round(block: usize, t: usize) -> f64 {
    let spec = ExperimentSpec::experts("main", InstanceSpec::hard_experts(block, 5), t, 2, 5);
    let records = run_experts(&spec).unwrap();
    let cost: u64 = records
        .iter()
        .map(|r| r.oracle.value_calls + r.oracle.opt_calls + r.work)
        .sum();
    cost as f64 / (records.len() * t) as f64
}

fn ac5() -> Check {
    let t = 4096;
    let mut ok = true;
    let mut detail = Vec::new();
    for block in [8usize, 16] {
        let n = block * block;
        let bound = 40.0 * (n as f64).powf(0.25) * ln((n * t) as f64) / (t as f64).sqrt();
        let spec = ExperimentSpec::experts("main", InstanceSpec::hard_experts(block, 1), t, 50, 1);
        let finals: Vec<f64> = run_experts(&spec)
            .unwrap()
            .iter()
            .map(|r| r.final_value().unwrap())
            .collect();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        ok &= mean <= bound;
        if n == 256 {
            ok &= mean <= 0.25;
        }
        detail.push(format!(
            "N={n}: {mean:.4} <= {:.4}",
            if n == 256 { bound.min(0.25) } else { bound }
        ));
    }
    let (small, large) = (
        model_cost_per_round(32, 1024),
        model_cost_per_round(512, 1024),
    );
    let ratio = large / small;
    ok &= ratio <= 20.0;
    detail.push(format!("cost ratio 2^18/2^10 {ratio:.2} <= 20"));
    (ok, format!("mean avg regret {}", detail.join("; ")))
}

fn ac6() -> Check {
    let (n, t) = (8usize, 4096usize);
    let bound = 40.0 * (n as f64).powf(0.25) * ln(10.0 * (n * t) as f64) / (t as f64).sqrt();
    let mut regrets = Vec::new();
    let mut audit_failures = 0;
    for s in 0..100u64 {
        let base = MainLearner::new(n, t, &mut seed::substream(s, &[13])).unwrap();
        let update_seed = seed::derive(s, &[14]);
        let mut a = SelfOblivious::new(base.clone(), seed::derive(s, &[15]), update_seed);
        let mut b = SelfOblivious::new(base, seed::derive(s, &[16]), update_seed);
        let mut rng = seed::substream(s, &[17]);
        let mut cumulative = CumulativeLeader::new(n);
        let mut counts = vec![0u64; n];
        let mut last = None;
        let mut player = 0.0;
        let mut totals = vec![0.0; n];
        for _ in 0..t {
            let favorite = (0..n)
                .max_by_key(|&x| (counts[x], std::cmp::Reverse(x)))
                .unwrap();
            let losses: Vec<f64> = (0..n)
                .map(|x| {
                    if Some(x) == last || x == favorite {
                        1.0
                    } else {
                        rng.gen_range(0.0..(0.5 + x as f64 / n as f64).min(1.0))
                    }
                })
                .collect();
            let x = a.play().unwrap().index();
            b.play().unwrap();
            player += losses[x];
            totals.iter_mut().zip(&losses).for_each(|(c, l)| *c += l);
            counts[x] += 1;
            last = Some(x);
            let leader = cumulative.push(&losses);
            let (mut seen_a, mut seen_b) = (Vec::new(), Vec::new());
            a.observe(
                &mut |e| {
                    seen_a.push(e);
                    losses[e.index()]
                },
                leader,
            )
            .unwrap();
            b.observe(
                &mut |e| {
                    seen_b.push(e);
                    losses[e.index()]
                },
                leader,
            )
            .unwrap();
            if seen_a != seen_b || a.snapshot() != b.snapshot() {
                audit_failures += 1;
            }
        }
        regrets.push((player - totals.iter().copied().fold(f64::INFINITY, f64::min)) / t as f64);
    }
    let mean = regrets.iter().sum::<f64>() / regrets.len() as f64;
    (
        mean <= bound && audit_failures == 0,
        format!("mean avg regret {mean:.4} <= {bound:.3}; rounds where plays reached updates: {audit_failures}"),
    )
}

/// `max_j (p^T G)_j - min_i (G q)_i` by dense linear algebra.
fn exploitability(game: &DenseGame, p: &SparseDist, q: &SparseDist) -> f64 {
    let n = game.size();
    let g = DMatrix::from_row_slice(n, n, game.payoffs());
    let (p, q) = (
        DVector::from_vec(p.to_dense(n)),
        DVector::from_vec(q.to_dense(n)),
    );
    (g.transpose() * p).max() - (g * q).min()
}

fn ac7() -> Check {
    let mut gaps = Vec::new();
    let mut disagreement = 0.0f64;
    for s in 0..50u64 {
        let game = DenseGame::random(64, &mut seed::substream(s, &[18])).unwrap();
        let report = solve_game(&game, 100_000, seed::derive(s, &[19])).unwrap();
        let gap = exploitability(&game, &report.p, &report.q);
        disagreement = disagreement.max((gap - report.duality_gap).abs());
        gaps.push(gap);
    }
    gaps.sort_by(f64::total_cmp);
    let median = (gaps[24] + gaps[25]) / 2.0;

    let (eps, delta) = (0.25f64, 0.1f64);
    let log = (240.0 * 4.0 / (eps * delta)).ln();
    let exact = (240.0f64.powi(2) * 2.0 / eps.powi(2) * log * log).ceil() as u64;
    let horizon = horizon_for(4, eps, delta).unwrap();
    let seeds = 1u64;
    let mut hits = 0;
    let mut small_gaps = Vec::new();
    for s in 0..seeds {
        let game = DenseGame::random(4, &mut seed::substream(s, &[20])).unwrap();
        let report = solve_game(&game, horizon as usize, seed::derive(s, &[21])).unwrap();
        let gap = exploitability(&game, &report.p, &report.q);
        small_gaps.push(gap);
        hits += (gap <= 0.5) as u64;
    }
    let ok = median <= 0.1 && disagreement <= 1e-9 && horizon == exact && hits * 10 >= seeds * 9;
    (
        ok,
        format!(
            "64x64 median gap {median:.4} <= 0.1 (oracle diff {disagreement:.1e}); \
             4x4 at T={horizon}: {hits}/{seeds} seeds with gap <= 0.5 (gaps {small_gaps:.4?})"
        ),
    )
}

fn neighborhood_oracle(d: u32, support: &[usize]) -> BTreeSet<usize> {
    support
        .iter()
        .flat_map(|&v| std::iter::once(v).chain((0..d).map(move |i| v ^ (1 << i))))
        .collect()
}

fn ac8() -> Check {
    let mut failures = Vec::new();
    for i in 0..50u64 {
        let d = 1 + (i % 10) as u32;
        let f = HypercubeFunction::staircase(d, &mut seed::substream(i, &[22])).unwrap();
        let top = (0..f.len())
            .max_by_key(|&v| (f.value(v), std::cmp::Reverse(v)))
            .unwrap();
        let game = AldousGame::new(f.clone()).unwrap();
        let star = SparseDist::point(game.peak());
        let (ok, report) = verify_equilibrium(&game, &star, &star, 0.0);
        let parity = if f.value(top) % 2 == 0 { 0.25 } else { 0.75 };
        if !ok || game.peak() != top || report.value != parity || lambda(f.value(top)) != parity {
            failures.push(format!("equilibrium d={d} seed={i}"));
        }
        let mut rng = seed::substream(i, &[23]);
        for _ in 0..20 {
            let atoms: Vec<(usize, f64)> = (0..rng.gen_range(1..=3))
                .map(|_| (rng.gen_range(0..f.len()), rng.gen_range(0.1..1.0)))
                .collect();
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            let mut merged = std::collections::BTreeMap::new();
            for (v, w) in atoms {
                *merged.entry(v).or_insert(0.0) += w / total;
            }
            let p = SparseDist::new(merged.into_iter().collect()).unwrap();
            let allowed = neighborhood_oracle(d, &p.support().collect::<Vec<_>>());
            for column in [true, false] {
                let before = game.f_reads();
                let br = if column {
                    game.best_col(&p)
                } else {
                    game.best_row(&p)
                };
                let reads = game.last_br_reads();
                if game.f_reads() - before != reads.len() as u64
                    || !reads.iter().all(|v| allowed.contains(v))
                {
                    failures.push(format!("locality d={d} seed={i}"));
                }
                if d <= 8 {
                    let value = |j: usize| {
                        if column {
                            p.expect(|r| f_payoff(&f, r, j))
                        } else {
                            p.expect(|c| f_payoff(&f, j, c))
                        }
                    };
                    let all: Vec<f64> = (0..f.len()).map(value).collect();
                    let target = if column {
                        all.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    } else {
                        all.iter().copied().fold(f64::INFINITY, f64::min)
                    };
                    if (value(br) - target).abs() > 1e-12 {
                        failures.push(format!("best response d={d} seed={i}"));
                    }
                }
            }
        }
    }
    failures.dedup();
    (
        failures.is_empty(),
        format!("50 functions, failures: {failures:?}"),
    )
}

/// Payoff of the hypercube game computed directly from `f`.
fn f_payoff(f: &HypercubeFunction, row: usize, col: usize) -> f64 {
    let local = |v: usize| f.neighbors(v).all(|u| f.value(u) <= f.value(v));
    if local(row) && local(col) {
        if f.value(row) % 2 == 0 {
            0.25
        } else {
            0.75
        }
    } else if f.value(row) >= f.value(col) {
        0.0
    } else {
        1.0
    }
}

/// `sum_v f(v) prod_i x_i^v_i (1 - x_i)^(1 - v_i)`, bit `i` of `v` is coordinate `i`.
fn brute_extension(values: &[f64], x: &[f64]) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(v, &fv)| {
            fv * x
                .iter()
                .enumerate()
                .map(|(i, &xi)| if v >> i & 1 == 1 { xi } else { 1.0 - xi })
                .product::<f64>()
        })
        .sum()
}

fn ac9() -> Check {
    let mut rng = seed::rng(24);
    let mut violations = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_min = 0.0f64;
    let mut below_vertex = f64::NEG_INFINITY;
    let (mut equal, mut compared) = (0, 0);
    let mut worst_brute = 0.0f64;
    for d in 1..=8usize {
        for _ in 0..3 {
            let f = MultilinearExtension::random(d, &mut rng).unwrap();
            for _ in 0..10_000 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
                let y: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
                let dist = x
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let excess = (f.eval(&x).unwrap() - f.eval(&y).unwrap()).abs() - dist;
                worst_excess = worst_excess.max(excess);
                if excess > 1e-9 {
                    violations += 1;
                }
            }
            let x: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
            let scaled = brute_extension(f.base(), &x) / (d as f64).sqrt();
            worst_brute = worst_brute.max((f.eval(&x).unwrap() - scaled).abs());
            let (cube, vertex) = f.min_check(&mut rng);
            let oracle = f.base().iter().copied().fold(f64::INFINITY, f64::min) / (d as f64).sqrt();
            worst_min = worst_min
                .max((cube - vertex).abs())
                .max((vertex - oracle).abs());
            below_vertex = below_vertex.max(vertex - cube);
            equal += ((cube - vertex).abs() <= 1e-9) as usize;
            compared += 1;
            let weights: Vec<f64> = (0..3).map(|_| rng.gen()).collect();
            let parts: Vec<MultilinearExtension> = (0..3)
                .map(|_| MultilinearExtension::random(d, &mut rng).unwrap())
                .collect();
            let total: f64 = weights.iter().sum();
            let combined: Vec<f64> = (0..1 << d)
                .map(|v| {
                    parts
                        .iter()
                        .zip(&weights)
                        .map(|(p, w)| w / total * p.base()[v])
                        .sum()
                })
                .collect();
            let g = MultilinearExtension::new(d, combined).unwrap();
            let (cube, vertex) = g.min_check(&mut rng);
            worst_min = worst_min.max((cube - vertex).abs());
            below_vertex = below_vertex.max(vertex - cube);
            equal += ((cube - vertex).abs() <= 1e-9) as usize;
            compared += 1;
        }
    }

    let draws = 100_000usize;
    let mut sigma_ratio = 0.0f64;
    let mut min_p_value = 1.0f64;
    for _ in 0..5 {
        let f = MultilinearExtension::random(3, &mut rng).unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..0.95)).collect();
        let mut counts = [0u64; 8];
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..draws {
            let v = randomized_round(&x, &mut rng).unwrap();
            counts[v] += 1;
            let fv = f.base()[v];
            sum += fv;
            sum_sq += fv * fv;
        }
        let mean = sum / draws as f64;
        let sd = (sum_sq / draws as f64 - mean * mean).max(0.0).sqrt();
        let target = 3f64.sqrt() * f.eval(&x).unwrap();
        sigma_ratio = sigma_ratio.max((mean - target).abs() / (sd / (draws as f64).sqrt()));
        let chi: f64 = (0..8)
            .map(|v| {
                let expected = draws as f64 * brute_extension(&indicator(v), &x);
                (counts[v] as f64 - expected).powi(2) / expected
            })
            .sum();
        min_p_value = min_p_value.min(1.0 - ChiSquared::new(7.0).unwrap().cdf(chi));
    }
    let ok = violations == 0
        && worst_min <= 1e-9
        && worst_brute <= 1e-12
        && sigma_ratio <= 3.0
        && min_p_value > 1e-3;
    (
        ok,
        format!(
            "Lipschitz violations {violations} (max excess {worst_excess:.2e}); cube = vertex on {equal}/{compared} \
             (max diff {worst_min:.1e}, max cube undershoot {below_vertex:.1e}); \
             rounding |bias|/sigma {sigma_ratio:.2} <= 3; chi-square min p {min_p_value:.3}"
        ),
    )
}

fn indicator(v: usize) -> Vec<f64> {
    (0..8).map(|u| (u == v) as u8 as f64).collect()
}

/// Hard-instance model that audits every optimization answer.
struct Audited {
    inner: HardExperts,
    calls: Cell<u64>,
    outside: Cell<u64>,
}

impl LossModel for Audited {
    fn num_experts(&self) -> usize {
        self.inner.num_experts()
    }

    fn loss(&self, expert: ExpertId, action: ActionId) -> f64 {
        self.inner.loss(expert, action)
    }

    fn best_expert(&self, dist: &SparseDist) -> ExpertId {
        let answer = self.inner.best_expert(dist);
        self.calls.set(self.calls.get() + 1);
        if dist.mass(answer.index()) <= 0.0 {
            self.outside.set(self.outside.get() + 1);
        }
        answer
    }
}

fn random_dist(rng: &mut seed::Rng, len: usize) -> SparseDist {
    let mut atoms = std::collections::BTreeMap::new();
    for _ in 0..rng.gen_range(1..=6) {
        *atoms.entry(rng.gen_range(0..len)).or_insert(0.0) += rng.gen_range(0.1..1.0);
    }
    let total: f64 = atoms.values().sum();
    SparseDist::new(atoms.into_iter().map(|(a, w)| (a, w / total)).collect()).unwrap()
}

fn ac10() -> Check {
    let mut rng = seed::rng(25);
    let inner = HardExperts::generate(4, &mut rng).unwrap();
    let oracle = OraclePair::new(Audited {
        inner: inner.clone(),
        calls: Cell::new(0),
        outside: Cell::new(0),
    });
    let mut wrong_value = 0;
    for _ in 0..1000 {
        let dist = random_dist(&mut rng, 16);
        let answer = oracle.opt(&dist);
        let brute = (0..16)
            .map(|x| dist.expect(|a| inner.loss(ExpertId(x), a)))
            .fold(f64::INFINITY, f64::min);
        if (dist.expect(|a| inner.loss(answer, a)) - brute).abs() > 1e-12 {
            wrong_value += 1;
        }
    }
    let t = 2048;
    let mut learner = SelfOblivious::new(MainLearner::new(16, t, &mut rng).unwrap(), 1, 2);
    let mut feed = LeaderFeed::new();
    for r in 0..t {
        learner.play().unwrap();
        let y = inner.canonical_action(r);
        let leader = feed.push(y, &oracle).unwrap();
        learner
            .observe(&mut |e| oracle.value(e, y), leader)
            .unwrap();
    }
    let model = oracle.model();

    let cls = BinaryClassification::generate(4, &mut rng).unwrap();
    let mut asymmetric = 0;
    for h in 0..16 {
        for x in 0..16 {
            let (a, b) = (
                cls.loss(ExpertId(h), BinaryClassification::example(x, 0)),
                cls.loss(ExpertId(h), BinaryClassification::example(x, 1)),
            );
            if a + b != 1.0 {
                asymmetric += 1;
            }
        }
    }
    let mut erm_mismatch = 0;
    for _ in 0..1000 {
        let dist = random_dist(&mut rng, cls.num_actions());
        let answer = cls.erm(&dist);
        let brute = (0..16)
            .map(|h| dist.expect(|a| cls.loss(ExpertId(h), a)))
            .fold(f64::INFINITY, f64::min);
        if (dist.expect(|a| cls.loss(answer, a)) - brute).abs() > 1e-12 {
            erm_mismatch += 1;
        }
    }
    let ok = model.outside.get() == 0 && wrong_value == 0 && asymmetric == 0 && erm_mismatch == 0;
    (
        ok,
        format!(
            "opt outside support {}/{} calls, suboptimal {wrong_value}; antisymmetry violations {asymmetric}; \
             ERM mismatches {erm_mismatch}/1000",
            model.outside.get(),
            model.calls.get()
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Check, u64); 10] = [
        ("AC1", ac1, 30),
        ("AC2", ac2, 120),
        ("AC3", ac3, 60),
        ("AC4", ac4, 300),
        ("AC5", ac5, 600),
        ("AC6", ac6, 120),
        ("AC7", ac7, 900),
        ("AC8", ac8, 60),
        ("AC9", ac9, 120),
        ("AC10", ac10, 30),
    ];
    say("");
    let mut failed = Vec::new();
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let (passed, detail) = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let verdict = if passed && in_time { "PASS" } else { "FAIL" };
        say(&format!(
            "{name} {verdict} {detail}; {:.1}s <= {limit}s",
            elapsed.as_secs_f64()
        ));
        if verdict == "FAIL" {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
