//! Acceptance run: one PASS/FAIL line per criterion at pinned tolerances.
//!
//! Runs without the libtest harness so the lines always print. Exits non-zero if any
//! criterion outside `DOCUMENTED_DEVIATIONS` fails, or if a documented one starts passing.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use gridcoh::clustering::{cluster, preprocess, WeightGraph};
use gridcoh::coherency::{cc_pair, ks_pair};
use gridcoh::indices::{analyze_matrix, gci, gsi, indices_series, si, Ksgm, SeriesOptions};
use gridcoh::model::{
    load_matrix, MachineSet, MatrixFormat, NetworkSchedule, ReducedNetwork, RotorSnapshot,
    SymmetricMatrix, Trajectory,
};
use gridcoh::swingsim::{
    find_equilibrium, simulate, transient_energy, NamedNetwork, Scenario, SimConfig,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Criteria known not to hold as written; the reason is printed with the line.
const DOCUMENTED_DEVIATIONS: &[&str] = &["AC7c"];

struct Report {
    failed: BTreeSet<&'static str>,
}

impl Report {
    fn check(&mut self, id: &'static str, what: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{id:<5} {verdict}  {what}: {detail}");
        if !pass {
            self.failed.insert(id);
        }
    }
}

fn fixture(name: &str) -> (Vec<String>, SymmetricMatrix) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name);
    load_matrix(path, MatrixFormat::Csv).expect("fixture loads")
}

fn idx(labels: &[String], names: &[&str]) -> Vec<usize> {
    names
        .iter()
        .map(|n| labels.iter().position(|l| l == n).expect("label present"))
        .collect()
}

fn names(range: std::ops::RangeInclusive<usize>) -> Vec<String> {
    range.map(|i| format!("G{i}")).collect()
}

/// Expected coherent groups of the 19-generator reference matrix.
fn reference_groups() -> Vec<Vec<String>> {
    vec![
        names(14..=19),
        names(1..=5),
        ["G6", "G7", "G11", "G12", "G13"].map(String::from).to_vec(),
        names(8..=10),
    ]
}

fn as_sets(groups: &[Vec<String>]) -> BTreeSet<BTreeSet<String>> {
    groups.iter().map(|g| g.iter().cloned().collect()).collect()
}

/// Mean of `m[i][j]` over unordered pairs within `a` (if `a == b`) or across `a × b`.
fn block_mean(m: &SymmetricMatrix, a: &[usize], b: &[usize], same: bool) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (x, &i) in a.iter().enumerate() {
        for (y, &j) in b.iter().enumerate() {
            if same && y <= x {
                continue;
            }
            sum += m.get(i, j);
            count += 1;
        }
    }
    sum / count as f64
}

/// Newman modularity straight from the definition, on a dense weight matrix.
fn modularity_oracle(w: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = w.len();
    let s: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = s.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += w[i][j] - s[i] * s[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Best modularity over every partition, enumerated as restricted growth strings.
fn exact_best(w: &[Vec<f64>]) -> f64 {
    fn go(w: &[Vec<f64>], labels: &mut Vec<usize>, max_label: usize, best: &mut f64) {
        if labels.len() == w.len() {
            *best = best.max(modularity_oracle(w, labels));
            return;
        }
        for l in 0..=max_label + 1 {
            labels.push(l);
            go(w, labels, max_label.max(l), best);
            labels.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    go(w, &mut vec![0], 0, &mut best);
    best
}

fn greedy_q(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    let m = SymmetricMatrix::from_fn(n, |i, j| w[i][j]);
    let (p, _) = cluster(&WeightGraph::new(m).expect("valid graph"));
    modularity_oracle(w, p.assignment())
}

fn ac1_to_ac3(r: &mut Report) {
    let (labels, ks) = fixture("ks19_reference.csv");
    let start = Instant::now();
    let a = analyze_matrix(0.0, &ks).expect("fixture analyzes");
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let got = as_sets(&a.partition.labeled_groups(&labels));
    let want = as_sets(&reference_groups());
    r.check(
        "AC1",
        "19-generator KS matrix clusters into the four reference groups",
        got == want && elapsed < 50.0,
        format!(
            "{} groups, exact match {}, {elapsed:.2} ms (< 50 ms)",
            got.len(),
            got == want
        ),
    );

    // KSGM in reference group order, against the reference group matrix.
    let groups: Vec<Vec<usize>> = reference_groups()
        .iter()
        .map(|g| idx(&labels, &g.iter().map(String::as_str).collect::<Vec<_>>()))
        .collect();
    let reference = [
        [4.371, 0.008, 0.388, 0.000],
        [0.008, 6.124, 0.202, 0.000],
        [0.388, 0.202, 8.521, 3.133],
        [0.000, 0.000, 3.133, 14.105],
    ];
    let group1_oracle = block_mean(&ks, &groups[0], &groups[0], true);
    let lib_group: Vec<usize> = groups.iter().map(|g| a.partition.group_of(g[0])).collect();
    let mut worst: f64 = 0.0;
    for g in 0..4 {
        for h in 0..4 {
            let v = a.ksgm.get(lib_group[g], lib_group[h]);
            if g == 0 && h == 0 {
                continue;
            }
            worst = worst.max((v - reference[g][h]).abs());
        }
    }
    let g1 = a.ksgm.get(lib_group[0], lib_group[0]);
    let pass = worst <= 0.01 && (g1 - 4.474).abs() <= 0.01 && (g1 - group1_oracle).abs() < 1e-12;
    r.check(
        "AC2",
        "KSGM matches the reference group matrix",
        pass,
        format!(
            "max |diff| {worst:.4} (<= 0.01); group-1 diagonal {g1:.4} vs oracle \
             {group1_oracle:.4} and 4.474 +/- 0.01"
        ),
    );

    let k = Ksgm::from_parts(
        SymmetricMatrix::from_fn(4, |i, j| reference[i][j]),
        vec![6, 5, 5, 3],
    )
    .expect("valid group matrix");
    let (g, s) = (gci(&k).unwrap(), gsi(&k).unwrap());
    let x = si(g, s);
    r.check(
        "AC3",
        "indices of the reference group matrix",
        (g - 8.280).abs() <= 0.01 && (s - 0.6218).abs() <= 0.005 && (x - 13.32).abs() <= 0.15,
        format!("GCI {g:.4} (8.280 +/- 0.01), GSI {s:.4} (0.6218 +/- 0.005), SI {x:.3} (13.32 +/- 0.15)"),
    );

    // Same indices recomputed end to end from the 19x19 matrix, against plain block means.
    let diag: Vec<f64> = groups.iter().map(|m| block_mean(&ks, m, m, true)).collect();
    let mut off = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            off.push(block_mean(&ks, &groups[i], &groups[j], false));
        }
    }
    let gci_o = diag.iter().sum::<f64>() / 4.0;
    let gsi_o = off.iter().sum::<f64>() / off.len() as f64;
    let ix = a.indices;
    r.check(
        "AC3f",
        "indices from the 19x19 matrix match the block-mean oracle",
        (ix.gci - gci_o).abs() < 1e-9
            && (ix.gsi - gsi_o).abs() < 1e-9
            && (ix.si - gci_o / gsi_o).abs() < 1e-9,
        format!(
            "GCI {:.5} GSI {:.5} SI {:.4} (oracle {gci_o:.5} {gsi_o:.5} {:.4}; differs from the \
             reference-matrix GCI through the group-1 diagonal)",
            ix.gci,
            ix.gsi,
            ix.si,
            gci_o / gsi_o
        ),
    );
}

fn ac4(r: &mut Report) {
    let (labels, cc) = fixture("cc18_reference.csv");
    let (p, _) = cluster(&preprocess(&cc).expect("valid matrix"));
    r.check(
        "AC4",
        "18-generator CC matrix clusters into two groups",
        p.n_groups() == 2,
        format!("{} groups: {:?}", p.n_groups(), p.labeled_groups(&labels)),
    );
}

fn ac5(r: &mut Report) {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed_0005);
    let mut random_graphs = 0;
    let mut violations = 0;
    while random_graphs < 600 {
        let n = rng.gen_range(2..=8);
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..i {
                if rng.gen_bool(0.6) {
                    let v = rng.gen_range(0.0..1.0);
                    w[i][j] = v;
                    w[j][i] = v;
                }
            }
        }
        if w.iter().flatten().all(|&v| v == 0.0) {
            continue;
        }
        random_graphs += 1;
        if greedy_q(&w) > exact_best(&w) + 1e-12 {
            violations += 1;
        }
    }
    let mut planted = 0;
    let mut recovered = 0;
    for _ in 0..200 {
        let n = rng.gen_range(4..=8);
        let k = rng.gen_range(2..=n - 2);
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..i {
                let v = if (i < k) == (j < k) {
                    rng.gen_range(0.8..1.2)
                } else {
                    rng.gen_range(0.0..0.1)
                };
                w[i][j] = v;
                w[j][i] = v;
            }
        }
        planted += 1;
        if (greedy_q(&w) - exact_best(&w)).abs() < 1e-9 {
            recovered += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    r.check(
        "AC5",
        "greedy modularity never beats the exact optimum; planted splits recovered",
        violations == 0 && recovered == planted && secs < 60.0,
        format!(
            "{random_graphs} random graphs, {violations} violations; {recovered}/{planted} \
             planted two-clique optima; {secs:.2} s (< 60 s)"
        ),
    );
}

fn ac6(r: &mut Report) {
    const N: usize = 10_000;
    const TOL: f64 = 1e-9;
    let mut rng = StdRng::seed_from_u64(0x5eed_0006);
    let series = |rng: &mut StdRng| -> (Vec<f64>, Vec<f64>) {
        let len = rng.gen_range(5..60);
        let x = (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y = (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect();
        (x, y)
    };
    let mut bad = [0usize; 5];
    for _ in 0..N {
        let (x, y) = series(&mut rng);
        let a = rng.gen_range(0.1..10.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let b = rng.gen_range(-10.0..10.0);
        let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let lhs = cc_pair(&ax, &y).unwrap();
        let rhs = a.signum() * cc_pair(&x, &y).unwrap();
        if (lhs - rhs).abs() > TOL {
            bad[0] += 1;
        }

        let c = rng.gen_range(0.1..10.0);
        let anti: Vec<f64> = x.iter().map(|v| -c * v + b).collect();
        if (cc_pair(&x, &anti).unwrap() + 1.0).abs() > TOL {
            bad[1] += 1;
        }

        let (ei, ej) = (rng.gen_range(0.8..1.2), rng.gen_range(0.8..1.2));
        let bij = rng.gen_range(0.0..20.0);
        let (di, dj) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
        if (ks_pair(ei, ej, bij, di, dj) - ks_pair(ej, ei, bij, dj, di)).abs() > TOL {
            bad[2] += 1;
        }
        let shift = rng.gen_range(-10.0..10.0);
        if (ks_pair(ei, ej, bij, di + shift, dj + shift) - ks_pair(ei, ej, bij, di, dj)).abs() > TOL
        {
            bad[3] += 1;
        }
        if ks_pair(ei, ej, 0.0, di, dj) != 0.0 {
            bad[4] += 1;
        }
    }
    r.check(
        "AC6",
        "CC and KS pair properties over random inputs",
        bad.iter().all(|&b| b == 0),
        format!(
            "{N} cases each; violations: cc affine {}, cc anti-phase {}, ks symmetry {}, \
             ks offset {}, ks zero-B {} (tol 1e-9)",
            bad[0], bad[1], bad[2], bad[3], bad[4]
        ),
    );
}

fn two_machine(pm: f64, damping: f64) -> (MachineSet, NamedNetwork) {
    let machines = MachineSet::new(
        vec!["A".into(), "B".into()],
        vec![0.1, 0.2],
        vec![damping; 2],
        vec![pm, -pm],
        vec![1.0, 1.0],
    )
    .unwrap();
    let mut b = SymmetricMatrix::zeros(2);
    b.set(0, 1, 5.0);
    (
        machines,
        NamedNetwork::new("tie", ReducedNetwork::lossless(b)),
    )
}

fn ac7(r: &mut Report) {
    // Equilibrium of the bundled demo machines is a fixed point of the integrator.
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo.json");
    let demo = Scenario::load(path).unwrap();
    let eq = demo.initial_state().unwrap();
    let cfg = SimConfig {
        t_end: 10.0,
        ..SimConfig::default()
    };
    let out = simulate(&demo.machines, &demo.initial(), &[], &cfg, &eq).unwrap();
    let drift = out
        .trajectory
        .samples()
        .iter()
        .flat_map(|s| s.delta.iter().zip(&eq.delta).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    r.check(
        "AC7a",
        "equilibrium stays put over 10 s",
        drift < 1e-9,
        format!("max angle drift {drift:.2e} rad (< 1e-9)"),
    );

    // Small-signal oscillation frequency against the linearization.
    let (machines, net) = two_machine(0.5, 0.0);
    let eq = find_equilibrium(&machines, &net.net, &[0.0, 0.0], 0).unwrap();
    let d12 = eq.delta[0] - eq.delta[1];
    let ks12 = 5.0 * d12.cos();
    let (m1, m2) = (machines.inertia()[0], machines.inertia()[1]);
    let f_analytic = (ks12 * (1.0 / m1 + 1.0 / m2)).sqrt() / (2.0 * PI);
    let init = RotorSnapshot::new(0.0, vec![eq.delta[0] + 1e-3, eq.delta[1]]);
    let cfg = SimConfig {
        t_end: 10.0,
        h: 0.001,
        sample_every: 1,
        ..SimConfig::default()
    };
    let out = simulate(&machines, &net, &[], &cfg, &init).unwrap();
    let x: Vec<(f64, f64)> = out
        .trajectory
        .samples()
        .iter()
        .map(|s| (s.t, s.delta[0] - s.delta[1] - d12))
        .collect();
    let crossings: Vec<f64> = x
        .windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum() && w[1].1 != 0.0)
        .map(|w| w[0].0 + (w[1].0 - w[0].0) * w[0].1 / (w[0].1 - w[1].1))
        .collect();
    let periods = (crossings.len() - 1) as f64 / 2.0;
    let f_sim = periods / (crossings.last().unwrap() - crossings[0]);
    let rel = (f_sim - f_analytic).abs() / f_analytic;
    r.check(
        "AC7b",
        "two-machine small-signal frequency",
        rel < 0.02,
        format!(
            "{f_sim:.4} Hz vs analytic {f_analytic:.4} Hz, rel err {:.3}% (< 2%)",
            rel * 100.0
        ),
    );

    // Energy drift of a lossless, undamped swing as the step is halved.
    let (machines, net) = two_machine(0.5, 0.0);
    let init = RotorSnapshot::new(0.0, eq.delta.clone()).with_speed(vec![2.0, 0.0]);
    let run = |h: f64| {
        let cfg = SimConfig {
            t_end: 10.0,
            h,
            sample_every: 1,
            ..SimConfig::default()
        };
        simulate(&machines, &net, &[], &cfg, &init)
            .unwrap()
            .trajectory
    };
    let energy_drift = |t: &Trajectory| {
        let e: Vec<f64> = t
            .samples()
            .iter()
            .map(|s| transient_energy(&machines, &net.net, &s.delta, s.speed.as_deref().unwrap()))
            .collect();
        e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max)
    };
    let (coarse, fine, finest) = (run(0.01), run(0.005), run(0.000625));
    let ratio = energy_drift(&coarse) / energy_drift(&fine);
    r.check(
        "AC7c",
        "energy drift shrinks ~16x when h halves",
        (12.0..=20.0).contains(&ratio),
        format!(
            "ratio {ratio:.1} (pinned [12, 20]); energy error of RK4 on this conservative \
             system scales as h^5, so 32x is the expected value"
        ),
    );
    let end_err = |t: &Trajectory| {
        let (a, b) = (
            t.samples().last().unwrap(),
            finest.samples().last().unwrap(),
        );
        a.delta
            .iter()
            .zip(&b.delta)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let order_ratio = end_err(&coarse) / end_err(&fine);
    r.check(
        "AC7d",
        "trajectory error shrinks ~16x when h halves (fourth order)",
        (12.0..=20.0).contains(&order_ratio),
        format!("ratio {order_ratio:.1} (pinned [12, 20])"),
    );
}

fn ac8(r: &mut Report) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo.json");
    let scenario = Scenario::load(path).unwrap();
    let out = scenario.run().unwrap();
    let series = indices_series(
        &out.trajectory,
        &scenario.machines,
        &out.schedule,
        &SeriesOptions::default(),
    )
    .unwrap();
    let t_last = series.last().unwrap().indices.t;
    let tail: Vec<_> = series
        .iter()
        .map(|a| a.indices)
        .filter(|ix| ix.t >= t_last - 5.0 - 1e-9)
        .collect();
    let spread = |f: fn(&gridcoh::indices::IntegrityIndices) -> f64| {
        let v: Vec<f64> = tail.iter().map(f).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
        var.sqrt() / mean.abs()
    };
    let (a, b, c) = (spread(|x| x.gci), spread(|x| x.gsi), spread(|x| x.si));
    r.check(
        "AC8",
        "demo scenario indices settle",
        a < 0.01 && b < 0.01 && c < 0.01,
        format!(
            "std/mean over the last 5 s: GCI {a:.1e}, GSI {b:.1e}, SI {c:.1e} (< 1e-2); {} samples",
            out.trajectory.len()
        ),
    );
}

fn ac9(r: &mut Report) {
    let (labels, ks) = fixture("ks19_reference.csv");
    let n = labels.len();
    let machines = MachineSet::uniform(labels.clone()).unwrap();
    let schedule = NetworkSchedule::constant("reference", ReducedNetwork::lossless(ks));
    let mut rng = StdRng::seed_from_u64(0x5eed_0009);
    let phase: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let freq: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let samples = (0..3000)
        .map(|k| {
            let t = k as f64 * 0.01;
            let d = (0..n)
                .map(|i| 0.3 * (2.0 * PI * freq[i] * t + phase[i]).sin())
                .collect();
            RotorSnapshot::new(t, d)
        })
        .collect();
    let traj = Trajectory::new(labels, samples).unwrap();
    let start = Instant::now();
    let series = indices_series(&traj, &machines, &schedule, &SeriesOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    r.check(
        "AC9",
        "19-generator, 3000-snapshot KS analysis, single thread",
        series.len() == 3000 && secs < 5.0,
        format!("{} snapshots in {secs:.3} s (< 5 s)", series.len()),
    );
}

fn main() {
    let mut r = Report {
        failed: BTreeSet::new(),
    };
    ac1_to_ac3(&mut r);
    ac4(&mut r);
    ac5(&mut r);
    ac6(&mut r);
    ac7(&mut r);
    ac8(&mut r);
    ac9(&mut r);

    let documented: BTreeSet<&str> = DOCUMENTED_DEVIATIONS.iter().copied().collect();
    let unexpected: Vec<_> = r.failed.difference(&documented).collect();
    let resolved: Vec<_> = documented.difference(&r.failed).collect();
    println!(
        "\n{} criteria failed ({} documented deviation(s): {:?})",
        r.failed.len(),
        documented.len(),
        DOCUMENTED_DEVIATIONS
    );
    if !unexpected.is_empty() || !resolved.is_empty() {
        eprintln!(
            "unexpected failures {unexpected:?}; documented deviations now passing {resolved:?}"
        );
        std::process::exit(1);
    }
}
