//! Acceptance criteria 1-10, one PASS/FAIL line each. Exits nonzero if any fail.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use common::*;
use fermi_kinetics::bosonization::counting::{counting_n, gauss_circle};
use fermi_kinetics::bosonization::oracle::b_brute;
use fermi_kinetics::bosonization::{alpha, alpha_propagator_oracle, anchored, Kind, PairPlan};
use fermi_kinetics::collision::oracle::q_brute;
use fermi_kinetics::collision::CollisionPlan;
use fermi_kinetics::distribution::{Distribution, SparseField};
use fermi_kinetics::evolution::{sweep, SweepSpec};
use fermi_kinetics::fit::{log_grid, loglog_slope, windowed_sup};
use fermi_kinetics::lattice::{Momentum, Normalization};
use fermi_kinetics::model::{Energy, Model};
use fermi_kinetics::mollifier::{delta_t, double_time_integral, sharp_limit_error, KroneckerConvention};
use fermi_kinetics::states::{generate_slater, GeneratorOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn conservation() -> Outcome {
    let m = model(10.0, 1, Normalization::Ledger);
    let ctx = m.ctx.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut nontrivial = 0;
    for _ in 0..50 {
        let size = rng.gen_range(2..=10);
        let f = clustered(&mut rng, 10.0, size, 2);
        let t = rng.gen_range(0.5..200.0);
        let lambda = rng.gen_range(0.0..1e-3);
        m.check_small_coupling(lambda).unwrap();
        let qp = CollisionPlan::new(&m, &f, lambda).unwrap();
        let qt = qp.mollified(t).unwrap();
        let (qs, _) = qp.sharp();
        let b = PairPlan::new(&m, &f, lambda).unwrap().mollified(t).unwrap();
        if qt.abs_sum() > 0.0 && qs.abs_sum() > 0.0 && b.total.abs_sum() > 0.0 {
            nontrivial += 1;
        }
        let mut r = vec![residual(&qt, |_| 1.0), residual(&b.hole, |_| 1.0), residual(&b.particle, |_| 1.0)];
        for i in 0..3 {
            r.push(residual(&qt, |p| sign(&ctx, p) * p.0[i] as f64));
        }
        r.push(residual(&qs, |p| sign(&ctx, p) * p.norm2() as f64));
        worst = r.into_iter().fold(worst, f64::max);
    }
    outcome(
        worst <= 1e-10 && nontrivial >= 40,
        format!("max relative residual {worst:.2e} (limit 1e-10), {nontrivial}/50 distributions with all operators nonzero"),
    )
}

fn eval_points(fields: &[&SparseField], f: &Distribution, rng: &mut impl Rng) -> Vec<Momentum> {
    let mut pts: Vec<Momentum> = fields.iter().flat_map(|q| q.keys().copied()).collect();
    let anchor = *f.support().next().unwrap();
    for _ in 0..5 {
        pts.push(anchor + Momentum::new(rng.gen_range(-4..=4), rng.gen_range(-4..=4), rng.gen_range(-4..=4)));
    }
    pts.sort();
    pts.dedup();
    pts
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut points, mut cases, mut serial_mismatch) = (0usize, 0usize, 0usize);
    let mut parallel_worst: f64 = 0.0;
    let mut check = |serial: f64, parallel: f64, oracle: f64| {
        points += 1;
        if serial != oracle {
            serial_mismatch += 1;
        }
        parallel_worst = parallel_worst.max(rel_diff(parallel, oracle));
    };
    let setups = [(4.0, 1, false), (5.0, 1, false), (6.0, 1, false), (5.0, 2, true), (6.0, 2, true)];
    for &(p_f, r, sampled) in &setups {
        for _ in 0..3 {
            cases += 1;
            let serial = model(p_f, r, Normalization::Ledger);
            let parallel = serial.clone().with_parallel(true);
            let size = rng.gen_range(2..=6);
            let f = clustered(&mut rng, p_f, size, if r == 1 { 2 } else { 1 });
            let t = rng.gen_range(0.5..50.0);
            let lambda = rng.gen_range(0.0..1e-3);
            let energies = [Energy::Mollified { t, lambda }, Energy::Sharp];
            let lam = |e: Energy| if let Energy::Mollified { lambda, .. } = e { lambda } else { 0.0 };

            let q_s: Vec<SparseField> = energies.iter().map(|&e| CollisionPlan::new(&serial, &f, lam(e)).unwrap().evaluate(e).unwrap()).collect();
            let q_p: Vec<SparseField> = energies.iter().map(|&e| CollisionPlan::new(&parallel, &f, lam(e)).unwrap().evaluate(e).unwrap()).collect();
            let mut pts = eval_points(&[&q_s[0], &q_s[1]], &f, &mut rng);
            if sampled {
                let keep = pts.len().min(40);
                pts = (0..keep).map(|_| pts[rng.gen_range(0..pts.len())]).collect();
            }
            for (i, &e) in energies.iter().enumerate() {
                for p in &pts {
                    check(q_s[i].get(p), q_p[i].get(p), q_brute(&serial, &f, e, p).unwrap());
                }
            }

            let b_s: Vec<SparseField> = energies.iter().map(|&e| PairPlan::new(&serial, &f, lam(e)).unwrap().evaluate(e).unwrap().total).collect();
            let b_p: Vec<SparseField> = energies.iter().map(|&e| PairPlan::new(&parallel, &f, lam(e)).unwrap().evaluate(e).unwrap().total).collect();
            let pts = eval_points(&[&b_s[0], &b_s[1]], &f, &mut rng);
            for (i, &e) in energies.iter().enumerate() {
                for p in &pts {
                    check(b_s[i].get(p), b_p[i].get(p), b_brute(&serial, &f, e, p).unwrap());
                }
            }
        }
    }
    outcome(
        serial_mismatch == 0 && parallel_worst <= 1e-12,
        format!(
            "{cases} distributions, {points} point evaluations of Q_t, 𝒬, B_t, ℬ: {serial_mismatch} serial mismatches (need 0), parallel max rel diff {parallel_worst:.1e} (limit 1e-12)"
        ),
    )
}

fn mollifier() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let w = rng.gen_range(-30.0..30.0);
        let t = rng.gen_range(0.01..500.0);
        worst = worst.max(rel_diff(double_time_integral(w, t), 2.0 * PI * t * delta_t(t, w).unwrap()));
    }
    let ts = log_grid(10.0, 1e4, 13);
    let mut slopes = Vec::new();
    let mut raw = Vec::new();
    let mut c_max: f64 = 0.0;
    for x in [1i64, 2, 3] {
        let dev = |t: f64| sharp_limit_error(x, 0.0, 0.0, t, KroneckerConvention::Consistent).unwrap().deviation;
        let env: Vec<f64> = ts.iter().map(|&t| windowed_sup(t, 2.0 * PI, 400, dev)).collect();
        slopes.push(loglog_slope(&ts, &env).unwrap());
        raw.push(loglog_slope(&ts, &ts.iter().map(|&t| dev(t)).collect::<Vec<_>>()).unwrap());
        for &t in &ts {
            let s = sharp_limit_error(x, 0.0, 0.0, t, KroneckerConvention::Consistent).unwrap();
            c_max = c_max.max(s.ratio().unwrap());
        }
    }
    let pass = worst <= 1e-12 && c_max.is_finite() && slopes.iter().all(|s| (s + 1.0).abs() <= 0.1);
    outcome(
        pass,
        format!(
            "identity max rel err {worst:.1e} (limit 1e-12); fitted C = {c_max:.3}; envelope slopes x=1,2,3: {:.3}, {:.3}, {:.3} (need -1 ± 0.1; pointwise slopes {:.3}, {:.3}, {:.3})",
            slopes[0], slopes[1], slopes[2], raw[0], raw[1], raw[2]
        ),
    )
}

fn propagator() -> Outcome {
    let m = model(8.0, 2, Normalization::Ledger);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ks: Vec<Momentum> = m.pot.support().copied().collect();
    let (mut found, mut worst) = (0, 0.0_f64);
    while found < 20 {
        let radius = rng.gen_range(5.0..11.0);
        let q = on_sphere(&mut rng, radius);
        let k = ks[rng.gen_range(0..ks.len())];
        let kind = if rng.gen_bool(0.5) { Kind::H } else { Kind::P };
        if !anchored(&m, kind, &q, &k) {
            continue;
        }
        let t = rng.gen_range(0.5..50.0);
        let lambda = rng.gen_range(0.0..1e-3);
        let a = alpha(&m, kind, &q, &k, t, lambda).unwrap();
        let o = alpha_propagator_oracle(&m, kind, &q, &k, t, lambda).unwrap();
        worst = worst.max(rel_diff(o, 2.0 * PI * t * a));
        found += 1;
    }
    outcome(worst <= 1e-10, format!("20 admissible (q, k, t) at p_F = 8: max rel diff {worst:.1e} (limit 1e-10)"))
}

fn counting() -> Outcome {
    let k = Momentum::new(0, 0, 1);
    let mut ratios = Vec::new();
    let mut text = Vec::new();
    for p_f in [50.0, 100.0, 200.0] {
        let m = raw(p_f, 1);
        let q3 = (p_f / 2.0_f64).ceil() as i64;
        let n = counting_n(&m.ctx, &Momentum::new(0, 0, q3), &k).unwrap();
        let ratio = n as f64 / (2.0 * PI * q3 as f64);
        ratios.push(ratio);
        text.push(format!("p_F={p_f}: N={n}, ratio {ratio:.4}"));
    }
    let inversions = ratios.windows(2).filter(|w| (w[1] - 1.0).abs() > (w[0] - 1.0).abs()).count();
    outcome(
        (0.85..=1.15).contains(&ratios[2]) && inversions <= 1,
        format!("{}; |ratio-1| inversions {inversions} (at most 1)", text.join("; ")),
    )
}

fn pair_scaling() -> Outcome {
    let build = |p_f: f64| Ok::<Model, fermi_kinetics::Error>(model(p_f, 2, Normalization::Ledger));
    let mut slopes = Vec::new();
    let mut loss_only = true;
    for seed in 0..8 {
        let spec = SweepSpec {
            p_fs: vec![20.0, 40.0, 80.0],
            n: 2,
            epsilon: 0.2,
            seed,
            band: 3,
            delta1: 0.1,
            delta2: 0.05,
            big_t: 1.0,
            m: 6.0,
            c: 1.0,
        };
        let res = sweep(&spec, build).unwrap();
        slopes.push(res.b_slope.unwrap());
        loss_only &= res.reports.iter().all(|r| r.b_gain_on_support == 0.0);
        for &p_f in &spec.p_fs {
            let m = build(p_f).unwrap();
            let f = generate_slater(&m.ctx, 2, 0.2, seed, GeneratorOptions::default()).unwrap().distribution().unwrap();
            let b = PairPlan::new(&m, &f, 0.0).unwrap().sharp();
            for q in f.support() {
                loss_only &= b.gain.get(q) == 0.0 && b.loss.get(q) > 0.0 && b.total.get(q) == -b.loss.get(q);
            }
        }
    }
    let pass = loss_only && slopes.iter().all(|s| (0.23..=0.43).contains(s));
    let list = slopes.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join(", ");
    outcome(pass, format!("slopes of log ‖ℬ‖ off 𝒮 vs log N for seeds 0-7: {list} (need [0.23, 0.43]); loss-only on H ∪ P: {loss_only}"))
}

fn collision_bound() -> Outcome {
    let mut quotients = Vec::new();
    for p_f in [10.0, 20.0, 40.0] {
        let m = model(p_f, 1, Normalization::Ledger);
        for n in [1, 2, 4] {
            let f = plane_slater(&m.ctx, n);
            let (q, _) = CollisionPlan::new(&m, &f, 0.0).unwrap().sharp();
            quotients.push(q.sup_norm() / f.total());
        }
    }
    let max = quotients.iter().cloned().fold(0.0, f64::max);
    let min = quotients.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = max / min;
    outcome(
        min > 0.0 && ratio <= 10.0,
        format!("‖𝒬‖_∞/n over n ∈ {{1,2,4}}, p_F ∈ {{10,20,40}}: min {min:.4e}, max {max:.4e}, max/min {ratio:.3} (limit 10)"),
    )
}

fn sharp_limits() -> Outcome {
    let m = model(10.0, 1, Normalization::Ledger);
    let ts = log_grid(10.0, 1e3, 9);
    let window = 4.0 * PI;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut qs, mut bs, mut raw_q, mut raw_b) = (vec![], vec![], vec![], vec![]);
    for _ in 0..3 {
        let f = clustered(&mut rng, 10.0, 8, 2);
        let qp = CollisionPlan::new(&m, &f, 0.0).unwrap();
        let (q_sharp, _) = qp.sharp();
        let bp = PairPlan::new(&m, &f, 0.0).unwrap();
        let b_sharp = bp.sharp().total;
        let gq = |t: f64| qp.mollified(t).unwrap().sup_distance(&q_sharp, t) / t;
        let gb = |t: f64| bp.mollified(t).unwrap().total.sup_distance(&b_sharp, t) / t;
        let env = |g: &dyn Fn(f64) -> f64| ts.iter().map(|&t| windowed_sup(t, window, 64, g)).collect::<Vec<_>>();
        qs.push(loglog_slope(&ts, &env(&gq)).unwrap());
        bs.push(loglog_slope(&ts, &env(&gb)).unwrap());
        raw_q.push(loglog_slope(&ts, &ts.iter().map(|&t| gq(t)).collect::<Vec<_>>()).unwrap());
        raw_b.push(loglog_slope(&ts, &ts.iter().map(|&t| gb(t)).collect::<Vec<_>>()).unwrap());
    }
    let ok = |s: &f64| (s + 2.0).abs() <= 0.3;
    let fmt = |v: &[f64]| v.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join(", ");
    outcome(
        qs.iter().all(ok) && bs.iter().all(ok),
        format!(
            "envelope slopes of ‖X_t - tX‖_∞/t over t ∈ [10, 1e3]: Q {}; B {} (need -2 ± 0.3; pointwise Q {}; B {})",
            fmt(&qs),
            fmt(&bs),
            fmt(&raw_q),
            fmt(&raw_b)
        ),
    )
}

fn gauss() -> Outcome {
    let mut mismatches = 0;
    for r2 in 0..=2500i64 {
        let r = (r2 as f64).sqrt() as i64 + 1;
        let mut count = 0u64;
        for x in -r..=r {
            for y in -r..=r {
                if x * x + y * y <= r2 {
                    count += 1;
                }
            }
        }
        if gauss_circle(r2).unwrap().0 != count {
            mismatches += 1;
        }
    }
    let scaled = |r: i64| gauss_circle(r * r).unwrap().1.abs() / (r as f64).powf(0.67);
    let first = (1..=250).map(scaled).fold(0.0, f64::max);
    let second = (251..=500).map(scaled).fold(0.0, f64::max);
    outcome(
        mismatches == 0 && first.max(second) <= 3.0 && second <= first,
        format!(
            "{mismatches} count mismatches for r² ≤ 2500; sup |E(r)|/r^0.67 = {first:.3} on [1, 250], {second:.3} on (250, 500] (limit 3, no growth)"
        ),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_fermi-kinetics");
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, jobs: &str| {
        let status = Command::new(bin)
            .current_dir(dir.path())
            .args(["sweep", "--pf", "20,40,80", "--r", "2", "--jobs", jobs, "--out"])
            .arg(format!("{tag}.csv"))
            .arg("--report")
            .arg(format!("{tag}.json"))
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        let csv = std::fs::read(dir.path().join(format!("{tag}.csv"))).unwrap();
        let json = std::fs::read(dir.path().join(format!("{tag}.json"))).unwrap();
        (csv, json)
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "4");
    outcome(
        a == b,
        format!("two serial sweeps byte-identical: {}; four-worker sweep identical too: {}", a == b, a == c),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("conservation", conservation),
        ("oracle equivalence", oracle_equivalence),
        ("mollifier identity", mollifier),
        ("propagator cross-check", propagator),
        ("counting asymptotics", counting),
        ("pair operator scaling", pair_scaling),
        ("collision bound", collision_bound),
        ("sharp limits", sharp_limits),
        ("gauss circle", gauss),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {} [{:.1} s]",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
