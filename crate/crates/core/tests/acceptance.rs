//! Acceptance suite: one verdict line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p cutoff-core --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use cutoff_core::equilibrium::{delta, delta_dx, experimentation_rate};
use cutoff_core::gaussian::{event_probability, expected_posterior, signal_cdf};
use cutoff_core::policy::{
    bonus_for_target, bonus_response, epsilon_floor, gatekeeping_sweep, PolicyError,
};
use cutoff_core::simulate::{analytic_hit_rate, run_sim, SimConfig};
use cutoff_core::statics::{
    check_rd, conservatism_scan, numeric_derivative, Conservatism, Param, StaticsError,
    DEFAULT_STEP, SIGN_SLACK,
};
use cutoff_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODE: PayoffMode = PayoffMode::Faithful;

enum Verdict {
    Pass,
    Fail,
    Vacuous,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Self {
        Outcome {
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            detail,
            notes: Vec::new(),
        }
    }

    fn note(mut self, s: String) -> Self {
        self.notes.push(s);
        self
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn rho_grid() -> Vec<f64> {
    (1..10).map(|i| i as f64 / 10.0).collect()
}

fn single_crossing() -> Outcome {
    const POINTS: usize = 2001;
    let rhos: Vec<f64> = (0..50).map(|i| (i as f64 + 0.5) / 50.0).collect();
    let (mut cases, mut skipped, mut not_increasing, mut multi_cross) = (0, 0, 0, 0);
    let mut explained = 0;
    let (mut deriv_checked, mut deriv_bad, mut worst) = (0usize, 0usize, 0.0f64);
    for p in instances(1, 100) {
        let (m0, m1) = p.signal_means();
        let (lo, hi) = (m0 - 4.0 * p.sigma_l, m1 + 4.0 * p.sigma_l);
        let h = 1e-3 * p.sigma_l;
        for &r in &rhos {
            let rho = rep(r);
            let post = posteriors_of_cutoff(Cutoff::Interior(p.signal_midpoint()), rho, &p);
            if cutoff_core::equilibrium::slope_coefficient(&post, &p) <= 0.0 {
                skipped += 1;
                continue;
            }
            cases += 1;
            let xs: Vec<f64> = (0..POINTS)
                .map(|i| lo + (hi - lo) * i as f64 / (POINTS - 1) as f64)
                .collect();
            let d: Vec<f64> = xs.iter().map(|&x| delta(x, rho, &post, &p, MODE)).collect();
            if d.windows(2).any(|w| w[1] <= w[0]) {
                not_increasing += 1;
                let ps: Vec<f64> = xs.iter().map(|&x| success_prob(x, rho, &p)).collect();
                let dips = |v: &[f64]| -> Vec<usize> {
                    (1..v.len()).filter(|&i| v[i] <= v[i - 1]).collect()
                };
                explained += usize::from(dips(&d) == dips(&ps));
            }
            let changes = d
                .windows(2)
                .filter(|w| (w[0] < 0.0) != (w[1] < 0.0))
                .count();
            if changes > 1 {
                multi_cross += 1;
            }
            for &x in xs.iter().step_by(40) {
                let px = success_prob(x, rho, &p);
                if !(1e-4..=1.0 - 1e-4).contains(&px) {
                    continue;
                }
                let f = |t: f64| delta(t, rho, &post, &p, MODE);
                let numeric = (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h))
                    / (12.0 * h);
                let analytic = delta_dx(x, rho, &post, &p);
                let rel =
                    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-300);
                deriv_checked += 1;
                worst = worst.max(rel);
                if rel > 1e-6 {
                    deriv_bad += 1;
                }
            }
        }
    }
    let ok = not_increasing == 0 && multi_cross == 0 && deriv_bad == 0;
    let out = Outcome::check(
        ok,
        format!(
            "{cases} (instance, rho) pairs with positive slope coefficient ({skipped} skipped): \
             {not_increasing} not strictly increasing, {multi_cross} with >1 sign change; \
             d/dx {deriv_bad}/{deriv_checked} beyond 1e-6 relative (worst {worst:.2e})"
        ),
    );
    if not_increasing > 0 {
        out.note(format!(
            "{explained}/{not_increasing} non-increasing cases fall exactly where the success \
             probability p(x) itself decreases"
        ))
    } else {
        out
    }
}

fn boundary_limits() -> Outcome {
    let (mut n, mut low_bad, mut high_bad, mut corrected_bad) = (0, 0, 0, 0);
    let (mut worst_low, mut worst_corrected) = (0.0f64, 0.0f64);
    let mut unsaturated = 0;
    for p in instances(2, 100) {
        for r in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let rho = rep(r);
            let post = posteriors_of_cutoff(Cutoff::Interior(p.signal_midpoint()), rho, &p);
            let lam = p.lambda_at(r);
            let w_safe = p.payoff(post.r_safe);
            let low = delta(-60.0, rho, &post, &p, MODE);
            let high = delta(60.0, rho, &post, &p, MODE);
            let stated_low = -w_safe;
            let stated_high = lam * p.payoff(post.r_success) - w_safe + p.b * lam;
            let corrected_low = lam * p.payoff(post.r_failure) - w_safe;
            n += 1;
            let (p_lo, p_hi) = (success_prob(-60.0, rho, &p), success_prob(60.0, rho, &p));
            unsaturated += usize::from(p_lo > 1e-8 || p_hi < 1.0 - 1e-8);
            worst_low = worst_low.max((low - stated_low).abs());
            worst_corrected = worst_corrected.max((low - corrected_low).abs());
            low_bad += usize::from((low - stated_low).abs() > 1e-8);
            corrected_bad += usize::from((low - corrected_low).abs() > 1e-8);
            high_bad += usize::from((high - stated_high).abs() > 1e-8);
        }
    }
    Outcome::check(
        low_bad == 0 && high_bad == 0,
        format!(
            "{n} cases: x=-60 vs -W(r_safe) off in {low_bad} (worst {worst_low:.2e}); \
             x=+60 vs lambda W(r_success) - W(r_safe) + b lambda off in {high_bad}"
        ),
    )
    .note(format!(
        "x=-60 vs lambda W(r_failure) - W(r_safe): off in {corrected_bad}/{n} (worst {worst_corrected:.2e})"
    ))
    .note(format!("p(x) is not within 1e-8 of 0 and 1 at x=-60 and x=+60 in {unsaturated}/{n} cases"))
}

fn self_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut solved, mut errors, mut br_bad, mut mart_bad) = (0, Vec::new(), 0, 0);
    let (mut worst_br, mut worst_mart) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let p = random_primitives(&mut rng);
        let r = rng.random_range(0.02..0.98);
        let rho = rep(r);
        match solve_equilibrium(rho, &p, MODE) {
            Ok(eq) => {
                solved += 1;
                match best_response_cutoff(rho, &eq.posteriors, &p, MODE) {
                    Ok(br) => {
                        let gap = match (br, eq.cutoff) {
                            (Cutoff::Interior(a), Cutoff::Interior(b)) => (a - b).abs(),
                            (a, b) if a == b => 0.0,
                            _ => f64::INFINITY,
                        };
                        worst_br = worst_br.max(gap);
                        br_bad += usize::from(gap > 1e-8);
                    }
                    Err(e) => errors.push(format!("rho={r:.3}: {e}")),
                }
                let m = (expected_posterior(eq.cutoff, rho, &p) - r).abs();
                worst_mart = worst_mart.max(m);
                mart_bad += usize::from(m > 1e-10);
            }
            Err(e) => errors.push(format!("rho={r:.3}: {e}")),
        }
    }
    let mut out = Outcome::check(
        errors.is_empty() && br_bad == 0 && mart_bad == 0,
        format!(
            "{solved}/200 solved; best response off by >1e-8 in {br_bad} (worst {worst_br:.2e}); \
             martingale off by >1e-10 in {mart_bad} (worst {worst_mart:.2e}); {} errors",
            errors.len()
        ),
    );
    for e in errors.iter().take(3) {
        out = out.note(e.clone());
    }
    out
}

fn comparative_statics() -> Outcome {
    let grid = rho_grid();
    let (mut interior, mut not_interior, mut boundary_hits, mut other_errors) = (0, 0, 0, 0);
    let (mut sign_bad, mut kappa_checked, mut kappa_bad, mut kappa_unverified) =
        (Vec::new(), 0, 0, 0);
    for p in instances(4, 100) {
        let rd = check_rd(&grid, &p, MODE).ok();
        for (idx, r) in [(1, 0.2), (4, 0.5), (7, 0.8)] {
            let rho = rep(r);
            let Ok(eq) = solve_equilibrium(rho, &p, MODE) else {
                other_errors += 1;
                continue;
            };
            if eq.cutoff.interior().is_none() {
                not_interior += 1;
                continue;
            }
            interior += 1;
            for param in [Param::B, Param::Pi, Param::Theta] {
                match numeric_derivative(param, rho, &p, MODE, DEFAULT_STEP) {
                    Ok(d) if d > SIGN_SLACK => {
                        let a =
                            cutoff_core::statics::analytic_derivative(param, rho, &eq, &p, MODE);
                        let a = a.map_or_else(|e| e.to_string(), |a| format!("{a:.3e}"));
                        sign_bad.push(format!(
                            "dc/d{param} = {d:.3e} (analytic {a}) at rho={r}, c={}",
                            eq.cutoff
                        ));
                    }
                    Ok(_) => {}
                    Err(StaticsError::BoundaryHit { .. }) => boundary_hits += 1,
                    Err(_) => other_errors += 1,
                }
            }
            if rd.as_ref().is_some_and(|rd| rd.verified(idx)) {
                match numeric_derivative(Param::Kappa, rho, &p, MODE, DEFAULT_STEP) {
                    Ok(d) => {
                        kappa_checked += 1;
                        kappa_bad += usize::from(d < -SIGN_SLACK);
                    }
                    Err(StaticsError::BoundaryHit { .. }) => boundary_hits += 1,
                    Err(_) => other_errors += 1,
                }
            } else {
                kappa_unverified += 1;
            }
        }
    }
    let mut out = Outcome::check(
        sign_bad.is_empty() && kappa_bad == 0 && other_errors == 0,
        format!(
            "{interior} interior equilibria ({not_interior} boundary skipped, {boundary_hits} \
             perturbations hit a boundary): {} b/pi/theta sign violations; kappa checked on \
             {kappa_checked} RD-verified cases ({kappa_unverified} not RD-verified), {kappa_bad} \
             violations; {other_errors} errors",
            sign_bad.len()
        ),
    );
    for s in sign_bad.iter().take(3) {
        out = out.note(s.clone());
    }
    out
}

fn conservatism() -> Outcome {
    let grid = rho_grid();
    let describe = |b: f64| -> Result<(Conservatism<f64>, String), String> {
        let p = Primitives { b, ..reference() };
        let scan = conservatism_scan(&grid, &p, MODE).map_err(|e| e.to_string())?;
        let cutoffs: Vec<String> = scan.rows.iter().map(|r| r.cutoff.to_string()).collect();
        let verified = scan.rows.iter().filter(|r| r.rd_verified).count();
        Ok((
            scan.verdict,
            format!(
                "b={b}: {verified}/9 RD-verified, cutoffs [{}]",
                cutoffs.join(", ")
            ),
        ))
    };
    let mut out = match describe(0.0) {
        Ok((Conservatism::Holds { from_rho }, s)) => Outcome::check(
            true,
            format!("reference: nondecreasing from rho={from_rho}; {s}"),
        ),
        Ok((Conservatism::Violated { rho_lo, rho_hi }, s)) => Outcome::check(
            false,
            format!("reference: decrease between {rho_lo} and {rho_hi}; {s}"),
        ),
        Ok((Conservatism::Vacuous, s)) => Outcome {
            verdict: Verdict::Vacuous,
            detail: format!("reference: no RD-verified sub-grid; {s}"),
            notes: Vec::new(),
        },
        Err(e) => Outcome::check(false, format!("reference: {e}")),
    };
    for b in [0.5, 1.0] {
        out = out.note(match describe(b) {
            Ok((v, s)) => format!("{s}; verdict {v:?}"),
            Err(e) => format!("b={b}: {e}"),
        });
    }
    out
}

fn calibration() -> Outcome {
    let p = reference();
    let (mut attempted, mut recovered, mut failures) = (0, 0, Vec::new());
    let mut map_bad = Vec::new();
    let b_grid: Vec<f64> = (0..50)
        .map(|i| 0.06 + (3.0 - 0.06) * i as f64 / 49.0)
        .collect();
    for r in [0.3, 0.6, 0.9] {
        let rho = rep(r);
        let floor = match epsilon_floor(rho, &p, MODE) {
            Ok(f) => f,
            Err(e) => {
                failures.push(format!("rho={r}: floor: {e}"));
                continue;
            }
        };
        let mut target = floor + 0.05;
        while target <= 0.95 + 1e-12 {
            attempted += 1;
            match bonus_for_target(target, rho, &p, MODE) {
                Ok(res) if res.roundtrip_gap <= 1e-6 => recovered += 1,
                Ok(res) => failures.push(format!(
                    "rho={r} target={target:.3}: gap {:.2e}",
                    res.roundtrip_gap
                )),
                Err(PolicyError::RoundtripFailure {
                    bonus, achieved, ..
                }) => failures.push(format!(
                    "rho={r} target={target:.3}: bonus {bonus:.4} yields eps {achieved:.4}"
                )),
                Err(PolicyError::TargetBelowFloor { bonus, .. }) => failures.push(format!(
                    "rho={r} target={target:.3}: implied bonus {bonus:.4} is negative"
                )),
                Err(e) => failures.push(format!("rho={r} target={target:.3}: {e}")),
            }
            target += 0.05;
        }
        let eps = bonus_response(&b_grid, rho, &p, MODE);
        let mut prev: Option<f64> = None;
        for (b, e) in b_grid.iter().zip(eps) {
            match e {
                Ok(e) => {
                    if prev.is_some_and(|q| e <= q) {
                        map_bad.push(format!(
                            "rho={r}: eps not increasing at b={b:.3} (eps {e:.6})"
                        ));
                    }
                    prev = Some(e);
                }
                Err(err) => map_bad.push(format!("rho={r} b={b:.3}: {err}")),
            }
        }
    }
    let mut out = Outcome::check(
        failures.is_empty() && map_bad.is_empty(),
        format!(
            "roundtrip {recovered}/{attempted} targets within 1e-6; b->eps map: {} violations \
             on 3 x 50-point grids",
            map_bad.len()
        ),
    );
    for s in failures.iter().take(4).chain(map_bad.iter().take(4)) {
        out = out.note(s.clone());
    }
    out
}

fn gatekeeping() -> Outcome {
    let p = Primitives {
        b: 0.5,
        ..reference()
    };
    let t_grid: Vec<f64> = (0..=8).map(|i| 0.25 * i as f64).collect();
    let mut bad = Vec::new();
    for r in rho_grid() {
        match gatekeeping_sweep(&t_grid, rep(r), &p, MODE) {
            Ok(rows) => {
                for w in rows.windows(2) {
                    if w[1].cutoff.value() < w[0].cutoff.value() - SIGN_SLACK
                        || w[1].eps > w[0].eps + SIGN_SLACK
                    {
                        bad.push(format!("rho={r}: T {} -> {}", w[0].t, w[1].t));
                    }
                }
            }
            Err(e) => bad.push(format!("rho={r}: {e}")),
        }
    }
    let mut out = Outcome::check(
        bad.is_empty(),
        format!("9 rho x 9 T values: {} violations", bad.len()),
    );
    for s in bad.iter().take(3) {
        out = out.note(s.clone());
    }
    out
}

fn within(emp: f64, analytic: f64, se: f64) -> bool {
    if se == 0.0 {
        emp == analytic
    } else {
        (emp - analytic).abs() <= 4.0 * se
    }
}

fn monte_carlo() -> Outcome {
    const N: usize = 200_000;
    let cells = [(0.5, vec![0.6]), (1.0, vec![0.3, 0.6, 0.9])];
    let (mut checks, mut bad) = (0, Vec::new());
    let mut deterministic = true;
    for (b, rhos) in cells {
        let p = Primitives { b, ..reference() };
        let cfg = SimConfig {
            n_experts: N,
            rho_values: rhos,
            seed: 20_240_917,
            primitives: p,
            mode: MODE,
        };
        let out = match run_sim(&cfg) {
            Ok(o) => o,
            Err(e) => {
                bad.push(format!("b={b}: {e}"));
                continue;
            }
        };
        deterministic &= run_sim(&cfg).as_ref() == Ok(&out);
        for cell in &out.cells {
            let rho = rep(cell.rho);
            let n = N as f64;
            let post = posteriors_of_cutoff(cell.cutoff, rho, &p);
            let mut record = |what: &str, emp: f64, analytic: f64, se: f64| {
                checks += 1;
                if !within(emp, analytic, se) {
                    bad.push(format!(
                        "b={b} rho={}: {what} {emp:.5} vs {analytic:.5} (se {se:.1e})",
                        cell.rho
                    ));
                }
            };
            let eps = experimentation_rate(cell.cutoff, rho, &p);
            record("eps", cell.emp_eps, eps, (eps * (1.0 - eps) / n).sqrt());
            let mut spread = 0.0;
            for e in PublicEvent::ALL {
                let pr = event_probability(e, cell.cutoff, rho, &p);
                spread += pr * (post.get(e) - cell.rho).powi(2);
                record(
                    e.name(),
                    cell.tally.count(e) as f64 / n,
                    pr,
                    (pr * (1.0 - pr) / n).sqrt(),
                );
            }
            let hit = analytic_hit_rate(cell.cutoff, rho, &p);
            let m = cell.tally.n_implemented;
            if m > 0 {
                record(
                    "hit rate",
                    cell.emp_hit_rate,
                    hit,
                    (hit * (1.0 - hit) / m as f64).sqrt(),
                );
            }
            record(
                "mean posterior",
                cell.mean_posterior,
                cell.rho,
                (spread / n).sqrt(),
            );
        }
    }
    let mut out = Outcome::check(
        bad.is_empty() && deterministic,
        format!(
            "{checks} statistics in 5 cells of {N}: {} outside 4 se; repeated seeds {}",
            bad.len(),
            if deterministic {
                "bit-identical"
            } else {
                "DIFFER"
            }
        ),
    );
    for s in bad.iter().take(4) {
        out = out.note(s.clone());
    }
    out
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut checks, mut bad, mut worst) = (0, 0, 0.0f64);
    for _ in 0..50 {
        let p = random_primitives(&mut rng);
        let r = rng.random_range(0.02..0.98);
        let (m0, m1) = p.signal_means();
        let c = rng.random_range(m0 - 2.0 * p.sigma_l..m1 + 2.0 * p.sigma_l);
        let rho = rep(r);
        let mut cmp = |a: f64, b: f64| {
            checks += 1;
            worst = worst.max((a - b).abs());
            bad += usize::from((a - b).abs() > 1e-8);
        };
        cmp(signal_cdf(c, rho, &p), oracle_fx(c, r, &p));
        for a in Ability::BOTH {
            let oracle = oracle_likelihoods(c, r, a.sigma(&p), &p);
            for (i, &e) in PublicEvent::ALL.iter().enumerate() {
                cmp(
                    event_likelihood(e, Cutoff::Interior(c), rho, a, &p),
                    oracle[i],
                );
            }
        }
        let post = posteriors_of_cutoff(Cutoff::Interior(c), rho, &p);
        let oracle = oracle_posteriors(c, r, &p);
        for (i, &e) in PublicEvent::ALL.iter().enumerate() {
            cmp(post.get(e), oracle[i]);
        }
    }
    Outcome::check(
        bad == 0,
        format!("{checks} comparisons on 50 instances: {bad} beyond 1e-8 (worst {worst:.2e})"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("single crossing", single_crossing),
        ("boundary limits", boundary_limits),
        ("equilibrium self-consistency", self_consistency),
        ("comparative statics signs", comparative_statics),
        ("reputational conservatism", conservatism),
        ("calibration roundtrip", calibration),
        ("gatekeeping", gatekeeping),
        ("Monte Carlo agreement", monte_carlo),
        ("oracle equivalence", oracle_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let tag = match out.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Vacuous => "VACUOUS",
        };
        println!(
            "criterion {} {name}: {tag} ({:.1}s) - {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            out.detail
        );
        for n in out.notes {
            println!("    {n}");
        }
    }
    println!("acceptance: {} of 9 criteria failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
