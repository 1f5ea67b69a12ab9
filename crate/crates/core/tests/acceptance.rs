//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lpdiscrim::catalog::{self, amplitudes_from_square, TwoBellKind};
use lpdiscrim::engine::{eq5_formula, evaluate, evaluate_multicopy, evaluate_with, lp_baseline_formula, EvalOptions};
use lpdiscrim::protocol::{
    build_alpha_prime_protocol, build_parity_then_bell, groisman_protocol, pair_measurement, qubit_basis,
    two_copy_schedule, CommPlan, LocalMeasurement, Protocol, Schedule,
};
use lpdiscrim::search::{
    construct_multicopy_schedule, copy_bound, find_ictp_protocol, grid_search_lp, lpse_optimality_probe,
    DimensionProfile, SearchConfig,
};
use lpdiscrim::tensor::{apply_local_unitary, negativity, BipartitionSplit, Party, PureState};
use lpdiscrim::{Ensemble, ResourceSpec};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn lp_optimum() -> f64 {
    0.5 + 0.5 / 2f64.sqrt()
}

fn eq3_reproduction() -> Check {
    let threshold = (2.0 - 2f64.sqrt()) / (2.0 * 2f64.sqrt());
    let e = catalog::eq1().map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let a2 = 0.5 + 0.5 * (k as f64 + 0.5) / 20.0;
        let (a, b) = amplitudes_from_square(a2).map_err(|e| e.to_string())?;
        let p = groisman_protocol(ResourceSpec::nmes(a, b).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let ps = evaluate(&e, &p).map_err(|e| e.to_string())?.success_probability();
        let expected = 0.75 + a * b / 2.0;
        worst = worst.max((ps - expected).abs());
        ensure((ps - expected).abs() <= 1e-9, format!("a² = {a2}: {ps} vs {expected}"))?;
        ensure(
            (ps > lp_optimum()) == (a * b > threshold),
            format!("a² = {a2}: threshold relation broken (ab = {})", a * b),
        )?;
    }
    Ok(format!("20 points, max |Δ| = {worst:.2e}, threshold ab > {threshold:.5}"))
}

fn lp_baseline() -> Check {
    let config = SearchConfig::default().with_resolution(1e-3);
    let r = grid_search_lp(&catalog::eq1().unwrap(), 1, &config).map_err(|e| e.to_string())?;
    let gap = (r.success_probability - lp_optimum()).abs();
    ensure(gap <= 1e-3, format!("max {} vs {}", r.success_probability, lp_optimum()))?;
    Ok(format!("max {:.7} (target {:.7})", r.success_probability, lp_optimum()))
}

fn eq5_relations() -> Check {
    let theta = 0.3;
    let mut slack = f64::INFINITY;
    for i in 0..20 {
        for j in 0..20 {
            let alpha = (i + 1) as f64 * FRAC_PI_2 / 20.0;
            let alpha_prime = (j + 1) as f64 * FRAC_PI_2 / 20.0;
            let e = catalog::eq4(alpha, theta).unwrap();
            let ps = evaluate(&e, &build_alpha_prime_protocol(alpha_prime, theta).unwrap())
                .unwrap()
                .success_probability();
            let f = eq5_formula(alpha, alpha_prime);
            slack = slack.min(ps - f);
            ensure(ps >= f - 1e-9, format!("α = {alpha}, α′ = {alpha_prime}: {ps} < {f}"))?;
        }
    }
    let top = evaluate(&catalog::eq4(FRAC_PI_2, theta).unwrap(), &build_alpha_prime_protocol(FRAC_PI_2, theta).unwrap())
        .unwrap()
        .success_probability();
    ensure((top - 1.0).abs() <= 1e-9, format!("α = α′ = π/2 gives {top}"))?;
    let crossover = (PI / 12.0).cos().powi(2);
    ensure(
        (eq5_formula(FRAC_PI_3, FRAC_PI_2) - crossover).abs() <= 1e-12
            && (lp_baseline_formula(FRAC_PI_3) - crossover).abs() <= 1e-12,
        "crossover values differ",
    )?;
    Ok(format!("400 points, min (MAP − formula) = {slack:.3e}"))
}

fn theorem2() -> Check {
    let theta = 0.2;
    let config = SearchConfig::default().with_resolution(1e-3);
    let mut maxima = Vec::new();
    for alpha in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, FRAC_PI_2] {
        let e = catalog::eq4(alpha, theta).unwrap();
        let two = evaluate_multicopy(&e, &two_copy_schedule(alpha, theta).unwrap()).unwrap();
        ensure(
            (two.success_probability() - 1.0).abs() <= 1e-9,
            format!("α = {alpha}: two copies give {}", two.success_probability()),
        )?;
        let one = grid_search_lp(&e, 1, &config).map_err(|e| e.to_string())?;
        ensure(
            one.success_probability < 1.0 - 1e-3,
            format!("α = {alpha}: one copy reaches {}", one.success_probability),
        )?;
        maxima.push(format!("{:.6}", one.success_probability));
    }
    Ok(format!("two copies perfect; single-copy maxima {}", maxima.join(", ")))
}

fn theorem3() -> Check {
    let bell = catalog::bell().unwrap();
    let mut worst_gap = f64::NEG_INFINITY;
    for ab in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let resource = ResourceSpec::from_product(ab).map_err(|e| e.to_string())?;
        let protocol = build_parity_then_bell(resource).unwrap();
        for drop in 0..4 {
            let keep: Vec<usize> = (0..4).filter(|&k| k != drop).collect();
            let ps = evaluate(&bell.subset(&keep).unwrap(), &protocol).unwrap().success_probability();
            let expected = 2.0 / 3.0 + 2.0 / 3.0 * ab;
            ensure((ps - expected).abs() <= 1e-9, format!("ab = {ab}, triple {keep:?}: {ps}"))?;
        }
        let ps = evaluate(&bell, &protocol).unwrap().success_probability();
        ensure((ps - (0.5 + ab)).abs() <= 1e-9, format!("ab = {ab}, four states: {ps}"))?;
        for e in [bell.subset(&[0, 1, 2]).unwrap(), bell.clone()] {
            let probe = lpse_optimality_probe(&e, resource, &SearchConfig::default()).map_err(|e| e.to_string())?;
            worst_gap = worst_gap.max(probe.probe_max - probe.achieved);
            ensure(
                probe.probe_max <= probe.achieved + 1e-9,
                format!("ab = {ab}: probe found {} > {}", probe.probe_max, probe.achieved),
            )?;
        }
    }
    Ok(format!("formulas exact; max (probe − achieved) = {worst_gap:.2e}"))
}

fn theorem4() -> Check {
    let protocol = build_parity_then_bell(ResourceSpec::mes()).unwrap();
    let mut count = 0;
    for kind in TwoBellKind::ALL {
        for k in 0..10 {
            let t = 0.05 + k as f64 * 0.15;
            let e = catalog::two_bell(kind, t.cos(), t.sin()).map_err(|e| e.to_string())?;
            let ps = evaluate(&e, &protocol).unwrap().success_probability();
            ensure((ps - 1.0).abs() <= 1e-9, format!("{kind:?} at t = {t}: {ps}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} ensembles perfect"))
}

fn ictp() -> Check {
    let points = [(0.8, 0.9), (0.65, 0.75)];
    let config = SearchConfig::default();
    let mut count = 0;
    for (a2, c2) in points {
        let (a, b) = (f64::sqrt(a2), f64::sqrt(1.0 - a2));
        let (c, d) = (f64::sqrt(c2), f64::sqrt(1.0 - c2));
        let e = catalog::eq8(a, b, c, d, true).map_err(|e| e.to_string())?;
        for drop in 0..4 {
            let keep: Vec<usize> = (0..4).filter(|&k| k != drop).collect();
            let r = find_ictp_protocol(&e.subset(&keep).unwrap(), &config).map_err(|e| e.to_string())?;
            ensure(
                (r.success_probability - 1.0).abs() <= 1e-9,
                format!("a² = {a2}, c² = {c2}, triple {keep:?}: {}", r.success_probability),
            )?;
            ensure(
                r.protocol.cbits() == 1 && r.protocol.schedule().copies() == 1,
                "protocol is not one-cbit",
            )?;
            count += 1;
        }
    }
    let (a, b) = (0.8f64.sqrt(), 0.2f64.sqrt());
    let r = find_ictp_protocol(&catalog::eq8(a, b, a, b, false).unwrap(), &config).map_err(|e| e.to_string())?;
    ensure((r.success_probability - 1.0).abs() <= 1e-9, format!("c = a family: {}", r.success_probability))?;

    let bob = pair_measurement(Party::BOB, &lpdiscrim::protocol::bell_basis()).unwrap();
    let comm = CommPlan::one_cbit(
        Party::ALICE,
        Party::BOB,
        lpdiscrim::MessagePartition::Sign.message_map(),
        [bob.clone(), bob],
    )
    .unwrap();
    let two = Schedule::new(2)
        .unwrap()
        .with(0, lpdiscrim::protocol::bell_measurement(Party::ALICE).unwrap())
        .unwrap();
    ensure(
        Protocol::new(ResourceSpec::mes(), two, comm).is_err(),
        "a two-copy one-cbit protocol was accepted",
    )?;
    Ok(format!("{count} triples and the c = a quadruple perfect ({:?} map)", r.partition))
}

fn theorem5() -> Check {
    let bound = |d: &[usize]| copy_bound(&DimensionProfile::new(d.to_vec()).unwrap());
    ensure(
        bound(&[2, 2]) == 2 && bound(&[3, 3]) == 4 && bound(&[2, 2, 2]) == 3,
        "copy bound examples",
    )?;
    let own = vec![Party::ALICE, Party::BOB];
    let computational = Ensemble::uniform(
        (0..4)
            .map(|k| PureState::basis(vec![2, 2], &[k / 2, k % 2], own.clone()).unwrap())
            .collect(),
    )
    .unwrap();
    let cases = [
        ("eq1", catalog::eq1().unwrap(), Some(2)),
        ("eq4", catalog::eq4(1.1, 0.37).unwrap(), None),
        ("computational", computational, Some(1)),
        ("domino", catalog::domino_basis().unwrap(), None),
    ];
    let mut used = Vec::new();
    for (name, basis, exact) in cases {
        let s = construct_multicopy_schedule(&basis, &SearchConfig::default()).map_err(|e| format!("{name}: {e}"))?;
        let ps = evaluate_multicopy(&basis, &s).unwrap().success_probability();
        let limit = copy_bound(&DimensionProfile::of(&basis).unwrap());
        ensure((ps - 1.0).abs() <= 1e-9, format!("{name}: {ps}"))?;
        ensure(s.copies() <= limit, format!("{name}: {} copies > {limit}", s.copies()))?;
        if let Some(c) = exact {
            ensure(s.copies() == c, format!("{name}: {} copies, expected {c}", s.copies()))?;
        }
        used.push(format!("{name} {}", s.copies()));
    }
    Ok(format!("copies used: {}", used.join(", ")))
}

fn eq9_search() -> Check {
    let mut report = Vec::new();
    for a2 in [0.6, 0.8] {
        let (a, b) = amplitudes_from_square(a2).unwrap();
        let e = catalog::eq9(a, b).unwrap();
        for copies in [1, 2] {
            let r = grid_search_lp(&e, copies, &SearchConfig::default()).map_err(|e| e.to_string())?;
            ensure(
                r.success_probability < 1.0 - 1e-3,
                format!("a² = {a2}, {copies} copies: {}", r.success_probability),
            )?;
            report.push(format!("a²={a2} c={copies}: {:.6}", r.success_probability));
        }
    }
    Ok(report.join("; "))
}

fn random_orthogonal(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    let m = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    let q = m.qr().q();
    (0..dim).map(|c| q.column(c).iter().copied().collect()).collect()
}

fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<Complex64> {
    let m = DMatrix::<Complex64>::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    m.qr().q()
}

fn random_ensemble(rng: &mut ChaCha8Rng) -> Ensemble {
    let basis = random_orthogonal(rng, 4);
    let n = rng.gen_range(2..=4);
    let own = vec![Party::ALICE, Party::BOB];
    let states = basis[..n]
        .iter()
        .map(|v| PureState::from_real(vec![2, 2], v, own.clone()).unwrap())
        .collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let e = Ensemble::uniform(states).unwrap();
    e.with_priors(weights.iter().map(|w| w / total).collect()).unwrap()
}

/// Random grouping of an orthonormal basis into nonempty outcome classes.
fn random_groups(rng: &mut ChaCha8Rng, basis: Vec<Vec<f64>>) -> Vec<Vec<Vec<f64>>> {
    let classes = rng.gen_range(1..=basis.len());
    let mut groups = vec![Vec::new(); classes];
    for (k, v) in basis.into_iter().enumerate() {
        let g = if k < classes { k } else { rng.gen_range(0..classes) };
        groups[g].push(v);
    }
    groups
}

fn random_protocol(rng: &mut ChaCha8Rng) -> Protocol {
    if rng.gen_bool(0.5) {
        let copies = rng.gen_range(1..=2);
        let mut s = Schedule::new(copies).unwrap();
        for copy in 0..copies {
            for (party, sub) in [(Party::ALICE, 0), (Party::BOB, 1)] {
                if rng.gen_bool(0.8) {
                    let m = LocalMeasurement::from_basis(party, vec![sub], vec![2], &qubit_basis(rng.gen_range(0.0..PI)))
                        .unwrap();
                    s = s.with(copy, m).unwrap();
                }
            }
        }
        Protocol::local(s)
    } else {
        let resource = ResourceSpec::from_square(rng.gen_range(0.55..0.95)).unwrap();
        let mut ms = Vec::new();
        for (party, subs) in [(Party::ALICE, vec![0, 2]), (Party::BOB, vec![1, 3])] {
            let basis = random_orthogonal(rng, 4);
            let groups = random_groups(rng, basis);
            ms.push(LocalMeasurement::from_groups(party, subs, vec![2, 2], &groups).unwrap());
        }
        Protocol::new(resource, Schedule::single(ms).unwrap(), CommPlan::None).unwrap()
    }
}

fn properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 100;

    for t in 0..trials {
        let e = random_ensemble(&mut rng);
        let r = evaluate(&e, &random_protocol(&mut rng)).map_err(|e| e.to_string())?;
        for row in r.likelihoods() {
            let s: f64 = row.iter().sum();
            ensure((s - 1.0).abs() <= 1e-9, format!("row-stochasticity trial {t}: {s}"))?;
        }
    }

    for t in 0..trials {
        let dim = rng.gen_range(2..=4);
        let basis = random_orthogonal(&mut rng, dim);
        let groups = random_groups(&mut rng, basis);
        let m = LocalMeasurement::from_groups(Party::ALICE, vec![0], vec![dim], &groups).map_err(|e| e.to_string())?;
        let total = m
            .outcomes()
            .iter()
            .fold(DMatrix::<Complex64>::zeros(dim, dim), |acc, p| acc + p.matrix());
        let dev = (total - DMatrix::<Complex64>::identity(dim, dim)).map(|z| z.norm()).max();
        ensure(dev <= 1e-9, format!("completeness trial {t}: {dev}"))?;
        if groups.len() > 1 {
            let partial = &groups[..groups.len() - 1];
            ensure(
                LocalMeasurement::from_groups(Party::ALICE, vec![0], vec![dim], partial).is_err(),
                format!("incomplete measurement accepted in trial {t}"),
            )?;
        }
    }

    for t in 0..trials {
        let e = random_ensemble(&mut rng);
        let (ua, ub) = (random_unitary(&mut rng, 2), random_unitary(&mut rng, 2));
        let (ta, tb) = (rng.gen_range(0.0..PI), rng.gen_range(0.0..PI));
        let ma = LocalMeasurement::from_basis(Party::ALICE, vec![0], vec![2], &qubit_basis(ta)).unwrap();
        let mb = LocalMeasurement::from_basis(Party::BOB, vec![1], vec![2], &qubit_basis(tb)).unwrap();
        let before = evaluate_multicopy(&e, &Schedule::single(vec![ma.clone(), mb.clone()]).unwrap())
            .unwrap()
            .success_probability();
        let rotated: Vec<PureState> = e
            .states()
            .iter()
            .map(|s| apply_local_unitary(&apply_local_unitary(s, &ua, &[0]).unwrap(), &ub, &[1]).unwrap())
            .collect();
        let e2 = Ensemble::uniform(rotated).unwrap().with_priors(e.priors().to_vec()).unwrap();
        let s2 = Schedule::single(vec![ma.conjugated(&ua).unwrap(), mb.conjugated(&ub).unwrap()]).unwrap();
        let after = evaluate_multicopy(&e2, &s2).unwrap().success_probability();
        ensure((before - after).abs() <= 1e-9, format!("covariance trial {t}: {before} vs {after}"))?;
    }

    for t in 0..trials {
        let e = random_ensemble(&mut rng);
        let p = random_protocol(&mut rng);
        let fwd = evaluate(&e, &p).unwrap();
        let rev = evaluate_with(&e, &p, EvalOptions { reverse_party_order: true }).unwrap();
        ensure(fwd.transcripts() == rev.transcripts(), format!("order trial {t}: transcripts differ"))?;
        for (a, b) in fwd.likelihoods().iter().zip(rev.likelihoods()) {
            for (x, y) in a.iter().zip(b) {
                ensure((x - y).abs() <= 1e-12, format!("order trial {t}: {x} vs {y}"))?;
            }
        }
    }

    for t in 0..trials {
        let e = random_ensemble(&mut rng);
        let r = evaluate(&e, &random_protocol(&mut rng)).unwrap();
        let n = e.len();
        let guess: f64 = (0..r.transcripts().len())
            .map(|k| {
                let d = rng.gen_range(0..n);
                r.priors()[d] * r.likelihoods()[d][k]
            })
            .sum();
        let max_prior = r.priors().iter().cloned().fold(0.0, f64::max);
        ensure(
            guess <= r.success_probability() + 1e-12 && max_prior <= r.success_probability() + 1e-12,
            format!("MAP dominance trial {t}"),
        )?;
    }

    let own = vec![Party::ALICE, Party::BOB];
    let split = BipartitionSplit::from_left(vec![0], 2).unwrap();
    let h = 0.5f64.sqrt();
    let mes = PureState::from_real(vec![2, 2], &[h, 0.0, 0.0, h], own.clone()).unwrap();
    ensure((negativity(&mes, &split).unwrap() - 0.5).abs() <= 1e-9, "MES negativity")?;
    for k in 0..20 {
        let a2 = 0.5 + 0.5 * (k as f64 + 0.5) / 20.0;
        let (a, b) = amplitudes_from_square(a2).unwrap();
        let s = PureState::from_real(vec![2, 2], &[a, 0.0, 0.0, b], own.clone()).unwrap();
        let n = negativity(&s, &split).unwrap();
        ensure((n - a * b).abs() <= 1e-9, format!("nmes negativity at a² = {a2}: {n}"))?;
    }
    Ok(format!("5 properties × {trials} random inputs; negativity at 21 points"))
}

fn main() {
    let criteria: [(&str, f64, fn() -> Check); 10] = [
        ("eq3 resource-assisted success 3/4 + ab/2", 1.0, eq3_reproduction),
        ("LP baseline on eq1 ≈ 1/2 + 1/(2√2)", 30.0, lp_baseline),
        ("alpha-prime protocol vs formula", 10.0, eq5_relations),
        ("two copies suffice for the product basis", 60.0, theorem2),
        ("Bell-state discrimination with nMES", 300.0, theorem3),
        ("two Bell states plus one nMES with MES", 5.0, theorem4),
        ("one-cbit teleportation protocols", 300.0, ictp),
        ("multi-copy schedules for product bases", 600.0, theorem5),
        ("no LP multi-copy protocol for nMES pair", 600.0, eq9_search),
        ("randomized invariants and negativity", 30.0, properties),
    ];
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s, target < {limit}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.2}s, target < {limit}s]", k + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
