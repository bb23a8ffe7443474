//! Acceptance criteria. Each criterion prints one PASS/FAIL line; run with
//! `cargo test --test acceptance -- --nocapture` to see them.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use infomeasure::audit::sampling::{sample_distribution, sample_pair, trial_rng};
use infomeasure::audit::{evaluate_trials, run_audit, AuditConfig, AuditInstance, Axiom};
use infomeasure::characterization::{
    build_bf_instance, check_multiplicativity, default_log_grid, ell, extract_constant_q,
    extract_constant_q_rel, fit_log_constant, verify_scaling,
};
use infomeasure::composition::decompose_zeros;
use infomeasure::measures::{
    q_entropy, q_relative_entropy, relative_entropy, shannon_entropy, AbsolutelyContinuousPair,
    Distribution, QParameter,
};
use infomeasure::{dsl, MeasureHandle, MeasureKind};
use rand::{Rng, RngCore};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEED: u64 = 20_240_611;
const Q_VALUES: [f64; 5] = [-1.0, 0.0, 0.5, 2.0, 3.0];

fn q(v: f64) -> QParameter {
    QParameter::new(v).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn audit_passes(m: &MeasureHandle, axioms: &[Axiom], trials: usize, qv: QParameter) -> Outcome {
    let cfg = AuditConfig {
        trials,
        seed: SEED,
        q: qv,
        ..AuditConfig::new(axioms.to_vec())
    };
    let report = run_audit(m, &cfg).map_err(|e| e.to_string())?;
    let failing: Vec<String> = report
        .axioms
        .iter()
        .filter(|rec| !(rec.pass && rec.max_residual <= 1e-9))
        .map(|rec| {
            format!(
                "{} {}: max residual {:e} on {}",
                m.label(),
                rec.name,
                rec.max_residual,
                serde_json::to_string(&rec.worst_instance).unwrap_or_default()
            )
        })
        .collect();
    ensure(failing.is_empty(), || failing.join("; "))
}

fn criterion_1() -> Outcome {
    audit_passes(
        &MeasureHandle::relative_entropy(),
        &[
            Axiom::Symmetry,
            Axiom::Vanishing,
            Axiom::Chain,
            Axiom::Recursivity,
            Axiom::TwoBlock,
        ],
        1000,
        QParameter::ONE,
    )
}

fn criterion_2() -> Outcome {
    let mut failures = Vec::new();
    for &qv in &Q_VALUES {
        let qp = q(qv);
        let checks = [
            (
                MeasureHandle::q_entropy(qp),
                [Axiom::Symmetry, Axiom::QChain, Axiom::QMult],
            ),
            (
                MeasureHandle::q_relative_entropy(qp),
                [Axiom::Symmetry, Axiom::Vanishing, Axiom::QRelMult],
            ),
        ];
        for (m, axioms) in &checks {
            if let Err(e) = audit_passes(m, axioms, 1000, qp) {
                failures.push(e);
            }
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))
}

fn criterion_3() -> Outcome {
    let m = dsl::compile("p*log(1/r)", MeasureKind::Divergence, None).map_err(|e| e.to_string())?;
    audit_passes(&m, &[Axiom::Symmetry, Axiom::Chain], 500, QParameter::ONE)?;

    let cfg = AuditConfig {
        trials: 500,
        seed: SEED,
        ..AuditConfig::new(vec![Axiom::Vanishing])
    };
    let outcomes = evaluate_trials(&m, Axiom::Vanishing, &cfg).map_err(|e| e.to_string())?;
    let mut failing = 0;
    for o in &outcomes {
        let AuditInstance::Vanishing { p } = &o.instance else {
            return Err("vanishing trial produced a non-vanishing instance".into());
        };
        if o.residual > 1e-9 {
            failing += 1;
            let h = shannon_entropy(p);
            ensure((o.residual - h).abs() <= 1e-9, || {
                format!("trial {}: residual {} but H(p) = {h}", o.index, o.residual)
            })?;
        }
    }
    ensure(failing > 0, || "vanishing never failed".into())
}

fn criterion_4() -> Outcome {
    let d = MeasureHandle::relative_entropy();
    for kappa in [-2.0, 0.5, 10.0] {
        let m = d.scaled(kappa);
        let fit = fit_log_constant(&m, &default_log_grid()).map_err(|e| e.to_string())?;
        ensure((fit.c - kappa).abs() <= 1e-9, || {
            format!("kappa {kappa}: fitted {}", fit.c)
        })?;
        ensure(fit.max_residual <= 1e-9, || {
            format!("kappa {kappa}: log-fit residual {:e}", fit.max_residual)
        })?;
        let dev = verify_scaling(&m, kappa, &d, 500, SEED).map_err(|e| e.to_string())?;
        ensure(dev <= 1e-9, || {
            format!("kappa {kappa}: scaling deviation {dev:e}")
        })?;
    }
    Ok(())
}

fn criterion_5() -> Outcome {
    let s2 = MeasureHandle::q_entropy(q(2.0)).scaled(3.7);
    let c = extract_constant_q(&s2, q(2.0)).map_err(|e| e.to_string())?;
    ensure((c - 3.7).abs() <= 1e-9, || format!("3.7*S_2 gave {c}"))?;
    for qv in [0.0, 2.0, 3.0] {
        let c = extract_constant_q(&MeasureHandle::q_entropy(q(qv)), q(qv))
            .map_err(|e| e.to_string())?;
        ensure((c - 1.0).abs() <= 1e-12, || format!("S_{qv} gave {c}"))?;
    }
    Ok(())
}

fn criterion_6() -> Outcome {
    // Direct formula: D_q = Σ p_i (1 − (r_i/p_i)^{1−q}) / (1 − q).
    let brute = |p: &[f64], r: &[f64], qv: f64| -> f64 {
        p.iter()
            .zip(r)
            .filter(|(&pi, _)| pi > 0.0)
            .map(|(&pi, &ri)| pi * (1.0 - (ri / pi).powf(1.0 - qv)) / (1.0 - qv))
            .sum()
    };
    let (p, r) = ([1.0, 0.0], [0.5, 0.5]);
    let oracle = brute(&p, &r, 2.0);
    ensure((oracle - 1.0).abs() <= 1e-12, || {
        format!("brute-force D_2 = {oracle}")
    })?;
    let pair = AbsolutelyContinuousPair::new(
        Distribution::new(p.to_vec()).unwrap(),
        Distribution::new(r.to_vec()).unwrap(),
    )
    .unwrap();
    let native = q_relative_entropy(&pair, q(2.0));
    ensure((native - oracle).abs() <= 1e-12, || {
        format!("native D_2 = {native}")
    })?;

    let m = MeasureHandle::q_relative_entropy(q(2.0)).scaled(3.7);
    let c = extract_constant_q_rel(&m, q(2.0)).map_err(|e| e.to_string())?;
    ensure((c - 3.7).abs() <= 1e-9, || format!("3.7*D_2 gave {c}"))
}

fn criterion_7() -> Outcome {
    let d = MeasureHandle::relative_entropy();
    for k in 0..=20 {
        let alpha = 2f64.powi(-k);
        let l = ell(&d, alpha).map_err(|e| e.to_string())?;
        ensure((l + alpha.ln()).abs() <= 1e-12, || {
            format!("ell(2^-{k}) = {l}")
        })?;
    }
    for i in 1..=20 {
        for j in 1..=20 {
            let (a, b) = (f64::from(i) / 20.0, f64::from(j) / 20.0);
            let r = check_multiplicativity(&d, a, b).map_err(|e| e.to_string())?;
            ensure(r <= 1e-12, || format!("L({a}*{b}) residual {r:e}"))?;
        }
    }
    let mut with_zeros = 0;
    for t in 0..200 {
        let mut rng = trial_rng(SEED, "acceptance-zeros", t);
        let n = rng.gen_range(2..=8);
        let pair = sample_pair(n, 1.0, &mut rng);
        let dec = decompose_zeros(&pair);
        if dec.support_len() < n {
            with_zeros += 1;
        }
        let lhs = relative_entropy(&pair);
        let rhs = -dec.r_mass.ln() + relative_entropy(&dec.reduced);
        ensure((lhs - rhs).abs() <= 1e-9, || {
            format!("zeros identity: {lhs} vs {rhs}")
        })?;
    }
    ensure(with_zeros == 200, || {
        format!("only {with_zeros} pairs had zero blocks")
    })?;
    for t in 0..100 {
        let mut rng = trial_rng(SEED, "acceptance-bf", t);
        let n = rng.gen_range(1..=8);
        let pair = sample_pair(n, 0.0, &mut rng);
        let bf = build_bf_instance(&pair).map_err(|e| e.to_string())?;
        let v = relative_entropy(&bf.big_pair);
        ensure((v + bf.alpha.ln()).abs() <= 1e-9, || {
            format!("BF: D = {v}, -log alpha = {}", -bf.alpha.ln())
        })?;
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();
    for t in 0..200 {
        let mut rng = trial_rng(SEED, "acceptance-q-limit", t);
        let n = rng.gen_range(1..=8);
        let pair = sample_pair(n, 0.25, &mut rng);
        let h = shannon_entropy(pair.p());
        let d = relative_entropy(&pair);
        for qv in [1.0 - 1e-6, 1.0 + 1e-6] {
            let s = q_entropy(pair.p(), q(qv));
            if (s - h).abs() > 1e-5 {
                failures.push(format!(
                    "trial {t}: S_{qv} = {s}, H = {h}, p = {:?}",
                    pair.p().weights()
                ));
            }
            let dq = q_relative_entropy(&pair, q(qv));
            if (dq - d).abs() > 1e-5 {
                failures.push(format!(
                    "trial {t}: D_{qv} = {dq}, D = {d}, pair = {}",
                    serde_json::to_string(&pair).unwrap_or_default()
                ));
            }
        }
    }
    ensure(failures.is_empty(), || {
        format!("{} deviations: {}", failures.len(), failures.join("; "))
    })
}

fn criterion_9() -> Outcome {
    let cases: [(&str, MeasureKind, bool); 4] = [
        ("p*log(1/p)", MeasureKind::Entropy, false),
        ("p*log(p/r)", MeasureKind::Divergence, false),
        ("p*lnq(1/p)", MeasureKind::Entropy, true),
        ("-p*lnq(r/p)", MeasureKind::Divergence, true),
    ];
    for (src, kind, uses_q) in cases {
        let expr = dsl::parse(src).map_err(|e| e.message.clone())?;
        for t in 0..500u64 {
            let mut rng = trial_rng(SEED, "acceptance-dsl", t);
            let n = rng.gen_range(1..=8);
            let pair = sample_pair(n, 0.25, &mut rng);
            let qp = uses_q.then(|| q(Q_VALUES[t as usize % Q_VALUES.len()]));
            let (native, via_dsl) = match kind {
                MeasureKind::Entropy => {
                    let p = sample_distribution(n, &mut rng);
                    let native = match qp {
                        Some(qp) => q_entropy(&p, qp),
                        None => shannon_entropy(&p),
                    };
                    (native, dsl::evaluate(&expr, &p, None, qp))
                }
                MeasureKind::Divergence => {
                    let native = match qp {
                        Some(qp) => q_relative_entropy(&pair, qp),
                        None => relative_entropy(&pair),
                    };
                    (native, dsl::evaluate(&expr, pair.p(), Some(pair.r()), qp))
                }
            };
            let via_dsl = via_dsl.map_err(|e| format!("{src}: {e}"))?;
            ensure((native - via_dsl).abs() <= 1e-12, || {
                format!("{src} trial {t}: native {native} vs dsl {via_dsl}")
            })?;
        }
    }

    const ALPHABET: &[u8] = b"pqr0123456789.eE+-*/^(),logexplnqpowaffine \t\n";
    for t in 0..10_000u64 {
        let mut rng = trial_rng(SEED, "acceptance-fuzz", t);
        let len = rng.gen_range(0..=1024);
        let bytes: Vec<u8> = if t % 2 == 0 {
            let mut b = vec![0u8; len];
            rng.fill_bytes(&mut b);
            b
        } else {
            (0..len)
                .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())])
                .collect()
        };
        let source = String::from_utf8_lossy(&bytes).into_owned();
        let parsed = catch_unwind(|| dsl::parse(&source))
            .map_err(|_| format!("parser panicked on input {t}: {source:?}"))?;
        if let Err(e) = parsed {
            ensure(
                e.span.start <= e.span.end && e.span.end <= source.len(),
                || {
                    format!(
                        "input {t}: span {:?} outside source of length {}",
                        e.span,
                        source.len()
                    )
                },
            )?;
        }
    }
    Ok(())
}

fn run_cli(args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_infomeasure"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .env_remove("INFOMEASURE_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(0), || {
        format!(
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        )
    })?;
    Ok(out.stdout)
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("pair.json");
    std::fs::write(&input, r#"{"p":[0.2,0.3,0.5,0],"r":[0.1,0.4,0.25,0.25]}"#)
        .map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let read = |p: &str| std::fs::read(Path::new(p)).map_err(|e| e.to_string());

    let mut audit_outputs = Vec::new();
    let mut profile_outputs = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let report = path(&format!("report{i}.json"));
        let stdout = run_cli(
            &[
                "audit",
                "--measure",
                "kl",
                "--seed",
                "17",
                "--report",
                &report,
            ],
            threads,
        )?;
        audit_outputs.push((stdout, read(&report)?));

        let csv = path(&format!("profile{i}.csv"));
        let input = input.to_string_lossy();
        let args = [
            "profile", "--input", &input, "--q-from", "-1", "--q-to", "3", "--steps", "41",
            "--out", &csv,
        ];
        let stdout = run_cli(&args, threads)?;
        profile_outputs.push((stdout, read(&csv)?));
    }
    ensure(audit_outputs.windows(2).all(|w| w[0] == w[1]), || {
        "audit output differs between runs".into()
    })?;
    ensure(profile_outputs.windows(2).all(|w| w[0] == w[1]), || {
        "profile output differs between runs".into()
    })
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("built-in D passes the divergence audit", criterion_1),
        (
            "S_q and D_q pass their audits for q in {-1, 0, 0.5, 2, 3}",
            criterion_2,
        ),
        (
            "p*log(1/r) keeps symmetry and chain, fails vanishing by H(p)",
            criterion_3,
        ),
        ("log-fit recovers kappa for kappa*D", criterion_4),
        ("S_q constant extraction", criterion_5),
        ("D_q constant extraction keeps the sign", criterion_6),
        (
            "ell, multiplicativity, zero blocks, BF instance",
            criterion_7,
        ),
        ("q -> 1 coherence", criterion_8),
        ("DSL round-trip and parser fuzzing", criterion_9),
        (
            "CLI audit and profile are byte-identical across runs",
            criterion_10,
        ),
    ];
    let mut failures = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(()) => println!("criterion {:>2}: PASS  {name}", i + 1),
            Err(why) => {
                println!("criterion {:>2}: FAIL  {name}: {why}", i + 1);
                failures.push(i + 1);
            }
        }
    }
    assert!(failures.is_empty(), "failing criteria: {failures:?}");
}
