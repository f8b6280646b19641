//! Acceptance suite. Each criterion prints one PASS/FAIL line; any failure
//! makes the target exit non-zero.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use common::*;
use diffring::cli::{parse_expression, run_command, verify_theorem, Verdict};
use diffring::coeff::{FieldSpec, Scalar};
use diffring::gb::{truncated_basis, twosided_gb};
use diffring::ideal::{cert_zero_principal, powint, IdealHandle, PowIntStatus};
use diffring::invariant::{invariant_factorization, UniPoly, UnivariateDerivation};
use diffring::lie::{
    derived_is_nilpotent, derived_series, enveloping_ring, is_adapted_flag, is_nilpotent,
    to_ring_spec, validate_lie, LieAlgebraSpec,
};
use diffring::ring::{
    apply_derivation, default_names, validate_spec, DerivationTable, Poly, Ring, RingSpec,
    Violation,
};
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture_path(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/fixtures");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn json_of(args: &[&str]) -> Result<serde_json::Value, String> {
    let mut argv = vec!["diffring"];
    argv.extend_from_slice(args);
    argv.push("--format=json");
    let out = run_command(argv);
    if out.code != 0 {
        return Err(format!("exit {}: {}", out.code, out.stderr));
    }
    serde_json::from_str(&out.stdout).map_err(|e| e.to_string())
}

/// Ring arithmetic on 200 random triples per fixture.
fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (name, r) in arithmetic_fixtures() {
        for t in 0..200 {
            let f = random_poly(&r, &mut rng, 4, 3);
            let g = random_poly(&r, &mut rng, 4, 3);
            let h = random_poly(&r, &mut rng, 4, 3);
            ensure(&(&f * &g) * &h == &f * &(&g * &h), || {
                format!("{name}: associativity fails on triple {t}")
            })?;
            ensure(&f * &(&g + &h) == &(&f * &g) + &(&f * &h), || {
                format!("{name}: left distributivity fails on triple {t}")
            })?;
            ensure(&(&f + &g) * &h == &(&f * &h) + &(&g * &h), || {
                format!("{name}: right distributivity fails on triple {t}")
            })?;
        }
        for i in 0..r.nvars() {
            for j in 0..i {
                let (xi, xj) = (r.var(i), r.var(j));
                let expected = apply_derivation(&r, i, &xj).map_err(|e| e.to_string())?;
                ensure(&(&xi * &xj) - &(&xj * &xi) == expected, || {
                    format!("{name}: commutation fails for ({}, {})", i + 1, j + 1)
                })?;
            }
        }
        // Commutation with random elements of the variables below x_i.
        for i in 1..r.nvars() {
            for t in 0..200 {
                let f = random_poly(&r, &mut rng, 4, 3);
                let below: diffring::ring::Terms = f
                    .terms()
                    .iter()
                    .filter(|(m, _)| m.exponents()[i..].iter().all(|&e| e == 0))
                    .map(|(m, c)| (m.clone(), c.clone()))
                    .collect();
                let f = Poly::from_terms(&r, below).unwrap();
                let xi = r.var(i);
                let d = apply_derivation(&r, i, &f).map_err(|e| e.to_string())?;
                ensure(&(&xi * &f) - &(&f * &xi) == d, || {
                    format!(
                        "{name}: x{} f - f x{} != delta(f) on pair {t}",
                        i + 1,
                        i + 1
                    )
                })?;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))
}

/// The worked example over Q and F5.
fn criterion_2() -> Check {
    for (file, field) in [("solvable2.ring", q()), ("solvable2_f5.ring", fp(5))] {
        let r = solvable2(field);
        let i = IdealHandle::new(&r, vec![x(&r, 1), x(&r, 2)]).unwrap();
        let rep = verify_theorem(&i, None, 6, 10, 3).map_err(|e| e.to_string())?;
        let rounds = &rep.iteration.rounds;
        ensure(rounds.len() == 2, || {
            format!("{file}: expected 2 rounds, got {}", rounds.len())
        })?;
        let cand = twosided_gb(&r, &rounds[0].powint.candidates).unwrap();
        let x1 = twosided_gb(&r, &[x(&r, 1)]).unwrap();
        ensure(cand.elements() == x1.elements(), || {
            format!("{file}: round-1 candidate is {cand}, not (x1)")
        })?;
        ensure(rounds[1].status == PowIntStatus::CertifiedZero, || {
            format!("{file}: round 2 is {}", rounds[1].status)
        })?;
        ensure(rep.m_obs == Some(2) && rep.bounds.best() == Some(2), || {
            format!(
                "{file}: m_obs {:?}, bound {:?}",
                rep.m_obs,
                rep.bounds.best()
            )
        })?;
        ensure(rep.verdict == Verdict::Consistent, || {
            format!("{file}: verdict {}", rep.verdict)
        })?;

        // The same numbers through the command line.
        let doc = json_of(&[
            "verify",
            "--spec",
            &fixture_path(file),
            "--ideal",
            "x1,x2",
            "--deg",
            "6",
            "--maxpow",
            "10",
            "--iters",
            "3",
        ])?;
        ensure(
            doc["m_obs"] == 2 && doc["bound"] == 2 && doc["verdict"] == "CONSISTENT",
            || format!("{file}: cli report {doc}"),
        )?;
        ensure(doc["rounds"][1]["status"] == "CERTIFIED_ZERO", || {
            format!("{file}: cli round 2 {}", doc["rounds"][1]["status"])
        })?;
    }
    Ok(())
}

/// Heisenberg over F7 with the augmentation ideal at d = 5.
fn criterion_3() -> Check {
    let doc = json_of(&[
        "verify",
        "--spec",
        &fixture_path("heisenberg_f7.lie"),
        "--ideal",
        "x1,x2,x3",
        "--deg",
        "5",
        "--maxpow",
        "12",
        "--iters",
        "3",
    ])?;
    let m = doc["m_obs"].as_u64().ok_or("no vanishing observed")?;
    ensure(m <= 2, || format!("m_obs = {m}"))?;
    let last = doc["rounds"].as_array().unwrap().last().unwrap()["status"].clone();
    ensure(last == "CERTIFIED_ZERO" || last == "OBSERVED_ZERO", || {
        format!("final round {last}")
    })?;
    ensure(doc["ideal"]["quotient_dim"] == 1, || {
        format!("quotient_dim {}", doc["ideal"]["quotient_dim"])
    })?;
    ensure(
        doc["bounds"]["dimension"] == 3 && doc["bounds"]["codimension"] == 2 && doc["bound"] == 2,
        || format!("bounds {} / bound {}", doc["bounds"], doc["bound"]),
    )?;
    ensure(doc["verdict"] == "CONSISTENT", || {
        format!("verdict {}", doc["verdict"])
    })
}

/// Certified principal ideals have zero truncation at power d + 1.
fn criterion_4() -> Check {
    let s_q = solvable2(q());
    let s_5 = solvable2(fp(5));
    let h_7 = heisenberg(fp(7));
    let a_q = abelian(q(), 2);
    let a_5 = abelian(fp(5), 3);
    let a_1 = abelian(q(), 1);
    let cases: Vec<(&Ring, &str, u32)> = vec![
        (&s_q, "x1", 5),
        (&s_q, "x1^3", 5),
        (&s_5, "x1^2", 4),
        (&h_7, "x1", 4),
        (&h_7, "x1 + 3", 4),
        (&h_7, "x1^2 - x1", 3),
        (&a_q, "x1*x2 + 1", 4),
        (&a_q, "x1^2 + x2", 4),
        (&a_5, "x3 - 2", 3),
        (&a_1, "x1^2 + 1", 6),
    ];
    let mut certified = 0;
    for (r, text, d) in cases {
        let f = parse_expression(text, r).map_err(|e| e.to_string())?;
        let i = IdealHandle::new(r, vec![f]).unwrap();
        let cert = cert_zero_principal(&i).map_err(|e| e.to_string())?;
        ensure(cert.is_ok(), || {
            format!("({text}) not certified: {:?}", cert.as_ref().err())
        })?;
        certified += 1;
        let rep = powint(&i, d, d + 1).map_err(|e| e.to_string())?;
        ensure(rep.final_truncation().is_empty(), || {
            format!("({text}) at d = {d}: dims {:?}", rep.dims())
        })?;
    }
    ensure(certified == 10, || {
        format!("only {certified} fixtures certified")
    })
}

/// Invariant factorization of the three worked examples.
fn criterion_5() -> Check {
    let up = |f: FieldSpec, cs: &[i64]| UniPoly::from_i64(f, cs);
    let euler = UnivariateDerivation {
        image: up(q(), &[0, 1]),
    };
    let logistic = UnivariateDerivation {
        image: up(q(), &[0, -1, 1]),
    };
    let f5 = fp(5);
    let cases: Vec<(UniPoly, Vec<UnivariateDerivation>, Vec<(UniPoly, u32)>)> = vec![
        (
            up(q(), &[0, 0, 0, 1]),
            vec![euler],
            vec![(up(q(), &[0, 1]), 3)],
        ),
        (
            up(q(), &[0, 0, -1, 1]),
            vec![logistic],
            vec![(up(q(), &[0, 1]), 2), (up(q(), &[-1, 1]), 1)],
        ),
        (
            up(f5, &[1, 0, 0, 0, 1]),
            vec![],
            vec![(up(f5, &[2, 0, 1]), 1), (up(f5, &[3, 0, 1]), 1)],
        ),
    ];
    for (f, ds, expected) in cases {
        let rep = invariant_factorization(&f, &ds).map_err(|e| e.to_string())?;
        let mut got: Vec<(UniPoly, u32)> = rep
            .maximal
            .iter()
            .cloned()
            .zip(rep.exponents.iter().copied())
            .collect();
        got.sort();
        let mut want = expected.clone();
        want.sort();
        ensure(got == want, || format!("{f}: got {got:?}"))?;
        ensure(rep.complete, || {
            format!("{f}: incomplete ({:?})", rep.notes)
        })?;
        let product = got
            .iter()
            .fold(UniPoly::one(f.field()), |acc, (g, e)| acc.mul(&g.pow(*e)));
        ensure(product == f, || format!("{f}: product is {product}"))?;
    }
    // The same example through the command line.
    let doc = json_of(&[
        "invariant-factor",
        "--spec",
        &fixture_path("logistic.ring"),
        "--poly",
        "x1^3 - x1^2",
    ])?;
    ensure(
        doc["complete"] == true && doc["maximal"].as_array().map(Vec::len) == Some(2),
        || format!("cli report {doc}"),
    )
}

type Span = BTreeMap<Vec<u32>, BigRational>;

/// Commutative product of a monomial and a polynomial.
fn shift(e: &[u32], f: &Span) -> Span {
    f.iter()
        .map(|(m, c)| (m.iter().zip(e).map(|(a, b)| a + b).collect(), c.clone()))
        .collect()
}

fn deglex_key(m: &[u32]) -> (u32, Vec<u32>) {
    (m.iter().sum(), m.iter().rev().copied().collect())
}

/// Reduced row echelon form, pivots at the deglex-largest monomial.
fn rref(rows: Vec<Span>) -> Vec<Span> {
    let mut basis: Vec<Span> = Vec::new();
    for mut row in rows {
        for b in &basis {
            let lead = b.keys().max_by_key(|m| deglex_key(m)).unwrap().clone();
            if let Some(c) = row.get(&lead).cloned() {
                for (m, v) in b {
                    let e = row.entry(m.clone()).or_insert_with(BigRational::zero);
                    *e -= &c * v;
                }
                row.retain(|_, v| !v.is_zero());
            }
        }
        if row.is_empty() {
            continue;
        }
        let lead = row.keys().max_by_key(|m| deglex_key(m)).unwrap().clone();
        let inv = BigRational::from_integer(1.into()) / row[&lead].clone();
        row.values_mut().for_each(|v| *v *= &inv);
        for b in basis.iter_mut() {
            if let Some(c) = b.get(&lead).cloned() {
                for (m, v) in &row {
                    let e = b.entry(m.clone()).or_insert_with(BigRational::zero);
                    *e -= &c * v;
                }
                b.retain(|_, v| !v.is_zero());
            }
        }
        basis.push(row);
    }
    basis.sort_by_key(|r| deglex_key(r.keys().max_by_key(|m| deglex_key(m)).unwrap()));
    basis
}

/// Truncated basis against a brute-force Macaulay span in the commutative ring.
fn criterion_6() -> Check {
    let r = abelian(q(), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut tested = 0;
    while tested < 25 {
        let ngens = rng.gen_range(1..=3);
        let mut gens: Vec<Span> = Vec::new();
        for _ in 0..ngens {
            let mut g = Span::new();
            for _ in 0..rng.gen_range(1..=4) {
                let d = rng.gen_range(0..=2u32);
                let a = rng.gen_range(0..=d);
                let c: i64 = rng.gen_range(-2..=2);
                *g.entry(vec![a, d - a]).or_insert_with(BigRational::zero) +=
                    BigRational::from_integer(c.into());
            }
            g.retain(|_, v| !v.is_zero());
            if !g.is_empty() {
                gens.push(g);
            }
        }
        if gens.is_empty() {
            continue;
        }
        tested += 1;
        // Oracle: all monomial multiples up to degree 8, then keep degree <= 4.
        let mut rows = Vec::new();
        for g in &gens {
            let dg = g.keys().map(|m| m.iter().sum::<u32>()).max().unwrap();
            for total in 0..=(8 - dg) {
                for a in 0..=total {
                    rows.push(shift(&[a, total - a], g));
                }
            }
        }
        let oracle: Vec<Span> = rref(rows)
            .into_iter()
            .filter(|row| row.keys().all(|m| m.iter().sum::<u32>() <= 4))
            .collect();

        let polys: Vec<Poly> = gens
            .iter()
            .map(|g| {
                let terms = g
                    .iter()
                    .map(|(m, c)| {
                        (
                            diffring::ring::Monomial::from_exponents(m.clone()),
                            Scalar::Rational(c.clone()),
                        )
                    })
                    .collect();
                Poly::from_terms(&r, terms).unwrap()
            })
            .collect();
        let gb = twosided_gb(&r, &polys).map_err(|e| e.to_string())?;
        let ours: Vec<Span> = truncated_basis(&gb, 4)
            .rows()
            .iter()
            .map(|p| {
                p.terms()
                    .iter()
                    .map(|(m, c)| (m.exponents().to_vec(), c.as_rational().unwrap().clone()))
                    .collect()
            })
            .collect();
        let ours = rref(ours);
        ensure(ours == oracle, || {
            format!(
                "ideal {tested}: span dims {} vs oracle {}",
                ours.len(),
                oracle.len()
            )
        })?;
    }
    Ok(())
}

/// Derivation-table validation.
fn criterion_7() -> Check {
    for (name, r) in [
        ("heisenberg", heisenberg(q())),
        ("solvable2", solvable2(q())),
    ] {
        ensure(validate_spec(r.spec()).ok, || format!("{name} rejected"))?;
    }
    let mut table = DerivationTable::new();
    table.set(1, 0, terms(3, q(), &[(&[1, 0, 0], 1)]));
    table.set(2, 0, terms(3, q(), &[(&[0, 0, 0], 1)]));
    let bad = RingSpec::new(q(), default_names(3), table).unwrap();
    let report = validate_spec(&bad);
    ensure(!report.ok, || "inconsistent table accepted".into())?;
    ensure(
        report
            .violations
            .contains(&Violation::Leibniz { i: 3, k: 2, j: 1 }),
        || format!("violations {:?}", report.violations),
    )?;
    let out = run_command([
        "diffring",
        "validate",
        "--spec",
        &fixture_path("bad.ring"),
        "--format=json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&out.stdout).map_err(|e| e.to_string())?;
    ensure(
        out.code == 1 && doc["violations"][0]["triple"] == serde_json::json!([3, 2, 1]),
        || format!("cli exit {} with {}", out.code, out.stdout),
    )
}

/// Lie algebra to ring conversion.
fn criterion_8() -> Check {
    let fixtures: Vec<(&str, LieAlgebraSpec)> = vec![
        ("abelian3", lie(q(), 3, &[])),
        ("solvable2", lie(q(), 2, &[(2, 1, &[1, 0])])),
        ("heisenberg", lie(fp(7), 3, &[(3, 2, &[1, 0, 0])])),
        ("r3", lie(q(), 3, &[(2, 1, &[1, 0, 0]), (3, 1, &[1, 0, 0])])),
        (
            "filiform4",
            lie(q(), 4, &[(4, 3, &[0, 1, 0, 0]), (4, 2, &[1, 0, 0, 0])]),
        ),
        (
            "jordan3",
            lie(fp(5), 3, &[(3, 1, &[1, 0, 0]), (3, 2, &[1, 1, 0])]),
        ),
        (
            "sl2",
            lie(
                q(),
                3,
                &[(2, 1, &[2, 0, 0]), (3, 1, &[0, -1, 0]), (3, 2, &[0, 0, 2])],
            ),
        ),
    ];
    let mut converted = 0;
    for (name, spec) in &fixtures {
        if !validate_lie(spec).ok || !is_adapted_flag(spec) {
            ensure(*name == "sl2", || format!("{name} unexpectedly rejected"))?;
            continue;
        }
        let ring = to_ring_spec(spec).map_err(|e| format!("{name}: {e}"))?;
        ensure(validate_spec(&ring).ok, || {
            format!("{name}: table fails validation")
        })?;
        enveloping_ring(spec).map_err(|e| format!("{name}: {e}"))?;
        converted += 1;
    }
    ensure(converted == 6, || format!("{converted} fixtures converted"))?;
    let solv = &fixtures[1].1;
    ensure(derived_series(solv) == vec![2, 1, 0], || {
        format!("solvable2 derived series {:?}", derived_series(solv))
    })?;
    let heis = &fixtures[2].1;
    ensure(is_nilpotent(heis) && derived_is_nilpotent(heis), || {
        "Heisenberg flags".into()
    })
}

/// Byte-identical reports across runs and generator permutations.
fn criterion_9() -> Check {
    let cases: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        (
            "solvable2.ring",
            vec!["x1", "x2"],
            vec!["powint", "--deg", "4", "--maxpow", "5"],
        ),
        (
            "solvable2_f5.ring",
            vec!["x1", "x2"],
            vec!["verify", "--deg", "6", "--maxpow", "10", "--iters", "3"],
        ),
        (
            "heisenberg_f7.lie",
            vec!["x1", "x2", "x3"],
            vec!["verify", "--deg", "4", "--maxpow", "10", "--iters", "2"],
        ),
        (
            "heisenberg_f7.ring",
            vec!["x2^2 + x1", "x3*x2", "x1*x3 - 2"],
            vec!["gb"],
        ),
        (
            "abelian.ring",
            vec!["x1^2 - x2", "x2*x3 + x1", "x3^2"],
            vec!["iterate", "--deg", "3", "--maxpow", "4", "--iters", "2"],
        ),
        ("solvable2.ring", vec!["x2^2", "x1*x2 + x1"], vec!["cert"]),
    ];
    for (file, gens, cmd) in cases {
        let spec = fixture_path(file);
        let perms: Vec<Vec<&str>> = {
            let mut rev = gens.clone();
            rev.reverse();
            let mut rot = gens.clone();
            rot.rotate_left(1);
            vec![gens.clone(), rev, rot, gens.clone()]
        };
        let mut outputs = Vec::new();
        for perm in &perms {
            let joined = perm.join(",");
            for format in ["--format=json", "--format=human"] {
                let mut argv = vec![
                    "diffring", cmd[0], "--spec", &spec, "--ideal", &joined, format,
                ];
                argv.extend_from_slice(&cmd[1..]);
                let out = run_command(argv);
                ensure(out.code == 0, || {
                    format!("{file} {}: exit {} {}", cmd[0], out.code, out.stderr)
                })?;
                outputs.push((format, out.stdout));
            }
        }
        for (format, text) in &outputs {
            let first = &outputs.iter().find(|(f, _)| f == format).unwrap().1;
            ensure(text == first, || {
                format!(
                    "{file} {}: {format} output differs across runs or permutations",
                    cmd[0]
                )
            })?;
        }
        // Reduced bases directly.
        let ring =
            match diffring::cli::parse_spec(&std::fs::read_to_string(&spec).unwrap()).unwrap() {
                diffring::cli::SpecDocument::Ring(s) => Ring::new(s).unwrap(),
                diffring::cli::SpecDocument::Lie(l) => enveloping_ring(&l).unwrap(),
            };
        let bases: Vec<String> = perms
            .iter()
            .map(|perm| {
                let ps: Vec<Poly> = perm
                    .iter()
                    .map(|t| parse_expression(t, &ring).unwrap())
                    .collect();
                twosided_gb(&ring, &ps).unwrap().to_string()
            })
            .collect();
        ensure(bases.windows(2).all(|w| w[0] == w[1]), || {
            format!("{file}: bases differ {bases:?}")
        })?;
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        (
            "ring arithmetic: associativity, distributivity, commutation on 4 fixtures",
            criterion_1,
        ),
        ("worked vanishing example over Q and F5", criterion_2),
        (
            "Heisenberg over F7: vanishing within min(3, 2)",
            criterion_3,
        ),
        (
            "principal zero certificates agree with truncated powers",
            criterion_4,
        ),
        ("invariant factorization examples", criterion_5),
        ("truncated Groebner basis equals Macaulay span", criterion_6),
        ("derivation-table validation", criterion_7),
        ("Lie algebra pipeline", criterion_8),
        ("determinism across runs and generator orders", criterion_9),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(()) => println!("criterion {}: PASS  {name} ({secs:.2}s)", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", n + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
