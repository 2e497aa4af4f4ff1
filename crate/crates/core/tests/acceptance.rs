//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use m2o::actors::{GroupConfig, KeyRegistry, Role};
use m2o::batch;
use m2o::costmodel::{
    comm_hga, comm_hgaka, comm_kerberos, comp_hga, comp_hgaka, comp_kerberos, cost_table, pcc_ms, reconcile, to_csv,
    work_factor, OpCounts, Protocol, TimingModel, FITTED_PRESET,
};
use m2o::crypto::rng::seeded;
use m2o::crypto::{KeySize, Meter, Nonce, Phase, RsaKeyPair};
use m2o::netsim::{evaluate, run, run_fresh, scenario_suite, AdversaryScript, RunTranscript};
use m2o::tokens::{build_group_authenticator, homomorphic_group_verify, or_nonce_token, EncAuthVeriToken};
use num_bigint::RandBigInt;
use rand::Rng;

const KEYS: KeySize = KeySize::InsecureTest(512);
const GROUPS: std::ops::RangeInclusive<usize> = 2..=50;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn honest_runs() -> &'static Vec<(usize, RunTranscript)> {
    static RUNS: OnceLock<Vec<(usize, RunTranscript)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        batch::map(GROUPS.collect(), |nc| {
            let cfg = GroupConfig::with_size(nc).unwrap();
            let (_, t) = run_fresh(&cfg, KEYS, &AdversaryScript::passive(), 1000 + nc as u64).unwrap();
            (nc, t)
        })
    })
}

fn ops(se: u64, ae: u64, ad: u64, h: u64, hmac: u64) -> OpCounts {
    OpCounts { se, ae, ad, h, hmac, kse: 0, ksd: 0 }
}

fn ac1() -> Check {
    let start = Instant::now();
    let (a, b) = (comm_hgaka(3).unwrap(), comm_hga(3).unwrap());
    ensure(a.bits == 6272 && a.bytes() == 784, || format!("HGAKA nc=3 is {} bits", a.bits))?;
    ensure(b.bits == 17200 && b.bytes() == 2150, || format!("HGA nc=3 is {} bits", b.bits))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok("HGAKA 6272 bits (784 B), HGA 17200 bits (2150 B)".into())
}

fn ac2() -> Check {
    let start = Instant::now();
    let (a, b) = (comp_hgaka(3).unwrap().counts, comp_hga(3).unwrap().counts);
    ensure(a == ops(14, 1, 0, 1, 6), || format!("HGAKA nc=3 is {a}"))?;
    ensure(b == ops(10, 4, 1, 1, 0), || format!("HGA nc=3 is {b}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("HGAKA {a}; HGA {b}"))
}

fn ac3() -> Check {
    let start = Instant::now();
    let runs = honest_runs();
    for (nc, t) in runs {
        ensure(t.all_completed(), || format!("nc={nc}: honest run did not complete"))?;
        for (p, phase) in [(Protocol::Hgaka, Phase::Hgaka), (Protocol::Hga, Phase::Hga)] {
            let (comm, comp) = match p {
                Protocol::Hgaka => (comm_hgaka(*nc).unwrap(), comp_hgaka(*nc).unwrap()),
                Protocol::Hga => (comm_hga(*nc).unwrap(), comp_hga(*nc).unwrap()),
            };
            let measured: OpCounts = t.ops(phase).into();
            ensure(measured == comp.counts, || format!("nc={nc} {p:?}: ops {measured} vs {}", comp.counts))?;
            ensure(t.payload_bits(phase) == comm.bits, || {
                format!("nc={nc} {p:?}: {} bits vs {}", t.payload_bits(phase), comm.bits)
            })?;
        }
        let r = reconcile(t, *nc).unwrap();
        ensure(r.is_clean(), || r.render())?;
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{} honest runs, nc 2..=50, zero discrepancies in {:.1?}", runs.len(), start.elapsed()))
}

fn ac4() -> Check {
    for (nc, t) in honest_runs() {
        let (a, b) = (t.message_count(Phase::Hgaka), t.message_count(Phase::Hga));
        ensure(a == 3 + 2 * nc && b == 2 * nc, || format!("nc={nc}: {a} HGAKA / {b} HGA messages"))?;
    }
    Ok("3+2nc HGAKA and 2nc HGA messages for nc 2..=50".into())
}

fn honest_group(
    rng: &mut impl Rng,
    kp: &RsaKeyPair,
    nc: usize,
) -> (Vec<Nonce>, Vec<num_bigint::BigUint>, EncAuthVeriToken) {
    let mut crng = seeded(rng.gen(), 0);
    let nonces: Vec<Nonce> = (0..nc).map(|_| Nonce::or(&mut crng)).collect();
    let mut m = Meter::new();
    let tokens = nonces.iter().map(|n| or_nonce_token(&mut m, kp.public(), n).unwrap()).collect();
    let veri = EncAuthVeriToken::issue(&mut m, kp.public(), &nonces);
    (nonces, tokens, veri)
}

fn ac5() -> Check {
    let start = Instant::now();
    let per_nc = batch::map((2..=20usize).collect(), |nc| {
        let mut rng = seeded(5, nc as u64);
        let kp = RsaKeyPair::generate(KEYS, &mut rng);
        (0..100)
            .filter(|_| {
                let (_, tokens, veri) = honest_group(&mut rng, &kp, nc);
                let auth = build_group_authenticator(kp.public(), tokens).unwrap();
                homomorphic_group_verify(&mut Meter::new(), &auth, &veri, &kp).unwrap()
            })
            .count()
    });
    let accepted: usize = per_nc.iter().sum();
    ensure(per_nc.iter().all(|&a| a == 100), || format!("completeness per nc: {per_nc:?}"))?;

    // half the substitutes are valid tokens for some other OrNonce, half random residues
    let mut rng = seeded(55, 0);
    let kp = RsaKeyPair::generate(KEYS, &mut rng);
    let mut forged_accepted = 0;
    for trial in 0..1000 {
        let nc = rng.gen_range(2..=20);
        let (_, mut tokens, veri) = honest_group(&mut rng, &kp, nc);
        let i = rng.gen_range(0..nc);
        tokens[i] = if trial % 2 == 0 {
            let other = Nonce::or(&mut seeded(rng.gen(), 1));
            or_nonce_token(&mut Meter::new(), kp.public(), &other).unwrap()
        } else {
            rng.gen_biguint_below(kp.public().modulus())
        };
        let auth = build_group_authenticator(kp.public(), tokens).unwrap();
        if homomorphic_group_verify(&mut Meter::new(), &auth, &veri, &kp).unwrap() {
            forged_accepted += 1;
        }
    }
    let rejection = 1.0 - forged_accepted as f64 / 1000.0;
    ensure(rejection >= 0.999, || format!("soundness {:.1}% rejection", rejection * 100.0))?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "completeness {accepted}/1900, soundness {:.1}% of 1000 substitutions rejected, {:.1?}",
        rejection * 100.0,
        start.elapsed()
    ))
}

fn ac6() -> Check {
    let required = [
        "client-impersonation",
        "as-impersonation",
        "target-impersonation",
        "eavesdrop",
        "replay-msg1",
        "replay-hga-msg1",
        "dos-flood",
        "dos-hash",
    ];
    let results = batch::map(vec![2usize, 3, 10], |nc| {
        let cfg = GroupConfig::with_size(nc).unwrap();
        let reg = KeyRegistry::provision(&cfg, KEYS, &mut seeded(6, nc as u64));
        scenario_suite(&cfg, 6)
            .into_iter()
            .map(|s| {
                let t = run(&cfg, &reg, &s.script, 6).unwrap();
                let dos_rsa =
                    if s.name == "dos-hash" { t.role(Role::Target).map(|(_, a)| a.hga.ad).sum::<u64>() } else { 0 };
                (evaluate(&s, &t), dos_rsa)
            })
            .collect::<Vec<_>>()
    });
    let mut count = 0;
    for (r, dos_rsa) in results.iter().flatten() {
        count += 1;
        ensure(r.passed, || format!("{} nc={}: {:?}", r.name, r.nc, r.failures))?;
        // the honest retry still opens one veri token, the forgery must not
        ensure(dos_rsa <= &1, || format!("dos-hash nc={}: target ran {dos_rsa} RSA decryptions", r.nc))?;
    }
    for name in required {
        let n = results.iter().flatten().filter(|(r, _)| r.name == name).count();
        ensure(n == 3, || format!("{name} ran {n} times"))?;
    }
    Ok(format!("{count} scenario runs over nc 2, 3, 10 matched expectations"))
}

fn ac7() -> Check {
    for nc in 2..=400usize {
        let a = work_factor(Protocol::Hgaka, nc).unwrap().log2_ops;
        let b = work_factor(Protocol::Hga, nc).unwrap().log2_ops;
        ensure((a - (128.0 + (nc as f64).log2())).abs() < 1e-9, || format!("HGAKA nc={nc}: {a}"))?;
        ensure((b - 129.0).abs() < 1e-9, || format!("HGA nc={nc}: {b}"))?;
        ensure(a >= 128.0 && b >= 128.0, || format!("nc={nc} below 2^128"))?;
    }
    Ok("HGAKA 128+log2(nc), HGA 129, floor 128 over nc 2..=400".into())
}

fn ac8() -> Check {
    let t = TimingModel::preset(FITTED_PRESET).unwrap();
    let pcc = |c: OpCounts| pcc_ms(&c, &t).unwrap();
    let points = [
        ("HGAKA nc=5", pcc(comp_hgaka(5).unwrap().counts), 3.0),
        ("HGAKA nc=400", pcc(comp_hgaka(400).unwrap().counts), 41.0),
        ("HGA nc=5", pcc(comp_hga(5).unwrap().counts), 29.0),
        ("HGA nc=400", pcc(comp_hga(400).unwrap().counts), 871.0),
    ];
    let mut parts = Vec::new();
    for (label, got, want) in points {
        ensure((got - want).abs() <= 0.1 * want, || format!("{label}: {got:.3} ms vs {want} ms"))?;
        parts.push(format!("{label} {got:.3} ms"));
    }
    Ok(parts.join(", "))
}

fn ac9() -> Check {
    for nc in 1..=400usize {
        let n = nc as u64;
        let bits = comm_kerberos(nc).unwrap().bits;
        let c = comp_kerberos(nc).unwrap().counts;
        ensure(bits == 6080 * n, || format!("nc={nc}: {bits} bits"))?;
        ensure(c == OpCounts { kse: 2 * n + 10 * n, ksd: n + 12 * n, ..OpCounts::default() }, || {
            format!("nc={nc}: {c}")
        })?;
    }
    let csv = to_csv(&cost_table(2..=400, &TimingModel::preset(FITTED_PRESET).unwrap()).unwrap());
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<u64> = line.split(',').take(5).map(|x| x.parse().unwrap()).collect();
        ensure(f[3] > f[4], || format!("nc={}: M2O {} <= Kerberos {}", f[0], f[3], f[4]))?;
        rows += 1;
    }
    ensure(rows == 399, || format!("{rows} CSV rows"))?;
    Ok("Kerberos 6080nc bits, 12nc KSE + 13nc KSD; M2O above Kerberos in all 399 CSV rows".into())
}

fn ac10() -> Check {
    let pairs = batch::map((0..20u64).collect(), |i| {
        let nc = 2 + (i as usize % 5);
        let cfg = GroupConfig::with_size(nc).unwrap();
        let suite = scenario_suite(&cfg, i);
        let script = &suite[i as usize % suite.len()].script;
        let a = run_fresh(&cfg, KEYS, script, i).unwrap().1;
        let b = run_fresh(&cfg, KEYS, script, i).unwrap().1;
        (a.render() == b.render() && a.dump() == b.dump(), i)
    });
    for (same, i) in &pairs {
        ensure(*same, || format!("trial {i} diverged"))?;
    }
    Ok("20 paired runs byte-identical".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("worked communication totals", ac1),
        ("worked operation counts", ac2),
        ("formula/measurement reconciliation", ac3),
        ("message counts", ac4),
        ("homomorphic verification", ac5),
        ("threat scenarios", ac6),
        ("work factor", ac7),
        ("cost curves under the fitted preset", ac8),
        ("Kerberos baseline", ac9),
        ("determinism", ac10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
