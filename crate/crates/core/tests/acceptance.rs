//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use gibbslab::catalog;
use gibbslab::construct::{build_dual, KnotRule, MOMENT_TOL};
use gibbslab::framelet::{cascade_identity_check, derive_wavelets, oep_check, FilterBank};
use gibbslab::funcmodel::{bspline, FunctionHandle, PiecewisePoly};
use gibbslab::gibbs::{
    bracket_second_deriv, cluster_set, gibbs_at_point, identity_lhs, identity_lhs_shifted,
    identity_rhs, orbit_point, overshoot, parse_point, ClusterSet, GibbsOptions, Point, Verdict,
};
use gibbslab::linalg::CMat;
use gibbslab::quasiproj::{accuracy_order, apply, approximation_rate, Grid, QuasiProjectionPair, Signal};
use gibbslab::sequences::{tail_convolve_sums, tail_sums_closed_form, MatrixSeq, SignLikeSeq};
use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pair(name: &str) -> QuasiProjectionPair {
    catalog::pair(name, 12).unwrap()
}

fn identity_fleet() -> Outcome {
    let start = Instant::now();
    let names = [
        "haar",
        "bspline:2",
        "bspline:3",
        "dual:bspline:2",
        "dual:bspline:3",
        "daubechies:2",
        "daubechies:3",
    ];
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for name in names {
        let p = pair(name);
        let lhs = identity_lhs(&p, 12).map_err(|e| format!("{name}: {e}"))?;
        let rhs = identity_rhs(&p).map_err(|e| format!("{name}: {e}"))?;
        let d = (Complex64::new(lhs, 0.0) - rhs).norm();
        worst = worst.max(d);
        lines.push(format!("{name}={d:.1e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 1e-6 && secs < 10.0,
        format!("max |lhs-rhs| {worst:.2e} in {secs:.2}s [{}]", lines.join(", ")),
    )
}

fn hat_value() -> Outcome {
    let p = pair("bspline:2");
    let lhs = identity_lhs(&p, 12).map_err(|e| e.to_string())?;
    let br = bracket_second_deriv(&p).map_err(|e| e.to_string())?.value;
    check(
        (lhs - 1.0 / 3.0).abs() < 1e-6 && (br - Complex64::new(-1.0 / 3.0, 0.0)).norm() < 1e-8,
        format!("lhs {lhs:.12}, bracket {:.12}", br.re),
    )
}

fn no_gibbs_fleet() -> Outcome {
    let mut names: Vec<String> = (1..=4).map(|m| format!("bspline:{m}")).collect();
    names.extend((2..=4).map(|m| format!("dual:bspline:{m}")));
    let (mut r_max, mut l_min) = (f64::NEG_INFINITY, f64::INFINITY);
    for name in &names {
        let o = overshoot(&pair(name), 0.0, 12).map_err(|e| format!("{name}: {e}"))?;
        r_max = r_max.max(o.r);
        l_min = l_min.min(o.l);
    }
    check(
        r_max <= 1.0 + 1e-9 && l_min >= -1.0 - 1e-9,
        format!("max R(0) {r_max:.12}, min L(0) {l_min:.12} over {} pairs", names.len()),
    )
}

fn daubechies_gibbs() -> Outcome {
    let p = pair("daubechies:3");
    let o12 = overshoot(&p, 0.0, 12).map_err(|e| e.to_string())?;
    let o11 = overshoot(&p, 0.0, 11).map_err(|e| e.to_string())?;
    let opts = GibbsOptions::default();
    let mut verdicts = Vec::new();
    for x0 in ["0/1", "1/3", "irrational"] {
        let rep = gibbs_at_point(&p, parse_point(x0).unwrap(), &opts).map_err(|e| e.to_string())?;
        verdicts.push((x0, rep.verdict, rep.r_x0));
    }
    let all_gibbs = verdicts.iter().all(|v| v.1 == Verdict::Gibbs);
    let stable = (o12.r - o11.r).abs() < 1e-3 && (o12.l - o11.l).abs() < 1e-3;
    check(
        o12.r > 1.01 && all_gibbs && stable,
        format!(
            "R(0) {:.6} (level 11: {:.6}), verdicts {:?}",
            o12.r,
            o11.r,
            verdicts.iter().map(|v| format!("{}:{:?} R={:.4}", v.0, v.1, v.2)).collect::<Vec<_>>()
        ),
    )
}

fn construction_pipeline() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for m in 2..=4 {
        let phi: FunctionHandle = bspline(m).unwrap().into();
        let c = build_dual(&phi, m, &KnotRule::Uniform).map_err(|e| format!("m={m}: {e}"))?;
        let p = c.pair(&phi).unwrap();
        let order = accuracy_order(&p, 6).map_err(|e| e.to_string())?;
        let moment = c.diagnostics.moment_residuals.iter().cloned().fold(0.0, f64::max);
        let rep = gibbs_at_point(&p, Point::Rational(Ratio::from_integer(0)), &GibbsOptions::default())
            .map_err(|e| e.to_string())?;
        ok &= order == m && moment < MOMENT_TOL && rep.verdict == Verdict::NoGibbs;
        parts.push(format!("m={m}: order {order}, moment residual {moment:.1e}, {:?}", rep.verdict));
        if m == 2 {
            let expect = PiecewisePoly::piecewise_constant(vec![0.0, 1.0, 2.0], &[0.5, 0.5]).unwrap();
            let exact = c.phi_tilde == expect;
            ok &= exact;
            parts.push(format!("m=2 dual exact: {exact}"));
        }
    }
    check(ok, parts.join("; "))
}

fn expansion_equivalence() -> Outcome {
    let signals = [
        Signal::ClippedSign { radius: 2.0 },
        Signal::Gaussian { center: 0.3, width: 0.5 },
    ];
    let mut worst = 0.0f64;
    let mut worst_cascade = 0.0f64;
    for name in ["haar", "bspline2-tight"] {
        let bank = catalog::bank(name).unwrap();
        let phi = catalog::bank_function(name, 12).unwrap();
        let df = derive_wavelets(&bank, &phi, &phi).map_err(|e| e.to_string())?;
        let p = df.pair().unwrap();
        let grid = Grid::new(10).with_window(-3.0, 3.0);
        for f in &signals {
            for n in 1..=6 {
                let a = gibbslab::framelet::truncated_expansion(&df, f, n, &grid).map_err(|e| e.to_string())?;
                let q = apply(&p, f, n, 0.0, &grid).map_err(|e| e.to_string())?;
                if a.len() != q.len() || a.origin() != q.origin() {
                    return Err(format!("{name}: grids differ"));
                }
                for (u, v) in a.values()[0].iter().zip(&q.values()[0]) {
                    worst = worst.max((u - v).abs());
                }
            }
        }
        let f = Signal::Gaussian { center: 0.3, width: 0.5 };
        let g = Signal::Gaussian { center: -0.2, width: 0.8 };
        for n in 1..=3 {
            let r = cascade_identity_check(&df, &f, &g, n).map_err(|e| e.to_string())?;
            worst_cascade = worst_cascade.max(r);
        }
    }
    check(
        worst < 1e-6 && worst_cascade < 1e-9,
        format!("sup |A_n f - Q_n f| {worst:.2e}, cascade residual {worst_cascade:.2e}"),
    )
}

fn oep_detection() -> Outcome {
    let haar = catalog::bank("haar").unwrap();
    let base = oep_check(&haar).unwrap();
    let seqs = [haar.a(), haar.a_tilde(), haar.b(), haar.b_tilde()];
    let mut min_detect = f64::INFINITY;
    for which in 0..4 {
        for k in seqs[which].offset()..=seqs[which].last_index() {
            let perturbed: Vec<MatrixSeq> = seqs
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    if i == which {
                        let bump = MatrixSeq::scalar(k, &[1e-3]);
                        s.add(&bump).unwrap()
                    } else {
                        (*s).clone()
                    }
                })
                .collect();
            let bank = FilterBank::new(
                perturbed[0].clone(),
                perturbed[1].clone(),
                perturbed[2].clone(),
                perturbed[3].clone(),
            )
            .unwrap();
            let rep = oep_check(&bank).unwrap();
            min_detect = min_detect.min(rep.residual0.max(rep.residual_pi));
        }
    }
    check(
        base.residual0 < 1e-13 && base.residual_pi < 1e-13 && min_detect > 1e-4,
        format!(
            "haar residuals ({:.1e}, {:.1e}), smallest perturbation residual {min_detect:.2e}",
            base.residual0, base.residual_pi
        ),
    )
}

fn cluster_sets() -> Outcome {
    let r = |p, q| Ratio::new(p, q);
    let cs = |p, q| cluster_set(Point::Rational(r(p, q))).unwrap();
    let mut ok = cs(3, 8) == ClusterSet::Finite(vec![r(0, 1)])
        && cs(1, 3) == ClusterSet::Finite(vec![r(1, 3), r(2, 3)])
        && cs(1, 5) == ClusterSet::Finite(vec![r(1, 5), r(2, 5), r(4, 5), r(3, 5)]);
    // Exact integer doubling over 10⁶ steps against modular exponentiation.
    for x in [r(1, 3), r(1, 5), r(7, 40), r(5, 12)] {
        let q = *x.denom();
        let mut num = x.numer().rem_euclid(q);
        for _ in 0..1_000_000 {
            num = (2 * num) % q;
        }
        let direct = r(num, q);
        let fast = orbit_point(x, 1_000_000);
        let in_set = match cluster_set(Point::Rational(x)).unwrap() {
            ClusterSet::Finite(v) => v.contains(&fast),
            ClusterSet::FullInterval => false,
        };
        ok &= direct == fast && in_set;
    }
    check(ok, "3/8 -> {0}, 1/3 -> {1/3,2/3}, 1/5 -> 4-cycle; orbit at 10^6 exact".into())
}

fn tail_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x51C0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let r = rng.gen_range(1..=2usize);
        let mat = |rng: &mut ChaCha8Rng| {
            let data = (0..r * r)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            CMat::from_vec(r, r, data)
        };
        let tail = mat(&mut rng);
        let flen = rng.gen_range(0..5usize);
        let finite = if flen == 0 {
            MatrixSeq::zero(r, r)
        } else {
            MatrixSeq::new(rng.gen_range(-4..4), (0..flen).map(|_| mat(&mut rng)).collect()).unwrap()
        };
        let dlen = rng.gen_range(2..6usize);
        let mut entries: Vec<CMat> = (0..dlen - 1).map(|_| mat(&mut rng)).collect();
        let total = entries.iter().fold(CMat::zeros(r, r), |acc, e| acc.add(e));
        entries.push(total.scale(Complex64::new(-1.0, 0.0)));
        let d = MatrixSeq::new(rng.gen_range(-4..4), entries).unwrap();
        let c = SignLikeSeq::new(tail, finite).unwrap();
        let direct = tail_convolve_sums(&c, &d).map_err(|e| e.to_string())?;
        let closed = tail_sums_closed_form(&c, &d).map_err(|e| e.to_string())?;
        worst = worst
            .max(direct.sum0.sub(&closed.sum0).max_abs())
            .max(direct.sum1.sub(&closed.sum1).max_abs());
    }
    check(worst < 1e-10, format!("1000 random cases, max deviation {worst:.2e}"))
}

fn approximation_slopes() -> Outcome {
    let levels: Vec<u32> = (2..=7).collect();
    let f = Signal::Sine { frequency: 1.0 };
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, order) in [("haar", 1.0), ("daubechies:3", 3.0)] {
        let p = pair(name);
        let acc = accuracy_order(&p, 6).map_err(|e| e.to_string())? as f64;
        let rep = approximation_rate(&p, &f, &levels, (-4.0, 4.0)).map_err(|e| e.to_string())?;
        ok &= acc == order && (rep.slope - order).abs() <= 0.3;
        parts.push(format!("{name}: accuracy {acc}, slope {:.3}", rep.slope));
    }
    check(ok, parts.join("; "))
}

fn shift_consistency() -> Outcome {
    let mut worst = 0.0f64;
    for name in ["bspline:2", "bspline:3", "dual:bspline:3", "daubechies:3"] {
        let p = pair(name);
        for c in [0.0, 0.25, 1.0 / 3.0] {
            let direct = identity_lhs_shifted(&p, c, 12).map_err(|e| e.to_string())?;
            let shifted = identity_lhs(&p.shifted(c).unwrap(), 12).map_err(|e| e.to_string())?;
            worst = worst.max((direct - shifted).abs());
        }
    }
    check(worst < 1e-8, format!("max route difference {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 moment identity over the pair fleet", identity_fleet),
        ("2 hat pair value 1/3 and bracket -1/3", hat_value),
        ("3 nonnegative and constructed pairs have no overshoot", no_gibbs_fleet),
        ("4 Daubechies D3 overshoots at 0, 1/3 and irrational points", daubechies_gibbs),
        ("5 constructed duals for B2, B3, B4", construction_pipeline),
        ("6 truncated expansion equals quasi-projection", expansion_equivalence),
        ("7 filter-bank identity checker", oep_detection),
        ("8 cluster sets", cluster_sets),
        ("9 tail convolution closed forms", tail_identities),
        ("10 approximation-order slopes", approximation_slopes),
        ("11 shifted-pair consistency", shift_consistency),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.2}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.2}s): {detail}");
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
