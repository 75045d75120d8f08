use sqcat::analytics::{
    beta_opt_sq, f1, f3, r1_opt, r3_opt, success_probability, t1_opt, Branch, RealisticParams,
};
use sqcat::fock::C64;
use sqcat::optimize::{
    amplification_comparison, default_alpha_grid, maximize_1d, maximize_nd, sweep,
    tolerance_curves, Bracket, CurveAxis, OptimizationReport, Scheme, SweepSpec,
};

fn run(scheme: Scheme, grid: Vec<f64>) -> OptimizationReport {
    sweep(&SweepSpec::new(grid, scheme).unwrap())
}

fn at(report: &OptimizationReport, alpha: f64) -> &sqcat::optimize::ReportRow {
    report
        .rows
        .iter()
        .find(|r| (r.alpha - alpha).abs() < 1e-9)
        .expect("grid point")
}

#[test]
fn golden_section_recovers_closed_optima() {
    let a = C64::from(6f64.sqrt());
    let b = Bracket::new(1e-9, 1.0 - 1e-9, 1e-10).unwrap();
    let opt = maximize_1d(|r| f1(a, r).unwrap(), &b).unwrap();
    assert!((opt.x - r1_opt(a).unwrap()).abs() < 1e-8);
    let b2 = beta_opt_sq(a, Branch::Plus).unwrap();
    let opt = maximize_1d(|r| f3(a, r, b2).unwrap(), &b).unwrap();
    assert!((opt.x - r3_opt(a, Branch::Plus).unwrap()).abs() < 1e-8);
}

#[test]
fn simplex_recovers_three_photon_optimum() {
    let a = C64::from(6f64.sqrt());
    let f = |v: &[f64]| f3(a, v[0], C64::from(v[1])).unwrap_or(f64::NAN);
    let opt = maximize_nd(f, &[0.5, 1.0], &[0.05, 0.1]).unwrap();
    assert!((opt.x[0] - r3_opt(a, Branch::Plus).unwrap()).abs() < 1e-6);
    assert!((opt.x[1] - beta_opt_sq(a, Branch::Plus).unwrap().re).abs() < 1e-6);
    assert!(opt.is_stationary());
}

#[test]
fn simplex_recovers_optimal_t1() {
    let x = 0.5;
    let p = |t: &[f64]| {
        RealisticParams::new(x / (t[0] * t[1] * t[2]), t[0], t[1], t[2], C64::default())
            .and_then(|p| success_probability(&p))
            .unwrap_or(f64::NAN)
    };
    let opt = maximize_nd(p, &[0.8, 0.9, 0.9], &[0.02, 0.02, 0.02]).unwrap();
    let t1 = t1_opt(x, opt.x[1], opt.x[2]).unwrap();
    assert!((opt.x[0] - t1).abs() < 1e-6, "{} vs {}", opt.x[0], t1);
}

#[test]
fn closed_form_rows_match_formulas() {
    let grid = default_alpha_grid();
    let one = run(Scheme::OnePhoton, grid.clone());
    let three = run(Scheme::ThreePhoton, grid);
    for (o, t) in one.rows.iter().zip(&three.rows) {
        let a = C64::from(o.alpha);
        assert!((o.r.unwrap() - r1_opt(a).unwrap()).abs() < 1e-8);
        assert!((t.r.unwrap() - r3_opt(a, Branch::Plus).unwrap()).abs() < 1e-8);
        assert!((t.beta_sq.unwrap() - beta_opt_sq(a, Branch::Plus).unwrap().re).abs() < 1e-8);
        assert!(o.converged && t.converged, "{o:?} {t:?}");
    }
    assert!((at(&one, 1.9).fidelity.unwrap() - 0.90).abs() < 0.005);
}

#[test]
fn fidelity_dominance_on_default_grid() {
    let grid = default_alpha_grid();
    let one = run(Scheme::OnePhoton, grid.clone());
    let three = run(Scheme::ThreePhoton, grid.clone());
    let zero_beta = run(Scheme::ThreePhotonBetaZero, grid.clone());
    let even0 = run(Scheme::EvenZero, grid.clone());
    let even2 = run(Scheme::EvenTwo, grid);
    for i in 0..one.rows.len() {
        let f1 = one.rows[i].fidelity.unwrap();
        let f3 = three.rows[i].fidelity.unwrap();
        let fz = zero_beta.rows[i].fidelity.unwrap();
        let e0 = even0.rows[i].fidelity.unwrap();
        let e2 = even2.rows[i].fidelity.unwrap();
        let a = one.rows[i].alpha;
        assert!(f3 >= fz - 1e-9, "alpha {a}: {f3} < {fz}");
        assert!(fz >= f1 - 1e-9, "alpha {a}: {fz} < {f1}");
        assert!(e2 >= e0 - 1e-9, "alpha {a}: {e2} < {e0}");
        for rep in [&zero_beta, &even0, &even2] {
            let row = &rep.rows[i];
            assert!(row.converged, "{:?} at {a}: {row:?}", rep.scheme);
        }
    }
    let i = one.rows.iter().position(|r| (r.alpha - 2.45).abs() < 1e-9).unwrap();
    assert!(even2.rows[i].fidelity.unwrap() < three.rows[i].fidelity.unwrap());
}

#[test]
fn success_probability_sweeps() {
    let grid = default_alpha_grid();
    let rep = run(Scheme::SuccessBetaZero, grid.clone());
    let bad: Vec<_> = rep.rows.iter().filter(|r| r.error.is_some() || !r.converged).collect();
    assert!(bad.is_empty(), "{bad:#?}");
    let sqrt6 = sweep(&SweepSpec::new(vec![6f64.sqrt()], Scheme::SuccessBetaZero).unwrap());
    let p = sqrt6.rows[0].probability.unwrap();
    assert!((p - 1.6e-2).abs() < 0.3e-2, "{p}");
    let beta = run(Scheme::SuccessBeta, grid);
    let ok = beta.rows.iter().filter(|r| r.error.is_none()).count();
    assert!(ok > 0);
}

#[test]
fn sweeps_are_deterministic() {
    let grid: Vec<f64> = (1..=8).map(|k| 0.5 * k as f64).collect();
    for scheme in [Scheme::EvenTwo, Scheme::SuccessBetaZero, Scheme::ThreePhotonBetaZero] {
        let a = run(scheme, grid.clone());
        let b = run(scheme, grid.clone());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

#[test]
fn tolerance_curve_markers() {
    let curves = tolerance_curves(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert_eq!(curves.len(), 10);
    for c in &curves {
        let a = C64::from(c.alpha);
        let r3 = r3_opt(a, Branch::Plus).unwrap();
        let b = beta_opt_sq(a, Branch::Plus).unwrap().re.sqrt();
        let f = f3(a, r3, C64::from(b * b)).unwrap();
        let expected = match c.axis {
            CurveAxis::Squeezing => r3,
            CurveAxis::Displacement => b,
        };
        assert!((c.max_at - expected).abs() < 1e-8, "{:?} {} vs {}", c.axis, c.max_at, expected);
        assert!((c.max_fidelity - f).abs() < 1e-12);
    }
}

#[test]
fn displacement_curve_touches_zero_for_small_alpha() {
    let curves = tolerance_curves(&[1.0]).unwrap();
    let c = curves.iter().find(|c| c.axis == CurveAxis::Displacement).unwrap();
    let min = c.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    assert!(min < 1e-3, "{min}");
    // and the exact root lies inside the plotted range
    let r3 = r3_opt(C64::from(1.0), Branch::Plus).unwrap();
    let root = (3.0 * r3 + r3 * r3).sqrt();
    assert!(root <= c.points.last().unwrap().0);
}

#[test]
fn zero_crossing_is_relatively_closer_for_small_alpha() {
    let distance = |alpha: f64| {
        let a = C64::from(alpha);
        let r3 = r3_opt(a, Branch::Plus).unwrap();
        let b = beta_opt_sq(a, Branch::Plus).unwrap().re.sqrt();
        ((3.0 * r3 + r3 * r3 * alpha * alpha).sqrt() - b).abs() / b
    };
    assert!(distance(1.0) < distance(5.0));
}

#[test]
fn amplification_numbers() {
    let amp = amplification_comparison(1.5f64.sqrt()).unwrap();
    assert!((amp.probability - 0.13).abs() < 0.01, "{amp:?}");
    assert!(amp.probability_pow4 / 3e-4 < 1.5 && 3e-4 / amp.probability_pow4 < 1.5);
    let big = amplification_comparison(3f64.sqrt()).unwrap();
    assert!((big.fidelity - 0.93).abs() < 0.005);
}
