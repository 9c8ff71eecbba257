use fockweyl::bounds::{certify_symbol, cv_bound, diff_bound, operator_norm_lower, trig_cert, CertGrid, SymbolClassCert};
use fockweyl::linalg::{c, hermitian_deficit};
use fockweyl::quantize::{weyl_matrix, GaussTerm, QuantizationConfig, Symbol, TrigAtom, WeylBackend};
use fockweyl::symbols::{cosine_atoms, lattice_gaussian, LatticeNorm, LatticeWindow};
use fockweyl::{ModeSet, Truncation};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn atom1() -> impl Strategy<Value = TrigAtom> {
    (-1.5f64..1.5, -1.5f64..1.5, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(y, e, a, b)| TrigAtom::new(vec![y], vec![e], c(a, b)))
}

fn atom2() -> impl Strategy<Value = TrigAtom> {
    prop::array::uniform4(-1.0f64..1.0).prop_flat_map(|f| {
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(move |(a, b)| TrigAtom::new(vec![f[0], f[1]], vec![f[2], f[3]], c(a, b)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trig_certificates_always_hold(atoms in prop::collection::vec(atom2(), 1..4), order in prop::sample::select(vec![2u32, 4])) {
        let modes = ModeSet::range(2);
        let f = Symbol::trig(modes.clone(), atoms.clone()).unwrap();
        let cert = trig_cert(&modes, &atoms, order).unwrap();
        let r = certify_symbol(&f, &cert, &CertGrid::random(2, 12, 3.0, 1)).unwrap();
        prop_assert!(r.passes(1e-12), "{:?}", r);
    }

    #[test]
    fn cv_bound_grows_with_scope(eps in prop::collection::vec(0.0f64..2.0, 3), h in 0.01f64..1.0, m in 0.1f64..5.0) {
        let modes = ModeSet::range(3);
        let cert = SymbolClassCert::new(m, modes.clone(), eps, 2).unwrap();
        let mut last = cv_bound(&cert, h, &ModeSet::empty()).unwrap();
        prop_assert_eq!(last, m);
        for k in 1..=3 {
            let b = cv_bound(&cert, h, &ModeSet::range(k)).unwrap();
            prop_assert!(b >= last);
            last = b;
        }
    }

    #[test]
    fn diff_bound_vanishes_only_on_equal_sets(eps in prop::collection::vec(0.01f64..1.0, 3), h in 0.01f64..1.0, k in 0u32..3) {
        let modes = ModeSet::range(3);
        let cert = SymbolClassCert::new(1.0, modes.clone(), eps, 4).unwrap();
        let a = ModeSet::range(k);
        prop_assert_eq!(diff_bound(&cert, &a, &a, h).unwrap(), 0.0);
        let d = diff_bound(&cert, &a, &ModeSet::range(k + 1), h).unwrap();
        prop_assert!(d > 0.0);
        // a larger Λ′ only adds terms
        prop_assert!(diff_bound(&cert, &a, &modes, h).unwrap() >= d);
    }

    #[test]
    fn real_symbols_give_hermitian_matrices(y in -1.5f64..1.5, e in -1.5f64..1.5, amp in -2.0f64..2.0, h in 0.1f64..1.0) {
        let f = Symbol::trig(ModeSet::range(1), cosine_atoms(vec![y], vec![e], amp)).unwrap();
        let cfg = QuantizationConfig::new(h, Truncation::boxed(ModeSet::range(1), 8)).unwrap();
        let w = weyl_matrix(&f, &cfg, WeylBackend::Exact).unwrap();
        prop_assert!(hermitian_deficit(w.matrix()) < 1e-8);
    }

    #[test]
    fn weyl_norm_below_trig_bound(atoms in prop::collection::vec(atom1(), 1..4), h in 0.1f64..1.0) {
        let modes = ModeSet::range(1);
        let f = Symbol::trig(modes.clone(), atoms.clone()).unwrap();
        let cert = trig_cert(&modes, &atoms, 2).unwrap();
        let cfg = QuantizationConfig::new(h, Truncation::boxed(modes.clone(), 10)).unwrap();
        let w = weyl_matrix(&f, &cfg, WeylBackend::Exact).unwrap();
        let n = operator_norm_lower(w.matrix(), 1e-9, 5000).unwrap().value;
        // the atom sum bounds the exact norm; the product bound is weaker still
        prop_assert!(n <= cert.m_bound * (1.0 + 1e-6));
        prop_assert!(n <= cv_bound(&cert, h, &modes).unwrap());
    }

    #[test]
    fn lattice_gaussian_values_in_unit_interval(lambda in -0.45f64..0.45, pts in prop::collection::vec(prop::array::uniform6(-5.0f64..5.0), 20)) {
        let w = LatticeWindow::line(0, 2).unwrap();
        let lg = lattice_gaussian(&w, &[1.0, 0.7, 0.4], lambda, LatticeNorm::Sup).unwrap();
        for p in pts {
            let v = lg.symbol.eval(&p);
            prop_assert!(v.re >= 0.0 && v.re <= 1.0 && v.im == 0.0);
        }
    }
}

/// Leading blocks only add rows and columns, so the estimate cannot drop.
#[test]
fn norm_estimate_monotone_in_cap() {
    let one = ModeSet::range(1);
    let symbols = [
        Symbol::trig(one.clone(), cosine_atoms(vec![0.7], vec![0.4], 1.0)).unwrap(),
        Symbol::gauss(one.clone(), vec![GaussTerm { coeff: 1.0, form: DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.8]) }]).unwrap(),
        Symbol::trig(
            one.clone(),
            vec![TrigAtom::new(vec![1.1], vec![-0.3], c(0.4, 0.3)), TrigAtom::new(vec![-0.2], vec![0.9], c(-0.6, 0.0))],
        )
        .unwrap(),
    ];
    for f in &symbols {
        let mut last = 0.0;
        for cap in (4..=16).step_by(2) {
            let cfg = QuantizationConfig::new(0.5, Truncation::boxed(one.clone(), cap)).unwrap();
            let w = weyl_matrix(f, &cfg, WeylBackend::Exact).unwrap();
            let n = operator_norm_lower(w.matrix(), 1e-12, 20_000).unwrap().value;
            assert!(n >= last - 1e-9, "{}: cap {cap} gave {n} < {last}", f.label);
            last = n;
        }
    }
}

/// Leading block of a bigger truncation equals the smaller truncation.
#[test]
fn matrices_are_prefix_stable() {
    let two = ModeSet::range(2);
    let f = Symbol::trig(two.clone(), cosine_atoms(vec![0.5, -0.3], vec![0.2, 0.6], 1.0)).unwrap();
    let small = QuantizationConfig::new(0.7, Truncation::boxed(two.clone(), 3)).unwrap();
    let big = QuantizationConfig::new(0.7, Truncation::boxed(two.clone(), 5)).unwrap();
    let ws = weyl_matrix(&f, &small, WeylBackend::Exact).unwrap();
    let wb = weyl_matrix(&f, &big, WeylBackend::Exact).unwrap();
    let bs = small.basis();
    let bb = big.basis();
    for i in 0..bs.len() {
        for j in 0..bs.len() {
            let (bi, bj) = (bb.index_of(bs.dense(i)).unwrap(), bb.index_of(bs.dense(j)).unwrap());
            assert!((ws.matrix()[(i, j)] - wb.matrix()[(bi, bj)]).norm() < 1e-12);
        }
    }
}
