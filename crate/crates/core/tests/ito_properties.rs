use num_complex::Complex;
use proptest::prelude::*;
use qkpz_core::ito::{drift, ito_product, ItoExpression, ItoTerm, NoiseFactor};
use qkpz_core::linalg::CMatrix;
use qkpz_core::operator::OperatorMatrix;

type Op = OperatorMatrix<f64>;
type Expr = ItoExpression<f64>;

const DIM: usize = 4;
const EDGES: usize = 2;

fn matrix() -> impl Strategy<Value = Op> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), DIM * DIM).prop_map(|v| {
        let data = v.into_iter().map(|(re, im)| Complex::new(re, im)).collect();
        OperatorMatrix::new(CMatrix::from_row_major(DIM, data))
    })
}

fn factor() -> impl Strategy<Value = NoiseFactor> {
    (1..=EDGES, any::<bool>()).prop_map(|(e, w)| if w { NoiseFactor::w(e) } else { NoiseFactor::wbar(e) })
}

fn term() -> impl Strategy<Value = ItoTerm<f64>> {
    let monomial = prop_oneof![
        Just((Vec::new(), 0u8)),
        Just((Vec::new(), 1u8)),
        factor().prop_map(|f| (vec![f], 0u8)),
        (factor(), factor()).prop_map(|(a, b)| (vec![a, b], 0u8)),
    ];
    (matrix(), monomial).prop_map(|(c, (noise, dt))| ItoTerm::new(c, noise, dt))
}

fn expression(alpha: f64) -> impl Strategy<Value = Expr> {
    prop::collection::vec(term(), 1..5)
        .prop_map(move |terms| ItoExpression::normalized(DIM, terms, alpha).unwrap())
}

fn close(a: &Expr, b: &Expr) -> bool {
    a.distance(b).unwrap() < 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_is_bilinear(
        alpha in 0.0..3.0f64,
        a in expression(0.0),
        b in expression(0.0),
        c in expression(0.0),
        s in -2.0..2.0f64,
    ) {
        let left = ito_product(&a.add(&b).unwrap(), &c, alpha).unwrap();
        let split = ito_product(&a, &c, alpha).unwrap().add(&ito_product(&b, &c, alpha).unwrap()).unwrap();
        prop_assert!(close(&left, &split));
        let right = ito_product(&c, &a.add(&b).unwrap(), alpha).unwrap();
        let split = ito_product(&c, &a, alpha).unwrap().add(&ito_product(&c, &b, alpha).unwrap()).unwrap();
        prop_assert!(close(&right, &split));
        let scaled = ito_product(&a.scale_real(s), &c, alpha).unwrap();
        prop_assert!(close(&scaled, &ito_product(&a, &c, alpha).unwrap().scale_real(s)));
    }

    #[test]
    fn product_keeps_operator_order(alpha in 0.0..3.0f64, a in matrix(), b in matrix(), edge in 1..=EDGES) {
        let adw = Expr::noise_term(a.clone(), NoiseFactor::w(edge));
        let bdwbar = Expr::noise_term(b.clone(), NoiseFactor::wbar(edge));
        let forward = drift(&ito_product(&adw, &bdwbar, alpha).unwrap());
        let backward = drift(&ito_product(&bdwbar, &adw, alpha).unwrap());
        let ab = &a * &b;
        let ba = &b * &a;
        prop_assert!(forward.frobenius_distance(&ab.scale_real(1.0 + alpha)) < 1e-12);
        prop_assert!(backward.frobenius_distance(&ba.scale_real(alpha)) < 1e-12);
        // forward - backward = alpha [A, B] + A B
        let expected = &a.commutator(&b).scale_real(alpha) + &ab;
        prop_assert!((&forward - &backward).frobenius_distance(&expected) < 1e-12);
    }

    #[test]
    fn normalization_is_idempotent(alpha in 0.0..3.0f64, terms in prop::collection::vec(term(), 0..6)) {
        let once = Expr::normalized(DIM, terms, alpha).unwrap();
        let twice = once.renormalized(alpha).unwrap();
        prop_assert_eq!(&once, &twice);
        for t in once.terms() {
            prop_assert!(t.noise.len() + 2 * t.dt_power as usize <= 2);
        }
    }
}
