use implicitforge::expr::{format, parse, BinaryOp, Expr, UnaryOp, Var};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        any::<f64>()
            .prop_filter("finite", |v| v.is_finite())
            .prop_map(Expr::Const),
        (-5i32..6).prop_map(|v| Expr::Const(v as f64)),
        prop::sample::select(Var::ALL.to_vec()).prop_map(Expr::Var),
        prop::sample::select(vec!["m", "k", "t2", "alpha_1"]).prop_map(|n| Expr::param(n).unwrap()),
    ]
}

fn tree() -> impl Strategy<Value = Expr> {
    let unary = vec![
        UnaryOp::Neg,
        UnaryOp::Abs,
        UnaryOp::Sqrt,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Cot,
        UnaryOp::Asin,
        UnaryOp::Acos,
        UnaryOp::Atan,
        UnaryOp::Arccot,
        UnaryOp::Sign,
    ];
    let binary = vec![
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Pow,
    ];
    leaf().prop_recursive(8, 64, 2, move |inner| {
        prop_oneof![
            (prop::sample::select(unary.clone()), inner.clone()).prop_map(|(op, a)| Expr::unary(op, a)),
            (prop::sample::select(binary.clone()), inner.clone(), inner).prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn printed_form_parses_back(e in tree()) {
        let printed = format(&e);
        let back = parse(&printed).map_err(|err| TestCaseError::fail(format!("{printed}: {err}")))?;
        prop_assert_eq!(&back, &e, "printed as {}", printed);
        // Canonical form is a fixed point.
        prop_assert_eq!(format(&back), printed);
    }
}
