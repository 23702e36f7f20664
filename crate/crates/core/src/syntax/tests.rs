use super::ast::*;
use super::*;
use proptest::prelude::*;

const FIG1_CASE: &str = "def f(lists):\n    lists[1].clear()\n    lists[2] += lists[1]\n    return lists[0]\nassert f([[395, 666, 7, 4], [], [4223, 111]]) == [395, 666, 7, 4]\n";

fn function(tree: &Module, i: usize) -> &FunctionDef {
    match &tree.body[i].kind {
        StmtKind::FunctionDef(fd) => fd,
        other => panic!("not a function: {other:?}"),
    }
}

fn renameable(src: &str) -> Vec<String> {
    let table = analyze_scopes(&parse(src).unwrap());
    table.renameable_names().into_iter().map(String::from).collect()
}

#[test]
fn minimal_function() {
    let tree = parse("def f(a):\n    return a").unwrap();
    assert_eq!(tree.body.len(), 1);
    let fd = function(&tree, 0);
    assert_eq!(fd.name.name, "f");
    assert_eq!(fd.params.items.len(), 1);
    let ParamItem::Param(p) = &fd.params.items[0] else { panic!() };
    assert_eq!(p.name.name, "a");
}

#[test]
fn fig1_call_argument_literal() {
    let tree = parse(FIG1_CASE).unwrap();
    let StmtKind::Assert { test, .. } = &tree.body[1].kind else { panic!() };
    let ExprKind::Compare { left, .. } = &test.kind else { panic!() };
    let ExprKind::Call { args, .. } = &left.kind else { panic!() };
    let Arg::Positional(arg) = &args[0] else { panic!() };
    assert_eq!(&FIG1_CASE[arg.span.range()], "[[395, 666, 7, 4], [], [4223, 111]]");
}

#[test]
fn malformed_input_reports_line_one() {
    let err = parse("def f(:").unwrap_err();
    assert_eq!(err.line, 1);
    assert!(err.to_string().starts_with("syntax error at line 1"));
}

#[test]
fn render_round_trip_is_canonical() {
    assert_eq!(render(&parse("x = 1").unwrap()).trim_end(), "x = 1");
    let messy = "def  f( a,b ) :\n\tif a:  # note\n\t\treturn [a ,b]\n\treturn(b)\n";
    assert_eq!(
        render(&parse(messy).unwrap()),
        "def f(a, b):\n    if a:\n        return [a, b]\n    return (b)\n"
    );
}

#[test]
fn render_after_rename_matches_fig1b() {
    let out = crate::mutate::var_norm_sequential(&SourceUnit::new(FIG1_CASE, "fig1")).unwrap();
    let rendered = render(out.mutated.tree().unwrap());
    assert!(rendered.starts_with("def f(var1):\n    var1[1].clear()\n    var1[2] += var1[1]\n    return var1[0]\n"));
    assert!(rendered.ends_with("assert f([[395, 666, 7, 4], [], [4223, 111]]) == [395, 666, 7, 4]\n"));
}

#[test]
fn scopes_descriptive_locals() {
    let src = "def f(lists):\n    length = len(lists)\n    return lists[length - 1]\n";
    assert_eq!(renameable(src), vec!["length", "lists"]);
}

#[test]
fn scopes_builtin_and_function_name() {
    let table = analyze_scopes(&parse("def f(x): print(x)").unwrap());
    assert_eq!(table.renameable_names().into_iter().collect::<Vec<_>>(), vec!["x"]);
    assert_eq!(table.excluded.get("print"), Some(&ExclusionReason::Builtin));
    assert_eq!(table.excluded.get("f"), Some(&ExclusionReason::FunctionName));
}

#[test]
fn scopes_global_declared() {
    let table = analyze_scopes(&parse("def f():\n    global g\n    g = 1").unwrap());
    assert!(table.bindings.is_empty());
    assert_eq!(table.excluded.get("g"), Some(&ExclusionReason::GlobalOrNonlocal));
}

#[test]
fn scopes_binding_kinds_and_references() {
    let src = "def f(a):\n    for i in a:\n        pass\n    with open(a) as h:\n        pass\n    try:\n        pass\n    except ValueError as e:\n        pass\n    return [c for c in a]\n";
    let table = analyze_scopes(&parse(src).unwrap());
    let kinds: Vec<(&str, BindingKind)> = table.bindings.iter().map(|b| (b.name.as_str(), b.kind)).collect();
    assert_eq!(
        kinds,
        vec![
            ("a", BindingKind::Parameter),
            ("i", BindingKind::LoopTarget),
            ("h", BindingKind::WithTarget),
            ("e", BindingKind::ExceptTarget),
            ("c", BindingKind::ComprehensionTarget),
        ]
    );
    for b in &table.bindings {
        for r in &b.refs {
            assert_eq!(&src[r.range()], b.name);
        }
    }
    assert_eq!(table.bindings[0].refs.len(), 4);
}

#[test]
fn scopes_exclusions_are_disjoint_from_bindings() {
    let src = "import os as o\nclass K:\n    z = 1\ndef f(real, n, o2):\n    def g(m):\n        nonlocal n\n        return m\n    return real.real + sorted(n, key=o2) + [o.sep, K.z]\n";
    let table = analyze_scopes(&parse(src).unwrap());
    for b in &table.bindings {
        assert!(!table.excluded.contains_key(&b.name), "{}", b.name);
    }
    assert_eq!(table.excluded.get("real"), Some(&ExclusionReason::Attribute));
    assert_eq!(table.excluded.get("key"), Some(&ExclusionReason::KeywordArgument));
    assert_eq!(table.excluded.get("o"), Some(&ExclusionReason::Import));
    assert_eq!(table.excluded.get("K"), Some(&ExclusionReason::ClassName));
    assert_eq!(table.excluded.get("g"), Some(&ExclusionReason::FunctionName));
    assert_eq!(table.excluded.get("n"), Some(&ExclusionReason::GlobalOrNonlocal));
    assert_eq!(renameable(src), vec!["m", "o2"]);
}

#[test]
fn scopes_ignore_module_and_class_bindings() {
    assert!(renameable("x = 1\nfor y in []:\n    pass\nclass C:\n    w = 2\n").is_empty());
}

#[test]
fn source_unit_caches_tree() {
    let u = SourceUnit::new("def f(:", "bad");
    assert!(u.tree().is_err());
    let good = SourceUnit::new("x = 1\n", "ok");
    assert!(std::ptr::eq(good.tree().unwrap(), good.tree().unwrap()));
    let copy = good.clone();
    assert_eq!(copy.tree().unwrap(), good.tree().unwrap());
}

#[test]
fn round_trips_assorted_constructs() {
    let src = r#"
import math
from collections import defaultdict as dd

@staticmethod
def g(a, /, b=2, *args, c: int = 3, **kw) -> list:
    x = lambda y, z=1: y + z
    s = {k: v for k, v in kw.items() if v}
    t = f"{a!r:>{b}} {x(1)=}"
    u = a if b else -c ** 2
    while (n := len(args)) > 0:
        args = args[1:]
    match a:
        case [1, *rest] if rest:
            pass
        case {"k": v, **others}:
            pass
        case Point(x=0) | None:
            pass
        case _:
            pass
    try:
        raise ValueError("x") from None
    except (TypeError, ValueError) as e:
        del e
    finally:
        pass
    async def h():
        async with a as b:
            await b
        return [i async for i in b]
    return not a and b or c, (yield), ...
"#;
    let tree = parse(src).unwrap();
    assert_eq!(parse(&render(&tree)).unwrap(), tree);
}

fn expr_strategy() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|n| n.to_string()),
        prop::sample::select(vec!["a", "b", "xs", "True", "None", "'s'", "1.5"]).prop_map(String::from),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "//", "%", "<<", "&", "|", "**"]), inner.clone())
                .prop_map(|(l, op, r)| format!("{l} {op} {r}")),
            (inner.clone(), prop::sample::select(vec!["<", "==", "is not", "not in", "and", "or"]), inner.clone())
                .prop_map(|(l, op, r)| format!("{l} {op} {r}")),
            inner.clone().prop_map(|e| format!("({e})")),
            inner.clone().prop_map(|e| format!("-{e}")),
            inner.clone().prop_map(|e| format!("(not {e})")),
            prop::collection::vec(inner.clone(), 0..3).prop_map(|v| format!("[{}]", v.join(", "))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("xs[{a}:{b}]")),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(a, b, c)| format!("({a} if {b} else {c})")),
            inner.clone().prop_map(|e| format!("len({e})")),
            inner.prop_map(|e| format!("[a for a in xs if {e}]")),
        ]
    })
}

fn program_strategy() -> impl Strategy<Value = String> {
    let stmt = prop_oneof![
        expr_strategy().prop_map(|e| format!("a = {e}")),
        expr_strategy().prop_map(|e| format!("if {e}:\n        b = 1\n    else:\n        b = 2")),
        expr_strategy().prop_map(|e| format!("for a in {e}:\n        continue")),
        expr_strategy().prop_map(|e| format!("return {e}")),
    ];
    prop::collection::vec(stmt, 1..5).prop_map(|stmts| format!("def f(a, b, xs):\n    {}\n", stmts.join("\n    ")))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn render_parse_round_trip(src in program_strategy()) {
        let tree = parse(&src).unwrap();
        let rendered = render(&tree);
        prop_assert_eq!(parse(&rendered).unwrap(), tree);
        // Canonical output is a fixed point.
        prop_assert_eq!(render(&parse(&rendered).unwrap()), rendered);
    }

    #[test]
    fn reference_spans_point_at_spelling(src in program_strategy()) {
        let table = analyze_scopes(&parse(&src).unwrap());
        for b in &table.bindings {
            for r in &b.refs {
                prop_assert_eq!(&src[r.range()], b.name.as_str());
            }
        }
    }
}
