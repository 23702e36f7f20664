use super::*;
use crate::syntax::{parse, SourceUnit};

const FIG1: &str = "def f(lists):\n    lists[1].clear()\n    lists[2] += lists[1]\n    return lists[0]\n";

fn unit(text: &str) -> SourceUnit {
    SourceUnit::new(text, "test/0")
}

fn line(text: &str, n: usize) -> &str {
    text.lines().nth(n).unwrap().trim()
}

#[test]
fn tags_round_trip() {
    for k in MutationKind::ALL {
        assert_eq!(k.tag().parse::<MutationKind>().unwrap(), k);
    }
    assert!("loopify".parse::<MutationKind>().is_err());
}

#[test]
fn combo_tags_expand_in_paper_order() {
    let fuv = MutationPlan::parse("fuv").unwrap();
    assert_eq!(
        fuv.kinds,
        vec![MutationKind::For2While, MutationKind::ConstUnfold, MutationKind::VarNormII]
    );
    assert_eq!(MutationPlan::parse("auv").unwrap().kinds, AUV.to_vec());
    assert_eq!(MutationPlan::parse("afu").unwrap().kinds, AFU.to_vec());
    let custom = MutationPlan::parse("condaug+varnorm1").unwrap();
    assert_eq!(custom.kinds, vec![MutationKind::CondAug, MutationKind::VarNormI]);
    assert!(MutationPlan::parse("condaug+condaug").is_err());
    let list = MutationPlan::parse_list("for2while,constunfold,varnorm2").unwrap();
    assert_eq!(list.len(), 3);
    assert!(MutationPlan::parse_list(" , ").is_err());
}

#[test]
fn var_norm_sequential_renames_fig1() {
    let out = var_norm_sequential(&unit(FIG1)).unwrap();
    assert!(out.applied);
    assert_eq!(
        out.mutated.text,
        "def f(var1):\n    var1[1].clear()\n    var1[2] += var1[1]\n    return var1[0]\n"
    );
}

#[test]
fn var_norm_sequential_orders_by_first_binding() {
    let src = "def f():\n    length = 3\n    i = 0\n    return length + i\n";
    let out = var_norm_sequential(&unit(src)).unwrap();
    assert_eq!(
        out.mutated.text,
        "def f():\n    var1 = 3\n    var2 = 0\n    return var1 + var2\n"
    );
}

#[test]
fn var_norm_sequential_skips_taken_indices() {
    let src = "var1 = 10\ndef f(x):\n    return x + var1\n";
    let out = var_norm_sequential(&unit(src)).unwrap();
    assert_eq!(out.mutated.text, "var1 = 10\ndef f(var2):\n    return var2 + var1\n");
}

#[test]
fn var_norm_sequential_is_idempotent() {
    let src = "def f(a, b):\n    c = [x for x in a]\n    for i in b:\n        c.append(i)\n    return c\n";
    let once = var_norm_sequential(&unit(src)).unwrap().mutated;
    let twice = var_norm_sequential(&once).unwrap();
    assert_eq!(twice.mutated.text, once.text);
    assert!(!twice.applied);
}

#[test]
fn var_norm_leaves_excluded_names() {
    let src = "import math\ndef f(x, key):\n    global g\n    g = x\n    return sorted(x, key=key) + [math.pi, x.real]\n";
    let out = var_norm_sequential(&unit(src)).unwrap();
    // `key` is a keyword argument name and `real` an attribute elsewhere.
    assert_eq!(
        out.mutated.text,
        "import math\ndef f(var1, key):\n    global g\n    g = var1\n    return sorted(var1, key=key) + [math.pi, var1.real]\n"
    );
}

#[test]
fn var_norm_respects_case_keyword_arguments() {
    let src = "def f(text, n):\n    return text * n\n";
    let ctx = CaseContext {
        keyword_args: vec!["n".into()],
    };
    let out = apply_with(&unit(src), MutationKind::VarNormI, &MutationConfig::default(), &ctx).unwrap();
    assert_eq!(out.mutated.text, "def f(var1, n):\n    return var1 * n\n");
}

#[test]
fn var_norm_skips_dynamic_name_access() {
    let src = "def f(x):\n    return locals()['x']\n";
    let out = var_norm_sequential(&unit(src)).unwrap();
    assert!(!out.applied);
    assert_eq!(out.skipped[0].reason, "dynamic-name-access");
}

#[test]
fn var_norm_not_applicable_without_bindings() {
    let out = var_norm_sequential(&unit("def f():\n    return 1\n")).unwrap();
    assert!(!out.applied);
    assert_eq!(out.mutated.text, "def f():\n    return 1\n");
}

#[test]
fn var_norm_random_is_injective_and_deterministic() {
    let src = "def f(a, b, c):\n    d = a + b\n    e = [q for q in c]\n    return d, e\n";
    let cfg = MutationConfig::with_seed(7);
    let one = var_norm_random(&unit(src), &cfg).unwrap();
    let two = var_norm_random(&unit(src), &cfg).unwrap();
    assert_eq!(one.mutated.text, two.mutated.text);
    let table = crate::syntax::analyze_scopes(one.mutated.tree().unwrap());
    let names: Vec<&str> = table.bindings.iter().map(|b| b.name.as_str()).collect();
    assert_eq!(names.len(), 6);
    let distinct: std::collections::BTreeSet<&str> = names.iter().copied().collect();
    assert_eq!(distinct.len(), 6);
    for n in names {
        assert_eq!(n.len(), 8);
        assert!(n.chars().all(|c| c.is_ascii_lowercase()));
    }
    let other = var_norm_random(&unit(src), &MutationConfig::with_seed(8)).unwrap();
    assert_ne!(other.mutated.text, one.mutated.text);
}

#[test]
fn var_norm_random_honours_length() {
    let mut cfg = MutationConfig::with_seed(1);
    cfg.random_name_length = 5;
    let out = var_norm_random(&unit("def f(a):\n    return a\n"), &cfg).unwrap();
    let name = &out.edits[0].new;
    assert_eq!(name.len(), 5);
    cfg.random_name_length = 3;
    assert!(var_norm_random(&unit("def f(a):\n    return a\n"), &cfg).is_err());
}

#[test]
fn const_unfold_paper_example() {
    let src = "def f(lists, i):\n    lists[i] = 5\n    return lists\n";
    let mut cfg = MutationConfig::with_seed(1);
    cfg.unfold_offset_range = (2, 2);
    let out = const_unfold(&SourceUnit::new(src, "paper/fig-constunfold"), &cfg).unwrap();
    assert_eq!(line(&out.mutated.text, 1), "lists[i] = 7 - 2");
}

#[test]
fn const_unfold_parenthesizes_by_precedence() {
    let src = "def f(x):\n    return x * 5 - -3, x << 2, x[4].real, 6 .bit_length()\n";
    let out = const_unfold(&unit(src), &MutationConfig::with_seed(3)).unwrap();
    let t = crate::syntax::parse(&out.mutated.text).unwrap();
    let crate::syntax::ast::StmtKind::FunctionDef(fd) = &t.body[0].kind else { panic!() };
    let ret = crate::syntax::render(&crate::syntax::ast::Module { body: fd.body.clone() });
    // Arithmetic and unary operands are parenthesized; shift operands and
    // subscripts are not; attribute bases are.
    let pat = |s: &str| s.chars().filter(|c| *c == '(').count();
    assert!(pat(&ret) >= 4, "{ret}");
    assert_eq!(out.edits.len(), 5);
    for e in &out.edits {
        let n: i64 = e.old.parse().unwrap();
        let inner = e.new.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = inner.split(' ').collect();
        let (a, b): (i64, i64) = (parts[0].parse().unwrap(), parts[2].parse().unwrap());
        let v = if parts[1] == "-" { a - b } else { a + b };
        assert_eq!(v, n, "{} -> {}", e.old, e.new);
        assert!((1..=9).contains(&b));
    }
}

#[test]
fn const_unfold_skips_ineligible_literals() {
    let src = "X = 3\ndef f(x, y=4):\n    match x:\n        case 1:\n            return x is 2\n    return f\"{x + 5}\", 1.5, 10 ** 40 ** 2\n";
    let out = const_unfold(&unit(src), &MutationConfig::with_seed(0)).unwrap();
    let olds: Vec<&str> = out.edits.iter().map(|e| e.old.as_str()).collect();
    assert_eq!(olds, vec!["10", "40", "2"]);
    let reasons: Vec<&str> = out.skipped.iter().map(|s| s.reason.as_str()).collect();
    assert_eq!(reasons, vec!["match-pattern", "is-operand", "fstring"]);
}

#[test]
fn const_unfold_not_applicable_without_integers() {
    let out = const_unfold(&unit("def f(s):\n    return s.upper()\n"), &MutationConfig::default()).unwrap();
    assert!(!out.applied);
}

#[test]
fn const_unfold_keeps_tokens_apart() {
    let src = "def f(x):\n    return 1if x else 2\n";
    let out = const_unfold(&unit(src), &MutationConfig::default()).unwrap();
    assert!(parse(&out.mutated.text).is_ok(), "{}", out.mutated.text);
    assert!(out.mutated.text.contains(" if x else "));
}

#[test]
fn for_to_while_template() {
    let src = "def f(xs):\n    t = 0\n    for x in xs:\n        if x % 2 == 0:\n            continue\n        t += x\n    return t\n";
    let out = for_to_while(&unit(src)).unwrap();
    assert_eq!(
        out.mutated.text,
        "def f(xs):\n    t = 0\n    _mb_it1 = iter(xs)\n    _mb_sn1 = object()\n    while True:\n        _mb_nx1 = next(_mb_it1, _mb_sn1)\n        if _mb_nx1 is _mb_sn1: break\n        x = _mb_nx1\n        if x % 2 == 0:\n            continue\n        t += x\n    return t\n"
    );
}

#[test]
fn for_to_while_handles_inline_bodies_and_tuple_iterables() {
    let src = "def f():\n    out = []\n    for a, b in 1, 2: out.append(a); out.append(b)\n    return out\n";
    let out = for_to_while(&unit(src)).unwrap();
    assert!(out.mutated.text.contains("_mb_it1 = iter((1, 2))\n"));
    assert!(out.mutated.text.contains("\n        a, b = _mb_nx1\n        out.append(a); out.append(b)\n"));
    assert!(parse(&out.mutated.text).is_ok());
}

#[test]
fn for_to_while_skips_for_else_and_other_regions() {
    let src = "for q in []:\n    pass\nclass C:\n    for z in []:\n        pass\ndef f(xs):\n    for x in xs:\n        pass\n    else:\n        return 1\n    async def g():\n        async for y in xs:\n            pass\n";
    let out = for_to_while(&unit(src)).unwrap();
    assert!(!out.applied);
    let reasons: Vec<&str> = out.skipped.iter().map(|s| s.reason.as_str()).collect();
    assert_eq!(reasons, vec!["outside-function", "class-body", "for-else", "async-for"]);
}

#[test]
fn for_to_while_skips_shadowed_builtins() {
    let src = "def f(xs):\n    next = 1\n    for x in xs:\n        pass\n";
    let out = for_to_while(&unit(src)).unwrap();
    assert!(!out.applied);
    assert_eq!(out.skipped[0].reason, "shadowed-builtin");
}

#[test]
fn for_to_while_avoids_existing_helper_names() {
    let src = "def f(xs):\n    _mb_it1 = 0\n    for x in xs:\n        pass\n";
    let out = for_to_while(&unit(src)).unwrap();
    assert!(out.mutated.text.contains("_mb_it2 = iter(xs)"));
}

#[test]
fn for_to_while_converts_nested_loops() {
    let src = "def f(m):\n    s = 0\n    for row in m:\n        for v in row:\n            s += v\n    return s\n";
    let out = for_to_while(&unit(src)).unwrap();
    assert_eq!(out.edits.len(), 2);
    assert!(!out.mutated.text.contains("for "));
    assert!(parse(&out.mutated.text).is_ok());
}

#[test]
fn cond_augment_paper_example() {
    let src = "def f(i):\n    if i == 3:\n        return 1\n    return 0\n";
    let cfg = MutationConfig {
        tautology_pool: vec!["(8 > 6) or (8 < 6)".into()],
        ..MutationConfig::default()
    };
    let out = cond_augment(&unit(src), &cfg).unwrap();
    assert_eq!(line(&out.mutated.text, 1), "if i == 3 and ((8 > 6) or (8 < 6)):");
}

#[test]
fn cond_augment_uses_or_for_contradictions_and_parenthesizes_when_needed() {
    let src = "def f(a, b):\n    if a or b:\n        return 1\n    elif (n := a):\n        return n\n    while a:\n        break\n    return 0\n";
    let taut = MutationConfig {
        tautology_pool: vec!["True or False".into()],
        ..MutationConfig::default()
    };
    let out = cond_augment(&unit(src), &taut).unwrap();
    assert_eq!(line(&out.mutated.text, 1), "if (a or b) and (True or False):");
    assert_eq!(line(&out.mutated.text, 3), "elif (n := a) and (True or False):");
    assert_eq!(line(&out.mutated.text, 5), "while a:");
    let contra = MutationConfig {
        tautology_pool: vec!["False and True".into()],
        ..MutationConfig::default()
    };
    let out = cond_augment(&unit(src), &contra).unwrap();
    assert_eq!(line(&out.mutated.text, 1), "if a or b or (False and True):");
}

#[test]
fn cond_augment_rejects_bad_pool() {
    let cfg = MutationConfig {
        tautology_pool: vec!["x > 1".into()],
        ..MutationConfig::default()
    };
    assert!(cond_augment(&unit("def f(x):\n    if x:\n        pass\n"), &cfg).is_err());
    assert!(cfg.validate().is_err());
    assert!(MutationConfig::default().validate().is_ok());
}

#[test]
fn cond_augment_not_applicable_without_branches() {
    let out = cond_augment(&unit("def f(x):\n    return x\n"), &MutationConfig::default()).unwrap();
    assert!(!out.applied);
}

#[test]
fn compose_singleton_matches_operator() {
    let cfg = MutationConfig::with_seed(5);
    for k in MutationKind::ALL {
        let single = apply(&unit(FIG1), k, &cfg).unwrap();
        let composed = compose(&unit(FIG1), &[k], &cfg).unwrap();
        assert_eq!(single.mutated.text, composed.mutated.text);
        assert_eq!(single.edits, composed.edits);
        assert_eq!(single.applied, composed.applied);
    }
}

#[test]
fn compose_edit_log_replays() {
    let src = "def f(nums):\n    out = []\n    for i, n in enumerate(nums):\n        if n > 2:\n            out.append(n * 3)\n    return out\n";
    let cfg = MutationConfig::with_seed(11);
    for kinds in [FUV, AUV, AFU] {
        let out = compose(&unit(src), &kinds, &cfg).unwrap();
        assert!(out.applied);
        assert_ne!(out.mutated.text, src);
        assert_eq!(replay(src, &out.edits), out.mutated.text);
        let ops: Vec<MutationKind> = out.edits.iter().map(|e| e.op).collect();
        let mut order = ops.clone();
        order.dedup();
        assert_eq!(order, kinds.to_vec());
    }
}

#[test]
fn compose_rejects_duplicates_and_bad_source() {
    assert!(compose(&unit(FIG1), &[MutationKind::VarNormI, MutationKind::VarNormI], &MutationConfig::default()).is_err());
    assert!(compose(&unit("def f(:"), &[MutationKind::VarNormI], &MutationConfig::default()).is_err());
    assert!(compose(&unit(FIG1), &[], &MutationConfig::default()).is_err());
}

#[test]
fn applicable_on_empty_body() {
    let u = unit("def f():\n    pass\n");
    for k in MutationKind::ALL {
        assert!(!applicable(&u, k), "{k}");
    }
}

#[test]
fn module_level_code_is_never_edited() {
    let src = "x = 5\nfor i in range(3):\n    if i == 1:\n        x += i\nassert f(1) == 2\n";
    for k in MutationKind::ALL {
        assert!(!applicable(&unit(src), k), "{k}");
    }
}

#[test]
fn outcomes_reparse() {
    let src = "def f(text, ch):\n    res = ''\n    for c in text:\n        if c != ch:\n            res += c * 2\n    return res\n";
    let cfg = MutationConfig::with_seed(99);
    for k in MutationKind::ALL {
        let out = apply(&unit(src), k, &cfg).unwrap();
        assert!(out.applied, "{k}");
        assert!(parse(&out.mutated.text).is_ok(), "{k}: {}", out.mutated.text);
        assert_eq!(replay(src, &out.edits), out.mutated.text);
    }
}
