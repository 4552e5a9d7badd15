use super::{
    AnchorKind, Assertion, Ast, CharClass, ClassItem, EscapeClass, Group, GroupKind, Node,
    NodeKind, Repeat, RepeatMode,
};

/// Whether every match of `ast` must begin at the start of the input.
pub fn is_start_anchored(ast: &Ast) -> bool {
    starts_anchored(&ast.root, ast)
}

fn starts_anchored(node: &Node, ast: &Ast) -> bool {
    match &node.kind {
        NodeKind::Anchor(a) => a.assertion(ast.dialect) == Assertion::StartText,
        NodeKind::Concat(items) => items.first().is_some_and(|n| starts_anchored(n, ast)),
        NodeKind::Alternation(items) => items.iter().all(|n| starts_anchored(n, ast)),
        NodeKind::Group(g) => {
            !matches!(g.kind, GroupKind::InlineFlags { scoped: false, .. })
                && starts_anchored(&g.child, ast)
        }
        NodeKind::Repeat(r) => r.min >= 1 && starts_anchored(&r.child, ast),
        _ => false,
    }
}

/// The start-anchored form `^[\s\S]*?R` of an unanchored pattern.
///
/// A string has a match of `R` somewhere in it exactly when it has a prefix
/// matching the variant, so analyses that reason about anchored matching
/// can be reused for partial matching. Anchored patterns come back as is.
pub fn anchor_variant(ast: &Ast) -> Ast {
    if is_start_anchored(ast) {
        return ast.clone();
    }
    let span = ast.root.span;
    let anchor = if ast.dialect.caret() == Assertion::StartText {
        AnchorKind::Caret
    } else {
        AnchorKind::StartText
    };
    let any = Node::new(
        NodeKind::Class(CharClass {
            items: vec![
                ClassItem::Escape(EscapeClass::Space),
                ClassItem::Escape(EscapeClass::NotSpace),
            ],
            negated: false,
            leading_bracket: false,
            posix_fallback: false,
        }),
        span,
    );
    let mut items = vec![
        Node::new(NodeKind::Anchor(anchor), span),
        Node::new(
            NodeKind::Repeat(Repeat {
                child: Box::new(any),
                min: 0,
                max: None,
                mode: RepeatMode::Lazy,
            }),
            span,
        ),
    ];
    match &ast.root.kind {
        NodeKind::Concat(rest) => items.extend(rest.iter().cloned()),
        NodeKind::Alternation(_) => items.push(Node::new(
            NodeKind::Group(Group {
                kind: GroupKind::NonCapture,
                child: Box::new(ast.root.clone()),
            }),
            span,
        )),
        NodeKind::Empty => {}
        _ => items.push(ast.root.clone()),
    }
    let root = Node::new(NodeKind::Concat(items), span);
    Ast {
        dialect: ast.dialect,
        root,
        capture_names: ast.capture_names.clone(),
    }
}

/// Replace every bounded quantifier by an unbounded one: `{0,k}` becomes
/// `*` and `{m,k}` with `m > 0` becomes `+`. The language can only grow.
pub fn unbounded_variant(ast: &Ast) -> Ast {
    Ast {
        dialect: ast.dialect,
        root: unbound(&ast.root),
        capture_names: ast.capture_names.clone(),
    }
}

/// Whether the pattern has any bounded quantifier.
pub fn has_bounded_repeat(ast: &Ast) -> bool {
    ast.root
        .any(&|n| matches!(&n.kind, NodeKind::Repeat(r) if r.max.is_some()))
}

fn unbound(node: &Node) -> Node {
    let kind = match &node.kind {
        NodeKind::Concat(items) => NodeKind::Concat(items.iter().map(unbound).collect()),
        NodeKind::Alternation(items) => NodeKind::Alternation(items.iter().map(unbound).collect()),
        NodeKind::Group(g) => NodeKind::Group(Group {
            kind: g.kind.clone(),
            child: Box::new(unbound(&g.child)),
        }),
        NodeKind::Repeat(r) => {
            let min = if r.max.is_some() { r.min.min(1) } else { r.min };
            NodeKind::Repeat(Repeat {
                child: Box::new(unbound(&r.child)),
                min,
                max: None,
                mode: r.mode,
            })
        }
        other => other.clone(),
    };
    Node::new(kind, node.span)
}

#[cfg(test)]
mod tests {
    use super::super::{emit, parse, Dialect};
    use super::*;

    #[test]
    fn anchoring() {
        let a = parse("^a|^b", Dialect::Java).unwrap();
        assert!(is_start_anchored(&a));
        assert_eq!(anchor_variant(&a), a);
        let b = parse("a|^b", Dialect::Java).unwrap();
        assert!(!is_start_anchored(&b));
        assert_eq!(emit(&anchor_variant(&b)), r"^[\s\S]*?(?:a|^b)");
        let r = parse("^a", Dialect::Ruby).unwrap();
        assert!(!is_start_anchored(&r));
        assert_eq!(emit(&anchor_variant(&r)), r"\A[\s\S]*?^a");
        let c = parse("a+$", Dialect::JavaScript).unwrap();
        assert_eq!(emit(&anchor_variant(&c)), r"^[\s\S]*?a+$");
    }

    #[test]
    fn unbounding() {
        let a = parse("(a{1,1000}){1,1000}$", Dialect::Java).unwrap();
        let u = unbounded_variant(&a);
        assert_eq!(emit(&u), "(a+)+$");
        assert_eq!(u.capture_count(), 1);
        let b = parse("a{0,5}b{2,3}", Dialect::Java).unwrap();
        assert_eq!(emit(&unbounded_variant(&b)), "a*b+");
        let c = parse("a*", Dialect::Java).unwrap();
        assert!(!has_bounded_repeat(&c));
        assert_eq!(unbounded_variant(&c), c);
    }
}
