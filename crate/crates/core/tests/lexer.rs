mod common;

use proptest::prelude::*;
use szz_core::lang::{classify_lines, is_cosmetic_change, LanguageId, LineClass};

use common::{lexer_disagreements, load_lexer_fixture, LEXER_FIXTURES};

#[test]
fn fixtures_are_fifty_lines() {
    for (_, name) in LEXER_FIXTURES {
        assert_eq!(load_lexer_fixture(name).1.len(), 50, "{name}");
    }
}

#[test]
fn hand_labelled_fixtures_agree() {
    for (lang, name) in LEXER_FIXTURES {
        let diff = lexer_disagreements(*lang, name);
        assert!(diff.is_empty(), "{lang} ({name}): line, expected, got: {diff:?}");
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Slash,
    Hash,
    Php,
}

fn family(lang: LanguageId) -> Family {
    match lang {
        LanguageId::Python | LanguageId::Ruby => Family::Hash,
        LanguageId::Php => Family::Php,
        _ => Family::Slash,
    }
}

fn any_language() -> impl Strategy<Value = LanguageId> {
    proptest::sample::select(LanguageId::SUPPORTED.to_vec())
}

/// Free text that may contain every comment opener but never closes a
/// block comment or a literal.
fn text() -> impl Strategy<Value = String> {
    proptest::collection::vec(
        prop_oneof![
            "[a-z ]{1,4}",
            Just("//".to_string()),
            Just("/*".to_string()),
            Just("#".to_string()),
            Just("--".to_string()),
            Just("/".to_string()),
        ],
        0..6,
    )
    .prop_map(|parts| parts.concat())
}

fn literal(lang: LanguageId, body: &str) -> String {
    match lang {
        // single quotes: no interpolation in Ruby/PHP, plain in Python/JS
        LanguageId::Ruby | LanguageId::Php | LanguageId::Python | LanguageId::JavaScript => {
            format!("'{body}'")
        }
        _ => format!("\"{body}\""),
    }
}

fn assign(lang: LanguageId, n: usize, value: &str) -> String {
    match family(lang) {
        Family::Hash => format!("v{n} = {value}"),
        Family::Php => format!("$v{n} = {value};"),
        Family::Slash => format!("var v{n} = {value};"),
    }
}

#[derive(Debug, Clone)]
enum Piece {
    Code(String),
    LineComment(String),
    BlockComment(String),
    Mixed(String),
    Blank(usize),
}

fn piece() -> impl Strategy<Value = Piece> {
    prop_oneof![
        text().prop_map(Piece::Code),
        text().prop_map(Piece::LineComment),
        text().prop_map(Piece::BlockComment),
        text().prop_map(Piece::Mixed),
        (0usize..4).prop_map(Piece::Blank),
    ]
}

/// Renders one piece and the labels of the lines it produces.
fn render(lang: LanguageId, n: usize, piece: &Piece) -> Vec<(String, LineClass)> {
    let line_comment = |s: &str| match family(lang) {
        Family::Hash => format!("# {s}"),
        _ => format!("// {s}"),
    };
    match piece {
        Piece::Code(s) => vec![(assign(lang, n, &literal(lang, s)), LineClass::Code)],
        Piece::LineComment(s) => vec![(line_comment(s), LineClass::Comment)],
        Piece::BlockComment(s) => match family(lang) {
            Family::Hash if lang == LanguageId::Ruby => vec![
                ("=begin".to_string(), LineClass::Comment),
                (s.clone(), LineClass::Comment),
                ("=end".to_string(), LineClass::Comment),
            ]
            .into_iter()
            .filter(|(l, _)| !l.trim().is_empty())
            .collect(),
            Family::Hash => vec![(format!("#{s}"), LineClass::Comment)],
            _ => vec![
                ("/*".to_string(), LineClass::Comment),
                (format!(" * {}", s.replace("*/", "* /")), LineClass::Comment),
                (" */".to_string(), LineClass::Comment),
            ],
        },
        Piece::Mixed(s) => vec![(
            format!("{}  {}", assign(lang, n, "1"), line_comment(s)),
            LineClass::MixedCodeComment,
        )],
        Piece::Blank(w) => vec![(" ".repeat(*w), LineClass::Blank)],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn markers_inside_literals_are_code(lang in any_language(), body in text()) {
        let line = assign(lang, 0, &literal(lang, &body));
        prop_assert_eq!(classify_lines(&line, lang), vec![LineClass::Code]);
    }

    #[test]
    fn generated_programs_classify_as_built(
        lang in any_language(),
        pieces in proptest::collection::vec(piece(), 1..25),
    ) {
        let mut source = String::new();
        let mut labels = Vec::new();
        for (n, p) in pieces.iter().enumerate() {
            for (line, label) in render(lang, n, p) {
                source.push_str(&line);
                source.push('\n');
                labels.push(label);
            }
        }
        prop_assert_eq!(classify_lines(&source, lang), labels, "{}", source);
    }

    #[test]
    fn stripping_comments_and_blanks_leaves_only_code(
        lang in any_language(),
        pieces in proptest::collection::vec(piece(), 1..25),
    ) {
        let mut source = String::new();
        for (n, p) in pieces.iter().enumerate() {
            for (line, _) in render(lang, n, p) {
                source.push_str(&line);
                source.push('\n');
            }
        }
        let classes = classify_lines(&source, lang);
        let kept: Vec<&str> = source
            .lines()
            .zip(&classes)
            .filter(|(_, c)| c.has_code())
            .map(|(l, _)| l)
            .collect();
        let again = classify_lines(&kept.join("\n"), lang);
        prop_assert!(again.iter().all(|c| c.has_code()), "{:?}", again);
        prop_assert_eq!(classes, classify_lines(&source, lang));
    }

    #[test]
    fn cosmetic_change_is_reflexive_and_symmetric(a in "[ -~\t]{0,40}", b in "[ -~\t]{0,40}") {
        prop_assert!(is_cosmetic_change(&a, &a));
        prop_assert_eq!(is_cosmetic_change(&a, &b), is_cosmetic_change(&b, &a));
    }

    #[test]
    fn whitespace_insertion_between_tokens_is_cosmetic(
        words in proptest::collection::vec("[a-z]{1,5}|[-+*/=;(){}]", 1..12),
        gaps in proptest::collection::vec("[ \t]{0,3}", 12),
    ) {
        let tight = words.join(" ");
        let loose: String = words
            .iter()
            .zip(&gaps)
            .map(|(w, g)| format!("{g}{w} "))
            .collect();
        prop_assert!(is_cosmetic_change(&tight, &loose), "{:?} vs {:?}", tight, loose);
    }

    #[test]
    fn one_class_per_line(lang in any_language(), src in "[ -~\n]{0,200}") {
        prop_assert_eq!(classify_lines(&src, lang).len(), src.lines().count());
    }
}
