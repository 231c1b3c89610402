//! Single-pass lexical scanner marking, per line, whether it carries code
//! and/or comment characters.

use super::LanguageId;

pub(super) type LineMarks = Vec<(bool, bool)>;

pub(super) fn scan(content: &str, language: LanguageId) -> LineMarks {
    let mut s = Scanner::new(content, language);
    match language {
        LanguageId::Php => s.scan_php(),
        _ => s.scan_code(false),
    }
    s.marks
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    Code,
    Comment,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Prev {
    /// Start of input or an operator: a following `/` begins a regex.
    Operator,
    /// Identifier, number, literal or closing bracket.
    Operand,
}

struct Heredoc {
    id: String,
    indented: bool,
}

struct Scanner {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    marks: LineMarks,
    lang: LanguageId,
    prev: Prev,
    last_word: String,
    pending_heredocs: Vec<Heredoc>,
}

const REGEX_KEYWORDS: &[&str] = &[
    "return",
    "typeof",
    "instanceof",
    "in",
    "of",
    "new",
    "delete",
    "void",
    "throw",
    "case",
    "do",
    "else",
    "yield",
    "await",
    "if",
    "elsif",
    "unless",
    "while",
    "until",
    "when",
    "and",
    "or",
    "not",
];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

impl Scanner {
    fn new(content: &str, lang: LanguageId) -> Self {
        let line_count = content.lines().count().max(1);
        Self {
            chars: content.chars().collect(),
            pos: 0,
            line: 0,
            marks: vec![(false, false); line_count],
            lang,
            prev: Prev::Operator,
            last_word: String::new(),
            pending_heredocs: Vec::new(),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn looking_at(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn at_line_start(&self) -> bool {
        self.pos == 0 || self.chars[self.pos - 1] == '\n'
    }

    /// Consumes one character, recording it against the current line.
    fn bump(&mut self, mark: Mark) {
        let c = self.chars[self.pos];
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            return;
        }
        if c.is_whitespace() {
            return;
        }
        if let Some(m) = self.marks.get_mut(self.line) {
            match mark {
                Mark::Code => m.0 = true,
                Mark::Comment => m.1 = true,
            }
        }
    }

    fn bump_n(&mut self, n: usize, mark: Mark) {
        for _ in 0..n {
            if self.at_end() {
                return;
            }
            self.bump(mark);
        }
    }

    fn regex_allowed(&self) -> bool {
        self.prev == Prev::Operator || REGEX_KEYWORDS.contains(&self.last_word.as_str())
    }

    fn operand(&mut self) {
        self.prev = Prev::Operand;
        self.last_word.clear();
    }

    // ---- comments -------------------------------------------------------

    /// Line comment up to (not including) the newline. In PHP a `?>` also ends it.
    fn line_comment(&mut self) {
        while let Some(c) = self.peek(0) {
            if c == '\n' || (self.lang == LanguageId::Php && self.looking_at("?>")) {
                break;
            }
            self.bump(Mark::Comment);
        }
    }

    fn block_comment(&mut self, close: &str) {
        while !self.at_end() {
            if self.looking_at(close) {
                self.bump_n(close.chars().count(), Mark::Comment);
                return;
            }
            self.bump(Mark::Comment);
        }
    }

    // ---- literals -------------------------------------------------------

    /// Quoted literal with backslash escapes. Single-line literals stop at an
    /// unescaped newline.
    fn quoted(&mut self, quote: char, multiline: bool) {
        self.bump(Mark::Code);
        while let Some(c) = self.peek(0) {
            if c == '\\' {
                self.bump_n(2, Mark::Code);
            } else if c == quote {
                self.bump(Mark::Code);
                break;
            } else if c == '\n' && !multiline {
                break;
            } else {
                self.bump(Mark::Code);
            }
        }
        self.operand();
    }

    /// Literal whose body may contain `open_interp ... }` code islands.
    fn interpolated(&mut self, quote: char, open_interp: &str) {
        self.bump(Mark::Code);
        while let Some(c) = self.peek(0) {
            if c == '\\' {
                self.bump_n(2, Mark::Code);
            } else if c == quote {
                self.bump(Mark::Code);
                break;
            } else if self.looking_at(open_interp) {
                self.bump_n(open_interp.chars().count(), Mark::Code);
                let saved = (self.prev, std::mem::take(&mut self.last_word));
                self.prev = Prev::Operator;
                self.scan_code(true);
                (self.prev, self.last_word) = saved;
            } else {
                self.bump(Mark::Code);
            }
        }
        self.operand();
    }

    /// Consumes `n` quotes then everything up to the next run of `n` quotes.
    fn fenced(&mut self, n: usize) {
        self.bump_n(n, Mark::Code);
        let fence: String = std::iter::repeat_n('"', n).collect();
        while !self.at_end() {
            if self.looking_at(&fence) {
                self.bump_n(n, Mark::Code);
                while self.peek(0) == Some('"') {
                    self.bump(Mark::Code);
                }
                break;
            }
            if self.lang == LanguageId::Java && self.peek(0) == Some('\\') {
                self.bump_n(2, Mark::Code);
                continue;
            }
            self.bump(Mark::Code);
        }
        self.operand();
    }

    /// C# verbatim string: `""` is an escaped quote, no backslash escapes.
    fn verbatim(&mut self) {
        self.bump(Mark::Code);
        while let Some(c) = self.peek(0) {
            if c == '"' {
                if self.peek(1) == Some('"') {
                    self.bump_n(2, Mark::Code);
                    continue;
                }
                self.bump(Mark::Code);
                break;
            }
            self.bump(Mark::Code);
        }
        self.operand();
    }

    /// C++ raw string starting at the opening quote: `"delim( ... )delim"`.
    fn cpp_raw(&mut self) {
        let mut delim = String::new();
        let mut k = 1;
        while let Some(c) = self.peek(k) {
            if c == '(' || c == '\n' || c.is_whitespace() || k > 17 {
                break;
            }
            delim.push(c);
            k += 1;
        }
        if self.peek(k) != Some('(') {
            self.quoted('"', false);
            return;
        }
        let close = format!("){delim}\"");
        self.bump_n(k + 1, Mark::Code);
        while !self.at_end() {
            if self.looking_at(&close) {
                self.bump_n(close.chars().count(), Mark::Code);
                break;
            }
            self.bump(Mark::Code);
        }
        self.operand();
    }

    /// Regex literal on one line, `[...]` classes may hold `/`.
    fn regex(&mut self) {
        self.bump(Mark::Code);
        let mut in_class = false;
        while let Some(c) = self.peek(0) {
            match c {
                '\n' => break,
                '\\' => {
                    self.bump_n(2, Mark::Code);
                    continue;
                }
                '[' => in_class = true,
                ']' => in_class = false,
                '/' if !in_class => {
                    self.bump(Mark::Code);
                    while self.peek(0).is_some_and(|c| c.is_alphabetic()) {
                        self.bump(Mark::Code);
                    }
                    break;
                }
                _ => {}
            }
            self.bump(Mark::Code);
        }
        self.operand();
    }

    fn number(&mut self) {
        while let Some(c) = self.peek(0) {
            let separator = c == '\''
                && matches!(self.lang, LanguageId::C | LanguageId::Cpp)
                && self.peek(1).is_some_and(|n| n.is_ascii_alphanumeric());
            let signed_exponent =
                (c == '+' || c == '-') && self.pos > 0 && matches!(self.chars[self.pos - 1], 'e' | 'E' | 'p' | 'P');
            if c.is_alphanumeric() || c == '_' || c == '.' || separator || signed_exponent {
                self.bump(Mark::Code);
            } else {
                break;
            }
        }
        self.operand();
    }

    fn identifier(&mut self) -> String {
        let mut word = String::new();
        while let Some(c) = self.peek(0) {
            if !is_ident_char(c) {
                break;
            }
            word.push(c);
            self.bump(Mark::Code);
        }
        // Ruby predicate/bang method names
        if self.lang == LanguageId::Ruby && matches!(self.peek(0), Some('?') | Some('!')) && self.peek(1) != Some('=') {
            self.bump(Mark::Code);
        }
        word
    }

    // ---- heredocs -------------------------------------------------------

    /// Consumes pending heredoc bodies starting right after a newline.
    fn heredoc_bodies(&mut self) {
        let pending = std::mem::take(&mut self.pending_heredocs);
        for doc in pending {
            while !self.at_end() {
                let start = self.pos;
                let mut end = start;
                while end < self.chars.len() && self.chars[end] != '\n' {
                    end += 1;
                }
                let text: String = self.chars[start..end].iter().collect();
                let candidate = if doc.indented { text.trim_start() } else { text.as_str() };
                let terminates = match self.lang {
                    LanguageId::Php => {
                        candidate.starts_with(&doc.id)
                            && !candidate[doc.id.len()..].chars().next().is_some_and(is_ident_char)
                    }
                    _ => candidate.trim_end() == doc.id,
                };
                if terminates && self.lang == LanguageId::Php {
                    // the rest of the terminator line is ordinary code
                    let indent = text.chars().count() - candidate.chars().count();
                    while self.pos < start + indent + doc.id.chars().count() {
                        self.bump(Mark::Code);
                    }
                    self.operand();
                    break;
                }
                while self.pos < end {
                    self.bump(Mark::Code);
                }
                if self.peek(0) == Some('\n') {
                    self.bump(Mark::Code);
                }
                if terminates {
                    break;
                }
            }
        }
    }

    /// Tries to read a Ruby heredoc opener after `<<`. Returns true if taken.
    fn ruby_heredoc(&mut self) -> bool {
        let mut k = 2;
        let indented = matches!(self.peek(k), Some('~') | Some('-'));
        if indented {
            k += 1;
        }
        let quote = match self.peek(k) {
            Some(q @ ('\'' | '"' | '`')) => {
                k += 1;
                Some(q)
            }
            _ => None,
        };
        let mut id = String::new();
        while let Some(c) = self.peek(k) {
            if Some(c) == quote {
                k += 1;
                break;
            }
            if quote.is_none() && !is_ident_char(c) {
                break;
            }
            if c == '\n' {
                return false;
            }
            id.push(c);
            k += 1;
        }
        if id.is_empty() {
            return false;
        }
        // bare `<<ident` is a shift unless the identifier is upper case
        if quote.is_none() && !indented && !id.chars().next().is_some_and(|c| c.is_uppercase()) {
            return false;
        }
        self.bump_n(k, Mark::Code);
        self.pending_heredocs.push(Heredoc { id, indented });
        self.operand();
        true
    }

    /// Tries to read a PHP heredoc/nowdoc opener at `<<<`.
    fn php_heredoc(&mut self) -> bool {
        let mut k = 3;
        while matches!(self.peek(k), Some(' ') | Some('\t')) {
            k += 1;
        }
        let quote = match self.peek(k) {
            Some(q @ ('\'' | '"')) => {
                k += 1;
                Some(q)
            }
            _ => None,
        };
        let mut id = String::new();
        while let Some(c) = self.peek(k) {
            if !is_ident_char(c) {
                break;
            }
            id.push(c);
            k += 1;
        }
        if let Some(q) = quote {
            if self.peek(k) != Some(q) {
                return false;
            }
            k += 1;
        }
        if id.is_empty() {
            return false;
        }
        self.bump_n(k, Mark::Code);
        self.pending_heredocs.push(Heredoc { id, indented: true });
        self.operand();
        true
    }

    // ---- Ruby specifics -------------------------------------------------

    fn ruby_percent_literal(&mut self) -> bool {
        if !self.regex_allowed() {
            return false;
        }
        let mut k = 1;
        if self.peek(k).is_some_and(|c| "qQwWiIrsx".contains(c)) {
            k += 1;
        }
        let Some(open) = self.peek(k) else { return false };
        if open.is_alphanumeric() || open.is_whitespace() {
            return false;
        }
        let close = match open {
            '(' => ')',
            '[' => ']',
            '{' => '}',
            '<' => '>',
            c => c,
        };
        self.bump_n(k + 1, Mark::Code);
        let mut depth = 1;
        while let Some(c) = self.peek(0) {
            if c == '\\' {
                self.bump_n(2, Mark::Code);
                continue;
            }
            if c == close && open != close {
                depth -= 1;
            } else if c == open && open != close {
                depth += 1;
            } else if c == close {
                depth = 0;
            }
            self.bump(Mark::Code);
            if depth == 0 {
                break;
            }
        }
        self.operand();
        true
    }

    fn ruby_block_comment(&mut self) -> bool {
        let begins = self.looking_at("=begin") && self.peek(6).is_none_or(|c| c.is_whitespace());
        if !begins {
            return false;
        }
        while !self.at_end() {
            let ends =
                self.at_line_start() && self.looking_at("=end") && self.peek(4).is_none_or(|c| c.is_whitespace());
            if ends {
                self.line_comment();
                return true;
            }
            self.bump(Mark::Comment);
        }
        true
    }

    // ---- drivers --------------------------------------------------------

    /// Scans code until end of input, or until an unmatched `}` when
    /// `in_interpolation` is set (the brace is consumed).
    fn scan_code(&mut self, in_interpolation: bool) {
        let mut depth = 0usize;
        while let Some(c) = self.peek(0) {
            if self.lang == LanguageId::Php && self.looking_at("?>") {
                if in_interpolation {
                    return;
                }
                self.bump_n(2, Mark::Code);
                self.scan_html();
                continue;
            }
            if c == '\n' {
                self.bump(Mark::Code);
                if self.lang == LanguageId::Ruby {
                    self.prev = Prev::Operator;
                    self.last_word.clear();
                }
                if !self.pending_heredocs.is_empty() {
                    self.heredoc_bodies();
                }
                continue;
            }
            if c.is_whitespace() {
                self.bump(Mark::Code);
                continue;
            }
            if self.lang == LanguageId::Ruby && self.at_line_start() && self.ruby_block_comment() {
                continue;
            }
            if self.lang == LanguageId::Ruby && self.at_line_start() && self.looking_at("__END__") {
                // data section: opaque to the lexer
                while !self.at_end() {
                    self.bump(Mark::Code);
                }
                return;
            }
            if c == '{' {
                depth += 1;
                self.bump(Mark::Code);
                self.prev = Prev::Operator;
                self.last_word.clear();
                continue;
            }
            if c == '}' {
                if in_interpolation && depth == 0 {
                    self.bump(Mark::Code);
                    return;
                }
                depth = depth.saturating_sub(1);
                self.bump(Mark::Code);
                self.operand();
                continue;
            }
            if self.comment_start() {
                continue;
            }
            if self.literal_start() {
                continue;
            }
            if c.is_ascii_digit() {
                self.number();
                continue;
            }
            if is_ident_start(c) {
                let word = self.identifier();
                if self.lang == LanguageId::Cpp
                    && matches!(word.as_str(), "R" | "LR" | "uR" | "UR" | "u8R")
                    && self.peek(0) == Some('"')
                {
                    self.cpp_raw();
                    continue;
                }
                self.prev = Prev::Operand;
                self.last_word = word;
                continue;
            }
            if matches!(c, ')' | ']') {
                self.bump(Mark::Code);
                self.operand();
                continue;
            }
            self.bump(Mark::Code);
            self.prev = Prev::Operator;
            self.last_word.clear();
        }
    }

    /// Consumes a comment at the cursor if one starts here.
    fn comment_start(&mut self) -> bool {
        match self.lang {
            LanguageId::Python | LanguageId::Ruby => {
                if self.peek(0) == Some('#') {
                    self.line_comment();
                    return true;
                }
            }
            LanguageId::Php => {
                if self.peek(0) == Some('#') && self.peek(1) != Some('[') {
                    self.line_comment();
                    return true;
                }
                if self.looking_at("//") {
                    self.line_comment();
                    return true;
                }
                if self.looking_at("/*") {
                    self.block_comment("*/");
                    return true;
                }
            }
            _ => {
                if self.looking_at("//") {
                    self.line_comment();
                    return true;
                }
                if self.looking_at("/*") {
                    self.block_comment("*/");
                    return true;
                }
            }
        }
        false
    }

    /// Consumes a string/char/regex/heredoc literal if one starts here.
    fn literal_start(&mut self) -> bool {
        let c = self.peek(0).unwrap_or('\0');
        match self.lang {
            LanguageId::C | LanguageId::Cpp => match c {
                '"' => self.quoted('"', false),
                '\'' => self.quoted('\'', false),
                _ => return false,
            },
            LanguageId::Java => match c {
                '"' if self.looking_at("\"\"\"") => self.fenced(3),
                '"' => self.quoted('"', false),
                '\'' => self.quoted('\'', false),
                _ => return false,
            },
            LanguageId::CSharp => {
                if c == '"' && self.looking_at("\"\"\"") {
                    let mut n = 0;
                    while self.peek(n) == Some('"') {
                        n += 1;
                    }
                    self.fenced(n);
                } else if c == '"' {
                    self.quoted('"', false);
                } else if c == '\'' {
                    self.quoted('\'', false);
                } else if self.looking_at("@\"") {
                    self.bump(Mark::Code);
                    self.verbatim();
                } else if self.looking_at("$@\"") || self.looking_at("@$\"") {
                    self.bump_n(2, Mark::Code);
                    self.verbatim();
                } else if c == '$' && self.peek(1) == Some('"') {
                    self.bump(Mark::Code);
                    if self.looking_at("\"\"\"") {
                        let mut n = 0;
                        while self.peek(n) == Some('"') {
                            n += 1;
                        }
                        self.fenced(n);
                    } else {
                        self.quoted('"', false);
                    }
                } else if c == '@' && self.peek(1).is_some_and(is_ident_start) {
                    self.bump(Mark::Code);
                    let word = self.identifier();
                    self.prev = Prev::Operand;
                    self.last_word = word;
                } else {
                    return false;
                }
            }
            LanguageId::JavaScript => match c {
                '"' => self.quoted('"', false),
                '\'' => self.quoted('\'', false),
                '`' => self.interpolated('`', "${"),
                '/' if self.regex_allowed() => self.regex(),
                _ => return false,
            },
            LanguageId::Python => match c {
                '"' | '\'' => {
                    let triple: String = std::iter::repeat_n(c, 3).collect();
                    if self.looking_at(&triple) {
                        self.python_triple(c);
                    } else {
                        self.quoted(c, false);
                    }
                }
                _ => return false,
            },
            LanguageId::Ruby => match c {
                '"' => self.interpolated('"', "#{"),
                '`' => self.interpolated('`', "#{"),
                '\'' => self.quoted('\'', true),
                '/' if self.regex_allowed() => self.regex(),
                '%' => return self.ruby_percent_literal(),
                '<' if self.looking_at("<<") => return self.ruby_heredoc(),
                '?' if self.prev == Prev::Operator && self.peek(1).is_some_and(|n| !n.is_whitespace()) => {
                    // character literal such as ?# or ?"
                    self.bump_n(2, Mark::Code);
                    self.operand();
                }
                '$' if self.peek(1).is_some_and(|n| !n.is_whitespace()) => {
                    // global variables, including $# and $"
                    self.bump_n(2, Mark::Code);
                    while self.peek(0).is_some_and(is_ident_char) {
                        self.bump(Mark::Code);
                    }
                    self.operand();
                }
                _ => return false,
            },
            LanguageId::Php => match c {
                '"' => self.interpolated('"', "{$"),
                '\'' => self.quoted('\'', true),
                '`' => self.quoted('`', true),
                '<' if self.looking_at("<<<") => return self.php_heredoc(),
                _ => return false,
            },
            LanguageId::Unsupported => return false,
        }
        true
    }

    fn python_triple(&mut self, quote: char) {
        let fence: String = std::iter::repeat_n(quote, 3).collect();
        self.bump_n(3, Mark::Code);
        while let Some(c) = self.peek(0) {
            if c == '\\' {
                self.bump_n(2, Mark::Code);
                continue;
            }
            if self.looking_at(&fence) {
                self.bump_n(3, Mark::Code);
                break;
            }
            self.bump(Mark::Code);
        }
        self.operand();
    }

    // ---- PHP ------------------------------------------------------------

    fn scan_php(&mut self) {
        let has_open_tag = self.chars.windows(2).any(|w| w == ['<', '?']);
        if has_open_tag {
            self.scan_html();
        }
        self.scan_code(false);
    }

    /// Inline HTML up to and including the next `<?php`, `<?=` or `<?`.
    fn scan_html(&mut self) {
        while !self.at_end() {
            if self.looking_at("<?") {
                let tag = if self.looking_at("<?php") {
                    5
                } else if self.looking_at("<?=") {
                    3
                } else {
                    2
                };
                self.bump_n(tag, Mark::Code);
                self.prev = Prev::Operator;
                self.last_word.clear();
                return;
            }
            self.bump(Mark::Code);
        }
    }
}
