// SPDX-License-Identifier: Apache-2.0

//! Random C++ translation units with known function spans.
//!
//! Every definition the generator writes is recorded with the line of its
//! name, the line of its closing brace, and the signature the scanner is
//! expected to print. Bodies mix nested blocks, lambdas, local classes,
//! braces hidden in literals, comments, raw strings and directives.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExpectedSpan {
    /// Full signature display, or the qualified name alone for templates.
    pub signature: String,
    pub start: u32,
    pub end: u32,
    pub is_template: bool,
}

pub struct Generated {
    pub text: String,
    pub expected: Vec<ExpectedSpan>,
}

const BUILTINS: [(&str, &str); 14] = [
    ("int", "int"),
    ("unsigned", "unsigned int"),
    ("unsigned long", "unsigned long"),
    ("long long", "long long"),
    ("char", "char"),
    ("signed char", "signed char"),
    ("unsigned char", "unsigned char"),
    ("short", "short"),
    ("double", "double"),
    ("float", "float"),
    ("bool", "bool"),
    ("const char*", "char const*"),
    ("const int&", "int const&"),
    ("char**", "char**"),
];

const GLOBAL_STRUCTS: [&str; 3] = ["Point", "Rect", "Color"];

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    lines: Vec<String>,
    expected: Vec<ExpectedSpan>,
    counter: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn next_line(&self) -> u32 {
        self.lines.len() as u32 + 1
    }

    fn push(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    fn fresh(&mut self) -> usize {
        self.counter += 1;
        self.counter
    }

    fn qualified(scope: &[String], name: &str) -> String {
        let mut s = String::new();
        for c in scope {
            s.push_str(c);
            s.push_str("::");
        }
        s.push_str(name);
        s
    }

    fn param(&mut self) -> (String, String) {
        match self.rng.gen_range(0..10) {
            0..=5 => {
                let (src, disp) = *BUILTINS.choose(self.rng).unwrap();
                (src.to_string(), disp.to_string())
            }
            6 => ("const int".to_string(), "int".to_string()),
            7 => ("int*".to_string(), "int*".to_string()),
            _ => {
                let s = *GLOBAL_STRUCTS.choose(self.rng).unwrap();
                match self.rng.gen_range(0..3) {
                    0 => (format!("const {s}&"), format!("{s} const&")),
                    1 => (format!("{s}*"), format!("{s}*")),
                    _ => (s.to_string(), s.to_string()),
                }
            }
        }
    }

    /// (source parameter list, displayed parameter list)
    fn params(&mut self) -> (Vec<String>, String) {
        let n = self.rng.gen_range(0..4);
        let mut src = Vec::new();
        let mut disp = Vec::new();
        for i in 0..n {
            let (s, d) = self.param();
            let named = self.rng.gen_bool(0.8);
            let default = named && i == n - 1 && s == "int" && self.rng.gen_bool(0.3);
            let mut text = if named { format!("{s} p{i}") } else { s };
            if default {
                text.push_str(" = 3");
            }
            src.push(text);
            disp.push(d);
        }
        (src, disp.join(", "))
    }

    fn statement(&mut self, depth: usize) {
        let n = self.fresh();
        let choice = if depth >= 3 {
            self.rng.gen_range(0..8)
        } else {
            self.rng.gen_range(0..17)
        };
        match choice {
            0 => self.push(format!("int v{n} = {n};")),
            1 => self.push(format!("const char* s{n} = \"}} {{ \\\" }}\";")),
            2 => self.push(format!("char c{n} = '}}';")),
            3 => self.push("// a stray } in a comment"),
            4 => self.push(format!("/* {{ */ int w{n} = 1; /* }} */")),
            5 => self.push(format!("int arr{n}[] = {{1, 2, 3}};")),
            6 => self.push(format!("auto l{n} = [&](int q) {{ return q + {n}; }};")),
            7 => self.push(format!("long big{n} = 1'000'000;")),
            8 => {
                self.push(format!("if (v{n} > 0) {{", n = n));
                self.block(depth + 1);
                if self.rng.gen_bool(0.5) {
                    self.push("} else {");
                    self.block(depth + 1);
                }
                self.push("}");
            }
            9 => {
                self.push(format!("for (int i{n} = 0; i{n} < 3; ++i{n}) {{"));
                self.block(depth + 1);
                self.push("}");
            }
            10 => {
                self.push(format!("auto f{n} = [](int q) {{"));
                self.block(depth + 1);
                self.push("    return q;");
                self.push("};");
            }
            11 => {
                self.push(format!("const char* r{n} = R\"d("));
                self.push("} { }}");
                self.push(")d\";");
            }
            12 => {
                self.push(format!("struct Local{n} {{"));
                self.push(format!("    int get() const {{ return {n}; }}"));
                self.push("};");
            }
            13 => {
                self.push(format!("switch (v{n}) {{"));
                self.push("case 1: {");
                self.block(depth + 1);
                self.push("    break;");
                self.push("}");
                self.push("default:");
                self.push("    break;");
                self.push("}");
            }
            14 => {
                self.push("#define LOCAL_OPEN {");
                self.push("#undef LOCAL_OPEN");
            }
            15 => {
                self.push("do {");
                self.block(depth + 1);
                self.push("} while (false);");
            }
            _ => {
                self.push("try {");
                self.block(depth + 1);
                self.push("} catch (...) {");
                self.push("}");
            }
        }
    }

    fn block(&mut self, depth: usize) {
        for _ in 0..self.rng.gen_range(0..4) {
            self.statement(depth);
        }
    }

    fn body_and_close(&mut self) -> u32 {
        self.block(0);
        let end = self.next_line();
        self.push("}");
        end
    }

    fn record(&mut self, signature: String, start: u32, end: u32, is_template: bool) {
        self.expected.push(ExpectedSpan {
            signature,
            start,
            end,
            is_template,
        });
    }

    fn free_function(&mut self, scope: &[String]) {
        let n = self.fresh();
        let name = format!("fn{n}");
        let (src, disp) = self.params();
        let ret = ["void", "int", "double", "Point", "const char*"]
            .choose(self.rng)
            .unwrap()
            .to_string();
        let spec = ["", "", "static ", "inline "]
            .choose(self.rng)
            .unwrap()
            .to_string();
        let signature = format!("{}({disp})", Self::qualified(scope, &name));
        let start;
        match self.rng.gen_range(0..4) {
            0 => {
                start = self.next_line();
                self.push(format!("{spec}{ret} {name}({}) {{", src.join(", ")));
            }
            1 => {
                self.push(format!("{spec}{ret}"));
                start = self.next_line();
                self.push(format!("{name}({})", src.join(", ")));
                self.push("{");
            }
            2 => {
                start = self.next_line();
                self.push(format!(
                    "{spec}{ret} {name}({}) {{ return {{}}; }}",
                    src.join(", ")
                ));
                self.record(signature, start, start, false);
                return;
            }
            _ if src.len() >= 2 => {
                start = self.next_line();
                self.push(format!("{spec}{ret} {name}({},", src[0]));
                self.push(format!("        {}) {{", src[1..].join(", ")));
            }
            _ => {
                start = self.next_line();
                self.push(format!("{spec}{ret} {name}({}) {{", src.join(", ")));
            }
        }
        let end = self.body_and_close();
        self.record(signature, start, end, false);
    }

    fn template_function(&mut self, scope: &[String]) {
        let n = self.fresh();
        self.push("template <typename T>");
        let start = self.next_line();
        self.push(format!("T tmax{n}(T a, T b) {{"));
        let end = self.body_and_close();
        self.record(
            Self::qualified(scope, &format!("tmax{n}")),
            start,
            end,
            true,
        );
    }

    fn class(&mut self, scope: &[String]) {
        let n = self.fresh();
        let class = format!("C{n}");
        let key = if self.rng.gen_bool(0.5) {
            "class"
        } else {
            "struct"
        };
        let mut inner_scope = scope.to_vec();
        inner_scope.push(class.clone());
        let this = Self::qualified(scope, &class);
        let mut later = Vec::new();
        self.push(format!("{key} {class} {{"));
        self.push("public:");
        for _ in 0..self.rng.gen_range(1..6) {
            let k = self.fresh();
            match self.rng.gen_range(0..9) {
                0 => {
                    let line = self.next_line();
                    self.push(format!("    {class}() {{}}"));
                    self.record(format!("{this}::{class}()"), line, line, false);
                }
                1 => {
                    let line = self.next_line();
                    self.push(format!("    explicit {class}(int v) : m_(v) {{"));
                    let end = self.body_and_close();
                    self.record(format!("{this}::{class}(int)"), line, end, false);
                }
                2 => {
                    let line = self.next_line();
                    self.push(format!("    int get{k}() const {{ return m_; }}"));
                    self.record(format!("{this}::get{k}() const"), line, line, false);
                }
                3 => {
                    let (src, disp) = self.params();
                    let line = self.next_line();
                    self.push(format!("    void set{k}({}) {{", src.join(", ")));
                    let end = self.body_and_close();
                    self.record(format!("{this}::set{k}({disp})"), line, end, false);
                }
                4 => {
                    let line = self.next_line();
                    self.push(format!(
                        "    bool operator==(const {class}& o) const {{ return m_ == o.m_; }}"
                    ));
                    self.record(
                        format!("{this}::operator==({this} const&) const"),
                        line,
                        line,
                        false,
                    );
                }
                5 => {
                    let line = self.next_line();
                    self.push(format!("    static int make{k}(int a) {{"));
                    let end = self.body_and_close();
                    self.record(format!("{this}::make{k}(int)"), line, end, false);
                }
                6 => {
                    self.push(format!("    void later{k}(double d);"));
                    later.push(k);
                }
                7 => {
                    self.push(format!("    struct Inner{k} {{"));
                    let line = self.next_line();
                    self.push("        void poke() {}");
                    self.push("    };");
                    self.record(format!("{this}::Inner{k}::poke()"), line, line, false);
                }
                _ => {
                    let line = self.next_line();
                    self.push(format!(
                        "    friend bool operator!=(const {class}& a, const {class}& b) {{"
                    ));
                    self.push("        return !(a == b);");
                    let end = self.next_line();
                    self.push("    }");
                    self.record(
                        format!(
                            "{}({this} const&, {this} const&)",
                            Self::qualified(scope, "operator!=")
                        ),
                        line,
                        end,
                        false,
                    );
                }
            }
        }
        self.push("private:");
        self.push("    int m_ = 0;");
        self.push("    int arr_[3] = {1, 2, 3};");
        self.push("};");
        for k in later {
            let line = self.next_line();
            self.push(format!("void {class}::later{k}(double d) {{"));
            let end = self.body_and_close();
            self.record(format!("{this}::later{k}(double)"), line, end, false);
        }
    }

    fn class_template(&mut self, scope: &[String]) {
        let n = self.fresh();
        let class = format!("Box{n}");
        self.push("template <typename T>");
        self.push(format!("struct {class} {{"));
        let line = self.next_line();
        self.push("    T get() const {");
        let end = self.body_and_close();
        self.push("    T value;");
        self.push("};");
        let name = Self::qualified(scope, &format!("{class}::get"));
        self.record(name, line, end, true);
    }

    fn noise(&mut self) {
        let n = self.fresh();
        match self.rng.gen_range(0..7) {
            0 => self.push(format!("void decl{n}(int);")),
            1 => self.push(format!("int g{n} = {n};")),
            2 => self.push(format!("int ga{n}[] = {{1, 2}};")),
            3 => self.push(format!("enum class E{n} {{ A, B, C }};")),
            4 => self.push(format!("Point gp{n} = {{1, 2}};")),
            5 => self.push(format!("// namespace fake{n} {{")),
            _ => {
                self.push(format!("/* void ghost{n}() {{"));
                self.push("} */");
            }
        }
    }

    fn items(&mut self, scope: &[String], depth: usize) {
        for _ in 0..self.rng.gen_range(2..7) {
            match self.rng.gen_range(0..12) {
                0..=3 => self.free_function(scope),
                4 => self.template_function(scope),
                5 | 6 => self.class(scope),
                7 => self.class_template(scope),
                8 if depth < 2 => {
                    let n = self.fresh();
                    let (open, component) = if self.rng.gen_bool(0.3) {
                        (
                            "namespace {".to_string(),
                            "(anonymous namespace)".to_string(),
                        )
                    } else {
                        (format!("namespace n{n} {{"), format!("n{n}"))
                    };
                    self.push(open);
                    let mut inner = scope.to_vec();
                    inner.push(component);
                    self.items(&inner, depth + 1);
                    self.push("}");
                }
                9 => {
                    self.push("#if defined(FEATURE_X)");
                    self.free_function(scope);
                    self.push("#endif");
                }
                _ => self.noise(),
            }
        }
    }

    fn extern_c(&mut self) {
        self.push("extern \"C\" {");
        for _ in 0..self.rng.gen_range(1..3) {
            let n = self.fresh();
            let line = self.next_line();
            self.push(format!("int cfn{n}(int x) {{"));
            let end = self.body_and_close();
            self.record(format!("cfn{n}(int)"), line, end, false);
        }
        self.push("}");
    }
}

pub fn generate<R: Rng>(rng: &mut R) -> Generated {
    let mut g = Gen {
        rng,
        lines: Vec::new(),
        expected: Vec::new(),
        counter: 0,
    };
    g.push("// generated translation unit");
    g.push("#include <cstddef>");
    for s in GLOBAL_STRUCTS {
        g.push(format!("struct {s} {{ int a; int b; }};"));
    }
    for _ in 0..g.rng.gen_range(1..4) {
        if g.rng.gen_bool(0.15) {
            g.extern_c();
        }
        g.items(&[], 0);
    }
    let mut text = g.lines.join("\n");
    text.push('\n');
    let mut expected = g.expected;
    expected.sort();
    Generated { text, expected }
}
