#ifndef APPPOP_JAVA_PARSER_HPP
#define APPPOP_JAVA_PARSER_HPP

// Structural Java parser. It recognizes declarations exactly and walks
// statement/expression bodies at token level, collecting the counters and
// references the metric layer needs. It does not build a full expression AST.

#include <apppop/java/lexer.hpp>
#include <apppop/java/model.hpp>

#include <deque>
#include <filesystem>
#include <string>
#include <unordered_set>

namespace apppop::java {

namespace detail {

inline double parse_number_literal(std::string_view text)
{
    std::string s;
    for (char c : text)
        if (c != '_') s += c;
    const bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
    const bool bin = s.size() > 2 && s[0] == '0' && (s[1] == 'b' || s[1] == 'B');
    if (!hex && !s.empty() && std::string_view("lLfFdD").find(s.back()) != std::string_view::npos) s.pop_back();
    if (hex && !s.empty() && (s.back() == 'l' || s.back() == 'L')) s.pop_back();
    try {
        if (bin) return static_cast<double>(std::stoull(s.substr(2), nullptr, 2));
        if (hex) {
            if (s.find_first_of("pP") != std::string::npos) return std::stod(s);
            return static_cast<double>(std::stoull(s.substr(2), nullptr, 16));
        }
        const bool is_float = s.find_first_of(".eE") != std::string::npos;
        if (!is_float && s.size() > 1 && s[0] == '0') return static_cast<double>(std::stoull(s, nullptr, 8));
        return std::stod(s);
    } catch (const std::exception&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

inline bool is_assignment_op(std::string_view op)
{
    return op == "=" || op == "+=" || op == "-=" || op == "*=" || op == "/=" || op == "%=" || op == "&=" ||
           op == "|=" || op == "^=" || op == "<<=" || op == ">>=" || op == ">>>=";
}

inline bool is_log_name(std::string_view s)
{
    return s == "Log" || s == "log" || s == "logger" || s == "println" || s == "printStackTrace";
}

}  // namespace detail

class Parser {
public:
    Parser(std::string_view source, std::string path) : src_(source), tokens_(tokenize(source))
    {
        unit_.path = std::move(path);
    }

    SourceUnit parse()
    {
        compute_code_lines();
        parse_compilation_unit();
        finalize_classes();
        return std::move(unit_);
    }

private:
    // -- token helpers -----------------------------------------------------

    const Token& tok(std::size_t i) const { return tokens_[std::min(i, tokens_.size() - 1)]; }
    const Token& peek(std::size_t k = 0) const { return tok(p_ + k); }
    bool at(std::string_view s, std::size_t k = 0) const { return peek(k).is(s); }
    bool at_ident(std::size_t k = 0) const { return peek(k).kind == Tok::identifier; }
    bool at_end() const { return peek().kind == Tok::end; }

    [[noreturn]] void fail(const std::string& msg) const
    {
        const Token& t = peek();
        if (t.kind == Tok::end) throw ParseError(t.line, "unexpected end of file: " + msg);
        throw ParseError(t.line, msg + " near '" + std::string(t.text) + "'");
    }

    const Token& expect(std::string_view s)
    {
        if (!at(s)) fail("expected '" + std::string(s) + "'");
        return tokens_[p_++];
    }

    std::string expect_ident()
    {
        if (!at_ident()) fail("expected identifier");
        return std::string(tokens_[p_++].text);
    }

    struct DepthGuard {
        explicit DepthGuard(Parser& p) : parser(p)
        {
            if (++parser.recursion_ > 400) throw ParseError(parser.peek().line, "nesting too deep");
        }
        ~DepthGuard() { --parser.recursion_; }
        Parser& parser;
    };

    /// Index of the token closing the bracket at `open`, or npos.
    std::size_t matching(std::size_t open) const
    {
        const auto o = tok(open).text;
        const std::string_view c = o == "(" ? ")" : o == "[" ? "]" : "}";
        int depth = 0;
        for (std::size_t i = open; i < tokens_.size(); ++i) {
            const Token& t = tokens_[i];
            if (t.kind != Tok::op) continue;
            if (t.text == o) ++depth;
            else if (t.text == c && --depth == 0) return i;
        }
        return std::string::npos;
    }

    // -- speculative type recognition ---------------------------------------

    std::size_t skip_annotation(std::size_t i) const
    {
        if (!tok(i).is("@") || tok(i + 1).is("interface")) return std::string::npos;
        ++i;
        if (tok(i).kind != Tok::identifier) return std::string::npos;
        ++i;
        while (tok(i).is(".") && tok(i + 1).kind == Tok::identifier) i += 2;
        if (tok(i).is("(")) {
            const auto close = matching(i);
            if (close == std::string::npos) return std::string::npos;
            i = close + 1;
        }
        return i;
    }

    std::size_t skip_type_args(std::size_t i) const
    {
        if (!tok(i).is("<")) return std::string::npos;
        ++i;
        if (tok(i).is(">")) return i + 1;
        while (true) {
            while (tok(i).is("@")) {
                i = skip_annotation(i);
                if (i == std::string::npos) return i;
            }
            if (tok(i).is("?")) {
                ++i;
                if (tok(i).is("extends") || tok(i).is("super")) {
                    i = skip_type(i + 1);
                    if (i == std::string::npos) return i;
                }
            } else {
                i = skip_type(i);
                if (i == std::string::npos) return i;
                if (tok(i).is("extends") || tok(i).is("super")) {
                    i = skip_type(i + 1);
                    if (i == std::string::npos) return i;
                }
            }
            while (tok(i).is("&")) {
                i = skip_type(i + 1);
                if (i == std::string::npos) return i;
            }
            if (tok(i).is(",")) {
                ++i;
                continue;
            }
            if (tok(i).is(">")) return i + 1;
            return std::string::npos;
        }
    }

    /// End index of a type starting at i, or npos when tokens do not form one.
    std::size_t skip_type(std::size_t i) const
    {
        while (tok(i).is("@")) {
            i = skip_annotation(i);
            if (i == std::string::npos) return i;
        }
        const Token& t = tok(i);
        if (t.kind == Tok::keyword && is_primitive_type(t.text)) {
            ++i;
        } else if (t.kind == Tok::identifier) {
            ++i;
            while (true) {
                if (tok(i).is("<")) {
                    i = skip_type_args(i);
                    if (i == std::string::npos) return i;
                }
                if (tok(i).is(".") && (tok(i + 1).kind == Tok::identifier || tok(i + 1).is("@"))) {
                    i += 1;
                    while (tok(i).is("@")) {
                        i = skip_annotation(i);
                        if (i == std::string::npos) return i;
                    }
                    if (tok(i).kind != Tok::identifier) return std::string::npos;
                    ++i;
                    continue;
                }
                break;
            }
        } else {
            return std::string::npos;
        }
        while (tok(i).is("[") && tok(i + 1).is("]")) i += 2;
        return i;
    }

    bool looks_like_local_var_decl() const
    {
        std::size_t i = p_;
        while (true) {
            if (tok(i).is("final")) {
                ++i;
                continue;
            }
            if (tok(i).is("@") && !tok(i + 1).is("interface")) {
                i = skip_annotation(i);
                if (i == std::string::npos) return false;
                continue;
            }
            break;
        }
        if (tok(i).is("void")) return false;
        const auto end = skip_type(i);
        if (end == std::string::npos) return false;
        return tok(end).kind == Tok::identifier && !tok(end + 1).is("(");
    }

    bool at_type_decl_start(std::size_t k = 0) const
    {
        const Token& t = peek(k);
        if (t.is("class") || t.is("interface") || t.is("enum")) return true;
        if (t.is("@") && peek(k + 1).is("interface")) return true;
        if (t.kind == Tok::identifier && t.text == "record" && peek(k + 1).kind == Tok::identifier &&
            (peek(k + 2).is("(") || peek(k + 2).is("<")))
            return true;
        return false;
    }

    // -- declarations -------------------------------------------------------

    unsigned parse_modifiers(bool allow_default)
    {
        unsigned mods = 0;
        while (true) {
            const Token& t = peek();
            if (t.is("@") && !peek(1).is("interface")) {
                const auto end = skip_annotation(p_);
                if (end == std::string::npos) fail("malformed annotation");
                p_ = end;
                continue;
            }
            unsigned bit = 0;
            if (t.is("public")) bit = kPublic;
            else if (t.is("private")) bit = kPrivate;
            else if (t.is("protected")) bit = kProtected;
            else if (t.is("static")) bit = kStatic;
            else if (t.is("final")) bit = kFinal;
            else if (t.is("abstract")) bit = kAbstract;
            else if (t.is("synchronized")) bit = kSynchronized;
            else if (t.is("native")) bit = kNative;
            else if (t.is("transient")) bit = kTransient;
            else if (t.is("volatile")) bit = kVolatile;
            else if (t.is("strictfp")) bit = kStrictfp;
            else if (allow_default && t.is("default") && !peek(1).is(":") && !peek(1).is("->")) bit = kDefault;
            else if (t.kind == Tok::identifier && t.text == "sealed" &&
                     (peek(1).kind == Tok::identifier || peek(1).kind == Tok::keyword))
                bit = kSealed;
            else if (t.kind == Tok::identifier && t.text == "non" && peek(1).is("-") &&
                     peek(2).text == "sealed") {
                p_ += 2;
                bit = kNonSealed;
            }
            if (!bit) break;
            mods |= bit;
            ++p_;
        }
        return mods;
    }

    void parse_compilation_unit()
    {
        // Package annotations.
        while (at("@") && !at("interface", 1)) {
            const auto end = skip_annotation(p_);
            if (end == std::string::npos) fail("malformed annotation");
            p_ = end;
        }
        if (at("package")) {
            ++p_;
            unit_.package = parse_qualified_name();
            expect(";");
        }
        while (at("import")) {
            ++p_;
            Import imp;
            if (at("static")) {
                imp.is_static = true;
                ++p_;
            }
            imp.name = expect_ident();
            while (at(".")) {
                ++p_;
                if (at("*")) {
                    ++p_;
                    imp.wildcard = true;
                    break;
                }
                imp.name += "." + expect_ident();
            }
            expect(";");
            unit_.imports.push_back(std::move(imp));
        }
        while (!at_end()) {
            if (at(";")) {
                ++p_;
                continue;
            }
            const std::size_t start = p_;
            const unsigned mods = parse_modifiers(false);
            if (!at_type_decl_start()) fail("expected type declaration");
            parse_type_declaration(mods, -1, start, false);
        }
    }

    std::string parse_qualified_name()
    {
        std::string name = expect_ident();
        while (at(".") && at_ident(1)) {
            p_ += 1;
            name += "." + expect_ident();
        }
        return name;
    }

    /// Parses a type at the cursor and returns its erased name. Every named
    /// type mentioned (including generic arguments) is appended to `refs`.
    std::string parse_type(std::vector<TypeRef>& refs)
    {
        DepthGuard guard(*this);
        while (at("@")) {
            const auto end = skip_annotation(p_);
            if (end == std::string::npos) fail("malformed annotation");
            p_ = end;
        }
        std::string name;
        const int line = peek().line;
        if (peek().kind == Tok::keyword && is_primitive_type(peek().text)) {
            name = std::string(peek().text);
            ++p_;
        } else if (at_ident()) {
            name = std::string(peek().text);
            ++p_;
            while (true) {
                if (at("<")) parse_type_args(refs);
                if (at(".") && (at_ident(1) || at("@", 1))) {
                    ++p_;
                    while (at("@")) {
                        const auto end = skip_annotation(p_);
                        if (end == std::string::npos) fail("malformed annotation");
                        p_ = end;
                    }
                    name += "." + expect_ident();
                    continue;
                }
                break;
            }
            if (name != "var") refs.push_back({name, line});
        } else {
            fail("expected type");
        }
        while (at("[") && at("]", 1)) p_ += 2;
        return name;
    }

    void parse_type_args(std::vector<TypeRef>& refs)
    {
        expect("<");
        if (at(">")) {
            ++p_;
            return;
        }
        while (true) {
            if (at("?")) {
                ++p_;
                if (at("extends") || at("super")) {
                    ++p_;
                    parse_type(refs);
                }
            } else {
                parse_type(refs);
                if (at("extends") || at("super")) {
                    ++p_;
                    parse_type(refs);
                }
            }
            while (at("&")) {
                ++p_;
                parse_type(refs);
            }
            if (at(",")) {
                ++p_;
                continue;
            }
            expect(">");
            return;
        }
    }

    void skip_type_params()
    {
        if (!at("<")) return;
        std::vector<TypeRef> ignored;
        parse_type_args(ignored);
    }

    int new_class(ClassKind kind, std::string simple, int enclosing, int line, std::size_t first_token)
    {
        ClassInfo c;
        c.simple_name = std::move(simple);
        c.kind = kind;
        c.package = unit_.package;
        c.enclosing = enclosing;
        c.line = line;
        c.first_token = first_token;
        if (enclosing < 0) {
            c.qualified_name = unit_.package.empty() ? c.simple_name : unit_.package + "." + c.simple_name;
        } else {
            auto& outer = classes_[static_cast<std::size_t>(enclosing)];
            if (kind == ClassKind::anonymous) {
                c.qualified_name = outer.qualified_name + "$" + std::to_string(++anon_counter_[enclosing]);
                c.simple_name = c.qualified_name.substr(c.qualified_name.rfind('.') + 1);
                ++outer.anonymous_classes;
            } else {
                c.qualified_name = outer.qualified_name + "." + c.simple_name;
                ++outer.inner_classes;
            }
        }
        classes_.push_back(std::move(c));
        return static_cast<int>(classes_.size() - 1);
    }

    ClassInfo& cls(int i) { return classes_[static_cast<std::size_t>(i)]; }

    void parse_type_declaration(unsigned mods, int enclosing, std::size_t start_token, bool local)
    {
        DepthGuard guard(*this);
        ClassKind kind = (enclosing < 0 && !local) ? ClassKind::normal : ClassKind::inner;
        bool is_enum = false, is_interface = false, is_record = false;
        if (at("@")) {
            p_ += 2;  // @interface
            kind = ClassKind::interface_decl;
            is_interface = true;
        } else if (at("interface")) {
            ++p_;
            kind = ClassKind::interface_decl;
            is_interface = true;
        } else if (at("enum")) {
            ++p_;
            kind = ClassKind::enum_decl;
            is_enum = true;
        } else if (at("class")) {
            ++p_;
        } else {
            ++p_;  // record
            is_record = true;
        }
        const int line = peek().line;
        const std::string name = expect_ident();
        const int ci = new_class(kind, name, enclosing, line, start_token);
        cls(ci).modifiers = mods | (is_interface ? kAbstract : 0u);
        skip_type_params();

        if (is_record) {
            expect("(");
            while (!at(")")) {
                parse_modifiers(false);
                FieldInfo f;
                f.type = parse_type(cls(ci).member_refs);
                if (at("...")) ++p_;
                f.line = peek().line;
                f.name = expect_ident();
                f.modifiers = kPrivate | kFinal;
                cls(ci).fields.push_back(std::move(f));
                if (at(",")) ++p_;
                else break;
            }
            expect(")");
        }
        if (at("extends")) {
            ++p_;
            do {
                if (at(",")) ++p_;
                const int tline = peek().line;
                std::vector<TypeRef> refs;
                std::string t = parse_type(refs);
                if (is_interface) cls(ci).interfaces.push_back({t, tline});
                else cls(ci).superclass = TypeRef{t, tline};
                for (auto& r : refs) cls(ci).member_refs.push_back(r);
            } while (at(","));
        }
        if (at("implements")) {
            ++p_;
            do {
                if (at(",")) ++p_;
                const int tline = peek().line;
                std::vector<TypeRef> refs;
                std::string t = parse_type(refs);
                cls(ci).interfaces.push_back({t, tline});
                for (auto& r : refs) cls(ci).member_refs.push_back(r);
            } while (at(","));
        }
        if (at_ident() && peek().text == "permits") {
            ++p_;
            std::vector<TypeRef> ignored;
            parse_type(ignored);
            while (at(",")) {
                ++p_;
                parse_type(ignored);
            }
        }
        parse_class_body(ci, is_enum, is_interface);
    }

    void parse_class_body(int ci, bool is_enum, bool is_interface)
    {
        DepthGuard guard(*this);
        expect("{");
        if (is_enum) parse_enum_constants(ci);
        while (!at("}")) {
            if (at_end()) fail("unclosed class body");
            parse_member(ci, is_interface);
        }
        cls(ci).last_token = p_;
        ++p_;
    }

    void parse_enum_constants(int ci)
    {
        while (true) {
            while (at("@")) {
                const auto end = skip_annotation(p_);
                if (end == std::string::npos) fail("malformed annotation");
                p_ = end;
            }
            if (at(";")) {
                ++p_;
                return;
            }
            if (at("}")) return;
            FieldInfo f;
            f.line = peek().line;
            f.name = expect_ident();
            f.type = cls(ci).simple_name;
            f.modifiers = kPublic | kStatic | kFinal;
            cls(ci).fields.push_back(f);
            Scope scope{ci, &cls(ci).init_facts, 0, true};
            if (at("(")) scan_call_args(scope);
            if (at("{")) {
                const int anon = new_class(ClassKind::anonymous, "", ci, peek().line, p_);
                cls(anon).superclass = TypeRef{cls(ci).simple_name, peek().line};
                parse_class_body(anon, false, false);
            }
            if (at(",")) {
                ++p_;
                continue;
            }
            if (at(";")) {
                ++p_;
                return;
            }
            if (at("}")) return;
            fail("malformed enum constant list");
        }
    }

    void parse_member(int ci, bool is_interface)
    {
        if (at(";")) {
            ++p_;
            return;
        }
        if (at("{") || (at("static") && at("{", 1))) {
            if (at("static")) ++p_;
            Scope scope{ci, &cls(ci).init_facts, 0, false};
            parse_block_contents(scope, 0);
            return;
        }
        const std::size_t start = p_;
        unsigned mods = parse_modifiers(true);
        if (at_type_decl_start()) {
            parse_type_declaration(mods, ci, start, false);
            return;
        }
        if (is_interface) {
            if (!(mods & (kPrivate | kProtected))) mods |= kPublic;
        }
        skip_type_params();
        const int line = peek().line;
        // Constructor: Name ( ... )  or compact record constructor: Name {
        if (at_ident() && peek().text == cls(ci).simple_name && (at("(", 1) || at("{", 1))) {
            parse_method(ci, mods, true, start, line);
            return;
        }
        std::vector<TypeRef> type_refs;
        const std::string type = parse_type(type_refs);
        if (at_ident() && at("(", 1)) {
            parse_method(ci, mods, false, start, line, type_refs);
            return;
        }
        // Field declarators.
        if (is_interface) mods |= kPublic | kStatic | kFinal;
        for (auto& r : type_refs) cls(ci).member_refs.push_back(r);
        while (true) {
            FieldInfo f;
            f.line = peek().line;
            f.name = expect_ident();
            f.type = type;
            f.modifiers = mods;
            while (at("[") && at("]", 1)) p_ += 2;
            cls(ci).init_facts.declared_names.push_back(f.name);
            cls(ci).fields.push_back(f);
            if (at("=")) {
                ++p_;
                Scope scope{ci, &cls(ci).init_facts, 0, (mods & kFinal) != 0};
                scan_expression(scope, {",", ";"});
            }
            if (at(",")) {
                ++p_;
                continue;
            }
            expect(";");
            return;
        }
    }

    void parse_method(int ci, unsigned mods, bool ctor, std::size_t start, int line,
                      std::vector<TypeRef> return_refs = {})
    {
        DepthGuard guard(*this);
        MethodInfo m;
        m.is_constructor = ctor;
        m.modifiers = mods;
        m.line = line;
        m.name = expect_ident();
        m.signature_refs = std::move(return_refs);
        if (at("(")) {
            ++p_;
            while (!at(")")) {
                parse_modifiers(false);
                if (at_ident() && peek().text == cls(ci).simple_name && at(".", 1) && at("this", 2)) {
                    p_ += 3;  // receiver parameter
                } else {
                    Parameter param;
                    param.type = parse_type(m.signature_refs);
                    if (at("...")) {
                        ++p_;
                        param.type += "[]";
                    }
                    if (at("this")) {
                        ++p_;
                    } else {
                        param.name = expect_ident();
                        while (at("[") && at("]", 1)) p_ += 2;
                        m.facts.declared_names.push_back(param.name);
                        m.facts.local_types[param.name] = param.type;
                        m.parameters.push_back(std::move(param));
                    }
                }
                if (at(",")) ++p_;
                else if (!at(")")) fail("malformed parameter list");
            }
            ++p_;
        }
        while (at("[") && at("]", 1)) p_ += 2;
        if (at("throws")) {
            ++p_;
            parse_type(m.signature_refs);
            while (at(",")) {
                ++p_;
                parse_type(m.signature_refs);
            }
        }
        const bool in_interface = cls(ci).kind == ClassKind::interface_decl;
        // Method bodies and their stats belong to this method's facts.
        int method_index = static_cast<int>(cls(ci).methods.size());
        cls(ci).methods.push_back(MethodInfo{});
        if (at("{")) {
            m.has_body = true;
            Scope scope{ci, &m.facts, 0, false};
            parse_block_contents(scope, 0);
        } else {
            if (at("default")) {  // annotation member default
                ++p_;
                Scope scope{ci, &m.facts, 0, false};
                scan_expression(scope, {";"});
            }
            expect(";");
            if (in_interface && !(mods & (kStatic | kDefault | kPrivate))) m.modifiers |= kAbstract;
        }
        const std::size_t end = p_ - 1;
        span_stats(start, end, m.facts.stats, &m.loc);
        cls(ci).methods[static_cast<std::size_t>(method_index)] = std::move(m);
    }

    // -- statements ---------------------------------------------------------

    struct Scope {
        int cls;
        CodeFacts* facts;
        int depth;  // nesting of the statement currently being parsed
        bool final_field_init;
    };

    struct StatementDepth {
        StatementDepth(Scope& s, int d) : scope(s), saved(s.depth) { s.depth = d; }
        ~StatementDepth() { scope.depth = saved; }
        Scope& scope;
        int saved;
    };

    void note_depth(Scope& s, int depth)
    {
        if (depth > s.facts->stats.max_nesting) s.facts->stats.max_nesting = depth;
    }

    /// `{ stmts }` whose statements sit at nesting `depth`.
    void parse_block_contents(Scope& s, int depth)
    {
        DepthGuard guard(*this);
        note_depth(s, depth);
        expect("{");
        while (!at("}")) {
            if (at_end()) fail("unclosed block");
            parse_statement(s, depth);
        }
        ++p_;
    }

    /// Body of a control statement: nested one level deeper than `depth`.
    void parse_body(Scope& s, int depth)
    {
        if (at("{")) parse_block_contents(s, depth + 1);
        else {
            note_depth(s, depth + 1);
            parse_statement(s, depth + 1);
        }
    }

    void record_statement_length(Scope& s, std::size_t first, std::size_t last)
    {
        const auto text = src_.substr(tok(first).begin, tok(last).end - tok(first).begin);
        int len = 0;
        bool in_space = false;
        for (char c : text) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                in_space = true;
                continue;
            }
            if (in_space) ++len;
            in_space = false;
            ++len;
        }
        s.facts->statement_lengths.push_back(len);
    }

    void parse_paren_expression(Scope& s)
    {
        expect("(");
        scan_expression(s, {")"});
        expect(")");
    }

    void parse_statement(Scope& s, int depth)
    {
        DepthGuard guard(*this);
        StatementDepth at_depth(s, depth);
        StatementStats& st = s.facts->stats;
        const std::size_t first = p_;
        const Token& t = peek();

        if (at("{")) {
            parse_block_contents(s, depth + 1);
            return;
        }
        if (at(";")) {
            ++p_;
            return;
        }
        if (at("if")) {
            ++p_;
            ++st.if_count;
            parse_paren_expression(s);
            parse_body(s, depth);
            if (at("else")) {
                ++p_;
                if (at("if")) parse_statement(s, depth);
                else parse_body(s, depth);
            }
            return;
        }
        if (at("while")) {
            ++p_;
            ++st.loop_count;
            parse_paren_expression(s);
            parse_body(s, depth);
            return;
        }
        if (at("do")) {
            ++p_;
            ++st.loop_count;
            parse_body(s, depth);
            expect("while");
            parse_paren_expression(s);
            expect(";");
            return;
        }
        if (at("for")) {
            ++p_;
            ++st.loop_count;
            parse_for_header(s);
            parse_body(s, depth);
            return;
        }
        if (at("switch")) {
            ++p_;
            parse_paren_expression(s);
            parse_switch_body(s, depth);
            return;
        }
        if (at("try")) {
            parse_try(s, depth);
            return;
        }
        if (at("synchronized") && at("(", 1)) {
            ++p_;
            parse_paren_expression(s);
            parse_block_contents(s, depth + 1);
            return;
        }
        if (at("return")) {
            ++p_;
            ++st.return_count;
            if (!at(";")) scan_expression(s, {";"});
            record_statement_length(s, first, p_);
            expect(";");
            return;
        }
        if (at("throw") || at("assert")) {
            ++p_;
            scan_expression(s, {";"});
            record_statement_length(s, first, p_);
            expect(";");
            return;
        }
        if (at("break") || at("continue")) {
            ++p_;
            if (at_ident()) ++p_;
            expect(";");
            return;
        }
        if (t.kind == Tok::identifier && t.text == "yield" && !at("=", 1) && !at("(", 1) && !at(".", 1) &&
            !at("[", 1) && !at("++", 1) && !at("--", 1)) {
            ++p_;
            scan_expression(s, {";"});
            record_statement_length(s, first, p_);
            expect(";");
            return;
        }
        if (at_ident() && at(":", 1)) {  // label
            p_ += 2;
            parse_statement(s, depth);
            return;
        }
        // Local type declarations.
        {
            std::size_t k = 0;
            while (peek(k).is("final") || peek(k).is("abstract") || peek(k).is("static") ||
                   peek(k).is("strictfp"))
                ++k;
            if (at_type_decl_start(k)) {
                const unsigned mods = parse_modifiers(false);
                parse_type_declaration(mods, s.cls, first, true);
                return;
            }
        }
        if (looks_like_local_var_decl()) {
            parse_local_var_decl(s, {";"});
            record_statement_length(s, first, p_);
            expect(";");
            return;
        }
        scan_expression(s, {";"});
        record_statement_length(s, first, p_);
        expect(";");
    }

    void parse_local_var_decl(Scope& s, std::initializer_list<std::string_view> terminators)
    {
        parse_modifiers(false);
        const std::string type = parse_type(s.facts->type_refs);
        while (true) {
            const std::string name = expect_ident();
            while (at("[") && at("]", 1)) p_ += 2;
            ++s.facts->stats.variable_decl_count;
            s.facts->declared_names.push_back(name);
            s.facts->local_types[name] = type;
            if (at("=")) {
                ++p_;
                std::vector<std::string_view> stops(terminators);
                stops.push_back(",");
                scan_expression(s, stops);
            }
            if (at(",")) {
                ++p_;
                continue;
            }
            return;
        }
    }

    void parse_for_header(Scope& s)
    {
        expect("(");
        if (looks_like_local_var_decl()) {
            parse_local_var_decl(s, {";", ":"});
            if (at(":")) {
                ++p_;
                scan_expression(s, {")"});
                expect(")");
                return;
            }
        } else if (!at(";")) {
            scan_expression(s, {";"});
        }
        expect(";");
        if (!at(";")) scan_expression(s, {";"});
        expect(";");
        if (!at(")")) scan_expression(s, {")"});
        expect(")");
    }

    void parse_try(Scope& s, int depth)
    {
        StatementStats& st = s.facts->stats;
        expect("try");
        ++st.try_catch_count;
        if (at("(")) {
            ++p_;
            while (!at(")")) {
                if (looks_like_local_var_decl()) parse_local_var_decl(s, {";", ")"});
                else scan_expression(s, {";", ")"});
                if (at(";")) ++p_;
            }
            ++p_;
        }
        parse_block_contents(s, depth + 1);
        while (at("catch")) {
            ++p_;
            ++st.catch_count;
            expect("(");
            parse_modifiers(false);
            const std::string type = parse_type(s.facts->type_refs);
            while (at("|")) {
                ++p_;
                parse_type(s.facts->type_refs);
            }
            const std::string name = expect_ident();
            s.facts->local_types[name] = type;
            expect(")");
            if (at("{") && at("}", 1)) ++s.facts->empty_catch_count;
            parse_block_contents(s, depth + 1);
        }
        if (at("finally")) {
            ++p_;
            parse_block_contents(s, depth + 1);
        }
    }

    /// Switch statement or expression body; statements sit one level deeper.
    void parse_switch_body(Scope& s, int depth)
    {
        DepthGuard guard(*this);
        StatementStats& st = s.facts->stats;
        expect("{");
        bool has_default = false;
        note_depth(s, depth + 1);
        while (!at("}")) {
            if (at_end()) fail("unclosed switch");
            if (at("case") || at("default")) {
                if (at("default")) {
                    has_default = true;
                    ++p_;
                } else {
                    ++p_;
                    ++st.case_count;
                    // Labels may contain `default` (case null, default).
                    for (std::size_t i = p_; i < tokens_.size() && !tok(i).is(":") && !tok(i).is("->"); ++i) {
                        if (tok(i).is("default")) has_default = true;
                        if (tok(i).is("{") || tok(i).is(";") || tok(i).kind == Tok::end) break;
                    }
                    scan_expression(s, {":", "->"});
                }
                if (at("->")) {
                    ++p_;
                    const std::size_t first = p_;
                    if (at("{")) {
                        parse_block_contents(s, depth + 1);
                    } else if (at("throw")) {
                        parse_statement(s, depth + 1);
                    } else {
                        scan_expression(s, {";"});
                        record_statement_length(s, first, p_);
                        expect(";");
                    }
                } else {
                    expect(":");
                }
                continue;
            }
            parse_statement(s, depth + 1);
        }
        ++p_;
        if (!has_default) ++s.facts->missing_default_count;
    }

    // -- expressions --------------------------------------------------------

    bool is_stop(std::size_t i, const std::vector<std::string_view>& stops) const
    {
        const Token& t = tok(i);
        if (t.kind != Tok::op && t.kind != Tok::keyword) return false;
        for (auto s : stops)
            if (t.text == s) return true;
        return false;
    }

    void scan_call_args(Scope& s)
    {
        expect("(");
        if (!at(")")) scan_expression(s, {")"});
        expect(")");
    }

    int count_args(std::size_t open) const
    {
        const auto close = matching(open);
        if (close == std::string::npos || close == open + 1) return 0;
        int depth = 0, args = 1;
        for (std::size_t i = open + 1; i < close; ++i) {
            const Token& t = tok(i);
            if (t.kind != Tok::op) continue;
            if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
            else if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
            else if (t.text == "," && depth == 0) ++args;
            else if (t.text == "<") {
                // Generic arguments inside calls, e.g. foo(new HashMap<K, V>()).
                const auto end = skip_type_args(i);
                if (end != std::string::npos && end < close &&
                    (tok(i - 1).is(".") || tok(end).is("(") || tok(end).is("::") || tok(end).is("{")))
                    i = end - 1;
            }
        }
        return args;
    }

    bool is_cast_at(std::size_t open) const
    {
        const auto close = matching(open);
        if (close == std::string::npos) return false;
        std::size_t end = skip_type(open + 1);
        while (end != std::string::npos && tok(end).is("&")) end = skip_type(end + 1);
        if (end != close) return false;
        const Token& first = tok(open + 1);
        if (first.kind == Tok::keyword && is_primitive_type(first.text)) return true;
        const Token& next = tok(close + 1);
        const bool operand = next.kind == Tok::identifier || next.kind == Tok::number ||
                             next.kind == Tok::string || next.kind == Tok::character || next.is("(") ||
                             next.is("this") || next.is("new") || next.is("super") || next.is("!") ||
                             next.is("~") || next.is("true") || next.is("false") || next.is("null");
        if (!operand) return false;
        // Lower-case single names are far more likely parenthesized variables.
        return first.kind == Tok::identifier && std::isupper(static_cast<unsigned char>(first.text[0]));
    }

    bool unary_context(std::size_t i) const
    {
        if (i == 0) return true;
        const Token& prev = tok(i - 1);
        if (prev.kind == Tok::op)
            return !(prev.is(")") || prev.is("]") || prev.is("++") || prev.is("--") || prev.is("}"));
        return prev.is("return") || prev.is("case") || prev.is("yield") || prev.is("throw");
    }

    /// Walks an expression until one of `stops` appears at bracket depth 0,
    /// or an unmatched closer. Handles lambdas, anonymous classes, switch
    /// expressions and array initializers by delegating to the statement and
    /// class parsers.
    void scan_expression(Scope& s, std::vector<std::string_view> stops)
    {
        DepthGuard guard(*this);
        CodeFacts& f = *s.facts;
        StatementStats& st = f.stats;
        int depth = 0;
        while (true) {
            const Token& t = peek();
            if (t.kind == Tok::end) fail("unterminated expression");
            if (depth == 0 && is_stop(p_, stops)) return;
            if (t.kind == Tok::op && (t.text == ")" || t.text == "]" || t.text == "}")) {
                if (depth == 0) return;
                --depth;
                ++p_;
                continue;
            }
            const std::size_t i = p_;
            switch (t.kind) {
                case Tok::number: {
                    ++st.number_literal_count;
                    double v = detail::parse_number_literal(t.text);
                    if (i > 0 && tok(i - 1).is("-") && unary_context(i - 1)) v = -v;
                    if (!std::isnan(v)) f.numbers.push_back({v, t.line, s.final_field_init});
                    ++p_;
                    continue;
                }
                case Tok::string:
                    ++st.string_literal_count;
                    ++p_;
                    continue;
                case Tok::character:
                    ++p_;
                    continue;
                case Tok::identifier: {
                    scan_identifier(s);
                    continue;
                }
                default:
                    break;
            }
            // keywords
            if (t.is("new")) {
                scan_new(s);
                continue;
            }
            if (t.is("switch")) {
                ++p_;
                parse_paren_expression(s);
                parse_switch_body(s, s.depth);
                continue;
            }
            if (t.is("instanceof")) {
                ++p_;
                if (at("final")) ++p_;
                parse_type(f.type_refs);
                if (at_ident() && !at("(", 1)) {
                    // pattern binding
                    f.local_types[std::string(peek().text)] = "";
                    ++p_;
                }
                continue;
            }
            if (t.is("this") || t.is("super")) {
                if (at(".", 1) && at_ident(2) && !at("(", 3)) f.names_used.insert(std::string(peek(2).text));
                if (at("(", 1)) {
                    // explicit constructor call this(...) / super(...)
                    f.invocations.push_back({std::string(t.text), count_args(p_ + 1), "ctor", t.line});
                    p_ += 1;
                    ++depth;
                    ++p_;
                    continue;
                }
                ++p_;
                continue;
            }
            if (t.kind == Tok::keyword) {
                ++p_;
                continue;
            }
            // operators
            const auto op = t.text;
            if (op == "(") {
                if (i > 0 && (tok(i - 1).kind == Tok::identifier || tok(i - 1).is(">"))) {
                    // call parentheses: handled in scan_identifier; generic calls here
                } else {
                    const auto close = matching(i);
                    if (close != std::string::npos && tok(close + 1).is("->")) {
                        // lambda parameter list
                        for (std::size_t k = i + 1; k < close; ++k)
                            if (tok(k).kind == Tok::identifier && (tok(k + 1).is(",") || k + 1 == close))
                                f.local_types[std::string(tok(k).text)] = "";
                        p_ = close + 1;
                        continue;
                    }
                    if (is_cast_at(i)) {
                        ++p_;
                        parse_type(f.type_refs);
                        while (at("&")) {
                            ++p_;
                            parse_type(f.type_refs);
                        }
                        expect(")");
                        continue;
                    }
                    ++st.parenthesized_expr_count;
                }
                ++depth;
                ++p_;
                continue;
            }
            if (op == "[") {
                ++depth;
                ++p_;
                continue;
            }
            if (op == "{") {
                // array initializer
                ++depth;
                ++p_;
                continue;
            }
            if (op == "->") {
                ++st.lambda_count;
                ++p_;
                if (at("{")) parse_block_contents(s, s.depth + 1);
                continue;
            }
            if (op == "::") {
                p_ += 2;  // method reference target
                continue;
            }
            if (op == "<") {
                if (i > 0 && tok(i - 1).is(".")) {
                    const auto end = skip_type_args(i);
                    if (end != std::string::npos) {
                        p_ = end;
                        continue;
                    }
                }
                ++st.comparison_count;
                ++p_;
                continue;
            }
            if (op == ">") {
                // adjacent '>' tokens form a shift operator
                std::size_t k = i;
                while (tok(k + 1).is(">") && tok(k + 1).begin == tok(k).end) ++k;
                if (tok(k + 1).is(">=") && tok(k + 1).begin == tok(k).end) {
                    ++st.assignment_count;  // >>= or >>>=
                    p_ = k + 2;
                    continue;
                }
                if (k == i) ++st.comparison_count;
                p_ = k + 1;
                continue;
            }
            if (op == "==" || op == "!=" || op == "<=" || op == ">=") {
                ++st.comparison_count;
            } else if (op == "&&" || op == "||") {
                ++st.logical_op_count;
            } else if (op == "?") {
                ++st.ternary_count;
            } else if (detail::is_assignment_op(op)) {
                ++st.assignment_count;
            } else if (op == "+" || op == "-" || op == "*" || op == "/" || op == "%" || op == "++" ||
                       op == "--") {
                ++st.math_op_count;
            } else if (op == "@") {
                const auto end = skip_annotation(i);
                if (end != std::string::npos) {
                    p_ = end;
                    continue;
                }
            }
            ++p_;
        }
    }

    void scan_identifier(Scope& s)
    {
        CodeFacts& f = *s.facts;
        const std::size_t i = p_;
        const Token& t = tok(i);
        const bool after_dot = i > 0 && tok(i - 1).is(".");
        if (tok(i + 1).is("(")) {
            Invocation inv;
            inv.name = std::string(t.text);
            inv.arg_count = count_args(i + 1);
            inv.line = t.line;
            if (after_dot) {
                const Token& r = tok(i - 2);
                const bool simple_receiver = (r.kind == Tok::identifier || r.is("this") || r.is("super")) &&
                                             !(i >= 3 && tok(i - 3).is("."));
                if (simple_receiver) inv.receiver = std::string(r.text);
                else if (r.kind == Tok::identifier && i >= 3 && tok(i - 3).is(".") &&
                         tok(i - 4).is("this"))
                    inv.receiver = std::string(r.text);  // this.field.call()
                else inv.receiver = "?";
            }
            if (detail::is_log_name(inv.name) || detail::is_log_name(inv.receiver)) ++f.stats.log_statement_count;
            f.invocations.push_back(std::move(inv));
            p_ += 1;  // the '(' is consumed by scan_expression as a call paren
            return;
        }
        if (!after_dot) {
            f.names_used.insert(std::string(t.text));
            if (std::isupper(static_cast<unsigned char>(t.text[0]))) {
                f.type_refs.push_back({std::string(t.text), t.line});
            } else if (tok(i + 1).is(".") && tok(i + 2).kind == Tok::identifier) {
                // package-qualified name such as com.example.Foo
                std::string name(t.text);
                std::size_t k = i + 1;
                while (tok(k).is(".") && tok(k + 1).kind == Tok::identifier) {
                    name += "." + std::string(tok(k + 1).text);
                    if (std::isupper(static_cast<unsigned char>(tok(k + 1).text[0]))) {
                        f.type_refs.push_back({name, t.line});
                        break;
                    }
                    k += 2;
                }
            }
        }
        ++p_;
    }

    void scan_new(Scope& s)
    {
        CodeFacts& f = *s.facts;
        expect("new");
        while (at("@")) {
            const auto end = skip_annotation(p_);
            if (end == std::string::npos) fail("malformed annotation");
            p_ = end;
        }
        const int line = peek().line;
        std::string type;
        if (peek().kind == Tok::keyword && is_primitive_type(peek().text)) {
            type = std::string(peek().text);
            ++p_;
        } else {
            type = expect_ident();
            while (true) {
                if (at("<")) parse_type_args(f.type_refs);
                if (at(".") && at_ident(1)) {
                    ++p_;
                    type += "." + expect_ident();
                    continue;
                }
                break;
            }
            f.type_refs.push_back({type, line});
        }
        if (at("[")) {
            // array creation: dims then optional initializer, left to the scanner
            return;
        }
        if (!at("(")) fail("malformed instance creation");
        f.instantiations.push_back({type, line});
        scan_call_args(s);
        if (at("{")) {
            const int anon = new_class(ClassKind::anonymous, "", s.cls, line, p_);
            cls(anon).superclass = TypeRef{type, line};
            const int saved = s.cls;
            parse_class_body(anon, false, false);
            s.cls = saved;
        }
    }

    // -- span statistics ----------------------------------------------------

    void compute_code_lines()
    {
        int max_line = 1;
        for (const auto& t : tokens_) max_line = std::max(max_line, t.end_line);
        has_code_.assign(static_cast<std::size_t>(max_line) + 2, false);
        for (const auto& t : tokens_) {
            if (t.kind == Tok::end) continue;
            for (int l = t.line; l <= t.end_line; ++l) has_code_[static_cast<std::size_t>(l)] = true;
        }
        line_starts_.push_back(0);
        for (std::size_t i = 0; i < src_.size(); ++i)
            if (src_[i] == '\n') line_starts_.push_back(i + 1);
        int loc = 0;
        for (bool b : has_code_) loc += b ? 1 : 0;
        unit_.loc = loc;
    }

    std::string_view line_text(int line) const
    {
        const auto idx = static_cast<std::size_t>(line - 1);
        if (idx >= line_starts_.size()) return {};
        const auto b = line_starts_[idx];
        const auto e = idx + 1 < line_starts_.size() ? line_starts_[idx + 1] : src_.size();
        return src_.substr(b, e - b);
    }

    /// LOC, line lengths, identifier lengths and distinct words for the
    /// method spanning tokens [first, last].
    void span_stats(std::size_t first, std::size_t last, StatementStats& st, int* loc)
    {
        int lines = 0;
        st.line_lengths.clear();
        for (int l = tok(first).line; l <= tok(last).end_line; ++l) {
            if (static_cast<std::size_t>(l) >= has_code_.size() || !has_code_[static_cast<std::size_t>(l)]) continue;
            ++lines;
            st.line_lengths.push_back(static_cast<int>(trim(line_text(l)).size()));
        }
        *loc = std::max(lines, 1);
        std::set<std::string> words;
        st.identifier_lengths.clear();
        for (std::size_t i = first; i <= last; ++i) {
            const Token& t = tok(i);
            if (t.kind == Tok::identifier) st.identifier_lengths.push_back(static_cast<int>(t.text.size()));
            if (t.kind != Tok::op && t.kind != Tok::end) split_words(t.text, words);
        }
        st.unique_word_count = static_cast<int>(words.size());
    }

    void finalize_classes()
    {
        // Owner of each token = innermost class whose span contains it.
        std::vector<int> owner(tokens_.size(), -1);
        std::vector<int> order(classes_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const auto& ca = cls(a);
            const auto& cb = cls(b);
            if (ca.first_token != cb.first_token) return ca.first_token < cb.first_token;
            return ca.last_token > cb.last_token;
        });
        for (int c : order)
            for (std::size_t i = cls(c).first_token; i <= cls(c).last_token && i < owner.size(); ++i) owner[i] = c;

        std::vector<std::set<int>> lines(classes_.size());
        std::vector<std::set<std::string>> words(classes_.size());
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            const int c = owner[i];
            if (c < 0) continue;
            const Token& t = tokens_[i];
            for (int l = t.line; l <= t.end_line; ++l) lines[static_cast<std::size_t>(c)].insert(l);
            if (t.kind != Tok::op) split_words(t.text, words[static_cast<std::size_t>(c)]);
        }
        for (std::size_t c = 0; c < classes_.size(); ++c) {
            auto& ci = classes_[c];
            ci.loc = std::max<int>(1, static_cast<int>(lines[c].size()));
            ci.unique_word_count = static_cast<int>(words[c].size());
            unit_.classes.push_back(std::move(ci));
        }
    }

    std::string_view src_;
    std::vector<Token> tokens_;
    std::size_t p_ = 0;
    int recursion_ = 0;
    SourceUnit unit_;
    std::deque<ClassInfo> classes_;  // stable addresses while nested bodies are parsed
    std::map<int, int> anon_counter_;
    std::vector<bool> has_code_;
    std::vector<std::size_t> line_starts_;
};

/// Parses one file. Syntax errors are captured in `SourceUnit::error`.
inline SourceUnit parse_source(std::string_view source, const std::string& path)
{
    try {
        return Parser(source, path).parse();
    } catch (const ParseError& e) {
        SourceUnit u;
        u.path = path;
        u.error = e;
        return u;
    }
}

inline SourceUnit parse_unit(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = read_file(path.string());
    } catch (const DataError& e) {
        SourceUnit u;
        u.path = path.string();
        u.error = ParseError(0, e.what());
        return u;
    }
    return parse_source(text, path.string());
}

}  // namespace apppop::java

#endif  // APPPOP_JAVA_PARSER_HPP
