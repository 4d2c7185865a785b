#ifndef APPPOP_JAVA_LEXER_HPP
#define APPPOP_JAVA_LEXER_HPP

#include <apppop/java/model.hpp>

#include <array>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace apppop::java {

enum class Tok { identifier, keyword, number, string, character, op, end };

struct Token {
    Tok kind = Tok::end;
    std::string_view text;
    int line = 0;
    int end_line = 0;
    std::size_t begin = 0, end = 0;  // byte offsets into the source

    bool is(std::string_view s) const { return (kind == Tok::op || kind == Tok::keyword) && text == s; }
};

inline bool is_java_keyword(std::string_view s)
{
    static const std::unordered_set<std::string_view> kKeywords = {
        "abstract", "assert",     "boolean",   "break",     "byte",      "case",       "catch",
        "char",     "class",      "const",     "continue",  "default",   "do",         "double",
        "else",     "enum",       "extends",   "final",     "finally",   "float",      "for",
        "goto",     "if",         "implements", "import",   "instanceof", "int",       "interface",
        "long",     "native",     "new",       "package",   "private",   "protected",  "public",
        "return",   "short",      "static",    "strictfp",  "super",     "switch",     "synchronized",
        "this",     "throw",      "throws",    "transient", "try",       "void",       "volatile",
        "while",    "true",       "false",     "null"};
    return kKeywords.count(s) > 0;
}

inline bool is_primitive_type(std::string_view s)
{
    return s == "boolean" || s == "byte" || s == "char" || s == "short" || s == "int" || s == "long" ||
           s == "float" || s == "double" || s == "void";
}

/// Tokenizes Java source. Comments and whitespace are dropped. `>` is always
/// emitted as a single token (except in `>=`, `>>=`, `>>>=`) so that nested
/// generic closers need no re-splitting; shifts are recognized downstream by
/// adjacency.
class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        while (true) {
            skip_space_and_comments();
            if (pos_ >= src_.size()) break;
            out.push_back(next_token());
        }
        Token end;
        end.kind = Tok::end;
        end.line = end.end_line = line_;
        end.begin = end.end = src_.size();
        out.push_back(end);
        return out;
    }

private:
    static bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
    static bool ident_part(unsigned char c) { return ident_start(c) || std::isdigit(c); }

    char at(std::size_t i) const { return i < src_.size() ? src_[i] : '\0'; }

    void skip_space_and_comments()
    {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '/' && at(pos_ + 1) == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else if (c == '/' && at(pos_ + 1) == '*') {
                const int start_line = line_;
                pos_ += 2;
                while (pos_ < src_.size() && !(src_[pos_] == '*' && at(pos_ + 1) == '/')) {
                    if (src_[pos_] == '\n') ++line_;
                    ++pos_;
                }
                if (pos_ >= src_.size()) throw ParseError(start_line, "unterminated block comment");
                pos_ += 2;
            } else {
                break;
            }
        }
    }

    Token make(Tok kind, std::size_t begin, int line)
    {
        Token t;
        t.kind = kind;
        t.begin = begin;
        t.end = pos_;
        t.line = line;
        t.end_line = line_;
        t.text = src_.substr(begin, pos_ - begin);
        return t;
    }

    Token next_token()
    {
        const std::size_t begin = pos_;
        const int line = line_;
        const unsigned char c = static_cast<unsigned char>(src_[pos_]);

        if (ident_start(c)) {
            while (pos_ < src_.size() && ident_part(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            Token t = make(Tok::identifier, begin, line);
            if (is_java_keyword(t.text)) t.kind = Tok::keyword;
            return t;
        }
        if (std::isdigit(c) || (c == '.' && std::isdigit(static_cast<unsigned char>(at(pos_ + 1))))) {
            lex_number();
            return make(Tok::number, begin, line);
        }
        if (c == '"') {
            if (at(pos_ + 1) == '"' && at(pos_ + 2) == '"') {
                lex_text_block(line);
            } else {
                lex_quoted('"', line);
            }
            return make(Tok::string, begin, line);
        }
        if (c == '\'') {
            lex_quoted('\'', line);
            return make(Tok::character, begin, line);
        }
        static constexpr std::array<std::string_view, 30> kOps = {
            ">>>=", "<<=", ">>=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
            "+=",   "-=",  "*=",  "/=",  "&=", "|=", "^=", "%=", "<<", "(",  ")",  "{",  "}",  "[",
            "]",    ";"};
        for (auto op : kOps) {
            if (src_.compare(pos_, op.size(), op) == 0) {
                pos_ += op.size();
                return make(Tok::op, begin, line);
            }
        }
        static constexpr std::string_view kSingle = ",.@=><!~?:+-*/&|^%";
        if (kSingle.find(static_cast<char>(c)) != std::string_view::npos) {
            ++pos_;
            return make(Tok::op, begin, line);
        }
        if (c == '\\' && at(pos_ + 1) == 'u') {
            // Unicode escape outside literals; treat as an identifier fragment.
            pos_ += 2;
            while (pos_ < src_.size() && std::isxdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            return make(Tok::identifier, begin, line);
        }
        throw ParseError(line, std::string("unexpected character '") + static_cast<char>(c) + "'");
    }

    void lex_number()
    {
        bool hex = false;
        if (src_[pos_] == '0' && (at(pos_ + 1) == 'x' || at(pos_ + 1) == 'X')) {
            hex = true;
            pos_ += 2;
        }
        bool seen_dot = false;
        while (pos_ < src_.size()) {
            const char ch = src_[pos_];
            if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_') {
                const bool exp = hex ? (ch == 'p' || ch == 'P') : (ch == 'e' || ch == 'E');
                ++pos_;
                if (exp && (at(pos_) == '+' || at(pos_) == '-')) ++pos_;
            } else if (ch == '.' && !seen_dot && !std::isalpha(static_cast<unsigned char>(at(pos_ + 1))) &&
                       at(pos_ + 1) != '.') {
                seen_dot = true;
                ++pos_;
            } else if (ch == '.' && !seen_dot && !hex &&
                       std::string_view("eEfFdD").find(at(pos_ + 1)) != std::string_view::npos &&
                       !ident_part(static_cast<unsigned char>(at(pos_ + 2)))) {
                seen_dot = true;
                ++pos_;
            } else {
                break;
            }
        }
    }

    void lex_quoted(char q, int start_line)
    {
        ++pos_;
        while (pos_ < src_.size() && src_[pos_] != q) {
            if (src_[pos_] == '\n') throw ParseError(start_line, "unterminated literal");
            if (src_[pos_] == '\\') ++pos_;
            ++pos_;
        }
        if (pos_ >= src_.size()) throw ParseError(start_line, "unterminated literal");
        ++pos_;
    }

    void lex_text_block(int start_line)
    {
        pos_ += 3;
        while (pos_ < src_.size()) {
            if (src_[pos_] == '\\') {
                pos_ += 2;
                continue;
            }
            if (src_[pos_] == '\n') ++line_;
            if (src_.compare(pos_, 3, "\"\"\"") == 0) {
                pos_ += 3;
                return;
            }
            ++pos_;
        }
        throw ParseError(start_line, "unterminated text block");
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
};

inline std::vector<Token> tokenize(std::string_view src) { return Lexer(src).run(); }

/// Splits a token into lower-cased words: non-alphanumeric boundaries plus
/// camelCase humps ("parseHTTPResponse" -> parse, http, response).
inline void split_words(std::string_view text, std::set<std::string>& out)
{
    std::string word;
    auto flush = [&] {
        if (!word.empty()) out.insert(word);
        word.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (!std::isalnum(c)) {
            flush();
            continue;
        }
        if (std::isupper(c) && !word.empty()) {
            const unsigned char prev = static_cast<unsigned char>(text[i - 1]);
            const bool next_lower =
                i + 1 < text.size() && std::islower(static_cast<unsigned char>(text[i + 1]));
            if (std::islower(prev) || std::isdigit(prev) || (std::isupper(prev) && next_lower)) flush();
        }
        word += static_cast<char>(std::tolower(c));
    }
    flush();
}

}  // namespace apppop::java

#endif  // APPPOP_JAVA_LEXER_HPP
