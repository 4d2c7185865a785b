#ifndef APPPOP_JAVA_MODEL_HPP
#define APPPOP_JAVA_MODEL_HPP

#include <apppop/common.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace apppop::java {

class ParseError : public DataError {
public:
    ParseError(int line, const std::string& message)
        : DataError("line " + std::to_string(line) + ": " + message), line_(line)
    {
    }
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Modifier bitmask. This is the encoded `modifiers` metric; it is reported
/// in the raw dumps but never aggregated (it is not ordinal).
enum Modifier : unsigned {
    kPublic = 1u << 0,
    kPrivate = 1u << 1,
    kProtected = 1u << 2,
    kStatic = 1u << 3,
    kFinal = 1u << 4,
    kAbstract = 1u << 5,
    kSynchronized = 1u << 6,
    kNative = 1u << 7,
    kTransient = 1u << 8,
    kVolatile = 1u << 9,
    kStrictfp = 1u << 10,
    kDefault = 1u << 11,
    kSealed = 1u << 12,
    kNonSealed = 1u << 13,
};

enum class ClassKind { normal, inner, anonymous, interface_decl, enum_decl };

inline const char* to_string(ClassKind k)
{
    switch (k) {
        case ClassKind::normal: return "normal";
        case ClassKind::inner: return "inner";
        case ClassKind::anonymous: return "anonymous";
        case ClassKind::interface_decl: return "interface";
        case ClassKind::enum_decl: return "enum";
    }
    return "?";
}

/// A type name as written in source, generic arguments and array dims removed.
struct TypeRef {
    std::string name;
    int line = 0;

    friend bool operator==(const TypeRef&, const TypeRef&) = default;
};

struct FieldInfo {
    std::string name;
    std::string type;
    unsigned modifiers = 0;
    int line = 0;

    friend bool operator==(const FieldInfo&, const FieldInfo&) = default;
};

struct Parameter {
    std::string name;
    std::string type;

    friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// A call site. `receiver` is empty for unqualified calls, the receiver
/// identifier (or this/super) for simple qualified calls, and "?" when the
/// receiver is an arbitrary expression.
struct Invocation {
    std::string name;
    int arg_count = 0;
    std::string receiver;
    int line = 0;

    friend bool operator==(const Invocation&, const Invocation&) = default;
};

struct StatementStats {
    int loop_count = 0;
    int comparison_count = 0;
    int try_catch_count = 0;
    int return_count = 0;
    int assignment_count = 0;
    int math_op_count = 0;
    int parenthesized_expr_count = 0;
    int string_literal_count = 0;
    int number_literal_count = 0;
    int variable_decl_count = 0;
    int max_nesting = 0;
    int lambda_count = 0;
    int unique_word_count = 0;
    int log_statement_count = 0;
    // Decision points beyond loops, for McCabe complexity.
    int if_count = 0;
    int case_count = 0;
    int catch_count = 0;
    int logical_op_count = 0;
    int ternary_count = 0;
    std::vector<int> line_lengths;
    std::vector<int> identifier_lengths;

    friend bool operator==(const StatementStats&, const StatementStats&) = default;
};

struct NumberLiteral {
    double value = 0.0;
    int line = 0;
    bool in_final_field_initializer = false;

    friend bool operator==(const NumberLiteral&, const NumberLiteral&) = default;
};

/// Everything collected from one code region: a method body, or the field
/// initializers and initializer blocks of a class.
struct CodeFacts {
    StatementStats stats;
    std::vector<Invocation> invocations;
    std::vector<TypeRef> type_refs;
    std::vector<TypeRef> instantiations;  // `new T(...)`
    std::set<std::string> names_used;     // bare identifiers and this.x accesses
    std::map<std::string, std::string> local_types;
    std::vector<NumberLiteral> numbers;
    std::vector<int> statement_lengths;  // whitespace-collapsed characters
    std::vector<std::string> declared_names;
    int empty_catch_count = 0;
    int missing_default_count = 0;

    friend bool operator==(const CodeFacts&, const CodeFacts&) = default;
};

struct MethodRef {
    int cls = -1;
    int method = -1;

    friend bool operator==(const MethodRef&, const MethodRef&) = default;
    friend auto operator<=>(const MethodRef&, const MethodRef&) = default;
};

struct MethodInfo {
    std::string name;
    bool is_constructor = false;
    bool has_body = false;
    std::vector<Parameter> parameters;
    unsigned modifiers = 0;
    int line = 0;
    int loc = 0;
    CodeFacts facts;
    std::vector<TypeRef> signature_refs;  // return, parameter and throws types

    // Filled by resolve().
    std::vector<MethodRef> resolved_calls;     // one entry per resolved call site
    int static_internal_call_count = 0;

    std::string signature() const { return name + "/" + std::to_string(parameters.size()); }

    friend bool operator==(const MethodInfo&, const MethodInfo&) = default;
};

struct ClassInfo {
    std::string qualified_name;
    std::string simple_name;
    ClassKind kind = ClassKind::normal;
    std::string package;
    int unit = -1;
    int enclosing = -1;  // class index, -1 for top-level
    std::optional<TypeRef> superclass;
    std::vector<TypeRef> interfaces;
    std::vector<FieldInfo> fields;
    std::vector<MethodInfo> methods;
    unsigned modifiers = 0;
    int line = 0;
    int loc = 0;
    int unique_word_count = 0;
    int anonymous_classes = 0;  // anonymous classes declared inside this class
    int inner_classes = 0;      // named nested/local types declared inside
    CodeFacts init_facts;       // field initializers and initializer blocks
    std::vector<TypeRef> member_refs;  // field types, supertypes
    std::size_t first_token = 0, last_token = 0;

    // Filled by resolve().
    std::optional<int> superclass_index;
    std::vector<int> interface_indices;
    std::set<int> referenced_classes;  // internal, excluding self
    std::vector<MethodRef> init_resolved_calls;
    int init_static_internal_call_count = 0;

    friend bool operator==(const ClassInfo&, const ClassInfo&) = default;
};

struct Import {
    std::string name;  // qualified name without ".*"
    bool is_static = false;
    bool wildcard = false;

    friend bool operator==(const Import&, const Import&) = default;
};

struct SourceUnit {
    std::string path;
    std::string package;
    std::vector<Import> imports;
    std::vector<ClassInfo> classes;  // `enclosing`/`unit` are unit-local until merged
    int loc = 0;
    std::optional<ParseError> error;

    bool parsed() const { return !error.has_value(); }
};

struct UnparseableFile {
    std::string path;
    int line = 0;
    std::string message;
};

struct StructuralModel {
    std::vector<SourceUnit> units;  // parsed units only; classes moved out
    std::vector<ClassInfo> classes;
    std::vector<UnparseableFile> unparseable;
    std::map<std::string, int> by_qualified_name;
    std::map<std::string, std::vector<int>> by_simple_name;
    bool resolved = false;

    const MethodInfo& method(MethodRef r) const
    {
        return classes.at(static_cast<std::size_t>(r.cls)).methods.at(static_cast<std::size_t>(r.method));
    }
};

}  // namespace apppop::java

#endif  // APPPOP_JAVA_MODEL_HPP
