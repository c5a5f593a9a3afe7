#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cg {

// Locations are (line, column) into the post-preprocess text, 1-based.
// The preprocessor's line map translates back to the original file/line
// when a diagnostic is recorded.
struct Location {
    int line = 0;
    int column = 0;
};

enum class Severity { Error, Warning };

// Stable diagnostic codes. Tests match on these strings, never on message
// prose. Every code the toolchain can emit is listed here.
//
//   E_PP_COMMENT     unterminated /* comment
//   E_PP_CONDITIONAL unterminated or unbalanced #if/#ifdef block
//   E_PP_INCLUDE     include name not found
//   E_PP_DIRECTIVE   unknown or malformed preprocessor directive
//   E_PP_MACRO       malformed macro definition or invocation
//   E_LEX_CHAR       illegal character
//   E_LEX_NUMBER     malformed numeric literal
//   E_SYNTAX         syntax error
//   E_RESERVED       reserved C/C++ construct (keyword or operator)
//   E_UNDECLARED     use of an undeclared identifier
//   E_REDEFINED      redefinition in the same scope
//   E_TYPE_MISMATCH  no implicit conversion between the types involved
//   E_NOT_ASSIGNABLE assignment to a non-lvalue
//   E_UNIFORM_WRITE  assignment to a uniform parameter
//   E_RECURSION      recursive call cycle
//   E_SWIZZLE        invalid swizzle suffix
//   E_WRITE_MASK     invalid write mask (duplicate component, bad length)
//   E_OVERLOAD       no viable overload for a call
//   E_AMBIGUOUS      ambiguous overload resolution
//   E_UNSUPPORTED    construct outside the implemented language subset
//   E_UNINIT         value read before any assignment
//   E_VARIABLE_INDEX non-constant index where the profile requires constant
//   E_BAD_SEMANTIC   semantic unknown to the profile
//   E_DUP_SEMANTIC   semantic bound twice among inputs or outputs
//   E_UNKNOWN_PROFILE       profile name not recognized
//   E_UNIMPLEMENTED_PROFILE profile recognized but not compiled for
//   E_TEX_IN_VERTEX  texture fetch under a vertex profile
//   E_FRAG_TEXCOORD_OUT fragment output with a TEXCOORDn semantic
//   E_DISCARD_IN_VERTEX discard under a vertex profile
//   E_TEXUNITS       more samplers than the profile has texture units
//   E_NEEDS_BRANCHING data-dependent control flow the profile cannot run
//   E_CAPACITY       a profile capacity limit exceeded
//   E_ASM            assembly listing does not parse
//   E_VECTORS        test-vector file does not parse
//   E_IO             file could not be read or written
struct Diagnostic {
    Severity severity = Severity::Error;
    std::string code;
    std::string message;
    std::string file;
    int line = 0;
    int column = 0;
};

// Collects diagnostics across pipeline stages. When a line map is attached
// (after preprocessing), expanded line numbers are translated to original
// file/line pairs as diagnostics are recorded.
class Diagnostics {
public:
    struct LineOrigin {
        std::string file;
        int line = 0;
    };

    void attach_line_map(std::vector<LineOrigin> map) { line_map_ = std::move(map); }
    void set_default_file(std::string name) { default_file_ = std::move(name); }

    void error(std::string_view code, Location loc, std::string message) {
        push(Severity::Error, code, loc, std::move(message));
    }
    void warning(std::string_view code, Location loc, std::string message) {
        push(Severity::Warning, code, loc, std::move(message));
    }

    bool has_errors() const {
        for (const auto& d : items_)
            if (d.severity == Severity::Error) return true;
        return false;
    }
    bool empty() const { return items_.empty(); }
    const std::vector<Diagnostic>& items() const { return items_; }

    // First error-severity code, or empty string.
    std::string first_error_code() const {
        for (const auto& d : items_)
            if (d.severity == Severity::Error) return d.code;
        return {};
    }

    bool contains(std::string_view code) const {
        for (const auto& d : items_)
            if (d.code == code) return true;
        return false;
    }

private:
    void push(Severity sev, std::string_view code, Location loc, std::string message) {
        Diagnostic d;
        d.severity = sev;
        d.code = std::string(code);
        d.message = std::move(message);
        d.line = loc.line;
        d.column = loc.column;
        d.file = default_file_;
        if (loc.line >= 1 && loc.line <= static_cast<int>(line_map_.size())) {
            d.file = line_map_[loc.line - 1].file;
            d.line = line_map_[loc.line - 1].line;
        }
        items_.push_back(std::move(d));
    }

    std::vector<Diagnostic> items_;
    std::vector<LineOrigin> line_map_;
    std::string default_file_;
};

std::string format_diagnostic(const Diagnostic& d);

}  // namespace cg
