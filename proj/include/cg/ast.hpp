#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cg/diagnostics.hpp"
#include "cg/types.hpp"

namespace cg {

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;

enum class ExprKind {
    IntLit,
    FloatLit,
    BoolLit,
    Ident,
    Call,       // function call or constructor; classified during checking
    Unary,      // + - ! ~ and prefix/postfix ++ --
    Binary,
    Compare,
    Logical,    // && ||
    Assign,     // = += -= *= /= %= and reserved compound forms
    Cond,       // ?:
    Comma,
    Member,     // swizzle, matrix element or record field; classified later
    Index,
    Convert,    // inserted by sema: implicit base/shape conversion
    Smear,      // inserted by sema: scalar replicated to vector/matrix
};

// How a checked Member node reads its base.
enum class MemberAccess { Unresolved, Swizzle, MatrixElement, RecordField };

// What a checked Ident refers to.
enum class RefKind { Unresolved, Local, Param, Global, Function };

struct Expr {
    ExprKind kind;
    Location loc;

    // Literals
    double number = 0.0;     // IntLit/FloatLit value
    char suffix = 0;         // float literal suffix
    bool bvalue = false;     // BoolLit

    std::string text;        // identifier, operator text, member name, callee
    std::vector<ExprPtr> args;  // Call arguments
    ExprPtr a, b, c;         // operands (Unary: a; Binary: a,b; Cond: a,b,c)
    bool postfix = false;    // for ++/--

    // --- filled by sema ---
    TypeRef type = nullptr;
    RefKind ref_kind = RefKind::Unresolved;
    int ref_slot = -1;                   // local slot / parameter index / global index
    MemberAccess member_access = MemberAccess::Unresolved;
    std::vector<int> swizzle;            // component indices for Swizzle access
    int matrix_row = -1, matrix_col = -1;
    int builtin_overload = -1;           // index into the builtin catalogue
    int user_function = -1;              // index into SyntaxTree::functions
    bool is_constructor = false;

    explicit Expr(ExprKind k, Location l) : kind(k), loc(l) {}
};

enum class StmtKind {
    Decl,
    ExprStmt,
    If,
    For,
    While,
    DoWhile,
    Break,
    Continue,
    Return,
    Discard,
    Block,
};

struct Stmt {
    StmtKind kind;
    Location loc;

    // Decl
    std::string type_name;
    std::string name;
    std::vector<int> array_dims;
    ExprPtr init;

    ExprPtr expr;       // ExprStmt, If/While/DoWhile condition, Return value
    StmtPtr init_stmt;  // For init
    ExprPtr step;       // For step
    std::vector<StmtPtr> body;    // Block statements, loop body
    std::vector<StmtPtr> else_body;

    // --- filled by sema ---
    TypeRef decl_type = nullptr;
    int decl_slot = -1;

    explicit Stmt(StmtKind k, Location l) : kind(k), loc(l) {}
};

enum class Qualifier : uint8_t { None = 0, Uniform = 1, Out = 2, InOut = 4 };

struct ParamDecl {
    uint8_t qualifiers = 0;  // Qualifier bits
    std::string type_name;
    std::string name;
    std::string semantic;
    std::vector<int> array_dims;
    Location loc;

    TypeRef type = nullptr;  // sema

    bool is_uniform() const { return qualifiers & static_cast<uint8_t>(Qualifier::Uniform); }
    bool is_out() const { return qualifiers & static_cast<uint8_t>(Qualifier::Out); }
    bool is_inout() const { return qualifiers & static_cast<uint8_t>(Qualifier::InOut); }
    bool is_input() const { return !is_out(); }   // inout counts as input too
    bool is_output() const { return is_out() || is_inout(); }
};

struct FunctionDecl {
    std::string return_type_name;
    std::string return_semantic;
    std::string name;
    std::vector<ParamDecl> params;
    StmtPtr body;  // Block
    Location loc;

    TypeRef return_type = nullptr;  // sema
    int num_locals = 0;             // local slot count after checking
};

struct RecordDecl {
    std::string name;
    std::vector<std::pair<std::string, std::string>> fields;  // (type name, field name)
    Location loc;

    TypeRef type = nullptr;  // sema
};

struct GlobalDecl {
    std::string type_name;
    std::string name;
    ExprPtr init;
    Location loc;

    TypeRef type = nullptr;  // sema
};

struct SyntaxTree {
    std::vector<RecordDecl> records;
    std::vector<GlobalDecl> globals;
    std::vector<FunctionDecl> functions;

    const FunctionDecl* find_function(std::string_view name) const {
        for (const auto& f : functions)
            if (f.name == name) return &f;
        return nullptr;
    }
    int function_index(std::string_view name) const {
        for (size_t i = 0; i < functions.size(); ++i)
            if (functions[i].name == name) return static_cast<int>(i);
        return -1;
    }
};

// Structural equality ignoring locations and sema annotations; used by the
// parse/pretty round-trip tests.
bool ast_equal(const Expr& a, const Expr& b);
bool ast_equal(const Stmt& a, const Stmt& b);
bool ast_equal(const SyntaxTree& a, const SyntaxTree& b);

ExprPtr clone_expr(const Expr& e);

}  // namespace cg
