#include <cctype>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

#include "cg/source.hpp"

namespace cg {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct Macro {
    bool function_like = false;
    std::vector<std::string> params;
    std::string body;
};

struct OutLine {
    std::string text;
    Diagnostics::LineOrigin origin;
};

// One input line after comment stripping, tagged with its origin.
struct InLine {
    std::string text;
    Diagnostics::LineOrigin origin;
};

// Replaces comments with a single space. A comment spanning several lines
// collapses onto the line where it opened; following text continues there.
std::vector<InLine> strip_comments(const std::string& text, const std::string& file,
                                   Diagnostics& diags) {
    std::vector<InLine> lines;
    std::string cur;
    int line_no = 1;
    int cur_origin = 1;
    bool in_block = false;
    int block_open_line = 0;
    size_t i = 0;
    auto flush = [&]() {
        lines.push_back({cur, {file, cur_origin}});
        cur.clear();
    };
    while (i < text.size()) {
        char c = text[i];
        if (in_block) {
            if (c == '*' && i + 1 < text.size() && text[i + 1] == '/') {
                in_block = false;
                i += 2;
                continue;
            }
            if (c == '\n') {
                flush();
                ++line_no;
                cur_origin = line_no;
            }
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
            in_block = true;
            block_open_line = line_no;
            cur += ' ';
            i += 2;
            continue;
        }
        if (c == '\n') {
            flush();
            ++line_no;
            cur_origin = line_no;
            ++i;
            continue;
        }
        cur += c;
        ++i;
    }
    if (in_block)
        diags.error("E_PP_COMMENT", {block_open_line, 1}, "unterminated /* comment");
    if (!cur.empty() || lines.empty() || text.empty() || text.back() != '\n') flush();
    return lines;
}

// Joins lines ending in a backslash with the next line.
void splice_continuations(std::vector<InLine>& lines) {
    std::vector<InLine> out;
    for (size_t i = 0; i < lines.size(); ++i) {
        InLine cur = lines[i];
        while (!cur.text.empty() && cur.text.back() == '\\' && i + 1 < lines.size()) {
            cur.text.pop_back();
            cur.text += lines[++i].text;
        }
        out.push_back(std::move(cur));
    }
    lines = std::move(out);
}

class Preprocessor {
public:
    Preprocessor(const std::map<std::string, std::string>& includes, Diagnostics& diags)
        : includes_(includes), diags_(diags) {}

    std::map<std::string, Macro> macros;

    void run(const std::string& text, const std::string& file, int depth) {
        if (depth > 32) {
            diags_.error("E_PP_INCLUDE", {1, 1}, "include nesting too deep (" + file + ")");
            return;
        }
        auto lines = strip_comments(text, file, diags_);
        splice_continuations(lines);
        for (auto& ln : lines) process_line(ln, depth);
        if (!cond_stack_.empty() && depth == 0) {
            diags_.error("E_PP_CONDITIONAL", {cond_stack_.back().open_line, 1},
                         "unterminated conditional");
        }
    }

    std::vector<OutLine> out;

private:
    struct Cond {
        bool taken;        // this branch currently emits
        bool ever_taken;   // some branch of the chain was taken
        bool parent_live;  // enclosing conditional emits
        int open_line;
    };

    bool live() const {
        return cond_stack_.empty() || (cond_stack_.back().taken && cond_stack_.back().parent_live);
    }

    void process_line(const InLine& ln, int depth) {
        size_t i = 0;
        while (i < ln.text.size() && std::isspace(static_cast<unsigned char>(ln.text[i]))) ++i;
        if (i < ln.text.size() && ln.text[i] == '#') {
            directive(ln, i + 1, depth);
            return;
        }
        if (!live()) return;
        out.push_back({expand(ln.text, {}), ln.origin});
    }

    void directive(const InLine& ln, size_t i, int depth) {
        const std::string& s = ln.text;
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        size_t start = i;
        while (i < s.size() && is_ident_char(s[i])) ++i;
        std::string name = s.substr(start, i - start);
        std::string rest = s.substr(i);
        Location loc{ln.origin.line, 1};
        // Conditional directives are honored even in dead branches to keep
        // nesting balanced.
        if (name == "ifdef" || name == "ifndef") {
            std::string id = trim(rest);
            bool defined = macros.count(id) > 0;
            push_cond(name == "ifdef" ? defined : !defined, loc.line);
            return;
        }
        if (name == "if") {
            push_cond(eval_condition(rest, loc), loc.line);
            return;
        }
        if (name == "else") {
            if (cond_stack_.empty()) {
                diags_.error("E_PP_CONDITIONAL", loc, "#else without #if");
                return;
            }
            Cond& c = cond_stack_.back();
            c.taken = !c.ever_taken;
            c.ever_taken = true;
            return;
        }
        if (name == "endif") {
            if (cond_stack_.empty()) {
                diags_.error("E_PP_CONDITIONAL", loc, "#endif without #if");
                return;
            }
            cond_stack_.pop_back();
            return;
        }
        if (!live()) return;
        if (name == "define") {
            define(rest, loc);
            return;
        }
        if (name == "undef") {
            macros.erase(trim(rest));
            return;
        }
        if (name == "include") {
            std::string id = trim(rest);
            if (id.size() >= 2 && (id.front() == '"' || id.front() == '<'))
                id = id.substr(1, id.size() - 2);
            auto it = includes_.find(id);
            if (it == includes_.end()) {
                diags_.error("E_PP_INCLUDE", loc, "unknown include name '" + id + "'");
                return;
            }
            run(it->second, id, depth + 1);
            return;
        }
        diags_.error("E_PP_DIRECTIVE", loc, "unknown preprocessor directive #" + name);
    }

    void push_cond(bool taken, int line) {
        bool parent = live();
        cond_stack_.push_back({taken, taken, parent, line});
    }

    void define(const std::string& rest, Location loc) {
        size_t i = 0;
        while (i < rest.size() && std::isspace(static_cast<unsigned char>(rest[i]))) ++i;
        size_t start = i;
        while (i < rest.size() && is_ident_char(rest[i])) ++i;
        if (start == i) {
            diags_.error("E_PP_MACRO", loc, "missing macro name in #define");
            return;
        }
        std::string name = rest.substr(start, i - start);
        Macro m;
        if (i < rest.size() && rest[i] == '(') {
            m.function_like = true;
            ++i;
            std::string param;
            bool done = false;
            for (; i < rest.size() && !done; ++i) {
                char c = rest[i];
                if (c == ',' || c == ')') {
                    param = trim(param);
                    if (!param.empty()) m.params.push_back(param);
                    param.clear();
                    if (c == ')') done = true;
                } else {
                    param += c;
                }
            }
            if (!done) {
                diags_.error("E_PP_MACRO", loc, "unterminated parameter list for macro " + name);
                return;
            }
        }
        m.body = trim(rest.substr(i));
        macros[name] = std::move(m);
    }

    // defined(NAME), !, &&, ||, parentheses and integer literals; any other
    // identifier expands if it is an object-like macro, else counts as 0.
    bool eval_condition(const std::string& text, Location loc) {
        std::string s = text;
        // Replace defined(X) / defined X before macro expansion.
        std::string replaced;
        for (size_t i = 0; i < s.size();) {
            if (is_ident_start(s[i])) {
                size_t j = i;
                while (j < s.size() && is_ident_char(s[j])) ++j;
                std::string word = s.substr(i, j - i);
                if (word == "defined") {
                    while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
                    bool paren = j < s.size() && s[j] == '(';
                    if (paren) ++j;
                    while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
                    size_t k = j;
                    while (k < s.size() && is_ident_char(s[k])) ++k;
                    std::string id = s.substr(j, k - j);
                    if (paren) {
                        while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
                        if (k < s.size() && s[k] == ')') ++k;
                    }
                    replaced += macros.count(id) ? "1" : "0";
                    i = k;
                    continue;
                }
                replaced += word;
                i = j;
                continue;
            }
            replaced += s[i++];
        }
        std::string expanded = expand(replaced, {});
        // Remaining identifiers evaluate to 0.
        std::string final_text;
        for (size_t i = 0; i < expanded.size();) {
            if (is_ident_start(expanded[i])) {
                while (i < expanded.size() && is_ident_char(expanded[i])) ++i;
                final_text += "0";
            } else {
                final_text += expanded[i++];
            }
        }
        size_t pos = 0;
        bool ok = true;
        long v = parse_or(final_text, pos, ok);
        skip_ws(final_text, pos);
        if (!ok || pos != final_text.size()) {
            diags_.error("E_PP_DIRECTIVE", loc, "cannot evaluate #if condition");
            return false;
        }
        return v != 0;
    }

    static void skip_ws(const std::string& s, size_t& pos) {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    long parse_or(const std::string& s, size_t& pos, bool& ok) {
        long v = parse_and(s, pos, ok);
        for (;;) {
            skip_ws(s, pos);
            if (pos + 1 < s.size() && s[pos] == '|' && s[pos + 1] == '|') {
                pos += 2;
                long r = parse_and(s, pos, ok);
                v = (v != 0 || r != 0) ? 1 : 0;
            } else {
                return v;
            }
        }
    }
    long parse_and(const std::string& s, size_t& pos, bool& ok) {
        long v = parse_primary(s, pos, ok);
        for (;;) {
            skip_ws(s, pos);
            if (pos + 1 < s.size() && s[pos] == '&' && s[pos + 1] == '&') {
                pos += 2;
                long r = parse_primary(s, pos, ok);
                v = (v != 0 && r != 0) ? 1 : 0;
            } else {
                return v;
            }
        }
    }
    long parse_primary(const std::string& s, size_t& pos, bool& ok) {
        skip_ws(s, pos);
        if (pos < s.size() && s[pos] == '!') {
            ++pos;
            return parse_primary(s, pos, ok) == 0 ? 1 : 0;
        }
        if (pos < s.size() && s[pos] == '(') {
            ++pos;
            long v = parse_or(s, pos, ok);
            skip_ws(s, pos);
            if (pos < s.size() && s[pos] == ')') ++pos;
            else ok = false;
            return v;
        }
        if (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            long v = 0;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
                v = v * 10 + (s[pos++] - '0');
            return v;
        }
        ok = false;
        return 0;
    }

    static std::string trim(const std::string& s) {
        size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    // Textual macro expansion with a hide set to stop self-recursion.
    std::string expand(const std::string& text, std::set<std::string> hidden) {
        std::string out;
        size_t i = 0;
        while (i < text.size()) {
            char c = text[i];
            if (!is_ident_start(c)) {
                out += c;
                ++i;
                continue;
            }
            size_t j = i;
            while (j < text.size() && is_ident_char(text[j])) ++j;
            std::string word = text.substr(i, j - i);
            auto it = macros.find(word);
            if (it == macros.end() || hidden.count(word)) {
                out += word;
                i = j;
                continue;
            }
            const Macro& m = it->second;
            if (!m.function_like) {
                auto h = hidden;
                h.insert(word);
                out += expand(m.body, h);
                i = j;
                continue;
            }
            // Function-like: need an argument list, else leave untouched.
            size_t k = j;
            while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
            if (k >= text.size() || text[k] != '(') {
                out += word;
                i = j;
                continue;
            }
            ++k;
            std::vector<std::string> args;
            std::string arg;
            int depth = 1;
            for (; k < text.size(); ++k) {
                char a = text[k];
                if (a == '(') ++depth;
                if (a == ')') {
                    if (--depth == 0) {
                        ++k;
                        break;
                    }
                }
                if (a == ',' && depth == 1) {
                    args.push_back(arg);
                    arg.clear();
                    continue;
                }
                arg += a;
            }
            if (depth != 0) {
                diags_.error("E_PP_MACRO", {0, 0}, "unterminated arguments for macro " + word);
                out += text.substr(i);
                return out;
            }
            if (!arg.empty() || !args.empty() || !m.params.empty()) args.push_back(arg);
            if (args.size() != m.params.size()) {
                diags_.error("E_PP_MACRO", {0, 0},
                             "macro " + word + " expects " + std::to_string(m.params.size()) +
                                 " arguments, got " + std::to_string(args.size()));
                out += text.substr(i);
                return out;
            }
            // Substitute parameters (arguments are pre-expanded), then rescan.
            std::string body;
            for (size_t b = 0; b < m.body.size();) {
                if (is_ident_start(m.body[b])) {
                    size_t e = b;
                    while (e < m.body.size() && is_ident_char(m.body[e])) ++e;
                    std::string pw = m.body.substr(b, e - b);
                    bool substituted = false;
                    for (size_t p = 0; p < m.params.size(); ++p) {
                        if (m.params[p] == pw) {
                            body += expand(args[p], hidden);
                            substituted = true;
                            break;
                        }
                    }
                    if (!substituted) body += pw;
                    b = e;
                } else {
                    body += m.body[b++];
                }
            }
            auto h = hidden;
            h.insert(word);
            out += expand(body, h);
            i = k;
        }
        return out;
    }

    const std::map<std::string, std::string>& includes_;
    Diagnostics& diags_;
    std::vector<Cond> cond_stack_;
};

}  // namespace

SourceUnit SourceUnit::from_text(std::string text, std::string name) {
    SourceUnit u;
    u.text = std::move(text);
    u.name = std::move(name);
    int lines = 1;
    for (char c : u.text)
        if (c == '\n') ++lines;
    u.line_map.reserve(lines);
    for (int i = 1; i <= lines; ++i) u.line_map.push_back({u.name, i});
    return u;
}

SourceUnit preprocess(const SourceUnit& source,
                      const std::map<std::string, std::string>& includes,
                      const std::map<std::string, std::string>& predefines,
                      Diagnostics& diags) {
    Preprocessor pp(includes, diags);
    for (const auto& [name, body] : predefines) {
        Macro m;
        m.body = body;
        pp.macros[name] = std::move(m);
    }
    pp.run(source.text, source.name, 0);

    SourceUnit out;
    out.name = source.name;
    std::string text;
    for (auto& ln : pp.out) {
        text += ln.text;
        text += '\n';
        out.line_map.push_back(ln.origin);
    }
    if (out.line_map.empty()) out.line_map.push_back({source.name, 1});
    out.text = std::move(text);
    return out;
}

}  // namespace cg
