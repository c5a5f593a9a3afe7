#include <cctype>
#include <cstdlib>
#include <sstream>

#include "cg/codegen.hpp"

namespace cg {

namespace {

struct AsmError {
    int line;
    std::string message;
};

class ListingParser {
public:
    ListingParser(const std::string& text) : text_(text) {}

    AssemblyListing parse() {
        AssemblyListing out;
        std::istringstream in(text_);
        std::string line;
        int line_no = 0;
        bool saw_header = false;
        bool saw_end = false;
        int max_temp = -1;
        while (std::getline(in, line)) {
            ++line_no;
            line_ = line_no;
            std::string t = trim(line);
            if (t.empty()) continue;
            if (!saw_header) {
                if (t == "vs.1.1") {
                    profile_ = lookup_profile("vs_1_1").profile.value();
                } else if (t == "!!ARBvp1.0") {
                    profile_ = lookup_profile("arbvp1").profile.value();
                } else if (t == "!!ARBfp1.0") {
                    profile_ = lookup_profile("arbfp1").profile.value();
                } else {
                    throw AsmError{line_no, "unknown listing header '" + t + "'"};
                }
                arb_ = profile_.name != "vs_1_1";
                out.profile_name = profile_.name;
                out.stage = profile_.stage;
                saw_header = true;
                continue;
            }
            if (saw_end) throw AsmError{line_no, "text after END"};
            // ARB statements may share a line, separated by ';'.
            std::vector<std::string> stmts;
            if (arb_) {
                std::string cur;
                for (char c : t) {
                    if (c == ';') {
                        stmts.push_back(trim(cur));
                        cur.clear();
                    } else {
                        cur += c;
                    }
                }
                std::string tail = trim(cur);
                if (!tail.empty()) stmts.push_back(tail);
            } else {
                stmts.push_back(t);
            }
            for (const std::string& stmt : stmts) {
                if (stmt.empty()) continue;
                if (stmt == "END" && arb_) {
                    saw_end = true;
                    continue;
                }
                if (parse_statement(stmt, out, max_temp)) continue;
            }
        }
        if (!saw_header) throw AsmError{1, "empty listing"};
        if (arb_ && !saw_end) throw AsmError{line_no, "missing END"};
        // TEMP declarations set the count for ARB; vs_1_1 derives it from
        // the registers used.
        if (declared_temps_ >= 0) out.num_temps = declared_temps_;
        else out.num_temps = max_temp + 1;
        return out;
    }

private:
    const std::string& text_;
    ProfileDescriptor profile_;
    bool arb_ = false;
    int line_ = 0;
    int declared_temps_ = -1;

    static std::string trim(const std::string& s) {
        size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    bool parse_statement(const std::string& stmt, AssemblyListing& out, int& max_temp) {
        if (arb_ && stmt.rfind("TEMP", 0) == 0) {
            std::string reg = trim(stmt.substr(4));
            if (reg.size() < 2 || reg[0] != 'R')
                throw AsmError{line_, "bad TEMP declaration '" + stmt + "'"};
            int idx = std::atoi(reg.c_str() + 1);
            declared_temps_ = std::max(declared_temps_ < 0 ? 0 : declared_temps_, idx + 1);
            return true;
        }
        if (arb_ && stmt.rfind("PARAM", 0) == 0) {
            parse_param(stmt, out);
            return true;
        }
        if (!arb_ && stmt.rfind("def ", 0) == 0) {
            parse_def(stmt, out);
            return true;
        }
        parse_instruction(stmt, out, max_temp);
        return true;
    }

    // PARAM cN = {a, b, c, d}   |   PARAM cN = program.env[N]
    void parse_param(const std::string& stmt, AssemblyListing& out) {
        size_t eq = stmt.find('=');
        if (eq == std::string::npos) throw AsmError{line_, "bad PARAM '" + stmt + "'"};
        std::string reg = trim(stmt.substr(5, eq - 5));
        if (reg.empty() || reg[0] != 'c') throw AsmError{line_, "bad PARAM register"};
        int index = std::atoi(reg.c_str() + 1);
        std::string rhs = trim(stmt.substr(eq + 1));
        if (rhs.rfind("program.env", 0) == 0) return;  // uniform declaration; value external
        if (rhs.front() != '{' || rhs.back() != '}')
            throw AsmError{line_, "bad PARAM value '" + rhs + "'"};
        ConstantEntry entry;
        entry.reg = index;
        std::istringstream vs(rhs.substr(1, rhs.size() - 2));
        std::string piece;
        int i = 0;
        while (std::getline(vs, piece, ',')) {
            if (i >= 4) throw AsmError{line_, "too many PARAM components"};
            entry.value[i++] = std::strtof(trim(piece).c_str(), nullptr);
        }
        if (i != 4) throw AsmError{line_, "PARAM needs four components"};
        out.pool.push_back(entry);
    }

    // def cN, a, b, c, d
    void parse_def(const std::string& stmt, AssemblyListing& out) {
        std::istringstream in(stmt.substr(4));
        std::string piece;
        std::vector<std::string> parts;
        while (std::getline(in, piece, ',')) parts.push_back(trim(piece));
        if (parts.size() != 5 || parts[0].empty() || parts[0][0] != 'c')
            throw AsmError{line_, "bad def '" + stmt + "'"};
        ConstantEntry entry;
        entry.reg = std::atoi(parts[0].c_str() + 1);
        for (int i = 0; i < 4; ++i)
            entry.value[i] = std::strtof(parts[i + 1].c_str(), nullptr);
        out.pool.push_back(entry);
    }

    void parse_instruction(const std::string& stmt, AssemblyListing& out, int& max_temp) {
        // opcode dst, src (, src)* (, texture[n], target)?
        size_t sp = stmt.find(' ');
        std::string opname = sp == std::string::npos ? stmt : stmt.substr(0, sp);
        std::string upper = opname;
        for (auto& c : upper) c = static_cast<char>(std::toupper(c));
        Opcode op;
        bool found = false;
        for (int o = 0; o <= static_cast<int>(Opcode::KIL); ++o) {
            if (upper == opcode_name(static_cast<Opcode>(o))) {
                op = static_cast<Opcode>(o);
                found = true;
            }
        }
        if (!found) throw AsmError{line_, "unknown opcode '" + opname + "'"};

        std::vector<std::string> parts;
        if (sp != std::string::npos) {
            std::istringstream in(stmt.substr(sp + 1));
            std::string piece;
            while (std::getline(in, piece, ',')) parts.push_back(trim(piece));
        }
        Instruction inst;
        inst.op = op;
        size_t idx = 0;
        if (inst.has_dst()) {
            if (parts.empty()) throw AsmError{line_, "missing destination"};
            parse_dst(parts[idx++], inst);
        }
        bool is_tex = op == Opcode::TEX || op == Opcode::TXP;
        size_t operand_count = static_cast<size_t>(opcode_arity(op));
        for (size_t s = 0; s < operand_count; ++s) {
            if (idx >= parts.size()) throw AsmError{line_, "missing operand"};
            inst.srcs.push_back(parse_operand(parts[idx++]));
        }
        if (is_tex) {
            if (idx + 2 != parts.size())
                throw AsmError{line_, "texture instruction needs unit and target"};
            const std::string& unit = parts[idx];
            if (unit.rfind("texture[", 0) != 0)
                throw AsmError{line_, "bad texture unit '" + unit + "'"};
            inst.tex_unit = std::atoi(unit.c_str() + 8);
            const std::string& target = parts[idx + 1];
            if (target == "2D") inst.target = TexTarget::T2D;
            else if (target == "3D") inst.target = TexTarget::T3D;
            else if (target == "CUBE") inst.target = TexTarget::Cube;
            else throw AsmError{line_, "bad texture target '" + target + "'"};
        } else if (idx != parts.size()) {
            throw AsmError{line_, "too many operands"};
        }
        for (const auto& src : inst.srcs)
            if (src.reg.file == RegFile::Temp) max_temp = std::max(max_temp, src.reg.index);
        if (inst.has_dst() && inst.dst.file == RegFile::Temp)
            max_temp = std::max(max_temp, inst.dst.index);
        out.code.push_back(std::move(inst));
    }

    void parse_dst(const std::string& text, Instruction& inst) {
        std::string reg = text;
        inst.mask = 0xF;
        size_t dot = find_component_suffix(reg);
        if (dot != std::string::npos) {
            std::string suffix = reg.substr(dot + 1);
            uint8_t mask = 0;
            for (char c : suffix) {
                int lane = lane_of(c);
                if (lane < 0) throw AsmError{line_, "bad write mask '." + suffix + "'"};
                mask |= static_cast<uint8_t>(1u << lane);
            }
            inst.mask = mask;
            reg = reg.substr(0, dot);
        }
        inst.dst = parse_register(reg);
    }

    Operand parse_operand(const std::string& text) {
        Operand op;
        std::string s = text;
        if (!s.empty() && s[0] == '-') {
            op.negate = true;
            s = trim(s.substr(1));
        }
        size_t dot = find_component_suffix(s);
        if (dot != std::string::npos) {
            std::string suffix = s.substr(dot + 1);
            if (suffix.size() == 1) {
                int lane = lane_of(suffix[0]);
                if (lane < 0) throw AsmError{line_, "bad swizzle '." + suffix + "'"};
                op.swz = Swizzle4::replicate(lane);
            } else if (suffix.size() == 4) {
                for (int i = 0; i < 4; ++i) {
                    int lane = lane_of(suffix[i]);
                    if (lane < 0) throw AsmError{line_, "bad swizzle '." + suffix + "'"};
                    op.swz.sel[i] = static_cast<uint8_t>(lane);
                }
            } else {
                throw AsmError{line_, "bad swizzle '." + suffix + "'"};
            }
            s = s.substr(0, dot);
        }
        op.reg = parse_register(s);
        return op;
    }

    static int lane_of(char c) {
        switch (c) {
        case 'x': return 0;
        case 'y': return 1;
        case 'z': return 2;
        case 'w': return 3;
        default: return -1;
        }
    }

    // The component suffix is the final ".xyzw" piece; dotted register
    // names (fragment.color.primary) keep their dots.
    size_t find_component_suffix(const std::string& s) const {
        size_t dot = s.rfind('.');
        if (dot == std::string::npos || dot + 1 >= s.size()) return std::string::npos;
        std::string suffix = s.substr(dot + 1);
        if (suffix.size() != 1 && suffix.size() != 4) return std::string::npos;
        for (char c : suffix)
            if (lane_of(c) < 0) return std::string::npos;
        // "vertex.position" ends in "on", never in lane letters, so any
        // all-lane suffix is a real swizzle or mask.
        return dot;
    }

    RegRef parse_register(const std::string& name) {
        if (name.empty()) throw AsmError{line_, "missing register"};
        if (!arb_) {
            char k = name[0];
            if (k == 'c') return {RegFile::Const, std::atoi(name.c_str() + 1)};
            if (k == 'r') return {RegFile::Temp, std::atoi(name.c_str() + 1)};
            if (k == 'v') return {RegFile::Input, std::atoi(name.c_str() + 1)};
            if (name == "oPos") return {RegFile::Output, kOutPosition};
            if (name == "oD0") return {RegFile::Output, kOutColor};
            if (name.rfind("oT", 0) == 0)
                return {RegFile::Output, kOutTexcoordBase + std::atoi(name.c_str() + 2)};
            throw AsmError{line_, "unknown register '" + name + "'"};
        }
        if (name[0] == 'c' && name.size() > 1 &&
            std::isdigit(static_cast<unsigned char>(name[1])))
            return {RegFile::Const, std::atoi(name.c_str() + 1)};
        if (name[0] == 'R' && name.size() > 1)
            return {RegFile::Temp, std::atoi(name.c_str() + 1)};
        if (name == "vertex.position") return {RegFile::Input, 0};
        if (name == "vertex.weight") return {RegFile::Input, 1};
        if (name == "vertex.normal") return {RegFile::Input, 3};
        if (name == "vertex.color") return {RegFile::Input, 5};
        if (name.rfind("vertex.texcoord[", 0) == 0)
            return {RegFile::Input, 7 + std::atoi(name.c_str() + 16)};
        if (name == "fragment.color.primary") return {RegFile::Input, 0};
        if (name.rfind("fragment.texcoord[", 0) == 0)
            return {RegFile::Input, 1 + std::atoi(name.c_str() + 18)};
        if (name == "result.color") return {RegFile::Output, kOutColor};
        if (name == "result.position") return {RegFile::Output, kOutPosition};
        if (name.rfind("result.texcoord[", 0) == 0)
            return {RegFile::Output, kOutTexcoordBase + std::atoi(name.c_str() + 16)};
        throw AsmError{line_, "unknown register '" + name + "'"};
    }
};

}  // namespace

std::optional<AssemblyListing> parse_listing(const std::string& text, Diagnostics& diags) {
    ListingParser parser(text);
    try {
        AssemblyListing out = parser.parse();
        out.text = text;
        return out;
    } catch (const AsmError& err) {
        diags.error("E_ASM", {err.line, 1}, err.message);
        return std::nullopt;
    }
}

}  // namespace cg
