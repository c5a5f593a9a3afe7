#include "cg/diagnostics.hpp"

#include <sstream>

namespace cg {

std::string format_diagnostic(const Diagnostic& d) {
    std::ostringstream out;
    if (!d.file.empty()) out << d.file << ":";
    if (d.line > 0) {
        out << d.line;
        if (d.column > 0) out << ":" << d.column;
        out << ": ";
    } else if (!d.file.empty()) {
        out << " ";
    }
    out << (d.severity == Severity::Error ? "error" : "warning");
    out << " [" << d.code << "]: " << d.message;
    return out.str();
}

}  // namespace cg
