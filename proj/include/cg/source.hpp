#pragma once

#include <map>
#include <string>
#include <vector>

#include "cg/diagnostics.hpp"

namespace cg {

// A unit of source text. After preprocessing, line_map records where every
// line of the expanded text came from so diagnostics point at the original
// file and line.
struct SourceUnit {
    std::string text;
    std::string name;
    std::vector<Diagnostics::LineOrigin> line_map;

    static SourceUnit from_text(std::string text, std::string name);
};

// Expands directives and strips comments. `includes` maps include names to
// their text (no filesystem access here); `predefines` seeds the macro table
// with object-like definitions.
SourceUnit preprocess(const SourceUnit& source,
                      const std::map<std::string, std::string>& includes,
                      const std::map<std::string, std::string>& predefines,
                      Diagnostics& diags);

}  // namespace cg
