#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cg/types.hpp"

namespace cg {

struct SigParam {
    TypeRef type = nullptr;
    uint8_t qualifiers = 0;
};

struct FunctionSignature {
    std::string name;
    std::vector<SigParam> params;
    TypeRef return_type = nullptr;
    enum class Origin { User, Builtin } origin = Origin::Builtin;
    int index = -1;  // user function index or builtin overload id
};

}  // namespace cg
