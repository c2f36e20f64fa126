#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "dicelab/bytes.hpp"

// Two-pass assembler for the toy ISA. Grammar, directives and the encoding
// table are documented in docs/isa.md.
namespace dicelab::fw {

using SymbolTable = std::map<std::string, uint32_t>;

struct AsmError : std::runtime_error {
    int line;
    AsmError(int line_, const std::string& msg)
        : std::runtime_error("asm line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

struct Assembled {
    Bytes bytes;
    SymbolTable labels;  // absolute addresses
};

Assembled assemble(std::string_view source, uint32_t base, const SymbolTable& externs = {});

}  // namespace dicelab::fw
