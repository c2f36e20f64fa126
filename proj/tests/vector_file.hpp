#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dicelab/bytes.hpp"

// Loads a "name hex" per-line vector file from tests/vectors/.
inline std::map<std::string, dicelab::Bytes> load_vectors(const std::string& filename) {
    std::string path = std::string(DICELAB_SOURCE_DIR) + "/tests/vectors/" + filename;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing vector file: " + path);
    std::map<std::string, dicelab::Bytes> out;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string name, hex;
        if (!(ss >> name)) continue;
        ss >> hex;
        out[name] = dicelab::from_hex(hex);
    }
    return out;
}
