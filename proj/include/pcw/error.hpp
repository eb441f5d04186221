#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcw {

// Violated operation precondition (bad shapes, invalid arguments).
class ContractError : public std::invalid_argument {
public:
    explicit ContractError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Invalid experiment or architecture configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file; carries the byte offset where parsing failed.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t byte_offset)
        : std::runtime_error(msg + " (byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}

    std::size_t offset;
};

inline void check_contract(bool ok, const std::string& msg) {
    if (!ok) throw ContractError(msg);
}

}  // namespace pcw
