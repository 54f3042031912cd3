#pragma once

#include <stdexcept>
#include <string>

namespace adbn {

// Error categories map 1:1 onto CLI exit codes (see tools/adbn_main.cpp).

// Bad arguments, bad config keys, contract misuse by the caller.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Dataset problems: missing directories, empty datasets, incompatible features.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Model file integrity: corruption, checksum mismatch, unsupported versions.
class ModelIoError : public std::runtime_error {
public:
    explicit ModelIoError(const std::string& what) : std::runtime_error(what) {}
};

// Training could not produce a usable model.
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

// Violated precondition inside the library (dimension mismatches and the like).
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace adbn
