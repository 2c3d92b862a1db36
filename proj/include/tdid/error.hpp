#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tdid {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed model, lattice, or manifest text.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

/// A model failed validation. Carries every violation found.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "invalid model";
        for (const auto& s : v) out += "\n  " + s;
        return out;
    }

    std::vector<std::string> violations_;
};

/// Time sequence precondition violated (not a subset, different start, ...).
class SequenceError : public Error {
public:
    using Error::Error;
};

/// Dropping variables would orphan CPDs of retained variables.
class DependencyError : public Error {
public:
    DependencyError(const std::string& what, std::vector<std::string> cpds)
        : Error(what), cpds_(std::move(cpds)) {}

    const std::vector<std::string>& cpds() const noexcept { return cpds_; }

private:
    std::vector<std::string> cpds_;
};

/// Decision ordering cannot be reconciled with the observation structure.
class InformationStructureError : public Error {
public:
    using Error::Error;
};

/// A policy does not cover every informational state.
class CoverageError : public Error {
public:
    using Error::Error;
};

/// A configured resource limit (oracle policy cap, solver enumeration cap) was exceeded.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Meta-reasoning failures: empty feasible set, unsolved entry, empty KB, ...
class SelectionError : public Error {
public:
    using Error::Error;
};

/// File system failures.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace tdid
