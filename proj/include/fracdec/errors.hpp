#pragma once

#include <stdexcept>
#include <string>

namespace fracdec {

/// Base class for all library errors. `exit_code` is the process exit
/// status the CLI maps the error to (documented in `fracdec --help`).
class Error : public std::runtime_error {
public:
    Error(std::string what, int exit_code)
        : std::runtime_error(std::move(what)), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

/// Violated operation precondition (bad class index, set outside its class,
/// unequal class sums, weight out of range, ...).
class DomainError : public Error {
public:
    explicit DomainError(std::string what) : Error(std::move(what), 5) {}
};

/// Malformed input file.
class ParseError : public Error {
public:
    explicit ParseError(std::string what) : Error(std::move(what), 3) {}
};

/// Input too large for an operation with an explicit size guard (the LP
/// oracle), absent --force.
class SizeLimitError : public Error {
public:
    explicit SizeLimitError(std::string what) : Error(std::move(what), 4) {}
};

/// Host graph is not divisible where the operation requires it.
class DivisibilityError : public Error {
public:
    explicit DivisibilityError(std::string what) : Error(std::move(what), 6) {}
};

/// The graph has edges but no transversal cliques: no decomposition can exist.
class NoCliquesError : public Error {
public:
    explicit NoCliquesError(std::string what) : Error(std::move(what), 7) {}
};

/// A gadget's helper family is empty; carries a description of the spec that
/// failed so pipeline stages can tag it with their own context.
class GadgetInfeasibleError : public Error {
public:
    explicit GadgetInfeasibleError(std::string what) : Error(std::move(what), 8) {}
};

/// A correction move has no eligible partner vertex inside the target set.
class EmptyIntersectionError : public Error {
public:
    explicit EmptyIntersectionError(std::string what) : Error(std::move(what), 8) {}
};

/// The per-class eligible pool around an anchor clique is too small to build
/// the intermediate set.
class IntermediateSetError : public Error {
public:
    explicit IntermediateSetError(std::string what) : Error(std::move(what), 8) {}
};

/// Filesystem-level failure (cannot open/read/write).
class IoError : public Error {
public:
    explicit IoError(std::string what) : Error(std::move(what), 9) {}
};

} // namespace fracdec
