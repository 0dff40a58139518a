#pragma once

#include <stdexcept>
#include <string>

namespace divergia {

// Precondition on an argument does not hold (empty input, p < 1, ...).
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// An exact computation would need data beyond what is stored
// (e.g. digit shifts past the validity horizon of a DigitReal).
class PrecisionError : public std::runtime_error {
public:
    explicit PrecisionError(const std::string& what) : std::runtime_error(what) {}
};

// Desk-scale size guard tripped.
class ResourceGuardError : public std::runtime_error {
public:
    explicit ResourceGuardError(const std::string& what) : std::runtime_error(what) {}
};

// An internal invariant failed; always a bug or a falsified bound.
class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

// A proven inequality was observed to fail on a concrete instance.
class BoundViolation : public std::runtime_error {
public:
    explicit BoundViolation(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace divergia
