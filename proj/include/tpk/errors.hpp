#pragma once

#include <stdexcept>
#include <string>

namespace tpk {

// Argument outside the mathematical domain of a function (z = 0, n < 2, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Kernel evaluated at its singular point x = 0.
class SingularPointError : public DomainError {
public:
    using DomainError::DomainError;
};

// An integration path of the Oseen potential passes through the origin.
class SingularSegmentError : public DomainError {
public:
    using DomainError::DomainError;
};

class MethodUnavailableError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Shape/representation mismatch between fields and grids.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ZeroModeError : public DomainError {
public:
    using DomainError::DomainError;
};

class DegenerateInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class QuadratureResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tpk
