#pragma once

#include <stdexcept>
#include <string>

namespace jetcas {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Division by the literal zero node, singular matrices and similar.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// ln/sqrt of a literal zero or negative constant.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Input does not have the shape an operation requires (non-polynomial
/// dependence, unsolvable constraint, template/system mismatch ...).
class StructureError : public Error {
public:
    using Error::Error;
};

/// Guard tripped inside a reduction loop; never expected on valid input.
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace jetcas
