#pragma once

#include <optional>
#include <vector>

#include "jetcas/expr.hpp"

namespace jetcas {

using Matrix = std::vector<std::vector<Expr>>;

/// Determinant by cofactor expansion (matrices here are at most 4x4).
Expr det(const Matrix& m);
Matrix adjugate(const Matrix& m);
/// Solution of m * x = rhs by Cramer's rule; DegenerateError if det is zero.
std::vector<Expr> cramer(const Matrix& m, const std::vector<Expr>& rhs);
/// Rank over the fraction field of the canonical ring.
int rank(Matrix m);

/// Exact rational linear systems.
struct RationalSystem {
    std::vector<std::vector<Rational>> rows;  // coefficients
    std::vector<Rational> rhs;
};

struct RationalSolution {
    bool consistent = true;
    /// For each unknown: particular value plus coefficients of free unknowns.
    std::vector<Rational> value;
    std::vector<std::vector<std::pair<int, Rational>>> free_terms;
    std::vector<int> free;  // indices of free unknowns
    int inconsistent_row = -1;
};

RationalSolution solve_rational(const RationalSystem& sys, int unknowns);

}  // namespace jetcas
