#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jetcas/reduce.hpp"

namespace jetcas {

/// sum xi^i d/dx_i + sum eta^j d/du^j with coefficients in (t, x, u).
struct VectorField {
    std::vector<std::string> vars;  // x_1..x_n
    std::vector<std::string> deps;  // u^1..u^m
    std::vector<Expr> xi;
    std::vector<Expr> eta;

    VectorField() = default;
    VectorField(std::vector<std::string> vars, std::vector<std::string> deps, std::vector<Expr> xi,
                std::vector<Expr> eta);

    Expr apply(const Expr& f) const;
    bool is_zero() const;
    std::string str() const;
};

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator*(const Expr& c, const VectorField& a);

VectorField commutator(const VectorField& X, const VectorField& Y);

struct InvolutivityResult {
    bool involutive = false;
    // c[i][j][k]: [X_i, X_j] = sum_k c[i][j][k] X_k, for i < j
    std::vector<std::vector<std::vector<Expr>>> c;
    std::optional<std::pair<int, int>> failing_pair;
    VectorField witness;  // [X_i, X_j] minus its best combination of the basis
};

/// DegenerateError when the xi matrix has rank below the number of fields.
InvolutivityResult check_involutive(const std::vector<VectorField>& basis);

struct FirstOrderManifold {
    std::vector<std::string> vars;
    std::vector<std::string> deps;
    // h[k][j] = sum_i xi_k^i u^j_{x_i} - eta_k^j
    std::vector<std::vector<Expr>> equations;
    // u^j_{x_k} = eta_tilde[k][j]
    std::vector<std::vector<Expr>> eta_tilde;
};

FirstOrderManifold manifold_from_fields(const std::vector<VectorField>& basis);

/// Normalized manifold from equations h[k][j] = u^j_{x_k} + g (solved for u^j_{x_k}).
FirstOrderManifold normalized_manifold(std::vector<std::string> vars, std::vector<std::string> deps,
                                       const std::vector<std::vector<Expr>>& h);

/// Z_i(eta_tilde_k) == Z_k(eta_tilde_i) for all i < k.
Verdict check_cross_compatibility(const FirstOrderManifold& M);

/// Defects of the quasilinear determining equations for a long-wave type
/// system with the given constants and coefficient functions, reduced
/// modulo the side ODEs satisfied by the functions in h1, h2.
Verdict verify_qde(const PdeSystem& sys, const Expr& h1, const Expr& h2, const std::map<std::string, Expr>& constants,
                   const std::map<std::string, Expr>& coefficient_functions, const std::vector<Expr>& side_odes = {},
                   const std::vector<std::string>& side_unknowns = {});

}  // namespace jetcas
