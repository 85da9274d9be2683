#include "jetcas/linalg.hpp"

namespace jetcas {

namespace {

Matrix minor_of(const Matrix& m, std::size_t row, std::size_t col) {
    Matrix r;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i == row) continue;
        std::vector<Expr> line;
        for (std::size_t j = 0; j < m.size(); ++j)
            if (j != col) line.push_back(m[i][j]);
        r.push_back(std::move(line));
    }
    return r;
}

}  // namespace

Expr det(const Matrix& m) {
    std::size_t n = m.size();
    if (n == 0) return Expr(1);
    if (n == 1) return m[0][0];
    if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
    std::vector<Expr> parts;
    for (std::size_t j = 0; j < n; ++j) {
        if (m[0][j].is_zero_node()) continue;
        Expr c = m[0][j] * det(minor_of(m, 0, j));
        parts.push_back(j % 2 == 0 ? c : -c);
    }
    return sum(parts);
}

Matrix adjugate(const Matrix& m) {
    std::size_t n = m.size();
    Matrix adj(n, std::vector<Expr>(n));
    if (n == 1) {
        adj[0][0] = Expr(1);
        return adj;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Expr c = det(minor_of(m, i, j));
            adj[j][i] = (i + j) % 2 == 0 ? c : -c;
        }
    return adj;
}

std::vector<Expr> cramer(const Matrix& m, const std::vector<Expr>& rhs) {
    Expr d = det(m);
    if (is_zero(d)) throw DegenerateError("singular matrix");
    std::vector<Expr> x;
    for (std::size_t j = 0; j < m.size(); ++j) {
        Matrix mj = m;
        for (std::size_t i = 0; i < m.size(); ++i) mj[i][j] = rhs[i];
        x.push_back(det(mj) / d);
    }
    return x;
}

int rank(Matrix m) {
    int r = 0;
    std::size_t rows = m.size();
    std::size_t cols = rows ? m[0].size() : 0;
    for (std::size_t c = 0; c < cols && static_cast<std::size_t>(r) < rows; ++c) {
        std::size_t pivot = rows;
        for (std::size_t i = static_cast<std::size_t>(r); i < rows; ++i)
            if (!is_zero(m[i][c])) {
                pivot = i;
                break;
            }
        if (pivot == rows) continue;
        std::swap(m[pivot], m[static_cast<std::size_t>(r)]);
        const auto& p = m[static_cast<std::size_t>(r)];
        for (std::size_t i = static_cast<std::size_t>(r) + 1; i < rows; ++i) {
            if (is_zero(m[i][c])) continue;
            Expr f = m[i][c];
            for (std::size_t j = c; j < cols; ++j) m[i][j] = clear_denominators(m[i][j] * p[c] - p[j] * f);
        }
        ++r;
    }
    return r;
}

RationalSolution solve_rational(const RationalSystem& sys, int unknowns) {
    auto rows = sys.rows;
    auto rhs = sys.rhs;
    std::size_t n = static_cast<std::size_t>(unknowns);
    std::vector<int> pivot_col;
    std::size_t r = 0;
    for (std::size_t c = 0; c < n && r < rows.size(); ++c) {
        std::size_t p = r;
        while (p < rows.size() && rows[p][c] == 0) ++p;
        if (p == rows.size()) continue;
        std::swap(rows[p], rows[r]);
        std::swap(rhs[p], rhs[r]);
        Rational inv = 1 / rows[r][c];
        for (auto& v : rows[r]) v *= inv;
        rhs[r] *= inv;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i == r || rows[i][c] == 0) continue;
            Rational f = rows[i][c];
            for (std::size_t j = 0; j < n; ++j) rows[i][j] -= f * rows[r][j];
            rhs[i] -= f * rhs[r];
        }
        pivot_col.push_back(static_cast<int>(c));
        ++r;
    }
    RationalSolution out;
    for (std::size_t i = r; i < rows.size(); ++i)
        if (rhs[i] != 0) {
            out.consistent = false;
            out.inconsistent_row = static_cast<int>(i);
            return out;
        }
    std::vector<bool> is_pivot(n, false);
    for (int c : pivot_col) is_pivot[static_cast<std::size_t>(c)] = true;
    for (std::size_t c = 0; c < n; ++c)
        if (!is_pivot[c]) out.free.push_back(static_cast<int>(c));
    out.value.assign(n, 0);
    out.free_terms.assign(n, {});
    for (int f : out.free) out.free_terms[static_cast<std::size_t>(f)].emplace_back(f, Rational(1));
    for (std::size_t i = 0; i < pivot_col.size(); ++i) {
        auto c = static_cast<std::size_t>(pivot_col[i]);
        out.value[c] = rhs[i];
        for (int f : out.free) {
            Rational coef = rows[i][static_cast<std::size_t>(f)];
            if (coef != 0) out.free_terms[c].emplace_back(f, -coef);
        }
    }
    return out;
}

}  // namespace jetcas
