#include "doctest.h"

#include <random>

#include "jetcas/jet.hpp"

using namespace jetcas;

namespace {

Expr var(const char* n) { return Expr::variable(n); }
Expr jet(const char* dep, std::vector<std::pair<std::string, int>> idx = {}) {
    return Expr::jet(JetVar(dep, DerivIndex(std::move(idx))));
}
JetVar jv(const char* dep, std::vector<std::pair<std::string, int>> idx = {}) {
    return JetVar(dep, DerivIndex(std::move(idx)));
}

Expr random_expr(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, 8);
    std::vector<Expr> leaves{var("t"), var("x"), jet("u"), jet("u", {{"x", 1}}), jet("u", {{"x", 2}}),
                             jet("u", {{"t", 1}}), Expr(2), Expr::parameter("a")};
    if (depth == 0) return leaves[static_cast<std::size_t>(pick(rng)) % leaves.size()];
    Expr a = random_expr(rng, depth - 1), b = random_expr(rng, depth - 1);
    switch (pick(rng)) {
        case 0:
        case 1: return a + b;
        case 2:
        case 3: return a * b;
        case 4: return sin(a);
        case 5: return exp(b);
        case 6: return opaque("f", {a});
        case 7: return a - b;
        default: return pow(a, 2);
    }
}

}  // namespace

TEST_CASE("total derivatives") {
    Expr u = jet("u");
    CHECK(total_derivative(u * u, "x") == 2 * u * jet("u", {{"x", 1}}));
    CHECK(total_derivative(var("x"), "t").is_zero_node());
    CHECK(total_derivative(var("t") * u, "t") == u + var("t") * jet("u", {{"t", 1}}));
    CHECK(total_derivative(u, DerivIndex({{"x", 2}, {"t", 1}})) == jet("u", {{"t", 1}, {"x", 2}}));
}

TEST_CASE("D_x h for a high-order constraint") {
    // h = u_5 + u_4^2 u: D_x h = u_6 + 2 u u_4 u_5 + u_1 u_4^2
    Expr h = jet("u", {{"x", 5}}) + pow(jet("u", {{"x", 4}}), 2) * jet("u");
    Expr d = total_derivative(h, "x");
    Expr hn1 = partial(h, jet("u", {{"x", 4}}).as_atom());
    Expr rest = d - jet("u", {{"x", 6}}) - jet("u", {{"x", 5}}) * hn1;
    for (const auto& j : jets_in(rest)) CHECK(j.index.order("x") < 5);
}

TEST_CASE("on-shell reduction for the heat equation") {
    Reducer heat({Rule{jv("u", {{"t", 1}}), jet("u", {{"x", 2}}), {}}});
    CHECK(heat(jet("u", {{"t", 1}})) == jet("u", {{"x", 2}}));
    CHECK(heat(jet("u", {{"t", 1}, {"x", 1}})) == jet("u", {{"x", 3}}));
    CHECK(heat(jet("u", {{"t", 2}})) == jet("u", {{"x", 4}}));
}

TEST_CASE("Gibbons-Tsarev solved for z_xx") {
    Expr zx = jet("z", {{"x", 1}}), zy = jet("z", {{"y", 1}});
    Expr eq = jet("z", {{"x", 2}}) + zy * jet("z", {{"x", 1}, {"y", 1}}) - zx * jet("z", {{"y", 2}}) + 1;
    Reducer r({solve_for(eq, jv("z", {{"x", 2}}))});
    Expr e = jet("z", {{"x", 3}}) + jet("z", {{"x", 2}, {"y", 2}}) * jet("z", {{"x", 4}});
    for (const auto& j : jets_in(r(e))) CHECK(j.index.order("x") < 2);
    CHECK(r(eq).is_zero_node());
}

TEST_CASE("reduction modulo constraints") {
    Reducer h({solve_for(jet("u", {{"x", 3}}) + jet("u", {{"x", 1}}), jv("u", {{"x", 3}}), {"x"})});
    CHECK(h(jet("u", {{"x", 3}})) == -jet("u", {{"x", 1}}));
    CHECK(h(jet("u", {{"x", 4}})) == -jet("u", {{"x", 2}}));
    CHECK(h(jet("u", {{"x", 5}})) == jet("u", {{"x", 1}}));
    // prolongation along x only
    CHECK(h(jet("u", {{"t", 1}, {"x", 3}})) == jet("u", {{"t", 1}, {"x", 3}}));

    Reducer gt({solve_for(jet("z", {{"y", 3}}) - jet("z", {{"y", 1}}), jv("z", {{"y", 3}}), {"y"})});
    CHECK(gt(jet("z", {{"y", 3}})) == jet("z", {{"y", 1}}));

    Expr e = jet("u", {{"x", 7}}) * jet("u", {{"x", 3}}) + var("x");
    CHECK(h(h(e)) == h(e));
}

TEST_CASE("solve_for rejects non-linear leaders") {
    Expr u3 = jet("u", {{"x", 3}});
    CHECK_THROWS_AS(solve_for(u3 * u3 + jet("u"), jv("u", {{"x", 3}})), StructureError);
    CHECK_THROWS_AS(solve_for(jet("u"), jv("u", {{"x", 3}})), StructureError);
    CHECK(highest_jet(u3 + jet("u", {{"x", 1}}) * jet("u", {{"x", 2}})) == jv("u", {{"x", 3}}));
}

TEST_CASE("derivative algebra on random expressions") {
    std::mt19937 rng(7);
    Reducer heat({Rule{jv("u", {{"t", 1}}), jet("u", {{"x", 2}}), {}}});
    for (int i = 0; i < 40; ++i) {
        Expr a = random_expr(rng, 3), b = random_expr(rng, 2);
        CHECK(is_zero(total_derivative(total_derivative(a, "t"), "x") -
                      total_derivative(total_derivative(a, "x"), "t")));
        CHECK(is_zero(total_derivative(a * b, "x") -
                      (total_derivative(a, "x") * b + a * total_derivative(b, "x"))));
        Expr s = heat(a);
        CHECK(heat(s) == s);
        CHECK(is_zero(heat(total_derivative(a, "x")) - total_derivative(s, "x")));
    }
}

TEST_CASE("mixed-derivative elimination") {
    Expr zx = jet("z", {{"x", 1}}), zy = jet("z", {{"y", 1}});
    Expr eq = jet("z", {{"x", 2}}) + zy * jet("z", {{"x", 1}, {"y", 1}}) - zx * jet("z", {{"y", 2}}) + 1;
    MixedEliminator m(eq, "z", "x", "y");
    CHECK(is_zero(m(eq)));
    for (int k = 2; k <= 4; ++k) {
        Expr d = m(total_derivative(eq, DerivIndex({{"x", k - 2}, {"y", 2}})));
        CHECK(is_zero(d));
        Expr e = m(jet("z", {{"x", 1}, {"y", k - 1}}));
        for (const auto& j : jets_in(e)) CHECK((j.index.order("x") == 0 || j.index.order("y") == 0));
    }
}
