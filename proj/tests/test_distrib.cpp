#include "doctest.h"

#include "jetcas/distrib.hpp"

using namespace jetcas;

namespace {

Expr var(const char* n) { return Expr::variable(n); }
Expr jet(const char* dep, std::vector<std::pair<std::string, int>> idx = {}) {
    return Expr::jet(JetVar(dep, DerivIndex(std::move(idx))));
}
Expr fn(const char* name, const Expr& arg, int k = 0) { return opaque(name, {arg}, {k}); }

const std::vector<std::string> XY{"x", "y"};
const std::vector<std::string> U{"u"};

Expr eta1() {
    Expr t = var("t"), x = var("x"), u = jet("u");
    return -(u * u + (t * u * u - x * u * u + u) * tan(t));
}
Expr eta2() {
    Expr t = var("t"), x = var("x"), u = jet("u");
    return -(t * u * u + u - x * u * u);
}

VectorField X1() { return VectorField(XY, U, {Expr(1), Expr()}, {eta1()}); }
VectorField X2() { return VectorField(XY, U, {Expr(), Expr(1)}, {eta2()}); }

PdeSystem log_diffusion() {
    Expr u = jet("u");
    Expr lap = jet("u", {{"x", 2}}) + jet("u", {{"y", 2}});
    Expr grad = pow(jet("u", {{"x", 1}}), 2) + pow(jet("u", {{"y", 1}}), 2);
    return evolution_system("t", {"x", "y"}, {{"u", lap / u - grad / (u * u)}});
}

PdeSystem long_wave() {
    Expr u = jet("u"), ux = jet("u", {{"x", 1}}), uy = jet("u", {{"y", 1}});
    Expr r = jet("u", {{"t", 2}}) - jet("u", {{"t", 2}, {"x", 2}}) - jet("u", {{"t", 2}, {"y", 2}}) -
             u * (jet("u", {{"x", 2}}) + jet("u", {{"y", 2}})) - ux * ux - uy * uy;
    return general_system("t", {"x", "y"}, {"u"}, {{r, JetVar("u", DerivIndex({{"t", 2}, {"y", 2}}))}});
}

Expr s(int i, int k = 0) { return fn(("s" + std::to_string(i)).c_str(), var("t"), k); }

std::vector<Expr> five_odes() {
    return {s(1, 2) + 3 * s(1) * s(1) + s(1) * s(4) + 2 * s(2) * s(2), s(2, 2) + 3 * s(1) * s(2) + 3 * s(2) * s(4),
            s(3, 2) + 3 * s(1) * s(3) + 2 * s(2) * s(5) + s(3) * s(4), s(4, 2) + s(1) * s(4) + 2 * s(2) * s(2) + 3 * s(4) * s(4),
            s(5, 2) + s(1) * s(5) + 2 * s(2) * s(3) + 3 * s(4) * s(5)};
}

std::map<std::string, Expr> qde_constants(int a3) {
    std::map<std::string, Expr> c;
    for (const char* p : {"a", "b"}) {
        std::string q(p);
        c[q + "1"] = Expr(-1);
        c[q + "4"] = Expr(-1);
        c[q + "2"] = Expr(-3);
        c[q + "3"] = Expr(a3);
        for (int i = 5; i <= 7; ++i) c[q + std::to_string(i)] = Expr();
    }
    return c;
}

}  // namespace

TEST_CASE("commuting fields of the logarithmic diffusion example") {
    auto c = commutator(X1(), X2());
    CHECK(c.is_zero());
    auto inv = check_involutive({X1(), X2()});
    CHECK(inv.involutive);
    CHECK(is_zero(inv.c[0][1][0]));
    CHECK(is_zero(inv.c[0][1][1]));
}

TEST_CASE("commutator algebra") {
    Expr x = var("x"), y = var("y"), u = jet("u");
    VectorField dx(XY, U, {Expr(1), Expr()}, {Expr()});
    VectorField xdx(XY, U, {x, Expr()}, {Expr()});
    VectorField rot(XY, U, {-y, x}, {Expr()});
    VectorField scale(XY, U, {x, y}, {2 * u});
    auto c = commutator(xdx, dx);
    CHECK(is_zero(c.xi[0] + 1));
    CHECK(is_zero(c.xi[1]));
    std::vector<VectorField> fs{dx, xdx, rot, scale, X1(), X2()};
    for (const auto& A : fs)
        for (const auto& B : fs) {
            auto ab = commutator(A, B), ba = commutator(B, A);
            CHECK((ab + ba).is_zero());
            for (const auto& C : fs) {
                auto j = commutator(A, commutator(B, C)) + commutator(B, commutator(C, A)) + commutator(C, commutator(A, B));
                CHECK(j.is_zero());
            }
        }
    CHECK_THROWS_AS(VectorField(XY, U, {jet("u", {{"x", 1}}), Expr()}, {Expr()}), StructureError);
}

TEST_CASE("non-involutive pair yields a witness") {
    Expr x = var("x"), y = var("y");
    std::vector<std::string> xyz{"x", "y", "z"};
    VectorField A(xyz, {}, {Expr(1), Expr(), y}, {});
    VectorField B(xyz, {}, {Expr(), Expr(1), Expr()}, {});
    auto r = check_involutive({A, B});
    CHECK_FALSE(r.involutive);
    REQUIRE(r.failing_pair.has_value());
    CHECK(r.failing_pair->first == 0);
    CHECK(r.failing_pair->second == 1);
    CHECK(is_zero(r.witness.xi[2] + 1));
    VectorField C(xyz, {}, {x, Expr(), x * y}, {});
    CHECK_THROWS_AS(check_involutive({A, C}), DegenerateError);
}

TEST_CASE("manifold of the commuting fields") {
    auto M = manifold_from_fields({X1(), X2()});
    Expr t = var("t"), x = var("x"), u = jet("u");
    Expr h11 = jet("u", {{"x", 1}}) + u * u + (t * u * u - x * u * u + u) * tan(t);
    Expr h12 = jet("u", {{"y", 1}}) + t * u * u + u - x * u * u;
    CHECK(is_zero(M.equations[0][0] - h11));
    CHECK(is_zero(M.equations[1][0] - h12));
    CHECK(check_cross_compatibility(M).ok);

    auto N = normalized_manifold(XY, U, {{h11}, {h12}});
    CHECK(check_cross_compatibility(N).ok);

    auto inv = check_invariance(log_diffusion(), {{h11, JetVar("u", DerivIndex({{"x", 1}}))},
                                                  {h12, JetVar("u", DerivIndex({{"y", 1}}))}});
    CHECK(inv.ok);

    Expr y = var("y");
    auto bad = normalized_manifold(XY, U, {{jet("u", {{"x", 1}}) - u * y}, {jet("u", {{"y", 1}})}});
    auto v = check_cross_compatibility(bad);
    CHECK_FALSE(v.ok);

    VectorField d(XY, U, {x, x}, {Expr()});
    CHECK_THROWS_AS(manifold_from_fields({d, d}), DegenerateError);
}

TEST_CASE("quasilinear determining equations of the long-wave equation") {
    Expr t = var("t"), x = var("x"), y = var("y");
    Expr h1 = jet("u", {{"x", 1}}) + s(1) * x + s(2) * y + s(3);
    Expr h2 = jet("u", {{"y", 1}}) + s(2) * x + s(4) * y + s(5);
    std::vector<std::string> names{"s1", "s2", "s3", "s4", "s5"};

    SUBCASE("printed constants") {
        std::map<std::string, Expr> fns{{"r1", 3 * s(1) + s(4)}, {"r2", s(1) + 3 * s(4)}, {"q1", 2 * s(1)}, {"q2", 2 * s(2)}};
        auto v = verify_qde(long_wave(), h1, h2, qde_constants(-3), fns, five_odes(), names);
        MESSAGE("printed QDE residuals: " << v.residuals[0].str() << " ; " << v.residuals[1].str());
        CHECK_FALSE(v.ok);
    }
    SUBCASE("corrected constants") {
        std::map<std::string, Expr> fns{{"r1", 3 * s(1) + s(4)}, {"r2", s(1) + 3 * s(4)}, {"q1", 2 * s(2)}, {"q2", 2 * s(2)}};
        auto v = verify_qde(long_wave(), h1, h2, qde_constants(-2), fns, five_odes(), names);
        CHECK(v.ok);
    }
}
