#include "wfc/problems.hpp"

#include <cmath>

namespace wfc {

ConstantPtr make_constant(const std::string& symbol, const std::string& ff, double value,
                          const std::string& description, const std::string& unit) {
    auto c = std::make_shared<ConstantDecl>();
    c->symbol = symbol;
    c->ff_symbol = ff;
    c->value = value;
    c->description = description;
    c->unit = unit;
    return c;
}

FieldPtr make_field(const std::string& symbol, const std::string& ff, int rank,
                    const std::string& fe_space, DomainPtr domain, Expr bc_data,
                    std::vector<int> bc_labels, FieldRole role) {
    auto f = std::make_shared<FieldDecl>();
    f->symbol = symbol;
    f->ff_symbol = ff;
    f->rank = rank;
    f->fe_space = fe_space;
    f->domain = std::move(domain);
    f->bc_data = std::move(bc_data);
    f->bc_labels = std::move(bc_labels);
    f->role = role;
    return f;
}

NamedPtr make_named(const std::string& symbol, Expr body,
                    const std::vector<FieldPtr>& arg_candidates) {
    auto n = std::make_shared<NamedExpression>();
    n->symbol = symbol;
    n->body = canonicalize(body);
    for (const auto& f : arg_candidates)
        if (f && depends_on_field(n->body, *f)) n->args.push_back(field_ref(f));
    return n;
}

FieldEval poly_scalar_field(int dim, const PolyCoeffs& c) {
    auto value = [c](const Vec& p) {
        double x = p[0], y = p[1], z = p[2];
        return c[0] + c[1] * x + c[2] * y + c[3] * z + c[4] * x * y + c[5] * y * z +
               c[6] * z * x + c[7] * x * x + c[8] * y * y + c[9] * z * z;
    };
    auto grad = [c](const Vec& p) {
        double x = p[0], y = p[1], z = p[2];
        return Vec{c[1] + c[4] * y + c[6] * z + 2.0 * c[7] * x,
                   c[2] + c[4] * x + c[5] * z + 2.0 * c[8] * y,
                   c[3] + c[5] * y + c[6] * x + 2.0 * c[9] * z};
    };
    return make_scalar(value, grad, dim);
}

FieldEval poly_vector_field(int dim, const std::vector<PolyCoeffs>& comps) {
    require(static_cast<int>(comps.size()) >= dim, "poly_vector_field: missing components");
    std::vector<FieldEval> parts;
    for (int i = 0; i < dim; ++i) parts.push_back(poly_scalar_field(dim, comps[static_cast<size_t>(i)]));
    FieldEval e;
    e.value = [parts, dim](const Vec& x) {
        TensorValue v(1, dim);
        for (int i = 0; i < dim; ++i) v.at({i}) = parts[static_cast<size_t>(i)].value(x).scalar_value();
        return v;
    };
    e.gradient = [parts, dim](const Vec& x) {
        TensorValue g(2, dim);
        for (int i = 0; i < dim; ++i) {
            TensorValue gi = parts[static_cast<size_t>(i)].gradient(x);
            for (int j = 0; j < dim; ++j) g.at({i, j}) = gi.at({j});
        }
        return g;
    };
    return e;
}

namespace {

CharFnPtr make_charfn(const std::string& symbol, const std::string& ff, double inside,
                      double outside) {
    auto c = std::make_shared<CharacteristicFn>();
    c->symbol = symbol;
    c->ff_symbol = ff;
    c->value_inside = inside;
    c->value_outside = outside;
    return c;
}

BoundaryFnPtr make_coordinate_fn(const std::string& symbol, int rank,
                                 std::vector<std::string> comps,
                                 std::vector<std::string> grads) {
    auto b = std::make_shared<BoundaryFn>();
    b->symbol = symbol;
    b->rank = rank;
    b->ff_components = std::move(comps);
    b->ff_grad_components = std::move(grads);
    return b;
}

Expr e_x() { return unit_vector(0); }
Expr e_y() { return unit_vector(1); }

}  // namespace

// --- Navier-Stokes pipe flow (3d simulation) ----------------------------------

LagrangianDef navier_stokes() {
    LagrangianDef L;
    L.name = "NavierStokes";
    L.title = "Navier-Stokes";

    auto dom = std::make_shared<DomainDecl>();
    dom->latex_symbol = "\\Omega";
    dom->mesh_symbol = "Th";
    dom->boundary_labels = {1, 2, 3, 4};
    L.domains = {dom};

    auto rho = make_constant("\\rho", "rho", 1.0e3, "fluid density", "kg/m^{3}");
    auto mu = make_constant("\\mu", "mu", 1.0e-3, "fluid viscosity", "N s/(m^{2)}");
    auto gamma = make_constant("\\gamma", "gamma", 1.0e-9, "penalty term", "1/(Pa s)");
    L.constants = {rho, mu, gamma};

    auto inflow = make_coordinate_fn("\\mathbf{g}", 1, {"0", "0", "1 - x^2 - y^2"}, {});
    L.boundary_fns = {inflow};

    auto v = make_field("v", "v", 1, "P2", dom, boundary_ref(inflow), {1, 3, 4},
                        FieldRole::Trial);
    auto dv = make_field("v", "dv", 1, "P2", dom, nullptr, {1, 3, 4}, FieldRole::Test);
    auto p = make_field("p", "p", 0, "P1", dom, number(0.0), {2}, FieldRole::Trial);
    auto dp = make_field("p", "dp", 0, "P1", dom, nullptr, {2}, FieldRole::Test);
    L.trials = {v, p};
    L.tests = {dv, dp};

    Expr gv = grad(field_ref(v));
    auto sigma_f = make_named(
        "\\pmb{\\sigma}_{f}",
        mul({number(0.5), constant_ref(mu), add({gv, transpose(gv)})}), {v, p});
    L.named = {sigma_f};

    Expr momentum =
        add({integral_dx(mul({constant_ref(rho),
                              inner(field_ref(dv), inner(gv, field_ref(v)))}),
                         dom),
             mul({number(-1.0),
                  integral_dx(mul({field_ref(p), divergence(field_ref(dv))}), dom)}),
             integral_dx(inner2(expr_ref(sigma_f), grad(field_ref(dv))), dom)});
    Expr continuity =
        add({mul({number(-1.0),
                  integral_dx(mul({field_ref(dp), divergence(field_ref(v))}), dom)}),
             integral_dx(mul({constant_ref(gamma), field_ref(dp), field_ref(p)}), dom)});
    L.residuals = {canonicalize(momentum), canonicalize(continuity)};
    L.objective = number(0.0);
    return L;
}

// --- Compliance minimization of an elastic cantilever (2d) ---------------------

namespace {

struct ElasticityParts {
    DomainPtr dom;
    CharFnPtr chi;
    ConstantPtr ell, nu, E, f;
    NamedPtr lame1, lame2;
    FieldPtr u, du;
};

ElasticityParts cantilever_common() {
    ElasticityParts P;
    auto dom = std::make_shared<DomainDecl>();
    dom->latex_symbol = "D";
    dom->mesh_symbol = "Th";
    dom->boundary_labels = {1, 2, 3, 4};
    dom->boundary_names = {{1, "\\Gamma_D"}, {2, "\\Gamma_N"}};
    P.dom = dom;
    P.chi = make_charfn("\\chi", "chi", 1.0, 0.01);
    P.ell = make_constant("\\ell", "ell", 0.25, "Lagrange multiplier", "\\frac{N}{m^2}");
    P.nu = make_constant("\\nu", "nu", 0.3, "Poisson's ratio", "-");
    P.E = make_constant("E", "E", 200.0, "Young's modulus", "\\frac{N}{m^2}");
    P.f = make_constant("f", "f", -10.0, "vertical load component", "\\frac{N}{m^2}");
    P.u = make_field("u", "u", 1, "P1", dom, nullptr, {1}, FieldRole::Trial);
    P.du = make_field("u", "du", 1, "P1", dom, nullptr, {1}, FieldRole::Test);
    Expr nu_ref = constant_ref(P.nu);
    Expr E_ref = constant_ref(P.E);
    P.lame1 = make_named(
        "\\lambda",
        mul({number(-1.0), E_ref, nu_ref,
             pow_of(add({mul({number(2.0), pow_of(nu_ref, number(2.0))}), nu_ref,
                         number(-1.0)}),
                    number(-1.0))}),
        {});
    P.lame2 = make_named(
        "\\mu",
        mul({number(0.5), E_ref, pow_of(add({nu_ref, number(1.0)}), number(-1.0))}), {});
    return P;
}

}  // namespace

LagrangianDef linear_elasticity() {
    LagrangianDef L;
    L.name = "linearElasticity";
    L.title = "linear Elasticity";
    ElasticityParts P = cantilever_common();
    L.domains = {P.dom};
    L.constants = {P.ell, P.nu, P.E, P.f};
    L.charfns = {P.chi};
    L.trials = {P.u};
    L.tests = {P.du};

    Expr gu = grad(field_ref(P.u));
    auto eps = make_named("\\pmb{\\varepsilon}",
                          mul({number(0.5), add({gu, transpose(gu)})}), {P.u});
    auto sigma = make_named(
        "\\pmb{\\sigma}",
        mul({charfn_ref(P.chi),
             add({mul({expr_ref(P.lame1), identity_matrix(), trace(expr_ref(eps))}),
                  mul({number(2.0), expr_ref(P.lame2), expr_ref(eps)})})}),
        {P.u});
    auto J = make_named(
        "J",
        add({integral_dx(mul({constant_ref(P.ell), charfn_ref(P.chi)}), P.dom),
             integral_dx(inner2(expr_ref(sigma), expr_ref(eps)), P.dom)}),
        {P.u});
    L.named = {P.lame1, J, eps, P.lame2, sigma};

    Expr residual =
        add({mul({number(-1.0),
                  integral_dsx(mul({constant_ref(P.f), inner(e_y(), field_ref(P.du))}),
                               P.dom, 2)}),
             integral_dx(inner2(expr_ref(sigma), grad(field_ref(P.du))), P.dom)});
    L.residuals = {canonicalize(residual)};
    L.objective = expr_ref(J);
    return L;
}

// --- Non-linear two-material diffusion (2d) -------------------------------------

LagrangianDef nonlinear_diffusion(double alpha) {
    LagrangianDef L;
    L.name = "nonlinearDiffusion";
    L.title = "non-linear diffusion";

    auto dom = std::make_shared<DomainDecl>();
    dom->latex_symbol = "\\Omega";
    dom->mesh_symbol = "Th";
    dom->boundary_labels = {1, 2, 3, 4};
    L.domains = {dom};

    auto ell = make_constant("\\ell", "ell", 100.0, "Lagrange multiplier", "");
    auto alpha_c = make_constant("\\alpha", "alpha", alpha, "factor", "");
    auto f = make_constant("f", "f", -10.0, "source", "");
    L.constants = {ell, alpha_c, f};

    auto chi = make_charfn("\\chi", "chi", 1.0, 0.1);
    L.charfns = {chi};

    auto u = make_field("u", "u", 0, "P1", dom, nullptr, {4}, FieldRole::Trial);
    auto du = make_field("u", "du", 0, "P1", dom, nullptr, {4}, FieldRole::Test);
    L.trials = {u};
    L.tests = {du};

    // lambda(u) = chi (1 + alpha u^2); the alpha term is dropped entirely for
    // alpha = 0, which makes the state problem linear
    Expr nl_term = alpha == 0.0
                       ? number(0.0)
                       : mul({constant_ref(alpha_c), pow_of(field_ref(u), number(2.0))});
    auto lambda = make_named(
        "\\lambda", mul({charfn_ref(chi), add({number(1.0), nl_term})}), {u});
    auto J = make_named(
        "J",
        add({integral_dx(mul({constant_ref(ell), charfn_ref(chi)}), dom),
             integral_dx(mul({constant_ref(f), field_ref(u)}), dom)}),
        {u});
    L.named = {J, lambda};

    Expr residual =
        add({integral_dx(mul({expr_ref(lambda),
                              inner(grad(field_ref(u)), grad(field_ref(du)))}),
                         dom),
             mul({number(-1.0),
                  integral_dx(mul({constant_ref(f), field_ref(du)}), dom)})});
    L.residuals = {canonicalize(residual)};
    L.objective = expr_ref(J);
    return L;
}

// --- One-way coupled thermo-elastic bridge (2d) ---------------------------------

LagrangianDef thermo_elasticity() {
    LagrangianDef L;
    L.name = "thermoElastic";
    L.title = "thermo-elastic";

    auto dom = std::make_shared<DomainDecl>();
    dom->latex_symbol = "D";
    dom->mesh_symbol = "Th";
    dom->boundary_labels = {1, 2, 3};
    dom->boundary_names = {{1, "\\Gamma_D"}, {2, "\\Gamma_N"}, {3, "\\Gamma_1"}};
    L.domains = {dom};

    auto nu = make_constant("\\nu", "nu", 0.23, "Poisson's ratio", "-");
    auto E0 = make_constant("E_{0}", "E0", 3.2e7, "Young's modulus", "\\frac{N}{m^2}");
    auto rho = make_constant("\\rho", "rho", 2.5e3, "density", "\\frac{kg}{m^3}");
    auto gam = make_constant("\\gamma", "gam", 100.0, "disp. cost factor", "\\frac{N}{m^2}");
    auto grav = make_constant("g", "grav", 9.81, "gravitational acc.", "\\frac{m}{s^2}");
    auto ell = make_constant("\\ell", "ell", 1.0, "material cost factor", "\\frac{N}{m^2}");
    auto betaT =
        make_constant("\\beta_{T}", "betaT", 1.0e11, "penalty parameter", "\\frac{W}{K m^2}");
    auto beta = make_constant("\\beta", "beta", 1.0e11, "penalty parameter", "\\frac{N}{m^3}");
    auto k0 = make_constant("k_{0}", "k0", 1.25, "ther. conductivity", "\\frac{W}{K m}");
    auto alphaT = make_constant("\\alpha_{T}", "alphaT", 3.6e-5, "ther. expansion coeff.",
                                "\\frac{1}{K}");
    auto q = make_constant("q", "q", 5.0e3, "vert. load comp.", "\\frac{N}{m^2}");
    L.constants = {nu, E0, rho, gam, grav, ell, betaT, beta, k0, alphaT, q};

    auto chi = make_charfn("\\chi", "chi", 1.0, 0.0);
    auto chim = make_charfn("\\chi_{m}", "chim", 1.0, 1.0e-3);
    L.charfns = {chi, chim};

    // prescribed temperature change 30y on the penalized boundaries
    auto gT = make_coordinate_fn("g_{T}", 0, {"30*y"}, {"0", "30"});
    L.boundary_fns = {gT};

    auto T = make_field("T", "T", 0, "P1", dom, nullptr, {}, FieldRole::Trial);
    auto dT = make_field("T", "dT", 0, "P1", dom, nullptr, {}, FieldRole::Test);
    auto u = make_field("u", "u", 1, "P1", dom, nullptr, {}, FieldRole::Trial);
    auto du = make_field("u", "du", 1, "P1", dom, nullptr, {}, FieldRole::Test);
    L.trials = {T, u};
    L.tests = {dT, du};

    Expr nu_ref = constant_ref(nu);
    Expr E_eff = mul({constant_ref(E0), charfn_ref(chim)});
    auto cond = make_named("k", mul({constant_ref(k0), charfn_ref(chim)}), {});
    auto lame1 = make_named(
        "\\lambda",
        mul({number(-1.0), E_eff, nu_ref,
             pow_of(add({mul({number(2.0), pow_of(nu_ref, number(2.0))}), nu_ref,
                         number(-1.0)}),
                    number(-1.0))}),
        {});
    auto lame2 = make_named(
        "\\mu", mul({number(0.5), E_eff, pow_of(add({nu_ref, number(1.0)}), number(-1.0))}),
        {});
    Expr gu = grad(field_ref(u));
    auto eps = make_named("\\pmb{\\varepsilon}",
                          mul({number(0.5), add({gu, transpose(gu)})}), {T, u});
    auto eps_e = make_named(
        "\\pmb{\\varepsilon}_{e}",
        add({expr_ref(eps),
             mul({number(-1.0), constant_ref(alphaT), field_ref(T), identity_matrix()})}),
        {T, u});
    auto sigma = make_named(
        "\\pmb{\\sigma}",
        add({mul({expr_ref(lame1), identity_matrix(), trace(expr_ref(eps_e))}),
             mul({number(2.0), expr_ref(lame2), expr_ref(eps_e)})}),
        {T, u});
    auto J = make_named(
        "J",
        add({mul({number(-1.0),
                  integral_dsx(mul({constant_ref(gam), inner(e_y(), field_ref(u))}), dom,
                               2)}),
             integral_dsx(mul({constant_ref(beta),
                               pow_of(inner(e_x(), field_ref(u)), number(2.0))}),
                          dom, 1),
             integral_dx(mul({constant_ref(ell), charfn_ref(chi)}), dom)}),
        {T, u});
    L.named = {cond, lame1, J, eps, eps_e, lame2, sigma};

    Expr gT_gap = add({field_ref(T), mul({number(-1.0), boundary_ref(gT)})});
    Expr r_thermal =
        add({integral_dx(mul({expr_ref(cond),
                              inner(grad(field_ref(dT)), grad(field_ref(T)))}),
                         dom),
             integral_dsx(mul({constant_ref(betaT), gT_gap, field_ref(dT)}), dom, 2),
             integral_dsx(mul({constant_ref(betaT), gT_gap, field_ref(dT)}), dom, 3)});
    Expr r_elastic =
        add({integral_dsx(mul({constant_ref(beta), inner(field_ref(du), field_ref(u))}),
                          dom, 1),
             integral_dx(inner2(expr_ref(sigma), grad(field_ref(du))), dom),
             mul({number(-1.0),
                  integral_dsx(mul({constant_ref(q), inner(e_y(), field_ref(du))}), dom,
                               2)}),
             mul({number(-1.0),
                  integral_dx(mul({constant_ref(rho), constant_ref(grav), charfn_ref(chi),
                                   inner(e_y(), field_ref(du))}),
                              dom)})});
    L.residuals = {canonicalize(r_thermal), canonicalize(r_elastic)};
    L.objective = expr_ref(J);
    return L;
}

// --- Saint Venant-Kirchhoff cantilever (2d, textbook constitutive law) ----------

LagrangianDef saint_venant() {
    LagrangianDef L;
    L.name = "saintVenant";
    L.title = "non-linear Elasticity (Saint Venant-Kirchhoff)";
    ElasticityParts P = cantilever_common();
    L.domains = {P.dom};
    L.constants = {P.ell, P.nu, P.E, P.f};
    L.charfns = {P.chi};
    L.trials = {P.u};
    L.tests = {P.du};

    Expr gu = grad(field_ref(P.u));
    auto E_gl = make_named(
        "\\mathbf{E}",
        mul({number(0.5), add({gu, transpose(gu), inner(transpose(gu), gu)})}), {P.u});
    auto S = make_named(
        "\\mathbf{S}",
        mul({charfn_ref(P.chi),
             add({mul({expr_ref(P.lame1), identity_matrix(), trace(expr_ref(E_gl))}),
                  mul({number(2.0), expr_ref(P.lame2), expr_ref(E_gl)})})}),
        {P.u});
    auto J = make_named(
        "J",
        add({integral_dx(mul({constant_ref(P.ell), charfn_ref(P.chi)}), P.dom),
             integral_dx(inner2(expr_ref(S), expr_ref(E_gl)), P.dom)}),
        {P.u});
    L.named = {P.lame1, J, E_gl, P.lame2, S};

    Expr piola = inner(add({identity_matrix(), gu}), expr_ref(S));
    Expr residual =
        add({integral_dx(inner2(piola, grad(field_ref(P.du))), P.dom),
             mul({number(-1.0),
                  integral_dsx(mul({constant_ref(P.f), inner(e_y(), field_ref(P.du))}),
                               P.dom, 2)})});
    L.residuals = {canonicalize(residual)};
    L.objective = expr_ref(J);
    return L;
}

// --- Frozen verification bindings ------------------------------------------------

namespace {

void bind_standard_fields(NumericBinding& b, const LagrangianDef& L, unsigned seed) {
    // deterministic smooth polynomial data for states, tests, adjoints and
    // the velocity field
    auto coeff = [&seed](double scale) {
        seed = seed * 1664525u + 1013904223u;
        return scale * (static_cast<double>((seed >> 8) % 2000) / 1000.0 - 1.0);
    };
    auto scalar_coeffs = [&](double scale) {
        PolyCoeffs c{};
        for (auto& v : c) v = coeff(scale);
        if (b.dim == 2) c[3] = c[5] = c[6] = c[9] = 0.0;
        return c;
    };
    auto bind_one = [&](const FieldPtr& f, double scale) {
        if (!f) return;
        if (f->rank == 0) {
            b.fields[f->ff_symbol] = poly_scalar_field(b.dim, scalar_coeffs(scale));
        } else {
            std::vector<PolyCoeffs> cs;
            for (int i = 0; i < b.dim; ++i) cs.push_back(scalar_coeffs(scale));
            b.fields[f->ff_symbol] = poly_vector_field(b.dim, cs);
        }
    };
    for (size_t i = 0; i < L.trials.size(); ++i) {
        bind_one(L.trials[i], 0.4);
        bind_one(L.tests[i], 0.3);
        bind_one(make_update_field(L.trials[i]), 0.3);
        bind_one(make_adjoint_field(L.trials[i]), 0.3);
    }
    bind_one(make_velocity_field(L.trials[0]->domain), 0.25);
    for (const auto& c : L.charfns) b.charfns[c->symbol] = 0.5 * (c->value_inside + 1.0);
    for (const auto& g : L.boundary_fns) {
        if (g->symbol == "g_{T}") {
            b.coordinate_fns[g->symbol] = make_scalar(
                [](const Vec& x) { return 30.0 * x[1]; },
                [](const Vec&) { return Vec{0.0, 30.0, 0.0}; }, b.dim);
        } else if (g->rank == 0) {
            b.coordinate_fns[g->symbol] = poly_scalar_field(b.dim, PolyCoeffs{0.2, 0.1, -0.3});
        } else {
            std::vector<PolyCoeffs> cs;
            for (int i = 0; i < b.dim; ++i)
                cs.push_back(PolyCoeffs{0.1 * (i + 1), 0.05, -0.02});
            b.coordinate_fns[g->symbol] = poly_vector_field(b.dim, cs);
        }
    }
}

Segment seg2(double ax, double ay, double bx, double by, double nx, double ny) {
    Segment s;
    s.a = {ax, ay, 0.0};
    s.b = {bx, by, 0.0};
    s.normal = {nx, ny, 0.0};
    return s;
}

VerificationSetup cantilever_verification(const LagrangianDef& L, unsigned seed) {
    VerificationSetup v;
    v.binding.dim = 2;
    bind_standard_fields(v.binding, L, seed);
    v.quadrature.dim = 2;
    v.quadrature.order = 8;
    v.quadrature.lo = {0.0, 0.0, 0.0};
    v.quadrature.hi = {2.0, 1.0, 0.0};
    v.quadrature.boundary[1] = {seg2(0.0, 0.0, 0.0, 1.0, -1.0, 0.0)};
    v.quadrature.boundary[2] = {seg2(2.0, 0.45, 2.0, 0.55, 1.0, 0.0)};
    v.quadrature.boundary[3] = {seg2(0.0, 0.0, 2.0, 0.0, 0.0, -1.0)};
    v.quadrature.boundary[4] = {seg2(0.0, 1.0, 2.0, 1.0, 0.0, 1.0)};
    return v;
}

VerificationSetup unit_square_verification(const LagrangianDef& L, unsigned seed) {
    VerificationSetup v;
    v.binding.dim = 2;
    bind_standard_fields(v.binding, L, seed);
    v.quadrature.dim = 2;
    v.quadrature.order = 8;
    v.quadrature.lo = {0.0, 0.0, 0.0};
    v.quadrature.hi = {1.0, 1.0, 0.0};
    v.quadrature.boundary[1] = {seg2(0.0, 0.0, 1.0, 0.0, 0.0, -1.0)};
    v.quadrature.boundary[2] = {seg2(1.0, 0.0, 1.0, 1.0, 1.0, 0.0)};
    v.quadrature.boundary[3] = {seg2(0.0, 1.0, 1.0, 1.0, 0.0, 1.0)};
    v.quadrature.boundary[4] = {seg2(0.0, 0.0, 0.0, 1.0, -1.0, 0.0)};
    return v;
}

VerificationSetup bridge_verification(const LagrangianDef& L, unsigned seed) {
    VerificationSetup v;
    v.binding.dim = 2;
    bind_standard_fields(v.binding, L, seed);
    // moderate the huge penalty factors so every term contributes at a
    // comparable magnitude in the Taylor harness
    v.binding.scalars["\\beta_{T}"] = 3.0;
    v.binding.scalars["\\beta"] = 2.0;
    v.binding.scalars["E_{0}"] = 5.0;
    v.binding.scalars["q"] = 4.0;
    v.binding.scalars["\\rho"] = 1.5;
    v.quadrature.dim = 2;
    v.quadrature.order = 8;
    v.quadrature.lo = {0.0, 0.0, 0.0};
    v.quadrature.hi = {4.0, 1.0, 0.0};
    v.quadrature.boundary[1] = {seg2(0.0, 0.0, 0.0, 1.0, -1.0, 0.0),
                                seg2(4.0, 0.0, 4.0, 1.0, 1.0, 0.0)};
    v.quadrature.boundary[2] = {seg2(0.0, 1.0, 4.0, 1.0, 0.0, 1.0)};
    v.quadrature.boundary[3] = {seg2(0.0, 0.0, 4.0, 0.0, 0.0, -1.0)};
    return v;
}

VerificationSetup cube_verification(const LagrangianDef& L, unsigned seed) {
    VerificationSetup v;
    v.binding.dim = 3;
    bind_standard_fields(v.binding, L, seed);
    v.binding.scalars["\\rho"] = 1.0;  // keep the convective term comparable
    v.quadrature.dim = 3;
    v.quadrature.order = 6;
    v.quadrature.lo = {0.0, 0.0, 0.0};
    v.quadrature.hi = {1.0, 1.0, 1.0};
    return v;
}

Expr coordinate_expr(const std::string& ff_text) {
    auto fn = make_coordinate_fn("\\phi_{0}", 0, {ff_text}, {});
    return boundary_ref(fn);
}

std::vector<ExampleDef> build_examples() {
    std::vector<ExampleDef> out;
    {
        ExampleDef e;
        e.key = "navier_stokes";
        e.note = "3d pipe flow simulation (incompressible Navier-Stokes)";
        e.dim = 3;
        e.optimization = false;
        e.default_mesh = "meshNS3d.txt";
        e.build = []() { return navier_stokes(); };
        e.verification = [](const LagrangianDef& L) { return cube_verification(L, 11u); };
        out.push_back(std::move(e));
    }
    {
        ExampleDef e;
        e.key = "linear_elasticity";
        e.note = "2d cantilever compliance minimization";
        e.dim = 2;
        e.optimization = true;
        e.default_mesh = "meshelasticCantilever.txt";
        e.build = []() { return linear_elasticity(); };
        e.opt.hmin = 0.01;
        e.opt.hmax = 0.05;
        e.opt.regularization = 0.02;
        e.opt.v0 = 0.2;
        e.opt.maxit = 200;
        e.opt.phi0 = coordinate_expr("-cos(4*pi*x)*cos(4*pi*y) - 0.4");
        e.opt.boundary_labels = {3, 4};
        e.opt.fixed_labels = {1, 2};
        e.opt.show_weak_material = false;
        e.verification = [](const LagrangianDef& L) {
            return cantilever_verification(L, 23u);
        };
        out.push_back(std::move(e));
    }
    {
        ExampleDef e;
        e.key = "nonlinear_diffusion";
        e.note = "2d two-material diffusion with state-dependent coefficient";
        e.dim = 2;
        e.optimization = true;
        e.default_mesh = "meshdiffusion.txt";
        e.build = []() { return nonlinear_diffusion(0.01); };
        e.opt.hmin = 0.005;
        e.opt.hmax = 0.03;
        e.opt.regularization = 0.01;
        e.opt.v0 = 0.1;
        e.opt.maxit = 200;
        e.opt.phi0 = coordinate_expr("cos(6*pi*x)*cos(6*pi*y) + 0.3");
        e.opt.boundary_labels = {1, 2, 3};
        e.opt.fixed_labels = {4};
        e.opt.show_weak_material = true;
        e.verification = [](const LagrangianDef& L) {
            return unit_square_verification(L, 37u);
        };
        out.push_back(std::move(e));
    }
    {
        ExampleDef e;
        e.key = "thermo_elasticity";
        e.note = "2d thermo-elastic bridge (one-way coupled)";
        e.dim = 2;
        e.optimization = true;
        e.default_mesh = "meshbridge.txt";
        e.build = []() { return thermo_elasticity(); };
        e.opt.hmin = 0.01;
        e.opt.hmax = 0.05;
        e.opt.regularization = 0.02;
        e.opt.v0 = 0.15;
        e.opt.maxit = 200;
        e.opt.phi0 = coordinate_expr("-cos(6*pi*x)*cos(3*pi*y) - 0.2");
        e.opt.boundary_labels = {3};
        e.opt.fixed_labels = {1, 2};
        e.opt.show_weak_material = false;
        e.verification = [](const LagrangianDef& L) { return bridge_verification(L, 51u); };
        out.push_back(std::move(e));
    }
    {
        ExampleDef e;
        e.key = "saint_venant";
        e.note = "2d cantilever with Saint Venant-Kirchhoff material (textbook "
                 "constitutive definitions)";
        e.dim = 2;
        e.optimization = true;
        e.default_mesh = "meshelasticCantilever.txt";
        e.build = []() { return saint_venant(); };
        e.opt.hmin = 0.01;
        e.opt.hmax = 0.05;
        e.opt.regularization = 0.02;
        e.opt.v0 = 0.2;
        e.opt.maxit = 200;
        e.opt.phi0 = coordinate_expr("-cos(4*pi*x)*cos(4*pi*y) - 0.4");
        e.opt.boundary_labels = {3, 4};
        e.opt.fixed_labels = {1, 2};
        e.opt.show_weak_material = false;
        e.verification = [](const LagrangianDef& L) {
            VerificationSetup v = cantilever_verification(L, 67u);
            // the Green-Lagrange strain needs a small displacement so the
            // deformation gradient stays invertible across the box
            return v;
        };
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

const std::vector<ExampleDef>& examples() {
    static const std::vector<ExampleDef> defs = build_examples();
    return defs;
}

const ExampleDef* find_example(const std::string& key) {
    for (const auto& e : examples())
        if (e.key == key) return &e;
    return nullptr;
}

}  // namespace wfc
