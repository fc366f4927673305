#include "wfc/derivation.hpp"

#include <algorithm>
#include <set>

namespace wfc {

Expr LagrangianDef::lagrangian() const {
    std::vector<Expr> terms;
    if (objective && !is_zero(objective)) terms.push_back(objective);
    terms.insert(terms.end(), residuals.begin(), residuals.end());
    return canonicalize(add(std::move(terms)));
}

void LagrangianDef::validate() const {
    require(!trials.empty(), name + ": at least one trial field required");
    require(trials.size() == tests.size(), name + ": trial/test count mismatch");
    require(trials.size() == residuals.size(), name + ": residual per trial required");
    for (size_t i = 0; i < trials.size(); ++i) {
        require(trials[i]->rank == tests[i]->rank,
                name + ": trial/test rank mismatch at slot " + std::to_string(i));
        require(trials[i]->role == FieldRole::Trial, name + ": trial role expected");
        require(tests[i]->role == FieldRole::Test, name + ": test role expected");
        // test functions inherit the Dirichlet labels of their trial
        require(tests[i]->bc_labels == trials[i]->bc_labels,
                name + ": test field must inherit the trial's boundary labels");
        require(is_form(residuals[i]), name + ": residual " + std::to_string(i) +
                                           " is not a sum of integrals");
        for (size_t j = 0; j < tests.size(); ++j) {
            if (i == j) continue;
            require(!depends_on_field(residuals[i], *tests[j]),
                    name + ": residual " + std::to_string(i) +
                        " references a foreign test field");
        }
    }
    if (objective && !is_zero(objective)) {
        require(is_form(objective), name + ": objective is not a sum of integrals");
        for (const auto& t : tests)
            require(!depends_on_field(objective, *t),
                    name + ": objective must not reference test fields");
    }
    std::set<std::string> symbols;
    for (const auto& c : constants) {
        require(symbols.insert(c->symbol).second,
                name + ": duplicate constant symbol " + c->symbol);
    }
    for (const auto& n : named)
        require(!contains(n->body, expr_ref(n)), name + ": recursive abbreviation " + n->symbol);
}

Classification classify(const LagrangianDef& L) {
    for (bool linear : is_linear_in(L.residuals, L.trials))
        if (!linear) return Classification::Nonlinear;
    return Classification::Linear;
}

namespace {

FieldPtr derive_field(const FieldDecl& base, const std::string& ff_suffix, FieldRole role) {
    auto f = std::make_shared<FieldDecl>(base);
    f->ff_symbol = base.ff_symbol + ff_suffix;
    f->role = role;
    f->bc_data = nullptr;  // derived unknowns carry homogeneous data on the same labels
    return f;
}

}  // namespace

FieldPtr make_update_field(const FieldPtr& trial) {
    return derive_field(*trial, "h", FieldRole::Update);
}

FieldPtr make_adjoint_field(const FieldPtr& trial) {
    return derive_field(*trial, "a", FieldRole::Adjoint);
}

FieldPtr make_velocity_field(const DomainPtr& domain) {
    auto f = std::make_shared<FieldDecl>();
    f->symbol = "V";
    f->ff_symbol = "V";
    f->rank = 1;
    f->fe_space = "P1";
    f->domain = domain;
    f->role = FieldRole::Direction;
    return f;
}

Expr DerivedSystem::bilinear() const {
    std::vector<Expr> terms;
    for (const auto& r : rows) terms.push_back(r.lhs);
    return canonicalize(add(std::move(terms)));
}

Expr DerivedSystem::rhs_form() const {
    std::vector<Expr> terms;
    for (const auto& r : rows)
        if (r.rhs && !is_zero(r.rhs)) terms.push_back(r.rhs);
    return canonicalize(add(std::move(terms)));
}

namespace {

std::vector<NamedPtr> derived_abbreviations(const std::vector<SystemRow>& rows) {
    std::vector<NamedPtr> out;
    std::vector<std::string> seen;
    for (const auto& r : rows) {
        for (const auto& n : collect_named(r.lhs)) {
            if (n->deco == ExprDeco::None) continue;
            std::string key = std::to_string(static_cast<int>(n->deco)) + "|" + n->symbol;
            if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
                seen.push_back(key);
                out.push_back(n);
            }
        }
    }
    return out;
}

void check_row_linearity(const DerivedSystem& sys, const LagrangianDef& L) {
    std::vector<Expr> lhs;
    for (const auto& r : sys.rows) lhs.push_back(r.lhs);
    for (bool ok : is_linear_in(lhs, sys.unknowns))
        require(ok, L.name + ": derived system is not linear in its unknowns");
}

}  // namespace

DerivedSystem newton_system(const LagrangianDef& L) {
    L.validate();
    DerivedSystem sys;
    sys.kind = SystemKind::Newton;
    sys.superfluous = (classify(L) == Classification::Linear);
    for (const auto& u : L.trials) sys.unknowns.push_back(make_update_field(u));
    DeriveContext ctx;
    ctx.arg_candidates = L.trials;
    for (size_t i = 0; i < L.residuals.size(); ++i) {
        std::vector<Expr> parts;
        for (size_t j = 0; j < L.trials.size(); ++j)
            parts.push_back(gateaux(L.residuals[i], L.trials[j], sys.unknowns[j], &ctx));
        SystemRow row;
        row.test = L.tests[i];
        row.lhs = canonicalize(add(std::move(parts)));
        row.rhs = negate_form(L.residuals[i]);
        sys.rows.push_back(std::move(row));
    }
    sys.auxiliary = derived_abbreviations(sys.rows);
    check_row_linearity(sys, L);
    return sys;
}

DerivedSystem adjoint_system(const LagrangianDef& L) {
    L.validate();
    DerivedSystem sys;
    sys.kind = SystemKind::Adjoint;
    for (const auto& u : L.trials) sys.unknowns.push_back(make_adjoint_field(u));
    std::map<std::string, Expr> to_adjoint;
    for (size_t j = 0; j < L.tests.size(); ++j)
        to_adjoint[L.tests[j]->ff_symbol] = field_ref(sys.unknowns[j]);
    std::vector<Expr> residuals_adj;
    for (const auto& r : L.residuals)
        residuals_adj.push_back(substitute_fields(r, to_adjoint));
    DeriveContext ctx;
    ctx.arg_candidates = L.trials;
    for (size_t i = 0; i < L.trials.size(); ++i) {
        std::vector<Expr> parts;
        if (L.objective && !is_zero(L.objective))
            parts.push_back(gateaux(L.objective, L.trials[i], L.tests[i], &ctx));
        for (const auto& r : residuals_adj)
            parts.push_back(gateaux(r, L.trials[i], L.tests[i], &ctx));
        SystemRow row;
        row.test = L.tests[i];
        row.lhs = canonicalize(add(std::move(parts)));
        row.rhs = number(0.0);
        sys.rows.push_back(std::move(row));
    }
    sys.auxiliary = derived_abbreviations(sys.rows);
    check_row_linearity(sys, L);
    return sys;
}

Expr shape_derivative(const LagrangianDef& L, const PerturbationPtr& p) {
    DerivedSystem adj;
    adj.kind = SystemKind::Adjoint;
    std::map<std::string, Expr> to_adjoint;
    for (const auto& u : L.trials) {
        auto a = make_adjoint_field(u);
        adj.unknowns.push_back(a);
    }
    for (size_t j = 0; j < L.tests.size(); ++j)
        to_adjoint[L.tests[j]->ff_symbol] = field_ref(adj.unknowns[j]);
    Expr lag = substitute_fields(L.lagrangian(), to_adjoint);
    DeriveContext ctx;
    ctx.arg_candidates = L.trials;
    Expr g = perturb(lag, p, &ctx);
    return dt_at_zero(g, p, &ctx);
}

ShapeDerivation derive_shape(const LagrangianDef& L) {
    L.validate();
    ShapeDerivation out;
    out.perturbation = make_perturbation(make_velocity_field(L.trials[0]->domain));
    for (const auto& u : L.trials) out.adjoints.push_back(make_adjoint_field(u));
    DeriveContext ctx;
    ctx.arg_candidates = L.trials;
    Expr lag = L.lagrangian();
    out.perturbed_lagrangian = perturb(lag, out.perturbation, &ctx);
    std::map<std::string, Expr> to_adjoint;
    for (size_t j = 0; j < L.tests.size(); ++j)
        to_adjoint[L.tests[j]->ff_symbol] = field_ref(out.adjoints[j]);
    out.adjoint_lagrangian = substitute_fields(lag, to_adjoint);
    Expr g_adjoint = substitute_fields(out.perturbed_lagrangian, to_adjoint);
    out.shape_derivative = dt_at_zero(g_adjoint, out.perturbation, &ctx);
    return out;
}

}  // namespace wfc
