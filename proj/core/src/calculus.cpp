#include "wfc/calculus.hpp"

#include <algorithm>
#include <functional>

namespace wfc {

namespace {

bool walk(const Expr& e, const std::function<bool(const Expr&)>& hit) {
    if (hit(e)) return true;
    for (const auto& c : e->children)
        if (walk(c, hit)) return true;
    if (e->kind == Kind::ExprRef) {
        if (walk(e->named->body, hit)) return true;
        for (const auto& a : e->named->args)
            if (walk(a, hit)) return true;
    }
    return false;
}

}  // namespace

bool contains(const Expr& e, const Expr& target) {
    return walk(e, [&](const Expr& n) { return equal(n, target); });
}

bool depends_on_field(const Expr& e, const FieldDecl& f) {
    return walk(e, [&](const Expr& n) {
        return n->kind == Kind::FieldRef && n->field->ff_symbol == f.ff_symbol;
    });
}

bool depends_on_constant(const Expr& e, const ConstantDecl& c) {
    return walk(e, [&](const Expr& n) {
        return n->kind == Kind::ConstantRef && n->constant->symbol == c.symbol;
    });
}

ConstantPtr make_parameter(const std::string& symbol, const std::string& ff_symbol) {
    auto c = std::make_shared<ConstantDecl>();
    c->symbol = symbol;
    c->ff_symbol = ff_symbol;
    c->value = 0.0;
    return c;
}

// --- Substitution ---------------------------------------------------------

namespace {

NamedPtr remake_named(const NamedExpression& base, Expr body, std::vector<Expr> args) {
    auto n = std::make_shared<NamedExpression>(base);
    n->body = std::move(body);
    n->args = std::move(args);
    return n;
}

Expr sub(const Expr& e, const std::function<Expr(const Expr&)>& leaf_rule) {
    if (Expr r = leaf_rule(e)) return r;
    if (e->kind == Kind::ExprRef) {
        const auto& n = *e->named;
        Expr body = sub(n.body, leaf_rule);
        std::vector<Expr> args;
        args.reserve(n.args.size());
        bool args_changed = false;
        for (const auto& a : n.args) {
            args.push_back(sub(a, leaf_rule));
            args_changed = args_changed || args.back() != a;
        }
        if (body == n.body && !args_changed) return e;
        Expr cbody = canonicalize(body);
        if (n.origin && equal(cbody, n.origin->body)) return expr_ref(n.origin);
        if (equal(cbody, n.body)) return e;
        return expr_ref(remake_named(n, cbody, std::move(args)));
    }
    if (e->children.empty()) return e;
    std::vector<Expr> ch;
    ch.reserve(e->children.size());
    bool changed = false;
    for (const auto& c : e->children) {
        ch.push_back(sub(c, leaf_rule));
        changed = changed || ch.back() != c;
    }
    if (!changed) return e;
    return with_children(*e, std::move(ch));
}

}  // namespace

Expr substitute(const Expr& e, const Expr& target, const Expr& replacement) {
    require(e && target && replacement, "substitute: null argument");
    require(target->order == replacement->order,
            "substitute: target and replacement must have equal tensor order");
    Expr out = sub(e, [&](const Expr& n) -> Expr {
        return equal(n, target) ? replacement : nullptr;
    });
    return canonicalize(out);
}

Expr substitute_fields(const Expr& e, const std::map<std::string, Expr>& repl) {
    Expr out = sub(e, [&](const Expr& n) -> Expr {
        if (n->kind != Kind::FieldRef) return nullptr;
        auto it = repl.find(n->field->ff_symbol);
        if (it == repl.end()) return nullptr;
        require(it->second->order == n->order,
                "substitute_fields: replacement order mismatch for " + n->field->ff_symbol);
        return it->second;
    });
    return canonicalize(out);
}

// --- Matrix function rules ------------------------------------------------

Expr diff_matrix(MatrixFnKind k, const Expr& A, const Expr& A_prime) {
    require(A && A_prime, "diff_matrix: null argument");
    require(A->order == 2 && A_prime->order == 2, "diff_matrix: matrix operands required");
    switch (k) {
        case MatrixFnKind::Transpose: return transpose(A_prime);
        case MatrixFnKind::Trace: return trace(A_prime);
        case MatrixFnKind::Det:
            return mul({determinant(A), trace(inner(inverse(A), A_prime))});
        case MatrixFnKind::Inverse:
            return mul({number(-1.0), inner(inner(inverse(A), A_prime), inverse(A))});
        case MatrixFnKind::InverseTranspose:
            return mul({number(-1.0),
                        inner(inner(inverse_transpose(A), transpose(A_prime)),
                              inverse_transpose(A))});
    }
    throw Error("diff_matrix: unknown kind");
}

// --- Parameter derivative ---------------------------------------------------

namespace {

std::string memo_key(const DeriveContext& ctx, const NamedExpression& origin) {
    std::string key;
    switch (ctx.deco) {
        case ExprDeco::Directional: key = "d|"; break;
        case ExprDeco::Perturbed: key = "V|"; break;
        case ExprDeco::TimeDerivative: key = "t|"; break;
        case ExprDeco::None: key = "-|"; break;
    }
    key += origin.symbol;
    if (ctx.wrt) key += "|" + ctx.wrt->ff_symbol;
    if (ctx.dir) key += "|" + ctx.dir->ff_symbol;
    return key;
}

std::vector<Expr> derived_args(const Expr& body, const DeriveContext& ctx) {
    std::vector<Expr> args;
    for (const auto& f : ctx.arg_candidates) {
        if (f && depends_on_field(body, *f)) args.push_back(field_ref(f));
    }
    if (ctx.dir && depends_on_field(body, *ctx.dir)) args.push_back(field_ref(ctx.dir));
    return args;
}

const NamedExpression& root_origin(const NamedExpression& n) {
    return n.origin ? *n.origin : n;
}

Expr d_param(const Expr& e, const ConstantDecl& p, DeriveContext& ctx);

Expr d_named(const Expr& e, const ConstantDecl& p, DeriveContext& ctx) {
    const NamedExpression& n = *e->named;
    const NamedExpression& origin = root_origin(n);
    std::string key = memo_key(ctx, origin);
    auto it = ctx.memo.find(key);
    if (it != ctx.memo.end())
        return it->second ? expr_ref(it->second) : number(0.0);
    // the derived body is already evaluated at param = 0
    Expr dbody = canonicalize(
        substitute(d_param(n.body, p, ctx), constant_ref(std::make_shared<ConstantDecl>(p)),
                   number(0.0)));
    if (is_zero(dbody)) {
        ctx.memo.emplace(key, nullptr);
        return number(0.0);
    }
    auto derived = std::make_shared<NamedExpression>();
    derived->symbol = origin.symbol;
    derived->deco = ctx.deco;
    derived->wrt = ctx.wrt;
    derived->dir = ctx.dir;
    derived->body = dbody;
    derived->args = derived_args(dbody, ctx);
    derived->origin = std::make_shared<NamedExpression>(origin);
    ctx.memo.emplace(key, derived);
    return expr_ref(derived);
}

Expr d_param(const Expr& e, const ConstantDecl& p, DeriveContext& ctx) {
    if (!depends_on_constant(e, p)) return number(0.0);
    switch (e->kind) {
        case Kind::ConstantRef: return number(1.0);  // e is p itself
        case Kind::ExprRef: return d_named(e, p, ctx);
        case Kind::Add: {
            std::vector<Expr> ts;
            ts.reserve(e->children.size());
            for (const auto& c : e->children) ts.push_back(d_param(c, p, ctx));
            return add(std::move(ts));
        }
        case Kind::Mul: {
            std::vector<Expr> ts;
            for (size_t i = 0; i < e->children.size(); ++i) {
                if (!depends_on_constant(e->children[i], p)) continue;
                std::vector<Expr> fs = e->children;
                fs[i] = d_param(e->children[i], p, ctx);
                ts.push_back(mul(std::move(fs)));
            }
            return add(std::move(ts));
        }
        case Kind::Pow: {
            const Expr& f = e->children[0];
            const Expr& g = e->children[1];
            require(!depends_on_constant(g, p),
                    "param_derivative: parameter-dependent exponents are not supported");
            Expr fp = d_param(f, p, ctx);
            return mul({g, pow_of(f, add({g, number(-1.0)})), fp});
        }
        case Kind::TensorProduct: {
            const Expr& a = e->children[0];
            const Expr& b = e->children[1];
            return add({tensor_product(d_param(a, p, ctx), b),
                        tensor_product(a, d_param(b, p, ctx))});
        }
        case Kind::Inner: {
            const Expr& a = e->children[0];
            const Expr& b = e->children[1];
            Expr da = d_param(a, p, ctx);
            Expr db = d_param(b, p, ctx);
            std::vector<Expr> ts;
            if (!is_zero(da)) ts.push_back(inner(da, b));
            if (!is_zero(db)) ts.push_back(inner(a, db));
            return add(std::move(ts));
        }
        case Kind::Inner2: {
            const Expr& a = e->children[0];
            const Expr& b = e->children[1];
            Expr da = d_param(a, p, ctx);
            Expr db = d_param(b, p, ctx);
            std::vector<Expr> ts;
            if (!is_zero(da)) ts.push_back(inner2(da, b));
            if (!is_zero(db)) ts.push_back(inner2(a, db));
            return add(std::move(ts));
        }
        case Kind::Grad: return grad(d_param(e->children[0], p, ctx));
        case Kind::Div: {
            Expr d = d_param(e->children[0], p, ctx);
            return is_zero(d) ? number(0.0) : divergence(d);
        }
        case Kind::Transpose:
            return diff_matrix(MatrixFnKind::Transpose, e->children[0],
                               d_param(e->children[0], p, ctx));
        case Kind::Trace: {
            Expr d = d_param(e->children[0], p, ctx);
            return is_zero(d) ? number(0.0) : trace(d);
        }
        case Kind::Det: {
            Expr d = d_param(e->children[0], p, ctx);
            return is_zero(d) ? number(0.0)
                              : diff_matrix(MatrixFnKind::Det, e->children[0], d);
        }
        case Kind::Inverse: {
            Expr d = d_param(e->children[0], p, ctx);
            return is_zero(d) ? number(0.0)
                              : diff_matrix(MatrixFnKind::Inverse, e->children[0], d);
        }
        case Kind::InverseTranspose: {
            Expr d = d_param(e->children[0], p, ctx);
            return is_zero(d) ? number(0.0)
                              : diff_matrix(MatrixFnKind::InverseTranspose, e->children[0], d);
        }
        case Kind::IntegralDx:
        case Kind::IntegralDsx: {
            Expr d = d_param(e->children[0], p, ctx);
            return is_zero(d) ? number(0.0) : with_children(*e, {d});
        }
        // the perturbation leaves: F = I + t grad V
        case Kind::PerturbJacobian: return grad(field_ref(e->pert->velocity));
        case Kind::PerturbJacobianInv: {
            Expr gv = grad(field_ref(e->pert->velocity));
            return mul({number(-1.0), inner(inner(e, gv), e)});
        }
        case Kind::PerturbJacobianInvT: {
            Expr gvt = transpose(grad(field_ref(e->pert->velocity)));
            return mul({number(-1.0), inner(inner(e, gvt), e)});
        }
        case Kind::PerturbDet: {
            Expr pjinv = perturb_jacobian_inv(e->pert, e->children[0]);
            Expr gv = grad(field_ref(e->pert->velocity));
            return mul({e, trace(inner(pjinv, gv))});
        }
        case Kind::BoundaryFnRef: {
            // composed coordinate data: d/dt g(X + tV) = grad g (X + tV) . V
            require(e->composed, "param_derivative: unexpected parameter dependence");
            return inner(grad(e), field_ref(e->pert->velocity));
        }
        default:
            throw Error(std::string("param_derivative: no rule for ") + kind_name(e->kind));
    }
}

}  // namespace

Expr param_derivative(const Expr& e, const ConstantDecl& param, DeriveContext& ctx) {
    require(e != nullptr, "param_derivative: null expression");
    return d_param(e, param, ctx);
}

// --- Gateaux derivative -----------------------------------------------------

Expr gateaux(const Expr& e, const FieldPtr& u, const FieldPtr& v, DeriveContext* ctx) {
    require(e && u && v, "gateaux: null argument");
    require(u->rank == v->rank, "gateaux: direction rank must equal field rank");
    auto tau = make_parameter("\\tau", "@tau");
    Expr shifted = substitute(
        e, field_ref(u),
        add({field_ref(u), mul({constant_ref(tau), field_ref(v)})}));
    DeriveContext local;
    DeriveContext& c = ctx ? *ctx : local;
    c.deco = ExprDeco::Directional;
    c.wrt = u;
    c.dir = v;
    if (c.arg_candidates.empty()) {
        for (const auto& f : collect_fields(e))
            if (f->role == FieldRole::Trial) c.arg_candidates.push_back(f);
    }
    Expr d = param_derivative(shifted, *tau, c);
    return substitute(d, constant_ref(tau), number(0.0));
}

// --- Linearity --------------------------------------------------------------

std::vector<bool> is_linear_in(const std::vector<Expr>& residuals,
                               const std::vector<FieldPtr>& trials) {
    auto tau = make_parameter("\\tau", "@tau");
    std::map<std::string, Expr> scale;
    for (const auto& u : trials)
        scale[u->ff_symbol] = mul({constant_ref(tau), field_ref(u)});
    std::vector<bool> out;
    out.reserve(residuals.size());
    for (const auto& r : residuals) {
        Expr e = substitute_fields(inline_named(r), scale);
        DeriveContext ctx;
        Expr d2 = param_derivative(param_derivative(e, *tau, ctx), *tau, ctx);
        // linear iff d^2/dtau^2 vanishes identically in tau
        out.push_back(is_zero(canonicalize(d2)));
    }
    return out;
}

// --- Simplify / inline ------------------------------------------------------

namespace {

Expr fold_dim(const Expr& e, int dim) {
    if (e->kind == Kind::Trace && e->children[0]->kind == Kind::Identity)
        return number(static_cast<double>(dim));
    if (e->children.empty() && e->kind != Kind::ExprRef) return e;
    if (e->kind == Kind::ExprRef) return e;  // bodies stay dimension-generic
    std::vector<Expr> ch;
    ch.reserve(e->children.size());
    bool changed = false;
    for (const auto& c : e->children) {
        ch.push_back(fold_dim(c, dim));
        changed = changed || ch.back() != c;
    }
    return changed ? with_children(*e, std::move(ch)) : e;
}

}  // namespace

Expr simplify(const Expr& e, std::optional<int> dim) {
    Expr out = canonicalize(e);
    if (dim) out = canonicalize(fold_dim(out, *dim));
    return out;
}

Expr inline_named(const Expr& e) {
    Expr out = sub(e, [&](const Expr& n) -> Expr {
        if (n->kind != Kind::ExprRef) return nullptr;
        return inline_named(n->named->body);
    });
    return canonicalize(out);
}

std::vector<NamedPtr> collect_named(const Expr& e) {
    std::vector<NamedPtr> out;
    std::vector<std::string> seen;
    std::function<void(const Expr&)> visit = [&](const Expr& n) {
        for (const auto& c : n->children) visit(c);
        if (n->kind != Kind::ExprRef) return;
        visit(n->named->body);
        std::string key = std::to_string(static_cast<int>(n->named->deco)) + "|" +
                          n->named->symbol;
        if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
            seen.push_back(key);
            out.push_back(n->named);
        }
    };
    visit(e);
    return out;
}

std::vector<FieldPtr> collect_fields(const Expr& e) {
    std::vector<FieldPtr> out;
    std::vector<std::string> seen;
    std::function<void(const Expr&)> visit = [&](const Expr& n) {
        if (n->kind == Kind::FieldRef) {
            if (std::find(seen.begin(), seen.end(), n->field->ff_symbol) == seen.end()) {
                seen.push_back(n->field->ff_symbol);
                out.push_back(n->field);
            }
        }
        for (const auto& c : n->children) visit(c);
        if (n->kind == Kind::ExprRef) {
            visit(n->named->body);
            for (const auto& a : n->named->args) visit(a);
        }
        if (n->pert && n->pert->velocity) {
            if (std::find(seen.begin(), seen.end(), n->pert->velocity->ff_symbol) ==
                seen.end()) {
                seen.push_back(n->pert->velocity->ff_symbol);
                out.push_back(n->pert->velocity);
            }
        }
    };
    visit(e);
    return out;
}

Expr negate_form(const Expr& form) {
    return canonicalize(mul({number(-1.0), form}));
}

}  // namespace wfc
