#include "wfc/pullback.hpp"

namespace wfc {

PerturbationPtr make_perturbation(FieldPtr velocity) {
    require(velocity != nullptr, "make_perturbation: null velocity field");
    require(velocity->rank == 1, "make_perturbation: velocity must be a vector field");
    auto p = std::make_shared<Perturbation>();
    p->velocity = std::move(velocity);
    p->parameter = make_parameter("t", "t");
    return p;
}

Expr boundary_jacobian(const PerturbationPtr& p) {
    Expr t = constant_ref(p->parameter);
    Expr n_finv = inner(normal_vector(), perturb_jacobian_inv(p, t));
    return mul({perturb_det(p, t),
                pow_of(inner(n_finv, n_finv), number(0.5))});
}

namespace {

struct PerturbPass {
    const PerturbationPtr& p;
    DeriveContext* ctx;
    std::map<std::string, NamedPtr> local_memo;

    std::map<std::string, NamedPtr>& memo() { return ctx ? ctx->memo : local_memo; }

    Expr param() const { return constant_ref(p->parameter); }

    Expr integrand(const Expr& e) {
        switch (e->kind) {
            case Kind::Number:
            case Kind::ConstantRef:
            case Kind::CharFnRef:  // advected with the domain
            case Kind::FieldRef:   // pulled-back states keep their symbol
            case Kind::NormalVector:
            case Kind::Identity:
            case Kind::UnitVector: return e;
            case Kind::BoundaryFnRef:
                if (e->composed) throw Error("perturb: input is already perturbed");
                return boundary_ref_composed(e->boundary, p, param());
            case Kind::PerturbJacobian:
            case Kind::PerturbJacobianInv:
            case Kind::PerturbJacobianInvT:
            case Kind::PerturbDet:
                throw Error("perturb: input is already perturbed");
            case Kind::Grad:
                return inner(grad(integrand(e->children[0])),
                             perturb_jacobian_inv(p, param()));
            case Kind::Div:
                // div A = (grad A . F^-1) : I in the pulled-back frame
                return inner2(inner(grad(integrand(e->children[0])),
                                    perturb_jacobian_inv(p, param())),
                              identity_matrix());
            case Kind::ExprRef: return named_ref(e);
            case Kind::IntegralDx:
                return integral_dx(mul({integrand(e->children[0]),
                                        perturb_det(p, param())}),
                                   e->domain);
            case Kind::IntegralDsx:
                return integral_dsx(mul({integrand(e->children[0]), boundary_jacobian(p)}),
                                    e->domain, e->label);
            default: {
                std::vector<Expr> ch;
                ch.reserve(e->children.size());
                for (const auto& c : e->children) ch.push_back(integrand(c));
                return with_children(*e, std::move(ch));
            }
        }
    }

    Expr named_ref(const Expr& e) {
        const NamedExpression& n = *e->named;
        std::string key = "V|" + n.symbol;
        auto it = memo().find(key);
        if (it != memo().end()) return it->second ? expr_ref(it->second) : e;
        Expr body = canonicalize(integrand(n.body));
        if (equal(body, n.body)) {
            memo().emplace(key, nullptr);
            return e;
        }
        auto derived = std::make_shared<NamedExpression>();
        derived->symbol = n.symbol;
        derived->deco = ExprDeco::Perturbed;
        derived->dir = p->velocity;
        derived->body = body;
        derived->origin = e->named;
        memo().emplace(key, derived);
        return expr_ref(derived);
    }
};

}  // namespace

Expr perturb(const Expr& form, const PerturbationPtr& p, DeriveContext* ctx) {
    require(form && p, "perturb: null argument");
    require(is_form(form), "perturb: input must be a form (sum of integrals)");
    PerturbPass pass{p, ctx, {}};
    return canonicalize(pass.integrand(form));
}

Expr dt_at_zero(const Expr& e, const PerturbationPtr& p, DeriveContext* ctx) {
    require(e && p, "dt_at_zero: null argument");
    DeriveContext local;
    DeriveContext& c = ctx ? *ctx : local;
    c.deco = ExprDeco::TimeDerivative;
    c.wrt = nullptr;
    c.dir = p->velocity;
    if (c.arg_candidates.empty()) {
        for (const auto& f : collect_fields(e))
            if (f->role == FieldRole::Trial) c.arg_candidates.push_back(f);
    }
    Expr d = param_derivative(e, *p->parameter, c);
    return at_zero(d, p);
}

Expr at_zero(const Expr& e, const PerturbationPtr& p) {
    return substitute(e, constant_ref(p->parameter), number(0.0));
}

}  // namespace wfc
