#include "wfc/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace wfc {

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::Number: return "num";
        case Kind::ConstantRef: return "const";
        case Kind::CharFnRef: return "charfn";
        case Kind::FieldRef: return "field";
        case Kind::BoundaryFnRef: return "coordfn";
        case Kind::NormalVector: return "normal";
        case Kind::Identity: return "identity";
        case Kind::UnitVector: return "unitvec";
        case Kind::PerturbJacobian: return "F";
        case Kind::PerturbJacobianInv: return "Finv";
        case Kind::PerturbJacobianInvT: return "FinvT";
        case Kind::PerturbDet: return "detF";
        case Kind::ExprRef: return "ref";
        case Kind::Pow: return "pow";
        case Kind::Grad: return "grad";
        case Kind::Div: return "div";
        case Kind::Transpose: return "transpose";
        case Kind::Trace: return "tr";
        case Kind::Det: return "det";
        case Kind::Inverse: return "inv";
        case Kind::InverseTranspose: return "invT";
        case Kind::TensorProduct: return "outer";
        case Kind::Inner: return "inner";
        case Kind::Inner2: return "inner2";
        case Kind::Mul: return "mul";
        case Kind::Add: return "add";
        case Kind::IntegralDx: return "dx";
        case Kind::IntegralDsx: return "dsx";
    }
    return "?";
}

int tensor_order(const Expr& e) {
    require(e != nullptr, "tensor_order of null expression");
    return e->order;
}

bool is_zero(const Expr& e) { return e && e->kind == Kind::Number && e->number == 0.0; }
bool is_number(const Expr& e, double v) { return e && e->kind == Kind::Number && e->number == v; }

namespace {

std::shared_ptr<ExprNode> make_node(Kind k, int order) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->order = order;
    return n;
}

[[noreturn]] void order_error(const std::string& op, const Expr& e) {
    throw Error(op + ": order rule violated by operand '" + serialize(e) + "' of order " +
                std::to_string(e->order));
}

}  // namespace

// --- Leaf factories -------------------------------------------------------

Expr number(double v) {
    auto n = make_node(Kind::Number, 0);
    n->number = (v == 0.0) ? 0.0 : v;  // normalize -0
    return n;
}

Expr constant_ref(ConstantPtr c) {
    require(c != nullptr, "constant_ref: null declaration");
    auto n = make_node(Kind::ConstantRef, 0);
    n->constant = std::move(c);
    return n;
}

Expr charfn_ref(CharFnPtr c) {
    require(c != nullptr, "charfn_ref: null declaration");
    auto n = make_node(Kind::CharFnRef, 0);
    n->charfn = std::move(c);
    return n;
}

Expr field_ref(FieldPtr f) {
    require(f != nullptr, "field_ref: null declaration");
    require(f->rank == 0 || f->rank == 1, "field_ref: rank must be 0 or 1");
    auto n = make_node(Kind::FieldRef, f->rank);
    n->field = std::move(f);
    return n;
}

Expr boundary_ref(BoundaryFnPtr b) {
    require(b != nullptr, "boundary_ref: null declaration");
    auto n = make_node(Kind::BoundaryFnRef, b->rank);
    n->boundary = std::move(b);
    return n;
}

Expr boundary_ref_composed(BoundaryFnPtr b, PerturbationPtr p, Expr param) {
    require(b && p && param, "boundary_ref_composed: null argument");
    require(param->order == 0, "boundary_ref_composed: parameter must be scalar");
    auto n = make_node(Kind::BoundaryFnRef, b->rank);
    n->boundary = std::move(b);
    n->pert = std::move(p);
    n->composed = true;
    n->children = {std::move(param)};
    return n;
}

Expr normal_vector() { return make_node(Kind::NormalVector, 1); }
Expr identity_matrix() { return make_node(Kind::Identity, 2); }

Expr unit_vector(int axis) {
    require(axis >= 0 && axis <= 2, "unit_vector: axis must be 0, 1 or 2");
    auto n = make_node(Kind::UnitVector, 1);
    n->axis = axis;
    return n;
}

namespace {
Expr perturb_leaf(Kind k, int order, PerturbationPtr p, Expr param) {
    require(p && param, "perturbation leaf: null argument");
    require(param->order == 0, "perturbation leaf: parameter must be scalar");
    auto n = make_node(k, order);
    n->pert = std::move(p);
    n->children = {std::move(param)};
    return n;
}
}  // namespace

Expr perturb_jacobian(PerturbationPtr p, Expr t) { return perturb_leaf(Kind::PerturbJacobian, 2, std::move(p), std::move(t)); }
Expr perturb_jacobian_inv(PerturbationPtr p, Expr t) { return perturb_leaf(Kind::PerturbJacobianInv, 2, std::move(p), std::move(t)); }
Expr perturb_jacobian_inv_t(PerturbationPtr p, Expr t) { return perturb_leaf(Kind::PerturbJacobianInvT, 2, std::move(p), std::move(t)); }
Expr perturb_det(PerturbationPtr p, Expr t) { return perturb_leaf(Kind::PerturbDet, 0, std::move(p), std::move(t)); }

Expr expr_ref(NamedPtr n) {
    require(n != nullptr, "expr_ref: null declaration");
    require(n->body != nullptr, "expr_ref: abbreviation has no body");
    auto node = make_node(Kind::ExprRef, n->body->order);
    node->named = std::move(n);
    return node;
}

// --- Algebra --------------------------------------------------------------

Expr add(std::vector<Expr> terms) {
    std::vector<Expr> kept;
    int order = -1;
    for (auto& t : terms) {
        require(t != nullptr, "add: null term");
        if (is_zero(t)) continue;
        if (order < 0) order = t->order;
        if (t->order != order) order_error("add", t);
        kept.push_back(std::move(t));
    }
    if (kept.empty()) return number(0.0);
    if (kept.size() == 1) return kept[0];
    auto n = make_node(Kind::Add, order);
    n->children = std::move(kept);
    return n;
}

Expr mul(std::vector<Expr> factors) {
    std::vector<Expr> kept;
    int order = 0;
    int tensors = 0;
    for (auto& f : factors) {
        require(f != nullptr, "mul: null factor");
        if (is_zero(f)) return number(0.0);
        if (is_number(f, 1.0)) continue;
        if (f->order > 0) {
            ++tensors;
            order = f->order;
        }
        kept.push_back(std::move(f));
    }
    require(tensors <= 1,
            "mul: at most one factor of nonzero order; use tensor_product/inner/inner2");
    if (kept.empty()) return number(1.0);
    if (kept.size() == 1) return kept[0];
    auto n = make_node(Kind::Mul, order);
    n->children = std::move(kept);
    return n;
}

Expr pow_of(Expr base, Expr exponent) {
    require(base && exponent, "pow: null operand");
    if (base->order != 0) order_error("pow (base)", base);
    if (exponent->order != 0) order_error("pow (exponent)", exponent);
    if (is_zero(base)) return number(0.0);
    if (is_number(base, 1.0) || is_zero(exponent)) return number(1.0);
    if (is_number(exponent, 1.0)) return base;
    auto n = make_node(Kind::Pow, 0);
    n->children = {std::move(base), std::move(exponent)};
    return n;
}

Expr tensor_product(Expr a, Expr b) {
    require(a && b, "tensor_product: null operand");
    if (is_zero(a) || is_zero(b)) return number(0.0);
    auto n = make_node(Kind::TensorProduct, a->order + b->order);
    n->children = {std::move(a), std::move(b)};
    return n;
}

Expr inner(Expr a, Expr b) {
    require(a && b, "inner: null operand");
    if (is_zero(a) || is_zero(b)) return number(0.0);
    if (a->order < 1) order_error("inner: scalar operand", a);
    if (b->order < 1) order_error("inner: scalar operand", b);
    auto n = make_node(Kind::Inner, a->order + b->order - 2);
    n->children = {std::move(a), std::move(b)};
    return n;
}

Expr inner2(Expr a, Expr b) {
    require(a && b, "inner2: null operand");
    if (is_zero(a) || is_zero(b)) return number(0.0);
    if (a->order < 2) order_error("inner2: operand of order < 2", a);
    if (b->order < 2) order_error("inner2: operand of order < 2", b);
    auto n = make_node(Kind::Inner2, a->order + b->order - 4);
    n->children = {std::move(a), std::move(b)};
    return n;
}

Expr grad(Expr a) {
    require(a != nullptr, "grad: null operand");
    if (is_zero(a)) return number(0.0);
    switch (a->kind) {
        case Kind::Number:
        case Kind::ConstantRef:
        case Kind::UnitVector:
        case Kind::Identity:
        case Kind::NormalVector:
            return number(0.0);  // spatially uniform / fixed quantities
        case Kind::CharFnRef:
            throw Error("grad: the color function is piecewise constant and has no "
                        "pointwise gradient");
        default: break;
    }
    auto n = make_node(Kind::Grad, a->order + 1);
    n->children = {std::move(a)};
    return n;
}

Expr divergence(Expr a) {
    require(a != nullptr, "div: null operand");
    if (is_zero(a)) return number(0.0);
    if (a->order < 1) throw Error("div: not defined for a scalar field");
    if (a->kind == Kind::UnitVector || a->kind == Kind::Identity) return number(0.0);
    auto n = make_node(Kind::Div, a->order - 1);
    n->children = {std::move(a)};
    return n;
}

namespace {
Expr matrix_node(Kind k, int out_order, Expr a, const char* op) {
    require(a != nullptr, std::string(op) + ": null operand");
    if (is_zero(a) && k != Kind::Inverse && k != Kind::InverseTranspose) return number(0.0);
    if (a->order != 2) order_error(std::string(op) + ": matrix operand required", a);
    auto n = make_node(k, out_order);
    n->children = {std::move(a)};
    return n;
}
}  // namespace

Expr transpose(Expr a) { return matrix_node(Kind::Transpose, 2, std::move(a), "transpose"); }
Expr trace(Expr a) { return matrix_node(Kind::Trace, 0, std::move(a), "tr"); }
Expr determinant(Expr a) { return matrix_node(Kind::Det, 0, std::move(a), "det"); }
Expr inverse(Expr a) {
    require(a && !is_zero(a), "inverse: singular (zero) operand");
    return matrix_node(Kind::Inverse, 2, std::move(a), "inverse");
}
Expr inverse_transpose(Expr a) {
    require(a && !is_zero(a), "inverse_transpose: singular (zero) operand");
    return matrix_node(Kind::InverseTranspose, 2, std::move(a), "inverse_transpose");
}

Expr integral_dx(Expr integrand, DomainPtr domain) {
    require(integrand && domain, "dx: null argument");
    if (is_zero(integrand)) return number(0.0);
    if (integrand->order != 0)
        throw Error("dx: integrand of nonzero tensor order in a form");
    auto n = make_node(Kind::IntegralDx, 0);
    n->children = {std::move(integrand)};
    n->domain = std::move(domain);
    return n;
}

Expr integral_dsx(Expr integrand, DomainPtr domain, int label) {
    require(integrand && domain, "dsx: null argument");
    require(label >= 0, "dsx: a boundary label is required");
    if (is_zero(integrand)) return number(0.0);
    if (integrand->order != 0)
        throw Error("dsx: integrand of nonzero tensor order in a form");
    auto n = make_node(Kind::IntegralDsx, 0);
    n->children = {std::move(integrand)};
    n->domain = std::move(domain);
    n->label = label;
    return n;
}

Expr with_children(const ExprNode& node, std::vector<Expr> children) {
    switch (node.kind) {
        case Kind::Number:
        case Kind::ConstantRef:
        case Kind::CharFnRef:
        case Kind::FieldRef:
        case Kind::NormalVector:
        case Kind::Identity:
        case Kind::UnitVector: {
            require(children.empty(), "with_children: leaf takes no children");
            auto n = std::make_shared<ExprNode>(node);
            return n;
        }
        case Kind::BoundaryFnRef:
            if (!node.composed) {
                require(children.empty(), "with_children: leaf takes no children");
                return boundary_ref(node.boundary);
            }
            require(children.size() == 1, "with_children: composed data takes one child");
            return boundary_ref_composed(node.boundary, node.pert, children[0]);
        case Kind::PerturbJacobian: return perturb_jacobian(node.pert, children.at(0));
        case Kind::PerturbJacobianInv: return perturb_jacobian_inv(node.pert, children.at(0));
        case Kind::PerturbJacobianInvT: return perturb_jacobian_inv_t(node.pert, children.at(0));
        case Kind::PerturbDet: return perturb_det(node.pert, children.at(0));
        case Kind::ExprRef: {
            require(children.empty(), "with_children: ref takes no children");
            return expr_ref(node.named);
        }
        case Kind::Pow: return pow_of(children.at(0), children.at(1));
        case Kind::Grad: return grad(children.at(0));
        case Kind::Div: return divergence(children.at(0));
        case Kind::Transpose: return transpose(children.at(0));
        case Kind::Trace: return trace(children.at(0));
        case Kind::Det: return determinant(children.at(0));
        case Kind::Inverse: return inverse(children.at(0));
        case Kind::InverseTranspose: return inverse_transpose(children.at(0));
        case Kind::TensorProduct: return tensor_product(children.at(0), children.at(1));
        case Kind::Inner: return inner(children.at(0), children.at(1));
        case Kind::Inner2: return inner2(children.at(0), children.at(1));
        case Kind::Mul: return mul(std::move(children));
        case Kind::Add: return add(std::move(children));
        case Kind::IntegralDx: return integral_dx(children.at(0), node.domain);
        case Kind::IntegralDsx: return integral_dsx(children.at(0), node.domain, node.label);
    }
    throw Error("with_children: unknown kind");
}

// --- Total order ----------------------------------------------------------

namespace {

int cmp(double a, double b) { return a < b ? -1 : (a > b ? 1 : 0); }
int cmp(int a, int b) { return a < b ? -1 : (a > b ? 1 : 0); }
int cmp(const std::string& a, const std::string& b) { return a.compare(b); }

int compare_payload(const ExprNode& a, const ExprNode& b) {
    switch (a.kind) {
        case Kind::Number: return cmp(a.number, b.number);
        case Kind::ConstantRef: return cmp(a.constant->symbol, b.constant->symbol);
        case Kind::CharFnRef: return cmp(a.charfn->symbol, b.charfn->symbol);
        case Kind::FieldRef:
            if (int c = cmp(a.field->ff_symbol, b.field->ff_symbol)) return c;
            return cmp(static_cast<int>(a.field->role), static_cast<int>(b.field->role));
        case Kind::BoundaryFnRef:
            if (int c = cmp(a.boundary->symbol, b.boundary->symbol)) return c;
            return cmp(static_cast<int>(a.composed), static_cast<int>(b.composed));
        case Kind::UnitVector: return cmp(a.axis, b.axis);
        case Kind::PerturbJacobian:
        case Kind::PerturbJacobianInv:
        case Kind::PerturbJacobianInvT:
        case Kind::PerturbDet:
            return cmp(a.pert->velocity->ff_symbol, b.pert->velocity->ff_symbol);
        case Kind::ExprRef: {
            const auto& na = *a.named;
            const auto& nb = *b.named;
            if (int c = cmp(static_cast<int>(na.deco), static_cast<int>(nb.deco))) return c;
            if (int c = cmp(na.symbol, nb.symbol)) return c;
            auto fsym = [](const FieldPtr& f) { return f ? f->ff_symbol : std::string(); };
            if (int c = cmp(fsym(na.wrt), fsym(nb.wrt))) return c;
            if (int c = cmp(fsym(na.dir), fsym(nb.dir))) return c;
            if (int c = cmp(static_cast<int>(na.args.size()), static_cast<int>(nb.args.size())))
                return c;
            for (size_t i = 0; i < na.args.size(); ++i)
                if (int c = compare(na.args[i], nb.args[i])) return c;
            return compare(na.body, nb.body);
        }
        case Kind::IntegralDx: return cmp(a.domain->mesh_symbol, b.domain->mesh_symbol);
        case Kind::IntegralDsx:
            if (int c = cmp(a.domain->mesh_symbol, b.domain->mesh_symbol)) return c;
            return cmp(a.label, b.label);
        default: return 0;
    }
}

}  // namespace

int compare(const Expr& a, const Expr& b) {
    if (a == b) return 0;
    if (int c = cmp(static_cast<int>(a->kind), static_cast<int>(b->kind))) return c;
    if (int c = compare_payload(*a, *b)) return c;
    if (int c = cmp(static_cast<int>(a->children.size()), static_cast<int>(b->children.size())))
        return c;
    for (size_t i = 0; i < a->children.size(); ++i)
        if (int c = compare(a->children[i], b->children[i])) return c;
    return 0;
}

bool equal(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

// --- Canonical form -------------------------------------------------------

namespace {

bool is_uniform(const Expr& e) {
    switch (e->kind) {
        case Kind::Number:
        case Kind::ConstantRef: break;
        case Kind::FieldRef:
        case Kind::CharFnRef:
        case Kind::BoundaryFnRef:
        case Kind::NormalVector:
        case Kind::PerturbJacobian:
        case Kind::PerturbJacobianInv:
        case Kind::PerturbJacobianInvT:
        case Kind::PerturbDet:
        case Kind::Grad:
        case Kind::Div: return false;
        case Kind::ExprRef: return is_uniform(e->named->body);
        default: break;
    }
    for (const auto& c : e->children)
        if (!is_uniform(c)) return false;
    return true;
}

bool is_form_term(const Expr& e) {
    if (e->kind == Kind::IntegralDx || e->kind == Kind::IntegralDsx) return true;
    if (e->kind == Kind::ExprRef) {
        const Expr& b = e->named->body;
        if (b->kind == Kind::IntegralDx || b->kind == Kind::IntegralDsx) return true;
        if (b->kind == Kind::Add) {
            for (const auto& t : b->children)
                if (!is_form_term(t)) return false;
            return true;
        }
        return is_form_term(b);
    }
    if (e->kind == Kind::Mul) {
        for (const auto& c : e->children)
            if (c->kind != Kind::Number && !is_form_term(c)) return false;
        return true;
    }
    return false;
}

Expr norm(const Expr& e);

Expr norm_add(std::vector<Expr> terms);
Expr norm_mul(std::vector<Expr> factors);

// Split a canonical term into (numeric coefficient, remaining factors).
std::pair<double, std::vector<Expr>> split_coeff(const Expr& term) {
    if (term->kind == Kind::Number) return {term->number, {}};
    if (term->kind == Kind::Mul) {
        double c = 1.0;
        std::vector<Expr> rest;
        for (const auto& f : term->children) {
            if (f->kind == Kind::Number)
                c *= f->number;
            else
                rest.push_back(f);
        }
        return {c, std::move(rest)};
    }
    return {1.0, {term}};
}

Expr rebuild_term(double coeff, const std::vector<Expr>& core) {
    if (coeff == 0.0) return number(0.0);
    std::vector<Expr> fs;
    if (coeff != 1.0) fs.push_back(number(coeff));
    fs.insert(fs.end(), core.begin(), core.end());
    if (fs.empty()) return number(1.0);
    if (fs.size() == 1) return fs[0];
    int order = 0;
    for (const auto& f : fs) order = std::max(order, f->order);
    auto n = make_node(Kind::Mul, order);
    n->children = std::move(fs);
    return n;
}

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

Expr norm_add(std::vector<Expr> terms) {
    std::vector<Expr> flat;
    for (auto& t : terms) {
        if (is_zero(t)) continue;
        if (t->kind == Kind::Add)
            flat.insert(flat.end(), t->children.begin(), t->children.end());
        else
            flat.push_back(std::move(t));
    }
    // collect identical cores, accumulating numeric coefficients
    double constant = 0.0;
    std::map<Expr, double, ExprLess> buckets;
    std::map<Expr, std::vector<Expr>, ExprLess> cores;
    for (const auto& t : flat) {
        auto [c, core] = split_coeff(t);
        if (core.empty()) {
            constant += c;
            continue;
        }
        Expr key = core.size() == 1 ? core[0] : rebuild_term(1.0, core);
        auto it = buckets.find(key);
        if (it == buckets.end()) {
            buckets.emplace(key, c);
            cores.emplace(key, core);
        } else {
            it->second += c;
        }
    }
    std::vector<Expr> out;
    if (constant != 0.0) out.push_back(number(constant));
    for (const auto& [key, c] : buckets) {
        if (c == 0.0) continue;
        out.push_back(rebuild_term(c, cores.at(key)));
    }
    std::sort(out.begin(), out.end(), ExprLess{});
    return add(std::move(out));
}

Expr norm_mul(std::vector<Expr> factors) {
    std::vector<Expr> flat;
    double coeff = 1.0;
    for (auto& f : factors) {
        if (f->kind == Kind::Mul) {
            for (const auto& c : f->children) {
                if (c->kind == Kind::Number)
                    coeff *= c->number;
                else
                    flat.push_back(c);
            }
        } else if (f->kind == Kind::Number) {
            coeff *= f->number;
        } else {
            flat.push_back(std::move(f));
        }
    }
    if (coeff == 0.0) return number(0.0);
    std::sort(flat.begin(), flat.end(), ExprLess{});
    // distribute a pure numeric coefficient over a sum of integral terms,
    // so -1*(form) and the termwise-negated form coincide
    if (flat.size() == 1 && coeff != 1.0 && flat[0]->kind == Kind::Add) {
        bool all_form = true;
        for (const auto& t : flat[0]->children) all_form = all_form && is_form_term(t);
        if (all_form) {
            std::vector<Expr> ts;
            ts.reserve(flat[0]->children.size());
            for (const auto& t : flat[0]->children)
                ts.push_back(norm_mul({number(coeff), t}));
            return norm_add(std::move(ts));
        }
    }
    return rebuild_term(coeff, flat);
}

Expr norm_grad(const Expr& a);
Expr norm_div(const Expr& a);
Expr norm_transpose(const Expr& a);
Expr norm_trace(const Expr& a);
Expr norm_inner(Expr a, Expr b);
Expr norm_inner2(Expr a, Expr b);

Expr norm_pow(Expr base, Expr exp) {
    if (base->kind == Kind::Number && exp->kind == Kind::Number) {
        double v = std::pow(base->number, exp->number);
        if (std::isfinite(v)) return number(v);
    }
    // (a*b)^n distributes for integer exponents
    if (base->kind == Kind::Mul && exp->kind == Kind::Number &&
        exp->number == std::floor(exp->number)) {
        std::vector<Expr> fs;
        fs.reserve(base->children.size());
        for (const auto& f : base->children) fs.push_back(norm_pow(f, exp));
        return norm_mul(std::move(fs));
    }
    return pow_of(std::move(base), std::move(exp));
}

Expr norm_grad(const Expr& a) {
    if (is_zero(a)) return number(0.0);
    switch (a->kind) {
        case Kind::Add: {
            std::vector<Expr> ts;
            ts.reserve(a->children.size());
            for (const auto& t : a->children) ts.push_back(norm_grad(t));
            return norm_add(std::move(ts));
        }
        case Kind::Mul: {
            std::vector<Expr> uniform, varying;
            for (const auto& f : a->children)
                (is_uniform(f) ? uniform : varying).push_back(f);
            if (varying.empty()) return number(0.0);
            if (varying.size() == 1) {
                uniform.push_back(norm_grad(varying[0]));
                return norm_mul(std::move(uniform));
            }
            // scalar product rule
            for (const auto& f : varying)
                require(f->order == 0,
                        "grad: product of spatially varying tensor factors is not supported");
            std::vector<Expr> ts;
            for (size_t i = 0; i < varying.size(); ++i) {
                std::vector<Expr> fs = uniform;
                for (size_t j = 0; j < varying.size(); ++j)
                    if (j != i) fs.push_back(varying[j]);
                fs.push_back(norm_grad(varying[i]));
                ts.push_back(norm_mul(std::move(fs)));
            }
            return norm_add(std::move(ts));
        }
        case Kind::Pow: {
            const Expr& f = a->children[0];
            const Expr& g = a->children[1];
            require(is_uniform(g), "grad: exponent must not vary in space");
            if (is_uniform(f)) return number(0.0);
            // chain rule: grad f^g = g f^(g-1) grad f
            Expr fp = norm_pow(f, norm_add({g, number(-1.0)}));
            return norm_mul({g, fp, norm_grad(f)});
        }
        default: return grad(a);
    }
}

Expr norm_div(const Expr& a) {
    if (is_zero(a)) return number(0.0);
    switch (a->kind) {
        case Kind::Add: {
            std::vector<Expr> ts;
            ts.reserve(a->children.size());
            for (const auto& t : a->children) ts.push_back(norm_div(t));
            return norm_add(std::move(ts));
        }
        case Kind::Mul: {
            std::vector<Expr> uniform, varying;
            for (const auto& f : a->children)
                (is_uniform(f) ? uniform : varying).push_back(f);
            require(varying.size() <= 1,
                    "div: product of spatially varying factors is not supported");
            if (varying.empty()) return number(0.0);
            uniform.push_back(norm_div(varying[0]));
            return norm_mul(std::move(uniform));
        }
        default: return divergence(a);
    }
}

Expr norm_transpose(const Expr& a) {
    if (is_zero(a)) return number(0.0);
    switch (a->kind) {
        case Kind::Transpose: return a->children[0];
        case Kind::Identity: return identity_matrix();
        case Kind::Add: {
            std::vector<Expr> ts;
            ts.reserve(a->children.size());
            for (const auto& t : a->children) ts.push_back(norm_transpose(t));
            return norm_add(std::move(ts));
        }
        case Kind::Mul: {
            std::vector<Expr> scalars;
            Expr tens;
            for (const auto& f : a->children) {
                if (f->order == 0)
                    scalars.push_back(f);
                else
                    tens = f;
            }
            if (tens) {
                scalars.push_back(norm_transpose(tens));
                return norm_mul(std::move(scalars));
            }
            return transpose(a);
        }
        default: return transpose(a);
    }
}

Expr norm_trace(const Expr& a) {
    if (is_zero(a)) return number(0.0);
    switch (a->kind) {
        case Kind::Grad:
            // tr(grad v) is div v for a vector field
            return norm_div(a->children[0]);
        case Kind::Transpose: return norm_trace(a->children[0]);
        case Kind::Add: {
            std::vector<Expr> ts;
            ts.reserve(a->children.size());
            for (const auto& t : a->children) ts.push_back(norm_trace(t));
            return norm_add(std::move(ts));
        }
        case Kind::Mul: {
            std::vector<Expr> scalars;
            Expr tens;
            for (const auto& f : a->children) {
                if (f->order == 0)
                    scalars.push_back(f);
                else
                    tens = f;
            }
            if (tens) {
                scalars.push_back(norm_trace(tens));
                return norm_mul(std::move(scalars));
            }
            return trace(a);
        }
        default: return trace(a);
    }
}

// hoist scalar factors out of a bilinear operand
std::pair<std::vector<Expr>, Expr> hoist_scalars(const Expr& e) {
    if (e->kind != Kind::Mul) return {{}, e};
    std::vector<Expr> scalars;
    Expr tens;
    for (const auto& f : e->children) {
        if (f->order == 0)
            scalars.push_back(f);
        else
            tens = f;
    }
    if (!tens) return {{}, e};
    return {std::move(scalars), tens};
}

Expr norm_inner(Expr a, Expr b) {
    if (is_zero(a) || is_zero(b)) return number(0.0);
    auto [sa, ca] = hoist_scalars(a);
    auto [sb, cb] = hoist_scalars(b);
    if (!sa.empty() || !sb.empty()) {
        std::vector<Expr> fs = std::move(sa);
        fs.insert(fs.end(), sb.begin(), sb.end());
        fs.push_back(norm_inner(ca, cb));
        return norm_mul(std::move(fs));
    }
    if (a->kind == Kind::Identity && b->order >= 1) return b;
    if (b->kind == Kind::Identity && a->order >= 1) return a;
    if (a->kind == Kind::NormalVector && b->kind == Kind::NormalVector) return number(1.0);
    if (a->order == 1 && b->order == 1 && compare(a, b) > 0) std::swap(a, b);
    return inner(std::move(a), std::move(b));
}

Expr norm_inner2(Expr a, Expr b) {
    if (is_zero(a) || is_zero(b)) return number(0.0);
    auto [sa, ca] = hoist_scalars(a);
    auto [sb, cb] = hoist_scalars(b);
    if (!sa.empty() || !sb.empty()) {
        std::vector<Expr> fs = std::move(sa);
        fs.insert(fs.end(), sb.begin(), sb.end());
        fs.push_back(norm_inner2(ca, cb));
        return norm_mul(std::move(fs));
    }
    // A : I contracts the last two indices of A against each other
    if (b->kind == Kind::Identity) {
        if (a->kind == Kind::Grad) return norm_div(a->children[0]);
        if (a->order == 2) return norm_trace(a);
    }
    if (a->kind == Kind::Identity && b->order == 2) return norm_trace(b);
    if (a->order == 2 && b->order == 2 && compare(a, b) > 0) std::swap(a, b);
    return inner2(std::move(a), std::move(b));
}

Expr norm_tensor_product(Expr a, Expr b) {
    if (is_zero(a) || is_zero(b)) return number(0.0);
    auto [sa, ca] = hoist_scalars(a);
    auto [sb, cb] = hoist_scalars(b);
    if (!sa.empty() || !sb.empty()) {
        std::vector<Expr> fs = std::move(sa);
        fs.insert(fs.end(), sb.begin(), sb.end());
        fs.push_back(norm_tensor_product(ca, cb));
        return norm_mul(std::move(fs));
    }
    return tensor_product(std::move(a), std::move(b));
}

Expr norm_integral(const ExprNode& node, Expr integrand) {
    if (is_zero(integrand)) return number(0.0);
    // split a sum integrand into a sum of integrals
    if (integrand->kind == Kind::Add) {
        std::vector<Expr> ts;
        ts.reserve(integrand->children.size());
        for (const auto& t : integrand->children) ts.push_back(norm_integral(node, t));
        return norm_add(std::move(ts));
    }
    // hoist a pure numeric coefficient in front of the integral
    auto [c, core] = split_coeff(integrand);
    if (c != 1.0) {
        Expr inner_i = norm_integral(node, rebuild_term(1.0, core));
        return norm_mul({number(c), inner_i});
    }
    return with_children(node, {std::move(integrand)});
}

Expr norm(const Expr& e) {
    std::vector<Expr> ch;
    ch.reserve(e->children.size());
    for (const auto& c : e->children) ch.push_back(norm(c));
    switch (e->kind) {
        case Kind::Add: return norm_add(std::move(ch));
        case Kind::Mul: return norm_mul(std::move(ch));
        case Kind::Pow: return norm_pow(ch[0], ch[1]);
        case Kind::Grad: return norm_grad(ch[0]);
        case Kind::Div: return norm_div(ch[0]);
        case Kind::Transpose: return norm_transpose(ch[0]);
        case Kind::Trace: return norm_trace(ch[0]);
        case Kind::Det:
            if (ch[0]->kind == Kind::Identity) return number(1.0);
            return determinant(ch[0]);
        case Kind::Inverse:
            if (ch[0]->kind == Kind::Identity) return identity_matrix();
            if (ch[0]->kind == Kind::Inverse) return ch[0]->children[0];
            return inverse(ch[0]);
        case Kind::InverseTranspose:
            if (ch[0]->kind == Kind::Identity) return identity_matrix();
            return inverse_transpose(ch[0]);
        case Kind::TensorProduct: return norm_tensor_product(ch[0], ch[1]);
        case Kind::Inner: return norm_inner(ch[0], ch[1]);
        case Kind::Inner2: return norm_inner2(ch[0], ch[1]);
        case Kind::IntegralDx:
        case Kind::IntegralDsx: return norm_integral(*e, ch[0]);
        case Kind::PerturbJacobian:
            if (is_zero(ch[0])) return identity_matrix();
            return perturb_jacobian(e->pert, ch[0]);
        case Kind::PerturbJacobianInv:
            if (is_zero(ch[0])) return identity_matrix();
            return perturb_jacobian_inv(e->pert, ch[0]);
        case Kind::PerturbJacobianInvT:
            if (is_zero(ch[0])) return identity_matrix();
            return perturb_jacobian_inv_t(e->pert, ch[0]);
        case Kind::PerturbDet:
            if (is_zero(ch[0])) return number(1.0);
            return perturb_det(e->pert, ch[0]);
        case Kind::BoundaryFnRef:
            if (e->composed && is_zero(ch[0])) return boundary_ref(e->boundary);
            if (e->composed) return boundary_ref_composed(e->boundary, e->pert, ch[0]);
            return boundary_ref(e->boundary);
        default: return e;
    }
}

}  // namespace

Expr canonicalize(const Expr& e) {
    require(e != nullptr, "canonicalize: null expression");
    return norm(e);
}

bool is_form(const Expr& e) {
    if (e == nullptr) return false;
    if (is_zero(e)) return true;
    if (e->kind == Kind::Add) {
        for (const auto& t : e->children)
            if (!is_form_term(t)) return false;
        return true;
    }
    return is_form_term(e);
}

// --- Serialization --------------------------------------------------------

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ser(const Expr& e, std::ostringstream& out) {
    out << '(' << kind_name(e->kind);
    switch (e->kind) {
        case Kind::Number: out << ' ' << fmt_double(e->number); break;
        case Kind::ConstantRef: out << ' ' << e->constant->symbol; break;
        case Kind::CharFnRef: out << ' ' << e->charfn->symbol; break;
        case Kind::FieldRef: out << ' ' << e->field->ff_symbol; break;
        case Kind::BoundaryFnRef:
            out << ' ' << e->boundary->symbol;
            if (e->composed) out << " composed";
            break;
        case Kind::UnitVector: out << ' ' << "xyz"[e->axis]; break;
        case Kind::PerturbJacobian:
        case Kind::PerturbJacobianInv:
        case Kind::PerturbJacobianInvT:
        case Kind::PerturbDet: out << ' ' << e->pert->velocity->ff_symbol; break;
        case Kind::ExprRef: {
            out << ' ';
            switch (e->named->deco) {
                case ExprDeco::None: break;
                case ExprDeco::Directional: out << "d_"; break;
                case ExprDeco::Perturbed: out << "V_"; break;
                case ExprDeco::TimeDerivative: out << "dt_"; break;
            }
            out << e->named->symbol << " := ";
            ser(e->named->body, out);
            break;
        }
        case Kind::IntegralDx: out << ' ' << e->domain->mesh_symbol; break;
        case Kind::IntegralDsx:
            out << ' ' << e->domain->mesh_symbol << ' ' << e->label;
            break;
        default: break;
    }
    for (const auto& c : e->children) {
        out << ' ';
        ser(c, out);
    }
    out << ')';
}

}  // namespace

std::string serialize(const Expr& e) {
    require(e != nullptr, "serialize: null expression");
    std::ostringstream out;
    ser(e, out);
    return out.str();
}

}  // namespace wfc
