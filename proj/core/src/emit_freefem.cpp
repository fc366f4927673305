#include "wfc/emit_freefem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>

namespace wfc {

namespace {

char axis_letter(int i) { return "xyz"[i]; }

std::string ff_number(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// --- Component-expansion IR -------------------------------------------------

struct FFNode;
using FFp = std::shared_ptr<const FFNode>;

struct FFNode {
    enum class T { Num, Atom, Sum, Prod, Pow } t = T::Num;
    double num = 0.0;
    std::string text;  // Atom
    std::function<double(const NumericBinding&, const Vec&)> atom_eval;
    std::vector<FFp> kids;
    double exponent = 1.0;  // Pow
};

FFp ff_num(double v) {
    auto n = std::make_shared<FFNode>();
    n->t = FFNode::T::Num;
    n->num = v;
    return n;
}

bool ff_is_zero(const FFp& n) { return n->t == FFNode::T::Num && n->num == 0.0; }
bool ff_is_one(const FFp& n) { return n->t == FFNode::T::Num && n->num == 1.0; }

FFp ff_atom(std::string text, std::function<double(const NumericBinding&, const Vec&)> ev) {
    auto n = std::make_shared<FFNode>();
    n->t = FFNode::T::Atom;
    n->text = std::move(text);
    n->atom_eval = std::move(ev);
    return n;
}

FFp ff_sum(std::vector<FFp> terms) {
    std::vector<FFp> kept;
    for (auto& t : terms) {
        if (ff_is_zero(t)) continue;
        if (t->t == FFNode::T::Sum)
            kept.insert(kept.end(), t->kids.begin(), t->kids.end());
        else
            kept.push_back(std::move(t));
    }
    if (kept.empty()) return ff_num(0.0);
    if (kept.size() == 1) return kept[0];
    auto n = std::make_shared<FFNode>();
    n->t = FFNode::T::Sum;
    n->kids = std::move(kept);
    return n;
}

FFp ff_prod(std::vector<FFp> factors) {
    double c = 1.0;
    std::vector<FFp> kept;
    for (auto& f : factors) {
        if (ff_is_zero(f)) return ff_num(0.0);
        if (f->t == FFNode::T::Num) {
            c *= f->num;
        } else if (f->t == FFNode::T::Prod) {
            for (const auto& k : f->kids) {
                if (k->t == FFNode::T::Num)
                    c *= k->num;
                else
                    kept.push_back(k);
            }
        } else {
            kept.push_back(std::move(f));
        }
    }
    if (c == 0.0) return ff_num(0.0);
    if (kept.empty()) return ff_num(c);
    if (c == 1.0 && kept.size() == 1) return kept[0];
    auto n = std::make_shared<FFNode>();
    n->t = FFNode::T::Prod;
    if (c != 1.0) n->kids.push_back(ff_num(c));
    n->kids.insert(n->kids.end(), kept.begin(), kept.end());
    return n;
}

FFp ff_pow(FFp base, double e) {
    if (e == 1.0) return base;
    if (e == 0.0) return ff_num(1.0);
    if (base->t == FFNode::T::Num) return ff_num(std::pow(base->num, e));
    auto n = std::make_shared<FFNode>();
    n->t = FFNode::T::Pow;
    n->kids = {std::move(base)};
    n->exponent = e;
    return n;
}

double ff_eval(const FFp& n, const NumericBinding& b, const Vec& x) {
    switch (n->t) {
        case FFNode::T::Num: return n->num;
        case FFNode::T::Atom: return n->atom_eval(b, x);
        case FFNode::T::Sum: {
            double s = 0.0;
            for (const auto& k : n->kids) s += ff_eval(k, b, x);
            return s;
        }
        case FFNode::T::Prod: {
            double s = 1.0;
            for (const auto& k : n->kids) s *= ff_eval(k, b, x);
            return s;
        }
        case FFNode::T::Pow: return std::pow(ff_eval(n->kids[0], b, x), n->exponent);
    }
    return 0.0;
}

std::string ff_print(const FFp& n);

std::string ff_print_wrapped(const FFp& n) {
    if (n->t == FFNode::T::Sum || (n->t == FFNode::T::Num && n->num < 0.0))
        return "(" + ff_print(n) + ")";
    return ff_print(n);
}

std::string ff_print(const FFp& n) {
    switch (n->t) {
        case FFNode::T::Num: return ff_number(n->num);
        case FFNode::T::Atom: return n->text;
        case FFNode::T::Sum: {
            std::string out;
            for (size_t i = 0; i < n->kids.size(); ++i) {
                std::string term = ff_print(n->kids[i]);
                if (i == 0) {
                    out = term;
                } else if (term.rfind("-", 0) == 0) {
                    out += " - " + term.substr(1);
                } else {
                    out += " + " + term;
                }
            }
            return out;
        }
        case FFNode::T::Prod: {
            double c = 1.0;
            std::vector<std::string> num, den;
            for (const auto& k : n->kids) {
                if (k->t == FFNode::T::Num) {
                    c *= k->num;
                } else if (k->t == FFNode::T::Pow && k->exponent < 0.0) {
                    den.push_back(ff_print_wrapped(ff_pow(k->kids[0], -k->exponent)));
                } else {
                    num.push_back(ff_print_wrapped(k));
                }
            }
            std::string out;
            bool neg = c < 0.0;
            double mag = std::abs(c);
            if (mag != 1.0 || num.empty()) out = ff_number(mag);
            for (const auto& f : num) {
                if (!out.empty()) out += "*";
                out += f;
            }
            for (const auto& f : den) out += "/" + f;
            return neg ? "-" + out : out;
        }
        case FFNode::T::Pow: {
            std::string base = ff_print_wrapped(n->kids[0]);
            if (n->kids[0]->t == FFNode::T::Prod || n->kids[0]->t == FFNode::T::Pow)
                base = "(" + ff_print(n->kids[0]) + ")";
            return base + "^" + ff_number(n->exponent);
        }
    }
    return "";
}

// --- Expansion ---------------------------------------------------------------

using Index = std::vector<int>;

Index cat(const Index& a, const Index& b) {
    Index r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

struct Expander {
    const EmissionContext& ctx;

    std::string comp_name(const FieldDecl& f, const Index& idx) const {
        if (f.rank == 0) return f.ff_symbol;
        return f.ff_symbol + axis_letter(idx.at(0));
    }

    FFp field_atom(const FieldPtr& f, const Index& idx) const {
        std::string name = comp_name(*f, idx);
        int comp = f->rank == 1 ? idx.at(0) : -1;
        auto decl = f;
        return ff_atom(name, [decl, comp](const NumericBinding& b, const Vec& x) {
            auto it = b.fields.find(decl->ff_symbol);
            require(it != b.fields.end(), "ff eval: unbound field " + decl->ff_symbol);
            TensorValue v = it->second.value(x);
            return comp < 0 ? v.scalar_value() : v.at({comp});
        });
    }

    FFp field_deriv_atom(const FieldPtr& f, const Index& comp_idx, int axis) const {
        std::string name = std::string("d") + axis_letter(axis) + "(" +
                           comp_name(*f, comp_idx) + ")";
        int comp = f->rank == 1 ? comp_idx.at(0) : -1;
        auto decl = f;
        return ff_atom(name, [decl, comp, axis](const NumericBinding& b, const Vec& x) {
            auto it = b.fields.find(decl->ff_symbol);
            require(it != b.fields.end(), "ff eval: unbound field " + decl->ff_symbol);
            TensorValue g = it->second.gradient(x);
            return comp < 0 ? g.at({axis}) : g.at({comp, axis});
        });
    }

    FFp coordinate_atom(const BoundaryFnPtr& g, const Index& idx) const {
        int comp = g->rank == 1 ? idx.at(0) : 0;
        require(comp < static_cast<int>(g->ff_components.size()),
                "ff: coordinate data " + g->symbol + " has no component " +
                    std::to_string(comp));
        auto decl = g;
        return ff_atom("(" + g->ff_components[static_cast<size_t>(comp)] + ")",
                       [decl, comp](const NumericBinding& b, const Vec& x) {
                           auto it = b.coordinate_fns.find(decl->symbol);
                           require(it != b.coordinate_fns.end(),
                                   "ff eval: unbound coordinate data " + decl->symbol);
                           TensorValue v = it->second.value(x);
                           return decl->rank == 0 ? v.scalar_value() : v.at({comp});
                       });
    }

    FFp coordinate_deriv_atom(const BoundaryFnPtr& g, const Index& comp_idx, int axis) const {
        int comp = g->rank == 1 ? comp_idx.at(0) : 0;
        int flat = comp * ctx.dim + axis;
        require(flat < static_cast<int>(g->ff_grad_components.size()),
                "ff: coordinate data " + g->symbol + " has no gradient text");
        auto decl = g;
        return ff_atom("(" + g->ff_grad_components[static_cast<size_t>(flat)] + ")",
                       [decl, comp, axis](const NumericBinding& b, const Vec& x) {
                           auto it = b.coordinate_fns.find(decl->symbol);
                           require(it != b.coordinate_fns.end(),
                                   "ff eval: unbound coordinate data " + decl->symbol);
                           TensorValue gr = it->second.gradient(x);
                           return decl->rank == 0 ? gr.at({axis}) : gr.at({comp, axis});
                       });
    }

    FFp grad_comp(const Expr& operand, const Index& idx) const {
        // the last index of grad A is the derivative axis
        Index comp_idx(idx.begin(), idx.end() - 1);
        int axis = idx.back();
        switch (operand->kind) {
            case Kind::FieldRef: return field_deriv_atom(operand->field, comp_idx, axis);
            case Kind::BoundaryFnRef:
                require(!operand->composed,
                        "ff: perturbed expressions are not representable in the script "
                        "dialect");
                return coordinate_deriv_atom(operand->boundary, comp_idx, axis);
            case Kind::ExprRef: return comp(grad_of_body(operand), idx);
            default:
                throw Error(std::string("ff: gradient of unsupported operand ") +
                            kind_name(operand->kind));
        }
    }

    static Expr grad_of_body(const Expr& ref) { return canonicalize(grad(ref->named->body)); }

    FFp comp(const Expr& e, const Index& idx) const {
        require(static_cast<int>(idx.size()) == e->order, "ff: index arity mismatch");
        switch (e->kind) {
            case Kind::Number: return ff_num(e->number);
            case Kind::ConstantRef: {
                auto decl = e->constant;
                return ff_atom(decl->ff_symbol, [decl](const NumericBinding& b, const Vec&) {
                    return b.scalar_of(*decl);
                });
            }
            case Kind::CharFnRef: {
                auto decl = e->charfn;
                return ff_atom(decl->ff_symbol, [decl](const NumericBinding& b, const Vec&) {
                    auto it = b.charfns.find(decl->symbol);
                    return it != b.charfns.end() ? it->second : decl->value_inside;
                });
            }
            case Kind::FieldRef: return field_atom(e->field, idx);
            case Kind::BoundaryFnRef:
                require(!e->composed,
                        "ff: perturbed expressions are not representable in the script "
                        "dialect");
                return coordinate_atom(e->boundary, idx);
            case Kind::NormalVector: {
                int i = idx.at(0);
                require(i < ctx.dim, "ff: normal component exceeds ambient dimension");
                return ff_atom(std::string("N.") + axis_letter(i),
                               [i](const NumericBinding& b, const Vec&) {
                                   require(b.normal.has_value(),
                                           "ff eval: normal outside boundary quadrature");
                                   return b.normal->at({i});
                               });
            }
            case Kind::Identity: return ff_num(idx.at(0) == idx.at(1) ? 1.0 : 0.0);
            case Kind::UnitVector:
                require(e->axis < ctx.dim,
                        std::string("ff: unit vector e_") + axis_letter(e->axis) +
                            " is not available in " + std::to_string(ctx.dim) + "d");
                return ff_num(idx.at(0) == e->axis ? 1.0 : 0.0);
            case Kind::PerturbJacobian:
            case Kind::PerturbJacobianInv:
            case Kind::PerturbJacobianInvT:
            case Kind::PerturbDet:
                throw Error("ff: perturbed expressions are not representable in the script "
                            "dialect");
            case Kind::ExprRef: return comp(e->named->body, idx);
            case Kind::Add: {
                std::vector<FFp> ts;
                ts.reserve(e->children.size());
                for (const auto& c : e->children) ts.push_back(comp(c, idx));
                return ff_sum(std::move(ts));
            }
            case Kind::Mul: {
                std::vector<FFp> fs;
                for (const auto& c : e->children)
                    fs.push_back(comp(c, c->order == 0 ? Index{} : idx));
                return ff_prod(std::move(fs));
            }
            case Kind::Pow: {
                const Expr& b = e->children[0];
                const Expr& x = e->children[1];
                require(x->kind == Kind::Number,
                        "ff: only numeric exponents are representable");
                return ff_pow(comp(b, {}), x->number);
            }
            case Kind::TensorProduct: {
                const Expr& a = e->children[0];
                const Expr& b = e->children[1];
                Index ia(idx.begin(), idx.begin() + a->order);
                Index ib(idx.begin() + a->order, idx.end());
                return ff_prod({comp(a, ia), comp(b, ib)});
            }
            case Kind::Inner: {
                const Expr& a = e->children[0];
                const Expr& b = e->children[1];
                Index ia(idx.begin(), idx.begin() + (a->order - 1));
                Index ib(idx.begin() + (a->order - 1), idx.end());
                std::vector<FFp> ts;
                for (int k = 0; k < ctx.dim; ++k)
                    ts.push_back(ff_prod({comp(a, cat(ia, {k})), comp(b, cat({k}, ib))}));
                return ff_sum(std::move(ts));
            }
            case Kind::Inner2: {
                const Expr& a = e->children[0];
                const Expr& b = e->children[1];
                Index ia(idx.begin(), idx.begin() + (a->order - 2));
                Index ib(idx.begin() + (a->order - 2), idx.end());
                std::vector<FFp> ts;
                for (int m = 0; m < ctx.dim; ++m)
                    for (int l = 0; l < ctx.dim; ++l)
                        ts.push_back(ff_prod(
                            {comp(a, cat(ia, {m, l})), comp(b, cat({l, m}, ib))}));
                return ff_sum(std::move(ts));
            }
            case Kind::Grad: return grad_comp(e->children[0], idx);
            case Kind::Div: {
                std::vector<FFp> ts;
                for (int i = 0; i < ctx.dim; ++i)
                    ts.push_back(comp(grad(e->children[0]), cat(idx, {i, i})));
                return ff_sum(std::move(ts));
            }
            case Kind::Transpose:
                return comp(e->children[0], {idx.at(1), idx.at(0)});
            case Kind::Trace: {
                std::vector<FFp> ts;
                for (int i = 0; i < ctx.dim; ++i) ts.push_back(comp(e->children[0], {i, i}));
                return ff_sum(std::move(ts));
            }
            case Kind::Det: return det_comp(e->children[0]);
            case Kind::Inverse: return inverse_comp(e->children[0], idx.at(0), idx.at(1));
            case Kind::InverseTranspose:
                return inverse_comp(e->children[0], idx.at(1), idx.at(0));
            case Kind::IntegralDx:
            case Kind::IntegralDsx:
                throw Error("ff: integrals are expanded at the varf level");
        }
        throw Error("ff: unknown kind");
    }

    FFp det_comp(const Expr& a) const {
        auto c = [&](int i, int j) { return comp(a, {i, j}); };
        if (ctx.dim == 2)
            return ff_sum({ff_prod({c(0, 0), c(1, 1)}),
                           ff_prod({ff_num(-1.0), c(0, 1), c(1, 0)})});
        std::vector<FFp> ts;
        const int perm[6][4] = {{0, 1, 2, 1},  {1, 2, 0, 1},  {2, 0, 1, 1},
                                {0, 2, 1, -1}, {2, 1, 0, -1}, {1, 0, 2, -1}};
        for (const auto& p : perm)
            ts.push_back(ff_prod({ff_num(static_cast<double>(p[3])), c(0, p[0]), c(1, p[1]),
                                  c(2, p[2])}));
        return ff_sum(std::move(ts));
    }

    FFp inverse_comp(const Expr& a, int i, int j) const {
        require(ctx.dim == 2, "ff: matrix inversion is only expanded in 2d");
        auto c = [&](int r, int s) { return comp(a, {r, s}); };
        FFp det = det_comp(a);
        // adjugate over determinant
        FFp adj;
        if (i == 0 && j == 0) adj = c(1, 1);
        if (i == 0 && j == 1) adj = ff_prod({ff_num(-1.0), c(0, 1)});
        if (i == 1 && j == 0) adj = ff_prod({ff_num(-1.0), c(1, 0)});
        if (i == 1 && j == 1) adj = c(0, 0);
        return ff_prod({adj, ff_pow(det, -1.0)});
    }
};

FFp expand_scalar(const Expr& e, const EmissionContext& ctx) {
    require(e != nullptr, "to_ff: null expression");
    Expr c = canonicalize(e);
    require(c->order == 0, "to_ff: scalar-valued expression required");
    Expander ex{ctx};
    return ex.comp(c, {});
}

}  // namespace

std::string to_ff(const Expr& e, const EmissionContext& ctx) {
    return ff_print(expand_scalar(e, ctx));
}

double eval_ff_scalar(const Expr& e, const EmissionContext& ctx, const NumericBinding& b,
                      const Vec& x) {
    return ff_eval(expand_scalar(e, ctx), b, x);
}

// --- Forms and varfs ----------------------------------------------------------

namespace {

struct FormTerm {
    double coeff = 1.0;
    Expr integral;
};

void collect_form_terms(const Expr& form, double mult, std::vector<FormTerm>& out) {
    if (is_zero(form)) return;
    switch (form->kind) {
        case Kind::Add:
            for (const auto& t : form->children) collect_form_terms(t, mult, out);
            return;
        case Kind::Mul: {
            double c = mult;
            Expr rest;
            for (const auto& k : form->children) {
                if (k->kind == Kind::Number)
                    c *= k->number;
                else {
                    require(!rest, "ff: not a form term");
                    rest = k;
                }
            }
            require(rest != nullptr, "ff: not a form term");
            collect_form_terms(rest, c, out);
            return;
        }
        case Kind::ExprRef: collect_form_terms(form->named->body, mult, out); return;
        case Kind::IntegralDx:
        case Kind::IntegralDsx: out.push_back({mult, form}); return;
        default: throw Error("ff: expression is not a form");
    }
}

std::string integral_text(const FormTerm& t, const EmissionContext& ctx) {
    const Expr& node = t.integral;
    Expr integrand = node->children[0];
    double mag = std::abs(t.coeff);
    if (mag != 1.0) integrand = canonicalize(mul({number(mag), integrand}));
    std::string kw, args = node->domain->mesh_symbol;
    if (node->kind == Kind::IntegralDx) {
        kw = ctx.dim == 3 ? "int3d" : "int2d";
    } else {
        kw = ctx.dim == 3 ? "int2d" : "int1d";
        const auto& labels = node->domain->boundary_labels;
        require(std::find(labels.begin(), labels.end(), node->label) != labels.end(),
                "ff: unknown boundary label " + std::to_string(node->label) +
                    " on domain " + node->domain->mesh_symbol);
        args += ", " + std::to_string(node->label);
    }
    return kw + "(" + args + ")( " + to_ff(integrand, ctx) + " )";
}

std::string form_text(const Expr& form, const EmissionContext& ctx,
                      const std::string& indent) {
    std::vector<FormTerm> terms;
    collect_form_terms(canonicalize(form), 1.0, terms);
    std::string out;
    for (size_t i = 0; i < terms.size(); ++i) {
        std::string txt = integral_text(terms[i], ctx);
        if (i == 0) {
            out = (terms[i].coeff < 0.0 ? "- " : "") + txt;
        } else {
            out += "\n" + indent + (terms[i].coeff < 0.0 ? "- " : "+ ") + txt;
        }
    }
    if (terms.empty()) out = "0";
    return out;
}

std::vector<std::string> component_names(const std::vector<FieldPtr>& fields, int dim) {
    std::vector<std::string> out;
    for (const auto& f : fields) {
        if (f->rank == 0) {
            out.push_back(f->ff_symbol);
        } else {
            for (int i = 0; i < dim; ++i)
                out.push_back(f->ff_symbol + axis_letter(i));
        }
    }
    return out;
}

std::string joined(const std::vector<std::string>& v, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

std::string formal_list(const std::vector<FieldPtr>& fields, int dim) {
    auto names = component_names(fields, dim);
    if (names.size() == 1) return names[0];
    return "[" + joined(names, ", ") + "]";
}

std::string space_list(const std::vector<FieldPtr>& fields, int dim) {
    std::vector<std::string> out;
    for (const auto& f : fields) {
        int n = f->rank == 0 ? 1 : dim;
        for (int i = 0; i < n; ++i) out.push_back(f->fe_space);
    }
    if (out.size() == 1) return out[0];
    return "[" + joined(out, ", ") + "]";
}

/// on() clauses for the given formal unknowns; data from the paired source
/// fields (null source or derived unknowns mean homogeneous values).
std::string on_clauses(const std::vector<FieldPtr>& formals,
                       const std::vector<FieldPtr>& data_sources,
                       const EmissionContext& ctx, const std::string& indent) {
    std::string out;
    Expander ex{ctx};
    for (size_t k = 0; k < formals.size(); ++k) {
        const FieldPtr& f = formals[k];
        if (f->bc_labels.empty()) continue;
        std::vector<std::string> labels;
        for (int l : f->bc_labels) labels.push_back(std::to_string(l));
        std::vector<std::string> assigns;
        const Expr bc =
            (k < data_sources.size() && data_sources[k]) ? data_sources[k]->bc_data : nullptr;
        int ncomp = f->rank == 0 ? 1 : ctx.dim;
        for (int i = 0; i < ncomp; ++i) {
            std::string name =
                f->rank == 0 ? f->ff_symbol : f->ff_symbol + axis_letter(i);
            std::string value = "0";
            if (bc && !is_zero(bc))
                value = ff_print(ex.comp(canonicalize(bc), f->rank == 0 ? Index{} : Index{i}));
            assigns.push_back(name + " = " + value);
        }
        out += "\n" + indent + "+ on(" + joined(labels, ", ") + ", " + joined(assigns, ", ") +
               ")";
    }
    return out;
}

}  // namespace

std::string emit_varf(const DerivedSystem& sys, const EmissionContext& ctx) {
    const char* name = sys.kind == SystemKind::Newton ? "vNewton" : "vAdjoint";
    std::vector<FieldPtr> tests;
    std::vector<Expr> parts;
    for (const auto& row : sys.rows) {
        tests.push_back(row.test);
        parts.push_back(row.lhs);
    }
    Expr total = canonicalize(add(std::move(parts)));
    std::ostringstream out;
    out << "varf " << name << "(" << formal_list(sys.unknowns, ctx.dim) << ", "
        << formal_list(tests, ctx.dim) << ") =\n";
    out << "    " << form_text(total, ctx, "    ");
    out << on_clauses(sys.unknowns, {}, ctx, "    ");
    out << ";\n";
    return out.str();
}

std::string emit_residual_varf(const LagrangianDef& L, const EmissionContext& ctx,
                               bool trials_as_formals) {
    std::vector<FieldPtr> formals;
    std::vector<FieldPtr> data;
    if (trials_as_formals) {
        formals = L.trials;
        data = L.trials;
    } else {
        for (const auto& u : L.trials) formals.push_back(make_update_field(u));
    }
    std::vector<Expr> parts = L.residuals;
    Expr total = canonicalize(add(std::move(parts)));
    std::ostringstream out;
    out << "varf vResidual(" << formal_list(formals, ctx.dim) << ", "
        << formal_list(L.tests, ctx.dim) << ") =\n";
    out << "    " << form_text(total, ctx, "    ");
    out << on_clauses(formals, data, ctx, "    ");
    out << ";\n";
    return out.str();
}

std::string emit_objective_fn(const LagrangianDef& L, const EmissionContext& ctx) {
    std::ostringstream out;
    out << "func real evalObjective() {\n";
    if (L.objective && !is_zero(L.objective))
        out << "    return " << form_text(L.objective, ctx, "        ") << ";\n";
    else
        out << "    return 0.0;\n";
    out << "}\n";
    return out.str();
}

std::string emit_shape_varf(const ShapeDerivation& sd, const EmissionContext& ctx) {
    // unknown slot is a dummy; the velocity field occupies the test slot
    auto g = std::make_shared<FieldDecl>(*sd.perturbation->velocity);
    g->ff_symbol = "G";
    g->symbol = "G";
    std::ostringstream out;
    out << "varf vShape(" << formal_list({g}, ctx.dim) << ", "
        << formal_list({sd.perturbation->velocity}, ctx.dim) << ") =\n";
    out << "    " << form_text(sd.shape_derivative, ctx, "    ");
    out << ";\n";
    return out.str();
}

// --- Drivers -------------------------------------------------------------------

namespace {

std::string constants_block(const LagrangianDef& L) {
    std::string out;
    for (const auto& c : L.constants)
        out += "real " + c->ff_symbol + " = " + ff_number(c->value) + ";\n";
    return out;
}

std::string state_declarations(const LagrangianDef& L, const EmissionContext& ctx,
                               bool with_adjoint) {
    std::ostringstream out;
    out << "fespace Xh(" << L.trials[0]->domain->mesh_symbol << ", "
        << space_list(L.trials, ctx.dim) << ");\n";
    out << "Xh " << formal_list(L.trials, ctx.dim) << ";\n";
    std::vector<FieldPtr> updates;
    for (const auto& u : L.trials) updates.push_back(make_update_field(u));
    out << "Xh " << formal_list(updates, ctx.dim) << ";\n";
    if (with_adjoint) {
        std::vector<FieldPtr> adjoints;
        for (const auto& u : L.trials) adjoints.push_back(make_adjoint_field(u));
        out << "Xh " << formal_list(adjoints, ctx.dim) << ";\n";
    }
    return out.str();
}

std::string bc_interpolation(const LagrangianDef& L, const EmissionContext& ctx) {
    // start from a state that satisfies the Dirichlet data
    Expander ex{ctx};
    std::vector<std::string> values;
    bool any = false;
    for (const auto& u : L.trials) {
        int n = u->rank == 0 ? 1 : ctx.dim;
        for (int i = 0; i < n; ++i) {
            if (u->bc_data && !is_zero(u->bc_data)) {
                any = true;
                values.push_back(
                    ff_print(ex.comp(canonicalize(u->bc_data), u->rank == 0 ? Index{} : Index{i})));
            } else {
                values.push_back("0");
            }
        }
    }
    if (!any) return "";
    std::string lhs = formal_list(L.trials, ctx.dim);
    if (values.size() == 1) return lhs + " = " + values[0] + ";\n";
    return lhs + " = [" + joined(values, ", ") + "];\n";
}

std::string newton_loop(const LagrangianDef& L, const EmissionContext& ctx,
                        const std::string& indent) {
    std::string s0 = component_names(L.trials, ctx.dim)[0];
    std::ostringstream out;
    out << indent << "real res0 = -1;\n";
    out << indent << "for (int nit = 0; nit < newtonMaxIt; nit++) {\n";
    out << indent << "    real[int] rhs = vResidual(0, Xh);\n";
    out << indent << "    real res = sqrt(rhs'*rhs);\n";
    out << indent << "    if (res0 < 0) res0 = max(res, 1e-30);\n";
    out << indent << "    if (res <= newtonTol*res0) break;\n";
    out << indent << "    matrix J = vNewton(Xh, Xh, solver=sparsesolver);\n";
    out << indent << "    rhs = -rhs;\n";
    out << indent << "    real[int] du = J^-1*rhs;\n";
    out << indent << "    " << s0 << "[] += du;\n";
    out << indent << "}\n";
    return out.str();
}

std::string vtu_fields(const LagrangianDef& L, const EmissionContext& ctx) {
    std::vector<std::string> groups, names;
    for (const auto& u : L.trials) {
        if (u->rank == 0) {
            groups.push_back(u->ff_symbol);
        } else {
            groups.push_back("[" + joined(component_names({u}, ctx.dim), ", ") + "]");
        }
        names.push_back(u->ff_symbol);
    }
    return joined(groups, ", ") + ", dataname=\"" + joined(names, " ") + "\"";
}

}  // namespace

std::string emit_sim_driver(const LagrangianDef& L, const EmissionContext& ctx,
                            Classification cls) {
    const bool nonlinear = cls == Classification::Nonlinear;
    std::ostringstream out;
    out << "// run_" << L.name << ".edp\n";
    out << "// Simulation driver for the " << L.title << " problem.\n";
    out << "load \"iovtk\"\n";
    out << "include \"" << ctx.mesh_file << "\"\n\n";
    out << constants_block(L);
    for (const auto& c : L.charfns)
        out << "real " << c->ff_symbol << " = " << ff_number(c->value_inside) << ";\n";
    out << "\n";
    out << state_declarations(L, ctx, false);
    out << "\n";
    out << "include \"" << L.name << "Residual.edp\"\n";
    if (nonlinear) out << "include \"" << L.name << "Newton.edp\"\n";
    out << "\n";
    out << bc_interpolation(L, ctx);
    if (nonlinear) {
        out << "real newtonTol = 1e-10;\n";
        out << "int newtonMaxIt = 30;\n";
        out << newton_loop(L, ctx, "");
    } else {
        std::string s0 = component_names(L.trials, ctx.dim)[0];
        out << "matrix A = vResidual(Xh, Xh, solver=sparsesolver);\n";
        out << "real[int] rhs = vResidual(0, Xh);\n";
        out << "rhs = -rhs;\n";
        out << s0 << "[] = A^-1*rhs;\n";
    }
    out << "\n";
    out << "savevtk(\"" << L.name << ".vtu\", " << L.trials[0]->domain->mesh_symbol << ", "
        << vtu_fields(L, ctx) << ");\n";
    return out.str();
}

std::string emit_opt_driver(const LagrangianDef& L, const EmissionContext& ctx,
                            const OptimizationParams& p, Classification cls) {
    const bool nonlinear = cls == Classification::Nonlinear;
    const std::string mesh = L.trials[0]->domain->mesh_symbol;
    const int d = ctx.dim;
    std::ostringstream out;
    out << "// optimize_" << L.name << ".edp\n";
    out << "// Level-set mesh-evolution shape optimization driver for the " << L.title
        << " problem.\n";
    out << "// Fixed template: the advection, mshdist and mmg tools must be on PATH.\n";
    out << "load \"iovtk\"\n";
    out << "include \"" << ctx.mesh_file << "\"\n\n";
    out << constants_block(L);
    out << "real hmin = " << ff_number(p.hmin) << ";\n";
    out << "real hmax = " << ff_number(p.hmax) << ";\n";
    out << "real reg = " << ff_number(p.regularization) << ";\n";
    out << "real v0 = " << ff_number(p.v0) << ";\n";
    out << "int maxit = " << p.maxit << ";\n";
    out << "bool showWeakMaterial = " << (p.show_weak_material ? "true" : "false") << ";\n";
    out << "\n";
    out << "fespace Ph(" << mesh << ", P1);\n";
    Expander ex{ctx};
    require(p.phi0 != nullptr, "emit_opt_driver: initial level set required");
    out << "Ph phi = " << ff_print(ex.comp(canonicalize(p.phi0), {})) << ";\n";
    for (const auto& c : L.charfns) out << "Ph " << c->ff_symbol << ";\n";
    out << "\n";
    out << state_declarations(L, ctx, true);
    std::vector<std::string> vspaces(static_cast<size_t>(d), "P1");
    out << "fespace Vh(" << mesh << ", [" << joined(vspaces, ", ") << "]);\n";
    std::vector<std::string> gcomps, wcomps;
    for (int i = 0; i < d; ++i) {
        gcomps.push_back(std::string("G") + axis_letter(i));
        wcomps.push_back(std::string("W") + axis_letter(i));
    }
    out << "Vh [" << joined(gcomps, ", ") << "];\n";
    out << "\n";
    out << "include \"" << L.name << "Objective.edp\"\n";
    out << "include \"" << L.name << "Residual.edp\"\n";
    out << "include \"" << L.name << "Newton.edp\"\n";
    out << "include \"" << L.name << "Adjoint.edp\"\n";
    out << "include \"" << L.name << "Shape.edp\"\n";
    out << "\n";
    out << "// reads a scalar medit solution file back onto a P1 function\n";
    out << "macro readScalarSol(fname, target) {\n";
    out << "    ifstream fin(fname);\n";
    out << "    string tok;\n";
    out << "    int nv = 0;\n";
    out << "    while (tok != \"SolAtVertices\") fin >> tok;\n";
    out << "    fin >> nv >> tok >> tok;\n";
    out << "    for (int i = 0; i < nv; i++) fin >> target[][i];\n";
    out << "} //\n\n";
    out << "real newtonTol = 1e-10;\n";
    out << "int newtonMaxIt = " << (nonlinear ? 30 : 1) << ";\n";
    out << "\n";
    out << "ofstream hist(\"objective" << L.name << ".txt\");\n";
    out << "hist << \"iteration,objective\" << endl;\n";
    out << "\n";
    out << "for (int iter = 0; iter < maxit; iter++) {\n";
    for (const auto& c : L.charfns)
        out << "    " << c->ff_symbol << " = " << ff_number(c->value_inside)
            << "*(phi < 0) + " << ff_number(c->value_outside) << "*(phi >= 0);\n";
    out << "\n";
    out << "    // state problem\n";
    {
        std::string init = bc_interpolation(L, ctx);
        if (!init.empty()) out << "    " << init;
    }
    out << newton_loop(L, ctx, "    ");
    out << "\n";
    out << "    // adjoint problem\n";
    {
        std::vector<FieldPtr> adjoints;
        for (const auto& u : L.trials) adjoints.push_back(make_adjoint_field(u));
        std::string a0 = component_names(adjoints, d)[0];
        out << "    matrix Aa = vAdjoint(Xh, Xh, solver=sparsesolver);\n";
        out << "    real[int] ra = vAdjoint(0, Xh);\n";
        out << "    ra = -ra;\n";
        out << "    " << a0 << "[] = Aa^-1*ra;\n";
    }
    out << "\n";
    out << "    // objective history\n";
    out << "    real Jval = evalObjective();\n";
    out << "    hist << iter << \",\" << Jval << endl;\n";
    out << "\n";
    out << "    // regularized identification of the shape gradient; the descent\n";
    out << "    // velocity solves reg^2 (grad G, grad W) + (G, W) = -DJ(W)\n";
    out << "    varf vGradId([" << joined(gcomps, ", ") << "], [" << joined(wcomps, ", ")
        << "]) =\n";
    out << "        int" << (d == 3 ? "3d" : "2d") << "(" << mesh << ")( reg^2*(";
    {
        std::vector<std::string> terms;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                terms.push_back("d" + std::string(1, axis_letter(j)) + "(" + gcomps[static_cast<size_t>(i)] +
                                ")*d" + std::string(1, axis_letter(j)) + "(" + wcomps[static_cast<size_t>(i)] + ")");
        out << joined(terms, " + ");
    }
    out << ")\n            + ";
    {
        std::vector<std::string> terms;
        for (int i = 0; i < d; ++i)
            terms.push_back(gcomps[static_cast<size_t>(i)] + "*" + wcomps[static_cast<size_t>(i)]);
        out << joined(terms, " + ");
    }
    out << " )";
    for (int bl : p.boundary_labels) {
        // zero normal component on these boundaries (penalty formulation)
        std::vector<std::string> gn, wn;
        for (int i = 0; i < d; ++i) {
            gn.push_back(gcomps[static_cast<size_t>(i)] + "*N." + axis_letter(i));
            wn.push_back(wcomps[static_cast<size_t>(i)] + "*N." + axis_letter(i));
        }
        out << "\n        + int" << (d == 3 ? "2d" : "1d") << "(" << mesh << ", " << bl
            << ")( tgv*(" << joined(gn, " + ") << ")*(" << joined(wn, " + ") << ") )";
    }
    if (!p.fixed_labels.empty()) {
        std::vector<std::string> labels, assigns;
        for (int l : p.fixed_labels) labels.push_back(std::to_string(l));
        for (int i = 0; i < d; ++i) assigns.push_back(gcomps[static_cast<size_t>(i)] + " = 0");
        out << "\n        + on(" << joined(labels, ", ") << ", " << joined(assigns, ", ")
            << ")";
    }
    out << ";\n";
    out << "    matrix Ag = vGradId(Vh, Vh, solver=sparsesolver);\n";
    out << "    real[int] rg = vShape(0, Vh);\n";
    out << "    rg = -rg;\n";
    out << "    " << gcomps[0] << "[] = Ag^-1*rg;\n";
    out << "\n";
    out << "    // advect the level set with a step scaled by v0, redistance, remesh\n";
    out << "    real gmax = max(" << gcomps[0] << "[].linfty, 1e-12);\n";
    out << "    real dt = v0*hmin/gmax;\n";
    out << "    savemesh(" << mesh << ", \"evolve.mesh\");\n";
    out << "    savesol(\"evolve.phi.sol\", " << mesh << ", phi);\n";
    out << "    savesol(\"evolve.vel.sol\", " << mesh << ", [" << joined(gcomps, ", ")
        << "]);\n";
    out << "    exec(\"advection evolve.mesh -c evolve.phi.sol -s evolve.vel.sol -dt \" + dt\n";
    out << "         + \" -o evolve.phi.sol\");\n";
    out << "    readScalarSol(\"evolve.phi.sol\", phi)\n";
    out << "    savesol(\"evolve.phi.sol\", " << mesh << ", phi);\n";
    out << "    exec(\"mshdist evolve.mesh -sol evolve.phi.sol -dom -fmm\");\n";
    out << "    readScalarSol(\"evolve.phi.sol\", phi)\n";
    out << "    exec(\"mmg" << (d == 3 ? "3d" : "2d") << "_O3 evolve.mesh -sol evolve.phi.sol"
        << " -ls -hmin \" + hmin + \" -hmax \" + hmax + \" -out evolve.mesh\");\n";
    out << "    " << mesh << " = readmesh(\"evolve.mesh\");\n";
    out << "    phi = phi;\n";
    out << "\n";
    out << "    // results for this iteration\n";
    out << "    if (showWeakMaterial) {\n";
    out << "        savevtk(\"" << L.name << "_\" + iter + \".vtu\", " << mesh << ", "
        << vtu_fields(L, ctx) << ");\n";
    out << "    } else {\n";
    out << "        mesh" << (d == 3 ? "3 Tht" : " Tht") << " = trunc(" << mesh
        << ", phi < 0);\n";
    out << "        savevtk(\"" << L.name << "_\" + iter + \".vtu\", Tht, "
        << vtu_fields(L, ctx) << ");\n";
    out << "    }\n";
    out << "}\n";
    return out.str();
}

}  // namespace wfc
