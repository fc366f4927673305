#include "wfc/emit_latex.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace wfc {

namespace {

bool rational_of(double v, long long& p, long long& q) {
    if (!std::isfinite(v)) return false;
    for (long long den : {1, 2, 3, 4, 5, 6, 8, 10, 12, 16, 20, 25, 32, 50, 64, 100, 1000}) {
        double num = v * static_cast<double>(den);
        if (std::abs(num) > 1e15) continue;
        if (std::abs(num - std::llround(num)) < 1e-9) {
            p = std::llround(num);
            q = den;
            return true;
        }
    }
    return false;
}

std::string num_latex(double v) {
    long long p, q;
    if (rational_of(v, p, q)) {
        if (q == 1) return std::to_string(p);
        if (p < 0) return "- \\frac{" + std::to_string(-p) + "}{" + std::to_string(q) + "}";
        return "\\frac{" + std::to_string(p) + "}{" + std::to_string(q) + "}";
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string lat(const Expr& e);

bool needs_parens_as_factor(const Expr& e) { return e->kind == Kind::Add; }

std::string wrapped(const Expr& e) {
    if (needs_parens_as_factor(e)) return "\\left( " + lat(e) + " \\right)";
    return lat(e);
}

std::string operand(const Expr& e) {
    if (e->kind == Kind::Add || e->kind == Kind::Mul)
        return "\\left( " + lat(e) + " \\right)";
    return lat(e);
}

std::string superscripted(const Expr& e, const std::string& script) {
    switch (e->kind) {
        case Kind::Add:
        case Kind::Mul:
            return "\\left( " + lat(e) + " \\right)^{" + script + "}";
        default: return "{" + lat(e) + "}^{" + script + "}";
    }
}

// product split into sign, rational coefficient and numerator/denominator
// factor lists (kept as expressions so parentheses are decided at assembly)
struct ProductParts {
    bool negative = false;
    long long num_coeff = 1;
    long long den_coeff = 1;
    std::string extra_coeff;  // non-rational coefficient, printed verbatim
    std::vector<Expr> num;
    std::vector<Expr> den_simple;          // reciprocal factors (exponent -1)
    std::vector<std::string> den_rendered;  // other negative powers, pre-rendered
};

ProductParts split_product(const std::vector<Expr>& factors) {
    ProductParts parts;
    for (const auto& f : factors) {
        if (f->kind == Kind::Number) {
            long long p, q;
            if (rational_of(f->number, p, q)) {
                if (p < 0) {
                    parts.negative = !parts.negative;
                    p = -p;
                }
                parts.num_coeff *= p;
                parts.den_coeff *= q;
            } else {
                if (f->number < 0) parts.negative = !parts.negative;
                parts.extra_coeff = num_latex(std::abs(f->number));
            }
            continue;
        }
        if (f->kind == Kind::Pow && f->children[1]->kind == Kind::Number &&
            f->children[1]->number < 0.0) {
            double ex = -f->children[1]->number;
            if (ex == 1.0)
                parts.den_simple.push_back(f->children[0]);
            else
                parts.den_rendered.push_back(superscripted(f->children[0], num_latex(ex)));
            continue;
        }
        parts.num.push_back(f);
    }
    return parts;
}

std::string product_latex(const std::vector<Expr>& factors) {
    ProductParts parts = split_product(factors);
    size_t num_items = parts.num.size() + (parts.num_coeff != 1 ? 1 : 0) +
                       (parts.extra_coeff.empty() ? 0 : 1);
    std::string num;
    if (parts.num_coeff != 1 || num_items == 0) num = std::to_string(parts.num_coeff);
    if (!parts.extra_coeff.empty()) {
        if (!num.empty()) num += " ";
        num += parts.extra_coeff;
    }
    for (const auto& f : parts.num) {
        if (!num.empty()) num += " ";
        num += (num_items > 1) ? wrapped(f) : lat(f);
    }
    size_t den_items = parts.den_simple.size() + parts.den_rendered.size() +
                       (parts.den_coeff != 1 ? 1 : 0);
    std::string out;
    if (den_items > 0) {
        std::string den;
        if (parts.den_coeff != 1) den = std::to_string(parts.den_coeff);
        for (const auto& f : parts.den_simple) {
            if (!den.empty()) den += " ";
            den += (den_items > 1) ? wrapped(f) : lat(f);
        }
        for (const auto& s : parts.den_rendered) {
            if (!den.empty()) den += " ";
            den += s;
        }
        out = "\\frac{" + num + "}{" + den + "}";
    } else {
        out = num;
    }
    if (parts.negative) return "- " + out;
    return out;
}

std::string lat(const Expr& e) {
    switch (e->kind) {
        case Kind::Number: return num_latex(e->number);
        case Kind::ConstantRef: return e->constant->symbol;
        case Kind::CharFnRef: return e->charfn->symbol;
        case Kind::FieldRef: return field_latex(*e->field);
        case Kind::BoundaryFnRef:
            if (e->composed) return e->boundary->symbol + "(T_{t}(\\mathbf{X}))";
            return e->boundary->symbol + "(x)";
        case Kind::NormalVector: return "\\mathbf{n}";
        case Kind::Identity: return "\\mathbf{I}";
        case Kind::UnitVector: return std::string("\\mathbf{e}_") + "xyz"[e->axis];
        case Kind::PerturbJacobian: return "\\mathbf{F}(" + lat(e->children[0]) + ")";
        case Kind::PerturbJacobianInv:
            return "\\mathbf{F}^{-1}(" + lat(e->children[0]) + ")";
        case Kind::PerturbJacobianInvT:
            return "\\mathbf{F}^{-\\top}(" + lat(e->children[0]) + ")";
        case Kind::PerturbDet:
            return "\\operatorname{det}\\mathbf{F}(" + lat(e->children[0]) + ")";
        case Kind::ExprRef: {
            std::string out = named_latex_name(*e->named);
            return out;
        }
        case Kind::Pow: {
            const Expr& b = e->children[0];
            const Expr& x = e->children[1];
            if (is_number(x, 0.5)) return "\\sqrt{" + lat(b) + "}";
            if (x->kind == Kind::Number && x->number < 0.0)
                return product_latex({e});  // rendered as a fraction
            return superscripted(b, lat(x));
        }
        case Kind::Grad: return "\\nabla " + operand(e->children[0]);
        case Kind::Div: return "\\operatorname{div} " + operand(e->children[0]);
        case Kind::Transpose: return superscripted(e->children[0], "\\top");
        case Kind::Trace: return "\\operatorname{tr}\\left( " + lat(e->children[0]) + " \\right)";
        case Kind::Det: return "\\operatorname{det}\\left( " + lat(e->children[0]) + " \\right)";
        case Kind::Inverse: return superscripted(e->children[0], "-1");
        case Kind::InverseTranspose: return superscripted(e->children[0], "-\\top");
        case Kind::TensorProduct:
            return "\\left( " + wrapped(e->children[0]) + " \\otimes " +
                   wrapped(e->children[1]) + " \\right)";
        case Kind::Inner:
            return "\\left( " + wrapped(e->children[0]) + " \\cdot " +
                   wrapped(e->children[1]) + " \\right)";
        case Kind::Inner2:
            return "\\left( " + wrapped(e->children[0]) + " \\mathrel{:} " +
                   wrapped(e->children[1]) + " \\right)";
        case Kind::Mul: return product_latex(e->children);
        case Kind::Add: {
            std::string out;
            for (size_t i = 0; i < e->children.size(); ++i) {
                std::string term = lat(e->children[i]);
                if (i == 0) {
                    out = term;
                } else if (term.rfind("- ", 0) == 0) {
                    out += " - " + term.substr(2);
                } else {
                    out += " + " + term;
                }
            }
            return out;
        }
        case Kind::IntegralDx:
            return "\\int_{" + e->domain->latex_symbol + "} " + lat(e->children[0]) +
                   " \\,dx";
        case Kind::IntegralDsx:
            return "\\int_{" + e->domain->boundary_latex(e->label) + "} " +
                   lat(e->children[0]) + " \\,ds_x";
    }
    throw Error("to_latex: unknown kind");
}

}  // namespace

std::string field_latex(const FieldDecl& f) {
    std::string base = f.rank == 1 ? "\\mathbf{" + f.symbol + "}" : f.symbol;
    switch (f.role) {
        case FieldRole::Trial:
        case FieldRole::Direction: return base;
        case FieldRole::Test: return "\\delta " + base;
        case FieldRole::Update: return "\\hat{" + base + "}";
        case FieldRole::Adjoint: return "\\tilde{" + base + "}";
    }
    return base;
}

std::string named_latex_name(const NamedExpression& n) {
    std::string name;
    switch (n.deco) {
        case ExprDeco::None: name = n.symbol; break;
        case ExprDeco::Directional:
            name = "\\partial_{(" + field_latex(*n.wrt) + ", " + field_latex(*n.dir) +
                   ")} " + n.symbol;
            break;
        case ExprDeco::Perturbed: return "\\mathcal{V}(" + n.symbol + ")";
        case ExprDeco::TimeDerivative: name = "\\partial_{t} " + n.symbol; break;
    }
    if (!n.args.empty()) {
        std::vector<std::string> as;
        for (const auto& a : n.args) as.push_back(to_latex(a));
        std::string joined;
        for (size_t i = 0; i < as.size(); ++i) {
            if (i) joined += ", ";
            joined += as[i];
        }
        name += "(" + joined + ")";
    }
    return name;
}

std::string to_latex(const Expr& e) {
    require(e != nullptr, "to_latex: null expression");
    return lat(e);
}

// --- Constants table --------------------------------------------------------

namespace {

std::string fmt_constant_value(double v) {
    if (v == 0.0) return "0";
    double a = std::abs(v);
    char buf[48];
    if (a >= 1e3 || a <= 1e-2) {
        std::snprintf(buf, sizeof(buf), "%.2e", v);
        return buf;
    }
    if (v == std::floor(v)) {
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

}  // namespace

std::string constants_table(const std::vector<ConstantPtr>& registry) {
    std::vector<ConstantPtr> rows = registry;
    std::sort(rows.begin(), rows.end(), [](const ConstantPtr& a, const ConstantPtr& b) {
        if (a->description != b->description) return a->description < b->description;
        return a->symbol < b->symbol;
    });
    std::ostringstream out;
    out << "\\begin{spacing}{1.2}\n";
    out << "\\begin{tabular}{cccl}\n";
    out << "\\toprule\n";
    for (const auto& c : rows) {
        out << c->description << " & $" << c->symbol << "$ & " << fmt_constant_value(c->value)
            << " & $" << c->unit << "$ \\\\\n";
    }
    out << "\\bottomrule\n";
    out << "\\end{tabular}\n";
    out << "\\end{spacing}\n";
    return out.str();
}

// --- Problem document ---------------------------------------------------------

namespace {

std::string bracket_list(const std::vector<FieldPtr>& fields) {
    std::string out = "\\left[ ";
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ", \\ ";
        out += field_latex(*fields[i]);
    }
    out += " \\right]";
    return out;
}

std::string sort_key(const NamedExpression& n) {
    std::string raw;
    switch (n.deco) {
        case ExprDeco::None: raw = "0"; break;
        case ExprDeco::Directional: raw = "1"; break;
        case ExprDeco::Perturbed: raw = "2"; break;
        case ExprDeco::TimeDerivative: raw = "3"; break;
    }
    for (char c : n.symbol)
        if (std::isalnum(static_cast<unsigned char>(c)))
            raw += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return raw;
}

/// Abbreviations referenced by the given expressions that have not been
/// defined in an earlier block, sorted by decoration then symbol.
class DefinitionTracker {
public:
    std::vector<std::string> take(const std::vector<Expr>& exprs) {
        std::vector<NamedPtr> fresh;
        for (const auto& e : exprs) {
            if (!e) continue;
            for (const auto& n : collect_named(e)) {
                std::string key = sort_key(*n);
                if (emitted_.insert(key).second) fresh.push_back(n);
            }
        }
        std::sort(fresh.begin(), fresh.end(), [](const NamedPtr& a, const NamedPtr& b) {
            return sort_key(*a) < sort_key(*b);
        });
        std::vector<std::string> lines;
        for (const auto& n : fresh)
            lines.push_back(named_latex_name(*n) + " &= " + to_latex(n->body));
        return lines;
    }

private:
    std::set<std::string> emitted_;
};

std::string charfn_cases(const CharacteristicFn& c) {
    return c.symbol + "(x) &= \\begin{cases} " + num_latex(c.value_inside) +
           " & \\mbox{if}\\quad \\phi(x) < 0 \\\\ " + num_latex(c.value_outside) +
           " & \\mbox{if}\\quad \\phi(x) \\ge 0 \\end{cases}";
}

}  // namespace

std::string LatexDoc::to_text() const {
    std::ostringstream out;
    for (const auto& b : blocks) {
        if (!b.heading.empty()) out << b.heading << "\n";
        for (const auto& eq : b.equations)
            out << "\\begin{dmath*}\n" << eq << "\n\\end{dmath*}\n";
        if (!b.definitions.empty()) {
            if (!b.cases_block) out << "with\n";
            out << "\\begin{align*}\n";
            for (size_t i = 0; i < b.definitions.size(); ++i) {
                out << b.definitions[i];
                out << (i + 1 < b.definitions.size() ? ",\\\\" : ".") << "\n";
            }
            out << "\\end{align*}\n";
        }
    }
    return out.str();
}

LatexDoc document(const LagrangianDef& L, const DocDerivations& d) {
    LatexDoc doc;
    DefinitionTracker defs;
    const bool optimization = d.adjoint != nullptr || d.shape != nullptr;
    const char* problem_word =
        d.classification == Classification::Nonlinear ? "non-linear" : "linear";

    if (optimization && !L.charfns.empty()) {
        DocBlock b;
        b.heading = "Let $\\phi(x)$ be the level-set function and";
        for (const auto& c : L.charfns) b.definitions.push_back(charfn_cases(*c));
        b.cases_block = true;
        doc.blocks.push_back(std::move(b));
    }

    if (optimization) {
        DocBlock b;
        b.heading = "The Lagrangian of the " + L.title + " problem is";
        std::string eq = "\\mathcal{L}(" + bracket_list(L.trials) + "," +
                         bracket_list(L.tests) + ") = " + to_latex(L.lagrangian()) + " , ";
        b.equations.push_back(std::move(eq));
        b.definitions = defs.take({L.lagrangian()});
        doc.blocks.push_back(std::move(b));
    }

    {
        DocBlock b;
        b.heading = "The state $" + bracket_list(L.trials) + "$ is the solution of the " +
                    problem_word + " problem";
        for (size_t i = 0; i < L.residuals.size(); ++i) {
            b.equations.push_back(to_latex(L.residuals[i]) + " = 0\\qquad \\forall\\; " +
                                  field_latex(*L.tests[i]) + " , ");
        }
        b.definitions = defs.take(L.residuals);
        doc.blocks.push_back(std::move(b));
    }

    if (d.classification == Classification::Nonlinear && d.newton) {
        DocBlock b;
        b.heading = "The Newton update $" + bracket_list(d.newton->unknowns) +
                    "$ at the state $" + bracket_list(L.trials) + "$ is the solution of";
        std::vector<Expr> exprs;
        for (const auto& row : d.newton->rows) {
            b.equations.push_back(to_latex(row.lhs) + " = " + to_latex(row.rhs) +
                                  "\\qquad \\forall\\; " + field_latex(*row.test) + " , ");
            exprs.push_back(row.lhs);
            exprs.push_back(row.rhs);
        }
        b.definitions = defs.take(exprs);
        doc.blocks.push_back(std::move(b));
    }

    if (d.adjoint) {
        DocBlock b;
        b.heading = "The adjoint state $" + bracket_list(d.adjoint->unknowns) +
                    "$ to the direct state $" + bracket_list(L.trials) +
                    "$ is the solution of";
        std::vector<Expr> exprs;
        for (const auto& row : d.adjoint->rows) {
            b.equations.push_back(to_latex(row.lhs) + " = 0\\qquad \\forall\\; " +
                                  field_latex(*row.test) + " , ");
            exprs.push_back(row.lhs);
        }
        b.definitions = defs.take(exprs);
        doc.blocks.push_back(std::move(b));
    }

    if (d.shape) {
        {
            DocBlock b;
            b.heading =
                "In order to compute the shape derivative, we consider a shape "
                "perturbation $\\mathbf{x} = T_t(\\mathbf{X}) = \\mathbf{X} + t "
                "\\mathbf{V}(\\mathbf{X})$ with a suitable velocity field "
                "$\\mathbf{V}$. The perturbed Lagrangian $\\mathcal{G}$ using the "
                "Lagrangian state $" +
                bracket_list(L.trials) + "^{L}$ is given by";
            b.equations.push_back("\\mathcal{G}(t," + bracket_list(L.trials) + "^{L}," +
                                  bracket_list(L.tests) + "^{L}) = " +
                                  to_latex(d.shape->perturbed_lagrangian) + " , ");
            b.definitions = defs.take({d.shape->perturbed_lagrangian});
            doc.blocks.push_back(std::move(b));
        }
        {
            DocBlock b;
            b.heading = "For the direct state $" + bracket_list(L.trials) +
                        "$ and the adjoint state $" + bracket_list(d.shape->adjoints) +
                        "$, the volume expression of the shape derivative is given by";
            b.equations.push_back("DJ(\\Omega)(\\mathbf{V}) = " +
                                  to_latex(d.shape->shape_derivative) + " , ");
            b.definitions = defs.take({d.shape->shape_derivative});
            doc.blocks.push_back(std::move(b));
        }
    }

    return doc;
}

}  // namespace wfc
