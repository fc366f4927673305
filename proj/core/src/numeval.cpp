#include "wfc/numeval.hpp"

#include "wfc/calculus.hpp"

#include <algorithm>
#include <cmath>

namespace wfc {

namespace {
int ipow(int b, int e) {
    int r = 1;
    while (e-- > 0) r *= b;
    return r;
}
}  // namespace

TensorValue::TensorValue(int order, int dim) : order_(order), dim_(dim) {
    require(order >= 0 && order <= 4, "TensorValue: order must be in [0,4]");
    require(dim >= 1 && dim <= 3, "TensorValue: dim must be in [1,3]");
    data_.assign(static_cast<size_t>(ipow(dim, order)), 0.0);
}

TensorValue TensorValue::scalar(double v) {
    TensorValue t(0, 1);
    t.data_[0] = v;
    return t;
}

TensorValue TensorValue::identity(int dim) {
    TensorValue t(2, dim);
    for (int i = 0; i < dim; ++i) t.at({i, i}) = 1.0;
    return t;
}

TensorValue TensorValue::basis(int dim, int axis) {
    require(axis < dim, "unit vector axis exceeds ambient dimension");
    TensorValue t(1, dim);
    t.at({axis}) = 1.0;
    return t;
}

double& TensorValue::at(std::initializer_list<int> idx) {
    require(static_cast<int>(idx.size()) == order_, "TensorValue: index arity mismatch");
    int f = 0;
    for (int i : idx) f = f * dim_ + i;
    return data_[static_cast<size_t>(f)];
}

double TensorValue::at(std::initializer_list<int> idx) const {
    return const_cast<TensorValue*>(this)->at(idx);
}

double TensorValue::scalar_value() const {
    require(order_ == 0, "TensorValue: not a scalar");
    return data_[0];
}

TensorValue& TensorValue::operator+=(const TensorValue& o) {
    require(order_ == o.order_ && (order_ == 0 || dim_ == o.dim_),
            "TensorValue: shape mismatch in sum");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

TensorValue& TensorValue::operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
}

TensorValue outer(const TensorValue& a, const TensorValue& b) {
    int dim = std::max(a.dim(), b.dim());
    TensorValue r(a.order() + b.order(), dim);
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < b.size(); ++j)
            r.flat(i * b.size() + j) = a.flat(i) * b.flat(j);
    return r;
}

TensorValue dot(const TensorValue& a, const TensorValue& b) {
    require(a.order() >= 1 && b.order() >= 1, "dot: operands must have order >= 1");
    require(a.dim() == b.dim(), "dot: dimension mismatch");
    int d = a.dim();
    int ra = a.size() / d;  // leading block of a
    int rb = b.size() / d;  // trailing block of b
    TensorValue r(a.order() + b.order() - 2, d);
    for (int i = 0; i < ra; ++i)
        for (int j = 0; j < rb; ++j) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) s += a.flat(i * d + k) * b.flat(k * rb + j);
            r.flat(i * rb + j) = s;
        }
    return r;
}

TensorValue ddot(const TensorValue& a, const TensorValue& b) {
    require(a.order() >= 2 && b.order() >= 2, "ddot: operands must have order >= 2");
    require(a.dim() == b.dim(), "ddot: dimension mismatch");
    int d = a.dim();
    int ra = a.size() / (d * d);
    int rb = b.size() / (d * d);
    TensorValue r(a.order() + b.order() - 4, d);
    for (int i = 0; i < ra; ++i)
        for (int j = 0; j < rb; ++j) {
            double s = 0.0;
            for (int m = 0; m < d; ++m)
                for (int l = 0; l < d; ++l)
                    s += a.flat((i * d + m) * d + l) * b.flat((l * d + m) * rb + j);
            r.flat(i * rb + j) = s;
        }
    return r;
}

TensorValue transpose2(const TensorValue& a) {
    require(a.order() == 2, "transpose: matrix required");
    TensorValue r(2, a.dim());
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) r.at({i, j}) = a.at({j, i});
    return r;
}

double trace2(const TensorValue& a) {
    require(a.order() == 2, "trace: matrix required");
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i) s += a.at({i, i});
    return s;
}

double det2(const TensorValue& a) {
    require(a.order() == 2, "det: matrix required");
    int d = a.dim();
    if (d == 1) return a.at({0, 0});
    if (d == 2) return a.at({0, 0}) * a.at({1, 1}) - a.at({0, 1}) * a.at({1, 0});
    return a.at({0, 0}) * (a.at({1, 1}) * a.at({2, 2}) - a.at({1, 2}) * a.at({2, 1})) -
           a.at({0, 1}) * (a.at({1, 0}) * a.at({2, 2}) - a.at({1, 2}) * a.at({2, 0})) +
           a.at({0, 2}) * (a.at({1, 0}) * a.at({2, 1}) - a.at({1, 1}) * a.at({2, 0}));
}

TensorValue invert2(const TensorValue& a) {
    require(a.order() == 2, "inverse: matrix required");
    int d = a.dim();
    double det = det2(a);
    require(std::abs(det) > 1e-300, "inverse: singular matrix");
    TensorValue r(2, d);
    if (d == 1) {
        r.at({0, 0}) = 1.0 / det;
    } else if (d == 2) {
        r.at({0, 0}) = a.at({1, 1}) / det;
        r.at({0, 1}) = -a.at({0, 1}) / det;
        r.at({1, 0}) = -a.at({1, 0}) / det;
        r.at({1, 1}) = a.at({0, 0}) / det;
    } else {
        auto c = [&](int i, int j) {
            int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
            int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
            return a.at({i1, j1}) * a.at({i2, j2}) - a.at({i1, j2}) * a.at({i2, j1});
        };
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.at({i, j}) = c(j, i) / det;
    }
    return r;
}

FieldEval make_scalar(std::function<double(const Vec&)> f,
                      std::function<Vec(const Vec&)> g, int dim) {
    FieldEval e;
    e.value = [f](const Vec& x) { return TensorValue::scalar(f(x)); };
    e.gradient = [g, dim](const Vec& x) {
        TensorValue t(1, dim);
        Vec v = g(x);
        for (int i = 0; i < dim; ++i) t.at({i}) = v[static_cast<size_t>(i)];
        return t;
    };
    return e;
}

double NumericBinding::scalar_of(const ConstantDecl& c) const {
    auto it = scalars.find(c.symbol);
    return it != scalars.end() ? it->second : c.value;
}

NumericBinding shift_field(const NumericBinding& b, const std::string& u_ff,
                           const std::string& v_ff, double h) {
    NumericBinding out = b;
    const FieldEval u = b.fields.at(u_ff);
    const FieldEval v = b.fields.at(v_ff);
    out.fields[u_ff] = FieldEval{
        [u, v, h](const Vec& x) {
            TensorValue t = u.value(x);
            TensorValue s = v.value(x);
            s *= h;
            t += s;
            return t;
        },
        [u, v, h](const Vec& x) {
            TensorValue t = u.gradient(x);
            TensorValue s = v.gradient(x);
            s *= h;
            t += s;
            return t;
        }};
    return out;
}

// --- Evaluation -------------------------------------------------------------

namespace {

Vec mapped_point(const Expr& e, const NumericBinding& b, const Vec& x) {
    double t = evaluate(e->children.at(0), b, x).scalar_value();
    TensorValue v = evaluate(field_ref(e->pert->velocity), b, x);
    Vec y = x;
    for (int i = 0; i < b.dim; ++i) y[static_cast<size_t>(i)] += t * v.at({i});
    return y;
}

TensorValue deformation_gradient(const Expr& e, const NumericBinding& b, const Vec& x) {
    double t = evaluate(e->children.at(0), b, x).scalar_value();
    const FieldEval& v = b.fields.at(e->pert->velocity->ff_symbol);
    TensorValue gv = v.gradient(x);
    TensorValue f = TensorValue::identity(b.dim);
    gv *= t;
    f += gv;
    return f;
}

TensorValue eval_grad(const Expr& operand, const NumericBinding& b, const Vec& x) {
    switch (operand->kind) {
        case Kind::FieldRef: {
            auto it = b.fields.find(operand->field->ff_symbol);
            require(it != b.fields.end(), "evaluate: unbound field " + operand->field->ff_symbol);
            return it->second.gradient(x);
        }
        case Kind::BoundaryFnRef: {
            auto it = b.coordinate_fns.find(operand->boundary->symbol);
            require(it != b.coordinate_fns.end(),
                    "evaluate: unbound coordinate data " + operand->boundary->symbol);
            Vec p = operand->composed ? mapped_point(operand, b, x) : x;
            return it->second.gradient(p);
        }
        case Kind::ExprRef: return eval_grad(operand->named->body, b, x);
        default:
            throw Error(std::string("evaluate: gradient of unsupported operand ") +
                        kind_name(operand->kind));
    }
}

}  // namespace

TensorValue evaluate(const Expr& e, const NumericBinding& b, const Vec& x) {
    switch (e->kind) {
        case Kind::Number: return TensorValue::scalar(e->number);
        case Kind::ConstantRef: return TensorValue::scalar(b.scalar_of(*e->constant));
        case Kind::CharFnRef: {
            auto it = b.charfns.find(e->charfn->symbol);
            return TensorValue::scalar(it != b.charfns.end() ? it->second
                                                             : e->charfn->value_inside);
        }
        case Kind::FieldRef: {
            auto it = b.fields.find(e->field->ff_symbol);
            require(it != b.fields.end(), "evaluate: unbound field " + e->field->ff_symbol);
            return it->second.value(x);
        }
        case Kind::BoundaryFnRef: {
            auto it = b.coordinate_fns.find(e->boundary->symbol);
            require(it != b.coordinate_fns.end(),
                    "evaluate: unbound coordinate data " + e->boundary->symbol);
            Vec p = e->composed ? mapped_point(e, b, x) : x;
            return it->second.value(p);
        }
        case Kind::NormalVector:
            require(b.normal.has_value(), "evaluate: normal vector outside boundary quadrature");
            return *b.normal;
        case Kind::Identity: return TensorValue::identity(b.dim);
        case Kind::UnitVector: return TensorValue::basis(b.dim, e->axis);
        case Kind::PerturbJacobian: return deformation_gradient(e, b, x);
        case Kind::PerturbJacobianInv: return invert2(deformation_gradient(e, b, x));
        case Kind::PerturbJacobianInvT:
            return transpose2(invert2(deformation_gradient(e, b, x)));
        case Kind::PerturbDet:
            return TensorValue::scalar(det2(deformation_gradient(e, b, x)));
        case Kind::ExprRef: return evaluate(e->named->body, b, x);
        case Kind::Add: {
            TensorValue r = evaluate(e->children[0], b, x);
            for (size_t i = 1; i < e->children.size(); ++i) r += evaluate(e->children[i], b, x);
            return r;
        }
        case Kind::Mul: {
            double s = 1.0;
            std::optional<TensorValue> tensor;
            for (const auto& c : e->children) {
                TensorValue v = evaluate(c, b, x);
                if (v.order() == 0)
                    s *= v.scalar_value();
                else
                    tensor = v;
            }
            if (!tensor) return TensorValue::scalar(s);
            *tensor *= s;
            return *tensor;
        }
        case Kind::Pow: {
            double base = evaluate(e->children[0], b, x).scalar_value();
            double exp = evaluate(e->children[1], b, x).scalar_value();
            return TensorValue::scalar(std::pow(base, exp));
        }
        case Kind::TensorProduct:
            return outer(evaluate(e->children[0], b, x), evaluate(e->children[1], b, x));
        case Kind::Inner:
            return dot(evaluate(e->children[0], b, x), evaluate(e->children[1], b, x));
        case Kind::Inner2:
            return ddot(evaluate(e->children[0], b, x), evaluate(e->children[1], b, x));
        case Kind::Grad: return eval_grad(e->children[0], b, x);
        case Kind::Div: {
            // div A = grad A : I, contraction of the last two indices
            TensorValue g = eval_grad(e->children[0], b, x);
            return ddot(g, TensorValue::identity(b.dim));
        }
        case Kind::Transpose: return transpose2(evaluate(e->children[0], b, x));
        case Kind::Trace: return TensorValue::scalar(trace2(evaluate(e->children[0], b, x)));
        case Kind::Det: return TensorValue::scalar(det2(evaluate(e->children[0], b, x)));
        case Kind::Inverse: return invert2(evaluate(e->children[0], b, x));
        case Kind::InverseTranspose:
            return transpose2(invert2(evaluate(e->children[0], b, x)));
        case Kind::IntegralDx:
        case Kind::IntegralDsx:
            throw Error("evaluate: integrals are handled by integrate_form");
    }
    throw Error("evaluate: unknown kind");
}

// --- Quadrature -------------------------------------------------------------

std::vector<std::pair<double, double>> gauss_points_01(int n) {
    require(n >= 1 && n <= 64, "gauss_points_01: order out of range");
    // Newton iteration on Legendre polynomials over [-1,1], then map to [0,1]
    std::vector<std::pair<double, double>> pts;
    pts.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        pts.emplace_back(0.5 * (x + 1.0), 0.5 * w);
    }
    std::sort(pts.begin(), pts.end());
    return pts;
}

double integrate(const Expr& e, const NumericBinding& b, const QuadratureSpec& q) {
    require(e->order == 0, "integrate: scalar integrand required");
    auto pts = gauss_points_01(q.order);
    double sum = 0.0;
    if (q.dim == 2) {
        double jx = q.hi[0] - q.lo[0], jy = q.hi[1] - q.lo[1];
        for (const auto& [sx, wx] : pts)
            for (const auto& [sy, wy] : pts) {
                Vec x{q.lo[0] + sx * jx, q.lo[1] + sy * jy, 0.0};
                sum += wx * wy * jx * jy * evaluate(e, b, x).scalar_value();
            }
    } else if (q.dim == 3) {
        double jx = q.hi[0] - q.lo[0], jy = q.hi[1] - q.lo[1], jz = q.hi[2] - q.lo[2];
        for (const auto& [sx, wx] : pts)
            for (const auto& [sy, wy] : pts)
                for (const auto& [sz, wz] : pts) {
                    Vec x{q.lo[0] + sx * jx, q.lo[1] + sy * jy, q.lo[2] + sz * jz};
                    sum += wx * wy * wz * jx * jy * jz * evaluate(e, b, x).scalar_value();
                }
    } else {
        double jx = q.hi[0] - q.lo[0];
        for (const auto& [sx, wx] : pts) {
            Vec x{q.lo[0] + sx * jx, 0.0, 0.0};
            sum += wx * jx * evaluate(e, b, x).scalar_value();
        }
    }
    return sum;
}

double integrate_segment(const Expr& e, const NumericBinding& b, const Segment& s,
                         int order) {
    require(e->order == 0, "integrate_segment: scalar integrand required");
    NumericBinding local = b;
    TensorValue n(1, b.dim);
    double len = 0.0;
    for (int i = 0; i < b.dim; ++i) {
        n.at({i}) = s.normal[static_cast<size_t>(i)];
        double d = s.b[static_cast<size_t>(i)] - s.a[static_cast<size_t>(i)];
        len += d * d;
    }
    len = std::sqrt(len);
    local.normal = n;
    double sum = 0.0;
    for (const auto& [t, w] : gauss_points_01(order)) {
        Vec x;
        for (size_t i = 0; i < 3; ++i) x[i] = s.a[i] + t * (s.b[i] - s.a[i]);
        sum += w * len * evaluate(e, local, x).scalar_value();
    }
    return sum;
}

double integrate_form(const Expr& form, const NumericBinding& b, const QuadratureSpec& q) {
    if (is_zero(form)) return 0.0;
    switch (form->kind) {
        case Kind::Add: {
            double s = 0.0;
            for (const auto& t : form->children) s += integrate_form(t, b, q);
            return s;
        }
        case Kind::Mul: {
            double coeff = 1.0;
            Expr rest;
            for (const auto& c : form->children) {
                if (c->kind == Kind::Number)
                    coeff *= c->number;
                else {
                    require(!rest, "integrate_form: not a form term");
                    rest = c;
                }
            }
            require(rest != nullptr, "integrate_form: not a form term");
            return coeff * integrate_form(rest, b, q);
        }
        case Kind::IntegralDx: return integrate(form->children[0], b, q);
        case Kind::IntegralDsx: {
            auto it = q.boundary.find(form->label);
            require(it != q.boundary.end(),
                    "integrate_form: no boundary segments for label " +
                        std::to_string(form->label));
            double s = 0.0;
            for (const auto& seg : it->second)
                s += integrate_segment(form->children[0], b, seg, q.order);
            return s;
        }
        case Kind::ExprRef: return integrate_form(form->named->body, b, q);
        default: throw Error("integrate_form: expression is not a form");
    }
}

// --- Derivative checks --------------------------------------------------------

namespace {

DerivativeReport report_from(double sym, double fd, double tol) {
    DerivativeReport r;
    r.symbolic = sym;
    r.fd = fd;
    double denom = std::max(std::abs(sym), std::abs(fd));
    r.rel_err = denom < 1e-14 ? std::abs(sym - fd) : std::abs(sym - fd) / denom;
    r.pass = r.rel_err <= tol;
    return r;
}

}  // namespace

DerivativeReport verify_gateaux(const Expr& form, const FieldPtr& u, const FieldPtr& v,
                                const NumericBinding& b, const QuadratureSpec& q,
                                double h, double tol) {
    Expr d = gateaux(form, u, v);
    double sym = integrate_form(d, b, q);
    double plus = integrate_form(form, shift_field(b, u->ff_symbol, v->ff_symbol, h), q);
    double minus = integrate_form(form, shift_field(b, u->ff_symbol, v->ff_symbol, -h), q);
    return report_from(sym, (plus - minus) / (2.0 * h), tol);
}

DerivativeReport verify_gateaux_at(const Expr& e, const FieldPtr& u, const FieldPtr& v,
                                   const NumericBinding& b, const Vec& x, double h,
                                   double tol) {
    Expr d = gateaux(e, u, v);
    double sym = evaluate(d, b, x).scalar_value();
    double plus =
        evaluate(e, shift_field(b, u->ff_symbol, v->ff_symbol, h), x).scalar_value();
    double minus =
        evaluate(e, shift_field(b, u->ff_symbol, v->ff_symbol, -h), x).scalar_value();
    return report_from(sym, (plus - minus) / (2.0 * h), tol);
}

}  // namespace wfc
