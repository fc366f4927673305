#include "wfc/verify.hpp"

#include "wfc/pullback.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace wfc {

namespace {

std::string fmt_e(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12e", v);
    return buf;
}

// least-squares slope of log(e) against log(t) over points above the floor
double loglog_slope(const std::vector<double>& t, const std::vector<double>& e,
                    double floor_value) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        if (!(e[i] > floor_value)) continue;
        double x = std::log(t[i]);
        double y = std::log(e[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 3) return 0.0;
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) return 0.0;
    return (n * sxy - sx * sy) / denom;
}

}  // namespace

std::vector<double> default_taylor_range() {
    std::vector<double> t;
    for (int k = 3; k <= 12; ++k) t.push_back(std::pow(2.0, -k));
    return t;
}

std::string TaylorReport::csv() const {
    std::ostringstream out;
    out << "t,e1,e2\n";
    for (size_t i = 0; i < t.size(); ++i)
        out << fmt_e(t[i]) << "," << fmt_e(e1[i]) << "," << fmt_e(e2[i]) << "\n";
    return out.str();
}

std::string TaylorReport::text() const {
    std::ostringstream out;
    out << "shape-derivative Taylor test: G(0) = " << fmt_e(g0) << ", DJ(V) = " << fmt_e(dj)
        << "\n";
    out << "      t             e1 = |dG/t - DJ|    e2 = |dG - t DJ|\n";
    for (size_t i = 0; i < t.size(); ++i)
        out << "  " << fmt_e(t[i]) << "  " << fmt_e(e1[i]) << "  " << fmt_e(e2[i]) << "\n";
    out << "fitted slopes: e1 ~ t^" << slope1 << ", e2 ~ t^" << slope2 << "  ["
        << (pass ? "PASS" : "FAIL") << "]\n";
    return out.str();
}

TaylorReport verify_shape_taylor(const LagrangianDef& L, const PerturbationPtr& p,
                                 const NumericBinding& binding, const QuadratureSpec& quad,
                                 const std::vector<double>& t_list) {
    // adjoints occupy the test slots of the Lagrangian
    std::map<std::string, Expr> to_adjoint;
    for (size_t j = 0; j < L.tests.size(); ++j)
        to_adjoint[L.tests[j]->ff_symbol] = field_ref(make_adjoint_field(L.trials[j]));
    Expr lag = substitute_fields(L.lagrangian(), to_adjoint);
    DeriveContext ctx;
    ctx.arg_candidates = L.trials;
    Expr g = perturb(lag, p, &ctx);
    Expr dj_form = dt_at_zero(g, p, &ctx);

    TaylorReport rep;
    NumericBinding b = binding;
    b.scalars[p->parameter->symbol] = 0.0;
    rep.g0 = integrate_form(g, b, quad);
    rep.dj = integrate_form(dj_form, b, quad);
    for (double t : t_list) {
        b.scalars[p->parameter->symbol] = t;
        double gt = integrate_form(g, b, quad);
        double dg = gt - rep.g0;
        rep.t.push_back(t);
        rep.e1.push_back(std::abs(dg / t - rep.dj));
        rep.e2.push_back(std::abs(dg - t * rep.dj));
    }
    double scale = std::max({std::abs(rep.g0), std::abs(rep.dj), 1.0});
    double floor_value = 1e-13 * scale;
    rep.slope1 = loglog_slope(rep.t, rep.e1, floor_value);
    rep.slope2 = loglog_slope(rep.t, rep.e2, floor_value);
    rep.pass = rep.slope1 >= 0.9 && rep.slope1 <= 1.1 && rep.slope2 >= 1.9 &&
               rep.slope2 <= 2.1;
    return rep;
}

namespace {

struct MapSample {
    Vec y;           // mapped point
    TensorValue f;   // deformation gradient
    double det;
};

MapSample map_point(const PerturbationPtr& p, double t, const NumericBinding& b,
                    const Vec& x) {
    const FieldEval& v = b.fields.at(p->velocity->ff_symbol);
    TensorValue val = v.value(x);
    TensorValue gv = v.gradient(x);
    MapSample s;
    s.y = x;
    for (int i = 0; i < b.dim; ++i) s.y[static_cast<size_t>(i)] += t * val.at({i});
    gv *= t;
    TensorValue f = TensorValue::identity(b.dim);
    f += gv;
    s.f = f;
    s.det = det2(f);
    return s;
}

}  // namespace

PullbackReport verify_pullback_volume(const Expr& f, const PerturbationPtr& p, double t,
                                      const NumericBinding& b, const QuadratureSpec& q,
                                      DomainPtr domain, double tol) {
    PullbackReport rep;
    rep.t = t;
    auto pts = gauss_points_01(q.order);
    double jx = q.hi[0] - q.lo[0], jy = q.hi[1] - q.lo[1];
    double mapped = 0.0;
    for (const auto& [sx, wx] : pts) {
        for (const auto& [sy, wy] : pts) {
            Vec x{q.lo[0] + sx * jx, q.lo[1] + sy * jy, 0.0};
            MapSample s = map_point(p, t, b, x);
            if (s.det <= 0.0) {
                rep.degenerate = true;
                return rep;
            }
            mapped += wx * wy * jx * jy * s.det * evaluate(f, b, s.y).scalar_value();
        }
    }
    rep.mapped = mapped;
    NumericBinding bt = b;
    bt.scalars[p->parameter->symbol] = t;
    Expr pulled = perturb(integral_dx(f, domain), p);
    rep.pulled_back = integrate_form(pulled, bt, q);
    rep.abs_err = std::abs(rep.mapped - rep.pulled_back);
    rep.pass = rep.abs_err <= tol;
    return rep;
}

PullbackReport verify_pullback_boundary(const Expr& f, const PerturbationPtr& p, double t,
                                        const NumericBinding& b, const Segment& s,
                                        int order, DomainPtr domain, int label, double tol) {
    PullbackReport rep;
    rep.t = t;
    // mapped side: line integral over T_t(segment) with tangent stretch |F tau|
    double len = 0.0;
    Vec tau{0, 0, 0};
    for (int i = 0; i < b.dim; ++i) {
        tau[static_cast<size_t>(i)] =
            s.b[static_cast<size_t>(i)] - s.a[static_cast<size_t>(i)];
        len += tau[static_cast<size_t>(i)] * tau[static_cast<size_t>(i)];
    }
    len = std::sqrt(len);
    double mapped = 0.0;
    for (const auto& [u, w] : gauss_points_01(order)) {
        Vec x;
        for (size_t i = 0; i < 3; ++i) x[i] = s.a[i] + u * (s.b[i] - s.a[i]);
        MapSample ms = map_point(p, t, b, x);
        if (ms.det <= 0.0) {
            rep.degenerate = true;
            return rep;
        }
        // |F tau| with tau the unnormalized segment direction
        double stretch = 0.0;
        for (int i = 0; i < b.dim; ++i) {
            double fi = 0.0;
            for (int j = 0; j < b.dim; ++j)
                fi += ms.f.at({i, j}) * tau[static_cast<size_t>(j)] / len;
            stretch += fi * fi;
        }
        stretch = std::sqrt(stretch);
        mapped += w * len * stretch * evaluate(f, b, ms.y).scalar_value();
    }
    rep.mapped = mapped;
    NumericBinding bt = b;
    bt.scalars[p->parameter->symbol] = t;
    Expr pulled = perturb(integral_dsx(f, domain, label), p);
    QuadratureSpec q;
    q.dim = b.dim;
    q.order = order;
    q.boundary[label] = {s};
    rep.pulled_back = integrate_form(pulled, bt, q);
    rep.abs_err = std::abs(rep.mapped - rep.pulled_back);
    rep.pass = rep.abs_err <= tol;
    return rep;
}

}  // namespace wfc
