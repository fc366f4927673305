#pragma once

#include "wfc/derivation.hpp"
#include "wfc/numeval.hpp"

#include <string>
#include <vector>

namespace wfc {

/// Frozen-field Taylor test of a shape derivative: e1(t) = |dG/t - DJ| and
/// e2(t) = |dG - t DJ| must decay with orders 1 and 2 before round-off.
struct TaylorReport {
    std::vector<double> t;
    std::vector<double> e1;
    std::vector<double> e2;
    double g0 = 0.0;
    double dj = 0.0;
    double slope1 = 0.0;
    double slope2 = 0.0;
    bool pass = false;

    std::string csv() const;   // columns t,e1,e2
    std::string text() const;
};

/// Default perturbation range 2^-3 ... 2^-12.
std::vector<double> default_taylor_range();

/// Evaluate G(t) = integral of the perturbed Lagrangian (adjoints in the
/// test slots) at frozen bindings and compare its increments against the
/// symbolic shape derivative. Slopes are fitted by least squares on the
/// log-log data above the round-off floor; pass means slope1 in [0.9,1.1]
/// and slope2 in [1.9,2.1].
TaylorReport verify_shape_taylor(const LagrangianDef& L, const PerturbationPtr& p,
                                 const NumericBinding& binding, const QuadratureSpec& quad,
                                 const std::vector<double>& t_list);

struct PullbackReport {
    double t = 0.0;
    double mapped = 0.0;
    double pulled_back = 0.0;
    double abs_err = 0.0;
    bool degenerate = false;
    bool pass = false;
};

/// Volume change-of-variables check: quadrature over the mapped domain
/// (points pushed through x = X + tV, weights scaled by det F) against the
/// quadrature of the symbolically perturbed integrand over the reference
/// domain.
PullbackReport verify_pullback_volume(const Expr& f, const PerturbationPtr& p, double t,
                                      const NumericBinding& b, const QuadratureSpec& q,
                                      DomainPtr domain, double tol = 1e-10);

/// Boundary version: the mapped side weights by the tangent stretch
/// |F tau|, the pulled-back side by det F |F^-T n|.
PullbackReport verify_pullback_boundary(const Expr& f, const PerturbationPtr& p, double t,
                                        const NumericBinding& b, const Segment& s,
                                        int order, DomainPtr domain, int label,
                                        double tol = 1e-10);

}  // namespace wfc
