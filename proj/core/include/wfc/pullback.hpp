#pragma once

#include "wfc/calculus.hpp"
#include "wfc/expr.hpp"

namespace wfc {

/// Create the perturbation x = X + t V(X); the scalar parameter t is owned
/// by the returned object and appears in F(t), F(t)^-1, F(t)^-T, det F(t).
PerturbationPtr make_perturbation(FieldPtr velocity);

/// The boundary area factor det F(t) * sqrt((n.F^-1(t)).(n.F^-1(t))),
/// equal to 1 at t = 0.
Expr boundary_jacobian(const PerturbationPtr& p);

/// Change of variables of a form to the unperturbed domain: gradients pick
/// up F^-1, volume integrands det F, boundary integrands the boundary
/// area factor; fields stay (they denote the pulled-back states), fixed
/// quantities and the color function are transported unchanged, and
/// explicitly coordinate-dependent data composes with the map.
Expr perturb(const Expr& form, const PerturbationPtr& p, DeriveContext* ctx = nullptr);

/// d/dt at t = 0 of a perturbed expression. Terms without perturbation
/// symbols differentiate to zero; field symbols are never differentiated
/// in t.
Expr dt_at_zero(const Expr& e, const PerturbationPtr& p, DeriveContext* ctx = nullptr);

/// Substitute t = 0 and canonicalize (undoes perturb).
Expr at_zero(const Expr& e, const PerturbationPtr& p);

}  // namespace wfc
