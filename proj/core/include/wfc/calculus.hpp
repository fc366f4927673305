#pragma once

#include "wfc/expr.hpp"

#include <map>
#include <optional>
#include <vector>

namespace wfc {

/// Replace all structural occurrences of `target` (same tensor order as
/// `replacement`) and canonicalize. Substitution descends into the bodies
/// of named abbreviations; when a derived abbreviation's body reverts to
/// its origin's body the original reference is restored.
Expr substitute(const Expr& e, const Expr& target, const Expr& replacement);

/// Simultaneous replacement of several fields, keyed by ff_symbol.
Expr substitute_fields(const Expr& e, const std::map<std::string, Expr>& repl);

bool contains(const Expr& e, const Expr& target);
bool depends_on_field(const Expr& e, const FieldDecl& f);
bool depends_on_constant(const Expr& e, const ConstantDecl& c);

/// Bookkeeping for one differentiation pass: how derived abbreviations are
/// decorated and which fields may appear in their printed argument lists.
struct DeriveContext {
    ExprDeco deco = ExprDeco::Directional;
    FieldPtr wrt;
    FieldPtr dir;
    std::vector<FieldPtr> arg_candidates;
    std::map<std::string, NamedPtr> memo;
};

/// d/d(param) with the product rules of tensor algebra and the matrix
/// function rules. Derivatives of named abbreviations become fresh derived
/// abbreviations (already evaluated at param = 0); everything else keeps
/// the parameter, so callers follow up with substitute(param -> 0).
Expr param_derivative(const Expr& e, const ConstantDecl& param, DeriveContext& ctx);

/// Gateaux (directional) derivative of e with respect to field u along v,
/// computed by the substitute / parameter-derivative / substitute-zero
/// pipeline. Returns the zero expression when u does not occur.
Expr gateaux(const Expr& e, const FieldPtr& u, const FieldPtr& v,
             DeriveContext* ctx = nullptr);

enum class MatrixFnKind { Transpose, Trace, Det, Inverse, InverseTranspose };

/// Derivative rule image for a matrix function, given the matrix and its
/// derivative with respect to a scalar parameter.
Expr diff_matrix(MatrixFnKind k, const Expr& A, const Expr& A_prime);

/// Per-residual linearity test: substitute every trial u_i by tau*u_i
/// simultaneously and differentiate twice in tau; a residual is linear iff
/// the second derivative canonicalizes to the zero expression identically
/// in tau.
std::vector<bool> is_linear_in(const std::vector<Expr>& residuals,
                               const std::vector<FieldPtr>& trials);

/// Light semantics-preserving cleanup on top of canonicalize; with an
/// ambient dimension it also folds tr(I) to the dimension.
Expr simplify(const Expr& e, std::optional<int> dim = std::nullopt);

/// Expand every named abbreviation into its body.
Expr inline_named(const Expr& e);

/// Distinct named abbreviations referenced by e, transitively through
/// bodies, in first-visit order.
std::vector<NamedPtr> collect_named(const Expr& e);

/// Distinct fields referenced by e, transitively through bodies.
std::vector<FieldPtr> collect_fields(const Expr& e);

/// Termwise negation of a form (sum of integrals).
Expr negate_form(const Expr& form);

ConstantPtr make_parameter(const std::string& symbol, const std::string& ff_symbol);

}  // namespace wfc
