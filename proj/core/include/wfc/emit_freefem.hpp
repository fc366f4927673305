#pragma once

#include "wfc/derivation.hpp"
#include "wfc/numeval.hpp"

#include <string>

namespace wfc {

/// Target dialect settings for one emission: the ambient dimension fixes
/// component suffixes (x, y, z) and the volume/boundary integral keywords;
/// the mesh file is included verbatim by the drivers.
struct EmissionContext {
    int dim = 2;
    std::string mesh_file;
};

/// Component-expanded script text of a scalar-valued expression: vectors
/// and matrices become component sums/products, gradients dx()/dy()/dz().
std::string to_ff(const Expr& e, const EmissionContext& ctx);

/// Evaluate the component expansion numerically through the interpreter
/// bindings. Agreement with direct tensor evaluation of the source
/// expression validates the expansion.
double eval_ff_scalar(const Expr& e, const EmissionContext& ctx, const NumericBinding& b,
                      const Vec& x);

/// varf for a derived (Newton or adjoint) system: unknown formals are the
/// system unknowns, test formals the row test fields, Dirichlet rows as
/// homogeneous on() clauses.
std::string emit_varf(const DerivedSystem& sys, const EmissionContext& ctx);

/// varf for the residual forms. With trials_as_formals the trial symbols
/// are the unknown formals (single-solve driver assembles both the matrix
/// and the load vector from it); otherwise the update fields serve as
/// formals and trial references stay bound to the state functions.
std::string emit_residual_varf(const LagrangianDef& L, const EmissionContext& ctx,
                               bool trials_as_formals);

/// Objective functional evaluator (func real evalObjective()).
std::string emit_objective_fn(const LagrangianDef& L, const EmissionContext& ctx);

/// varf of the shape derivative, linear in the velocity test slot.
std::string emit_shape_varf(const ShapeDerivation& sd, const EmissionContext& ctx);

/// Newton simulation driver (single solve for linear problems).
std::string emit_sim_driver(const LagrangianDef& L, const EmissionContext& ctx,
                            Classification cls);

/// Level-set mesh-evolution optimization driver. A fixed template: state
/// and adjoint solves, objective history, regularized shape-gradient
/// identification, advection/redistancing/remeshing through the external
/// advection, mshdist and mmg tools.
std::string emit_opt_driver(const LagrangianDef& L, const EmissionContext& ctx,
                            const OptimizationParams& params, Classification cls);

}  // namespace wfc
