#pragma once

#include "wfc/calculus.hpp"
#include "wfc/expr.hpp"
#include "wfc/pullback.hpp"

#include <string>
#include <vector>

namespace wfc {

/// A variational problem: trial/test pairs, objective and residual forms,
/// plus the declaration registries used for documentation.
struct LagrangianDef {
    std::string name;   // file stem for emitted artifacts
    std::string title;  // display title in documentation
    std::vector<FieldPtr> trials;
    std::vector<FieldPtr> tests;
    Expr objective;               // scalar form (possibly behind an abbreviation) or 0
    std::vector<Expr> residuals;  // one form per trial/test pair, linear in its test
    std::vector<ConstantPtr> constants;
    std::vector<NamedPtr> named;
    std::vector<CharFnPtr> charfns;
    std::vector<BoundaryFnPtr> boundary_fns;
    std::vector<DomainPtr> domains;

    /// The full Lagrangian J + sum_i R_i with tests in the test slots.
    Expr lagrangian() const;

    void validate() const;
};

enum class Classification { Linear, Nonlinear };

Classification classify(const LagrangianDef& L);

enum class SystemKind { Newton, Adjoint };

/// One equation row: lhs = rhs for all test functions `test`.
struct SystemRow {
    FieldPtr test;
    Expr lhs;
    Expr rhs;
};

struct DerivedSystem {
    SystemKind kind;
    std::vector<FieldPtr> unknowns;
    std::vector<SystemRow> rows;
    std::vector<NamedPtr> auxiliary;  // derived abbreviations appearing in the rows
    bool superfluous = false;         // Newton data for an already linear problem

    Expr bilinear() const;  // sum of the parts containing the unknowns
    Expr rhs_form() const;
};

FieldPtr make_update_field(const FieldPtr& trial);
FieldPtr make_adjoint_field(const FieldPtr& trial);
FieldPtr make_velocity_field(const DomainPtr& domain);

/// Linearization: row i has bilinear part sum_j dR_i(u_j; update_j) and
/// right-hand side -R_i. Permitted on linear problems, where it is flagged
/// superfluous and the bilinear part is the state-independent stiffness form.
DerivedSystem newton_system(const LagrangianDef& L);

/// Adjoint problem: row i states dJ(u_i; test_i) +
/// sum_j dR_j[test_j <- adjoint_j](u_i; test_i) = 0 for all test_i, linear
/// in the adjoint unknowns by construction.
DerivedSystem adjoint_system(const LagrangianDef& L);

/// Volume form of the shape derivative: d/dt at 0 of the pulled-back
/// Lagrangian with adjoints in the test slots.
Expr shape_derivative(const LagrangianDef& L, const PerturbationPtr& p);

/// Shape-derivative bundle used by documentation and verification: the
/// perturbed Lagrangian (tests in the test slots) and the shape derivative
/// (adjoints substituted), sharing one set of derived abbreviations.
struct ShapeDerivation {
    PerturbationPtr perturbation;
    std::vector<FieldPtr> adjoints;
    Expr perturbed_lagrangian;
    Expr adjoint_lagrangian;  // J + sum R_i[test_i <- adjoint_i], unperturbed
    Expr shape_derivative;
};

ShapeDerivation derive_shape(const LagrangianDef& L);

// File emission front ends (implemented with the two emitters).

struct EmissionContext;  // see wfc/emit_freefem.hpp

struct OptimizationParams {
    double hmin = 0.01;
    double hmax = 0.05;
    double regularization = 0.02;
    double v0 = 0.1;
    int maxit = 200;
    Expr phi0;  // initial level set, an explicitly coordinate-dependent expression
    std::vector<int> boundary_labels;  // zero normal component of the shape gradient
    std::vector<int> fixed_labels;     // zero full shape gradient
    bool show_weak_material = false;
};

/// Write the simulation file set (driver, residual varf, Newton varf for
/// nonlinear problems) plus the LaTeX documentation. Returns the emitted
/// file names.
std::vector<std::string> setup_simulation(const LagrangianDef& L, const EmissionContext& ctx,
                                          const std::string& out_dir);

/// Write the optimization file set (driver, objective, residual, Newton,
/// adjoint, shape varfs) plus the LaTeX documentation.
std::vector<std::string> setup_optimization(const LagrangianDef& L,
                                            const EmissionContext& ctx,
                                            const OptimizationParams& params,
                                            const std::string& out_dir);

}  // namespace wfc
