#pragma once

#include "wfc/derivation.hpp"
#include "wfc/numeval.hpp"

#include <functional>
#include <string>
#include <vector>

namespace wfc {

/// Frozen polynomial bindings and the quadrature geometry used by the
/// verification harness of one example.
struct VerificationSetup {
    NumericBinding binding;
    QuadratureSpec quadrature;
};

struct ExampleDef {
    std::string key;
    std::string note;
    int dim = 2;
    bool optimization = false;
    std::string default_mesh;
    std::function<LagrangianDef()> build;
    OptimizationParams opt;
    std::function<VerificationSetup(const LagrangianDef&)> verification;
};

const std::vector<ExampleDef>& examples();
const ExampleDef* find_example(const std::string& key);

// Problem builders (also usable directly in tests).
LagrangianDef navier_stokes();
LagrangianDef linear_elasticity();
LagrangianDef nonlinear_diffusion(double alpha = 0.01);
LagrangianDef thermo_elasticity();
LagrangianDef saint_venant();

/// Declaration helpers shared by the builders.
ConstantPtr make_constant(const std::string& symbol, const std::string& ff, double value,
                          const std::string& description, const std::string& unit);
FieldPtr make_field(const std::string& symbol, const std::string& ff, int rank,
                    const std::string& fe_space, DomainPtr domain, Expr bc_data,
                    std::vector<int> bc_labels, FieldRole role);
NamedPtr make_named(const std::string& symbol, Expr body,
                    const std::vector<FieldPtr>& arg_candidates);

/// Deterministic quadratic polynomial field evaluators for frozen bindings:
/// coefficients of 1, x, y, z, xy, yz, zx, x^2, y^2, z^2.
using PolyCoeffs = std::array<double, 10>;
FieldEval poly_scalar_field(int dim, const PolyCoeffs& c);
FieldEval poly_vector_field(int dim, const std::vector<PolyCoeffs>& comps);

}  // namespace wfc
