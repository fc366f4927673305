#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfc {

class ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& message) {
    if (!cond) throw Error(message);
}

/// Computational domain: LaTeX symbol, mesh identifier used in emitted
/// scripts, and the known boundary labels (optionally with LaTeX names
/// for pretty boundary integrals).
struct DomainDecl {
    std::string latex_symbol;
    std::string mesh_symbol;
    std::vector<int> boundary_labels;
    std::map<int, std::string> boundary_names;

    std::string boundary_latex(int label) const {
        auto it = boundary_names.find(label);
        if (it != boundary_names.end()) return it->second;
        return "\\Gamma_{" + std::to_string(label) + "}";
    }
};
using DomainPtr = std::shared_ptr<const DomainDecl>;

/// A named physical constant. `symbol` is the LaTeX form, `ff_symbol` the
/// identifier used in emitted scripts. Constants are spatially uniform.
struct ConstantDecl {
    std::string symbol;
    std::string ff_symbol;
    double value = 0.0;
    std::string description;
    std::string unit;
};
using ConstantPtr = std::shared_ptr<const ConstantDecl>;

/// Two-valued "color" function of the level set sign: value_inside where
/// the level set is negative, value_outside elsewhere. State-independent
/// under differentiation and advected with the domain under perturbation.
struct CharacteristicFn {
    std::string symbol;
    std::string ff_symbol;
    double value_inside = 1.0;
    double value_outside = 0.0;
};
using CharFnPtr = std::shared_ptr<const CharacteristicFn>;

/// Explicitly coordinate-dependent data, e.g. inhomogeneous Dirichlet
/// values or an initial level set. Unlike constants it composes with the
/// domain perturbation map, so its spatial gradient is not zero.
/// `ff_components` hold the script-dialect text per component and
/// `ff_grad_components` the analytic gradient text (row-major, component
/// varying slowest).
struct BoundaryFn {
    std::string symbol;
    int rank = 0;  // 0 scalar, 1 vector
    std::vector<std::string> ff_components;
    std::vector<std::string> ff_grad_components;
};
using BoundaryFnPtr = std::shared_ptr<const BoundaryFn>;

enum class FieldRole {
    Trial,      // the unknown physical state
    Test,       // test slot paired with a trial
    Update,     // Newton update, printed with a hat
    Adjoint,    // adjoint state occupying a test slot, printed with a tilde
    Direction,  // generic differentiation direction (e.g. the velocity V)
};

/// An unknown or test field. rank 0 is a scalar field, rank 1 a vector
/// field of the ambient dimension. Test fields inherit bc_labels from
/// their paired trial field.
struct FieldDecl {
    std::string symbol;     // LaTeX base symbol, decorated by role when printed
    std::string ff_symbol;  // script identifier, components get x/y/z suffixes
    int rank = 0;
    std::string fe_space;  // e.g. "P1", "P2"
    DomainPtr domain;
    Expr bc_data;  // null means homogeneous
    std::vector<int> bc_labels;
    FieldRole role = FieldRole::Trial;
};
using FieldPtr = std::shared_ptr<const FieldDecl>;

/// How a named abbreviation was derived from its origin.
enum class ExprDeco {
    None,            // user-declared abbreviation
    Directional,     // Gateaux derivative w.r.t. a field along a direction
    Perturbed,       // composed with the domain perturbation map
    TimeDerivative,  // d/dt of a perturbed abbreviation at t = 0
};

/// A named abbreviation: prints as symbol(args) and carries the defining
/// body. Derived abbreviations remember their origin and decoration so
/// substituting the perturbation parameter back to zero can restore the
/// original reference.
struct NamedExpression {
    std::string symbol;  // base LaTeX symbol, without decoration
    ExprDeco deco = ExprDeco::None;
    FieldPtr wrt;  // Directional: differentiated field
    FieldPtr dir;  // Directional / TimeDerivative: direction field
    std::vector<Expr> args;
    Expr body;
    std::shared_ptr<const NamedExpression> origin;
};
using NamedPtr = std::shared_ptr<const NamedExpression>;

/// Hadamard perturbation x = X + t V(X): the velocity field and the
/// scalar parameter. The Jacobian F = I + t grad V and its derived
/// quantities are opaque expression leaves referencing this object.
struct Perturbation {
    FieldPtr velocity;
    ConstantPtr parameter;
};
using PerturbationPtr = std::shared_ptr<const Perturbation>;

}  // namespace wfc
