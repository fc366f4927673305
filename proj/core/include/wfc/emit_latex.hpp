#pragma once

#include "wfc/derivation.hpp"

#include <string>
#include <vector>

namespace wfc {

/// Coordinate-free direct-notation printer: vectors bold, div as
/// \operatorname{div}, dot and double-dot contractions as \cdot and
/// \mathrel{:}, deterministic term order from the canonical form.
std::string to_latex(const Expr& e);

std::string field_latex(const FieldDecl& f);
std::string named_latex_name(const NamedExpression& n);

/// One documentation section: an introductory sentence, display equations,
/// and the abbreviation definitions the equations rely on.
struct DocBlock {
    std::string heading;
    std::vector<std::string> equations;    // dmath* bodies
    std::vector<std::string> definitions;  // align* lines
    bool cases_block = false;              // raw align* without a "with" lead-in
};

struct LatexDoc {
    std::vector<DocBlock> blocks;
    std::string to_text() const;
};

struct DocDerivations {
    Classification classification = Classification::Linear;
    const DerivedSystem* newton = nullptr;
    const DerivedSystem* adjoint = nullptr;
    const ShapeDerivation* shape = nullptr;
};

/// Problem document: statement, Newton block for nonlinear problems,
/// and for optimization problems the Lagrangian, adjoint, perturbed
/// Lagrangian and shape-derivative blocks.
LatexDoc document(const LagrangianDef& L, const DocDerivations& d);

/// Constants table fragment: rows (description, symbol, value, unit),
/// sorted by description then symbol; values in 1.00e+03 style outside
/// [1e-2, 1e3], plain otherwise.
std::string constants_table(const std::vector<ConstantPtr>& registry);

}  // namespace wfc
