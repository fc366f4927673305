#pragma once

#include "wfc/decls.hpp"

#include <initializer_list>
#include <string>
#include <vector>

namespace wfc {

/// Operator tags. The enum order doubles as the canonical sort rank, so
/// numeric coefficients lead products and leaves sort before compounds.
enum class Kind {
    Number,
    ConstantRef,
    CharFnRef,
    FieldRef,
    BoundaryFnRef,
    NormalVector,
    Identity,
    UnitVector,
    PerturbJacobian,      // F(t) = I + t grad V
    PerturbJacobianInv,   // F(t)^-1
    PerturbJacobianInvT,  // F(t)^-T
    PerturbDet,           // det F(t)
    ExprRef,
    Pow,
    Grad,
    Div,
    Transpose,
    Trace,
    Det,
    Inverse,
    InverseTranspose,
    TensorProduct,
    Inner,
    Inner2,
    Mul,
    Add,
    IntegralDx,
    IntegralDsx,
};

const char* kind_name(Kind k);

/// Immutable node of a symbolic expression tree. Payload members are only
/// populated as the kind requires; the tensor order is fixed at
/// construction and order-inconsistent nodes are rejected there.
class ExprNode {
public:
    Kind kind;
    std::vector<Expr> children;
    double number = 0.0;    // Number
    int axis = -1;          // UnitVector: 0,1,2
    int label = -1;         // IntegralDsx boundary label
    bool composed = false;  // BoundaryFnRef composed with the perturbation map
    ConstantPtr constant;
    CharFnPtr charfn;
    FieldPtr field;
    BoundaryFnPtr boundary;
    NamedPtr named;
    DomainPtr domain;  // integrals
    PerturbationPtr pert;
    int order = 0;
};

int tensor_order(const Expr& e);
bool is_zero(const Expr& e);
bool is_number(const Expr& e, double v);

/// True if e is an integral term or a sum of integral terms (a weak form),
/// possibly behind numeric coefficients or named abbreviations.
bool is_form(const Expr& e);

// --- Leaf factories -------------------------------------------------------

Expr number(double v);
Expr constant_ref(ConstantPtr c);
Expr charfn_ref(CharFnPtr c);
Expr field_ref(FieldPtr f);
Expr boundary_ref(BoundaryFnPtr b);
/// Coordinate data composed with the perturbation map; `param` is the
/// perturbation parameter expression.
Expr boundary_ref_composed(BoundaryFnPtr b, PerturbationPtr p, Expr param);
Expr normal_vector();
Expr identity_matrix();
Expr unit_vector(int axis);
Expr perturb_jacobian(PerturbationPtr p, Expr param);
Expr perturb_jacobian_inv(PerturbationPtr p, Expr param);
Expr perturb_jacobian_inv_t(PerturbationPtr p, Expr param);
Expr perturb_det(PerturbationPtr p, Expr param);
Expr expr_ref(NamedPtr n);

// --- Algebra --------------------------------------------------------------

Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr pow_of(Expr base, Expr exponent);
Expr tensor_product(Expr a, Expr b);
Expr inner(Expr a, Expr b);
Expr inner2(Expr a, Expr b);
Expr grad(Expr a);
Expr divergence(Expr a);
Expr transpose(Expr a);
Expr trace(Expr a);
Expr determinant(Expr a);
Expr inverse(Expr a);
Expr inverse_transpose(Expr a);
Expr integral_dx(Expr integrand, DomainPtr domain);
Expr integral_dsx(Expr integrand, DomainPtr domain, int label);

/// Rebuild a node of the same kind and payload with new children.
Expr with_children(const ExprNode& node, std::vector<Expr> children);

inline Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
inline Expr operator*(double a, const Expr& b) { return mul({number(a), b}); }
inline Expr operator-(const Expr& a, const Expr& b) { return add({a, mul({number(-1.0), b})}); }
inline Expr operator-(const Expr& a) { return mul({number(-1.0), a}); }

// --- Canonical form -------------------------------------------------------

/// Total order on canonical trees: kind rank, then payload, then children.
int compare(const Expr& a, const Expr& b);
bool equal(const Expr& a, const Expr& b);

/// Deterministic normal form: associative/commutative flattening and
/// sorting, numeric folding, zero/one absorption and the structural
/// rewrites that identify algebraically equal inputs (grad linearity,
/// identity absorption, tr(grad) = div, collected summands). Idempotent.
Expr canonicalize(const Expr& e);

/// Stable s-expression serialization of a tree, used for snapshots.
std::string serialize(const Expr& e);

}  // namespace wfc
