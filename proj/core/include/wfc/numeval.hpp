#pragma once

#include "wfc/expr.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wfc {

using Vec = std::array<double, 3>;  // evaluation point; unused coordinates are zero

/// Dense tensor of order <= 4 over R^d, d <= 3.
class TensorValue {
public:
    TensorValue() : TensorValue(0, 1) {}
    TensorValue(int order, int dim);
    static TensorValue scalar(double v);
    static TensorValue identity(int dim);
    static TensorValue basis(int dim, int axis);

    int order() const { return order_; }
    int dim() const { return dim_; }
    int size() const { return static_cast<int>(data_.size()); }
    double& flat(int i) { return data_[static_cast<size_t>(i)]; }
    double flat(int i) const { return data_[static_cast<size_t>(i)]; }
    double& at(std::initializer_list<int> idx);
    double at(std::initializer_list<int> idx) const;
    double scalar_value() const;

    TensorValue& operator+=(const TensorValue& o);
    TensorValue& operator*=(double s);

private:
    int order_ = 0;
    int dim_ = 1;
    std::vector<double> data_;
};

TensorValue outer(const TensorValue& a, const TensorValue& b);
/// Contraction of the last index of a with the first index of b.
TensorValue dot(const TensorValue& a, const TensorValue& b);
/// Contraction of the last two indices of a with the first two of b,
/// closest indices first: C[i..,j..] = sum_{m,l} A[i..,m,l] B[l,m,j..].
TensorValue ddot(const TensorValue& a, const TensorValue& b);
TensorValue transpose2(const TensorValue& a);
double trace2(const TensorValue& a);
double det2(const TensorValue& a);
TensorValue invert2(const TensorValue& a);

/// Pointwise evaluators for one bound symbol: value and analytic gradient.
struct FieldEval {
    std::function<TensorValue(const Vec&)> value;
    std::function<TensorValue(const Vec&)> gradient;
};

FieldEval make_scalar(std::function<double(const Vec&)> f,
                      std::function<Vec(const Vec&)> g, int dim);

/// Assignment of every free symbol of an expression to an evaluator.
struct NumericBinding {
    int dim = 2;
    std::map<std::string, FieldEval> fields;          // by ff_symbol
    std::map<std::string, FieldEval> coordinate_fns;  // by symbol
    std::map<std::string, double> scalars;            // overrides ConstantDecl values
    std::map<std::string, double> charfns;            // by symbol
    std::optional<TensorValue> normal;                // set during boundary quadrature

    double scalar_of(const ConstantDecl& c) const;
};

/// Shift one field binding: u <- u + h*v (value and gradient).
NumericBinding shift_field(const NumericBinding& b, const std::string& u_ff,
                           const std::string& v_ff, double h);

TensorValue evaluate(const Expr& e, const NumericBinding& b, const Vec& x);

/// One straight boundary piece with its outward unit normal.
struct Segment {
    Vec a{0, 0, 0};
    Vec b{0, 0, 0};
    Vec normal{0, 0, 0};
};

/// Gauss-Legendre quadrature over an axis-aligned box with labeled
/// boundary segments; exact for polynomials up to degree 2*order-1 per axis.
struct QuadratureSpec {
    int dim = 2;
    int order = 6;
    Vec lo{0, 0, 0};
    Vec hi{1, 1, 1};
    std::map<int, std::vector<Segment>> boundary;
};

/// Gauss-Legendre nodes/weights on [0,1].
std::vector<std::pair<double, double>> gauss_points_01(int n);

/// Volume integral of a pointwise scalar integrand over the box of q.
double integrate(const Expr& e, const NumericBinding& b, const QuadratureSpec& q);

double integrate_segment(const Expr& e, const NumericBinding& b, const Segment& s,
                         int order);

/// Integral of a form (sum of dx/dsx terms, possibly behind abbreviations).
double integrate_form(const Expr& form, const NumericBinding& b, const QuadratureSpec& q);

struct DerivativeReport {
    double symbolic = 0.0;
    double fd = 0.0;
    double rel_err = 0.0;
    bool pass = false;
};

/// Central-difference check of the Gateaux derivative of a form.
DerivativeReport verify_gateaux(const Expr& form, const FieldPtr& u, const FieldPtr& v,
                                const NumericBinding& b, const QuadratureSpec& q,
                                double h = 1e-5, double tol = 1e-6);

/// Pointwise variant for non-integral expressions.
DerivativeReport verify_gateaux_at(const Expr& e, const FieldPtr& u, const FieldPtr& v,
                                   const NumericBinding& b, const Vec& x,
                                   double h = 1e-5, double tol = 1e-6);

}  // namespace wfc
