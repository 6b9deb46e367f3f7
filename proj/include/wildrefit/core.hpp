#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wildrefit {

/// A vector of responses or fitted values observed at the n design points.
/// The design points themselves are implicit: every quantity in this library
/// is a function of values at the sample, so only n is ever needed.
using SampleVector = std::vector<double>;

/// Raised when a black-box fit fails; carries the method name so harness
/// layers can report which candidate broke without unwinding the stack by
/// hand.
class MethodError : public std::runtime_error {
public:
    MethodError(std::string method_name, std::string detail)
        : std::runtime_error("method '" + method_name + "': " + detail),
          method_name_(std::move(method_name)), detail_(std::move(detail)) {}

    const std::string& method_name() const noexcept { return method_name_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string method_name_;
    std::string detail_;
};

/// Raised when an otherwise well-posed computation cannot be completed
/// numerically (non-finite intermediate, unreachable calibration target,
/// solver breakdown).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A black-box prediction method: anything that maps a response vector to a
/// vector of fitted values at the same design points. The procedure built on
/// top of this interface never looks inside `fit`; it only re-invokes it on
/// synthetic responses.
///
/// `is_convex_class` should be set when the method is least squares over a
/// convex set of fitted-value vectors; several monotonicity guarantees are
/// only proved in that case. `deterministic` means fit(u) is a pure function
/// of u; all built-in methods are.
struct PredictorMethod {
    std::string name;
    std::function<SampleVector(const SampleVector&)> fit;
    bool is_convex_class = true;
    bool deterministic = true;
};

/// Geometry of the n-point empirical inner-product space. Mostly a length
/// witness: modules configured for a fixed n can validate vectors against it.
struct EmpiricalGeometry {
    std::size_t n = 0;

    double norm(const SampleVector& a) const;
    double inner(const SampleVector& a, const SampleVector& b) const;
};

/// Empirical norm: sqrt((1/n) * sum a_i^2). Throws std::invalid_argument on
/// an empty vector.
double emp_norm(const SampleVector& a);

/// Empirical inner product: (1/n) * sum a_i b_i. Throws std::invalid_argument
/// on empty or length-mismatched inputs.
double emp_inner(const SampleVector& a, const SampleVector& b);

/// Invokes m.fit(u) with contract enforcement: the input must be nonempty
/// and finite, and the output must have the same length and be finite.
/// Violations and fit exceptions surface as MethodError tagged with m.name.
SampleVector apply_method(const PredictorMethod& m, const SampleVector& u);

/// True when every entry is finite (no NaN, no infinity).
bool all_finite(const SampleVector& a);

} // namespace wildrefit
