#include "wildrefit/core.hpp"

#include <cmath>

namespace wildrefit {

bool all_finite(const SampleVector& a) {
    for (double v : a) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double emp_norm(const SampleVector& a) {
    if (a.empty()) throw std::invalid_argument("emp_norm: empty vector");
    double ss = 0.0;
    for (double v : a) ss += v * v;
    return std::sqrt(ss / static_cast<double>(a.size()));
}

double emp_inner(const SampleVector& a, const SampleVector& b) {
    if (a.empty()) throw std::invalid_argument("emp_inner: empty vectors");
    if (a.size() != b.size())
        throw std::invalid_argument("emp_inner: length mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s / static_cast<double>(a.size());
}

double EmpiricalGeometry::norm(const SampleVector& a) const {
    if (a.size() != n)
        throw std::invalid_argument("EmpiricalGeometry::norm: expected length " +
                                    std::to_string(n) + ", got " + std::to_string(a.size()));
    return emp_norm(a);
}

double EmpiricalGeometry::inner(const SampleVector& a, const SampleVector& b) const {
    if (a.size() != n || b.size() != n)
        throw std::invalid_argument("EmpiricalGeometry::inner: expected length " +
                                    std::to_string(n));
    return emp_inner(a, b);
}

SampleVector apply_method(const PredictorMethod& m, const SampleVector& u) {
    if (!m.fit) throw MethodError(m.name, "no fit function attached");
    if (u.empty()) throw MethodError(m.name, "empty input");
    if (!all_finite(u)) throw MethodError(m.name, "non-finite input");
    SampleVector out;
    try {
        out = m.fit(u);
    } catch (const MethodError&) {
        throw;
    } catch (const std::exception& e) {
        throw MethodError(m.name, e.what());
    }
    if (out.size() != u.size())
        throw MethodError(m.name, "output length " + std::to_string(out.size()) +
                                      " does not match input length " + std::to_string(u.size()));
    if (!all_finite(out)) throw MethodError(m.name, "non-finite output");
    return out;
}

} // namespace wildrefit
