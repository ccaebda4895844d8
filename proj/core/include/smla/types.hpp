#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace smla {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Phase-space point (x, y, z).
using State = Vec3;

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// A numerical procedure could not produce a result (divergence, no bracket, ...).
class NumericFailure : public std::runtime_error {
public:
    explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

inline bool is_finite(const Vec3& v) { return v.allFinite(); }

} // namespace smla
