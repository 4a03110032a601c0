#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace qamle {

/// Points and gradients are flat double sequences of the domain dimension.
using vecd = std::vector<double>;
using cspan = std::span<const double>;

inline double dot(cspan a, cspan b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

inline double norm2(cspan a) { return dot(a, a); }

inline double norm(cspan a) { return std::sqrt(norm2(a)); }

inline double dist2(cspan a, cspan b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

inline double dist(cspan a, cspan b) { return std::sqrt(dist2(a, b)); }

inline vecd sub(cspan a, cspan b) {
    vecd r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] - b[k];
    return r;
}

inline vecd add(cspan a, cspan b) {
    vecd r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] + b[k];
    return r;
}

inline vecd scaled(cspan a, double s) {
    vecd r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] * s;
    return r;
}

/// a + s*b
inline vecd axpy(cspan a, double s, cspan b) {
    vecd r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] + s * b[k];
    return r;
}

inline vecd midpoint_of(cspan a, cspan b) {
    vecd r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = 0.5 * (a[k] + b[k]);
    return r;
}

} // namespace qamle
