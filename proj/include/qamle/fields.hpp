#pragma once

#include <cstring>
#include <vector>

#include "qamle/domain.hpp"
#include "qamle/rng.hpp"

namespace qamle {

enum class FunctionalKind { lip, gamma1 };

inline const char* to_string(FunctionalKind k) {
    return k == FunctionalKind::lip ? "lip" : "gamma1";
}

/// Real values attached to a subset of domain points.
class ScalarField {
public:
    explicit ScalarField(const DiscreteDomain& dom)
        : dom_(&dom), value_(dom.size(), 0.0), has_(dom.size(), 0) {}

    const DiscreteDomain& domain() const { return *dom_; }

    void set(index_t i, double v) {
        check(i);
        value_[i] = v;
        has_[i] = 1;
    }

    bool has(index_t i) const { check(i); return has_[i] != 0; }

    double at(index_t i) const {
        check(i);
        if (!has_[i]) throw index_error("scalar field: no value at point " + std::to_string(i));
        return value_[i];
    }

    index_set support() const {
        index_set s;
        for (index_t i = 0; i < dom_->size(); ++i)
            if (has_[i]) s.push_back(i);
        return s;
    }

    std::size_t support_size() const {
        std::size_t c = 0;
        for (char f : has_) c += f != 0;
        return c;
    }

    bool total() const { return support_size() == dom_->size(); }

    /// Fingerprint of the values on the given index set (bit-exact).
    std::uint64_t trace_hash(const index_set& at_indices) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (index_t i : at_indices) {
            h = fnv1a(&i, sizeof(i), h);
            const double v = at(i);
            h = fnv1a(&v, sizeof(v), h);
        }
        return h;
    }

private:
    void check(index_t i) const {
        if (i >= dom_->size()) throw index_error("scalar field: index out of range");
    }

    const DiscreteDomain* dom_;
    std::vector<double> value_;
    std::vector<char> has_;
};

/// First-order data at a point: value plus gradient.
struct Jet {
    double value = 0.0;
    vecd grad;

    /// Evaluate the polynomial value + grad . (a - base) at a.
    double eval(cspan base, cspan a) const {
        double s = value;
        for (std::size_t k = 0; k < grad.size(); ++k) s += grad[k] * (a[k] - base[k]);
        return s;
    }
};

/// First-order jets attached to a subset of domain points.
class JetField {
public:
    explicit JetField(const DiscreteDomain& dom)
        : dom_(&dom), jets_(dom.size()), has_(dom.size(), 0) {}

    const DiscreteDomain& domain() const { return *dom_; }

    void set(index_t i, Jet jet) {
        check(i);
        if (static_cast<int>(jet.grad.size()) != dom_->dim())
            throw parse_error("jet field: gradient dimension mismatch at point " +
                              std::to_string(i));
        jets_[i] = std::move(jet);
        has_[i] = 1;
    }

    bool has(index_t i) const { check(i); return has_[i] != 0; }

    const Jet& at(index_t i) const {
        check(i);
        if (!has_[i]) throw index_error("jet field: no jet at point " + std::to_string(i));
        return jets_[i];
    }

    index_set support() const {
        index_set s;
        for (index_t i = 0; i < dom_->size(); ++i)
            if (has_[i]) s.push_back(i);
        return s;
    }

    std::size_t support_size() const {
        std::size_t c = 0;
        for (char f : has_) c += f != 0;
        return c;
    }

    bool total() const { return support_size() == dom_->size(); }

    std::uint64_t trace_hash(const index_set& at_indices) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (index_t i : at_indices) {
            h = fnv1a(&i, sizeof(i), h);
            const Jet& jet = at(i);
            h = fnv1a(&jet.value, sizeof(double), h);
            h = fnv1a(jet.grad.data(), jet.grad.size() * sizeof(double), h);
        }
        return h;
    }

private:
    void check(index_t i) const {
        if (i >= dom_->size()) throw index_error("jet field: index out of range");
    }

    const DiscreteDomain* dom_;
    std::vector<Jet> jets_;
    std::vector<char> has_;
};

template <class FieldT>
inline constexpr FunctionalKind functional_kind_v = FunctionalKind::lip;
template <>
inline constexpr FunctionalKind functional_kind_v<JetField> = FunctionalKind::gamma1;

} // namespace qamle
