#pragma once

#include <stdexcept>
#include <string>

namespace qamle {

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct index_error : error {
    using error::error;
};

/// Input file or payload could not be interpreted. Message names the offending element.
struct parse_error : error {
    using error::error;
};

/// Two coincident constraint points carry different values.
struct infinite_lipschitz : error {
    using error::error;
};

/// k-NN graph of a graph-metric domain is not connected.
struct graph_disconnected : error {
    using error::error;
};

/// A region covers the whole domain, leaving no boundary layer.
struct empty_boundary : error {
    using error::error;
};

struct empty_set : error {
    using error::error;
};

/// No admissible ordered curve sample between the requested endpoints.
struct disconnected_curve : error {
    using error::error;
};

/// Pairwise functional evaluated at zero distance.
struct coincident_points : error {
    using error::error;
};

struct too_few_points : error {
    using error::error;
};

struct empty_constraints : error {
    using error::error;
};

/// Correction region would overwrite constraint values.
struct constraint_overlap : error {
    using error::error;
};

/// Biponctual problem with zero functional value: the touching point is undefined.
struct degenerate_field : error {
    using error::error;
};

/// Operation not available for this functional / boundary configuration.
struct unsupported_operation : error {
    using error::error;
};

struct io_error : error {
    using error::error;
};

/// A library-internal invariant failed; indicates a bug, mapped to exit code 1.
struct internal_error : error {
    using error::error;
};

} // namespace qamle
