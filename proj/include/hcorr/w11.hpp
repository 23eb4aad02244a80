#pragma once

#include "hcorr/mesh.hpp"

namespace hcorr {

/// ||I(coarse) - ref||_{W^{1,1}} = integral of |e| + |grad e| over the reference
/// mesh, where I interpolates the coarse P1 function onto the reference mesh.
/// Both traces are indexed by vertex. Every reference element must lie inside a
/// coarse element; otherwise MeshError("non-nested meshes") is thrown.
double w11_trace_error(const Mesh& coarse, const Vector& trace_coarse, const Mesh& ref, const Vector& trace_ref);

/// Values of a coarse P1 function at the vertices of a nested finer mesh.
Vector interpolate_nested(const Mesh& coarse, const Vector& trace_coarse, const Mesh& fine);

}  // namespace hcorr
