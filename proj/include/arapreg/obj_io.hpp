#pragma once

#include <string>

#include "arapreg/mesh.hpp"

namespace arapreg {

// Reads the `v`/`f` subset of Wavefront OBJ. Face entries may carry
// texture/normal slashes (ignored); other record types are skipped with a
// warning on stderr. Faces must be triangles with 1-based indices.
Mesh load_obj(const std::string& path);

// Writes `v`/`f` records with 17 significant digits, enough for an exact
// double round-trip.
void save_obj(const Mesh& mesh, const std::string& path);

}  // namespace arapreg
