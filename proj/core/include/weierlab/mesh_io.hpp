#pragma once

// Triangle-mesh export of an immersion sampled on the grid.
//
// Vertices follow the row-major node order. Every grid cell (i, j) becomes the
// triangles (a, b, c) and (a, c, d) with a = (i, j), b = (i+1, j),
// c = (i+1, j+1), d = (i, j+1). Coordinates are written with 9 significant
// digits so identical inputs give identical files.

#include <iosfwd>
#include <string>

#include "weierlab/weier.hpp"

namespace weierlab::mesh_io {

enum class Format { obj, ply };

Format format_from_string(const std::string& s);
std::string extension(Format f);

/// Only the first three coordinates are written; higher-dimensional
/// immersions are projected. Throws ConfigError for fewer than 3.
void write_obj(std::ostream& os, const weier::Immersion& im);
void write_ply(std::ostream& os, const weier::Immersion& im);

/// Writes to `path`; throws Error when the file cannot be opened.
void write_mesh(const std::string& path, const weier::Immersion& im, Format f);

}  // namespace weierlab::mesh_io
