#pragma once

#include "pfmix/mesh.hpp"

namespace pfmix {

// Canonical experiment geometries. All return unpromoted T3 meshes; the
// driver promotes to T6 for mechanics. Dimensions are fixed here and
// documented in the README; loading setups live in the driver.

// 10 x 2 bar, smooth cosine waist narrowing to height 1 at midspan.
Mesh build_dogbone(int nx = 60, int ny = 12);

// 1 x 1 plate, two rectangular edge notches on opposite sides, graded grid.
Mesh build_notched(double fine = 0.02, double coarse = 0.05);

// 2 x 1 plate with 4 circular holes of radius r carved out.
Mesh build_holes(int nx = 40, int ny = 20, double r = 0.13);

// Long thin rectangle for 1D-like phase-field studies.
Mesh build_strip(int nx, int ny, double length, double height);

}  // namespace pfmix
