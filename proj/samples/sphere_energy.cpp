// Energy of refined icospheres against the closed form for the round sphere.
#include "tpsurf/tpsurf.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv) {
  using namespace tpsurf;
  const int top = argc > 1 ? std::atoi(argv[1]) : 3;
  const double q = 6;
  // on the unit sphere every pair has tangent-point radius 1, so E = (4 pi)^2 for any q
  const double exact = 16 * M_PI * M_PI;
  for (int level = 1; level <= top; ++level) {
    const auto s = shapes::icosphere(level);
    EnergyOptions eo;
    eo.q = q;
    const auto rep = energy(quadrature(s), eo);
    std::printf("level %d  faces %5d  energy %.10g  rel.err %+.3f%%  (%.2fs)\n", level, s.simplex_count(), rep.total_energy,
                100 * (rep.total_energy / exact - 1), rep.elapsed);
  }
  return 0;
}
