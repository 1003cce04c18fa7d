#include "vcm/table5.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace vcm::table5 {

EmissionSequence emissions() {
  return EmissionSequence(std::vector<Emission>(kEmissions.begin(), kEmissions.end()));
}

Comparison compare() {
  const AlignmentLattice lat = compute_lattice(emissions(), kConcepts, SpaceMode::Linear);
  Comparison cmp;
  cmp.alpha = lat.alpha;
  cmp.delta = Matrix(kTokens, kStates);
  cmp.total = sequence_probability(lat);
  for (std::size_t t = 0; t < kTokens; ++t) {
    for (std::size_t l = 0; l < kStates; ++l) {
      const double published = kPublishedAlpha[t][l];
      const double d = lat.alpha(t, l) - published;
      cmp.delta(t, l) = d;
      cmp.max_abs_delta = std::max(cmp.max_abs_delta, std::abs(d));
      const double rounded = std::round(lat.alpha(t, l) * 1000.0) / 1000.0;
      if (std::abs(rounded - published) > 1e-12) ++cmp.mismatches;
    }
  }
  return cmp;
}

}  // namespace vcm::table5
