#include <dic/rng.hpp>

#include <dic/normal.hpp>

namespace dic {

double PathRng::normal() { return normal_inverse_cdf(uniform()); }

} // namespace dic
