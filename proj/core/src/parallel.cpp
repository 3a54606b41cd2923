#include <dic/parallel.hpp>

#include <cmath>

namespace dic {

double MomentAccumulator::stderr_of_mean() const { return count > 1.0 ? std::sqrt(variance() / count) : 0.0; }

} // namespace dic
