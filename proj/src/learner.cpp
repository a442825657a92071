#include "cyberdial/learner.hpp"

#include <cmath>

namespace cyberdial {

double EvalResult::mean() const
{
    if (returns.empty()) return 0.0;
    double sum = 0.0;
    for (double r : returns) sum += r;
    return sum / static_cast<double>(returns.size());
}

double EvalResult::stddev() const
{
    if (returns.empty()) return 0.0;
    const double m = mean();
    double sq = 0.0;
    for (double r : returns) sq += (r - m) * (r - m);
    return std::sqrt(sq / static_cast<double>(returns.size()));
}

}  // namespace cyberdial
