#pragma once

#include <vector>

#include "sfma/problem.hpp"

namespace sfma {

/// One evaluated point: y is the black-box value of x for the run's problem.
struct DataPoint {
    BinaryVector x;
    double y = 0.0;
};

/// Ordered list of evaluated points. Insertion order is preserved and
/// duplicates are permitted: the optimization loops append every queried
/// point, so the size after loop a is always |D_0| + a.
struct Dataset {
    std::vector<DataPoint> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

}  // namespace sfma
