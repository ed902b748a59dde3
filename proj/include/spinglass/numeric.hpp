// Small numeric helpers shared across the library.
#pragma once

#include <cmath>

namespace spinglass {

// Neumaier compensated summation; keeps million-term expectation sums
// accurate to a few ulps so exact audits can use 1e-12 tolerances.
class NeumaierSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace spinglass
