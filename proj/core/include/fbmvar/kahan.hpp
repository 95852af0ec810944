#pragma once

#include <cmath>

namespace fbmvar {

// Neumaier variant of compensated summation. The correction also captures
// the case where the running sum is smaller than the addend.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

    void reset() {
        sum_ = 0.0;
        comp_ = 0.0;
    }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace fbmvar
