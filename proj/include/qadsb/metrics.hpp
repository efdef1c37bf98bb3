#pragma once

#include <cstdint>
#include <span>

namespace qadsb::metrics {

// Positive class is the attack label (1).
struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + tn + fp + fn; }
};

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth);

struct Derived {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // Set when a zero denominator forced precision/recall/f1 to 0.
    bool undefined = false;
};

Derived derive(const ConfusionMatrix& cm);

} // namespace qadsb::metrics
