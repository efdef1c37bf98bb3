#include "qadsb/metrics.hpp"

#include <string>

#include "qadsb/errors.hpp"

namespace qadsb::metrics {

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) {
        throw DataError("prediction count " + std::to_string(pred.size()) +
                        " does not match truth count " + std::to_string(truth.size()));
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if ((pred[i] != 0 && pred[i] != 1) || (truth[i] != 0 && truth[i] != 1)) {
            throw DataError("labels must be 0 or 1, got pred=" + std::to_string(pred[i]) +
                            " truth=" + std::to_string(truth[i]) + " at row " +
                            std::to_string(i));
        }
        if (truth[i] == 1) {
            pred[i] == 1 ? ++cm.tp : ++cm.fn;
        } else {
            pred[i] == 1 ? ++cm.fp : ++cm.tn;
        }
    }
    return cm;
}

Derived derive(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) throw DataError("empty confusion matrix");
    Derived d;
    d.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    if (cm.tp + cm.fp > 0) {
        d.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    } else {
        d.undefined = true;
    }
    if (cm.tp + cm.fn > 0) {
        d.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    } else {
        d.undefined = true;
    }
    if (d.precision + d.recall > 0.0) {
        d.f1 = 2.0 * d.precision * d.recall / (d.precision + d.recall);
    } else {
        d.undefined = true;
    }
    return d;
}

} // namespace qadsb::metrics
