#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qadsb/nn.hpp"
#include "qadsb/tensor.hpp"

namespace qadsb::data {

// One ADS-B surveillance row.
struct FlightRecord {
    double time = 0.0; // UNIX seconds
    std::string icao24;
    double lat = 0.0;
    double lon = 0.0;
    double velocity = 0.0; // m/s
    double heading = 0.0;  // degrees
    double baroaltitude = 0.0;
    double geoaltitude = 0.0; // meters
    int label = 0;            // 0 normal, 1 attack
};

struct FeatureMatrix {
    Tensor2 values;
    std::vector<std::string> feature_names;
    std::vector<int> labels;

    std::size_t n_rows() const { return values.rows; }
    std::size_t n_features() const { return values.cols; }
};

struct LoadResult {
    std::vector<FlightRecord> records;
    std::size_t skipped_rows = 0;
};

// Header-driven CSV reader; column names are matched case-insensitively
// against known aliases (baroaltitude/baroAltitude/baro_altitude, ...).
// Malformed rows are skipped and counted.
LoadResult load_csv(const std::string& path);

// Canonical column order: time, icao24, lat, lon, velocity, heading,
// geoaltitude, baroaltitude. icao24 is carried as its hex value purely so
// that feature selection can drop it by name.
FeatureMatrix to_feature_matrix(std::span<const FlightRecord> records);

// Pearson correlations, [F, F]; diagonal exactly 1, zero-variance columns
// correlate 0 with everything else.
Tensor2 correlation_matrix(const FeatureMatrix& features);

struct FeatureSelection {
    FeatureMatrix features;
    std::vector<std::string> kept;
    std::vector<std::string> dropped;
};

// Drops icao24 unconditionally, then scans pairs in column order and drops
// the later column of any pair with |corr| >= threshold.
FeatureSelection select_features(const FeatureMatrix& features, double threshold = 0.90);

struct SamplingPlan {
    std::size_t n_attack = 1000;
    double ratio = 2.0; // normal-to-attack
    std::uint64_t seed = 1;
};

// Exactly n_attack attack rows and floor(ratio * n_attack) normal rows,
// sampled without replacement and shuffled.
FeatureMatrix sample_stratified(const FeatureMatrix& features, const SamplingPlan& plan);
FeatureMatrix sample_stratified(std::span<const FlightRecord> records,
                                const SamplingPlan& plan);

// z-score normalization, population standard deviation. Fit on the training
// split only.
class Standardizer {
public:
    static Standardizer fit(const FeatureMatrix& train);

    FeatureMatrix transform(const FeatureMatrix& features) const;
    FeatureMatrix inverse(const FeatureMatrix& features) const;

    bool fitted() const { return fitted_; }
    const std::vector<double>& means() const { return mean_; }
    const std::vector<double>& stds() const { return std_; }
    const std::vector<std::size_t>& zero_variance_columns() const { return zero_variance_; }

    // For checkpoint (de)serialization.
    static Standardizer from_stats(std::vector<double> mean, std::vector<double> std_dev);

private:
    std::vector<double> mean_;
    std::vector<double> std_;
    std::vector<std::size_t> zero_variance_;
    bool fitted_ = false;
};

inline Standardizer fit_standardizer(const FeatureMatrix& train) {
    return Standardizer::fit(train);
}
inline FeatureMatrix apply_standardizer(const Standardizer& stats, const FeatureMatrix& fm) {
    return stats.transform(fm);
}

struct SplitSet {
    FeatureMatrix train;
    FeatureMatrix val;
    FeatureMatrix test;
};

// Stratified 70/20/10 split; every split size and per-split class count lands
// within one row of the exact proportion.
SplitSet split_70_20_10(const FeatureMatrix& features, std::uint64_t seed);

// One-hot rows for BCE, passthrough integer classes for cross entropy.
std::variant<Tensor2, std::vector<int>> encode_labels(std::span<const int> labels,
                                                      nn::LossKind loss);

struct SyntheticOptions {
    int points_per_flight = 60;
    double dt_seconds = 10.0;
    // Cumulative per-step lat/lon falsification applied to attack rows.
    double drift_step_deg = 0.0025;
    // Multiplicative velocity bias on attack rows; the only per-row signal.
    double attack_velocity_bias = 1.25;
};

// Deterministic trajectory generator: smooth normal flights plus drift and
// merge style anomalies. Intended for pipeline testing, not benchmarking.
std::vector<FlightRecord> generate_synthetic(std::size_t n_normal, std::size_t n_attack,
                                             std::uint64_t seed,
                                             const SyntheticOptions& options = {});

} // namespace qadsb::data
