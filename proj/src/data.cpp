#include "qadsb/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "qadsb/rng.hpp"

namespace qadsb::data {

namespace {

constexpr double kDegPerMeterLat = 1.0 / 111320.0;

std::string normalize_header(std::string s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '_' || c == ' ' || c == '-' || c == '"' || c == '\r') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '"' && c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    for (std::string& f : fields) {
        const auto a = f.find_first_not_of(" \t");
        const auto b = f.find_last_not_of(" \t");
        f = (a == std::string::npos) ? std::string{} : f.substr(a, b - a + 1);
    }
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

struct ColumnMap {
    int time = -1, icao24 = -1, lat = -1, lon = -1, velocity = -1, heading = -1,
        baroaltitude = -1, geoaltitude = -1, label = -1;
};

const std::vector<std::pair<std::string, std::vector<std::string>>>& column_aliases() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> aliases = {
        {"time", {"time", "timestamp", "unixtime"}},
        {"icao24", {"icao24", "icao"}},
        {"lat", {"lat", "latitude"}},
        {"lon", {"lon", "long", "lng", "longitude"}},
        {"velocity", {"velocity", "speed", "groundspeed"}},
        {"heading", {"heading", "track", "course"}},
        {"baroaltitude", {"baroaltitude", "baroalt", "barometricaltitude"}},
        {"geoaltitude", {"geoaltitude", "geoalt", "geometricaltitude"}},
        {"label", {"label", "class", "anomaly", "attack"}},
    };
    return aliases;
}

ColumnMap map_header(const std::vector<std::string>& header) {
    std::map<std::string, int> found;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = normalize_header(header[i]);
        for (const auto& [canonical, names] : column_aliases()) {
            if (std::find(names.begin(), names.end(), name) != names.end()) {
                found.emplace(canonical, static_cast<int>(i));
            }
        }
    }
    std::vector<std::string> missing;
    for (const auto& [canonical, names] : column_aliases()) {
        if (!found.count(canonical)) missing.push_back(canonical);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw SchemaError("missing required columns: " + list);
    }
    ColumnMap map;
    map.time = found["time"];
    map.icao24 = found["icao24"];
    map.lat = found["lat"];
    map.lon = found["lon"];
    map.velocity = found["velocity"];
    map.heading = found["heading"];
    map.baroaltitude = found["baroaltitude"];
    map.geoaltitude = found["geoaltitude"];
    map.label = found["label"];
    return map;
}

FeatureMatrix matrix_from_rows(const FeatureMatrix& src, std::span<const std::size_t> rows) {
    FeatureMatrix out;
    out.feature_names = src.feature_names;
    out.values = Tensor2(rows.size(), src.values.cols);
    out.labels.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy(src.values.row(rows[r]).begin(), src.values.row(rows[r]).end(),
                  out.values.row(r).begin());
        out.labels[r] = src.labels[rows[r]];
    }
    return out;
}

std::array<std::size_t, 3> largest_remainder_split(std::size_t n) {
    constexpr std::array<double, 3> props = {0.7, 0.2, 0.1};
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
        const double exact = props[s] * static_cast<double>(n);
        counts[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        frac[s] = exact - static_cast<double>(counts[s]);
        assigned += counts[s];
    }
    std::array<int, 3> idx = {0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (frac[a] != frac[b]) return frac[a] > frac[b];
        return a < b;
    });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) counts[idx[k % 3]] += 1;
    return counts;
}

} // namespace

LoadResult load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty dataset file: " + path);
    const ColumnMap cols = map_header(split_csv_line(line));

    LoadResult result;
    const auto field_count = split_csv_line(line).size();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != field_count) {
            ++result.skipped_rows;
            continue;
        }
        FlightRecord rec;
        double label_value = 0.0;
        const bool ok = parse_double(fields[cols.time], rec.time) &&
                        parse_double(fields[cols.lat], rec.lat) &&
                        parse_double(fields[cols.lon], rec.lon) &&
                        parse_double(fields[cols.velocity], rec.velocity) &&
                        parse_double(fields[cols.heading], rec.heading) &&
                        parse_double(fields[cols.baroaltitude], rec.baroaltitude) &&
                        parse_double(fields[cols.geoaltitude], rec.geoaltitude) &&
                        parse_double(fields[cols.label], label_value) &&
                        (label_value == 0.0 || label_value == 1.0);
        if (!ok) {
            ++result.skipped_rows;
            continue;
        }
        rec.icao24 = fields[cols.icao24];
        rec.label = static_cast<int>(label_value);
        result.records.push_back(std::move(rec));
    }
    if (result.records.empty()) {
        throw DataError("dataset contains no usable rows: " + path +
                        " (skipped " + std::to_string(result.skipped_rows) + ")");
    }
    if (result.skipped_rows > 0) {
        std::cerr << "warning: skipped " << result.skipped_rows << " malformed rows in " << path
                  << "\n";
    }
    return result;
}

FeatureMatrix to_feature_matrix(std::span<const FlightRecord> records) {
    FeatureMatrix fm;
    fm.feature_names = {"time", "icao24", "lat",         "lon",
                        "velocity", "heading", "geoaltitude", "baroaltitude"};
    fm.values = Tensor2(records.size(), fm.feature_names.size());
    fm.labels.resize(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        const FlightRecord& rec = records[r];
        char* end = nullptr;
        const double icao = static_cast<double>(std::strtoull(rec.icao24.c_str(), &end, 16));
        fm.values(r, 0) = rec.time;
        fm.values(r, 1) = (end != rec.icao24.c_str()) ? icao : 0.0;
        fm.values(r, 2) = rec.lat;
        fm.values(r, 3) = rec.lon;
        fm.values(r, 4) = rec.velocity;
        fm.values(r, 5) = rec.heading;
        fm.values(r, 6) = rec.geoaltitude;
        fm.values(r, 7) = rec.baroaltitude;
        fm.labels[r] = rec.label;
    }
    return fm;
}

Tensor2 correlation_matrix(const FeatureMatrix& features) {
    const std::size_t n = features.n_rows();
    const std::size_t f = features.n_features();
    if (n < 2) throw DataError("correlation needs at least 2 rows, got " + std::to_string(n));

    std::vector<double> mean(f, 0.0), sd(f, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
        for (std::size_t i = 0; i < n; ++i) mean[j] += features.values(i, j);
        mean[j] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = features.values(i, j) - mean[j];
            sd[j] += d * d;
        }
        sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
    }

    Tensor2 corr(f, f);
    for (std::size_t a = 0; a < f; ++a) {
        corr(a, a) = 1.0;
        for (std::size_t b = a + 1; b < f; ++b) {
            double value = 0.0;
            if (sd[a] > 0.0 && sd[b] > 0.0) {
                double cov = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    cov += (features.values(i, a) - mean[a]) * (features.values(i, b) - mean[b]);
                }
                cov /= static_cast<double>(n);
                value = cov / (sd[a] * sd[b]);
            }
            corr(a, b) = value;
            corr(b, a) = value;
        }
    }
    return corr;
}

FeatureSelection select_features(const FeatureMatrix& features, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw ConfigError("correlation threshold must be in (0, 1], got " +
                          std::to_string(threshold));
    }

    FeatureSelection sel;
    // icao24 goes first, independent of correlations.
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < features.n_features(); ++j) {
        if (features.feature_names[j] == "icao24") {
            sel.dropped.push_back("icao24");
        } else {
            candidates.push_back(j);
        }
    }
    if (candidates.empty()) throw ConfigError("feature selection dropped every column");

    FeatureMatrix reduced;
    reduced.values = Tensor2(features.n_rows(), candidates.size());
    reduced.labels = features.labels;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        reduced.feature_names.push_back(features.feature_names[candidates[j]]);
        for (std::size_t i = 0; i < features.n_rows(); ++i) {
            reduced.values(i, j) = features.values(i, candidates[j]);
        }
    }

    const Tensor2 corr = correlation_matrix(reduced);
    std::vector<bool> drop(candidates.size(), false);
    for (std::size_t a = 0; a < candidates.size(); ++a) {
        if (drop[a]) continue;
        for (std::size_t b = a + 1; b < candidates.size(); ++b) {
            if (!drop[b] && std::abs(corr(a, b)) >= threshold) drop[b] = true;
        }
    }

    std::vector<std::size_t> kept_cols;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        if (drop[j]) {
            sel.dropped.push_back(reduced.feature_names[j]);
        } else {
            kept_cols.push_back(j);
            sel.kept.push_back(reduced.feature_names[j]);
        }
    }
    if (kept_cols.empty()) throw ConfigError("feature selection dropped every column");

    sel.features.feature_names = sel.kept;
    sel.features.labels = reduced.labels;
    sel.features.values = Tensor2(reduced.n_rows(), kept_cols.size());
    for (std::size_t i = 0; i < reduced.n_rows(); ++i) {
        for (std::size_t j = 0; j < kept_cols.size(); ++j) {
            sel.features.values(i, j) = reduced.values(i, kept_cols[j]);
        }
    }
    return sel;
}

FeatureMatrix sample_stratified(const FeatureMatrix& features, const SamplingPlan& plan) {
    if (plan.n_attack < 1) throw ConfigError("sampling plan needs n_attack >= 1");
    if (!(plan.ratio > 0.0)) throw ConfigError("normal-to-attack ratio must be positive");
    const std::size_t n_normal =
        static_cast<std::size_t>(std::floor(plan.ratio * static_cast<double>(plan.n_attack)));

    std::vector<std::size_t> attack_idx, normal_idx;
    for (std::size_t i = 0; i < features.n_rows(); ++i) {
        (features.labels[i] == 1 ? attack_idx : normal_idx).push_back(i);
    }
    if (attack_idx.size() < plan.n_attack) {
        throw DataError("requested " + std::to_string(plan.n_attack) + " attack rows, only " +
                        std::to_string(attack_idx.size()) + " available");
    }
    if (normal_idx.size() < n_normal) {
        throw DataError("requested " + std::to_string(n_normal) + " normal rows, only " +
                        std::to_string(normal_idx.size()) + " available");
    }

    Rng rng(plan.seed);
    rng.shuffle(attack_idx);
    rng.shuffle(normal_idx);
    std::vector<std::size_t> chosen(attack_idx.begin(),
                                    attack_idx.begin() + static_cast<std::ptrdiff_t>(plan.n_attack));
    chosen.insert(chosen.end(), normal_idx.begin(),
                  normal_idx.begin() + static_cast<std::ptrdiff_t>(n_normal));
    rng.shuffle(chosen);
    return matrix_from_rows(features, chosen);
}

FeatureMatrix sample_stratified(std::span<const FlightRecord> records,
                                const SamplingPlan& plan) {
    return sample_stratified(to_feature_matrix(records), plan);
}

Standardizer Standardizer::fit(const FeatureMatrix& train) {
    if (train.n_rows() == 0) throw DataError("cannot fit standardizer on an empty split");
    Standardizer s;
    const std::size_t f = train.n_features();
    s.mean_.assign(f, 0.0);
    s.std_.assign(f, 1.0);
    for (std::size_t j = 0; j < f; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < train.n_rows(); ++i) m += train.values(i, j);
        m /= static_cast<double>(train.n_rows());
        double var = 0.0;
        for (std::size_t i = 0; i < train.n_rows(); ++i) {
            const double d = train.values(i, j) - m;
            var += d * d;
        }
        var /= static_cast<double>(train.n_rows());
        s.mean_[j] = m;
        if (var > 0.0) {
            s.std_[j] = std::sqrt(var);
        } else {
            s.zero_variance_.push_back(j);
            s.std_[j] = 1.0;
        }
    }
    if (!s.zero_variance_.empty()) {
        std::cerr << "warning: " << s.zero_variance_.size()
                  << " zero-variance feature column(s); std treated as 1\n";
    }
    s.fitted_ = true;
    return s;
}

Standardizer Standardizer::from_stats(std::vector<double> mean, std::vector<double> std_dev) {
    if (mean.size() != std_dev.size()) throw ShapeError("standardizer mean/std size mismatch");
    Standardizer s;
    s.mean_ = std::move(mean);
    s.std_ = std::move(std_dev);
    s.fitted_ = true;
    return s;
}

FeatureMatrix Standardizer::transform(const FeatureMatrix& features) const {
    if (!fitted_) throw StateError("standardizer used before fit");
    if (features.n_features() != mean_.size()) {
        throw ShapeError("standardizer fitted on " + std::to_string(mean_.size()) +
                         " features, got " + std::to_string(features.n_features()));
    }
    FeatureMatrix out = features;
    for (std::size_t i = 0; i < out.n_rows(); ++i)
        for (std::size_t j = 0; j < out.n_features(); ++j)
            out.values(i, j) = (out.values(i, j) - mean_[j]) / std_[j];
    return out;
}

FeatureMatrix Standardizer::inverse(const FeatureMatrix& features) const {
    if (!fitted_) throw StateError("standardizer used before fit");
    if (features.n_features() != mean_.size()) {
        throw ShapeError("standardizer fitted on " + std::to_string(mean_.size()) +
                         " features, got " + std::to_string(features.n_features()));
    }
    FeatureMatrix out = features;
    for (std::size_t i = 0; i < out.n_rows(); ++i)
        for (std::size_t j = 0; j < out.n_features(); ++j)
            out.values(i, j) = out.values(i, j) * std_[j] + mean_[j];
    return out;
}

SplitSet split_70_20_10(const FeatureMatrix& features, std::uint64_t seed) {
    const std::size_t n = features.n_rows();
    if (n < 10) throw DataError("split needs at least 10 rows, got " + std::to_string(n));

    std::vector<std::size_t> class0, class1;
    for (std::size_t i = 0; i < n; ++i) {
        if (features.labels[i] != 0 && features.labels[i] != 1) {
            throw DataError("labels must be 0 or 1");
        }
        (features.labels[i] == 0 ? class0 : class1).push_back(i);
    }
    std::vector<std::vector<std::size_t>> classes;
    for (auto* c : {&class0, &class1}) {
        if (!c->empty()) classes.push_back(std::move(*c));
    }
    for (const auto& c : classes) {
        if (c.size() < 3) {
            throw DataError("a class has only " + std::to_string(c.size()) +
                            " rows; need at least 3 per class");
        }
    }

    const auto totals = largest_remainder_split(n);
    constexpr std::array<double, 3> props = {0.7, 0.2, 0.1};

    // Controlled rounding of the class-by-split allocation table: start from
    // floors, then pick the 0/1 increment matrix matching the row (class) and
    // column (split) deficits that best tracks the exact proportions.
    const std::size_t n_classes = classes.size();
    std::vector<std::array<std::size_t, 3>> alloc(n_classes);
    std::vector<int> row_deficit(n_classes);
    std::array<int, 3> col_deficit{};
    for (int s = 0; s < 3; ++s) col_deficit[s] = static_cast<int>(totals[s]);
    for (std::size_t c = 0; c < n_classes; ++c) {
        int assigned = 0;
        for (int s = 0; s < 3; ++s) {
            alloc[c][s] = static_cast<std::size_t>(
                std::floor(props[s] * static_cast<double>(classes[c].size()) + 1e-9));
            assigned += static_cast<int>(alloc[c][s]);
            col_deficit[s] -= static_cast<int>(alloc[c][s]);
        }
        row_deficit[c] = static_cast<int>(classes[c].size()) - assigned;
    }

    const std::size_t cells = n_classes * 3;
    double best_score = 1e300;
    std::uint32_t best_mask = 0;
    bool found = false;
    for (std::uint32_t mask = 0; mask < (1u << cells); ++mask) {
        std::vector<int> row_sum(n_classes, 0);
        std::array<int, 3> col_sum{};
        for (std::size_t c = 0; c < n_classes; ++c)
            for (int s = 0; s < 3; ++s)
                if (mask & (1u << (c * 3 + s))) {
                    ++row_sum[c];
                    ++col_sum[s];
                }
        bool ok = true;
        for (std::size_t c = 0; c < n_classes && ok; ++c) ok = row_sum[c] == row_deficit[c];
        for (int s = 0; s < 3 && ok; ++s) ok = col_sum[s] == col_deficit[s];
        if (!ok) continue;
        double score = 0.0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double share = static_cast<double>(classes[c].size()) / static_cast<double>(n);
            for (int s = 0; s < 3; ++s) {
                const double target = share * static_cast<double>(totals[s]);
                const double got = static_cast<double>(alloc[c][s]) +
                                   ((mask & (1u << (c * 3 + s))) ? 1.0 : 0.0);
                score = std::max(score, std::abs(got - target));
            }
        }
        if (!found || score < best_score) {
            found = true;
            best_score = score;
            best_mask = mask;
        }
    }
    if (!found) throw DataError("no feasible stratified allocation"); // unreachable
    for (std::size_t c = 0; c < n_classes; ++c)
        for (int s = 0; s < 3; ++s)
            if (best_mask & (1u << (c * 3 + s))) alloc[c][s] += 1;

    Rng rng(seed);
    std::array<std::vector<std::size_t>, 3> split_rows;
    for (std::size_t c = 0; c < n_classes; ++c) {
        rng.shuffle(classes[c]);
        std::size_t cursor = 0;
        for (int s = 0; s < 3; ++s) {
            for (std::size_t k = 0; k < alloc[c][s]; ++k) {
                split_rows[s].push_back(classes[c][cursor++]);
            }
        }
    }
    for (auto& rows : split_rows) rng.shuffle(rows);

    SplitSet out;
    out.train = matrix_from_rows(features, split_rows[0]);
    out.val = matrix_from_rows(features, split_rows[1]);
    out.test = matrix_from_rows(features, split_rows[2]);
    return out;
}

std::variant<Tensor2, std::vector<int>> encode_labels(std::span<const int> labels,
                                                      nn::LossKind loss) {
    for (int y : labels) {
        if (y != 0 && y != 1) throw DataError("class label must be 0 or 1, got " + std::to_string(y));
    }
    if (loss == nn::LossKind::CrossEntropy) {
        return std::vector<int>(labels.begin(), labels.end());
    }
    Tensor2 onehot(labels.size(), 2);
    for (std::size_t i = 0; i < labels.size(); ++i) onehot(i, labels[i]) = 1.0;
    return onehot;
}

namespace {

struct FlightState {
    double lat, lon, heading, velocity, baro;
};

FlightState random_flight_start(Rng& rng) {
    return {rng.uniform(28.0, 52.0), rng.uniform(-115.0, -65.0), rng.uniform(0.0, 360.0),
            rng.uniform(150.0, 280.0), rng.uniform(4000.0, 11000.0)};
}

std::string random_icao(Rng& rng) {
    static const char digits[] = "0123456789abcdef";
    std::string s(6, '0');
    for (char& c : s) c = digits[rng.below(16)];
    return s;
}

void advance(FlightState& f, Rng& rng, double dt) {
    const double rad = f.heading * std::numbers::pi / 180.0;
    const double step = f.velocity * dt * kDegPerMeterLat;
    f.lat += step * std::cos(rad);
    f.lon += step * std::sin(rad) / std::cos(f.lat * std::numbers::pi / 180.0);
    f.heading += rng.uniform(-2.0, 2.0);
    if (f.heading < 0.0) f.heading += 360.0;
    if (f.heading >= 360.0) f.heading -= 360.0;
    f.velocity = std::clamp(f.velocity + rng.uniform(-3.0, 3.0), 120.0, 320.0);
    f.baro = std::clamp(f.baro + rng.uniform(-15.0, 15.0), 1000.0, 13000.0);
}

} // namespace

std::vector<FlightRecord> generate_synthetic(std::size_t n_normal, std::size_t n_attack,
                                             std::uint64_t seed,
                                             const SyntheticOptions& options) {
    Rng rng(seed);
    std::vector<FlightRecord> out;
    out.reserve(n_normal + n_attack);
    const int points = std::max(2, options.points_per_flight);
    double t0 = 1.6e9;
    std::size_t flight_no = 0;

    auto emit_flight = [&](int label, bool merge) {
        const std::string icao = random_icao(rng);
        FlightState a = random_flight_start(rng);
        FlightState b = random_flight_start(rng); // merge partner (unused for normal/drift)
        const double start = t0 + static_cast<double>(flight_no++) * 7200.0;
        double drift_lat = 0.0, drift_lon = 0.0;
        const double drift_bearing = rng.uniform(0.0, 2.0 * std::numbers::pi);
        std::vector<FlightRecord> rows;
        rows.reserve(points);
        for (int k = 0; k < points; ++k) {
            FlightState& src = (merge && k >= points / 2) ? b : a;
            FlightRecord rec;
            rec.time = start + k * options.dt_seconds;
            rec.icao24 = icao;
            rec.lat = src.lat;
            rec.lon = src.lon;
            rec.velocity = src.velocity;
            rec.heading = src.heading;
            rec.baroaltitude = src.baro;
            rec.label = label;
            if (label == 1) {
                drift_lat += options.drift_step_deg * std::cos(drift_bearing);
                drift_lon += options.drift_step_deg * std::sin(drift_bearing);
                rec.lat += drift_lat;
                rec.lon += drift_lon;
                rec.velocity *= options.attack_velocity_bias;
            }
            rec.geoaltitude = rec.baroaltitude + 30.0;
            rows.push_back(std::move(rec));
            advance(a, rng, options.dt_seconds);
            advance(b, rng, options.dt_seconds);
        }
        return rows;
    };

    while (out.size() < n_normal) {
        for (FlightRecord& rec : emit_flight(0, false)) {
            if (out.size() < n_normal) out.push_back(std::move(rec));
        }
    }
    std::size_t attack_emitted = 0;
    std::size_t attack_flights = 0;
    while (attack_emitted < n_attack) {
        const bool merge = (attack_flights++ % 2) == 1;
        for (FlightRecord& rec : emit_flight(1, merge)) {
            if (attack_emitted < n_attack) {
                out.push_back(std::move(rec));
                ++attack_emitted;
            }
        }
    }
    return out;
}

} // namespace qadsb::data
