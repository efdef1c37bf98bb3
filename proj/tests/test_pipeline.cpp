#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "qadsb/pipeline.hpp"

using namespace qadsb;
using pipeline::ExperimentConfig;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / ("qadsb_pipetest_" + name);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.dataset = "synthetic";
    cfg.model = nn::ModelKind::Fnn;
    cfg.attack_samples = 60;
    cfg.ratio = 2.0;
    cfg.qubits = 2;
    cfg.layers = 1;
    cfg.epochs = 2;
    cfg.batch_size = 32;
    cfg.seed = 7;
    return cfg;
}

json report_without_timings(const pipeline::RunReport& report) {
    json j = report.to_json();
    j.erase("timings");
    return j;
}

} // namespace

TEST_CASE("config json round trip and validation") {
    ExperimentConfig cfg = small_config();
    const json j = cfg.to_json();
    const ExperimentConfig back = ExperimentConfig::from_json(j);
    CHECK(back.to_json() == j);

    CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"bogus_key", 1}}), ConfigError);

    ExperimentConfig bad = cfg;
    bad.dataset = "/no/such/file.csv";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.qubits = 13;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.ratio = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    // overlay keeps base values for absent keys
    const ExperimentConfig merged =
        ExperimentConfig::from_json(json{{"epochs", 9}}, cfg);
    CHECK(merged.epochs == 9);
    CHECK(merged.attack_samples == cfg.attack_samples);
}

TEST_CASE("run_train on the synthetic dataset produces a full report") {
    const auto report = pipeline::run_train(small_config());

    CHECK(report.history.size() == 2);
    CHECK(report.kept_features ==
          std::vector<std::string>{"time", "lat", "lon", "velocity", "heading",
                                   "geoaltitude"});
    CHECK(report.dropped_features ==
          std::vector<std::string>{"icao24", "baroaltitude"});
    CHECK(report.train_rows + report.val_rows + report.test_rows == 180);
    CHECK(report.test_confusion.total() == static_cast<std::int64_t>(report.test_rows));
    CHECK(report.test_metrics.accuracy >= 0.0);
    CHECK(report.test_metrics.accuracy <= 1.0);

    const json j = report.to_json();
    CHECK(j.at("config").at("seed") == 7);
    CHECK(j.at("test").at("averaging") == "positive_class");
}

TEST_CASE("identical configs give bit-identical reports") {
    const auto a = pipeline::run_train(small_config());
    const auto b = pipeline::run_train(small_config());
    CHECK(report_without_timings(a).dump() == report_without_timings(b).dump());
}

TEST_CASE("checkpoint round trip and eval consistency") {
    TempDir dir("ckpt");
    ExperimentConfig cfg = small_config();
    cfg.out_dir = (dir.path / "run").string();
    const auto trained = pipeline::run_train(cfg);
    REQUIRE(!trained.checkpoint_path.empty());
    REQUIRE(fs::exists(trained.checkpoint_path));
    REQUIRE(fs::exists(trained.report_path));

    SUBCASE("checkpoint file is byte-stable across load/save") {
        std::ifstream in(trained.checkpoint_path);
        const json loaded = json::parse(in);
        const std::string once = loaded.dump(2) + "\n";
        const json reloaded = json::parse(once);
        CHECK(reloaded.dump(2) + "\n" == once);
        // params survive exactly
        CHECK(loaded.at("params").at("input").at("w").at("data") ==
              reloaded.at("params").at("input").at("w").at("data"));
    }

    SUBCASE("eval right after train reproduces the test metrics") {
        const auto eval = pipeline::run_eval(trained.checkpoint_path, "", std::nullopt,
                                             std::nullopt, "");
        CHECK(eval.test_confusion.tp == trained.test_confusion.tp);
        CHECK(eval.test_confusion.tn == trained.test_confusion.tn);
        CHECK(eval.test_confusion.fp == trained.test_confusion.fp);
        CHECK(eval.test_confusion.fn == trained.test_confusion.fn);
        CHECK(eval.test_metrics.accuracy == trained.test_metrics.accuracy);
        CHECK(eval.test_metrics.f1 == trained.test_metrics.f1);
    }

    SUBCASE("a different eval seed re-rolls the split") {
        const auto eval = pipeline::run_eval(trained.checkpoint_path, "", 12345,
                                             std::nullopt, "");
        CHECK(eval.test_rows == trained.test_rows);
        // not asserting different metrics (they can collide), but the run works
        CHECK(eval.test_confusion.total() == static_cast<std::int64_t>(eval.test_rows));
    }

    SUBCASE("kind assertion is enforced") {
        CHECK_THROWS_WITH_AS(pipeline::run_eval(trained.checkpoint_path, "", std::nullopt,
                                                nn::ModelKind::Hfqnn, ""),
                             doctest::Contains("fnn"), ConfigError);
        CHECK_NOTHROW(pipeline::run_eval(trained.checkpoint_path, "", std::nullopt,
                                         nn::ModelKind::Fnn, ""));
    }

    SUBCASE("incompatible version is refused") {
        std::ifstream in(trained.checkpoint_path);
        json tampered = json::parse(in);
        in.close();
        tampered["format_version"] = 2;
        const auto bad = (dir.path / "bad_version.json").string();
        std::ofstream out(bad);
        out << tampered.dump();
        out.close();
        CHECK_THROWS_WITH_AS(pipeline::run_eval(bad, "", std::nullopt, std::nullopt, ""),
                             doctest::Contains("version"), ConfigError);
    }

    SUBCASE("feature mismatch names both counts") {
        std::ifstream in(trained.checkpoint_path);
        json tampered = json::parse(in);
        in.close();
        tampered["feature_names"].push_back("bogus_feature");
        tampered["standardizer"]["mean"].push_back(0.0);
        tampered["standardizer"]["std"].push_back(1.0);
        const auto bad = (dir.path / "bad_features.json").string();
        std::ofstream out(bad);
        out << tampered.dump();
        out.close();
        CHECK_THROWS_WITH_AS(pipeline::run_eval(bad, "", std::nullopt, std::nullopt, ""),
                             doctest::Contains("7"), ShapeError);
    }
}

TEST_CASE("split cache reproduces the uncached run") {
    TempDir dir("cache");
    ExperimentConfig cfg = small_config();
    const auto plain = pipeline::run_train(cfg);

    cfg.split_cache_dir = (dir.path / "cache").string();
    const auto cold = pipeline::run_train(cfg); // writes the cache
    const auto warm = pipeline::run_train(cfg); // reads it back

    bool found_cache_file = false;
    for (const auto& entry : fs::directory_iterator(cfg.split_cache_dir)) {
        found_cache_file |= entry.path().extension() == ".json";
    }
    CHECK(found_cache_file);

    auto strip = [](const pipeline::RunReport& r) {
        json j = report_without_timings(r);
        j["config"].erase("split_cache_dir");
        return j.dump();
    };
    CHECK(strip(cold) == strip(warm));
    CHECK(strip(cold) == strip(plain));
}

TEST_CASE("grid runner") {
    TempDir dir("grid");

    SUBCASE("two-axis grid in canonical order") {
        const auto spec_path = (dir.path / "grid.json").string();
        {
            std::ofstream out(spec_path);
            out << R"({
              "axes": {"model": ["fnn", "hfqnn"], "attack_samples": [40, 60]},
              "base": {"epochs": 1, "qubits": 2, "layers": 1, "batch_size": 32}
            })";
        }
        ExperimentConfig base = small_config();
        base.out_dir = (dir.path / "out").string();
        const auto result = pipeline::run_grid(spec_path, base);
        REQUIRE(result.cells.size() == 4);
        CHECK(result.all_ok);
        CHECK(result.cells[0].config.model == nn::ModelKind::Fnn);
        CHECK(result.cells[0].config.attack_samples == 40);
        CHECK(result.cells[1].config.attack_samples == 60);
        CHECK(result.cells[2].config.model == nn::ModelKind::Hfqnn);
        // derived cell seeds differ
        CHECK(result.cells[0].config.seed != result.cells[1].config.seed);

        CHECK(result.table.find("Model") != std::string::npos);
        CHECK(result.table.find("fnn") != std::string::npos);
        CHECK(result.table.find("hfqnn") != std::string::npos);
        CHECK(fs::exists(fs::path(base.out_dir) / "grid_table.txt"));
        CHECK(fs::exists(fs::path(base.out_dir) / "grid_results.json"));
        CHECK(fs::exists(fs::path(base.out_dir) / "series_attack_samples.csv"));
    }

    SUBCASE("explicit seed axis is honored and aggregated") {
        const auto spec_path = (dir.path / "seeds.json").string();
        {
            std::ofstream out(spec_path);
            out << R"({"axes": {"seed": [3, 4]},
                       "base": {"epochs": 1, "qubits": 2, "layers": 1,
                                "model": "fnn", "attack_samples": 40}})";
        }
        const auto result = pipeline::run_grid(spec_path, small_config());
        REQUIRE(result.cells.size() == 2);
        CHECK(result.cells[0].config.seed == 3);
        CHECK(result.cells[1].config.seed == 4);
        CHECK(result.table.find("Seed aggregates") != std::string::npos);
    }

    SUBCASE("bad specs are rejected") {
        const auto empty_axis = (dir.path / "empty.json").string();
        {
            std::ofstream out(empty_axis);
            out << R"({"axes": {"qubits": []}})";
        }
        CHECK_THROWS_AS(pipeline::run_grid(empty_axis, small_config()), ConfigError);

        const auto unknown_axis = (dir.path / "unknown.json").string();
        {
            std::ofstream out(unknown_axis);
            out << R"({"axes": {"flux": [1]}})";
        }
        CHECK_THROWS_AS(pipeline::run_grid(unknown_axis, small_config()), ConfigError);

        const auto no_axes = (dir.path / "noaxes.json").string();
        {
            std::ofstream out(no_axes);
            out << R"({"base": {"epochs": 1}})";
        }
        CHECK_THROWS_AS(pipeline::run_grid(no_axes, small_config()), ConfigError);
    }

    SUBCASE("cell failures are recorded and the grid continues") {
        const auto spec_path = (dir.path / "fail.json").string();
        {
            // second cell demands more attack rows than the synthetic pool of
            // the first axis value provides? attack pool always scales, so use
            // an invalid qubit count to force a config failure instead.
            std::ofstream out(spec_path);
            out << R"({"axes": {"qubits": [2, 13]},
                       "base": {"epochs": 1, "model": "fnn", "attack_samples": 40,
                                "layers": 1}})";
        }
        const auto result = pipeline::run_grid(spec_path, small_config());
        REQUIRE(result.cells.size() == 2);
        CHECK_FALSE(result.all_ok);
        CHECK(result.cells[0].error.empty());
        CHECK_FALSE(result.cells[1].error.empty());
        CHECK(result.cells[1].error_category == 1);
        CHECK(result.table.find("FAILED") != std::string::npos);
    }
}

TEST_CASE("stage names surface in pipeline errors") {
    // 2 + 2 sampled rows are too few to split, so the split stage must fail.
    ExperimentConfig cfg = small_config();
    cfg.attack_samples = 2;
    cfg.ratio = 1.0;
    CHECK_THROWS_WITH_AS(pipeline::run_train(cfg), doctest::Contains("stage split"),
                         DataError);
}
