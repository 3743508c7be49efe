#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "attrib/io.hpp"
#include "attrib/runner.hpp"
#include "test_util.hpp"

using namespace attrib;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    fs::path dir;
    ExperimentConfig cfg;

    ~Fixture() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

Fixture make_fixture(const std::string& name, std::size_t inputs = 3) {
    Fixture f;
    f.dir = fs::temp_directory_path() / ("attrib_runner_" + name);
    fs::remove_all(f.dir);
    fs::create_directories(f.dir);

    Rng rng(2023);
    std::map<std::string, Tensor> weights;
    weights.emplace("w", random_tensor({2, 45 * 45}, rng, -0.02, 0.02));
    weights.emplace("b", random_tensor({2}, rng, -0.1, 0.1));
    const Model model({1, 45, 45},
                      {LayerDesc::flatten("f"), LayerDesc::dense("fc", 45 * 45, 2, "w", "b")},
                      std::move(weights));
    model.save(f.dir / "model.json");

    for (std::size_t i = 0; i < inputs; ++i) {
        write_tensor(f.dir / ("img" + std::to_string(i) + ".tsr"),
                     random_tensor({1, 45, 45}, rng, 0.0, 1.0));
        f.cfg.input_paths.push_back(f.dir / ("img" + std::to_string(i) + ".tsr"));
    }

    f.cfg.model_path = f.dir / "model.json";
    MethodSpec ig;
    ig.name = "ig-zero";
    ig.steps = 4;
    MethodSpec st;
    st.name = "smoothtaylor";
    st.sigma = 0.3;
    st.count = 5;
    f.cfg.methods = {ig, st};
    f.cfg.perturbation = PerturbEvalConfig{5, 3, 3, 0};
    f.cfg.seed = 42;
    f.cfg.output_dir = f.dir / "out";
    f.cfg.input_value_range = ValueRange::uniform(0.0f, 1.0f);
    f.cfg.score_kind = ScoreKind::probability;
    return f;
}

std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
    std::map<std::string, std::string> bytes;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) bytes[e.path().lexically_relative(dir).string()] = read_file(e.path());
    return bytes;
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("attribute writes one map + sidecar + pgm per (input, method)") {
    const Fixture f = make_fixture("attribute");
    const auto files = cmd_attribute(f.cfg);
    // 3 inputs x 2 methods x 3 files + run report
    CHECK(files.size() == 3 * 2 * 3 + 1);
    std::size_t tsr = 0, pgm = 0, json = 0;
    for (const auto& p : files) {
        if (p.extension() == ".tsr") ++tsr;
        if (p.extension() == ".pgm") ++pgm;
        if (p.extension() == ".json") ++json;
        CHECK(fs::exists(p));
    }
    CHECK(tsr == 6);
    CHECK(pgm == 6);
    CHECK(json == 7);  // 6 sidecars + run report

    // sidecar carries method, seed, model hash, prng id
    const std::string sidecar = read_file(f.cfg.output_dir / "000_img0__ig-zero[M=4].json");
    CHECK(sidecar.find("\"method\": \"ig\"") != std::string::npos);
    CHECK(sidecar.find("model_hash") != std::string::npos);
    CHECK(sidecar.find(kPrngId) != std::string::npos);
}

TEST_CASE("attribute reruns are byte-identical") {
    const Fixture f = make_fixture("determinism");
    cmd_attribute(f.cfg);
    const auto first = snapshot_dir(f.cfg.output_dir);
    cmd_attribute(f.cfg);
    const auto second = snapshot_dir(f.cfg.output_dir);
    REQUIRE(first.size() == second.size());
    for (const auto& [name, bytes] : first) {
        INFO("file: ", name);
        CHECK(bytes == second.at(name));
    }
}

TEST_CASE("attribute reports missing model and empty methods") {
    Fixture f = make_fixture("missing");
    f.cfg.model_path = f.dir / "nope.json";
    try {
        cmd_attribute(f.cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
        CHECK(std::string(e.what()).find("nope.json") != std::string::npos);
    }
    f.cfg.model_path = f.dir / "model.json";
    f.cfg.methods.clear();
    CHECK_THROWS_AS(cmd_attribute(f.cfg), Error);
}

TEST_CASE("evaluate emits curves with the right row counts and exact means") {
    const Fixture f = make_fixture("evaluate");
    cmd_evaluate(f.cfg);

    // perturbation curves have L+1 data rows, TV curves one per pyramid level (45 -> 30)
    const std::string curve = read_file(f.cfg.output_dir / "000_img0__ig-zero[M=4]__perturbation.csv");
    CHECK(count_lines(curve) == 1 + (f.cfg.perturbation.steps + 1));
    const std::string tv = read_file(f.cfg.output_dir / "000_img0__ig-zero[M=4]__tv.csv");
    CHECK(count_lines(tv) == 1 + 2);

    // aggregated means equal the hand-average of the per-image rows
    std::istringstream metrics(read_file(f.cfg.output_dir / "metrics.csv"));
    std::string line;
    std::getline(metrics, line);  // header
    std::map<std::string, std::pair<double, double>> sums;
    std::map<std::string, std::size_t> counts;
    while (std::getline(metrics, line)) {
        if (line.empty()) continue;
        // fields: image, method, params(quoted), aupc, autvc — parse from the right
        const auto last = line.rfind(',');
        const auto prev = line.rfind(',', last - 1);
        const std::string key = line.substr(line.find(',') + 1, prev - line.find(',') - 1);
        sums[key].first += std::stod(line.substr(prev + 1, last - prev - 1));
        sums[key].second += std::stod(line.substr(last + 1));
        counts[key] += 1;
    }
    CHECK(sums.size() == 2);

    std::istringstream summary(read_file(f.cfg.output_dir / "summary.csv"));
    std::getline(summary, line);
    while (std::getline(summary, line)) {
        if (line.empty()) continue;
        const auto last = line.rfind(',');
        const auto prev = line.rfind(',', last - 1);
        const std::string key = line.substr(0, prev);
        const double mean_aupc = std::stod(line.substr(prev + 1, last - prev - 1));
        const double mean_autvc = std::stod(line.substr(last + 1));
        REQUIRE(counts.count(key));
        const double n = static_cast<double>(counts[key]);
        CHECK(mean_aupc == doctest::Approx(sums[key].first / n).epsilon(1e-9));
        CHECK(mean_autvc == doctest::Approx(sums[key].second / n).epsilon(1e-9));
    }
}

TEST_CASE("report rebuilds the summary from metrics rows") {
    const Fixture f = make_fixture("report");
    cmd_evaluate(f.cfg);
    const std::string direct = read_file(f.cfg.output_dir / "summary.csv");

    ExperimentConfig rc = f.cfg;
    rc.report_inputs = {f.cfg.output_dir / "metrics.csv"};
    rc.output_dir = f.dir / "out2";
    cmd_report(rc);
    CHECK(read_file(rc.output_dir / "summary.csv") == direct);

    rc.report_inputs = {f.dir / "missing.csv"};
    CHECK_THROWS_AS(cmd_report(rc), Error);
}

TEST_CASE("adaptive emits traces bounded by i_max and keeps the best-seen guarantee") {
    Fixture f = make_fixture("adaptive", 2);
    AdaptiveConfig ac;
    ac.max_iterations = 3;
    ac.roots = 4;
    ac.objective = AdaptiveObjective::autvc;
    f.cfg.adaptive = ac;
    cmd_adaptive(f.cfg);

    for (int i = 0; i < 2; ++i) {
        const std::string trace =
            read_file(f.cfg.output_dir / ("00" + std::to_string(i) + "_img" + std::to_string(i) +
                                          "__adaptive_trace.csv"));
        CHECK(count_lines(trace) <= 1 + ac.max_iterations);
    }

    std::istringstream summary(read_file(f.cfg.output_dir / "adaptive_summary.csv"));
    std::string line;
    std::getline(summary, line);
    std::size_t rows = 0;
    while (std::getline(summary, line)) {
        if (line.empty()) continue;
        ++rows;
        // columns: image_id, objective, roots, initial_sigma, initial_auc, best_sigma, best_auc
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        REQUIRE(fields.size() == 7);
        CHECK(std::stod(fields[6]) <= std::stod(fields[4]) + 1e-12);  // best_auc <= initial_auc
        CHECK(std::stod(fields[5]) > 0.0);                            // sigma* positive
    }
    CHECK(rows == 2);

    f.cfg.adaptive.reset();
    CHECK_THROWS_AS(cmd_adaptive(f.cfg), Error);
}

TEST_CASE("gradcheck command reports per-layer PASS rows") {
    Fixture f = make_fixture("gradcheck", 1);
    f.cfg.gradcheck.samples = 2;
    std::string text;
    const GradCheckReport report = cmd_gradcheck(f.cfg, &text);
    CHECK(report.pass);
    CHECK(text.find("PASS") != std::string::npos);
    CHECK(text.find("dense") != std::string::npos);
    CHECK(fs::exists(f.cfg.output_dir / "gradcheck.csv"));

    f.cfg.gradcheck.samples = 0;
    CHECK_THROWS_AS(cmd_gradcheck(f.cfg, nullptr), Error);
}

TEST_CASE("config files parse with validation") {
    const fs::path dir = fs::temp_directory_path() / "attrib_config_test";
    fs::create_directories(dir);

    write_file_atomic(dir / "good.json", std::string(R"({
        "schema": "attrib-config/1",
        "model": "model.json",
        "inputs": ["a.tsr", "b.tsr"],
        "methods": [
            {"name": "ig-noise", "steps": 50, "baselines": 5},
            {"name": "smoothtaylor", "sigma": 0.5, "roots": 150}
        ],
        "eval": {"perturbation": {"kernel": 15, "steps": 30, "samples": 50},
                 "tv": {"min_dim": 30}},
        "adaptive": {"objective": "aupc", "roots": 100},
        "seed": 7,
        "output_dir": "results",
        "input_value_range": [0.0, 1.0],
        "score_kind": "logit"
    })"));
    const ExperimentConfig cfg = load_config(dir / "good.json");
    CHECK(cfg.seed == 7);
    CHECK(cfg.methods.size() == 2);
    CHECK(cfg.methods[0].baselines == 5);
    CHECK(cfg.methods[1].tag() == "smoothtaylor[sigma=0.5,R=150]");
    CHECK(cfg.adaptive.has_value());
    CHECK(cfg.adaptive->objective == AdaptiveObjective::aupc);
    CHECK(cfg.adaptive->max_iterations == 20);  // paper defaults fill the gaps
    CHECK(cfg.adaptive->learning_rate == 0.1);
    CHECK(cfg.score_kind == ScoreKind::logit);
    CHECK(cfg.perturbation.kernel == 15);

    // same config + same seed -> same hash; different seed -> different hash
    ExperimentConfig other = load_config(dir / "good.json");
    CHECK(other.config_hash() == cfg.config_hash());
    other.seed = 8;
    CHECK(other.config_hash() != cfg.config_hash());

    write_file_atomic(dir / "noseed.json",
                      std::string(R"({"schema": "attrib-config/1", "model": "m.json"})"));
    CHECK_THROWS_AS(load_config(dir / "noseed.json"), Error);

    write_file_atomic(dir / "badmethod.json", std::string(R"({
        "schema": "attrib-config/1", "seed": 1,
        "methods": [{"name": "smoothtaylor", "sigma": 0.5}]
    })"));
    CHECK_THROWS_AS(load_config(dir / "badmethod.json"), Error);  // missing roots

    write_file_atomic(dir / "unknown.json", std::string(R"({
        "schema": "attrib-config/1", "seed": 1, "methods": [{"name": "lrp"}]
    })"));
    CHECK_THROWS_AS(load_config(dir / "unknown.json"), Error);

    CHECK_THROWS_AS(load_config(dir / "does_not_exist.json"), Error);
    fs::remove_all(dir);
}
