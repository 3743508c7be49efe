#include "attrib/runner.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "attrib/image.hpp"
#include "attrib/io.hpp"
#include "attrib/parallel.hpp"
#include "attrib/rng.hpp"
#include "attrib/saliency.hpp"

using json = nlohmann::ordered_json;

namespace attrib {

namespace {

constexpr std::uint64_t kSeedAttribute = 101;
constexpr std::uint64_t kSeedGame = 102;
constexpr std::uint64_t kSeedAdaptive = 103;

std::string trim_zeros(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

std::string MethodSpec::params() const {
    if (name == "gradient") return "";
    if (name == "ig-zero") return "M=" + std::to_string(steps);
    if (name == "ig-noise") return "M=" + std::to_string(steps) + ",N=" + std::to_string(baselines);
    if (name == "smoothgrad") return "sigma=" + trim_zeros(sigma) + ",N=" + std::to_string(count);
    if (name == "smoothtaylor") return "sigma=" + trim_zeros(sigma) + ",R=" + std::to_string(count);
    return "";
}

std::string MethodSpec::tag() const {
    const std::string p = params();
    return p.empty() ? name : name + "[" + p + "]";
}

namespace {

MethodSpec parse_method(const json& j) {
    MethodSpec m;
    m.name = j.at("name").get<std::string>();
    const auto require = [&](const char* key) {
        if (!j.contains(key))
            throw config_error("method '" + m.name + "' is missing hyperparameter '" + key + "'");
    };
    if (m.name == "gradient") {
        // no hyperparameters
    } else if (m.name == "ig-zero") {
        require("steps");
        m.steps = j["steps"].get<std::size_t>();
    } else if (m.name == "ig-noise") {
        require("steps");
        require("baselines");
        m.steps = j["steps"].get<std::size_t>();
        m.baselines = j["baselines"].get<std::size_t>();
    } else if (m.name == "smoothgrad") {
        require("sigma");
        require("samples");
        m.sigma = j["sigma"].get<double>();
        m.count = j["samples"].get<std::size_t>();
    } else if (m.name == "smoothtaylor") {
        require("sigma");
        require("roots");
        m.sigma = j["sigma"].get<double>();
        m.count = j["roots"].get<std::size_t>();
    } else {
        throw config_error("unknown attribution method: " + m.name);
    }
    return m;
}

json method_to_json(const MethodSpec& m) {
    json j;
    j["name"] = m.name;
    if (m.name == "ig-zero") j["steps"] = m.steps;
    if (m.name == "ig-noise") {
        j["steps"] = m.steps;
        j["baselines"] = m.baselines;
    }
    if (m.name == "smoothgrad") {
        j["sigma"] = m.sigma;
        j["samples"] = m.count;
    }
    if (m.name == "smoothtaylor") {
        j["sigma"] = m.sigma;
        j["roots"] = m.count;
    }
    return j;
}

ValueRange parse_range(const json& j) {
    ValueRange r;
    if (j.is_array() && !j.empty() && j[0].is_array()) {
        for (const json& pair : j)
            r.per_channel.emplace_back(pair.at(0).get<float>(), pair.at(1).get<float>());
    } else if (j.is_array() && j.size() == 2) {
        r.per_channel.emplace_back(j[0].get<float>(), j[1].get<float>());
    } else {
        throw config_error("input_value_range must be [lo, hi] or [[lo, hi], ...]");
    }
    for (const auto& [lo, hi] : r.per_channel)
        if (!(lo < hi)) throw config_error("input_value_range must have lo < hi");
    return r;
}

json range_to_json(const ValueRange& r) {
    json out = json::array();
    for (const auto& [lo, hi] : r.per_channel) out.push_back({lo, hi});
    return out;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw config_error("cannot parse config " + path.string() + ": " + e.what());
    }

    try {
        ExperimentConfig cfg;
        if (j.value("schema", "") != "attrib-config/1")
            throw config_error("config " + path.string() + " missing schema \"attrib-config/1\"");
        const auto base = path.parent_path();
        const auto resolve = [&base](const std::string& p) {
            const std::filesystem::path fp(p);
            return fp.is_absolute() ? fp : base / fp;
        };

        if (j.contains("model")) cfg.model_path = resolve(j["model"].get<std::string>());
        for (const json& in : j.value("inputs", json::array()))
            cfg.input_paths.push_back(resolve(in.get<std::string>()));
        for (const json& mj : j.value("methods", json::array())) cfg.methods.push_back(parse_method(mj));

        if (j.contains("eval")) {
            const json& e = j["eval"];
            if (e.contains("perturbation")) {
                const json& p = e["perturbation"];
                cfg.perturbation.kernel = p.value("kernel", cfg.perturbation.kernel);
                cfg.perturbation.steps = p.value("steps", cfg.perturbation.steps);
                cfg.perturbation.samples = p.value("samples", cfg.perturbation.samples);
            }
            if (e.contains("tv")) {
                const json& t = e["tv"];
                cfg.pyramid.min_dim = t.value("min_dim", cfg.pyramid.min_dim);
                cfg.pyramid.include_final_below_min =
                    t.value("include_final_level", cfg.pyramid.include_final_below_min);
            }
        }
        if (j.contains("adaptive")) {
            const json& a = j["adaptive"];
            AdaptiveConfig ac;
            ac.max_iterations = a.value("max_iterations", ac.max_iterations);
            ac.learning_rate = a.value("learning_rate", ac.learning_rate);
            ac.learning_decay = a.value("learning_decay", ac.learning_decay);
            ac.max_stop_count = a.value("max_stop_count", ac.max_stop_count);
            ac.roots = a.value("roots", ac.roots);
            ac.objective = adaptive_objective_from_name(a.value("objective", "autvc"));
            cfg.adaptive = ac;
        }
        if (j.contains("gradcheck")) {
            cfg.gradcheck.samples = j["gradcheck"].value("samples", cfg.gradcheck.samples);
            cfg.gradcheck.step = j["gradcheck"].value("step", cfg.gradcheck.step);
        }
        if (!j.contains("seed")) throw config_error("config " + path.string() + " must declare a seed");
        cfg.seed = j["seed"].get<std::uint64_t>();
        cfg.output_dir = resolve(j.value("output_dir", "out"));
        if (j.contains("input_value_range")) cfg.input_value_range = parse_range(j["input_value_range"]);
        cfg.score_kind = score_kind_from_name(j.value("score_kind", "probability"));
        if (j.contains("normalization")) {
            cfg.norm_mean = j["normalization"].value("mean", std::vector<double>{});
            cfg.norm_std = j["normalization"].value("std", std::vector<double>{});
        }
        for (const json& p : j.value("attributions", json::array()))
            cfg.attribution_paths.push_back(resolve(p.get<std::string>()));
        for (const json& p : j.value("report_inputs", json::array()))
            cfg.report_inputs.push_back(resolve(p.get<std::string>()));
        cfg.workers = j.value("workers", 0);
        return cfg;
    } catch (const json::exception& e) {
        throw config_error("malformed config " + path.string() + ": " + e.what());
    }
}

namespace {

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema"] = "attrib-config/1";
    j["model"] = cfg.model_path.string();
    j["inputs"] = json::array();
    for (const auto& p : cfg.input_paths) j["inputs"].push_back(p.string());
    j["methods"] = json::array();
    for (const MethodSpec& m : cfg.methods) j["methods"].push_back(method_to_json(m));
    j["eval"] = {{"perturbation",
                  {{"kernel", cfg.perturbation.kernel},
                   {"steps", cfg.perturbation.steps},
                   {"samples", cfg.perturbation.samples}}},
                 {"tv",
                  {{"min_dim", cfg.pyramid.min_dim},
                   {"include_final_level", cfg.pyramid.include_final_below_min}}}};
    if (cfg.adaptive) {
        j["adaptive"] = {{"max_iterations", cfg.adaptive->max_iterations},
                         {"learning_rate", cfg.adaptive->learning_rate},
                         {"learning_decay", cfg.adaptive->learning_decay},
                         {"max_stop_count", cfg.adaptive->max_stop_count},
                         {"objective", adaptive_objective_name(cfg.adaptive->objective)},
                         {"roots", cfg.adaptive->roots}};
    }
    j["gradcheck"] = {{"samples", cfg.gradcheck.samples}, {"step", cfg.gradcheck.step}};
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir.string();
    if (cfg.input_value_range) j["input_value_range"] = range_to_json(*cfg.input_value_range);
    j["score_kind"] = score_kind_name(cfg.score_kind);
    if (!cfg.norm_mean.empty() || !cfg.norm_std.empty())
        j["normalization"] = {{"mean", cfg.norm_mean}, {"std", cfg.norm_std}};
    return j;
}

std::string image_id(const ExperimentConfig& cfg, std::size_t index) {
    std::string idx = std::to_string(index);
    while (idx.size() < 3) idx.insert(idx.begin(), '0');
    return idx + "_" + cfg.input_paths[index].stem().string();
}

Model load_model_checked(const ExperimentConfig& cfg) {
    if (cfg.model_path.empty()) throw config_error("config does not name a model");
    if (!std::filesystem::exists(cfg.model_path))
        throw io_error("model file not found: " + cfg.model_path.string());
    return Model::load(cfg.model_path);
}

ValueRange effective_range(const ExperimentConfig& cfg, const Tensor& x) {
    return cfg.input_value_range ? *cfg.input_value_range : ValueRange::from_input(x);
}

AttributionMap run_method(const Model& model, const Tensor& x, const ScoreTarget& target,
                          const MethodSpec& m, std::uint64_t seed, const ValueRange& range) {
    if (m.name == "gradient") return raw_gradient(model, x, target);
    if (m.name == "ig-zero")
        return integrated_gradients(model, x, Tensor::zeros(x.shape()), target, m.steps);
    if (m.name == "ig-noise") {
        IGConfig ig{m.steps, BaselineKind::uniform_noise, m.baselines, seed};
        return integrated_gradients_noise_avg(model, x, target, ig, range);
    }
    if (m.name == "smoothgrad") {
        const BaseMethod base = [&model, target](const Tensor& p) {
            return raw_gradient(model, p, target);
        };
        return smooth_grad(model, x, target, base, NoiseConfig{m.sigma, m.count, seed});
    }
    if (m.name == "smoothtaylor")
        return smooth_taylor(model, x, target, NoiseConfig{m.sigma, m.count, seed});
    throw config_error("unknown attribution method: " + m.name);
}

void write_run_report(const ExperimentConfig& cfg, const std::string& command,
                      std::vector<std::filesystem::path>& files, const Model* model,
                      json extra = {}) {
    std::sort(files.begin(), files.end());
    json j;
    j["schema"] = "attrib-report/1";
    j["command"] = command;
    j["config_hash"] = hex64(cfg.config_hash());
    j["seed"] = cfg.seed;
    j["prng"] = kPrngId;
    if (model) j["model_hash"] = hex64(model->content_hash());
    for (auto& [key, value] : extra.items()) j[key] = value;
    j["outputs"] = json::array();
    for (const auto& f : files) j["outputs"].push_back(f.filename().string());
    const auto path = cfg.output_dir / (command + "_report.json");
    write_file_atomic(path, j.dump(2) + "\n");
    files.push_back(path);
}

}  // namespace

std::uint64_t ExperimentConfig::config_hash() const {
    const std::string canonical = config_to_json(*this).dump();
    return fnv1a64(canonical.data(), canonical.size());
}

Tensor load_input(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw io_error("input file not found: " + path.string());
    if (path.extension() == ".png")
        return image_to_tensor(load_png(path), cfg.norm_mean, cfg.norm_std);
    return read_tensor(path);
}

std::vector<std::filesystem::path> cmd_attribute(const ExperimentConfig& cfg) {
    const Model model = load_model_checked(cfg);
    if (cfg.methods.empty()) throw config_error("attribute: config lists no methods");
    std::filesystem::create_directories(cfg.output_dir);
    const std::string model_hash = hex64(model.content_hash());

    struct Item {
        std::size_t input, method;
    };
    std::vector<Item> items;
    for (std::size_t i = 0; i < cfg.input_paths.size(); ++i)
        for (std::size_t m = 0; m < cfg.methods.size(); ++m) items.push_back({i, m});

    std::vector<std::vector<std::filesystem::path>> written(items.size());
    parallel_for(items.size(), [&](std::size_t w) {
        const auto [i, m] = items[w];
        const MethodSpec& spec = cfg.methods[m];
        const Tensor x = load_input(cfg, cfg.input_paths[i]);
        const ScoreTarget target{predicted_class(model, x), cfg.score_kind};
        const std::uint64_t seed = Rng::derive_seed(cfg.seed, {kSeedAttribute, i, m});
        const AttributionMap map = run_method(model, x, target, spec, seed, effective_range(cfg, x));

        const std::string base = image_id(cfg, i) + "__" + spec.tag();
        const auto tsr = cfg.output_dir / (base + ".tsr");
        save_attribution(tsr, map, spec.params(), seed, model_hash);
        const auto pgm = cfg.output_dir / (base + ".pgm");
        write_pgm(pgm, to_saliency(map));
        written[w] = {tsr, cfg.output_dir / (base + ".json"), pgm};
    });

    std::vector<std::filesystem::path> files;
    for (const auto& ws : written) files.insert(files.end(), ws.begin(), ws.end());
    write_run_report(cfg, "attribute", files, &model);
    return files;
}

std::vector<std::filesystem::path> cmd_evaluate(const ExperimentConfig& cfg) {
    const Model model = load_model_checked(cfg);
    if (cfg.input_paths.empty()) throw config_error("evaluate: config lists no inputs");
    const bool from_files = !cfg.attribution_paths.empty();
    if (!from_files && cfg.methods.empty())
        throw config_error("evaluate: config needs either methods or attribution files");
    if (from_files && cfg.attribution_paths.size() != cfg.input_paths.size())
        throw config_error("evaluate: attribution file count must match input count");
    std::filesystem::create_directories(cfg.output_dir);

    struct Item {
        std::size_t input, method;  // method == npos in file mode
        std::string method_name, method_params, tag;
    };
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::vector<Item> items;
    for (std::size_t i = 0; i < cfg.input_paths.size(); ++i) {
        if (from_files) {
            const std::string stem = cfg.attribution_paths[i].stem().string();
            items.push_back({i, npos, "file:" + stem, "", "file_" + stem});
        } else {
            for (std::size_t m = 0; m < cfg.methods.size(); ++m)
                items.push_back({i, m, cfg.methods[m].name, cfg.methods[m].params(), cfg.methods[m].tag()});
        }
    }

    struct Row {
        std::string image, method, params;
        double aupc_v = 0.0, autvc_v = 0.0;
    };
    std::vector<Row> rows(items.size());
    std::vector<std::vector<std::filesystem::path>> written(items.size());

    parallel_for(items.size(), [&](std::size_t w) {
        const Item& item = items[w];
        const Tensor x = load_input(cfg, cfg.input_paths[item.input]);
        const ScoreTarget target{predicted_class(model, x), cfg.score_kind};
        const ValueRange range = effective_range(cfg, x);

        AttributionMap map;
        if (item.method == npos) {
            map = AttributionMap{read_tensor(cfg.attribution_paths[item.input]), target, item.tag};
        } else {
            const std::uint64_t seed =
                Rng::derive_seed(cfg.seed, {kSeedAttribute, item.input, item.method});
            map = run_method(model, x, target, cfg.methods[item.method], seed, range);
        }

        PerturbEvalConfig game = cfg.perturbation;
        game.seed = Rng::derive_seed(cfg.seed, {kSeedGame, item.input});
        const PerturbationCurve curve = perturbation_game(model, x, map, target, game, range);
        const TVCurve tv = multiscale_tv_curve(to_saliency(map), cfg.pyramid);

        const std::string base = image_id(cfg, item.input) + "__" + item.tag;
        const auto curve_path = cfg.output_dir / (base + "__perturbation.csv");
        write_perturbation_curve_csv(curve_path, curve);
        const auto tv_path = cfg.output_dir / (base + "__tv.csv");
        write_tv_curve_csv(tv_path, tv);

        rows[w] = Row{image_id(cfg, item.input), item.method_name, item.method_params, aupc(curve),
                      autvc(tv)};
        written[w] = {curve_path, tv_path};
    });

    CsvWriter aupc_csv({"image_id", "method", "params", "aupc"});
    CsvWriter metrics_csv({"image_id", "method", "params", "aupc", "autvc"});
    for (const Row& r : rows) {
        aupc_csv.add_row({r.image, r.method, r.params, format_double(r.aupc_v)});
        metrics_csv.add_row({r.image, r.method, r.params, format_double(r.aupc_v),
                             format_double(r.autvc_v)});
    }
    const auto aupc_path = cfg.output_dir / "aupc.csv";
    aupc_csv.save(aupc_path);
    const auto metrics_path = cfg.output_dir / "metrics.csv";
    metrics_csv.save(metrics_path);

    // Aggregated table in the method x params layout.
    CsvWriter summary({"method", "params", "mean_aupc", "mean_autvc"});
    std::vector<std::pair<std::string, std::string>> order;
    for (const Row& r : rows) {
        const auto key = std::make_pair(r.method, r.params);
        if (std::find(order.begin(), order.end(), key) == order.end()) order.push_back(key);
    }
    for (const auto& [method, params] : order) {
        double sum_aupc = 0.0, sum_autvc = 0.0;
        std::size_t n = 0;
        for (const Row& r : rows)
            if (r.method == method && r.params == params) {
                sum_aupc += r.aupc_v;
                sum_autvc += r.autvc_v;
                ++n;
            }
        summary.add_row({method, params, format_double(sum_aupc / static_cast<double>(n)),
                         format_double(sum_autvc / static_cast<double>(n))});
    }
    const auto summary_path = cfg.output_dir / "summary.csv";
    summary.save(summary_path);

    std::vector<std::filesystem::path> files{aupc_path, metrics_path, summary_path};
    for (const auto& ws : written) files.insert(files.end(), ws.begin(), ws.end());
    write_run_report(cfg, "evaluate", files, &model);
    return files;
}

std::vector<std::filesystem::path> cmd_adaptive(const ExperimentConfig& cfg) {
    if (!cfg.adaptive) throw config_error("adaptive: config has no adaptive section");
    const Model model = load_model_checked(cfg);
    if (cfg.input_paths.empty()) throw config_error("adaptive: config lists no inputs");
    std::filesystem::create_directories(cfg.output_dir);
    const std::string model_hash = hex64(model.content_hash());

    std::vector<AdaptiveTrace> traces(cfg.input_paths.size());
    std::vector<std::vector<std::filesystem::path>> written(cfg.input_paths.size());
    parallel_for(cfg.input_paths.size(), [&](std::size_t i) {
        const Tensor x = load_input(cfg, cfg.input_paths[i]);
        const ScoreTarget target{predicted_class(model, x), cfg.score_kind};
        const ValueRange range = effective_range(cfg, x);

        AdaptiveConfig ac = *cfg.adaptive;
        ac.seed = Rng::derive_seed(cfg.seed, {kSeedAdaptive, i});
        const AdaptiveTrace trace =
            adaptive_noise_search(x, model, target, ac, cfg.perturbation, range, cfg.pyramid);
        traces[i] = trace;

        const std::string id = image_id(cfg, i);
        const auto trace_path = cfg.output_dir / (id + "__adaptive_trace.csv");
        write_trace_csv(trace_path, trace);

        // Tuned map at sigma*.
        const AttributionMap tuned =
            smooth_taylor(model, x, target, NoiseConfig{trace.best_sigma, ac.roots, ac.seed});
        const std::string base =
            id + "__smoothtaylor-adaptive[" + adaptive_objective_name(ac.objective) + "]";
        const auto tsr = cfg.output_dir / (base + ".tsr");
        save_attribution(tsr, tuned,
                         std::string("objective=") + adaptive_objective_name(ac.objective) +
                             ",R=" + std::to_string(ac.roots) + ",sigma*=" + format_double(trace.best_sigma),
                         ac.seed, model_hash);
        const auto pgm = cfg.output_dir / (base + ".pgm");
        write_pgm(pgm, to_saliency(tuned));
        written[i] = {trace_path, tsr, cfg.output_dir / (base + ".json"), pgm};
    });

    CsvWriter summary({"image_id", "objective", "roots", "initial_sigma", "initial_auc",
                       "best_sigma", "best_auc"});
    for (std::size_t i = 0; i < traces.size(); ++i)
        summary.add_row({image_id(cfg, i), adaptive_objective_name(cfg.adaptive->objective),
                         std::to_string(cfg.adaptive->roots), format_double(traces[i].initial_sigma),
                         format_double(traces[i].initial_auc), format_double(traces[i].best_sigma),
                         format_double(traces[i].best_auc)});
    const auto summary_path = cfg.output_dir / "adaptive_summary.csv";
    summary.save(summary_path);

    json results = json::array();
    for (std::size_t i = 0; i < traces.size(); ++i)
        results.push_back({{"image_id", image_id(cfg, i)},
                           {"best_sigma", traces[i].best_sigma},
                           {"best_auc", traces[i].best_auc}});

    std::vector<std::filesystem::path> files{summary_path};
    for (const auto& ws : written) files.insert(files.end(), ws.begin(), ws.end());
    write_run_report(cfg, "adaptive", files, &model, json{{"results", results}});
    return files;
}

GradCheckReport cmd_gradcheck(const ExperimentConfig& cfg, std::string* out_text) {
    const Model model = load_model_checked(cfg);
    if (cfg.gradcheck.samples == 0) throw config_error("gradcheck requires at least 1 sample");
    const GradCheckReport report = gradcheck(model, cfg.gradcheck.samples, cfg.gradcheck.step, cfg.seed);

    std::ostringstream os;
    os << "gradcheck: autodiff vs central finite differences (h=" << cfg.gradcheck.step << ")\n";
    for (const GradCheckRow& r : report.rows) {
        os << "  " << (r.pass ? "PASS" : "FAIL") << "  " << r.layer_type << "  max_rel_err="
           << r.max_rel_err << "  coords=" << r.coords_checked << "  failed=" << r.coords_failed
           << "  kink_skipped=" << r.coords_skipped << "\n";
    }
    os << (report.pass ? "PASS" : "FAIL") << "\n";
    if (out_text) *out_text = os.str();

    std::filesystem::create_directories(cfg.output_dir);
    CsvWriter csv({"layer_type", "max_rel_err", "coords_checked", "coords_failed", "coords_skipped",
                   "status"});
    for (const GradCheckRow& r : report.rows)
        csv.add_row({r.layer_type, format_double(r.max_rel_err), std::to_string(r.coords_checked),
                     std::to_string(r.coords_failed), std::to_string(r.coords_skipped),
                     r.pass ? "PASS" : "FAIL"});
    csv.save(cfg.output_dir / "gradcheck.csv");
    std::vector<std::filesystem::path> files{cfg.output_dir / "gradcheck.csv"};
    write_run_report(cfg, "gradcheck", files, &model);
    return report;
}

namespace {

std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace

std::vector<std::filesystem::path> cmd_report(const ExperimentConfig& cfg) {
    std::vector<std::filesystem::path> sources = cfg.report_inputs;
    if (sources.empty()) sources.push_back(cfg.output_dir / "metrics.csv");

    struct Acc {
        double aupc = 0.0, autvc = 0.0;
        std::size_t n = 0;
    };
    std::vector<std::pair<std::string, std::string>> order;
    std::vector<Acc> accs;
    for (const auto& src : sources) {
        if (!std::filesystem::exists(src)) throw io_error("metrics file not found: " + src.string());
        std::istringstream in(read_file(src));
        std::string line;
        if (!std::getline(in, line)) throw io_error("empty metrics file: " + src.string());
        const auto header = parse_csv_line(line);
        if (header.size() < 5 || header[1] != "method" || header[2] != "params")
            throw config_error("unexpected metrics header in " + src.string());
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto f = parse_csv_line(line);
            if (f.size() != 5) throw config_error("bad metrics row in " + src.string() + ": " + line);
            const auto key = std::make_pair(f[1], f[2]);
            auto it = std::find(order.begin(), order.end(), key);
            std::size_t idx;
            if (it == order.end()) {
                order.push_back(key);
                accs.push_back({});
                idx = order.size() - 1;
            } else {
                idx = static_cast<std::size_t>(it - order.begin());
            }
            accs[idx].aupc += std::stod(f[3]);
            accs[idx].autvc += std::stod(f[4]);
            ++accs[idx].n;
        }
    }
    if (order.empty()) throw config_error("report: no metric rows found");

    std::filesystem::create_directories(cfg.output_dir);
    CsvWriter summary({"method", "params", "mean_aupc", "mean_autvc"});
    for (std::size_t i = 0; i < order.size(); ++i)
        summary.add_row({order[i].first, order[i].second,
                         format_double(accs[i].aupc / static_cast<double>(accs[i].n)),
                         format_double(accs[i].autvc / static_cast<double>(accs[i].n))});
    const auto path = cfg.output_dir / "summary.csv";
    summary.save(path);
    std::vector<std::filesystem::path> files{path};
    write_run_report(cfg, "report", files, nullptr);
    return files;
}

}  // namespace attrib
