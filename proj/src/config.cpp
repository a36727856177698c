#include "chaosgen/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace chaosgen {

using nlohmann::json;

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&problems] {
          std::ostringstream msg;
          msg << "invalid configuration:";
          for (const auto& p : problems) msg << "\n  - " << p;
          return msg.str();
      }()),
      problems_(std::move(problems)) {}

namespace {

// pulls a field if present and of the right type, otherwise records a problem
template <typename T>
bool fetch(const json& j, const char* key, T& out, std::vector<std::string>& problems,
           bool required) {
    if (!j.contains(key)) {
        if (required) problems.push_back(std::string("missing field: ") + key);
        return false;
    }
    try {
        out = j.at(key).get<T>();
        return true;
    } catch (const json::exception&) {
        problems.push_back(std::string("field has wrong type: ") + key);
        return false;
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("JSON parse error: ") + e.what()});
    }

    RunConfig cfg;
    std::vector<std::string> problems;

    fetch(j, "architecture", cfg.architecture, problems, true);
    const bool arch_known = cfg.architecture == "unrestricted" ||
                            cfg.architecture == "restricted" || cfg.architecture == "deep";
    if (!cfg.architecture.empty() && !arch_known)
        problems.push_back("architecture must be one of: unrestricted, restricted, deep");

    if (j.contains("dimensions") && j.at("dimensions").is_object()) {
        const json& d = j.at("dimensions");
        fetch(d, "n_v", cfg.n_v, problems, true);
        if (cfg.architecture == "restricted") fetch(d, "n_h", cfg.n_h, problems, true);
        if (cfg.architecture == "deep") {
            fetch(d, "n_h1", cfg.n_h1, problems, true);
            fetch(d, "n_h2", cfg.n_h2, problems, true);
        }
    } else {
        problems.push_back("missing object: dimensions");
    }
    if (cfg.n_v < 1) problems.push_back("dimensions.n_v must be >= 1");
    if (cfg.architecture == "restricted" && cfg.n_h < 1)
        problems.push_back("dimensions.n_h must be >= 1");
    if (cfg.architecture == "deep" && (cfg.n_h1 < 1 || cfg.n_h2 < 1))
        problems.push_back("dimensions.n_h1 and n_h2 must be >= 1");

    fetch(j, "g", cfg.g, problems, true);
    if (cfg.g < 0.0) problems.push_back("g must be >= 0");

    if (j.contains("sim") && j.at("sim").is_object()) {
        const json& s = j.at("sim");
        fetch(s, "dt", cfg.sim.dt, problems, true);
        fetch(s, "tau", cfg.sim.tau, problems, true);
        fetch(s, "t_target", cfg.sim.t_target, problems, true);
        try {
            cfg.sim.validate();
        } catch (const std::invalid_argument& e) {
            problems.push_back(e.what());
        }
    } else {
        problems.push_back("missing object: sim");
    }

    if (j.contains("train") && j.at("train").is_object()) {
        const json& t = j.at("train");
        fetch(t, "k", cfg.k, problems, true);
        fetch(t, "m_batch", cfg.m_batch, problems, true);
        fetch(t, "epochs", cfg.epochs, problems, true);
        fetch(t, "eval_every", cfg.eval_every, problems, false);
        fetch(t, "checkpoint_every", cfg.checkpoint_every, problems, false);
        fetch(t, "n_eval", cfg.n_eval, problems, false);
        if (cfg.k <= 0.0) problems.push_back("train.k must be > 0");
        if (cfg.m_batch < 1) problems.push_back("train.m_batch must be >= 1");
        if (cfg.epochs < 0) problems.push_back("train.epochs must be >= 0");
        if (cfg.eval_every < 0) problems.push_back("train.eval_every must be >= 0");
        if (cfg.checkpoint_every < 0) problems.push_back("train.checkpoint_every must be >= 0");
    } else {
        problems.push_back("missing object: train");
    }

    if (j.contains("data") && j.at("data").is_object()) {
        const json& d = j.at("data");
        const bool has_images = d.contains("images");
        const bool has_synth = d.contains("synthetic");
        if (has_images == has_synth) {
            problems.push_back("data must specify exactly one of: images, synthetic");
        } else if (has_images) {
            fetch(d, "images", cfg.data.images_path, problems, true);
            fetch(d, "labels", cfg.data.labels_path, problems, false);
            if (!cfg.data.images_path.empty() &&
                !std::filesystem::exists(cfg.data.images_path))
                problems.push_back("data.images path does not exist: " + cfg.data.images_path);
            if (!cfg.data.labels_path.empty() &&
                !std::filesystem::exists(cfg.data.labels_path))
                problems.push_back("data.labels path does not exist: " + cfg.data.labels_path);
        } else {
            const json& s = d.at("synthetic");
            if (!s.is_object()) {
                problems.push_back("data.synthetic must be an object");
            } else {
                fetch(s, "kind", cfg.data.synthetic_kind, problems, true);
                fetch(s, "n_s", cfg.data.synthetic_n_s, problems, true);
                fetch(s, "noise", cfg.data.synthetic_noise, problems, false);
                if (!cfg.data.synthetic_kind.empty()) {
                    try {
                        parse_synthetic_kind(cfg.data.synthetic_kind);
                    } catch (const std::invalid_argument& e) {
                        problems.push_back(e.what());
                    }
                }
                if (cfg.data.synthetic_n_s < 1)
                    problems.push_back("data.synthetic.n_s must be >= 1");
            }
        }
    } else {
        problems.push_back("missing object: data");
    }

    fetch(j, "seed", cfg.seed, problems, true);
    fetch(j, "output_dir", cfg.output_dir, problems, true);
    fetch(j, "threads", cfg.threads, problems, false);
    if (cfg.threads < 1) problems.push_back("threads must be >= 1");
    if (cfg.output_dir.empty()) problems.push_back("output_dir must not be empty");

    if (cfg.m_batch >= 1 && cfg.data.synthetic_n_s >= 1 && cfg.m_batch > cfg.data.synthetic_n_s)
        problems.push_back("train.m_batch exceeds data.synthetic.n_s");

    if (!problems.empty()) throw ConfigError(std::move(problems));
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file: " + path});
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

ModelParams make_params(const RunConfig& cfg) {
    if (cfg.architecture == "unrestricted") return init_unrestricted(cfg.n_v, cfg.g, cfg.seed);
    if (cfg.architecture == "restricted")
        return init_restricted(cfg.n_v, cfg.n_h, cfg.g, cfg.seed);
    return init_deep(cfg.n_v, cfg.n_h1, cfg.n_h2, cfg.g, cfg.seed);
}

TrainConfig make_train_config(const RunConfig& cfg) {
    TrainConfig t;
    t.k = cfg.k;
    t.m_batch = cfg.m_batch;
    t.epochs = cfg.epochs;
    t.sim = cfg.sim;
    t.eval_every = cfg.eval_every;
    t.checkpoint_every = cfg.checkpoint_every;
    t.seed = cfg.seed;
    t.n_threads = cfg.threads;
    t.n_eval = cfg.n_eval;
    return t;
}

Dataset load_dataset(const RunConfig& cfg) {
    if (!cfg.data.images_path.empty())
        return load_idx(cfg.data.images_path, cfg.data.labels_path);
    return synthetic_dataset(parse_synthetic_kind(cfg.data.synthetic_kind),
                             cfg.data.synthetic_n_s, cfg.n_v, cfg.seed,
                             cfg.data.synthetic_noise);
}

}  // namespace chaosgen
