#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaosgen/dataio.hpp"
#include "chaosgen/dynamics.hpp"
#include "chaosgen/training.hpp"

namespace chaosgen {

// All validation problems with a config, reported together.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct DataSpec {
    std::string images_path;   // IDX files, or
    std::string labels_path;
    std::string synthetic_kind;  // synthetic descriptor
    int synthetic_n_s = 0;
    double synthetic_noise = 0.1;
};

struct RunConfig {
    std::string architecture;  // unrestricted | restricted | deep
    int n_v = 0, n_h = 0, n_h1 = 0, n_h2 = 0;
    double g = 0.0;
    SimConfig sim;
    double k = 0.0;
    int m_batch = 0;
    long epochs = 0;
    long eval_every = 0;
    long checkpoint_every = 0;
    int n_eval = 0;
    DataSpec data;
    std::uint64_t seed = 0;
    std::string output_dir;
    int threads = 1;
};

// Parses and fully validates; throws ConfigError listing every problem.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);

ModelParams make_params(const RunConfig& cfg);
TrainConfig make_train_config(const RunConfig& cfg);
Dataset load_dataset(const RunConfig& cfg);

}  // namespace chaosgen
