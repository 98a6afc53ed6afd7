// SPDX-License-Identifier: Apache-2.0
//
// onebit - channel estimation for massive MIMO with one-bit ADCs
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// onebit command-line front end.
//
//   onebit sweep      MSE per (scheme, L, SNR, trial)
//   onebit crb        CRB floors, the pi/2 ratio and the optimal-design value
//   onebit aq-trace   per-iteration MSE of the adaptive scheme
//   onebit detect-ser SER with one-bit ML detection
//   onebit rate       achievable rate from the detected symbols
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 1 anything else.
// Output goes to --out-dir, else the config's out_dir, else $ONEBIT_OUT_DIR,
// else the working directory.

#include "onebit/experiment.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace
{

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides
{
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::string schemes;
    std::optional<int> threads;
    bool timing = false;
};

// Desk-scale defaults for each subcommand.
onebit::ExperimentConfig defaults_for(const std::string &command)
{
    onebit::ExperimentConfig cfg;
    if (command == "sweep") {
        cfg.L = {32, 64, 96, 128, 160, 192, 224, 256};
    } else if (command == "crb") {
        cfg.L = {16, 32, 64, 128, 256};
        cfg.trials = 20;
    } else if (command == "aq-trace") {
        cfg.schemes = {onebit::Scheme::AQ};
    } else if (command == "detect-ser") {
        cfg.M = 32;
        cfg.K = 4;
        cfg.L = {8, 12, 16, 20, 30, 40};
        cfg.snr_db = {5.0};
        cfg.trials = 50;
        cfg.frames = 2000;
        cfg.schemes = {onebit::Scheme::FQ, onebit::Scheme::RQ, onebit::Scheme::AQ};
    } else if (command == "rate") {
        cfg.M = 32;
        cfg.K = 4;
        cfg.L = {20};
        cfg.snr_db = {5.0};
        cfg.trials = 50;
        cfg.frames = 2000;
        cfg.schemes = {onebit::Scheme::FQ, onebit::Scheme::RQ, onebit::Scheme::AQ};
    }
    return cfg;
}

onebit::ExperimentConfig resolve(const std::string &command, const Overrides &o, std::string &out_dir)
{
    onebit::ExperimentConfig cfg = defaults_for(command);
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) {
            throw onebit::ConfigError("--config", "cannot open " + o.config);
        }
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception &e) {
            throw onebit::ConfigError("--config", e.what());
        }
        onebit::apply_json(cfg, j);
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.trials = *o.trials;
    if (o.threads) cfg.threads = *o.threads;
    if (o.timing) cfg.timing = true;
    if (!o.schemes.empty()) {
        std::vector<std::string> names;
        std::stringstream ss(o.schemes);
        for (std::string item; std::getline(ss, item, ',');) {
            if (!item.empty()) names.push_back(item);
        }
        cfg.schemes = onebit::parse_scheme_list(names);
    }
    cfg.validate();

    out_dir = o.out_dir;
    if (out_dir.empty()) out_dir = cfg.out_dir;
    if (out_dir.empty()) {
        const char *env = std::getenv("ONEBIT_OUT_DIR");
        out_dir = env ? env : ".";
    }
    return cfg;
}

std::ofstream open_output(const std::filesystem::path &path)
{
    std::ofstream os(path);
    if (!os) {
        throw onebit::ConfigError("--out-dir", "cannot write " + path.string());
    }
    return os;
}

void write_json(const std::filesystem::path &path, const nlohmann::ordered_json &j)
{
    open_output(path) << j.dump(2) << '\n';
}

int run(const std::string &command, const Overrides &o)
{
    std::string out;
    const onebit::ExperimentConfig cfg = resolve(command, o, out);
    std::filesystem::create_directories(out);
    const std::filesystem::path dir(out);

    if (command == "sweep" || command == "detect-ser" || command == "rate") {
        const auto rows = command == "sweep" ? onebit::run_sweep(cfg) : onebit::run_detection(cfg);
        auto csv = open_output(dir / (command + ".csv"));
        onebit::write_trials_csv(csv, rows);
        write_json(dir / (command + ".json"), onebit::summary_json(command, cfg, rows, onebit::run_crb(cfg)));
        std::cout << rows.size() << " rows -> " << (dir / (command + ".csv")).string() << '\n';
    } else if (command == "crb") {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["config"] = onebit::to_json(cfg);
        j["cells"] = nlohmann::ordered_json::array();
        for (const auto &c : onebit::run_crb(cfg)) {
            j["cells"].push_back(onebit::to_json(c));
        }
        write_json(dir / "crb.json", j);
        std::cout << j["cells"].size() << " cells -> " << (dir / "crb.json").string() << '\n';
    } else if (command == "aq-trace") {
        const auto rows = onebit::run_aq_trace(cfg);
        auto csv = open_output(dir / "aq-trace.csv");
        onebit::write_aq_trace_csv(csv, rows);
        nlohmann::ordered_json j;
        j["command"] = command;
        j["config"] = onebit::to_json(cfg);
        j["iterations"] = nlohmann::ordered_json::array();
        for (const auto &s : onebit::summarize(rows)) {
            j["iterations"].push_back({{"L", s.L},
                                       {"snr_db", s.snr_db},
                                       {"iteration", s.iteration},
                                       {"median_mse", s.median_mse},
                                       {"mean_mse", s.mean_mse},
                                       {"median_threshold_error", s.median_threshold_error}});
        }
        j["reference"] = nlohmann::ordered_json::array();
        for (const auto &c : onebit::run_crb(cfg)) {
            j["reference"].push_back({{"L", c.L}, {"snr_db", c.snr_db}, {"crb_oq", c.crb_oq}, {"crb_nq", c.crb_nq}});
        }
        write_json(dir / "aq-trace.json", j);
        std::cout << rows.size() << " rows -> " << (dir / "aq-trace.csv").string() << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"One-bit massive MIMO channel estimation experiments"};
    app.require_subcommand(1);

    Overrides o;
    for (const char *name : {"sweep", "crb", "aq-trace", "detect-ser", "rate"}) {
        CLI::App *sub = app.add_subcommand(name);
        sub->add_option("--config", o.config, "JSON run configuration");
        sub->add_option("--out-dir", o.out_dir, "output directory (default $ONEBIT_OUT_DIR or .)");
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--trials", o.trials, "trials per cell");
        sub->add_option("--schemes", o.schemes, "comma-separated subset of FQ,RQ,AQ,OQ,NQ");
        sub->add_option("--threads", o.threads, "worker threads");
        sub->add_flag("--timing", o.timing, "record wall_ms (makes the CSV run-dependent)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        return run(app.get_subcommands().front()->get_name(), o);
    } catch (const onebit::ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const onebit::CapabilityError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const onebit::NumericalError &e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
