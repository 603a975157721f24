// Command line front end: training runs, evaluations, experiments, server.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "taa/error.hpp"
#include "taa/harness.hpp"
#include "taa/service.hpp"

using namespace taa;

namespace {

ExperimentConfig base_config(const std::string& file) {
    return file.empty() ? ExperimentConfig{} : load_experiment_config(file);
}

std::vector<double> parse_csv(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error(ErrorKind::parse, "not a number: '" + item + "'");
        }
    }
    return out;
}

Snapshot read_snapshot(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::invalid_config, "cannot open snapshot " + file);
    try {
        return snapshot_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, "snapshot " + file + ": " + e.what());
    }
}

void emit(const nlohmann::json& j, const std::string& out_dir, const std::string& name) {
    std::cout << j.dump(2) << '\n';
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    std::ofstream(std::filesystem::path(out_dir) / name) << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Teachable autotelic agent: training, evaluation and tutoring service"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

    // run
    auto* run = app.add_subcommand("run", "train one agent and write metrics");
    std::string run_config, run_out;
    std::optional<std::uint64_t> run_seed;
    std::optional<int> run_episodes;
    run->add_option("--config", run_config, "ExperimentConfig JSON")->check(CLI::ExistingFile);
    run->add_option("--seed", run_seed, "override the config seed");
    run->add_option("--episodes", run_episodes, "override the episode count");
    run->add_option("--out", run_out, "output directory")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate trained snapshots");
    std::string setup = "transition", eval_out;
    std::vector<std::string> snapshots;
    int attempts = 1, expressions = 500, seq_len = 20, sequences = 20, trials = 5;
    std::uint64_t eval_seed = 0;
    eval->add_option("--setup", setup)->check(CLI::IsMember({"transition", "expression", "sequence"}));
    eval->add_option("--snapshot", snapshots, "snapshot.json (repeatable for sequence)")->required();
    eval->add_option("--attempts", attempts)->check(CLI::Range(1, 100));
    eval->add_option("--seed", eval_seed);
    eval->add_option("--trials", trials, "transition trials per sentence");
    eval->add_option("--expressions", expressions);
    eval->add_option("--length", seq_len, "sequence length");
    eval->add_option("--sequences", sequences, "sequences per agent");
    eval->add_option("--out", eval_out, "directory for eval.csv");

    // sweep-beta
    auto* sweep = app.add_subcommand("sweep-beta", "episodes to full discovery across social rates");
    std::string sweep_config, betas = "0,0.1,0.2,0.5,0.8,1", sweep_out;
    int sweep_seeds = 10;
    sweep->add_option("--config", sweep_config)->check(CLI::ExistingFile);
    sweep->add_option("--betas", betas);
    sweep->add_option("--seeds", sweep_seeds)->check(CLI::PositiveNumber);
    sweep->add_option("--out", sweep_out);

    // ablate-scene
    auto* ablate = app.add_subcommand("ablate-scene", "first stacking discoveries per scene strategy");
    std::string ablate_config, ablate_out;
    int ablate_seeds = 20;
    ablate->add_option("--config", ablate_config)->check(CLI::ExistingFile);
    ablate->add_option("--seeds", ablate_seeds)->check(CLI::PositiveNumber);
    ablate->add_option("--out", ablate_out);

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "bisect competence so transition(1) lands in a band");
    std::string cal_config, cal_out;
    int cal_seeds = 10;
    double cal_lo = 0.85, cal_hi = 0.93;
    cal->add_option("--config", cal_config)->check(CLI::ExistingFile);
    cal->add_option("--seeds", cal_seeds)->check(CLI::PositiveNumber);
    cal->add_option("--lo", cal_lo);
    cal->add_option("--hi", cal_hi);
    cal->add_option("--out", cal_out);

    // serve
    auto* serve = app.add_subcommand("serve", "HTTP + WebSocket tutoring service");
    std::optional<unsigned short> port;
    std::string address = "0.0.0.0";
    serve->add_option("--port", port, "overrides TAA_PORT (default 8080)");
    serve->add_option("--address", address);

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*run) {
            auto cfg = base_config(run_config);
            if (run_seed) cfg.seed = *run_seed;
            if (run_episodes) cfg.episodes = *run_episodes;
            cfg.output = run_out;
            cfg.validate();
            const auto result = run_training(cfg);
            std::cout << summary_json(result).dump(2) << '\n';
        } else if (*eval) {
            std::vector<Snapshot> agents;
            for (const auto& f : snapshots) agents.push_back(read_snapshot(f));
            EvalResult r;
            if (setup == "transition") {
                r = eval_transition(agents.front(), attempts, eval_seed, trials);
            } else if (setup == "expression") {
                r = eval_expression(agents.front(), attempts, eval_seed, expressions);
            } else {
                r = eval_sequence(agents, eval_seed, seq_len, sequences, attempts);
            }
            std::cout << nlohmann::json{{"setup", setup}, {"attempts", attempts}, {"rate", r.rate},
                                        {"stderr", r.stderr_}, {"trials", r.trials}}
                             .dump(2)
                      << '\n';
            if (!eval_out.empty()) {
                std::filesystem::create_directories(eval_out);
                write_eval_csv(std::filesystem::path(eval_out) / "eval.csv", {{setup, attempts}}, {r});
            }
        } else if (*sweep) {
            const auto rows = sweep_beta(base_config(sweep_config), parse_csv(betas), sweep_seeds);
            nlohmann::json j = nlohmann::json::array();
            for (const auto& row : rows) j.push_back(to_json(row));
            emit(j, sweep_out, "sweep_beta.json");
        } else if (*ablate) {
            const auto rows = ablation_scene_setting(
                base_config(ablate_config), {SceneIntervention::random_scatter(), SceneIntervention::pre_stacked(2)},
                ablate_seeds);
            nlohmann::json j = nlohmann::json::array();
            for (const auto& row : rows) j.push_back(to_json(row));
            emit(j, ablate_out, "ablation.json");
        } else if (*cal) {
            const auto c = calibrate(base_config(cal_config), cal_seeds, cal_lo, cal_hi);
            emit({{"competence", to_json(c.competence)}, {"transition1", c.transition1}, {"iterations", c.iterations}},
                 cal_out, "calibration.json");
        } else if (*serve) {
            unsigned short p = 8080;
            if (const char* env = std::getenv("TAA_PORT")) p = static_cast<unsigned short>(std::stoi(env));
            if (port) p = *port;
            run_server(address, p);
        }
    } catch (const Error& e) {
        spdlog::error("{}: {}", to_string(e.kind()), e.what());
        return 2;
    }
    return 0;
}
