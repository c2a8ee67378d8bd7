#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "macsic/experiment.hpp"
#include "macsic/version.hpp"

namespace {

struct Args {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
};

int run(const std::string& command, const Args& args) {
    nlohmann::json doc;
    {
        std::ifstream in(args.config_path);
        if (!in) {
            std::cerr << "macsic: cannot read config file " << args.config_path
                      << '\n';
            return 2;
        }
        try {
            in >> doc;
        } catch (const nlohmann::json::parse_error& e) {
            std::cerr << "macsic: config parse error: " << e.what() << '\n';
            return 2;
        }
    }
    try {
        macsic::ExperimentConfig config = macsic::parse_experiment_config(doc);
        if (config.command != command) {
            std::cerr << "macsic: config command '" << config.command
                      << "' does not match subcommand '" << command << "'\n";
            return 2;
        }
        config.out_dir = args.out_dir;
        config.seed_overridden = args.seed_given;
        if (args.seed_given) config.seed = args.seed;
        config.threads = args.threads > 0
                             ? args.threads
                             : static_cast<int>(std::max(
                                   1u, std::thread::hardware_concurrency()));
        const macsic::ExperimentOutput out = macsic::run_experiment(config);
        for (const auto& line : out.summary_lines) std::cout << line << '\n';
        std::cout << "wrote " << out.csv_path.string() << '\n';
        return 0;
    } catch (const macsic::config_error& e) {
        std::cerr << "macsic: " << e.what() << '\n';
        return 2;
    } catch (const macsic::envelope_error& e) {
        std::cerr << "macsic: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "macsic: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Iterative soft-cancellation analysis toolkit"};
    app.set_version_flag("--version", std::string("macsic ") + macsic::kVersion);
    app.require_subcommand(1);

    Args args;
    const std::vector<std::string> commands{"pe-curve",  "evolve",
                                            "optimize",  "tradeoff",
                                            "simulate",  "validate-marcum"};
    for (const auto& name : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", args.config_path, "JSON config file")
            ->required();
        sub->add_option("--out", args.out_dir, "output directory")->required();
        sub->add_option("--seed", args.seed, "seed override")
            ->each([&args](const std::string&) { args.seed_given = true; });
        sub->add_option("--threads", args.threads, "worker thread count");
    }

    CLI11_PARSE(app, argc, argv);
    return run(app.get_subcommands().front()->get_name(), args);
}
