#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tubeplan/commands.hpp"
#include "tubeplan/errors.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out = "out";
    std::optional<uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "experiment config (JSON)")->required();
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--seed", args.seed, "seed override for this command");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learned dynamic-tube planning toolkit"};
    app.require_subcommand(1);

    CommonArgs datagen_args, train_args, sweep_args, run_args, compare_args;
    auto* datagen = app.add_subcommand("datagen", "generate a rollout dataset");
    add_common(datagen, datagen_args);
    auto* train = app.add_subcommand("train", "train a tube model");
    add_common(train, train_args);
    auto* sweep = app.add_subcommand("sweep", "history-length sweep");
    add_common(sweep, sweep_args);
    auto* run = app.add_subcommand("run", "closed-loop run on a scenario");
    add_common(run, run_args);
    auto* compare = app.add_subcommand("compare", "compare tube modes on a scenario");
    add_common(compare, compare_args);

    CLI11_PARSE(app, argc, argv);

    using namespace tubeplan;
    auto dispatch = [&](const CommonArgs& args, auto&& fn) -> int {
        try {
            auto root = cli::load_config_file(args.config);
            auto base = std::filesystem::absolute(args.config).parent_path();
            return fn(root, base, std::filesystem::path(args.out), args.seed);
        } catch (const ValidationError& e) {
            std::fprintf(stderr, "validation error: %s\n", e.what());
            return cli::kExitValidation;
        } catch (const SolverError& e) {
            std::fprintf(stderr, "solver error: %s\n", e.what());
            return cli::kExitSolver;
        } catch (const IoError& e) {
            std::fprintf(stderr, "io error: %s\n", e.what());
            return cli::kExitIo;
        } catch (const Error& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return cli::kExitValidation;
        }
    };

    if (datagen->parsed())
        return dispatch(datagen_args, [](auto& r, auto& b, auto o, auto s) {
            cli::cmd_datagen(r, b, o, s);
            return cli::kExitOk;
        });
    if (train->parsed())
        return dispatch(train_args, [](auto& r, auto& b, auto o, auto s) {
            cli::cmd_train(r, b, o, s);
            return cli::kExitOk;
        });
    if (sweep->parsed())
        return dispatch(sweep_args, [](auto& r, auto& b, auto o, auto s) {
            cli::cmd_sweep(r, b, o, s);
            return cli::kExitOk;
        });
    if (run->parsed())
        return dispatch(run_args, [](auto& r, auto& b, auto o, auto s) {
            return cli::cmd_run(r, b, o, s).exit_code;
        });
    if (compare->parsed())
        return dispatch(compare_args, [](auto& r, auto& b, auto o, auto s) {
            cli::cmd_compare(r, b, o, s);
            return cli::kExitOk;
        });
    return cli::kExitValidation;
}
