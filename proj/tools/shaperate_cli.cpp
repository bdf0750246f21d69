#include "shaperate/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"shape-restricted regression experiment runner"};
    app.set_version_flag("--version", SHAPERATE_VERSION);
    app.require_subcommand(1);

    shaperate::RunOptions opts;
    std::int64_t seed = -1;
    CLI::Option* threads_opt = nullptr;

    const std::pair<const char*, const char*> commands[] = {
        {"fit", "isotonic or convex fit of an inline sample"},
        {"simulate", "risk curve over an n grid"},
        {"oracle", "adaptation ratio audit"},
        {"envelope", "localized envelope norms over a delta grid"},
        {"lower-bound", "paired heavy-tail vs gaussian rate probe"}};
    for (auto [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", opts.config_path, "JSON run configuration")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out_dir,
                        "output directory for results.json and CSV tables");
        CLI::Option* t = sub->add_option("--threads", opts.threads, "worker threads (0 = auto)")
                             ->check(CLI::NonNegativeNumber);
        sub->add_option("--seed", seed, "override the config seed")
            ->check(CLI::NonNegativeNumber);
        sub->parse_complete_callback([&opts, sub, t, &threads_opt] {
            opts.expected_command = sub->get_name();
            threads_opt = t;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (threads_opt == nullptr || threads_opt->count() == 0) {
        if (const char* env = std::getenv("SHAPERATE_THREADS")) {
            char* end = nullptr;
            long v = std::strtol(env, &end, 10);
            if (end == env || *end != '\0' || v < 0) {
                std::cerr << "config error: SHAPERATE_THREADS must be a non-negative integer\n";
                return 2;
            }
            opts.threads = static_cast<int>(v);
        }
    }
    if (seed >= 0) opts.seed_override = static_cast<std::uint64_t>(seed);

    std::string message;
    int code = shaperate::run_from_config(opts, message);
    if (code == 0)
        std::cout << message;
    else
        std::cerr << message << "\n";
    return code;
}
