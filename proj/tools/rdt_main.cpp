#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rdt/config.hpp"
#include "rdt/session.hpp"

int main(int argc, char** argv) try {
    CLI::App app{"rdtrans: coaxial rolling-diaphragm hydrostatic transmission "
                 "simulator and operator console"};

    rdt::SessionConfig session;
    std::string script_path;
    app.add_option("--config", session.config_path, "key=value configuration file");
    app.add_option("--seed", session.random_seed, "session random seed");
    app.add_option("--script", script_path, "batch command file (one command per line)");
    app.add_option("--log-dir", session.log_directory, "directory for CSV logs");
    app.add_flag("--realtime", session.realtime, "pace simulation ticks on the wall clock");

    CLI11_PARSE(app, argc, argv);

    rdt::Config config = session.config_path.empty()
                             ? rdt::Config{}
                             : rdt::load_config(session.config_path);
    rdt::Session shell(config, session, std::cout);
    if (!script_path.empty()) {
        std::ifstream script(script_path);
        if (!script) {
            std::cerr << "cannot open script '" << script_path << "'\n";
            return 1;
        }
        shell.run_script(script);
    } else {
        shell.repl(std::cin);
    }
    return 0;
} catch (const std::exception& e) {
    std::cerr << "rdtrans: " << e.what() << "\n";
    return 1;
}
