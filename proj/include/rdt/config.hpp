#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "rdt/controller.hpp"
#include "rdt/plant.hpp"
#include "rdt/stiffness.hpp"

namespace rdt {

// Everything tunable in one place, loadable from a flat key-value file.
struct Config {
    TransmissionConfig transmission;
    PlantConfig plant;
    PhasingConfig phasing;
    int bleed_cycles = 5;

    void validate() const;
};

struct SessionConfig {
    std::string config_path;        // empty -> built-in defaults
    std::string log_directory = "logs";
    std::uint64_t random_seed = 1;
    bool realtime = false;          // wall-clock pacing of simulation ticks
};

// Parse "key = value" lines ('#' comments, blank lines ignored). Unknown keys
// are an error so typos do not silently fall back to defaults.
Config load_config(const std::string& path);
Config parse_config(std::istream& in, const std::string& origin);

}  // namespace rdt
