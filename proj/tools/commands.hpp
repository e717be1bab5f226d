#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "advrl/serialization.hpp"

namespace advrl::cli {

enum ExitCode : int { ok = 0, validation = 2, cap_exceeded = 3, solver_failure = 4 };

struct Globals {
    std::filesystem::path out_dir = ".";
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;
    std::filesystem::path base_dir = ".";  // relative paths in the config resolve here
};

// Each command takes the raw config, fills in defaults, runs, writes its
// artifacts under out_dir and returns the exit code. The resolved config is
// embedded in every output file.
int cmd_gen(Json config, const Globals& g, std::ostream& log);
int cmd_discover(Json config, const Globals& g, std::ostream& log);
int cmd_certify(Json config, const Globals& g, std::ostream& log);
int cmd_adapt(Json config, const Globals& g, std::ostream& log);
int cmd_attack(Json config, const Globals& g, std::ostream& log);
int cmd_eval(Json config, const Globals& g, std::ostream& log);

/// Resolves the "instance" block: a file path, {"family": ...}, or an inline document.
Instance load_instance(const Json& spec, const std::filesystem::path& base_dir);

/// Maps the current exception onto an exit code and prints it.
int report_exception(std::ostream& log);

int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace advrl::cli
