#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "agentcritic/agent.hpp"
#include "agentcritic/critic.hpp"

namespace agentcritic::cli {

// Everything a command needs. The config file is a JSON object with the same
// keys as to_json writes; command-line flags override file values.
struct RunConfig {
    std::string env = "lab3"; // spec file or fixture name
    std::string policy = "mock"; // "mock" or a base URL
    std::optional<std::string> critic;
    std::optional<std::string> data; // trajectory file for train (default <out>/trajectories.jsonl)
    std::optional<std::string> embedder; // base URL of a sentence encoder; trigram embedder when absent
    std::uint64_t seed = 0;
    std::string out = "out";
    std::size_t jobs = 1;

    RescoreConfig rescore;
    IqlConfig iql;

    // collect
    std::string behavior = "epsilon_greedy";
    double epsilon = 0.3;
    std::size_t collect_episodes = 500;

    // run / eval
    std::size_t episodes = 200;
    std::size_t max_steps = 100;
    double temperature = 1.0;
    double top_p = 0.95;
    double mock_error_rate = 0.4;

    void validate() const;
};

std::string to_json(const RunConfig& cfg);
RunConfig config_from_json(std::string_view text);
RunConfig load_config(const std::string& path);
// FNV-1a over the canonical JSON form, 16 hex digits.
std::string config_hash(const RunConfig& cfg);

int exit_code_for(const std::exception& e);

// Entry point behind the agentcritic executable. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace agentcritic::cli
