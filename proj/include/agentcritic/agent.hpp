#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agentcritic/critic.hpp"
#include "agentcritic/environment.hpp"
#include "agentcritic/error.hpp"
#include "agentcritic/grounding.hpp"
#include "agentcritic/policy.hpp"

namespace agentcritic {

struct RescoreConfig {
    double b = 0.6;
    double d = 0.95;
    std::size_t k = 5;
    // Constant weight for every step, t = 0 included.
    std::optional<double> static_alpha;

    void validate() const;
};

// "dense" (d 0.97, b 0.6), "medium" (0.95, 0.6), "short" (0.9, 0.5).
RescoreConfig rescore_preset(std::string_view name);

// Min-max to [0, 1]; all-equal input maps to 0.5 everywhere.
std::vector<double> normalize_scores(std::span<const double> values);

// max(b, d^t), with d^0 = 1.
double alpha_schedule(std::size_t t, double b, double d);
double step_alpha(const RescoreConfig& cfg, std::size_t t);

struct ScoredAction {
    ActionText action;
    CandidateOrigin origin = CandidateOrigin::sampled_valid;
    double p_raw = 0.0;
    double p_norm = 0.0;
    double q_raw = 0.0;
    double q_norm = 0.0;
    double combined = 0.0;
};

struct Selection {
    std::size_t index = 0;
    double alpha = 1.0;
    std::vector<ScoredAction> scored; // action/origin left for the caller
};

// Highest combined score; ties go to higher p_norm, then lower index.
Selection select_action(std::span<const double> p_raw, std::span<const double> q_raw, std::size_t t,
                        const RescoreConfig& cfg);

struct EpisodeStep {
    std::size_t t = 0;
    double alpha = 1.0;
    std::vector<ScoredAction> candidates;
    ActionText chosen;
    double reward = 0.0; // normalized
    std::vector<std::string> warnings;
};

enum class EpisodeStatus { done, truncated, step_limit, failed };
std::string_view to_string(EpisodeStatus s);

struct EpisodeRecord {
    Task task;
    std::uint64_t seed = 0;
    std::vector<EpisodeStep> steps;
    double final_score = 0.0;
    bool success = false;
    EpisodeStatus status = EpisodeStatus::done;
    std::string error; // set when status is failed
    std::optional<ErrorKind> error_kind;
    double wall_ms = 0.0;

    std::size_t step_count() const noexcept { return steps.size(); }
};

struct EpisodeOptions {
    SamplingParams sampling;
    std::size_t max_steps = 100;
    std::size_t history_window = kDefaultHistoryWindow;
    const Embedder* embedder = nullptr; // built-in trigram embedder when null
};

// Without a critic every q is 0.5, so the choice follows the policy alone.
EpisodeRecord run_episode(TextEnvironment& env, const Policy& policy, const ActionScorer* critic,
                          const RescoreConfig& cfg, std::uint64_t seed, const EpisodeOptions& opts = {});

using EnvFactory = std::function<std::unique_ptr<TextEnvironment>(std::size_t episode)>;

// Episode i uses seed first_seed + i. Runs on up to `jobs` threads; results keep episode order.
std::vector<EpisodeRecord> run_episodes(const EnvFactory& make_env, const Policy& policy, const ActionScorer* critic,
                                        const RescoreConfig& cfg, std::uint64_t first_seed, std::size_t n,
                                        const EpisodeOptions& opts = {}, std::size_t jobs = 1);

struct Metrics {
    std::size_t n_episodes = 0;
    double average_score = 0.0; // AS
    double success_rate = 0.0;  // SR, percent
    double mean_steps = 0.0;
};

Metrics compute_metrics(std::span<const EpisodeRecord> records);

// One JSON object per executed step, newline-terminated.
std::string audit_lines(const EpisodeRecord& record);
std::string episode_summary_json(const EpisodeRecord& record);

} // namespace agentcritic
