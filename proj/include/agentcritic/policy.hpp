#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "agentcritic/experience.hpp"

namespace agentcritic {

struct PolicyContext {
    Task task;
    std::vector<std::pair<EnvState, ActionText>> history; // oldest first
    EnvState current;
    // Request identifiers, not part of the rendered prompt. Mock backends
    // derive their per-call randomness from them.
    std::uint64_t episode = 0;
    std::uint32_t step = 0;
};

// Keeps the most recent `window` (state, action) pairs.
PolicyContext build_context(const Task& task, std::span<const std::pair<EnvState, ActionText>> history,
                            const EnvState& current, std::size_t window = kDefaultHistoryWindow);

// Fixed prompt format: task line, then alternating State/Action lines, then the current state.
std::string render_context(const PolicyContext& ctx);

enum class CandidateOrigin { sampled_valid, mapped };

std::string_view to_string(CandidateOrigin o);

struct Candidate {
    ActionText text;
    double log_likelihood = 0.0; // <= 0
    CandidateOrigin origin = CandidateOrigin::sampled_valid;
};

struct SamplingParams {
    std::size_t k = 5;
    double temperature = 1.0;
    double top_p = 0.95;
};

// Drops repeated texts keeping the highest likelihood, then orders by
// likelihood (descending) and text.
std::vector<Candidate> merge_candidates(std::vector<Candidate> cands);

class Policy {
public:
    virtual ~Policy() = default;

    virtual std::vector<Candidate> sample_candidates(const PolicyContext& ctx, const SamplingParams& params,
                                                     std::uint64_t seed) const = 0;
    virtual double score_text(const PolicyContext& ctx, const ActionText& text) const = 0;
};

struct MockEntry {
    std::string text;
    double log_likelihood;
};

// mock_table_key(task, state) -> candidate likelihoods, plus an optional
// scripted wrong action per key used to inject errors.
struct MockTable {
    std::unordered_map<std::string, std::vector<MockEntry>> entries;
    std::unordered_map<std::string, std::string> wrong_action;
};

std::string mock_table_key(const Task& task, const EnvState& state);

struct MockConfig {
    // Probability that the scripted wrong action is promoted to the top.
    double error_rate = 0.0;
    double promoted_log_likelihood = -0.15;
    double unknown_floor = -20.0;
    std::uint64_t seed = 0;
};

// Table-driven sampler: temperature, nucleus filter, then K draws without
// replacement. Deterministic in (seed, episode, step).
class MockPolicy final : public Policy {
public:
    explicit MockPolicy(MockTable table, MockConfig cfg = {});

    std::vector<Candidate> sample_candidates(const PolicyContext& ctx, const SamplingParams& params,
                                             std::uint64_t seed) const override;
    double score_text(const PolicyContext& ctx, const ActionText& text) const override;

    // Entries for the context's state after any error injection.
    std::vector<MockEntry> effective_entries(const PolicyContext& ctx) const;
    bool error_injected(const PolicyContext& ctx) const;

    const MockConfig& config() const noexcept { return cfg_; }

private:
    MockTable table_;
    MockConfig cfg_;
};

struct RemoteOptions {
    std::chrono::milliseconds timeout{10000};
    int retries = 2;
};

// HTTP adapter:
//   POST /candidates {context, k, temperature, top_p} -> {candidates: [{text, logprob[, tokens]}]}
//   POST /score {context, text} -> {logprob[, tokens]}
// When a response reports a token count the likelihood is length-normalized.
class RemotePolicy final : public Policy {
public:
    RemotePolicy(std::string base_url, RemoteOptions opts = {});

    std::vector<Candidate> sample_candidates(const PolicyContext& ctx, const SamplingParams& params,
                                             std::uint64_t seed) const override;
    double score_text(const PolicyContext& ctx, const ActionText& text) const override;

private:
    std::string base_url_;
    RemoteOptions opts_;
};

} // namespace agentcritic
