#include "agentcritic/policy.hpp"

#include <algorithm>
#include <cmath>

#include "agentcritic/error.hpp"
#include "agentcritic/http_json.hpp"
#include "agentcritic/rng.hpp"
#include "agentcritic/text.hpp"

namespace agentcritic {

PolicyContext build_context(const Task& task, std::span<const std::pair<EnvState, ActionText>> history,
                            const EnvState& current, std::size_t window) {
    PolicyContext ctx;
    ctx.task = task;
    const std::size_t first = history.size() > window ? history.size() - window : 0;
    ctx.history.assign(history.begin() + std::ptrdiff_t(first), history.end());
    ctx.current = current;
    return ctx;
}

std::string render_context(const PolicyContext& ctx) {
    std::string out = "Task: " + ctx.task.description + "\n";
    for (const auto& [state, action] : ctx.history) {
        out += "State: " + state.text() + "\n";
        out += "Action: " + action.str() + "\n";
    }
    out += "State: " + ctx.current.text() + "\n";
    return out;
}

std::string_view to_string(CandidateOrigin o) { return o == CandidateOrigin::mapped ? "mapped" : "sampled_valid"; }

std::vector<Candidate> merge_candidates(std::vector<Candidate> cands) {
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.log_likelihood != b.log_likelihood) return a.log_likelihood > b.log_likelihood;
        return a.text < b.text;
    });
    std::vector<Candidate> out;
    for (Candidate& c : cands) {
        const bool dup = std::any_of(out.begin(), out.end(), [&](const Candidate& o) { return o.text == c.text; });
        if (!dup) out.push_back(std::move(c));
    }
    return out;
}

// ---- mock -------------------------------------------------------------------

std::string mock_table_key(const Task& task, const EnvState& state) { return task.id + "\n" + state.text(); }

MockPolicy::MockPolicy(MockTable table, MockConfig cfg) : table_(std::move(table)), cfg_(cfg) {
    if (!(cfg_.error_rate >= 0.0 && cfg_.error_rate <= 1.0)) throw ConfigError("mock error_rate must be in [0, 1]");
    for (const auto& [state, entries] : table_.entries)
        for (const MockEntry& e : entries)
            if (!std::isfinite(e.log_likelihood) || e.log_likelihood > 0.0)
                throw InvalidArgument("mock log-likelihoods must be finite and <= 0");
}

bool MockPolicy::error_injected(const PolicyContext& ctx) const {
    if (cfg_.error_rate <= 0.0) return false;
    if (!table_.wrong_action.count(mock_table_key(ctx.task, ctx.current))) return false;
    Rng rng(derive_seed(cfg_.seed ^ 0x5eedf1a3ULL, ctx.episode, ctx.step));
    return rng.uniform() < cfg_.error_rate;
}

std::vector<MockEntry> MockPolicy::effective_entries(const PolicyContext& ctx) const {
    const std::string key = mock_table_key(ctx.task, ctx.current);
    auto it = table_.entries.find(key);
    std::vector<MockEntry> entries = it == table_.entries.end() ? std::vector<MockEntry>{} : it->second;
    if (error_injected(ctx)) {
        const std::string& wrong = table_.wrong_action.at(key);
        auto e = std::find_if(entries.begin(), entries.end(), [&](const MockEntry& m) { return m.text == wrong; });
        if (e == entries.end()) {
            entries.push_back({wrong, cfg_.promoted_log_likelihood});
        } else {
            e->log_likelihood = cfg_.promoted_log_likelihood;
        }
    }
    return entries;
}

std::vector<Candidate> MockPolicy::sample_candidates(const PolicyContext& ctx, const SamplingParams& params,
                                                     std::uint64_t seed) const {
    if (params.k < 1) throw InvalidArgument("K must be >= 1");
    if (!(params.top_p > 0.0 && params.top_p <= 1.0)) throw InvalidArgument("top_p must be in (0, 1]");
    if (!(params.temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
    std::vector<MockEntry> entries = effective_entries(ctx);
    if (entries.empty()) return {};

    std::sort(entries.begin(), entries.end(), [](const MockEntry& a, const MockEntry& b) {
        if (a.log_likelihood != b.log_likelihood) return a.log_likelihood > b.log_likelihood;
        return a.text < b.text;
    });

    std::vector<Candidate> out;
    if (params.temperature == 0.0) {
        for (std::size_t i = 0; i < entries.size() && i < params.k; ++i)
            out.push_back({ActionText(entries[i].text), entries[i].log_likelihood, CandidateOrigin::sampled_valid});
        return merge_candidates(std::move(out));
    }

    // Tempered distribution, then the smallest likelihood-ordered prefix whose mass reaches top_p.
    const double top = entries.front().log_likelihood / params.temperature;
    std::vector<double> w;
    double total = 0.0;
    for (const MockEntry& e : entries) {
        w.push_back(std::exp(e.log_likelihood / params.temperature - top));
        total += w.back();
    }
    std::size_t keep = 0;
    double mass = 0.0;
    while (keep < entries.size()) {
        mass += w[keep] / total;
        ++keep;
        if (mass >= params.top_p) break;
    }

    // Gumbel top-k: k draws without replacement proportional to w.
    Rng rng(derive_seed(seed, ctx.episode, ctx.step));
    std::vector<std::pair<double, std::size_t>> keys;
    for (std::size_t i = 0; i < keep; ++i) {
        double u = rng.uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        keys.push_back({std::log(w[i]) - std::log(-std::log(u)), i});
    }
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t j = 0; j < keys.size() && j < params.k; ++j) {
        const MockEntry& e = entries[keys[j].second];
        out.push_back({ActionText(e.text), e.log_likelihood, CandidateOrigin::sampled_valid});
    }
    return merge_candidates(std::move(out));
}

double MockPolicy::score_text(const PolicyContext& ctx, const ActionText& action) const {
    const std::string key = text::fold(action.str());
    double best = -INFINITY;
    for (const MockEntry& e : effective_entries(ctx))
        if (text::fold(e.text) == key) best = std::max(best, e.log_likelihood);
    return std::isfinite(best) ? best : cfg_.unknown_floor;
}

// ---- remote -----------------------------------------------------------------

RemotePolicy::RemotePolicy(std::string base_url, RemoteOptions opts) : base_url_(std::move(base_url)), opts_(opts) {}

namespace {

double reported_likelihood(const nlohmann::json& j, const std::string& where) {
    if (!j.contains("logprob") || !j["logprob"].is_number())
        throw TransportError(where + ": reply has no numeric logprob", 1);
    double lp = j["logprob"].get<double>();
    if (j.contains("tokens") && j["tokens"].is_number_integer() && j["tokens"].get<long>() > 0)
        lp /= double(j["tokens"].get<long>());
    if (!std::isfinite(lp)) throw TransportError(where + ": logprob is not finite", 1);
    return std::min(lp, 0.0);
}

} // namespace

std::vector<Candidate> RemotePolicy::sample_candidates(const PolicyContext& ctx, const SamplingParams& params,
                                                       std::uint64_t) const {
    const nlohmann::json body{{"context", render_context(ctx)},
                              {"k", params.k},
                              {"temperature", params.temperature},
                              {"top_p", params.top_p}};
    const nlohmann::json reply =
        http::post_json(base_url_, "/candidates", body, {opts_.timeout, opts_.retries});
    if (!reply.contains("candidates") || !reply["candidates"].is_array())
        throw TransportError("/candidates reply has no candidates array", 1);
    std::vector<Candidate> out;
    for (const auto& c : reply["candidates"]) {
        if (!c.contains("text") || !c["text"].is_string()) throw TransportError("/candidates: candidate without text", 1);
        const std::string t = c["text"].get<std::string>();
        if (text::trim(t).empty()) continue;
        out.push_back({ActionText(t), reported_likelihood(c, "/candidates"), CandidateOrigin::sampled_valid});
    }
    out = merge_candidates(std::move(out));
    if (out.size() > params.k) out.resize(params.k);
    return out;
}

double RemotePolicy::score_text(const PolicyContext& ctx, const ActionText& action) const {
    const nlohmann::json body{{"context", render_context(ctx)}, {"text", action.str()}};
    return reported_likelihood(http::post_json(base_url_, "/score", body, {opts_.timeout, opts_.retries}), "/score");
}

} // namespace agentcritic
