#include "agentcritic/agent.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "agentcritic/error.hpp"

namespace agentcritic {

void RescoreConfig::validate() const {
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("b must be in [0, 1]");
    if (!(d >= 0.0 && d <= 1.0)) throw ConfigError("d must be in [0, 1]");
    if (k < 1) throw ConfigError("K must be >= 1");
    if (static_alpha && !(*static_alpha >= 0.0 && *static_alpha <= 1.0))
        throw ConfigError("static alpha must be in [0, 1]");
}

RescoreConfig rescore_preset(std::string_view name) {
    RescoreConfig c;
    if (name == "dense") {
        c.d = 0.97;
        c.b = 0.6;
    } else if (name == "medium") {
        c.d = 0.95;
        c.b = 0.6;
    } else if (name == "short") {
        c.d = 0.9;
        c.b = 0.5;
    } else {
        throw ConfigError("unknown rescoring preset '" + std::string(name) + "' (dense, medium, short)");
    }
    return c;
}

std::vector<double> normalize_scores(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("normalize_scores: empty list");
    for (double v : values)
        if (!std::isfinite(v)) throw NumericError("normalize_scores: non-finite value");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    std::vector<double> out(values.size(), 0.5);
    if (*lo == *hi) return out;
    const double range = *hi - *lo;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
    return out;
}

double alpha_schedule(std::size_t t, double b, double d) {
    if (!(b >= 0.0 && b <= 1.0) || !(d >= 0.0 && d <= 1.0)) throw InvalidArgument("b and d must be in [0, 1]");
    const double decay = t == 0 ? 1.0 : std::pow(d, double(t));
    return std::max(b, decay);
}

double step_alpha(const RescoreConfig& cfg, std::size_t t) {
    return cfg.static_alpha ? *cfg.static_alpha : alpha_schedule(t, cfg.b, cfg.d);
}

Selection select_action(std::span<const double> p_raw, std::span<const double> q_raw, std::size_t t,
                        const RescoreConfig& cfg) {
    if (p_raw.size() != q_raw.size())
        throw InvalidArgument("select_action: " + std::to_string(p_raw.size()) + " policy scores but " +
                              std::to_string(q_raw.size()) + " critic scores");
    if (p_raw.empty()) throw InvalidArgument("select_action: no candidates");
    Selection sel;
    sel.alpha = step_alpha(cfg, t);
    const auto pn = normalize_scores(p_raw);
    const auto qn = normalize_scores(q_raw);
    for (std::size_t i = 0; i < p_raw.size(); ++i) {
        ScoredAction s;
        s.p_raw = p_raw[i];
        s.q_raw = q_raw[i];
        s.p_norm = pn[i];
        s.q_norm = qn[i];
        s.combined = sel.alpha * pn[i] + (1.0 - sel.alpha) * qn[i];
        sel.scored.push_back(std::move(s));
    }
    for (std::size_t i = 1; i < sel.scored.size(); ++i) {
        const ScoredAction& a = sel.scored[i];
        const ScoredAction& best = sel.scored[sel.index];
        if (a.combined > best.combined || (a.combined == best.combined && a.p_norm > best.p_norm)) sel.index = i;
    }
    return sel;
}

std::string_view to_string(EpisodeStatus s) {
    switch (s) {
    case EpisodeStatus::done: return "done";
    case EpisodeStatus::truncated: return "truncated";
    case EpisodeStatus::step_limit: return "step_limit";
    case EpisodeStatus::failed: return "failed";
    }
    return "unknown";
}

EpisodeRecord run_episode(TextEnvironment& env, const Policy& policy, const ActionScorer* critic,
                          const RescoreConfig& cfg, std::uint64_t seed, const EpisodeOptions& opts) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    EpisodeRecord rec;
    rec.task = env.task();
    rec.seed = seed;
    rec.status = EpisodeStatus::step_limit;
    SamplingParams sampling = opts.sampling;
    sampling.k = cfg.k;
    std::vector<std::pair<EnvState, ActionText>> history;

    try {
        for (std::size_t t = 0; t < opts.max_steps; ++t) {
            const EnvState state = env.observe();
            const std::vector<ActionText> valid = env.valid_actions();
            if (valid.empty()) {
                rec.status = EpisodeStatus::done;
                break;
            }
            EpisodeStep step;
            step.t = t;
            PolicyContext ctx = build_context(rec.task, history, state, opts.history_window);
            ctx.episode = seed;
            ctx.step = std::uint32_t(t);

            const auto cands = policy.sample_candidates(ctx, sampling, seed);
            GroundedSet grounded = opts.embedder ? map_to_valid(cands, valid, cfg.k, *opts.embedder)
                                                 : map_to_valid(cands, valid, cfg.k);
            step.warnings = std::move(grounded.warnings);
            if (grounded.actions.empty()) {
                // Nothing usable from the policy: fall back to every valid action.
                step.warnings.emplace_back("falling back to all valid actions");
                for (const ActionText& a : valid)
                    grounded.actions.push_back({a, CandidateOrigin::mapped, std::nullopt, std::nullopt});
            }

            std::vector<ActionText> actions;
            std::vector<double> p_raw;
            for (const GroundedAction& g : grounded.actions) {
                actions.push_back(g.action);
                const double ll = g.log_likelihood ? *g.log_likelihood : policy.score_text(ctx, g.action);
                p_raw.push_back(std::exp(ll));
            }
            const std::vector<double> q_raw =
                critic ? critic->score(rec.task, state, actions) : std::vector<double>(actions.size(), 0.5);

            Selection sel = select_action(p_raw, q_raw, t, cfg);
            for (std::size_t i = 0; i < sel.scored.size(); ++i) {
                sel.scored[i].action = actions[i];
                sel.scored[i].origin = grounded.actions[i].origin;
            }
            step.alpha = sel.alpha;
            step.candidates = std::move(sel.scored);
            step.chosen = actions[sel.index];

            const EnvStepResult r = env.step(step.chosen);
            step.reward = r.reward;
            history.emplace_back(state, step.chosen);
            rec.steps.push_back(std::move(step));
            if (r.terminal) {
                rec.status = EpisodeStatus::done;
                break;
            }
            if (r.truncated) {
                rec.status = EpisodeStatus::truncated;
                break;
            }
        }
    } catch (const Error& e) {
        rec.status = EpisodeStatus::failed;
        rec.error_kind = e.kind();
        rec.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    rec.final_score = env.score();
    rec.success = env.success();
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

std::vector<EpisodeRecord> run_episodes(const EnvFactory& make_env, const Policy& policy, const ActionScorer* critic,
                                        const RescoreConfig& cfg, std::uint64_t first_seed, std::size_t n,
                                        const EpisodeOptions& opts, std::size_t jobs) {
    std::vector<EpisodeRecord> out(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                auto env = make_env(i);
                out[i] = run_episode(*env, policy, critic, cfg, first_seed + i, opts);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                next = n;
                return;
            }
        }
    };
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

Metrics compute_metrics(std::span<const EpisodeRecord> records) {
    if (records.empty()) throw InvalidArgument("compute_metrics: no episodes");
    Metrics m;
    m.n_episodes = records.size();
    std::size_t successes = 0;
    double score = 0.0, steps = 0.0;
    for (const auto& r : records) {
        score += r.final_score;
        steps += double(r.step_count());
        successes += r.success ? 1 : 0;
    }
    const double n = double(records.size());
    m.average_score = score / n;
    m.success_rate = 100.0 * double(successes) / n;
    m.mean_steps = steps / n;
    return m;
}

std::string audit_lines(const EpisodeRecord& record) {
    std::string out;
    for (const EpisodeStep& s : record.steps) {
        nlohmann::ordered_json j;
        j["t"] = s.t;
        j["alpha"] = s.alpha;
        j["candidates"] = nlohmann::ordered_json::array();
        for (const ScoredAction& c : s.candidates) {
            j["candidates"].push_back({{"text", c.action.str()},
                                       {"origin", std::string(to_string(c.origin))},
                                       {"p_raw", c.p_raw},
                                       {"p_norm", c.p_norm},
                                       {"q_raw", c.q_raw},
                                       {"q_norm", c.q_norm},
                                       {"combined", c.combined}});
        }
        j["chosen"] = s.chosen.str();
        j["reward"] = s.reward;
        out += j.dump() + "\n";
    }
    return out;
}

std::string episode_summary_json(const EpisodeRecord& record) {
    nlohmann::ordered_json j;
    j["task_id"] = record.task.id;
    j["seed"] = record.seed;
    j["steps"] = record.step_count();
    j["final_score"] = record.final_score;
    j["success"] = record.success;
    j["status"] = std::string(to_string(record.status));
    if (!record.error.empty()) j["error"] = record.error;
    nlohmann::ordered_json actions = nlohmann::ordered_json::array();
    for (const auto& s : record.steps) actions.push_back(s.chosen.str());
    j["actions"] = actions;
    return j.dump();
}

} // namespace agentcritic
