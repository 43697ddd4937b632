#include "agentcritic/critic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "agentcritic/error.hpp"
#include "agentcritic/rng.hpp"
#include "json.hpp"

namespace agentcritic {

void IqlConfig::validate() const {
    if (!(tau > 0.5 && tau < 1.0)) throw ConfigError("tau must be in (0.5, 1)");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in [0, 1)");
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must be in [0, 1)");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
}

std::vector<TaskStep> transitions_from(const ExperienceMemory& mem, RewardMode mode) {
    std::vector<TaskStep> out;
    out.reserve(mem.step_count());
    for (const Trajectory& t : mem.trajectories()) {
        for (Step& s : decompose_to_steps(t, mode)) out.push_back({t.task, std::move(s)});
    }
    return out;
}

// ---- networks ---------------------------------------------------------------

Critic::Critic(CriticArch arch)
    : arch_(arch), q_net_({arch.dims, layout_fields(arch.layout, true)}),
      v_net_({arch.dims, layout_fields(arch.layout, false)}) {}

CriticParams Critic::init(std::uint64_t seed) const {
    CriticParams p;
    p.arch = arch_;
    p.seed = seed;
    p.q1 = q_net_.init(derive_seed(seed, 1));
    p.q1_target = p.q1;
    p.v = v_net_.init(derive_seed(seed, 3));
    if (arch_.twin_q) {
        p.q2 = q_net_.init(derive_seed(seed, 2));
        p.q2_target = p.q2;
    }
    return p;
}

void Critic::check(const CriticParams& params) const {
    if (!(params.arch == arch_)) throw InvalidArgument("critic parameters were built for another architecture");
    q_net_.check(params.q1);
    q_net_.check(params.q1_target);
    v_net_.check(params.v);
    if (arch_.twin_q != params.q2.has_value() || params.q2.has_value() != params.q2_target.has_value())
        throw InvalidArgument("twin-Q heads do not match the architecture");
    if (params.q2) {
        q_net_.check(*params.q2);
        q_net_.check(*params.q2_target);
    }
}

namespace {

std::string field_text(Field f, const Task& task, const EnvState& state, const ActionText* action) {
    switch (f) {
    case Field::task: return task.description;
    case Field::state: return state.text();
    case Field::observation: return state.observation;
    case Field::free_look: return state.free_look;
    case Field::inventory: return state.inventory;
    case Field::action: return action ? action->str() : std::string();
    }
    return {};
}

std::vector<TokenSeq> tokenize_all(const std::vector<std::string>& texts, std::size_t vocab) {
    std::vector<TokenSeq> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(tokenize(t, vocab));
    return out;
}

FieldInputs pointers(const std::vector<TokenSeq>& seqs) {
    FieldInputs in;
    for (const auto& s : seqs) in.push_back(&s);
    return in;
}

} // namespace

std::vector<std::string> Critic::q_texts(const Task& task, const EnvState& state, const ActionText& action) const {
    std::vector<std::string> out;
    for (Field f : q_net_.spec().fields) out.push_back(field_text(f, task, state, &action));
    return out;
}

std::vector<std::string> Critic::v_texts(const Task& task, const EnvState& state) const {
    std::vector<std::string> out;
    for (Field f : v_net_.spec().fields) out.push_back(field_text(f, task, state, nullptr));
    return out;
}

double q_forward(const Critic& critic, const ParamSet& q, const Task& task, const EnvState& state,
                 const ActionText& action) {
    const auto seqs = tokenize_all(critic.q_texts(task, state, action), critic.arch().dims.vocab_size);
    return critic.q_net().forward(q, pointers(seqs));
}

double q_forward(const Critic& critic, const CriticParams& params, const Task& task, const EnvState& state,
                 const ActionText& action) {
    return q_forward(critic, params.q1, task, state, action);
}

double v_forward(const Critic& critic, const CriticParams& params, const Task& task, const EnvState& state) {
    const auto seqs = tokenize_all(critic.v_texts(task, state), critic.arch().dims.vocab_size);
    return critic.v_net().forward(params.v, pointers(seqs));
}

double twin_q_forward(const Critic& critic, const CriticParams& params, const Task& task, const EnvState& state,
                      const ActionText& action) {
    if (!params.q2) throw ConfigError("twin-Q requested but the critic has a single Q head");
    return std::min(q_forward(critic, params.q1, task, state, action),
                    q_forward(critic, *params.q2, task, state, action));
}

ActionScorer::ActionScorer(const Critic& critic, const CriticParams& params) : critic_(critic), params_(params) {
    critic_.check(params_);
}

ActionScorer::ContextEncoding ActionScorer::encode_context(const Task& task, const EnvState& state) const {
    const FieldNetwork& net = critic_.q_net();
    const std::size_t vocab = critic_.arch().dims.vocab_size;
    ContextEncoding ctx;
    for (std::size_t f = 0; f + 1 < net.field_count(); ++f) {
        const TokenSeq toks = tokenize(field_text(net.spec().fields[f], task, state, nullptr), vocab);
        ctx.q1.push_back(net.encode(params_.q1, f, toks));
        if (params_.q2) ctx.q2.push_back(net.encode(*params_.q2, f, toks));
    }
    return ctx;
}

std::vector<double> ActionScorer::score(const ContextEncoding& ctx, std::span<const ActionText> actions) const {
    const FieldNetwork& net = critic_.q_net();
    const std::size_t action_field = net.field_count() - 1;
    std::vector<double> out;
    out.reserve(actions.size());
    std::vector<Eigen::VectorXd> enc1 = ctx.q1;
    std::vector<Eigen::VectorXd> enc2 = ctx.q2;
    enc1.emplace_back();
    if (params_.q2) enc2.emplace_back();
    for (const ActionText& a : actions) {
        const TokenSeq toks = tokenize(a.str(), critic_.arch().dims.vocab_size);
        enc1.back() = net.encode(params_.q1, action_field, toks);
        double q = net.head(params_.q1, enc1);
        if (params_.q2) {
            enc2.back() = net.encode(*params_.q2, action_field, toks);
            q = std::min(q, net.head(*params_.q2, enc2));
        }
        out.push_back(q);
    }
    return out;
}

std::vector<double> ActionScorer::score(const Task& task, const EnvState& state,
                                        std::span<const ActionText> actions) const {
    return score(encode_context(task, state), actions);
}

// ---- losses -----------------------------------------------------------------

double expectile_loss(double u, double tau) {
    const double w = std::abs(tau - (u < 0.0 ? 1.0 : 0.0));
    return w * u * u;
}

double loss_v_from_values(std::span<const double> q_target, std::span<const double> v, double tau) {
    if (q_target.empty() || q_target.size() != v.size()) throw InvalidArgument("loss_v: empty or mismatched batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) sum += expectile_loss(q_target[i] - v[i], tau);
    return sum / double(v.size());
}

double loss_q_from_values(std::span<const double> reward, std::span<const bool> done, std::span<const double> v_next,
                          std::span<const double> q, double gamma) {
    const std::size_t n = q.size();
    if (n == 0 || reward.size() != n || done.size() != n || v_next.size() != n)
        throw InvalidArgument("loss_q: empty or mismatched batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double target = reward[i] + (done[i] ? 0.0 : gamma * v_next[i]);
        const double e = target - q[i];
        sum += e * e;
    }
    return sum / double(n);
}

namespace {

// Token sequences interned by text so that repeated texts share one pointer
// and therefore one encoding per batch.
class TokenCache {
public:
    explicit TokenCache(std::size_t vocab) : vocab_(vocab) {}

    const TokenSeq* get(const std::string& text) {
        auto it = map_.find(text);
        if (it != map_.end()) return it->second.get();
        auto seq = std::make_unique<TokenSeq>(tokenize(text, vocab_));
        const TokenSeq* p = seq.get();
        map_.emplace(text, std::move(seq));
        return p;
    }

private:
    std::size_t vocab_;
    std::unordered_map<std::string, std::unique_ptr<TokenSeq>> map_;
};

struct Encoded {
    FieldInputs q_in;
    FieldInputs v_in;
    FieldInputs v_next_in;
    double reward;
    bool done;
};

Encoded encode(const Critic& critic, const TaskStep& ts, TokenCache& cache) {
    Encoded e;
    for (const auto& t : critic.q_texts(ts.task, ts.step.state, ts.step.action)) e.q_in.push_back(cache.get(t));
    for (const auto& t : critic.v_texts(ts.task, ts.step.state)) e.v_in.push_back(cache.get(t));
    for (const auto& t : critic.v_texts(ts.task, ts.step.next_state)) e.v_next_in.push_back(cache.get(t));
    e.reward = ts.step.reward;
    e.done = ts.step.done;
    return e;
}

std::vector<FieldInputs> gather(std::span<const Encoded> batch, FieldInputs Encoded::*member) {
    std::vector<FieldInputs> out;
    out.reserve(batch.size());
    for (const Encoded& e : batch) out.push_back(e.*member);
    return out;
}

void require_finite(std::span<const double> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw NumericError(std::string(what) + " is not finite at batch index " + std::to_string(i));
}

CriticGrads zero_grads(const CriticParams& p) {
    CriticGrads g{p.q1.zeros_like(), p.q1_target.zeros_like(), p.v.zeros_like(), std::nullopt, std::nullopt};
    if (p.q2) {
        g.q2 = p.q2->zeros_like();
        g.q2_target = p.q2_target->zeros_like();
    }
    return g;
}

std::vector<double> evaluate(const FieldNetwork& net, const ParamSet& params, const std::vector<FieldInputs>& in) {
    BatchPass pass(net, params, in);
    return {pass.outputs().begin(), pass.outputs().end()};
}

std::vector<double> target_q_values(const Critic& critic, const CriticParams& p, const std::vector<FieldInputs>& in) {
    std::vector<double> q = evaluate(critic.q_net(), p.q1_target, in);
    if (p.q2_target) {
        const std::vector<double> q2 = evaluate(critic.q_net(), *p.q2_target, in);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::min(q[i], q2[i]);
    }
    return q;
}

// with_grads=false skips backward and leaves grads empty; used by the loss-only entry points
LossAndGrads v_step(const Critic& critic, const CriticParams& p, std::span<const Encoded> batch, double tau,
                    bool with_grads = true) {
    if (batch.empty()) throw InvalidArgument("loss_v: empty batch");
    const auto q_in = gather(batch, &Encoded::q_in);
    const std::vector<double> q_hat = target_q_values(critic, p, q_in);
    require_finite(q_hat, "target Q");

    BatchPass v_pass(critic.v_net(), p.v, gather(batch, &Encoded::v_in));
    const auto v = v_pass.outputs();
    require_finite(v, "V");

    LossAndGrads out{loss_v_from_values(q_hat, v, tau), {}};
    if (!std::isfinite(out.loss)) throw NumericError("loss_v is not finite");
    if (!with_grads) return out;
    out.grads = zero_grads(p);
    const double n = double(batch.size());
    std::vector<double> dv(batch.size());
    for (std::size_t i = 0; i < dv.size(); ++i) {
        const double u = q_hat[i] - v[i];
        dv[i] = -2.0 * std::abs(tau - (u < 0.0 ? 1.0 : 0.0)) * u / n;
    }
    v_pass.backward(dv, out.grads.v);
    return out;
}

LossAndGrads q_step(const Critic& critic, const CriticParams& p, std::span<const Encoded> batch, double gamma,
                    bool with_grads = true) {
    if (batch.empty()) throw InvalidArgument("loss_q: empty batch");
    const std::vector<double> v_next = evaluate(critic.v_net(), p.v, gather(batch, &Encoded::v_next_in));
    require_finite(v_next, "V(s')");
    std::vector<double> target(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
        target[i] = batch[i].reward + (batch[i].done ? 0.0 : gamma * v_next[i]);

    const auto q_in = gather(batch, &Encoded::q_in);
    LossAndGrads out{0.0, {}};
    if (with_grads) out.grads = zero_grads(p);
    const double heads = p.q2 ? 2.0 : 1.0;
    const double n = double(batch.size());
    auto head_step = [&](const ParamSet& q_params, ParamSet* grads) {
        BatchPass pass(critic.q_net(), q_params, q_in);
        const auto q = pass.outputs();
        require_finite(q, "Q");
        double sum = 0.0;
        std::vector<double> dq(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double e = target[i] - q[i];
            sum += e * e;
            dq[i] = -2.0 * e / (n * heads);
        }
        if (grads) pass.backward(dq, *grads);
        return sum / n;
    };
    out.loss = head_step(p.q1, with_grads ? &out.grads.q1 : nullptr);
    if (p.q2) out.loss = (out.loss + head_step(*p.q2, with_grads ? &*out.grads.q2 : nullptr)) / 2.0;
    if (!std::isfinite(out.loss)) throw NumericError("loss_q is not finite");
    return out;
}

std::vector<Encoded> encode_all(const Critic& critic, std::span<const TaskStep> batch, TokenCache& cache) {
    std::vector<Encoded> out;
    out.reserve(batch.size());
    for (const TaskStep& ts : batch) out.push_back(encode(critic, ts, cache));
    return out;
}

} // namespace

LossAndGrads loss_v_with_grads(const Critic& critic, const CriticParams& params, std::span<const TaskStep> batch,
                               double tau) {
    critic.check(params);
    TokenCache cache(critic.arch().dims.vocab_size);
    return v_step(critic, params, encode_all(critic, batch, cache), tau);
}

LossAndGrads loss_q_with_grads(const Critic& critic, const CriticParams& params, std::span<const TaskStep> batch,
                               double gamma) {
    critic.check(params);
    TokenCache cache(critic.arch().dims.vocab_size);
    return q_step(critic, params, encode_all(critic, batch, cache), gamma);
}

double loss_v(const Critic& critic, const CriticParams& params, std::span<const TaskStep> batch, double tau) {
    critic.check(params);
    TokenCache cache(critic.arch().dims.vocab_size);
    return v_step(critic, params, encode_all(critic, batch, cache), tau, false).loss;
}

double loss_q(const Critic& critic, const CriticParams& params, std::span<const TaskStep> batch, double gamma) {
    critic.check(params);
    TokenCache cache(critic.arch().dims.vocab_size);
    return q_step(critic, params, encode_all(critic, batch, cache), gamma, false).loss;
}

void target_update(const ParamSet& online, ParamSet& target, double rho) {
    target.require_same_layout(online, "target_update");
    for (std::size_t i = 0; i < target.size(); ++i) {
        auto t = target.entry(i).second.vector();
        t = rho * t + (1.0 - rho) * online.entry(i).second.vector();
    }
}

// ---- training -----------------------------------------------------------------

TrainResult train_iql(const ExperienceMemory& mem, const IqlConfig& cfg, const EpochCallback& on_epoch) {
    if (mem.empty()) throw InvalidArgument("cannot train on an empty experience memory");
    const std::vector<TaskStep> transitions = transitions_from(mem, cfg.reward_mode);
    return train_iql(transitions, cfg, on_epoch);
}

TrainResult train_iql(std::span<const TaskStep> transitions, const IqlConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (transitions.empty()) throw InvalidArgument("cannot train on an empty transition set");
    const Critic critic({cfg.dims, cfg.layout, cfg.twin_q});
    TrainResult result{critic.init(cfg.seed), {}};
    CriticParams& p = result.params;

    TokenCache cache(cfg.dims.vocab_size);
    const std::vector<Encoded> data = encode_all(critic, transitions, cache);

    AdamState v_opt(p.v, cfg.adam);
    AdamState q1_opt(p.q1, cfg.adam);
    std::optional<AdamState> q2_opt;
    if (p.q2) q2_opt.emplace(*p.q2, cfg.adam);

    std::vector<std::size_t> order(data.size());
    std::vector<Encoded> batch;
    batch.reserve(cfg.batch_size);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(cfg.seed, 0xe90c, epoch));
        rng.shuffle(std::span<std::size_t>(order));

        double sum_v = 0.0, sum_q = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
            try {
                LossAndGrads lv = v_step(critic, p, batch, cfg.tau);
                adam_update(p.v, lv.grads.v, v_opt);

                LossAndGrads lq = q_step(critic, p, batch, cfg.gamma);
                adam_update(p.q1, lq.grads.q1, q1_opt);
                if (p.q2) adam_update(*p.q2, *lq.grads.q2, *q2_opt);

                target_update(p.q1, p.q1_target, cfg.rho);
                if (p.q2) target_update(*p.q2, *p.q2_target, cfg.rho);

                sum_v += lv.loss;
                sum_q += lq.loss;
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(n_batches) + ": " +
                                   e.what());
            }
            ++n_batches;
        }
        const auto t1 = std::chrono::steady_clock::now();
        EpochLog entry{epoch, sum_v / double(n_batches), sum_q / double(n_batches),
                       std::chrono::duration<double, std::milli>(t1 - t0).count()};
        result.log.push_back(entry);
        if (on_epoch) on_epoch(entry);
    }
    return result;
}

std::string training_log_line(const EpochLog& e) {
    nlohmann::ordered_json j{{"epoch", e.epoch},
                             {"mean_loss_v", e.mean_loss_v},
                             {"mean_loss_q", e.mean_loss_q},
                             {"wall_ms", std::round(e.wall_ms * 1000.0) / 1000.0}};
    return j.dump();
}

// ---- persistence --------------------------------------------------------------

namespace {

void add_prefixed(ParamSet& out, const std::string& prefix, const ParamSet& in) {
    for (const auto& [name, t] : in) out.add(prefix + "." + name, t);
}

ParamSet take_prefixed(const ParamSet& all, const std::string& prefix, const ParamSet& layout) {
    ParamSet out;
    for (const auto& [name, t] : layout) {
        const std::string full = prefix + "." + name;
        if (!all.contains(full)) throw IoError("checkpoint is missing parameter '" + full + "'");
        const Tensor& src = all.at(full);
        if (src.shape() != t.shape()) throw IoError("checkpoint parameter '" + full + "' has the wrong shape");
        out.add(name, src);
    }
    return out;
}

} // namespace

Checkpoint to_checkpoint(const CriticParams& params) {
    Checkpoint ck;
    ck.header.architecture_id = params.arch.twin_q ? "q_twin" : "q_single";
    ck.header.dims = params.arch.dims;
    ck.header.seed = params.seed;
    add_prefixed(ck.params, "q1", params.q1);
    add_prefixed(ck.params, "q1_target", params.q1_target);
    add_prefixed(ck.params, "v", params.v);
    if (params.q2) {
        add_prefixed(ck.params, "q2", *params.q2);
        add_prefixed(ck.params, "q2_target", *params.q2_target);
    }
    return ck;
}

CriticParams from_checkpoint(const Checkpoint& ck) {
    const std::string& id = ck.header.architecture_id;
    if (id != "q_single" && id != "q_twin")
        throw IoError("checkpoint architecture '" + id + "' is not a critic (expected q_single or q_twin)");
    CriticArch arch;
    arch.dims = ck.header.dims;
    arch.twin_q = id == "q_twin";
    arch.layout = ck.params.contains("v.gru.observation.w_ih") ? EncoderLayout::five_field
                                                                : EncoderLayout::three_field;
    const Critic critic(arch);
    const ParamSet q_layout = critic.q_net().empty_layout();
    const ParamSet v_layout = critic.v_net().empty_layout();

    CriticParams p;
    p.arch = arch;
    p.seed = ck.header.seed;
    p.q1 = take_prefixed(ck.params, "q1", q_layout);
    p.q1_target = take_prefixed(ck.params, "q1_target", q_layout);
    p.v = take_prefixed(ck.params, "v", v_layout);
    std::size_t expected = 2 * q_layout.size() + v_layout.size();
    if (arch.twin_q) {
        p.q2 = take_prefixed(ck.params, "q2", q_layout);
        p.q2_target = take_prefixed(ck.params, "q2_target", q_layout);
        expected += 2 * q_layout.size();
    }
    if (ck.params.size() != expected) throw IoError("checkpoint has parameters the architecture does not declare");
    return p;
}

void save_critic(const CriticParams& params, const std::filesystem::path& path) {
    save_checkpoint(to_checkpoint(params), path);
}

CriticParams load_critic(const std::filesystem::path& path) { return from_checkpoint(load_checkpoint(path)); }

// ---- tabular oracle -------------------------------------------------------------

double weighted_expectile(std::span<const double> values, std::span<const double> weights, double tau) {
    const std::size_t n = values.size();
    if (n == 0 || weights.size() != n) throw InvalidArgument("weighted_expectile: empty or mismatched input");
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("weighted_expectile: tau must be in (0, 1)");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    double hi_w = 0.0, hi_wx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        hi_w += weights[i];
        hi_wx += weights[i] * values[i];
    }
    double lo_w = 0.0, lo_wx = 0.0;
    // Split k: the k smallest values sit below v and carry weight (1 - tau).
    double best = values[idx[0]];
    double best_violation = INFINITY;
    for (std::size_t k = 0; k <= n; ++k) {
        const double v = (tau * hi_wx + (1.0 - tau) * lo_wx) / (tau * hi_w + (1.0 - tau) * lo_w);
        const double lower = k == 0 ? -INFINITY : values[idx[k - 1]];
        const double upper = k == n ? INFINITY : values[idx[k]];
        const double violation = std::max({0.0, lower - v, v - upper});
        if (violation == 0.0) return v;
        if (violation < best_violation) {
            best_violation = violation;
            best = v;
        }
        if (k < n) {
            const double w = weights[idx[k]], x = values[idx[k]];
            lo_w += w;
            lo_wx += w * x;
            hi_w -= w;
            hi_wx -= w * x;
        }
    }
    return best;
}

double TabularIql::q_at(const std::string& state, const std::string& action) const {
    auto it = q.find({state, action});
    if (it == q.end()) throw InvalidArgument("(" + state + ", " + action + ") is not supported by the dataset");
    return it->second;
}

TabularIql tabular_iql_oracle(std::span<const Step> dataset, double tau, double gamma, double tol,
                              std::size_t max_sweeps) {
    if (dataset.empty()) throw InvalidArgument("tabular oracle needs a non-empty dataset");
    struct Edge {
        std::size_t pair;
        double reward;
        bool done;
        std::string next;
    };
    std::map<std::pair<std::string, std::string>, std::size_t> pair_index;
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<Edge> edges;
    for (const Step& s : dataset) {
        auto key = std::make_pair(s.state.text(), s.action.str());
        auto [it, fresh] = pair_index.try_emplace(key, pairs.size());
        if (fresh) pairs.push_back(key);
        edges.push_back({it->second, s.reward, s.done, s.next_state.text()});
    }
    // Transitions leaving each state, as pair indices (one entry per transition).
    std::map<std::string, std::vector<std::size_t>> leaving;
    for (const Edge& e : edges) leaving[pairs[e.pair].first].push_back(e.pair);

    std::vector<double> q(pairs.size(), 0.0);
    std::map<std::string, double> v;
    for (const auto& [s, _] : leaving) v[s] = 0.0;
    std::vector<double> sum(pairs.size()), count(pairs.size());

    TabularIql out;
    for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(count.begin(), count.end(), 0.0);
        for (const Edge& e : edges) {
            double boot = 0.0;
            if (!e.done) {
                auto it = v.find(e.next);
                if (it != v.end()) boot = gamma * it->second;
            }
            sum[e.pair] += e.reward + boot;
            count[e.pair] += 1.0;
        }
        double delta = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double nq = sum[i] / count[i];
            delta = std::max(delta, std::abs(nq - q[i]));
            q[i] = nq;
        }
        for (auto& [s, value] : v) {
            const auto& ids = leaving[s];
            std::vector<double> vals, ws(ids.size(), 1.0);
            vals.reserve(ids.size());
            for (std::size_t id : ids) vals.push_back(q[id]);
            const double nv = weighted_expectile(vals, ws, tau);
            delta = std::max(delta, std::abs(nv - value));
            value = nv;
        }
        if (delta < tol) {
            out.sweeps = sweep;
            out.v = std::move(v);
            for (std::size_t i = 0; i < pairs.size(); ++i) out.q[pairs[i]] = q[i];
            return out;
        }
    }
    throw NumericError("tabular IQL oracle did not converge within " + std::to_string(max_sweeps) + " sweeps");
}

} // namespace agentcritic
