#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "agentcritic/checkpoint.hpp"
#include "agentcritic/experience.hpp"
#include "agentcritic/neuralnet.hpp"

namespace agentcritic {

struct CriticArch {
    NetDims dims;
    EncoderLayout layout = EncoderLayout::three_field;
    bool twin_q = false;

    bool operator==(const CriticArch&) const = default;
};

// Online Q, its target copy and V; optionally a second Q pair (clipped double Q).
struct CriticParams {
    CriticArch arch;
    std::uint64_t seed = 0;
    ParamSet q1;
    ParamSet q1_target;
    ParamSet v;
    std::optional<ParamSet> q2;
    std::optional<ParamSet> q2_target;

    bool operator==(const CriticParams&) const = default;
};

struct IqlConfig {
    double tau = 0.9;
    double gamma = 0.9;
    std::size_t epochs = 20;
    std::size_t batch_size = 128;
    // target <- rho * target + (1 - rho) * online, after every batch.
    double rho = 0.995;
    bool twin_q = false;
    std::uint64_t seed = 0;
    NetDims dims;
    EncoderLayout layout = EncoderLayout::three_field;
    RewardMode reward_mode = RewardMode::delta;
    AdamConfig adam;

    void validate() const;
};

// Transition plus the task it belongs to. Rewards are already on the [0, 1] scale.
struct TaskStep {
    Task task;
    Step step;
};

std::vector<TaskStep> transitions_from(const ExperienceMemory& mem, RewardMode mode);

// Q and V networks for one architecture.
class Critic {
public:
    explicit Critic(CriticArch arch);

    const CriticArch& arch() const noexcept { return arch_; }
    const FieldNetwork& q_net() const noexcept { return q_net_; }
    const FieldNetwork& v_net() const noexcept { return v_net_; }

    CriticParams init(std::uint64_t seed) const;
    void check(const CriticParams& params) const;

    // Text of each network input field for a transition, in network field order.
    std::vector<std::string> q_texts(const Task& task, const EnvState& state, const ActionText& action) const;
    std::vector<std::string> v_texts(const Task& task, const EnvState& state) const;

private:
    CriticArch arch_;
    FieldNetwork q_net_;
    FieldNetwork v_net_;
};

double q_forward(const Critic& critic, const ParamSet& q, const Task& task, const EnvState& state,
                 const ActionText& action);
double q_forward(const Critic& critic, const CriticParams& params, const Task& task, const EnvState& state,
                 const ActionText& action);
double v_forward(const Critic& critic, const CriticParams& params, const Task& task, const EnvState& state);
// min(Q1, Q2); ConfigError when the second head is absent.
double twin_q_forward(const Critic& critic, const CriticParams& params, const Task& task, const EnvState& state,
                      const ActionText& action);

// Scores many actions in one state; task and state are encoded once and reused.
// Uses min(Q1, Q2) when the critic is twin.
class ActionScorer {
public:
    ActionScorer(const Critic& critic, const CriticParams& params);

    struct ContextEncoding {
        std::vector<Eigen::VectorXd> q1;
        std::vector<Eigen::VectorXd> q2;
    };

    ContextEncoding encode_context(const Task& task, const EnvState& state) const;
    std::vector<double> score(const ContextEncoding& ctx, std::span<const ActionText> actions) const;
    std::vector<double> score(const Task& task, const EnvState& state, std::span<const ActionText> actions) const;

private:
    const Critic& critic_;
    const CriticParams& params_;
};

// |tau - 1(u < 0)| * u^2
double expectile_loss(double u, double tau);

// Closed forms over precomputed network outputs.
double loss_v_from_values(std::span<const double> q_target, std::span<const double> v, double tau);
double loss_q_from_values(std::span<const double> reward, std::span<const bool> done,
                          std::span<const double> v_next, std::span<const double> q, double gamma);

// Value-only batch losses (means over the batch).
double loss_v(const Critic& critic, const CriticParams& params, std::span<const TaskStep> batch, double tau);
double loss_q(const Critic& critic, const CriticParams& params, std::span<const TaskStep> batch, double gamma);

// Gradients for every parameter group; groups a loss treats as constants come back as zeros.
struct CriticGrads {
    ParamSet q1;
    ParamSet q1_target;
    ParamSet v;
    std::optional<ParamSet> q2;
    std::optional<ParamSet> q2_target;
};

struct LossAndGrads {
    double loss = 0.0;
    CriticGrads grads;
};

LossAndGrads loss_v_with_grads(const Critic& critic, const CriticParams& params, std::span<const TaskStep> batch,
                               double tau);
LossAndGrads loss_q_with_grads(const Critic& critic, const CriticParams& params, std::span<const TaskStep> batch,
                               double gamma);

// theta_hat <- rho * theta_hat + (1 - rho) * theta
void target_update(const ParamSet& online, ParamSet& target, double rho);

struct EpochLog {
    std::size_t epoch = 0;
    double mean_loss_v = 0.0;
    double mean_loss_q = 0.0;
    double wall_ms = 0.0;
};

struct TrainResult {
    CriticParams params;
    std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train_iql(const ExperienceMemory& mem, const IqlConfig& cfg, const EpochCallback& on_epoch = {});
TrainResult train_iql(std::span<const TaskStep> transitions, const IqlConfig& cfg,
                      const EpochCallback& on_epoch = {});

std::string training_log_line(const EpochLog& e);

// ---- persistence --------------------------------------------------------------

Checkpoint to_checkpoint(const CriticParams& params);
CriticParams from_checkpoint(const Checkpoint& ckpt);
void save_critic(const CriticParams& params, const std::filesystem::path& path);
CriticParams load_critic(const std::filesystem::path& path);

// ---- tabular oracle ---------------------------------------------------------

// argmin_v sum_i w_i |tau - 1(x_i < v)| (x_i - v)^2, solved exactly over the
// sorted breakpoints.
double weighted_expectile(std::span<const double> values, std::span<const double> weights, double tau);

struct TabularIql {
    // Keyed by EnvState::text() and action text.
    std::map<std::string, double> v;
    std::map<std::pair<std::string, std::string>, double> q;
    std::size_t sweeps = 0;

    double q_at(const std::string& state, const std::string& action) const;
};

// Fixed point of the IQL updates on an enumerable dataset:
//   V(s)   <- expectile_tau of Q(s, a_i) over transitions leaving s
//   Q(s,a) <- mean over transitions (s, a) of r + gamma * (1 - done) * V(s')
// States never seen as a source have V = 0.
TabularIql tabular_iql_oracle(std::span<const Step> dataset, double tau, double gamma, double tol = 1e-10,
                              std::size_t max_sweeps = 100000);

} // namespace agentcritic
