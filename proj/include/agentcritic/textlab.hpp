#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "agentcritic/environment.hpp"
#include "agentcritic/experience.hpp"
#include "agentcritic/policy.hpp"

namespace agentcritic::textlab {

// Score points per milestone; the three must add up to 100.
struct ScoreSchedule {
    double pickup = 25.0;
    double correct_room = 25.0;
    double deposit = 50.0;

    bool operator==(const ScoreSchedule&) const = default;
};

struct ObjectSpec {
    std::string name;
    std::uint32_t room = 0;
    bool operator==(const ObjectSpec&) const = default;
};

struct ReceptacleSpec {
    std::string name;
    std::uint32_t room = 0;
    bool operator==(const ReceptacleSpec&) const = default;
};

// Goal: move `object` into `receptacle`.
struct TaskSpec {
    std::string id;
    std::string object;
    std::string receptacle;
    bool operator==(const TaskSpec&) const = default;
};

// Rooms form a corridor 0 .. n_rooms-1 connected by "go left" / "go right".
struct EnvSpec {
    std::string name;
    std::uint32_t n_rooms = 1;
    std::vector<ObjectSpec> objects;
    std::vector<ReceptacleSpec> receptacles;
    std::vector<TaskSpec> tasks;
    ScoreSchedule score_schedule;
    std::size_t step_cap = 30;
    double gamma_hint = 0.9;

    bool operator==(const EnvSpec&) const = default;
};

void validate(const EnvSpec& spec);

EnvSpec env_spec_from_json(std::string_view text);
std::string env_spec_to_json(const EnvSpec& spec);
// Accepts a file path or the name of a built-in fixture.
EnvSpec load_env_spec(const std::string& path_or_fixture);

// lab3, lab5-sparse, lab7.
EnvSpec fixture(std::string_view name);
std::vector<std::string> fixture_names();

enum class Outcome : std::uint8_t { running, success, failed };

struct LabState {
    std::uint32_t room = 0;
    std::int32_t carried = -1; // object index or -1
    // Per object: room index (>= 0), kCarried, or kInReceptacleBase - receptacle index.
    std::vector<std::int32_t> where;
    bool pickup_awarded = false;
    bool room_awarded = false;
    Outcome outcome = Outcome::running;
    double score = 0.0; // points, 0..100

    static constexpr std::int32_t kCarried = -1;
    static constexpr std::int32_t kInReceptacleBase = -2;

    bool terminal() const noexcept { return outcome != Outcome::running; }
    std::string key() const;
    bool operator==(const LabState&) const = default;
};

struct LabTransition {
    LabState state;
    double points = 0.0; // score gained, in points
    double reward = 0.0; // points / 100
    bool done = false;
};

// A spec bound to one task. Pure: all methods are const and stateless.
class TextLab {
public:
    TextLab(EnvSpec spec, std::string_view task_id);

    const EnvSpec& spec() const noexcept { return spec_; }
    const Task& task() const noexcept { return task_; }

    LabState initial_state() const;
    EnvState render(const LabState& s, std::uint32_t step_index) const;
    // go left, go right, look, take <obj>..., put <obj> in <rec>... (only those applicable).
    std::vector<ActionText> valid_actions(const LabState& s) const;
    // Invalid actions are absorbed as no-ops with zero reward.
    LabTransition step(const LabState& s, const ActionText& action) const;

private:
    EnvSpec spec_;
    std::size_t task_index_ = 0;
    std::int32_t target_object_ = 0;
    std::int32_t target_receptacle_ = 0;
    Task task_;
};

std::pair<LabState, EnvState> reset(const EnvSpec& spec, std::string_view task_id, std::uint64_t seed);
LabTransition step_env(const EnvSpec& spec, std::string_view task_id, const LabState& state,
                       const ActionText& action);
std::vector<ActionText> valid_actions(const EnvSpec& spec, const LabState& state);

// Episode wrapper with a step cap.
class LabEnv final : public TextEnvironment {
public:
    LabEnv(EnvSpec spec, std::string_view task_id, std::uint64_t seed = 0);

    const Task& task() const override { return lab_.task(); }
    EnvState observe() const override { return lab_.render(state_, steps_); }
    std::vector<ActionText> valid_actions() const override { return lab_.valid_actions(state_); }
    EnvStepResult step(const ActionText& action) override;
    double score() const override { return state_.score; }
    bool success() const override { return state_.outcome == Outcome::success; }

    const LabState& state() const noexcept { return state_; }
    std::uint32_t steps_taken() const noexcept { return steps_; }
    const TextLab& lab() const noexcept { return lab_; }

private:
    TextLab lab_;
    LabState state_;
    std::uint32_t steps_ = 0;
};

struct ActionValue {
    ActionText action;
    double q;
};

// Bellman-optimal action values over every reachable state.
class QTable {
public:
    const std::vector<ActionValue>& at(const LabState& s) const;
    double q(const LabState& s, const ActionText& a) const;
    double v(const LabState& s) const; // 0 for terminal states
    // Highest value; ties go to the earlier valid action.
    ActionText best_action(const LabState& s) const;
    // Lowest value other than the best action; empty for single-action states.
    std::optional<ActionText> worst_action(const LabState& s) const;

    const std::vector<LabState>& states() const noexcept { return states_; }
    std::size_t state_count() const noexcept { return states_.size(); }
    std::size_t sweeps() const noexcept { return sweeps_; }

private:
    friend QTable value_iteration_q(const EnvSpec&, std::string_view, double, std::size_t);
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<LabState> states_;
    std::vector<std::vector<ActionValue>> values_;
    std::size_t sweeps_ = 0;
};

// Synchronous value iteration to sup-norm 1e-12.
QTable value_iteration_q(const EnvSpec& spec, std::string_view task_id, double gamma,
                         std::size_t max_states = 100000);

enum class BehaviorKind { optimal, epsilon_greedy, uniform_random };

struct BehaviorPolicy {
    BehaviorKind kind = BehaviorKind::optimal;
    double epsilon = 0.0; // epsilon_greedy only
};

BehaviorPolicy parse_behavior(std::string_view kind, double epsilon);

// n episodes, cycling through the spec's tasks. Step rewards are recorded in points.
std::vector<Trajectory> behavior_rollout(const EnvSpec& spec, const BehaviorPolicy& behavior, std::size_t n,
                                         std::uint64_t seed);

// Likelihood table for a mock policy that ranks valid actions by Q*, adds a
// paraphrased (invalid) form of the best action, and scripts the worst action
// as its error.
MockTable build_mock_table(const EnvSpec& spec, double gamma);

// Optimal number of steps from the initial state, following best_action.
std::size_t optimal_path_length(const EnvSpec& spec, std::string_view task_id, double gamma);

} // namespace agentcritic::textlab
