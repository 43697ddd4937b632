#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace agentcritic {

struct Task {
    std::string id;
    std::string description;

    bool operator==(const Task&) const = default;
};

struct EnvState {
    std::string observation;
    std::string inventory;
    std::string free_look;
    std::uint32_t step_index = 0;

    // Non-empty parts joined by newlines; this is what a single-encoder
    // critic and the policy context see.
    std::string text() const;

    bool operator==(const EnvState&) const = default;
};

// Action string; never blank.
class ActionText {
public:
    ActionText() = default;
    explicit ActionText(std::string text);

    const std::string& str() const noexcept { return text_; }
    bool empty() const noexcept { return text_.empty(); }

    auto operator<=>(const ActionText&) const = default;

private:
    std::string text_;
};

struct Step {
    EnvState state;
    ActionText action;
    double reward = 0.0;
    EnvState next_state;
    bool done = false;

    bool operator==(const Step&) const = default;
};

// Per-step rewards are stored in environment score units (0..100 scale).
struct Trajectory {
    Task task;
    std::vector<Step> steps;
    double final_score = 0.0;
    bool success = false;

    bool operator==(const Trajectory&) const = default;
};

// The trajectory file does not carry the state reached by the final action;
// loaded and generated trajectories both use this stand-in.
EnvState implied_final_state(const EnvState& last);

// Throws InvalidArgument listing every violated invariant.
void validate(const Trajectory& traj);

struct IlInstance {
    std::string context;
    ActionText target;
};

inline constexpr std::size_t kDefaultHistoryWindow = 10;

std::vector<IlInstance> decompose_to_il_instances(const Trajectory& traj,
                                                  std::size_t window = kDefaultHistoryWindow);

enum class RewardMode { delta, terminal };

RewardMode parse_reward_mode(std::string_view name);
std::string_view to_string(RewardMode mode);

// Rewards in the returned steps are rescaled to [0, 1].
std::vector<Step> decompose_to_steps(const Trajectory& traj, RewardMode mode = RewardMode::delta);

struct StepRef {
    std::size_t trajectory;
    std::size_t step;
};

// Append-only store. A const instance may be read from several threads;
// insert needs exclusive access.
class ExperienceMemory {
public:
    void insert(Trajectory traj);

    const std::vector<Trajectory>& trajectories() const noexcept { return trajectories_; }
    const std::vector<StepRef>& step_view() const noexcept { return step_view_; }
    const Step& step(const StepRef& ref) const;
    const Task& task_of(const StepRef& ref) const;

    std::size_t size() const noexcept { return trajectories_.size(); }
    std::size_t step_count() const noexcept { return step_view_.size(); }
    bool empty() const noexcept { return trajectories_.empty(); }

    bool operator==(const ExperienceMemory& other) const { return trajectories_ == other.trajectories_; }

private:
    std::vector<Trajectory> trajectories_;
    std::vector<StepRef> step_view_;
};

// Uniform with replacement; identical seed gives identical batch on every platform.
std::vector<Step> sample_batch(const ExperienceMemory& mem, std::size_t n, std::uint64_t seed);

struct ParseOptions {
    bool strict = true;
};

// One JSON record per line, canonical field order.
std::string serialize_trajectory(const Trajectory& traj);
Trajectory parse_trajectory(std::string_view line, std::size_t line_no, const ParseOptions& opts,
                            std::vector<std::string>* warnings = nullptr);

std::string serialize_memory(const ExperienceMemory& mem);
ExperienceMemory deserialize_memory(std::string_view data, const ParseOptions& opts = {},
                                    std::vector<std::string>* warnings = nullptr);

void save_memory(const ExperienceMemory& mem, const std::filesystem::path& path);
ExperienceMemory load_memory(const std::filesystem::path& path, const ParseOptions& opts = {},
                             std::vector<std::string>* warnings = nullptr);

} // namespace agentcritic
