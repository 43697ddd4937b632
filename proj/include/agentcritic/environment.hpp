#pragma once

#include <vector>

#include "agentcritic/experience.hpp"

namespace agentcritic {

struct EnvStepResult {
    double reward = 0.0; // normalized to [0, 1] of the task's total score
    bool terminal = false;
    bool truncated = false; // step cap reached without a terminal outcome
};

// Text environment as seen by the agent loop.
class TextEnvironment {
public:
    virtual ~TextEnvironment() = default;

    virtual const Task& task() const = 0;
    virtual EnvState observe() const = 0;
    virtual std::vector<ActionText> valid_actions() const = 0;
    virtual EnvStepResult step(const ActionText& action) = 0;
    virtual double score() const = 0; // 0..100
    virtual bool success() const = 0;
};

} // namespace agentcritic
